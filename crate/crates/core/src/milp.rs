//! Exact MILP solving over a constraint subset.
//!
//! [`solve_milp`] is a plain best-bound branch-and-bound on the LP
//! relaxation: no cuts, no heuristics, no presolve. Children inherit the
//! parent's optimal tableau and are reoptimized with the dual simplex; when
//! the stored-tableau budget is exhausted a child is re-solved from scratch.
//! [`solve_bruteforce`] enumerates every integer assignment and is kept as
//! an independent oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::lp::{solve_lp_with, DualEnd, LpOptions, LpProblem, Tableau};
use crate::model::{ConstraintSet, MilpInstance, SolveOutcome, SolveStatus, INT_TOL};

pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;
pub const BRUTEFORCE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct MilpOptions {
    pub node_limit: usize,
    /// Absolute optimality gap.
    pub abs_gap: f64,
    /// Relative slack added to the gap to absorb floating-point noise on
    /// large objectives.
    pub rel_gap: f64,
    /// Bytes of parent tableaux kept alive for warm child solves.
    pub tableau_budget: usize,
    /// Re-solve a child from scratch once its tableau has seen this many pivots.
    pub refresh_pivots: usize,
    pub lp: LpOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            node_limit: DEFAULT_NODE_LIMIT,
            abs_gap: 1e-9,
            rel_gap: 1e-12,
            tableau_budget: 256 << 20,
            refresh_pivots: 5_000,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MilpResult {
    pub outcome: SolveOutcome,
    /// LP relaxations solved, root included.
    pub nodes: usize,
}

pub fn solve_milp(instance: &MilpInstance, set: &ConstraintSet) -> Result<SolveOutcome> {
    solve_milp_with(instance, set, &MilpOptions::default()).map(|r| r.outcome)
}

pub fn solve_milp_with(
    instance: &MilpInstance,
    set: &ConstraintSet,
    opts: &MilpOptions,
) -> Result<MilpResult> {
    check_set(instance, set)?;
    let problem = LpProblem::from_instance(instance, set);
    let ints: Vec<usize> = (instance.num_continuous..instance.num_vars()).collect();
    branch_and_bound(problem, &ints, opts)
}

fn check_set(instance: &MilpInstance, set: &ConstraintSet) -> Result<()> {
    let n = instance.num_constraints();
    if let Some(&j) = set.ids().iter().find(|&&j| j >= n) {
        return Err(Error::InvalidSet {
            instance: instance.name.clone(),
            reason: format!("constraint id {j} out of range (|J| = {n})"),
        });
    }
    Ok(())
}

struct Node {
    bound: f64,
    seq: u64,
    /// `(lo, hi)` of each integer variable at this node.
    int_bounds: Vec<(f64, f64)>,
    solution: Vec<f64>,
    tab: Option<Tableau>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound (then oldest node) must
    // compare greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    base: &'a LpProblem,
    ints: &'a [usize],
    opts: &'a MilpOptions,
    incumbent: Option<(Vec<f64>, f64)>,
    heap: BinaryHeap<Node>,
    stored: usize,
    seq: u64,
    nodes: usize,
}

impl Search<'_> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((_, obj)) => obj - self.opts.abs_gap - self.opts.rel_gap * obj.abs(),
            None => f64::INFINITY,
        }
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<usize> = None;
        let mut best_frac = INT_TOL;
        for &v in self.ints {
            let f = x[v] - x[v].floor();
            let frac = f.min(1.0 - f);
            if frac > best_frac {
                best_frac = frac;
                best = Some(v);
            }
        }
        best
    }

    /// Re-solves the continuous part with integers fixed to their rounded
    /// values, so the reported point and objective carry no branching drift.
    fn polish(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut p = self.base.clone();
        for &v in self.ints {
            let r = x[v].round();
            p.lower[v] = r;
            p.upper[v] = r;
        }
        let sol = solve_lp_with(&p, self.opts.lp)?;
        if let (Some(z), Some(obj)) = (sol.outcome.solution, sol.outcome.objective) {
            return Ok((z, obj));
        }
        let mut z = x.to_vec();
        for &v in self.ints {
            z[v] = z[v].round();
        }
        let obj = z.iter().zip(&self.base.objective).map(|(a, c)| a * c).sum();
        Ok((z, obj))
    }

    /// Records an LP-feasible node: integral points update the incumbent,
    /// the rest are queued.
    fn admit(
        &mut self,
        bound: f64,
        int_bounds: Vec<(f64, f64)>,
        solution: Vec<f64>,
        tab: Option<Tableau>,
    ) -> Result<()> {
        if bound >= self.cutoff() {
            return Ok(());
        }
        if self.most_fractional(&solution).is_none() {
            let (z, obj) = self.polish(&solution)?;
            if obj < self.cutoff() {
                self.incumbent = Some((z, obj));
            }
            return Ok(());
        }
        let tab = tab.filter(|t| {
            let fits = self.stored + t.footprint() <= self.opts.tableau_budget;
            fits && t.pivots < self.opts.refresh_pivots
        });
        if let Some(t) = &tab {
            self.stored += t.footprint();
        }
        self.seq += 1;
        self.heap.push(Node {
            bound,
            seq: self.seq,
            int_bounds,
            solution,
            tab,
        });
        Ok(())
    }

    fn count_node(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.opts.node_limit {
            return Err(Error::NodeLimit(self.opts.node_limit));
        }
        Ok(())
    }

    fn solve_cold(&mut self, int_bounds: Vec<(f64, f64)>) -> Result<()> {
        let mut p = self.base.clone();
        for (&v, &(lo, hi)) in self.ints.iter().zip(&int_bounds) {
            p.lower[v] = lo;
            p.upper[v] = hi;
        }
        let (tab, out) = Tableau::solve(&p, self.opts.lp)?;
        match out.status {
            SolveStatus::Infeasible => Ok(()),
            SolveStatus::Unbounded => Err(Error::Parse(
                "LP relaxation became unbounded below a bounded root".into(),
            )),
            SolveStatus::Optimal => {
                let obj = out.objective.expect("optimal objective");
                let x = out.solution.expect("optimal solution");
                self.admit(obj, int_bounds, x, tab)
            }
        }
    }

    fn solve_warm(
        &mut self,
        mut tab: Tableau,
        var: usize,
        int_bounds: Vec<(f64, f64)>,
    ) -> Result<()> {
        let k = self
            .ints
            .iter()
            .position(|&v| v == var)
            .expect("integer variable");
        let (lo, hi) = int_bounds[k];
        tab.tighten(var, lo, hi);
        match tab.reoptimize() {
            Ok(DualEnd::Infeasible) => Ok(()),
            Ok(DualEnd::Feasible) => {
                let x = tab.solution();
                let obj = tab.objective_value();
                self.admit(obj, int_bounds, x, Some(tab))
            }
            // Numerical trouble in the warm path: fall back to a clean solve.
            Err(_) => self.solve_cold(int_bounds),
        }
    }

    fn run(&mut self) -> Result<()> {
        while let Some(node) = self.heap.pop() {
            if let Some(t) = &node.tab {
                self.stored -= t.footprint();
            }
            if node.bound >= self.cutoff() {
                break;
            }
            let var = self
                .most_fractional(&node.solution)
                .expect("queued nodes are fractional");
            let k = self
                .ints
                .iter()
                .position(|&v| v == var)
                .expect("integer variable");
            let value = node.solution[var];
            let (lo, hi) = node.int_bounds[k];
            let mut down = node.int_bounds.clone();
            down[k] = (lo, value.floor());
            let mut up = node.int_bounds;
            up[k] = (value.ceil(), hi);

            self.count_node()?;
            match &node.tab {
                Some(t) => self.solve_warm(t.clone(), var, down)?,
                None => self.solve_cold(down)?,
            }
            self.count_node()?;
            match node.tab {
                Some(t) => self.solve_warm(t, var, up)?,
                None => self.solve_cold(up)?,
            }
        }
        Ok(())
    }
}

fn branch_and_bound(
    mut problem: LpProblem,
    ints: &[usize],
    opts: &MilpOptions,
) -> Result<MilpResult> {
    for &v in ints {
        problem.lower[v] = (problem.lower[v] - INT_TOL).ceil();
        problem.upper[v] = (problem.upper[v] + INT_TOL).floor();
        if problem.lower[v] > problem.upper[v] {
            return Ok(MilpResult {
                outcome: SolveOutcome::infeasible(None),
                nodes: 0,
            });
        }
    }
    let (tab, root) = Tableau::solve(&problem, opts.lp)?;
    match root.status {
        SolveStatus::Infeasible => {
            return Ok(MilpResult {
                outcome: root,
                nodes: 1,
            })
        }
        SolveStatus::Unbounded => {
            // With every integer range finite, the ray lives in continuous
            // space: the MILP is unbounded iff it has any feasible point.
            let finite = ints
                .iter()
                .all(|&v| problem.lower[v].is_finite() && problem.upper[v].is_finite());
            if finite {
                let mut feas = problem.clone();
                feas.objective.iter_mut().for_each(|c| *c = 0.0);
                let check = branch_and_bound(feas, ints, opts)?;
                if check.outcome.status == SolveStatus::Infeasible {
                    return Ok(MilpResult {
                        outcome: check.outcome,
                        nodes: check.nodes + 1,
                    });
                }
            }
            return Ok(MilpResult {
                outcome: root,
                nodes: 1,
            });
        }
        SolveStatus::Optimal => {}
    }
    let mut search = Search {
        base: &problem,
        ints,
        opts,
        incumbent: None,
        heap: BinaryHeap::new(),
        stored: 0,
        seq: 0,
        nodes: 1,
    };
    let int_bounds = ints
        .iter()
        .map(|&v| (problem.lower[v], problem.upper[v]))
        .collect();
    search.admit(
        root.objective.expect("optimal objective"),
        int_bounds,
        root.solution.expect("optimal solution"),
        tab,
    )?;
    search.run()?;
    let outcome = match search.incumbent {
        Some((z, obj)) => SolveOutcome::optimal(z, obj),
        None => SolveOutcome::infeasible(None),
    };
    Ok(MilpResult {
        outcome,
        nodes: search.nodes,
    })
}

/// Exhaustive oracle: solves the continuous LP for every integer assignment
/// in lexicographic order and keeps the best.
///
/// Requires a finite range for every integer variable and at most
/// [`BRUTEFORCE_LIMIT`] assignments.
pub fn solve_bruteforce(instance: &MilpInstance, set: &ConstraintSet) -> Result<SolveOutcome> {
    check_set(instance, set)?;
    let base = LpProblem::from_instance(instance, set);
    let ints: Vec<usize> = (instance.num_continuous..instance.num_vars()).collect();
    let mut ranges = Vec::with_capacity(ints.len());
    let mut points = 1.0f64;
    for &v in &ints {
        let lo = (base.lower[v] - INT_TOL).ceil();
        let hi = (base.upper[v] + INT_TOL).floor();
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::UnboundedIntegerRange(v));
        }
        if lo > hi {
            return Ok(SolveOutcome::infeasible(None));
        }
        points *= hi - lo + 1.0;
        ranges.push((lo, hi));
    }
    if points > BRUTEFORCE_LIMIT as f64 {
        return Err(Error::GridTooLarge {
            points,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    let mut assign: Vec<f64> = ranges.iter().map(|r| r.0).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    loop {
        let mut p = base.clone();
        for (&v, &a) in ints.iter().zip(&assign) {
            p.lower[v] = a;
            p.upper[v] = a;
        }
        let out = solve_lp_with(&p, LpOptions::default())?.outcome;
        match out.status {
            SolveStatus::Unbounded => return Ok(out),
            SolveStatus::Optimal => {
                let obj = out.objective.expect("optimal objective");
                if best.as_ref().is_none_or(|(_, b)| obj < b - 1e-9) {
                    best = Some((out.solution.expect("optimal solution"), obj));
                }
            }
            SolveStatus::Infeasible => {}
        }
        // odometer step
        let mut k = 0;
        loop {
            if k == assign.len() {
                return Ok(match best {
                    Some((z, obj)) => SolveOutcome::optimal(z, obj),
                    None => SolveOutcome::infeasible(None),
                });
            }
            if assign[k] < ranges[k].1 {
                assign[k] += 1.0;
                break;
            }
            assign[k] = ranges[k].0;
            k += 1;
        }
    }
}

//! Dense-tableau simplex for `min c^T z` subject to canonical rows
//! `A z <= b` and per-variable bounds `lo <= z <= hi` (either side may be
//! infinite).
//!
//! Each row gets a slack `s_i >= 0`. Phase one adds an artificial column for
//! every row whose slack starts negative and minimizes their sum. Nonbasic
//! variables sit at a finite bound, or at zero when free. When phase two
//! finds an improving direction with no blocking bound, the direction is
//! returned as an unbounded ray.
//!
//! The same tableau supports a bounded dual simplex, which branch-and-bound
//! uses to reoptimize a child after a bound change without starting over.

use crate::error::{Error, Result};
use crate::model::{Constraint, ConstraintSet, MilpInstance, SolveOutcome};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const PHASE_ONE_TOL: f64 = 1e-8;
const TIE_TOL: f64 = 1e-12;
/// Consecutive degenerate pivots tolerated before pricing falls back to Bland.
const DEGENERATE_STREAK: usize = 32;

/// Entering/leaving variable selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Lowest eligible index everywhere. Never cycles.
    Bland,
    /// Largest reduced cost, switching to Bland after a run of degenerate
    /// pivots and back once progress resumes.
    #[default]
    DantzigBland,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LpOptions {
    pub rule: PivotRule,
}

/// An LP over an active row set.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
    /// Constraint ids of `rows` in the originating instance, if any.
    pub row_ids: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(
        objective: Vec<f64>,
        rows: Vec<Constraint>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let n = objective.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: lower.len().min(upper.len()),
            });
        }
        if rows.iter().any(|r| r.coeffs.iter().any(|&(i, _)| i >= n)) {
            return Err(Error::Parse(
                "row references a variable out of range".into(),
            ));
        }
        let row_ids = (0..rows.len()).collect();
        Ok(Self {
            objective,
            rows,
            row_ids,
            lower,
            upper,
        })
    }

    /// The continuous relaxation of `instance` restricted to `set`.
    pub fn from_instance(instance: &MilpInstance, set: &ConstraintSet) -> Self {
        let rows = set
            .ids()
            .iter()
            .map(|&j| instance.constraints[j].clone())
            .collect();
        Self {
            objective: instance.objective.clone(),
            rows,
            row_ids: set.ids().to_vec(),
            lower: instance.var_bounds.iter().map(|b| b.lower()).collect(),
            upper: instance.var_bounds.iter().map(|b| b.upper()).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Temporarily fixes `var` to `value`; the value must lie within the
    /// variable's current bounds.
    pub fn fix(&mut self, var: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite("fixing"));
        }
        if value < self.lower[var] || value > self.upper[var] {
            return Err(Error::Parse(format!(
                "fixing variable {var} to {value} lies outside [{}, {}]",
                self.lower[var], self.upper[var]
            )));
        }
        self.lower[var] = value;
        self.upper[var] = value;
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective"));
        }
        if self.lower.iter().any(|v| v.is_nan() || *v == f64::INFINITY)
            || self
                .upper
                .iter()
                .any(|v| v.is_nan() || *v == f64::NEG_INFINITY)
        {
            return Err(Error::NonFinite("bounds"));
        }
        Ok(())
    }
}

/// Full LP result including dual information when optimal.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub outcome: SolveOutcome,
    /// Row multipliers `y` (one per row, `<= 0` at a minimum).
    pub duals: Option<Vec<f64>>,
    /// Reduced costs `c - A^T y` of the structural variables.
    pub reduced_costs: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Solves `problem` from scratch.
pub fn solve_lp(problem: &LpProblem) -> Result<SolveOutcome> {
    solve_lp_with(problem, LpOptions::default()).map(|s| s.outcome)
}

pub fn solve_lp_with(problem: &LpProblem, opts: LpOptions) -> Result<LpSolution> {
    let (tab, outcome) = Tableau::solve(problem, opts)?;
    let (duals, reduced_costs) = match &tab {
        Some(t) => (Some(t.duals()), Some(t.d[..t.n].to_vec())),
        None => (None, None),
    };
    let iterations = tab.as_ref().map_or(0, |t| t.pivots);
    Ok(LpSolution {
        outcome,
        duals,
        reduced_costs,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Free,
}

enum PrimalEnd {
    Optimal,
    Unbounded { entering: usize, dir: f64 },
}

pub(crate) enum DualEnd {
    Feasible,
    Infeasible,
}

/// Simplex tableau `B^-1 [A | I | Art]` with explicit basic values.
#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    n: usize,
    ncols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    /// Row of origin for each artificial column.
    art_rows: Vec<usize>,
    rule: PivotRule,
    pub(crate) pivots: usize,
    iter_cap: usize,
}

impl Tableau {
    /// Two-phase solve. The tableau is returned only when optimal.
    pub(crate) fn solve(p: &LpProblem, opts: LpOptions) -> Result<(Option<Tableau>, SolveOutcome)> {
        p.check_finite()?;
        let n = p.num_vars();
        if (0..n).any(|j| p.lower[j] > p.upper[j]) {
            return Ok((None, SolveOutcome::infeasible(None)));
        }
        let mut tab = Self::build(p, opts.rule);
        if !tab.art_rows.is_empty() {
            tab.cost = vec![0.0; tab.ncols];
            for c in &mut tab.cost[n + tab.m..] {
                *c = 1.0;
            }
            tab.recompute_reduced_costs();
            if let PrimalEnd::Unbounded { .. } = tab.primal()? {
                unreachable!("phase one objective is bounded below by zero");
            }
            let infeas: f64 = (0..tab.m)
                .filter(|&r| tab.basis[r] >= n + tab.m)
                .map(|r| tab.beta[r].max(0.0))
                .sum();
            if infeas > PHASE_ONE_TOL {
                let worst = (0..tab.m)
                    .filter(|&r| tab.basis[r] >= n + tab.m)
                    .max_by(|&a, &b| tab.beta[a].total_cmp(&tab.beta[b]).then(b.cmp(&a)))
                    .map(|r| tab.art_rows[tab.basis[r] - n - tab.m]);
                return Ok((None, SolveOutcome::infeasible(worst)));
            }
            tab.drop_artificials();
        }
        tab.cost = vec![0.0; tab.ncols];
        tab.cost[..n].copy_from_slice(&p.objective);
        tab.recompute_reduced_costs();
        match tab.primal()? {
            PrimalEnd::Optimal => {
                let out = tab.outcome();
                Ok((Some(tab), out))
            }
            PrimalEnd::Unbounded { entering, dir } => {
                let ray = tab.ray(entering, dir);
                Ok((None, SolveOutcome::unbounded(ray)))
            }
        }
    }

    fn build(p: &LpProblem, rule: PivotRule) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        let mut state = Vec::with_capacity(n + m);
        let mut value = vec![0.0; n];
        for (v, (&lo, &hi)) in value.iter_mut().zip(p.lower.iter().zip(&p.upper)) {
            if lo.is_finite() {
                state.push(VarState::Lower);
                *v = lo;
            } else if hi.is_finite() {
                state.push(VarState::Upper);
                *v = hi;
            } else {
                state.push(VarState::Free);
            }
        }
        let slack: Vec<f64> = p.rows.iter().map(|r| r.rhs - r.activity(&value)).collect();
        let art_rows: Vec<usize> = (0..m).filter(|&i| slack[i] < 0.0).collect();
        let nart = art_rows.len();
        let ncols = n + m + nart;

        let mut t = vec![0.0; m * ncols];
        let mut beta = vec![0.0; m];
        let mut basis = vec![0; m];
        state.extend(std::iter::repeat_n(VarState::Basic, m + nart));
        let mut art_of_row = vec![usize::MAX; m];
        for (k, &i) in art_rows.iter().enumerate() {
            art_of_row[i] = k;
        }
        for (i, row) in p.rows.iter().enumerate() {
            let base = i * ncols;
            for &(j, v) in &row.coeffs {
                t[base + j] = v;
            }
            t[base + n + i] = 1.0;
            if art_of_row[i] != usize::MAX {
                let a = n + m + art_of_row[i];
                t[base + a] = -1.0;
                for v in &mut t[base..base + ncols] {
                    *v = -*v;
                }
                basis[i] = a;
                beta[i] = -slack[i];
                state[n + i] = VarState::Lower;
            } else {
                basis[i] = n + i;
                beta[i] = slack[i];
            }
        }
        let mut lo = p.lower.clone();
        let mut hi = p.upper.clone();
        lo.extend(std::iter::repeat_n(0.0, m + nart));
        hi.extend(std::iter::repeat_n(f64::INFINITY, m + nart));
        let dim = m + ncols;
        Tableau {
            m,
            n,
            ncols,
            t,
            beta,
            basis,
            state,
            lo,
            hi,
            cost: vec![0.0; ncols],
            d: vec![0.0; ncols],
            art_rows,
            rule,
            pivots: 0,
            iter_cap: 10 * dim * dim,
        }
    }

    #[inline]
    fn at(&self, r: usize, j: usize) -> f64 {
        self.t[r * self.ncols + j]
    }

    fn value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Lower => self.lo[j],
            VarState::Upper => self.hi[j],
            VarState::Free => 0.0,
            VarState::Basic => {
                let r = self
                    .basis
                    .iter()
                    .position(|&b| b == j)
                    .expect("basic variable");
                self.beta[r]
            }
        }
    }

    fn recompute_reduced_costs(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
                for (dj, &a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for r in 0..self.m {
            self.d[self.basis[r]] = 0.0;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.ncols;
        let p = self.t[r * nc + j];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            let inv = 1.0 / p;
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[j] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        for other in before
            .chunks_exact_mut(nc)
            .chain(after.chunks_exact_mut(nc))
        {
            let f = other[j];
            if f != 0.0 {
                for (v, &a) in other.iter_mut().zip(prow.iter()) {
                    *v -= f * a;
                }
                other[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, &a) in self.d.iter_mut().zip(prow.iter()) {
                *v -= f * a;
            }
            self.d[j] = 0.0;
        }
        self.pivots += 1;
    }

    /// Moves all basic values along column `j` by a step of `delta` in `x_j`.
    fn shift_basics(&mut self, j: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        for r in 0..self.m {
            let a = self.t[r * self.ncols + j];
            if a != 0.0 {
                self.beta[r] -= a * delta;
            }
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.hi[j] - self.lo[j] <= 0.0
    }

    fn primal(&mut self) -> Result<PrimalEnd> {
        let mut streak = 0usize;
        let start = self.pivots;
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > self.iter_cap {
                return Err(Error::CyclingSuspected(self.pivots - start));
            }
            let bland = self.rule == PivotRule::Bland || streak > DEGENERATE_STREAK;
            let Some(j) = self.price(bland) else {
                return Ok(PrimalEnd::Optimal);
            };
            let dir = if self.d[j] < 0.0 { 1.0 } else { -1.0 };

            // Ratio test. `None` row means the entering variable flips bound.
            let mut best_t = f64::INFINITY;
            let mut leave: Option<Option<usize>> = None;
            let mut best_alpha = 0.0f64;
            if self.lo[j].is_finite() && self.hi[j].is_finite() {
                best_t = self.hi[j] - self.lo[j];
                leave = Some(None);
            }
            for r in 0..self.m {
                let alpha = dir * self.at(r, j);
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[r];
                let limit = if alpha > 0.0 {
                    if !self.lo[b].is_finite() {
                        continue;
                    }
                    (self.beta[r] - self.lo[b]) / alpha
                } else {
                    if !self.hi[b].is_finite() {
                        continue;
                    }
                    (self.hi[b] - self.beta[r]) / -alpha
                };
                let limit = limit.max(0.0);
                let better = if limit < best_t - TIE_TOL {
                    true
                } else if limit <= best_t + TIE_TOL {
                    match leave {
                        None => true,
                        Some(None) => false,
                        Some(Some(cur)) => {
                            if bland {
                                b < self.basis[cur]
                            } else {
                                alpha.abs() > best_alpha.abs()
                            }
                        }
                    }
                } else {
                    false
                };
                if better {
                    best_t = limit;
                    leave = Some(Some(r));
                    best_alpha = alpha;
                }
            }
            let Some(leave) = leave else {
                return Ok(PrimalEnd::Unbounded { entering: j, dir });
            };
            if best_t <= TIE_TOL {
                streak += 1;
            } else {
                streak = 0;
            }
            match leave {
                None => {
                    self.shift_basics(j, dir * best_t);
                    self.state[j] = match self.state[j] {
                        VarState::Lower => VarState::Upper,
                        _ => VarState::Lower,
                    };
                }
                Some(r) => {
                    let entering_value = self.value(j) + dir * best_t;
                    self.shift_basics(j, dir * best_t);
                    let b = self.basis[r];
                    self.state[b] = if best_alpha > 0.0 {
                        VarState::Lower
                    } else {
                        VarState::Upper
                    };
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.state[j] = VarState::Basic;
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn price(&self, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let dj = self.d[j];
            let eligible = match self.state[j] {
                VarState::Basic => false,
                VarState::Lower => dj < -OPT_TOL,
                VarState::Upper => dj > OPT_TOL,
                VarState::Free => dj.abs() > OPT_TOL,
            };
            if !eligible || self.is_fixed(j) {
                continue;
            }
            if bland {
                return Some(j);
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some(j);
            }
        }
        best
    }

    /// Pivots basic artificials out and removes artificial columns.
    fn drop_artificials(&mut self) {
        let first_art = self.n + self.m;
        for r in 0..self.m {
            if self.basis[r] < first_art {
                continue;
            }
            let mut best: Option<usize> = None;
            let mut best_abs = PIVOT_TOL;
            for j in 0..first_art {
                if self.state[j] == VarState::Basic {
                    continue;
                }
                let a = self.at(r, j).abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                let delta = self.beta[r] / self.at(r, j);
                let entering_value = self.value(j) + delta;
                self.shift_basics(j, delta);
                let b = self.basis[r];
                self.state[b] = VarState::Lower;
                self.pivot(r, j);
                self.basis[r] = j;
                self.state[j] = VarState::Basic;
                self.beta[r] = entering_value;
            }
        }
        if self.basis.iter().any(|&b| b >= first_art) {
            // Redundant rows keep their artificial, pinned at zero.
            for j in first_art..self.ncols {
                self.lo[j] = 0.0;
                self.hi[j] = 0.0;
            }
            return;
        }
        let nc = self.ncols;
        let mut t = Vec::with_capacity(self.m * first_art);
        for r in 0..self.m {
            t.extend_from_slice(&self.t[r * nc..r * nc + first_art]);
        }
        self.t = t;
        self.ncols = first_art;
        self.state.truncate(first_art);
        self.lo.truncate(first_art);
        self.hi.truncate(first_art);
        self.cost.truncate(first_art);
        self.d.truncate(first_art);
        self.art_rows.clear();
    }

    fn ray(&self, entering: usize, dir: f64) -> Vec<f64> {
        let mut ray = vec![0.0; self.n];
        if entering < self.n {
            ray[entering] = dir;
        }
        for r in 0..self.m {
            let b = self.basis[r];
            if b < self.n {
                ray[b] = -dir * self.at(r, entering);
            }
        }
        let scale = ray.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale > 0.0 {
            for v in &mut ray {
                *v /= scale;
                if v.abs() < 1e-12 {
                    *v = 0.0;
                }
            }
        }
        ray
    }

    pub(crate) fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = match self.state[j] {
                VarState::Lower => self.lo[j],
                VarState::Upper => self.hi[j],
                VarState::Free | VarState::Basic => 0.0,
            };
        }
        for r in 0..self.m {
            let b = self.basis[r];
            if b < self.n {
                x[b] = self.beta[r];
            }
        }
        x
    }

    pub(crate) fn objective_value(&self) -> f64 {
        self.solution()
            .iter()
            .zip(&self.cost)
            .map(|(x, c)| x * c)
            .sum()
    }

    fn outcome(&self) -> SolveOutcome {
        let x = self.solution();
        let obj = x.iter().zip(&self.cost).map(|(x, c)| x * c).sum();
        SolveOutcome::optimal(x, obj)
    }

    fn duals(&self) -> Vec<f64> {
        (0..self.m).map(|i| -self.d[self.n + i]).collect()
    }

    /// Tightens the bounds of structural variable `j` in place, keeping the
    /// basis. Basic values may become infeasible; call [`Self::reoptimize`].
    pub(crate) fn tighten(&mut self, j: usize, lo: f64, hi: f64) {
        debug_assert!(j < self.n && lo <= hi);
        let old = match self.state[j] {
            VarState::Basic => None,
            _ => Some(self.value(j)),
        };
        self.lo[j] = lo;
        self.hi[j] = hi;
        if let Some(old) = old {
            self.state[j] = match self.state[j] {
                VarState::Lower if lo.is_finite() => VarState::Lower,
                VarState::Upper if hi.is_finite() => VarState::Upper,
                _ => {
                    if lo.is_finite() && (self.d[j] >= 0.0 || !hi.is_finite()) {
                        VarState::Lower
                    } else if hi.is_finite() {
                        VarState::Upper
                    } else {
                        VarState::Free
                    }
                }
            };
            let new = self.value(j);
            self.shift_basics(j, new - old);
        }
    }

    /// Restores optimality after [`Self::tighten`]: dual simplex to primal
    /// feasibility, then a primal pass to clean up drift.
    pub(crate) fn reoptimize(&mut self) -> Result<DualEnd> {
        if let DualEnd::Infeasible = self.dual()? {
            return Ok(DualEnd::Infeasible);
        }
        match self.primal()? {
            PrimalEnd::Optimal => Ok(DualEnd::Feasible),
            // A restriction of a bounded LP cannot become unbounded; only
            // numerical trouble lands here, so signal it as an error.
            PrimalEnd::Unbounded { .. } => Err(Error::CyclingSuspected(self.pivots)),
        }
    }

    fn dual(&mut self) -> Result<DualEnd> {
        let start = self.pivots;
        let mut steps = 0usize;
        let mut streak = 0usize;
        loop {
            steps += 1;
            if steps > self.iter_cap {
                return Err(Error::CyclingSuspected(self.pivots - start));
            }
            let bland = self.rule == PivotRule::Bland || streak > DEGENERATE_STREAK;
            // Leaving row: most infeasible basic (or lowest index under Bland).
            let mut leave: Option<(usize, f64)> = None;
            let mut worst = PRIMAL_TOL;
            for r in 0..self.m {
                let b = self.basis[r];
                let below = self.lo[b] - self.beta[r];
                let above = self.beta[r] - self.hi[b];
                let (inf, target) = if below > above {
                    (below, self.lo[b])
                } else {
                    (above, self.hi[b])
                };
                if inf > worst {
                    if bland {
                        let better = match leave {
                            None => true,
                            Some((cur, _)) => b < self.basis[cur],
                        };
                        if better {
                            leave = Some((r, target));
                        }
                    } else {
                        worst = inf;
                        leave = Some((r, target));
                    }
                }
            }
            let Some((r, target)) = leave else {
                return Ok(DualEnd::Feasible);
            };
            let increase = target > self.beta[r];
            let mut enter: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_abs = 0.0;
            for j in 0..self.ncols {
                let state = self.state[j];
                if state == VarState::Basic || self.is_fixed(j) {
                    continue;
                }
                let a = self.at(r, j);
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                // beta_r moves by -a * dx_j.
                let ok = match state {
                    VarState::Lower => (a < 0.0) == increase,
                    VarState::Upper => (a > 0.0) == increase,
                    VarState::Free => true,
                    VarState::Basic => false,
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                let better = if ratio < best_ratio - TIE_TOL {
                    true
                } else if ratio <= best_ratio + TIE_TOL {
                    if bland {
                        false
                    } else {
                        a.abs() > best_abs
                    }
                } else {
                    false
                };
                if better {
                    best_ratio = ratio;
                    best_abs = a.abs();
                    enter = Some(j);
                }
            }
            let Some(j) = enter else {
                return Ok(DualEnd::Infeasible);
            };
            if best_ratio <= TIE_TOL {
                streak += 1;
            } else {
                streak = 0;
            }
            let delta = (self.beta[r] - target) / self.at(r, j);
            let entering_value = self.value(j) + delta;
            self.shift_basics(j, delta);
            let b = self.basis[r];
            self.state[b] = if target == self.lo[b] {
                VarState::Lower
            } else {
                VarState::Upper
            };
            self.pivot(r, j);
            self.basis[r] = j;
            self.state[j] = VarState::Basic;
            self.beta[r] = entering_value;
        }
    }

    /// Approximate heap footprint, used for node-storage budgeting.
    pub(crate) fn footprint(&self) -> usize {
        8 * (self.t.len() + 6 * self.ncols + 2 * self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SolveStatus;

    fn row(coeffs: &[(usize, f64)], rhs: f64) -> Constraint {
        Constraint::new(coeffs.to_vec(), rhs, true).unwrap()
    }

    fn free(n: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
    }

    #[test]
    fn toy_relaxation_optimal() {
        // min x - y s.t. y <= 1.75, -x <= -0.5
        let (lo, hi) = free(2);
        let p = LpProblem::new(
            vec![1.0, -1.0],
            vec![row(&[(1, 1.0)], 1.75), row(&[(0, -1.0)], -0.5)],
            lo,
            hi,
        )
        .unwrap();
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        let z = out.solution.unwrap();
        assert!((z[0] - 0.5).abs() < 1e-12 && (z[1] - 1.75).abs() < 1e-12);
        assert!((out.objective.unwrap() + 1.25).abs() < 1e-12);
    }

    #[test]
    fn toy_relaxation_unbounded_ray() {
        let (lo, hi) = free(2);
        let p = LpProblem::new(vec![1.0, -1.0], vec![row(&[(0, -1.0)], -0.5)], lo, hi).unwrap();
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, SolveStatus::Unbounded);
        assert_eq!(out.ray.unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        let (lo, hi) = free(1);
        let p = LpProblem::new(
            vec![0.0],
            vec![row(&[(0, 1.0)], 1.0), row(&[(0, -1.0)], -2.0)],
            lo,
            hi,
        )
        .unwrap();
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(out.infeasible_row.is_some());
    }

    #[test]
    fn inverted_bounds_infeasible() {
        let p = LpProblem::new(vec![1.0], vec![], vec![2.0], vec![1.0]).unwrap();
        assert_eq!(solve_lp(&p).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn bounded_variables_and_flips() {
        // max x + y  s.t. x + y <= 1.5, 0 <= x,y <= 1
        let p = LpProblem::new(
            vec![-1.0, -1.0],
            vec![row(&[(0, 1.0), (1, 1.0)], 1.5)],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let out = solve_lp(&p).unwrap();
        assert!((out.objective.unwrap() + 1.5).abs() < 1e-12);
        // no rows at all: every variable goes to its better bound
        let p = LpProblem::new(vec![1.0, -2.0], vec![], vec![-1.0, 0.0], vec![3.0, 4.0]).unwrap();
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.solution.unwrap(), vec![-1.0, 4.0]);
    }

    #[test]
    fn fixing_respects_bounds() {
        let mut p = LpProblem::new(vec![1.0], vec![], vec![0.0], vec![1.0]).unwrap();
        assert!(p.fix(0, 2.0).is_err());
        p.fix(0, 1.0).unwrap();
        assert_eq!(solve_lp(&p).unwrap().objective, Some(1.0));
    }

    #[test]
    fn bland_and_dantzig_agree() {
        // A small degenerate problem (Beale-like structure).
        let p = LpProblem::new(
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![
                row(&[(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], 0.0),
                row(&[(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], 0.0),
                row(&[(2, 1.0)], 1.0),
            ],
            vec![0.0; 4],
            vec![f64::INFINITY; 4],
        )
        .unwrap();
        let a = solve_lp_with(
            &p,
            LpOptions {
                rule: PivotRule::Bland,
            },
        )
        .unwrap();
        let b = solve_lp_with(&p, LpOptions::default()).unwrap();
        let (oa, ob) = (a.outcome.objective.unwrap(), b.outcome.objective.unwrap());
        assert!((oa - ob).abs() < 1e-9);
        assert!((oa + 0.05).abs() < 1e-9, "{oa}");
    }

    #[test]
    fn warm_reoptimize_matches_cold() {
        // max 3x + 2y s.t. x + y <= 4.5, x + 3y <= 6, 0 <= x <= 3.7, y >= 0
        let p = LpProblem::new(
            vec![-3.0, -2.0],
            vec![
                row(&[(0, 1.0), (1, 1.0)], 4.5),
                row(&[(0, 1.0), (1, 3.0)], 6.0),
            ],
            vec![0.0, 0.0],
            vec![3.7, f64::INFINITY],
        )
        .unwrap();
        let (tab, _) = Tableau::solve(&p, LpOptions::default()).unwrap();
        let mut tab = tab.unwrap();
        tab.tighten(0, 0.0, 3.0);
        assert!(matches!(tab.reoptimize().unwrap(), DualEnd::Feasible));
        let mut q = p.clone();
        q.upper[0] = 3.0;
        let cold = solve_lp(&q).unwrap();
        assert!((tab.objective_value() - cold.objective.unwrap()).abs() < 1e-9);

        tab.tighten(1, 2.0, 2.0);
        tab.tighten(0, 3.0, 3.0);
        assert!(matches!(tab.reoptimize().unwrap(), DualEnd::Infeasible));
    }
}

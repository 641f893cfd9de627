//! Constraint generation over a parametric MILP.
//!
//! Each iteration solves the reduced problem over the current set and adds a
//! single row: the most violated one when the reduced problem is optimal, or,
//! when it is unbounded, the missing row most opposed to the returned ray
//! (largest `a_j^T r`, ties to the lowest id). The loop stops once the
//! reduced optimum satisfies every row of the instance.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{solve_milp_with, MilpOptions};
use crate::model::{
    binding_set, max_violation, ConstraintSet, MilpInstance, SolveOutcome, SolveStatus, BIND_TOL,
};

/// Minimum `a_j^T r` for a row to count as cutting off an unbounded ray.
const RAY_CUT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AddKind {
    /// Most violated row at the reduced optimum.
    Violated,
    /// Row chosen against the unbounded ray of the reduced problem.
    RayCut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgStep {
    /// 1-based iteration whose reduced solve triggered the addition.
    pub iteration: usize,
    pub added: usize,
    pub kind: AddKind,
    /// Violation `a^T z - b` for [`AddKind::Violated`], `a^T r` for ray cuts.
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct CgTrace {
    pub initial: ConstraintSet,
    pub steps: Vec<CgStep>,
    pub final_set: ConstraintSet,
    pub outcome: SolveOutcome,
    /// Reduced-problem solves, unbounded ones included.
    pub iterations: usize,
    pub elapsed: Duration,
}

impl CgTrace {
    pub fn objective(&self) -> f64 {
        self.outcome
            .objective
            .expect("constraint generation ends optimal")
    }
}

pub fn constraint_generation(instance: &MilpInstance, initial: &ConstraintSet) -> Result<CgTrace> {
    constraint_generation_with(instance, initial, &MilpOptions::default())
}

pub fn constraint_generation_with(
    instance: &MilpInstance,
    initial: &ConstraintSet,
    opts: &MilpOptions,
) -> Result<CgTrace> {
    let start = Instant::now();
    // Normalizes the set: rejects bad ids and adds any missing fixed row.
    let mut set = ConstraintSet::new(instance, initial.ids().iter().copied())?;
    let initial = set.clone();
    let mut steps = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let out = solve_milp_with(instance, &set, opts)?.outcome;
        let (added, kind, magnitude) = match out.status {
            SolveStatus::Infeasible => return Err(Error::Infeasible(instance.name.clone())),
            SolveStatus::Optimal => {
                let z = out.solution.as_deref().expect("optimal solution");
                match max_violation(instance, z, &set) {
                    None => {
                        return Ok(CgTrace {
                            initial,
                            steps,
                            final_set: set,
                            outcome: out,
                            iterations,
                            elapsed: start.elapsed(),
                        })
                    }
                    Some((j, v)) => (j, AddKind::Violated, v),
                }
            }
            SolveStatus::Unbounded => {
                let ray = out.ray.as_deref().expect("unbounded ray");
                match ray_cut(instance, ray, &set) {
                    Some((j, v)) => (j, AddKind::RayCut, v),
                    None => return Err(Error::GenuinelyUnbounded(instance.name.clone())),
                }
            }
        };
        set.insert(added);
        steps.push(CgStep {
            iteration: iterations,
            added,
            kind,
            magnitude,
        });
    }
}

/// Missing row with the largest `a_j^T r`, if any is positive.
fn ray_cut(instance: &MilpInstance, ray: &[f64], set: &ConstraintSet) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in instance.constraints.iter().enumerate() {
        if set.contains(j) {
            continue;
        }
        let v = c.activity(ray);
        if v > RAY_CUT_TOL && best.is_none_or(|(_, bv)| v > bv) {
            best = Some((j, v));
        }
    }
    best
}

/// Offline artifacts for one solved instance.
#[derive(Debug, Clone)]
pub struct InvariantSets {
    /// Solution of the full problem.
    pub full: SolveOutcome,
    /// Wall-clock time of the full solve.
    pub full_time: Duration,
    pub binding: ConstraintSet,
    pub invariant: ConstraintSet,
    pub trace: CgTrace,
}

/// Solves the full problem, takes its binding rows and grows them by
/// constraint generation into a set whose reduced problem has the same
/// optimal value.
pub fn identify_invariant_set(instance: &MilpInstance) -> Result<InvariantSets> {
    identify_invariant_set_with(instance, &MilpOptions::default())
}

pub fn identify_invariant_set_with(
    instance: &MilpInstance,
    opts: &MilpOptions,
) -> Result<InvariantSets> {
    let start = Instant::now();
    let full = solve_milp_with(instance, &instance.full_set(), opts)?.outcome;
    let full_time = start.elapsed();
    let z = match full.status {
        SolveStatus::Optimal => full.solution.as_deref().expect("optimal solution"),
        SolveStatus::Infeasible => return Err(Error::Infeasible(instance.name.clone())),
        SolveStatus::Unbounded => return Err(Error::GenuinelyUnbounded(instance.name.clone())),
    };
    let binding = binding_set(instance, z, BIND_TOL)?;
    let trace = constraint_generation_with(instance, &binding, opts)?;
    Ok(InvariantSets {
        invariant: trace.final_set.clone(),
        full,
        full_time,
        binding,
        trace,
    })
}

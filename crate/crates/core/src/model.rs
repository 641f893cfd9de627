//! Parametric MILP instances in canonical `a^T z <= b` form, constraint-set
//! bookkeeping and the feasibility queries the constraint-generation loop
//! relies on.
//!
//! Variables are laid out as `z = (x, y)`: the first `num_continuous` entries
//! are continuous, the remaining `num_integer` are integer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasibility tolerance used when checking a point against constraints.
pub const FEAS_TOL: f64 = 1e-6;
/// Tolerance for declaring a constraint binding at a solution.
pub const BIND_TOL: f64 = 1e-6;
/// Distance to the nearest integer accepted as integral.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

/// A constraint as written by a modeller, before canonicalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConstraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub learnable: bool,
}

impl RawConstraint {
    pub fn new(coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64, learnable: bool) -> Self {
        Self {
            coeffs,
            sense,
            rhs,
            learnable,
        }
    }
}

/// One canonical row `coeffs . z <= rhs`.
///
/// Coefficient indices are strictly increasing and no zero is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub learnable: bool,
}

impl Constraint {
    /// Builds a row, sorting coefficients, merging repeated indices and
    /// dropping zeros.
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64, learnable: bool) -> Result<Self> {
        if !rhs.is_finite() || coeffs.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite("constraint"));
        }
        let mut coeffs = coeffs;
        coeffs.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (i, v) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        Ok(Self {
            coeffs: merged,
            rhs,
            learnable,
        })
    }

    pub fn activity(&self, z: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, v)| v * z[i]).sum()
    }

    /// `a^T z - b`; positive means violated.
    pub fn excess(&self, z: &[f64]) -> f64 {
        self.activity(z) - self.rhs
    }

    fn negated(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&(i, v)| (i, -v)).collect(),
            rhs: -self.rhs,
            learnable: self.learnable,
        }
    }

    fn is_canonical(&self) -> bool {
        self.coeffs.windows(2).all(|w| w[0].0 < w[1].0)
            && self.coeffs.iter().all(|&(_, v)| v != 0.0 && v.is_finite())
            && self.rhs.is_finite()
    }
}

/// Turns a `<=`, `>=` or `=` row into one or two canonical `<=` rows.
///
/// `>=` rows are negated; `=` rows become the `<=` row followed by the
/// negated `>=` row.
pub fn canonicalize(raw: &RawConstraint) -> Result<Vec<Constraint>> {
    let le = Constraint::new(raw.coeffs.clone(), raw.rhs, raw.learnable)?;
    Ok(match raw.sense {
        Sense::Le => vec![le],
        Sense::Ge => vec![le.negated()],
        Sense::Eq => {
            let ge = le.negated();
            vec![le, ge]
        }
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VarBound {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

impl VarBound {
    pub const FREE: VarBound = VarBound { lo: None, hi: None };

    pub fn new(lo: Option<f64>, hi: Option<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn lower(&self) -> f64 {
        self.lo.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn upper(&self) -> f64 {
        self.hi.unwrap_or(f64::INFINITY)
    }
}

/// One member of a parametric MILP family `P_theta[J]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpInstance {
    pub name: String,
    pub num_continuous: usize,
    pub num_integer: usize,
    pub objective: Vec<f64>,
    pub var_bounds: Vec<VarBound>,
    pub constraints: Vec<Constraint>,
    pub theta: Vec<f64>,
}

impl MilpInstance {
    pub fn num_vars(&self) -> usize {
        self.num_continuous + self.num_integer
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_integer(&self, var: usize) -> bool {
        var >= self.num_continuous
    }

    pub fn learnable_ids(&self) -> Vec<usize> {
        self.ids_where(|c| c.learnable)
    }

    /// Ids of the rows that are never screened out.
    pub fn fixed_ids(&self) -> Vec<usize> {
        self.ids_where(|c| !c.learnable)
    }

    fn ids_where(&self, pred: impl Fn(&Constraint) -> bool) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| pred(c))
            .map(|(j, _)| j)
            .collect()
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        self.objective.iter().zip(z).map(|(c, v)| c * v).sum()
    }

    pub fn full_set(&self) -> ConstraintSet {
        ConstraintSet {
            instance: self.name.clone(),
            ids: (0..self.num_constraints()).collect(),
        }
    }

    /// The set holding only the non-learnable rows.
    pub fn base_set(&self) -> ConstraintSet {
        ConstraintSet {
            instance: self.name.clone(),
            ids: self.fixed_ids(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(Error::InvalidInstance {
                name: self.name.clone(),
                reason,
            })
        };
        let nv = self.num_vars();
        if self.objective.len() != nv {
            return bad(format!(
                "objective has {} entries, expected {nv}",
                self.objective.len()
            ));
        }
        if self.var_bounds.len() != nv {
            return bad(format!(
                "var_bounds has {} entries, expected {nv}",
                self.var_bounds.len()
            ));
        }
        if self
            .objective
            .iter()
            .chain(&self.theta)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("objective or theta"));
        }
        for (i, b) in self.var_bounds.iter().enumerate() {
            if b.lo.is_some_and(|v| !v.is_finite()) || b.hi.is_some_and(|v| !v.is_finite()) {
                return Err(Error::NonFinite("var_bounds"));
            }
            if b.lower() > b.upper() {
                return bad(format!("variable {i} has lo > hi"));
            }
        }
        for (j, c) in self.constraints.iter().enumerate() {
            if !c.is_canonical() {
                return bad(format!("constraint {j} is not in canonical form"));
            }
            if let Some(&(i, _)) = c.coeffs.last() {
                if i >= nv {
                    return bad(format!("constraint {j} references variable {i}"));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of the declared variable bounds at `z`.
    pub fn bound_violation(&self, z: &[f64]) -> f64 {
        self.var_bounds
            .iter()
            .zip(z)
            .map(|(b, &v)| (b.lower() - v).max(v - b.upper()).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Whether every integer component of `z` is within [`INT_TOL`] of an integer.
    pub fn is_integral(&self, z: &[f64]) -> bool {
        z[self.num_continuous..]
            .iter()
            .all(|v| (v - v.round()).abs() <= INT_TOL)
    }

    /// Same family means same variable layout and same row structure; only
    /// right-hand sides, objective and theta may differ.
    pub fn same_family(&self, other: &MilpInstance) -> bool {
        self.num_continuous == other.num_continuous
            && self.num_integer == other.num_integer
            && self.num_constraints() == other.num_constraints()
            && self.theta.len() == other.theta.len()
            && self
                .constraints
                .iter()
                .zip(&other.constraints)
                .all(|(a, b)| a.learnable == b.learnable)
    }
}

/// An ordered subset of constraint ids of one instance.
///
/// Ids are kept sorted and unique; non-learnable rows are always members.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub instance: String,
    ids: Vec<usize>,
}

impl ConstraintSet {
    /// Builds a set for `instance` from the given ids, adding every
    /// non-learnable row.
    pub fn new(instance: &MilpInstance, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = ids.into_iter().collect();
        let n = instance.num_constraints();
        if let Some(&bad) = v.iter().find(|&&j| j >= n) {
            return Err(Error::InvalidSet {
                instance: instance.name.clone(),
                reason: format!("constraint id {bad} out of range (|J| = {n})"),
            });
        }
        v.extend(instance.fixed_ids());
        v.sort_unstable();
        v.dedup();
        Ok(Self {
            instance: instance.name.clone(),
            ids: v,
        })
    }

    /// Builds a set without an instance at hand; the caller guarantees ids
    /// are in range and include every fixed row.
    pub(crate) fn from_ids_unchecked(instance: &str, mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self {
            instance: instance.to_string(),
            ids,
        }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    /// Returns false when `id` was already a member.
    pub fn insert(&mut self, id: usize) -> bool {
        match self.ids.binary_search(&id) {
            Ok(_) => false,
            Err(pos) => {
                self.ids.insert(pos, id);
                true
            }
        }
    }

    pub fn learnable_ids<'a>(
        &'a self,
        instance: &'a MilpInstance,
    ) -> impl Iterator<Item = usize> + 'a {
        self.ids
            .iter()
            .copied()
            .filter(move |&j| instance.constraints[j].learnable)
    }

    pub fn learnable_count(&self, instance: &MilpInstance) -> usize {
        self.learnable_ids(instance).count()
    }

    pub fn is_subset(&self, other: &ConstraintSet) -> bool {
        self.ids.iter().all(|&j| other.contains(j))
    }

    /// Membership mask over all `|J|` rows.
    pub fn mask(&self, num_constraints: usize) -> Vec<bool> {
        let mut m = vec![false; num_constraints];
        for &j in &self.ids {
            m[j] = true;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of solving an LP or MILP.
///
/// `solution`/`objective` are present iff Optimal, `ray` iff Unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ray: Option<Vec<f64>>,
    /// Index (into the solved row list) of a row that could not be satisfied,
    /// when the solver can name one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasible_row: Option<usize>,
}

impl SolveOutcome {
    pub fn optimal(solution: Vec<f64>, objective: f64) -> Self {
        Self {
            status: SolveStatus::Optimal,
            solution: Some(solution),
            objective: Some(objective),
            ray: None,
            infeasible_row: None,
        }
    }

    pub fn infeasible(row: Option<usize>) -> Self {
        Self {
            status: SolveStatus::Infeasible,
            solution: None,
            objective: None,
            ray: None,
            infeasible_row: row,
        }
    }

    pub fn unbounded(ray: Vec<f64>) -> Self {
        Self {
            status: SolveStatus::Unbounded,
            solution: None,
            objective: None,
            ray: Some(ray),
            infeasible_row: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Returns the most violated row outside `excluded`, if any row exceeds
/// [`FEAS_TOL`]. Ties go to the lowest id.
pub fn max_violation(
    instance: &MilpInstance,
    z: &[f64],
    excluded: &ConstraintSet,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in instance.constraints.iter().enumerate() {
        if excluded.contains(j) {
            continue;
        }
        let v = c.excess(z);
        if v > FEAS_TOL && best.is_none_or(|(_, bv)| v > bv) {
            best = Some((j, v));
        }
    }
    best
}

/// Rows holding with equality (within `tol`) at `z`, plus every
/// non-learnable row.
///
/// Fails if `z` violates any row by more than [`FEAS_TOL`], naming the worst.
pub fn binding_set(instance: &MilpInstance, z: &[f64], tol: f64) -> Result<ConstraintSet> {
    let mut worst: Option<(usize, f64)> = None;
    let mut ids = Vec::new();
    for (j, c) in instance.constraints.iter().enumerate() {
        let e = c.excess(z);
        if e > FEAS_TOL && worst.is_none_or(|(_, w)| e > w) {
            worst = Some((j, e));
        }
        if e.abs() <= tol {
            ids.push(j);
        }
    }
    if let Some((constraint, violation)) = worst {
        return Err(Error::InfeasiblePoint {
            constraint,
            violation,
        });
    }
    ConstraintSet::new(instance, ids)
}

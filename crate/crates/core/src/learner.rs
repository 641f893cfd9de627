//! Constraint labels and a conservative k-nearest-neighbour screen.
//!
//! A learnable row is predicted present iff at least one of the `k` nearest
//! training instances (Euclidean distance on `theta`, ties to the lower
//! training index) labels it `+1`. OR-voting over nested neighbourhoods makes
//! predictions grow monotonically with `k`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConstraintSet, MilpInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    /// Labels from binding sets `B_t`.
    Binding,
    /// Labels from invariant sets `S_t`.
    Invariant,
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelSource::Binding => "binding",
            LabelSource::Invariant => "invariant",
        })
    }
}

impl FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binding" | "b" | "B" => Ok(LabelSource::Binding),
            "invariant" | "s" | "S" => Ok(LabelSource::Invariant),
            other => Err(Error::Parse(format!("unknown label source `{other}`"))),
        }
    }
}

/// Row layout of a family: which ids are screened and which are always kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyLayout {
    pub num_constraints: usize,
    /// `J-bar`, in id order; label positions refer to this list.
    pub learnable: Vec<usize>,
    pub fixed: Vec<usize>,
}

impl FamilyLayout {
    pub fn of(instance: &MilpInstance) -> Self {
        Self {
            num_constraints: instance.num_constraints(),
            learnable: instance.learnable_ids(),
            fixed: instance.fixed_ids(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub name: String,
    pub theta: Vec<f64>,
    /// `+1` if the learnable row at this position is in the set, else `-1`.
    pub labels: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub family: String,
    pub layout: FamilyLayout,
    pub source: LabelSource,
    pub rows: Vec<LabeledInstance>,
}

impl LabelMatrix {
    pub fn new(family: impl Into<String>, layout: FamilyLayout, source: LabelSource) -> Self {
        Self {
            family: family.into(),
            layout,
            source,
            rows: Vec::new(),
        }
    }

    /// Appends one training instance labelled by `set`.
    pub fn push(&mut self, name: &str, theta: &[f64], set: &ConstraintSet) -> Result<()> {
        if let Some(first) = self.rows.first() {
            if first.theta.len() != theta.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.theta.len(),
                    got: theta.len(),
                });
            }
        }
        if let Some(&bad) = set
            .ids()
            .iter()
            .find(|&&j| j >= self.layout.num_constraints)
        {
            return Err(Error::InvalidSet {
                instance: name.to_string(),
                reason: format!("constraint id {bad} out of range"),
            });
        }
        let labels = self
            .layout
            .learnable
            .iter()
            .map(|&j| if set.contains(j) { 1 } else { -1 })
            .collect();
        self.rows.push(LabeledInstance {
            name: name.to_string(),
            theta: theta.to_vec(),
            labels,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn theta_dim(&self) -> Option<usize> {
        self.rows.first().map(|r| r.theta.len())
    }
}

/// Lazy knn: keeps the training data verbatim.
#[derive(Debug, Clone)]
pub struct KnnModel {
    data: LabelMatrix,
    k: usize,
}

pub fn fit(labels: LabelMatrix, k: usize) -> Result<KnnModel> {
    if labels.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if k == 0 || k > labels.len() {
        return Err(Error::KOutOfRange {
            k,
            train: labels.len(),
        });
    }
    Ok(KnnModel { data: labels, k })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn data(&self) -> &LabelMatrix {
        &self.data
    }

    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbors(&self, theta: &[f64]) -> Result<Vec<usize>> {
        let dim = self.data.theta_dim().unwrap_or(0);
        if theta.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: theta.len(),
            });
        }
        let mut dist: Vec<(f64, usize)> = self
            .data
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d2: f64 = r
                    .theta
                    .iter()
                    .zip(theta)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(dist.into_iter().take(self.k).map(|(_, i)| i).collect())
    }

    /// Predicted warm-start set for a query `theta`; `name` labels the set.
    pub fn predict_set(&self, name: &str, theta: &[f64]) -> Result<ConstraintSet> {
        let nbrs = self.neighbors(theta)?;
        let layout = &self.data.layout;
        let mut ids: Vec<usize> = layout
            .learnable
            .iter()
            .enumerate()
            .filter(|&(pos, _)| nbrs.iter().any(|&t| self.data.rows[t].labels[pos] > 0))
            .map(|(_, &j)| j)
            .collect();
        ids.extend_from_slice(&layout.fixed);
        Ok(ConstraintSet::from_ids_unchecked(name, ids))
    }
}

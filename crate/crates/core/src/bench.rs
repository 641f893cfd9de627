//! Leave-one-out benchmark pipeline, per-run metrics and their aggregates.
//!
//! `C` counts learnable rows of the final constraint set only; fixed rows are
//! part of every set and carry no information.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::congen::{constraint_generation_with, identify_invariant_set_with};
use crate::error::{Error, Result};
use crate::io::SetsRecord;
use crate::learner::{fit, FamilyLayout, LabelMatrix, LabelSource};
use crate::milp::{solve_milp_with, MilpOptions};
use crate::model::{ConstraintSet, MilpInstance, SolveStatus};

/// Largest tolerated gap between a run's objective and the full optimum.
pub const OBJECTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Constraint generation from the fixed rows only.
    Cg,
    BLearner,
    SLearner,
    /// One solve of the full problem.
    Full,
}

impl Method {
    pub fn label_source(self) -> Option<LabelSource> {
        match self {
            Method::BLearner => Some(LabelSource::Binding),
            Method::SLearner => Some(LabelSource::Invariant),
            Method::Cg | Method::Full => None,
        }
    }

    pub fn uses_k(self) -> bool {
        self.label_source().is_some()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cg => "cg",
            Method::BLearner => "b-learner",
            Method::SLearner => "s-learner",
            Method::Full => "full",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg" => Ok(Method::Cg),
            "b-learner" => Ok(Method::BLearner),
            "s-learner" => Ok(Method::SLearner),
            "full" => Ok(Method::Full),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Instance-local offline artifacts, shared by every fold.
#[derive(Debug, Clone)]
pub struct OfflineRecord {
    pub name: String,
    pub full_objective: f64,
    pub tau_milp_ms: f64,
    pub binding: ConstraintSet,
    pub invariant: ConstraintSet,
}

#[derive(Debug, Clone)]
pub struct OfflineCache {
    pub records: Vec<OfflineRecord>,
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(pool.install(f))
}

impl OfflineCache {
    /// Solves every instance and identifies its binding and invariant sets.
    pub fn build(dataset: &[MilpInstance], opts: &PipelineOptions) -> Result<Self> {
        let records = with_pool(opts.jobs, || {
            dataset
                .par_iter()
                .map(|inst| {
                    let id = identify_invariant_set_with(inst, &opts.milp)?;
                    Ok(OfflineRecord {
                        name: inst.name.clone(),
                        full_objective: id.full.objective.expect("optimal"),
                        tau_milp_ms: ms(id.full_time),
                        binding: id.binding,
                        invariant: id.invariant,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })??;
        Ok(Self { records })
    }

    /// Uses precomputed sets; only the full solves are repeated.
    pub fn from_sets(
        dataset: &[MilpInstance],
        sets: &[SetsRecord],
        opts: &PipelineOptions,
    ) -> Result<Self> {
        let records = with_pool(opts.jobs, || {
            dataset
                .par_iter()
                .map(|inst| {
                    let rec = sets
                        .iter()
                        .find(|r| r.name == inst.name)
                        .ok_or_else(|| Error::UnknownInstance(inst.name.clone()))?;
                    let start = Instant::now();
                    let full = solve_milp_with(inst, &inst.full_set(), &opts.milp)?.outcome;
                    let tau = start.elapsed();
                    let full_objective = match full.status {
                        SolveStatus::Optimal => full.objective.expect("optimal"),
                        SolveStatus::Infeasible => {
                            return Err(Error::Infeasible(inst.name.clone()))
                        }
                        SolveStatus::Unbounded => {
                            return Err(Error::GenuinelyUnbounded(inst.name.clone()))
                        }
                    };
                    Ok(OfflineRecord {
                        name: inst.name.clone(),
                        full_objective,
                        tau_milp_ms: ms(tau),
                        binding: ConstraintSet::new(inst, rec.binding.iter().copied())?,
                        invariant: ConstraintSet::new(inst, rec.invariant.iter().copied())?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })??;
        Ok(Self { records })
    }

    pub fn to_sets(&self) -> Vec<SetsRecord> {
        self.records
            .iter()
            .map(|r| SetsRecord {
                name: r.name.clone(),
                binding: r.binding.ids().to_vec(),
                invariant: r.invariant.ids().to_vec(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    /// Worker threads; 1 keeps timings free of contention.
    pub jobs: usize,
    pub milp: MilpOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            milp: MilpOptions::default(),
        }
    }
}

/// One benchmark run; serializes to one metrics CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub instance: String,
    pub method: Method,
    pub k: Option<usize>,
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "I")]
    pub i: usize,
    pub tau_pred_ms: f64,
    pub tau_cg_ms: f64,
    pub tau_milp_ms: f64,
    pub delta_pct: f64,
    pub objective: f64,
    pub full_objective: f64,
    #[serde(rename = "match")]
    pub matched: bool,
}

fn check_family(dataset: &[MilpInstance]) -> Result<()> {
    if let Some(first) = dataset.first() {
        if let Some(bad) = dataset.iter().find(|i| !first.same_family(i)) {
            return Err(Error::InvalidInstance {
                name: bad.name.clone(),
                reason: format!("not in the family of `{}`", first.name),
            });
        }
    }
    Ok(())
}

/// Runs `method` on every instance of `dataset`. Learners train on all other
/// instances (leave-one-out) with `k` neighbours.
pub fn run_pipeline(
    dataset: &[MilpInstance],
    cache: &OfflineCache,
    method: Method,
    k: Option<usize>,
    opts: &PipelineOptions,
) -> Result<Vec<RunMetrics>> {
    if cache.records.len() != dataset.len() {
        return Err(Error::InvalidConfig(format!(
            "offline cache has {} records for {} instances",
            cache.records.len(),
            dataset.len()
        )));
    }
    let k = if method.uses_k() {
        if dataset.len() < 2 {
            return Err(Error::EmptyTraining);
        }
        check_family(dataset)?;
        Some(k.ok_or_else(|| Error::InvalidConfig(format!("method {method} needs k")))?)
    } else {
        None
    };
    with_pool(opts.jobs, || {
        (0..dataset.len())
            .into_par_iter()
            .map(|t| run_one(dataset, cache, method, k, t, opts))
            .collect::<Result<Vec<_>>>()
    })?
}

fn run_one(
    dataset: &[MilpInstance],
    cache: &OfflineCache,
    method: Method,
    k: Option<usize>,
    t: usize,
    opts: &PipelineOptions,
) -> Result<RunMetrics> {
    let inst = &dataset[t];
    let rec = &cache.records[t];
    let (c, i, tau_pred, tau_cg, objective) = match method {
        Method::Full => (
            inst.learnable_ids().len(),
            1,
            0.0,
            rec.tau_milp_ms,
            rec.full_objective,
        ),
        Method::Cg => {
            let tr = constraint_generation_with(inst, &inst.base_set(), &opts.milp)?;
            (
                tr.final_set.learnable_count(inst),
                tr.iterations,
                0.0,
                ms(tr.elapsed),
                tr.objective(),
            )
        }
        Method::BLearner | Method::SLearner => {
            let source = method.label_source().expect("learner");
            let mut labels = LabelMatrix::new(inst.name.clone(), FamilyLayout::of(inst), source);
            for (u, (other, r)) in dataset.iter().zip(&cache.records).enumerate() {
                if u != t {
                    let set = match source {
                        LabelSource::Binding => &r.binding,
                        LabelSource::Invariant => &r.invariant,
                    };
                    labels.push(&other.name, &other.theta, set)?;
                }
            }
            let start = Instant::now();
            let model = fit(labels, k.expect("learner k"))?;
            let warm = model.predict_set(&inst.name, &inst.theta)?;
            let tau_pred = ms(start.elapsed());
            let tr = constraint_generation_with(inst, &warm, &opts.milp)?;
            (
                tr.final_set.learnable_count(inst),
                tr.iterations,
                tau_pred,
                ms(tr.elapsed),
                tr.objective(),
            )
        }
    };
    let full = rec.full_objective;
    if (objective - full).abs() > OBJECTIVE_TOL {
        return Err(Error::ObjectiveMismatch {
            instance: inst.name.clone(),
            method: method.to_string(),
            k,
            objective,
            full,
        });
    }
    Ok(RunMetrics {
        instance: inst.name.clone(),
        method,
        k,
        c,
        i,
        tau_pred_ms: tau_pred,
        tau_cg_ms: tau_cg,
        tau_milp_ms: rec.tau_milp_ms,
        delta_pct: 100.0 * (tau_pred + tau_cg) / rec.tau_milp_ms.max(f64::MIN_POSITIVE),
        objective,
        full_objective: full,
        matched: true,
    })
}

/// `run_pipeline` for every `k` of a learner, or once for `cg` and `full`.
pub fn run_benchmark(
    dataset: &[MilpInstance],
    cache: &OfflineCache,
    method: Method,
    ks: &[usize],
    opts: &PipelineOptions,
) -> Result<Vec<RunMetrics>> {
    if !method.uses_k() {
        return run_pipeline(dataset, cache, method, None, opts);
    }
    let mut out = Vec::new();
    for &k in ks {
        out.extend(run_pipeline(dataset, cache, method, Some(k), opts)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quantiles {
    /// Linear interpolation between order statistics; `None` when empty.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let at = |p: f64| {
            let x = p * (v.len() - 1) as f64;
            let lo = x.floor() as usize;
            let hi = x.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (x - lo as f64)
        };
        Some(Self {
            min: v[0],
            q1: at(0.25),
            median: at(0.5),
            q3: at(0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Aggregate over all runs of one method and `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub method: Method,
    pub k: Option<usize>,
    pub runs: usize,
    pub c_min: usize,
    pub c_max: usize,
    pub i_min: usize,
    pub i_max: usize,
    pub mean_c: f64,
    pub mean_i: f64,
    /// Percentage of runs finishing in one iteration.
    pub p1: f64,
    /// Mean `delta_pct`.
    pub delta: f64,
    pub all_match: bool,
    pub c_quantiles: Quantiles,
    pub i_quantiles: Quantiles,
    pub delta_quantiles: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Groups in order of first appearance.
    pub groups: Vec<GroupSummary>,
}

impl Summary {
    pub fn group(&self, method: Method, k: Option<usize>) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.method == method && g.k == k)
    }
}

pub fn aggregate(runs: &[RunMetrics]) -> Summary {
    let mut keys: Vec<(Method, Option<usize>)> = Vec::new();
    for r in runs {
        if !keys.contains(&(r.method, r.k)) {
            keys.push((r.method, r.k));
        }
    }
    let groups = keys
        .into_iter()
        .map(|(method, k)| {
            let g: Vec<&RunMetrics> = runs
                .iter()
                .filter(|r| r.method == method && r.k == k)
                .collect();
            let n = g.len() as f64;
            let cs: Vec<f64> = g.iter().map(|r| r.c as f64).collect();
            let is: Vec<f64> = g.iter().map(|r| r.i as f64).collect();
            let ds: Vec<f64> = g.iter().map(|r| r.delta_pct).collect();
            GroupSummary {
                method,
                k,
                runs: g.len(),
                c_min: g.iter().map(|r| r.c).min().unwrap_or(0),
                c_max: g.iter().map(|r| r.c).max().unwrap_or(0),
                i_min: g.iter().map(|r| r.i).min().unwrap_or(0),
                i_max: g.iter().map(|r| r.i).max().unwrap_or(0),
                mean_c: cs.iter().sum::<f64>() / n,
                mean_i: is.iter().sum::<f64>() / n,
                p1: 100.0 * g.iter().filter(|r| r.i == 1).count() as f64 / n,
                delta: ds.iter().sum::<f64>() / n,
                all_match: g.iter().all(|r| r.matched),
                c_quantiles: Quantiles::of(&cs).expect("nonempty group"),
                i_quantiles: Quantiles::of(&is).expect("nonempty group"),
                delta_quantiles: Quantiles::of(&ds).expect("nonempty group"),
            }
        })
        .collect();
    Summary { groups }
}

pub fn write_metrics_csv(path: impl AsRef<Path>, runs: &[RunMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    write_metrics(&mut w, runs)?;
    w.flush()?;
    Ok(())
}

pub fn write_metrics<W: std::io::Write>(w: &mut csv::Writer<W>, runs: &[RunMetrics]) -> Result<()> {
    if runs.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in runs {
        w.serialize(r)?;
    }
    Ok(())
}

pub const CSV_HEADER: [&str; 12] = [
    "instance",
    "method",
    "k",
    "C",
    "I",
    "tau_pred_ms",
    "tau_cg_ms",
    "tau_milp_ms",
    "delta_pct",
    "objective",
    "full_objective",
    "match",
];

/// Columns that depend on wall-clock time.
pub const TIMING_COLUMNS: [&str; 4] = ["tau_pred_ms", "tau_cg_ms", "tau_milp_ms", "delta_pct"];

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<RunMetrics>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!(
            "unexpected metrics header {header:?}"
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_toy;

    fn toy_runs(method: Method, k: Option<usize>) -> Vec<RunMetrics> {
        let toy: Vec<_> = gen_toy().into_iter().take(3).collect();
        let opts = PipelineOptions::default();
        let cache = OfflineCache::build(&toy, &opts).unwrap();
        run_pipeline(&toy, &cache, method, k, &opts).unwrap()
    }

    #[test]
    fn toy_learner_iterations() {
        for k in 1..=2 {
            assert!(toy_runs(Method::SLearner, Some(k)).iter().all(|r| r.i == 1));
            assert!(toy_runs(Method::BLearner, Some(k)).iter().all(|r| r.i == 2));
        }
    }

    #[test]
    fn full_and_cg_match() {
        for m in [Method::Full, Method::Cg] {
            let runs = toy_runs(m, None);
            assert_eq!(runs.len(), 3);
            assert!(runs.iter().all(|r| r.matched && r.k.is_none()));
        }
    }

    #[test]
    fn learner_needs_k_and_training() {
        let toy: Vec<_> = gen_toy().into_iter().take(3).collect();
        let opts = PipelineOptions::default();
        let cache = OfflineCache::build(&toy, &opts).unwrap();
        assert!(run_pipeline(&toy, &cache, Method::SLearner, None, &opts).is_err());
        assert!(matches!(
            run_pipeline(&toy, &cache, Method::SLearner, Some(3), &opts),
            Err(Error::KOutOfRange { k: 3, train: 2 })
        ));
        let one = OfflineCache {
            records: cache.records[..1].to_vec(),
        };
        assert!(matches!(
            run_pipeline(&toy[..1], &one, Method::SLearner, Some(1), &opts),
            Err(Error::EmptyTraining)
        ));
    }

    #[test]
    fn corrupted_sets_break_optimality() {
        let toy: Vec<_> = gen_toy().into_iter().take(3).collect();
        let opts = PipelineOptions::default();
        let mut cache = OfflineCache::build(&toy, &opts).unwrap();
        cache.records[0].full_objective += 1.0;
        assert!(matches!(
            run_pipeline(&toy, &cache, Method::Cg, None, &opts),
            Err(Error::ObjectiveMismatch { .. })
        ));
    }

    fn run(i: usize, c: usize, d: f64) -> RunMetrics {
        RunMetrics {
            instance: "x".into(),
            method: Method::SLearner,
            k: Some(1),
            c,
            i,
            tau_pred_ms: 0.0,
            tau_cg_ms: d,
            tau_milp_ms: 100.0,
            delta_pct: d,
            objective: 0.0,
            full_objective: 0.0,
            matched: true,
        }
    }

    #[test]
    fn aggregate_stats() {
        let s = aggregate(&[run(1, 3, 10.0)]);
        let g = &s.groups[0];
        assert_eq!(g.p1, 100.0);
        assert_eq!(g.i_quantiles.min, g.i_quantiles.max);
        assert_eq!(g.i_quantiles.median, 1.0);

        let s = aggregate(&[
            run(1, 2, 10.0),
            run(3, 4, 20.0),
            run(2, 6, 30.0),
            run(1, 8, 40.0),
        ]);
        let g = s.group(Method::SLearner, Some(1)).unwrap();
        assert_eq!(g.p1, 50.0);
        assert_eq!((g.i_min, g.i_max, g.c_min, g.c_max), (1, 3, 2, 8));
        assert_eq!(g.delta, 25.0);
        assert_eq!(g.c_quantiles.median, 5.0);
        assert_eq!(g.c_quantiles.q1, 3.5);
        assert_eq!(g.c_quantiles.q3, 6.5);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let mut runs = vec![run(1, 2, 0.5)];
        runs.push(RunMetrics {
            method: Method::Cg,
            k: None,
            ..run(4, 3, 1.5)
        });
        write_metrics_csv(&p, &runs).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert!(text.lines().nth(2).unwrap().starts_with("x,cg,,3,4,"));
        assert_eq!(read_metrics_csv(&p).unwrap(), runs);
    }

    #[test]
    fn method_names() {
        for m in [Method::Cg, Method::BLearner, Method::SLearner, Method::Full] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
    }
}

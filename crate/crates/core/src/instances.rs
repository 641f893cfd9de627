//! Seeded generators for the three instance families: the two-variable toy
//! problem, the synthetic on/off MILP and a DC unit-commitment analog.
//!
//! Every generator is a pure function of its config. Instance `t` draws from
//! its own ChaCha stream `(seed, t + 1)`; stream 0 holds the fixed family
//! data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::solve_milp;
use crate::model::{canonicalize, Constraint, MilpInstance, RawConstraint, Sense, VarBound};

/// Draws per instance before giving up on finding a feasible one.
pub const MAX_RESAMPLES: usize = 100;

pub const TOY_TRAIN_B: [f64; 3] = [1.0, 1.25, 1.5];
pub const TOY_TEST_B: f64 = 1.3;

/// The toy problem for a given `b`:
///
/// ```text
/// min x - y   (x real, y integer)
///   x <= 1.5, y <= 1.75, x >= 0.5, x + y >= b, y >= 0, y <= 2.25
/// ```
pub fn toy_instance(name: &str, b: f64) -> MilpInstance {
    let raw = [
        RawConstraint::new(vec![(0, 1.0)], Sense::Le, 1.5, true),
        RawConstraint::new(vec![(1, 1.0)], Sense::Le, 1.75, true),
        RawConstraint::new(vec![(0, 1.0)], Sense::Ge, 0.5, true),
        RawConstraint::new(vec![(0, 1.0), (1, 1.0)], Sense::Ge, b, true),
        RawConstraint::new(vec![(1, 1.0)], Sense::Ge, 0.0, true),
        RawConstraint::new(vec![(1, 1.0)], Sense::Le, 2.25, true),
    ];
    let constraints = raw
        .iter()
        .flat_map(|r| canonicalize(r).expect("finite toy data"))
        .collect();
    MilpInstance {
        name: name.to_string(),
        num_continuous: 1,
        num_integer: 1,
        objective: vec![1.0, -1.0],
        var_bounds: vec![VarBound::FREE; 2],
        constraints,
        theta: vec![b],
    }
}

/// Three training instances (`b` = 1, 1.25, 1.5) followed by the test
/// instance (`b` = 1.3).
pub fn gen_toy() -> Vec<MilpInstance> {
    let mut out: Vec<MilpInstance> = TOY_TRAIN_B
        .iter()
        .map(|&b| toy_instance(&format!("toy_b{b}"), b))
        .collect();
    out.push(toy_instance(&format!("toy_test_b{TOY_TEST_B}"), TOY_TEST_B));
    out
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_dims(n: usize, m: usize, t: usize) -> Result<()> {
    if n == 0 || m == 0 || t == 0 {
        return Err(Error::InvalidConfig(format!(
            "n, m and T must be at least 1 (got n={n}, m={m}, T={t})"
        )));
    }
    Ok(())
}

/// Screens a candidate: it must solve to optimality over its full row set.
fn is_solvable(instance: &MilpInstance) -> Result<bool> {
    match solve_milp(instance, &instance.full_set()) {
        Ok(out) => Ok(out.is_optimal()),
        Err(Error::NodeLimit(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticFamilyConfig {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub seed: u64,
}

/// Fixed data shared by every synthetic instance.
struct SyntheticData {
    /// `a[j][i]`: coefficient of `x_i` in coupling row `j`.
    a: Vec<Vec<f64>>,
    c: Vec<f64>,
    l: Vec<f64>,
    u: Vec<f64>,
}

impl SyntheticData {
    fn draw(cfg: &SyntheticFamilyConfig) -> Self {
        let normal = Normal::new(0.0, 10.0).expect("valid normal");
        let mut rng = stream(cfg.seed, 0);
        let a = (0..cfg.m)
            .map(|_| (0..cfg.n).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let c = (0..cfg.n).map(|_| normal.sample(&mut rng)).collect();
        let mut l = Vec::with_capacity(cfg.n);
        let mut u = Vec::with_capacity(cfg.n);
        for _ in 0..cfg.n {
            let (mut lo, mut hi) = (normal.sample(&mut rng), normal.sample(&mut rng));
            while lo == hi {
                hi = normal.sample(&mut rng);
            }
            if lo > hi {
                std::mem::swap(&mut lo, &mut hi);
            }
            l.push(lo);
            u.push(hi);
        }
        Self { a, c, l, u }
    }

    fn instance(&self, name: String, b: Vec<f64>) -> MilpInstance {
        let n = self.c.len();
        let mut constraints = Vec::with_capacity(b.len() + 2 * n);
        for (row, &bj) in self.a.iter().zip(&b) {
            let coeffs = row.iter().copied().enumerate().collect();
            constraints.push(Constraint::new(coeffs, bj, true).expect("finite"));
        }
        for i in 0..n {
            // l_i y_i - x_i <= 0 and x_i - u_i y_i <= 0
            constraints.push(
                Constraint::new(vec![(i, -1.0), (n + i, self.l[i])], 0.0, false).expect("finite"),
            );
            constraints.push(
                Constraint::new(vec![(i, 1.0), (n + i, -self.u[i])], 0.0, false).expect("finite"),
            );
        }
        let mut objective = self.c.clone();
        objective.extend(std::iter::repeat_n(0.0, n));
        let mut var_bounds = vec![VarBound::FREE; n];
        var_bounds.extend(std::iter::repeat_n(VarBound::new(Some(0.0), Some(1.0)), n));
        MilpInstance {
            name,
            num_continuous: n,
            num_integer: n,
            objective,
            var_bounds,
            constraints,
            theta: b,
        }
    }
}

/// Synthetic family: `min c^T x` s.t. `sum_i a_ij x_i <= b_j` (learnable) and
/// `l_i y_i <= x_i <= u_i y_i` (always kept), `y` binary, `theta = b`.
pub fn gen_synthetic(cfg: &SyntheticFamilyConfig) -> Result<Vec<MilpInstance>> {
    check_dims(cfg.n, cfg.m, cfg.t)?;
    let data = SyntheticData::draw(cfg);
    let normal = Normal::new(0.0, 10.0).expect("valid normal");
    let mut out = Vec::with_capacity(cfg.t);
    for t in 0..cfg.t {
        let mut rng = stream(cfg.seed, t as u64 + 1);
        let name = format!("syn_n{}_m{}_s{}_{t:05}", cfg.n, cfg.m, cfg.seed);
        let mut found = None;
        for _ in 0..MAX_RESAMPLES {
            let b = (0..cfg.m).map(|_| normal.sample(&mut rng)).collect();
            let inst = data.instance(name.clone(), b);
            if is_solvable(&inst)? {
                found = Some(inst);
                break;
            }
        }
        out.push(found.ok_or(Error::ResamplingExhausted(MAX_RESAMPLES))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UcFamilyConfig {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub seed: u64,
}

/// Fixed network and fleet shared by every UC instance.
struct UcData {
    /// `ptdf[j][i]`: flow on monitored line `j` per unit injection at node `i`.
    ptdf: Vec<Vec<f64>>,
    flow_limit: Vec<f64>,
    cost: Vec<f64>,
    pmin: Vec<f64>,
    pmax: Vec<f64>,
    /// Share of total demand located at each node.
    share: Vec<f64>,
}

/// Hourly demand shape on `[0, 1]`: night trough, morning ramp, evening peak.
fn hourly_shape(hour: usize) -> f64 {
    use std::f64::consts::PI;
    let h = hour as f64;
    let daily = 0.5 - 0.5 * (2.0 * PI * (h - 4.0) / 24.0).cos();
    let evening = (-((h - 19.0) / 2.5).powi(2)).exp();
    (0.75 * daily + 0.25 * evening).clamp(0.0, 1.0)
}

/// Inverts a dense square matrix by Gauss-Jordan with partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

impl UcData {
    fn draw(cfg: &UcFamilyConfig) -> Self {
        let n = cfg.n;
        let mut rng = stream(cfg.seed, 0);
        // Connected network: random spanning tree plus extra distinct lines.
        let lines_total = cfg.m.max(n.saturating_sub(1));
        let mut lines: Vec<(usize, usize, f64)> = Vec::with_capacity(lines_total);
        for i in 1..n {
            let j = rng.random_range(0..i);
            lines.push((j, i, rng.random_range(0.1..1.0)));
        }
        let mut guard = 0;
        while lines.len() < lines_total {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            // Parallel lines only once distinct pairs are effectively exhausted.
            guard += 1;
            let dup = lines
                .iter()
                .any(|&(x, y, _)| (x, y) == (a.min(b), a.max(b)));
            if dup && guard < 10_000 {
                continue;
            }
            lines.push((a.min(b), a.max(b), rng.random_range(0.1..1.0)));
        }
        // Shuffle so monitored lines mix tree and mesh edges.
        for k in (1..lines.len()).rev() {
            let s = rng.random_range(0..=k);
            lines.swap(k, s);
        }

        // PTDF with node 0 as slack: flow_e = (theta_from - theta_to) / x_e,
        // theta = X * injection with X = inverse reduced susceptance matrix.
        let mut ptdf = vec![vec![0.0; n]; cfg.m];
        if n > 1 {
            let mut bmat = vec![vec![0.0; n - 1]; n - 1];
            for &(f, t, x) in &lines {
                let y = 1.0 / x;
                for (p, q) in [(f, t), (t, f)] {
                    if p > 0 {
                        bmat[p - 1][p - 1] += y;
                        if q > 0 {
                            bmat[p - 1][q - 1] -= y;
                        }
                    }
                }
            }
            let xmat = invert(bmat).expect("connected network has a nonsingular reduced B");
            let theta = |node: usize, inj: usize| -> f64 {
                if node == 0 || inj == 0 {
                    0.0
                } else {
                    xmat[node - 1][inj - 1]
                }
            };
            for (j, &(f, t, x)) in lines.iter().take(cfg.m).enumerate() {
                for (i, v) in ptdf[j].iter_mut().enumerate() {
                    *v = (theta(f, i) - theta(t, i)) / x;
                }
            }
        }

        let pmax: Vec<f64> = (0..n).map(|_| rng.random_range(50.0..200.0)).collect();
        let pmin: Vec<f64> = pmax
            .iter()
            .map(|u| u * rng.random_range(0.2..0.5))
            .collect();
        let cost: Vec<f64> = (0..n).map(|_| rng.random_range(10.0..60.0)).collect();
        let raw_share: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw_share.iter().sum();
        let share: Vec<f64> = raw_share.iter().map(|s| s / total).collect();

        // Line limits from flows of a merit-order dispatch at mid demand,
        // scaled so some lines congest. The floor lets a capacity-proportional
        // dispatch serve peak demand, so every hour stays feasible.
        let capacity: f64 = pmax.iter().sum();
        let mid = 0.55 * capacity;
        let peak = 0.80 * capacity;
        let dispatch = merit_order(&cost, &pmax, mid);
        let flow_limit = ptdf
            .iter()
            .map(|row| {
                let flow = |inj: &dyn Fn(usize) -> f64| -> f64 {
                    row.iter()
                        .enumerate()
                        .map(|(i, a)| a * inj(i))
                        .sum::<f64>()
                        .abs()
                };
                let merit = flow(&|i| dispatch[i] - share[i] * mid);
                let prop = flow(&|i| pmax[i] * peak / capacity - share[i] * peak);
                (merit * rng.random_range(0.9..1.6))
                    .max(1.25 * prop)
                    .max(5.0)
            })
            .collect();
        Self {
            ptdf,
            flow_limit,
            cost,
            pmin,
            pmax,
            share,
        }
    }

    fn instance(&self, name: String, demand: Vec<f64>) -> MilpInstance {
        let n = self.cost.len();
        let total: f64 = demand.iter().sum();
        let mut raw = Vec::with_capacity(2 + 2 * self.ptdf.len() + 2 * n);
        raw.push(RawConstraint::new(
            (0..n).map(|i| (i, 1.0)).collect(),
            Sense::Eq,
            total,
            false,
        ));
        for (row, &f) in self.ptdf.iter().zip(&self.flow_limit) {
            let coeffs: Vec<(usize, f64)> = row
                .iter()
                .enumerate()
                .filter(|(_, a)| a.abs() > 1e-12)
                .map(|(i, &a)| (i, a))
                .collect();
            let offset: f64 = row.iter().zip(&demand).map(|(a, d)| a * d).sum();
            raw.push(RawConstraint::new(
                coeffs.clone(),
                Sense::Le,
                f + offset,
                true,
            ));
            raw.push(RawConstraint::new(coeffs, Sense::Ge, offset - f, true));
        }
        for i in 0..n {
            raw.push(RawConstraint::new(
                vec![(i, 1.0), (n + i, -self.pmin[i])],
                Sense::Ge,
                0.0,
                false,
            ));
            raw.push(RawConstraint::new(
                vec![(i, 1.0), (n + i, -self.pmax[i])],
                Sense::Le,
                0.0,
                false,
            ));
        }
        let constraints = raw
            .iter()
            .flat_map(|r| canonicalize(r).expect("finite UC data"))
            .collect();
        let mut objective = self.cost.clone();
        objective.extend(std::iter::repeat_n(0.0, n));
        let mut var_bounds = vec![VarBound::FREE; n];
        var_bounds.extend(std::iter::repeat_n(VarBound::new(Some(0.0), Some(1.0)), n));
        MilpInstance {
            name,
            num_continuous: n,
            num_integer: n,
            objective,
            var_bounds,
            constraints,
            theta: demand,
        }
    }
}

fn merit_order(cost: &[f64], pmax: &[f64], total: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..cost.len()).collect();
    order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
    let mut left = total;
    let mut out = vec![0.0; cost.len()];
    for i in order {
        let take = left.min(pmax[i]).max(0.0);
        out[i] = take;
        left -= take;
    }
    out
}

/// DC unit commitment: `min c^T x` s.t. power balance (two rows, kept),
/// `2m` PTDF line-limit rows (learnable) and `l_i y_i <= x_i <= u_i y_i`
/// (kept), `theta = d`.
///
/// Hour `t` of day `t / 24` draws total demand from a daily shape, a day
/// factor (weekends lower) and noise, mapped into `[30%, 80%]` of fleet
/// capacity, then spread over nodes by fixed shares with per-node noise.
pub fn gen_uc(cfg: &UcFamilyConfig) -> Result<Vec<MilpInstance>> {
    check_dims(cfg.n, cfg.m, cfg.t)?;
    let data = UcData::draw(cfg);
    let capacity: f64 = data.pmax.iter().sum();
    let day_noise = Normal::new(1.0, 0.04).expect("valid normal");
    let node_noise: Normal<f64> = Normal::new(1.0, 0.08).expect("valid normal");
    let mut day_factor = Vec::new();
    let mut drng = stream(cfg.seed, u64::MAX);
    for day in 0..cfg.t.div_ceil(24) {
        let weekend = if day % 7 >= 5 { 0.8 } else { 1.0 };
        day_factor.push(weekend * day_noise.sample(&mut drng));
    }
    let mut out = Vec::with_capacity(cfg.t);
    for t in 0..cfg.t {
        let mut rng = stream(cfg.seed, t as u64 + 1);
        let name = format!("uc_n{}_m{}_s{}_{t:05}", cfg.n, cfg.m, cfg.seed);
        let mut found = None;
        for _ in 0..MAX_RESAMPLES {
            let level = (hourly_shape(t % 24) * day_factor[t / 24] + rng.random_range(-0.05..0.05))
                .clamp(0.0, 1.0);
            let total = capacity * (0.30 + 0.50 * level);
            let raw: Vec<f64> = data
                .share
                .iter()
                .map(|s| s * node_noise.sample(&mut rng).max(0.1))
                .collect();
            let norm: f64 = raw.iter().sum();
            let demand: Vec<f64> = raw.iter().map(|r| total * r / norm).collect();
            let inst = data.instance(name.clone(), demand);
            if is_solvable(&inst)? {
                found = Some(inst);
                break;
            }
        }
        out.push(found.ok_or(Error::ResamplingExhausted(MAX_RESAMPLES))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_rhs_in_canonical_order() {
        let toy = gen_toy();
        assert_eq!(toy.len(), 4);
        let rhs: Vec<f64> = toy[0].constraints.iter().map(|c| c.rhs).collect();
        assert_eq!(rhs, vec![1.5, 1.75, -0.5, -1.0, 0.0, 2.25]);
        assert_eq!(toy[3].theta, vec![1.3]);
        assert!(toy
            .iter()
            .all(|i| i.constraints.iter().all(|c| c.learnable)));
    }

    #[test]
    fn synthetic_structure() {
        let cfg = SyntheticFamilyConfig {
            n: 6,
            m: 3,
            t: 4,
            seed: 3,
        };
        let fam = gen_synthetic(&cfg).unwrap();
        assert_eq!(fam.len(), 4);
        for inst in &fam {
            inst.validate().unwrap();
            assert_eq!(inst.num_constraints(), 3 + 12);
            assert_eq!(inst.learnable_ids(), vec![0, 1, 2]);
            assert_eq!(inst.theta.len(), 3);
            assert!(inst.same_family(&fam[0]));
            for (a, b) in inst.constraints.iter().zip(&fam[0].constraints) {
                assert_eq!(a.coeffs, b.coeffs);
            }
        }
        assert_ne!(fam[0].theta, fam[1].theta);
        assert_eq!(gen_synthetic(&cfg).unwrap(), fam);
    }

    #[test]
    fn synthetic_bounds_ordered() {
        let cfg = SyntheticFamilyConfig {
            n: 40,
            m: 2,
            t: 1,
            seed: 9,
        };
        let data = SyntheticData::draw(&cfg);
        assert!(data.l.iter().zip(&data.u).all(|(l, u)| l < u));
    }

    #[test]
    fn uc_structure() {
        let cfg = UcFamilyConfig {
            n: 6,
            m: 7,
            t: 30,
            seed: 5,
        };
        let fam = gen_uc(&cfg).unwrap();
        assert_eq!(fam.len(), 30);
        let inst = &fam[0];
        inst.validate().unwrap();
        assert_eq!(inst.num_constraints(), 2 + 14 + 12);
        assert_eq!(inst.learnable_ids(), (2..16).collect::<Vec<_>>());
        let cap: f64 = (0..6)
            .map(|i| -inst.constraints[16 + 2 * i + 1].coeffs[1].1)
            .sum();
        for i in &fam {
            assert_eq!(i.theta.len(), 6);
            let d: f64 = i.theta.iter().sum();
            assert!(
                d >= 0.3 * cap - 1e-9 && d <= 0.8 * cap + 1e-9,
                "{d} vs {cap}"
            );
        }
    }

    #[test]
    fn uc_tree_network_when_few_lines() {
        let cfg = UcFamilyConfig {
            n: 5,
            m: 2,
            t: 2,
            seed: 1,
        };
        let fam = gen_uc(&cfg).unwrap();
        assert_eq!(fam[0].learnable_ids().len(), 4);
    }

    #[test]
    fn zero_dims_rejected() {
        let cfg = SyntheticFamilyConfig {
            n: 0,
            m: 1,
            t: 1,
            seed: 0,
        };
        assert!(matches!(gen_synthetic(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn invert_small() {
        let inv = invert(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((inv[0][0] - 0.6).abs() < 1e-12 && (inv[0][1] + 0.2).abs() < 1e-12);
        assert!(invert(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }
}

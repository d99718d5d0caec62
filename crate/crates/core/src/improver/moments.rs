//! Moments of the progression-class sums `Z_0..Z_7` under a uniform `(m, t)`.
//!
//! Classes by where `(n, n+d, n+2d)` fall: AAA, AAB, ABA, BAA, ABB, BAB, BBA, BBB.
//! `W_i` is the class sum for f, `Z_i` the same for g. Since g vanishes off
//! `A ∪ B`, `p^2 Lambda(g) = sum_i Z_i`.

use rayon::prelude::*;
use serde::Serialize;

use super::{build_g, SurgeryPlan};
use crate::lambda::count_t3;
use crate::rng::stream_rng;
use crate::zp::{affine_image, GridFn, IndicatorSet};

/// Multiplier on the `O(p)` and `O(1)` error terms.
pub const DEFAULT_SLACK: f64 = 5.0;
const CHUNK: usize = 256;
const OUTSIDE: u8 = 2;

/// 0 on A, 1 on B, 2 elsewhere.
pub(crate) fn classes(a: &IndicatorSet, b: &IndicatorSet) -> Vec<u8> {
    (0..a.field().p())
        .map(|n| if a.contains(n) { 0 } else if b.contains(n) { 1 } else { OUTSIDE })
        .collect()
}

/// `[W_0, ..., W_7]` over all ordered `(n, d)`.
pub fn class_sums(h: &GridFn, cls: &[u8]) -> [f64; 8] {
    let p = h.p();
    let v = h.values();
    let mut out = [0.0; 8];
    for n in 0..p {
        if cls[n] == OUTSIDE || v[n] == 0.0 {
            continue;
        }
        for d in 0..p {
            let n1 = (n + d) % p;
            let n2 = (n1 + d) % p;
            if cls[n1] == OUTSIDE || cls[n2] == OUTSIDE {
                continue;
            }
            let idx = match (cls[n], cls[n1], cls[n2]) {
                (0, 0, 0) => 0,
                (0, 0, 1) => 1,
                (0, 1, 0) => 2,
                (1, 0, 0) => 3,
                (0, 1, 1) => 4,
                (1, 0, 1) => 5,
                (1, 1, 0) => 6,
                _ => 7,
            };
            out[idx] += v[n] * v[n1] * v[n2];
        }
    }
    out
}

/// Exact expectations under uniform `(m, t)` in `F_p^2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentPredictions {
    pub w: [f64; 8],
    /// `E(Z_i)`.
    pub z: [f64; 8],
    /// `F = sum_A f`.
    pub f_mass: f64,
    pub g_mean: f64,
    pub g_var: f64,
    /// `Cov(g(a), g(b)) / (f(a) f(b))` for distinct `a, b` in A.
    pub pair_cov_factor: f64,
    /// `P(a in T) = ((p-1)|S| + 1) / p^2`.
    pub q1: f64,
    /// `P(a, b in T) = |S|(|S|-1) / p^2` for `a != b`.
    pub q2: f64,
    /// `T_3(S) / p^2`.
    pub q3: f64,
}

/// Each `(x, y)` of distinct template points lands on a given distinct pair
/// under exactly one `(m, t)`, and each nondegenerate template progression on
/// a given progression under exactly one. A single point is hit `|S|` times
/// for each nonzero m, and once more by `m = 0`.
pub fn moment_predictions(f: &GridFn, plan: &SurgeryPlan) -> MomentPredictions {
    let p = f.p() as f64;
    let s = plan.template.len() as f64;
    let q1 = ((p - 1.0) * s + 1.0) / (p * p);
    let q2 = s * (s - 1.0) / (p * p);
    let q3 = count_t3(&plan.template) as f64 / (p * p);
    let k = 1.0 / (1.0 - plan.eps);
    let w = class_sums(f, &classes(&plan.a, &plan.b));
    let cube: f64 = plan.a.iter().map(|n| f.get(n).powi(3)).sum();
    let square: f64 = plan.a.iter().map(|n| f.get(n).powi(2)).sum();
    let f_mass: f64 = plan.a.iter().map(|n| f.get(n)).sum();
    let mut z = [0.0; 8];
    z[0] = k.powi(3) * (q3 * (w[0] - cube) + q1 * cube);
    for i in 1..=3 {
        z[i] = k * k * q2 * w[i];
    }
    for i in 4..=6 {
        z[i] = k * q1 * w[i];
    }
    z[7] = w[7];
    let g_mean = k * q1 * f_mass;
    let g_sq = k * k * (q1 * square + q2 * (f_mass * f_mass - square));
    MomentPredictions {
        w,
        z,
        f_mass,
        g_mean,
        g_var: g_sq - g_mean * g_mean,
        pair_cov_factor: k * k * (q2 - q1 * q1),
        q1,
        q2,
        q3,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMode {
    /// Every `(m, t)` once.
    Exhaustive,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub mode: MomentMode,
    pub samples: usize,
    pub slack: f64,
    pub z0_mean: f64,
    pub z0_pred: f64,
    /// `(1 - eps^2/2) W_0 + C p`.
    pub z0_band: f64,
    pub zi_means: [f64; 6],
    pub zi_preds: [f64; 6],
    /// Standard errors of `Z_0..Z_7` (zero in exhaustive mode).
    pub z_se: [f64; 8],
    pub z_means: [f64; 8],
    pub w: [f64; 8],
    pub g_mean: f64,
    pub g_mean_pred: f64,
    pub g_mean_se: f64,
    pub g_mean_var: f64,
    pub g_var_pred: f64,
    pub f_mass: f64,
    /// Largest `|Cov(g(a), g(b))|` over distinct a, b in A.
    pub max_pair_cov: f64,
    pub max_pair_cov_pred: f64,
    /// Fraction of draws meeting both acceptance conditions of the improver.
    pub success_rate: f64,
    pub z0_in_band: bool,
    pub zi_in_band: bool,
    pub g_mean_in_band: bool,
    pub g_var_in_band: bool,
    pub pairs_independent: bool,
    /// Exhaustive: means equal the exact expectations. Sampled: within 4 standard errors.
    pub matches_prediction: bool,
}

impl MomentReport {
    pub fn pass(&self) -> bool {
        self.z0_in_band
            && self.zi_in_band
            && self.g_mean_in_band
            && self.g_var_in_band
            && self.pairs_independent
            && self.matches_prediction
    }
}

#[derive(Clone)]
struct Acc {
    n: usize,
    z: [f64; 8],
    z2: [f64; 8],
    g: f64,
    g2: f64,
    /// Sums of `g(a)` and `g(a) g(b)` over the members of A, in order.
    ga: Vec<f64>,
    gab: Vec<f64>,
    success: usize,
}

impl Acc {
    fn new(k: usize) -> Self {
        Self { n: 0, z: [0.0; 8], z2: [0.0; 8], g: 0.0, g2: 0.0, ga: vec![0.0; k], gab: vec![0.0; k * k], success: 0 }
    }

    fn merge(mut self, o: Acc) -> Acc {
        self.n += o.n;
        for i in 0..8 {
            self.z[i] += o.z[i];
            self.z2[i] += o.z2[i];
        }
        self.g += o.g;
        self.g2 += o.g2;
        self.ga.iter_mut().zip(&o.ga).for_each(|(x, y)| *x += y);
        self.gab.iter_mut().zip(&o.gab).for_each(|(x, y)| *x += y);
        self.success += o.success;
        self
    }
}

struct Sampler<'a> {
    f: &'a GridFn,
    plan: &'a SurgeryPlan,
    cls: Vec<u8>,
    a_members: Vec<usize>,
    lambda_target: f64,
    mean_floor: f64,
}

impl Sampler<'_> {
    fn add(&self, acc: &mut Acc, m: usize, t: usize) {
        let g = build_g(self.f, self.plan, &affine_image(&self.plan.template, m, t)).expect("plan invariants hold");
        let z = class_sums(&g, &self.cls);
        acc.n += 1;
        for i in 0..8 {
            acc.z[i] += z[i];
            acc.z2[i] += z[i] * z[i];
        }
        let vals: Vec<f64> = self.a_members.iter().map(|&n| g.get(n)).collect();
        let gsum: f64 = vals.iter().sum();
        acc.g += gsum;
        acc.g2 += gsum * gsum;
        let k = vals.len();
        for (i, &x) in vals.iter().enumerate() {
            acc.ga[i] += x;
            if x != 0.0 {
                for (j, &y) in vals.iter().enumerate() {
                    acc.gab[i * k + j] += x * y;
                }
            }
        }
        let p = self.f.p() as f64;
        if z.iter().sum::<f64>() / (p * p) <= self.lambda_target && g.mean() >= self.mean_floor {
            acc.success += 1;
        }
    }
}

/// Moments of `Z_0..Z_7`, of `G = sum_A g`, and of pairs `g(a) g(b)`.
///
/// `samples = None` enumerates all `p^2` pairs `(m, t)`. Otherwise draws are
/// split into fixed chunks, each with its own stream derived from `seed`, and
/// merged in chunk order, so the result does not depend on scheduling.
pub fn monte_carlo_moments(f: &GridFn, plan: &SurgeryPlan, samples: Option<usize>, seed: u64, slack: f64) -> MomentReport {
    let p = f.p();
    let pf = p as f64;
    let pred = moment_predictions(f, plan);
    let a_members = plan.a.members();
    let k = a_members.len();
    let sampler = Sampler {
        f,
        plan,
        cls: classes(&plan.a, &plan.b),
        a_members: a_members.clone(),
        lambda_target: pred.w.iter().sum::<f64>() / (pf * pf) - plan.eps * plan.eps * pred.w[0] / (4.0 * pf * pf),
        mean_floor: f.mean() - 2.0 * plan.beta,
    };
    let (mode, acc) = match samples {
        None => {
            let parts: Vec<Acc> = (0..p)
                .into_par_iter()
                .map(|m| {
                    let mut acc = Acc::new(k);
                    for t in 0..p {
                        sampler.add(&mut acc, m, t);
                    }
                    acc
                })
                .collect();
            (MomentMode::Exhaustive, parts.into_iter().fold(Acc::new(k), Acc::merge))
        }
        Some(total) => {
            let chunks = total.div_ceil(CHUNK);
            let parts: Vec<Acc> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    use rand::Rng;
                    let mut rng = stream_rng(seed, &format!("improver/moments/{c}"));
                    let mut acc = Acc::new(k);
                    for _ in 0..CHUNK.min(total - c * CHUNK) {
                        let (m, t) = (rng.random_range(0..p), rng.random_range(0..p));
                        sampler.add(&mut acc, m, t);
                    }
                    acc
                })
                .collect();
            (MomentMode::MonteCarlo, parts.into_iter().fold(Acc::new(k), Acc::merge))
        }
    };

    let n = acc.n as f64;
    let mean = |s: f64| s / n;
    // population variance in exhaustive mode, sample variance otherwise
    let var = |s: f64, s2: f64| {
        let v = s2 / n - (s / n).powi(2);
        match mode {
            MomentMode::Exhaustive => v.max(0.0),
            MomentMode::MonteCarlo => (v * n / (n - 1.0)).max(0.0),
        }
    };
    let se = |s: f64, s2: f64| match mode {
        MomentMode::Exhaustive => 0.0,
        MomentMode::MonteCarlo => (var(s, s2) / n).sqrt(),
    };
    let z_means: [f64; 8] = std::array::from_fn(|i| mean(acc.z[i]));
    let z_se: [f64; 8] = std::array::from_fn(|i| se(acc.z[i], acc.z2[i]));
    let g_mean = mean(acc.g);
    let g_var = var(acc.g, acc.g2);
    let g_se = se(acc.g, acc.g2);

    let mut max_cov: f64 = 0.0;
    let mut max_cov_pred: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let cov = mean(acc.gab[i * k + j]) - mean(acc.ga[i]) * mean(acc.ga[j]);
                max_cov = max_cov.max(cov.abs());
                let fa = f.get(a_members[i]) * f.get(a_members[j]);
                max_cov_pred = max_cov_pred.max((pred.pair_cov_factor * fa).abs());
            }
        }
    }

    let close = |x: f64, want: f64, se: f64| match mode {
        MomentMode::Exhaustive => (x - want).abs() <= 1e-9 * want.abs().max(1.0),
        MomentMode::MonteCarlo => (x - want).abs() <= 4.0 * se + 1e-9 * want.abs().max(1.0),
    };
    let matches_prediction = (0..8).all(|i| close(z_means[i], pred.z[i], z_se[i])) && close(g_mean, pred.g_mean, g_se);

    let w = pred.w;
    let z0_band = (1.0 - plan.eps * plan.eps / 2.0) * w[0] + slack * pf;
    MomentReport {
        mode,
        samples: acc.n,
        slack,
        z0_mean: z_means[0],
        z0_pred: pred.z[0],
        z0_band,
        zi_means: std::array::from_fn(|i| z_means[i + 1]),
        zi_preds: std::array::from_fn(|i| pred.z[i + 1]),
        z_se,
        z_means,
        w,
        g_mean,
        g_mean_pred: pred.g_mean,
        g_mean_se: g_se,
        g_mean_var: g_var,
        g_var_pred: pred.g_var,
        f_mass: pred.f_mass,
        max_pair_cov: max_cov,
        max_pair_cov_pred: max_cov_pred,
        success_rate: acc.success as f64 / n,
        z0_in_band: z_means[0] <= z0_band,
        zi_in_band: (1..7).all(|i| (z_means[i] - w[i]).abs() <= slack * pf),
        g_mean_in_band: (g_mean - pred.f_mass).abs() <= slack,
        g_var_in_band: g_var <= slack * pf,
        pairs_independent: max_cov <= slack / pf,
        matches_prediction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::zp::PrimeField;
    use rand::Rng;

    fn instance(p: u64, seed: u64, eps: f64) -> (GridFn, SurgeryPlan) {
        let field = PrimeField::new(p).unwrap();
        let mut rng = stream_rng(seed, "moments-test");
        let values: Vec<f64> = (0..p)
            .map(|_| match rng.random_range(0..3) {
                0 => 0.0,
                1 => rng.random_range(eps..1.0 - eps),
                _ => 1.0,
            })
            .collect();
        let f = GridFn::density(field, values).unwrap();
        let plan = SurgeryPlan::from_fuzzy(&f, eps, 1.0).unwrap();
        (f, plan)
    }

    /// Averages computed without the sampler: every `(m, t)` and every class term.
    #[test]
    fn exhaustive_means_match_brute_force_and_closed_form() {
        let (f, plan) = instance(13, 4, 0.25);
        assert!(!plan.a.is_empty() && !plan.b.is_empty());
        let cls = classes(&plan.a, &plan.b);
        let mut sums = [0.0; 8];
        for m in 0..13 {
            for t in 0..13 {
                let g = build_g(&f, &plan, &affine_image(&plan.template, m, t)).unwrap();
                let p = 13;
                for n in 0..p {
                    for d in 0..p {
                        let idx = [n, (n + d) % p, (n + 2 * d) % p];
                        if idx.iter().any(|&x| cls[x] == OUTSIDE) {
                            continue;
                        }
                        let pat = (cls[idx[0]], cls[idx[1]], cls[idx[2]]);
                        let i = [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, 1)]
                            .iter()
                            .position(|&q| q == pat)
                            .unwrap();
                        sums[i] += g.get(idx[0]) * g.get(idx[1]) * g.get(idx[2]);
                    }
                }
            }
        }
        let report = monte_carlo_moments(&f, &plan, None, 0, DEFAULT_SLACK);
        let pred = moment_predictions(&f, &plan);
        for i in 0..8 {
            assert!((sums[i] / 169.0 - report.z_means[i]).abs() < 1e-9);
            assert!((pred.z[i] - report.z_means[i]).abs() < 1e-9, "class {i}");
        }
        assert_eq!(report.samples, 169);
        assert!(report.matches_prediction);
        assert!((report.g_mean_var - pred.g_var).abs() < 1e-9);
    }

    #[test]
    fn empty_fuzzy_region() {
        let field = PrimeField::new(13).unwrap();
        let f = IndicatorSet::from_members(field, [0, 3, 4]).as_gridfn();
        let plan = SurgeryPlan::from_fuzzy(&f, 0.2, 1.0).unwrap();
        let r = monte_carlo_moments(&f, &plan, None, 0, DEFAULT_SLACK);
        assert!(r.pass());
        assert_eq!(r.z_means[7], r.w[7]);
        assert!(r.zi_means.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn sampled_mode_is_deterministic() {
        let (f, plan) = instance(13, 9, 0.2);
        let a = monte_carlo_moments(&f, &plan, Some(700), 5, DEFAULT_SLACK);
        let b = monte_carlo_moments(&f, &plan, Some(700), 5, DEFAULT_SLACK);
        assert_eq!(a, b);
        assert_eq!(a.samples, 700);
    }
}

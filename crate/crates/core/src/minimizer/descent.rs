//! Mass-conserving pair descent on Lambda.
//!
//! Each step moves mass from the coordinate with the largest gradient that
//! still carries mass to the one with the smallest gradient that still has
//! room. Along such a transfer Lambda is an exact quadratic in the amount
//! moved (the cubic terms cancel), so the line search is closed-form.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::LambdaCache;
use crate::rng::{stream_rng, StreamRng};
use crate::zp::{GridFn, PrimeField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Move as much mass as the box allows; fall back to the line search if that overshoots.
    FullTransfer,
    LineSearch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityConstraint {
    /// `E(f) = theta`.
    Exact,
    /// `E(f) >= theta`; excess mass is shed from high-gradient coordinates.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerConfig {
    pub theta: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub step_rule: StepRule,
    pub tol_grad: f64,
    pub tol_level: f64,
    pub seed: u64,
    pub constraint: DensityConstraint,
}

impl MinimizerConfig {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            max_iters: 200_000,
            restarts: 8,
            step_rule: StepRule::LineSearch,
            tol_grad: 1e-9,
            tol_level: 1e-6,
            seed: 0,
            constraint: DensityConstraint::Exact,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!("theta = {} not in (0, 1]", self.theta)));
        }
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig("max_iters and restarts must be >= 1".into()));
        }
        if !(self.tol_grad > 0.0 && self.tol_level > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MinimizerState {
    pub cache: LambdaCache,
    pub iter: usize,
    /// `(iteration, Lambda)` after every accepted move, starting with the initial point.
    pub history: Vec<(usize, f64)>,
    pub converged: bool,
    pub restart: usize,
}

impl MinimizerState {
    pub fn f(&self) -> &GridFn {
        self.cache.h()
    }

    pub fn lambda(&self) -> f64 {
        self.cache.lambda()
    }

    pub fn record(&self) -> StateRecord {
        StateRecord {
            p: self.f().p(),
            values: self.f().values().to_vec(),
            lambda: self.lambda(),
            density: self.f().mean(),
            iter: self.iter,
            converged: self.converged,
            restart: self.restart,
            history: self.history.clone(),
        }
    }
}

/// Serializable snapshot of a [`MinimizerState`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub p: usize,
    pub values: Vec<f64>,
    pub lambda: f64,
    pub density: f64,
    pub iter: usize,
    pub converged: bool,
    pub restart: usize,
    pub history: Vec<(usize, f64)>,
}

/// Uniform values rescaled to mean `theta`, clipping at 1 and spreading the
/// clipped excess over the unsaturated coordinates.
pub fn random_feasible_start(field: PrimeField, theta: f64, rng: &mut StreamRng) -> GridFn {
    let p = field.p();
    let target = theta * p as f64;
    if theta >= 1.0 {
        return GridFn::constant(field, 1.0).expect("1 is in range");
    }
    let mut v: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
    loop {
        let saturated = v.iter().filter(|&&x| x >= 1.0).count() as f64;
        let free: f64 = v.iter().filter(|&&x| x < 1.0).sum();
        let scale = (target - saturated) / free;
        let mut clipped = false;
        for x in v.iter_mut().filter(|x| **x < 1.0) {
            *x *= scale;
            if *x >= 1.0 {
                *x = 1.0;
                clipped = true;
            }
        }
        if !clipped {
            break;
        }
    }
    // absorb the last rounding error into the coordinate with the most room
    let err = target - v.iter().sum::<f64>();
    if let Some(i) = (0..p).filter(|&i| v[i] + err >= 0.0 && v[i] + err <= 1.0).max_by(|&a, &b| {
        let room = |i: usize| v[i].min(1.0 - v[i]);
        room(a).total_cmp(&room(b))
    }) {
        v[i] += err;
    }
    GridFn::density(field, v).expect("values clipped into [0, 1]")
}

fn pick(cands: &[usize], rng: &mut StreamRng) -> usize {
    if cands.len() == 1 {
        cands[0]
    } else {
        cands[rng.random_range(0..cands.len())]
    }
}

/// Steepest admissible pair `(x, y)`: `x` has room to grow, `y` has mass to give.
fn steepest_pair(cache: &LambdaCache, frozen: Option<&[bool]>, rng: &mut StreamRng) -> Option<(usize, usize, f64)> {
    let h = cache.h();
    let p = h.p();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for n in 0..p {
        if frozen.is_some_and(|fz| fz[n]) {
            continue;
        }
        let g = cache.grad_at(n);
        let v = h.get(n);
        if v < 1.0 {
            if g < lo {
                lo = g;
                xs.clear();
            }
            if g == lo {
                xs.push(n);
            }
        }
        if v > 0.0 {
            if g > hi {
                hi = g;
                ys.clear();
            }
            if g == hi {
                ys.push(n);
            }
        }
    }
    if xs.is_empty() || ys.is_empty() {
        return None;
    }
    Some((pick(&xs, rng), pick(&ys, rng), hi - lo))
}

/// Target values for moving `eps` of mass from `y` to `x`, snapping the
/// saturated endpoint to exactly 0 or 1.
fn transfer_values(h: &GridFn, x: usize, y: usize, eps: f64, eps_max: f64) -> (f64, f64) {
    let (hx, hy) = (h.get(x), h.get(y));
    if eps >= eps_max {
        if 1.0 - hx <= hy {
            (1.0, (hy - (1.0 - hx)).clamp(0.0, 1.0))
        } else {
            ((hx + hy).clamp(0.0, 1.0), 0.0)
        }
    } else {
        ((hx + eps).clamp(0.0, 1.0), (hy - eps).clamp(0.0, 1.0))
    }
}

/// Curvature of Lambda along the transfer direction `e_x - e_y`, times `p^2`.
fn transfer_curvature(h: &GridFn, x: usize, y: usize) -> f64 {
    let field = h.field();
    let a = field.sub(field.mul(2, x), y);
    let b = field.sub(field.mul(2, y), x);
    let m = field.half(field.add(x, y));
    3.0 * h.get(x) + 3.0 * h.get(y) - 2.0 * (h.get(a) + h.get(b) + h.get(m))
}

fn line_search_eps(cache: &LambdaCache, x: usize, y: usize, gap: f64, eps_max: f64) -> f64 {
    let curv = transfer_curvature(cache.h(), x, y);
    if curv > 0.0 {
        (gap / (2.0 * curv)).min(eps_max)
    } else {
        eps_max
    }
}

pub(crate) struct DescentOutcome {
    pub iters: usize,
    pub converged: bool,
}

/// Pair descent from the cache's current point. `frozen` coordinates are never moved.
pub(crate) fn descend_in_place(
    cache: &mut LambdaCache,
    config: &MinimizerConfig,
    frozen: Option<&[bool]>,
    rng: &mut StreamRng,
    history: &mut Vec<(usize, f64)>,
) -> DescentOutcome {
    let p = cache.h().p();
    let target_mass = config.theta * p as f64;
    for iter in 0..config.max_iters {
        if config.constraint == DensityConstraint::AtLeast {
            let excess = cache.h().sum() - target_mass;
            if excess > 1e-12
                && shed_excess(cache, frozen, excess) {
                    history.push((iter + 1, cache.lambda()));
                    continue;
                }
        }
        let Some((x, y, gap)) = steepest_pair(cache, frozen, rng) else {
            return DescentOutcome { iters: iter, converged: true };
        };
        if gap <= config.tol_grad {
            return DescentOutcome { iters: iter, converged: true };
        }
        let h = cache.h();
        let eps_max = (1.0 - h.get(x)).min(h.get(y));
        let mut eps = match config.step_rule {
            StepRule::FullTransfer => eps_max,
            StepRule::LineSearch => line_search_eps(cache, x, y, gap, eps_max),
        };
        let (mut vx, mut vy) = transfer_values(h, x, y, eps, eps_max);
        let mut delta = cache.terms(x, y, vx, vy).total();
        if delta >= 0.0 && config.step_rule == StepRule::FullTransfer {
            eps = line_search_eps(cache, x, y, gap, eps_max);
            (vx, vy) = transfer_values(cache.h(), x, y, eps, eps_max);
            delta = cache.terms(x, y, vx, vy).total();
        }
        if delta >= 0.0 {
            // the improving direction is below float resolution; stationary if the gap is within the level tolerance
            return DescentOutcome { iters: iter, converged: gap <= config.tol_level };
        }
        cache.apply_two_point(x, y, vx, vy).expect("transfer stays in range");
        history.push((iter + 1, cache.lambda()));
    }
    DescentOutcome { iters: config.max_iters, converged: false }
}

// Remove mass from the highest-gradient coordinate; Lambda is nondecreasing in every coordinate.
fn shed_excess(cache: &mut LambdaCache, frozen: Option<&[bool]>, excess: f64) -> bool {
    let h = cache.h();
    let p = h.p();
    let Some(y) = (0..p)
        .filter(|&n| h.get(n) > 0.0 && !frozen.is_some_and(|fz| fz[n]))
        .max_by(|&a, &b| cache.grad_at(a).total_cmp(&cache.grad_at(b)))
    else {
        return false;
    };
    let x = (y + 1) % p;
    let vy = (h.get(y) - excess).max(0.0);
    let hx = h.get(x);
    cache.apply_two_point(x, y, hx, vy).is_ok()
}

fn single_run(field: PrimeField, config: &MinimizerConfig, restart: usize) -> MinimizerState {
    let mut rng = stream_rng(config.seed, &format!("minimize/restart/{restart}"));
    let start_theta = match config.constraint {
        DensityConstraint::Exact => config.theta,
        DensityConstraint::AtLeast => config.theta + (1.0 - config.theta) * rng.random::<f64>() / 2.0,
    };
    let mut start = random_feasible_start(field, start_theta, &mut rng);
    if start.is_indicator() && config.theta < 1.0 {
        let ones: Vec<usize> = (0..field.p()).filter(|&n| start.get(n) == 1.0).collect();
        let zeros: Vec<usize> = (0..field.p()).filter(|&n| start.get(n) == 0.0).collect();
        if !ones.is_empty() && !zeros.is_empty() {
            let (x, y) = (pick(&ones, &mut rng), pick(&zeros, &mut rng));
            start.set(x, 0.9).expect("in range");
            start.set(y, 0.1).expect("in range");
        }
    }
    let mut cache = LambdaCache::new(start);
    let mut history = vec![(0, cache.lambda())];
    let outcome = descend_in_place(&mut cache, config, None, &mut rng, &mut history);
    MinimizerState { cache, iter: outcome.iters, history, converged: outcome.converged, restart }
}

/// Minimize Lambda over `[0,1]`-valued functions of density theta.
///
/// Restarts run in parallel from independent seeded starts; the result is the
/// lowest Lambda, ties going to the lowest restart index.
pub fn minimize(field: PrimeField, config: &MinimizerConfig) -> Result<MinimizerState> {
    config.validate()?;
    let p = field.p();
    if config.theta * (p as f64) < 1.0 - 1e-12 {
        return Err(Error::InfeasibleDensity { theta: config.theta, p });
    }
    if config.theta >= 1.0 {
        let cache = LambdaCache::new(GridFn::constant(field, 1.0)?);
        let history = vec![(0, cache.lambda())];
        return Ok(MinimizerState { cache, iter: 0, history, converged: true, restart: 0 });
    }
    let runs: Vec<MinimizerState> =
        (0..config.restarts).into_par_iter().map(|r| single_run(field, config, r)).collect();
    let mut best: Option<MinimizerState> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.lambda() < b.lambda()) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::lambda_direct;

    #[test]
    fn start_has_exact_density() {
        let field = PrimeField::new(97).unwrap();
        let mut rng = stream_rng(1, "t");
        for theta in [0.01, 0.3, 0.5, 0.9, 0.99] {
            let f = random_feasible_start(field, theta, &mut rng);
            assert!((f.mean() - theta).abs() < 1e-12, "{theta}");
        }
    }

    #[test]
    fn full_density_is_immediate() {
        let field = PrimeField::new(7).unwrap();
        let s = minimize(field, &MinimizerConfig::new(1.0)).unwrap();
        assert_eq!(s.lambda(), 1.0);
        assert!(s.converged);
    }

    #[test]
    fn infeasible_density() {
        let field = PrimeField::new(7).unwrap();
        assert!(matches!(minimize(field, &MinimizerConfig::new(0.1)), Err(Error::InfeasibleDensity { .. })));
    }

    #[test]
    fn history_is_monotone_and_mass_conserved() {
        let field = PrimeField::new(31).unwrap();
        for rule in [StepRule::LineSearch, StepRule::FullTransfer] {
            let mut cfg = MinimizerConfig::new(0.4).with_seed(3).with_restarts(2);
            cfg.step_rule = rule;
            let s = minimize(field, &cfg).unwrap();
            assert!(s.converged);
            assert!((s.f().mean() - 0.4).abs() < 1e-12);
            assert!(s.history.windows(2).all(|w| w[1].1 < w[0].1));
            assert!((s.lambda() - lambda_direct(s.f())).abs() < 1e-10);
        }
    }

    #[test]
    fn at_least_mode_settles_on_the_boundary() {
        let field = PrimeField::new(31).unwrap();
        let mut cfg = MinimizerConfig::new(0.3).with_seed(5).with_restarts(2);
        cfg.constraint = DensityConstraint::AtLeast;
        let s = minimize(field, &cfg).unwrap();
        assert!(s.f().mean() >= 0.3 - 1e-12);
        assert!((s.f().mean() - 0.3).abs() < 1e-9);
    }
}

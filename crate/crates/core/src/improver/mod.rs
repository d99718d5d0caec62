//! Random dilate-translate surgery on the fuzzy region of a density, as an
//! improvement step and as an exact or sampled check of its moments.

mod audit;
mod moments;

pub use audit::{minimality_gap_audit, GapRow};
pub use moments::{
    class_sums, monte_carlo_moments, moment_predictions, MomentMode, MomentPredictions, MomentReport, DEFAULT_SLACK,
};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lambda::{gradient_field, interval_lambda_check, lambda_direct, IntervalSlack};
use crate::minimizer::fuzzy_region;
use crate::rng::StreamRng;
use crate::zp::{affine_image, GridFn, IndicatorSet};

/// Values on A may sit this far above `1 - eps` from float noise.
const VALUE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SurgeryPlan {
    pub a: IndicatorSet,
    pub b: IndicatorSet,
    pub eps: f64,
    pub beta: f64,
    /// Interval of size `floor((1 - eps) p)`.
    pub template: IndicatorSet,
}

impl SurgeryPlan {
    pub fn new(f: &GridFn, a: IndicatorSet, b: IndicatorSet, eps: f64, beta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0 / 3.0) {
            return Err(Error::EpsOutOfRange(eps));
        }
        if !(beta > 0.0) {
            return Err(Error::PlanInvariant(format!("beta = {beta} must be positive")));
        }
        if !a.is_disjoint(&b) {
            return Err(Error::PlanInvariant("A and B overlap".into()));
        }
        if a.union(&b) != f.support() {
            return Err(Error::PlanInvariant("A and B do not partition the support".into()));
        }
        if let Some(n) = a.iter().find(|&n| f.get(n) > 1.0 - eps + VALUE_TOL) {
            return Err(Error::PlanInvariant(format!("f({n}) = {} exceeds 1 - eps on A", f.get(n))));
        }
        let (template, _, _) = interval_lambda_check(1.0 - eps, f.field(), IntervalSlack::default())?;
        Ok(Self { a, b, eps, beta, template })
    }

    /// A is the fuzzy region `{eps <= f <= 1 - eps}`, B the rest of the support.
    pub fn from_fuzzy(f: &GridFn, eps: f64, beta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0 / 3.0) {
            return Err(Error::EpsOutOfRange(eps));
        }
        let a = fuzzy_region(f, eps)?;
        let b = f.support().difference(&a);
        Self::new(f, a, b, eps, beta)
    }

    /// `eps beta >= p^{-1/2} log p`, the regime where success is guaranteed.
    pub fn certified(&self) -> bool {
        self.eps * self.beta >= certification_threshold(self.a.field().p())
    }
}

pub fn certification_threshold(p: usize) -> f64 {
    let p = p as f64;
    p.ln() / p.sqrt()
}

/// The smallest beta for which a plan at `eps` is certified.
pub fn certified_beta(p: usize, eps: f64) -> f64 {
    certification_threshold(p) / eps
}

/// A random density with a sizable fuzzy region: each value is 0, uniform in
/// `[eps, 1 - eps]`, or 1 with probabilities 0.3, 0.4, 0.3. The plan takes A
/// as the fuzzy region.
pub fn random_instance(field: crate::zp::PrimeField, eps: f64, beta: f64, rng: &mut StreamRng) -> Result<(GridFn, SurgeryPlan)> {
    let values = (0..field.p())
        .map(|_| {
            let u: f64 = rng.random();
            if u < 0.3 {
                0.0
            } else if u < 0.7 {
                rng.random_range(eps..=1.0 - eps)
            } else {
                1.0
            }
        })
        .collect();
    let f = GridFn::density(field, values)?;
    let plan = SurgeryPlan::from_fuzzy(&f, eps, beta)?;
    Ok((f, plan))
}

/// `m.S + t`; uniform `m` (zero included) and `t` when not given.
pub fn random_dilate_translate(s: &IndicatorSet, m: Option<usize>, t: Option<usize>, rng: &mut StreamRng) -> IndicatorSet {
    let p = s.field().p();
    let m = m.unwrap_or_else(|| rng.random_range(0..p));
    let t = t.unwrap_or_else(|| rng.random_range(0..p));
    affine_image(s, m, t)
}

/// `f` on B, `(1 - eps)^{-1} f 1_T` on A, zero elsewhere.
pub fn build_g(f: &GridFn, plan: &SurgeryPlan, t: &IndicatorSet) -> Result<GridFn> {
    let scale = 1.0 / (1.0 - plan.eps);
    let mut values = vec![0.0; f.p()];
    for n in plan.b.iter() {
        values[n] = f.get(n);
    }
    for n in plan.a.iter().filter(|&n| t.contains(n)) {
        let v = scale * f.get(n);
        if v > 1.0 + VALUE_TOL {
            return Err(Error::RangeViolation { index: n, value: v });
        }
        values[n] = v.min(1.0);
    }
    GridFn::density(f.field(), values)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImproveReport {
    pub accepted: bool,
    pub tries: usize,
    /// The dilation and translation of the accepted (or best) draw.
    pub m: usize,
    pub t: usize,
    pub w0: f64,
    pub lambda_f: f64,
    /// Before the repair step.
    pub lambda_draw: f64,
    pub lambda_g: f64,
    pub mean_f: f64,
    pub mean_g: f64,
    /// Coordinates of A raised from 0 to 1 by the repair step.
    pub repaired: usize,
    /// `ceil(2 beta p)`.
    pub repair_cap: usize,
    /// `Lambda(g) < Lambda(f) + 2 beta - eps^2 W_0 / (4 p^2) + C/p` after repair.
    pub final_bound_ok: bool,
    pub certified: bool,
    #[serde(skip)]
    pub g: GridFn,
}

/// `W_0`: all ordered `(a, d)`, `d = 0` included, with the three points in A.
pub fn w0(f: &GridFn, a: &IndicatorSet) -> f64 {
    let cls = moments::classes(a, &IndicatorSet::empty(f.field()));
    class_sums(f, &cls)[0]
}

/// Sample `(m, t)` until `g` satisfies both
/// `Lambda(g) <= Lambda(f) - eps^2 W_0 / (4 p^2)` and `E(g) >= E(f) - 2 beta`,
/// then raise zeros of A to 1 (lowest gradient first) until `E(g) >= E(f)`.
/// Without an accepted draw the draw with smallest `Lambda(g)` comes back
/// unrepaired with `accepted = false`.
pub fn improve(f: &GridFn, plan: &SurgeryPlan, max_tries: usize, rng: &mut StreamRng) -> Result<ImproveReport> {
    let p = f.p();
    let pf = p as f64;
    let w0 = w0(f, &plan.a);
    let lambda_f = lambda_direct(f);
    let mean_f = f.mean();
    let target = lambda_f - plan.eps * plan.eps * w0 / (4.0 * pf * pf);
    let repair_cap = (2.0 * plan.beta * pf).ceil() as usize;

    let mut best: Option<(f64, usize, usize, usize, GridFn)> = None;
    for attempt in 1..=max_tries.max(1) {
        let (m, t) = (rng.random_range(0..p), rng.random_range(0..p));
        let g = build_g(f, plan, &affine_image(&plan.template, m, t))?;
        let lambda_draw = lambda_direct(&g);
        if lambda_draw <= target && g.mean() >= mean_f - 2.0 * plan.beta {
            let (g, repaired) = repair(g, &plan.a, mean_f);
            let lambda_g = lambda_direct(&g);
            return Ok(ImproveReport {
                accepted: true,
                tries: attempt,
                m,
                t,
                w0,
                lambda_f,
                lambda_draw,
                lambda_g,
                mean_f,
                mean_g: g.mean(),
                repaired,
                repair_cap,
                final_bound_ok: lambda_g < target + 2.0 * plan.beta + DEFAULT_SLACK / pf,
                certified: plan.certified(),
                g,
            });
        }
        if best.as_ref().is_none_or(|b| lambda_draw < b.0) {
            best = Some((lambda_draw, attempt, m, t, g));
        }
    }
    let (lambda_draw, _, m, t, g) = best.expect("at least one draw");
    Ok(ImproveReport {
        accepted: false,
        tries: max_tries.max(1),
        m,
        t,
        w0,
        lambda_f,
        lambda_draw,
        lambda_g: lambda_draw,
        mean_f,
        mean_g: g.mean(),
        repaired: 0,
        repair_cap,
        final_bound_ok: false,
        certified: plan.certified(),
        g,
    })
}

fn repair(mut g: GridFn, a: &IndicatorSet, mean_f: f64) -> (GridFn, usize) {
    let grad = gradient_field(&g);
    let mut zeros: Vec<usize> = a.iter().filter(|&n| g.get(n) == 0.0).collect();
    zeros.sort_by(|&x, &y| grad.get(x).total_cmp(&grad.get(y)).then(x.cmp(&y)));
    let mut repaired = 0;
    for n in zeros {
        if g.mean() >= mean_f {
            break;
        }
        g.set(n, 1.0).expect("1 is a valid density value");
        repaired += 1;
    }
    (g, repaired)
}

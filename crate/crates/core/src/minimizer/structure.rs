//! Structure read off a (near-)minimizer: rounding distance, gradient level
//! sets, the first-order level property, and the equalization pass.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lambda::{gradient_field, LambdaCache};
use crate::zp::{GridFn, IndicatorSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FirstOrder {
    /// Free coordinates are 1 below the level and 0 above it.
    Level { level: f64 },
    /// `x` could still grow, `y` could still shrink, and `G(x) < G(y)` by more than the tolerance.
    Violation { x: usize, y: usize, gap: f64 },
}

impl FirstOrder {
    pub fn level(&self) -> Option<f64> {
        match *self {
            FirstOrder::Level { level } => Some(level),
            FirstOrder::Violation { .. } => None,
        }
    }

    pub fn is_violation(&self) -> bool {
        matches!(self, FirstOrder::Violation { .. })
    }
}

/// [`check_first_order_with`] using `tol` for both the value and the level test.
pub fn check_first_order(h: &GridFn, exempt: &IndicatorSet, tol: f64) -> FirstOrder {
    check_first_order_with(h, exempt, tol, tol)
}

/// Check the level property on coordinates outside `exempt`.
///
/// A coordinate counts as 1 when `h >= 1 - value_tol`, 0 when `h <= value_tol`,
/// fractional otherwise. Passing requires every coordinate that can shrink to
/// have gradient at most `level_tol` above every coordinate that can grow. The
/// returned level is the midpoint of the fractional gradients when there are
/// any, else the midpoint of the gap between the 1s and the 0s (or the one
/// side that exists).
pub fn check_first_order_with(h: &GridFn, exempt: &IndicatorSet, value_tol: f64, level_tol: f64) -> FirstOrder {
    let g = gradient_field(h);
    first_order_from_gradient(h, g.values(), exempt, value_tol, level_tol)
}

pub(crate) fn first_order_from_gradient(
    h: &GridFn,
    g: &[f64],
    exempt: &IndicatorSet,
    value_tol: f64,
    level_tol: f64,
) -> FirstOrder {
    let mut grow: Option<usize> = None; // argmin G over h < 1 - tol
    let mut shrink: Option<usize> = None; // argmax G over h > tol
    let (mut ones_max, mut zeros_min) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut frac_min, mut frac_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for n in 0..h.p() {
        if exempt.contains(n) {
            continue;
        }
        let v = h.get(n);
        if v < 1.0 - value_tol && grow.is_none_or(|x| g[n] < g[x]) {
            grow = Some(n);
        }
        if v > value_tol && shrink.is_none_or(|y| g[n] > g[y]) {
            shrink = Some(n);
        }
        if v >= 1.0 - value_tol {
            ones_max = ones_max.max(g[n]);
        } else if v <= value_tol {
            zeros_min = zeros_min.min(g[n]);
        } else {
            frac_min = frac_min.min(g[n]);
            frac_max = frac_max.max(g[n]);
        }
    }
    if let (Some(x), Some(y)) = (grow, shrink) {
        if g[y] - g[x] > level_tol {
            return FirstOrder::Violation { x, y, gap: g[y] - g[x] };
        }
    }
    let level = if frac_min.is_finite() {
        (frac_min + frac_max) / 2.0
    } else {
        match (ones_max.is_finite(), zeros_min.is_finite()) {
            (true, true) => (ones_max + zeros_min) / 2.0,
            (true, false) => ones_max,
            (false, true) => zeros_min,
            (false, false) => 0.0,
        }
    };
    FirstOrder::Level { level }
}

/// Nearest-integer rounding (ties up) and the L1 distance to it.
pub fn round_to_indicator(f: &GridFn) -> (IndicatorSet, f64) {
    let c = IndicatorSet::from_predicate(f.field(), |n| f.get(n) >= 0.5);
    let dist = (0..f.p()).map(|n| (f.get(n) - if c.contains(n) { 1.0 } else { 0.0 }).abs()).sum();
    (c, dist)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSplit {
    pub level: f64,
    pub set: IndicatorSet,
    /// `sum_n |r(n) - S(n)|`.
    pub distance: f64,
}

/// The sublevel set `{G_r <= L}` closest to `r` in L1, smallest L on ties.
pub fn extract_level_set(r: &GridFn) -> LevelSplit {
    let g = gradient_field(r);
    let p = r.p();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| g.get(a).total_cmp(&g.get(b)).then(a.cmp(&b)));

    // S = empty: distance is the total mass
    let mut dist: f64 = r.sum();
    let mut best = (dist, 0usize);
    let mut i = 0;
    while i < p {
        // take every coordinate tied at this gradient value together
        let gv = g.get(order[i]);
        let mut j = i;
        while j < p && g.get(order[j]) == gv {
            let v = r.get(order[j]);
            dist += (1.0 - v) - v;
            j += 1;
        }
        if dist < best.0 {
            best = (dist, j);
        }
        i = j;
    }
    let k = best.1;
    let level = if k == 0 { g.get(order[0]) - 1.0 } else { g.get(order[k - 1]) };
    let set = IndicatorSet::from_members(r.field(), order[..k].iter().copied());
    let distance = (0..p).map(|n| (r.get(n) - if set.contains(n) { 1.0 } else { 0.0 }).abs()).sum();
    LevelSplit { level, set, distance }
}

/// `{n : f(n) in [eps, 1 - eps]}`.
pub fn fuzzy_region(f: &GridFn, eps: f64) -> Result<IndicatorSet> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::EpsOutOfRange(eps));
    }
    Ok(IndicatorSet::from_predicate(f.field(), |n| {
        let v = f.get(n);
        v >= eps && v <= 1.0 - eps
    }))
}

#[derive(Clone, Debug)]
pub struct EqualizeOutcome {
    pub r: GridFn,
    pub exempt: IndicatorSet,
    /// `None` when no qualifying pair exists (the input is returned unchanged).
    pub pair: Option<(usize, usize)>,
    pub level: Option<f64>,
    pub lambda_before: f64,
    pub lambda_after: f64,
    /// `Lambda(r') <= Lambda(r) + 10 p^{-2}`.
    pub bound_holds: bool,
}

impl EqualizeOutcome {
    pub fn no_pair(&self) -> bool {
        self.pair.is_none()
    }
}

/// One equalization pass at the level reported by [`check_first_order`].
/// If the level property fails there is no level to equalize at and the
/// input comes back unchanged.
pub fn equalize_pass(r: &GridFn, exempt: &IndicatorSet, tol: f64) -> EqualizeOutcome {
    match check_first_order(r, exempt, tol).level() {
        Some(level) => equalize_pass_at(r, exempt, level, tol),
        None => unchanged(r, exempt, None),
    }
}

fn unchanged(r: &GridFn, exempt: &IndicatorSet, level: Option<f64>) -> EqualizeOutcome {
    let lambda = crate::lambda::lambda_direct(r);
    EqualizeOutcome {
        r: r.clone(),
        exempt: exempt.clone(),
        pair: None,
        level,
        lambda_before: lambda,
        lambda_after: lambda,
        bound_holds: true,
    }
}

/// Average `r` over a pair `x, y` outside `exempt` whose gradients sit within
/// `tol` of `level`, with `r(x) < 1/2 < r(y)`, then add both to `exempt`.
pub fn equalize_pass_at(r: &GridFn, exempt: &IndicatorSet, level: f64, tol: f64) -> EqualizeOutcome {
    let cache = LambdaCache::new(r.clone());
    let near = |n: usize| !exempt.contains(n) && (cache.grad_at(n) - level).abs() <= tol;
    let x = (0..r.p()).find(|&n| near(n) && r.get(n) < 0.5);
    let y = (0..r.p()).find(|&n| near(n) && r.get(n) > 0.5);
    let (Some(x), Some(y)) = (x, y) else {
        return unchanged(r, exempt, Some(level));
    };
    let avg = (r.get(x) + r.get(y)) / 2.0;
    let next = cache.two_point_update(x, y, avg, avg).expect("average stays in [0, 1]");
    let p = r.p() as f64;
    let mut exempt = exempt.clone();
    exempt.insert(x);
    exempt.insert(y);
    EqualizeOutcome {
        lambda_before: cache.lambda(),
        lambda_after: next.lambda(),
        bound_holds: next.lambda() <= cache.lambda() + 10.0 / (p * p),
        r: next.into_h(),
        exempt,
        pair: Some((x, y)),
        level: Some(level),
    }
}

/// Repeat [`equalize_pass`] until no pair qualifies. Returns the final
/// outcome and the number of passes that changed something.
pub fn equalize_until_stable(r: &GridFn, tol: f64) -> (EqualizeOutcome, usize) {
    let mut current = equalize_pass(r, &IndicatorSet::empty(r.field()), tol);
    let mut passes = 0;
    while !current.no_pair() {
        passes += 1;
        let next = equalize_pass(&current.r, &current.exempt, tol);
        if next.no_pair() {
            return (EqualizeOutcome { pair: None, ..current }, passes);
        }
        current = next;
    }
    (current, passes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::lambda_direct;
    use crate::zp::PrimeField;

    fn field(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn first_order_examples() {
        let f = field(7);
        let one = GridFn::constant(f, 1.0).unwrap();
        assert_eq!(check_first_order(&one, &IndicatorSet::empty(f), 1e-6), FirstOrder::Level { level: 21.0 });

        // the first indicator on F_7 that admits an improving swap
        let h = (0u32..128)
            .map(|mask| IndicatorSet::from_predicate(f, |n| mask >> n & 1 == 1).as_gridfn())
            .find(|h| {
                let g = gradient_field(h);
                (0..7).any(|a| (0..7).any(|b| h.get(a) == 0.0 && h.get(b) == 1.0 && g.get(a) + 1e-3 < g.get(b)))
            })
            .unwrap();
        let out = check_first_order(&h, &IndicatorSet::empty(f), 1e-6);
        let FirstOrder::Violation { x: vx, y: vy, gap } = out else { panic!("expected violation: {out:?}") };
        let gh = gradient_field(&h);
        assert!((gh.get(vy) - gh.get(vx) - gap).abs() < 1e-12 && gap > 1e-3);
        assert!(h.get(vx) < 1.0 && h.get(vy) > 0.0);
        let all = IndicatorSet::full(f);
        assert!(!check_first_order(&h, &all, 1e-6).is_violation());
    }

    #[test]
    fn rounding_examples() {
        let f = field(3);
        let (c, d) = round_to_indicator(&GridFn::density(f, vec![0.1, 0.9, 0.5]).unwrap());
        assert_eq!(c.members(), vec![1, 2]);
        assert!((d - 0.7).abs() < 1e-15);
        let f7 = field(7);
        let (c, d) = round_to_indicator(&GridFn::constant(f7, 0.5).unwrap());
        assert_eq!(c.len(), 7);
        assert_eq!(d, 3.5);
        let s = IndicatorSet::from_members(f7, [1, 4]);
        assert_eq!(round_to_indicator(&s.as_gridfn()), (s, 0.0));
    }

    #[test]
    fn level_set_on_constants() {
        let f = field(11);
        for theta in [0.2, 0.7] {
            let split = extract_level_set(&GridFn::constant(f, theta).unwrap());
            let expect = (11.0 * theta).min(11.0 * (1.0 - theta));
            assert!((split.distance - expect).abs() < 1e-12);
            let g = 3.0 * theta * theta * 11.0;
            if theta > 0.5 {
                assert_eq!(split.set.len(), 11);
                assert!(split.level >= g - 1e-9);
            } else {
                assert!(split.set.is_empty());
                assert!(split.level < g);
            }
        }
    }

    #[test]
    fn level_set_recovers_level_structured_indicator() {
        // an interval is its own gradient sublevel set when it is a fixed point of the rule
        let f = field(31);
        let s = IndicatorSet::interval(f, 10);
        let split = extract_level_set(&s.as_gridfn());
        let g = gradient_field(&s.as_gridfn());
        assert_eq!(split.set, IndicatorSet::from_predicate(f, |n| g.get(n) <= split.level));
        assert!(split.distance <= 10.0);
    }

    #[test]
    fn fuzzy_examples() {
        let f5 = field(5);
        let h = GridFn::density(f5, vec![0.0, 0.25, 0.75, 1.0, 0.5]).unwrap();
        assert_eq!(fuzzy_region(&h, 0.3).unwrap().members(), vec![4]);
        assert_eq!(fuzzy_region(&GridFn::constant(f5, 0.5).unwrap(), 0.1).unwrap().len(), 5);
        assert!(fuzzy_region(&GridFn::delta(f5, 2), 0.2).unwrap().is_empty());
        assert_eq!(fuzzy_region(&h, 0.5), Err(Error::EpsOutOfRange(0.5)));
    }

    #[test]
    fn equalize_examples() {
        let f = field(11);
        let mut v = vec![0.0; 11];
        v[2] = 0.2;
        v[5] = 0.8;
        v[0] = 1.0;
        let r = GridFn::density(f, v).unwrap();
        let cache = LambdaCache::new(r.clone());
        let level = (cache.grad_at(2) + cache.grad_at(5)) / 2.0;
        let tol = (cache.grad_at(2) - cache.grad_at(5)).abs() / 2.0 + 1e-12;
        let others = IndicatorSet::from_predicate(f, |n| n != 2 && n != 5);
        let out = equalize_pass_at(&r, &others, level, tol);
        assert_eq!(out.pair, Some((2, 5)));
        assert_eq!(out.r.get(2), 0.5);
        assert_eq!(out.r.get(5), 0.5);
        assert!((out.lambda_after - lambda_direct(&out.r)).abs() < 1e-12);
        assert!(out.bound_holds);
        assert!(out.exempt.is_subset(&IndicatorSet::full(f)) && out.exempt.len() == 11);
        assert!((out.r.mean() - r.mean()).abs() < 1e-15);

        let none = equalize_pass_at(&r, &IndicatorSet::empty(f), -100.0, 1e-9);
        assert!(none.no_pair());
        assert_eq!(none.r, r);
    }

    #[test]
    fn equalize_iteration_terminates() {
        let f = field(13);
        let r = GridFn::density(f, (0..13).map(|n| (n as f64 + 0.5) / 13.0).collect()).unwrap();
        let mut exempt = IndicatorSet::empty(f);
        let mut cur = r.clone();
        let mut passes = 0;
        loop {
            // a huge window admits every free coordinate
            let out = equalize_pass_at(&cur, &exempt, 0.0, 1e9);
            if out.no_pair() {
                break;
            }
            passes += 1;
            cur = out.r;
            exempt = out.exempt;
        }
        assert!(passes <= 13 / 2);
        assert!((cur.mean() - r.mean()).abs() < 1e-12);
    }
}

use crate::error::{Error, Result};
use crate::zp::{convolve, dft, GridFn, IndicatorSet, PrimeField, DEFAULT_TOL};

/// `p^{-2} sum_{n,d} f(n) f(n+d) f(n+2d)`, including the `d = 0` diagonal.
pub fn lambda_direct(f: &GridFn) -> f64 {
    lambda_sum(f) / (f.p() as f64).powi(2)
}

/// The unnormalized trilinear sum behind [`lambda_direct`].
pub(crate) fn lambda_sum(f: &GridFn) -> f64 {
    let p = f.p();
    let v = f.values();
    let mut total = 0.0;
    for n in 0..p {
        let a = v[n];
        if a == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        let (mut j, mut k) = (n, n);
        for _ in 0..p {
            inner += v[j] * v[k];
            j += 1;
            if j == p {
                j = 0;
            }
            k += 2;
            if k >= p {
                k -= p;
            }
        }
        total += a * inner;
    }
    total
}

/// `p^{-3} sum_a f^(a)^2 f^(-2a)`.
pub fn lambda_spectral(f: &GridFn) -> Result<f64> {
    lambda_spectral_tol(f, DEFAULT_TOL)
}

pub fn lambda_spectral_tol(f: &GridFn, tol: f64) -> Result<f64> {
    let field = f.field();
    let s = dft(f);
    let total: rustfft::num_complex::Complex64 = (0..field.p())
        .map(|a| {
            let c = s.at(a);
            c * c * s.at(field.neg(field.mul(2, a)))
        })
        .sum();
    let scale = (field.p() as f64).powi(3);
    let (re, im) = (total.re / scale, total.im / scale);
    if im.abs() > tol {
        return Err(Error::NonRealResult(im));
    }
    Ok(re)
}

/// Exact `p^2 Lambda(S)`: ordered pairs `(n, d)` with `n, n+d, n+2d` in S, `d = 0` included.
pub fn lambda_count(s: &IndicatorSet) -> u64 {
    count_t3(s) + s.len() as u64
}

pub fn lambda_indicator(s: &IndicatorSet) -> f64 {
    lambda_count(s) as f64 / (s.field().p() as f64).powi(2)
}

/// Nondegenerate progressions: ordered `(a, d)`, `d != 0`, with `a, a+d, a+2d` in S.
pub fn count_t3(s: &IndicatorSet) -> u64 {
    let field = s.field();
    let members = s.members();
    let mut count = 0u64;
    // a and a+d fix the progression; the third term is 2(a+d) - a
    for &a in &members {
        for &b in &members {
            if a != b && s.contains(field.sub(field.mul(2, b), a)) {
                count += 1;
            }
        }
    }
    count
}

/// The two convolution pieces of the gradient field:
/// `mid(n) = (h*h)(2n)` (n in the middle) and `end(n) = (h*h_2)(-n)` (n at one end).
#[derive(Clone, Debug, PartialEq)]
pub struct GradientParts {
    pub mid: Vec<f64>,
    pub end: Vec<f64>,
}

impl GradientParts {
    /// `G(n) = mid(n) + 2 end(n)`.
    pub fn combined(&self) -> Vec<f64> {
        self.mid.iter().zip(&self.end).map(|(m, e)| m + 2.0 * e).collect()
    }

    /// The single-weight form `mid(n) + end(n)`.
    pub fn literal(&self) -> Vec<f64> {
        self.mid.iter().zip(&self.end).map(|(m, e)| m + e).collect()
    }
}

/// `h_2(n) = h(-n/2)`.
pub fn half_reflection(h: &GridFn) -> GridFn {
    let field = h.field();
    let values = (0..field.p()).map(|n| h.get(field.neg(field.half(n)))).collect();
    GridFn::real(field, values).expect("length preserved")
}

pub fn gradient_parts(h: &GridFn) -> GradientParts {
    let field = h.field();
    let hh = convolve(h, h).expect("same field");
    let hh2 = convolve(h, &half_reflection(h)).expect("same field");
    let mid = (0..field.p()).map(|n| hh.get(field.mul(2, n))).collect();
    let end = (0..field.p()).map(|n| hh2.get(field.neg(n))).collect();
    GradientParts { mid, end }
}

/// `G_h(n) = (h*h)(2n) + 2 (h*h_2)(-n)`, which equals `p^2 dLambda/dh(n)`.
pub fn gradient_field(h: &GridFn) -> GridFn {
    GridFn::real(h.field(), gradient_parts(h).combined()).expect("length preserved")
}

/// `(h*h)(2n) + (h*h_2)(-n)` with unit weight on the cross term. It does not
/// match the derivative of Lambda; kept for side-by-side comparison.
pub fn gradient_field_literal(h: &GridFn) -> GridFn {
    GridFn::real(h.field(), gradient_parts(h).literal()).expect("length preserved")
}

/// `Lambda(S) + Lambda(S^c) - (1 - 3 alpha + 3 alpha^2)` with `alpha = |S|/p`.
pub fn complement_identity_residual(s: &IndicatorSet) -> f64 {
    complement_identity_residual_exact(s) as f64 / (s.field().p() as f64).powi(2)
}

/// The same residual scaled by `p^2`, in exact integers.
pub fn complement_identity_residual_exact(s: &IndicatorSet) -> i128 {
    let p = s.field().p() as i128;
    let k = s.len() as i128;
    let lhs = lambda_count(s) as i128 + lambda_count(&s.complement()) as i128;
    lhs - (p * p - 3 * k * p + 3 * k * k)
}

/// Float route of the complement residual, via the spectral evaluator.
pub fn complement_identity_residual_spectral(s: &IndicatorSet) -> Result<f64> {
    let alpha = s.density();
    Ok(lambda_spectral(&s.as_gridfn())? + lambda_spectral(&s.complement().as_gridfn())?
        - (1.0 - 3.0 * alpha + 3.0 * alpha * alpha))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct IntervalCheck {
    /// Size of the interval `{0, ..., floor(alpha p) - 1}`.
    pub size: usize,
    pub lambda_s: f64,
    pub lambda_t: f64,
    /// `beta^2 / 2` with `beta = 1 - |S|/p`.
    pub complement_model: f64,
    pub s_bound: f64,
    pub complement_ok: bool,
    pub bound_ok: bool,
}

impl IntervalCheck {
    pub fn ok(&self) -> bool {
        self.complement_ok && self.bound_ok
    }
}

/// Slack constants for [`interval_lambda_check`].
#[derive(Clone, Copy, Debug)]
pub struct IntervalSlack {
    pub complement: f64,
    pub bound: f64,
}

impl Default for IntervalSlack {
    fn default() -> Self {
        Self { complement: 10.0, bound: 10.0 }
    }
}

/// Low-progression interval of density about alpha and the two estimates
/// `|Lambda(T) - beta^2/2| <= C_T/p` and
/// `Lambda(S) <= alpha^3 (1 - (1-alpha)^2/2) + C_S/p`.
pub fn interval_lambda_check(
    alpha: f64,
    field: PrimeField,
    slack: IntervalSlack,
) -> Result<(IndicatorSet, f64, IntervalCheck)> {
    if !(alpha > 2.0 / 3.0 && alpha <= 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let p = field.p();
    let size = ((alpha * p as f64).floor() as usize).min(p);
    let s = IndicatorSet::interval(field, size);
    let lambda_s = lambda_indicator(&s);
    let lambda_t = lambda_indicator(&s.complement());
    let beta = 1.0 - size as f64 / p as f64;
    let complement_model = beta * beta / 2.0;
    let s_bound = alpha.powi(3) * (1.0 - (1.0 - alpha).powi(2) / 2.0);
    let check = IntervalCheck {
        size,
        lambda_s,
        lambda_t,
        complement_model,
        s_bound,
        complement_ok: (lambda_t - complement_model).abs() <= slack.complement / p as f64,
        bound_ok: lambda_s <= s_bound + slack.bound / p as f64,
    };
    Ok((s, lambda_s, check))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let f5 = field(5);
        assert_eq!(lambda_direct(&GridFn::constant(f5, 1.0).unwrap()), 1.0);
        assert!((lambda_direct(&GridFn::delta(f5, 3)) - 1.0 / 25.0).abs() < 1e-15);
        let s01 = IndicatorSet::from_members(f5, [0, 1]);
        assert!((lambda_direct(&s01.as_gridfn()) - 0.08).abs() < 1e-15);
        assert_eq!(lambda_count(&s01), 2);
        let s234 = IndicatorSet::from_members(f5, [2, 3, 4]);
        assert!((lambda_spectral(&s234.as_gridfn()).unwrap() - 0.2).abs() < 1e-12);
        assert!((lambda_spectral(&GridFn::constant(f5, 1.0).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn t3_examples() {
        let f5 = field(5);
        assert_eq!(count_t3(&IndicatorSet::full(f5)), 20);
        assert_eq!(count_t3(&IndicatorSet::from_members(f5, [2])), 0);
        assert_eq!(count_t3(&IndicatorSet::from_members(f5, [2, 3, 4])), 2);
    }

    #[test]
    fn gradient_examples() {
        let f7 = field(7);
        let g = gradient_field(&GridFn::constant(f7, 1.0).unwrap());
        assert!(g.values().iter().all(|&v| (v - 21.0).abs() < 1e-12));
        let g = gradient_field(&GridFn::delta(f7, 0));
        assert!((g.get(0) - 3.0).abs() < 1e-12);
        assert!((1..7).all(|n| g.get(n).abs() < 1e-12));
        let lit = gradient_field_literal(&GridFn::delta(f7, 0));
        assert!((lit.get(0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn complement_examples() {
        let f5 = field(5);
        assert_eq!(complement_identity_residual_exact(&IndicatorSet::empty(f5)), 0);
        assert_eq!(complement_identity_residual_exact(&IndicatorSet::full(f5)), 0);
        assert_eq!(complement_identity_residual(&IndicatorSet::from_members(f5, [0, 1])), 0.0);
        let r = complement_identity_residual_spectral(&IndicatorSet::from_members(f5, [0, 1])).unwrap();
        assert!(r.abs() < 1e-12);
    }

    // Independent count of (n, d) pairs in an interval-like set, by brute force.
    fn brute_lambda_count(s: &IndicatorSet) -> u64 {
        let f = s.field();
        let mut c = 0;
        for n in 0..f.p() {
            for d in 0..f.p() {
                if s.contains(n) && s.contains(f.add(n, d)) && s.contains(f.add(n, f.mul(2, d))) {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn interval_complement_parity_count() {
        let f = field(101);
        let (s, lambda_s, check) = interval_lambda_check(0.8, f, IntervalSlack::default()).unwrap();
        assert_eq!(s.len(), 80);
        let t = s.complement();
        assert_eq!(t.len(), 21);
        // same-parity ordered pairs among 21 consecutive integers: 11^2 + 10^2
        let parity_pairs = 11 * 11 + 10 * 10;
        assert_eq!(brute_lambda_count(&t), parity_pairs);
        assert!((check.lambda_t - parity_pairs as f64 / 101f64.powi(2)).abs() < 1e-15);
        assert_eq!(brute_lambda_count(&s), lambda_count(&s));
        assert_eq!(lambda_s, check.lambda_s);
        assert!(check.ok());
    }

    #[test]
    fn interval_check_flags() {
        let f = field(101);
        let (_, _, check) = interval_lambda_check(0.7, f, IntervalSlack::default()).unwrap();
        assert!(check.ok());
        let (s, l, check) = interval_lambda_check(1.0, f, IntervalSlack::default()).unwrap();
        assert_eq!(s.len(), 101);
        assert_eq!(l, 1.0);
        assert!(check.bound_ok);
        assert_eq!(
            interval_lambda_check(0.6, f, IntervalSlack::default()).unwrap_err(),
            Error::AlphaOutOfRange(0.6)
        );
    }
}

//! Large spectrum, Bohr neighborhoods, smoothing by the uniform measure on a
//! Bohr set, and the sumset approximation metric.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lambda::lambda_direct;
use crate::minimizer::round_to_indicator;
use crate::zp::{convolve_counts, dft, GridFn, IndicatorSet, PrimeField};

/// Smallest p accepted by [`third_bullet_pipeline`].
pub const PIPELINE_MIN_P: usize = 29;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LargeSpectrum {
    pub eps0: f64,
    /// Every b with `|f^(b)| > eps0 p`, ascending; b = 0 included when it qualifies.
    pub freqs: Vec<usize>,
    /// `E(f^2) / eps0^2`, the Parseval cap on the count.
    pub parseval_bound: f64,
    /// `theta / eps0^2`, the same cap with `E(f^2) <= E(f)`.
    pub theta_bound: f64,
}

impl LargeSpectrum {
    pub fn parseval_ok(&self) -> bool {
        self.freqs.len() as f64 <= self.parseval_bound + 1e-9
    }
}

pub fn large_spectrum(f: &GridFn, eps0: f64) -> Result<LargeSpectrum> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::EpsOutOfRange(eps0));
    }
    let spec = dft(f);
    let p = f.p() as f64;
    let freqs = (0..f.p()).filter(|&b| spec.at(b).norm() > eps0 * p).collect();
    let second = f.values().iter().map(|v| v * v).sum::<f64>() / p;
    Ok(LargeSpectrum { eps0, freqs, parseval_bound: second / (eps0 * eps0), theta_bound: f.mean() / (eps0 * eps0) })
}

/// `{n : ||b_i n / p|| < eps0 for every i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BohrSet {
    pub freqs: Vec<usize>,
    pub eps0: f64,
    pub members: IndicatorSet,
}

/// `||b n / p|| < radius`, computed on the representative `b n mod p`.
fn near_zero(field: PrimeField, b: usize, n: usize, radius: f64) -> bool {
    let r = field.mul(b % field.p(), n);
    (r.min(field.p() - r) as f64) < radius * field.p() as f64
}

impl BohrSet {
    pub fn field(&self) -> PrimeField {
        self.members.field()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `n in B` iff `-n in B`.
    pub fn is_symmetric(&self) -> bool {
        let f = self.field();
        self.members.iter().all(|n| self.members.contains(f.neg(n)))
    }

    /// Distinct nonzero frequencies; `b = 0` constrains nothing.
    pub fn nonzero_freqs(&self) -> Vec<usize> {
        let p = self.field().p();
        let mut out: Vec<usize> = self.freqs.iter().map(|b| b % p).filter(|&b| b != 0).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn bohr_set(freqs: &[usize], eps0: f64, field: PrimeField) -> Result<BohrSet> {
    if !(eps0 > 0.0 && eps0 <= 0.5) {
        return Err(Error::EpsOutOfRange(eps0));
    }
    let members = IndicatorSet::from_predicate(field, |n| freqs.iter().all(|&b| near_zero(field, b, n, eps0)));
    Ok(BohrSet { freqs: freqs.to_vec(), eps0, members })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeCheck {
    pub size: usize,
    /// Number of distinct nonzero frequencies.
    pub t: usize,
    /// `(eps0 - 2/p)^t p`.
    pub lower: f64,
    pub ok: bool,
    /// Total mass of the product kernel `beta = prod_i beta_i`.
    pub riesz_mass: f64,
    /// `p^{1-t} prod_i |J_i|^2 / (eps0 p + 1)`.
    pub riesz_lower: f64,
    /// `beta` lives on B with values in `[0, 1]`, and `|B| >= mass >= riesz_lower`.
    pub riesz_ok: bool,
}

/// Size of B against `(eps0 - 2/p)^t p`, plus the product-kernel certificate:
/// with `J_i = {n : ||b_i n/p|| < eps0/2}`, each `beta_i = (J_i * J_i) / (eps0 p + 1)`
/// takes values in `[0, 1]` and lives on `{||b_i n/p|| < eps0}`, so the
/// pointwise product lives on B and its mass bounds `|B|` from below.
pub fn bohr_size_check(b: &BohrSet) -> SizeCheck {
    let field = b.field();
    let p = field.p();
    let pf = p as f64;
    let freqs = b.nonzero_freqs();
    let t = freqs.len();
    let lower = (b.eps0 - 2.0 / pf).max(0.0).powi(t as i32) * pf;
    let norm = b.eps0 * pf + 1.0;

    let mut kernel = vec![1.0; p];
    let mut riesz_lower = pf;
    let mut in_range = true;
    for &freq in &freqs {
        let j = IndicatorSet::from_predicate(field, |n| near_zero(field, freq, n, b.eps0 / 2.0));
        let counts = convolve_counts(&j, &j).expect("same field");
        for (k, c) in kernel.iter_mut().zip(counts) {
            let v = c as f64 / norm;
            in_range &= v <= 1.0;
            *k *= v;
        }
        riesz_lower *= (j.len() as f64).powi(2) / norm / pf;
    }
    let on_b = kernel.iter().enumerate().all(|(n, &v)| v == 0.0 || b.members.contains(n));
    let riesz_mass: f64 = kernel.iter().sum();
    let size = b.len();
    let tol = 1e-9 * pf;
    SizeCheck {
        size,
        t,
        lower,
        ok: size as f64 >= lower,
        riesz_mass,
        riesz_lower,
        riesz_ok: in_range && on_b && size as f64 + tol >= riesz_mass && riesz_mass + tol >= riesz_lower,
    }
}

/// `f * mu` with `mu` uniform on B: the average of f over `n - B`.
pub fn smooth(f: &GridFn, b: &BohrSet) -> Result<GridFn> {
    f.field().ensure_same(&b.field())?;
    if b.is_empty() {
        return Err(Error::EmptyBohrSet);
    }
    let field = f.field();
    let members = b.members.members();
    let (lo, hi) = (f.min(), f.max());
    let inv = 1.0 / members.len() as f64;
    let values = (0..f.p())
        .map(|n| {
            let s: f64 = members.iter().map(|&m| f.get(field.sub(n, m))).sum();
            (s * inv).clamp(lo, hi)
        })
        .collect();
    GridFn::density(field, values)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothingError {
    /// `Lambda(f_3) - Lambda(f)`.
    pub error: f64,
    /// `|E| <= 10 eps0`.
    pub ok: bool,
    /// `max_a |f_3^(a) - f^(a)|`.
    pub spectral_gap: f64,
    /// `spectral_gap <= eps0 p`, up to 1e-9 relative.
    pub spectral_ok: bool,
}

pub fn smoothing_lambda_error(f: &GridFn, f3: &GridFn, eps0: f64) -> Result<SmoothingError> {
    f.field().ensure_same(&f3.field())?;
    let error = lambda_direct(f3) - lambda_direct(f);
    let (a, b) = (dft(f), dft(f3));
    let spectral_gap = (0..f.p()).map(|k| (a.at(k) - b.at(k)).norm()).fold(0.0, f64::max);
    let pf = f.p() as f64;
    Ok(SmoothingError {
        error,
        ok: error.abs() <= 10.0 * eps0,
        spectral_gap,
        spectral_ok: spectral_gap <= eps0 * pf * (1.0 + 1e-9) + 1e-9,
    })
}

/// `(p |B|)^{-1} sum_n |(1_A * 1_B)(n) - |B| 1_C(n)|`.
pub fn sumset_approx_metric(a: &IndicatorSet, b: &IndicatorSet, c: &IndicatorSet) -> Result<f64> {
    a.field().ensure_same(&c.field())?;
    if b.is_empty() {
        return Err(Error::EmptyBohrSet);
    }
    let counts = convolve_counts(a, b)?;
    let bl = b.len() as f64;
    let total: f64 = counts
        .iter()
        .enumerate()
        .map(|(n, &k)| (k as f64 - if c.contains(n) { bl } else { 0.0 }).abs())
        .sum();
    Ok(total / (a.field().p() as f64 * bl))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub p: usize,
    pub theta: f64,
    /// `sqrt(theta log log p / log p)`, capped at 1/2.
    pub eps0: f64,
    pub eps0_capped: bool,
    /// `(log log p)^{-2/3}`.
    pub eps1: f64,
    /// `eps1 >= 1/2`: the band `[eps1, 1 - eps1]` is empty.
    pub eps1_degenerate: bool,
    pub spectrum: Vec<usize>,
    pub spectrum_parseval_ok: bool,
    pub bohr_size: usize,
    pub bohr_symmetric: bool,
    pub size_check: SizeCheck,
    /// `|B| > p^{1/2}`.
    pub bohr_large: bool,
    /// `(eps0 - 2/p)^t p < p^{1/2}`: the size target cannot be certified here.
    pub regime_unsatisfied: bool,
    pub smoothing: SmoothingError,
    pub fuzzy_size: usize,
    /// `p^{-1} sum |f_3 - C_3|` with `C_3` the rounding of `f_3`.
    pub rounding_distance: f64,
    /// Sumset metric with A = C (rounding of f), B the Bohr set.
    pub sumset_metric: f64,
    #[serde(skip)]
    pub f3: GridFn,
    #[serde(skip)]
    pub bohr: IndicatorSet,
}

pub fn pipeline_eps(p: usize, theta: f64) -> (f64, f64) {
    let lp = (p as f64).ln();
    let llp = lp.ln().max(1.0);
    ((theta * llp / lp).sqrt(), llp.powf(-2.0 / 3.0))
}

/// Spectrum at eps0, Bohr set, smoothing, fuzzy region and rounding of `f_3`,
/// with the parameter choices `eps0 = sqrt(theta log log p / log p)` and
/// `eps1 = (log log p)^{-2/3}`.
pub fn third_bullet_pipeline(f: &GridFn, theta: f64) -> Result<PipelineReport> {
    third_bullet_pipeline_with(f, theta, None, None)
}

/// [`third_bullet_pipeline`] with either radius overridden.
pub fn third_bullet_pipeline_with(f: &GridFn, theta: f64, eps0: Option<f64>, eps1: Option<f64>) -> Result<PipelineReport> {
    let p = f.p();
    if p < PIPELINE_MIN_P {
        return Err(Error::ParameterRegime(p));
    }
    let (default_eps0, default_eps1) = pipeline_eps(p, theta);
    let raw_eps0 = eps0.unwrap_or(default_eps0);
    let eps1 = eps1.unwrap_or(default_eps1);
    let eps0 = raw_eps0.min(0.5);
    let spectrum = large_spectrum(f, eps0)?;
    let bohr = bohr_set(&spectrum.freqs, eps0, f.field())?;
    let size_check = bohr_size_check(&bohr);
    let f3 = smooth(f, &bohr)?;
    let smoothing = smoothing_lambda_error(f, &f3, eps0)?;
    let fuzzy_size = if eps1 < 0.5 { crate::minimizer::fuzzy_region(&f3, eps1)?.len() } else { 0 };
    let (_, dist) = round_to_indicator(&f3);
    let (c, _) = round_to_indicator(f);
    let sqrt_p = (p as f64).sqrt();
    Ok(PipelineReport {
        p,
        theta,
        eps0,
        eps0_capped: raw_eps0 > 0.5,
        eps1,
        eps1_degenerate: eps1 >= 0.5,
        spectrum_parseval_ok: spectrum.parseval_ok(),
        spectrum: spectrum.freqs,
        bohr_size: bohr.len(),
        bohr_symmetric: bohr.is_symmetric(),
        bohr_large: bohr.len() as f64 > sqrt_p,
        regime_unsatisfied: size_check.lower < sqrt_p,
        size_check,
        smoothing,
        fuzzy_size,
        rounding_distance: dist / p as f64,
        sumset_metric: sumset_approx_metric(&c, &bohr.members, &c)?,
        f3,
        bohr: bohr.members,
    })
}

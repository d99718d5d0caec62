//! Prime-length discrete Fourier transform and cyclic convolution.
//!
//! Convention: `f^(a) = sum_n f(n) w^{a n}` with `w = e^{2 pi i / p}`, inverse
//! carries the `1/p`. Small p use the direct O(p^2) sum; larger p go through
//! the chirp (Bluestein) identity `a n = (a^2 + n^2 - (a - n)^2) / 2`, which
//! turns the prime-length transform into a power-of-two convolution.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::{GridFn, IndicatorSet, Spectrum};
use crate::error::{Error, Result};

/// Largest p handled by direct summation under [`DftMethod::Auto`].
pub const DIRECT_DFT_MAX: usize = 2048;

/// Largest p convolved by the direct double loop under automatic dispatch.
pub const DIRECT_CONVOLVE_MAX: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DftMethod {
    Auto,
    Direct,
    Chirp,
}

fn twiddles(p: usize) -> Vec<Complex64> {
    (0..p).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / p as f64)).collect()
}

fn dft_direct(input: &[Complex64]) -> Vec<Complex64> {
    let p = input.len();
    let tw = twiddles(p);
    (0..p)
        .map(|a| {
            let mut idx = 0usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for x in input {
                acc += x * tw[idx];
                idx += a;
                if idx >= p {
                    idx -= p;
                }
            }
            acc
        })
        .collect()
}

fn dft_chirp(input: &[Complex64]) -> Vec<Complex64> {
    let p = input.len();
    // chirp[k] = e^{pi i k^2 / p}; k^2 is reduced mod 2p to keep the phase exact
    let chirp: Vec<Complex64> = (0..p)
        .map(|k| {
            let k2 = ((k as u128 * k as u128) % (2 * p as u128)) as f64;
            Complex64::from_polar(1.0, PI * k2 / p as f64)
        })
        .collect();
    let m = (2 * p - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);

    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for n in 0..p {
        a[n] = input[n] * chirp[n];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for k in 1..p {
        b[k] = chirp[k].conj();
        b[m - k] = chirp[k].conj();
    }
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / m as f64;
    (0..p).map(|k| a[k] * scale * chirp[k]).collect()
}

/// Forward transform of arbitrary complex data of prime length.
pub fn dft_complex(input: &[Complex64], method: DftMethod) -> Vec<Complex64> {
    match method {
        DftMethod::Direct => dft_direct(input),
        DftMethod::Chirp => dft_chirp(input),
        DftMethod::Auto if input.len() <= DIRECT_DFT_MAX => dft_direct(input),
        DftMethod::Auto => dft_chirp(input),
    }
}

pub fn dft(f: &GridFn) -> Spectrum {
    dft_with(f, DftMethod::Auto)
}

pub fn dft_with(f: &GridFn, method: DftMethod) -> Spectrum {
    let input: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Spectrum::new(f.field(), dft_complex(&input, method)).expect("length preserved")
}

/// Inverse transform, `f(n) = p^{-1} sum_a F(a) w^{-a n}`.
pub fn idft(s: &Spectrum) -> Vec<Complex64> {
    idft_with(s, DftMethod::Auto)
}

pub fn idft_with(s: &Spectrum, method: DftMethod) -> Vec<Complex64> {
    let conj: Vec<Complex64> = s.coeffs().iter().map(|c| c.conj()).collect();
    let scale = 1.0 / s.field().p() as f64;
    dft_complex(&conj, method).into_iter().map(|c| c.conj() * scale).collect()
}

/// Real part of the inverse transform as an unconstrained grid function.
pub fn idft_real(s: &Spectrum) -> GridFn {
    let values = idft(s).into_iter().map(|c| c.re).collect();
    GridFn::real(s.field(), values).expect("length preserved")
}

/// Cyclic convolution `(f * g)(n) = sum_m f(m) g(n - m)`, unnormalized.
pub fn convolve(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    f.field().ensure_same(&g.field())?;
    if f.p() <= DIRECT_CONVOLVE_MAX {
        convolve_direct(f, g)
    } else {
        convolve_spectral(f, g)
    }
}

pub fn convolve_direct(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    f.field().ensure_same(&g.field())?;
    let p = f.p();
    let (fv, gv) = (f.values(), g.values());
    let mut out = vec![0.0; p];
    for (m, &fm) in fv.iter().enumerate() {
        if fm == 0.0 {
            continue;
        }
        // n - m runs over 0..p as n runs over m..p then 0..m
        for (k, &gk) in gv.iter().enumerate() {
            let n = if m + k >= p { m + k - p } else { m + k };
            out[n] += fm * gk;
        }
    }
    GridFn::real(f.field(), out)
}

pub fn convolve_spectral(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    f.field().ensure_same(&g.field())?;
    let (fh, gh) = (dft(f), dft(g));
    let prod: Vec<Complex64> = fh.coeffs().iter().zip(gh.coeffs()).map(|(a, b)| a * b).collect();
    Ok(idft_real(&Spectrum::new(f.field(), prod)?))
}

/// Exact convolution of two indicators: `out[n] = #{(s, t) in S x T : s + t = n}`.
pub fn convolve_counts(s: &IndicatorSet, t: &IndicatorSet) -> Result<Vec<u64>> {
    s.field().ensure_same(&t.field())?;
    let field = s.field();
    let tm = t.members();
    let mut out = vec![0u64; field.p()];
    for a in s.iter() {
        for &b in &tm {
            out[field.add(a, b)] += 1;
        }
    }
    Ok(out)
}

/// `n -> f(a n + b)`; a bijection on coordinates whenever `a != 0`.
pub fn affine_reindex(f: &GridFn, a: usize, b: usize) -> Result<GridFn> {
    let field = f.field();
    let (a, b) = (a % field.p(), b % field.p());
    if a == 0 {
        return Err(Error::ZeroDilation);
    }
    let values: Vec<f64> = (0..field.p()).map(|n| f.get(field.add(field.mul(a, n), b))).collect();
    let mut out = f.clone();
    for (n, v) in values.into_iter().enumerate() {
        out.set(n, v)?;
    }
    Ok(out)
}

pub fn affine_image(s: &IndicatorSet, a: usize, b: usize) -> IndicatorSet {
    let field = s.field();
    IndicatorSet::from_members(field, s.iter().map(|n| field.add(field.mul(a, n), b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zp::PrimeField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn random_fn(field: PrimeField, rng: &mut ChaCha8Rng) -> GridFn {
        GridFn::density(field, (0..field.p()).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    // Oracle: textbook double sum with the phase computed from the integer product.
    fn naive_dft(f: &GridFn) -> Vec<Complex64> {
        let p = f.p();
        (0..p)
            .map(|a| {
                (0..p)
                    .map(|n| {
                        let k = (a * n) % p;
                        f.get(n) * Complex64::from_polar(1.0, 2.0 * PI * k as f64 / p as f64)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn constant_and_delta() {
        let f5 = field(5);
        let s = dft(&GridFn::constant(f5, 1.0).unwrap());
        assert!((s.at(0) - Complex64::new(5.0, 0.0)).norm() < 1e-12);
        for a in 1..5 {
            assert!(s.at(a).norm() < 1e-12);
        }
        let s = dft(&GridFn::delta(f5, 0));
        for a in 0..5 {
            assert!((s.at(a) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_paths_match_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [97u64, 101, 211] {
            let f = random_fn(field(p), &mut rng);
            let oracle = naive_dft(&f);
            for method in [DftMethod::Direct, DftMethod::Chirp] {
                let s = dft_with(&f, method);
                for (x, y) in s.coeffs().iter().zip(&oracle) {
                    assert!((x - y).norm() < 1e-9, "p={p} {method:?}");
                }
            }
        }
    }

    #[test]
    fn chirp_round_trip_large_prime() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_fn(field(9973), &mut rng);
        let s = dft(&f);
        let back = idft_real(&s);
        assert!(back.max_abs_diff(&f) < 1e-10);
        let energy: f64 = s.coeffs().iter().map(|c| c.norm_sqr()).sum();
        let direct: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * 9973.0;
        assert!((energy - direct).abs() / direct < 1e-9);
        assert!(s.conjugate_asymmetry() < 1e-8);
    }

    #[test]
    fn convolution_identities() {
        let f = field(5);
        let g = GridFn::density(f, vec![0.1, 0.7, 0.0, 1.0, 0.3]).unwrap();
        let c = convolve(&g, &GridFn::delta(f, 0)).unwrap();
        assert!(c.max_abs_diff(&g) < 1e-15);
        let one = GridFn::constant(f, 1.0).unwrap();
        let c = convolve(&one, &one).unwrap();
        assert!(c.values().iter().all(|&v| (v - 5.0).abs() < 1e-12));
        assert!(matches!(
            convolve(&g, &GridFn::delta(field(7), 0)),
            Err(Error::FieldMismatch { .. })
        ));
    }

    #[test]
    fn spectral_convolution_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fl = field(101);
        let (f, g) = (random_fn(fl, &mut rng), random_fn(fl, &mut rng));
        let d = convolve_direct(&f, &g).unwrap();
        let s = convolve_spectral(&f, &g).unwrap();
        assert!(d.max_abs_diff(&s) < 1e-9);
        let (fh, gh, dh) = (dft(&f), dft(&g), dft(&d));
        for a in 0..101 {
            assert!((fh.at(a) * gh.at(a) - dh.at(a)).norm() < 1e-9);
        }
    }

    #[test]
    fn reindex_examples() {
        let f5 = field(5);
        let d1 = GridFn::delta(f5, 1);
        let r = affine_reindex(&d1, f5.neg(f5.inv2()), 0).unwrap();
        assert_eq!(r, GridFn::delta(f5, 3));
        assert_eq!(affine_reindex(&d1, 1, 0).unwrap(), d1);
        assert_eq!(affine_reindex(&d1, 0, 2), Err(Error::ZeroDilation));
        let g = GridFn::density(f5, vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let (a, b) = (3usize, 4usize);
        let ai = f5.inv(a).unwrap();
        let back = affine_reindex(&affine_reindex(&g, a, b).unwrap(), ai, f5.neg(f5.mul(ai, b))).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn counts_match_float_convolution() {
        let f = field(13);
        let s = IndicatorSet::from_members(f, [0, 2, 3, 7]);
        let t = IndicatorSet::from_members(f, [1, 2, 12]);
        let exact = convolve_counts(&s, &t).unwrap();
        let fl = convolve(&s.as_gridfn(), &t.as_gridfn()).unwrap();
        for n in 0..13 {
            assert_eq!(exact[n] as f64, fl.get(n));
        }
    }
}

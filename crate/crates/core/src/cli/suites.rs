use clap::ValueEnum;
use rand::Rng;

use crate::bohr::{bohr_set, bohr_size_check, large_spectrum, smooth, smoothing_lambda_error};
use crate::error::{Error, Result};
use crate::improver::{monte_carlo_moments, random_instance};
use crate::lambda::{
    complement_identity_residual_exact, gradient_field, lambda_direct, lambda_spectral, LambdaCache,
};
use crate::r3::r3_exact;
use crate::report::RunReport;
use crate::rng::{stream_rng, StreamRng};
use crate::varnavides::{
    averaging_identity_residual, containment_audit, slot_count_identity, varnavides_bound_check, FAMILY_CAP,
};
use crate::zp::{GridFn, IndicatorSet, PrimeField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Varnavides,
    Levelprop,
    Bohr,
    All,
}

/// Exhaustive subset sweeps and exhaustive `(m, t)` enumeration stop here.
const EXHAUSTIVE_P: usize = 13;
const EXHAUSTIVE_MOMENTS_P: usize = 31;

pub fn verify(p: u64, suite: Suite, samples: usize, seed: u64) -> Result<RunReport> {
    let mut report = RunReport::new("verify", seed);
    report.param("p", p).param("suite", format!("{suite:?}").to_lowercase()).param("samples", samples);
    let field = PrimeField::new(p)?;
    let all = suite == Suite::All;
    if all || suite == Suite::Identities {
        identities(field, seed, &mut report)?;
    }
    if all || suite == Suite::Varnavides {
        if field.p() <= FAMILY_CAP {
            varnavides(field, seed, &mut report)?;
        } else if !all {
            return Err(Error::FamilyTooLarge { p: field.p(), cap: FAMILY_CAP });
        }
    }
    if all || suite == Suite::Levelprop {
        let samples = (field.p() > EXHAUSTIVE_MOMENTS_P).then_some(samples);
        levelprop(field, 0.25, samples, 5, 5.0, seed, &mut report)?;
    }
    if all || suite == Suite::Bohr {
        bohr(field, seed, &mut report)?;
    }
    Ok(report)
}

pub fn verify_levelprop(p: u64, eps: f64, samples: Option<usize>, instances: usize, slack: f64, seed: u64) -> Result<RunReport> {
    let mut report = RunReport::new("verify-levelprop", seed);
    report
        .param("p", p)
        .param("eps", eps)
        .param("samples", samples)
        .param("instances", instances)
        .param("slack", slack);
    levelprop(PrimeField::new(p)?, eps, samples, instances, slack, seed, &mut report)?;
    Ok(report)
}

fn random_fn(field: PrimeField, rng: &mut StreamRng) -> GridFn {
    GridFn::density(field, (0..field.p()).map(|_| rng.random::<f64>()).collect()).expect("values in [0, 1)")
}

fn random_set(field: PrimeField, rng: &mut StreamRng) -> IndicatorSet {
    let density: f64 = rng.random();
    IndicatorSet::from_members(field, (0..field.p()).filter(|_| rng.random::<f64>() < density))
}

fn identities(field: PrimeField, seed: u64, report: &mut RunReport) -> Result<()> {
    let p = field.p();
    let mut rng = stream_rng(seed, "verify/identities/complement");
    let (count, worst) = if p <= EXHAUSTIVE_P {
        let worst = (0..1u64 << p)
            .map(|m| complement_identity_residual_exact(&IndicatorSet::from_mask(field, m)).abs())
            .max()
            .unwrap_or(0);
        (1usize << p, worst)
    } else {
        let worst = (0..500)
            .map(|_| complement_identity_residual_exact(&random_set(field, &mut rng)).abs())
            .max()
            .unwrap_or(0);
        (500, worst)
    };
    report.verdict("complement_identity", worst == 0, format!("{count} subsets, max |residual| = {worst}"));

    let mut rng = stream_rng(seed, "verify/identities/spectral");
    let mut gap: f64 = 0.0;
    for _ in 0..50 {
        let f = random_fn(field, &mut rng);
        gap = gap.max((lambda_spectral(&f)? - lambda_direct(&f)).abs());
    }
    report.verdict("spectral_direct", gap <= 1e-9, format!("50 functions, max gap {gap:.3e}"));

    let mut rng = stream_rng(seed, "verify/identities/perturbation");
    let mut cache = LambdaCache::new(random_fn(field, &mut rng));
    let mut gap: f64 = 0.0;
    for _ in 0..200 {
        let x = rng.random_range(0..p);
        let y = (x + rng.random_range(1..p)) % p;
        let (vx, vy) = (rng.random::<f64>(), rng.random::<f64>());
        let next = cache.two_point_update(x, y, vx, vy)?;
        gap = gap.max((next.lambda() - lambda_direct(next.h())).abs());
        cache = next;
    }
    report.verdict("two_point_update", gap <= 1e-10, format!("200 moves, max gap {gap:.3e}"));

    let mut rng = stream_rng(seed, "verify/identities/gradient");
    let pf = p as f64;
    let step = 1e-4;
    let mut gap: f64 = 0.0;
    for _ in 0..3 {
        let h = random_fn(field, &mut rng).into_real();
        let g = gradient_field(&h);
        for n in 0..p {
            let mut up = h.values().to_vec();
            let mut down = up.clone();
            up[n] += step;
            down[n] -= step;
            let fd = (lambda_direct(&GridFn::real(field, up)?) - lambda_direct(&GridFn::real(field, down)?)) / (2.0 * step);
            gap = gap.max((fd - g.get(n) / (pf * pf)).abs());
        }
    }
    report.verdict("gradient_field", gap <= 1e-6, format!("finite differences, max gap {gap:.3e}"));
    Ok(())
}

fn varnavides(field: PrimeField, seed: u64, report: &mut RunReport) -> Result<()> {
    let p = field.p();
    let mut rng = stream_rng(seed, "verify/varnavides");
    for n in 3..=p.min(7) {
        let audit = containment_audit(n, field, 3, &mut rng)?;
        report.verdict(
            &format!("containment/N={n}"),
            audit.independent(),
            format!("P = {}, sampled {:?}", audit.count, audit.sampled),
        );
        report.metric(&format!("containment_band/N={n}"), audit.band_ok);
        let mut worst = (0i128, 0i128);
        for _ in 0..10 {
            let s = random_set(field, &mut rng);
            worst.0 = worst.0.max(slot_count_identity(&s, n)?.abs());
            worst.1 = worst.1.max(averaging_identity_residual(&s, n)?.abs());
        }
        report.verdict(&format!("slot_identity/N={n}"), worst.0 == 0, format!("max |residual| = {}", worst.0));
        report.verdict(&format!("averaging_identity/N={n}"), worst.1 == 0, format!("max |residual| = {}", worst.1));
        let r3 = r3_exact(n, crate::r3::DEFAULT_BUDGET)?.value;
        let s = random_set(field, &mut rng);
        let v = varnavides_bound_check(&s, n, r3)?;
        let detail = if v.hypothesis {
            format!("Y = {} >= {:.3}, T3 = {} >= {:.3}", v.y, v.y_bound, v.t3, v.t3_bound)
        } else {
            format!("hypothesis fails (|S| = {}, r3 = {r3}); Y = {}, T3 = {}", v.size, v.y, v.t3)
        };
        report.verdict(&format!("counting_chain/N={n}"), v.pass(), detail);
    }
    Ok(())
}

fn levelprop(
    field: PrimeField,
    eps: f64,
    samples: Option<usize>,
    instances: usize,
    slack: f64,
    seed: u64,
    report: &mut RunReport,
) -> Result<()> {
    let mut rng = stream_rng(seed, "verify/levelprop");
    let mut rows = Vec::new();
    for i in 0..instances {
        let (f, plan) = random_instance(field, eps, 1.0, &mut rng)?;
        let m = monte_carlo_moments(&f, &plan, samples, crate::rng::derive_seed(seed, &format!("levelprop/{i}")), slack);
        let detail = format!(
            "|A| = {}, Z0 {:.4} (pred {:.4}, band {:.4}), Var(G) {:.4}, E(G) - F {:.4}",
            plan.a.len(),
            m.z0_mean,
            m.z0_pred,
            m.z0_band,
            m.g_mean_var,
            m.g_mean - m.f_mass
        );
        report.verdict(&format!("moments/{i}"), m.pass(), detail);
        rows.push(m);
    }
    report.metric("moments", rows);
    Ok(())
}

fn bohr(field: PrimeField, seed: u64, report: &mut RunReport) -> Result<()> {
    let p = field.p();
    let mut rng = stream_rng(seed, "verify/bohr");
    let (mut sym, mut size, mut riesz) = (true, true, true);
    for _ in 0..10 {
        let t = rng.random_range(1..=3);
        let freqs: Vec<usize> = (0..t).map(|_| rng.random_range(0..p)).collect();
        let eps0 = rng.random_range((3.0 / p as f64).min(0.5)..=0.5);
        let b = bohr_set(&freqs, eps0, field)?;
        let check = bohr_size_check(&b);
        sym &= b.is_symmetric();
        size &= check.ok;
        riesz &= check.riesz_ok;
    }
    report.verdict("bohr_symmetric", sym, "10 random frequency sets");
    report.verdict("bohr_size", size, "|B| >= (eps0 - 2/p)^t p");
    report.verdict("riesz_certificate", riesz, "|B| >= mass of the product kernel");

    let (mut spectral, mut lambda) = (0.0f64, 0.0f64);
    let (mut spectral_ok, mut lambda_ok) = (true, true);
    let eps0 = 0.2;
    for _ in 0..10 {
        let f = IndicatorSet::from_members(field, (0..p).filter(|_| rng.random::<f64>() < 0.4)).as_gridfn();
        let spec = large_spectrum(&f, eps0)?;
        let b = bohr_set(&spec.freqs, eps0, field)?;
        let e = smoothing_lambda_error(&f, &smooth(&f, &b)?, eps0)?;
        spectral = spectral.max(e.spectral_gap / (eps0 * p as f64));
        lambda = lambda.max(e.error.abs());
        spectral_ok &= e.spectral_ok;
        lambda_ok &= e.ok;
    }
    report.verdict("smoothing_spectral_gap", spectral_ok, format!("max gap / (eps0 p) = {spectral:.4}"));
    report.verdict("smoothing_lambda_error", lambda_ok, format!("max |E| = {lambda:.4e} vs {:.2}", 10.0 * eps0));
    Ok(())
}

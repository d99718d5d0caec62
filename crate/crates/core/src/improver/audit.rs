use serde::Serialize;

use super::{certified_beta, improve, w0, ImproveReport, SurgeryPlan, DEFAULT_SLACK};
use crate::error::Result;
use crate::lambda::lambda_indicator;
use crate::minimizer::fuzzy_region;
use crate::rng::stream_rng;
use crate::zp::GridFn;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRow {
    pub eps: f64,
    pub fuzzy_size: usize,
    pub w0: f64,
    pub lambda_a: f64,
    /// `p^{-1/2} log p / eps`.
    pub beta: f64,
    /// `W_0 >= eps^3 p^2 Lambda(A)`.
    pub w0_lower_ok: bool,
    /// `beta >= eps^2 W_0 / (8 p^2) - C/p`: what minimality forces.
    pub beta_ok: bool,
    /// `8 eps^{-6} p^{-1/2} log p`.
    pub lambda_a_bound: f64,
    pub lambda_a_ok: bool,
    pub satisfied: bool,
    /// Run on violated rows with `eps < 1/3`.
    pub improvement: Option<ImproveReport>,
}

/// For each eps: the fuzzy region A, `W_0`, `Lambda(A)` and the necessary
/// conditions a minimizer must meet. A violated row means the state can be
/// improved, and the improver is run on it.
pub fn minimality_gap_audit(f: &GridFn, eps_schedule: &[f64], max_tries: usize, seed: u64) -> Result<Vec<GapRow>> {
    let p = f.p();
    let pf = p as f64;
    let mut rows = Vec::with_capacity(eps_schedule.len());
    for (i, &eps) in eps_schedule.iter().enumerate() {
        let a = fuzzy_region(f, eps)?;
        let w0 = w0(f, &a);
        let lambda_a = lambda_indicator(&a);
        let beta = certified_beta(p, eps);
        let lambda_a_bound = 8.0 * eps.powi(-6) * pf.ln() / pf.sqrt();
        let w0_lower_ok = w0 >= eps.powi(3) * pf * pf * lambda_a * (1.0 - 1e-12);
        let beta_ok = beta >= eps * eps * w0 / (8.0 * pf * pf) - DEFAULT_SLACK / pf;
        let lambda_a_ok = lambda_a <= lambda_a_bound;
        let satisfied = beta_ok && lambda_a_ok;
        let improvement = if !satisfied && eps < 1.0 / 3.0 {
            let plan = SurgeryPlan::from_fuzzy(f, eps, beta)?;
            Some(improve(f, &plan, max_tries, &mut stream_rng(seed, &format!("improver/audit/{i}")))?)
        } else {
            None
        };
        rows.push(GapRow {
            eps,
            fuzzy_size: a.len(),
            w0,
            lambda_a,
            beta,
            w0_lower_ok,
            beta_ok,
            lambda_a_bound,
            lambda_a_ok,
            satisfied,
            improvement,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zp::{IndicatorSet, PrimeField};

    #[test]
    fn indicator_rows_are_trivial() {
        let field = PrimeField::new(31).unwrap();
        let f = IndicatorSet::interval(field, 12).as_gridfn();
        for row in minimality_gap_audit(&f, &[0.1, 0.2, 0.3], 10, 0).unwrap() {
            assert_eq!(row.fuzzy_size, 0);
            assert_eq!(row.w0, 0.0);
            assert!(row.satisfied && row.improvement.is_none());
        }
    }

    #[test]
    fn constant_rows() {
        let field = PrimeField::new(31).unwrap();
        let f = GridFn::constant(field, 0.4).unwrap();
        let rows = minimality_gap_audit(&f, &[0.2, 0.45], 10, 0).unwrap();
        assert_eq!(rows[0].fuzzy_size, 31);
        assert!((rows[0].w0 - 0.064 * 961.0).abs() < 1e-9);
        assert!(rows[0].w0_lower_ok);
        assert_eq!(rows[1].fuzzy_size, 0);
    }
}

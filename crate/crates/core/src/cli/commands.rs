use std::path::{Path, PathBuf};

use serde_json::json;

use super::StepArg;
use crate::bohr::third_bullet_pipeline_with;
use crate::error::{Error, Result};
use crate::improver::{certified_beta, improve as run_improve, minimality_gap_audit, SurgeryPlan};
use crate::lambda::lambda_direct;
use crate::minimizer::{
    check_first_order, extract_level_set, minimize as run_minimize, random_feasible_start, round_to_indicator,
    FirstOrder, MinimizerConfig, StepRule,
};
use crate::r3::{behrend_construct, is_ap_free, r3_exact, R3Cache};
use crate::report::RunReport;
use crate::rng::stream_rng;
use crate::zp::io::{read_gridfn, write_gridfn};
use crate::zp::{GridFn, IndicatorSet, PrimeField};

pub struct MinimizeParams {
    pub p: u64,
    pub theta: f64,
    pub restarts: usize,
    pub max_iters: usize,
    pub step: StepArg,
    pub eps: Vec<f64>,
    pub max_tries: usize,
    pub fn_out: Option<PathBuf>,
}

fn write_fn(f: &GridFn, path: &Path) -> Result<()> {
    write_gridfn(f, std::fs::File::create(path)?)
}

fn read_fn(field: PrimeField, path: &Path) -> Result<GridFn> {
    read_gridfn(field, std::fs::File::open(path)?)
}

pub fn minimize(params: &MinimizeParams, seed: u64) -> Result<RunReport> {
    let mut report = RunReport::new("minimize", seed);
    report
        .param("p", params.p)
        .param("theta", params.theta)
        .param("restarts", params.restarts)
        .param("max_iters", params.max_iters)
        .param("step", format!("{:?}", params.step).to_lowercase())
        .param("eps", &params.eps)
        .param("max_tries", params.max_tries);
    let field = PrimeField::new(params.p)?;
    let mut config = MinimizerConfig::new(params.theta).with_seed(seed).with_restarts(params.restarts);
    config.max_iters = params.max_iters;
    config.step_rule = match params.step {
        StepArg::Line => StepRule::LineSearch,
        StepArg::Full => StepRule::FullTransfer,
    };
    let state = run_minimize(field, &config)?;
    let f = state.f();
    let (rounded, rounding_distance) = round_to_indicator(f);
    let split = extract_level_set(f);
    let first = check_first_order(f, &IndicatorSet::empty(field), config.tol_level);
    report
        .metric("lambda", state.lambda())
        .metric("density", f.mean())
        .metric("iterations", state.iter)
        .metric("restart", state.restart)
        .metric("rounding_distance", rounding_distance)
        .metric("rounded_size", rounded.len())
        .metric("level", split.level)
        .metric("level_set_size", split.set.len())
        .metric("level_set_distance", split.distance)
        .metric("first_order", first)
        .metric("values", f.values());
    report.verdict("converged", state.converged, format!("{} iterations", state.iter));
    let detail = match first {
        FirstOrder::Level { level } => format!("level {level:.9}"),
        FirstOrder::Violation { x, y, gap } => format!("G({y}) - G({x}) = {gap:.3e}"),
    };
    report.verdict("first_order", !first.is_violation(), detail);
    let eps: Vec<f64> = params.eps.iter().copied().filter(|&e| e > 0.0 && e < 0.5).collect();
    let rows = minimality_gap_audit(f, &eps, params.max_tries, seed)?;
    for row in &rows {
        let detail = format!(
            "|A| = {}, Lambda(A) = {:.6}, bound {:.6}, W0 = {:.6}",
            row.fuzzy_size, row.lambda_a, row.lambda_a_bound, row.w0
        );
        report.verdict(&format!("minimality_gap/eps={}", row.eps), row.satisfied, detail);
    }
    report.metric("minimality_gap", &rows);
    if let Some(path) = &params.fn_out {
        write_fn(f, path)?;
    }
    Ok(report)
}

pub fn r3(n: usize, budget: u64, certs: &Path, seed: u64) -> Result<RunReport> {
    let mut report = RunReport::new("r3", seed);
    report.param("n", n).param("budget", budget).param("certs", certs.display().to_string());
    let cache = R3Cache::new(certs);
    match cache.solve(n, budget) {
        Ok(cert) => {
            report
                .metric("value", cert.value)
                .metric("witness", cert.witness.members())
                .metric("method", cert.method.as_str());
            report.verdict("certified", true, format!("r3([{n}]) = {}", cert.value));
            report.verdict("witness_ap_free", is_ap_free(&cert.witness), format!("{:?}", cert.witness.members()));
        }
        Err(Error::BudgetExhausted { best, .. }) => {
            report.metric("lower_bound", best);
            report.verdict("certified", false, format!("budget of {budget} nodes exhausted; r3([{n}]) >= {best}"));
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// Exact values are computed for comparison up to this N.
const BEHREND_COMPARE_MAX: usize = 40;

pub fn behrend(n: usize, seed: u64) -> Result<RunReport> {
    let mut report = RunReport::new("behrend", seed);
    report.param("n", n);
    let set = behrend_construct(n)?;
    report.metric("size", set.len()).metric("members", set.members());
    report.verdict("ap_free", is_ap_free(&set), format!("{} elements", set.len()));
    if n <= BEHREND_COMPARE_MAX {
        let exact = r3_exact(n, crate::r3::DEFAULT_BUDGET)?;
        report.metric("r3", exact.value);
        report.verdict("within_r3", set.len() <= exact.value, format!("{} <= {}", set.len(), exact.value));
    }
    Ok(report)
}

pub struct ImproveParams {
    pub p: u64,
    pub theta: f64,
    pub eps: f64,
    pub beta: Option<f64>,
    pub max_tries: usize,
    pub fn_in: Option<PathBuf>,
    pub fn_out: Option<PathBuf>,
}

pub fn improve(params: &ImproveParams, seed: u64) -> Result<RunReport> {
    let mut report = RunReport::new("improve", seed);
    let field = PrimeField::new(params.p)?;
    let beta = params.beta.unwrap_or_else(|| certified_beta(field.p(), params.eps));
    report
        .param("p", params.p)
        .param("theta", params.theta)
        .param("eps", params.eps)
        .param("beta", beta)
        .param("max_tries", params.max_tries)
        .param("fn_in", params.fn_in.as_ref().map(|p| p.display().to_string()));
    let f = match &params.fn_in {
        Some(path) => read_fn(field, path)?,
        None => random_feasible_start(field, params.theta, &mut stream_rng(seed, "improve/start")),
    };
    let plan = SurgeryPlan::from_fuzzy(&f, params.eps, beta)?;
    let out = run_improve(&f, &plan, params.max_tries, &mut stream_rng(seed, "improve/draws"))?;
    report
        .metric("fuzzy_size", plan.a.len())
        .metric("template_size", plan.template.len())
        .metric("result", &out);
    report.verdict("accepted", out.accepted, format!("after {} draws", out.tries));
    report.verdict(
        "repair_within_cap",
        out.repaired <= out.repair_cap,
        format!("{} of at most {}", out.repaired, out.repair_cap),
    );
    report.verdict("final_bound", out.final_bound_ok, format!("Lambda {:.9} -> {:.9}", out.lambda_f, out.lambda_g));
    report.verdict("certified", out.certified, format!("eps * beta = {:.4e}", params.eps * beta));
    report.verdict(
        "recomputed",
        (lambda_direct(&out.g) - out.lambda_g).abs() <= 1e-12,
        "Lambda(g) recomputed from scratch",
    );
    if let Some(path) = &params.fn_out {
        write_fn(&out.g, path)?;
    }
    Ok(report)
}

pub fn bohr(p: u64, theta: f64, eps0: Option<f64>, eps1: Option<f64>, fn_in: Option<&Path>, seed: u64) -> Result<RunReport> {
    let mut report = RunReport::new("bohr", seed);
    report
        .param("p", p)
        .param("theta", theta)
        .param("eps0", eps0)
        .param("eps1", eps1)
        .param("fn_in", fn_in.map(|p| p.display().to_string()));
    let field = PrimeField::new(p)?;
    let f = match fn_in {
        Some(path) => read_fn(field, path)?,
        None => {
            let config = MinimizerConfig::new(theta).with_seed(seed).with_restarts(4);
            run_minimize(field, &config)?.cache.into_h()
        }
    };
    let r = third_bullet_pipeline_with(&f, theta, eps0, eps1)?;
    report.metric("pipeline", &r);
    report.verdict("bohr_symmetric", r.bohr_symmetric, format!("|B| = {}", r.bohr_size));
    report.verdict("size_bound", r.size_check.ok, format!("{} >= {:.4}", r.size_check.size, r.size_check.lower));
    report.verdict("riesz_certificate", r.size_check.riesz_ok, format!("mass {:.4}", r.size_check.riesz_mass));
    report.verdict("parseval", r.spectrum_parseval_ok, format!("t = {}", r.spectrum.len()));
    report.verdict(
        "spectral_gap",
        r.smoothing.spectral_ok,
        format!("{:.6} vs eps0 p = {:.6}", r.smoothing.spectral_gap, r.eps0 * p as f64),
    );
    report.verdict("lambda_error", r.smoothing.ok, format!("{:.3e} vs {:.3e}", r.smoothing.error, 10.0 * r.eps0));
    report.verdict("regime", !r.regime_unsatisfied, "(eps0 - 2/p)^t p >= p^(1/2)");
    Ok(report)
}

pub fn aggregate(files: &[PathBuf], seed: u64) -> Result<RunReport> {
    let mut report = RunReport::new("report", seed);
    report.param("files", files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>());
    let mut total = 0;
    let mut passed = 0;
    let mut commands = Vec::new();
    for path in files {
        let r = RunReport::load(path)?;
        for v in &r.verdicts {
            total += 1;
            passed += v.pass as usize;
            report.verdict(&format!("{}/{}", r.command, v.name), v.pass, v.detail.clone());
        }
        commands.push(json!({ "file": path.display().to_string(), "command": r.command, "seed": r.seed, "all_pass": r.all_pass() }));
    }
    report.metric("reports", commands).metric("verdicts", total).metric("passed", passed);
    Ok(report)
}

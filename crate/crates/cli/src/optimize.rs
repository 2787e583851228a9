//! `mann optimize`.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use mann_bounds::optimizers::{
    optimize_fixed_horizon, optimize_scheme, optimize_sequential, Mode, OptimizationResult, OptimizerConfig, StageMethod,
};
use mann_bounds::report::{fmt_f64, inverse_residual_slope, log_log_slope};
use mann_bounds::schemes::SchemeKind;
use mann_bounds::build_worst_case_witness;
use serde_json::json;

use crate::output::{coefficients_csv, series_csv, witness_summary, SeriesRow, Sink, FAILED};
use crate::{CertificationFailed, OptimizeArgs};

pub fn solve(mode: Mode, kind: Option<SchemeKind>, horizon: usize, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    Ok(match mode {
        Mode::FixedHorizon => optimize_fixed_horizon(horizon, cfg)?,
        Mode::Sequential => optimize_sequential(horizon, cfg, false)?,
        Mode::MonotoneSequential => optimize_sequential(horizon, cfg, true)?,
        Mode::SchemeConstrained => {
            let Some(kind) = kind else { bail!("--mode scheme needs --kind") };
            optimize_scheme(kind, horizon, cfg)?
        }
    })
}

fn method_label(method: StageMethod) -> &'static str {
    match method {
        StageMethod::FaceEnumeration => "face-enumeration",
        StageMethod::LocalSearch => "local-search",
        StageMethod::Evaluated => "evaluated",
    }
}

pub fn series_rows(result: &OptimizationResult) -> Vec<SeriesRow> {
    let exact = result.exact.as_ref().map(|e| &e.residuals);
    result
        .value_trace
        .iter()
        .enumerate()
        .map(|(n, &r)| SeriesRow {
            n,
            r,
            exact: exact.and_then(|e| e.get(n)).map(|q| q.to_string()),
            method: Some(if n == 0 {
                "initial".to_string()
            } else {
                result.stages.get(n - 1).map_or("evaluated", |s| method_label(s.method)).to_string()
            }),
        })
        .collect()
}

fn stepsizes_csv(alphas: &[f64], betas: &[f64]) -> String {
    let mut out = String::from("k,alpha,beta\n");
    for k in 1..alphas.len().max(betas.len()) {
        let a = alphas.get(k).copied().unwrap_or(0.0);
        let b = betas.get(k).copied().unwrap_or(0.0);
        let _ = writeln!(out, "{k},{},{}", fmt_f64(a), fmt_f64(b));
    }
    out
}

pub fn run(args: &OptimizeArgs) -> Result<()> {
    let mode: Mode = args.mode.parse()?;
    let kind = args.kind.as_deref().map(str::parse::<SchemeKind>).transpose()?;
    if kind.is_some() && mode != Mode::SchemeConstrained {
        bail!("--kind only applies to --mode scheme");
    }
    let cfg = OptimizerConfig { restarts: args.restarts, seed: args.seed, exact: args.exact, ..OptimizerConfig::with_mode(mode) };
    let sink = Sink::new(args.out.as_deref())?;
    let result = solve(mode, kind, args.horizon, &cfg)?;

    let witness = if args.certify { Some(build_worst_case_witness(&result.array, result.horizon())?) } else { None };
    let (certificate, witness_json) = witness_summary(witness.as_ref());
    let series = series_csv(&series_rows(&result), certificate);
    print!("{series}");
    sink.file("residuals.csv", &series)?;
    sink.file("coefficients.csv", &coefficients_csv(&result.array.weights()))?;
    if let Some((alphas, betas)) = &result.stepsizes {
        sink.file("stepsizes.csv", &stepsizes_csv(alphas, betas))?;
    }
    let n = result.horizon();
    sink.json(
        "run.json",
        &json!({
            "command": "optimize",
            "mode": mode.to_string(),
            "kind": kind.map(|k| k.to_string()),
            "horizon": n,
            "config": cfg,
            "value": result.value(),
            "exact_value": result.exact.as_ref().and_then(|e| e.residuals.last()).map(|q| q.to_string()),
            "stages": result.stages,
            "inverse_residual_slope": if n >= 21 { inverse_residual_slope(&result.value_trace, 20, n) } else { None },
            "log_log_slope": if n >= 21 { log_log_slope(&result.value_trace, 20, n) } else { None },
            "witness": witness_json,
            "wall_time_seconds": result.wall_time.as_secs_f64(),
        }),
    )?;
    eprintln!("R_{n} = {} ({mode}, {:.2?})", fmt_f64(result.value()), result.wall_time);
    if certificate == FAILED {
        return Err(CertificationFailed("the worst-case witness does not attain the bounds".into()).into());
    }
    Ok(())
}

//! `mann reproduce`: data bundles for the figures and tables.

use std::fmt::Write as _;

use anyhow::Result;
use mann_bounds::lab::{inf_f, km_l1_residual, shift_linf_residual};
use mann_bounds::optimizers::{halpern_optimal_recursion, remark_one_residual, Mode, OptimizerConfig};
use mann_bounds::report::{fmt_f64, inverse_residual_slope, log_log_slope};
use mann_bounds::schemes::{build_rows, SchemeKind, SchemeSpec};
use mann_bounds::{halpern_distance_recursion, TriangularArray};
use serde_json::{json, Value};

use crate::optimize::solve;
use crate::output::Sink;
use crate::{ReproduceArgs, Target};

/// Least-squares window for `1/R_n` slopes starts here.
const SLOPE_FROM: usize = 20;
const FH_MAX: usize = 6;
const S_MAX: usize = 30;

const FIG4_SCHEMES: [SchemeKind; 7] = [
    SchemeKind::Halpern,
    SchemeKind::KM,
    SchemeKind::InertialHalpern,
    SchemeKind::InertialKM,
    SchemeKind::KMHalpern,
    SchemeKind::ExtraKM,
    SchemeKind::Ishikawa,
];

fn slope(trace: &[f64]) -> Option<f64> {
    (trace.len() > SLOPE_FROM + 1).then(|| inverse_residual_slope(trace, SLOPE_FROM, trace.len() - 1)).flatten()
}

fn cell(x: Option<&f64>) -> String {
    x.map(|v| fmt_f64(*v)).unwrap_or_default()
}

fn config(args: &ReproduceArgs, mode: Mode) -> OptimizerConfig {
    OptimizerConfig { restarts: args.restarts, seed: args.seed, ..OptimizerConfig::with_mode(mode) }
}

fn fig3(args: &ReproduceArgs) -> Result<(String, Value)> {
    let horizon = args.horizon.unwrap_or(100);
    let ms = solve(Mode::MonotoneSequential, None, horizon, &config(args, Mode::MonotoneSequential))?.value_trace;
    let s = solve(Mode::Sequential, None, horizon.min(S_MAX), &config(args, Mode::Sequential))?.value_trace;
    let mut fh = vec![1.0];
    for n in 1..=horizon.min(FH_MAX) {
        fh.push(solve(Mode::FixedHorizon, None, n, &config(args, Mode::FixedHorizon))?.value());
    }
    let mut csv = String::from("n,fh,s,ms\n");
    for n in 0..=horizon {
        let _ = writeln!(csv, "{n},{},{},{}", cell(fh.get(n)), cell(s.get(n)), cell(ms.get(n)));
    }
    let summary = json!({ "ms_slope": slope(&ms), "s_slope": slope(&s), "slope_window": [SLOPE_FROM, horizon] });
    Ok((csv, summary))
}

fn fig4(args: &ReproduceArgs) -> Result<(String, Value)> {
    let horizon = args.horizon.unwrap_or(30);
    let mut csv = String::from("scheme,n,R,inv_R\n");
    let mut slopes = serde_json::Map::new();
    for kind in FIG4_SCHEMES {
        let trace = solve(Mode::SchemeConstrained, Some(kind), horizon, &config(args, Mode::SchemeConstrained))?.value_trace;
        for (n, r) in trace.iter().enumerate() {
            let _ = writeln!(csv, "{},{n},{},{}", kind.short(), fmt_f64(*r), fmt_f64(1.0 / r));
        }
        let loglog = (trace.len() > SLOPE_FROM + 1).then(|| log_log_slope(&trace, SLOPE_FROM, horizon)).flatten();
        slopes.insert(kind.short().into(), json!({ "inverse_slope": slope(&trace), "log_log_slope": loglog }));
    }
    Ok((csv, json!({ "slopes": slopes, "slope_window": [SLOPE_FROM, horizon] })))
}

fn fig5(args: &ReproduceArgs) -> Result<(String, Value)> {
    let horizon = args.horizon.unwrap_or(20);
    let result = solve(Mode::MonotoneSequential, None, horizon, &config(args, Mode::MonotoneSequential))?;
    let weights = result.array.weights();
    let selected: Vec<usize> = (1..=horizon).filter(|&n| n <= 2 || n % 5 == 0 || n == horizon).collect();
    let mut csv = String::from("n,i,weight\n");
    for &n in &selected {
        for (i, w) in weights[n].iter().enumerate() {
            let _ = writeln!(csv, "{n},{i},{}", fmt_f64(*w));
        }
    }
    let positive: Vec<(usize, bool)> = selected.iter().map(|&n| (n, weights[n].iter().all(|&w| w > 0.0))).collect();
    Ok((csv, json!({ "selected": selected, "all_positive": positive })))
}

fn remarks_table(args: &ReproduceArgs) -> Result<(String, Value)> {
    let horizon = args.horizon.unwrap_or(1000);
    let betas: Vec<f64> = (0..=horizon).map(|n| n as f64 / (n as f64 + 2.0)).collect();
    let table = halpern_distance_recursion(&betas)?;
    let (_, optimal) = halpern_optimal_recursion::<f64>(horizon)?;
    let mut csv = String::from("n,R,closed_form,R_hat,ratio\n");
    let mut peak = (0, 0.0);
    for n in 0..=horizon {
        let r = table.residual(n);
        let ratio = r / optimal[n];
        if ratio > peak.1 {
            peak = (n, ratio);
        }
        let closed: f64 = remark_one_residual(n);
        let _ = writeln!(csv, "{n},{},{},{},{}", fmt_f64(r), fmt_f64(closed), fmt_f64(optimal[n]), fmt_f64(ratio));
    }
    Ok((csv, json!({ "max_ratio": peak.1, "argmax": peak.0 })))
}

fn lower_bounds(args: &ReproduceArgs) -> Result<(String, Value)> {
    let horizon = args.horizon.unwrap_or(50);
    let mut csv = String::from("kind,n,residual,bound,certificate\n");
    let mut row = |kind: &str, n: usize, residual: f64, bound: f64| {
        let flag = if residual >= bound - 1e-12 { "verified" } else { "failed" };
        let _ = writeln!(csv, "{kind},{n},{},{},{flag}", fmt_f64(residual), fmt_f64(bound));
    };
    let ms = solve(Mode::MonotoneSequential, None, horizon, &config(args, Mode::MonotoneSequential))?.array;
    let (betas, _) = halpern_optimal_recursion::<f64>(horizon)?;
    let halpern: TriangularArray = build_rows(&SchemeSpec::halpern(betas), horizon)?;
    for (kind, array) in [("shift-ms", &ms), ("shift-halpern", &halpern)] {
        for n in 0..=horizon {
            row(kind, n, shift_linf_residual(array, n)?, 1.0 / (n as f64 + 1.0));
        }
    }
    for (kind, alpha) in [("km-half", 0.5), ("km-third", 1.0 / 3.0)] {
        let alphas = vec![alpha; horizon + 1];
        for n in 0..=horizon {
            row(kind, n, km_l1_residual(&alphas, n)?, 1.0 / (n as f64 + 1.0).sqrt());
        }
    }
    for n in 1..=horizon {
        row("inf-f", n, inf_f::<f64>(n)?, 1.0 / (n as f64 + 1.0).sqrt());
    }
    Ok((csv, json!({ "horizon": horizon })))
}

pub fn run(args: &ReproduceArgs) -> Result<()> {
    let sink = Sink::new(args.out.as_deref())?;
    let (name, (csv, summary)) = match args.target {
        Target::Fig3 => ("fig3", fig3(args)?),
        Target::Fig4 => ("fig4", fig4(args)?),
        Target::Fig5 => ("fig5", fig5(args)?),
        Target::RemarksTable => ("remarks-table", remarks_table(args)?),
        Target::LowerBounds => ("lower-bounds", lower_bounds(args)?),
    };
    print!("{csv}");
    sink.file(&format!("{name}.csv"), &csv)?;
    eprintln!("{name}: {summary}");
    sink.json(
        &format!("{name}.json"),
        &json!({ "command": "reproduce", "target": name, "seed": args.seed, "restarts": args.restarts, "horizon": args.horizon, "summary": summary }),
    )?;
    Ok(())
}

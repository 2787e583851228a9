//! `mann bounds`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mann_bounds::bounds::parse_array;
use mann_bounds::report::distance_table_csv;
use mann_bounds::schemes::{build_rows, SchemeKind, SchemeSpec, StepRule};
use mann_bounds::{build_distance_table, build_worst_case_witness, Rational, Scalar, TriangularArray};
use serde_json::json;

use crate::output::{series_csv, witness_summary, SeriesRow, Sink, FAILED};
use crate::{BoundsArgs, CertificationFailed};

/// A stepsize argument is either a rule or the name of a file holding values.
fn step_rule<S: Scalar>(text: &str) -> Result<StepRule<S>> {
    let body = if Path::new(text).is_file() {
        let raw = fs::read_to_string(text).with_context(|| format!("cannot read {text}"))?;
        let values: Vec<&str> = raw
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .flat_map(|l| l.split(',').map(str::trim))
            .filter(|t| !t.is_empty())
            .collect();
        format!("list:{}", values.join(","))
    } else {
        text.to_string()
    };
    Ok(body.parse()?)
}

pub fn build_array<S: Scalar>(args: &BoundsArgs) -> Result<TriangularArray<S>> {
    match (&args.scheme, &args.array) {
        (Some(_), Some(_)) => bail!("give either --scheme or --array, not both"),
        (None, None) => bail!("give --scheme or --array"),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let array: TriangularArray<S> =
                parse_array(&text).with_context(|| format!("parse error in {}", path.display()))?;
            match args.horizon {
                Some(n) if n > array.horizon() => {
                    bail!("--N {n} exceeds the horizon {} of {}", array.horizon(), path.display())
                }
                Some(n) => Ok(array.truncated(n)?),
                None => Ok(array),
            }
        }
        (Some(name), None) => {
            let kind: SchemeKind = name.parse()?;
            if kind == SchemeKind::General {
                bail!("general arrays are read with --array");
            }
            let Some(horizon) = args.horizon else { bail!("--N is required with --scheme") };
            let values = |flag: &str, text: &Option<String>, used: bool| -> Result<Vec<S>> {
                match (text, used) {
                    (Some(t), true) => Ok(step_rule::<S>(t)?.values(horizon)?),
                    (None, true) => bail!("scheme {kind} needs --{flag}"),
                    (Some(_), false) => bail!("scheme {kind} takes no --{flag}"),
                    (None, false) => Ok(Vec::new()),
                }
            };
            let alphas = values("alpha", &args.alpha, kind.uses_alpha())?;
            let betas = values("beta", &args.beta, kind.uses_beta())?;
            Ok(build_rows(&SchemeSpec::Stepsizes { kind, alphas, betas }, horizon)?)
        }
    }
}

fn evaluate<S: Scalar>(args: &BoundsArgs, sink: &Sink) -> Result<()> {
    let array: TriangularArray<S> = build_array(args)?;
    let table = build_distance_table(&array)?;
    let witness = if args.certify { Some(build_worst_case_witness(&array, array.horizon())?) } else { None };
    let (certificate, witness_json) = witness_summary(witness.as_ref());
    let rows: Vec<SeriesRow> = table
        .residuals()
        .iter()
        .enumerate()
        .map(|(n, r)| SeriesRow {
            n,
            r: r.to_f64_lossy(),
            exact: S::is_exact().then(|| r.to_string()),
            method: None,
        })
        .collect();
    let series = series_csv(&rows, certificate);
    let table_csv = distance_table_csv(&table);
    print!("{}", if args.table { &table_csv } else { &series });
    sink.file("residuals.csv", &series)?;
    sink.file("distance_table.csv", &table_csv)?;
    let (greedy, simplex) = table.method_counts();
    sink.json(
        "run.json",
        &json!({
            "command": "bounds",
            "scheme": args.scheme,
            "alpha": args.alpha,
            "beta": args.beta,
            "array": args.array.as_ref().map(|p| p.display().to_string()),
            "horizon": array.horizon(),
            "exact": args.exact,
            "transport": { "greedy": greedy, "simplex": simplex },
            "witness": witness_json,
        }),
    )?;
    if certificate == FAILED {
        return Err(CertificationFailed("the worst-case witness does not attain the bounds".into()).into());
    }
    Ok(())
}

pub fn run(args: &BoundsArgs) -> Result<()> {
    let sink = Sink::new(args.out.as_deref())?;
    if args.exact {
        evaluate::<Rational>(args, &sink)
    } else {
        evaluate::<f64>(args, &sink)
    }
}

//! `deconfound`: ingest a count CSV plus role assignment, run projections,
//! estimators, and delta sweeps, emit CSV or JSON.
//!
//! Exit codes: 0 success; 2 parse/config error; 3 solver non-convergence;
//! 4 estimator undefined where a scalar was required.

mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deconfound_core::estimators::{self, Estimate};
use deconfound_core::flow;
use deconfound_core::io::{self, format_sig12};
use deconfound_core::projection::{
    dp_projection, logit_maxent, parity_logit, pr_projection, Delta, ProjectionResult,
};
use deconfound_core::table::{Distribution, MarginalSpec};
use deconfound_core::{Error as CoreError, Schema};
use serde_json::{json, Value};

use config::{parse_grid, RoleFlags, RunConfig};

#[derive(Parser)]
#[command(name = "deconfound", version, about = "Contingency-table deconfounding and effect-size analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a count CSV: N, domain sizes, one-way marginals, zeros
    Describe(CommonArgs),
    /// Project the table and emit projected counts plus solver diagnostics
    Project {
        #[command(flatten)]
        common: CommonArgs,
        /// Projection to apply
        #[arg(long, value_enum)]
        method: Method,
        /// Mixture weight in [0, 1]; required by (and only by) `dp`
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Crude, stratified, and Mantel-Haenszel effect-size report
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Also report the two-way OR/RR of the parity projection
        #[arg(long = "with-pr")]
        with_pr: bool,
    },
    /// Sweep disparity-controlled projections over a delta grid
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid spec start:stop:step within [0, 1]
        #[arg(long, default_value = "0:1:0.05")]
        grid: String,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Count CSV input (header `var1,...,varK,count`)
    data: PathBuf,
    /// JSON config file; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Outcome column
    #[arg(long)]
    outcome: Option<String>,
    /// Exposure column
    #[arg(long)]
    exposure: Option<String>,
    /// Comma-separated confounder columns (default: every remaining column)
    #[arg(long, value_delimiter = ',')]
    confounders: Option<Vec<String>>,
    /// Outcome level counted as the event
    #[arg(long)]
    event: Option<String>,
    /// Exposure level used as the reference group
    #[arg(long)]
    reference: Option<String>,
    /// Pseudo-mass added per cell before projecting
    #[arg(long = "pseudo-count")]
    pseudo_count: Option<f64>,
    /// Solver residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Solver sweep limit
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output path (default stdout)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    Pr,
    Dp,
    Logit,
    #[value(name = "parity-logit")]
    ParityLogit,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum CliErrorKind {
    Config,
    Solver,
    Estimator,
}

#[derive(Debug)]
pub struct CliError {
    kind: CliErrorKind,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: CliErrorKind::Config, message: message.into() }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            CliErrorKind::Config => 2,
            CliErrorKind::Solver => 3,
            CliErrorKind::Estimator => 4,
        }
    }

    fn to_json(&self) -> String {
        let kind = match self.kind {
            CliErrorKind::Config => "config",
            CliErrorKind::Solver => "solver",
            CliErrorKind::Estimator => "estimator",
        };
        json!({ "error": self.message, "kind": kind }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = match e {
            CoreError::EmptyGroup(_) | CoreError::UndefinedRatio(_) | CoreError::ZeroDenominator => {
                CliErrorKind::Estimator
            }
            _ => CliErrorKind::Config,
        };
        CliError { kind, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Describe(common) => describe(&common),
        Command::Project { common, method, delta } => project(&common, method, delta),
        Command::Estimate { common, with_pr } => estimate(&common, with_pr),
        Command::Sweep { common, grid } => sweep(&common, &grid),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(common: &CommonArgs) -> Result<(RunConfig, deconfound_core::Table, Distribution), CliError> {
    let flags = RoleFlags {
        outcome: common.outcome.clone(),
        exposure: common.exposure.clone(),
        confounders: common.confounders.clone(),
        event: common.event.clone(),
        reference: common.reference.clone(),
        pseudo_count: common.pseudo_count,
        tol: common.tol,
        max_iter: common.max_iter,
    };
    let cfg = RunConfig::resolve(common.config.as_deref(), flags)?;
    let table = io::read_count_file(&common.data, &cfg.roles)?;
    let f = table.normalize()?;
    Ok((cfg, table, f))
}

/// Rounds every JSON number to 12 significant digits so repeated runs are
/// byte-identical and files stay plot-friendly.
fn round_numbers(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("checked");
                if let Some(rounded) = serde_json::Number::from_f64(
                    format_sig12(x).parse().unwrap_or(x),
                ) {
                    *value = Value::Number(rounded);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn write_payload(common: &CommonArgs, payload: &str, diagnostics: Option<&Value>) -> Result<(), CliError> {
    match &common.output {
        Some(path) => {
            std::fs::write(path, payload)
                .map_err(|e| CliError::config(format!("cannot write {path:?}: {e}")))?;
            if let Some(d) = diagnostics {
                match common.format {
                    Format::Json => println!("{d}"),
                    Format::Csv => eprintln!("{d}"),
                }
            }
        }
        None => {
            print!("{payload}");
            if !payload.ends_with('\n') {
                println!();
            }
            if let Some(d) = diagnostics {
                if common.format == Format::Csv {
                    eprintln!("{d}");
                }
            }
        }
    }
    Ok(())
}

fn one_way_marginals(f: &Distribution) -> Result<Vec<(String, Vec<(String, f64)>)>, CliError> {
    let mut out = Vec::new();
    for v in f.schema().variables() {
        let m = f.marginalize(&MarginalSpec::new([v.name.clone()])?)?;
        let pairs = v
            .levels
            .iter()
            .cloned()
            .zip(m.cells().iter().copied())
            .collect();
        out.push((v.name.clone(), pairs));
    }
    Ok(out)
}

fn confounder_profiles(schema: &Schema) -> usize {
    schema
        .confounder_indices()
        .iter()
        .map(|&i| schema.variables()[i].levels.len())
        .product()
}

fn describe(common: &CommonArgs) -> Result<u8, CliError> {
    let (_, table, f) = load(common)?;
    let schema = table.schema();
    let zeros = table.cells().iter().filter(|&&c| c == 0.0).count();
    let marginals = one_way_marginals(&f)?;

    let payload = match common.format {
        Format::Json => {
            let mut value = json!({
                "n": table.total(),
                "cells": schema.cell_count(),
                "sampling_zeros": zeros,
                "confounder_profiles": confounder_profiles(schema),
                "variables": schema.variables().iter().map(|v| json!({
                    "name": v.name,
                    "role": v.role.to_string(),
                    "levels": v.levels,
                })).collect::<Vec<_>>(),
                "marginals": marginals.iter().map(|(name, pairs)| {
                    (name.clone(), Value::Object(pairs.iter().map(|(l, p)| {
                        (l.clone(), json!(p))
                    }).collect()))
                }).collect::<serde_json::Map<_, _>>(),
            });
            round_numbers(&mut value);
            format!("{value}\n")
        }
        Format::Csv => {
            let mut text = String::new();
            text.push_str(&format!("N: {}\n", format_sig12(table.total())));
            text.push_str(&format!("cells: {}\n", schema.cell_count()));
            text.push_str(&format!("sampling zeros: {zeros}\n"));
            text.push_str(&format!("confounder profiles: {}\n", confounder_profiles(schema)));
            text.push_str("variables:\n");
            for v in schema.variables() {
                text.push_str(&format!("  {} ({}): {}\n", v.name, v.role, v.levels.join(", ")));
            }
            text.push_str("one-way marginals:\n");
            for (name, pairs) in &marginals {
                let rendered: Vec<String> = pairs
                    .iter()
                    .map(|(l, p)| format!("{l}={}", format_sig12(*p)))
                    .collect();
                text.push_str(&format!("  {name}: {}\n", rendered.join(", ")));
            }
            text
        }
    };
    write_payload(common, &payload, None)?;
    Ok(0)
}

fn diagnostics_json(r: &ProjectionResult) -> Value {
    let mut value = json!({
        "iterations": r.iterations,
        "residual": r.residual,
        "divergence_from_seed": r.divergence_from_seed,
        "converged": r.converged,
    });
    round_numbers(&mut value);
    value
}

fn project(common: &CommonArgs, method: Method, delta: Option<f64>) -> Result<u8, CliError> {
    if method == Method::Dp && delta.is_none() {
        return Err(CliError::config("--delta is required for method `dp`"));
    }
    if method != Method::Dp && delta.is_some() {
        return Err(CliError::config("--delta only applies to method `dp`"));
    }
    let (cfg, table, f) = load(common)?;
    let n = table.total();

    let (projected, result) = match method {
        Method::Pr => {
            let r = pr_projection(&f, &cfg.solver)?;
            (r.distribution.clone(), r)
        }
        Method::Dp => {
            let d = Delta::new(delta.expect("checked above"))?;
            let r = dp_projection(&f, d, &cfg.solver)?;
            (r.distribution.clone(), r)
        }
        Method::Logit => {
            let r = logit_maxent(&f, &cfg.solver)?;
            (r.distribution.clone(), r)
        }
        Method::ParityLogit => {
            let fitted = logit_maxent(&f, &cfg.solver)?;
            let rescaled = parity_logit(&fitted.distribution, &f)?;
            let uniform = Distribution::uniform(f.schema().clone());
            let divergence = rescaled.i_divergence(&uniform)?;
            let result = ProjectionResult {
                distribution: rescaled.clone(),
                divergence_from_seed: divergence,
                ..fitted
            };
            (rescaled, result)
        }
    };

    let counts = projected.to_counts(n);
    let diagnostics = diagnostics_json(&result);
    let payload = match common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            io::write_count_csv(&mut buf, &counts)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        Format::Json => {
            let schema = counts.schema();
            let mut digits = vec![0usize; schema.variables().len()];
            let rows: Vec<Value> = counts
                .cells()
                .iter()
                .enumerate()
                .map(|(cell, &count)| {
                    schema.decode(cell, &mut digits);
                    let mut row = serde_json::Map::new();
                    for (v, &d) in schema.variables().iter().zip(&digits) {
                        row.insert(v.name.clone(), Value::String(v.levels[d].clone()));
                    }
                    row.insert("count".into(), json!(count));
                    Value::Object(row)
                })
                .collect();
            let mut value = json!({ "diagnostics": diagnostics, "table": rows });
            round_numbers(&mut value);
            format!("{value}\n")
        }
    };
    write_payload(common, &payload, Some(&diagnostics))?;
    Ok(if result.converged { 0 } else { 3 })
}

fn fmt2(x: f64) -> String {
    if x.is_infinite() {
        return "inf".to_string();
    }
    format!("{x:.2}")
}

fn fmt2_estimate(e: &Estimate) -> String {
    match e {
        Estimate::Finite(v) => format!("{v:.2}"),
        Estimate::Infinite => "inf".to_string(),
        Estimate::Undefined => "undefined".to_string(),
    }
}

fn render_report_text(text: &mut String, report: &estimators::EffectReport) {
    text.push_str(&format!("crude OR: {}\n", fmt2(report.crude_or)));
    text.push_str(&format!("crude RR: {}\n", fmt2(report.crude_rr)));
    text.push_str(&format!("MH OR: {}\n", fmt2(report.mh_or)));
    text.push_str(&format!("MH RR: {}\n", fmt2(report.mh_rr)));
    text.push_str("strata:\n");
    for s in &report.strata {
        text.push_str(&format!(
            "  {}: OR {}, RR {}\n",
            s.levels.join(", "),
            fmt2_estimate(&s.or),
            fmt2_estimate(&s.rr)
        ));
    }
}

fn estimate(common: &CommonArgs, with_pr: bool) -> Result<u8, CliError> {
    let (cfg, _, f) = load(common)?;
    let exposure = f.schema().exposure_index().expect("validated on ingest");
    let binary = f.schema().variables()[exposure].levels.len() == 2;

    let pr = if with_pr {
        Some(pr_projection(&f, &cfg.solver)?)
    } else {
        None
    };

    let payload = if binary {
        let report = estimators::effect_report(&f)?;
        let pr_metrics = match &pr {
            Some(r) => Some((
                estimators::two_way_or(&r.distribution)?,
                estimators::two_way_rr(&r.distribution)?,
            )),
            None => None,
        };
        match common.format {
            Format::Json => {
                let mut value = serde_json::to_value(&report).expect("report serializes");
                if let (Some(r), Some((or, rr))) = (&pr, &pr_metrics) {
                    let map = value.as_object_mut().expect("report is an object");
                    map.insert("pr_or".into(), json!(or));
                    map.insert("pr_rr".into(), json!(rr));
                    map.insert("pr_diagnostics".into(), diagnostics_json(r));
                }
                round_numbers(&mut value);
                format!("{value}\n")
            }
            Format::Csv => {
                let mut text = String::new();
                render_report_text(&mut text, &report);
                if let Some((or, rr)) = &pr_metrics {
                    text.push_str(&format!("PR OR: {}\n", fmt2(*or)));
                    text.push_str(&format!("PR RR: {}\n", fmt2(*rr)));
                }
                text
            }
        }
    } else {
        // One pairwise report per non-reference exposure level.
        let reports = estimators::effect_reports(&f)?;
        let pr_reports = match &pr {
            Some(r) => Some(estimators::effect_reports(&r.distribution)?),
            None => None,
        };
        match common.format {
            Format::Json => {
                let entries: Vec<Value> = reports
                    .iter()
                    .map(|(level, report)| {
                        let mut value = serde_json::to_value(report).expect("report serializes");
                        let map = value.as_object_mut().expect("report is an object");
                        map.insert("exposure_level".into(), json!(level));
                        if let Some(prs) = &pr_reports {
                            if let Some((_, p)) = prs.iter().find(|(l, _)| l == level) {
                                map.insert("pr_or".into(), json!(p.crude_or));
                                map.insert("pr_rr".into(), json!(p.crude_rr));
                            }
                        }
                        value
                    })
                    .collect();
                let mut value = json!({ "reports": entries });
                if let Some(r) = &pr {
                    value
                        .as_object_mut()
                        .expect("object")
                        .insert("pr_diagnostics".into(), diagnostics_json(r));
                }
                round_numbers(&mut value);
                format!("{value}\n")
            }
            Format::Csv => {
                let mut text = String::new();
                for (level, report) in &reports {
                    text.push_str(&format!("exposure level: {level}\n"));
                    render_report_text(&mut text, report);
                    if let Some(prs) = &pr_reports {
                        if let Some((_, p)) = prs.iter().find(|(l, _)| l == level) {
                            text.push_str(&format!("PR OR: {}\n", fmt2(p.crude_or)));
                            text.push_str(&format!("PR RR: {}\n", fmt2(p.crude_rr)));
                        }
                    }
                }
                text
            }
        }
    };
    write_payload(common, &payload, None)?;
    Ok(match &pr {
        Some(r) if !r.converged => 3,
        _ => 0,
    })
}

fn sweep(common: &CommonArgs, grid_spec: &str) -> Result<u8, CliError> {
    let grid = parse_grid(grid_spec)?;
    let (cfg, _, f) = load(common)?;
    let records = flow::delta_sweep(&f, &grid, &cfg.solver)?;
    let monotone = flow::mh_or_monotone(&records);
    let payload = match common.format {
        Format::Csv => flow::sweep_to_csv(&records),
        Format::Json => {
            let mut value = json!({
                "records": records,
                "mh_or_monotone": monotone,
            });
            round_numbers(&mut value);
            format!("{value}\n")
        }
    };
    let diagnostics = json!({
        "grid_points": records.len(),
        "mh_or_monotone": monotone,
        "converged": records.iter().all(|r| r.converged),
    });
    write_payload(common, &payload, Some(&diagnostics))?;
    Ok(if records.iter().all(|r| r.converged) { 0 } else { 3 })
}

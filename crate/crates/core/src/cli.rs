//! Command-line interface: `test` runs uniformity tests on a PIT file,
//! `plot` emits influence-annotated tilted-ECDF data and SVG, `simulate`
//! drives the Monte Carlo harness from a TOML experiment spec.
//!
//! Exit codes: 0 success, 2 at least one selected test rejected at alpha
//! (scripting convenience), 1 error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::combine::Combiner;
use crate::error::{Error, Result};
use crate::influence::{ecdf_plot_data, influential_region, shapley_values, InfluenceReport};
use crate::pitlab::experiment::{parse_sim_spec, run_experiment};
use crate::pitos::pitos_test;
use crate::plot::svg_tilted_ecdf;
use crate::pointwise::{
    pietc_pointwise, potc_pointwise, pritc_pointwise, Method, Partition, PitKind, PitSample,
    PointwiseResult, Reference,
};
use crate::report::TestReport;
use crate::{baselines, combined_test, influence};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REJECT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pitwise",
    version,
    about = "Dependence-aware uniformity tests for PIT values"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run uniformity tests on a file of PIT values.
    Test(TestArgs),
    /// Emit tilted-ECDF plot data (JSON) and a standalone SVG with
    /// influential points highlighted.
    Plot(PlotArgs),
    /// Run a Monte Carlo experiment described by a TOML spec file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// PIT file: plain text (one value per line), .csv, or .json array.
    pub input: PathBuf,
    /// Input format override: txt, csv, or json (default: by extension).
    #[arg(long)]
    pub input_format: Option<String>,
    /// CSV column to read (name or 0-based index; default first column).
    #[arg(long)]
    pub column: Option<String>,
    /// Treat values as rank-based PITs on the grid {0, 1/S, ..., 1}.
    #[arg(long, value_name = "S")]
    pub rank_grid: Option<u32>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Test method (repeatable): potc, pritc, pietc, ks, ad, pitos.
    #[arg(long = "method", value_name = "NAME", required = true)]
    pub methods: Vec<String>,
    /// Combiner for pointwise methods: cct, tcct, tippett.
    #[arg(long, default_value = "cct")]
    pub combiner: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// PIET-C reference distribution: exp:<rate> or normal.
    #[arg(long, default_value = "exp:1")]
    pub reference: String,
    /// Explicit PRIT-C partition points (comma-separated, strictly
    /// increasing, inside (0,1)).
    #[arg(long, value_delimiter = ',')]
    pub partition: Option<Vec<f64>>,
    /// PITOS conditional-pair budget (default 2n).
    #[arg(long)]
    pub pair_budget: Option<usize>,
    /// Output directory (default: $PITWISE_OUT or stdout only).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Pointwise method backing the influence attribution.
    #[arg(long, default_value = "potc")]
    pub method: String,
    #[arg(long, default_value = "cct")]
    pub combiner: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Influence threshold: "auto" (0 when the test rejects, max(phi)/2
    /// otherwise) or an explicit nonnegative value.
    #[arg(long, default_value = "auto")]
    pub gamma: String,
    #[arg(long, default_value = "exp:1")]
    pub reference: String,
    #[arg(long, value_delimiter = ',')]
    pub partition: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML experiment spec.
    pub spec: PathBuf,
    /// Master seed override (default: the spec's seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for replicates.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    pub format: String,
}

/// Reads a PIT sample from disk. Format by extension unless overridden.
pub fn read_pit_file(args: &InputArgs) -> Result<PitSample> {
    let text = std::fs::read_to_string(&args.input)?;
    let format = match &args.input_format {
        Some(f) => f.clone(),
        None => match args.input.extension().and_then(|e| e.to_str()) {
            Some("json") => "json".into(),
            Some("csv") => "csv".into(),
            _ => "txt".into(),
        },
    };
    let values: Vec<f64> = match format.as_str() {
        "json" => serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?,
        "csv" => parse_csv_column(&text, args.column.as_deref())?,
        "txt" => {
            let mut v = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let x: f64 = line.parse().map_err(|_| {
                    Error::Parse(format!("line {}: not a number: '{line}'", lineno + 1))
                })?;
                v.push(x);
            }
            v
        }
        other => return Err(Error::Parse(format!("unknown input format '{other}'"))),
    };
    let kind = match args.rank_grid {
        Some(s) => PitKind::RankBased { s },
        None => PitKind::Continuous,
    };
    PitSample::new(values, kind)
}

fn parse_csv_column(text: &str, column: Option<&str>) -> Result<Vec<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::EmptySample)?;
    let headers: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = match column {
        None => 0,
        Some(c) => match c.parse::<usize>() {
            Ok(idx) => idx,
            Err(_) => headers
                .iter()
                .position(|h| *h == c)
                .ok_or_else(|| Error::Parse(format!("no CSV column named '{c}'")))?,
        },
    };
    if col >= headers.len() {
        return Err(Error::Parse(format!("CSV column index {col} out of range")));
    }
    // if the header cell itself is numeric, treat the file as headerless
    let mut values = Vec::new();
    if let Ok(x) = headers[col].parse::<f64>() {
        values.push(x);
    }
    for (lineno, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let cell = cells
            .get(col)
            .ok_or_else(|| Error::Parse(format!("line {}: missing column {col}", lineno + 1)))?;
        let x: f64 = cell
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: not a number: '{cell}'", lineno + 1)))?;
        values.push(x);
    }
    Ok(values)
}

#[derive(Debug, Serialize)]
struct Provenance {
    version: &'static str,
    config: serde_json::Value,
}

fn provenance(config: serde_json::Value) -> Provenance {
    Provenance {
        version: env!("CARGO_PKG_VERSION"),
        config,
    }
}

#[derive(Debug, Serialize)]
struct TestOutput {
    #[serde(flatten)]
    provenance: Provenance,
    reports: Vec<TestReport>,
}

fn out_dir(explicit: &Option<PathBuf>) -> Option<PathBuf> {
    explicit
        .clone()
        .or_else(|| std::env::var_os("PITWISE_OUT").map(PathBuf::from))
}

fn write_out(dir: &Option<PathBuf>, name: &str, content: &str) -> Result<()> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), content)?;
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("input")
        .to_string()
}

fn run_pointwise(
    method: Method,
    sample: &PitSample,
    reference: Reference,
    partition: &Option<Vec<f64>>,
) -> Result<PointwiseResult> {
    match method {
        Method::PotC => potc_pointwise(sample),
        Method::PritC => {
            let part = match partition {
                Some(points) => Partition::Points(points.clone()),
                None => Partition::Auto,
            };
            pritc_pointwise(sample, &part)
        }
        Method::PietC => pietc_pointwise(sample, reference),
        _ => Err(Error::Domain(format!("{method} is not a pointwise method"))),
    }
}

fn one_report(
    method: Method,
    sample: &PitSample,
    combiner: Combiner,
    alpha: f64,
    reference: Reference,
    partition: &Option<Vec<f64>>,
    pair_budget: Option<usize>,
) -> Result<TestReport> {
    match method {
        Method::Ks => baselines::ks_test(sample, alpha),
        Method::Ad => baselines::ad_test(sample, alpha),
        Method::Pitos => pitos_test(sample, pair_budget.unwrap_or(2 * sample.len()), alpha),
        _ => {
            let pw = run_pointwise(method, sample, reference, partition)?;
            combined_test(&pw, combiner, alpha)
        }
    }
}

pub fn cmd_test(args: &TestArgs) -> Result<i32> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Parse("alpha must be in (0, 1)".into()));
    }
    let sample = read_pit_file(&args.input)?;
    let combiner: Combiner = args.combiner.parse()?;
    let reference: Reference = args.reference.parse()?;
    let mut reports = Vec::new();
    for m in &args.methods {
        let method: Method = m.parse()?;
        reports.push(one_report(
            method,
            &sample,
            combiner,
            args.alpha,
            reference,
            &args.partition,
            args.pair_budget,
        )?);
    }
    let any_reject = reports.iter().any(|r| r.reject);
    let config = serde_json::json!({
        "input": args.input.input,
        "methods": args.methods,
        "combiner": args.combiner,
        "alpha": args.alpha,
        "reference": args.reference,
        "partition": args.partition,
        "pair_budget": args.pair_budget,
        "rank_grid": args.input.rank_grid,
    });
    let output = TestOutput {
        provenance: provenance(config),
        reports,
    };
    let rendered = match args.format.as_str() {
        "json" => serde_json::to_string_pretty(&output).map_err(|e| Error::Parse(e.to_string()))?,
        "csv" => {
            let mut s = String::from("method,combiner,statistic,global_p,alpha,reject,n\n");
            for r in &output.reports {
                s.push_str(&format!(
                    "{},{},{:.17e},{:.17e},{},{},{}\n",
                    r.method, r.combiner, r.statistic, r.global_p, r.alpha, r.reject, r.n
                ));
            }
            s
        }
        other => return Err(Error::Parse(format!("unknown output format '{other}'"))),
    };
    println!("{rendered}");
    let dir = out_dir(&args.out);
    let ext = if args.format == "csv" { "csv" } else { "json" };
    write_out(
        &dir,
        &format!("{}.reports.{ext}", stem(&args.input.input)),
        &rendered,
    )?;
    Ok(if any_reject { EXIT_REJECT } else { EXIT_OK })
}

#[derive(Debug, Serialize)]
struct PlotOutput {
    #[serde(flatten)]
    provenance: Provenance,
    report: TestReport,
    influence: InfluenceReport,
}

pub fn cmd_plot(args: &PlotArgs) -> Result<i32> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Parse("alpha must be in (0, 1)".into()));
    }
    let sample = read_pit_file(&args.input)?;
    let method: Method = args.method.parse()?;
    let combiner: Combiner = args.combiner.parse()?;
    let reference: Reference = args.reference.parse()?;
    let pw = run_pointwise(method, &sample, reference, &args.partition)?;
    let report = combined_test(&pw, combiner, args.alpha)?;
    let phi = shapley_values(&pw.cauchy_t)?;
    let max_phi = phi
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let gamma = match args.gamma.as_str() {
        "auto" => {
            if report.reject {
                0.0
            } else {
                max_phi / 2.0
            }
        }
        g => g.parse::<f64>().map_err(|_| {
            Error::Parse(format!(
                "gamma must be 'auto' or a nonnegative number, got '{g}'"
            ))
        })?,
    };
    let influential = influential_region(&phi, gamma)?;
    let ecdf_points = ecdf_plot_data(&sample, &pw, &influential)?;
    let report_out = InfluenceReport {
        phi: phi.clone(),
        gamma,
        influential,
        harmonic_n: influence::harmonic(phi.len()),
        grand_value: pw.cauchy_t.iter().sum::<f64>() / pw.cauchy_t.len() as f64,
        ecdf_points,
    };
    let svg = svg_tilted_ecdf(&report_out.ecdf_points);
    let config = serde_json::json!({
        "input": args.input.input,
        "method": args.method,
        "combiner": args.combiner,
        "alpha": args.alpha,
        "gamma": args.gamma,
        "reference": args.reference,
        "partition": args.partition,
        "rank_grid": args.input.rank_grid,
    });
    let reject = report.reject;
    let output = PlotOutput {
        provenance: provenance(config),
        report,
        influence: report_out,
    };
    let json = serde_json::to_string_pretty(&output).map_err(|e| Error::Parse(e.to_string()))?;
    println!("{json}");
    let dir = out_dir(&args.out);
    let base = stem(&args.input.input);
    write_out(&dir, &format!("{base}.plot.json"), &json)?;
    write_out(&dir, &format!("{base}.svg"), &svg)?;
    if dir.is_none() {
        // no output directory: SVG still goes somewhere inspectable
        eprintln!("note: no --out directory given; SVG not written");
    }
    Ok(if reject { EXIT_REJECT } else { EXIT_OK })
}

#[derive(Debug, Serialize)]
struct SimulateOutput {
    #[serde(flatten)]
    provenance: Provenance,
    spec: crate::pitlab::SimSpec,
    outcome: crate::pitlab::SimOutcome,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.spec)?;
    let mut spec = parse_sim_spec(&text)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
        match &mut spec.model {
            crate::pitlab::SimModel::Conjugate(c) => c.seed = seed,
            crate::pitlab::SimModel::Copula(c) => c.seed = seed,
        }
    }
    let outcome = run_experiment(&spec, args.jobs)?;

    // summary table
    println!(
        "replicates: {} completed, {} failed (seed {})",
        outcome.completed, outcome.failed, outcome.seed
    );
    if let Some(rho) = outcome.mean_pairwise_pit_corr {
        println!("mean pairwise PIT correlation: {rho:.4}");
    }
    println!("{:<16} {:>8} {:>10}", "method", "alpha", "rejection");
    for rr in &outcome.rejection_rates {
        println!("{:<16} {:>8} {:>10.4}", rr.method, rr.alpha, rr.rate);
    }

    let mut rates_csv = String::from("method,alpha,rate\n");
    for rr in &outcome.rejection_rates {
        rates_csv.push_str(&format!(
            "{},{:.17e},{:.17e}\n",
            rr.method, rr.alpha, rr.rate
        ));
    }
    // jobs is deliberately not part of the provenance: outputs are
    // parallelism-independent and must stay byte-identical across job counts
    let config = serde_json::json!({
        "spec_file": args.spec,
        "seed_override": args.seed,
    });
    let output = SimulateOutput {
        provenance: provenance(config),
        spec,
        outcome,
    };
    let json = serde_json::to_string_pretty(&output).map_err(|e| Error::Parse(e.to_string()))?;
    let dir = out_dir(&args.out);
    let base = stem(&args.spec);
    write_out(&dir, &format!("{base}.outcome.json"), &json)?;
    write_out(&dir, &format!("{base}.rates.csv"), &rates_csv)?;
    if args.format == "json" && dir.is_none() {
        println!("{json}");
    }
    Ok(EXIT_OK)
}

/// Dispatches a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_column_selection() {
        let text = "id,pit\n1,0.25\n2,0.5\n";
        assert_eq!(
            parse_csv_column(text, Some("pit")).unwrap(),
            vec![0.25, 0.5]
        );
        assert_eq!(parse_csv_column(text, Some("1")).unwrap(), vec![0.25, 0.5]);
        assert!(parse_csv_column(text, Some("nope")).is_err());
        // headerless numeric file
        assert_eq!(
            parse_csv_column("0.1\n0.2\n", None).unwrap(),
            vec![0.1, 0.2]
        );
    }

    #[test]
    fn reference_and_gamma_parsing() {
        assert!(
            matches!("exp:2.5".parse::<Reference>().unwrap(), Reference::Exp { rate } if rate == 2.5)
        );
        assert!(matches!(
            "normal".parse::<Reference>().unwrap(),
            Reference::Normal
        ));
        assert!("exp:-1".parse::<Reference>().is_err());
        assert!("weird".parse::<Reference>().is_err());
    }
}

mod input;
mod metadata;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sparsefit::montecarlo::{perturb_distribution, run_simulation, SimulationSpec, SimulationSummary};
use sparsefit::tables::{parse_table, Dataset, TableFormat};
use sparsefit::{
    chi_square_quantile, run_test, CorrectionConfig, EpsPolicy, NullModel, ProbVector, SampleSize,
    Statistic, TestReport,
};

use metadata::{Document, RunMetadata};

/// Goodness-of-fit and independence tests for sparse multinomial data.
#[derive(Parser)]
#[command(name = "sparsefit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a count vector or a contingency table.
    Test(TestArgs),
    /// Estimate type I risks or powers by seeded simulation.
    Simulate(SimulateArgs),
    /// Print the chi-square quantile of order PROB with DF degrees of freedom.
    Quantile {
        #[arg(allow_negative_numbers = true)]
        prob: f64,
        df: u32,
    },
}

#[derive(Args)]
struct CorrectionArgs {
    /// Position of b between b_min and 1.
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Offset below a_max, as a fraction of the admissible a-interval.
    #[arg(long = "eps-rel", default_value_t = 1e-3)]
    eps_rel: f64,
}

impl CorrectionArgs {
    fn config(&self) -> Result<CorrectionConfig> {
        Ok(CorrectionConfig::new(self.h, EpsPolicy::relative(self.eps_rel)?)?)
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModelKind {
    Independence,
    Simple,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Rivers,
    Sclerosis,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["table", "counts", "builtin"]))]
struct TestArgs {
    /// Two-way table as CSV (numeric cells; optional header and row labels).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Count vector, one or more integers per line.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Bundled dataset.
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    /// The table's first row holds column labels.
    #[arg(long)]
    header: bool,
    /// Null model; defaults to independence for tables and simple for count vectors.
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Null weights for the simple model (normalized); uniform when omitted.
    #[arg(long)]
    null: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    correction: CorrectionArgs,
    /// Write the JSON report to this path, or to stdout with `-`.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Leave the timestamp out of the metadata.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Sampling distribution: f1..f4 or a weights file.
    #[arg(long)]
    dist: String,
    /// Null distribution: f1..f4 or a weights file; defaults to --dist.
    #[arg(long)]
    null: Option<String>,
    /// Shift the null by ±1/300 on the ten first and ten last cells.
    #[arg(long)]
    null_perturbed: bool,
    #[arg(long, default_value_t = 400)]
    n: u64,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, env = "SPARSEFIT_SEED", default_value_t = 42)]
    seed: u64,
    /// Significance level; repeat for several.
    #[arg(long = "alpha", default_values_t = [0.01, 0.05, 0.1])]
    alphas: Vec<f64>,
    #[command(flatten)]
    correction: CorrectionArgs,
    /// Directory receiving quantiles.csv, rejection_rates.csv and summary.json.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Serialize)]
struct TestBody<'a> {
    report: &'a TestReport,
}

#[derive(Serialize)]
struct SimulationBody<'a> {
    spec: &'a SimulationSpec,
    summary: &'a SimulationSummary,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args).map(|()| false),
        Command::Quantile { prob, df } => cmd_quantile(prob, df).map(|()| false),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Returns whether the combined rule rejects.
fn cmd_test(args: TestArgs) -> Result<bool> {
    let config = args.correction.config()?;
    let mut digest_input = Vec::new();

    let (counts, default_model, table) = if let Some(b) = args.builtin {
        let d = match b {
            Builtin::Rivers => Dataset::Rivers,
            Builtin::Sclerosis => Dataset::Sclerosis,
        };
        digest_input.extend_from_slice(d.csv().as_bytes());
        let t = d.table();
        (t.flatten()?, ModelKind::Independence, Some(t))
    } else if let Some(path) = &args.table {
        let bytes = input::read(path)?;
        let t = parse_table(bytes.as_slice(), TableFormat { header: args.header })
            .with_context(|| format!("in {}", path.display()))?;
        digest_input.extend_from_slice(&bytes);
        (t.flatten()?, ModelKind::Independence, Some(t))
    } else {
        let path = args.counts.as_ref().expect("input group is required");
        let bytes = input::read(path)?;
        let x = input::parse_counts(&input::utf8(&bytes, path)?).with_context(|| format!("in {}", path.display()))?;
        digest_input.extend_from_slice(&bytes);
        (x, ModelKind::Simple, None)
    };

    let model = args.model.unwrap_or(default_model);
    if model == ModelKind::Independence && args.null.is_some() {
        bail!("--null only applies to --model simple");
    }
    let report = match (model, table) {
        (ModelKind::Independence, Some(t)) => sparsefit::models::run_independence_test(&t, args.alpha, &config)?,
        (ModelKind::Independence, None) => bail!("--model independence needs a table (--table or --builtin)"),
        (ModelKind::Simple, _) => {
            let p0 = match &args.null {
                Some(path) => {
                    let bytes = input::read(path)?;
                    digest_input.extend_from_slice(&bytes);
                    input::parse_weights(&input::utf8(&bytes, path)?).with_context(|| format!("in {}", path.display()))?
                }
                None => ProbVector::uniform(counts.categories())?,
            };
            run_test(&counts, &NullModel::simple(p0)?, args.alpha, &config)?
        }
    };

    let json_to_stdout = args.json.as_deref().is_some_and(|p| p.as_os_str() == "-");
    let summary = render_report(&report);
    if json_to_stdout {
        eprint!("{summary}");
    } else {
        print!("{summary}");
    }
    if let Some(path) = &args.json {
        let doc = Document {
            metadata: RunMetadata::new(&config, None, &digest_input, !args.no_timestamp),
            body: TestBody { report: &report },
        };
        let text = to_json(&doc)?;
        if json_to_stdout {
            std::io::stdout().write_all(text.as_bytes())?;
        } else {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    Ok(report.combined_reject)
}

fn render_report(r: &TestReport) -> String {
    let mut out = String::new();
    let model = match &r.model {
        NullModel::Simple { .. } => "simple null".to_owned(),
        NullModel::Independence { rows, cols } => format!("independence, {rows}x{cols} table"),
    };
    out += &format!("model: {model}\n");
    out += &format!(
        "n = {}, cells = {}, empty cells = {}, df = {}\n",
        r.n, r.categories, r.zero_cells, r.df
    );
    out += &format!(
        "expected counts below 5: {}, below 0.5: {}\n",
        r.expected_below_five, r.expected_below_half
    );
    let c = &r.correction;
    if c.fallback {
        out += "correction: none (a = 0, b = 1)\n";
    } else {
        out += &format!("correction: a = {:.6}, b = {:.6}\n", c.a, c.b);
    }
    out += &format!("threshold at alpha = {}: {:.4}\n", r.alpha, r.threshold);
    for s in Statistic::ALL {
        let verdict = if r.rejects.get(s) { "reject" } else { "accept" };
        out += &format!("  {:<6} {:>12.4}  {verdict}\n", s.label(), r.statistics.get(s));
    }
    let decision = if r.combined_reject { "REJECT" } else { "ACCEPT" };
    out += &format!("decision (Qab or Gab): {decision}\n");
    for w in &r.warnings {
        out += &format!("warning: {w}\n");
    }
    out
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let config = args.correction.config()?;
    let (sampling, mut digest_input) = input::distribution(&args.dist)?;
    let (null, null_bytes) = match &args.null {
        Some(spec) => input::distribution(spec)?,
        None => (sampling.clone(), Vec::new()),
    };
    digest_input.extend_from_slice(&null_bytes);
    let null = if args.null_perturbed { perturb_distribution(&null)? } else { null };
    let spec = SimulationSpec {
        sampling,
        null,
        n: SampleSize::new(args.n)?,
        replicates: args.reps,
        alphas: args.alphas,
        seed: args.seed,
        config,
    };
    let summary = run_simulation(&spec)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let write = |name: &str, text: &str| {
        let path = args.out_dir.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    };
    write("quantiles.csv", &summary.quantiles_csv())?;
    write("rejection_rates.csv", &summary.rates_csv())?;
    digest_input.extend_from_slice(serde_json::to_string(&spec)?.as_bytes());
    let doc = Document {
        metadata: RunMetadata::new(&config, Some(spec.seed), &digest_input, !args.no_timestamp),
        body: SimulationBody { spec: &spec, summary: &summary },
    };
    write("summary.json", &to_json(&doc)?)?;

    println!(
        "{} replicates of n = {} over {} cells, seed {}, modal empty-cell count {}",
        summary.replicates, summary.n, summary.categories, summary.seed, summary.mode_c
    );
    print!("{}", summary.rates_csv());
    Ok(())
}

fn cmd_quantile(prob: f64, df: u32) -> Result<()> {
    println!("{:.6}", chi_square_quantile(prob, df)?);
    Ok(())
}

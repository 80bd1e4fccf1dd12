use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use torusflow::commensura::{jacobi_classify, strong_commensurate, Frequency, DEFAULT_HEIGHT};
use torusflow::scenario::{
    parse_scenario, run_scenario, Analysis, OutputFormat, RunOutput, ScenarioError, ScenarioFile,
};

#[derive(Parser)]
#[command(name = "torusflow", version, about = "Linear flows on invariant tori: scenarios in, CSV/JSON out")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Single {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Write here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Override the output format.
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic function on a time grid (CSV: t, re, im, abs, convention, truncation_K).
    Charfn(Single),
    /// Commensurability of a frequency list, from a scenario or `--values`.
    ClassifyFreqs {
        scenario: Option<PathBuf>,
        /// Comma-separated frequencies, e.g. "1,sqrt2,1+sqrt(2)".
        #[arg(long, conflicts_with = "scenario")]
        values: Option<String>,
        #[arg(long, default_value_t = DEFAULT_HEIGHT)]
        height: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Type I/II/III trajectory classification.
    Classify(Single),
    /// Mode snapshots of the flow (CSV: t, mode, r, theta).
    Simulate(Single),
    /// Wandering certificate (JSON).
    Wander(Single),
    /// Return times to an ε-ball (CSV: t, distance).
    Recur(Single),
    /// Box-count discrepancy per sample size (CSV).
    Weyl(Single),
    /// σ-condition scan over dyadic cells (JSON).
    SigmaScan(Single),
    /// Non-periodicity check for a density (JSON).
    NonperiodicAc(Single),
    /// Run scenarios with the analysis they request, concurrently.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Directory for per-scenario output files; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        _ => Err(format!("unknown format `{s}` (expected csv or json)")),
    }
}

/// Exit status 2 for unusable input, 1 for analyses that fail.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ScenarioError>() {
        Some(ScenarioError::Parse { .. } | ScenarioError::Invalid(_)) => 2,
        _ => 1,
    }
}

fn load(path: &Path) -> anyhow::Result<ScenarioFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text).map_err(|e| anyhow::Error::new(e).context(path.display().to_string()))
}

/// Loads a scenario for a specific subcommand. A scenario without an
/// analysis gets that subcommand's defaults.
fn load_for(kind: &str, args: &Single) -> anyhow::Result<ScenarioFile> {
    let mut file = load(&args.scenario)?;
    let s = &mut file.scenario;
    match &s.analysis {
        Some(a) if a.name() != kind => bail!(
            "{}: scenario requests `{}`, not `{kind}`",
            args.scenario.display(),
            a.name()
        ),
        Some(_) => {}
        None => {
            let a: Analysis = serde_json::from_value(serde_json::json!({ "kind": kind })).map_err(|e| {
                anyhow::Error::new(ScenarioError::Parse {
                    path: "analysis".into(),
                    message: format!("`{kind}` has required parameters: {e}"),
                })
            })?;
            s.analysis = Some(a);
            s.validate().map_err(ScenarioError::from)?;
        }
    }
    if let Some(f) = args.format {
        s.output.format = Some(f);
    }
    Ok(file)
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn single(kind: &str, args: &Single) -> anyhow::Result<()> {
    let file = load_for(kind, args)?;
    let RunOutput { text, .. } = run_scenario(&file)?;
    emit(&text, args.out.as_deref())
}

fn classify_values(values: &str, height: u64) -> anyhow::Result<String> {
    let freqs: Vec<Frequency> = values
        .split(',')
        .enumerate()
        .map(|(i, v)| Frequency::parse(v.trim()).with_context(|| format!("values[{i}]")))
        .collect::<anyhow::Result<_>>()?;
    let doc = serde_json::json!({
        "frequencies": freqs,
        "strong": strong_commensurate(&freqs)?,
        "jacobi": jacobi_classify(&freqs, height)?,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn output_name(file: &ScenarioFile, format: OutputFormat) -> String {
    file.scenario.output.path.clone().unwrap_or_else(|| {
        let stem: String = file
            .scenario
            .name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        format!("{stem}.{}", format.extension())
    })
}

fn run_batch(paths: &[PathBuf], out: Option<&Path>) -> anyhow::Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let results: Vec<anyhow::Result<(ScenarioFile, RunOutput)>> = paths
        .par_iter()
        .map(|p| {
            let file = load(p)?;
            let run = run_scenario(&file).map_err(|e| anyhow::Error::new(e).context(p.display().to_string()))?;
            Ok((file, run))
        })
        .collect();
    let mut first_err = None;
    for r in results {
        match r {
            Ok((file, run)) => match out {
                Some(dir) => {
                    let path = dir.join(output_name(&file, run.format));
                    emit(&run.text, Some(&path))?;
                    eprintln!("wrote {}", path.display());
                }
                None => emit(&run.text, None)?,
            },
            Err(e) => {
                eprintln!("error: {e:#}");
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("TORUSFLOW_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .with_context(|| format!("TORUSFLOW_THREADS={v} is not a positive integer"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Charfn(a) => single("charfn", &a),
        Command::Classify(a) => single("classify", &a),
        Command::Simulate(a) => single("simulate", &a),
        Command::Wander(a) => single("wander", &a),
        Command::Recur(a) => single("recur", &a),
        Command::Weyl(a) => single("weyl", &a),
        Command::SigmaScan(a) => single("sigma-scan", &a),
        Command::NonperiodicAc(a) => single("nonperiodic-ac", &a),
        Command::ClassifyFreqs { scenario, values, height, out } => match (scenario, values) {
            (_, Some(v)) => emit(&classify_values(&v, height)?, out.as_deref()),
            (Some(p), None) => single(
                "classify-freqs",
                &Single {
                    scenario: p,
                    out,
                    format: None,
                },
            ),
            (None, None) => bail!("give a scenario file or --values"),
        },
        Command::Run { scenarios, out } => run_batch(&scenarios, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! Command-line definitions and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use qrf::search::ReferenceFamily;

use crate::error::{CliError, EXIT_FAILURE, EXIT_PASS};
use crate::output::{self, Header};
use crate::presets;
use crate::scenario::{Resolved, Scenario};
use crate::{tradeoff, verify, width};

#[derive(Debug, Parser)]
#[command(name = "qrf", version, about = "Reference-frame accuracy checks and trade-off curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run inequality checkers on a scenario and seeded perturbations of it.
    Verify(VerifyArgs),
    /// Print overall widths of the reference phase measure.
    Width(WidthArgs),
    /// Minimise the distance over invariant effects for a family of
    /// reference states.
    Tradeoff(TradeoffArgs),
    /// List the built-in scenarios, or print one.
    Presets {
        /// Print this preset's JSON.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct Input {
    /// Scenario JSON file.
    pub scenario: Option<PathBuf>,
    /// Use a built-in scenario instead of a file.
    #[arg(long)]
    pub preset: Option<String>,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "qrf-out")]
    pub out: PathBuf,
    /// Leave the timestamp out of headers so reruns are byte-identical.
    #[arg(long)]
    pub no_timestamp: bool,
}

impl Input {
    fn resolve(&self) -> Result<Resolved, CliError> {
        let mut scenario = Scenario::locate(self.scenario.as_deref(), self.preset.as_deref())?;
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        scenario.resolve()
    }

    fn header(&self, command: &str, s: &Resolved) -> Header {
        Header::new(command, &s.digest, s.seed, !self.no_timestamp)
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: Input,
    /// Comma-separated checker names (default: all).
    #[arg(long, value_delimiter = ',')]
    pub checkers: Vec<String>,
    /// Number of seeded random perturbations to add.
    #[arg(long, default_value_t = 0)]
    pub sweep: usize,
    /// Replace every invariant effect with a non-invariant one.
    #[arg(long, hide = true)]
    pub inject_noninvariant: bool,
}

#[derive(Debug, Args)]
pub struct WidthArgs {
    #[command(flatten)]
    pub input: Input,
    /// Comma-separated confidence levels (default: the scenario's grid).
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Also write the phase density sampled on this many points.
    #[arg(long)]
    pub dump_density: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[command(flatten)]
    pub input: Input,
    /// uniform-superposition, number-eigenstate, binomial(p) or gaussian(sigma).
    #[arg(long, default_value = "uniform-superposition")]
    pub family: String,
    /// Comma-separated reference dimensions.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    pub dims: Vec<usize>,
}

/// Runs a parsed command and returns its exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Verify(args) => run_verify(args),
        Command::Width(args) => run_width(args),
        Command::Tradeoff(args) => run_tradeoff(args),
        Command::Presets { show } => {
            match show {
                Some(name) => {
                    let text = presets::source(&name)
                        .ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?;
                    print!("{text}");
                }
                None => presets::names().for_each(|n| println!("{n}")),
            }
            Ok(EXIT_PASS)
        }
    }
}

fn run_verify(args: VerifyArgs) -> Result<i32, CliError> {
    let s = args.input.resolve()?;
    let opts = verify::VerifyOptions {
        checkers: args.checkers,
        sweep: args.sweep,
        inject_noninvariant: args.inject_noninvariant,
    };
    let outcome = verify::verify(&s, &opts)?;
    let header = args.input.header("verify", &s);
    verify::write(&args.input.out, &header, &outcome)?;
    println!(
        "{:<22}{:>7}{:>12}{:>6}{:>10}{:>14}",
        "checker", "count", "applicable", "NA", "failures", "min_slack"
    );
    for r in &outcome.summary {
        let slack = r.min_slack.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<22}{:>7}{:>12}{:>6}{:>10}{:>14}",
            r.checker, r.count, r.applicable, r.not_applicable, r.failures, slack
        );
    }
    println!("{} failure(s); reports in {}", outcome.failures(), args.input.out.display());
    Ok(outcome.exit_code())
}

fn run_width(args: WidthArgs) -> Result<i32, CliError> {
    let s = args.input.resolve()?;
    let eps = if args.eps.is_empty() { s.eps_grid.clone() } else { args.eps };
    if let Some(e) = eps.iter().find(|e| !(0.0..1.0).contains(*e)) {
        return Err(CliError::Usage(format!("--eps value {e} outside [0, 1)")));
    }
    let m = width::measure(&s)?;
    let rows = width::width_table(&m, &eps)?;
    let header = args.input.header("width", &s);
    let dir = output::prepare_dir(&args.input.out)?;
    let table = width::width_csv(&header, &rows);
    output::write_text(&dir.join(width::WIDTH_FILE), &table)?;
    print!("{}", output::csv_body(&table).collect::<Vec<_>>().join("\n"));
    println!();
    if let Some(n) = args.dump_density {
        if n == 0 {
            return Err(CliError::Usage("--dump-density needs a positive sample count".into()));
        }
        output::write_text(&dir.join(width::DENSITY_FILE), &width::density_csv(&header, &m, n))?;
    }
    Ok(EXIT_PASS)
}

fn run_tradeoff(args: TradeoffArgs) -> Result<i32, CliError> {
    let s = args.input.resolve()?;
    let family: ReferenceFamily = args
        .family
        .parse()
        .map_err(|e: qrf::Error| CliError::Usage(e.to_string()))?;
    let table = tradeoff::run(&s, family, &args.dims)?;
    let header = args.input.header("tradeoff", &s);
    let dir = output::prepare_dir(&args.input.out)?;
    let csv = tradeoff::csv(&header, &table);
    output::write_text(&dir.join(tradeoff::CSV_FILE), &csv)?;
    let sidecar = tradeoff::Sidecar { header, table };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serialises");
    output::write_text(&dir.join(tradeoff::JSON_FILE), &json)?;
    print!("{}", output::csv_body(&csv).collect::<Vec<_>>().join("\n"));
    println!();
    let failures = tradeoff::certificate_failures(&sidecar.table);
    println!(
        "min certificate slack: {:.6e} ({failures} failing)",
        sidecar.table.min_certificate_slack()
    );
    Ok(if failures == 0 { EXIT_PASS } else { EXIT_FAILURE })
}

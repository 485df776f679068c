use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use risnoma::analysis::Sic;
use risnoma::channel::{lambda_q_of_bits, Adc};
use risnoma::numerics::{gauss_laguerre, DEFAULT_QUADRATURE_ORDER};
use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;
use crate::error::{CliError, Result};
use crate::output::{format_float, write_table, Format, Table};
use crate::sweep::{run_sweep, Scenario};
use crate::validate::validate;

/// Trials per regime for `validate` when neither the flag nor the config sets one.
pub const DEFAULT_VALIDATE_TRIALS: u64 = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "risnoma", version, about = "Outage analysis of quantized RIS-aided NOMA downlinks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate OP and throughput over one swept parameter.
    Sweep(RunArgs),
    /// Compare closed-form OP with simulation for every user and regime.
    Validate(RunArgs),
    /// Print a Gauss-Laguerre rule.
    GlqTable(GlqArgs),
    /// Print ADC distortion factors.
    LambdaQ(LambdaArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file; the reference scenario when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo trials; overrides `sweep.mc_trials`.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Simulation threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GlqArgs {
    #[arg(long, default_value_t = DEFAULT_QUADRATURE_ORDER)]
    pub order: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LambdaArgs {
    #[arg(long, default_value_t = 8)]
    pub max_bits: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlqRow {
    pub index: usize,
    pub node: f64,
    pub weight: f64,
}

impl Table for GlqRow {
    const HEADER: &'static [&'static str] = &["index", "node", "weight"];

    fn record(&self) -> Vec<String> {
        vec![self.index.to_string(), format_float(self.node), format_float(self.weight)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub bits: String,
    pub lambda_q: f64,
}

impl Table for LambdaRow {
    const HEADER: &'static [&'static str] = &["bits", "lambda_q"];

    fn record(&self) -> Vec<String> {
        vec![self.bits.clone(), format_float(self.lambda_q)]
    }
}

fn load(args: &RunArgs) -> Result<ConfigFile> {
    match &args.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn emit<T: Table>(rows: &[T], out: &OutputArgs) -> Result<()> {
    let mut buf = Vec::new();
    write_table(rows, out.format, &mut buf)?;
    match &out.out {
        Some(path) => std::fs::write(path, buf)?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(args) => {
            let file = load(&args)?;
            let mut spec = file.sweep_spec()?;
            if let Some(t) = args.trials {
                spec = spec.with_mc_trials(t)?;
            }
            emit(&run_sweep(&spec, args.seed, args.workers)?, &args.output)
        }
        Command::Validate(args) => {
            let file = load(&args)?;
            let base = file.system()?;
            let trials = args
                .trials
                .or((file.sweep.mc_trials > 0).then_some(file.sweep.mc_trials))
                .unwrap_or(DEFAULT_VALIDATE_TRIALS);
            if trials == 0 {
                return Err(CliError::Config("--trials must be >= 1".into()));
            }
            let regimes: Vec<Scenario> =
                Scenario::ALL.into_iter().filter(|r| r.sic == Sic::Perfect || !base.sic.is_perfect()).collect();
            let rule = gauss_laguerre(file.sweep.quadrature_order)?;
            let rows = validate(&base, &file.power_model()?, &regimes, trials, args.seed, args.workers, &rule)?;
            emit(&rows, &args.output)?;
            let failed = rows.iter().filter(|r| !r.pass).count();
            eprintln!("validate: {} of {} checks passed", rows.len() - failed, rows.len());
            if failed > 0 {
                return Err(CliError::ValidationFailed { failed, total: rows.len() });
            }
            Ok(())
        }
        Command::GlqTable(args) => {
            let rule = gauss_laguerre(args.order)?;
            let rows: Vec<GlqRow> =
                rule.iter().enumerate().map(|(index, (node, weight))| GlqRow { index, node, weight }).collect();
            emit(&rows, &args.output)
        }
        Command::LambdaQ(args) => {
            let mut rows = Vec::new();
            for b in 1..=args.max_bits {
                rows.push(LambdaRow { bits: b.to_string(), lambda_q: lambda_q_of_bits(Adc::Bits(b))? });
            }
            rows.push(LambdaRow { bits: "full".into(), lambda_q: lambda_q_of_bits(Adc::FullPrecision)? });
            emit(&rows, &args.output)
        }
    }
}

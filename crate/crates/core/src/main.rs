use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use finsler_gbc::cli::run::standalone_config;
use finsler_gbc::cli::{emit_report, run_degrees, run_gbc, run_identity_suite, run_minkowski_props};
use finsler_gbc::cli::{ExperimentConfig, Format, Report};
use finsler_gbc::Result;

#[derive(Parser)]
#[command(version, about = "Numerical Gauss-Bonnet-Chern checks on Finsler surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Chern-type integrand over the excised surface.
    Gbc(Overrides),
    /// Pointwise transgression identities and the bigraded-algebra suite.
    Identities(Overrides),
    /// Sums of Minkowski norms and Cartan-tensor identities.
    MinkowskiProps(Overrides),
    /// Winding degrees and Poincaré–Hopf sums of built-in vector fields.
    Degrees(Overrides),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct Overrides {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    order_fiber: Option<usize>,
    #[arg(long)]
    order_base: Option<usize>,
    /// Comma-separated, strictly decreasing excision radii.
    #[arg(long, value_delimiter = ',')]
    epsilon_schedule: Option<Vec<f64>>,
    #[arg(long)]
    richardson: Option<Switch>,
    /// Directory for CSV and text reports.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn config(&self, fallback: &str, required: bool) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None if required => {
                return Err(finsler_gbc::GbcError::Config("this command needs --config <file>".into()));
            }
            None => standalone_config(fallback),
        };
        let q = &mut cfg.quadrature;
        if let Some(v) = self.order_fiber {
            q.order_fiber = v;
        }
        if let Some(v) = self.order_base {
            q.order_base = v;
            q.order_boundary = v;
        }
        if let Some(v) = &self.epsilon_schedule {
            q.epsilon_schedule = v.clone();
        }
        if let Some(v) = self.richardson {
            q.richardson = matches!(v, Switch::On);
        }
        if let Some(v) = &self.out {
            cfg.output.dir = Some(v.clone());
        }
        if let Some(v) = self.format {
            cfg.output.format = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: &Cli) -> Result<(Report, ExperimentConfig)> {
    let (overrides, name, required): (&Overrides, &str, bool) = match &cli.command {
        Command::Gbc(o) => (o, "gbc", true),
        Command::Identities(o) => (o, "identities", true),
        Command::MinkowskiProps(o) => (o, "minkowski_props", false),
        Command::Degrees(o) => (o, "degrees", false),
    };
    let cfg = overrides.config(name, required)?;
    let report = match &cli.command {
        Command::Gbc(_) => run_gbc(&cfg)?,
        Command::Identities(_) => run_identity_suite(&cfg)?,
        Command::MinkowskiProps(_) => run_minkowski_props(&cfg)?,
        Command::Degrees(_) => run_degrees(&cfg)?,
    };
    Ok((report, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = execute(&cli).and_then(|(report, cfg)| {
        let (text, written) = emit_report(&report, cfg.output.dir.as_deref(), cfg.output.format)?;
        print!("{text}");
        for path in written {
            eprintln!("wrote {}", path.display());
        }
        Ok(report.passed())
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

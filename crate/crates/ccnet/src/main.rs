use ccnet::config::{Experiment, ExperimentConfig, GeometryMode, StripObservable};
use ccnet::experiments::RunError;
use ccnet_core::operator::phi_from_energy;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Monte Carlo experiments on the Chalker-Coddington network model.
#[derive(Parser)]
#[command(name = "ccnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check ‖U*U − I‖ on random instances
    Unitarity(Flags),
    /// Dense eigenvalues (compared with the exact block spectrum at phi = 0)
    Spectrum(Flags),
    /// Probability that a point of the circle is farther than eta from the spectrum
    Gaps(Flags),
    /// Fractional moments of resolvent elements
    Moments(Flags),
    /// Eigenfunction correlator decay
    Correlator(Flags),
    /// One-step contraction of fractional moments
    Contraction(Flags),
    /// Position moments of a spreading wave packet
    Spread(Flags),
    /// Correlator decay or spreading on a strip
    Strip(Flags),
    /// Run a complete JSON config (see --print-config)
    Run {
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Flags {
    #[arg(long, allow_negative_numbers = true, conflicts_with = "epsilon")]
    phi: Option<f64>,
    /// Energy; sets phi through the energy-to-angle map
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long = "L1")]
    l1: Option<u32>,
    /// Box half-size in y; for strips, the half-height M
    #[arg(long = "L2")]
    l2: Option<u32>,
    #[arg(long, value_enum)]
    mode: Option<GeometryMode>,
    /// Periodic x-length of a strip
    #[arg(long)]
    length: Option<u32>,
    /// Fractional exponent in (0, 1)
    #[arg(long)]
    s: Option<f64>,
    /// Comma-separated radii of the spectral parameter grid
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    #[arg(long)]
    theta_count: Option<u32>,
    #[arg(long)]
    eta: Option<f64>,
    /// Moment order for spreading runs
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of disorder seeds for spreading runs
    #[arg(long)]
    seeds: Option<u32>,
    #[arg(long)]
    d_min: Option<u32>,
    #[arg(long)]
    d_max: Option<u32>,
    #[arg(long)]
    plateau_factor: Option<f64>,
    #[arg(long, value_enum)]
    observable: Option<StripObservable>,
    /// File of `m n re im` rows
    #[arg(long)]
    initial_state: Option<PathBuf>,
    /// Also write the first trial's operator as sparse triplets
    #[arg(long)]
    operator_out: Option<PathBuf>,
    /// Worker threads (default: CCNET_WORKERS or all cores)
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved config as JSON and exit
    #[arg(long)]
    print_config: bool,
}

impl Flags {
    fn resolve(self, experiment: Experiment) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults_for(experiment);
        if let Some(eps) = self.epsilon {
            c.phi = phi_from_energy(eps).radians();
        }
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = self.$field { c.$field = v; })*};
        }
        set!(
            phi,
            l1,
            l2,
            mode,
            s,
            rho,
            theta_count,
            eta,
            p,
            horizon,
            trials,
            seed,
            seeds,
            d_min,
            d_max,
            plateau_factor,
            observable
        );
        if self.mode.is_some_and(|m| m != GeometryMode::Strip) {
            c.length = None;
        }
        c.length = self.length.or(c.length);
        c.initial_state = self.initial_state;
        c.operator_out = self.operator_out;
        c.workers = self.workers;
        c.out = self.out;
        c
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match cli.command {
        Command::Unitarity(f) => (Experiment::Unitarity, f),
        Command::Spectrum(f) => (Experiment::Spectrum, f),
        Command::Gaps(f) => (Experiment::Gaps, f),
        Command::Moments(f) => (Experiment::Moments, f),
        Command::Correlator(f) => (Experiment::Correlator, f),
        Command::Contraction(f) => (Experiment::Contraction, f),
        Command::Spread(f) => (Experiment::Spread, f),
        Command::Strip(f) => (Experiment::Strip, f),
        Command::Run {
            config,
            workers,
            out,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return fail(RunError::Config(format!("{}: {e}", config.display()))),
            };
            return match ExperimentConfig::from_json(&text) {
                Ok(mut c) => {
                    c.workers = workers.or(c.workers);
                    c.out = out.or(c.out);
                    finish(&c)
                }
                Err(e) => fail(RunError::Config(format!("{}: {e}", config.display()))),
            };
        }
    };
    let print = flags.print_config;
    let config = flags.resolve(experiment);
    if print {
        println!("{}", config.to_json());
        return ExitCode::SUCCESS;
    }
    finish(&config)
}

fn finish(config: &ExperimentConfig) -> ExitCode {
    match ccnet::run(config) {
        Ok(a) => {
            eprintln!("wrote {} and {}", a.table.display(), a.summary.display());
            if let Some(op) = a.operator {
                eprintln!("wrote {}", op.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("ccnet: {e}");
    ExitCode::from(e.exit_code())
}

use backflash_cli::commands::{self, KeyRateRequest};
use backflash_cli::CliError;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Monte Carlo simulator and analysis toolkit for the detector backflash
/// side channel in polarization-encoded BB84 receivers.
#[derive(Parser)]
#[command(name = "backflash", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write clicks.csv, genealogy.csv, and the run
    /// manifest.
    Simulate(SimulateArgs),
    /// Analyze the click CSVs of a run directory into histogram, peak,
    /// ratio-matrix, and estimate CSVs.
    Analyze(AnalyzeArgs),
    /// Evaluate the tagged-signal secret key rate into keyrate.csv.
    Keyrate(KeyrateArgs),
    /// Bundled preset experiments.
    Preset(PresetArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file (TOML); see docs/formats.md for the schema.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled preset name; see `preset list`.
    #[arg(long)]
    preset: Option<String>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for multi-run scenarios.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run directory produced by `simulate` (or a directory of labeled
    /// run subdirectories).
    #[arg(long = "in")]
    in_dir: PathBuf,
    /// Output directory; defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KeyrateArgs {
    /// Detection probability per signal sent.
    #[arg(long)]
    p_det: f64,
    /// Quantum bit error rate of the sifted key.
    #[arg(long)]
    qber: f64,
    /// Explicit error-correction leakage (bits per signal); otherwise
    /// computed as ec_inefficiency * h(qber) * p_det.
    #[arg(long)]
    leak_ec: Option<f64>,
    /// Error-correction inefficiency factor f.
    #[arg(long, default_value_t = 1.2)]
    ec_inefficiency: f64,
    /// Evaluate a single tagged fraction P_E.
    #[arg(long)]
    tag_fraction: Option<f64>,
    /// Sweep the tagged fraction from 0 to p_det in this many steps.
    #[arg(long)]
    sweep_tag_fraction: Option<usize>,
    /// Sweep the error rate from 0 to 0.5 in this many steps.
    #[arg(long)]
    sweep_qber: Option<usize>,
    /// Pull p_b_estimate from an estimates.csv and add the worst-case
    /// tagged-fraction point P_E = P_b * T_b.
    #[arg(long)]
    from_estimates: Option<PathBuf>,
    /// Reverse transmission T_b used with --from-estimates.
    #[arg(long)]
    reverse_transmission: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PresetArgs {
    #[command(subcommand)]
    action: PresetAction,
}

#[derive(Subcommand)]
enum PresetAction {
    /// List the bundled presets.
    List,
    /// Run a preset end to end (simulate and analyze) into a directory.
    Run {
        name: String,
        #[arg(long)]
        out: PathBuf,
        /// Override the preset seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for multi-run presets.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => commands::simulate(
            args.config.as_deref(),
            args.preset.as_deref(),
            args.seed,
            &args.out,
            args.jobs,
        ),
        Command::Analyze(args) => commands::analyze(&args.in_dir, args.out.as_deref()),
        Command::Keyrate(args) => {
            let request = KeyRateRequest {
                p_det: args.p_det,
                qber: args.qber,
                leak_ec: args.leak_ec,
                ec_inefficiency: args.ec_inefficiency,
                tag_fraction: args.tag_fraction,
                sweep_tag_steps: args.sweep_tag_fraction,
                sweep_qber_steps: args.sweep_qber,
                from_estimates: args.from_estimates,
                reverse_transmission: args.reverse_transmission,
            };
            commands::keyrate(&request, &args.out)
        }
        Command::Preset(args) => match args.action {
            PresetAction::List => {
                print!("{}", commands::preset_list());
                Ok(())
            }
            PresetAction::Run {
                name,
                out,
                seed,
                jobs,
            } => commands::preset_run(&name, seed, &out, jobs),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

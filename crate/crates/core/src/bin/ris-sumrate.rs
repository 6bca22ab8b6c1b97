use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ris_sumrate::harness::{run_antenna_sweep, run_array_factor, run_convergence, write_outputs, ExperimentResult};
use ris_sumrate::optimizer::CouplingMode;
use ris_sumrate::scenario::load_scenario;
use ris_sumrate::Result;

#[derive(Parser)]
#[command(name = "ris-sumrate", version, about = "RIS sum-rate experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write CSV plus metadata.json into --out.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Convergence,
    Sweep,
    Af,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Mca,
    Mcu,
    Both,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    experiment: Experiment,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to both for convergence and sweep, the scenario's mode for af.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Antenna counts for the sweep (M = L).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    l_values: Vec<usize>,
    /// RIS spacings for the sweep, in wavelengths.
    #[arg(long, value_delimiter = ',', default_value = "0.25")]
    spacings: Vec<f64>,
    #[arg(long, default_value_t = 361)]
    theta_points: usize,
    /// Zero-based RIS index for the array-factor cut.
    #[arg(long, default_value_t = 1)]
    ris_index: usize,
    /// Original experiment sizes: L = M = 5 for convergence, L up to 5 and
    /// 10000 iterations for the sweep.
    #[arg(long)]
    full_scale: bool,
}

fn modes(arg: Option<ModeArg>, fallback: &[CouplingMode]) -> Vec<CouplingMode> {
    match arg {
        Some(ModeArg::Mca) => vec![CouplingMode::Mca],
        Some(ModeArg::Mcu) => vec![CouplingMode::Mcu],
        Some(ModeArg::Both) => vec![CouplingMode::Mca, CouplingMode::Mcu],
        None => fallback.to_vec(),
    }
}

fn run(args: RunArgs) -> Result<ExperimentResult> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(n) = args.iters {
        scenario.iterations = n;
    } else if args.full_scale {
        scenario.iterations = 10_000;
    }
    if let Some(d) = args.delta {
        scenario.delta = d;
    }
    if let Some(s) = args.seed {
        scenario.seed = s;
    }
    let both = [CouplingMode::Mca, CouplingMode::Mcu];
    match args.experiment {
        Experiment::Convergence => {
            if args.full_scale {
                scenario.tx_antennas = 5;
                scenario.rx_antennas = 5;
            }
            scenario.validate()?;
            run_convergence(&scenario, &modes(args.mode, &both))
        }
        Experiment::Sweep => {
            scenario.validate()?;
            let l_values: Vec<usize> = if args.full_scale { (1..=5).collect() } else { args.l_values };
            run_antenna_sweep(&scenario, &l_values, &args.spacings, &modes(args.mode, &both))
        }
        Experiment::Af => {
            if let Some(ModeArg::Mca) = args.mode {
                scenario.mode = CouplingMode::Mca;
            } else if let Some(ModeArg::Mcu) = args.mode {
                scenario.mode = CouplingMode::Mcu;
            }
            scenario.validate()?;
            run_array_factor(&scenario, args.ris_index, args.theta_points)
        }
    }
    .and_then(|result| {
        write_outputs(&result, &args.out)?;
        Ok(result)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(args) {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}

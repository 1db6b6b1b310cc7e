use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qscatter::config::{Mode, RunConfig};
use qscatter::{run, Error};

#[derive(Parser)]
#[command(name = "qscatter", version, about = "Two-fermion scattering and entanglement under a pulsed sine potential")]
struct Cli {
    #[command(subcommand)]
    mode: ModeArg,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file with flat dotted keys (`pulse.amplitude_meV = 6.11`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Replace one configuration key, e.g. `--override grid.n=1024`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum ModeArg {
    /// Single-particle run: observables, densities, spectra.
    Single1d(Common),
    /// Two-particle run: entanglement entropy and marginal densities.
    Pair2d(Common),
    /// Two-particle runs over `sweep.t_on_list_ps`, with stationary entropies.
    Sweep(Common),
    /// Compare momentum-ladder and real-space band weights.
    Validate(Common),
}

fn report(e: &Error) {
    let msg = serde_json::json!({ "error": e.to_string(), "field": e.field() });
    eprintln!("{msg}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match &cli.mode {
        ModeArg::Single1d(c) => (Mode::Single1d, c),
        ModeArg::Pair2d(c) => (Mode::Pair2d, c),
        ModeArg::Sweep(c) => (Mode::Sweep, c),
        ModeArg::Validate(c) => (Mode::Validate, c),
    };
    let result = RunConfig::load(mode, common.config.as_deref(), &common.overrides).and_then(|cfg| {
        let out = &common.out;
        match mode {
            Mode::Single1d => run::run_single(&cfg, out).map(|o| {
                println!("final band weights: {:?}", o.summary.bands.weights);
            }),
            Mode::Pair2d => run::run_pair(&cfg, out).map(|o| {
                println!(
                    "final entropy {:.6} nats, maximum {:.6} at {:.3} ps",
                    o.summary.final_entropy, o.summary.max_entropy, o.summary.t_max_entropy
                );
            }),
            Mode::Sweep => run::run_sweep(&cfg, out).map(|o| {
                for p in o.points {
                    println!("t_on {:.4} ps: stationary entropy {:.6} nats", p.t_on, p.entropy);
                }
            }),
            Mode::Validate => run::run_validate(&cfg, out).and_then(|r| {
                print!("{}", r.table());
                r.into_result().map(|_| ())
            }),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

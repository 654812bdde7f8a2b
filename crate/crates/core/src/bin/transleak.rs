use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use transleak::bath::BathSpec;
use transleak::cli::{run, run_scenario, Experiment, RunOptions, RunReport, Scenario};
use transleak::noise::NoiseCheckConfig;
use transleak::transmon::TransmonSpec;

#[derive(Parser)]
#[command(
    name = "transleak",
    version,
    about = "Leakage and gate experiments on a dissipative transmon"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the scenario's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, env = transleak::cli::OUTPUT_ENV)]
    out: Option<PathBuf>,
}

impl Common {
    fn options(self) -> RunOptions {
        RunOptions {
            out: self.out,
            seed: self.seed,
            threads: self.threads,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a scenario file
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate the noise correlations and compare them with the bath
    NoiseCheck {
        #[arg(long, default_value_t = 0.2)]
        kappa: f64,
        #[arg(long, default_value_t = 5.0)]
        beta: f64,
        #[arg(long, default_value_t = 50.0)]
        cutoff: f64,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn report(r: &RunReport) {
    for line in &r.summary {
        println!("{line}");
    }
    match r.passed {
        Some(true) => println!("verdict: pass"),
        Some(false) => println!("verdict: FAIL"),
        None => {}
    }
    println!("wrote {} files to {}", r.files.len(), r.out_dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, common } => run_scenario(&scenario, &common.options()),
        Command::NoiseCheck {
            kappa,
            beta,
            cutoff,
            paths,
            dt,
            common,
        } => {
            let noise = NoiseCheckConfig {
                n_paths: paths,
                dt,
                ..Default::default()
            };
            let scenario = Scenario {
                name: Experiment::NoiseCheck,
                title: None,
                transmon: TransmonSpec::new(50.0, 3),
                bath: BathSpec::new(kappa, beta, cutoff),
                evolution: Default::default(),
                pulse: None,
                sweep: Default::default(),
                noise: Some(noise),
                output: Default::default(),
            };
            scenario
                .validate()
                .and_then(|()| run(&scenario, None, &common.options()))
        }
    };
    match result {
        Ok(r) => {
            report(&r);
            ExitCode::from(r.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

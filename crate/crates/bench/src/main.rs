use clap::{Parser, Subcommand};
use nsprec::bench::{run, sweep, sweep_csv, RunConfig, SweepAxis};
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs Navier-Stokes preconditioner benchmarks from JSON configs.
///
/// Set NSPREC_SERIAL=1 for serial runs with byte-identical reports (timings omitted).
#[derive(Parser)]
#[command(name = "nsprec", version)]
struct Cli {
    /// Directory for reports.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write `<name>.report.json` and `<name>.csv`.
    Run { config: PathBuf },
    /// Repeat a configuration over values of one axis and write a summary table.
    Sweep {
        config: PathBuf,
        /// subdomains | reynolds_nu | reynolds_v | cfl
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values; may be empty.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Ok(false) when some solve diverged.
fn execute(cli: &Cli) -> nsprec::Result<bool> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(config)?;
            let report = run(&cfg)?;
            for p in report.write(&cli.out)? {
                println!("{}", p.display());
            }
            println!(
                "{}: {:?}, {} Newton steps, {} GMRES iterations, {:.2} per step",
                report.name, report.status, report.newton_steps, report.gmres_iterations, report.avg_iterations
            );
            Ok(report.converged())
        }
        Command::Sweep { config, axis, values } => {
            let cfg = RunConfig::load(config)?;
            let rows = sweep(&cfg, *axis, values)?;
            for r in &rows {
                r.report.write(&cli.out)?;
            }
            std::fs::create_dir_all(&cli.out)?;
            let table = sweep_csv(*axis, &rows);
            let path = cli.out.join(format!("{}.sweep.csv", cfg.name));
            std::fs::write(&path, &table)?;
            print!("{table}");
            println!("{}", path.display());
            Ok(rows.iter().all(|r| r.report.converged()))
        }
    }
}

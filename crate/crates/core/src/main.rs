use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wgf::cli::{describe_equilibria, parse_metric, parse_scenario, run, run_suite, scenario_equilibria, RunOptions};
use wgf::measures::read_measure_csv;
use wgf::Error;

#[derive(Parser)]
#[command(name = "wgf", version, about = "Wasserstein gradient flows in one dimension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and its checks.
    Run {
        config: PathBuf,
        /// Output root (default: $WGF_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep every N-th recorded state as a snapshot.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Run every *.cfg in a directory.
    Suite {
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve and dump the stationary set of a scenario.
    Equilibria {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance between two measure files.
    Distances {
        a: PathBuf,
        b: PathBuf,
        /// bl, w1, w2 or wp:<p>.
        #[arg(long, default_value = "bl")]
        metric: String,
    },
}

fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("WGF_OUT").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

fn fail(e: &Error) -> u8 {
    eprintln!("error: {e}");
    e.exit_code() as u8
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, stride } => {
            let opts = RunOptions { out: Some(out_root(out)), snapshot_stride: stride };
            match parse_scenario(&config).and_then(|sc| run(&sc, &opts)) {
                Ok(summary) => {
                    println!("{}", summary.verdict_line());
                    print!("{}", summary.report.summary());
                    u8::from(!summary.pass())
                }
                Err(e) => fail(&e),
            }
        }
        Command::Suite { dir, jobs, out } => {
            let opts = RunOptions { out: Some(out_root(out)), snapshot_stride: None };
            match run_suite(&dir, jobs, &opts) {
                Ok(results) => {
                    let mut code = 0u8;
                    for r in &results {
                        match r {
                            Ok(s) => {
                                println!("{}", s.verdict_line());
                                if !s.pass() {
                                    code = code.max(1);
                                }
                            }
                            Err(e) => {
                                println!("ERROR {e}");
                                code = code.max(e.exit_code() as u8);
                            }
                        }
                    }
                    let passed = results.iter().filter(|r| r.as_ref().is_ok_and(|s| s.pass())).count();
                    println!("{passed}/{} scenarios passed", results.len());
                    code
                }
                Err(e) => fail(&e),
            }
        }
        Command::Equilibria { config, out } => {
            let result = parse_scenario(&config).and_then(|sc| {
                let eqs = scenario_equilibria(&sc)?;
                let dir = out_root(out).join(&sc.id).join("equilibria");
                eqs.write_dir(&dir, &sc.model)?;
                for (label, e, g) in describe_equilibria(&sc, &eqs)? {
                    println!("{label}\tE = {e}\tG^q = {g}");
                }
                println!("written to {}", dir.display());
                Ok(())
            });
            match result {
                Ok(()) => 0,
                Err(e) => fail(&e),
            }
        }
        Command::Distances { a, b, metric } => {
            let Some(m) = parse_metric(&metric) else {
                eprintln!("error: unknown metric `{metric}` (use bl, w1, w2 or wp:<p>)");
                return ExitCode::from(2);
            };
            match read_measure_csv(&a).and_then(|x| read_measure_csv(&b).and_then(|y| m.distance(&x, &y))) {
                Ok(d) => {
                    println!("{d}");
                    0
                }
                Err(e) => fail(&e),
            }
        }
    };
    ExitCode::from(code)
}

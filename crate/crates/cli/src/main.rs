use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wignerflow::harness::{
    self, compare_dirs, default_config, portrait_preset, run_portrait, Check, ExperimentConfig, PortraitConfig,
    ToleranceSpec, OUTPUT_ENV, PORTRAIT_PRESETS, REGISTRY,
};

#[derive(Parser)]
#[command(name = "wignerflow", version, about = "Phase-space propagation of open quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its artifacts.
    Run {
        config: PathBuf,
        /// Override the random seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output root (default: config `output_dir`, then $WIGNERFLOW_OUT, then ./out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a centre-flow phase portrait.
    Portrait {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the observables.csv files of two solver directories.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Tolerance file (JSON); without it metrics are only reported.
        #[arg(long)]
        tol: Option<PathBuf>,
    },
    /// List the registered experiments and portrait presets.
    ListExperiments,
    /// Run the built-in oracle checks.
    Selftest,
    /// Print the default config of an experiment or portrait preset.
    Init {
        name: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum Outcome {
    Pass,
    ToleranceFailure,
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        let rel = match c.relation {
            harness::Relation::AtMost => "<=",
            harness::Relation::AtLeast => ">=",
        };
        println!(
            "{} {:<36} {:>12.4e} {rel} {:<10.3e} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold,
            c.detail
        );
    }
}

fn outcome(passed: bool) -> Outcome {
    if passed {
        Outcome::Pass
    } else {
        Outcome::ToleranceFailure
    }
}

fn default_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn write_or_print(text: &str, output: Option<&Path>) -> wignerflow::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => writeln!(std::io::stdout(), "{text}")?,
    }
    Ok(())
}

fn dispatch(cli: Cli) -> wignerflow::Result<Outcome> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::read(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = Some(o);
            }
            let (report, dir) = harness::run(&cfg)?;
            print_checks(&report.checks);
            for m in report.metrics.iter().filter(|m| m.passed == Some(false)) {
                println!("FAIL metric {} ({} vs {}): sup {:.3e}", m.observable, m.solver_a, m.solver_b, m.sup);
            }
            println!("wrote {}", dir.display());
            Ok(outcome(report.passed))
        }
        Command::Portrait { config, out } => {
            let cfg = PortraitConfig::read(&config)?;
            let root = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(default_root);
            let dir = run_portrait(&cfg, &root)?;
            println!("wrote {}", dir.display());
            Ok(Outcome::Pass)
        }
        Command::Compare { dir_a, dir_b, tol } => {
            let spec = match tol {
                Some(p) => ToleranceSpec::read(&p)?,
                None => ToleranceSpec::default(),
            };
            let metrics = compare_dirs(&dir_a, &dir_b, &spec)?;
            println!("{:<16} {:>12} {:>12} {:>8}", "observable", "sup", "rms", "status");
            for m in &metrics {
                let status = match m.passed {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "-",
                };
                println!("{:<16} {:>12.4e} {:>12.4e} {:>8}", m.observable, m.sup, m.rms, status);
            }
            Ok(outcome(metrics.iter().all(|m| m.passed != Some(false))))
        }
        Command::ListExperiments => {
            for e in REGISTRY {
                let tols: Vec<String> = e.acceptance.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
                println!("{:<20} {}", e.name, e.description);
                println!("{:<20} produces: {}", "", e.artifacts);
                println!("{:<20} checks: {}", "", tols.join(", "));
            }
            println!("portrait presets: {}", PORTRAIT_PRESETS.join(", "));
            Ok(Outcome::Pass)
        }
        Command::Selftest => {
            let checks = harness::selftest()?;
            print_checks(&checks);
            Ok(outcome(checks.iter().all(|c| c.passed)))
        }
        Command::Init { name, output } => {
            let text = if let Some(preset) = name.strip_prefix("portrait:") {
                portrait_preset(preset)?.to_json()?
            } else {
                default_config(&name)?.to_json()?
            };
            write_or_print(&text, output.as_deref())?;
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::ToleranceFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

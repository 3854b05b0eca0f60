use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sgfem::experiment::{preset_names, preset_source, run, RunConfig};
use sgfem::SgfemError;

#[derive(Parser)]
#[command(
    name = "sgfem",
    version,
    about = "Stochastic Galerkin FEM runs with a posteriori error estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write run.json, table.csv and (adaptive runs) trace.csv
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a configuration and list every violated constraint
    Validate {
        #[command(flatten)]
        source: Source,
        /// Print the fully expanded configuration
        #[arg(long)]
        print: bool,
    },
    /// List the shipped presets
    ListPresets,
}

#[derive(Args)]
struct Source {
    /// Configuration file (TOML)
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset name
    #[arg(long)]
    preset: Option<String>,
    /// Override a configuration key, e.g. --set model.sigma=0.4 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<SgfemError> for Failure {
    fn from(e: SgfemError) -> Self {
        match e {
            SgfemError::Config(m) => Failure::Config(m),
            SgfemError::Io(e) => Failure::Numerical(format!("i/o error: {e}")),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn load(src: &Source) -> Result<RunConfig, Failure> {
    let cfg = match (&src.config, &src.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(&text, &src.overrides)?
        }
        (None, Some(name)) => RunConfig::from_preset(name, &src.overrides)?,
        (None, None) => RunConfig::from_preset("default", &src.overrides)?,
    };
    Ok(cfg)
}

fn check(cfg: &RunConfig) -> Result<(), Failure> {
    let v = cfg.validate();
    if v.is_empty() {
        return Ok(());
    }
    let mut msg = format!("{} violated constraint(s):", v.len());
    for line in v {
        msg.push_str("\n  - ");
        msg.push_str(&line);
    }
    Err(Failure::Config(msg))
}

fn write(dir: &Path, name: &str, content: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| Failure::Numerical(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ListPresets => {
            for name in preset_names() {
                let first = preset_source(name)
                    .and_then(|s| s.lines().next())
                    .map(|l| l.trim_start_matches('#').trim())
                    .unwrap_or("");
                println!("{name:<18} {first}");
            }
            Ok(())
        }
        Command::Validate { source, print } => {
            let cfg = load(&source)?;
            check(&cfg)?;
            if print {
                print!("{}", cfg.to_toml());
            }
            println!("ok");
            Ok(())
        }
        Command::Run { source, out, threads } => {
            let cfg = load(&source)?;
            check(&cfg)?;
            if let Some(n) = threads {
                if n == 0 {
                    return Err(Failure::Config("--threads must be at least 1".into()));
                }
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
            }
            fs::create_dir_all(&out)
                .map_err(|e| Failure::Numerical(format!("cannot create {}: {e}", out.display())))?;
            log::info!("running '{}' into {}", cfg.name, out.display());
            let record = run(&cfg)?;
            let json = serde_json::to_string_pretty(&record).map_err(|e| Failure::Numerical(e.to_string()))?;
            write(&out, "run.json", &json)?;
            let table = record.table_csv();
            write(&out, "table.csv", &table)?;
            if let Some(trace) = record.trace_csv() {
                write(&out, "trace.csv", &trace)?;
            }
            print!("{table}");
            log::info!("finished in {:.2} s", record.seconds);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("run failed: {m}");
            ExitCode::from(3)
        }
    }
}

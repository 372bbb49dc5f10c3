use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lexi_morl_core::envsim::MapSpec;
use lexi_morl_core::eval::{compare, Policy};
use lexi_morl_core::train::TrainMode;
use lexi_morl::config::FileConfig;
use lexi_morl::{ckpt, evalrun, report, runner, selftest, traces};

/// Thresholded lexicographic multi-objective Q-learning for longitudinal
/// control among crossing pedestrians.
#[derive(Parser)]
#[command(name = "lexi-morl", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Morl,
    Sorl,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MapArg {
    Train,
    Heldout1,
    Heldout2,
}

impl MapArg {
    fn name(self) -> &'static str {
        match self {
            MapArg::Train => "train",
            MapArg::Heldout1 => "heldout1",
            MapArg::Heldout2 => "heldout2",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScriptedArg {
    Brake,
    Accelerate,
    Decelerate,
    Maintain,
}

impl ScriptedArg {
    fn action(self) -> lexi_morl_core::Action {
        match self {
            ScriptedArg::Brake => lexi_morl_core::Action::Brake,
            ScriptedArg::Accelerate => lexi_morl_core::Action::Accelerate,
            ScriptedArg::Decelerate => lexi_morl_core::Action::Decelerate,
            ScriptedArg::Maintain => lexi_morl_core::Action::Maintain,
        }
    }
}

#[derive(Args)]
struct MapSelection {
    /// Builtin map to run on.
    #[arg(long = "maps", value_enum, default_value = "train")]
    maps: MapArg,
    /// JSON map file overriding the builtin selection.
    #[arg(long)]
    map_file: Option<PathBuf>,
}

impl MapSelection {
    fn load(&self) -> Result<MapSpec> {
        let map = match &self.map_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read map file {}", path.display()))?;
                let map: MapSpec = serde_json::from_str(&text)
                    .with_context(|| format!("cannot parse map file {}", path.display()))?;
                map
            }
            None => MapSpec::by_name(self.maps.name()).expect("builtin map"),
        };
        map.validate().map_err(|e| anyhow!("invalid map: {e}"))?;
        Ok(map)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write manifest, log and checkpoints.
    Train {
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Seed override for the configured training seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for run artifacts.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        map: MapSelection,
    },
    /// Evaluate a checkpoint or a scripted policy over seeded episodes.
    Eval {
        /// Checkpoint file produced by `train`.
        #[arg(long, required_unless_present = "policy", conflicts_with = "policy")]
        checkpoint: Option<PathBuf>,
        /// Scripted policy instead of a checkpoint.
        #[arg(long, value_enum)]
        policy: Option<ScriptedArg>,
        #[command(flatten)]
        map: MapSelection,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Report output path (JSON; a CSV twin is written next to it).
        #[arg(long)]
        report: PathBuf,
        /// Run configuration (JSON); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write one JSON-lines trace per episode into this directory.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
        /// Include the grid observation in each trace record.
        #[arg(long, default_value_t = false)]
        trace_obs: bool,
    },
    /// Compare two evaluation reports metric by metric.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Optional CSV output path.
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
    /// Pretty-print an episode trace and validate its structure.
    Trace {
        /// Episode trace file (JSON lines).
        #[arg(long)]
        episode: PathBuf,
    },
    /// Write a builtin map as JSON.
    Map {
        #[arg(long, value_enum)]
        name: MapArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in verification suites.
    Selftest {
        /// Skip the toy-MDP convergence suite.
        #[arg(long, default_value_t = false)]
        fast: bool,
        /// Inject a known fault to prove the suites detect it (hidden).
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

/// Exit codes: 0 success, 1 usage, 2 data error, 3 verification failure.
enum Outcome {
    Success,
    Data(anyhow::Error),
    Verification(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit
            if matches!(e.kind(), ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
        Ok(Outcome::Data(e)) | Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Train { mode, config, seed, out, map } => {
            let mut cfg = FileConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.train.seed = seed;
            }
            let map = map.load()?;
            let mode = match mode {
                ModeArg::Morl => TrainMode::Morl,
                ModeArg::Sorl => TrainMode::Sorl,
            };
            let paths = runner::run_training(mode, &cfg, &map, &out)?;
            println!(
                "run complete: manifest {}, log {}, final checkpoint {}",
                paths.manifest.display(),
                paths.log.display(),
                paths.final_checkpoint.display()
            );
            Ok(Outcome::Success)
        }
        Command::Eval {
            checkpoint,
            policy,
            map,
            episodes,
            seed,
            report: report_path,
            config,
            trace_dir,
            trace_obs,
        } => {
            let cfg = match config {
                Some(path) => FileConfig::load(&path)?,
                None => FileConfig::default(),
            };
            let map = map.load()?;
            let policy: Policy = match (checkpoint, policy) {
                (Some(path), None) => ckpt::read(&path)?.into_policy()?,
                (None, Some(scripted)) => Policy::Scripted(scripted.action()),
                _ => bail!("exactly one of --checkpoint or --policy is required"),
            };
            let (agg, _) = evalrun::run_eval_parallel(
                &policy,
                &cfg.env,
                &map,
                &cfg.grid,
                cfg.reward.speed_mode,
                episodes,
                seed,
                trace_dir.as_deref(),
                trace_obs,
            )?;
            let csv = report::write_report(&agg, &report_path)?;
            println!(
                "evaluated {} episodes of '{}' on map '{}': report {}, csv {}",
                agg.n_episodes,
                agg.policy,
                agg.map,
                report_path.display(),
                csv.display()
            );
            for row in &agg.rows {
                match row.value {
                    Some(v) => println!("  {:<34} {v:.3}", row.name),
                    None => println!("  {:<34} -", row.name),
                }
            }
            Ok(Outcome::Success)
        }
        Command::Compare { a, b, out_csv } => {
            let ra = report::load_report(&a)?;
            let rb = report::load_report(&b)?;
            let rows = compare(&ra, &rb);
            let label_a = format!("{}@{}", ra.policy, ra.map);
            let label_b = format!("{}@{}", rb.policy, rb.map);
            print!("{}", report::comparison_text(&rows, &label_a, &label_b));
            if let Some(path) = out_csv {
                std::fs::write(&path, report::comparison_csv(&rows))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            Ok(Outcome::Success)
        }
        Command::Trace { episode } => {
            let steps = traces::read_trace(&episode)?;
            match traces::render_trace(&steps) {
                Ok(text) => {
                    print!("{text}");
                    Ok(Outcome::Success)
                }
                Err(e) => Ok(Outcome::Data(e)),
            }
        }
        Command::Map { name, out } => {
            let map = MapSpec::by_name(name.name()).expect("builtin map");
            std::fs::write(&out, serde_json::to_string_pretty(&map)?)
                .with_context(|| format!("cannot write {}", out.display()))?;
            println!("wrote map '{}' to {}", map.name, out.display());
            Ok(Outcome::Success)
        }
        Command::Selftest { fast, inject_fault } => {
            let fault = match inject_fault.as_deref() {
                None => None,
                Some("tlo-strict") => Some(selftest::Fault::TloStrictInequality),
                Some(other) => bail!("unknown fault '{other}' (expected tlo-strict)"),
            };
            let results = selftest::run_all(fast, fault);
            let mut failed = Vec::new();
            for suite in &results {
                let status = if suite.passed { "PASS" } else { "FAIL" };
                println!("[{status}] {}: {}", suite.name, suite.detail);
                if !suite.passed {
                    failed.push(suite.name);
                }
            }
            if failed.is_empty() {
                Ok(Outcome::Success)
            } else {
                Ok(Outcome::Verification(format!("suites failed: {}", failed.join(", "))))
            }
        }
    }
}

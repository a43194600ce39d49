use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpp_core::graph::export_graph;
use fpp_core::oracle::{beta_tail, gamma_cdf};
use fpp_core::percolation::{export_weights, make_distribution, sample_weights, triangle_event_prob};
use fpp_core::rng::derive_seed;
use fpp_core::GraphSpec;
use fpp_harness::audit::Context;
use fpp_harness::config::{parse_config, AuditKind, ExperimentConfig};
use fpp_harness::run::{check_writable, run_experiment, RunOptions};
use fpp_harness::HarnessError;

#[derive(Parser)]
#[command(name = "fpp", version, about = "First-passage percolation geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Experiment config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reject unknown and duplicate config keys
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Export a graph as text
    Generate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Graph family, e.g. `lattice(2,6)`; overrides the config
        #[arg(long)]
        graph: Option<String>,
        /// Halo margin added to the core radius
        #[arg(long)]
        margin: Option<usize>,
        /// Writes `<out>/graphs/<name>.txt` instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample and export one weight assignment
    Percolate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        graph: Option<String>,
        #[arg(long)]
        margin: Option<usize>,
        /// Edge-weight law, e.g. `exponential(1)`
        #[arg(long)]
        distribution: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Writes `<out>/weights/<seed>.txt` instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one audit on one weight sample and print its report as JSON
    Audit {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Audit name; defaults to the first configured audit
        #[arg(long)]
        audit: Option<String>,
        /// Weight seed; defaults to the seed of trial 0
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the full trial ensemble
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides `seeds.trials`
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides `seeds.master`
        #[arg(long)]
        seed: Option<u64>,
        /// Continue after the last complete trial in an existing trials.csv
        #[arg(long)]
        resume: bool,
    },
    /// Closed-form probabilities
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// P(Gamma(shape, scale) ≤ x)
    GammaCdf {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        shape: f64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// P(Beta(a, b) ≥ x)
    BetaTail {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
    /// Probability that three i.i.d. weights all lie in (3δ, 4δ]
    Triangle {
        #[arg(long)]
        distribution: String,
        #[arg(long)]
        delta: f64,
    },
}

fn config_error(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(vec![msg.into()])
}

fn load(args: &ConfigArgs) -> Result<Option<ExperimentConfig>, HarnessError> {
    let Some(path) = &args.config else { return Ok(None) };
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    match parse_config(&text, args.strict) {
        Ok(p) => {
            for w in &p.warnings {
                eprintln!("warning: {}: {w}", path.display());
            }
            Ok(Some(p.config))
        }
        Err(issues) => Err(HarnessError::Config(
            issues.iter().map(|i| format!("{}: {i}", path.display())).collect(),
        )),
    }
}

fn require(cfg: Option<ExperimentConfig>) -> Result<ExperimentConfig, HarnessError> {
    cfg.ok_or_else(|| config_error("--config is required"))
}

fn graph_spec(
    cfg: &Option<ExperimentConfig>,
    graph: &Option<String>,
    margin: Option<usize>,
) -> Result<(GraphSpec, usize), HarnessError> {
    let spec = match (graph, cfg) {
        (Some(s), _) => s.parse::<GraphSpec>().map_err(|e| config_error(e.to_string()))?,
        (None, Some(c)) => c.graph,
        (None, None) => return Err(config_error("give --graph or --config")),
    };
    let margin = margin.or(cfg.as_ref().and_then(|c| (c.graph == spec).then(|| c.margin())));
    Ok((spec, margin.unwrap_or_else(|| spec.default_margin())))
}

fn file_stem(s: &str) -> String {
    let mapped: String = s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    mapped.trim_matches('_').to_string()
}

fn emit(out: &Option<PathBuf>, sub: &str, name: &str, text: &str) -> Result<(), HarnessError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(dir) => {
            let dir = dir.join(sub);
            check_writable(&dir)?;
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn print_value(x: f64) {
    println!("{x:.16e}");
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Generate { cfg, graph, margin, out } => {
            let cfg = load(&cfg)?;
            let (spec, margin) = graph_spec(&cfg, &graph, margin)?;
            let (g, _) = spec.build(margin).map_err(|e| config_error(e.to_string()))?;
            emit(&out, "graphs", &format!("{}.txt", file_stem(&spec.to_string())), &export_graph(&g))
        }
        Command::Percolate { cfg, graph, margin, distribution, seed, out } => {
            let cfg = load(&cfg)?;
            let (spec, margin) = graph_spec(&cfg, &graph, margin)?;
            let d = match (&distribution, &cfg) {
                (Some(s), _) => make_distribution(s).map_err(|e| config_error(e.to_string()))?,
                (None, Some(c)) => c.distribution,
                (None, None) => return Err(config_error("give --distribution or --config")),
            };
            let (g, _) = spec.build(margin).map_err(|e| config_error(e.to_string()))?;
            let w = sample_weights(&g, &d, seed);
            emit(&out, "weights", &format!("{seed}.txt"), &export_weights(&w))
        }
        Command::Audit { cfg, audit, seed } => {
            let cfg = require(load(&cfg)?)?;
            let kind = match audit {
                Some(a) => a.parse::<AuditKind>().map_err(config_error)?,
                None => *cfg.audits.first().ok_or_else(|| config_error("no audits configured"))?,
            };
            let mut cfg = cfg;
            if !cfg.has(kind) {
                cfg.audits.push(kind);
            }
            let ctx = Context::prepare(&cfg).map_err(HarnessError::Config)?;
            let seed = seed.unwrap_or_else(|| derive_seed(cfg.master_seed, 0));
            let w = sample_weights(&ctx.graph, &cfg.distribution, seed);
            let report = ctx.report(kind, &w, seed).map_err(HarnessError::Audit)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Audit(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
        Command::Run { cfg, out, workers, trials, seed, resume } => {
            let mut cfg = require(load(&cfg)?)?;
            if let Some(t) = trials {
                if t == 0 {
                    return Err(config_error("--trials must be >= 1"));
                }
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if workers == Some(0) {
                return Err(config_error("--workers must be >= 1"));
            }
            let opts = RunOptions { workers, resume, out_dir: out, quiet: false };
            let outcome = run_experiment(&cfg, &opts)?;
            let failed = outcome.summary.failures.len();
            eprintln!(
                "{} trials ({} resumed), {failed} audit failures, outputs in {}",
                outcome.records.len(),
                outcome.resumed_trials,
                outcome.out_dir.display()
            );
            for f in &outcome.files {
                eprintln!("  {}", rel(&outcome.out_dir, f));
            }
            Ok(())
        }
        Command::Oracle { which } => {
            match which {
                OracleCommand::GammaCdf { x, shape, scale } => {
                    if !(shape > 0.0 && scale > 0.0) {
                        return Err(config_error("shape and scale must be positive"));
                    }
                    print_value(gamma_cdf(x, shape, scale));
                }
                OracleCommand::BetaTail { x, a, b } => {
                    if !(a > 0.0 && b > 0.0) {
                        return Err(config_error("a and b must be positive"));
                    }
                    print_value(beta_tail(x, a, b));
                }
                OracleCommand::Triangle { distribution, delta } => {
                    let d = make_distribution(&distribution).map_err(|e| config_error(e.to_string()))?;
                    if !(delta > 0.0) {
                        return Err(config_error("delta must be positive"));
                    }
                    print_value(triangle_event_prob(&d, delta));
                }
            }
            Ok(())
        }
    }
}

fn rel(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).display().to_string()
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

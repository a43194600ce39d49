//! Ensemble runner: trial t uses seed `derive_seed(master, t)`.
//!
//! Trials run in parallel chunks; each chunk is written to `trials.csv` in
//! trial order and flushed before the next starts, so a killed run leaves
//! only whole trials behind (plus at most one torn line, dropped on resume).

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fpp_core::percolation::sample_weights;
use fpp_core::rng::derive_seed;
use rayon::prelude::*;

use crate::audit::Context;
use crate::config::{AuditKind, ExperimentConfig};
use crate::error::HarnessError;
use crate::summary::{summarize, Summary};
use crate::svg;

pub const CSV_HEADER: &str = "trial,seed,audit,metric,value";

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// One entry per configured audit, in config order.
    pub values: Vec<(AuditKind, Vec<f64>)>,
    pub errors: Vec<(AuditKind, String)>,
    /// Not persisted; outputs stay byte-identical across runs.
    pub wall_time: Duration,
}

impl TrialRecord {
    pub fn get(&self, audit: AuditKind) -> Option<&[f64]> {
        self.values.iter().find(|(a, _)| *a == audit).map(|(_, v)| v.as_slice())
    }

    pub fn failed(&self, audit: AuditKind) -> bool {
        self.get(audit).map_or(true, |v| v.iter().any(|x| x.is_nan()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub workers: Option<usize>,
    /// Continue from the complete trials in an existing trials.csv.
    pub resume: bool,
    /// Overrides `output.dir`.
    pub out_dir: Option<PathBuf>,
    pub quiet: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub records: Vec<TrialRecord>,
    pub resumed_trials: usize,
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

/// Seeds trial `t` of an experiment.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, trial as u64)
}

pub fn run_trial(ctx: &Context, trial: usize) -> TrialRecord {
    let start = Instant::now();
    let seed = trial_seed(ctx.cfg.master_seed, trial);
    let w = sample_weights(&ctx.graph, &ctx.cfg.distribution, seed);
    let mut values = Vec::with_capacity(ctx.layout.len());
    let mut errors = Vec::new();
    for (audit, names) in &ctx.layout {
        match ctx.evaluate(*audit, &w, seed) {
            Ok(v) => values.push((*audit, v)),
            Err(e) => {
                errors.push((*audit, e));
                values.push((*audit, vec![f64::NAN; names.len()]));
            }
        }
    }
    TrialRecord { trial, seed, values, errors, wall_time: start.elapsed() }
}

fn format_value(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn csv_rows(ctx: &Context, r: &TrialRecord) -> String {
    let mut out = String::new();
    for ((audit, names), (_, vals)) in ctx.layout.iter().zip(&r.values) {
        for (name, v) in names.iter().zip(vals) {
            out.push_str(&format!("{},{},{},{},{}\n", r.trial, r.seed, audit, name, format_value(*v)));
        }
    }
    out
}

/// Complete trials from an existing trials.csv, checked against `ctx`,
/// and the byte length of the prefix that holds them.
pub fn read_trials(ctx: &Context, text: &str) -> Result<(Vec<TrialRecord>, usize), HarnessError> {
    let mismatch = |why: String| HarnessError::Config(vec![format!("existing trials.csv: {why}")]);
    let mut lines = text.split_inclusive('\n');
    let mut consumed = match lines.next() {
        Some(h) if h.ends_with('\n') && h.trim_end() == CSV_HEADER => h.len(),
        _ => return Err(mismatch("missing or unexpected header".into())),
    };
    let per_trial = ctx.scalars_per_trial();
    let expected: Vec<(AuditKind, &str)> =
        ctx.layout.iter().flat_map(|(a, names)| names.iter().map(move |n| (*a, n.as_str()))).collect();
    let rows: Vec<&str> = lines.take_while(|l| l.ends_with('\n')).collect();
    let mut records = Vec::new();
    for (t, chunk) in rows.chunks(per_trial).enumerate() {
        if chunk.len() < per_trial {
            break;
        }
        let seed = trial_seed(ctx.cfg.master_seed, t);
        let mut flat = Vec::with_capacity(per_trial);
        for (row, (audit, name)) in chunk.iter().zip(&expected) {
            let row = row.trim_end();
            let f: Vec<&str> = row.split(',').collect();
            let ok = f.len() == 5
                && f[0] == t.to_string()
                && f[1] == seed.to_string()
                && f[2] == audit.name()
                && f[3] == *name;
            if !ok {
                return Err(mismatch(format!("row {row:?} does not match this configuration")));
            }
            let v = if f[4] == "nan" {
                f64::NAN
            } else {
                f[4].parse::<f64>().map_err(|_| mismatch(format!("bad value in row {row:?}")))?
            };
            flat.push(v);
        }
        let mut values = Vec::with_capacity(ctx.layout.len());
        let mut at = 0;
        for (audit, names) in &ctx.layout {
            values.push((*audit, flat[at..at + names.len()].to_vec()));
            at += names.len();
        }
        consumed += chunk.iter().map(|r| r.len()).sum::<usize>();
        records.push(TrialRecord { trial: t, seed, values, errors: Vec::new(), wall_time: Duration::ZERO });
    }
    Ok((records, consumed))
}

fn io_err(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

/// Runs every trial of `cfg` and writes the configured outputs.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, HarnessError> {
    let ctx = Context::prepare(cfg).map_err(HarnessError::Config)?;
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;

    // Claim the output files before computing anything.
    let csv_path = out_dir.join("trials.csv");
    let mut records = Vec::new();
    let mut csv = if opts.resume && csv_path.exists() {
        let text = fs::read_to_string(&csv_path).map_err(|e| io_err(&csv_path, e))?;
        let (mut kept, mut len) = read_trials(&ctx, &text)?;
        if kept.len() > cfg.trials {
            kept.truncate(cfg.trials);
            len = CSV_HEADER.len() + 1 + kept.iter().map(|r| csv_rows(&ctx, r).len()).sum::<usize>();
        }
        records = kept;
        // Drop any torn tail, then append.
        let file = OpenOptions::new().append(true).open(&csv_path).map_err(|e| io_err(&csv_path, e))?;
        file.set_len(len as u64).map_err(|e| io_err(&csv_path, e))?;
        Some(BufWriter::new(file))
    } else if cfg.emit.csv {
        let file = File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(format!("{CSV_HEADER}\n").as_bytes()).and_then(|_| w.flush()).map_err(|e| io_err(&csv_path, e))?;
        Some(w)
    } else {
        check_writable(&out_dir)?;
        None
    };

    let resumed_trials = records.len();
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = opts.workers {
            b = b.num_threads(n.max(1));
        }
        b.build().map_err(|e| HarnessError::Audit(format!("thread pool: {e}")))?
    };
    let chunk = pool.current_num_threads().max(1) * 4;
    let mut next = resumed_trials;
    while next < cfg.trials {
        let end = (next + chunk).min(cfg.trials);
        let batch: Vec<TrialRecord> = pool.install(|| (next..end).into_par_iter().map(|t| run_trial(&ctx, t)).collect());
        if let Some(w) = csv.as_mut() {
            let text: String = batch.iter().map(|r| csv_rows(&ctx, r)).collect();
            w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| io_err(&csv_path, e))?;
        }
        for r in &batch {
            for (audit, e) in &r.errors {
                if !opts.quiet {
                    eprintln!("trial {} ({audit}): {e}", r.trial);
                }
            }
        }
        records.extend(batch);
        next = end;
    }
    drop(csv);

    let summary = summarize(&ctx, &records);
    let mut files = Vec::new();
    if csv_path.exists() && (cfg.emit.csv || opts.resume) {
        files.push(csv_path);
    }
    if cfg.emit.json {
        let path = out_dir.join("summary.json");
        let mut text = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Audit(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        files.push(path);
    }
    if cfg.emit.svg {
        let dir = out_dir.join("plots");
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        for (name, body) in svg::plots(&ctx, &records) {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| io_err(&path, e))?;
            files.push(path);
        }
    }
    Ok(RunOutcome { out_dir, records, resumed_trials, summary, files })
}

/// Fails with an I/O error unless files can be created in `dir`.
pub fn check_writable(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let probe = dir.join(".fpp-write-check");
    OpenOptions::new().create(true).truncate(true).write(true).open(&probe).map_err(|e| io_err(&probe, e))?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

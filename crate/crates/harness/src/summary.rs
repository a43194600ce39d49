//! Ensemble statistics over trial records.
//!
//! Everything here is computed from the persisted scalars alone, so a
//! resumed run and a fresh run produce the same summary.

use std::collections::BTreeMap;

use fpp_core::diagnostics::ks_two_sample;
use fpp_core::oracle::{beta_tail, gamma_cdf};
use fpp_core::DistributionSpec;
use serde::Serialize;

use crate::audit::{grid_tag, Context};
use crate::config::{AuditKind, ShrinkModeKind};
use crate::run::TrialRecord;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphInfo {
    pub spec: String,
    pub id: String,
    pub vertices: usize,
    pub edges: usize,
    pub margin: usize,
    pub core_radius: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricStats {
    pub audit: AuditKind,
    pub metric: String,
    /// Trials with a finite value.
    pub count: usize,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub std_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frequency {
    pub audit: AuditKind,
    pub name: String,
    pub successes: f64,
    pub total: f64,
    pub p: Option<f64>,
    pub std_err: Option<f64>,
    /// Closed-form probability when one is known for this distribution.
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub audit: AuditKind,
    pub count: usize,
    pub mean_1: f64,
    pub mean_2: f64,
    pub pooled_se: f64,
    pub ecdf_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub trial: usize,
    pub audit: AuditKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub kind: &'static str,
    pub config: BTreeMap<String, String>,
    pub graph: GraphInfo,
    pub trials: usize,
    pub metrics: Vec<MetricStats>,
    pub frequencies: Vec<Frequency>,
    pub comparisons: Vec<Comparison>,
    pub failures: Vec<Failure>,
}

impl Summary {
    pub fn metric(&self, audit: AuditKind, name: &str) -> Option<&MetricStats> {
        self.metrics.iter().find(|m| m.audit == audit && m.metric == name)
    }

    pub fn frequency(&self, audit: AuditKind, name: &str) -> Option<&Frequency> {
        self.frequencies.iter().find(|f| f.audit == audit && f.name == name)
    }
}

pub fn stats(audit: AuditKind, metric: &str, values: &[f64]) -> MetricStats {
    let mut xs: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mut s = MetricStats {
        audit,
        metric: metric.to_string(),
        count: n,
        min: None,
        median: None,
        max: None,
        mean: None,
        std_err: None,
    };
    if n == 0 {
        return s;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    s.min = Some(xs[0]);
    s.max = Some(xs[n - 1]);
    s.median = Some(if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) });
    s.mean = Some(mean);
    s.std_err = Some((var / n as f64).sqrt());
    s
}

fn frequency(audit: AuditKind, name: String, successes: f64, total: f64, oracle: Option<f64>) -> Frequency {
    let (p, std_err) = if total > 0.0 {
        let p = successes / total;
        (Some(p), Some((p * (1.0 - p) / total).sqrt()))
    } else {
        (None, None)
    };
    Frequency { audit, name, successes, total, p, std_err, oracle }
}

/// Column of one metric over the trials where its audit succeeded.
fn column(records: &[TrialRecord], audit: AuditKind, index: usize) -> Vec<f64> {
    records.iter().filter(|r| !r.failed(audit)).filter_map(|r| r.get(audit).map(|v| v[index])).collect()
}

pub fn summarize(ctx: &Context, records: &[TrialRecord]) -> Summary {
    let cfg = &ctx.cfg;
    let g = &ctx.graph;
    let mut metrics = Vec::new();
    let mut frequencies = Vec::new();
    let mut comparisons = Vec::new();
    let mut failures = Vec::new();

    for r in records {
        for (audit, _) in &ctx.layout {
            if r.failed(*audit) {
                failures.push(Failure { trial: r.trial, audit: *audit });
            }
        }
    }

    for (audit, names) in &ctx.layout {
        let audit = *audit;
        let col = |name: &str| {
            let i = names.iter().position(|n| n == name).expect("metric in layout");
            column(records, audit, i)
        };
        for (i, name) in names.iter().enumerate() {
            metrics.push(stats(audit, name, &column(records, audit, i)));
        }
        let ok = records.iter().filter(|r| !r.failed(audit)).count() as f64;
        let sum = |name: &str| col(name).iter().sum::<f64>();
        match audit {
            AuditKind::Velocity => {
                let unit = g.bfs(g.base());
                let sphere = unit.iter().filter(|d| **d == Some(ctx.velocity_radius)).count() as f64;
                let inside = col("frac_in_band").iter().map(|f| (f * sphere).round()).sum::<f64>();
                frequencies.push(frequency(audit, "in_band".into(), inside, ok * sphere, None));
            }
            AuditKind::Radial => {
                frequencies.push(frequency(audit, "post_check".into(), sum("post_check"), ok, None));
            }
            AuditKind::Hyperbolicity => {
                let lengths: Vec<usize> = ctx.cycles().map_or(Vec::new(), |c| c.cycles.iter().map(Vec::len).collect());
                for &delta in &cfg.hyperbolicity.delta_grid {
                    let t = grid_tag(delta);
                    let oracle = (cfg.distribution.is_continuous() && !lengths.is_empty()).then(|| {
                        let f = cfg.distribution.cdf(4.0 * delta);
                        lengths.iter().map(|&k| 1.0 - f.powi(k as i32)).sum::<f64>() / lengths.len() as f64
                    });
                    frequencies.push(frequency(
                        audit,
                        format!("qualifying@d{t}"),
                        sum(&format!("qualifying@d{t}")),
                        sum("cycle_count"),
                        oracle,
                    ));
                    let seeded = col(&format!("witnesses@d{t}")).iter().filter(|&&x| x >= 1.0).count() as f64;
                    frequencies.push(frequency(audit, format!("witness_seeds@d{t}"), seeded, ok, None));
                }
            }
            AuditKind::Cat0 => {
                frequencies.push(frequency(
                    audit,
                    "violating_cycles".into(),
                    sum("violating_cycles"),
                    sum("cycles_checked"),
                    None,
                ));
            }
            AuditKind::Morse => {
                let ray = ctx.ray.as_ref().expect("morse audit has a ray");
                let k = ray.detours.len();
                for (j, d) in ray.detours.iter().enumerate() {
                    let oracle = match cfg.distribution {
                        DistributionSpec::Exponential { .. } => Some(beta_tail(0.5, d.span as f64, d.length as f64)),
                        _ => None,
                    };
                    frequencies.push(frequency(audit, format!("event@j{j}"), sum(&format!("event@j{j}")), ok, oracle));
                }
                frequencies.push(frequency(audit, "events".into(), sum("events"), ok * k as f64, None));
            }
            AuditKind::Shrink => {
                let eps = cfg.shrink.epsilon;
                let oracle = if cfg.distribution.support_min() > eps {
                    Some(0.0)
                } else {
                    match (cfg.shrink.mode, &cfg.distribution) {
                        (ShrinkModeKind::FixedPath, DistributionSpec::Exponential { rate }) => {
                            let n = cfg.shrink.n as f64;
                            Some(gamma_cdf(eps * n, n, 1.0 / rate))
                        }
                        _ => None,
                    }
                };
                frequencies.push(frequency(audit, "event".into(), sum("event"), ok, oracle));
            }
            AuditKind::Lateral => {
                let (t1, t2) = (col("t1"), col("t2"));
                if t1.len() >= 2 {
                    let s1 = stats(audit, "t1", &t1);
                    let s2 = stats(audit, "t2", &t2);
                    let (se1, se2) = (s1.std_err.unwrap_or(0.0), s2.std_err.unwrap_or(0.0));
                    comparisons.push(Comparison {
                        audit,
                        count: t1.len(),
                        mean_1: s1.mean.unwrap_or(f64::NAN),
                        mean_2: s2.mean.unwrap_or(f64::NAN),
                        pooled_se: (se1 * se1 + se2 * se2).sqrt(),
                        ecdf_gap: ks_two_sample(&t1, &t2),
                    });
                }
            }
        }
    }

    Summary {
        kind: "summary",
        config: cfg
            .entries()
            .into_iter()
            .filter(|(k, _)| !k.starts_with("output."))
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        graph: GraphInfo {
            spec: cfg.graph.to_string(),
            id: g.id().to_string(),
            vertices: g.vertex_count(),
            edges: g.edge_count(),
            margin: cfg.margin(),
            core_radius: ctx.core_radius,
        },
        trials: records.len(),
        metrics,
        frequencies,
        comparisons,
        failures,
    }
}

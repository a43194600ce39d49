//! Edge-length laws ν and reproducible weight assignments ω.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::{erfc, erfc_inv};
use thiserror::Error;

use crate::graph::{split_call, EdgeId, Graph};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PercolationError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("weights do not match graph: {0}")]
    Mismatch(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Constant { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Support {
    pub atom_at_zero: bool,
    pub full_support: bool,
    pub bounded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    NoAtomAtZero,
    FiniteMean,
    FullSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequirementCheck {
    pub requirement: Requirement,
    pub passed: bool,
    /// The descriptor field that decided the outcome.
    pub decided_by: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub distribution: String,
    pub checks: Vec<RequirementCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn passed(&self, r: Requirement) -> Option<bool> {
        self.checks.iter().find(|c| c.requirement == r).map(|c| c.passed)
    }
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn standard_normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

impl DistributionSpec {
    pub fn exponential(rate: f64) -> Result<Self, PercolationError> {
        Self::Exponential { rate }.validated()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, PercolationError> {
        Self::Uniform { lo, hi }.validated()
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self, PercolationError> {
        Self::LogNormal { mu, sigma }.validated()
    }

    pub fn constant(c: f64) -> Result<Self, PercolationError> {
        Self::Constant { c }.validated()
    }

    fn validated(self) -> Result<Self, PercolationError> {
        let bad = |m: String| Err(PercolationError::Config(m));
        match self {
            Self::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                bad(format!("exponential rate must be positive, got {rate}"))
            }
            Self::Uniform { lo, .. } if !(lo >= 0.0) => bad(format!("uniform lo must be >= 0, got {lo}")),
            Self::Uniform { lo, hi } if !(hi > lo && hi.is_finite()) => {
                bad(format!("uniform needs hi > lo, got ({lo}, {hi})"))
            }
            Self::LogNormal { mu, sigma } if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) => {
                bad(format!("lognormal needs finite mu and sigma > 0, got ({mu}, {sigma})"))
            }
            Self::Constant { c } if !(c > 0.0 && c.is_finite()) => {
                bad(format!("constant must be positive, got {c}"))
            }
            ok => Ok(ok),
        }
    }

    /// b = 𝔼ω_e.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Self::Constant { c } => c,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    standard_normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Self::Constant { c } => {
                if x >= c {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Inverse CDF on (0, 1). Always strictly positive.
    pub fn quantile(&self, u: f64) -> f64 {
        let x = match *self {
            Self::Exponential { rate } => -(-u).ln_1p() / rate,
            Self::Uniform { lo, hi } => lo + (hi - lo) * u,
            Self::LogNormal { mu, sigma } => (mu + sigma * standard_normal_quantile(u)).exp(),
            Self::Constant { c } => c,
        };
        x.max(f64::MIN_POSITIVE)
    }

    /// Infimum of the support.
    pub fn support_min(&self) -> f64 {
        match *self {
            Self::Exponential { .. } | Self::LogNormal { .. } => 0.0,
            Self::Uniform { lo, .. } => lo,
            Self::Constant { c } => c,
        }
    }

    pub fn support(&self) -> Support {
        Support {
            atom_at_zero: self.cdf(0.0) > 0.0,
            full_support: matches!(self, Self::Exponential { .. } | Self::LogNormal { .. }),
            bounded: matches!(self, Self::Uniform { .. } | Self::Constant { .. }),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Self::Constant { .. })
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Exponential { rate } => write!(f, "exponential({rate})"),
            Self::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Self::LogNormal { mu, sigma } => write!(f, "lognormal({mu},{sigma})"),
            Self::Constant { c } => write!(f, "constant({c})"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = PercolationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        make_distribution(s)
    }
}

/// Parses `exponential(λ)`, `uniform(lo,hi)`, `lognormal(μ,σ)` or `constant(c)`.
pub fn make_distribution(text: &str) -> Result<DistributionSpec, PercolationError> {
    let bad = |m: &str| PercolationError::Config(format!("{m}: {text:?}"));
    let (name, args) = split_call(text).ok_or_else(|| bad("expected kind(params)"))?;
    let vals = args
        .iter()
        .map(|a| a.parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad("parameters must be numbers"))?;
    let want = |k: usize| {
        if vals.len() == k {
            Ok(())
        } else {
            Err(bad(&format!("{name} takes {k} parameter(s)")))
        }
    };
    match name {
        "exponential" => {
            want(1)?;
            DistributionSpec::exponential(vals[0])
        }
        "uniform" => {
            want(2)?;
            DistributionSpec::uniform(vals[0], vals[1])
        }
        "lognormal" => {
            want(2)?;
            DistributionSpec::lognormal(vals[0], vals[1])
        }
        "constant" => {
            want(1)?;
            DistributionSpec::constant(vals[0])
        }
        _ => Err(bad("unknown distribution")),
    }
}

/// Checks the standing assumptions on ν; never fails, reports instead.
pub fn validate_assumptions(d: &DistributionSpec, requirements: &[Requirement]) -> ValidationReport {
    let support = d.support();
    let checks = requirements
        .iter()
        .map(|&requirement| match requirement {
            Requirement::NoAtomAtZero => RequirementCheck {
                requirement,
                passed: !support.atom_at_zero,
                decided_by: "support.atom_at_zero",
            },
            Requirement::FiniteMean => RequirementCheck {
                requirement,
                passed: d.mean().is_finite(),
                decided_by: "mean",
            },
            Requirement::FullSupport => RequirementCheck {
                requirement,
                passed: support.full_support,
                decided_by: "support.full_support",
            },
        })
        .collect();
    ValidationReport { distribution: d.to_string(), checks }
}

/// (F(4δ) − F(3δ))³: all three sides of a triangle land in (3δ, 4δ].
pub fn triangle_event_prob(d: &DistributionSpec, delta: f64) -> f64 {
    (d.cdf(4.0 * delta) - d.cdf(3.0 * delta)).powi(3)
}

/// One ω: a positive length per edge, indexed by edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAssignment {
    pub graph_id: String,
    pub seed: u64,
    pub distribution: Option<DistributionSpec>,
    weights: Vec<f64>,
    pub overridden: bool,
}

impl WeightAssignment {
    /// Hand-set weights for fixtures.
    pub fn from_values(g: &Graph, weights: Vec<f64>) -> Result<Self, PercolationError> {
        if weights.len() != g.edge_count() {
            return Err(PercolationError::Mismatch(format!(
                "{} weights for {} edges",
                weights.len(),
                g.edge_count()
            )));
        }
        if let Some(bad) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(PercolationError::Config(format!("weights must be positive and finite, got {bad}")));
        }
        Ok(WeightAssignment {
            graph_id: g.id().to_string(),
            seed: 0,
            distribution: None,
            weights,
            overridden: true,
        })
    }

    /// Every edge gets the same length `c`.
    pub fn uniform_value(g: &Graph, c: f64) -> Result<Self, PercolationError> {
        Self::from_values(g, vec![c; g.edge_count()])
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.weights[e]
    }

    pub fn values(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Replaces one weight; marks the assignment as overridden.
    pub fn set(&mut self, e: EdgeId, value: f64) -> Result<(), PercolationError> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(PercolationError::Config(format!("weights must be positive, got {value}")));
        }
        self.weights[e] = value;
        self.overridden = true;
        Ok(())
    }

    /// Multiplies every weight by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= lambda);
        out.overridden = true;
        out
    }
}

/// Samples ω. Each weight is the inverse-CDF image of a uniform derived from
/// `(seed, edge key)` alone.
pub fn sample_weights(g: &Graph, d: &DistributionSpec, seed: u64) -> WeightAssignment {
    let draw = |e: &crate::graph::Edge| d.quantile(rng::keyed_uniform(seed, &e.key));
    // Parallel fill only pays off on large graphs; both paths are identical.
    let weights: Vec<f64> = if g.edge_count() >= 1 << 14 {
        g.edges().par_iter().map(draw).collect()
    } else {
        g.edges().iter().map(draw).collect()
    };
    WeightAssignment {
        graph_id: g.id().to_string(),
        seed,
        distribution: Some(*d),
        weights,
        overridden: false,
    }
}

/// Formats with 17 significant digits; parses back to the identical f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

const WEIGHTS_HEADER: &str = "# fpp-weights v1";

/// `# fpp-weights v1 graph=<id> seed=<s> dist=<spec>` then `w <edge> <value>`.
pub fn export_weights(w: &WeightAssignment) -> String {
    let dist = w.distribution.map_or_else(|| "override".to_string(), |d| d.to_string());
    let mut out = String::with_capacity(32 * w.len());
    let _ = writeln!(out, "{WEIGHTS_HEADER} graph={} seed={} dist={dist}", w.graph_id, w.seed);
    for (e, x) in w.weights.iter().enumerate() {
        let _ = writeln!(out, "w {e} {}", format_f64(*x));
    }
    out
}

pub fn import_weights(g: &Graph, text: &str) -> Result<WeightAssignment, PercolationError> {
    let err = |line: usize, msg: String| PercolationError::Parse { line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty input".into()))?;
    let rest = header
        .strip_prefix(WEIGHTS_HEADER)
        .ok_or_else(|| err(1, "missing '# fpp-weights v1' header".into()))?;
    let field = |name: &str| {
        rest.split_whitespace()
            .find_map(|t| t.strip_prefix(name).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| err(1, format!("header missing {name}=")))
    };
    let graph_id = field("graph")?.to_string();
    if graph_id != g.id() {
        return Err(PercolationError::Mismatch(format!("weights for graph {graph_id}, not {}", g.id())));
    }
    let seed: u64 = field("seed")?.parse().map_err(|_| err(1, "bad seed".into()))?;
    let dist_text = field("dist")?;
    let distribution = if dist_text == "override" {
        None
    } else {
        Some(make_distribution(dist_text)?)
    };
    let mut weights = Vec::with_capacity(g.edge_count());
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(' ').collect();
        let ["w", id, value] = parts.as_slice() else {
            return Err(err(no, format!("unrecognised line {line:?}")));
        };
        if id.parse::<usize>().ok() != Some(weights.len()) {
            return Err(err(no, "edge ids must be dense and ordered".into()));
        }
        let x: f64 = value.parse().map_err(|_| err(no, format!("bad value {value:?}")))?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(err(no, format!("weight must be positive, got {x}")));
        }
        weights.push(x);
    }
    if weights.len() != g.edge_count() {
        return Err(PercolationError::Mismatch(format!(
            "{} weights for {} edges",
            weights.len(),
            g.edge_count()
        )));
    }
    Ok(WeightAssignment {
        graph_id,
        seed,
        distribution,
        weights,
        overridden: distribution.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_cycle_gadget, build_lattice, GadgetPlan};

    fn all_kinds() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::exponential(1.0).unwrap(),
            DistributionSpec::uniform(0.5, 1.5).unwrap(),
            DistributionSpec::lognormal(0.0, 0.5).unwrap(),
            DistributionSpec::constant(1.0).unwrap(),
        ]
    }

    #[test]
    fn closed_form_means() {
        assert_eq!(make_distribution("exponential(1)").unwrap().mean(), 1.0);
        assert_eq!(make_distribution("exponential(4)").unwrap().mean(), 0.25);
        assert_eq!(make_distribution("uniform(0.5,1.5)").unwrap().mean(), 1.0);
        assert_eq!(make_distribution("constant(1)").unwrap().mean(), 1.0);
        let ln = make_distribution("lognormal(0.1,0.3)").unwrap();
        assert!((ln.mean() - (0.1f64 + 0.045).exp()).abs() < 1e-15);
    }

    #[test]
    fn exponential_cdf_closed_form() {
        let d = DistributionSpec::exponential(1.0).unwrap();
        for x in [0.1, 0.5, 1.0, 3.0] {
            assert!((d.cdf(x) - (1.0 - (-x as f64).exp())).abs() < 1e-15);
        }
        assert_eq!(d.cdf(0.0), 0.0);
        assert_eq!(d.cdf(-1.0), 0.0);
    }

    #[test]
    fn uniform_support_is_bounded() {
        let d = make_distribution("uniform(0.5,1.5)").unwrap();
        assert!(d.support().bounded);
        assert!(!d.support().full_support);
    }

    #[test]
    fn rejects_bad_parameters() {
        for text in [
            "exponential(0)",
            "exponential(-1)",
            "uniform(1,1)",
            "uniform(-0.5,1)",
            "lognormal(0,0)",
            "constant(0)",
            "constant(1,2)",
            "gamma(2)",
            "exponential",
        ] {
            assert!(make_distribution(text).is_err(), "{text}");
        }
    }

    #[test]
    fn display_round_trips() {
        for d in all_kinds() {
            assert_eq!(make_distribution(&d.to_string()).unwrap(), d);
        }
    }

    #[test]
    fn assumption_reports() {
        use Requirement::*;
        let all = [NoAtomAtZero, FiniteMean, FullSupport];
        let exp = make_distribution("exponential(1)").unwrap();
        assert!(validate_assumptions(&exp, &all).all_passed());
        let uni = make_distribution("uniform(0.5,1.5)").unwrap();
        let r = validate_assumptions(&uni, &[FullSupport]);
        assert_eq!(r.passed(FullSupport), Some(false));
        assert_eq!(r.checks[0].decided_by, "support.full_support");
        let c = make_distribution("constant(1)").unwrap();
        let r = validate_assumptions(&c, &all);
        assert_eq!(r.passed(FullSupport), Some(false));
        assert_eq!(r.passed(NoAtomAtZero), Some(true));
    }

    #[test]
    fn triangle_probability_examples() {
        let exp = make_distribution("exponential(1)").unwrap();
        let expected = ((-0.75f64).exp() - (-1.0f64).exp()).powi(3);
        assert!((triangle_event_prob(&exp, 0.25) - expected).abs() < 1e-15);
        assert!((triangle_event_prob(&exp, 0.25) - 1.1408e-3).abs() < 1e-7);
        let c = make_distribution("constant(1)").unwrap();
        assert_eq!(triangle_event_prob(&c, 0.25), 1.0);
        let u = make_distribution("uniform(0.5,1.5)").unwrap();
        assert_eq!(triangle_event_prob(&u, 1.0), 0.0);
    }

    #[test]
    fn triangle_probability_vanishes_as_delta_shrinks() {
        for d in [
            make_distribution("exponential(1)").unwrap(),
            make_distribution("lognormal(0,1)").unwrap(),
        ] {
            let grid: Vec<f64> = (0..12).map(|i| 0.5f64.powi(i)).collect();
            let probs: Vec<f64> = grid.iter().map(|&x| triangle_event_prob(&d, x)).collect();
            // monotone once δ is below the mode region
            for w in probs[3..].windows(2) {
                assert!(w[1] <= w[0], "{d}: {probs:?}");
            }
            assert!(probs[11] < 1e-6);
        }
    }

    #[test]
    fn weights_positive_over_many_draws() {
        for d in all_kinds() {
            for i in 0..1_000_000u64 {
                let x = d.quantile(rng::stream_uniform(7, i));
                assert!(x > 0.0, "{d} produced {x}");
            }
        }
    }

    #[test]
    fn empirical_cdf_matches() {
        for d in all_kinds() {
            let n = 100_000u64;
            let mut xs: Vec<f64> = (0..n).map(|i| d.quantile(rng::stream_uniform(11, i))).collect();
            xs.sort_by(f64::total_cmp);
            let mut ks: f64 = 0.0;
            let nf = n as f64;
            let mut i = 0usize;
            while i < xs.len() {
                let x = xs[i];
                let mut j = i;
                while j < xs.len() && xs[j] == x {
                    j += 1;
                }
                let below = i as f64 / nf;
                let at = j as f64 / nf;
                let f = d.cdf(x);
                // F(x−) equals F(x) for continuous kinds; for the constant it is 0.
                let f_left = if d.is_continuous() { f } else { 0.0 };
                ks = ks.max((at - f).abs()).max((below - f_left).abs());
                i = j;
            }
            assert!(ks <= 0.01, "{d}: KS = {ks}");
        }
    }

    #[test]
    fn lognormal_quantile_inverts_cdf() {
        let d = make_distribution("lognormal(0.3,0.7)").unwrap();
        for u in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999999] {
            assert!((d.cdf(d.quantile(u)) - u).abs() < 1e-9, "u = {u}");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_key_based() {
        let g = build_lattice(2, 3).unwrap();
        let d = make_distribution("exponential(1)").unwrap();
        assert_eq!(sample_weights(&g, &d, 5), sample_weights(&g, &d, 5));
        assert_ne!(sample_weights(&g, &d, 5).values(), sample_weights(&g, &d, 6).values());

        // Same labels and edges, inserted in reverse order.
        let labels = g.labels().to_vec();
        let rev: Vec<_> = g.edges().iter().rev().map(|e| (e.v, e.u)).collect();
        let h = crate::graph::Graph::from_edges("rev", crate::graph::Family::Imported, labels, &rev, 0).unwrap();
        let wg = sample_weights(&g, &d, 5);
        let wh = sample_weights(&h, &d, 5);
        for e in g.edges() {
            let f = h.find_edge(e.u, e.v).unwrap();
            assert_eq!(wg.get(e.id).to_bits(), wh.get(f).to_bits());
        }
    }

    #[test]
    fn changing_one_key_changes_only_that_weight() {
        let d = make_distribution("exponential(1)").unwrap();
        let g = build_cycle_gadget(GadgetPlan::Cycle(6)).unwrap();
        let mut labels = g.labels().to_vec();
        labels[3] = "renamed".into();
        let edges: Vec<_> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        let h = crate::graph::Graph::from_edges("h", crate::graph::Family::Gadget, labels, &edges, 0).unwrap();
        let (wg, wh) = (sample_weights(&g, &d, 9), sample_weights(&h, &d, 9));
        for e in g.edges() {
            let touches = e.u == 3 || e.v == 3;
            assert_eq!(wg.get(e.id) != wh.get(e.id), touches);
        }
    }

    #[test]
    fn clt_mean_check() {
        let g = build_lattice(2, 224).unwrap();
        assert!(g.edge_count() >= 100_000);
        let d = make_distribution("exponential(1)").unwrap();
        let w = sample_weights(&g, &d, 2024);
        let n = w.len() as f64;
        let mean = w.values().iter().sum::<f64>() / n;
        assert!((mean - 1.0).abs() < 3.0 / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn weights_text_round_trip() {
        let g = build_lattice(2, 2).unwrap();
        let d = make_distribution("lognormal(0,1)").unwrap();
        let w = sample_weights(&g, &d, 77);
        let text = export_weights(&w);
        assert!(text.starts_with(&format!("# fpp-weights v1 graph={} seed=77 dist=lognormal(0,1)\n", g.id())));
        let back = import_weights(&g, &text).unwrap();
        for (a, b) in w.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(export_weights(&back), text);
        let other = build_lattice(2, 3).unwrap();
        assert!(import_weights(&other, &text).is_err());
    }
}

//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Keys use dotted section names (`seeds.trials`, `cat0.Q`). Every problem
//! in a file is reported at once, each with its line number.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use fpp_core::{DistributionSpec, GraphSpec};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    Velocity,
    Radial,
    Hyperbolicity,
    Cat0,
    Morse,
    Shrink,
    Lateral,
}

impl AuditKind {
    pub const ALL: [AuditKind; 7] = [
        AuditKind::Velocity,
        AuditKind::Radial,
        AuditKind::Hyperbolicity,
        AuditKind::Cat0,
        AuditKind::Morse,
        AuditKind::Shrink,
        AuditKind::Lateral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AuditKind::Velocity => "velocity",
            AuditKind::Radial => "radial",
            AuditKind::Hyperbolicity => "hyperbolicity",
            AuditKind::Cat0 => "cat0",
            AuditKind::Morse => "morse",
            AuditKind::Shrink => "shrink",
            AuditKind::Lateral => "lateral",
        }
    }
}

impl fmt::Display for AuditKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AuditKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AuditKind::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown audit {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkModeKind {
    FixedPath,
    VertexPair,
}

impl ShrinkModeKind {
    pub fn name(self) -> &'static str {
        match self {
            ShrinkModeKind::FixedPath => "fixed_path",
            ShrinkModeKind::VertexPair => "vertex_pair",
        }
    }
}

/// Ordered pair of vertex labels, written `x -> y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPair(pub String, pub String);

impl fmt::Display for LabelPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.0, self.1)
    }
}

impl FromStr for LabelPair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once("->").ok_or("expected `x -> y`")?;
        let (a, b) = (a.trim(), b.trim());
        if a.is_empty() || b.is_empty() {
            return Err("expected `x -> y`".into());
        }
        Ok(LabelPair(a.into(), b.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Emit {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityConfig {
    /// Unit radius of the boundary sphere; defaults to the core radius.
    pub radius: Option<usize>,
    /// Band is (0, band·b] with b the mean weight.
    pub band: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicityConfig {
    pub delta_grid: Vec<f64>,
    pub sample_size: usize,
    pub resolution: Option<f64>,
    pub max_cycles: Option<usize>,
    /// Also record the four-point δ of each ball B(base, r), r = 1..=R.
    pub radius_profile: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cat0Config {
    pub q: f64,
    pub big_q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialConfig {
    pub n_min: Option<usize>,
    pub max_geodesics: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorseConfig {
    pub gauge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkConfig {
    pub mode: ShrinkModeKind,
    pub epsilon: f64,
    pub n: usize,
    pub pair: Option<LabelPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LateralConfig {
    pub pair1: Option<LabelPair>,
    pub pair2: Option<LabelPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub margin: Option<usize>,
    pub distribution: DistributionSpec,
    pub audits: Vec<AuditKind>,
    pub master_seed: u64,
    pub trials: usize,
    pub output_dir: PathBuf,
    pub emit: Emit,
    pub velocity: VelocityConfig,
    pub hyperbolicity: HyperbolicityConfig,
    pub cat0: Cat0Config,
    pub radial: RadialConfig,
    pub morse: MorseConfig,
    pub shrink: ShrinkConfig,
    pub lateral: LateralConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// 1-based line, or `None` for a missing key.
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub config: ExperimentConfig,
    /// Non-fatal issues (unknown keys outside strict mode).
    pub warnings: Vec<ConfigIssue>,
}

const KEYS: &[&str] = &[
    "graph",
    "graph.margin",
    "distribution",
    "audits",
    "seeds.master",
    "seeds.trials",
    "output.dir",
    "output.csv",
    "output.json",
    "output.svg",
    "velocity.radius",
    "velocity.band",
    "hyperbolicity.delta_grid",
    "hyperbolicity.sample_size",
    "hyperbolicity.resolution",
    "hyperbolicity.max_cycles",
    "hyperbolicity.radius_profile",
    "cat0.q",
    "cat0.Q",
    "radial.n_min",
    "radial.max_geodesics",
    "morse.D",
    "shrink.mode",
    "shrink.epsilon",
    "shrink.n",
    "shrink.pair",
    "lateral.pair1",
    "lateral.pair2",
];

impl ExperimentConfig {
    /// Defaults for everything except the three required keys.
    pub fn new(graph: GraphSpec, distribution: DistributionSpec, audits: Vec<AuditKind>) -> Self {
        ExperimentConfig {
            graph,
            margin: None,
            distribution,
            audits,
            master_seed: 0,
            trials: 1,
            output_dir: PathBuf::from("results"),
            emit: Emit { csv: true, json: true, svg: false },
            velocity: VelocityConfig { radius: None, band: 2.0 },
            hyperbolicity: HyperbolicityConfig {
                delta_grid: vec![1.0],
                sample_size: 60,
                resolution: None,
                max_cycles: None,
                radius_profile: false,
            },
            cat0: Cat0Config { q: 1.0, big_q: 0.0 },
            radial: RadialConfig { n_min: None, max_geodesics: 1 },
            morse: MorseConfig { gauge: 1.0 },
            shrink: ShrinkConfig { mode: ShrinkModeKind::FixedPath, epsilon: 0.2, n: 6, pair: None },
            lateral: LateralConfig { pair1: None, pair2: None },
        }
    }

    pub fn margin(&self) -> usize {
        self.margin.unwrap_or_else(|| self.graph.default_margin())
    }

    pub fn has(&self, a: AuditKind) -> bool {
        self.audits.contains(&a)
    }

    /// Canonical `(key, value)` pairs; optional keys appear only when set.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("graph", self.graph.to_string()),
            ("distribution", self.distribution.to_string()),
            ("audits", self.audits.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")),
            ("seeds.master", self.master_seed.to_string()),
            ("seeds.trials", self.trials.to_string()),
            ("output.dir", self.output_dir.display().to_string()),
            ("output.csv", self.emit.csv.to_string()),
            ("output.json", self.emit.json.to_string()),
            ("output.svg", self.emit.svg.to_string()),
        ];
        if let Some(m) = self.margin {
            out.insert(1, ("graph.margin", m.to_string()));
        }
        if let Some(r) = self.velocity.radius {
            out.push(("velocity.radius", r.to_string()));
        }
        out.push(("velocity.band", self.velocity.band.to_string()));
        let h = &self.hyperbolicity;
        out.push(("hyperbolicity.delta_grid", join_f64(&h.delta_grid)));
        out.push(("hyperbolicity.sample_size", h.sample_size.to_string()));
        if let Some(r) = h.resolution {
            out.push(("hyperbolicity.resolution", r.to_string()));
        }
        if let Some(m) = h.max_cycles {
            out.push(("hyperbolicity.max_cycles", m.to_string()));
        }
        out.push(("hyperbolicity.radius_profile", h.radius_profile.to_string()));
        out.push(("cat0.q", self.cat0.q.to_string()));
        out.push(("cat0.Q", self.cat0.big_q.to_string()));
        if let Some(n) = self.radial.n_min {
            out.push(("radial.n_min", n.to_string()));
        }
        out.push(("radial.max_geodesics", self.radial.max_geodesics.to_string()));
        out.push(("morse.D", self.morse.gauge.to_string()));
        out.push(("shrink.mode", self.shrink.mode.name().to_string()));
        out.push(("shrink.epsilon", self.shrink.epsilon.to_string()));
        out.push(("shrink.n", self.shrink.n.to_string()));
        if let Some(p) = &self.shrink.pair {
            out.push(("shrink.pair", p.to_string()));
        }
        if let Some(p) = &self.lateral.pair1 {
            out.push(("lateral.pair1", p.to_string()));
        }
        if let Some(p) = &self.lateral.pair2 {
            out.push(("lateral.pair2", p.to_string()));
        }
        out
    }

    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn join_f64(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got {v:?}")),
    }
}

fn parse_num<T: FromStr>(v: &str, what: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("expected {what}, got {v:?}"))
}

fn parse_positive(v: &str) -> Result<f64, String> {
    let x: f64 = parse_num(v, "a number")?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

/// Parses and validates `text`. In strict mode unknown and duplicate keys
/// are errors; otherwise unknown keys are warnings and the last duplicate wins.
pub fn parse_config(text: &str, strict: bool) -> Result<Parsed, Vec<ConfigIssue>> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let mut values: HashMap<&str, (usize, String)> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            errors.push(ConfigIssue { line: Some(line), key: content.into(), message: "expected `key = value`".into() });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(&key) = KEYS.iter().find(|&&known| known == k) else {
            let issue = ConfigIssue { line: Some(line), key: k.into(), message: "unknown key".into() };
            if strict {
                errors.push(issue);
            } else {
                warnings.push(issue);
            }
            continue;
        };
        if let Some((first, _)) = values.get(key) {
            let issue = ConfigIssue {
                line: Some(line),
                key: key.into(),
                message: format!("duplicate key (first set on line {first})"),
            };
            if strict {
                errors.push(issue);
                continue;
            }
            warnings.push(issue);
        }
        values.insert(key, (line, v.to_string()));
    }

    let mut take = |key: &'static str, errors: &mut Vec<ConfigIssue>| -> Option<(usize, String)> {
        let got = values.remove(key);
        if got.as_ref().is_some_and(|(_, v)| v.is_empty()) {
            errors.push(ConfigIssue { line: got.as_ref().map(|g| g.0), key: key.into(), message: "empty value".into() });
            return None;
        }
        got
    };

    macro_rules! field {
        ($key:expr, $parse:expr, $slot:expr) => {
            if let Some((line, v)) = take($key, &mut errors) {
                match $parse(v.as_str()) {
                    Ok(x) => $slot = x,
                    Err(message) => errors.push(ConfigIssue { line: Some(line), key: $key.into(), message }),
                }
            }
        };
    }

    let mut graph = None;
    let mut distribution = None;
    let mut audits = None;
    let missing = |key: &str| ConfigIssue { line: None, key: key.into(), message: "required key is missing".into() };
    field!("graph", |v: &str| v.parse::<GraphSpec>().map(Some).map_err(|e| e.to_string()), graph);
    field!(
        "distribution",
        |v: &str| v.parse::<DistributionSpec>().map(Some).map_err(|e| e.to_string()),
        distribution
    );
    field!("audits", |v: &str| parse_audits(v).map(Some), audits);

    let mut cfg = ExperimentConfig::new(
        graph.unwrap_or(GraphSpec::Cycle { n: 3 }),
        distribution.unwrap_or(DistributionSpec::Constant { c: 1.0 }),
        audits.clone().unwrap_or_default(),
    );
    if graph.is_none() && !errors.iter().any(|e| e.key == "graph") {
        errors.push(missing("graph"));
    }
    if distribution.is_none() && !errors.iter().any(|e| e.key == "distribution") {
        errors.push(missing("distribution"));
    }
    if audits.is_none() && !errors.iter().any(|e| e.key == "audits") {
        errors.push(missing("audits"));
    }

    field!("graph.margin", |v| parse_num::<usize>(v, "a nonnegative integer").map(Some), cfg.margin);
    field!("seeds.master", |v| parse_num::<u64>(v, "an unsigned 64-bit integer"), cfg.master_seed);
    let mut trials_line = None;
    if let Some((line, v)) = take("seeds.trials", &mut errors) {
        trials_line = Some(line);
        match parse_num::<usize>(&v, "a nonnegative integer") {
            Ok(t) => cfg.trials = t,
            Err(message) => errors.push(ConfigIssue { line: Some(line), key: "seeds.trials".into(), message }),
        }
    }
    if cfg.trials == 0 {
        errors.push(ConfigIssue { line: trials_line, key: "seeds.trials".into(), message: "must be >= 1".into() });
    }
    field!("output.dir", |v: &str| Ok::<_, String>(PathBuf::from(v)), cfg.output_dir);
    field!("output.csv", parse_bool, cfg.emit.csv);
    field!("output.json", parse_bool, cfg.emit.json);
    field!("output.svg", parse_bool, cfg.emit.svg);

    field!("velocity.radius", |v| parse_positive_int(v).map(Some), cfg.velocity.radius);
    field!("velocity.band", parse_positive, cfg.velocity.band);

    field!("hyperbolicity.delta_grid", parse_grid, cfg.hyperbolicity.delta_grid);
    field!("hyperbolicity.sample_size", |v| parse_sample_size(v), cfg.hyperbolicity.sample_size);
    field!("hyperbolicity.resolution", |v| parse_positive(v).map(Some), cfg.hyperbolicity.resolution);
    field!("hyperbolicity.max_cycles", |v| parse_positive_int(v).map(Some), cfg.hyperbolicity.max_cycles);
    field!("hyperbolicity.radius_profile", parse_bool, cfg.hyperbolicity.radius_profile);

    field!("cat0.q", |v| parse_at_least(v, 1.0), cfg.cat0.q);
    field!("cat0.Q", |v| parse_at_least(v, 0.0), cfg.cat0.big_q);

    field!("radial.n_min", |v| parse_positive_int(v).map(Some), cfg.radial.n_min);
    field!("radial.max_geodesics", parse_positive_int, cfg.radial.max_geodesics);

    field!("morse.D", parse_positive, cfg.morse.gauge);

    field!(
        "shrink.mode",
        |v: &str| match v {
            "fixed_path" => Ok(ShrinkModeKind::FixedPath),
            "vertex_pair" => Ok(ShrinkModeKind::VertexPair),
            _ => Err(format!("expected fixed_path or vertex_pair, got {v:?}")),
        },
        cfg.shrink.mode
    );
    field!("shrink.epsilon", parse_positive, cfg.shrink.epsilon);
    field!("shrink.n", parse_positive_int, cfg.shrink.n);
    field!("shrink.pair", |v: &str| v.parse::<LabelPair>().map(Some), cfg.shrink.pair);
    field!("lateral.pair1", |v: &str| v.parse::<LabelPair>().map(Some), cfg.lateral.pair1);
    field!("lateral.pair2", |v: &str| v.parse::<LabelPair>().map(Some), cfg.lateral.pair2);

    if cfg.has(AuditKind::Lateral) {
        for (key, p) in [("lateral.pair1", &cfg.lateral.pair1), ("lateral.pair2", &cfg.lateral.pair2)] {
            if p.is_none() && !errors.iter().any(|e| e.key == key) {
                errors.push(ConfigIssue { line: None, key: key.into(), message: "required by the lateral audit".into() });
            }
        }
    }

    if errors.is_empty() {
        Ok(Parsed { config: cfg, warnings })
    } else {
        errors.sort_by_key(|e| (e.line.unwrap_or(usize::MAX), e.key.clone()));
        Err(errors)
    }
}

fn parse_positive_int(v: &str) -> Result<usize, String> {
    match parse_num::<usize>(v, "a positive integer")? {
        0 => Err("must be >= 1".into()),
        n => Ok(n),
    }
}

fn parse_sample_size(v: &str) -> Result<usize, String> {
    let n = parse_positive_int(v)?;
    if n > fpp_core::metric::FOUR_POINT_MAX {
        return Err(format!("must be <= {}", fpp_core::metric::FOUR_POINT_MAX));
    }
    Ok(n)
}

fn parse_at_least(v: &str, lo: f64) -> Result<f64, String> {
    let x: f64 = parse_num(v, "a number")?;
    if x >= lo && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be >= {lo}, got {v}"))
    }
}

fn parse_grid(v: &str) -> Result<Vec<f64>, String> {
    let grid = v.split(',').map(|x| parse_positive(x.trim())).collect::<Result<Vec<_>, _>>()?;
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err("grid must be strictly increasing".into());
    }
    Ok(grid)
}

fn parse_audits(v: &str) -> Result<Vec<AuditKind>, String> {
    let mut out: Vec<AuditKind> = Vec::new();
    for name in v.split(',').map(str::trim) {
        let a: AuditKind = name.parse()?;
        if out.contains(&a) {
            return Err(format!("audit {name} listed twice"));
        }
        out.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "graph = lattice(2,6)\ndistribution = exponential(1)\naudits = velocity\nseeds.trials = 10\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let p = parse_config(MINIMAL, true).unwrap();
        let c = p.config;
        assert_eq!(c.graph, GraphSpec::Lattice { dim: 2, radius: 6 });
        assert_eq!(c.distribution, DistributionSpec::Exponential { rate: 1.0 });
        assert_eq!(c.audits, vec![AuditKind::Velocity]);
        assert_eq!(c.trials, 10);
        assert_eq!(c.master_seed, 0);
        assert_eq!(c.margin(), 3);
        assert!(c.emit.csv && c.emit.json && !c.emit.svg);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn zero_trials_names_the_field() {
        let text = MINIMAL.replace("seeds.trials = 10", "seeds.trials = 0");
        let errs = parse_config(&text, false).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].key, "seeds.trials");
        assert_eq!(errs[0].line, Some(4));
    }

    #[test]
    fn duplicates_fail_only_in_strict_mode() {
        let text = format!("{MINIMAL}seeds.trials = 12\n");
        let errs = parse_config(&text, true).unwrap_err();
        assert_eq!(errs[0].key, "seeds.trials");
        assert_eq!(errs[0].line, Some(5));
        let p = parse_config(&text, false).unwrap();
        assert_eq!(p.config.trials, 12);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn unknown_keys() {
        let text = format!("{MINIMAL}colour = blue\n");
        assert_eq!(parse_config(&text, true).unwrap_err()[0].key, "colour");
        assert_eq!(parse_config(&text, false).unwrap().warnings[0].key, "colour");
    }

    #[test]
    fn every_violation_is_reported() {
        let text = "graph = lattice(2)\ndistribution = exponential(-1)\naudits = velocity, tarot\n\
                    seeds.trials = many\ncat0.q = 0.5\nnonsense line\n";
        let errs = parse_config(text, true).unwrap_err();
        let lines: Vec<_> = errs.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![Some(1), Some(2), Some(3), Some(4), Some(5), Some(6)]);
        let missing = parse_config("", true).unwrap_err();
        let keys: Vec<_> = missing.iter().map(|e| e.key.as_str()).collect();
        assert_eq!(keys, vec!["audits", "distribution", "graph"]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{}", MINIMAL.replace("audits = velocity", "audits = velocity # trailing"));
        assert_eq!(parse_config(&text, true).unwrap().config.audits, vec![AuditKind::Velocity]);
    }

    #[test]
    fn lateral_needs_pairs() {
        let text = MINIMAL.replace("audits = velocity", "audits = lateral");
        let errs = parse_config(&text, true).unwrap_err();
        assert_eq!(errs.len(), 2);
        let ok = format!("{text}lateral.pair1 = (0,0) -> (1,0)\nlateral.pair2 = (2,0) -> (3,0)\n");
        let c = parse_config(&ok, true).unwrap().config;
        assert_eq!(c.lateral.pair1, Some(LabelPair("(0,0)".into(), "(1,0)".into())));
    }
}

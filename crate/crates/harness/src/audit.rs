//! Per-trial audit evaluation.
//!
//! A [`Context`] is built once per experiment: it owns the graph and every
//! ω-independent precomputation (cycle families, radial geodesics, resolved
//! vertex pairs). Each audit then maps one weight sample to a fixed list of
//! named scalars.

use fpp_core::diagnostics::{
    cat0_audit_cycles, check_automorphism, core_cycles, four_point_by_radius, hyperbolicity_scan_cycles,
    morse_detour_scan, radial_audit_geodesics, radial_geodesics, velocity_profile, HyperbolicityParams, RadialParams,
};
use fpp_core::metric::single_source;
use fpp_core::percolation::sample_weights;
use fpp_core::rng;
use fpp_core::{CycleSet, Graph, MarkedRay, VertexId, WeightAssignment};
use serde_json::{json, Value};

use crate::config::{AuditKind, ExperimentConfig, LabelPair, ShrinkModeKind};

pub struct Context {
    pub cfg: ExperimentConfig,
    pub graph: Graph,
    pub ray: Option<MarkedRay>,
    pub core_radius: Option<usize>,
    pub mean: f64,
    pub velocity_radius: usize,
    cycles: Option<CycleSet>,
    geodesics: Vec<Vec<VertexId>>,
    radial_n_min: usize,
    shrink_pair: Option<(VertexId, VertexId, usize)>,
    lateral: Option<((VertexId, VertexId), (VertexId, VertexId))>,
    /// Metric names per configured audit, in output order.
    pub layout: Vec<(AuditKind, Vec<String>)>,
}

/// Suffix used in metric names for a grid value, e.g. `1` or `0.5`.
pub fn grid_tag(x: f64) -> String {
    format!("{x}")
}

fn resolve(g: &Graph, p: &LabelPair, key: &str) -> Result<(VertexId, VertexId), String> {
    let find = |l: &str| g.vertex_by_label(l).ok_or_else(|| format!("{key}: no vertex labelled {l:?}"));
    Ok((find(&p.0)?, find(&p.1)?))
}

impl Context {
    /// Builds the graph and checks every audit's parameters against it.
    /// All problems are returned together.
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Context, Vec<String>> {
        let (graph, ray) = cfg.graph.build(cfg.margin()).map_err(|e| vec![format!("graph: {e}")])?;
        let core_radius = cfg.graph.radius();
        let mut errors = Vec::new();

        let eccentricity = graph.bfs(graph.base()).into_iter().flatten().max().unwrap_or(0);
        let velocity_radius = cfg.velocity.radius.or(core_radius).unwrap_or(eccentricity);
        if cfg.has(AuditKind::Velocity) && (velocity_radius == 0 || velocity_radius > eccentricity) {
            errors.push(format!("velocity.radius: {velocity_radius} is outside 1..={eccentricity}"));
        }

        let cycles = (cfg.has(AuditKind::Hyperbolicity) || cfg.has(AuditKind::Cat0))
            .then(|| core_cycles(&graph, core_radius, cfg.hyperbolicity.max_cycles.unwrap_or(usize::MAX)));

        let radial_n_min = cfg.radial.n_min.unwrap_or_else(|| core_radius.unwrap_or(1).div_ceil(2).max(1));
        let mut geodesics = Vec::new();
        if cfg.has(AuditKind::Radial) {
            match core_radius {
                None => errors.push(format!("radial: graph {} has no core radius", cfg.graph)),
                Some(r) => match radial_geodesics(&graph, graph.base(), r, cfg.radial.max_geodesics) {
                    Ok(gs) if gs.is_empty() => errors.push("radial: no geodesics at the core radius".into()),
                    Ok(gs) => geodesics = gs,
                    Err(e) => errors.push(format!("radial: {e}")),
                },
            }
            if core_radius.is_some_and(|r| radial_n_min > r) {
                errors.push(format!("radial.n_min: {radial_n_min} exceeds the core radius"));
            }
        }

        if cfg.has(AuditKind::Morse) && ray.as_ref().map_or(true, |r| r.detours.is_empty()) {
            errors.push(format!("morse: graph {} has no marked ray with detours", cfg.graph));
        }

        let mut shrink_pair = None;
        if cfg.has(AuditKind::Shrink) && cfg.shrink.mode == ShrinkModeKind::VertexPair {
            let pair = match &cfg.shrink.pair {
                Some(p) => resolve(&graph, p, "shrink.pair"),
                None => {
                    let d = graph.bfs(graph.base());
                    graph
                        .vertices()
                        .find(|&v| d[v] == Some(cfg.shrink.n))
                        .map(|y| (graph.base(), y))
                        .ok_or_else(|| format!("shrink.n: no vertex at distance {} from the base", cfg.shrink.n))
                }
            };
            match pair.and_then(|(x, y)| {
                let n = graph.bfs(x)[y].ok_or("shrink.pair: vertices are not connected")?;
                if n == 0 {
                    return Err("shrink.pair: endpoints coincide".to_string());
                }
                Ok((x, y, n))
            }) {
                Ok(p) => shrink_pair = Some(p),
                Err(e) => errors.push(e),
            }
        }

        let mut lateral = None;
        if cfg.has(AuditKind::Lateral) {
            let (p1, p2) = (cfg.lateral.pair1.as_ref(), cfg.lateral.pair2.as_ref());
            if let (Some(p1), Some(p2)) = (p1, p2) {
                match (resolve(&graph, p1, "lateral.pair1"), resolve(&graph, p2, "lateral.pair2")) {
                    (Ok(a), Ok(b)) => match check_automorphism(&graph, a, b) {
                        Ok(()) => lateral = Some((a, b)),
                        Err(e) => errors.push(format!("lateral: {e}")),
                    },
                    (a, b) => errors.extend(a.err().into_iter().chain(b.err())),
                }
            }
        }

        let mean = cfg.distribution.mean();
        let mut ctx = Context {
            cfg: cfg.clone(),
            graph,
            ray,
            core_radius,
            mean,
            velocity_radius,
            cycles,
            geodesics,
            radial_n_min,
            shrink_pair,
            lateral,
            layout: Vec::new(),
        };
        if !errors.is_empty() {
            return Err(errors);
        }
        ctx.layout = cfg.audits.iter().map(|&a| (a, ctx.metric_names(a))).collect();
        Ok(ctx)
    }

    pub fn cycles(&self) -> Option<&CycleSet> {
        self.cycles.as_ref()
    }

    fn profile_radii(&self) -> Vec<usize> {
        match (self.cfg.hyperbolicity.radius_profile, self.core_radius) {
            (true, Some(r)) => (1..=r).collect(),
            _ => Vec::new(),
        }
    }

    pub fn metric_names(&self, audit: AuditKind) -> Vec<String> {
        let s = |x: &str| x.to_string();
        match audit {
            AuditKind::Velocity => {
                let mut v = vec![s("v_min"), s("v_max"), s("v_mean"), s("frac_in_band")];
                v.extend((1..=self.velocity_radius).map(|n| format!("v_mean@n{n}")));
                v
            }
            AuditKind::Radial => {
                ["c_hat", "r0_hat", "r1_hat", "r2_hat", "post_check", "pairs_audited"].map(s).to_vec()
            }
            AuditKind::Hyperbolicity => {
                let mut v = vec![s("four_point_delta"), s("cycle_count")];
                for &d in &self.cfg.hyperbolicity.delta_grid {
                    let t = grid_tag(d);
                    v.push(format!("qualifying@d{t}"));
                    v.push(format!("witnesses@d{t}"));
                    v.push(format!("max_witness_slimness@d{t}"));
                }
                v.extend(self.profile_radii().into_iter().map(|r| format!("four_point@r{r}")));
                v
            }
            AuditKind::Cat0 => ["cycles_checked", "violations", "violating_cycles"].map(s).to_vec(),
            AuditKind::Morse => {
                let mut v = vec![s("events"), s("excursions_over_3d")];
                let k = self.ray.as_ref().map_or(0, |r| r.detours.len());
                v.extend((0..k).map(|j| format!("event@j{j}")));
                v
            }
            AuditKind::Shrink => vec![s("ratio"), s("event")],
            AuditKind::Lateral => vec![s("t1"), s("t2")],
        }
    }

    /// Scalars for one audit on one weight sample, in [`Context::metric_names`] order.
    pub fn evaluate(&self, audit: AuditKind, w: &WeightAssignment, seed: u64) -> Result<Vec<f64>, String> {
        let g = &self.graph;
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        let out = match audit {
            AuditKind::Velocity => {
                let p = velocity_profile(g, w, g.base(), Some(self.velocity_radius)).map_err(|e| e.to_string())?;
                let band = p.band(self.velocity_radius).ok_or("empty boundary sphere")?;
                let hi = self.cfg.velocity.band * self.mean;
                let frac = p.fraction_within(self.velocity_radius, 0.0, hi).unwrap_or(0.0);
                let mut v = vec![band.min, band.max, band.mean, frac];
                v.extend(p.bands.iter().map(|b| b.mean));
                v
            }
            AuditKind::Radial => {
                let params = RadialParams {
                    radius: self.core_radius.unwrap_or(0),
                    n_min: self.radial_n_min,
                    max_geodesics: self.cfg.radial.max_geodesics,
                    mean: self.mean,
                };
                let f = radial_audit_geodesics(g, w, &self.geodesics, &params).map_err(|e| e.to_string())?;
                vec![f.c_hat, f.r0_hat, f.r1_hat, f.r2_hat, flag(f.post_check_passed), f.pairs_audited as f64]
            }
            AuditKind::Hyperbolicity => {
                let h = &self.cfg.hyperbolicity;
                let params = HyperbolicityParams {
                    sample_size: h.sample_size,
                    delta_grid: h.delta_grid.clone(),
                    core_radius: self.core_radius,
                    max_cycles: h.max_cycles.unwrap_or(usize::MAX),
                    resolution: h.resolution,
                };
                let empty = CycleSet { cycles: Vec::new(), pairwise_disjoint: true };
                let cycles = self.cycles.as_ref().unwrap_or(&empty);
                let r = hyperbolicity_scan_cycles(g, w, cycles, &params).map_err(|e| e.to_string())?;
                let mut v = vec![r.four_point_delta, r.cycle_count as f64];
                for row in &r.rows {
                    v.push(row.qualifying as f64);
                    v.push(row.witnesses as f64);
                    v.push(row.max_witness_slimness.unwrap_or(0.0));
                }
                let profile =
                    four_point_by_radius(g, w, &self.profile_radii(), h.sample_size).map_err(|e| e.to_string())?;
                v.extend(profile.into_iter().map(|(_, d)| d));
                v
            }
            AuditKind::Cat0 => {
                let cycles = self.cycles.as_ref().ok_or("no cycle family")?;
                let r = cat0_audit_cycles(g, w, cycles, self.cfg.cat0.q, self.cfg.cat0.big_q)
                    .map_err(|e| e.to_string())?;
                vec![r.cycles_checked as f64, r.violation_count() as f64, r.violating_cycles.len() as f64]
            }
            AuditKind::Morse => {
                let ray = self.ray.as_ref().ok_or("no marked ray")?;
                let log = morse_detour_scan(g, ray, w, self.cfg.morse.gauge).map_err(|e| e.to_string())?;
                let mut v = vec![log.event_count as f64, log.excursions_over_3d as f64];
                v.extend(log.records.iter().map(|r| flag(r.event)));
                v
            }
            AuditKind::Shrink => {
                let eps = self.cfg.shrink.epsilon;
                let ratio = match self.shrink_pair {
                    None => {
                        // Same draws as the fixed-path Monte Carlo estimator.
                        let n = self.cfg.shrink.n;
                        let d = &self.cfg.distribution;
                        (0..n as u64).map(|i| d.quantile(rng::stream_uniform(seed, i))).sum::<f64>() / n as f64
                    }
                    Some((x, y, n)) => single_source(g, w, x).map_err(|e| e.to_string())?.dist[y] / n as f64,
                };
                vec![ratio, flag(ratio <= eps)]
            }
            AuditKind::Lateral => {
                let ((x1, y1), (x2, y2)) = self.lateral.ok_or("no lateral pairs")?;
                let w2 = sample_weights(g, &self.cfg.distribution, rng::derive_seed(seed, 1));
                let t1 = single_source(g, w, x1).map_err(|e| e.to_string())?.dist[y1];
                let t2 = single_source(g, &w2, x2).map_err(|e| e.to_string())?.dist[y2];
                vec![t1, t2]
            }
        };
        debug_assert_eq!(out.len(), self.layout.iter().find(|(a, _)| *a == audit).map_or(out.len(), |l| l.1.len()));
        Ok(out)
    }

    /// Full report object for one audit on one weight sample.
    pub fn report(&self, audit: AuditKind, w: &WeightAssignment, seed: u64) -> Result<Value, String> {
        let g = &self.graph;
        let to_value = |r: Result<Value, serde_json::Error>| r.map_err(|e| e.to_string());
        match audit {
            AuditKind::Velocity => to_value(serde_json::to_value(
                velocity_profile(g, w, g.base(), Some(self.velocity_radius)).map_err(|e| e.to_string())?,
            )),
            AuditKind::Radial => {
                let params = RadialParams {
                    radius: self.core_radius.unwrap_or(0),
                    n_min: self.radial_n_min,
                    max_geodesics: self.cfg.radial.max_geodesics,
                    mean: self.mean,
                };
                to_value(serde_json::to_value(
                    radial_audit_geodesics(g, w, &self.geodesics, &params).map_err(|e| e.to_string())?,
                ))
            }
            AuditKind::Hyperbolicity => {
                let h = &self.cfg.hyperbolicity;
                let params = HyperbolicityParams {
                    sample_size: h.sample_size,
                    delta_grid: h.delta_grid.clone(),
                    core_radius: self.core_radius,
                    max_cycles: h.max_cycles.unwrap_or(usize::MAX),
                    resolution: h.resolution,
                };
                let cycles = self.cycles.as_ref().ok_or("no cycle family")?;
                to_value(serde_json::to_value(
                    hyperbolicity_scan_cycles(g, w, cycles, &params).map_err(|e| e.to_string())?,
                ))
            }
            AuditKind::Cat0 => {
                let cycles = self.cycles.as_ref().ok_or("no cycle family")?;
                to_value(serde_json::to_value(
                    cat0_audit_cycles(g, w, cycles, self.cfg.cat0.q, self.cfg.cat0.big_q).map_err(|e| e.to_string())?,
                ))
            }
            AuditKind::Morse => {
                let ray = self.ray.as_ref().ok_or("no marked ray")?;
                to_value(serde_json::to_value(
                    morse_detour_scan(g, ray, w, self.cfg.morse.gauge).map_err(|e| e.to_string())?,
                ))
            }
            AuditKind::Shrink | AuditKind::Lateral => {
                let names = self.metric_names(audit);
                let vals = self.evaluate(audit, w, seed)?;
                let mut obj = serde_json::Map::new();
                obj.insert("kind".into(), json!(audit.name()));
                for (n, v) in names.into_iter().zip(vals) {
                    obj.insert(n, json!(v));
                }
                Ok(Value::Object(obj))
            }
        }
    }

    /// Total scalar count per trial.
    pub fn scalars_per_trial(&self) -> usize {
        self.layout.iter().map(|(_, n)| n.len()).sum()
    }
}

//! Static SVG figures written as plain text.

use std::fmt::Write;

use crate::audit::{grid_tag, Context};
use crate::config::AuditKind;
use crate::run::TrialRecord;
use crate::summary::{stats, summarize};

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Rounded tick values covering [lo, hi].
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Frame {
        let pad = |a: f64, b: f64| if b - a < 1e-12 { (a - 0.5, b + 0.5) } else { (a, b) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn open(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 15.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    s
}

fn axes(s: &mut String, f: &Frame, xticks: bool) {
    let (bx, by) = (f.px(f.x0), f.py(f.y0));
    let _ = writeln!(
        s,
        r#"<path d="M{bx:.2},{:.2} L{bx:.2},{by:.2} L{:.2},{by:.2}" stroke="black" fill="none"/>"#,
        TOP,
        W - RIGHT
    );
    for t in ticks(f.y0, f.y1) {
        let y = f.py(t);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{bx:.2}" y2="{y:.2}" stroke="black"/>"#, bx - 4.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, bx - 6.0, y + 4.0, tick_label(t));
    }
    if xticks {
        for t in ticks(f.x0, f.x1) {
            let x = f.px(t);
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{by:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, by + 4.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, by + 18.0, tick_label(t));
        }
    }
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    let f = Frame::new(x0, x1, y0, y1 * 1.05);
    let mut s = open(title, xlabel, ylabel);
    axes(&mut s, &f, true);
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let d: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        if d.is_empty() {
            continue;
        }
        let dash = if ser.dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, d.join(" "));
        let ly = TOP + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}" text-anchor="end">{}</text>"#,
            W - RIGHT - 4.0,
            ly + 12.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Bars with optional per-bar reference markers (drawn as short red lines).
pub fn bar_chart(title: &str, xlabel: &str, ylabel: &str, bars: &[(String, f64, Option<f64>)]) -> String {
    let top = bars
        .iter()
        .flat_map(|b| [b.1, b.2.unwrap_or(0.0)])
        .filter(|x| x.is_finite())
        .fold(0.0f64, f64::max);
    let n = bars.len().max(1) as f64;
    let f = Frame::new(0.0, n, 0.0, if top > 0.0 { top * 1.1 } else { 1.0 });
    let mut s = open(title, xlabel, ylabel);
    axes(&mut s, &f, false);
    let slot = f.px(1.0) - f.px(0.0);
    for (i, (label, v, reference)) in bars.iter().enumerate() {
        let x = f.px(i as f64) + 0.15 * slot;
        let bw = 0.7 * slot;
        if v.is_finite() {
            let y = f.py(*v);
            let _ = writeln!(
                s,
                r##"<rect x="{x:.2}" y="{y:.2}" width="{bw:.2}" height="{:.2}" fill="#1f77b4"/>"##,
                f.py(0.0) - y
            );
        }
        if let Some(r) = reference {
            let y = f.py(*r);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#d62728" stroke-width="2"/>"##,
                x - 0.1 * slot,
                x + bw + 0.1 * slot
            );
        }
        if bars.len() <= 40 {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x + bw / 2.0,
                f.py(0.0) + 18.0,
                escape(label)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn histogram(title: &str, xlabel: &str, values: &[f64], bins: usize) -> String {
    let xs: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let bins = bins.max(1);
    let mut counts = vec![0usize; bins];
    if !xs.is_empty() {
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        for &x in &xs {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    let edge = |k: usize| if hi > lo { lo + (hi - lo) * k as f64 / bins as f64 } else { lo };
    let bars: Vec<(String, f64, Option<f64>)> = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (if k % 2 == 0 && xs.len() > 0 { tick_label(edge(k)) } else { String::new() }, c as f64, None))
        .collect();
    bar_chart(title, xlabel, "count", &bars)
}

/// Figures for the configured audits, as `(file name, contents)`.
pub fn plots(ctx: &Context, records: &[TrialRecord]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let summary = summarize(ctx, records);
    let band = |audit: AuditKind, names: &[(f64, String)]| -> Vec<Series> {
        let rows: Vec<(f64, crate::summary::MetricStats)> = names
            .iter()
            .map(|(x, n)| {
                let s = summary.metric(audit, n).cloned().unwrap_or_else(|| stats(audit, n, &[]));
                (*x, s)
            })
            .collect();
        let pick = |f: fn(&crate::summary::MetricStats) -> Option<f64>| -> Vec<(f64, f64)> {
            rows.iter().filter_map(|(x, s)| f(s).map(|y| (*x, y))).collect()
        };
        vec![
            Series { name: "mean".into(), points: pick(|s| s.mean), dashed: false },
            Series { name: "min".into(), points: pick(|s| s.min), dashed: true },
            Series { name: "max".into(), points: pick(|s| s.max), dashed: true },
        ]
    };
    for audit in &ctx.cfg.audits {
        match audit {
            AuditKind::Velocity => {
                let names: Vec<(f64, String)> =
                    (1..=ctx.velocity_radius).map(|n| (n as f64, format!("v_mean@n{n}"))).collect();
                out.push((
                    "velocity_by_radius.svg".into(),
                    line_chart("mean ω-velocity by sphere", "unit radius n", "v", &band(*audit, &names)),
                ));
                let vals: Vec<f64> =
                    records.iter().filter_map(|r| r.get(*audit).map(|v| v[2])).collect();
                out.push((
                    "velocity_histogram.svg".into(),
                    histogram(&format!("ω-velocity at n = {}", ctx.velocity_radius), "mean v per trial", &vals, 20),
                ));
            }
            AuditKind::Hyperbolicity => {
                if ctx.cfg.hyperbolicity.radius_profile {
                    if let Some(r) = ctx.core_radius {
                        let names: Vec<(f64, String)> = (1..=r).map(|k| (k as f64, format!("four_point@r{k}"))).collect();
                        out.push((
                            "delta_vs_radius.svg".into(),
                            line_chart("four-point δ of B(o, R)", "R", "δ", &band(*audit, &names)),
                        ));
                    }
                }
                let bars: Vec<(String, f64, Option<f64>)> = ctx
                    .cfg
                    .hyperbolicity
                    .delta_grid
                    .iter()
                    .filter_map(|&d| {
                        let t = grid_tag(d);
                        let f = summary.frequency(*audit, &format!("qualifying@d{t}"))?;
                        Some((format!("δ={t}"), f.p.unwrap_or(f64::NAN), f.oracle))
                    })
                    .collect();
                out.push((
                    "qualifying_frequency.svg".into(),
                    bar_chart("cycles with an edge ≥ 4δ", "δ", "frequency", &bars),
                ));
            }
            AuditKind::Morse => {
                let k = ctx.ray.as_ref().map_or(0, |r| r.detours.len());
                let bars: Vec<(String, f64, Option<f64>)> = (0..k)
                    .filter_map(|j| {
                        let f = summary.frequency(*audit, &format!("event@j{j}"))?;
                        Some((j.to_string(), f.p.unwrap_or(f64::NAN), f.oracle))
                    })
                    .collect();
                out.push(("morse_event_frequency.svg".into(), bar_chart("detour events", "detour j", "frequency", &bars)));
            }
            _ => {}
        }
    }
    out
}

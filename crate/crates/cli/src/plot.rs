//! Hand-written SVG plots. Output bytes depend only on the run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::experiment::{load_run, ReplicaTrace, RunSummary};
use crate::HarnessError;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Linear or base-10 logarithmic axis.
#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if !log {
            lo = lo.min(0.0);
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        let pad = if log { 0.05 * (hi - lo) } else { 0.0 };
        Axis {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4)
            .map(|i| {
                let u = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                if self.log {
                    10f64.powf(u)
                } else {
                    u
                }
            })
            .collect()
    }
}

struct Canvas {
    x: Axis,
    y: Axis,
    body: String,
}

impl Canvas {
    fn new(x: Axis, y: Axis) -> Self {
        Canvas {
            x,
            y,
            body: String::new(),
        }
    }

    fn px(&self, v: f64) -> f64 {
        LEFT + self.x.frac(v) * (W - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        H - BOTTOM - self.y.frac(v) * (H - TOP - BOTTOM)
    }

    fn points(&self, pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
        pts.iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.x.log || p.0 > 0.0) && (!self.y.log || p.1 > 0.0))
            .map(|&(x, y)| (self.px(x), self.py(y)))
            .collect()
    }

    fn path(&mut self, pts: &[(f64, f64)], style: &str) {
        let pts = self.points(pts);
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{x:.2} {y:.2}", if i == 0 { "M" } else { " L" });
        }
        let _ = writeln!(self.body, r#"<path d="{d}" fill="none" {style}/>"#);
    }

    fn marker(&mut self, x: f64, y: f64, style: &str) {
        let (cx, cy) = (self.px(x), self.py(y));
        let _ = writeln!(
            self.body,
            r#"<path d="M{:.2} {cy:.2} a4 4 0 1 0 8 0 a4 4 0 1 0 -8 0 Z" {style}/>"#,
            cx - 4.0
        );
    }

    fn polygon(&mut self, pts: &[(f64, f64)], style: &str) {
        let pts = self.points(pts);
        let list: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(self.body, r#"<polygon points="{}" {style}/>"#, list.join(" "));
    }

    fn finish(self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
        let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
        let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
        for t in self.x.ticks() {
            let x = self.px(t);
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 18.0, tick_label(t));
        }
        for t in self.y.ticks() {
            let y = self.py(t);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, tick_label(t));
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 10.0, escape(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-2..1e4).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Radius against time: one curve for a single replica, otherwise the
/// min-max band with the replica mean.
pub fn radius_svg(traces: &[ReplicaTrace], title: &str) -> String {
    let all = || traces.iter().flat_map(|t| t.samples.iter());
    let x = Axis::new(all().map(|s| s.time), false);
    let y = Axis::new(all().map(|s| s.max_radius), false);
    let mut c = Canvas::new(x, y);
    if traces.len() == 1 {
        let pts: Vec<(f64, f64)> = traces[0].samples.iter().map(|s| (s.time, s.max_radius)).collect();
        c.path(&pts, r##"stroke="#1f4e9c" stroke-width="1.5""##);
    } else {
        let len = traces.iter().map(|t| t.samples.len()).min().unwrap_or(0);
        let mut lo = Vec::with_capacity(len);
        let mut hi = Vec::with_capacity(len);
        let mut mean = Vec::with_capacity(len);
        for k in 0..len {
            let t = traces[0].samples[k].time;
            let rs = traces.iter().map(|tr| tr.samples[k].max_radius);
            let (mut a, mut b, mut m) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
            for r in rs {
                a = a.min(r);
                b = b.max(r);
                m += r;
            }
            lo.push((t, a));
            hi.push((t, b));
            mean.push((t, m / traces.len() as f64));
        }
        let band: Vec<(f64, f64)> = lo.iter().chain(hi.iter().rev()).copied().collect();
        c.polygon(&band, r##"fill="#9db7e0" fill-opacity="0.5" stroke="none""##);
        c.path(&mean, r##"stroke="#1f4e9c" stroke-width="1.5""##);
    }
    c.finish(title, "time", "max radius")
}

/// Log-log velocity against density with the fitted power law and the bound.
pub fn velocity_svg(summary: &RunSummary) -> String {
    let est = summary.estimates();
    let bound_t = summary.points.first().map_or(1.0, |p| p.t_max.max(f64::MIN_POSITIVE));
    let (rmin, rmax) = est
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e.rho), b.max(e.rho)));
    let grid: Vec<f64> = (0..=48)
        .map(|i| rmin * (rmax / rmin).powf(i as f64 / 48.0))
        .collect();
    let bound_curve: Vec<(f64, f64)> = match &summary.bound {
        Some(b) => grid.iter().map(|&r| (r, b.bound.eval(r, bound_t).threshold / bound_t)).collect(),
        None => Vec::new(),
    };
    let fit_curve: Vec<(f64, f64)> = match &summary.scaling {
        Some(f) => grid.iter().map(|&r| (r, f.predict(r))).collect(),
        None => Vec::new(),
    };
    let x = Axis::new(est.iter().map(|e| e.rho), true);
    let y = Axis::new(
        est.iter()
            .map(|e| e.v_hat)
            .chain(fit_curve.iter().map(|p| p.1))
            .chain(bound_curve.iter().map(|p| p.1)),
        true,
    );
    let mut c = Canvas::new(x, y);
    for e in &est {
        c.marker(e.rho, e.v_hat, r##"fill="#1f4e9c" stroke="none""##);
    }
    if !fit_curve.is_empty() {
        c.path(&fit_curve, r##"stroke="#1f4e9c" stroke-width="1.5""##);
    }
    if !bound_curve.is_empty() {
        c.path(&bound_curve, r##"stroke="#b22222" stroke-width="1.5" stroke-dasharray="6 4""##);
    }
    let title = match &summary.scaling {
        Some(f) => format!("velocity vs density (exponent {:.3})", f.exponent),
        None => "velocity vs density".into(),
    };
    c.finish(&title, "density", "velocity")
}

/// Writes `radius.svg` next to each trace file and, for sweeps, a top-level
/// `velocity.svg`. Returns the written files.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let (cfg, summary, data) = load_run(dir)?;
    let mut written = Vec::new();
    if data.iter().all(|p| p.traces.is_empty()) {
        warn!("{}: no traces to plot", dir.display());
        return Ok(written);
    }
    for (p, d) in summary.points.iter().zip(&data) {
        let (Some(rel), false) = (&p.trace, d.traces.is_empty()) else {
            continue;
        };
        let path = dir.join(rel).with_file_name("radius.svg");
        let title = format!("{} {} = {}", cfg.model.name(), p.parameter, p.value);
        fs::write(&path, radius_svg(&d.traces, &title)).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    if summary.points.len() >= 2 && summary.estimates().len() >= 2 {
        let path = dir.join("velocity.svg");
        fs::write(&path, velocity_svg(&summary)).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rbfront_core::rb::TraceSample;

    fn trace(replica: u64, v: f64) -> ReplicaTrace {
        ReplicaTrace {
            replica,
            samples: (0..10)
                .map(|i| TraceSample {
                    time: i as f64,
                    max_radius: v * i as f64,
                    n_red: 1,
                    visited: 1,
                })
                .collect(),
        }
    }

    #[test]
    fn single_trajectory_is_one_path() {
        let s = radius_svg(&[trace(0, 1.0)], "a < b & c");
        assert_eq!(s.matches("<path").count(), 1);
        assert!(s.contains("a &lt; b &amp; c"));
        assert!(s.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn band_plot() {
        let s = radius_svg(&[trace(0, 1.0), trace(1, 2.0), trace(2, 1.5)], "band");
        assert_eq!(s.matches("<polygon").count(), 1);
        assert_eq!(s.matches("<path").count(), 1);
        assert_eq!(s, radius_svg(&[trace(0, 1.0), trace(1, 2.0), trace(2, 1.5)], "band"));
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick_label(0.0), "0");
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(250.0), "250");
        assert_eq!(tick_label(1e-5), "1.0e-5");
    }
}

//! Replica fan-out, run-directory layout and summaries.
//!
//! A run directory holds `config.toml` (the resolved configuration),
//! `summary.json`, and one `trace.csv` per grid point: at the top level for a
//! single point, in `point-NN/` otherwise. Replica `r` of point `i` draws from
//! `RngStream::new(seed, r).fork(i + 1)`.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use rbfront_core::kawasaki::{run_rbk, two_box_experiment, TwoBoxReport};
use rbfront_core::rb::TraceSample;
use rbfront_core::{run_rb, RngStream};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    compare_to_bound, estimate_velocity, fit_scaling_exponent, BoundReport, FinalRadii, FitWindow, ScalingFit,
    VelocityEstimate,
};
use crate::config::{ExperimentConfig, Model};
use crate::HarnessError;

/// Runs with more than this fraction of aborted or failed replicas are
/// partial failures.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaTrace {
    pub replica: u64,
    pub samples: Vec<TraceSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaIssue {
    pub replica: u64,
    pub reason: String,
}

/// Raw output of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    pub value: f64,
    pub density: f64,
    pub t_max: f64,
    /// Completed and aborted replicas, in replica order.
    pub traces: Vec<ReplicaTrace>,
    pub aborted: Vec<ReplicaIssue>,
    pub failed: Vec<ReplicaIssue>,
    pub concentration_triggered: Option<u64>,
    pub two_box: Option<TwoBoxReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusStats {
    pub mean: f64,
    pub stderr: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    /// `rho` for red/blue models, `beta` for Kawasaki models.
    pub parameter: String,
    pub value: f64,
    pub density: f64,
    pub t_max: f64,
    /// Trace file relative to the run directory.
    pub trace: Option<String>,
    pub completed: usize,
    pub aborted: Vec<ReplicaIssue>,
    pub failed: Vec<ReplicaIssue>,
    pub velocity: Option<VelocityEstimate>,
    pub velocity_error: Option<String>,
    /// Slope of `log n_red` against `log t` over the fit window.
    pub red_count_exponent: Option<f64>,
    pub final_radius: Option<RadiusStats>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub concentration_triggered: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub two_box: Option<TwoBoxReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: Model,
    pub seed: u64,
    pub replicas: u64,
    pub burn_in: f64,
    pub points: Vec<PointSummary>,
    pub scaling: Option<ScalingFit>,
    pub scaling_error: Option<String>,
    pub bound: Option<BoundReport>,
    pub failure_fraction: f64,
    pub partial_failure: bool,
}

impl RunSummary {
    pub fn estimates(&self) -> Vec<VelocityEstimate> {
        self.points.iter().filter_map(|p| p.velocity.clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub data: Vec<PointData>,
}

pub fn replica_stream(seed: u64, point: usize, replica: u64) -> RngStream {
    RngStream::new(seed, replica).fork(point as u64 + 1)
}

/// Trace path of point `index` relative to the run directory.
pub fn trace_path(points: usize, index: usize) -> String {
    if points == 1 {
        "trace.csv".into()
    } else {
        format!("point-{index:02}/trace.csv")
    }
}

enum ReplicaResult {
    Done(ReplicaTrace, bool),
    Failed(String),
    Rbk(ReplicaTrace, bool),
}

fn run_replica(cfg: &ExperimentConfig, point: usize, replica: u64) -> ReplicaResult {
    let stream = replica_stream(cfg.seed, point, replica);
    if cfg.model.is_rb() {
        let rb = cfg.rb.as_ref().expect("validated");
        let core = rb.core_config(cfg.model, rb.densities[point]);
        match run_rb(&core, stream) {
            Ok(tr) => ReplicaResult::Done(
                ReplicaTrace {
                    replica,
                    samples: tr.samples,
                },
                tr.aborted,
            ),
            Err(e) => ReplicaResult::Failed(e.to_string()),
        }
    } else {
        let k = cfg.kawasaki.as_ref().expect("validated");
        match run_rbk(&k.core_config(k.betas[point]), stream) {
            Ok(tr) => ReplicaResult::Rbk(
                ReplicaTrace {
                    replica,
                    samples: tr.samples,
                },
                tr.concentration.triggered,
            ),
            Err(e) => ReplicaResult::Failed(e.to_string()),
        }
    }
}

/// Simulates every replica of every grid point.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<PointData>, HarnessError> {
    let n_points = cfg.points();
    if cfg.model == Model::KawasakiTwoBox {
        let k = cfg.kawasaki.as_ref().expect("validated");
        let tb = cfg.two_box.as_ref().expect("validated");
        return (0..n_points)
            .into_par_iter()
            .map(|i| {
                let core = k.core_config(k.betas[i]);
                let horizon = tb.horizon.unwrap_or(k.t_max);
                let report = two_box_experiment(
                    &core,
                    &tb.box1,
                    &tb.box2,
                    (tb.event1, tb.event2),
                    horizon,
                    cfg.replicas,
                    RngStream::new(cfg.seed, 0).fork(i as u64 + 1),
                    tb.tag_delta,
                )?;
                Ok(PointData {
                    value: k.betas[i],
                    density: core.density(),
                    t_max: horizon,
                    traces: Vec::new(),
                    aborted: Vec::new(),
                    failed: Vec::new(),
                    concentration_triggered: Some(report.stopped_early),
                    two_box: Some(report),
                })
            })
            .collect();
    }
    let jobs: Vec<(usize, u64)> = (0..n_points)
        .flat_map(|i| (0..cfg.replicas).map(move |r| (i, r)))
        .collect();
    let results: Vec<ReplicaResult> = jobs.par_iter().map(|&(i, r)| run_replica(cfg, i, r)).collect();
    let mut out = Vec::with_capacity(n_points);
    let mut it = results.into_iter();
    for i in 0..n_points {
        let (value, density, t_max) = match (&cfg.rb, &cfg.kawasaki) {
            (Some(rb), _) => (rb.densities[i], rb.densities[i], rb.t_max),
            (_, Some(k)) => (k.betas[i], k.core_config(k.betas[i]).density(), k.t_max),
            _ => unreachable!("validated"),
        };
        let mut p = PointData {
            value,
            density,
            t_max,
            traces: Vec::new(),
            aborted: Vec::new(),
            failed: Vec::new(),
            concentration_triggered: (!cfg.model.is_rb()).then_some(0),
            two_box: None,
        };
        for r in 0..cfg.replicas {
            match it.next().expect("one result per job") {
                ReplicaResult::Done(tr, aborted) => {
                    if aborted {
                        p.aborted.push(ReplicaIssue {
                            replica: r,
                            reason: "red particle left the window".into(),
                        });
                    }
                    p.traces.push(tr);
                }
                ReplicaResult::Rbk(tr, triggered) => {
                    if triggered {
                        *p.concentration_triggered.as_mut().unwrap() += 1;
                    }
                    p.traces.push(tr);
                }
                ReplicaResult::Failed(reason) => p.failed.push(ReplicaIssue { replica: r, reason }),
            }
        }
        info!("point {i} ({value}): {} traces, {} aborted, {} failed", p.traces.len(), p.aborted.len(), p.failed.len());
        out.push(p);
    }
    Ok(out)
}

fn red_count_exponent(traces: &[&ReplicaTrace], window: FitWindow) -> Option<f64> {
    let first = traces.first()?;
    let mut pts = Vec::new();
    for (k, s) in first.samples.iter().enumerate() {
        if s.time <= 0.0 || s.time < window.start || s.time > window.end {
            continue;
        }
        let vals: Option<Vec<f64>> = traces.iter().map(|t| t.samples.get(k).map(|x| x.n_red as f64)).collect();
        let vals = vals?;
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        if mean > 0.0 {
            pts.push((s.time.ln(), mean.ln()));
        }
    }
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Final radius at `t_max` for every completed replica.
fn final_radii(p: &PointData) -> Vec<(u64, f64)> {
    let aborted: Vec<u64> = p.aborted.iter().map(|a| a.replica).collect();
    p.traces
        .iter()
        .filter(|t| !aborted.contains(&t.replica))
        .filter_map(|t| t.samples.last().map(|s| (t.replica, s.max_radius)))
        .collect()
}

/// Fits and checks for a set of simulated points.
pub fn summarize(cfg: &ExperimentConfig, data: &[PointData]) -> RunSummary {
    let burn_in = cfg.analysis.burn_in;
    let parameter = if cfg.model.is_rb() { "rho" } else { "beta" };
    let mut points = Vec::with_capacity(data.len());
    let mut bad = 0usize;
    let mut total = 0usize;
    for (i, p) in data.iter().enumerate() {
        total += cfg.replicas as usize;
        bad += p.aborted.len() + p.failed.len();
        let aborted: Vec<u64> = p.aborted.iter().map(|a| a.replica).collect();
        let good: Vec<&ReplicaTrace> = p.traces.iter().filter(|t| !aborted.contains(&t.replica)).collect();
        let window = FitWindow::burn_in(p.t_max, burn_in);
        let (velocity, velocity_error) = if p.two_box.is_some() {
            (None, None)
        } else {
            let trajs: Vec<Vec<(f64, f64)>> = good
                .iter()
                .map(|t| t.samples.iter().map(|s| (s.time, s.max_radius)).collect())
                .collect();
            match estimate_velocity(p.density, &trajs, window) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            }
        };
        let radii: Vec<f64> = final_radii(p).into_iter().map(|r| r.1).collect();
        let final_radius = (!radii.is_empty()).then(|| {
            let n = radii.len() as f64;
            let mean = radii.iter().sum::<f64>() / n;
            let var = if radii.len() > 1 {
                radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            RadiusStats {
                mean,
                stderr: (var / n).sqrt(),
                max: radii.iter().cloned().fold(0.0, f64::max),
            }
        });
        points.push(PointSummary {
            parameter: parameter.into(),
            value: p.value,
            density: p.density,
            t_max: p.t_max,
            trace: (p.two_box.is_none()).then(|| trace_path(data.len(), i)),
            completed: good.len(),
            aborted: p.aborted.clone(),
            failed: p.failed.clone(),
            velocity,
            velocity_error,
            red_count_exponent: red_count_exponent(&good, window),
            final_radius,
            concentration_triggered: p.concentration_triggered,
            two_box: p.two_box.clone(),
        });
    }
    let (scaling, scaling_error) = if data.len() >= 2 && data.iter().all(|p| p.two_box.is_none()) {
        let est: Vec<VelocityEstimate> = points.iter().filter_map(|p| p.velocity.clone()).collect();
        if est.len() < points.len() {
            (None, Some("some grid points have no velocity estimate".to_string()))
        } else {
            match fit_scaling_exponent(&est) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            }
        }
    } else {
        (None, None)
    };
    let bound = cfg.analysis.bound.map(|b| {
        let finals: Vec<FinalRadii> = data
            .iter()
            .filter(|p| p.two_box.is_none())
            .map(|p| FinalRadii {
                rho: p.density,
                t_max: p.t_max,
                radii: final_radii(p),
            })
            .collect();
        compare_to_bound(&finals, &b)
    });
    let failure_fraction = if total > 0 { bad as f64 / total as f64 } else { 0.0 };
    RunSummary {
        model: cfg.model,
        seed: cfg.seed,
        replicas: cfg.replicas,
        burn_in,
        points,
        scaling,
        scaling_error,
        bound,
        failure_fraction,
        partial_failure: failure_fraction > MAX_FAILURE_FRACTION,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    time: f64,
    replica: u64,
    max_radius: f64,
    n_red: u64,
    visited: u64,
}

pub fn write_trace(path: &Path, traces: &[ReplicaTrace]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for t in traces {
        for s in &t.samples {
            w.serialize(TraceRow {
                time: s.time,
                replica: t.replica,
                max_radius: s.max_radius,
                n_red: s.n_red,
                visited: s.visited,
            })?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads a trace file back into per-replica traces (replica order preserved).
pub fn read_trace(path: &Path) -> Result<Vec<ReplicaTrace>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out: Vec<ReplicaTrace> = Vec::new();
    for row in r.deserialize() {
        let row: TraceRow = row?;
        let sample = TraceSample {
            time: row.time,
            max_radius: row.max_radius,
            n_red: row.n_red,
            visited: row.visited,
        };
        match out.last_mut() {
            Some(t) if t.replica == row.replica => t.samples.push(sample),
            _ => out.push(ReplicaTrace {
                replica: row.replica,
                samples: vec![sample],
            }),
        }
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_summary(dir: &Path) -> Result<RunSummary, HarnessError> {
    let path = dir.join("summary.json");
    if !path.exists() {
        return Err(HarnessError::Missing(path));
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Serialize)]
struct ManifestEntry<'a> {
    point: usize,
    value: f64,
    kind: &'static str,
    replica: u64,
    reason: &'a str,
}

fn write_outputs(dir: &Path, cfg: &ExperimentConfig, data: &[PointData], summary: &RunSummary) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, cfg.to_toml()).map_err(io_err(&cfg_path))?;
    for (i, p) in data.iter().enumerate() {
        if p.two_box.is_none() {
            write_trace(&dir.join(trace_path(data.len(), i)), &p.traces)?;
        }
    }
    let mut manifest = Vec::new();
    for (i, p) in data.iter().enumerate() {
        for (kind, list) in [("aborted", &p.aborted), ("failed", &p.failed)] {
            for a in list {
                manifest.push(ManifestEntry {
                    point: i,
                    value: p.value,
                    kind,
                    replica: a.replica,
                    reason: &a.reason,
                });
            }
        }
    }
    if !manifest.is_empty() {
        write_json(&dir.join("manifest.json"), &manifest)?;
    }
    write_json(&dir.join("summary.json"), summary)
}

/// Simulates, writes the run directory and (optionally) its plots.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome, HarnessError> {
    let data = simulate(cfg)?;
    let summary = summarize(cfg, &data);
    write_outputs(dir, cfg, &data, &summary)?;
    if cfg.analysis.plots {
        crate::plot::emit_plots(dir)?;
    }
    if summary.partial_failure {
        warn!(
            "{:.1}% of replicas aborted or failed (limit {:.0}%)",
            100.0 * summary.failure_fraction,
            100.0 * MAX_FAILURE_FRACTION
        );
    }
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        summary,
        data,
    })
}

/// Loads a run directory's configuration and traces.
pub fn load_run(dir: &Path) -> Result<(ExperimentConfig, RunSummary, Vec<PointData>), HarnessError> {
    let summary = read_summary(dir)?;
    let cfg_path = dir.join("config.toml");
    if !cfg_path.exists() {
        return Err(HarnessError::Missing(cfg_path));
    }
    let cfg = ExperimentConfig::from_path(&cfg_path)?;
    let mut data = Vec::with_capacity(summary.points.len());
    for p in &summary.points {
        let traces = match &p.trace {
            Some(rel) => read_trace(&dir.join(rel))?,
            None => Vec::new(),
        };
        data.push(PointData {
            value: p.value,
            density: p.density,
            t_max: p.t_max,
            traces,
            aborted: p.aborted.clone(),
            failed: p.failed.clone(),
            concentration_triggered: p.concentration_triggered,
            two_box: p.two_box.clone(),
        });
    }
    Ok((cfg, summary, data))
}

/// Re-fits an existing run, optionally with another burn-in fraction, and
/// rewrites its summary.
pub fn analyze_run(dir: &Path, burn_in: Option<f64>) -> Result<RunSummary, HarnessError> {
    let (mut cfg, _, data) = load_run(dir)?;
    if let Some(b) = burn_in {
        cfg.analysis.burn_in = b;
        cfg.validate("")?;
    }
    let summary = summarize(&cfg, &data);
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(src: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(src).unwrap()
    }

    const FROG: &str = r#"
model = "frog"
seed = 11
replicas = 4

[rb]
dim = 1
densities = [0.5]
t_max = 20.0
"#;

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(FROG);
        let data = simulate(&c).unwrap();
        let path = dir.path().join("t.csv");
        write_trace(&path, &data[0].traces).unwrap();
        assert_eq!(read_trace(&path).unwrap(), data[0].traces);
        let header = fs::read_to_string(&path).unwrap();
        assert!(header.starts_with("time,replica,max_radius,n_red,visited\n"));
    }

    #[test]
    fn zero_time_is_flagged() {
        let c = cfg(&FROG.replace("t_max = 20.0", "t_max = 0.0").replace("replicas = 4", "replicas = 1"));
        let data = simulate(&c).unwrap();
        let s = summarize(&c, &data);
        assert!(s.points[0].velocity.is_none());
        assert!(s.points[0].velocity_error.as_deref().unwrap().contains("degenerate"));
        assert!(!s.partial_failure);
    }

    #[test]
    fn analyze_reproduces_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(FROG);
        c.analysis.plots = false;
        let out = run_experiment(&c, dir.path()).unwrap();
        let again = analyze_run(dir.path(), None).unwrap();
        assert_eq!(out.summary, again);
        let other = analyze_run(dir.path(), Some(0.25)).unwrap();
        assert_eq!(other.points[0].velocity.as_ref().unwrap().window.start, 5.0);
    }

    #[test]
    fn aborts_are_counted() {
        let src = FROG.replace("densities = [0.5]", "densities = [1.0]\nfield = { mode = \"window\", half_width = 2 }\nseed_rule = \"nearest-origin\"");
        let c = cfg(&src);
        let data = simulate(&c).unwrap();
        let s = summarize(&c, &data);
        assert_eq!(s.points[0].aborted.len(), 4);
        assert!(s.partial_failure);
        assert_eq!(s.points[0].completed, 0);
    }
}

//! Experiment drivers behind the `delaycons` command line.
//!
//! Every `cmd_*` function returns typed results; `*_tables` helpers turn them
//! into CSV tables. All landmark values come straight from [`crate::network`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dde::{
    control_effort, running_effort, simulate, tracking_error, tracking_error_left, zero_input_simulate, Trajectory,
};
use crate::error::{Error, Result};
use crate::graph::{example_graph, Graph, Spectrum};
use crate::network::{
    admissible_delay_network, convergence_rate, optimal_network_delay, rate_increase_window, split_factor_report,
    ConsensusParams, SplitRow,
};
use crate::reference::{Reference, SampledSinusoid};
use crate::Landmark;

/// Delay used by `simulate` and `control-effort` when the grid is `auto`.
pub const DEFAULT_TAU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauGrid {
    Auto(Auto),
    Values(Vec<f64>),
}

impl Default for TauGrid {
    fn default() -> Self {
        TauGrid::Auto(Auto::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Edge-list file; the five-node example graph when absent.
    pub graph: Option<PathBuf>,
    pub alpha: f64,
    pub k: Vec<f64>,
    pub tau: TauGrid,
    /// Number of points in an `auto` delay grid.
    pub tau_points: usize,
    pub horizon: f64,
    pub dt_max: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            graph: None,
            alpha: 1.0,
            k: vec![-0.5, 0.0, 0.5, 1.0, 1.5],
            tau: TauGrid::default(),
            tau_points: 200,
            horizon: 5.0,
            dt_max: 0.01,
            seed: 42,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Validation(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.k.is_empty() {
            return Err(Error::Validation("k list is empty".into()));
        }
        if let Some(k) = self.k.iter().find(|k| !k.is_finite()) {
            return Err(Error::Validation(format!("k must be finite, got {k}")));
        }
        if let TauGrid::Values(v) = &self.tau {
            if v.is_empty() {
                return Err(Error::Validation("tau grid is empty".into()));
            }
            if let Some(t) = v.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
                return Err(Error::Validation(format!("tau must be non-negative, got {t}")));
            }
        }
        if self.tau_points == 0 {
            return Err(Error::Validation("tau_points must be positive".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Validation(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.dt_max.is_finite() && self.dt_max > 0.0) {
            return Err(Error::Validation(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        Ok(())
    }

    pub fn load_graph(&self) -> Result<Graph> {
        match &self.graph {
            Some(p) => Graph::from_file(p).map_err(|e| match e {
                Error::Io(io) => Error::Parse(format!("graph file {}: {io}", p.display())),
                other => other,
            }),
            None => Ok(example_graph()),
        }
    }

    /// Explicit delays, or `[DEFAULT_TAU]` for an `auto` grid.
    pub fn fixed_delays(&self) -> Vec<f64> {
        match &self.tau {
            TauGrid::Values(v) => v.clone(),
            TauGrid::Auto(_) => vec![DEFAULT_TAU],
        }
    }

    fn reference(&self, n: usize) -> Result<SampledSinusoid> {
        let ex = SampledSinusoid::example(self.seed);
        if n == ex.gains.len() {
            return Ok(ex);
        }
        // Other graph sizes cycle through the example gains and biases.
        let gains = (0..n).map(|i| ex.gains[i % ex.gains.len()]).collect();
        let biases = (0..n).map(|i| ex.biases[i % ex.biases.len()]).collect();
        SampledSinusoid::new(gains, biases, ex.sample_rate, self.seed)
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        fs::create_dir_all(dir.as_ref())?;
        let path = dir.as_ref().join(format!("{}.csv", self.name));
        fs::write(&path, self.to_csv())?;
        Ok(path)
    }
}

/// Scientific notation with 17 significant digits, so values round-trip exactly.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_landmark(l: Landmark) -> String {
    match l {
        Landmark::Finite(v) => fmt_num(v),
        Landmark::Unbounded => "inf".into(),
        Landmark::NotApplicable => "n/a".into(),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), fmt_num)
}

fn spectrum(cfg: &ExperimentConfig) -> Result<(Graph, Spectrum)> {
    cfg.validate()?;
    let g = cfg.load_graph()?;
    let spec = Spectrum::of_graph(&g)?;
    if !spec.is_connected() {
        return Err(Error::Domain("graph is not connected".into()));
    }
    Ok((g, spec))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleRow {
    pub k: f64,
    pub tau_bar: Landmark,
}

pub fn cmd_admissible(cfg: &ExperimentConfig) -> Result<Vec<AdmissibleRow>> {
    let (_, spec) = spectrum(cfg)?;
    cfg.k.iter().map(|&k| Ok(AdmissibleRow { k, tau_bar: admissible_delay_network(&spec, cfg.alpha, k)? })).collect()
}

pub fn admissible_table(rows: &[AdmissibleRow]) -> Table {
    let mut t = Table::new("admissible", &["k", "tau_bar"]);
    t.rows = rows.iter().map(|r| vec![fmt_num(r.k), fmt_landmark(r.tau_bar)]).collect();
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMarks {
    pub k: f64,
    pub tau_bar: Landmark,
    pub tau_hat: Landmark,
    pub tau_star: Landmark,
    pub rho_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSweep {
    pub rho0: f64,
    pub ks: Vec<f64>,
    pub taus: Vec<f64>,
    /// `rates[j][i]` is the rate for `ks[i]` at `taus[j]`; nonpositive past `τ̄`.
    pub rates: Vec<Vec<f64>>,
    pub marks: Vec<SweepMarks>,
}

fn sweep_grid(cfg: &ExperimentConfig, marks: &[SweepMarks], spec: &Spectrum) -> Vec<f64> {
    match &cfg.tau {
        TauGrid::Values(v) => v.clone(),
        TauGrid::Auto(_) => {
            let widest = marks.iter().filter_map(|m| m.tau_bar.finite()).fold(0.0, f64::max);
            let span = if widest > 0.0 { 1.1 * widest } else { 1.0 / (cfg.alpha * spec.lambda2()) };
            (1..=cfg.tau_points).map(|j| span * j as f64 / cfg.tau_points as f64).collect()
        }
    }
}

pub fn cmd_rate_sweep(cfg: &ExperimentConfig) -> Result<RateSweep> {
    let (_, spec) = spectrum(cfg)?;
    let marks = cfg
        .k
        .iter()
        .map(|&k| {
            let tau_bar = admissible_delay_network(&spec, cfg.alpha, k)?;
            if k > 0.0 {
                let opt = optimal_network_delay(&spec, cfg.alpha, k)?;
                Ok(SweepMarks {
                    k,
                    tau_bar,
                    tau_hat: Landmark::Finite(rate_increase_window(&spec, cfg.alpha, k)?),
                    tau_star: Landmark::Finite(opt.tau_star),
                    rho_star: Some(opt.rho_star),
                })
            } else {
                Ok(SweepMarks {
                    k,
                    tau_bar,
                    tau_hat: Landmark::NotApplicable,
                    tau_star: Landmark::NotApplicable,
                    rho_star: None,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let taus = sweep_grid(cfg, &marks, &spec);
    let rates = taus
        .par_iter()
        .map(|&tau| {
            cfg.k
                .iter()
                .map(|&k| convergence_rate(&spec, &ConsensusParams::new(cfg.alpha, k, tau)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateSweep { rho0: cfg.alpha * spec.lambda2(), ks: cfg.k.clone(), taus, rates, marks })
}

/// The curve table (`rate_sweep`) and the landmark table (`rate_landmarks`).
///
/// Landmark delays also appear as extra `mark` rows in the curve table.
pub fn rate_sweep_tables(sweep: &RateSweep) -> (Table, Table) {
    let mut header = vec!["tau".to_string(), "mark".to_string()];
    header.extend(sweep.ks.iter().map(|k| format!("rho_k={k}")));
    let mut rows: Vec<(f64, Vec<String>)> = sweep
        .taus
        .iter()
        .zip(&sweep.rates)
        .map(|(&tau, rs)| {
            let mut row = vec![fmt_num(tau), String::new()];
            row.extend(rs.iter().map(|&r| fmt_num(r)));
            (tau, row)
        })
        .collect();
    for m in &sweep.marks {
        for (label, l) in [("tau_hat", m.tau_hat), ("tau_star", m.tau_star)] {
            if let Some(tau) = l.finite() {
                let mut row = vec![fmt_num(tau), format!("{label} k={}", m.k)];
                row.extend(sweep.ks.iter().map(|&k| {
                    if k == m.k && label == "tau_star" {
                        fmt_opt(m.rho_star)
                    } else {
                        String::new()
                    }
                }));
                rows.push((tau, row));
            }
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let curve = Table { name: "rate_sweep".into(), header, rows: rows.into_iter().map(|r| r.1).collect() };

    let mut lm = Table::new("rate_landmarks", &["k", "rho0", "tau_bar", "tau_hat", "tau_star", "rho_star"]);
    lm.rows = sweep
        .marks
        .iter()
        .map(|m| {
            vec![
                fmt_num(m.k),
                fmt_num(sweep.rho0),
                fmt_landmark(m.tau_bar),
                fmt_landmark(m.tau_hat),
                fmt_landmark(m.tau_star),
                fmt_opt(m.rho_star),
            ]
        })
        .collect();
    (curve, lm)
}

/// One closed-loop run driven by the sampled reference.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub k: f64,
    pub tau: f64,
    pub trajectory: Trajectory,
    /// Tracking error right before each new sample, as `(t, error)`.
    pub epoch_errors: Vec<(f64, f64)>,
    /// Tracking error at every grid point.
    pub errors: Vec<f64>,
    pub reference_avg: Vec<f64>,
}

impl SimRun {
    pub fn mean_epoch_error(&self) -> f64 {
        if self.epoch_errors.is_empty() {
            return f64::NAN;
        }
        self.epoch_errors.iter().map(|e| e.1).sum::<f64>() / self.epoch_errors.len() as f64
    }
}

fn end_of_epoch_errors(traj: &Trajectory, r: &SampledSinusoid) -> Vec<(f64, f64)> {
    let left = tracking_error_left(traj, r);
    let horizon = *traj.times.last().unwrap();
    let epochs = (horizon * r.sample_rate + 1e-9).floor() as u64;
    (1..=epochs)
        .map(|m| {
            let t = m as f64 * r.period();
            let i = traj.index_at(t);
            (traj.times[i], left[i])
        })
        .collect()
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Vec<SimRun>> {
    let (g, _) = spectrum(cfg)?;
    let r = cfg.reference(g.n())?;
    let cases: Vec<(f64, f64)> =
        cfg.fixed_delays().iter().flat_map(|&tau| cfg.k.iter().map(move |&k| (k, tau))).collect();
    cases
        .par_iter()
        .map(|&(k, tau)| {
            let p = ConsensusParams::new(cfg.alpha, k, tau)?;
            let trajectory = simulate(&g, &p, &r, cfg.horizon, cfg.dt_max)?;
            let errors = tracking_error(&trajectory, &r);
            let epoch_errors = end_of_epoch_errors(&trajectory, &r);
            let reference_avg =
                trajectory.times.iter().map(|&t| r.value(t).iter().sum::<f64>() / g.n() as f64).collect();
            Ok(SimRun { k, tau, trajectory, epoch_errors, errors, reference_avg })
        })
        .collect()
}

fn run_name(prefix: &str, k: f64, tau: f64) -> String {
    format!("{prefix}_k{k}_tau{tau}")
}

/// One trajectory table per run plus the end-of-epoch summary (`epoch_errors`).
pub fn simulate_tables(runs: &[SimRun]) -> Vec<Table> {
    let mut out = Vec::with_capacity(runs.len() + 1);
    for run in runs {
        let n = run.trajectory.agents();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend((1..=n).map(|i| format!("u_{i}")));
        header.push("r_avg".into());
        header.push("err".into());
        let tr = &run.trajectory;
        let rows = (0..tr.len())
            .map(|j| {
                let mut row = vec![fmt_num(tr.times[j])];
                row.extend(tr.states[j].iter().map(|&v| fmt_num(v)));
                row.extend(tr.controls[j].iter().map(|&v| fmt_num(v)));
                row.push(fmt_num(run.reference_avg[j]));
                row.push(fmt_num(run.errors[j]));
                row
            })
            .collect();
        out.push(Table { name: run_name("trajectory", run.k, run.tau), header, rows });
    }
    let mut summary = Table::new("epoch_errors", &["k", "tau", "epoch", "t", "err"]);
    for run in runs {
        for (m, (t, e)) in run.epoch_errors.iter().enumerate() {
            summary.rows.push(vec![fmt_num(run.k), fmt_num(run.tau), (m + 1).to_string(), fmt_num(*t), fmt_num(*e)]);
        }
    }
    out.push(summary);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffortRun {
    pub k: f64,
    pub tau: f64,
    pub times: Vec<f64>,
    pub running: Vec<f64>,
    pub max_effort: f64,
}

pub fn cmd_control_effort(cfg: &ExperimentConfig) -> Result<Vec<EffortRun>> {
    let (g, _) = spectrum(cfg)?;
    let x0 = cfg.reference(g.n())?.value(0.0);
    let cases: Vec<(f64, f64)> =
        cfg.fixed_delays().iter().flat_map(|&tau| cfg.k.iter().map(move |&k| (k, tau))).collect();
    cases
        .par_iter()
        .map(|&(k, tau)| {
            let p = ConsensusParams::new(cfg.alpha, k, tau)?;
            let tr = zero_input_simulate(&g, &p, &x0, cfg.horizon, cfg.dt_max)?;
            Ok(EffortRun { k, tau, max_effort: control_effort(&tr), running: running_effort(&tr), times: tr.times })
        })
        .collect()
}

/// Long-format running maxima (`effort`) and per-run maxima (`effort_summary`).
pub fn effort_tables(runs: &[EffortRun]) -> (Table, Table) {
    let mut long = Table::new("effort", &["k", "tau", "t", "running_max"]);
    let mut summary = Table::new("effort_summary", &["k", "tau", "max_effort"]);
    for run in runs {
        for (t, e) in run.times.iter().zip(&run.running) {
            long.rows.push(vec![fmt_num(run.k), fmt_num(run.tau), fmt_num(*t), fmt_num(*e)]);
        }
        summary.rows.push(vec![fmt_num(run.k), fmt_num(run.tau), fmt_num(run.max_effort)]);
    }
    (long, summary)
}

pub fn cmd_split_report(cfg: &ExperimentConfig) -> Result<Vec<SplitRow>> {
    let (_, spec) = spectrum(cfg)?;
    split_factor_report(&spec, cfg.alpha, &cfg.k)
}

pub fn split_table(rows: &[SplitRow]) -> Table {
    let mut t = Table::new(
        "split_report",
        &["k", "tau_bar", "tau_hat", "tau_star", "rho_star", "ultimate_bound", "effort_safe"],
    );
    t.rows = rows
        .iter()
        .map(|r| {
            vec![
                fmt_num(r.k),
                fmt_landmark(r.tau_bar),
                fmt_landmark(r.tau_hat),
                fmt_landmark(r.tau_star),
                fmt_opt(r.rho_star),
                fmt_opt(r.ultimate_bound),
                r.effort_safe.to_string(),
            ]
        })
        .collect();
    t
}

/// Plain-text rendering used for console output.
pub fn render(table: &Table) -> String {
    let widths: Vec<usize> = (0..table.header.len())
        .map(|c| {
            table.rows.iter().map(|r| r.get(c).map_or(0, |s| s.len())).chain([table.header[c].len()]).max().unwrap()
        })
        .collect();
    let mut s = String::new();
    let line = |s: &mut String, cells: &[String]| {
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(s, "{c:<w$}  ");
        }
        let trimmed = s.trim_end().len();
        s.truncate(trimmed);
        s.push('\n');
    };
    line(&mut s, &table.header);
    for r in &table.rows {
        line(&mut s, r);
    }
    s
}

//! The `p_max × replicate × T` grid behind the normalized-regret figure.
//!
//! Every window length `T` gets its own hindsight program, solved on the
//! first `T` channels of the replicate's schedule. Replicate `r` draws its
//! schedule from stream `r` of the master seed for every `p_max`, so the
//! curves for different `p_max` share their underlying uniform variates.
//! Cells run in parallel and are merged by cell index, so the output does not
//! depend on the thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::channels::{ChoiMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::harness::config::{EtaSpec, ExperimentConfig};
use crate::harness::output::{emit_plot, fmt_f64, records_to_csv, CurveSeries};
use crate::harness::run::{
    build_records, compute_regret, dephasing_targets, online_trace, reference_losses, resolve_eta,
    solve_reference_cfg, GradBoundSource, OnlineTrace, RunMetadata, RunResult,
};
use crate::harness::schedule::gen_schedule;
use crate::processor::ProcessorMap;

pub const DEFAULT_P_MAX_LIST: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
pub const DEFAULT_REPLICATES: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Loss, learning rate, horizon, master seed and reference settings.
    pub base: ExperimentConfig,
    pub p_max_list: Vec<f64>,
    pub replicates: usize,
    pub t_stride: usize,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: ExperimentConfig::default(),
            p_max_list: DEFAULT_P_MAX_LIST.to_vec(),
            replicates: DEFAULT_REPLICATES,
            t_stride: 1,
            jobs: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.p_max_list.is_empty() {
            return Err(Error::Config("p_max list is empty".into()));
        }
        for &p in &self.p_max_list {
            let mut cfg = self.base.clone();
            cfg.schedule.p_max = p;
            cfg.validate()?;
        }
        if self.replicates == 0 {
            return Err(Error::Config("need at least one replicate".into()));
        }
        if self.t_stride == 0 {
            return Err(Error::Config("t_stride must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Window lengths evaluated: multiples of the stride plus `1` and `T`.
    pub fn t_grid(&self) -> Vec<usize> {
        let h = self.base.schedule.effective_horizon();
        (1..=h)
            .filter(|&t| t == 1 || t == h || t % self.t_stride == 0)
            .collect()
    }

    /// Experiment config for one `(p_max, replicate)` cell.
    pub fn cell_config(&self, p_max: f64, replicate: usize) -> ExperimentConfig {
        let mut cfg = self.base.clone();
        cfg.schedule.p_max = p_max;
        cfg.schedule.stream = replicate as u64;
        cfg
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub p_max: f64,
    pub replicate: usize,
    pub t: usize,
    pub regret: f64,
    pub normalized_regret: f64,
}

#[derive(Clone, Debug)]
pub struct SweepRun {
    pub p_max: f64,
    pub replicate: usize,
    /// The full-horizon run of this cell.
    pub run: RunResult,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Ordered by `p_max`, then replicate, then `T`.
    pub points: Vec<SweepPoint>,
    pub runs: Vec<SweepRun>,
}

struct Series {
    p_max: f64,
    replicate: usize,
    cfg: ExperimentConfig,
    schedule: Vec<f64>,
    targets: Vec<ChoiMatrix>,
    eta: f64,
    grad_bound: f64,
    source: GradBoundSource,
    online: OnlineTrace,
}

struct Cell {
    regret: f64,
    normalized: f64,
    /// Reference program and its losses, kept for the full horizon only.
    full: Option<(DensityMatrix, Vec<f64>)>,
}

fn prepare_series<P: ProcessorMap + ?Sized>(sc: &SweepConfig, p_max: f64, replicate: usize, proc: &P) -> Result<Series> {
    let cfg = sc.cell_config(p_max, replicate);
    let schedule = gen_schedule(&cfg.schedule)?;
    let targets = dephasing_targets(&schedule)?;
    let (eta, grad_bound, source) = resolve_eta(&targets, &cfg, proc)?;
    let online = online_trace(&targets, cfg.loss, eta, cfg.d_const, proc)?;
    Ok(Series {
        p_max,
        replicate,
        cfg,
        schedule,
        targets,
        eta,
        grad_bound,
        source,
        online,
    })
}

fn solve_cell<P: ProcessorMap + ?Sized>(s: &Series, t: usize, proc: &P) -> Result<Cell> {
    let targets = &s.targets[..t];
    let online = match s.cfg.eta {
        EtaSpec::Fixed(_) => s.online.losses[..t].to_vec(),
        // the theoretical rate depends on the window, so the loop is rerun
        EtaSpec::Theoretical => {
            let mut cfg = s.cfg.clone();
            cfg.schedule.horizon = t;
            let (eta, _, _) = resolve_eta(targets, &cfg, proc)?;
            online_trace(targets, cfg.loss, eta, cfg.d_const, proc)?.losses
        }
    };
    let reference = solve_reference_cfg(targets, &s.cfg, proc)?;
    let ref_losses = reference_losses(targets, s.cfg.loss, &reference, proc)?;
    let (regret, normalized) = compute_regret(&online, &ref_losses)?;
    let full = (t == s.targets.len()).then_some((reference, ref_losses));
    Ok(Cell { regret, normalized, full })
}

pub fn run_sweep<P: ProcessorMap + ?Sized>(sc: &SweepConfig, proc: &P) -> Result<SweepResult> {
    sc.validate()?;
    match sc.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(|| sweep_inner(sc, proc)),
        None => sweep_inner(sc, proc),
    }
}

fn sweep_inner<P: ProcessorMap + ?Sized>(sc: &SweepConfig, proc: &P) -> Result<SweepResult> {
    let start = std::time::Instant::now();
    let keys: Vec<(f64, usize)> = sc
        .p_max_list
        .iter()
        .flat_map(|&p| (0..sc.replicates).map(move |r| (p, r)))
        .collect();
    let series: Vec<Series> = keys
        .par_iter()
        .map(|&(p, r)| prepare_series(sc, p, r, proc))
        .collect::<Result<_>>()?;

    let grid = sc.t_grid();
    let cell_keys: Vec<(usize, usize)> = (0..series.len())
        .flat_map(|i| grid.iter().map(move |&t| (i, t)))
        .collect();
    let cells: Vec<Cell> = cell_keys
        .par_iter()
        .map(|&(i, t)| solve_cell(&series[i], t, proc))
        .collect::<Result<_>>()?;

    let points = cell_keys
        .iter()
        .zip(&cells)
        .map(|(&(i, t), c)| SweepPoint {
            p_max: series[i].p_max,
            replicate: series[i].replicate,
            t,
            regret: c.regret,
            normalized_regret: c.normalized,
        })
        .collect();

    let wall = start.elapsed().as_secs_f64();
    let mut runs = Vec::with_capacity(series.len());
    for (s, c) in cell_keys.iter().zip(cells) {
        let Some((reference, ref_losses)) = c.full else { continue };
        let s = &series[s.0];
        let records = build_records(&s.schedule, &s.online.losses, &ref_losses)?;
        let last = *records.last().expect("non-empty horizon");
        runs.push(SweepRun {
            p_max: s.p_max,
            replicate: s.replicate,
            run: RunResult {
                records,
                regret: last.regret_to_t,
                normalized_regret: last.normalized_regret_to_t,
                reference,
                grad_norms: s.online.grad_norms.clone(),
                metadata: RunMetadata {
                    config: s.cfg.clone(),
                    eta: s.eta,
                    grad_bound: s.grad_bound,
                    grad_bound_source: s.source,
                    max_grad_norm: s.online.grad_norms.iter().copied().fold(0.0, f64::max),
                    wall_time_secs: wall,
                },
            },
        });
    }
    Ok(SweepResult {
        config: sc.clone(),
        points,
        runs,
    })
}

impl SweepResult {
    /// Replicate-averaged normalized regret against `T`, one series per `p_max`.
    pub fn mean_curves(&self) -> Vec<CurveSeries> {
        let grid = self.config.t_grid();
        let n = self.config.replicates as f64;
        self.config
            .p_max_list
            .iter()
            .map(|&p_max| {
                let points = grid
                    .iter()
                    .map(|&t| {
                        let sum: f64 = self
                            .points
                            .iter()
                            .filter(|x| x.p_max == p_max && x.t == t)
                            .map(|x| x.normalized_regret)
                            .sum();
                        (t, sum / n)
                    })
                    .collect();
                CurveSeries { p_max, points }
            })
            .collect()
    }
}

/// Least-squares slope of `y` against `t` over points with `t_min ≤ t ≤ t_max`.
pub fn ls_slope(points: &[(usize, f64)], t_min: usize, t_max: usize) -> Option<f64> {
    let sel: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, _)| (t_min..=t_max).contains(t))
        .map(|&(t, y)| (t as f64, y))
        .collect();
    if sel.len() < 2 {
        return None;
    }
    let n = sel.len() as f64;
    let mx = sel.iter().map(|p| p.0).sum::<f64>() / n;
    let my = sel.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = sel.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = sel.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn label(p: f64) -> String {
    format!("{p}")
}

pub fn curve_csv(curves: &[CurveSeries], replicates: usize) -> String {
    let mut s = String::from("p_max,T,mean_normalized_regret,replicates\n");
    for c in curves {
        for &(t, y) in &c.points {
            let _ = writeln!(s, "{},{t},{},{replicates}", label(c.p_max), fmt_f64(y));
        }
    }
    s
}

pub fn points_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("p_max,replicate,T,regret,normalized_regret\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            label(p.p_max),
            p.replicate,
            p.t,
            fmt_f64(p.regret),
            fmt_f64(p.normalized_regret)
        );
    }
    s
}

pub fn run_file_name(p_max: f64, replicate: usize) -> String {
    format!("run_pmax{}_rep{replicate}.csv", label(p_max))
}

/// Writes per-run CSVs, `curve_by_seed.csv`, `curve.csv` and
/// `normalized_regret.svg` into `dir`; returns the paths written.
pub fn write_sweep(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in &result.runs {
        let path = dir.join(run_file_name(r.p_max, r.replicate));
        fs::write(&path, records_to_csv(&r.run.records))?;
        written.push(path);
    }
    let path = dir.join("curve_by_seed.csv");
    fs::write(&path, points_csv(&result.points))?;
    written.push(path);
    let curves = result.mean_curves();
    let path = dir.join("curve.csv");
    fs::write(&path, curve_csv(&curves, result.config.replicates))?;
    written.push(path);
    let path = dir.join("normalized_regret.svg");
    emit_plot(&curves, &path)?;
    written.push(path);
    Ok(written)
}

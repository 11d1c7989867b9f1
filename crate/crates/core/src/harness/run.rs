//! The online loop, the hindsight reference program and regret accounting.

use std::time::Instant;

use crate::channels::{choi_of_channel, dephasing_channel, ChoiMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::harness::config::{EtaSpec, ExperimentConfig};
use crate::harness::schedule::gen_schedule;
use crate::linalg::spectral_norm;
use crate::losses::{evaluate, evaluate_sum, program_loss, LossKind};
use crate::megd::{megd_init, theoretical_eta, RegretBoundInputs, Stabilizer};
use crate::processor::ProcessorMap;

/// Subgradient norm bound used for the trace loss.
pub const TRACE_GRAD_BOUND: f64 = 1.0;
/// Learning rate of the calibration run that estimates `L_*` for the
/// infidelity loss.
pub const CALIBRATION_ETA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub p_t: f64,
    pub loss_online: f64,
    pub loss_reference: f64,
    pub cum_online: f64,
    pub cum_reference: f64,
    pub regret_to_t: f64,
    pub normalized_regret_to_t: f64,
}

/// Where the subgradient bound `L_*` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradBoundSource {
    /// Analytic bound for the trace loss.
    Analytic,
    /// Largest dual norm seen in a calibration run.
    Calibrated,
}

#[derive(Clone, Debug)]
pub struct RunMetadata {
    pub config: ExperimentConfig,
    pub eta: f64,
    pub grad_bound: f64,
    pub grad_bound_source: GradBoundSource,
    /// Largest `‖g̃^t‖_*` observed in this run.
    pub max_grad_norm: f64,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub records: Vec<StepRecord>,
    pub regret: f64,
    pub normalized_regret: f64,
    pub reference: DensityMatrix,
    /// Spectral norms of the online subgradients, one per step.
    pub grad_norms: Vec<f64>,
    pub metadata: RunMetadata,
}

impl RunResult {
    pub fn horizon(&self) -> usize {
        self.records.len()
    }
}

/// Online losses and subgradient norms of one pass of the loop.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineTrace {
    pub losses: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub final_program: DensityMatrix,
}

/// Choi matrices of `dephasing(p)` for each scheduled probability.
pub fn dephasing_targets(schedule: &[f64]) -> Result<Vec<ChoiMatrix>> {
    schedule
        .iter()
        .map(|&p| Ok(choi_of_channel(&dephasing_channel(p)?)))
        .collect()
}

/// Runs the online loop: commit `π^t`, reveal `E^t`, pay the loss, update.
pub fn online_trace<P: ProcessorMap + ?Sized>(
    targets: &[ChoiMatrix],
    kind: LossKind,
    eta: f64,
    d_const: f64,
    proc: &P,
) -> Result<OnlineTrace> {
    let mut state = megd_init(proc.program_qubits(), eta, Stabilizer::Constant(d_const))?;
    let mut losses = Vec::with_capacity(targets.len());
    let mut grad_norms = Vec::with_capacity(targets.len());
    for target in targets {
        let pi = state.current_program();
        let ev = evaluate(kind, target, proc, &pi)?;
        losses.push(ev.value);
        grad_norms.push(spectral_norm(&ev.subgradient)?);
        state.step_mut(&ev)?;
    }
    Ok(OnlineTrace {
        losses,
        grad_norms,
        final_program: state.current_program(),
    })
}

/// Hindsight program: `iters` batch MEGD steps from the maximally mixed state
/// on the gradient of `Σ_t ℓ(E^t, π)` with rate `base / T`. Returns the last
/// iterate.
pub fn solve_reference<P: ProcessorMap + ?Sized>(
    targets: &[ChoiMatrix],
    kind: LossKind,
    iters: usize,
    base_rate: f64,
    d_const: f64,
    proc: &P,
) -> Result<DensityMatrix> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("reference solve needs at least one channel".into()));
    }
    if iters == 0 {
        return Err(Error::Config("ref_iters must be at least 1".into()));
    }
    let eta = base_rate / targets.len() as f64;
    let mut state = megd_init(proc.program_qubits(), eta, Stabilizer::Constant(d_const))?;
    for _ in 0..iters {
        let pi = state.current_program();
        let ev = evaluate_sum(kind, targets, proc, &pi)?;
        state.step_mut(&ev)?;
    }
    Ok(state.current_program())
}

/// Reference solve with the settings of `cfg`.
pub fn solve_reference_cfg<P: ProcessorMap + ?Sized>(
    targets: &[ChoiMatrix],
    cfg: &ExperimentConfig,
    proc: &P,
) -> Result<DensityMatrix> {
    solve_reference(
        targets,
        cfg.loss,
        cfg.reference_iters,
        cfg.reference_base_rate,
        cfg.d_const,
        proc,
    )
}

pub fn reference_losses<P: ProcessorMap + ?Sized>(
    targets: &[ChoiMatrix],
    kind: LossKind,
    reference: &DensityMatrix,
    proc: &P,
) -> Result<Vec<f64>> {
    targets.iter().map(|c| program_loss(kind, c, proc, reference)).collect()
}

/// `(Σ ℓ_online − Σ ℓ_reference, regret / T)`.
pub fn compute_regret(online: &[f64], reference: &[f64]) -> Result<(f64, f64)> {
    if online.len() != reference.len() {
        return Err(Error::LengthMismatch(online.len(), reference.len()));
    }
    if online.is_empty() {
        return Err(Error::InvalidInput("empty loss sequence".into()));
    }
    let regret = online.iter().sum::<f64>() - reference.iter().sum::<f64>();
    Ok((regret, regret / online.len() as f64))
}

/// Per-step records with running sums accumulated in step order, so the
/// last `regret_to_t` is exactly `compute_regret(..).0`.
pub fn build_records(schedule: &[f64], online: &[f64], reference: &[f64]) -> Result<Vec<StepRecord>> {
    if online.len() != reference.len() {
        return Err(Error::LengthMismatch(online.len(), reference.len()));
    }
    if schedule.len() != online.len() {
        return Err(Error::LengthMismatch(schedule.len(), online.len()));
    }
    let mut cum_online = 0.0;
    let mut cum_reference = 0.0;
    Ok(schedule
        .iter()
        .zip(online.iter().zip(reference))
        .enumerate()
        .map(|(i, (&p_t, (&lo, &lr)))| {
            cum_online += lo;
            cum_reference += lr;
            let regret = cum_online - cum_reference;
            StepRecord {
                t: i + 1,
                p_t,
                loss_online: lo,
                loss_reference: lr,
                cum_online,
                cum_reference,
                regret_to_t: regret,
                normalized_regret_to_t: regret / (i + 1) as f64,
            }
        })
        .collect())
}

/// `L_*` for the configured loss: 1 for the trace loss, otherwise the largest
/// subgradient norm of a calibration run at `CALIBRATION_ETA`.
pub fn grad_bound<P: ProcessorMap + ?Sized>(
    targets: &[ChoiMatrix],
    cfg: &ExperimentConfig,
    proc: &P,
) -> Result<(f64, GradBoundSource)> {
    match cfg.loss {
        LossKind::TraceDistance => Ok((TRACE_GRAD_BOUND, GradBoundSource::Analytic)),
        LossKind::Infidelity => {
            let trace = online_trace(targets, cfg.loss, CALIBRATION_ETA, cfg.d_const, proc)?;
            let l = trace.grad_norms.iter().copied().fold(0.0, f64::max);
            Ok((l.max(f64::MIN_POSITIVE), GradBoundSource::Calibrated))
        }
    }
}

/// Learning rate for `cfg` and the `L_*` behind it.
pub fn resolve_eta<P: ProcessorMap + ?Sized>(
    targets: &[ChoiMatrix],
    cfg: &ExperimentConfig,
    proc: &P,
) -> Result<(f64, f64, GradBoundSource)> {
    let (l, source) = grad_bound(targets, cfg, proc)?;
    let eta = match cfg.eta {
        EtaSpec::Fixed(x) => x,
        EtaSpec::Theoretical => theoretical_eta(&RegretBoundInputs {
            horizon: targets.len(),
            grad_bound: l,
            program_qubits: proc.program_qubits(),
        })?,
    };
    Ok((eta, l, source))
}

/// One full experiment for a dephasing schedule.
pub fn run_online<P: ProcessorMap + ?Sized>(cfg: &ExperimentConfig, proc: &P) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let schedule = gen_schedule(&cfg.schedule)?;
    let targets = dephasing_targets(&schedule)?;
    let (eta, l, source) = resolve_eta(&targets, cfg, proc)?;
    let online = online_trace(&targets, cfg.loss, eta, cfg.d_const, proc)?;
    let reference = solve_reference_cfg(&targets, cfg, proc)?;
    let ref_losses = reference_losses(&targets, cfg.loss, &reference, proc)?;
    let records = build_records(&schedule, &online.losses, &ref_losses)?;
    let last = records.last().expect("horizon is at least 1");
    let (regret, normalized_regret) = (last.regret_to_t, last.normalized_regret_to_t);
    let max_grad_norm = online.grad_norms.iter().copied().fold(0.0, f64::max);
    Ok(RunResult {
        records,
        regret,
        normalized_regret,
        reference,
        grad_norms: online.grad_norms,
        metadata: RunMetadata {
            config: cfg.clone(),
            eta,
            grad_bound: l,
            grad_bound_source: source,
            max_grad_norm,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::schedule::{ScheduleKind, ScheduleSpec};
    use crate::processor::GtpProcessor;

    fn cfg(kind: ScheduleKind, p_max: f64, horizon: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            schedule: ScheduleSpec {
                kind,
                p_max,
                horizon,
                seed,
                ..ScheduleSpec::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn regret_identity_over_columns() {
        let r = run_online(&cfg(ScheduleKind::UniformIid, 0.8, 20, 1), &GtpProcessor::new()).unwrap();
        assert_eq!(r.horizon(), 20);
        let online: Vec<f64> = r.records.iter().map(|x| x.loss_online).collect();
        let reference: Vec<f64> = r.records.iter().map(|x| x.loss_reference).collect();
        let (regret, norm) = compute_regret(&online, &reference).unwrap();
        assert_eq!(regret, r.regret);
        assert_eq!(norm, r.normalized_regret);
        assert_eq!(r.normalized_regret, r.regret / 20.0);
    }

    #[test]
    fn constant_schedule_losses_decrease() {
        let r = run_online(&cfg(ScheduleKind::Constant, 0.2, 150, 0), &GtpProcessor::new()).unwrap();
        let l: Vec<f64> = r.records.iter().map(|x| x.loss_online).collect();
        assert!(l.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(l[149] < l[0]);
    }

    #[test]
    fn single_step_regret() {
        let r = run_online(&cfg(ScheduleKind::UniformIid, 0.8, 1, 4), &GtpProcessor::new()).unwrap();
        let proc = GtpProcessor::new();
        let target = dephasing_targets(&[r.records[0].p_t]).unwrap();
        let at_mixed = program_loss(LossKind::TraceDistance, &target[0], &proc, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert_eq!(r.records[0].loss_online, at_mixed);
        assert!(r.regret >= 0.0);
    }

    #[test]
    fn regret_is_zero_when_online_equals_reference() {
        let l = [0.3, 0.2, 0.1];
        assert_eq!(compute_regret(&l, &l).unwrap(), (0.0, 0.0));
        assert!(matches!(compute_regret(&l, &l[..2]), Err(Error::LengthMismatch(3, 2))));
    }

    #[test]
    fn reference_improves_on_maximally_mixed() {
        let proc = GtpProcessor::new();
        for kind in [LossKind::TraceDistance, LossKind::Infidelity] {
            let schedule = gen_schedule(&cfg(ScheduleKind::UniformIid, 0.6, 12, 2).schedule).unwrap();
            let targets = dephasing_targets(&schedule).unwrap();
            let pi = solve_reference(&targets, kind, 120, 0.01, 2.0, &proc).unwrap();
            let sum = |p: &DensityMatrix| reference_losses(&targets, kind, p, &proc).unwrap().iter().sum::<f64>();
            assert!(sum(&pi) <= sum(&DensityMatrix::maximally_mixed(2)));
        }
    }

    #[test]
    fn summed_evaluation_matches_individual_sum() {
        let proc = GtpProcessor::new();
        let targets = dephasing_targets(&[0.1, 0.45, 0.7]).unwrap();
        let pi = crate::random::density(&mut crate::harness::schedule::stream_rng(5, 0), 4);
        for kind in [LossKind::TraceDistance, LossKind::Infidelity] {
            let sum = evaluate_sum(kind, &targets, &proc, &pi).unwrap();
            let mut value = 0.0;
            let mut g = crate::linalg::HermitianMatrix::zeros(4);
            for t in &targets {
                let ev = evaluate(kind, t, &proc, &pi).unwrap();
                value += ev.value;
                g = g.add(&ev.hermitian_subgradient).unwrap();
            }
            assert!((sum.value - value).abs() < 1e-12);
            assert!(sum.hermitian_subgradient.max_abs_diff(&g) < 1e-12);
        }
    }

    #[test]
    fn theoretical_eta_uses_trace_bound() {
        let mut c = cfg(ScheduleKind::UniformIid, 0.8, 150, 0);
        c.eta = EtaSpec::Theoretical;
        let r = run_online(&c, &GtpProcessor::new()).unwrap();
        assert!((r.metadata.eta - 0.13596).abs() < 1e-5);
        assert_eq!(r.metadata.grad_bound, 1.0);
        assert!(r.metadata.max_grad_norm <= 0.5 + 1e-12);
    }
}

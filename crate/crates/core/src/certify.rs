//! Invariant and bound checks run by `qprog certify`.
//!
//! Each check returns a [`Check`] with a pass flag and a one-line detail; the
//! suite never panics on a failed invariant.

use std::f64::consts::LN_2;
use std::fmt;

use rand::Rng;

use crate::channels::{choi_of_channel, dephasing_channel, DensityMatrix};
use crate::error::Result;
use crate::harness::config::{EtaSpec, ExperimentConfig};
use crate::harness::run::{dephasing_targets, online_trace, run_online};
use crate::harness::schedule::stream_rng;
use crate::linalg::{trace_norm_hermitian, HermitianMatrix, DEFAULT_EIG_FLOOR};
use crate::losses::{evaluate, program_loss, LossKind};
use crate::megd::{
    bregman_divergence, eta_regret_bound, megd_init, regret_bound, variational_certificate, RecursiveMegd,
    RegretBoundInputs, Stabilizer,
};
use crate::processor::{GtpProcessor, ProcessorMap};
use crate::random;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let n_pass = self.checks.iter().filter(|c| c.passed).count();
        write!(f, "{n_pass}/{} checks passed", self.checks.len())
    }
}

/// Sizes of the randomized checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CertifyOptions {
    pub random_instances: usize,
    pub certificate_trials: usize,
    pub seeds: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            random_instances: 20,
            certificate_trials: 200,
            seeds: 10,
        }
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// GTP with the Choi state of `dephasing(p)` as program reproduces the channel.
pub fn exact_simulation() -> Result<Check> {
    let gtp = GtpProcessor::new();
    let mut worst: f64 = 0.0;
    for k in 0..=10 {
        let c = choi_of_channel(&dephasing_channel(k as f64 / 10.0)?);
        let sim = gtp.lambda(&c.to_density())?;
        worst = worst.max(crate::losses::trace_loss(&c, &sim)?);
    }
    Ok(check("exact_simulation", worst <= 1e-10, format!("max trace loss {worst:.3e}")))
}

/// Central finite differences of both losses against `tr(g̃ Δ)`.
pub fn subgradient_fd(instances: usize, rng: &mut impl Rng) -> Result<Check> {
    let gtp = GtpProcessor::new();
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let target = if i % 2 == 0 {
            choi_of_channel(&dephasing_channel(rng.random())?)
        } else {
            choi_of_channel(&random::channel(rng, 1, 1, 1 + i % 4))
        };
        // spectrum at least 0.025, so the fixed step stays inside the cone
        let pi = DensityMatrix::new(
            random::density(rng, 4)
                .matrix()
                .scale(0.9)
                .add(&DensityMatrix::maximally_mixed(2).matrix().scale(0.1))?,
        )?;
        let dir = random::traceless_direction(rng, 4);
        let h = 1e-6;
        let plus = DensityMatrix::from_unnormalized(pi.matrix().add(&dir.scale(h))?)?;
        let minus = DensityMatrix::from_unnormalized(pi.matrix().sub(&dir.scale(h))?)?;
        for kind in [LossKind::TraceDistance, LossKind::Infidelity] {
            let g = evaluate(kind, &target, &gtp, &pi)?;
            let fd = (program_loss(kind, &target, &gtp, &plus)? - program_loss(kind, &target, &gtp, &minus)?) / (2.0 * h);
            let analytic = g.hermitian_subgradient.trace_product(&dir)?;
            worst = worst.max((fd - analytic).abs());
        }
    }
    Ok(check(
        "subgradient_fd",
        worst <= 1e-4,
        format!("{instances} instances, max |fd - <g,d>| {worst:.3e}"),
    ))
}

/// Realized regret against the regret bound at the theoretical rate, and the
/// rate-dependent bound at the configured rate.
pub fn regret_bounds(base: &ExperimentConfig, seeds: u64) -> Result<Vec<Check>> {
    let gtp = GtpProcessor::new();
    let mut worst_margin = f64::INFINITY;
    let mut worst_eta_margin = f64::INFINITY;
    for seed in 0..seeds {
        let mut cfg = base.clone();
        cfg.loss = LossKind::TraceDistance;
        cfg.eta = EtaSpec::Theoretical;
        cfg.schedule.seed = base.schedule.seed.wrapping_add(seed);
        let r = run_online(&cfg, &gtp)?;
        let bound = regret_bound(&RegretBoundInputs {
            horizon: r.horizon(),
            grad_bound: r.metadata.grad_bound,
            program_qubits: gtp.program_qubits(),
        })?;
        worst_margin = worst_margin.min(bound - r.regret);

        let eta = match base.eta {
            EtaSpec::Fixed(x) => x,
            EtaSpec::Theoretical => r.metadata.eta,
        };
        let mut fixed = cfg.clone();
        fixed.eta = EtaSpec::Fixed(eta);
        let r = run_online(&fixed, &gtp)?;
        let bound = eta_regret_bound(eta, gtp.program_qubits(), &r.grad_norms);
        worst_eta_margin = worst_eta_margin.min(bound - r.regret);
    }
    Ok(vec![
        check(
            "regret_bound",
            worst_margin >= 0.0,
            format!("{seeds} seeds, min(bound - regret) {worst_margin:.4}"),
        ),
        check(
            "rate_regret_bound",
            worst_eta_margin >= 0.0,
            format!("{seeds} seeds, min(bound - regret) {worst_eta_margin:.4}"),
        ),
    ])
}

/// Unrolled and recursive updates agree, and the step solves the mirror
/// problem against random competitors.
pub fn megd_mechanics(steps: usize, trials: usize, rng: &mut impl Rng) -> Result<Check> {
    let gtp = GtpProcessor::new();
    let schedule: Vec<f64> = (0..steps).map(|_| rng.random_range(0.2..0.8)).collect();
    let targets = dephasing_targets(&schedule)?;
    let mut unrolled = megd_init(2, 0.05, Stabilizer::Constant(2.0))?;
    let mut recursive = RecursiveMegd::new(2, 0.05)?;
    let mut worst: f64 = 0.0;
    let mut cert = true;
    for (t, target) in targets.iter().enumerate() {
        let pi = unrolled.current_program();
        let ev = evaluate(LossKind::TraceDistance, target, &gtp, &pi)?;
        if t < 5 {
            cert &= variational_certificate(&unrolled, &ev, trials, rng)?;
        }
        unrolled.step_mut(&ev)?;
        recursive.step(&ev.hermitian_subgradient)?;
        worst = worst.max(unrolled.current_program().matrix().max_abs_diff(recursive.program().matrix()));
    }
    Ok(check(
        "megd_mechanics",
        worst <= 1e-8 && cert,
        format!("{steps} steps, max unrolled/recursive gap {worst:.3e}, certificate {cert}"),
    ))
}

/// Relative entropy is nonnegative, at most `n ln 2` from the maximally mixed
/// state, and dominates `½‖π₁ − π₂‖_tr²`.
pub fn entropy(pairs: usize, rng: &mut impl Rng) -> Result<Check> {
    let mixed = DensityMatrix::maximally_mixed(2);
    let mut ok = true;
    let mut worst_gap = f64::INFINITY;
    for _ in 0..pairs {
        let a = random::density(rng, 4);
        let b = random::density(rng, 4);
        let div = bregman_divergence(&a, &b, DEFAULT_EIG_FLOOR)?;
        let tn = trace_norm_hermitian(&a.matrix().sub(b.matrix())?)?;
        worst_gap = worst_gap.min(div - 0.5 * tn * tn);
        ok &= div >= -1e-12;
        ok &= bregman_divergence(&a, &mixed, DEFAULT_EIG_FLOOR)? <= 2.0 * LN_2 + 1e-12;
    }
    Ok(check(
        "entropy",
        ok && worst_gap >= -1e-12,
        format!("{pairs} pairs, min(B - ½‖Δ‖²) {worst_gap:.3e}"),
    ))
}

/// Circuit simulation against the closed-form processor map, and duality.
pub fn processor(instances: usize, rng: &mut impl Rng) -> Result<Check> {
    let gtp = GtpProcessor::new();
    let mut worst_sim: f64 = 0.0;
    let mut worst_dual: f64 = 0.0;
    for _ in 0..instances {
        let pi = random::density(rng, 4);
        let a = gtp.choi_of_simulated(&pi)?;
        let b = gtp.lambda(&pi)?;
        worst_sim = worst_sim.max(a.matrix().max_abs_diff(b.matrix()));
        let x: HermitianMatrix = random::hermitian(rng, 4);
        let y: HermitianMatrix = random::hermitian(rng, 4);
        let lhs = gtp.forward(&x)?.trace_product(&y)?;
        let rhs = x.trace_product(&gtp.dual(&y)?)?;
        worst_dual = worst_dual.max((lhs - rhs).abs());
    }
    Ok(check(
        "processor",
        worst_sim <= 1e-10 && worst_dual <= 1e-10,
        format!("{instances} programs, circuit gap {worst_sim:.3e}, duality gap {worst_dual:.3e}"),
    ))
}

/// Losses decrease along the online run for a constant schedule.
pub fn constant_schedule_descent(base: &ExperimentConfig) -> Result<Check> {
    let gtp = GtpProcessor::new();
    let targets = dephasing_targets(&vec![base.schedule.p_min; base.schedule.horizon])?;
    let eta = match base.eta {
        EtaSpec::Fixed(x) => x,
        EtaSpec::Theoretical => 0.01,
    };
    let tr = online_trace(&targets, base.loss, eta, base.d_const, &gtp)?;
    let monotone = tr.losses.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let (first, last) = (tr.losses[0], *tr.losses.last().expect("horizon >= 1"));
    Ok(check(
        "constant_schedule_descent",
        monotone && last <= first,
        format!("loss {first:.4} -> {last:.4}, monotone {monotone}"),
    ))
}

/// Runs every check for the given experiment settings.
pub fn certify(cfg: &ExperimentConfig, opts: &CertifyOptions) -> Result<Report> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.schedule.seed, u64::MAX);
    let mut checks = vec![
        exact_simulation()?,
        subgradient_fd(opts.random_instances, &mut rng)?,
        megd_mechanics(cfg.schedule.horizon.min(150), opts.certificate_trials, &mut rng)?,
        entropy(opts.random_instances * 10, &mut rng)?,
        processor(opts.random_instances, &mut rng)?,
        constant_schedule_descent(cfg)?,
    ];
    checks.extend(regret_bounds(cfg, opts.seeds)?);
    Ok(Report { checks })
}

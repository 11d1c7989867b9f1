//! Simulation-error losses between Choi matrices and their subgradients with
//! respect to the program state.

use std::fmt;
use std::str::FromStr;

use crate::channels::{ChoiMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{apply_to_eig, eig_hermitian, trace_norm, ComplexMatrix, HermitianMatrix, MatrixFn};
use crate::processor::ProcessorMap;

/// Eigenvalue floor for the inverse square root in the infidelity gradient.
pub const FIDELITY_EIG_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `½‖C_E − C_π‖_tr`
    TraceDistance,
    /// `1 − F(C_E, C_π)²`
    Infidelity,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::TraceDistance => "trace",
            LossKind::Infidelity => "fidelity",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trace" | "trace_distance" | "trace-distance" | "l1" => Ok(LossKind::TraceDistance),
            "fidelity" | "infidelity" | "lf" => Ok(LossKind::Infidelity),
            other => Err(Error::Config(format!("unknown loss '{other}' (expected trace or fidelity)"))),
        }
    }
}

/// Loss value together with a subgradient at the evaluated program.
#[derive(Clone, Debug)]
pub struct LossEvaluation {
    pub value: f64,
    pub subgradient: ComplexMatrix,
    pub hermitian_subgradient: HermitianMatrix,
}

impl LossEvaluation {
    fn from_hermitian(value: f64, g: HermitianMatrix) -> Self {
        Self {
            value,
            subgradient: g.as_matrix().clone(),
            hermitian_subgradient: g,
        }
    }
}

fn check_dims(a: &ChoiMatrix, b: &ChoiMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("Choi matrices of dimension {} and {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// Trace distance `½‖C_E − C_π‖_tr`.
pub fn trace_loss(c_target: &ChoiMatrix, c_sim: &ChoiMatrix) -> Result<f64> {
    check_dims(c_target, c_sim)?;
    trace_loss_raw(c_target.matrix(), c_sim.matrix())
}

fn trace_loss_raw(target: &HermitianMatrix, sim: &HermitianMatrix) -> Result<f64> {
    let eig = eig_hermitian(&sim.sub(target)?)?;
    Ok(0.5 * eig.eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
}

/// Uhlmann fidelity `tr sqrt(sqrt(A) B sqrt(A))`, evaluated as the trace norm
/// of `sqrt(A) sqrt(B)`.
///
/// The square roots of the eigenvalues of `sqrt(A) B sqrt(A)` turn round-off
/// of order 1e-17 in its kernel into errors of order 1e-9; the singular values
/// of the product do not have that problem.
pub fn fidelity(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    let sqrt_a = apply_to_eig(&eig_hermitian(a)?, MatrixFn::Sqrt, 0.0)?;
    fidelity_with_sqrt(&sqrt_a, b)
}

fn fidelity_with_sqrt(sqrt_a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    let sqrt_b = apply_to_eig(&eig_hermitian(b)?, MatrixFn::Sqrt, 0.0)?;
    trace_norm(&sqrt_a.as_matrix().matmul(sqrt_b.as_matrix())?)
}

fn sandwich(outer: &HermitianMatrix, mid: &HermitianMatrix) -> Result<HermitianMatrix> {
    let m = outer.as_matrix().matmul(mid.as_matrix())?.matmul(outer.as_matrix())?;
    Ok(HermitianMatrix::symmetrized(m))
}

/// Infidelity `1 − F²`, clamped to `[0, 1]` against round-off.
pub fn fidelity_loss(c_target: &ChoiMatrix, c_sim: &ChoiMatrix) -> Result<f64> {
    check_dims(c_target, c_sim)?;
    let f = fidelity(c_target.matrix(), c_sim.matrix())?;
    Ok((1.0 - f * f).clamp(0.0, 1.0))
}

pub fn loss(kind: LossKind, c_target: &ChoiMatrix, c_sim: &ChoiMatrix) -> Result<f64> {
    match kind {
        LossKind::TraceDistance => trace_loss(c_target, c_sim),
        LossKind::Infidelity => fidelity_loss(c_target, c_sim),
    }
}

fn simulated<P: ProcessorMap + ?Sized>(proc: &P, c_target: &ChoiMatrix, pi: &DensityMatrix) -> Result<ChoiMatrix> {
    let sim = proc.choi(pi)?;
    check_dims(c_target, &sim)?;
    Ok(sim)
}

/// Trace-distance loss and subgradient `½ Σ_i sign(λ_i) Λ*(E_i)`, where
/// `C_π − C_E = Σ_i λ_i E_i` and `sign(0) = +1`.
///
/// Projectors are taken per eigenvector; `sign` is constant on an eigenspace
/// so this equals the per-eigenvalue sum.
pub fn subgrad_trace<P: ProcessorMap + ?Sized>(
    c_target: &ChoiMatrix,
    proc: &P,
    pi: &DensityMatrix,
) -> Result<LossEvaluation> {
    let sim = simulated(proc, c_target, pi)?;
    let (value, g) = trace_choi_grad(c_target.matrix(), sim.matrix())?;
    Ok(LossEvaluation::from_hermitian(value, proc.dual(&g)?))
}

fn trace_choi_grad(target: &HermitianMatrix, sim: &HermitianMatrix) -> Result<(f64, HermitianMatrix)> {
    let eig = eig_hermitian(&sim.sub(target)?)?;
    let value = 0.5 * eig.eigenvalues.iter().map(|x| x.abs()).sum::<f64>();
    let signs = eig.map_spectrum(|x| if x >= 0.0 { 0.5 } else { -0.5 });
    Ok((value, signs))
}

/// Infidelity loss and subgradient `−F · Λ*(√C_E (√C_E Λ(π) √C_E)^{-1/2} √C_E)`.
///
/// The inverse square root floors eigenvalues at `eps`, which keeps the
/// expression finite when the target Choi matrix is rank deficient.
pub fn subgrad_fidelity<P: ProcessorMap + ?Sized>(
    c_target: &ChoiMatrix,
    proc: &P,
    pi: &DensityMatrix,
    eps: f64,
) -> Result<LossEvaluation> {
    let sim = simulated(proc, c_target, pi)?;
    let (value, g) = fidelity_choi_grad(c_target.matrix(), sim.matrix(), eps)?;
    Ok(LossEvaluation::from_hermitian(value, proc.dual(&g)?))
}

fn fidelity_choi_grad(target: &HermitianMatrix, sim: &HermitianMatrix, eps: f64) -> Result<(f64, HermitianMatrix)> {
    let sqrt_t = apply_to_eig(&eig_hermitian(target)?, MatrixFn::Sqrt, 0.0)?;
    let inner_eig = eig_hermitian(&sandwich(&sqrt_t, sim)?)?;
    let f = fidelity_with_sqrt(&sqrt_t, sim)?;
    let inv_sqrt = apply_to_eig(&inner_eig, MatrixFn::InvSqrt, eps)?;
    let g = sandwich(&sqrt_t, &inv_sqrt)?.scale(-f);
    Ok(((1.0 - f * f).clamp(0.0, 1.0), g))
}

fn choi_grad(kind: LossKind, target: &HermitianMatrix, sim: &HermitianMatrix) -> Result<(f64, HermitianMatrix)> {
    match kind {
        LossKind::TraceDistance => trace_choi_grad(target, sim),
        LossKind::Infidelity => fidelity_choi_grad(target, sim, FIDELITY_EIG_FLOOR),
    }
}

/// Loss and subgradient for either loss kind.
pub fn evaluate<P: ProcessorMap + ?Sized>(
    kind: LossKind,
    c_target: &ChoiMatrix,
    proc: &P,
    pi: &DensityMatrix,
) -> Result<LossEvaluation> {
    match kind {
        LossKind::TraceDistance => subgrad_trace(c_target, proc, pi),
        LossKind::Infidelity => subgrad_fidelity(c_target, proc, pi, FIDELITY_EIG_FLOOR),
    }
}

/// Summed loss `Σ_t ℓ(E^t, π)` and its subgradient.
///
/// The processor map and its dual are linear, so `Λ(π)` is formed once and
/// the Choi-space gradients are summed before a single application of `Λ*`.
pub fn evaluate_sum<P: ProcessorMap + ?Sized>(
    kind: LossKind,
    targets: &[ChoiMatrix],
    proc: &P,
    pi: &DensityMatrix,
) -> Result<LossEvaluation> {
    let first = targets
        .first()
        .ok_or_else(|| Error::InvalidInput("no target channels".into()))?;
    let sim = simulated(proc, first, pi)?;
    let mut value = 0.0;
    let mut g = HermitianMatrix::zeros(sim.dim());
    for target in targets {
        check_dims(target, &sim)?;
        let (v, gt) = choi_grad(kind, target.matrix(), sim.matrix())?;
        value += v;
        g = g.add(&gt)?;
    }
    Ok(LossEvaluation::from_hermitian(value, proc.dual(&g)?))
}

/// Loss value only, through the processor map.
pub fn program_loss<P: ProcessorMap + ?Sized>(
    kind: LossKind,
    c_target: &ChoiMatrix,
    proc: &P,
    pi: &DensityMatrix,
) -> Result<f64> {
    let sim = simulated(proc, c_target, pi)?;
    loss(kind, c_target, &sim)
}

//! Density matrices, Kraus-form channels and their Choi matrices.
//!
//! Choi matrices use the ordering `reference ⊗ output`: the first `n` qubits
//! are the untouched half of the maximally entangled state and the last `n'`
//! qubits carry the channel output.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    kron, partial_trace_hermitian, pauli, trace_norm_hermitian, ComplexMatrix, HermitianMatrix,
    Subsystem, C64, PSD_SLACK,
};

/// Tolerance for unit trace and Kraus completeness.
pub const STATE_TOL: f64 = 1e-10;

const MAX_BELL_QUBITS: usize = 3;

/// Positive semidefinite, unit-trace state on `qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    matrix: HermitianMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let qubits = qubits_for_dim(matrix.dim())?;
        let tr = matrix.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let min = matrix.min_eigenvalue()?;
        if min < -PSD_SLACK {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { qubits, matrix })
    }

    /// Scales a PSD matrix to unit trace.
    pub fn from_unnormalized(matrix: HermitianMatrix) -> Result<Self> {
        let tr = matrix.trace();
        if !(tr > 0.0) {
            return Err(Error::InvalidTrace(tr));
        }
        Self::new(matrix.scale(1.0 / tr))
    }

    /// Skips the spectral checks. Callers guarantee the invariants.
    pub(crate) fn from_trusted(matrix: HermitianMatrix) -> Self {
        let qubits = qubits_for_dim(matrix.dim()).expect("power-of-two dimension");
        Self { qubits, matrix }
    }

    /// Pure state `|ψ><ψ|`; the vector is normalized first.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidInput("zero state vector".into()));
        }
        Self::new(HermitianMatrix::outer(psi).scale(1.0 / norm2))
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let d = 1usize << qubits;
        Self::from_trusted(HermitianMatrix::identity(d).scale(1.0 / d as f64))
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).expect("same shape")
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        Ok(0.5 * trace_norm_hermitian(&self.matrix.sub(&other.matrix)?)?)
    }
}

pub(crate) fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    in_qubits: usize,
    out_qubits: usize,
    kraus: Vec<ComplexMatrix>,
}

impl QuantumChannel {
    /// Validates shapes and the completeness relation `Σ A_i^† A_i = I`.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidInput("channel needs at least one Kraus operator".into()))?;
        let (rows, cols) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != rows || k.cols() != cols) {
            return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        let in_qubits = qubits_for_dim(cols)?;
        let out_qubits = qubits_for_dim(rows)?;
        let mut sum = DMatrix::<C64>::zeros(cols, cols);
        for k in &kraus {
            sum += k.inner().adjoint() * k.inner();
        }
        let dev = (sum - DMatrix::<C64>::identity(cols, cols))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > STATE_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self {
            in_qubits,
            out_qubits,
            kraus,
        })
    }

    pub fn identity(qubits: usize) -> Self {
        Self::new(vec![ComplexMatrix::identity(1 << qubits)]).expect("identity is a channel")
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// Convex combination `Σ w_i E_i`; weights must be nonnegative and sum
    /// to one.
    pub fn mixture(parts: &[(f64, &QuantumChannel)]) -> Result<Self> {
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > STATE_TOL {
            return Err(Error::ProbabilityOutOfRange(format!("mixture weights sum to {total}")));
        }
        let mut kraus = Vec::new();
        for (w, ch) in parts {
            for k in &ch.kraus {
                kraus.push(k.scale(w.sqrt()));
            }
        }
        Self::new(kraus)
    }

    pub fn in_qubits(&self) -> usize {
        self.in_qubits
    }

    pub fn out_qubits(&self) -> usize {
        self.out_qubits
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `Σ_i A_i X A_i^†` without validating that `x` is a state.
    pub(crate) fn apply_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = DMatrix::<C64>::zeros(1 << self.out_qubits, 1 << self.out_qubits);
        for k in &self.kraus {
            out += k.inner() * x.inner() * k.inner().adjoint();
        }
        ComplexMatrix::from_inner(out)
    }
}

/// `|Φ+><Φ+|` on `2n` qubits.
pub fn bell_state(n: usize) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("Bell state needs at least one qubit per side".into()));
    }
    if n > MAX_BELL_QUBITS {
        return Err(Error::TooLarge(n));
    }
    let d = 1usize << n;
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut psi = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        psi[i * d + i] = amp;
    }
    Ok(DensityMatrix::from_trusted(HermitianMatrix::outer(&psi)))
}

/// `E(ρ) = Σ_i A_i ρ A_i^†`.
pub fn apply_channel(ch: &QuantumChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.qubits() != ch.in_qubits {
        return Err(Error::DimensionMismatch(format!(
            "channel takes {} qubits, state has {}",
            ch.in_qubits,
            rho.qubits()
        )));
    }
    let out = ch.apply_operator(rho.matrix().as_matrix());
    Ok(DensityMatrix::from_trusted(HermitianMatrix::symmetrized(out)))
}

/// Choi matrix `(I ⊗ E)|Φ+><Φ+|` of a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    in_qubits: usize,
    out_qubits: usize,
    matrix: HermitianMatrix,
}

impl ChoiMatrix {
    /// Validates PSD, unit trace and the reduced-state witness
    /// `tr_out C = I/2^n`.
    pub fn new(in_qubits: usize, matrix: HermitianMatrix) -> Result<Self> {
        let total = qubits_for_dim(matrix.dim())?;
        if in_qubits == 0 || in_qubits >= total {
            return Err(Error::InvalidChoi(format!(
                "{in_qubits} input qubits for a {total}-qubit Choi matrix"
            )));
        }
        let out_qubits = total - in_qubits;
        let choi = Self {
            in_qubits,
            out_qubits,
            matrix,
        };
        choi.validate()?;
        Ok(choi)
    }

    pub(crate) fn from_trusted(in_qubits: usize, out_qubits: usize, matrix: HermitianMatrix) -> Self {
        debug_assert_eq!(matrix.dim(), 1 << (in_qubits + out_qubits));
        Self {
            in_qubits,
            out_qubits,
            matrix,
        }
    }

    fn validate(&self) -> Result<()> {
        let tr = self.matrix.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let min = self.matrix.min_eigenvalue()?;
        if min < -PSD_SLACK {
            return Err(Error::NotPsd(min));
        }
        let dev = self.reduced_input().max_abs_diff(&HermitianMatrix::identity(1 << self.in_qubits).scale(
            1.0 / (1u64 << self.in_qubits) as f64,
        ));
        if dev > STATE_TOL {
            return Err(Error::InvalidChoi(format!("reduced state deviates from I/d by {dev:e}")));
        }
        Ok(())
    }

    /// Reduced state on the reference factor; `I/2^n` for any channel.
    pub fn reduced_input(&self) -> HermitianMatrix {
        partial_trace_hermitian(
            &self.matrix,
            (1 << self.in_qubits, 1 << self.out_qubits),
            Subsystem::Last,
        )
        .expect("consistent dimensions")
    }

    pub fn in_qubits(&self) -> usize {
        self.in_qubits
    }

    pub fn out_qubits(&self) -> usize {
        self.out_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// Reinterprets the Choi matrix as a state on `n + n'` qubits.
    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(self.matrix.clone())
    }

    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        Ok(0.5 * trace_norm_hermitian(&self.matrix.sub(&other.matrix)?)?)
    }
}

/// Builds the Choi matrix of `ch`.
pub fn choi_of_channel(ch: &QuantumChannel) -> ChoiMatrix {
    let n = ch.in_qubits;
    let d_in = 1usize << n;
    let d_out = 1usize << ch.out_qubits;
    // Σ_ij |i><j| ⊗ E(|i><j|) / d_in
    let mut out = DMatrix::<C64>::zeros(d_in * d_out, d_in * d_out);
    for i in 0..d_in {
        for j in 0..d_in {
            let mut eij = DMatrix::<C64>::zeros(d_in, d_in);
            eij[(i, j)] = C64::new(1.0, 0.0);
            let block = ch.apply_operator(&ComplexMatrix::from_inner(eij));
            out.view_mut((i * d_out, j * d_out), (d_out, d_out))
                .copy_from(block.inner());
        }
    }
    out /= C64::new(d_in as f64, 0.0);
    ChoiMatrix::from_trusted(
        n,
        ch.out_qubits,
        HermitianMatrix::symmetrized(ComplexMatrix::from_inner(out)),
    )
}

/// Two channels are considered equal when their Choi matrices are within
/// `1e-10` trace distance.
pub fn channels_equal(a: &QuantumChannel, b: &QuantumChannel) -> Result<bool> {
    if a.in_qubits != b.in_qubits || a.out_qubits != b.out_qubits {
        return Ok(false);
    }
    Ok(choi_of_channel(a).trace_distance(&choi_of_channel(b))? <= 1e-10)
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(format!("{name} = {p}")));
    }
    Ok(())
}

/// `ρ ↦ (1-p) ρ + p Z ρ Z`.
pub fn dephasing_channel(p: f64) -> Result<QuantumChannel> {
    check_probability("p", p)?;
    QuantumChannel::new(vec![pauli(0).scale((1.0 - p).sqrt()), pauli(3).scale(p.sqrt())])
}

/// `ρ ↦ (1-Σp) ρ + p_x XρX + p_y YρY + p_z ZρZ`.
pub fn pauli_channel(p_x: f64, p_y: f64, p_z: f64) -> Result<QuantumChannel> {
    check_probability("p_x", p_x)?;
    check_probability("p_y", p_y)?;
    check_probability("p_z", p_z)?;
    let total = p_x + p_y + p_z;
    if total > 1.0 + 1e-15 {
        return Err(Error::ProbabilityOutOfRange(format!("p_x + p_y + p_z = {total}")));
    }
    let p_i = (1.0 - total).max(0.0);
    QuantumChannel::new(
        [p_i, p_x, p_y, p_z]
            .iter()
            .enumerate()
            .map(|(k, p)| pauli(k).scale(p.sqrt()))
            .collect(),
    )
}

/// Amplitude damping with decay probability `gamma`. Not teleportation
/// covariant; used as a test fixture only.
pub fn amplitude_damping_channel(gamma: f64) -> Result<QuantumChannel> {
    check_probability("gamma", gamma)?;
    let k0 = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()])?;
    let k1 = ComplexMatrix::from_real(2, 2, &[0.0, gamma.sqrt(), 0.0, 0.0])?;
    QuantumChannel::new(vec![k0, k1])
}

/// Tensor product of two channels.
pub fn tensor_channels(a: &QuantumChannel, b: &QuantumChannel) -> Result<QuantumChannel> {
    let mut kraus = Vec::with_capacity(a.kraus.len() * b.kraus.len());
    for ka in &a.kraus {
        for kb in &b.kraus {
            kraus.push(kron(ka, kb)?);
        }
    }
    QuantumChannel::new(kraus)
}

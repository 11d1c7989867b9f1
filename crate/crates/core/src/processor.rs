//! Programmable processors.
//!
//! A processor is described to the optimizer through the linear map `Λ`
//! sending a program state to the Choi matrix of the channel it simulates,
//! together with the adjoint `Λ*`. The generalized teleportation processor
//! (GTP) is the one concrete processor shipped here; it is exposed both as
//! the closed-form twirl and as an explicit three-qubit circuit so the two
//! descriptions can be checked against each other.

use nalgebra::DMatrix;

use crate::channels::{choi_of_channel, ChoiMatrix, DensityMatrix, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{kron, partial_trace, pauli, ComplexMatrix, HermitianMatrix, Subsystem, C64};

/// Linear map from program states to Choi matrices, plus its adjoint.
pub trait ProcessorMap: Send + Sync {
    /// Number of program qubits `n_π`.
    fn program_qubits(&self) -> usize;

    /// Number of qubits the simulated channel acts on.
    fn channel_qubits(&self) -> usize;

    /// `Λ(X)` for a Hermitian operator on the program register.
    fn forward(&self, program: &HermitianMatrix) -> Result<HermitianMatrix>;

    /// `Λ*(X)` for a Hermitian operator on the Choi space.
    fn dual(&self, x: &HermitianMatrix) -> Result<HermitianMatrix>;

    fn program_dim(&self) -> usize {
        1 << self.program_qubits()
    }

    fn choi_dim(&self) -> usize {
        1 << (2 * self.channel_qubits())
    }

    /// Choi matrix of the channel simulated with `program`.
    fn choi(&self, program: &DensityMatrix) -> Result<ChoiMatrix> {
        if program.qubits() != self.program_qubits() {
            return Err(Error::DimensionMismatch(format!(
                "processor takes a {}-qubit program, got {}",
                self.program_qubits(),
                program.qubits()
            )));
        }
        let n = self.channel_qubits();
        Ok(ChoiMatrix::from_trusted(n, n, self.forward(program.matrix())?))
    }
}

/// Processor map given by an explicit Kraus list `Λ(X) = Σ_i A_i X A_i^†`.
///
/// Kraus operators may be rectangular (`choi_dim x program_dim`).
#[derive(Clone, Debug)]
pub struct KrausProcessor {
    program_qubits: usize,
    channel_qubits: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausProcessor {
    pub fn new(program_qubits: usize, channel_qubits: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let pd = 1usize << program_qubits;
        let cd = 1usize << (2 * channel_qubits);
        if kraus.is_empty() || kraus.iter().any(|k| k.rows() != cd || k.cols() != pd) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operators must be {cd}x{pd}"
            )));
        }
        let mut sum = DMatrix::<C64>::zeros(pd, pd);
        for k in &kraus {
            sum += k.inner().adjoint() * k.inner();
        }
        let dev = (sum - DMatrix::<C64>::identity(pd, pd))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self {
            program_qubits,
            channel_qubits,
            kraus,
        })
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    fn check_dim(x: &HermitianMatrix, want: usize) -> Result<()> {
        if x.dim() != want {
            return Err(Error::DimensionMismatch(format!("expected dimension {want}, got {}", x.dim())));
        }
        Ok(())
    }
}

impl ProcessorMap for KrausProcessor {
    fn program_qubits(&self) -> usize {
        self.program_qubits
    }

    fn channel_qubits(&self) -> usize {
        self.channel_qubits
    }

    fn forward(&self, program: &HermitianMatrix) -> Result<HermitianMatrix> {
        Self::check_dim(program, self.program_dim())?;
        let x = program.as_matrix().inner();
        let mut out = DMatrix::<C64>::zeros(self.choi_dim(), self.choi_dim());
        for k in &self.kraus {
            out += k.inner() * x * k.inner().adjoint();
        }
        Ok(HermitianMatrix::symmetrized(ComplexMatrix::from_inner(out)))
    }

    fn dual(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        Self::check_dim(x, self.choi_dim())?;
        let x = x.as_matrix().inner();
        let mut out = DMatrix::<C64>::zeros(self.program_dim(), self.program_dim());
        for k in &self.kraus {
            out += k.inner().adjoint() * x * k.inner();
        }
        Ok(HermitianMatrix::symmetrized(ComplexMatrix::from_inner(out)))
    }
}

/// Generalized teleportation processor: one input qubit, two program qubits.
///
/// Bell projectors follow the usual convention
/// `|Φ±> = (|00> ± |11>)/√2`, `|Ψ±> = (|01> ± |10>)/√2`, ordered
/// `P_0 = Φ+`, `P_1 = Ψ+`, `P_2 = Ψ-`, `P_3 = Φ-`. Outcome `k` is corrected
/// by the Pauli `V_k` (`I, X, Y, Z`) on the last qubit, which carries the
/// output.
#[derive(Clone, Debug)]
pub struct GtpProcessor {
    bell_projectors: [HermitianMatrix; 4],
    corrections: [ComplexMatrix; 4],
    twirl: KrausProcessor,
}

impl Default for GtpProcessor {
    fn default() -> Self {
        Self::new()
    }
}

impl GtpProcessor {
    pub fn new() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (z, p, m) = (C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0));
        let phi_plus = [p, z, z, p];
        let psi_plus = [z, p, p, z];
        let psi_minus = [z, p, m, z];
        let phi_minus = [p, z, z, m];
        let bell_projectors = [phi_plus, psi_plus, psi_minus, phi_minus].map(|v| HermitianMatrix::outer(&v));
        let corrections = [0, 1, 2, 3].map(pauli);
        let kraus = corrections
            .iter()
            .map(|v| kron(&v.adjoint(), v).expect("finite").scale(0.5))
            .collect();
        let twirl = KrausProcessor::new(2, 1, kraus).expect("Pauli twirl is trace preserving");
        Self {
            bell_projectors,
            corrections,
            twirl,
        }
    }

    pub fn bell_projectors(&self) -> &[HermitianMatrix; 4] {
        &self.bell_projectors
    }

    pub fn corrections(&self) -> &[ComplexMatrix; 4] {
        &self.corrections
    }

    /// Kraus operators `(V_k^† ⊗ V_k)/2` of `Λ`.
    pub fn lambda_kraus(&self) -> &[ComplexMatrix] {
        self.twirl.kraus_ops()
    }

    /// `Λ(π) = ¼ Σ_k (V_k^† ⊗ V_k) π (V_k^† ⊗ V_k)^†`.
    pub fn lambda(&self, pi: &DensityMatrix) -> Result<ChoiMatrix> {
        self.choi(pi)
    }

    /// `Λ*`; the twirl is self-adjoint, so this is the same formula.
    pub fn lambda_dual(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.twirl.dual(x)
    }

    /// Runs the teleportation circuit on `ρ ⊗ π` and returns the state of the
    /// output qubit.
    pub fn apply(&self, rho: &DensityMatrix, pi: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.qubits() != 1 {
            return Err(Error::DimensionMismatch(format!("GTP input must be one qubit, got {}", rho.qubits())));
        }
        self.check_program(pi)?;
        let out = self.simulate_operator(rho.matrix().as_matrix(), pi)?;
        DensityMatrix::new(HermitianMatrix::symmetrized(out))
    }

    /// `Σ_k V_k tr_{12}[(P_k ⊗ I)(X ⊗ π)(P_k ⊗ I)] V_k^†`, linear in `X`.
    fn simulate_operator(&self, x: &ComplexMatrix, pi: &DensityMatrix) -> Result<ComplexMatrix> {
        let joint = kron(x, pi.matrix().as_matrix())?;
        let id2 = ComplexMatrix::identity(2);
        let mut out = DMatrix::<C64>::zeros(2, 2);
        for (proj, v) in self.bell_projectors.iter().zip(&self.corrections) {
            let m = kron(proj.as_matrix(), &id2)?;
            let post = m.matmul(&joint)?.matmul(&m)?;
            let reduced = partial_trace(&post, (2, 4), Subsystem::First)?;
            out += v.inner() * reduced.inner() * v.inner().adjoint();
        }
        Ok(ComplexMatrix::from_inner(out))
    }

    /// Choi matrix of the circuit-level channel, built column by column from
    /// its action on `|i><j|`.
    pub fn choi_of_simulated(&self, pi: &DensityMatrix) -> Result<ChoiMatrix> {
        self.check_program(pi)?;
        let mut c = DMatrix::<C64>::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let mut eij = DMatrix::<C64>::zeros(2, 2);
                eij[(i, j)] = C64::new(1.0, 0.0);
                let block = self.simulate_operator(&ComplexMatrix::from_inner(eij), pi)?;
                c.view_mut((2 * i, 2 * j), (2, 2)).copy_from(block.inner());
            }
        }
        c /= C64::new(2.0, 0.0);
        Ok(ChoiMatrix::from_trusted(
            1,
            1,
            HermitianMatrix::symmetrized(ComplexMatrix::from_inner(c)),
        ))
    }

    fn check_program(&self, pi: &DensityMatrix) -> Result<()> {
        if pi.qubits() != 2 {
            return Err(Error::DimensionMismatch(format!("GTP program must be two qubits, got {}", pi.qubits())));
        }
        Ok(())
    }
}

impl ProcessorMap for GtpProcessor {
    fn program_qubits(&self) -> usize {
        2
    }

    fn channel_qubits(&self) -> usize {
        1
    }

    fn forward(&self, program: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.twirl.forward(program)
    }

    fn dual(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.twirl.dual(x)
    }
}

/// Program state equal to the Choi matrix of `ch`.
///
/// For teleportation-covariant channels (all Pauli channels) the GTP run with
/// this program reproduces `ch` exactly; for other channels it only gives an
/// approximation.
pub fn exact_program_for(ch: &QuantumChannel) -> Result<DensityMatrix> {
    if ch.in_qubits() != 1 || ch.out_qubits() != 1 {
        return Err(Error::DimensionMismatch("GTP simulates single-qubit channels".into()));
    }
    Ok(choi_of_channel(ch).to_density())
}

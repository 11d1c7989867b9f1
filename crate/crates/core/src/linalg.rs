//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are small (at most 64 x 64) so everything is dense and backed by
//! [`nalgebra::DMatrix`]. Hermitian eigendecomposition drives every spectral
//! function (`exp`, `log`, `sqrt`, `inv_sqrt`) as well as the trace and
//! spectral norms.
//!
//! Degenerate eigenvalues are not tie-broken. Every consumer either applies a
//! scalar function to the spectrum or sums sign-weighted projectors, both of
//! which are independent of the basis chosen inside an eigenspace.

use std::fmt;

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Tolerance used when checking that a matrix is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalue slack allowed for functions that require a PSD argument.
pub const PSD_SLACK: f64 = 1e-10;
/// Default eigenvalue floor for `log` and `inv_sqrt`.
pub const DEFAULT_EIG_FLOOR: f64 = 1e-12;

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, entries))
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_row_major(rows, cols, &c)
    }

    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self(inner))
    }

    pub(crate) fn from_inner(inner: DMatrix<C64>) -> Self {
        Self(inner)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self(&self.0 - &other.0))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Self(&self.0 * &other.0))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `tr(A^† B)`, the Hilbert-Schmidt inner product.
    pub fn inner_product(&self, other: &Self) -> Result<C64> {
        self.check_same_shape(other)?;
        Ok(self.0.dotc(&other.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.0.shape() != other.0.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.0.shape(),
                other.0.shape()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.0)
    }
}

/// Square complex matrix equal to its own conjugate transpose.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Accepts a matrix that is Hermitian within [`HERMITIAN_TOL`] and stores
    /// its symmetrized form.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare(m.rows(), m.cols()));
        }
        let n = m.rows();
        let a = m.inner();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
            }
        }
        if worst > HERMITIAN_TOL {
            return Err(Error::NotHermitian(worst));
        }
        Ok(Self::symmetrized(m))
    }

    /// `(A + A^†)/2` without any tolerance check.
    pub(crate) fn symmetrized(m: ComplexMatrix) -> Self {
        let a = m.into_inner();
        let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
        Self(ComplexMatrix(h))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    pub fn diag(values: &[f64]) -> Self {
        Self(ComplexMatrix::diag(values))
    }

    /// Rank-one projector `|v><v|` for a (not necessarily normalized) vector.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        let m = DMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj());
        Self(ComplexMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.sub(&other.0)?))
    }

    /// Real part of `tr(A B)`; exact for Hermitian pairs.
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        Ok(self.0.inner_product(&other.0)?.re)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0.get(row, col)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*eig_hermitian(self)?.eigenvalues.last().expect("non-empty"))
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianMatrix{}", self.0.inner())
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvector
/// columns.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Column `i` of the eigenvector matrix.
    pub fn eigenvector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.inner().column(i).iter().copied().collect()
    }

    /// `Σ_i f(λ_i) v_i v_i^†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let w: Vec<f64> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        self.with_eigenvalues(&w)
    }

    /// `Σ_i w_i v_i v_i^†` for replacement eigenvalues `w`.
    pub fn with_eigenvalues(&self, weights: &[f64]) -> HermitianMatrix {
        assert_eq!(weights.len(), self.dim());
        let v = self.eigenvectors.inner();
        let n = self.dim();
        let mut scaled = v.clone();
        for (j, &w) in weights.iter().enumerate() {
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        HermitianMatrix::symmetrized(ComplexMatrix(scaled * v.adjoint()))
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map_spectrum(|x| x)
    }
}

fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.inner().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Err(Error::NonFiniteInput)
    } else {
        Ok(())
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<EigDecomposition> {
    check_finite(a.as_matrix())?;
    let sym = HermitianMatrix::symmetrized(a.as_matrix().clone());
    let eig = SymmetricEigen::new(sym.into_matrix().into_inner());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors: ComplexMatrix(eigenvectors),
    })
}

/// Scalar functions that can be lifted to Hermitian matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFn {
    Exp,
    Log,
    Sqrt,
    InvSqrt,
}

impl MatrixFn {
    fn requires_psd(self) -> bool {
        !matches!(self, MatrixFn::Exp)
    }
}

/// Applies `f` through the spectrum of `a`.
///
/// `log` and `inv_sqrt` clamp eigenvalues from below at `eps`; `sqrt` clamps
/// at zero. All three reject matrices with an eigenvalue below `-1e-10`.
pub fn matrix_function(a: &HermitianMatrix, f: MatrixFn, eps: f64) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(a)?;
    apply_to_eig(&eig, f, eps)
}

pub(crate) fn apply_to_eig(eig: &EigDecomposition, f: MatrixFn, eps: f64) -> Result<HermitianMatrix> {
    if f.requires_psd() {
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -PSD_SLACK {
            return Err(Error::NotPsd(min));
        }
    }
    Ok(match f {
        MatrixFn::Exp => eig.map_spectrum(f64::exp),
        MatrixFn::Log => eig.map_spectrum(|x| x.max(eps).ln()),
        MatrixFn::Sqrt => eig.map_spectrum(|x| x.max(0.0).sqrt()),
        MatrixFn::InvSqrt => eig.map_spectrum(|x| 1.0 / x.max(eps).sqrt()),
    })
}

fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    check_finite(a)?;
    let svd = a.inner().clone().svd(false, false);
    Ok(svd.singular_values.iter().copied().collect())
}

/// Sum of singular values, `tr sqrt(A^† A)`.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// Largest singular value.
pub fn spectral_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(a)?.into_iter().fold(0.0, f64::max))
}

/// Trace norm of a Hermitian matrix via its eigenvalues.
pub fn trace_norm_hermitian(a: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(a)?.eigenvalues.iter().map(|x| x.abs()).sum())
}

/// `(A + A^†)/2`.
pub fn hermitian_part(a: &ComplexMatrix) -> Result<HermitianMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare(a.rows(), a.cols()));
    }
    Ok(HermitianMatrix::symmetrized(a.clone()))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_finite(a)?;
    check_finite(b)?;
    Ok(ComplexMatrix(a.inner().kronecker(b.inner())))
}

/// Which tensor factor a partial trace removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Last,
}

/// Partial trace over one factor of a bipartite operator.
///
/// `dims` is `(d_keep, d_discard)`. With [`Subsystem::Last`] the operator is
/// laid out as `keep ⊗ discard`; with [`Subsystem::First`] as
/// `discard ⊗ keep`.
pub fn partial_trace(a: &ComplexMatrix, dims: (usize, usize), which: Subsystem) -> Result<ComplexMatrix> {
    let (dk, dd) = dims;
    let n = dk * dd;
    if dk == 0 || dd == 0 || a.rows() != n || a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace with dims ({dk}, {dd}) on a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let m = a.inner();
    let out = match which {
        Subsystem::Last => DMatrix::from_fn(dk, dk, |i, j| (0..dd).map(|k| m[(i * dd + k, j * dd + k)]).sum()),
        Subsystem::First => DMatrix::from_fn(dk, dk, |i, j| (0..dd).map(|k| m[(k * dk + i, k * dk + j)]).sum()),
    };
    Ok(ComplexMatrix(out))
}

/// Partial trace of a Hermitian operator; the result is Hermitian.
pub fn partial_trace_hermitian(a: &HermitianMatrix, dims: (usize, usize), which: Subsystem) -> Result<HermitianMatrix> {
    Ok(HermitianMatrix::symmetrized(partial_trace(a.as_matrix(), dims, which)?))
}

/// Single-qubit Pauli matrices `I, X, Y, Z`.
pub fn pauli(index: usize) -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let e = match index {
        0 => [one, z, z, one],
        1 => [z, one, one, z],
        2 => [z, -i, i, z],
        3 => [one, z, z, -one],
        _ => panic!("pauli index {index} out of range"),
    };
    ComplexMatrix(DMatrix::from_row_slice(2, 2, &e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn herm(m: ComplexMatrix) -> HermitianMatrix {
        HermitianMatrix::new(m).unwrap()
    }

    #[test]
    fn eig_of_pauli_z() {
        let e = eig_hermitian(&herm(pauli(3))).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, -1.0]);
        assert!((e.eigenvector(0)[0].norm() - 1.0).abs() < 1e-12);
        assert!((e.eigenvector(1)[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_of_identity() {
        let e = eig_hermitian(&HermitianMatrix::identity(4)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0; 4]);
    }

    #[test]
    fn eig_of_pauli_x() {
        let x = herm(pauli(1));
        let e = eig_hermitian(&x).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] + 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.eigenvector(0);
        let v1 = e.eigenvector(1);
        // up to a global phase
        assert!(((v0[0].conj() * v0[1]).re - 0.5).abs() < 1e-12);
        assert!(((v1[0].conj() * v1[1]).re + 0.5).abs() < 1e-12);
        assert!((v0[0].norm() - s).abs() < 1e-12);
        assert!(e.reconstruct().max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn eig_rejects_non_finite() {
        let m = ComplexMatrix::from_inner(DMatrix::from_element(2, 2, C64::new(f64::NAN, 0.0)));
        let h = HermitianMatrix::symmetrized(m);
        assert!(matches!(eig_hermitian(&h), Err(Error::NonFiniteInput)));
    }

    #[test]
    fn spectral_functions_on_diagonals() {
        let zero = HermitianMatrix::zeros(3);
        let e = matrix_function(&zero, MatrixFn::Exp, 0.0).unwrap();
        assert!(e.max_abs_diff(&HermitianMatrix::identity(3)) < 1e-15);

        let inv = matrix_function(&HermitianMatrix::diag(&[4.0, 1.0]), MatrixFn::InvSqrt, 0.0).unwrap();
        assert!(inv.max_abs_diff(&HermitianMatrix::diag(&[0.5, 1.0])) < 1e-15);

        let s = matrix_function(&HermitianMatrix::diag(&[0.25, 0.81]), MatrixFn::Sqrt, 0.0).unwrap();
        assert!(s.max_abs_diff(&HermitianMatrix::diag(&[0.5, 0.9])) < 1e-15);
    }

    #[test]
    fn log_floors_zero_eigenvalues() {
        let l = matrix_function(&HermitianMatrix::diag(&[1.0, 0.0]), MatrixFn::Log, 1e-12).unwrap();
        assert!((l.get(1, 1).re - 1e-12f64.ln()).abs() < 1e-9);
        assert!(l.get(0, 0).norm() < 1e-15);
    }

    #[test]
    fn psd_functions_reject_negative_spectrum() {
        let m = HermitianMatrix::diag(&[1.0, -0.1]);
        for f in [MatrixFn::Log, MatrixFn::Sqrt, MatrixFn::InvSqrt] {
            assert!(matches!(matrix_function(&m, f, 1e-12), Err(Error::NotPsd(_))));
        }
        assert!(matrix_function(&m, MatrixFn::Exp, 0.0).is_ok());
        // tiny negative round-off is tolerated
        assert!(matrix_function(&HermitianMatrix::diag(&[1.0, -1e-12]), MatrixFn::Sqrt, 0.0).is_ok());
    }

    #[test]
    fn norms_of_simple_matrices() {
        let d = ComplexMatrix::diag(&[1.0, -1.0]);
        assert!((trace_norm(&d).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = [c(s), C64::new(0.0, s)];
        let r1 = HermitianMatrix::outer(&v).scale(0.3);
        assert!((trace_norm(r1.as_matrix()).unwrap() - 0.3).abs() < 1e-14);

        assert!((spectral_norm(&ComplexMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-14);
        assert!((spectral_norm(&ComplexMatrix::diag(&[3.0, -5.0])).unwrap() - 5.0).abs() < 1e-14);
        for k in 0..4 {
            assert!((spectral_norm(&pauli(k)).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn hermitian_part_cases() {
        let x = pauli(2);
        assert!(hermitian_part(&x).unwrap().as_matrix().max_abs_diff(&x) < 1e-15);

        let anti = ComplexMatrix::from_row_major(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)]).unwrap();
        assert!(hermitian_part(&anti).unwrap().as_matrix().norm() < 1e-15);

        let n = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let want = ComplexMatrix::from_real(2, 2, &[0.0, 0.5, 0.5, 0.0]).unwrap();
        assert!(hermitian_part(&n).unwrap().as_matrix().max_abs_diff(&want) < 1e-15);

        assert!(matches!(hermitian_part(&ComplexMatrix::zeros(2, 3)), Err(Error::NotSquare(2, 3))));
    }

    #[test]
    fn kron_cases() {
        let i2 = ComplexMatrix::identity(2);
        assert!(kron(&i2, &i2).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);

        let zz = kron(&pauli(3), &pauli(3)).unwrap();
        assert!(zz.max_abs_diff(&ComplexMatrix::diag(&[1.0, -1.0, -1.0, 1.0])) < 1e-15);

        let e11 = ComplexMatrix::diag(&[1.0, 0.0]);
        let k = kron(&e11, &pauli(1)).unwrap();
        let want = ComplexMatrix::from_real(
            4,
            4,
            &[0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.],
        )
        .unwrap();
        assert!(k.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn partial_trace_cases() {
        let rho = ComplexMatrix::from_real(2, 2, &[0.7, 0.2, 0.2, 0.3]).unwrap();
        let sigma = ComplexMatrix::from_real(2, 2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let prod = kron(&rho, &sigma).unwrap();
        let kept = partial_trace(&prod, (2, 2), Subsystem::Last).unwrap();
        assert!(kept.max_abs_diff(&rho.scale(3.0)) < 1e-14);
        let kept_first = partial_trace(&prod, (2, 2), Subsystem::First).unwrap();
        assert!(kept_first.max_abs_diff(&sigma.scale(1.0)) < 1e-14);

        // |Φ+><Φ+| reduces to I/2 on either side
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = HermitianMatrix::outer(&[c(s), c(0.0), c(0.0), c(s)]);
        for which in [Subsystem::First, Subsystem::Last] {
            let r = partial_trace(phi.as_matrix(), (2, 2), which).unwrap();
            assert!(r.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
        }

        let mixed = ComplexMatrix::identity(4).scale(0.25);
        let r = partial_trace(&mixed, (2, 2), Subsystem::First).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);

        assert!(matches!(
            partial_trace(&mixed, (2, 3), Subsystem::Last),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn hermitian_constructor_tolerance() {
        let nearly = ComplexMatrix::from_row_major(2, 2, &[c(1.0), c(0.5 + 1e-13), c(0.5), c(0.0)]).unwrap();
        assert!(HermitianMatrix::new(nearly).is_ok());
        let off = ComplexMatrix::from_real(2, 2, &[1.0, 0.6, 0.5, 0.0]).unwrap();
        assert!(matches!(HermitianMatrix::new(off), Err(Error::NotHermitian(_))));
    }
}

//! Random matrices and states for validation runs.
//!
//! All generators take an explicit RNG so callers control seeding.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::{DensityMatrix, QuantumChannel};
use crate::linalg::{ComplexMatrix, HermitianMatrix, C64};

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_inner(DMatrix::from_fn(rows, cols, |_, _| gaussian(rng)))
}

/// Hermitian matrix from the Gaussian unitary ensemble.
pub fn hermitian(rng: &mut impl Rng, dim: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrized(ginibre(rng, dim, dim))
}

/// Traceless Hermitian matrix with unit Frobenius norm.
pub fn traceless_direction(rng: &mut impl Rng, dim: usize) -> HermitianMatrix {
    let h = hermitian(rng, dim);
    let shift = HermitianMatrix::identity(dim).scale(h.trace() / dim as f64);
    let t = h.sub(&shift).expect("same shape");
    let n = t.as_matrix().norm();
    t.scale(1.0 / n)
}

/// Haar-distributed unitary via QR of a Ginibre matrix with the phases of
/// `R`'s diagonal absorbed.
pub fn unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, dim).into_inner();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_inner(q)
}

/// Full-rank mixed state `G G^† / tr(G G^†)` from the Hilbert-Schmidt
/// ensemble.
pub fn density(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
    density_with_rank(rng, dim, dim)
}

/// Random state of the given rank (rank 1 gives a pure state).
pub fn density_with_rank(rng: &mut impl Rng, dim: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, dim, rank).into_inner();
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_trusted(HermitianMatrix::symmetrized(ComplexMatrix::from_inner(m / C64::new(tr, 0.0))))
}

/// Random channel from a Haar-ish isometry with `kraus_count` Kraus
/// operators.
pub fn channel(rng: &mut impl Rng, in_qubits: usize, out_qubits: usize, kraus_count: usize) -> QuantumChannel {
    let d_in = 1usize << in_qubits;
    let d_out = 1usize << out_qubits;
    let g = ginibre(rng, d_out * kraus_count, d_in).into_inner();
    // Orthonormalize the columns to get an isometry V; the Kraus operators
    // are its row blocks.
    let v = g.qr().q();
    let kraus = (0..kraus_count)
        .map(|k| ComplexMatrix::from_inner(v.rows(k * d_out, d_out).into_owned()))
        .collect();
    QuantumChannel::new(kraus).expect("isometry blocks are complete")
}

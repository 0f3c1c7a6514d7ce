//! Direct sparse factorisations and the GMRES Krylov solver.
//!
//! Two factorisation backends sit behind [`Factorization`]: a banded LU
//! with partial pivoting (natural fit for the lexicographically ordered
//! structured meshes) and a fill-reducing sparse LU for systems whose
//! band would be too expensive. [`FactorBackend::Auto`] picks between
//! them from the band storage/flop estimates.

pub mod banded;
pub mod gmres;
pub mod sparse;

pub use banded::BandedLu;
pub use gmres::{gmres, GmresOptions, GmresResult, KrylovTrace, LinearOp};
pub use sparse::SparseLu;

use crate::assembly::SparseComplexSystem;
use crate::{Result, C64};

/// Euclidean norm.
pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugated dot product `<a, b> = sum conj(a_i) b_i`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `y += alpha x`.
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Factorisation backend selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorBackend {
    /// Banded when the band estimate is cheap, fill-reducing otherwise.
    #[default]
    Auto,
    Banded,
    Sparse,
}

/// A reusable direct factorisation of a [`SparseComplexSystem`].
#[derive(Debug)]
pub enum Factorization {
    Banded(BandedLu),
    Sparse(SparseLu),
}

impl Factorization {
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        match self {
            Factorization::Banded(f) => f.solve(b),
            Factorization::Sparse(f) => f.solve(b),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Factorization::Banded(f) => f.n,
            Factorization::Sparse(f) => f.n(),
        }
    }
}

/// Factorises the system with the requested backend.
pub fn sparse_factorize(
    system: &SparseComplexSystem,
    backend: FactorBackend,
) -> Result<Factorization> {
    let backend = match backend {
        FactorBackend::Auto => {
            let n = system.n as f64;
            let bw = system.bandwidth as f64;
            let bytes = n * (3.0 * bw + 1.0) * 16.0;
            let flops = 2.0 * n * bw * bw;
            if bytes <= 64e6 && flops <= 2e9 {
                FactorBackend::Banded
            } else {
                FactorBackend::Sparse
            }
        }
        other => other,
    };
    Ok(match backend {
        FactorBackend::Banded => Factorization::Banded(BandedLu::factorize(system)?),
        FactorBackend::Sparse => Factorization::Sparse(SparseLu::factorize(system)?),
        FactorBackend::Auto => unreachable!(),
    })
}

/// Convenience for tests and reference solutions: factorise and solve.
pub fn sparse_solve(
    system: &SparseComplexSystem,
    b: &[C64],
    backend: FactorBackend,
) -> Result<Vec<C64>> {
    Ok(sparse_factorize(system, backend)?.solve(b))
}

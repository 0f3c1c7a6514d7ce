//! Fill-reducing sparse LU backend (faer).

use std::sync::Once;

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::assembly::SparseComplexSystem;
use crate::error::Error;
use crate::{Result, C64};

static INIT: Once = Once::new();

/// Sparse LU of a [`SparseComplexSystem`] with a fill-reducing ordering.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, C64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

impl SparseLu {
    pub fn factorize(system: &SparseComplexSystem) -> Result<Self> {
        // determinism and clean nesting under our own rayon loops: keep the
        // backend single-threaded
        INIT.call_once(|| {
            faer::set_global_parallelism(faer::Par::Seq);
        });
        let n = system.n;
        let mut triplets = Vec::with_capacity(system.values.len());
        for r in 0..n {
            for idx in system.row_ptr[r]..system.row_ptr[r + 1] {
                triplets.push(Triplet::new(r, system.col_idx[idx], system.values[idx]));
            }
        }
        let mat = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::InvalidConfig(format!("sparse matrix build failed: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|_| Error::SingularPivot { row: usize::MAX })?;
        Ok(SparseLu { n, lu })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.n);
        let rhs = faer::Mat::<C64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

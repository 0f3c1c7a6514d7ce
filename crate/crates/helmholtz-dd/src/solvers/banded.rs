//! Banded LU factorisation with partial pivoting (LAPACK band layout).

use crate::assembly::SparseComplexSystem;
use crate::error::Error;
use crate::{Result, C64};

/// Banded LU factors. Entry `A(i, j)` of the original matrix lives at
/// `ab[j * ldab + kl + ku + i - j]`; the extra `kl` superdiagonals hold
/// pivoting fill.
#[derive(Debug, Clone)]
pub struct BandedLu {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    ldab: usize,
    ab: Vec<C64>,
    ipiv: Vec<usize>,
    /// Fill statistics: stored band entries per row.
    pub band_width_total: usize,
}

impl BandedLu {
    /// Extracts the band of the system and factorises it in place.
    pub fn factorize(system: &SparseComplexSystem) -> Result<Self> {
        let n = system.n;
        let kl = system.bandwidth;
        let ku = system.bandwidth;
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![C64::new(0.0, 0.0); ldab * n];
        for r in 0..n {
            for idx in system.row_ptr[r]..system.row_ptr[r + 1] {
                let c = system.col_idx[idx];
                ab[c * ldab + kv + r - c] = system.values[idx];
            }
        }
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize; // last column affected by the current panel

        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // pivot among rows j..=j+km of column j
            let mut jp = 0usize;
            let mut best = ab[j * ldab + kv].norm();
            for i in 1..=km {
                let v = ab[j * ldab + kv + i].norm();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            if best < 1e-300 {
                return Err(Error::SingularPivot { row: j });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for col in j..=ju {
                    let a = col * ldab + kv + j - col;
                    let b = a + jp;
                    ab.swap(a, b);
                }
            }
            if km > 0 {
                let piv = ab[j * ldab + kv];
                for i in 1..=km {
                    ab[j * ldab + kv + i] /= piv;
                }
                for col in (j + 1)..=ju {
                    let head = ab[col * ldab + kv + j - col];
                    if head.norm() != 0.0 {
                        let base = col * ldab + kv + j - col;
                        for i in 1..=km {
                            let m = ab[j * ldab + kv + i];
                            ab[base + i] -= m * head;
                        }
                    }
                }
            }
        }

        Ok(BandedLu {
            n,
            kl,
            ku,
            ldab,
            ab,
            ipiv,
            band_width_total: ldab,
        })
    }

    /// Solves `A x = b` using the stored factors.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.n);
        let (kl, ku, ldab) = (self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        let mut x = b.to_vec();
        // forward: apply permutations and L
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = kl.min(self.n - 1 - j);
            let xj = x[j];
            if xj.norm() != 0.0 {
                for i in 1..=km {
                    let m = self.ab[j * ldab + kv + i];
                    x[j + i] -= m * xj;
                }
            }
        }
        // backward: U has bandwidth kv
        for j in (0..self.n).rev() {
            x[j] /= self.ab[j * ldab + kv];
            let xj = x[j];
            if xj.norm() != 0.0 {
                let reach = kv.min(j);
                for i in 1..=reach {
                    x[j - i] -= self.ab[j * ldab + kv - i] * xj;
                }
            }
        }
        x
    }
}

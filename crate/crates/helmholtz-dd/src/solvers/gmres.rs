//! Full (unrestarted) GMRES with modified Gram-Schmidt and one
//! reorthogonalisation pass.

use super::{axpy, dot, norm2};
use crate::C64;

/// Abstract linear operator for the Krylov solver (possibly a
/// preconditioned matrix product).
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);

    fn apply_alloc(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl LinearOp for crate::assembly::SparseComplexSystem {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec(x, y);
    }
}

#[derive(Debug, Clone)]
pub struct GmresOptions {
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iters: usize,
    /// Keep the Arnoldi basis in the result (needed to reconstruct
    /// intermediate iterates or check orthogonality).
    pub keep_basis: bool,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tol: 1e-6,
            max_iters: 200,
            keep_basis: false,
        }
    }
}

/// Per-iteration convergence record.
#[derive(Debug, Clone)]
pub struct KrylovTrace {
    /// `||r^n||_2` for `n = 0, 1, ...` (non-increasing by minimality).
    pub residual_norms: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// GMRES output. With `keep_basis` the intermediate iterates can be
/// reconstructed from the stored triangular system.
#[derive(Debug, Clone)]
pub struct GmresResult {
    pub x: Vec<C64>,
    pub trace: KrylovTrace,
    basis: Option<Vec<Vec<C64>>>,
    /// Columns of the rotated (upper-triangular) Hessenberg matrix.
    r_cols: Vec<Vec<C64>>,
    /// Rotated right-hand side.
    g: Vec<C64>,
    x0: Vec<C64>,
}

impl GmresResult {
    pub fn basis(&self) -> Option<&[Vec<C64>]> {
        self.basis.as_deref()
    }

    /// Reconstructs the iterate after `n` iterations (requires
    /// `keep_basis`; `n = 0` returns the initial guess).
    pub fn iterate(&self, n: usize) -> Option<Vec<C64>> {
        if n == 0 {
            return Some(self.x0.clone());
        }
        let basis = self.basis.as_ref()?;
        if n > self.r_cols.len() {
            return None;
        }
        let y = solve_upper(&self.r_cols, &self.g, n);
        let mut x = self.x0.clone();
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &basis[j], &mut x);
        }
        Some(x)
    }
}

fn solve_upper(r_cols: &[Vec<C64>], g: &[C64], n: usize) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = g[i];
        for j in (i + 1)..n {
            acc -= r_cols[j][i] * y[j];
        }
        y[i] = if r_cols[i][i].norm() > 1e-300 {
            acc / r_cols[i][i]
        } else {
            C64::new(0.0, 0.0)
        };
    }
    y
}

/// Solves `Op x = b` by full GMRES from `x0`, stopping at the first
/// iterate with `||b - Op x|| < tol * ||b - Op x0||`. A happy breakdown
/// counts as convergence; hitting `max_iters` is flagged, not fatal.
pub fn gmres(op: &dyn LinearOp, b: &[C64], x0: &[C64], opts: &GmresOptions) -> GmresResult {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x0.len(), n);

    let mut r = op.apply_alloc(x0);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r0_norm = norm2(&r);
    let mut residuals = vec![r0_norm];
    if r0_norm == 0.0 {
        return GmresResult {
            x: x0.to_vec(),
            trace: KrylovTrace {
                residual_norms: residuals,
                converged: true,
                iterations: 0,
            },
            basis: if opts.keep_basis { Some(vec![]) } else { None },
            r_cols: vec![],
            g: vec![],
            x0: x0.to_vec(),
        };
    }

    let m = opts.max_iters.min(n);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    basis.push(r.iter().map(|v| v / r0_norm).collect());
    let mut r_cols: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut g = vec![C64::new(0.0, 0.0); m + 1];
    g[0] = C64::new(r0_norm, 0.0);
    let mut cs: Vec<C64> = Vec::with_capacity(m);
    let mut sn: Vec<C64> = Vec::with_capacity(m);

    let mut converged = false;
    let mut k = 0;
    while k < m {
        // Arnoldi step: modified Gram-Schmidt with one reorthogonalisation
        let mut w = op.apply_alloc(&basis[k]);
        let mut h = vec![C64::new(0.0, 0.0); k + 2];
        for pass in 0..2 {
            for (j, vj) in basis.iter().enumerate().take(k + 1) {
                let coeff = dot(vj, &w);
                axpy(-coeff, vj, &mut w);
                if pass == 0 {
                    h[j] = coeff;
                } else {
                    h[j] += coeff;
                }
            }
        }
        let w_norm = norm2(&w);
        h[k + 1] = C64::new(w_norm, 0.0);

        // previous Givens rotations
        for j in 0..k {
            let t = cs[j].conj() * h[j] + sn[j].conj() * h[j + 1];
            h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
            h[j] = t;
        }
        // new rotation eliminating h[k+1]
        let (c, s) = givens(h[k], h[k + 1]);
        let t = c.conj() * h[k] + s.conj() * h[k + 1];
        h[k] = t;
        h[k + 1] = C64::new(0.0, 0.0);
        cs.push(c);
        sn.push(s);
        let tg = c.conj() * g[k] + s.conj() * g[k + 1];
        g[k + 1] = -s * g[k] + c * g[k + 1];
        g[k] = tg;

        r_cols.push(h[..=k].to_vec());
        let res = g[k + 1].norm();
        residuals.push(res);
        k += 1;

        if res < opts.tol * r0_norm {
            converged = true;
            break;
        }
        if w_norm < 1e-300 {
            // happy breakdown: the Krylov space is invariant, the solution
            // is exact in it
            converged = true;
            break;
        }
        basis.push(w.iter().map(|v| v / w_norm).collect());
    }

    let y = solve_upper(&r_cols, &g, k);
    let mut x = x0.to_vec();
    for (j, yj) in y.iter().enumerate() {
        axpy(*yj, &basis[j], &mut x);
    }

    GmresResult {
        x,
        trace: KrylovTrace {
            residual_norms: residuals,
            converged,
            iterations: k,
        },
        basis: if opts.keep_basis { Some(basis) } else { None },
        r_cols,
        g: g[..=k.min(m)].to_vec(),
        x0: x0.to_vec(),
    }
}

fn givens(a: C64, b: C64) -> (C64, C64) {
    if b.norm() == 0.0 {
        return (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    }
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    (a / r, b / r)
}

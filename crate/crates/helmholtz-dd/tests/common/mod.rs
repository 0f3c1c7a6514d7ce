//! Shared helpers for the integration tests.

use helmholtz_dd::assembly::SparseComplexSystem;
use helmholtz_dd::mesh::StructuredMesh;
use helmholtz_dd::quadrature::{gauss_unit, lagrange};
use helmholtz_dd::C64;

/// L2 norm of `u_h - exact` by 5-point tensor Gauss quadrature over every
/// element, evaluating the discrete solution from its nodal values.
pub fn l2_error(mesh: &StructuredMesh, u_h: &[C64], exact: &dyn Fn(f64, f64) -> f64) -> f64 {
    let p = mesh.degree;
    let pts = gauss_unit(5);
    let h = mesh.h;
    let mut acc = 0.0;
    let mut nodes = [0usize; 9];
    for ey in 0..mesh.n_elems_y {
        for ex in 0..mesh.n_elems_x {
            let n = mesh.elem_nodes(ex, ey, &mut nodes);
            let (x0, y0) = mesh.elem_origin(ex, ey);
            for &(ty, wy) in &pts {
                for &(tx, wx) in &pts {
                    let mut val = C64::new(0.0, 0.0);
                    for b in 0..=p {
                        for a in 0..=p {
                            let shape = lagrange(p, a, tx) * lagrange(p, b, ty);
                            val += shape * u_h[nodes[b * (p + 1) + a]];
                        }
                    }
                    let _ = n;
                    let diff = val - C64::new(exact(x0 + tx * h, y0 + ty * h), 0.0);
                    acc += wx * wy * h * h * diff.norm_sqr();
                }
            }
        }
    }
    acc.sqrt()
}

/// Dense copy of a sparse system (test oracles only).
pub fn to_dense(sys: &SparseComplexSystem) -> Vec<Vec<C64>> {
    let mut a = vec![vec![C64::new(0.0, 0.0); sys.n]; sys.n];
    for r in 0..sys.n {
        for idx in sys.row_ptr[r]..sys.row_ptr[r + 1] {
            a[r][sys.col_idx[idx]] = sys.values[idx];
        }
    }
    a
}

/// Dense Gaussian elimination with partial pivoting (test oracle,
/// independent of the library solvers).
pub fn dense_solve(a: &[Vec<C64>], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    let mut m: Vec<Vec<C64>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .norm()
                    .partial_cmp(&m[j][col].norm())
                    .expect("finite")
            })
            .expect("nonempty");
        m.swap(col, piv);
        x.swap(col, piv);
        let d = m[col][col];
        assert!(d.norm() > 1e-300, "singular oracle matrix at {col}");
        for r in (col + 1)..n {
            let factor = m[r][col] / d;
            if factor.norm() == 0.0 {
                continue;
            }
            for c in col..n {
                let sub = factor * m[col][c];
                m[r][c] -= sub;
            }
            let sub = factor * x[col];
            x[r] -= sub;
        }
    }
    for col in (0..n).rev() {
        x[col] /= m[col][col];
        for r in 0..col {
            let sub = m[r][col] * x[col];
            x[r] -= sub;
        }
    }
    x
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

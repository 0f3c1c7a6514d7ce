//! Assembly of the global and per-subdomain complex sparse systems and the
//! Bessel load vector.
//!
//! The sesquilinear form is
//! `a(u,v) = int k^-2 ((D grad u) . grad v - (beta . grad u) v) - m u v`
//! with `D`, `beta` the scaled diffusion/advection coefficients of the
//! absorbing layer and `m = c^-2` (plus `iV` for a complex absorbing
//! potential). Homogeneous Dirichlet rows and columns are replaced by
//! identity rows, preserving the symmetric sparsity pattern.

use std::io::Write as _;

use crate::absorber::{pml_coefficients, Absorber};
use crate::error::Error;
use crate::mesh::{GridWindow, StructuredMesh};
use crate::par::{self, Parallelism};
use crate::quadrature::ShapeTable;
use crate::{bessel, Result, C64};

/// Wave-speed field `c(x) > 0`, entering the form through `c^-2`.
#[derive(Debug, Clone, Copy)]
pub struct WaveSpeedField {
    pub kind: WaveSpeedKind,
    pub center: (f64, f64),
}

#[derive(Debug, Clone, Copy)]
pub enum WaveSpeedKind {
    /// `c == 1`.
    Uniform,
    /// `c^-2` ramps linearly from `center_value` at the centre to 1 at
    /// radius 0.4, and equals 1 beyond.
    LinearLens { center_value: f64 },
    /// Arbitrary `c^-2` (plumbing for tests).
    Custom(fn(f64, f64) -> f64),
}

impl WaveSpeedField {
    pub fn uniform() -> Self {
        WaveSpeedField {
            kind: WaveSpeedKind::Uniform,
            center: (0.5, 0.5),
        }
    }

    /// `c^-2` from 2 at the centre down to 1 (slow centre, focusing).
    pub fn focusing(center: (f64, f64)) -> Self {
        WaveSpeedField {
            kind: WaveSpeedKind::LinearLens { center_value: 2.0 },
            center,
        }
    }

    /// `c^-2` from 0.5 at the centre up to 1 (fast centre, defocusing).
    pub fn defocusing(center: (f64, f64)) -> Self {
        WaveSpeedField {
            kind: WaveSpeedKind::LinearLens { center_value: 0.5 },
            center,
        }
    }

    pub fn c_inv_sq(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            WaveSpeedKind::Uniform => 1.0,
            WaveSpeedKind::LinearLens { center_value } => {
                let r = ((x - self.center.0).powi(2) + (y - self.center.1).powi(2)).sqrt();
                if r >= 0.4 {
                    1.0
                } else {
                    center_value + (1.0 - center_value) * r / 0.4
                }
            }
            WaveSpeedKind::Custom(f) => f(x, y),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, WaveSpeedKind::Uniform)
    }
}

/// Symmetric positive definite diffusion matrix field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionField {
    Identity,
    /// Identity plus an off-diagonal coupling `2 max(0, 0.4 - r)` around
    /// `center`, the configuration for which the absorbing layer loses its
    /// one-signed absorption property.
    CrossBump { center: (f64, f64) },
}

impl DiffusionField {
    pub fn eval(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        match *self {
            DiffusionField::Identity => [[1.0, 0.0], [0.0, 1.0]],
            DiffusionField::CrossBump { center } => {
                let r = ((x - center.0).powi(2) + (y - center.1).powi(2)).sqrt();
                let s = 2.0 * (0.4 - r).max(0.0);
                [[1.0, s], [s, 1.0]]
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, DiffusionField::Identity)
    }
}

/// Assembled complex system in compressed-row layout.
#[derive(Debug, Clone)]
pub struct SparseComplexSystem {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
    /// Dirichlet-eliminated rows (identity rows).
    pub dirichlet: Vec<bool>,
    /// Subdomain id; `None` for the global system.
    pub subdomain: Option<usize>,
    /// Node window of the mesh this system lives on.
    pub window: GridWindow,
    /// Maximum `|row - col|` over stored entries.
    pub bandwidth: usize,
    /// Elements whose scaling derivative varied faster than the quadrature
    /// resolves.
    pub quadrature_warnings: usize,
}

impl SparseComplexSystem {
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[idx] * x[self.col_idx[idx]];
            }
            y[r] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Entry `(r, c)` if stored.
    pub fn get(&self, r: usize, c: usize) -> Option<C64> {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi]
            .binary_search(&c)
            .ok()
            .map(|k| self.values[lo + k])
    }

    /// Zeroes the Dirichlet rows of a right-hand-side vector.
    pub fn apply_dirichlet_rhs(&self, rhs: &mut [C64]) {
        for (r, d) in self.dirichlet.iter().enumerate() {
            if *d {
                rhs[r] = C64::new(0.0, 0.0);
            }
        }
    }

    /// Dumps the matrix in MatrixMarket coordinate format (complex general).
    pub fn write_matrix_market(&self, path: &std::path::Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        let mut write = || -> std::io::Result<()> {
            writeln!(f, "%%MatrixMarket matrix coordinate complex general")?;
            writeln!(f, "{} {} {}", self.n, self.n, self.values.len())?;
            for r in 0..self.n {
                for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                    let v = self.values[idx];
                    writeln!(f, "{} {} {:e} {:e}", r + 1, self.col_idx[idx] + 1, v.re, v.im)?;
                }
            }
            Ok(())
        };
        write().map_err(io_err)
    }
}

/// Element index range `[lo, hi]` of elements containing node `i`.
fn node_elem_range(i: usize, p: usize, e_lo: usize, e_hi: usize) -> (usize, usize) {
    let lo = if i == 0 { 0 } else { (i - 1) / p };
    let hi = i / p;
    (lo.max(e_lo), hi.min(e_hi))
}

struct Pattern {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// Per-row column block `(jx_lo, jx_n, jy_lo)` for O(1) scatter.
    row_block: Vec<(usize, usize, usize)>,
}

fn build_pattern(w: &GridWindow, p: usize) -> Pattern {
    let (nx, ny) = (w.n_nodes_x(), w.n_nodes_y());
    let n = nx * ny;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut row_block = Vec::with_capacity(n);
    row_ptr.push(0);
    let mut nnz = 0usize;
    for ly in 0..ny {
        let (ey_lo, ey_hi) = node_elem_range(w.iy0 + ly, p, w.ey0, w.ey1 - 1);
        let jy_lo = p * ey_lo - w.iy0.min(p * ey_lo);
        // columns span the nodes of the covering elements, clipped to the window
        let jy0 = (p * ey_lo).max(w.iy0) - w.iy0;
        let jy1 = (p * ey_hi + p).min(w.iy1) - w.iy0;
        let _ = jy_lo;
        for lx in 0..nx {
            let (ex_lo, ex_hi) = node_elem_range(w.ix0 + lx, p, w.ex0, w.ex1 - 1);
            let jx0 = (p * ex_lo).max(w.ix0) - w.ix0;
            let jx1 = (p * ex_hi + p).min(w.ix1) - w.ix0;
            let cols = (jx1 - jx0 + 1) * (jy1 - jy0 + 1);
            nnz += cols;
            row_ptr.push(nnz);
            row_block.push((jx0, jx1 - jx0 + 1, jy0));
        }
    }
    let mut col_idx = Vec::with_capacity(nnz);
    for ly in 0..ny {
        let jy0 = {
            let (ey_lo, _) = node_elem_range(w.iy0 + ly, p, w.ey0, w.ey1 - 1);
            (p * ey_lo).max(w.iy0) - w.iy0
        };
        let jy1 = {
            let (_, ey_hi) = node_elem_range(w.iy0 + ly, p, w.ey0, w.ey1 - 1);
            (p * ey_hi + p).min(w.iy1) - w.iy0
        };
        for lx in 0..nx {
            let (jx0, jxn, _) = row_block[ly * nx + lx];
            for jy in jy0..=jy1 {
                for jx in jx0..(jx0 + jxn) {
                    col_idx.push(jy * nx + jx);
                }
            }
        }
    }
    Pattern {
        row_ptr,
        col_idx,
        row_block,
    }
}

/// Dense element matrix, row-major over the `(p+1)^2` local basis; entry
/// `[r][q] = a(phi_q, phi_r)`. Returns the matrix and a flag for
/// under-resolved scaling variation.
#[allow(clippy::too_many_arguments)]
fn element_matrix(
    mesh: &StructuredMesh,
    ex: usize,
    ey: usize,
    shapes: &ShapeTable,
    absorber: &Absorber,
    c: &WaveSpeedField,
    a: &DiffusionField,
    k: f64,
) -> Result<(Vec<C64>, bool)> {
    let p = mesh.degree;
    let n_loc = (p + 1) * (p + 1);
    let h = mesh.h;
    let (x0, y0) = mesh.elem_origin(ex, ey);
    let k2_inv = 1.0 / (k * k);
    let mut mat = vec![C64::new(0.0, 0.0); n_loc * n_loc];

    let mut warn = false;
    if let Absorber::Pml(scaling) = absorber {
        let gx0 = scaling.gx(x0).d1;
        let gx1 = scaling.gx(x0 + h).d1;
        let gy0 = scaling.gy(y0).d1;
        let gy1 = scaling.gy(y0 + h).d1;
        if (gx1 - gx0).abs() > 10.0 || (gy1 - gy0).abs() > 10.0 {
            warn = true;
        }
    }

    for (qy, &(ty, wy)) in shapes.points.iter().enumerate() {
        for (qx, &(tx, wx)) in shapes.points.iter().enumerate() {
            let (x, y) = (x0 + tx * h, y0 + ty * h);
            let a_val = a.eval(x, y);
            let c_inv_sq = c.c_inv_sq(x, y);
            let (d, beta, mass) = match absorber {
                Absorber::Pml(scaling) => {
                    let co = pml_coefficients(scaling, a_val, c_inv_sq, (x, y))?;
                    (co.d, co.beta, co.mass)
                }
                Absorber::Cap { potential } => {
                    let d = [
                        [C64::new(a_val[0][0], 0.0), C64::new(a_val[0][1], 0.0)],
                        [C64::new(a_val[1][0], 0.0), C64::new(a_val[1][1], 0.0)],
                    ];
                    let v = potential.eval((x, y));
                    (
                        d,
                        [C64::new(0.0, 0.0); 2],
                        C64::new(c_inv_sq, v),
                    )
                }
            };
            let weight = wx * wy * h * h;

            // 1-D shape values/derivatives at this point
            let sx = &shapes.values[qx];
            let sy = &shapes.values[qy];
            let dx = &shapes.derivs[qx];
            let dy = &shapes.derivs[qy];

            for br in 0..=p {
                for ar in 0..=p {
                    let r = br * (p + 1) + ar;
                    let phi_r = sx[ar] * sy[br];
                    let gr = (dx[ar] / h * sy[br], sx[ar] * dy[br] / h);
                    for bq in 0..=p {
                        for aq in 0..=p {
                            let q = bq * (p + 1) + aq;
                            let phi_q = sx[aq] * sy[bq];
                            let gq = (dx[aq] / h * sy[bq], sx[aq] * dy[bq] / h);
                            let diff = (d[0][0] * gq.0 + d[0][1] * gq.1) * gr.0
                                + (d[1][0] * gq.0 + d[1][1] * gq.1) * gr.1;
                            let adv = (beta[0] * gq.0 + beta[1] * gq.1) * phi_r;
                            let val = k2_inv * (diff - adv) - mass * (phi_q * phi_r);
                            mat[r * n_loc + q] += weight * val;
                        }
                    }
                }
            }
        }
    }
    Ok((mat, warn))
}

/// Assembles the system on a node window of the mesh with the given
/// absorber; `subdomain` tags local systems. Dirichlet elimination on the
/// window boundary is applied in place.
#[allow(clippy::too_many_arguments)]
pub fn assemble_system(
    mesh: &StructuredMesh,
    window: GridWindow,
    absorber: &Absorber,
    c: &WaveSpeedField,
    a: &DiffusionField,
    k: f64,
    subdomain: Option<usize>,
    mode: Parallelism,
) -> Result<SparseComplexSystem> {
    assemble_masked(mesh, window, absorber, c, a, k, subdomain, mode, None)
}

/// Assembly with an optional element mask (elements where the mask is
/// false are skipped). Exposed for linearity checks.
#[allow(clippy::too_many_arguments)]
pub fn assemble_masked(
    mesh: &StructuredMesh,
    window: GridWindow,
    absorber: &Absorber,
    c: &WaveSpeedField,
    a: &DiffusionField,
    k: f64,
    subdomain: Option<usize>,
    mode: Parallelism,
    mask: Option<&(dyn Fn(usize) -> bool + Sync)>,
) -> Result<SparseComplexSystem> {
    let p = mesh.degree;
    let shapes = ShapeTable::new(p, p + 2);
    let pattern = build_pattern(&window, p);
    let n = window.n_nodes();
    let (nex, _ney) = (window.ex1 - window.ex0, window.ey1 - window.ey0);

    let elems: Vec<usize> = (0..window.n_elems())
        .filter(|e| mask.map_or(true, |m| m(*e)))
        .collect();
    let results = par::try_map_indexed(mode, elems.len(), |i| {
        let e = elems[i];
        let (ex, ey) = (window.ex0 + e % nex, window.ey0 + e / nex);
        element_matrix(mesh, ex, ey, &shapes, absorber, c, a, k)
    })?;

    let mut values = vec![C64::new(0.0, 0.0); pattern.col_idx.len()];
    let (wnx, n_loc) = (window.n_nodes_x(), (p + 1) * (p + 1));
    let mut warnings = 0usize;
    for (i, (mat, warn)) in results.iter().enumerate() {
        if *warn {
            warnings += 1;
        }
        let e = elems[i];
        let (ex, ey) = (window.ex0 + e % nex, window.ey0 + e / nex);
        let (bx, by) = (p * ex - window.ix0, p * ey - window.iy0);
        for br in 0..=p {
            for ar in 0..=p {
                let row = (by + br) * wnx + (bx + ar);
                let (jx0, jxn, jy0) = pattern.row_block[row];
                let base = pattern.row_ptr[row];
                for bq in 0..=p {
                    for aq in 0..=p {
                        let col_x = bx + aq;
                        let col_y = by + bq;
                        let pos = base + (col_y - jy0) * jxn + (col_x - jx0);
                        debug_assert_eq!(pattern.col_idx[pos], col_y * wnx + col_x);
                        values[pos] +=
                            mat[(br * (p + 1) + ar) * n_loc + (bq * (p + 1) + aq)];
                    }
                }
            }
        }
    }
    if warnings > 0 {
        log::warn!(
            "{warnings} element(s) have scaling variation faster than the quadrature resolves"
        );
    }

    // Dirichlet elimination: identity rows and zeroed columns
    let dirichlet: Vec<bool> = (0..n).map(|i| window.is_window_boundary(i)).collect();
    for r in 0..n {
        for idx in pattern.row_ptr[r]..pattern.row_ptr[r + 1] {
            let c_ = pattern.col_idx[idx];
            if dirichlet[r] || dirichlet[c_] {
                values[idx] = if r == c_ {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
            }
        }
    }

    let bandwidth = (0..n)
        .flat_map(|r| {
            pattern.col_idx[pattern.row_ptr[r]..pattern.row_ptr[r + 1]]
                .iter()
                .map(move |c_| r.abs_diff(*c_))
        })
        .max()
        .unwrap_or(0);

    Ok(SparseComplexSystem {
        n,
        row_ptr: pattern.row_ptr,
        col_idx: pattern.col_idx,
        values,
        dirichlet,
        subdomain,
        window,
        bandwidth,
        quadrature_warnings: warnings,
    })
}

/// Raw source vector `int f phi_r` over the window (no Dirichlet
/// elimination).
pub fn assemble_source(
    mesh: &StructuredMesh,
    window: GridWindow,
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> Vec<C64> {
    let p = mesh.degree;
    let shapes = ShapeTable::new(p, p + 2);
    let h = mesh.h;
    let wnx = window.n_nodes_x();
    let mut out = vec![C64::new(0.0, 0.0); window.n_nodes()];
    for ey in window.ey0..window.ey1 {
        for ex in window.ex0..window.ex1 {
            let (x0, y0) = mesh.elem_origin(ex, ey);
            let (bx, by) = (p * ex - window.ix0, p * ey - window.iy0);
            for (qy, &(ty, wy)) in shapes.points.iter().enumerate() {
                for (qx, &(tx, wx)) in shapes.points.iter().enumerate() {
                    let fv = f(x0 + tx * h, y0 + ty * h);
                    let weight = wx * wy * h * h * fv;
                    for b in 0..=p {
                        for a in 0..=p {
                            let row = (by + b) * wnx + (bx + a);
                            out[row] += C64::new(
                                weight * shapes.values[qx][a] * shapes.values[qy][b],
                                0.0,
                            );
                        }
                    }
                }
            }
        }
    }
    out
}

/// Load vector for the radial Bessel source `f(x) = J_0(k |x - x0|)`,
/// with Dirichlet rows zeroed.
pub fn assemble_load(
    mesh: &StructuredMesh,
    window: GridWindow,
    k: f64,
    x0: (f64, f64),
) -> Result<Vec<C64>> {
    let (l1, l2) = mesh.interior_lengths;
    if !(x0.0 > 0.0 && x0.0 < l1 && x0.1 > 0.0 && x0.1 < l2) {
        return Err(Error::InvalidConfig(format!(
            "source point ({}, {}) must lie in the interior rectangle",
            x0.0, x0.1
        )));
    }
    let f = move |x: f64, y: f64| {
        let r = ((x - x0.0).powi(2) + (y - x0.1).powi(2)).sqrt();
        bessel::bessel_j0(k * r)
    };
    let mut load = assemble_source(mesh, window, &f);
    for local in 0..window.n_nodes() {
        if window.is_window_boundary(local) {
            load[local] = C64::new(0.0, 0.0);
        }
    }
    Ok(load)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absorber::{CapProfile, ScalingProfile, SubdomainScaling};
    use crate::geometry::Rect;
    use crate::mesh::{build_mesh, HRule};

    fn unit_scaling() -> SubdomainScaling {
        SubdomainScaling::new(
            ScalingProfile::cubic(5000.0).unwrap(),
            &Rect::new(0.0, 1.0, 0.0, 1.0),
        )
    }

    fn small_mesh(p: usize, denominator: u64) -> StructuredMesh {
        build_mesh(1.0, 1.0, 0.025, 1.0, p, HRule::Fixed { denominator }).unwrap()
    }

    #[test]
    fn interior_q1_element_matches_tensor_oracle() {
        // a = k^-2 stiffness - mass on an interior element, from the 1-D
        // closed forms K1 = (1/h)[[1,-1],[-1,1]], M1 = (h/6)[[2,1],[1,2]]
        let mesh = small_mesh(1, 40);
        let shapes = ShapeTable::new(1, 3);
        let k = 7.0;
        let (mat, _) = element_matrix(
            &mesh,
            mesh.n_elems_x / 2,
            mesh.n_elems_y / 2,
            &shapes,
            &Absorber::Pml(unit_scaling()),
            &WaveSpeedField::uniform(),
            &DiffusionField::Identity,
            k,
        )
        .unwrap();
        let h = mesh.h;
        let k1 = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
        let m1 = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        for br in 0..2 {
            for ar in 0..2 {
                for bq in 0..2 {
                    for aq in 0..2 {
                        let r = br * 2 + ar;
                        let q = bq * 2 + aq;
                        let stiff = k1[ar][aq] * m1[br][bq] + m1[ar][aq] * k1[br][bq];
                        let mass = m1[ar][aq] * m1[br][bq];
                        let expect = stiff / (k * k) - mass;
                        let got = mat[r * 4 + q];
                        assert!(
                            (got - C64::new(expect, 0.0)).norm() < 1e-14,
                            "entry ({r},{q}): {got} vs {expect}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pml_inactive_region_is_real() {
        let mesh = small_mesh(2, 40);
        let sys = assemble_system(
            &mesh,
            mesh.full_window(),
            &Absorber::Pml(unit_scaling()),
            &WaveSpeedField::uniform(),
            &DiffusionField::Identity,
            5.0,
            None,
            Parallelism::Sequential,
        )
        .unwrap();
        // rows of nodes strictly inside the interior rectangle, whose
        // element patch does not touch the layer
        let spacing = mesh.node_spacing();
        for r in 0..sys.n {
            let (x, y) = mesh.node_coords(r);
            let m = 2.0 * mesh.h + spacing;
            if x > m && x < 1.0 - m && y > m && y < 1.0 - m {
                for idx in sys.row_ptr[r]..sys.row_ptr[r + 1] {
                    assert_eq!(sys.values[idx].im, 0.0);
                }
            }
        }
    }

    #[test]
    fn cap_adds_negative_imaginary_mass() {
        let mesh = small_mesh(1, 40);
        let inner = Rect::new(0.0, 1.0, 0.0, 1.0);
        let cap = CapProfile::new(1.0, 2, inner, [0.025; 4]).unwrap();
        let with_cap = assemble_system(
            &mesh,
            mesh.full_window(),
            &Absorber::Cap { potential: cap },
            &WaveSpeedField::uniform(),
            &DiffusionField::Identity,
            5.0,
            None,
            Parallelism::Sequential,
        )
        .unwrap();
        let zero_cap = CapProfile::new(0.0, 2, inner, [0.025; 4]).unwrap();
        let without = assemble_system(
            &mesh,
            mesh.full_window(),
            &Absorber::Cap {
                potential: zero_cap,
            },
            &WaveSpeedField::uniform(),
            &DiffusionField::Identity,
            5.0,
            None,
            Parallelism::Sequential,
        )
        .unwrap();
        // difference is -i times a nonnegative mass matrix: real parts agree,
        // imaginary diagonal <= 0
        let mut saw_negative = false;
        for idx in 0..with_cap.values.len() {
            assert!((with_cap.values[idx].re - without.values[idx].re).abs() < 1e-14);
        }
        for r in 0..with_cap.n {
            let d = with_cap.get(r, r).unwrap();
            assert!(d.im <= 1e-15, "row {r} has positive imaginary diagonal");
            if d.im < -1e-12 {
                saw_negative = true;
            }
        }
        assert!(saw_negative, "potential never activated");
    }

    #[test]
    fn assembly_is_linear_in_elements() {
        use rand::Rng;
        use rand::SeedableRng;
        let mesh = small_mesh(2, 40);
        let w = mesh.full_window();
        let speed = WaveSpeedField::uniform();
        let absorber = Absorber::Pml(unit_scaling());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mask: Vec<bool> = (0..w.n_elems()).map(|_| rng.gen_bool(0.5)).collect();
        let m1 = mask.clone();
        let part_a = assemble_masked(
            &mesh,
            w,
            &absorber,
            &speed,
            &DiffusionField::Identity,
            5.0,
            None,
            Parallelism::Sequential,
            Some(&move |e| m1[e]),
        )
        .unwrap();
        let m2 = mask.clone();
        let part_b = assemble_masked(
            &mesh,
            w,
            &absorber,
            &speed,
            &DiffusionField::Identity,
            5.0,
            None,
            Parallelism::Sequential,
            Some(&move |e| !m2[e]),
        )
        .unwrap();
        let full = assemble_system(
            &mesh,
            w,
            &absorber,
            &speed,
            &DiffusionField::Identity,
            5.0,
            None,
            Parallelism::Sequential,
        )
        .unwrap();
        // identity rows are not additive between the parts; compare free rows
        for r in 0..full.n {
            if full.dirichlet[r] {
                continue;
            }
            for idx in full.row_ptr[r]..full.row_ptr[r + 1] {
                if full.dirichlet[full.col_idx[idx]] {
                    continue;
                }
                let sum = part_a.values[idx] + part_b.values[idx]
                    - if r == full.col_idx[idx] {
                        // both parts carry the Dirichlet-free diagonal twice? no:
                        // diagonal entries assemble additively too
                        C64::new(0.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                assert!(
                    (sum - full.values[idx]).norm() <= 1e-12,
                    "row {r} idx {idx}"
                );
            }
        }
    }

    #[test]
    fn parallel_and_sequential_assembly_agree() {
        #[cfg(feature = "parallel")]
        {
            let mesh = small_mesh(2, 40);
            let w = mesh.full_window();
            let a = assemble_system(
                &mesh,
                w,
                &Absorber::Pml(unit_scaling()),
                &WaveSpeedField::uniform(),
                &DiffusionField::Identity,
                5.0,
                None,
                Parallelism::Sequential,
            )
            .unwrap();
            let b = assemble_system(
                &mesh,
                w,
                &Absorber::Pml(unit_scaling()),
                &WaveSpeedField::uniform(),
                &DiffusionField::Identity,
                5.0,
                None,
                Parallelism::Rayon,
            )
            .unwrap();
            assert_eq!(a.values.len(), b.values.len());
            for i in 0..a.values.len() {
                assert_eq!(a.values[i], b.values[i]);
            }
        }
    }

    #[test]
    fn source_of_one_gives_element_measures() {
        let mesh = small_mesh(1, 40);
        let w = mesh.full_window();
        let v = assemble_source(&mesh, w, &|_, _| 1.0);
        let total: f64 = v.iter().map(|c| c.re).sum();
        let measure = 1.05 * 1.05;
        assert!((total - measure).abs() < 1e-12);
    }

    #[test]
    fn bessel_source_is_one_at_origin_point() {
        let k = 25.0;
        let x0 = (0.5, 0.5);
        let f = |x: f64, y: f64| {
            let r = ((x - x0.0).powi(2) + (y - x0.1).powi(2)).sqrt();
            bessel::bessel_j0(k * r)
        };
        assert_eq!(f(0.5, 0.5), 1.0);
    }

    #[test]
    fn load_integral_matches_dense_quadrature_oracle() {
        // sum of the raw load vector = composite quadrature of f; the
        // reference uses 6-point Gauss on refined elements
        let mesh = small_mesh(2, 40);
        let w = mesh.full_window();
        let k = 10.0;
        let x0 = (0.5, 0.5);
        let f = |x: f64, y: f64| {
            let r = ((x - x0.0).powi(2) + (y - x0.1).powi(2)).sqrt();
            bessel::bessel_j0(k * r)
        };
        let load = assemble_source(&mesh, w, &f);
        let total: f64 = load.iter().map(|c| c.re).sum();

        let pts = crate::quadrature::gauss_unit(6);
        let refine = 2;
        let hh = mesh.h / refine as f64;
        let mut reference = 0.0;
        for ey in 0..mesh.n_elems_y * refine {
            for ex in 0..mesh.n_elems_x * refine {
                let x0e = -mesh.pml_width + ex as f64 * hh;
                let y0e = -mesh.pml_width + ey as f64 * hh;
                for &(ty, wy) in &pts {
                    for &(tx, wx) in &pts {
                        reference += wx * wy * hh * hh * f(x0e + tx * hh, y0e + ty * hh);
                    }
                }
            }
        }
        assert!(
            (total - reference).abs() < 1e-6 * reference.abs(),
            "{total} vs {reference}"
        );
    }

    #[test]
    fn load_requires_interior_source() {
        let mesh = small_mesh(2, 40);
        let w = mesh.full_window();
        assert!(assemble_load(&mesh, w, 10.0, (1.2, 0.5)).is_err());
        let v = assemble_load(&mesh, w, 10.0, (0.5, 0.5)).unwrap();
        // Dirichlet rows zeroed
        for local in 0..w.n_nodes() {
            if w.is_window_boundary(local) {
                assert_eq!(v[local], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn dirichlet_rows_are_identity() {
        let mesh = small_mesh(2, 40);
        let sys = assemble_system(
            &mesh,
            mesh.full_window(),
            &Absorber::Pml(unit_scaling()),
            &WaveSpeedField::uniform(),
            &DiffusionField::Identity,
            5.0,
            None,
            Parallelism::Sequential,
        )
        .unwrap();
        for r in 0..sys.n {
            if sys.dirichlet[r] {
                for idx in sys.row_ptr[r]..sys.row_ptr[r + 1] {
                    let expect = if sys.col_idx[idx] == r { 1.0 } else { 0.0 };
                    assert_eq!(sys.values[idx], C64::new(expect, 0.0));
                }
            }
        }
    }

    #[test]
    fn pattern_is_symmetric() {
        let mesh = small_mesh(2, 40);
        let sys = assemble_system(
            &mesh,
            mesh.full_window(),
            &Absorber::Pml(unit_scaling()),
            &WaveSpeedField::uniform(),
            &DiffusionField::Identity,
            5.0,
            None,
            Parallelism::Sequential,
        )
        .unwrap();
        for r in 0..sys.n {
            for idx in sys.row_ptr[r]..sys.row_ptr[r + 1] {
                let c = sys.col_idx[idx];
                assert!(sys.get(c, r).is_some(), "({r},{c}) has no transpose slot");
            }
        }
    }

    #[test]
    fn matrix_market_dump_roundtrips_header() {
        let mesh = small_mesh(1, 40);
        let sys = assemble_system(
            &mesh,
            mesh.full_window(),
            &Absorber::Pml(unit_scaling()),
            &WaveSpeedField::uniform(),
            &DiffusionField::Identity,
            5.0,
            None,
            Parallelism::Sequential,
        )
        .unwrap();
        let dir = std::env::temp_dir().join("hdd_mm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("global.mtx");
        sys.write_matrix_market(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate complex general"
        );
        let sizes: Vec<usize> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(sizes, vec![sys.n, sys.n, sys.values.len()]);
        assert_eq!(text.lines().count(), 2 + sys.values.len());
    }

    #[test]
    fn wave_speed_cases() {
        let c2 = WaveSpeedField::focusing((0.5, 0.5));
        assert_eq!(c2.c_inv_sq(0.5, 0.5), 2.0);
        assert_eq!(c2.c_inv_sq(0.95, 0.5), 1.0);
        let mid = c2.c_inv_sq(0.7, 0.5);
        assert!((mid - 1.5).abs() < 1e-14);
        let c3 = WaveSpeedField::defocusing((0.5, 0.5));
        assert_eq!(c3.c_inv_sq(0.5, 0.5), 0.5);
        assert_eq!(c3.c_inv_sq(0.0, 0.0), 1.0);
        // positivity: c > 0 everywhere
        for field in [c2, c3] {
            for i in 0..50 {
                let x = -0.025 + 1.05 * i as f64 / 49.0;
                assert!(field.c_inv_sq(x, 0.3) > 0.0);
            }
        }
    }

    #[test]
    fn cross_bump_diffusion() {
        let a = DiffusionField::CrossBump { center: (0.5, 0.5) };
        let at_center = a.eval(0.5, 0.5);
        assert_eq!(at_center, [[1.0, 0.8], [0.8, 1.0]]);
        let outside = a.eval(0.95, 0.5);
        assert_eq!(outside, [[1.0, 0.0], [0.0, 1.0]]);
    }
}

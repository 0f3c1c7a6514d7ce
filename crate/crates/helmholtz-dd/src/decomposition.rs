//! Overlapping strip and checkerboard decompositions, the smooth partition
//! of unity, and the discrete restriction/prolongation operators.
//!
//! Construction rule: the interior rectangle is split into equal cells per
//! direction; every interior cell edge is moved outward by `delta/2` on
//! each side, so adjacent interior subdomains overlap by a band of total
//! width `delta`. Each overlapping subdomain is then extended by an
//! absorbing layer of width `kappa` on edges lying on the physical
//! boundary and `kappa0` on interior edges.

use crate::error::Error;
use crate::geometry::Rect;
use crate::mesh::{GridWindow, StructuredMesh};
use crate::{Result, C64};

/// One overlapping subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    /// Interior rectangle (before the absorbing-layer extension).
    pub interior: Rect,
    /// Extended rectangle including the subdomain's own layer.
    pub extended: Rect,
    /// Layer widths `[left, right, bottom, top]`.
    pub widths: [f64; 4],
    /// Which edges lie on the physical boundary `[left, right, bottom, top]`.
    pub on_boundary: [bool; 4],
    /// Checkerboard coordinates, 1-based.
    pub coords: (usize, usize),
}

/// Overlapping decomposition of the interior rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub dims: (usize, usize),
    pub delta: f64,
    pub kappa: f64,
    pub kappa0: f64,
    pub lengths: (f64, f64),
    pub subdomains: Vec<Subdomain>,
}

/// Strip decomposition: `n` subdomains stacked along x.
pub fn make_strip(
    n: usize,
    delta: f64,
    kappa: f64,
    kappa0: f64,
    lengths: (f64, f64),
) -> Result<Decomposition> {
    make_checkerboard((n, 1), delta, kappa, kappa0, lengths)
}

/// Checkerboard decomposition of size `dims.0 x dims.1`.
pub fn make_checkerboard(
    dims: (usize, usize),
    delta: f64,
    kappa: f64,
    kappa0: f64,
    lengths: (f64, f64),
) -> Result<Decomposition> {
    let (n1, n2) = dims;
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidConfig("checkerboard dims must be >= 1".into()));
    }
    if n1 * n2 > 64 {
        return Err(Error::InvalidConfig(format!(
            "at most 64 subdomains supported, got {}",
            n1 * n2
        )));
    }
    if delta <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "overlap must be positive, got {delta}"
        )));
    }
    for (n, len) in [(n1, lengths.0), (n2, lengths.1)] {
        let cell = len / n as f64;
        if n > 1 && delta >= cell {
            return Err(Error::OverlapTooLarge { delta, cell });
        }
    }

    // 1-D intervals per direction: equal cells, interior edges moved
    // outward by delta/2
    let intervals = |n: usize, len: f64| -> Vec<(f64, f64, bool, bool)> {
        (0..n)
            .map(|m| {
                let lo_boundary = m == 0;
                let hi_boundary = m == n - 1;
                let lo = if lo_boundary {
                    0.0
                } else {
                    len * m as f64 / n as f64 - 0.5 * delta
                };
                let hi = if hi_boundary {
                    len
                } else {
                    len * (m + 1) as f64 / n as f64 + 0.5 * delta
                };
                (lo, hi, lo_boundary, hi_boundary)
            })
            .collect()
    };
    let xs = intervals(n1, lengths.0);
    let ys = intervals(n2, lengths.1);

    let mut subdomains = Vec::with_capacity(n1 * n2);
    for m2 in 0..n2 {
        for m1 in 0..n1 {
            let (x0, x1, xb0, xb1) = xs[m1];
            let (y0, y1, yb0, yb1) = ys[m2];
            let w = |on_boundary: bool| if on_boundary { kappa } else { kappa0 };
            let widths = [w(xb0), w(xb1), w(yb0), w(yb1)];
            subdomains.push(Subdomain {
                interior: Rect::new(x0, x1, y0, y1),
                extended: Rect::new(x0 - widths[0], x1 + widths[1], y0 - widths[2], y1 + widths[3]),
                widths,
                on_boundary: [xb0, xb1, yb0, yb1],
                coords: (m1 + 1, m2 + 1),
            });
        }
    }

    let dec = Decomposition {
        dims,
        delta,
        kappa,
        kappa0,
        lengths,
        subdomains,
    };
    // extended subdomains may only overlap extensions of adjacent cells
    for i in 0..dec.n() {
        for j in (i + 1)..dec.n() {
            let adjacent = dec.adjacent(i, j);
            let overlapping = dec.subdomains[i]
                .extended
                .overlaps(&dec.subdomains[j].extended);
            if overlapping && !adjacent {
                return Err(Error::InvalidConfig(format!(
                    "subdomains {i} and {j} overlap but are not adjacent cells; \
                     reduce the overlap or the interior layer width"
                )));
            }
        }
    }
    Ok(dec)
}

impl Decomposition {
    pub fn n(&self) -> usize {
        self.subdomains.len()
    }

    /// Effective dimensionality: number of directions with more than one cell.
    pub fn effective_dim(&self) -> usize {
        [self.dims.0, self.dims.1].iter().filter(|n| **n > 1).count()
    }

    /// Chebyshev-adjacency of cells `i` and `j` (distinct cells at
    /// coordinate distance <= 1 in every direction).
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let a = self.subdomains[i].coords;
        let b = self.subdomains[j].coords;
        let d1 = a.0.abs_diff(b.0);
        let d2 = a.1.abs_diff(b.1);
        (i != j) && d1 <= 1 && d2 <= 1
    }

    /// All axis breakpoints introduced by the decomposition (interior and
    /// extended edges), for mesh-grid snapping.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for s in &self.subdomains {
            out.extend_from_slice(&[
                s.interior.x0,
                s.interior.x1,
                s.interior.y0,
                s.interior.y1,
                s.extended.x0,
                s.extended.x1,
                s.extended.y0,
                s.extended.y1,
            ]);
        }
        out
    }

    /// Rectangles covering the region where the subdomain scaling differs
    /// from the global one (the subdomain's own layer on interior edges).
    pub fn mismatch_rects(&self, j: usize) -> Vec<Rect> {
        let s = &self.subdomains[j];
        let e = &s.extended;
        let i = &s.interior;
        let mut out = Vec::new();
        if !s.on_boundary[0] {
            out.push(Rect::new(e.x0, i.x0, e.y0, e.y1));
        }
        if !s.on_boundary[1] {
            out.push(Rect::new(i.x1, e.x1, e.y0, e.y1));
        }
        if !s.on_boundary[2] {
            out.push(Rect::new(e.x0, e.x1, e.y0, i.y0));
        }
        if !s.on_boundary[3] {
            out.push(Rect::new(e.x0, e.x1, i.y1, e.y1));
        }
        out
    }

    /// Support rectangle of the largest cutoff of subdomain `j`: the
    /// interior rectangle, extended through the absorbing layer on edges
    /// lying on the physical boundary (where no scaling mismatch exists).
    pub fn chi_tilde_rect(&self, j: usize) -> Rect {
        let s = &self.subdomains[j];
        Rect::new(
            if s.on_boundary[0] { s.extended.x0 } else { s.interior.x0 },
            if s.on_boundary[1] { s.extended.x1 } else { s.interior.x1 },
            if s.on_boundary[2] { s.extended.y0 } else { s.interior.y0 },
            if s.on_boundary[3] { s.extended.y1 } else { s.interior.y1 },
        )
    }
}

/// Nodal scalar field stored on a node window; zero outside.
#[derive(Debug, Clone)]
pub struct NodalField {
    pub ix0: usize,
    pub iy0: usize,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        if ix < self.ix0 || iy < self.iy0 {
            return 0.0;
        }
        let (lx, ly) = (ix - self.ix0, iy - self.iy0);
        if lx >= self.nx || ly >= self.ny {
            return 0.0;
        }
        self.values[ly * self.nx + lx]
    }
}

/// Parameters of the partition-of-unity bumps. `shrink` is the fraction of
/// the overlap by which the bump supports retreat from the subdomain
/// edges; `boundary_scale` overrides the numerator of the one-sided bumps
/// (defaults to the subdomain width).
#[derive(Debug, Clone, Copy)]
pub struct PouParams {
    pub shrink: f64,
    pub boundary_scale: Option<f64>,
}

impl Default for PouParams {
    fn default() -> Self {
        PouParams {
            shrink: 0.3,
            boundary_scale: None,
        }
    }
}

/// Smooth nodal partition of unity subordinate to the decomposition.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    /// Normalised weights, one field per subdomain.
    pub chi: Vec<NodalField>,
    /// Nodal masks of the enlarged cutoffs (one on the support of chi,
    /// dilated by one element ring, capped away from the scaling mismatch).
    pub chi_gt: Vec<NodalField>,
    /// Support rectangles of the largest cutoffs.
    pub chi_tilde: Vec<Rect>,
    /// Scaling-mismatch rectangles per subdomain.
    pub mismatch: Vec<Vec<Rect>>,
}

#[derive(Debug, Clone, Copy)]
enum Bump {
    /// Constant 1 (single cell spanning the whole direction).
    Full,
    /// Two-sided interior bump on `(a + s, b - s)`.
    Interior { a: f64, b: f64, s: f64 },
    /// One-sided bump for a cell whose low edge is on the boundary:
    /// support `x < b - s`.
    LowBoundary { b: f64, s: f64, scale: f64 },
    /// One-sided bump for a cell whose high edge is on the boundary:
    /// support `x > a + s`.
    HighBoundary { a: f64, s: f64, scale: f64 },
}

impl Bump {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            Bump::Full => 1.0,
            Bump::Interior { a, b, s } => {
                let (lo, hi) = (a + s, b - s);
                if x > lo && x < hi {
                    let w = b - a;
                    (-(w * w) / (4.0 * (x - lo) * (hi - x))).exp()
                } else {
                    0.0
                }
            }
            Bump::LowBoundary { b, s, scale } => {
                let hi = b - s;
                if x < hi {
                    (-scale / (2.0 * (hi - x))).exp()
                } else {
                    0.0
                }
            }
            Bump::HighBoundary { a, s, scale } => {
                let lo = a + s;
                if x > lo {
                    (-scale / (2.0 * (x - lo))).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

fn direction_bumps(
    n: usize,
    len: f64,
    delta: f64,
    params: &PouParams,
    intervals: impl Fn(usize) -> (f64, f64),
) -> Result<Vec<Bump>> {
    let s = params.shrink * delta;
    (0..n)
        .map(|m| {
            let (a, b) = intervals(m);
            let scale = params.boundary_scale.unwrap_or(b - a);
            if n == 1 {
                return Ok(Bump::Full);
            }
            let bump = if m == 0 {
                Bump::LowBoundary { b, s, scale }
            } else if m == n - 1 {
                Bump::HighBoundary { a, s, scale }
            } else {
                Bump::Interior { a, b, s }
            };
            // the shrunk support must retain positive width
            let width_ok = match bump {
                Bump::Interior { a, b, s } => b - a > 2.0 * s,
                Bump::LowBoundary { b, s, .. } => b - s > 0.0,
                Bump::HighBoundary { a, s, .. } => a + s < len,
                Bump::Full => true,
            };
            if !width_ok {
                return Err(Error::EmptySupport { subdomain: m });
            }
            Ok(bump)
        })
        .collect()
}

/// Builds the nodal partition of unity on the global mesh.
pub fn build_pou(
    dec: &Decomposition,
    mesh: &StructuredMesh,
    params: PouParams,
) -> Result<PartitionOfUnity> {
    let (n1, n2) = dec.dims;
    let bumps_x = direction_bumps(n1, dec.lengths.0, dec.delta, &params, |m| {
        let s = &dec.subdomains[m];
        s.interior.interval_x()
    })?;
    let bumps_y = direction_bumps(n2, dec.lengths.1, dec.delta, &params, |m| {
        let s = &dec.subdomains[m * n1];
        s.interior.interval_y()
    })?;

    // per-direction nodal values, normalised twice so the directional sums
    // are 1 to within an ulp
    let normalise = |bumps: &[Bump], coords: &dyn Fn(usize) -> f64, count: usize| {
        let mut vals: Vec<Vec<f64>> = bumps
            .iter()
            .map(|b| (0..count).map(|i| b.eval(coords(i))).collect())
            .collect();
        for i in 0..count {
            for _ in 0..2 {
                let s: f64 = vals.iter().map(|v| v[i]).sum();
                assert!(s > 0.0, "partition-of-unity coverage gap at node {i}");
                for v in vals.iter_mut() {
                    v[i] /= s;
                }
            }
        }
        vals
    };
    let wx = normalise(&bumps_x, &|ix| mesh.node_x(ix), mesh.n_nodes_x);
    let wy = normalise(&bumps_y, &|iy| mesh.node_y(iy), mesh.n_nodes_y);

    let support_range = |vals: &[f64]| -> (usize, usize) {
        let first = vals.iter().position(|v| *v > 0.0).unwrap_or(0);
        let last = vals.iter().rposition(|v| *v > 0.0).unwrap_or(0);
        (first, last)
    };

    let mut chi = Vec::with_capacity(dec.n());
    let mut chi_gt = Vec::with_capacity(dec.n());
    let mut chi_tilde = Vec::with_capacity(dec.n());
    let mut mismatch = Vec::with_capacity(dec.n());
    for j in 0..dec.n() {
        let (c1, c2) = dec.subdomains[j].coords;
        let (ix0, ix1) = support_range(&wx[c1 - 1]);
        let (iy0, iy1) = support_range(&wy[c2 - 1]);
        let (nx, ny) = (ix1 - ix0 + 1, iy1 - iy0 + 1);
        let mut values = vec![0.0; nx * ny];
        for ly in 0..ny {
            for lx in 0..nx {
                values[ly * nx + lx] = wx[c1 - 1][ix0 + lx] * wy[c2 - 1][iy0 + ly];
            }
        }
        let field = NodalField {
            ix0,
            iy0,
            nx,
            ny,
            values,
        };

        // chi^>: support dilated by one element ring, capped at the
        // mismatch-free rectangle of the subdomain
        let p = mesh.degree;
        let tilde = dec.chi_tilde_rect(j);
        let cap = mesh.window(&tilde)?;
        let gx0 = ix0.saturating_sub(p).max(cap.ix0);
        let gx1 = (ix1 + p).min(cap.ix1);
        let gy0 = iy0.saturating_sub(p).max(cap.iy0);
        let gy1 = (iy1 + p).min(cap.iy1);
        let (gnx, gny) = (gx1 - gx0 + 1, gy1 - gy0 + 1);
        let mut mask = vec![0.0; gnx * gny];
        for ly in 0..gny {
            for lx in 0..gnx {
                let (ix, iy) = (gx0 + lx, gy0 + ly);
                // within one element ring of a support node of chi_j
                let near_x = ix + p >= ix0 && ix <= ix1 + p;
                let near_y = iy + p >= iy0 && iy <= iy1 + p;
                if near_x && near_y {
                    mask[ly * gnx + lx] = 1.0;
                }
            }
        }
        chi_gt.push(NodalField {
            ix0: gx0,
            iy0: gy0,
            nx: gnx,
            ny: gny,
            values: mask,
        });
        chi.push(field);
        chi_tilde.push(tilde);
        mismatch.push(dec.mismatch_rects(j));
    }

    Ok(PartitionOfUnity {
        chi,
        chi_gt,
        chi_tilde,
        mismatch,
    })
}

/// Discrete restriction/prolongation between the global space and the
/// subdomain spaces (global functions restricted to the extended
/// subdomain, vanishing on its boundary).
#[derive(Debug, Clone)]
pub struct TransferOps {
    pub windows: Vec<GridWindow>,
    pub n_nodes_x: usize,
    pub n_global: usize,
}

impl TransferOps {
    pub fn new(dec: &Decomposition, mesh: &StructuredMesh) -> Result<Self> {
        let windows = dec
            .subdomains
            .iter()
            .map(|s| mesh.window(&s.extended))
            .collect::<Result<Vec<_>>>()?;
        Ok(TransferOps {
            windows,
            n_nodes_x: mesh.n_nodes_x,
            n_global: mesh.n_nodes(),
        })
    }

    pub fn n_subdomains(&self) -> usize {
        self.windows.len()
    }

    pub fn n_local(&self, j: usize) -> usize {
        self.windows[j].n_nodes()
    }

    fn check_global(&self, j: usize, v: &[C64]) -> Result<()> {
        if v.len() != self.n_global {
            return Err(Error::DofMismatch {
                subdomain: j,
                expected: self.n_global,
                got: v.len(),
            });
        }
        Ok(())
    }

    fn check_local(&self, j: usize, v: &[C64]) -> Result<()> {
        if v.len() != self.n_local(j) {
            return Err(Error::DofMismatch {
                subdomain: j,
                expected: self.n_local(j),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Extracts the subdomain nodal values.
    pub fn restrict(&self, j: usize, global: &[C64]) -> Result<Vec<C64>> {
        self.check_global(j, global)?;
        let w = &self.windows[j];
        let mut out = Vec::with_capacity(w.n_nodes());
        for iy in w.iy0..=w.iy1 {
            for ix in w.ix0..=w.ix1 {
                out.push(global[iy * self.n_nodes_x + ix]);
            }
        }
        Ok(out)
    }

    /// Adjoint restriction for residual vectors: extraction followed by
    /// zeroing the subdomain-boundary rows (the local corrector space
    /// vanishes there).
    pub fn restrict_dual(&self, j: usize, global: &[C64]) -> Result<Vec<C64>> {
        let mut out = self.restrict(j, global)?;
        let w = &self.windows[j];
        for (local, v) in out.iter_mut().enumerate() {
            if w.is_window_boundary(local) {
                *v = C64::new(0.0, 0.0);
            }
        }
        Ok(out)
    }

    /// Zero-extension of a subdomain vector.
    pub fn prolong(&self, j: usize, local: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); self.n_global];
        self.prolong_add(j, local, &mut out)?;
        Ok(out)
    }

    /// Zero-extension, accumulated into `out`.
    pub fn prolong_add(&self, j: usize, local: &[C64], out: &mut [C64]) -> Result<()> {
        self.check_local(j, local)?;
        let w = &self.windows[j];
        let nx = w.n_nodes_x();
        for (local_idx, v) in local.iter().enumerate() {
            let (lx, ly) = (local_idx % nx, local_idx / nx);
            out[(w.iy0 + ly) * self.n_nodes_x + (w.ix0 + lx)] += *v;
        }
        Ok(())
    }

    /// Multiplication by the nodal partition-of-unity weight followed by
    /// zero-extension.
    pub fn weighted_prolong(
        &self,
        j: usize,
        chi: &NodalField,
        local: &[C64],
    ) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); self.n_global];
        self.weighted_prolong_add(j, chi, local, &mut out)?;
        Ok(out)
    }

    pub fn weighted_prolong_add(
        &self,
        j: usize,
        chi: &NodalField,
        local: &[C64],
        out: &mut [C64],
    ) -> Result<()> {
        self.check_local(j, local)?;
        let w = &self.windows[j];
        let nx = w.n_nodes_x();
        for (local_idx, v) in local.iter().enumerate() {
            let (lx, ly) = (local_idx % nx, local_idx / nx);
            let (ix, iy) = (w.ix0 + lx, w.iy0 + ly);
            let weight = chi.get(ix, iy);
            if weight != 0.0 {
                out[iy * self.n_nodes_x + ix] += weight * v;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, HRule};
    use rand::Rng;
    use rand::SeedableRng;

    fn unit_mesh(denominator: u64) -> StructuredMesh {
        build_mesh(1.0, 1.0, 0.025, 1.0, 2, HRule::Fixed { denominator }).unwrap()
    }

    #[test]
    fn strip_two_subdomains_per_construction_rule() {
        let d = make_strip(2, 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
        assert_eq!(d.n(), 2);
        let s1 = &d.subdomains[0];
        let s2 = &d.subdomains[1];
        assert_eq!(s1.interior, Rect::new(0.0, 0.5125, 0.0, 1.0));
        assert_eq!(s2.interior, Rect::new(0.4875, 1.0, 0.0, 1.0));
        // total overlap width is delta
        assert!((s1.interior.x1 - s2.interior.x0 - d.delta).abs() < 1e-15);
        // interior edge gets kappa0, boundary edges kappa
        assert_eq!(s1.widths, [0.025, 0.025, 0.025, 0.025]);
        assert_eq!(s1.on_boundary, [true, false, true, true]);
    }

    #[test]
    fn single_subdomain_is_whole_domain() {
        let d = make_strip(1, 0.025, 0.025, 0.0125, (1.0, 1.0)).unwrap();
        assert_eq!(d.n(), 1);
        let s = &d.subdomains[0];
        assert_eq!(s.interior, Rect::new(0.0, 1.0, 0.0, 1.0));
        assert_eq!(s.extended, Rect::new(-0.025, 1.025, -0.025, 1.025));
        assert_eq!(s.widths, [0.025; 4]);
    }

    #[test]
    fn strip_four_coords_and_adjacency() {
        let d = make_strip(4, 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
        for (j, s) in d.subdomains.iter().enumerate() {
            assert_eq!(s.coords, (j + 1, 1));
        }
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let overlap = d.subdomains[i].extended.overlaps(&d.subdomains[j].extended);
                assert_eq!(overlap, i.abs_diff(j) == 1, "{i} {j}");
            }
        }
    }

    #[test]
    fn checkerboard_4x5_coordinates() {
        let d = make_checkerboard((4, 5), 0.0125, 0.025, 0.025, (1.0, 1.0)).unwrap();
        assert_eq!(d.n(), 20);
        let mut seen = std::collections::HashSet::new();
        for s in &d.subdomains {
            assert!((1..=4).contains(&s.coords.0));
            assert!((1..=5).contains(&s.coords.1));
            seen.insert(s.coords);
        }
        assert_eq!(seen.len(), 20);
        assert_eq!(d.effective_dim(), 2);
    }

    #[test]
    fn one_by_n_is_a_strip_in_y() {
        let d = make_checkerboard((1, 3), 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
        assert_eq!(d.effective_dim(), 1);
        for s in &d.subdomains {
            assert_eq!(s.interior.interval_x(), (0.0, 1.0));
        }
    }

    #[test]
    fn two_by_two_overlaps_three_neighbours() {
        let d = make_checkerboard((2, 2), 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
        for i in 0..4 {
            let count = (0..4)
                .filter(|&j| j != i && d.subdomains[i].extended.overlaps(&d.subdomains[j].extended))
                .count();
            assert_eq!(count, 3, "subdomain {i}");
        }
    }

    #[test]
    fn overlap_too_large_rejected() {
        assert!(matches!(
            make_strip(4, 0.3, 0.025, 0.025, (1.0, 1.0)),
            Err(Error::OverlapTooLarge { .. })
        ));
    }

    #[test]
    fn pou_single_subdomain_is_one() {
        let mesh = unit_mesh(40);
        let d = make_strip(1, 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
        let pou = build_pou(&d, &mesh, PouParams::default()).unwrap();
        for iy in 0..mesh.n_nodes_y {
            for ix in 0..mesh.n_nodes_x {
                assert_eq!(pou.chi[0].get(ix, iy), 1.0);
            }
        }
    }

    #[test]
    fn pou_partition_identity_and_bounds() {
        for dims in [(2, 1), (4, 1), (3, 3)] {
            let d = make_checkerboard(dims, 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
            // mesh aligned with all breakpoints of this decomposition
            let mut pts = d.breakpoints();
            pts.push(0.025);
            let denom = crate::geometry::grid_denominator(&pts, 1 << 20);
            let mesh = unit_mesh(denom);
            let pou = build_pou(&d, &mesh, PouParams::default()).unwrap();
            for iy in 0..mesh.n_nodes_y {
                for ix in 0..mesh.n_nodes_x {
                    let sum: f64 = pou.chi.iter().map(|c| c.get(ix, iy)).sum();
                    assert!((sum - 1.0).abs() <= 1e-12, "dims {dims:?} node ({ix},{iy})");
                    for c in &pou.chi {
                        let v = c.get(ix, iy);
                        assert!((0.0..=1.0 + 1e-15).contains(&v));
                    }
                }
            }
        }
    }

    #[test]
    fn pou_overlap_node_values() {
        // N = 2 strip: at x = 1/2 both weights are interior to (0, 1)
        let mesh = unit_mesh(80);
        let d = make_strip(2, 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
        let pou = build_pou(&d, &mesh, PouParams::default()).unwrap();
        let ix_half = ((0.5 + 0.025) / mesh.node_spacing()).round() as usize;
        let c1 = pou.chi[0].get(ix_half, 5);
        let c2 = pou.chi[1].get(ix_half, 5);
        assert!(c1 > 0.0 && c1 < 1.0);
        assert!(c2 > 0.0 && c2 < 1.0);
        assert!((c1 + c2 - 1.0).abs() < 1e-12);

        // past b1 - 0.3 delta the first weight vanishes
        let x_past = 0.5125 - 0.3 * 0.025 + 2.0 * mesh.node_spacing();
        let ix_past = ((x_past + 0.025) / mesh.node_spacing()).round() as usize;
        assert_eq!(pou.chi[0].get(ix_past, 5), 0.0);
        assert!((pou.chi[1].get(ix_past, 5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pou_vanishes_on_mismatch_region() {
        let mesh = unit_mesh(80);
        let d = make_checkerboard((2, 2), 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
        let pou = build_pou(&d, &mesh, PouParams::default()).unwrap();
        for j in 0..d.n() {
            for rect in &pou.mismatch[j] {
                let w = mesh.window(rect).unwrap();
                for iy in w.iy0..=w.iy1 {
                    for ix in w.ix0..=w.ix1 {
                        assert_eq!(
                            pou.chi[j].get(ix, iy),
                            0.0,
                            "chi_{j} nonzero in its mismatch region at ({ix},{iy})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn chi_gt_is_one_on_chi_support() {
        let mesh = unit_mesh(240);
        let d = make_strip(3, 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
        let pou = build_pou(&d, &mesh, PouParams::default()).unwrap();
        for j in 0..d.n() {
            for iy in 0..mesh.n_nodes_y {
                for ix in 0..mesh.n_nodes_x {
                    if pou.chi[j].get(ix, iy) > 0.0 {
                        assert_eq!(pou.chi_gt[j].get(ix, iy), 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn empty_support_detected() {
        let narrow = make_strip(2, 0.9, 0.025, 0.025, (1.0, 1.0));
        assert!(matches!(narrow, Err(Error::OverlapTooLarge { .. })));
        // an interior interval shorter than twice the shrunk margin has no
        // bump support left
        let err = direction_bumps(
            3,
            1.0,
            0.2,
            &PouParams {
                shrink: 0.9,
                boundary_scale: None,
            },
            |m| (m as f64 / 3.0, m as f64 / 3.0 + 0.3),
        );
        assert!(matches!(err, Err(Error::EmptySupport { .. })));
    }

    #[test]
    fn transfer_restrict_prolong_identities() {
        let mesh = unit_mesh(80);
        let d = make_strip(2, 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
        let ops = TransferOps::new(&d, &mesh).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        // restrict(prolong(v)) = v for any subdomain vector
        for j in 0..2 {
            let v: Vec<C64> = (0..ops.n_local(j))
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let back = ops.restrict(j, &ops.prolong(j, &v).unwrap()).unwrap();
            assert_eq!(back, v);
        }
        // prolong(restrict(w)) = w for w supported strictly inside the subdomain
        let w0 = &ops.windows[0];
        let mut w = vec![C64::new(0.0, 0.0); mesh.n_nodes()];
        for iy in (w0.iy0 + 1)..w0.iy1 {
            for ix in (w0.ix0 + 1)..w0.ix1 {
                w[iy * mesh.n_nodes_x + ix] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            }
        }
        let again = ops.prolong(0, &ops.restrict(0, &w).unwrap()).unwrap();
        assert_eq!(again, w);
    }

    #[test]
    fn weighted_prolongation_reconstruction() {
        // sum_j R~^T_j restrict_j(w) = w for 100 random w vanishing on the
        // physical boundary
        let mesh = unit_mesh(80);
        for dims in [(2, 1), (2, 2)] {
            let d = make_checkerboard(dims, 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
            let pou = build_pou(&d, &mesh, PouParams::default()).unwrap();
            let ops = TransferOps::new(&d, &mesh).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
            for _ in 0..100 {
                let mut w: Vec<C64> = (0..mesh.n_nodes())
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                for idx in 0..mesh.n_nodes() {
                    if mesh.is_boundary_node(idx) {
                        w[idx] = C64::new(0.0, 0.0);
                    }
                }
                let mut sum = vec![C64::new(0.0, 0.0); mesh.n_nodes()];
                for j in 0..d.n() {
                    let local = ops.restrict(j, &w).unwrap();
                    ops.weighted_prolong_add(j, &pou.chi[j], &local, &mut sum)
                        .unwrap();
                }
                let wmax = w.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
                for idx in 0..mesh.n_nodes() {
                    assert!(
                        (sum[idx] - w[idx]).norm() <= 1e-14 * wmax,
                        "dims {dims:?} node {idx}: {} vs {}",
                        sum[idx],
                        w[idx]
                    );
                }
            }
        }
    }

    #[test]
    fn dof_mismatch_reported() {
        let mesh = unit_mesh(80);
        let d = make_strip(2, 0.025, 0.025, 0.025, (1.0, 1.0)).unwrap();
        let ops = TransferOps::new(&d, &mesh).unwrap();
        let bad = vec![C64::new(0.0, 0.0); 7];
        assert!(matches!(
            ops.prolong(0, &bad),
            Err(Error::DofMismatch { .. })
        ));
    }
}

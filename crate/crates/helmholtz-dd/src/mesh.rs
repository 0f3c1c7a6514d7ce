//! Structured tensor-product Lagrange meshes of the PML-extended rectangle
//! `(-kappa, L1+kappa) x (-kappa, L2+kappa)` with region classification.
//!
//! Every axis-aligned breakpoint of the computational geometry (the PML
//! interfaces and all subdomain edges) must coincide with a mesh line; the
//! mesh-size rule snaps `1/h` to a multiple of the grid denominator of
//! those breakpoints so this holds by construction.

use crate::error::Error;
use crate::geometry::Rect;
use crate::Result;

/// Relative tolerance (in units of `h`) for breakpoint/grid alignment.
const ALIGN_TOL: f64 = 1e-12;

/// Mesh-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HRule {
    /// Largest `h <= k^(-1.25)` such that `1/h` is an integer multiple of
    /// `grid_denominator`.
    Auto { grid_denominator: u64 },
    /// Fixed `h = 1/denominator`.
    Fixed { denominator: u64 },
}

/// Element region kind with respect to the global PML layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Interior,
    LayerX,
    LayerY,
    Corner,
}

/// Region classification of one element: layer kind plus a bitmask of the
/// subdomains whose extended rectangle contains the element.
#[derive(Debug, Clone, Copy)]
pub struct RegionTag {
    pub kind: RegionKind,
    pub membership: u64,
}

/// Uniform tensor-product Lagrange mesh. Node coordinates are implicit:
/// Lagrange nodes are spaced `h/p` apart starting at `(-kappa, -kappa)`,
/// ordered lexicographically (y outer, x inner).
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh {
    pub interior_lengths: (f64, f64),
    pub pml_width: f64,
    pub h: f64,
    pub degree: usize,
    pub n_elems_x: usize,
    pub n_elems_y: usize,
    pub n_nodes_x: usize,
    pub n_nodes_y: usize,
}

/// Builds the mesh covering `(-kappa, L1+kappa) x (-kappa, L2+kappa)`.
///
/// `kappa = 0` is accepted and produces a mesh of the interior rectangle
/// alone (used when the absorbing layer is disabled and the problem is a
/// plain Dirichlet one).
pub fn build_mesh(
    l1: f64,
    l2: f64,
    kappa: f64,
    k: f64,
    degree: usize,
    rule: HRule,
) -> Result<StructuredMesh> {
    if !(l1 > 0.0 && l2 > 0.0) || kappa < 0.0 {
        return Err(Error::DegenerateDomain(format!(
            "lengths ({l1}, {l2}) and PML width {kappa} must be positive"
        )));
    }
    if !(degree == 1 || degree == 2) {
        return Err(Error::InvalidConfig(format!(
            "polynomial degree must be 1 or 2, got {degree}"
        )));
    }
    let inv_h = match rule {
        HRule::Auto { grid_denominator } => {
            if grid_denominator == 0 {
                return Err(Error::InvalidConfig("grid denominator must be > 0".into()));
            }
            if k <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "wavenumber must be positive for the automatic mesh rule, got {k}"
                )));
            }
            // largest h <= k^(-1.25), i.e. smallest integer 1/h >= k^1.25,
            // rounded up to a multiple of the breakpoint grid
            let target = k.powf(1.25);
            let mult = (target / grid_denominator as f64).ceil().max(1.0) as u64;
            mult * grid_denominator
        }
        HRule::Fixed { denominator } => {
            if denominator == 0 {
                return Err(Error::InvalidConfig("mesh denominator must be > 0".into()));
            }
            denominator
        }
    };
    let h = 1.0 / inv_h as f64;

    let n_of = |len: f64| -> Result<usize> {
        let n = len / h;
        let rounded = n.round();
        if (n - rounded).abs() > ALIGN_TOL * inv_h as f64 * len.max(1.0) {
            return Err(Error::BreakpointNotOnGrid { value: len, h });
        }
        Ok(rounded as usize)
    };
    // kappa and the interior lengths must each sit on the grid so that the
    // lines x = 0, x = L1 (and same in y) are element edges.
    let nk = n_of(kappa)?;
    let n_elems_x = n_of(l1)? + 2 * nk;
    let n_elems_y = n_of(l2)? + 2 * nk;
    if n_elems_x < 2 || n_elems_y < 2 {
        return Err(Error::DegenerateDomain(format!(
            "only {n_elems_x} x {n_elems_y} elements; need at least 2 per direction"
        )));
    }

    Ok(StructuredMesh {
        interior_lengths: (l1, l2),
        pml_width: kappa,
        h,
        degree,
        n_elems_x,
        n_elems_y,
        n_nodes_x: degree * n_elems_x + 1,
        n_nodes_y: degree * n_elems_y + 1,
    })
}

/// Element/node index window of an axis-aligned, mesh-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridWindow {
    /// Element range `[ex0, ex1)` x `[ey0, ey1)`.
    pub ex0: usize,
    pub ex1: usize,
    pub ey0: usize,
    pub ey1: usize,
    /// Node range `[ix0, ix1]` x `[iy0, iy1]` (inclusive).
    pub ix0: usize,
    pub ix1: usize,
    pub iy0: usize,
    pub iy1: usize,
}

impl GridWindow {
    pub fn n_nodes_x(&self) -> usize {
        self.ix1 - self.ix0 + 1
    }

    pub fn n_nodes_y(&self) -> usize {
        self.iy1 - self.iy0 + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes_x() * self.n_nodes_y()
    }

    pub fn n_elems(&self) -> usize {
        (self.ex1 - self.ex0) * (self.ey1 - self.ey0)
    }

    /// Local node index of global grid coordinates, if inside the window.
    pub fn local_of(&self, ix: usize, iy: usize) -> Option<usize> {
        if ix < self.ix0 || ix > self.ix1 || iy < self.iy0 || iy > self.iy1 {
            None
        } else {
            Some((iy - self.iy0) * self.n_nodes_x() + (ix - self.ix0))
        }
    }

    /// Whether the local node lies on the window edge.
    pub fn is_window_boundary(&self, local: usize) -> bool {
        let nx = self.n_nodes_x();
        let (lx, ly) = (local % nx, local / nx);
        lx == 0 || lx == nx - 1 || ly == 0 || ly == self.n_nodes_y() - 1
    }
}

impl StructuredMesh {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes_x * self.n_nodes_y
    }

    pub fn n_elems(&self) -> usize {
        self.n_elems_x * self.n_elems_y
    }

    /// Lagrange node spacing `h / p`.
    pub fn node_spacing(&self) -> f64 {
        self.h / self.degree as f64
    }

    pub fn origin(&self) -> (f64, f64) {
        (-self.pml_width, -self.pml_width)
    }

    pub fn node_x(&self, ix: usize) -> f64 {
        -self.pml_width + ix as f64 * self.node_spacing()
    }

    pub fn node_y(&self, iy: usize) -> f64 {
        -self.pml_width + iy as f64 * self.node_spacing()
    }

    pub fn node_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n_nodes_x + ix
    }

    pub fn node_coords(&self, idx: usize) -> (f64, f64) {
        let (ix, iy) = (idx % self.n_nodes_x, idx / self.n_nodes_x);
        (self.node_x(ix), self.node_y(iy))
    }

    pub fn is_boundary_node(&self, idx: usize) -> bool {
        let (ix, iy) = (idx % self.n_nodes_x, idx / self.n_nodes_x);
        ix == 0 || ix == self.n_nodes_x - 1 || iy == 0 || iy == self.n_nodes_y - 1
    }

    /// Lower-left corner of element `(ex, ey)`.
    pub fn elem_origin(&self, ex: usize, ey: usize) -> (f64, f64) {
        (
            -self.pml_width + ex as f64 * self.h,
            -self.pml_width + ey as f64 * self.h,
        )
    }

    /// Global node indices of element `(ex, ey)`, row-major in the local
    /// `(p+1) x (p+1)` patch; returns the fill count.
    pub fn elem_nodes(&self, ex: usize, ey: usize, out: &mut [usize; 9]) -> usize {
        let p = self.degree;
        let (bx, by) = (p * ex, p * ey);
        let mut n = 0;
        for b in 0..=p {
            for a in 0..=p {
                out[n] = self.node_index(bx + a, by + b);
                n += 1;
            }
        }
        n
    }

    /// The full mesh as a window.
    pub fn full_window(&self) -> GridWindow {
        GridWindow {
            ex0: 0,
            ex1: self.n_elems_x,
            ey0: 0,
            ey1: self.n_elems_y,
            ix0: 0,
            ix1: self.n_nodes_x - 1,
            iy0: 0,
            iy1: self.n_nodes_y - 1,
        }
    }

    /// Index window of a mesh-aligned rectangle, clipped to the mesh.
    pub fn window(&self, rect: &Rect) -> Result<GridWindow> {
        let to_idx = |coord: f64, len: f64| -> Result<usize> {
            let t = (coord + self.pml_width) / self.h;
            let r = t.round();
            if (t - r).abs() > ALIGN_TOL / self.h * len.max(1.0) {
                return Err(Error::BreakpointNotOnGrid {
                    value: coord,
                    h: self.h,
                });
            }
            Ok(r.max(0.0) as usize)
        };
        let ex0 = to_idx(rect.x0, rect.width())?;
        let ex1 = to_idx(rect.x1, rect.width())?.min(self.n_elems_x);
        let ey0 = to_idx(rect.y0, rect.height())?;
        let ey1 = to_idx(rect.y1, rect.height())?.min(self.n_elems_y);
        if ex1 <= ex0 || ey1 <= ey0 {
            return Err(Error::DegenerateDomain(format!(
                "rectangle [{}, {}] x [{}, {}] has no elements",
                rect.x0, rect.x1, rect.y0, rect.y1
            )));
        }
        let p = self.degree;
        Ok(GridWindow {
            ex0,
            ex1,
            ey0,
            ey1,
            ix0: p * ex0,
            ix1: p * ex1,
            iy0: p * ey0,
            iy1: p * ey1,
        })
    }

    /// Layer classification of every element (by element centre).
    pub fn classify_elements(&self) -> Vec<RegionKind> {
        let (l1, l2) = self.interior_lengths;
        let mut kinds = Vec::with_capacity(self.n_elems());
        for ey in 0..self.n_elems_y {
            for ex in 0..self.n_elems_x {
                let (x0, y0) = self.elem_origin(ex, ey);
                let (cx, cy) = (x0 + 0.5 * self.h, y0 + 0.5 * self.h);
                let in_x = cx > 0.0 && cx < l1;
                let in_y = cy > 0.0 && cy < l2;
                kinds.push(match (in_x, in_y) {
                    (true, true) => RegionKind::Interior,
                    (false, true) => RegionKind::LayerX,
                    (true, false) => RegionKind::LayerY,
                    (false, false) => RegionKind::Corner,
                });
            }
        }
        kinds
    }

    /// Full region tags: layer kind plus membership bitmask over the given
    /// subdomain rectangles (bit `j` set when the element lies inside
    /// `rects[j]`).
    pub fn region_tags(&self, rects: &[Rect]) -> Result<Vec<RegionTag>> {
        if rects.len() > 64 {
            return Err(Error::InvalidConfig(format!(
                "membership bitmask supports at most 64 subdomains, got {}",
                rects.len()
            )));
        }
        let kinds = self.classify_elements();
        let tol = ALIGN_TOL;
        let mut tags = Vec::with_capacity(kinds.len());
        for (e, kind) in kinds.into_iter().enumerate() {
            let (ex, ey) = (e % self.n_elems_x, e / self.n_elems_x);
            let (x0, y0) = self.elem_origin(ex, ey);
            let mut mask = 0u64;
            for (j, r) in rects.iter().enumerate() {
                if r.contains(x0, y0, tol) && r.contains(x0 + self.h, y0 + self.h, tol) {
                    mask |= 1 << j;
                }
            }
            tags.push(RegionTag {
                kind,
                membership: mask,
            });
        }
        Ok(tags)
    }
}

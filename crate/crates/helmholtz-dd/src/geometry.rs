//! Axis-aligned rectangles and small rational helpers shared by the mesh,
//! decomposition and ray modules.

/// Closed axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        x >= self.x0 - tol && x <= self.x1 + tol && y >= self.y0 - tol && y <= self.y1 + tol
    }

    /// Strict interior membership (shrunk by `tol`).
    pub fn contains_inside(&self, x: f64, y: f64, tol: f64) -> bool {
        x > self.x0 + tol && x < self.x1 - tol && y > self.y0 + tol && y < self.y1 - tol
    }

    pub fn interval_x(&self) -> (f64, f64) {
        (self.x0, self.x1)
    }

    pub fn interval_y(&self) -> (f64, f64) {
        (self.y0, self.y1)
    }

    /// Rectangle grown by `eps` on every side.
    pub fn inflate(&self, eps: f64) -> Rect {
        Rect::new(self.x0 - eps, self.x1 + eps, self.y0 - eps, self.y1 + eps)
    }

    /// Intersection with positive area, if any.
    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x0.max(other.x0);
        let x1 = self.x1.min(other.x1);
        let y0 = self.y0.max(other.y0);
        let y1 = self.y1.min(other.y1);
        if x0 < x1 && y0 < y1 {
            Some(Rect::new(x0, x1, y0, y1))
        } else {
            None
        }
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.intersection(other).is_some()
    }
}

/// Best rational approximation `p/q` of `x` with `q <= max_den`, by
/// continued fractions. Used to recover the exact grid that a set of
/// floating-point breakpoints lives on.
pub fn approx_ratio(x: f64, max_den: u64) -> (i64, u64) {
    let neg = x < 0.0;
    let mut x = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1u64, 1i64, 0u64);
    for _ in 0..64 {
        let a = x.floor();
        let ai = a as i64;
        let p2 = ai.saturating_mul(p1).saturating_add(p0);
        let q2 = (ai as u64).saturating_mul(q1).saturating_add(q0);
        if q2 > max_den {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = x - a;
        if frac.abs() < 1e-13 {
            break;
        }
        x = 1.0 / frac;
    }
    (if neg { -p1 } else { p1 }, q1.max(1))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return a.max(b);
    }
    a / gcd(a, b) * b
}

/// Smallest grid denominator `M` such that every breakpoint is an integer
/// multiple of `1/M`, capped at `max_den` per breakpoint.
pub fn grid_denominator(breakpoints: &[f64], max_den: u64) -> u64 {
    let mut m = 1u64;
    for &b in breakpoints {
        let (_, q) = approx_ratio(b, max_den);
        m = lcm(m, q);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_recovers_small_fractions() {
        assert_eq!(approx_ratio(0.025, 1_000_000), (1, 40));
        assert_eq!(approx_ratio(1.0 / 3.0, 1_000_000), (1, 3));
        assert_eq!(approx_ratio(39.0 / 80.0, 1_000_000), (39, 80));
        assert_eq!(approx_ratio(-0.05, 1_000_000), (-1, 20));
        assert_eq!(approx_ratio(2.0, 1_000_000), (2, 1));
    }

    #[test]
    fn grid_denominator_is_lcm_of_denominators() {
        let m = grid_denominator(&[0.025, 0.5 - 0.0125, 1.0], 1_000_000);
        assert_eq!(m, 80);
        let m = grid_denominator(&[1.0 / 3.0 - 1.0 / 80.0, 0.025], 1_000_000);
        assert_eq!(m, 240);
    }

    #[test]
    fn rect_intersection() {
        let a = Rect::new(0.0, 1.0, 0.0, 1.0);
        let b = Rect::new(0.5, 2.0, -1.0, 0.25);
        let c = a.intersection(&b).unwrap();
        assert_eq!(c, Rect::new(0.5, 1.0, 0.0, 0.25));
        let d = Rect::new(1.5, 2.0, 0.0, 1.0);
        assert!(a.intersection(&d).is_none());
    }
}

//! Absorbing-layer profiles: the PML scaling functions (global and
//! per-subdomain) and the alternative complex-absorbing-potential profile,
//! plus evaluation of the complex coefficient fields entering the forms.

use crate::error::Error;
use crate::geometry::Rect;
use crate::{Result, C64};

/// Scaling function value and its first two derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// One-dimensional PML scaling function `f_s`.
///
/// `f_s` vanishes together with its derivative for `x <= 0` and is
/// strictly increasing for `x > 0`. Two shapes are provided: the cubic
/// used in the convergence experiments, and a variant that blends into a
/// constant slope at `kappa_lin` (so that `f_s'' = 0` beyond it), which is
/// what the convergence theory assumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingProfile {
    /// `f_s(x) = alpha x^3 / 3`.
    Cubic { alpha: f64 },
    /// C^2 ramp of the slope from 0 to `slope` over `[0, kappa_lin]`,
    /// linear beyond.
    SmoothLinearTail { kappa_lin: f64, slope: f64 },
}

impl ScalingProfile {
    pub fn cubic(alpha: f64) -> Result<Self> {
        if alpha <= 0.0 {
            return Err(Error::InvalidProfile(format!(
                "cubic coefficient must be positive, got {alpha}"
            )));
        }
        Ok(ScalingProfile::Cubic { alpha })
    }

    pub fn smooth_linear_tail(kappa_lin: f64, slope: f64) -> Result<Self> {
        if kappa_lin <= 0.0 || slope <= 0.0 {
            return Err(Error::InvalidProfile(format!(
                "transition point {kappa_lin} and slope {slope} must be positive"
            )));
        }
        Ok(ScalingProfile::SmoothLinearTail { kappa_lin, slope })
    }

    /// Evaluates `f_s` and its first two derivatives.
    pub fn eval(&self, x: f64) -> Scaling {
        if x <= 0.0 {
            return Scaling {
                value: 0.0,
                d1: 0.0,
                d2: 0.0,
            };
        }
        match *self {
            ScalingProfile::Cubic { alpha } => Scaling {
                value: alpha * x * x * x / 3.0,
                d1: alpha * x * x,
                d2: 2.0 * alpha * x,
            },
            ScalingProfile::SmoothLinearTail { kappa_lin, slope } => {
                if x >= kappa_lin {
                    // f(kappa_lin) = slope * kappa_lin / 2 from the ramp below
                    Scaling {
                        value: slope * (0.5 * kappa_lin + (x - kappa_lin)),
                        d1: slope,
                        d2: 0.0,
                    }
                } else {
                    // slope ramps as 3t^2 - 2t^3, t = x / kappa_lin
                    let t = x / kappa_lin;
                    Scaling {
                        value: slope * kappa_lin * (t * t * t - 0.5 * t * t * t * t),
                        d1: slope * (3.0 * t * t - 2.0 * t * t * t),
                        d2: slope * (6.0 * t - 6.0 * t * t) / kappa_lin,
                    }
                }
            }
        }
    }
}

/// Spec-shaped convenience: `(f_s(x), f_s'(x))`.
pub fn eval_scaling(profile: &ScalingProfile, x: f64) -> (f64, f64) {
    let s = profile.eval(x);
    (s.value, s.d1)
}

/// Per-direction scaling `g(x)`: zero on the interval `(a, b)` and
/// `+-f_s` of the signed distance outside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisScaling {
    pub a: f64,
    pub b: f64,
}

impl AxisScaling {
    /// `g`, `g'`, `g''` at `x`. Note `g' >= 0` on both sides.
    pub fn eval(&self, profile: &ScalingProfile, x: f64) -> Scaling {
        if x >= self.b {
            profile.eval(x - self.b)
        } else if x <= self.a {
            let s = profile.eval(self.a - x);
            Scaling {
                value: -s.value,
                d1: s.d1,
                d2: -s.d2,
            }
        } else {
            Scaling {
                value: 0.0,
                d1: 0.0,
                d2: 0.0,
            }
        }
    }
}

/// Scaling functions of one (sub)domain: `g_1(x_1)` and `g_2(x_2)`
/// determined by the rectangle on which the scaling is inactive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubdomainScaling {
    pub profile: ScalingProfile,
    pub x: AxisScaling,
    pub y: AxisScaling,
}

impl SubdomainScaling {
    /// Scaling inactive on `rect` (the interior rectangle of the domain).
    pub fn new(profile: ScalingProfile, rect: &Rect) -> Self {
        SubdomainScaling {
            profile,
            x: AxisScaling {
                a: rect.x0,
                b: rect.x1,
            },
            y: AxisScaling {
                a: rect.y0,
                b: rect.y1,
            },
        }
    }

    pub fn gx(&self, x: f64) -> Scaling {
        self.x.eval(&self.profile, x)
    }

    pub fn gy(&self, y: f64) -> Scaling {
        self.y.eval(&self.profile, y)
    }
}

/// Complex coefficients of the absorbing sesquilinear form at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlCoefficients {
    /// Scaled diffusion matrix.
    pub d: [[C64; 2]; 2],
    /// First-order (advective) coefficient.
    pub beta: [C64; 2],
    /// Mass weight `c^{-2}`.
    pub mass: C64,
}

/// Evaluates the scaled coefficients at `point` given the diffusion matrix
/// `a` and `c^{-2}` there: with `gamma_l = 1 + i g_l'`,
/// `D = diag(1/gamma) a diag(1/gamma)` and
/// `beta = diag(1/gamma) a (gamma_l' / gamma_l^2)_l`
/// (`gamma_l' = i g_l''`). For `a = Id` this reduces to
/// `D = diag(1/gamma_1^2, 1/gamma_2^2)`,
/// `beta = (gamma_1'/gamma_1^3, gamma_2'/gamma_2^3)`.
pub fn pml_coefficients(
    scaling: &SubdomainScaling,
    a: [[f64; 2]; 2],
    c_inv_sq: f64,
    point: (f64, f64),
) -> Result<PmlCoefficients> {
    // symmetric positive definite check on the 2x2 value
    let sym = (a[0][1] - a[1][0]).abs() <= 1e-12 * (1.0 + a[0][1].abs());
    let pos = a[0][0] > 0.0 && a[0][0] * a[1][1] - a[0][1] * a[1][0] > 0.0;
    if !sym || !pos {
        return Err(Error::NonSpdDiffusion {
            x: point.0,
            y: point.1,
        });
    }
    let sx = scaling.gx(point.0);
    let sy = scaling.gy(point.1);
    let gamma = [C64::new(1.0, sx.d1), C64::new(1.0, sy.d1)];
    let dgamma = [C64::new(0.0, sx.d2), C64::new(0.0, sy.d2)];
    let mut d = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            d[i][j] = a[i][j] / (gamma[i] * gamma[j]);
        }
    }
    let mut beta = [C64::new(0.0, 0.0); 2];
    for i in 0..2 {
        for j in 0..2 {
            beta[i] += a[i][j] * dgamma[j] / (gamma[j] * gamma[j]);
        }
        beta[i] /= gamma[i];
    }
    Ok(PmlCoefficients {
        d,
        beta,
        mass: C64::new(c_inv_sq, 0.0),
    })
}

/// Complex absorbing potential supported on the layer of a (sub)domain:
/// a polynomial ramp of the normalised depth into the layer, reaching the
/// amplitude before the outer boundary and constant from there on.
#[derive(Debug, Clone, PartialEq)]
pub struct CapProfile {
    pub amplitude: f64,
    pub ramp_order: u32,
    /// Fraction of the layer depth on which the potential is constant.
    pub flat_fraction: f64,
    /// Interior rectangle (the potential vanishes strictly inside it).
    pub inner: Rect,
    /// Layer widths `[left, right, bottom, top]`.
    pub widths: [f64; 4],
}

impl CapProfile {
    pub fn new(amplitude: f64, ramp_order: u32, inner: Rect, widths: [f64; 4]) -> Result<Self> {
        if amplitude < 0.0 {
            return Err(Error::InvalidProfile(format!(
                "potential amplitude must be nonnegative, got {amplitude}"
            )));
        }
        if ramp_order == 0 {
            return Err(Error::InvalidProfile("ramp order must be >= 1".into()));
        }
        if widths.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidProfile("layer widths must be >= 0".into()));
        }
        Ok(CapProfile {
            amplitude,
            ramp_order,
            flat_fraction: 0.2,
            inner,
            widths,
        })
    }

    /// `V(point)`.
    pub fn eval(&self, point: (f64, f64)) -> f64 {
        let (x, y) = point;
        let depth = |excess: f64, w: f64| -> f64 {
            if excess <= 0.0 || w <= 0.0 {
                0.0
            } else {
                (excess / w).min(1.0)
            }
        };
        let t = depth(self.inner.x0 - x, self.widths[0])
            .max(depth(x - self.inner.x1, self.widths[1]))
            .max(depth(self.inner.y0 - y, self.widths[2]))
            .max(depth(y - self.inner.y1, self.widths[3]));
        if t <= 0.0 {
            return 0.0;
        }
        let ramp_end = 1.0 - self.flat_fraction;
        let r = (t / ramp_end).min(1.0);
        self.amplitude * r.powi(self.ramp_order as i32)
    }
}

/// Spec-shaped convenience for [`CapProfile::eval`].
pub fn cap_potential(profile: &CapProfile, point: (f64, f64)) -> f64 {
    profile.eval(point)
}

/// Absorbing mechanism attached to one (sub)domain system.
#[derive(Debug, Clone, PartialEq)]
pub enum Absorber {
    Pml(SubdomainScaling),
    Cap {
        /// Potential of this (sub)domain.
        potential: CapProfile,
    },
}

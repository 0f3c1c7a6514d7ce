//! Geometric-optics trajectories of the Hamiltonian flow of
//! `p(x, xi) = |xi|^2 - c(x)^-2`, word following/allowedness, and the
//! iteration-count bound derived from the longest allowed word.

use crate::assembly::{WaveSpeedField, WaveSpeedKind};
use crate::decomposition::Decomposition;
use crate::error::Error;
use crate::geometry::Rect;
use crate::par::{self, Parallelism};
use crate::Result;

/// Membership tolerance for the rectangle tests.
const GEOM_TOL: f64 = 1e-12;

/// Position/momentum pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: [f64; 2],
    pub xi: [f64; 2],
}

impl PhasePoint {
    pub fn new(x: [f64; 2], xi: [f64; 2]) -> Self {
        PhasePoint { x, xi }
    }
}

/// Sampled trajectory with uniform time step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub points: Vec<PhasePoint>,
}

impl Trajectory {
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn last(&self) -> PhasePoint {
        *self.points.last().expect("trajectories are nonempty")
    }

    /// Dumps the samples as CSV with columns `t, x1, x2, xi1, xi2`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut out = String::from("t,x1,x2,xi1,xi2\n");
        for (i, p) in self.points.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.time(i),
                p.x[0],
                p.x[1],
                p.xi[0],
                p.xi[1]
            ));
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Wave speed as seen by the ray integrator. The piecewise-linear lens
/// profiles are only Lipschitz at the lens edge, so the rays use a C^2
/// mollification with a small blend width.
#[derive(Debug, Clone, Copy)]
pub enum RaySpeed {
    Uniform,
    Radial {
        center: (f64, f64),
        profile: MollifiedRadial,
    },
    /// Arbitrary `c^-2`; the gradient is taken by central differences.
    Numeric(fn(f64, f64) -> f64),
}

impl RaySpeed {
    /// Builds the ray-side view of an assembly wave-speed field with the
    /// given blend width at the profile kinks.
    pub fn from_field(field: &WaveSpeedField, blend: f64) -> Self {
        match field.kind {
            WaveSpeedKind::Uniform => RaySpeed::Uniform,
            WaveSpeedKind::LinearLens { center_value } => RaySpeed::Radial {
                center: field.center,
                profile: MollifiedRadial::new(center_value, 0.4, blend),
            },
            WaveSpeedKind::Custom(f) => RaySpeed::Numeric(f),
        }
    }

    pub fn c_inv_sq(&self, x: f64, y: f64) -> f64 {
        match self {
            RaySpeed::Uniform => 1.0,
            RaySpeed::Radial { center, profile } => {
                let r = ((x - center.0).powi(2) + (y - center.1).powi(2)).sqrt();
                profile.value(r)
            }
            RaySpeed::Numeric(f) => f(x, y),
        }
    }

    /// `grad(c^-2)` at `(x, y)`.
    pub fn grad_c_inv_sq(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            RaySpeed::Uniform => [0.0, 0.0],
            RaySpeed::Radial { center, profile } => {
                let dx = x - center.0;
                let dy = y - center.1;
                let r = (dx * dx + dy * dy).sqrt();
                let f = profile.deriv_over_r(r);
                [f * dx, f * dy]
            }
            RaySpeed::Numeric(f) => {
                let eps = 1e-6;
                [
                    (f(x + eps, y) - f(x - eps, y)) / (2.0 * eps),
                    (f(x, y + eps) - f(x, y - eps)) / (2.0 * eps),
                ]
            }
        }
    }
}

/// C^2 radial profile for `c^-2(r)`: cubic cap at the origin, linear ramp
/// from `center_value` to 1 over `[0, edge]`, quintic blend across the
/// edge, constant 1 outside.
#[derive(Debug, Clone, Copy)]
pub struct MollifiedRadial {
    center_value: f64,
    slope: f64,
    edge: f64,
    blend: f64,
    /// Origin-cap cubic `a + b r^2 + c r^3`.
    cap: (f64, f64, f64),
}

impl MollifiedRadial {
    pub fn new(center_value: f64, edge: f64, blend: f64) -> Self {
        let slope = (1.0 - center_value) / edge;
        let w = blend;
        // match value and slope at r = w with zero curvature there
        let c3 = -slope / (3.0 * w * w);
        let b = slope / w;
        let a = center_value + slope * w / 3.0;
        MollifiedRadial {
            center_value,
            slope,
            edge,
            blend,
            cap: (a, b, c3),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        let w = self.blend;
        let (a, b, c3) = self.cap;
        if r < w {
            a + b * r * r + c3 * r * r * r
        } else if r <= self.edge - w {
            self.center_value + self.slope * r
        } else if r < self.edge + w {
            self.edge_blend(r).0
        } else {
            1.0
        }
    }

    /// `d(c^-2)/dr / r`, with the removable singularity at the origin
    /// evaluated in closed form.
    pub fn deriv_over_r(&self, r: f64) -> f64 {
        let w = self.blend;
        let (_, b, c3) = self.cap;
        if r < w {
            2.0 * b + 3.0 * c3 * r
        } else if r <= self.edge - w {
            self.slope / r
        } else if r < self.edge + w {
            self.edge_blend(r).1 / r
        } else {
            0.0
        }
    }

    /// Quintic Hermite across `[edge - w, edge + w]` with zero curvature at
    /// both ends; returns `(value, derivative)`.
    fn edge_blend(&self, r: f64) -> (f64, f64) {
        let r0 = self.edge - self.blend;
        let r1 = self.edge + self.blend;
        let len = r1 - r0;
        let t = (r - r0) / len;
        let y0 = self.center_value + self.slope * r0;
        let (y1, d0, d1) = (1.0, self.slope, 0.0);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h3 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let value = y0 * h0 + d0 * len * h1 + y1 * h3 + d1 * len * h4;
        let dh0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let dh1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let dh3 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
        let dh4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let deriv = (y0 * dh0 + d0 * len * dh1 + y1 * dh3 + d1 * len * dh4) / len;
        (value, deriv)
    }
}

fn hamiltonian(speed: &RaySpeed, p: &PhasePoint) -> f64 {
    p.xi[0] * p.xi[0] + p.xi[1] * p.xi[1] - speed.c_inv_sq(p.x[0], p.x[1])
}

/// Integrates the flow `dx/dt = 2 xi`, `dxi/dt = grad(c^-2)(x)` for time
/// `t_final` with step `dt`. Uniform speed uses the exact straight-line
/// solution; otherwise classical RK4 with a Hamiltonian-drift guard.
pub fn flow(start: PhasePoint, t_final: f64, speed: &RaySpeed, dt: f64) -> Result<Trajectory> {
    if dt <= 0.0 || t_final <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "time step {dt} and duration {t_final} must be positive"
        )));
    }
    let n_steps = (t_final / dt).ceil() as usize;
    let mut points = Vec::with_capacity(n_steps + 1);
    points.push(start);

    if matches!(speed, RaySpeed::Uniform) {
        for i in 1..=n_steps {
            let t = i as f64 * dt;
            points.push(PhasePoint {
                x: [
                    start.x[0] + 2.0 * t * start.xi[0],
                    start.x[1] + 2.0 * t * start.xi[1],
                ],
                xi: start.xi,
            });
        }
        return Ok(Trajectory { dt, points });
    }

    let h0 = hamiltonian(speed, &start);
    let tol_h = 1e-6 * (1.0 + h0.abs());
    let deriv = |p: &PhasePoint| -> PhasePoint {
        let g = speed.grad_c_inv_sq(p.x[0], p.x[1]);
        PhasePoint {
            x: [2.0 * p.xi[0], 2.0 * p.xi[1]],
            xi: g,
        }
    };
    let mut cur = start;
    for _ in 0..n_steps {
        let k1 = deriv(&cur);
        let k2 = deriv(&advance(&cur, &k1, 0.5 * dt));
        let k3 = deriv(&advance(&cur, &k2, 0.5 * dt));
        let k4 = deriv(&advance(&cur, &k3, dt));
        cur = PhasePoint {
            x: [
                cur.x[0] + dt / 6.0 * (k1.x[0] + 2.0 * k2.x[0] + 2.0 * k3.x[0] + k4.x[0]),
                cur.x[1] + dt / 6.0 * (k1.x[1] + 2.0 * k2.x[1] + 2.0 * k3.x[1] + k4.x[1]),
            ],
            xi: [
                cur.xi[0] + dt / 6.0 * (k1.xi[0] + 2.0 * k2.xi[0] + 2.0 * k3.xi[0] + k4.xi[0]),
                cur.xi[1] + dt / 6.0 * (k1.xi[1] + 2.0 * k2.xi[1] + 2.0 * k3.xi[1] + k4.xi[1]),
            ],
        };
        let drift = (hamiltonian(speed, &cur) - h0).abs();
        if drift > tol_h {
            return Err(Error::StepRejected { drift, tol: tol_h });
        }
        points.push(cur);
    }
    Ok(Trajectory { dt, points })
}

fn advance(p: &PhasePoint, d: &PhasePoint, s: f64) -> PhasePoint {
    PhasePoint {
        x: [p.x[0] + s * d.x[0], p.x[1] + s * d.x[1]],
        xi: [p.xi[0] + s * d.xi[0], p.xi[1] + s * d.xi[1]],
    }
}

/// Word of subdomain indices (0-based) without immediate repeats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidConfig("words are nonempty".into()));
        }
        if letters.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!(
                "word {letters:?} repeats a letter consecutively"
            )));
        }
        Ok(Word(letters))
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

/// Rectangle geometry used by the word-following test: largest-cutoff
/// supports, scaling-mismatch regions, and the slightly enlarged
/// subdomains the trajectory segments must stay inside.
#[derive(Debug, Clone)]
pub struct WordRegions {
    pub chi_tilde: Vec<Rect>,
    pub mismatch: Vec<Vec<Rect>>,
    pub extended: Vec<Rect>,
}

impl WordRegions {
    /// `eps_ext` is the enlargement of the extended subdomains (one mesh
    /// element is the intended scale).
    pub fn new(dec: &Decomposition, eps_ext: f64) -> Self {
        let n = dec.n();
        WordRegions {
            chi_tilde: (0..n).map(|j| dec.chi_tilde_rect(j)).collect(),
            mismatch: (0..n).map(|j| dec.mismatch_rects(j)).collect(),
            extended: dec
                .subdomains
                .iter()
                .map(|s| s.extended.inflate(eps_ext))
                .collect(),
        }
    }

    fn in_mismatch(&self, j: usize, x: f64, y: f64) -> bool {
        self.mismatch[j].iter().any(|r| r.contains(x, y, GEOM_TOL))
    }

    /// Via region of one step: the part of the current letter's cutoff
    /// support lying in the next letter's scaling mismatch.
    fn in_via(&self, w_i: usize, w_next: usize, x: f64, y: f64) -> bool {
        self.chi_tilde[w_i].contains(x, y, GEOM_TOL) && self.in_mismatch(w_next, x, y)
    }
}

/// Outcome of the word-following test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FollowOutcome {
    pub follows: bool,
    /// Fewer than 3 samples fell in some crossed region.
    pub under_resolved: bool,
}

/// Decides whether the sampled trajectory follows the word: it must visit,
/// in order, the via regions between consecutive letters, stay inside the
/// (enlarged) subdomain of the current letter between visits, and end in
/// the last letter's cutoff support.
pub fn follows_word(traj: &Trajectory, word: &Word, regions: &WordRegions) -> FollowOutcome {
    let w = word.letters();
    let m = w.len();
    let pts = &traj.points;
    if m == 1 {
        let follows = pts
            .iter()
            .any(|p| regions.chi_tilde[w[0]].contains(p.x[0], p.x[1], GEOM_TOL));
        return FollowOutcome {
            follows,
            under_resolved: false,
        };
    }

    let starts: Vec<usize> = (0..pts.len())
        .filter(|&i| regions.in_via(w[0], w[1], pts[i].x[0], pts[i].x[1]))
        .collect();
    let mut under_resolved = !starts.is_empty() && starts.len() < 3;

    'starts: for &start in &starts {
        let mut idx = start;
        for stage in 1..m {
            // walk inside the enlarged subdomain of this letter until the
            // next via region (or the final cutoff support)
            loop {
                idx += 1;
                if idx >= pts.len() {
                    continue 'starts;
                }
                let (x, y) = (pts[idx].x[0], pts[idx].x[1]);
                let arrived = if stage + 1 < m {
                    regions.in_via(w[stage], w[stage + 1], x, y)
                } else {
                    regions.chi_tilde[w[stage]].contains(x, y, GEOM_TOL)
                };
                if arrived {
                    // count contiguous samples in the region for the
                    // resolution warning
                    let mut hits = 1usize;
                    let mut j = idx + 1;
                    while j < pts.len() && hits < 3 {
                        let again = if stage + 1 < m {
                            regions.in_via(w[stage], w[stage + 1], pts[j].x[0], pts[j].x[1])
                        } else {
                            regions.chi_tilde[w[stage]].contains(
                                pts[j].x[0],
                                pts[j].x[1],
                                GEOM_TOL,
                            )
                        };
                        if !again {
                            break;
                        }
                        hits += 1;
                        j += 1;
                    }
                    if hits < 3 {
                        under_resolved = true;
                        log::warn!(
                            "word-following test saw fewer than 3 samples in a crossed region"
                        );
                    }
                    break;
                }
                if !regions.extended[w[stage]].contains(x, y, GEOM_TOL) {
                    continue 'starts;
                }
            }
        }
        return FollowOutcome {
            follows: true,
            under_resolved,
        };
    }
    FollowOutcome {
        follows: false,
        under_resolved,
    }
}

/// Seed budget for the sampled allowedness search.
#[derive(Debug, Clone, Copy)]
pub struct SampleParams {
    pub positions: (usize, usize),
    pub directions: usize,
    pub t_max: f64,
    pub dt: f64,
    pub eps_ext: f64,
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams {
            positions: (32, 32),
            directions: 64,
            t_max: 4.0,
            dt: 2e-3,
            eps_ext: 0.01,
        }
    }
}

/// Allowedness decision mode.
#[derive(Debug, Clone, Copy)]
pub enum AllowMode<'a> {
    /// Uniform speed: monotone checkerboard coordinates plus adjacency of
    /// consecutive letters (straight-line rays realise exactly these
    /// words).
    ExactUniform,
    /// Trajectory search over a seeded grid; may report false negatives,
    /// never false positives (every hit is verified by the following
    /// test).
    Sampled {
        speed: &'a RaySpeed,
        params: SampleParams,
        mode: Parallelism,
    },
}

/// Whether some trajectory follows the word.
pub fn is_allowed(word: &Word, dec: &Decomposition, mode: AllowMode) -> bool {
    let w = word.letters();
    if w.iter().any(|&j| j >= dec.n()) {
        return false;
    }
    if w.len() == 1 {
        return true;
    }
    match mode {
        AllowMode::ExactUniform => {
            let monotone = |coord: &dyn Fn(usize) -> usize| {
                let vals: Vec<usize> = w.iter().map(|&j| coord(j)).collect();
                vals.windows(2).all(|p| p[0] <= p[1]) || vals.windows(2).all(|p| p[0] >= p[1])
            };
            let c1 = |j: usize| dec.subdomains[j].coords.0;
            let c2 = |j: usize| dec.subdomains[j].coords.1;
            if !monotone(&c1) || !monotone(&c2) {
                return false;
            }
            w.windows(2).all(|p| dec.adjacent(p[0], p[1]))
        }
        AllowMode::Sampled {
            speed,
            params,
            mode,
        } => {
            let regions = WordRegions::new(dec, params.eps_ext);
            // seeds spread over the first via region
            let via_rects: Vec<Rect> = regions.mismatch[w[1]]
                .iter()
                .filter_map(|r| r.intersection(&regions.chi_tilde[w[0]]))
                .collect();
            let mut seeds = Vec::new();
            for rect in &via_rects {
                let (nx, ny) = params.positions;
                for iy in 0..ny {
                    for ix in 0..nx {
                        let x = rect.x0 + rect.width() * (ix as f64 + 0.5) / nx as f64;
                        let y = rect.y0 + rect.height() * (iy as f64 + 0.5) / ny as f64;
                        let xi_mag = speed.c_inv_sq(x, y).max(0.0).sqrt();
                        for d in 0..params.directions {
                            let phi =
                                2.0 * std::f64::consts::PI * d as f64 / params.directions as f64;
                            seeds.push(PhasePoint::new(
                                [x, y],
                                [xi_mag * phi.cos(), xi_mag * phi.sin()],
                            ));
                        }
                    }
                }
            }
            let hits = par::map_indexed(mode, seeds.len(), |i| {
                flow(seeds[i], params.t_max, speed, params.dt)
                    .map(|traj| follows_word(&traj, word, &regions).follows)
                    .unwrap_or(false)
            });
            hits.into_iter().any(|h| h)
        }
    }
}

/// Result of the iteration-bound computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapitalN {
    pub value: usize,
    /// Set when the decision procedure can miss trajectories (sampled
    /// mode), in which case `value` is a lower bound.
    pub lower_bound_only: bool,
}

/// Longest-allowed-word bound for uniform speed: the length of the longest
/// componentwise-monotonic cell sequence, `1 + sum_l (N_l - 1)`.
pub fn capital_n_formula(dec: &Decomposition) -> usize {
    1 + (dec.dims.0 - 1) + (dec.dims.1 - 1)
}

/// Longest allowed word by breadth-first extension pruned by the
/// allowedness test; `budget` caps the number of words examined.
pub fn capital_n_enumerate(
    dec: &Decomposition,
    mode: AllowMode,
    budget: usize,
) -> Result<CapitalN> {
    let n = dec.n();
    let lower_bound_only = matches!(mode, AllowMode::Sampled { .. });
    let mut frontier: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
    let mut best = 1usize;
    let mut examined = 0usize;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for w in &frontier {
            let last = *w.last().expect("words are nonempty");
            for j in 0..n {
                if j == last || !dec.adjacent(last, j) {
                    continue;
                }
                examined += 1;
                if examined > budget {
                    return Err(Error::BudgetExceeded(format!(
                        "word enumeration exceeded {budget} candidates"
                    )));
                }
                let mut cand = w.clone();
                cand.push(j);
                let word = Word::new(cand.clone()).expect("extension keeps letters distinct");
                if is_allowed(&word, dec, mode) {
                    best = best.max(cand.len());
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    Ok(CapitalN {
        value: best,
        lower_bound_only,
    })
}

/// The iteration bound: closed formula for uniform speed, pruned
/// enumeration otherwise.
pub fn compute_capital_n(dec: &Decomposition, mode: AllowMode, budget: usize) -> Result<CapitalN> {
    match mode {
        AllowMode::ExactUniform => Ok(CapitalN {
            value: capital_n_formula(dec),
            lower_bound_only: false,
        }),
        sampled => capital_n_enumerate(dec, sampled, budget),
    }
}

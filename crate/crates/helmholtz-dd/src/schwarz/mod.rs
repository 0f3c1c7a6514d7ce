//! Overlapping Schwarz methods on the discrete level: the parallel
//! fixed-point / preconditioner built from weighted prolongations of local
//! solves, and sequential sweeping under arbitrary ordering sequences.

pub mod ordering;

pub use ordering::{
    check_exhaustive, generate_lexicographic, generate_snake, min_exhaustive_size,
    ExhaustiveCheck, Ordering,
};

use std::time::Instant;

use crate::assembly::SparseComplexSystem;
use crate::decomposition::{Decomposition, PartitionOfUnity, TransferOps};
use crate::error::Error;
use crate::par::{self, Parallelism};
use crate::solvers::{norm2, Factorization, LinearOp};
use crate::{Result, C64};

/// Residual growth factor at which an iteration is declared divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Everything needed to run one Schwarz method on one assembled problem.
pub struct SchwarzContext<'a> {
    pub dec: &'a Decomposition,
    pub pou: &'a PartitionOfUnity,
    pub transfer: &'a TransferOps,
    pub global: &'a SparseComplexSystem,
    pub local_factors: &'a [Factorization],
    pub mode: Parallelism,
}

/// Convergence record of a Schwarz iteration.
///
/// `rel_residuals[n]` is the relative residual after `n` units (parallel
/// applications or sweeps); entry 0 is 1 by the zero-initial-guess
/// convention. For sequential methods one reported "iteration" of the
/// method spans `sweeps_per_round` sweeps.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IterationTrace {
    pub method: String,
    /// Unit of one entry: "iteration" (parallel) or "sweep" (sequential).
    pub units: String,
    pub sweeps_per_round: usize,
    pub rel_residuals: Vec<f64>,
    /// Per-unit, per-subdomain local physical error norms
    /// `|| chi_j (u - u_j) ||` (empty without a reference solution).
    pub local_errors: Vec<Vec<f64>>,
    pub wall_ms: Vec<f64>,
    pub diverged: bool,
    pub converged: bool,
    pub iterations: usize,
}

impl IterationTrace {
    fn new(method: &str, units: &str, sweeps_per_round: usize) -> Self {
        IterationTrace {
            method: method.to_string(),
            units: units.to_string(),
            sweeps_per_round,
            rel_residuals: vec![1.0],
            local_errors: Vec::new(),
            wall_ms: Vec::new(),
            diverged: false,
            converged: false,
            iterations: 0,
        }
    }

    /// First unit index at which the relative residual drops below `tol`.
    pub fn units_to_tol(&self, tol: f64) -> Option<usize> {
        self.rel_residuals.iter().position(|r| *r < tol)
    }

    /// Writes the trace as CSV with columns `iter, rel_residual, wall_ms`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = String::new();
        out.push_str(&format!(
            "# method={} units={} sweeps_per_round={}\n",
            self.method, self.units, self.sweeps_per_round
        ));
        out.push_str("iter,rel_residual,wall_ms\n");
        for (i, r) in self.rel_residuals.iter().enumerate() {
            let ms = if i == 0 {
                0.0
            } else {
                self.wall_ms.get(i - 1).copied().unwrap_or(0.0)
            };
            out.push_str(&format!("{i},{r:e},{ms}\n"));
        }
        std::fs::write(path, out).map_err(io_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialises")
    }
}

/// Stopping rule for the fixed-point iterations.
#[derive(Debug, Clone, Copy)]
pub enum StopRule {
    /// Run exactly this many units (iterations or rounds).
    Units(usize),
    /// Stop at the first unit (not before `min_units`) with relative
    /// residual below `tol`, up to `max_units`.
    Tol {
        tol: f64,
        max_units: usize,
        min_units: usize,
    },
}

impl StopRule {
    pub fn tol(tol: f64, max_units: usize) -> Self {
        StopRule::Tol {
            tol,
            max_units,
            min_units: 0,
        }
    }

    fn max_units(&self) -> usize {
        match *self {
            StopRule::Units(n) => n,
            StopRule::Tol { max_units, .. } => max_units,
        }
    }

    fn tol_after(&self, unit: usize) -> Option<f64> {
        match *self {
            StopRule::Units(_) => None,
            StopRule::Tol {
                tol, min_units, ..
            } => (unit >= min_units).then_some(tol),
        }
    }

    fn is_tol(&self) -> bool {
        matches!(self, StopRule::Tol { .. })
    }
}

/// One application of the additive-corrections operator: the sum of
/// weighted prolongations of local solves of the restricted residual.
pub fn ras_apply(ctx: &SchwarzContext, r: &[C64]) -> Result<Vec<C64>> {
    let (corr, _) = ras_apply_with_locals(ctx, r)?;
    Ok(corr)
}

/// As [`ras_apply`], also returning the local correctors.
pub fn ras_apply_with_locals(
    ctx: &SchwarzContext,
    r: &[C64],
) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let n_sub = ctx.dec.n();
    let locals = par::try_map_indexed(ctx.mode, n_sub, |j| -> Result<Vec<C64>> {
        let rloc = ctx.transfer.restrict_dual(j, r)?;
        Ok(ctx.local_factors[j].solve(&rloc))
    })?;
    let mut corr = vec![C64::new(0.0, 0.0); ctx.global.n];
    for (j, c) in locals.iter().enumerate() {
        ctx.transfer
            .weighted_prolong_add(j, &ctx.pou.chi[j], c, &mut corr)?;
    }
    Ok((corr, locals))
}

fn local_error_norms(
    ctx: &SchwarzContext,
    reference: &[C64],
    locals: &[Vec<C64>],
) -> Vec<f64> {
    (0..ctx.dec.n())
        .map(|j| {
            let w = &ctx.transfer.windows[j];
            let nx = w.n_nodes_x();
            let mut acc = 0.0;
            for (local_idx, uj) in locals[j].iter().enumerate() {
                let (lx, ly) = (local_idx % nx, local_idx / nx);
                let (ix, iy) = (w.ix0 + lx, w.iy0 + ly);
                let chi = ctx.pou.chi[j].get(ix, iy);
                if chi != 0.0 {
                    let diff = reference[iy * ctx.transfer.n_nodes_x + ix] - uj;
                    acc += (chi * diff.norm()).powi(2);
                }
            }
            acc.sqrt()
        })
        .collect()
}

/// Parallel overlapping Schwarz as a preconditioned Richardson iteration:
/// `u <- u + B^-1 (f - A u)`. With `reference` set, the trace records the
/// per-subdomain local physical errors.
pub fn run_parallel(
    ctx: &SchwarzContext,
    f: &[C64],
    u0: Option<&[C64]>,
    stop: StopRule,
    reference: Option<&[C64]>,
) -> Result<(Vec<C64>, IterationTrace)> {
    let n = ctx.global.n;
    let mut u = u0.map_or_else(|| vec![C64::new(0.0, 0.0); n], <[C64]>::to_vec);
    let mut trace = IterationTrace::new("ras", "iteration", 1);

    let mut r = residual(ctx.global, f, &u);
    let r0 = norm2(&r);
    if r0 == 0.0 {
        trace.converged = true;
        return Ok((u, trace));
    }

    for it in 1..=stop.max_units() {
        let t0 = Instant::now();
        let (corr, locals) = ras_apply_with_locals(ctx, &r)?;
        for i in 0..n {
            u[i] += corr[i];
        }
        r = residual(ctx.global, f, &u);
        let rel = norm2(&r) / r0;
        trace.wall_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        trace.rel_residuals.push(rel);
        if let Some(u_ref) = reference {
            // local iterate of this step: the pre-update combined iterate
            // restricted to the subdomain, plus the corrector
            let mut u_prev = u.clone();
            for i in 0..n {
                u_prev[i] -= corr[i];
            }
            let local_iterates: Vec<Vec<C64>> = (0..ctx.dec.n())
                .map(|j| {
                    let mut v = ctx.transfer.restrict(j, &u_prev).expect("ctx is consistent");
                    for (vi, ci) in v.iter_mut().zip(&locals[j]) {
                        *vi += ci;
                    }
                    v
                })
                .collect();
            trace
                .local_errors
                .push(local_error_norms(ctx, u_ref, &local_iterates));
        }
        trace.iterations = it;
        if rel > DIVERGENCE_FACTOR {
            trace.diverged = true;
            break;
        }
        if let Some(tol) = stop.tol_after(it) {
            if rel < tol {
                trace.converged = true;
                break;
            }
        }
    }
    if !trace.diverged && !stop.is_tol() {
        trace.converged = true;
    }
    Ok((u, trace))
}

/// Sequential overlapping Schwarz under a schedule of orderings. One round
/// runs every ordering in the schedule once; the stop rule counts rounds
/// and the trace records one entry per sweep.
pub fn run_sequential(
    ctx: &SchwarzContext,
    f: &[C64],
    u0: Option<&[C64]>,
    schedule: &[Ordering],
    stop: StopRule,
    reference: Option<&[C64]>,
) -> Result<(Vec<C64>, IterationTrace)> {
    if schedule.is_empty() {
        return Err(Error::InvalidConfig("empty sweep schedule".into()));
    }
    for o in schedule {
        if o.n() != ctx.dec.n() {
            return Err(Error::InvalidConfig(format!(
                "ordering over {} subdomains used with {}",
                o.n(),
                ctx.dec.n()
            )));
        }
    }
    let n = ctx.global.n;
    let mut u_star = u0.map_or_else(|| vec![C64::new(0.0, 0.0); n], <[C64]>::to_vec);
    let mut locals: Vec<Vec<C64>> = (0..ctx.dec.n())
        .map(|j| ctx.transfer.restrict(j, &u_star))
        .collect::<Result<_>>()?;
    let mut trace = IterationTrace::new("rms", "sweep", schedule.len());

    let r0 = norm2(&residual(ctx.global, f, &u_star));
    if r0 == 0.0 {
        trace.converged = true;
        return Ok((u_star, trace));
    }

    'rounds: for round in 1..=stop.max_units() {
        for ord in schedule {
            let t0 = Instant::now();
            for &j in ord.visit() {
                let r = residual(ctx.global, f, &u_star);
                let rloc = ctx.transfer.restrict_dual(j, &r)?;
                let c = ctx.local_factors[j].solve(&rloc);
                // u_j <- u*|_j + c ; u* <- u* + chi_j (u_j - u_j_old)
                let mut u_j = ctx.transfer.restrict(j, &u_star)?;
                for (v, ci) in u_j.iter_mut().zip(&c) {
                    *v += ci;
                }
                let delta: Vec<C64> = u_j
                    .iter()
                    .zip(&locals[j])
                    .map(|(new, old)| new - old)
                    .collect();
                ctx.transfer
                    .weighted_prolong_add(j, &ctx.pou.chi[j], &delta, &mut u_star)?;
                locals[j] = u_j;
            }
            let rel = norm2(&residual(ctx.global, f, &u_star)) / r0;
            trace.wall_ms.push(t0.elapsed().as_secs_f64() * 1e3);
            trace.rel_residuals.push(rel);
            if let Some(u_ref) = reference {
                trace
                    .local_errors
                    .push(local_error_norms(ctx, u_ref, &locals));
            }
            if rel > DIVERGENCE_FACTOR {
                trace.diverged = true;
                trace.iterations = round;
                break 'rounds;
            }
        }
        trace.iterations = round;
        if let Some(tol) = stop.tol_after(round) {
            if trace.rel_residuals.last().copied().unwrap_or(1.0) < tol {
                trace.converged = true;
                break;
            }
        }
    }
    if !trace.diverged && !stop.is_tol() {
        trace.converged = true;
    }
    Ok((u_star, trace))
}

/// `f - A u`.
pub fn residual(a: &SparseComplexSystem, f: &[C64], u: &[C64]) -> Vec<C64> {
    let mut r = a.matvec_alloc(u);
    for i in 0..a.n {
        r[i] = f[i] - r[i];
    }
    r
}

/// Left-preconditioned operator `x -> B^-1 A x` for GMRES acceleration of
/// the parallel method.
pub struct RasPreconditionedOp<'a> {
    pub ctx: &'a SchwarzContext<'a>,
}

impl LinearOp for RasPreconditionedOp<'_> {
    fn dim(&self) -> usize {
        self.ctx.global.n
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let ax = self.ctx.global.matvec_alloc(x);
        let out = ras_apply(self.ctx, &ax).expect("consistent context");
        y.copy_from_slice(&out);
    }
}

/// `B^-1 f`, the right-hand side of the left-preconditioned system.
pub fn ras_preconditioned_rhs(ctx: &SchwarzContext, f: &[C64]) -> Result<Vec<C64>> {
    ras_apply(ctx, f)
}

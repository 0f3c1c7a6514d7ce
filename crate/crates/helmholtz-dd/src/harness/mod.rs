//! Experiment orchestration: builds the discrete problem for each
//! `(k, config)` cell, runs the selected Schwarz method, and collects the
//! iteration counts, theorem-budget residual reductions and divergence
//! flags into a [`Report`].

pub mod config;
pub mod report;

pub use config::{
    parse_experiments, AbsorberSpec, DecompositionSpec, DiffusionSpec, ExperimentConfig,
    ExperimentFile, MethodSpec, Profile, ScheduleSpec, WaveSpeedSpec,
};
pub use report::{Report, ReportFormat, ReportMeta, ReportRow};

use std::time::Instant;

use crate::absorber::{Absorber, CapProfile, ScalingProfile, SubdomainScaling};
use crate::assembly::{
    assemble_load, assemble_system, DiffusionField, SparseComplexSystem, WaveSpeedField,
};
use crate::decomposition::{
    build_pou, make_checkerboard, Decomposition, PartitionOfUnity, PouParams, TransferOps,
};
use crate::error::Error;
use crate::geometry::grid_denominator;
use crate::mesh::{build_mesh, HRule, StructuredMesh};
use crate::par::Parallelism;
use crate::schwarz::{
    self, generate_lexicographic, generate_snake, run_parallel, run_sequential, Ordering,
    RasPreconditionedOp, SchwarzContext, StopRule,
};
use crate::solvers::{gmres, norm2, sparse_factorize, FactorBackend, Factorization, GmresOptions};
use crate::{Result, C64};

/// Fully assembled problem for one `(k, config)` cell.
pub struct ProblemSetup {
    pub mesh: StructuredMesh,
    pub dec: Decomposition,
    pub pou: PartitionOfUnity,
    pub transfer: TransferOps,
    pub global: SparseComplexSystem,
    pub locals: Vec<SparseComplexSystem>,
    pub local_factors: Vec<Factorization>,
    pub load: Vec<C64>,
    pub mode: Parallelism,
}

impl ProblemSetup {
    pub fn context(&self) -> SchwarzContext<'_> {
        SchwarzContext {
            dec: &self.dec,
            pou: &self.pou,
            transfer: &self.transfer,
            global: &self.global,
            local_factors: &self.local_factors,
            mode: self.mode,
        }
    }
}

fn scaling_profile(spec: &AbsorberSpec, kappa: f64) -> Result<ScalingProfile> {
    match *spec {
        AbsorberSpec::PmlCubic { alpha } => ScalingProfile::cubic(alpha),
        AbsorberSpec::PmlSmooth {
            kappa_lin_fraction,
            slope,
        } => ScalingProfile::smooth_linear_tail(kappa_lin_fraction * kappa, slope),
        AbsorberSpec::Cap { .. } => unreachable!("CAP handled separately"),
    }
}

/// Absorber of one (sub)domain per the config.
fn absorber_for(
    spec: &AbsorberSpec,
    kappa: f64,
    inner: &crate::geometry::Rect,
    widths: [f64; 4],
) -> Result<Absorber> {
    match *spec {
        AbsorberSpec::Cap {
            amplitude,
            ramp_order,
        } => Ok(Absorber::Cap {
            potential: CapProfile::new(amplitude, ramp_order, *inner, widths)?,
        }),
        _ => Ok(Absorber::Pml(SubdomainScaling::new(
            scaling_profile(spec, kappa)?,
            inner,
        ))),
    }
}

/// Builds mesh, decomposition, partition of unity, transfer operators,
/// all systems and local factorisations for one wavenumber.
pub fn build_setup(cfg: &ExperimentConfig, k: f64) -> Result<ProblemSetup> {
    let lengths = (1.0, 1.0);
    let dims = cfg.decomposition.dims();
    let dec = make_checkerboard(dims, cfg.delta, cfg.kappa, cfg.kappa0(), lengths)?;

    // mesh aligned with every breakpoint of the geometry
    let denom = match cfg.h_denominator {
        Some(d) => d,
        None => {
            let mut pts = dec.breakpoints();
            pts.push(cfg.kappa);
            pts.push(lengths.0);
            pts.push(lengths.1);
            grid_denominator(&pts, 1 << 20)
        }
    };
    let mesh = build_mesh(
        lengths.0,
        lengths.1,
        cfg.kappa,
        k,
        cfg.degree,
        match cfg.h_denominator {
            Some(d) => HRule::Fixed { denominator: d },
            None => HRule::Auto {
                grid_denominator: denom,
            },
        },
    )?;

    // coarse memory gate before any large allocation
    let n_global = mesh.n_nodes();
    let est_mb = (n_global as f64 * 1.0e3 / 1.0e6).ceil() as usize;
    if est_mb > cfg.memory_budget_mb {
        return Err(Error::BudgetExceeded(format!(
            "estimated {est_mb} MB for {n_global} unknowns exceeds the {} MB budget",
            cfg.memory_budget_mb
        )));
    }

    let pou = build_pou(
        &dec,
        &mesh,
        PouParams {
            shrink: cfg.pou_shrink,
            boundary_scale: cfg.pou_boundary_scale,
        },
    )?;
    let transfer = TransferOps::new(&dec, &mesh)?;

    let speed = match cfg.wave_speed {
        WaveSpeedSpec::Uniform => WaveSpeedField::uniform(),
        WaveSpeedSpec::Focusing => WaveSpeedField::focusing((0.5, 0.5)),
        WaveSpeedSpec::Defocusing => WaveSpeedField::defocusing((0.5, 0.5)),
    };
    let diffusion = match cfg.diffusion {
        DiffusionSpec::Identity => DiffusionField::Identity,
        DiffusionSpec::CrossBump => DiffusionField::CrossBump { center: (0.5, 0.5) },
    };
    let mode = Parallelism::auto();

    let domain_rect = crate::geometry::Rect::new(0.0, lengths.0, 0.0, lengths.1);
    let global_absorber = absorber_for(&cfg.absorber, cfg.kappa, &domain_rect, [cfg.kappa; 4])?;
    let global = assemble_system(
        &mesh,
        mesh.full_window(),
        &global_absorber,
        &speed,
        &diffusion,
        k,
        None,
        mode,
    )?;

    let mut locals = Vec::with_capacity(dec.n());
    for (j, sub) in dec.subdomains.iter().enumerate() {
        let absorber = absorber_for(&cfg.absorber, cfg.kappa, &sub.interior, sub.widths)?;
        let window = mesh.window(&sub.extended)?;
        locals.push(assemble_system(
            &mesh, window, &absorber, &speed, &diffusion, k,
            Some(j), mode,
        )?);
    }
    let local_factors = locals
        .iter()
        .map(|sys| sparse_factorize(sys, FactorBackend::Auto))
        .collect::<Result<Vec<_>>>()?;

    let load = assemble_load(&mesh, mesh.full_window(), k, (cfg.source[0], cfg.source[1]))?;

    Ok(ProblemSetup {
        mesh,
        dec,
        pou,
        transfer,
        global,
        locals,
        local_factors,
        load,
        mode,
    })
}

/// Sweep schedule selected by the config.
pub fn schedule_for(spec: ScheduleSpec, dec: &Decomposition) -> Vec<Ordering> {
    match spec {
        ScheduleSpec::ForwardBackward => {
            let fwd = Ordering::identity(dec.n());
            let bwd = fwd.reversed();
            vec![fwd, bwd]
        }
        ScheduleSpec::Lex => generate_lexicographic(dec.dims),
        ScheduleSpec::Snake => generate_snake(dec.dims),
    }
}

/// Iteration budget after which the theory predicts the error to be
/// negligible: `N` parallel applications for strips,
/// `N1 + N2 - 1` for checkerboards, and one schedule round (in sweeps)
/// for the sequential methods.
pub fn theorem_budget(cfg: &ExperimentConfig, dec: &Decomposition) -> usize {
    match cfg.method {
        MethodSpec::RasFixedPoint | MethodSpec::RasGmres => {
            crate::rays::capital_n_formula(dec)
        }
        MethodSpec::Rms { schedule } => schedule_for(schedule, dec).len(),
    }
}

/// Runs one `(k, config)` cell.
pub fn run_cell(cfg: &ExperimentConfig, k: f64) -> Result<ReportRow> {
    let t0 = Instant::now();
    let setup = build_setup(cfg, k)?;
    let ctx = setup.context();
    let f = &setup.load;
    let budget = theorem_budget(cfg, &setup.dec);

    let case = match cfg.diffusion {
        DiffusionSpec::Identity => cfg.wave_speed.label().to_string(),
        DiffusionSpec::CrossBump => format!("{}+cross_bump", cfg.wave_speed.label()),
    };
    let mut row = ReportRow {
        k,
        method: cfg.method.label(),
        n_or_dims: cfg.decomposition.label(),
        case,
        iters_fp: None,
        iters_gmres: None,
        rho: None,
        diverged: false,
        dofs: setup.global.n,
        wall_ms: 0.0,
    };

    match cfg.method {
        MethodSpec::RasFixedPoint | MethodSpec::RasGmres => {
            let stop = StopRule::Tol {
                tol: cfg.tol,
                max_units: cfg.max_iters.max(budget),
                min_units: budget,
            };
            let (_, trace) = run_parallel(&ctx, f, None, stop, None)?;
            row.diverged = trace.diverged;
            row.iters_fp = trace.units_to_tol(cfg.tol);
            row.rho = trace.rel_residuals.get(budget).copied();

            if matches!(cfg.method, MethodSpec::RasGmres) {
                // left-preconditioned GMRES; iteration counts are against
                // the true (unpreconditioned) residual
                let op = RasPreconditionedOp { ctx: &ctx };
                let rhs = schwarz::ras_preconditioned_rhs(&ctx, f)?;
                let x0 = vec![C64::new(0.0, 0.0); setup.global.n];
                let result = gmres(
                    &op,
                    &rhs,
                    &x0,
                    &GmresOptions {
                        tol: cfg.tol * 1e-2,
                        max_iters: cfg.max_iters.max(budget),
                        keep_basis: true,
                    },
                );
                let f_norm = norm2(f);
                row.iters_gmres = (0..=result.trace.iterations).find(|&n| {
                    let xn = result.iterate(n).expect("basis kept");
                    let r = schwarz::residual(&setup.global, f, &xn);
                    norm2(&r) < cfg.tol * f_norm
                });
            }
        }
        MethodSpec::Rms { schedule } => {
            let orderings = schedule_for(schedule, &setup.dec);
            let stop = StopRule::Tol {
                tol: cfg.tol,
                max_units: cfg.max_iters.max(1),
                min_units: 1,
            };
            let (_, trace) = run_sequential(&ctx, f, None, &orderings, stop, None)?;
            row.diverged = trace.diverged;
            // counts in rounds: first round boundary below tolerance
            let per_round = orderings.len();
            row.iters_fp = (0..)
                .map(|r| r * per_round)
                .take_while(|idx| *idx < trace.rel_residuals.len())
                .position(|idx| trace.rel_residuals[idx] < cfg.tol);
            // residual reduction after one full round of sweeps
            row.rho = trace.rel_residuals.get(per_round).copied();
        }
    }

    row.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(row)
}

impl ProblemSetup {
    /// Reference discrete solution by a global direct solve.
    pub fn direct_solution(&self) -> Result<Vec<C64>> {
        let factor = sparse_factorize(&self.global, FactorBackend::Auto)?;
        Ok(factor.solve(&self.load))
    }
}

/// Runs all `(k, config)` cells of one experiment config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let mut report = Report {
        meta: ReportMeta {
            seed: cfg.seed,
            ..ReportMeta::default()
        },
        rows: Vec::new(),
    };
    for &k in &cfg.k {
        let row = match run_cell(cfg, k) {
            Ok(row) => row,
            // divergence is recorded per row; only real failures propagate
            Err(e) => return Err(e),
        };
        report.rows.push(row);
    }
    Ok(report)
}

/// Runs several experiment configs into one combined report.
pub fn run_experiments(cfgs: &[ExperimentConfig]) -> Result<Report> {
    let mut report = Report::default();
    for (i, cfg) in cfgs.iter().enumerate() {
        if i == 0 {
            report.meta.seed = cfg.seed;
        }
        let part = run_experiment(cfg)?;
        report.rows.extend(part.rows);
    }
    Ok(report)
}

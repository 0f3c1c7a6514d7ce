//! Schwarz-method correctness against independent oracles: the dense
//! preconditioner assembly, fixed-point consistency, operational
//! identities and relabelling equivariance.

mod common;

use helmholtz_dd::decomposition::{Decomposition, PartitionOfUnity, TransferOps};
use helmholtz_dd::harness::{build_setup, DecompositionSpec, ExperimentConfig, ProblemSetup};
use helmholtz_dd::par::Parallelism;
use helmholtz_dd::schwarz::{
    ras_apply, ras_preconditioned_rhs, residual, run_parallel, run_sequential, Ordering,
    RasPreconditionedOp, SchwarzContext, StopRule,
};
use helmholtz_dd::solvers::{
    gmres, norm2, sparse_factorize, FactorBackend, Factorization, GmresOptions,
};
use helmholtz_dd::C64;

fn tiny_cfg(dec: DecompositionSpec, k: f64, denominator: u64, degree: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(dec, vec![k]);
    cfg.degree = degree;
    cfg.h_denominator = Some(denominator);
    // a wide layer keeps the low-wavenumber test iterations strongly
    // convergent
    cfg.kappa = 0.1;
    cfg
}

fn tiny_setup(n_strip: usize, k: f64) -> ProblemSetup {
    build_setup(
        &tiny_cfg(DecompositionSpec::Strip { n: n_strip }, k, 80, 1),
        k,
    )
    .unwrap()
}

#[test]
fn ras_apply_matches_dense_oracle() {
    // independently coded dense algebra: B^-1 r = sum_j Rw_j^T A_j^-1 D_j R_j r
    let setup = tiny_setup(2, 5.0);
    let ctx = setup.context();
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let r: Vec<C64> = (0..setup.global.n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();

    let fast = ras_apply(&ctx, &r).unwrap();

    let mut oracle = vec![C64::new(0.0, 0.0); setup.global.n];
    for j in 0..setup.dec.n() {
        let w = &setup.transfer.windows[j];
        let dense = common::to_dense(&setup.locals[j]);
        // restriction with boundary rows zeroed
        let nx = w.n_nodes_x();
        let mut rloc = Vec::with_capacity(setup.locals[j].n);
        for iy in w.iy0..=w.iy1 {
            for ix in w.ix0..=w.ix1 {
                let local = (iy - w.iy0) * nx + (ix - w.ix0);
                let boundary = w.is_window_boundary(local);
                rloc.push(if boundary {
                    C64::new(0.0, 0.0)
                } else {
                    r[iy * setup.mesh.n_nodes_x + ix]
                });
            }
        }
        let sol = common::dense_solve(&dense, &rloc);
        for (local, v) in sol.iter().enumerate() {
            let (lx, ly) = (local % nx, local / nx);
            let (ix, iy) = (w.ix0 + lx, w.iy0 + ly);
            let chi = setup.pou.chi[j].get(ix, iy);
            oracle[iy * setup.mesh.n_nodes_x + ix] += chi * v;
        }
    }

    let scale = common::norm2(&oracle);
    let diff: f64 = fast
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(diff <= 1e-10 * scale, "relative deviation {}", diff / scale);
}

#[test]
fn single_subdomain_collapses_to_direct_solve() {
    let setup = tiny_setup(1, 5.0);
    let ctx = setup.context();
    let (u, trace) = run_parallel(&ctx, &setup.load, None, StopRule::Units(1), None).unwrap();
    let r = residual(&setup.global, &setup.load, &u);
    assert!(norm2(&r) <= 1e-10 * norm2(&setup.load));
    assert_eq!(trace.iterations, 1);
    assert!(trace.rel_residuals[1] < 1e-10);

    // one sweep of the sequential method with the identity ordering is exact
    let schedule = [Ordering::identity(1)];
    let (u2, _) = run_sequential(
        &ctx,
        &setup.load,
        None,
        &schedule,
        StopRule::Units(1),
        None,
    )
    .unwrap();
    let r2 = residual(&setup.global, &setup.load, &u2);
    assert!(norm2(&r2) <= 1e-10 * norm2(&setup.load));
}

#[test]
fn zero_residual_maps_to_zero_correction() {
    let setup = tiny_setup(2, 5.0);
    let ctx = setup.context();
    let zero = vec![C64::new(0.0, 0.0); setup.global.n];
    let corr = ras_apply(&ctx, &zero).unwrap();
    assert!(norm2(&corr) == 0.0);
}

#[test]
fn fixed_point_property_both_methods() {
    // seeding with the direct solution keeps the residual at solver level
    let setup = tiny_setup(2, 5.0);
    let ctx = setup.context();
    let u_direct = setup.direct_solution().unwrap();
    let f_norm = norm2(&setup.load);

    let mut u = u_direct.clone();
    for _ in 0..5 {
        let r = residual(&setup.global, &setup.load, &u);
        let corr = ras_apply(&ctx, &r).unwrap();
        for i in 0..u.len() {
            u[i] += corr[i];
        }
        assert!(norm2(&residual(&setup.global, &setup.load, &u)) <= 1e-10 * f_norm);
    }

    let fwd = Ordering::identity(2);
    let schedule = [fwd.clone(), fwd.reversed()];
    let (u_seq, _) = run_sequential(
        &ctx,
        &setup.load,
        Some(&u_direct),
        &schedule,
        StopRule::Units(5),
        None,
    )
    .unwrap();
    assert!(norm2(&residual(&setup.global, &setup.load, &u_seq)) <= 1e-10 * f_norm);
}

#[test]
fn run_parallel_equals_manual_richardson() {
    let setup = tiny_setup(2, 5.0);
    let ctx = setup.context();
    let (u, _) = run_parallel(&ctx, &setup.load, None, StopRule::Units(3), None).unwrap();

    let mut manual = vec![C64::new(0.0, 0.0); setup.global.n];
    for _ in 0..3 {
        let r = residual(&setup.global, &setup.load, &manual);
        let corr = ras_apply(&ctx, &r).unwrap();
        for i in 0..manual.len() {
            manual[i] += corr[i];
        }
    }
    assert_eq!(u, manual);
}

#[test]
fn error_reconstruction_identity() {
    // sum_j chi_j (u - u_j^n) = u - u^n at the nodes, by the prolongation
    // identity
    let setup = tiny_setup(2, 5.0);
    let ctx = setup.context();
    let u_direct = setup.direct_solution().unwrap();

    let mut u = vec![C64::new(0.0, 0.0); setup.global.n];
    for _ in 0..3 {
        let r = residual(&setup.global, &setup.load, &u);
        let (corr, locals) = helmholtz_dd::schwarz::ras_apply_with_locals(&ctx, &r).unwrap();
        // local iterates of this step
        let mut recon = vec![C64::new(0.0, 0.0); setup.global.n];
        for j in 0..setup.dec.n() {
            let mut u_j = setup.transfer.restrict(j, &u).unwrap();
            for (v, c) in u_j.iter_mut().zip(&locals[j]) {
                *v += c;
            }
            let err_j: Vec<C64> = {
                let u_ref = setup.transfer.restrict(j, &u_direct).unwrap();
                u_ref.iter().zip(&u_j).map(|(a, b)| a - b).collect()
            };
            setup
                .transfer
                .weighted_prolong_add(j, &setup.pou.chi[j], &err_j, &mut recon)
                .unwrap();
        }
        for i in 0..u.len() {
            u[i] += corr[i];
        }
        // recon should equal u_direct - u (the new combined iterate)
        let max_ref = u_direct.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        for i in 0..u.len() {
            let expect = u_direct[i] - u[i];
            assert!(
                (recon[i] - expect).norm() <= 1e-11 * max_ref.max(1.0),
                "node {i}: {} vs {}",
                recon[i],
                expect
            );
        }
    }
}

#[test]
fn sequential_is_equivariant_under_relabelling() {
    // swapping the subdomain labels and conjugating the ordering leaves the
    // iterates unchanged
    let setup = tiny_setup(2, 5.0);
    let ctx = setup.context();
    let fwd = Ordering::identity(2);
    let (u_a, _) = run_sequential(
        &ctx,
        &setup.load,
        None,
        &[fwd.clone()],
        StopRule::Units(2),
        None,
    )
    .unwrap();

    // relabelled context: subdomain arrays in reverse order
    let dec2 = Decomposition {
        subdomains: setup.dec.subdomains.iter().rev().cloned().collect(),
        ..setup.dec.clone()
    };
    let pou2 = PartitionOfUnity {
        chi: setup.pou.chi.iter().rev().cloned().collect(),
        chi_gt: setup.pou.chi_gt.iter().rev().cloned().collect(),
        chi_tilde: setup.pou.chi_tilde.iter().rev().cloned().collect(),
        mismatch: setup.pou.mismatch.iter().rev().cloned().collect(),
    };
    let transfer2 = TransferOps {
        windows: setup.transfer.windows.iter().rev().cloned().collect(),
        ..setup.transfer.clone()
    };
    let factors2: Vec<Factorization> = setup
        .locals
        .iter()
        .rev()
        .map(|sys| sparse_factorize(sys, FactorBackend::Auto).unwrap())
        .collect();
    let ctx2 = SchwarzContext {
        dec: &dec2,
        pou: &pou2,
        transfer: &transfer2,
        global: &setup.global,
        local_factors: &factors2,
        mode: Parallelism::auto(),
    };
    // conjugated ordering: visit relabelled subdomain 1 first (= old 0)
    let conj = Ordering::from_visit(vec![1, 0]).unwrap();
    let (u_b, _) = run_sequential(
        &ctx2,
        &setup.load,
        None,
        &[conj],
        StopRule::Units(2),
        None,
    )
    .unwrap();

    let scale = norm2(&u_a).max(1e-30);
    let diff: f64 = u_a
        .iter()
        .zip(&u_b)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(diff <= 1e-12 * scale, "relative deviation {}", diff / scale);
}

#[test]
fn preconditioned_gmres_agrees_with_direct_solve() {
    let setup = tiny_setup(2, 10.0);
    let ctx = setup.context();
    let u_direct = setup.direct_solution().unwrap();

    let op = RasPreconditionedOp { ctx: &ctx };
    let rhs = ras_preconditioned_rhs(&ctx, &setup.load).unwrap();
    let x0 = vec![C64::new(0.0, 0.0); setup.global.n];
    let result = gmres(
        &op,
        &rhs,
        &x0,
        &GmresOptions {
            tol: 1e-8,
            max_iters: 100,
            keep_basis: false,
        },
    );
    assert!(result.trace.converged);
    let scale = norm2(&u_direct);
    let diff: f64 = result
        .x
        .iter()
        .zip(&u_direct)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(diff <= 1e-5 * scale, "relative deviation {}", diff / scale);
}

#[test]
fn trace_units_and_csv_export() {
    let setup = tiny_setup(2, 5.0);
    let ctx = setup.context();
    let (_, trace) = run_parallel(
        &ctx,
        &setup.load,
        None,
        StopRule::tol(1e-8, 30),
        None,
    )
    .unwrap();
    assert_eq!(trace.rel_residuals[0], 1.0);
    assert!(trace.converged);
    let n_tol = trace.units_to_tol(1e-8).unwrap();
    assert!(n_tol <= trace.iterations);

    let dir = std::env::temp_dir().join("hdd_trace_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.csv");
    trace.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# method=ras"));
    assert_eq!(lines.next().unwrap(), "iter,rel_residual,wall_ms");
    assert_eq!(text.lines().count(), 2 + trace.rel_residuals.len());
    // JSON export parses back
    let parsed: serde_json::Value = serde_json::from_str(&trace.to_json()).unwrap();
    assert_eq!(parsed["method"], "ras");
}

#[test]
fn local_error_diagnostics_recorded_with_reference() {
    let setup = tiny_setup(2, 5.0);
    let ctx = setup.context();
    let u_direct = setup.direct_solution().unwrap();
    let (_, trace) = run_parallel(
        &ctx,
        &setup.load,
        None,
        StopRule::Units(3),
        Some(&u_direct),
    )
    .unwrap();
    assert_eq!(trace.local_errors.len(), 3);
    for per_iter in &trace.local_errors {
        assert_eq!(per_iter.len(), 2);
    }
    // the local physical errors shrink as the iteration converges
    let first: f64 = trace.local_errors[0].iter().sum();
    let last: f64 = trace.local_errors[2].iter().sum();
    assert!(last < first);
}

//! `helmdd`: run the Helmholtz domain-decomposition experiments, query the
//! ray/word machinery, and generate or check sweep orderings.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use helmholtz_dd::decomposition::make_checkerboard;
use helmholtz_dd::harness::{self, Profile, ReportFormat};
use helmholtz_dd::par::Parallelism;
use helmholtz_dd::rays::{self, AllowMode, SampleParams, Word};
use helmholtz_dd::schwarz::{check_exhaustive, generate_lexicographic, generate_snake, Ordering};
use helmholtz_dd::Error;

#[derive(Parser)]
#[command(name = "helmdd", version, about = "2-D Helmholtz solver with overlapping Schwarz methods and ray-based convergence prediction")]
struct Cli {
    /// Size of the worker thread pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiments described in a TOML config file.
    Run(RunArgs),
    /// Ray-tracing queries: allowed words and the iteration bound.
    Rays {
        #[command(subcommand)]
        cmd: RaysCmd,
    },
    /// Generate or check sweep-ordering sequences.
    Orderings {
        #[command(subcommand)]
        cmd: OrderingsCmd,
    },
    /// Quick invariant suite.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output report path.
    #[arg(long)]
    out: PathBuf,
    /// Report format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Wavenumber grid for experiments without an explicit k list.
    #[arg(long, value_parser = parse_profile)]
    profile: Option<Profile>,
}

#[derive(Subcommand)]
enum RaysCmd {
    /// Longest-allowed-word iteration bound for a checkerboard.
    #[command(alias = "N")]
    N {
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        /// Wave speed: uniform (exact) | focusing | defocusing (sampled).
        #[arg(long, default_value = "uniform")]
        speed: String,
    },
    /// Whether a word of subdomain indices (1-based, comma separated)
    /// is allowed.
    Allowed {
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        #[arg(long)]
        word: String,
        #[arg(long, default_value = "uniform")]
        speed: String,
    },
}

#[derive(Subcommand)]
enum OrderingsCmd {
    /// Print a generated ordering sequence as rank tableaux.
    Generate {
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        /// lex | snake | fb
        #[arg(long, default_value = "lex")]
        kind: String,
    },
    /// Check a generated sequence for exhaustiveness.
    Check {
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        /// lex | snake | fb
        #[arg(long)]
        seq: String,
    },
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    match s {
        "desk" => Ok(Profile::Desk),
        "paper" => Ok(Profile::Paper),
        other => Err(format!("unknown profile {other:?} (desk|paper)")),
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split('x').collect();
    match parts.as_slice() {
        [n] => n
            .parse()
            .map(|n| (n, 1))
            .map_err(|e| format!("bad dims {s:?}: {e}")),
        [a, b] => {
            let a = a.parse().map_err(|e| format!("bad dims {s:?}: {e}"))?;
            let b = b.parse().map_err(|e| format!("bad dims {s:?}: {e}"))?;
            Ok((a, b))
        }
        _ => Err(format!("bad dims {s:?}; expected N or N1xN2")),
    }
}

fn schedule_by_name(name: &str, dims: (usize, usize)) -> Result<Vec<Ordering>, Error> {
    match name {
        "lex" => Ok(generate_lexicographic(dims)),
        "snake" => Ok(generate_snake(dims)),
        "fb" => {
            let fwd = Ordering::identity(dims.0 * dims.1);
            let bwd = fwd.reversed();
            Ok(vec![fwd, bwd])
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown ordering kind {other:?} (lex|snake|fb)"
        ))),
    }
}

fn desk_decomposition(dims: (usize, usize)) -> Result<helmholtz_dd::decomposition::Decomposition, Error> {
    make_checkerboard(dims, 0.025, 0.025, 0.025, (1.0, 1.0))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Run(args) => {
            let format: ReportFormat = args.format.parse()?;
            let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
                path: args.config.display().to_string(),
                source,
            })?;
            let experiments = harness::parse_experiments(&text, args.profile)?;
            let report = harness::run_experiments(&experiments)?;
            report.write(&args.out, format)?;
            println!("wrote {} rows to {}", report.rows.len(), args.out.display());
            Ok(())
        }
        Cmd::Rays { cmd } => match cmd {
            RaysCmd::N { dims, speed } => {
                let dec = desk_decomposition(dims)?;
                let result = match speed.as_str() {
                    "uniform" => {
                        rays::compute_capital_n(&dec, AllowMode::ExactUniform, 1 << 22)?
                    }
                    other => {
                        let field = wave_speed_by_name(other)?;
                        let ray_speed = rays::RaySpeed::from_field(&field, 0.02);
                        rays::compute_capital_n(
                            &dec,
                            AllowMode::Sampled {
                                speed: &ray_speed,
                                params: SampleParams::default(),
                                mode: Parallelism::auto(),
                            },
                            1 << 22,
                        )?
                    }
                };
                if result.lower_bound_only {
                    println!("{} (lower bound: sampled trajectory search)", result.value);
                } else {
                    println!("{}", result.value);
                }
                Ok(())
            }
            RaysCmd::Allowed { dims, word, speed } => {
                let dec = desk_decomposition(dims)?;
                let letters: Vec<usize> = word
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::InvalidConfig(format!("bad word {word:?}: {e}")))
                    })
                    .collect::<Result<_, _>>()?;
                let zero_based: Vec<usize> = letters
                    .iter()
                    .map(|&l| {
                        l.checked_sub(1).ok_or_else(|| {
                            Error::InvalidConfig("word letters are 1-based".into())
                        })
                    })
                    .collect::<Result<_, _>>()?;
                let w = Word::new(zero_based)?;
                let allowed = match speed.as_str() {
                    "uniform" => rays::is_allowed(&w, &dec, AllowMode::ExactUniform),
                    other => {
                        let field = wave_speed_by_name(other)?;
                        let ray_speed = rays::RaySpeed::from_field(&field, 0.02);
                        rays::is_allowed(
                            &w,
                            &dec,
                            AllowMode::Sampled {
                                speed: &ray_speed,
                                params: SampleParams::default(),
                                mode: Parallelism::auto(),
                            },
                        )
                    }
                };
                println!("allowed: {allowed}");
                Ok(())
            }
        },
        Cmd::Orderings { cmd } => match cmd {
            OrderingsCmd::Generate { dims, kind } => {
                let seq = schedule_by_name(&kind, dims)?;
                for (i, o) in seq.iter().enumerate() {
                    println!("sweep {}:", i + 1);
                    for row in (0..dims.1).rev() {
                        let line: Vec<String> = (0..dims.0)
                            .map(|col| (o.rank()[row * dims.0 + col] + 1).to_string())
                            .collect();
                        println!("  {}", line.join(" "));
                    }
                }
                Ok(())
            }
            OrderingsCmd::Check { dims, seq } => {
                let orderings = schedule_by_name(&seq, dims)?;
                let check = check_exhaustive(&orderings, dims);
                println!("exhaustive: {}", check.exhaustive);
                if let Some(w) = check.witness {
                    let cells: Vec<String> = w.iter().map(|c| (c + 1).to_string()).collect();
                    println!("witness (monotone cell chain out of order): {}", cells.join(","));
                }
                Ok(())
            }
        },
        Cmd::Selftest => selftest(),
    }
}

fn wave_speed_by_name(name: &str) -> Result<helmholtz_dd::assembly::WaveSpeedField, Error> {
    use helmholtz_dd::assembly::WaveSpeedField;
    match name {
        "focusing" => Ok(WaveSpeedField::focusing((0.5, 0.5))),
        "defocusing" => Ok(WaveSpeedField::defocusing((0.5, 0.5))),
        other => Err(Error::InvalidConfig(format!(
            "unknown wave speed {other:?} (uniform|focusing|defocusing)"
        ))),
    }
}

fn selftest() -> Result<(), Error> {
    use helmholtz_dd::decomposition::{build_pou, PouParams, TransferOps};
    use helmholtz_dd::mesh::{build_mesh, HRule};
    use helmholtz_dd::C64;

    let mut failed = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("{} {}", if ok { "PASS" } else { "FAIL" }, name);
        if !ok {
            failed += 1;
        }
    };

    // partition of unity sums to one
    let mesh = build_mesh(1.0, 1.0, 0.025, 1.0, 2, HRule::Fixed { denominator: 80 })?;
    let dec = make_checkerboard((2, 2), 0.025, 0.025, 0.025, (1.0, 1.0))?;
    let pou = build_pou(&dec, &mesh, PouParams::default())?;
    let mut max_dev = 0.0f64;
    for iy in 0..mesh.n_nodes_y {
        for ix in 0..mesh.n_nodes_x {
            let sum: f64 = pou.chi.iter().map(|c| c.get(ix, iy)).sum();
            max_dev = max_dev.max((sum - 1.0).abs());
        }
    }
    check("partition-of-unity identity (<= 1e-12)", max_dev <= 1e-12);

    // weighted prolongation reconstructs global vectors
    let ops = TransferOps::new(&dec, &mesh)?;
    let mut w: Vec<C64> = (0..mesh.n_nodes())
        .map(|i| C64::new((i % 17) as f64 / 17.0, (i % 5) as f64 / 5.0))
        .collect();
    for idx in 0..mesh.n_nodes() {
        if mesh.is_boundary_node(idx) {
            w[idx] = C64::new(0.0, 0.0);
        }
    }
    let mut sum = vec![C64::new(0.0, 0.0); mesh.n_nodes()];
    for j in 0..dec.n() {
        let local = ops.restrict(j, &w)?;
        ops.weighted_prolong_add(j, &pou.chi[j], &local, &mut sum)?;
    }
    let dev = w
        .iter()
        .zip(&sum)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    check("prolongation reconstruction (<= 1e-14)", dev <= 1e-14);

    // Bessel load values
    check(
        "J0 reference values",
        (helmholtz_dd::bessel::bessel_j0(0.0) - 1.0).abs() < 1e-15
            && (helmholtz_dd::bessel::bessel_j0(1.0) - 0.7651976865579666).abs() < 1e-10
            && helmholtz_dd::bessel::bessel_j0(2.404825557695773).abs() < 1e-9,
    );

    // ordering combinatorics
    let lex = generate_lexicographic((3, 3));
    check(
        "lexicographic 3x3 exhaustive",
        check_exhaustive(&lex, (3, 3)).exhaustive,
    );
    let snake = generate_snake((3, 3));
    check(
        "diagonal 3x3 exhaustive",
        check_exhaustive(&snake, (3, 3)).exhaustive,
    );

    // iteration bound formula vs enumeration
    let bound_dec = desk_decomposition((2, 3))?;
    let formula = rays::capital_n_formula(&bound_dec);
    let enumerated = rays::capital_n_enumerate(&bound_dec, AllowMode::ExactUniform, 1 << 20)?;
    check("iteration bound 2x3 formula = enumeration", formula == enumerated.value);

    if failed == 0 {
        println!("selftest: all checks passed");
        Ok(())
    } else {
        Err(Error::Numerical(format!("{failed} selftest checks failed")))
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Experiment orchestration: construct problem, basis, quadrature,
//! preconditioner, and solver from a parsed config, run, and write the
//! artifacts.

use std::fs;
use std::io::Write as IoWrite;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use specgal::basis::{MultiIndexSet, TensorQuadrature};
use specgal::galerkin::{BasisQuadMatrix, GalerkinOperator, GalerkinSolution};
use specgal::problems::{
    AdvectionDiffusionProblem, AffineSystem, DiffusionProblem, Grid2d, IdentitySystem,
};
use specgal::solvers::{solve, PreconditionerSpec, SolverConfig, SolverMethod};
use specgal::verify::VerifyReport;
use specgal::ParameterizedSystem;

use crate::config::{BasisConfig, ExperimentConfig, ProblemConfig, ProblemKind};

pub type RunError = Box<dyn std::error::Error>;
pub type RunResult<T> = Result<T, RunError>;

pub fn build_system(problem: &ProblemConfig) -> RunResult<Arc<dyn ParameterizedSystem>> {
    Ok(match problem.kind {
        ProblemKind::Identity => Arc::new(IdentitySystem::with_constant_rhs(problem.n, problem.d)),
        ProblemKind::Affine => {
            if problem.spd {
                Arc::new(AffineSystem::random_spd(problem.n, problem.d, problem.seed))
            } else {
                Arc::new(AffineSystem::random(problem.n, problem.d, problem.seed))
            }
        }
        ProblemKind::Diffusion => {
            let nodes = problem.m + 2;
            let grid = Grid2d::uniform(nodes, nodes);
            let field = specgal::problems::kl_decompose(
                grid,
                problem.d,
                problem.cov_scale,
                problem.corr_len_sq,
                problem.kl_scale,
            )?;
            Arc::new(DiffusionProblem::new(problem.m, field)?)
        }
        ProblemKind::AdvectionDiffusion => Arc::new(AdvectionDiffusionProblem::with_scheme(
            problem.m,
            problem.d,
            problem.upwind,
        )?),
    })
}

pub fn build_basis(config: &ExperimentConfig) -> RunResult<MultiIndexSet> {
    Ok(match &config.basis {
        BasisConfig::TotalDegree(n) => MultiIndexSet::total_degree(config.problem.d, *n)?,
        BasisConfig::Tensor(orders) => MultiIndexSet::anisotropic_tensor(orders)?,
    })
}

pub fn build_operator(
    config: &ExperimentConfig,
    system: Arc<dyn ParameterizedSystem>,
) -> RunResult<GalerkinOperator> {
    let basis = build_basis(config)?;
    let rule = TensorQuadrature::tensor(&config.quadrature_orders)?;
    let bq = BasisQuadMatrix::build_default(basis, rule)?;
    Ok(GalerkinOperator::new(bq, system)?)
}

fn resolve_method(
    config: &ExperimentConfig,
    system: &dyn ParameterizedSystem,
) -> RunResult<SolverMethod> {
    match config.solver.method.as_deref() {
        Some("cg") => Ok(SolverMethod::Cg),
        Some("minres") => Ok(SolverMethod::Minres),
        Some("bicgstab") => Ok(SolverMethod::BiCgStab),
        Some(other) => Err(format!(
            "unknown solver method `{other}` (expected cg, minres, or bicgstab)"
        )
        .into()),
        None => Ok(if system.is_symmetric() {
            SolverMethod::Minres
        } else {
            SolverMethod::BiCgStab
        }),
    }
}

fn resolve_preconditioner_spec(
    config: &ExperimentConfig,
    d: usize,
) -> RunResult<Option<PreconditionerSpec>> {
    let section = &config.preconditioner;
    let origin = vec![0.0; d];
    Ok(match section.kind.as_str() {
        "none" => None,
        "midpoint" => Some(PreconditionerSpec::Midpoint),
        "mean" => Some(PreconditionerSpec::Mean {
            order: section.mean_order,
        }),
        "random" => Some(PreconditionerSpec::Random { seed: section.seed }),
        "largest-eig" => Some(PreconditionerSpec::LargestEig),
        "smallest-eig" => Some(PreconditionerSpec::SmallestEig),
        "fixed-point" => {
            let point = section
                .point
                .clone()
                .ok_or("`preconditioner.kind = fixed-point` requires `preconditioner.point`")?;
            Some(PreconditionerSpec::FixedPoint(point))
        }
        "diagonal" => Some(PreconditionerSpec::Diagonal(
            section.point.clone().unwrap_or(origin),
        )),
        other => {
            return Err(format!(
                "unknown preconditioner kind `{other}` (expected none, midpoint, mean, random, \
                 largest-eig, smallest-eig, fixed-point, or diagonal)"
            )
            .into())
        }
    })
}

fn solver_config(config: &ExperimentConfig, method: SolverMethod) -> SolverConfig {
    let mut sc = SolverConfig::new(method)
        .with_rtol(config.solver.rtol)
        .with_history(config.solver.record_history);
    if let Some(maxiter) = config.solver.maxiter {
        sc = sc.with_maxiter(maxiter);
    }
    sc
}

struct RunArtifacts<'a> {
    config: &'a ExperimentConfig,
    dir: std::path::PathBuf,
}

impl RunArtifacts<'_> {
    fn write(&self, solution: &GalerkinSolution) -> RunResult<()> {
        fs::create_dir_all(&self.dir)?;
        let out = &self.config.output;
        if out.write_coefficients {
            let mut file = fs::File::create(self.dir.join("coefficients.txt"))?;
            solution.write_coefficients(&mut file)?;
        }
        if out.write_history {
            let mut file = fs::File::create(self.dir.join("history.csv"))?;
            solution.write_residual_history(&mut file)?;
        }
        if out.write_moments {
            self.write_moments(solution)?;
        }
        Ok(())
    }

    fn write_moments(&self, solution: &GalerkinSolution) -> RunResult<()> {
        let (mean, variance) = solution.moments();
        let grid_side = match self.config.problem.kind {
            ProblemKind::Diffusion | ProblemKind::AdvectionDiffusion => {
                Some(self.config.problem.m)
            }
            _ => None,
        };
        match grid_side {
            Some(m) if m * m == mean.len() => {
                // grid-shaped CSV: one row of the interior grid per line
                for (name, data) in [("mean.csv", &mean), ("variance.csv", &variance)] {
                    let mut file = fs::File::create(self.dir.join(name))?;
                    for j in 0..m {
                        let row: Vec<String> = (0..m)
                            .map(|i| format!("{:.17e}", data[j * m + i]))
                            .collect();
                        writeln!(file, "{}", row.join(","))?;
                    }
                }
            }
            _ => {
                let mut file = fs::File::create(self.dir.join("moments.csv"))?;
                writeln!(file, "index,mean,variance")?;
                for i in 0..mean.len() {
                    writeln!(file, "{i},{:.17e},{:.17e}", mean[i], variance[i])?;
                }
            }
        }
        Ok(())
    }
}

fn summary_line(
    method: SolverMethod,
    precond: &str,
    solution: &GalerkinSolution,
    setup_seconds: f64,
    solve_seconds: f64,
) -> String {
    format!(
        "{},{},{},{:.3},{:.3},{}",
        method.name(),
        precond,
        solution.iterations(),
        setup_seconds,
        solve_seconds,
        solution.converged()
    )
}

/// `solve <config>`: one run, artifacts under the output directory.
pub fn run_solve(config: &ExperimentConfig) -> RunResult<i32> {
    let system = build_system(&config.problem)?;
    let op = build_operator(config, system.clone())?;
    let method = resolve_method(config, system.as_ref())?;
    let spec = resolve_preconditioner_spec(config, config.problem.d)?;

    let setup_start = Instant::now();
    let precond = match &spec {
        None => None,
        Some(spec) => Some(spec.build(system.as_ref(), op.quadrature())?),
    };
    let setup_seconds = setup_start.elapsed().as_secs_f64();

    let rhs = op.assemble_rhs()?;
    let solve_start = Instant::now();
    let solution = solve(&op, rhs.as_slice(), &solver_config(config, method), precond.as_ref())?;
    let solve_seconds = solve_start.elapsed().as_secs_f64();

    let artifacts = RunArtifacts {
        config,
        dir: config.output.dir.clone(),
    };
    artifacts.write(&solution)?;

    let precond_name = spec
        .as_ref()
        .map_or_else(|| "none".to_string(), |s| s.to_string());
    let line = summary_line(method, &precond_name, &solution, setup_seconds, solve_seconds);
    println!("{line}");
    let mut file = fs::File::create(config.output.dir.join("summary.csv"))?;
    writeln!(
        file,
        "method,precond,iterations,setup_seconds,solve_seconds,converged"
    )?;
    writeln!(file, "{line}")?;

    if solution.converged() {
        Ok(0)
    } else {
        eprintln!(
            "solver did not converge ({:?}); partial artifacts written to {}",
            solution.status(),
            config.output.dir.display()
        );
        Ok(2)
    }
}

struct BenchmarkRow {
    name: String,
    setup_seconds: f64,
    iterations: usize,
    avg_iter_seconds: f64,
    total_seconds: f64,
    converged: bool,
}

/// `benchmark <config>`: runs every applicable preconditioner kind with the
/// configured solver and tabulates setup time, iterations, and solve time.
pub fn run_benchmark(config: &ExperimentConfig) -> RunResult<i32> {
    let system = build_system(&config.problem)?;
    let op = build_operator(config, system.clone())?;
    let method = resolve_method(config, system.as_ref())?;
    let rhs = op.assemble_rhs()?;
    let solver_cfg = solver_config(config, method);

    let mut kinds: Vec<(String, Option<PreconditionerSpec>)> = vec![
        ("none".into(), None),
        ("midpoint".into(), Some(PreconditionerSpec::Midpoint)),
        ("mean-2".into(), Some(PreconditionerSpec::Mean { order: 2 })),
        ("mean-5".into(), Some(PreconditionerSpec::Mean { order: 5 })),
    ];
    for run in 0..config.benchmark_random_runs {
        kinds.push((
            format!("random-{}", run + 1),
            Some(PreconditionerSpec::Random {
                seed: config.preconditioner.seed + 1 + run as u64,
            }),
        ));
    }
    if system.is_symmetric() {
        kinds.push(("largest-eig".into(), Some(PreconditionerSpec::LargestEig)));
        kinds.push(("smallest-eig".into(), Some(PreconditionerSpec::SmallestEig)));
    } else {
        kinds.push((
            "diagonal".into(),
            Some(PreconditionerSpec::Diagonal(vec![0.0; config.problem.d])),
        ));
    }

    fs::create_dir_all(&config.output.dir)?;
    let mut rows = Vec::new();
    let mut all_converged = true;
    for (name, spec) in kinds {
        let setup_start = Instant::now();
        let precond = match &spec {
            None => None,
            Some(spec) => Some(spec.build(system.as_ref(), op.quadrature())?),
        };
        let setup_seconds = setup_start.elapsed().as_secs_f64();
        let solve_start = Instant::now();
        let solution = solve(&op, rhs.as_slice(), &solver_cfg, precond.as_ref())?;
        let total_seconds = solve_start.elapsed().as_secs_f64();
        all_converged &= solution.converged();

        let artifacts = RunArtifacts {
            config,
            dir: config.output.dir.join(&name),
        };
        artifacts.write(&solution)?;

        let iterations = solution.iterations();
        rows.push(BenchmarkRow {
            name,
            setup_seconds,
            iterations,
            avg_iter_seconds: total_seconds / iterations.max(1) as f64,
            total_seconds,
            converged: solution.converged(),
        });
    }

    let table = render_benchmark_table(&rows);
    print!("{table}");
    fs::write(config.output.dir.join("benchmark.txt"), &table)?;
    let mut csv = String::from(
        "method,setup_seconds,iterations,avg_iter_seconds,total_seconds,converged\n",
    );
    for row in &rows {
        csv.push_str(&format!(
            "{},{:.3},{},{:.4},{:.3},{}\n",
            row.name,
            row.setup_seconds,
            row.iterations,
            row.avg_iter_seconds,
            row.total_seconds,
            row.converged
        ));
    }
    fs::write(config.output.dir.join("benchmark.csv"), csv)?;

    Ok(if all_converged { 0 } else { 2 })
}

fn render_benchmark_table(rows: &[BenchmarkRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<22}{:>10}{:>12}{:>16}{:>11}\n",
        "Method", "Setup (s)", "Iterations", "Avg. Iter. (s)", "Total (s)"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<22}{:>10.1}{:>12}{:>16.4}{:>11.1}{}\n",
            row.name,
            row.setup_seconds,
            row.iterations,
            row.avg_iter_seconds,
            row.total_seconds,
            if row.converged { "" } else { "  (no convergence)" }
        ));
    }
    out
}

/// `verify <config>`: oracle suite on a dense-assembly-sized instance,
/// shrinking the grid if needed. Check failures are report content; the
/// exit code distinguishes them for scripting.
pub fn run_verify(config: &ExperimentConfig) -> RunResult<i32> {
    let mut problem = config.problem.clone();
    match problem.kind {
        ProblemKind::Diffusion | ProblemKind::AdvectionDiffusion => {
            if problem.m > 8 {
                println!("verify: shrinking grid from m={} to m=8", problem.m);
                problem.m = 8;
            }
        }
        _ => {}
    }
    let system = build_system(&problem)?;
    let shrunk = ExperimentConfig {
        problem,
        ..config.clone()
    };
    let report = match build_operator(&shrunk, system) {
        Ok(op) => specgal::verify::run_verify(&op)?,
        Err(e) => {
            // Constructor failures (rank deficiency, coarse quadrature) are
            // themselves the report.
            let mut report = VerifyReport::default();
            report.checks.push(specgal::verify::Check {
                name: "q-orthonormality".into(),
                passed: false,
                measured: f64::INFINITY,
                threshold: specgal::galerkin::BasisQuadMatrix::DEFAULT_ORTHOTOL,
                detail: e.to_string(),
            });
            report
        }
    };
    for check in &report.checks {
        println!("{check}");
    }
    Ok(if report.all_passed() { 0 } else { 2 })
}

/// `kl-spectrum <config>`: writes `mode,sigma,cumulative_energy` rows for
/// the first `max(d, 10)` modes of the configured covariance.
pub fn run_kl_spectrum(config: &ExperimentConfig) -> RunResult<i32> {
    let problem = &config.problem;
    let nodes = problem.m + 2;
    let grid = Grid2d::uniform(nodes, nodes);
    let modes = problem.d.max(10).min(grid.n_nodes());
    let field = specgal::problems::kl_decompose(
        grid,
        modes,
        problem.cov_scale,
        problem.corr_len_sq,
        problem.kl_scale,
    )?;
    fs::create_dir_all(&config.output.dir)?;
    let path = config.output.dir.join("kl_spectrum.csv");
    let mut file = fs::File::create(&path)?;
    writeln!(file, "mode,sigma,cumulative_energy")?;
    for k in 0..field.dim() {
        writeln!(
            file,
            "{},{:.17e},{:.17e}",
            k + 1,
            field.sigma()[k],
            field.energy_fractions()[k]
        )?;
    }
    println!(
        "wrote {} ({} modes, 4-mode energy fraction {:.4})",
        path.display(),
        field.dim(),
        field.energy_fractions()[field.dim().min(4) - 1]
    );
    Ok(0)
}

pub fn load_config(path: &Path) -> RunResult<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    Ok(ExperimentConfig::parse(&text)?)
}

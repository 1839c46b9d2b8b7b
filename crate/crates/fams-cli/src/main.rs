//! Batch front end: validates a JSON run configuration, executes property
//! suites or eigen-solves, and emits machine-readable reports plus
//! per-solve iteration traces.
//!
//! Exit codes: 0 success, 1 suite failures, 2 configuration errors,
//! 3 regime errors, 4 non-convergence.

mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use fams::assembly::Assembler;
use fams::error::Error;
use fams::function::DiscreteFunction;
use fams::solver::{
    self, classify_regime, EigenSolution, Regime, RegimeClassification, SolverOptions,
};
use fams::suites::{run_suite, SuiteId, SuiteReport};

const SCHEMA_VERSION: u64 = 1;

#[derive(Parser)]
#[command(name = "fams", version, about = "Anisotropic nonlocal modular spaces: suites, norms, and eigen-solvers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every property suite against the configured setup
    Check(Common),
    /// Solve the eigenvalue problem at the configured target(s)
    Solve(Common),
    /// Solve across a sweep of targets and compare the results
    Sweep(Common),
    /// Evaluate norms and modulars of a built-in test function
    Norms(NormsArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// output directory (defaults to the config's output.dir, then "out")
    #[arg(long)]
    out: Option<PathBuf>,
    /// override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// worker thread cap; FAMS_THREADS works too, the flag wins
    #[arg(long)]
    threads: Option<usize>,
    /// run solvers even when the growth comparison is indeterminate
    #[arg(long)]
    override_regime: bool,
}

#[derive(Args)]
struct NormsArgs {
    #[command(flatten)]
    common: Common,
    /// one of: zero, bump, hat, random
    #[arg(long, default_value = "bump")]
    function: String,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Check(c) => cmd_check(&c),
        Cmd::Solve(c) => cmd_solve(&c, false),
        Cmd::Sweep(c) => cmd_solve(&c, true),
        Cmd::Norms(n) => cmd_norms(&n),
    };
    std::process::exit(code);
}

fn setup_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("FAMS_THREADS").ok().and_then(|v| v.parse::<usize>().ok())
    });
    if let Some(n) = n {
        if n > 0 {
            // a second build_global is harmless; the first pool wins
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

struct Prepared {
    cfg: config::RunConfig,
    echo: Value,
    asm: Assembler,
    out_dir: PathBuf,
    seed: u64,
}

fn prepare(common: &Common) -> Result<Prepared, String> {
    setup_threads(common.threads);
    let (cfg, echo) = config::load(&common.config)?;
    let asm = cfg.build_assembler()?;
    let out_dir = common
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| format!("cannot create output directory {}: {e}", out_dir.display()))?;
    let seed = common.seed.unwrap_or(cfg.seed);
    Ok(Prepared { cfg, echo, asm, out_dir, seed })
}

fn fail_config(msg: &str) -> i32 {
    eprintln!("configuration error: {msg}");
    2
}

fn write_json(path: &Path, value: &Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).expect("report serialization");
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn regime_json(cls: &RegimeClassification, lambda_star: Option<f64>, c1: Option<f64>) -> Value {
    json!({
        "tag": cls.tag.to_string(),
        "phi_plus_max": cls.phi_plus_max,
        "phi_minus_min": cls.phi_minus_min,
        "q_minus": cls.q_minus,
        "q_plus": cls.q_plus,
        "theta": cls.theta,
        "lambda_star": lambda_star,
        "embedding_constant": c1,
    })
}

fn points_json(asm: &Assembler) -> Value {
    let pts = asm.points();
    json!({
        "total": pts.len(),
        "interior": pts.n_interior,
        "identical_pairs": pts.stats.identical_pairs,
        "touching_pairs": pts.stats.touching_pairs,
        "separated_pairs": pts.stats.separated_pairs,
        "exterior_cells": pts.stats.exterior_cells,
        "covered_halfwidth": pts.covered_halfwidth,
        "effective_tail_radius": pts.effective_tail_radius,
    })
}

fn tail_json(asm: &Assembler) -> Value {
    let probe = DiscreteFunction::tent(&asm.setup().mesh);
    match asm.tail_bound(&probe) {
        Ok(bound) => {
            let psi = asm.psi(&probe);
            json!({
                "probe": "bump",
                "bound": bound,
                "modular": psi,
                "fraction_of_modular": if psi > 0.0 { bound / psi } else { 0.0 },
            })
        }
        Err(e) => json!({ "probe": "bump", "unavailable": e.to_string() }),
    }
}

fn suite_json(r: &SuiteReport) -> Value {
    let failures: Vec<Value> = r
        .failures
        .iter()
        .take(10)
        .map(|f| {
            json!({
                "case": f.case,
                "inputs": f.inputs,
                "lhs": f.lhs,
                "rhs": f.rhs,
                "slack": f.slack,
            })
        })
        .collect();
    let stats: Value = r
        .stats
        .iter()
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect::<serde_json::Map<String, Value>>()
        .into();
    json!({
        "suite": r.suite,
        "cases": r.cases,
        "pass": r.pass(),
        "failures_total": r.failures.len(),
        "failures": failures,
        "wall_ms": r.wall_ms,
        "stats": stats,
    })
}

fn cmd_check(common: &Common) -> i32 {
    let prep = match prepare(common) {
        Ok(p) => p,
        Err(e) => return fail_config(&e),
    };
    let cls = classify_regime(prep.asm.setup());
    let mut suite_values = Vec::new();
    let mut all_pass = true;
    for id in SuiteId::all() {
        let cases = if id == SuiteId::ScalingBounds {
            prep.cfg.suites.scaling_cases
        } else {
            prep.cfg.suites.cases
        };
        match run_suite(&prep.asm, id, prep.seed, cases) {
            Ok(rep) => {
                println!(
                    "{}: {} ({} cases, {:.1} ms)",
                    rep.suite,
                    if rep.pass() { "pass" } else { "FAIL" },
                    rep.cases,
                    rep.wall_ms
                );
                if !rep.pass() {
                    all_pass = false;
                    for f in rep.failures.iter().take(3) {
                        println!(
                            "  case {}: {} lhs={:.6e} rhs={:.6e} slack={:.1e}",
                            f.case, f.inputs, f.lhs, f.rhs, f.slack
                        );
                    }
                }
                suite_values.push(suite_json(&rep));
            }
            Err(Error::Certification { what, .. }) if id == SuiteId::Clarkson => {
                println!("{}: skipped ({what})", id.name());
                suite_values.push(json!({
                    "suite": id.name(),
                    "skipped": true,
                    "reason": what,
                }));
            }
            Err(e) => {
                println!("{}: error ({e})", id.name());
                all_pass = false;
                suite_values.push(json!({
                    "suite": id.name(),
                    "pass": false,
                    "error": e.to_string(),
                }));
            }
        }
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "check",
        "seed": prep.seed,
        "config": prep.echo,
        "regime": regime_json(&cls, None, None),
        "suites": suite_values,
        "tail_bound": tail_json(&prep.asm),
        "points": points_json(&prep.asm),
    });
    let path = prep.out_dir.join("report.json");
    if let Err(e) = write_json(&path, &report) {
        return fail_config(&e);
    }
    println!("report: {}", path.display());
    if all_pass {
        0
    } else {
        1
    }
}

fn solution_json(sol: &EigenSolution, trace_file: &str, verification: Value) -> Value {
    json!({
        "lambda": sol.lambda,
        "energy": sol.energy,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "trace_file": trace_file,
        "verification": verification,
        "u": sol.u.values,
    })
}

fn write_trace(path: &Path, sol: &EigenSolution) -> Result<(), String> {
    let mut text = String::from("iteration,energy,residual\n");
    for row in &sol.trace {
        text.push_str(&format!("{},{:.17e},{:.17e}\n", row.iteration, row.energy, row.residual));
    }
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn cmd_solve(common: &Common, sweep_required: bool) -> i32 {
    let prep = match prepare(common) {
        Ok(p) => p,
        Err(e) => return fail_config(&e),
    };
    let cls = classify_regime(prep.asm.setup());
    let override_regime = common.override_regime || prep.cfg.solver.override_regime;

    if cls.tag == Regime::Indeterminate && !override_regime {
        eprintln!("regime error: neither growth comparison is strict, so no solver applies:");
        for line in cls.superlinear_conditions() {
            eprintln!("  {line}");
        }
        eprintln!("  {}", cls.sublinear_condition());
        eprintln!("pass --override-regime to force the pass solver anyway");
        return 3;
    }

    // embedding constant and smallness threshold, needed for the coercive
    // solver's ball and helpful context otherwise
    let opts_base = SolverOptions {
        tol: prep.cfg.solver.tol,
        max_iters: prep.cfg.solver.max_iters,
        path_points: prep.cfg.solver.path_points,
        override_regime,
        embedding_samples: prep.cfg.solver.embedding_samples,
        embedding_estimate: None,
        seed: prep.seed,
        newton_polish: true,
    };
    let sublinear = cls.tag == Regime::Sublinear;
    let mut c1 = None;
    let mut lambda_star = None;
    if sublinear {
        let est = match solver::embedding_constant(&prep.asm, opts_base.embedding_samples, prep.seed) {
            Ok(v) => v,
            Err(e) => return fail_config(&format!("embedding sampling failed: {e}")),
        };
        let rho = 0.9 * (1.0 / est).min(1.0);
        match solver::lambda_star(prep.asm.setup(), rho, est) {
            Ok(ls) => {
                println!(
                    "smallness threshold lambda_star = {ls:.6e} at ball radius {rho:.4} \
                     (upper estimate: the sampled embedding constant {est:.6e} bounds the true one from below)"
                );
                c1 = Some(est);
                lambda_star = Some(ls);
            }
            Err(e) => return fail_config(&format!("threshold computation failed: {e}")),
        }
    }

    // resolve the lambda list
    let s = &prep.cfg.solver;
    let lambdas: Vec<f64> = if let Some(fr) = &s.lambda_star_fractions {
        match lambda_star {
            Some(ls) => fr.iter().map(|f| f * ls).collect(),
            None => {
                return fail_config(
                    "solver.lambda_star_fractions: the threshold only exists in the sublinear regime",
                );
            }
        }
    } else if let Some(list) = &s.sweep {
        list.clone()
    } else if let Some(l) = s.lambda {
        vec![l]
    } else {
        return fail_config("solver: need one of lambda, sweep, or lambda_star_fractions");
    };
    if lambdas.is_empty() {
        return fail_config("solver: the lambda list is empty");
    }
    if sweep_required && lambdas.len() < 2 {
        return fail_config("sweep needs at least two lambda values (solver.sweep or solver.lambda_star_fractions)");
    }

    let mut opts = opts_base;
    opts.embedding_estimate = c1;
    let mut solutions = Vec::new();
    let mut all_converged = true;
    for (i, &lambda) in lambdas.iter().enumerate() {
        let solved = if sublinear {
            solver::solve_sublinear(&prep.asm, lambda, &opts)
        } else {
            solver::solve_mountain_pass(&prep.asm, lambda, &opts)
        };
        let sol = match solved {
            Ok(s) => s,
            Err(Error::RegimeMismatch(msg)) => {
                eprintln!("regime error: {msg}");
                return 3;
            }
            Err(e) => return fail_config(&format!("solver setup failed: {e}")),
        };
        let trace_name = format!("solve_{i}.csv");
        if let Err(e) = write_trace(&prep.out_dir.join(&trace_name), &sol) {
            return fail_config(&e);
        }
        let verification = match solver::verify_eigen(&prep.asm, &sol, opts.tol) {
            Ok(check) => {
                json!({
                    "max_defect": check.max_defect,
                    "threshold": check.threshold,
                    "pass": check.pass,
                    "probes": check.probes,
                })
            }
            Err(e) => json!({ "error": e.to_string() }),
        };
        println!(
            "lambda = {lambda:.6e}: {} energy = {:.6e}, residual = {:.3e}, {} iterations",
            if sol.converged { "converged," } else { "NOT CONVERGED," },
            sol.energy,
            sol.residual,
            sol.iterations
        );
        if !sol.converged {
            all_converged = false;
        }
        solutions.push(solution_json(&sol, &trace_name, verification));
    }

    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": if sweep_required { "sweep" } else { "solve" },
        "seed": prep.seed,
        "config": prep.echo,
        "regime": regime_json(&cls, lambda_star, c1),
        "solutions": solutions,
        "tail_bound": tail_json(&prep.asm),
        "points": points_json(&prep.asm),
    });
    let path = prep.out_dir.join("report.json");
    if let Err(e) = write_json(&path, &report) {
        return fail_config(&e);
    }
    println!("report: {}", path.display());
    if all_converged {
        0
    } else {
        4
    }
}

fn test_function(asm: &Assembler, name: &str, seed: u64) -> Result<DiscreteFunction, String> {
    let mesh = &asm.setup().mesh;
    match name {
        "zero" => Ok(DiscreteFunction::zero(mesh)),
        "bump" => Ok(DiscreteFunction::tent(mesh)),
        "hat" => {
            let center = mesh.box_center();
            let pick = mesh
                .free
                .iter()
                .min_by(|&&a, &&b| {
                    let da = dist2(mesh.vertices[a], center);
                    let db = dist2(mesh.vertices[b], center);
                    da.total_cmp(&db)
                })
                .copied()
                .ok_or("mesh has no interior vertex for a hat")?;
            let mut u = DiscreteFunction::zero(mesh);
            u.values[pick] = 1.0;
            Ok(u)
        }
        "random" => Ok(DiscreteFunction::random(mesh, seed)),
        other => Err(format!(
            "unknown test function '{other}' (use zero, bump, hat, or random)"
        )),
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn cmd_norms(args: &NormsArgs) -> i32 {
    let prep = match prepare(&args.common) {
        Ok(p) => p,
        Err(e) => return fail_config(&e),
    };
    let u = match test_function(&prep.asm, &args.function, prep.seed) {
        Ok(u) => u,
        Err(e) => return fail_config(&e),
    };
    let norms = match prep.asm.norms(&u) {
        Ok(n) => n,
        Err(e) => return fail_config(&format!("norm computation failed: {e}")),
    };
    let psi = prep.asm.psi(&u);
    let count = norms.per_direction.len() as f64;
    // slack of the equivalence chain: how much margin each inequality has
    let chain = [
        ("max <= joint", norms.joint - norms.max_direction),
        ("joint <= sum", norms.sum_directions - norms.joint),
        ("sum <= count*max", count * norms.max_direction - norms.sum_directions),
    ];
    println!("function: {}", args.function);
    for (i, v) in norms.per_direction.iter().enumerate() {
        println!("seminorm[{i}] = {v:.12e}");
    }
    println!("max_direction = {:.12e}", norms.max_direction);
    println!("joint = {:.12e}", norms.joint);
    println!("sum_directions = {:.12e}", norms.sum_directions);
    println!("modular = {psi:.12e}");
    for (what, margin) in chain {
        println!("chain {what}: margin {margin:.3e}");
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "norms",
        "seed": prep.seed,
        "config": prep.echo,
        "function": args.function,
        "per_direction": norms.per_direction,
        "max_direction": norms.max_direction,
        "joint": norms.joint,
        "sum_directions": norms.sum_directions,
        "modular": psi,
        "chain_margins": chain.iter().map(|(k, v)| json!({"inequality": k, "margin": v})).collect::<Vec<_>>(),
        "tail_bound": tail_json(&prep.asm),
    });
    let path = prep.out_dir.join("norms.json");
    if let Err(e) = write_json(&path, &report) {
        return fail_config(&e);
    }
    println!("report: {}", path.display());
    0
}

//! Subcommand implementations.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use jigsaw::engine::{self, DynamicsParams, Engine};
use jigsaw::montecarlo::{self, McConfig, SweepStrategy};
use jigsaw::randomness::{derive_seed, EdgeSampler};
use jigsaw::theory::{self, PhiEvalMode, PhiMode, PhiSpec, QuadratureSpec};
use jigsaw::topology::{Family, Topology};

use crate::config::{parse_grid, parse_seed, ExperimentConfig};
use crate::output::{write_results, write_results_file, write_summary_file, ResultRow, Summary};
use crate::render::Palette;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn usage<T: ToString>(m: T) -> CliError {
    CliError::Usage(m.to_string())
}

fn runtime<T: ToString>(m: T) -> CliError {
    CliError::Runtime(m.to_string())
}

/// Flags mirroring the config-file keys; any flag overrides its key.
#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// Config file (TOML) supplying defaults for the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Puzzle family, e.g. ring:n=1024, torus:n=400,d=2, hypercube:n=16.
    #[arg(long)]
    pub topology: Option<String>,
    /// Verification threshold (people neighbors required).
    #[arg(long)]
    pub sigma: Option<u32>,
    /// Link threshold (puzzle neighbors required).
    #[arg(long)]
    pub tau: Option<u32>,
    /// Exemption threshold: integer or "inf".
    #[arg(long)]
    pub theta: Option<String>,
    /// Merge rule: threshold or basic.
    #[arg(long)]
    pub rule: Option<String>,
    /// People-graph edge probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Sweep grid start:stop:step.
    #[arg(long)]
    pub p_grid: Option<String>,
    /// Trials per estimate.
    #[arg(long)]
    pub trials: Option<u32>,
    /// Master seed, decimal or 0x-hex. Trial i uses the i-th output of a
    /// SplitMix64 stream seeded with it.
    #[arg(long)]
    pub seed: Option<String>,
    /// Worker threads (0 = all cores); env JIGSAW_THREADS is the default.
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Output prefix: writes <out>.csv, <out>.json, <out>_t####.ppm.
    #[arg(long)]
    pub out: Option<String>,
    /// Snapshot period in rounds (2D torus runs only).
    #[arg(long)]
    pub snapshot_every: Option<u32>,
    /// Growth box side for `grow`.
    #[arg(long = "box")]
    pub box_len: Option<u32>,
}

impl CommonArgs {
    fn to_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            topology: self.topology.clone(),
            sigma: self.sigma,
            tau: self.tau,
            theta: self.theta.clone(),
            rule: self.rule.clone(),
            p: self.p,
            p_grid: self.p_grid.clone(),
            pc: None,
            trials: self.trials,
            seed: self.seed.clone(),
            parallelism: self.parallelism,
            out: self.out.clone(),
            snapshot_every: self.snapshot_every,
            r#box: self.box_len,
        }
    }

    /// Effective config: file values overridden by flags.
    pub fn effective(&self) -> Result<ExperimentConfig, CliError> {
        let from_file = match &self.config {
            None => ExperimentConfig::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                ExperimentConfig::from_toml(&text).map_err(usage)?
            }
        };
        Ok(from_file.merged_with(&self.to_config()))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "jigsaw",
    version,
    about = "Jigsaw percolation laboratory: cluster-merging dynamics on puzzle graphs \
             with a lazily sampled random people graph"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Monte Carlo estimate of P(Solve) at one probability.
    Run(CommonArgs),
    /// Coupled sweep over a probability grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Binary-search each trial along the grid instead of running
        /// every point (valid by the monotone coupling).
        #[arg(long)]
        bisect: bool,
    },
    /// Bisection search for the p with P(Solve) = 1/2.
    Pc {
        #[command(flatten)]
        common: CommonArgs,
        /// Bracket-width stopping tolerance.
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
        /// Bracket lower end.
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        /// Bracket upper end.
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
    },
    /// Monte Carlo estimate of the local growth probability in a box.
    Grow(CommonArgs),
    /// Numerical constants and bound functions.
    Theory(TheoryArgs),
    /// Single observed run with snapshot images (2D torus only).
    Render(CommonArgs),
    /// Fast internal consistency checks.
    Selftest,
}

#[derive(Args, Debug)]
pub struct TheoryArgs {
    /// Which constant: lambda, nu, lb2d, ub2d, phi.
    #[arg(long = "const")]
    pub name: String,
    #[arg(long)]
    pub sigma: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub ell: Option<u32>,
    /// lb2d: the set-size coefficient c.
    #[arg(long)]
    pub c: Option<f64>,
    /// lb2d: the order-parameter value lambda.
    #[arg(long)]
    pub lam: Option<f64>,
    /// ub2d: the site-percolation threshold upper bound.
    #[arg(long)]
    pub p_site: Option<f64>,
    /// phi: evaluation point.
    #[arg(long)]
    pub r: Option<f64>,
    /// phi/ub2d: "exact" or "mc".
    #[arg(long, default_value = "exact")]
    pub phi_mode: String,
    /// Samples per Monte Carlo phi evaluation.
    #[arg(long, default_value_t = 100_000)]
    pub phi_trials: u32,
    #[arg(long)]
    pub seed: Option<String>,
    /// Quadrature absolute tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<String>,
}

fn solve_rows(cfg: &ExperimentConfig, p_values: &[f64]) -> Result<Vec<ResultRow>, CliError> {
    let r = cfg.resolve().map_err(usage)?;
    let mut rows = Vec::new();
    for &p in p_values {
        let est = montecarlo::estimate_solve(&McConfig {
            topology: r.topology,
            params: r.params,
            p,
            trials: r.trials,
            master_seed: r.seed,
            parallelism: r.parallelism,
        })
        .map_err(runtime)?;
        rows.push(ResultRow::new(&r.topology, r.params, p, r.seed, &est));
    }
    Ok(rows)
}

fn emit(
    cfg: &ExperimentConfig,
    rows: Vec<ResultRow>,
    extra: serde_json::Value,
    started: Instant,
) -> Result<(), CliError> {
    match &cfg.out {
        None => {
            let mut buf = Vec::new();
            write_results(&mut buf, &rows).map_err(runtime)?;
            print!("{}", String::from_utf8_lossy(&buf));
        }
        Some(prefix) => {
            write_results_file(&PathBuf::from(format!("{prefix}.csv")), &rows)
                .map_err(runtime)?;
            let summary = Summary {
                version: env!("CARGO_PKG_VERSION"),
                config: cfg,
                wall_clock_secs: started.elapsed().as_secs_f64(),
                estimates: json!({ "rows": rows, "detail": extra }),
            };
            write_summary_file(&PathBuf::from(format!("{prefix}.json")), &summary)
                .map_err(runtime)?;
        }
    }
    Ok(())
}

fn snapshot_run(cfg: &ExperimentConfig) -> Result<serde_json::Value, CliError> {
    let r = cfg.resolve().map_err(usage)?;
    let every = cfg.snapshot_every.unwrap_or(1).max(1);
    let n = match r.topology.family() {
        Family::Torus { n, d: 2 } => n,
        other => {
            return Err(usage(format!(
                "snapshots require a two-dimensional torus, got {other:?}"
            )))
        }
    };
    let p = cfg.p.ok_or_else(|| usage("snapshot run needs --p"))?;
    let prefix = cfg.out.clone().unwrap_or_else(|| "snapshot".to_string());
    let palette = Palette::default();
    let sampler = EdgeSampler::lazy(derive_seed(r.seed, 0), p);
    let mut frames = Vec::new();
    let mut io_err: Option<std::io::Error> = None;
    let result = Engine::new(&r.topology, r.params, &sampler).run_observed(&mut |t, part| {
        if t % every == 0 && io_err.is_none() {
            let sizes = part.cluster_sizes_per_vertex();
            let path = PathBuf::from(format!("{prefix}_t{t:04}.ppm"));
            if let Err(e) = crate::render::write_ppm(&path, n, &sizes, &palette) {
                io_err = Some(e);
                return;
            }
            frames.push(json!({
                "t": t,
                "clusters": part.cluster_count(),
                "max_cluster": part.max_cluster_size(),
                "file": path.display().to_string(),
            }));
        }
    });
    if let Some(e) = io_err {
        return Err(runtime(format!("snapshot write failed: {e}")));
    }
    Ok(json!({
        "solved": result.solved,
        "t_final": result.t_final,
        "max_exams_per_vertex": result.exam.max_first_exams_per_vertex,
        "frames": frames,
    }))
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    match cli.cmd {
        Cmd::Run(common) => {
            let cfg = common.effective()?;
            let p = cfg.p.ok_or_else(|| usage("run needs --p"))?;
            let rows = solve_rows(&cfg, &[p])?;
            let extra = if cfg.snapshot_every.is_some() {
                snapshot_run(&cfg)?
            } else {
                json!(null)
            };
            emit(&cfg, rows, extra, started)
        }
        Cmd::Sweep { common, bisect } => {
            let cfg = common.effective()?;
            let grid_spec = cfg
                .p_grid
                .as_deref()
                .ok_or_else(|| usage("sweep needs --p-grid start:stop:step"))?;
            let grid = parse_grid(grid_spec).map_err(usage)?;
            let r = cfg.resolve().map_err(usage)?;
            let strategy = if bisect { SweepStrategy::Bisect } else { SweepStrategy::Full };
            let ests = montecarlo::coupled_sweep(
                &r.topology,
                r.params,
                &grid,
                r.trials,
                r.seed,
                r.parallelism,
                strategy,
            )
            .map_err(runtime)?;
            let rows: Vec<ResultRow> = grid
                .iter()
                .zip(&ests)
                .map(|(&p, est)| ResultRow::new(&r.topology, r.params, p, r.seed, est))
                .collect();
            emit(&cfg, rows, json!({"strategy": format!("{strategy:?}")}), started)
        }
        Cmd::Pc { common, tol, lo, hi } => {
            let cfg = common.effective()?;
            let r = cfg.resolve().map_err(usage)?;
            let est = montecarlo::estimate_pc(&r.topology, r.params, r.seed, r.trials, tol, (lo, hi))
                .map_err(runtime)?;
            let rows: Vec<ResultRow> = est
                .evaluations
                .iter()
                .map(|e| {
                    let mc = montecarlo::McEstimate {
                        trials: e.trials,
                        successes: e.successes,
                        p_hat: e.successes as f64 / e.trials as f64,
                        ci_low: e.ci_low,
                        ci_high: e.ci_high,
                        tf_mean: f64::NAN,
                        tf_median: f64::NAN,
                        tf_max: 0,
                        max_exams_per_vertex: 0,
                        max_decided_pairs: 0,
                    };
                    ResultRow::new(&r.topology, r.params, e.p, r.seed, &mc)
                })
                .collect();
            let detail = json!({
                "p_lo": est.p_lo,
                "p_hi": est.p_hi,
                "p_c_hat": est.p_c_hat,
                "converged": est.converged,
                "trials_per_level": est.trials_per_level,
            });
            println!(
                "p_c in [{:.6}, {:.6}], midpoint {:.6} (converged: {})",
                est.p_lo, est.p_hi, est.p_c_hat, est.converged
            );
            emit(&cfg, rows, detail, started)
        }
        Cmd::Grow(common) => {
            let cfg = common.effective()?;
            let r = cfg.resolve_growth().map_err(usage)?;
            let p = cfg.p.ok_or_else(|| usage("grow needs --p"))?;
            let box_len = cfg.r#box.ok_or_else(|| usage("grow needs --box"))?;
            let est = montecarlo::estimate_grow(r.params, p, box_len, r.trials, r.seed, r.parallelism)
                .map_err(runtime)?;
            let detail = json!({
                "box": box_len,
                "p": p,
                "trials": est.trials,
                "reached": est.successes,
                "p_hat": est.p_hat,
                "ci_low": est.ci_low,
                "ci_high": est.ci_high,
                "rounds_median": est.tf_median,
            });
            println!("{}", serde_json::to_string_pretty(&detail).unwrap());
            if let Some(prefix) = &cfg.out {
                let summary = Summary {
                    version: env!("CARGO_PKG_VERSION"),
                    config: &cfg,
                    wall_clock_secs: started.elapsed().as_secs_f64(),
                    estimates: detail,
                };
                write_summary_file(&PathBuf::from(format!("{prefix}.json")), &summary)
                    .map_err(runtime)?;
            }
            Ok(())
        }
        Cmd::Theory(args) => theory_command(args),
        Cmd::Render(common) => {
            let cfg = common.effective()?;
            let detail = snapshot_run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&detail).unwrap());
            Ok(())
        }
        Cmd::Selftest => selftest(),
    }
}

fn quad_spec(tol: f64) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: tol,
        rel_tol: tol,
        ..QuadratureSpec::default()
    }
}

fn theory_command(args: TheoryArgs) -> Result<(), CliError> {
    let spec = quad_spec(args.tol);
    let seed = parse_seed(args.seed.as_deref().unwrap_or("0")).map_err(usage)?;
    let result = match args.name.as_str() {
        "lambda" => {
            let sigma = args.sigma.ok_or_else(|| usage("lambda needs --sigma"))?;
            let r = theory::lambda_sigma(sigma, &spec).map_err(runtime)?;
            json!({
                "name": "lambda", "sigma": sigma,
                "value": r.value, "error_estimate": r.error_estimate,
                "method": "adaptive quadrature of the Poisson-tail exponent",
            })
        }
        "nu" => {
            let sigma = args.sigma.ok_or_else(|| usage("nu needs --sigma"))?;
            let closed = theory::nu_sigma(sigma).map_err(runtime)?;
            let quad = theory::nu_sigma_quadrature(sigma, &spec).map_err(runtime)?;
            json!({
                "name": "nu", "sigma": sigma,
                "value": closed,
                "quadrature_value": quad.value,
                "error_estimate": (closed - quad.value).abs() + quad.error_estimate,
                "method": "gamma-zeta closed form cross-checked by quadrature",
            })
        }
        "lb2d" => {
            let c = args.c.ok_or_else(|| usage("lb2d needs --c"))?;
            let lam = args.lam.ok_or_else(|| usage("lb2d needs --lam"))?;
            let r = theory::lb2d_infimum(c, lam).map_err(runtime)?;
            json!({
                "name": "lb2d", "c": c, "lam": lam,
                "value": r.infimum, "argmin": r.argmin,
                "method": "scan-bracketed golden section with endpoint checks",
            })
        }
        "ub2d" => {
            let k = args.k.ok_or_else(|| usage("ub2d needs --k"))?;
            let ell = args.ell.ok_or_else(|| usage("ub2d needs --ell"))?;
            let p_site = args.p_site.ok_or_else(|| usage("ub2d needs --p-site"))?;
            let mode = match args.phi_mode.as_str() {
                "exact" => PhiEvalMode::Exact,
                "mc" => PhiEvalMode::MonteCarlo {
                    trials_per_node: args.phi_trials,
                    seed,
                },
                other => return Err(usage(format!("unknown phi mode '{other}'"))),
            };
            let r = theory::ub2d_bound(k, ell, p_site, mode, &spec).map_err(runtime)?;
            json!({
                "name": "ub2d", "k": k, "ell": ell, "p_site": p_site,
                "value": r.value, "error_estimate": r.error_estimate,
                "r_split": r.r_split, "phi_evaluations": r.phi_evaluations,
                "method": format!("{:?} phi nodes with log-singular head model", args.phi_mode),
            })
        }
        "phi" => {
            let k = args.k.ok_or_else(|| usage("phi needs --k"))?;
            let ell = args.ell.ok_or_else(|| usage("phi needs --ell"))?;
            let r = args.r.ok_or_else(|| usage("phi needs --r"))?;
            let mode = match args.phi_mode.as_str() {
                "exact" => PhiMode::Exact,
                "mc" => PhiMode::MonteCarlo { trials: args.phi_trials, seed },
                other => return Err(usage(format!("unknown phi mode '{other}'"))),
            };
            let v = theory::phi(&PhiSpec { k, ell, mode }, r).map_err(runtime)?;
            json!({
                "name": "phi", "k": k, "ell": ell, "r": r,
                "value": v,
                "method": format!("{:?}", args.phi_mode),
            })
        }
        other => return Err(usage(format!("unknown constant '{other}'"))),
    };
    let text = serde_json::to_string_pretty(&result).unwrap();
    println!("{text}");
    if let Some(out) = &args.out {
        std::fs::write(out, text).map_err(runtime)?;
    }
    Ok(())
}

fn selftest() -> Result<(), CliError> {
    let mut failures = 0;
    let mut check = |name: &str, ok: bool| {
        println!("{}: {}", name, if ok { "ok" } else { "FAILED" });
        if !ok {
            failures += 1;
        }
    };

    // Pair-function symmetry and coupling.
    let lo = EdgeSampler::lazy(11, 0.2);
    let hi = EdgeSampler::lazy(11, 0.6);
    let mut sym = true;
    let mut coupled = true;
    for i in 0..10_000u32 {
        let (u, v) = (i % 100, 100 + i / 100);
        sym &= lo.status(u, v) == lo.status(v, u);
        coupled &= !lo.status(u, v) || hi.status(u, v);
    }
    check("pair function symmetry", sym);
    check("monotone coupling", coupled);

    // Ring(3) solve probability is the connectivity cubic.
    let topo: Topology = "ring:n=3".parse().unwrap();
    let est = montecarlo::estimate_solve(&McConfig {
        topology: topo,
        params: DynamicsParams::ae(),
        p: 0.5,
        trials: 4000,
        master_seed: 2024,
        parallelism: 0,
    })
    .map_err(runtime)?;
    check(
        "ring(3) half-crossing",
        (est.p_hat - 0.5).abs() < 4.0 * (0.25f64 / 4000.0).sqrt(),
    );

    // Determinism of an estimate.
    let again = montecarlo::estimate_solve(&McConfig {
        topology: topo,
        params: DynamicsParams::ae(),
        p: 0.5,
        trials: 4000,
        master_seed: 2024,
        parallelism: 1,
    })
    .map_err(runtime)?;
    check("determinism across parallelism", est == again);

    // Exact crossing polynomial identity.
    let poly = theory::CrossingPolynomial::enumerate(1, 0).map_err(runtime)?;
    let mut phi_ok = true;
    for i in 0..=10 {
        let r = i as f64 / 10.0;
        phi_ok &= (poly.eval(r) - (2.0 * r - r * r)).abs() < 1e-12;
    }
    check("phi(1,0) quadratic", phi_ok);

    // The ring constant's sigma = 1 value.
    let lam1 = theory::lambda_sigma(1, &QuadratureSpec::default()).map_err(runtime)?;
    check(
        "lambda_1 = pi^2/6",
        (lam1.value - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-6,
    );

    // Slowed-down invariance on a small ring.
    let topo: Topology = "ring:n=16".parse().unwrap();
    let mut invariant = true;
    for s in 0..30u64 {
        let sampler = EdgeSampler::lazy(s, 0.3);
        let sync = engine::run(&topo, DynamicsParams::ae(), &sampler);
        let mut pol = engine::SlowPolicy::OneEdge(jigsaw::randomness::SplitMix64::new(s));
        let slow = engine::run_slowed(&topo, DynamicsParams::ae(), &sampler, &mut pol);
        invariant &= sync.final_partition.canonical_clusters()
            == slow.final_partition.canonical_clusters();
    }
    check("slowed-down invariance", invariant);

    if failures == 0 {
        println!("selftest: all checks passed");
        Ok(())
    } else {
        Err(runtime(format!("selftest: {failures} check(s) failed")))
    }
}

impl ExperimentConfig {
    /// Like `resolve`, but without requiring a topology (growth runs on the
    /// implicit quadrant box).
    fn resolve_growth(&self) -> Result<crate::config::Resolved, String> {
        let mut with_default = self.clone();
        if with_default.topology.is_none() {
            with_default.topology = Some("ring:n=3".into());
        }
        with_default.resolve()
    }
}

//! Trial batching, solve-probability estimation, critical-probability
//! search, stopping-time statistics, and coupled sweeps.
//!
//! Trial `i` always uses the derived seed [`derive_seed`]`(master_seed, i)`,
//! and per-trial results are reduced in trial order, so every estimate is a
//! pure function of its configuration at any parallelism degree.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{self, DynamicsParams, RunResult};
use crate::randomness::{derive_seed, mix64, EdgeSampler};
use crate::topology::Topology;

/// z for the central 95% of the normal distribution.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McError(pub String);

impl fmt::Display for McError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "monte carlo error: {}", self.0)
    }
}

impl std::error::Error for McError {}

/// A batch configuration: one topology, one parameter set, one probability.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct McConfig {
    pub topology: Topology,
    pub params: DynamicsParams,
    pub p: f64,
    pub trials: u32,
    pub master_seed: u64,
    /// Worker threads; 0 means the global pool.
    pub parallelism: usize,
}

/// Wilson score interval at confidence `z`. Always brackets the point
/// estimate (clamped against rounding at the extremes).
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0);
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    (
        (center - half).max(0.0).min(p_hat),
        (center + half).min(1.0).max(p_hat),
    )
}

/// Solve-probability estimate over a trial batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub trials: u32,
    pub successes: u32,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub tf_mean: f64,
    pub tf_median: f64,
    pub tf_max: u32,
    /// Max over trials of the per-vertex oriented-examination maximum.
    pub max_exams_per_vertex: u32,
    /// Max over trials of the decided-pair count.
    pub max_decided_pairs: u64,
}

fn summarize(outcomes: &[(bool, u32, u32, u64)]) -> McEstimate {
    let trials = outcomes.len() as u32;
    let successes = outcomes.iter().filter(|o| o.0).count() as u32;
    let (ci_low, ci_high) = wilson_interval(successes as u64, trials as u64, Z95);
    let mut tfs: Vec<u32> = outcomes.iter().map(|o| o.1).collect();
    tfs.sort_unstable();
    let tf_median = median_of_sorted(&tfs);
    let tf_mean = tfs.iter().map(|&t| t as f64).sum::<f64>() / trials as f64;
    McEstimate {
        trials,
        successes,
        p_hat: successes as f64 / trials as f64,
        ci_low,
        ci_high,
        tf_mean,
        tf_median,
        tf_max: *tfs.last().unwrap(),
        max_exams_per_vertex: outcomes.iter().map(|o| o.2).max().unwrap(),
        max_decided_pairs: outcomes.iter().map(|o| o.3).max().unwrap(),
    }
}

fn median_of_sorted(sorted: &[u32]) -> f64 {
    let n = sorted.len();
    assert!(n > 0);
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    }
}

fn run_one(topo: &Topology, params: DynamicsParams, p: f64, seed: u64) -> RunResult {
    let sampler = EdgeSampler::lazy(seed, p);
    engine::run(topo, params, &sampler)
}

/// Runs `f` over trial indices, optionally on a dedicated pool, reducing in
/// index order.
fn map_trials<T: Send, F: Fn(u32) -> T + Sync>(
    trials: u32,
    parallelism: usize,
    f: F,
) -> Vec<T> {
    let work = || (0..trials).into_par_iter().map(&f).collect();
    if parallelism == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .expect("thread pool")
            .install(work)
    }
}

/// Monte Carlo estimate of `P(Solve)`.
pub fn estimate_solve(cfg: &McConfig) -> Result<McEstimate, McError> {
    if cfg.trials == 0 {
        return Err(McError("trials must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.p) {
        return Err(McError(format!("p = {} not in [0,1]", cfg.p)));
    }
    let outcomes = map_trials(cfg.trials, cfg.parallelism, |i| {
        let res = run_one(
            &cfg.topology,
            cfg.params,
            cfg.p,
            derive_seed(cfg.master_seed, i as u64),
        );
        (
            res.solved,
            res.t_final,
            res.exam.max_oriented_exams_per_vertex,
            res.exam.decided_pairs,
        )
    });
    Ok(summarize(&outcomes))
}

/// Monte Carlo estimate of the local growth probability in an `L x L` box.
pub fn estimate_grow(
    params: DynamicsParams,
    p: f64,
    box_len: u32,
    trials: u32,
    master_seed: u64,
    parallelism: usize,
) -> Result<McEstimate, McError> {
    if trials == 0 {
        return Err(McError("trials must be >= 1".into()));
    }
    let outcomes = map_trials(trials, parallelism, |i| {
        let out = engine::local_grow(params, p, derive_seed(master_seed, i as u64), box_len);
        (out.reached, out.rounds, 0u32, 0u64)
    });
    Ok(summarize(&outcomes))
}

/// Distribution summary of the stopping time `T_f`.
#[derive(Clone, Debug, Serialize)]
pub struct TfSummary {
    pub trials: u32,
    pub min: u32,
    pub q25: u32,
    pub median: f64,
    pub q75: u32,
    pub max: u32,
    pub mean: f64,
    /// `median(log T_f) / log N`, the finite-size exponent proxy.
    pub median_log_ratio: f64,
    /// Set when a predicted exponent was supplied: whether the measured
    /// ratio lies within 0.35 of it.
    pub near_predicted: Option<bool>,
}

/// Quantiles of `T_f` over a batch; `predicted_ratio` is the asymptotic
/// `log T_f / log N` value to compare against, if any.
pub fn tf_statistics(cfg: &McConfig, predicted_ratio: Option<f64>) -> Result<TfSummary, McError> {
    if cfg.trials == 0 {
        return Err(McError("trials must be >= 1".into()));
    }
    let tfs_raw = map_trials(cfg.trials, cfg.parallelism, |i| {
        run_one(
            &cfg.topology,
            cfg.params,
            cfg.p,
            derive_seed(cfg.master_seed, i as u64),
        )
        .t_final
    });
    let mut tfs = tfs_raw;
    tfs.sort_unstable();
    let n = tfs.len();
    let median = median_of_sorted(&tfs);
    let log_n = (cfg.topology.vertex_count() as f64).ln();
    let median_log_ratio = if median >= 1.0 {
        median.ln() / log_n
    } else {
        0.0
    };
    Ok(TfSummary {
        trials: cfg.trials,
        min: tfs[0],
        q25: tfs[n / 4],
        median,
        q75: tfs[(3 * n) / 4],
        max: tfs[n - 1],
        mean: tfs.iter().map(|&t| t as f64).sum::<f64>() / n as f64,
        median_log_ratio,
        near_predicted: predicted_ratio.map(|r| (median_log_ratio - r).abs() <= 0.35),
    })
}

/// How a coupled sweep evaluates each trial along the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepStrategy {
    /// Run the dynamics at every grid point.
    Full,
    /// Binary-search the per-trial solve threshold along the grid, valid by
    /// the pathwise monotone coupling.
    Bisect,
}

/// Per-point estimates from a coupled sweep: each trial reuses one seed
/// across the whole grid, so its solve indicators are nondecreasing.
pub fn coupled_sweep(
    topo: &Topology,
    params: DynamicsParams,
    p_grid: &[f64],
    trials: u32,
    master_seed: u64,
    parallelism: usize,
    strategy: SweepStrategy,
) -> Result<Vec<McEstimate>, McError> {
    if p_grid.is_empty() {
        return Err(McError("empty probability grid".into()));
    }
    if p_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(McError("probability grid must be strictly increasing".into()));
    }
    if p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(McError("grid probabilities must lie in [0,1]".into()));
    }
    if trials == 0 {
        return Err(McError("trials must be >= 1".into()));
    }
    let m = p_grid.len();
    // Per trial: the first grid index that solves (m if none) plus the
    // stopping times of the points actually evaluated.
    let per_trial = map_trials(trials, parallelism, |i| {
        let seed = derive_seed(master_seed, i as u64);
        let mut tf: Vec<Option<u32>> = vec![None; m];
        let crossing = match strategy {
            SweepStrategy::Full => {
                let mut first = m;
                let mut prev = false;
                for (j, &p) in p_grid.iter().enumerate() {
                    let res = run_one(topo, params, p, seed);
                    tf[j] = Some(res.t_final);
                    assert!(
                        !(prev && !res.solved),
                        "solve indicator must be nondecreasing along the grid (seed {seed})"
                    );
                    if res.solved && first == m {
                        first = j;
                    }
                    prev = res.solved;
                }
                first
            }
            SweepStrategy::Bisect => {
                let (mut lo, mut hi) = (0usize, m);
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    let res = run_one(topo, params, p_grid[mid], seed);
                    tf[mid] = Some(res.t_final);
                    if res.solved {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                lo
            }
        };
        (crossing, tf)
    });
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let successes = per_trial.iter().filter(|(c, _)| *c <= j).count() as u32;
        let (ci_low, ci_high) = wilson_interval(successes as u64, trials as u64, Z95);
        let mut tfs: Vec<u32> = per_trial.iter().filter_map(|(_, tf)| tf[j]).collect();
        let (tf_mean, tf_median, tf_max) = if tfs.is_empty() {
            (f64::NAN, f64::NAN, 0)
        } else {
            tfs.sort_unstable();
            (
                tfs.iter().map(|&t| t as f64).sum::<f64>() / tfs.len() as f64,
                median_of_sorted(&tfs),
                *tfs.last().unwrap(),
            )
        };
        out.push(McEstimate {
            trials,
            successes,
            p_hat: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            tf_mean,
            tf_median,
            tf_max,
            max_exams_per_vertex: 0,
            max_decided_pairs: 0,
        });
    }
    Ok(out)
}

/// One bisection evaluation in a critical-probability search.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PcEvaluation {
    pub p: f64,
    pub trials: u32,
    pub successes: u32,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Residual bracket around the half-crossing of `P(Solve)`.
#[derive(Clone, Debug, Serialize)]
pub struct PcEstimate {
    pub p_lo: f64,
    pub p_hi: f64,
    pub p_c_hat: f64,
    pub trials_per_level: u32,
    pub converged: bool,
    pub evaluations: Vec<PcEvaluation>,
}

/// Budget multiplier cap for trial doubling at an ambiguous level.
const PC_DOUBLING_CAP: u32 = 64;

/// Stochastic bisection for the `p` with `P(Solve) = 1/2`.
///
/// The bracket moves only when the Wilson interval at the midpoint excludes
/// one half; otherwise the level's trial count doubles, up to `64 x` the
/// base, after which the search stops and reports the residual bracket.
pub fn estimate_pc(
    topo: &Topology,
    params: DynamicsParams,
    master_seed: u64,
    trials_per_level: u32,
    tol: f64,
    bracket: (f64, f64),
) -> Result<PcEstimate, McError> {
    if tol <= 0.0 {
        return Err(McError("tolerance must be positive".into()));
    }
    if trials_per_level == 0 {
        return Err(McError("trials_per_level must be >= 1".into()));
    }
    let (mut p_lo, mut p_hi) = bracket;
    if !(0.0..=1.0).contains(&p_lo) || !(0.0..=1.0).contains(&p_hi) || p_lo >= p_hi {
        return Err(McError(format!("bad bracket [{p_lo}, {p_hi}]")));
    }
    let mut evaluations = Vec::new();
    let eval = |p: f64, trials: u32, tag: u64, evals: &mut Vec<PcEvaluation>| {
        let seed = mix64(master_seed ^ mix64(tag));
        let outcomes = map_trials(trials, 0, |i| {
            (run_one(topo, params, p, derive_seed(seed, i as u64)).solved, 0, 0, 0)
        });
        let successes = outcomes.iter().filter(|o| o.0).count() as u32;
        let (ci_low, ci_high) = wilson_interval(successes as u64, trials as u64, Z95);
        evals.push(PcEvaluation { p, trials, successes, ci_low, ci_high });
        (ci_low, ci_high)
    };

    // The bracket must straddle the half-crossing to begin with.
    let (lo_cil, _) = eval(p_lo, trials_per_level, 1, &mut evaluations);
    if lo_cil > 0.5 {
        return Err(McError(format!(
            "bracket does not cross: P(Solve) at p_lo = {p_lo} is already above 1/2"
        )));
    }
    let (_, hi_cih) = eval(p_hi, trials_per_level, 2, &mut evaluations);
    if hi_cih < 0.5 {
        return Err(McError(format!(
            "bracket does not cross: P(Solve) at p_hi = {p_hi} is still below 1/2"
        )));
    }

    let mut level = 0u64;
    let mut converged = true;
    while p_hi - p_lo >= tol {
        level += 1;
        let mid = 0.5 * (p_lo + p_hi);
        let mut trials = trials_per_level;
        let mut attempt = 0u64;
        loop {
            let (ci_low, ci_high) =
                eval(mid, trials, 1000 + level * 256 + attempt, &mut evaluations);
            if ci_high < 0.5 {
                p_lo = mid;
                break;
            }
            if ci_low > 0.5 {
                p_hi = mid;
                break;
            }
            if trials >= trials_per_level.saturating_mul(PC_DOUBLING_CAP) {
                converged = false;
                break;
            }
            trials *= 2;
            attempt += 1;
        }
        if !converged {
            break;
        }
    }
    Ok(PcEstimate {
        p_lo,
        p_hi,
        p_c_hat: 0.5 * (p_lo + p_hi),
        trials_per_level,
        converged,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Theta;
    use crate::topology::Family;

    fn ring(n: u32) -> Topology {
        Topology::new(Family::Ring { n }).unwrap()
    }

    fn ring3_cfg(p: f64, trials: u32, seed: u64) -> McConfig {
        McConfig {
            topology: ring(3),
            params: DynamicsParams::ae(),
            p,
            trials,
            master_seed: seed,
            parallelism: 0,
        }
    }

    #[test]
    fn degenerate_probabilities_are_exact() {
        let zero = estimate_solve(&ring3_cfg(0.0, 200, 1)).unwrap();
        assert_eq!(zero.successes, 0);
        let one = estimate_solve(&ring3_cfg(1.0, 200, 1)).unwrap();
        assert_eq!(one.successes, 200);
        assert_eq!(one.tf_median, 1.0);
        assert!(zero.ci_low <= zero.p_hat && zero.p_hat <= zero.ci_high);
    }

    #[test]
    fn ring3_matches_the_connectivity_cubic() {
        // On the 3-ring every pair is puzzle-adjacent, so Solve is exactly
        // people-graph connectivity: 3p^2 - 2p^3, which is 1/2 at p = 1/2.
        let est = estimate_solve(&ring3_cfg(0.5, 10_000, 42)).unwrap();
        let se = (0.5 * 0.5 / 10_000f64).sqrt();
        assert!(
            (est.p_hat - 0.5).abs() < 3.0 * se,
            "p_hat {} departs from 0.5",
            est.p_hat
        );
        // And at another p for the cubic itself.
        let p = 0.3f64;
        let exact = 3.0 * p * p - 2.0 * p * p * p;
        let est = estimate_solve(&ring3_cfg(p, 10_000, 7)).unwrap();
        let se = (exact * (1.0 - exact) / 10_000f64).sqrt();
        assert!((est.p_hat - exact).abs() < 4.0 * se);
    }

    #[test]
    fn estimates_are_parallelism_invariant() {
        let mut cfg = ring3_cfg(0.4, 500, 99);
        let a = estimate_solve(&cfg).unwrap();
        cfg.parallelism = 1;
        let b = estimate_solve(&cfg).unwrap();
        cfg.parallelism = 2;
        let c = estimate_solve(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn wilson_interval_sanity_and_coverage() {
        // Interval brackets the point estimate.
        for (s, n) in [(0u64, 50u64), (50, 50), (17, 50), (1, 1000)] {
            let (lo, hi) = wilson_interval(s, n, Z95);
            let p_hat = s as f64 / n as f64;
            assert!(0.0 <= lo && lo <= p_hat && p_hat <= hi && hi <= 1.0);
        }
        // Empirical coverage on a Bernoulli(1/2) stream.
        let mut covered = 0;
        let reps = 1000;
        let per = 100u64;
        for rep in 0..reps {
            let mut s = 0u64;
            for i in 0..per {
                if crate::randomness::keyed_uniform(777, rep * per + i) < 0.5 {
                    s += 1;
                }
            }
            let (lo, hi) = wilson_interval(s, per, Z95);
            if lo <= 0.5 && 0.5 <= hi {
                covered += 1;
            }
        }
        let coverage = covered as f64 / reps as f64;
        assert!(
            (0.90..=0.99).contains(&coverage),
            "95% interval covered {coverage}"
        );
    }

    #[test]
    fn tf_statistics_degenerate_cases() {
        let s = tf_statistics(&ring3_cfg(1.0, 100, 5), None).unwrap();
        assert_eq!((s.min, s.max), (1, 1));
        assert_eq!(s.median, 1.0);
        let s = tf_statistics(&ring3_cfg(0.0, 100, 5), None).unwrap();
        assert_eq!((s.min, s.max), (0, 0));
    }

    #[test]
    fn coupled_sweep_is_monotone_and_strategy_invariant() {
        let topo = ring(24);
        let grid: Vec<f64> = vec![0.02, 0.1, 0.2, 0.35, 0.5, 0.8];
        let full = coupled_sweep(
            &topo,
            DynamicsParams::ae(),
            &grid,
            300,
            11,
            0,
            SweepStrategy::Full,
        )
        .unwrap();
        let bis = coupled_sweep(
            &topo,
            DynamicsParams::ae(),
            &grid,
            300,
            11,
            0,
            SweepStrategy::Bisect,
        )
        .unwrap();
        for (a, b) in full.iter().zip(&bis) {
            assert_eq!(a.successes, b.successes, "strategies must agree per point");
        }
        for w in full.windows(2) {
            assert!(w[0].p_hat <= w[1].p_hat);
        }
        // Degenerate endpoints on a grid containing 0 and 1.
        let grid = vec![0.0, 0.5, 1.0];
        let est = coupled_sweep(
            &topo,
            DynamicsParams::ae(),
            &grid,
            50,
            3,
            0,
            SweepStrategy::Full,
        )
        .unwrap();
        assert_eq!(est[0].successes, 0);
        assert_eq!(est[2].successes, 50);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let topo = ring(8);
        for grid in [vec![], vec![0.5, 0.5], vec![0.5, 0.2]] {
            assert!(coupled_sweep(
                &topo,
                DynamicsParams::ae(),
                &grid,
                10,
                1,
                0,
                SweepStrategy::Full
            )
            .is_err());
        }
    }

    #[test]
    fn pc_bisection_finds_the_ring3_crossing() {
        let est = estimate_pc(&ring(3), DynamicsParams::ae(), 31, 400, 0.02, (0.0, 1.0)).unwrap();
        // Exact p_c is 1/2 from the cubic; allow bracket width plus noise.
        assert!(
            (est.p_c_hat - 0.5).abs() < 0.06,
            "p_c_hat = {}",
            est.p_c_hat
        );
        assert!(!est.evaluations.is_empty());
    }

    #[test]
    fn pc_rejects_non_crossing_brackets() {
        // On the 3-ring P(Solve)(0.9) is essentially 1, so a bracket sitting
        // above the crossing errors out.
        let err = estimate_pc(
            &ring(3),
            DynamicsParams::ae(),
            5,
            200,
            0.05,
            (0.9, 0.99),
        );
        assert!(err.is_err());
    }

    #[test]
    fn zero_trials_is_a_usage_error() {
        assert!(estimate_solve(&ring3_cfg(0.5, 0, 1)).is_err());
    }

    #[test]
    fn theta_two_params_run_through_the_stack() {
        let topo = Topology::new(Family::Torus { n: 6, d: 2 }).unwrap();
        let params = DynamicsParams::threshold(1, 1, Theta::Finite(2)).unwrap();
        let cfg = McConfig {
            topology: topo,
            params,
            p: 0.2,
            trials: 50,
            master_seed: 8,
            parallelism: 0,
        };
        let est = estimate_solve(&cfg).unwrap();
        assert!(est.p_hat >= 0.0 && est.p_hat <= 1.0);
    }
}

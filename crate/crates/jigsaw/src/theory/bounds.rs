//! The two-dimensional critical-probability bound computations and the
//! growth lower bound for the corner-exemption dynamics.

use super::phi::{CrossingPolynomial, PhiMode};
use super::quad::{adaptive_simpson, QuadratureSpec};
use super::special::{dilog, g_sigma, ln_choose};
use super::TheoryError;
use crate::randomness::mix64;

const PI2_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
/// Connected-subset growth constant of the square lattice used by the
/// counting bound.
const SITE_ANIMAL_GROWTH: f64 = 4.65;

#[derive(Clone, Copy, Debug)]
pub struct Lb2dResult {
    pub infimum: f64,
    pub argmin: f64,
}

/// Objective of the no-large-internally-solved-set bound:
/// `F(a) = -a c log(1 - e^(-lam a c)) - a c log 4.65` over `a` in `[1, 2]`.
///
/// `F` need not be unimodal (it can peak between two boundary minima), so a
/// coarse scan brackets the best region before golden-section refinement,
/// and both endpoints are checked.
pub fn lb2d_infimum(c: f64, lam: f64) -> Result<Lb2dResult, TheoryError> {
    if !(c > 0.0) || !(lam > 0.0) {
        return Err(TheoryError(format!(
            "lb2d objective needs c > 0 and lam > 0, got c = {c}, lam = {lam}"
        )));
    }
    let f = |a: f64| -> f64 {
        let ac = a * c;
        let g = -(-(-lam * ac).exp()).ln_1p(); // -log(1 - e^(-lam a c))
        ac * g - ac * SITE_ANIMAL_GROWTH.ln()
    };
    let scan = 1024usize;
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..=scan {
        let a = 1.0 + i as f64 / scan as f64;
        let v = f(a);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut lo = 1.0 + best_i.saturating_sub(1) as f64 / scan as f64;
    let mut hi = 1.0 + (best_i + 1).min(scan) as f64 / scan as f64;
    // Golden-section refinement inside the bracketing interval.
    let phi_ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi_ratio * (hi - lo);
    let mut x2 = lo + phi_ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi_ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi_ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut best = (f(0.5 * (lo + hi)), 0.5 * (lo + hi));
    for a in [1.0, 2.0] {
        let v = f(a);
        if v < best.0 {
            best = (v, a);
        }
    }
    Ok(Lb2dResult {
        infimum: best.0,
        argmin: best.1,
    })
}

/// How `ub2d_bound` evaluates the crossing probability at quadrature nodes.
#[derive(Clone, Copy, Debug)]
pub enum PhiEvalMode {
    Exact,
    MonteCarlo { trials_per_node: u32, seed: u64 },
}

impl PhiEvalMode {
    pub fn to_phi_mode(self, node_tag: u64) -> PhiMode {
        match self {
            PhiEvalMode::Exact => PhiMode::Exact,
            PhiEvalMode::MonteCarlo { trials_per_node, seed } => PhiMode::MonteCarlo {
                trials: trials_per_node,
                seed: mix64(seed ^ mix64(node_tag)),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ub2dResult {
    pub value: f64,
    pub error_estimate: f64,
    /// Below this `r` the log-singular head model replaced direct
    /// evaluation.
    pub r_split: f64,
    pub phi_evaluations: u64,
}

/// The torus upper-bound integral
/// `1/2 int_0^rmax -log phi_{k,l}(1 - e^(-(k+l) r)) dr` with
/// `rmax = -log(1 - p_site) / (k + l)`.
///
/// As `r -> 0` the crossing probability behaves like `C q^(k+l)` with
/// `q = 1 - e^(-(k+l) r)`, an integrable log singularity. Direct evaluation
/// stops at the smallest reliable node `r_split`; below it the integrand is
/// modeled as `c0 + c1 q(r) + (k+l) g_1((k+l) r)`, with `(c0, c1)` fitted at
/// the two smallest reliable nodes and the model integrated in closed form
/// via the dilogarithm. With exact crossing polynomials the split sits deep
/// in the head and the model error is negligible; with Monte Carlo nodes
/// the split is where the estimate keeps at least ~100 successes.
pub fn ub2d_bound(
    k: u32,
    ell: u32,
    p_site: f64,
    mode: PhiEvalMode,
    quad: &QuadratureSpec,
) -> Result<Ub2dResult, TheoryError> {
    if !(0.0 < p_site && p_site < 1.0) {
        return Err(TheoryError(format!("p_site = {p_site} not in (0,1)")));
    }
    let j0 = (k + ell) as f64;
    let rmax = -(1.0 - p_site).ln() / j0;
    let q_of = |r: f64| -(-j0 * r).exp_m1();

    let mut phi_evals: u64 = 0;
    // Exact polynomials are enumerated once and reused at every node.
    let exact_poly = match mode {
        PhiEvalMode::Exact => {
            if k > 6 {
                return Err(TheoryError(format!(
                    "exact phi supports k <= 6, got k = {k}"
                )));
            }
            Some(CrossingPolynomial::enumerate(k, ell)?)
        }
        PhiEvalMode::MonteCarlo { .. } => None,
    };
    let mut phi_at = |r: f64| -> Result<f64, TheoryError> {
        phi_evals += 1;
        let q = q_of(r);
        match (&exact_poly, mode) {
            (Some(poly), _) => Ok(poly.eval(q)),
            (None, PhiEvalMode::MonteCarlo { trials_per_node, seed }) => {
                super::phi::phi_monte_carlo(
                    k,
                    ell,
                    trials_per_node,
                    mix64(seed ^ mix64(r.to_bits())),
                    q,
                )
            }
            (None, PhiEvalMode::Exact) => unreachable!(),
        }
    };

    // Choose the split point: walk down geometrically from rmax until the
    // crossing probability is no longer reliably measurable.
    let min_reliable = match mode {
        PhiEvalMode::Exact => 1e-280,
        PhiEvalMode::MonteCarlo { trials_per_node, .. } => 100.0 / trials_per_node as f64,
    };
    let decay = match mode {
        PhiEvalMode::Exact => 0.25,
        PhiEvalMode::MonteCarlo { .. } => 0.7,
    };
    let mut r_split = rmax;
    let mut below = Vec::new(); // (r, phi) at the two smallest reliable nodes
    let mut r = rmax * decay;
    let floor = rmax * 1e-6;
    loop {
        let v = phi_at(r)?;
        if v < min_reliable || r < floor {
            break;
        }
        r_split = r;
        below.push((r, v));
        if below.len() > 2 {
            below.remove(0);
        }
        r *= decay;
    }
    if below.len() < 2 {
        return Err(TheoryError(
            "could not bracket the singular head: phi unmeasurably small across the domain".into(),
        ));
    }

    // Fit h(r) ~ c0 + c1 q + j0 g_1(j0 r) at the two smallest reliable nodes.
    let h_of = |phi_v: f64| -> f64 { -(phi_v).ln() };
    let model_base = |r: f64| -> f64 { j0 * g_sigma(1, j0 * r).unwrap_or(f64::INFINITY) };
    let (ra, pa) = below[0];
    let (rb, pb) = below[1];
    let (qa, qb) = (q_of(ra), q_of(rb));
    let ya = h_of(pa) - model_base(ra);
    let yb = h_of(pb) - model_base(rb);
    let c1 = (yb - ya) / (qb - qa);
    let c0 = ya - c1 * qa;
    // Closed-form head: int_0^z g_1(y) dy = pi^2/6 - Li2(e^-z).
    let z = j0 * r_split;
    let head = c0 * r_split
        + c1 * (r_split - q_of(r_split) / j0)
        + (PI2_6 - dilog((-z).exp()));
    let head_err = match mode {
        PhiEvalMode::Exact => c1.abs() * q_of(r_split).powi(2) * r_split,
        PhiEvalMode::MonteCarlo { .. } => (c1.abs() * q_of(r_split) + 0.2) * r_split,
    };

    // Numeric part on [r_split, rmax].
    let (numeric, numeric_err) = match mode {
        PhiEvalMode::Exact => {
            let mut err: Option<TheoryError> = None;
            let mut integrand = |r: f64| -> f64 {
                match phi_at(r) {
                    Ok(v) if v > 0.0 => -(v.ln()),
                    Ok(_) => {
                        err = Some(TheoryError(format!(
                            "phi evaluated to 0 at r = {r} inside the integration domain"
                        )));
                        0.0
                    }
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            };
            let res = adaptive_simpson(&mut integrand, r_split, rmax, quad)?;
            if let Some(e) = err {
                return Err(e);
            }
            (res.value, res.error_estimate)
        }
        PhiEvalMode::MonteCarlo { .. } => {
            // Fixed log-spaced composite Simpson: adaptive refinement would
            // chase Monte Carlo noise instead of converging.
            let panels = 96usize;
            let (ua, ub_) = (r_split.ln(), rmax.ln());
            let mut value = 0.0;
            let h = (ub_ - ua) / panels as f64;
            let mut eval_u = |u: f64| -> Result<f64, TheoryError> {
                let r = u.exp();
                let v = phi_at(r)?;
                if v <= 0.0 {
                    return Err(TheoryError(format!(
                        "phi evaluated to 0 at r = {r} inside the integration domain"
                    )));
                }
                Ok(-(v.ln()) * r) // du-substitution Jacobian
            };
            let mut prev = eval_u(ua)?;
            for i in 0..panels {
                let u0 = ua + i as f64 * h;
                let um = u0 + 0.5 * h;
                let u1 = u0 + h;
                let fm = eval_u(um)?;
                let f1 = eval_u(u1)?;
                value += h / 6.0 * (prev + 4.0 * fm + f1);
                prev = f1;
            }
            // Node noise is ~ 1/sqrt(min successes) on the log scale.
            (value, 0.1 * (rmax - r_split) / (panels as f64).sqrt())
        }
    };

    Ok(Ub2dResult {
        value: 0.5 * (head + numeric),
        error_estimate: 0.5 * (head_err + numeric_err),
        r_split,
        phi_evaluations: phi_evals,
    })
}

/// Finite truncation of the growth-probability lower bound for the
/// corner-exemption dynamics (`theta = 2`, `tau = 1`):
/// `p^(2(sigma+1)) prod_{k=sigma+1}^K [1 - P(Bin(k^2, p) < sigma)^k]^2`,
/// with exact binomial tails in log space.
pub fn grow_lower_bound_theta2(sigma: u32, p: f64, cap_k: u32) -> Result<f64, TheoryError> {
    if !(0.0 < p && p < 1.0) {
        return Err(TheoryError(format!("p = {p} not in (0,1)")));
    }
    if cap_k <= sigma + 1 {
        return Err(TheoryError(format!(
            "truncation K = {cap_k} must exceed sigma + 1 = {}",
            sigma + 1
        )));
    }
    let ln_p = p.ln();
    let ln_1p = (1.0 - p).ln();
    let mut ln_total = 2.0 * (sigma as f64 + 1.0) * ln_p;
    for k in (sigma + 1)..=cap_k {
        let m = (k as u64) * (k as u64);
        // ln P(Bin(m, p) < sigma) by log-sum-exp over i < sigma.
        let mut ln_terms: Vec<f64> = Vec::with_capacity(sigma as usize);
        for i in 0..sigma as u64 {
            ln_terms.push(ln_choose(m, i) + i as f64 * ln_p + (m - i) as f64 * ln_1p);
        }
        let peak = ln_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ln_q = peak + ln_terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln();
        // factor = 1 - Q^k; ln(1 - e^x) with x = k ln Q <= 0.
        let x = k as f64 * ln_q;
        if x >= 0.0 {
            return Err(TheoryError("binomial tail exceeded 1".into()));
        }
        ln_total += 2.0 * (-(x.exp())).ln_1p();
    }
    Ok(ln_total.exp())
}

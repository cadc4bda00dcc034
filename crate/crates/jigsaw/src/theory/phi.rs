//! Crossing probabilities on the triangle `Q_k = {(x,y): x+y <= k}`.
//!
//! `phi_{k,l}(r)`: with the origin open and every other site of `Q_k` open
//! independently with probability `r`, the probability that the open
//! cluster of the origin meets the line `x + y = k` and has at least
//! `k + 1 + l` sites.
//!
//! Exact mode enumerates all open/closed configurations of the non-origin
//! sites once, bucketing by open count; the result is the polynomial
//! `sum_j N_j r^j (1-r)^(m-j)` of degree `m = k(k+3)/2`, evaluable at any
//! `r`. Sites live on u64 bitmasks and the origin cluster is grown by
//! per-site adjacency masks, so one configuration costs a few dozen cycles;
//! `k = 6` means `2^27` configurations and is the practical exact limit.

use rayon::prelude::*;

use super::TheoryError;
use crate::randomness::keyed_uniform;

/// Evaluation mode for one `phi_{k,l}` request.
#[derive(Clone, Copy, Debug)]
pub enum PhiMode {
    Exact,
    MonteCarlo { trials: u32, seed: u64 },
}

#[derive(Clone, Copy, Debug)]
pub struct PhiSpec {
    pub k: u32,
    pub ell: u32,
    pub mode: PhiMode,
}

/// Site layout and adjacency of `Q_k`, origin at index 0.
pub(crate) struct TriangleLattice {
    pub site_count: usize,
    pub adj: Vec<u64>,
    pub line_mask: u64,
}

impl TriangleLattice {
    pub fn new(k: u32) -> Result<Self, TheoryError> {
        if !(1..=9).contains(&k) {
            return Err(TheoryError(format!(
                "triangle size k = {k} outside the supported range 1..=9"
            )));
        }
        let mut coords: Vec<(u32, u32)> = vec![(0, 0)];
        for y in 0..=k {
            for x in 0..=(k - y) {
                if (x, y) != (0, 0) {
                    coords.push((x, y));
                }
            }
        }
        let site_count = coords.len();
        debug_assert_eq!(site_count as u32, (k + 1) * (k + 2) / 2);
        let index_of = |x: u32, y: u32| -> Option<usize> {
            coords.iter().position(|&c| c == (x, y))
        };
        let mut adj = vec![0u64; site_count];
        let mut line_mask = 0u64;
        for (i, &(x, y)) in coords.iter().enumerate() {
            if x + y == k {
                line_mask |= 1 << i;
            }
            let mut neighbors = Vec::new();
            if x > 0 {
                neighbors.push((x - 1, y));
            }
            if y > 0 {
                neighbors.push((x, y - 1));
            }
            if x + y < k {
                neighbors.push((x + 1, y));
                neighbors.push((x, y + 1));
            }
            for (nx, ny) in neighbors {
                if let Some(j) = index_of(nx, ny) {
                    adj[i] |= 1 << j;
                }
            }
        }
        Ok(TriangleLattice {
            site_count,
            adj,
            line_mask,
        })
    }

    /// Whether the origin's open cluster meets the far line with at least
    /// `min_size` sites. Bit 0 (the origin) must be set in `open`.
    #[inline]
    pub fn origin_cluster_crosses(&self, open: u64, min_size: u32) -> bool {
        let mut cluster = 1u64;
        let mut frontier = 1u64;
        while frontier != 0 {
            let mut reach = 0u64;
            let mut f = frontier;
            while f != 0 {
                let b = f.trailing_zeros() as usize;
                f &= f - 1;
                reach |= self.adj[b];
            }
            frontier = reach & open & !cluster;
            cluster |= frontier;
        }
        cluster & self.line_mask != 0 && cluster.count_ones() >= min_size
    }
}

/// Exact crossing polynomial: counts of qualifying configurations bucketed
/// by number of open non-origin sites.
#[derive(Clone, Debug)]
pub struct CrossingPolynomial {
    pub k: u32,
    pub ell: u32,
    /// Non-origin site count `m`; the polynomial degree bound.
    pub m: usize,
    /// `counts[j]`: qualifying configurations with exactly `j` open
    /// non-origin sites.
    pub counts: Vec<u64>,
}

impl CrossingPolynomial {
    /// Full enumeration of the `2^m` configurations.
    pub fn enumerate(k: u32, ell: u32) -> Result<Self, TheoryError> {
        let lattice = TriangleLattice::new(k)?;
        let m = lattice.site_count - 1;
        if m > 28 {
            return Err(TheoryError(format!(
                "exact phi enumeration limited to 2^28 configurations (k = {k} has 2^{m})"
            )));
        }
        let min_size = k + 1 + ell;
        if min_size as usize > lattice.site_count {
            return Err(TheoryError(format!(
                "k + 1 + ell = {min_size} exceeds the {} sites of the triangle",
                lattice.site_count
            )));
        }
        let total: u64 = 1 << m;
        let chunk: u64 = 1 << 16;
        let chunks = total.div_ceil(chunk);
        let counts = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut local = vec![0u64; m + 1];
                let lo = c * chunk;
                let hi = total.min(lo + chunk);
                for config in lo..hi {
                    let open = (config << 1) | 1;
                    if lattice.origin_cluster_crosses(open, min_size) {
                        local[config.count_ones() as usize] += 1;
                    }
                }
                local
            })
            .reduce(
                || vec![0u64; m + 1],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );
        Ok(CrossingPolynomial { k, ell, m, counts })
    }

    /// Evaluates `sum_j N_j r^j (1-r)^(m-j)`; log-space terms keep tiny
    /// probabilities exact far below where direct powers underflow.
    pub fn eval(&self, r: f64) -> f64 {
        assert!((0.0..=1.0).contains(&r), "phi evaluated outside [0,1]");
        if r == 0.0 {
            return self.counts[0] as f64;
        }
        if r == 1.0 {
            return self.counts[self.m] as f64;
        }
        let (ln_r, ln_1r) = (r.ln(), (1.0 - r).ln());
        self.counts
            .iter()
            .enumerate()
            .filter(|&(_, &n)| n > 0)
            .map(|(j, &n)| {
                ((n as f64).ln() + j as f64 * ln_r + (self.m - j) as f64 * ln_1r).exp()
            })
            .sum()
    }
}

/// Monte Carlo estimate of `phi_{k,l}(r)`: `trials` independent site
/// configurations from the keyed counter generator, so estimates at
/// different `r` under one seed are coupled and monotone.
pub fn phi_monte_carlo(
    k: u32,
    ell: u32,
    trials: u32,
    seed: u64,
    r: f64,
) -> Result<f64, TheoryError> {
    if trials == 0 {
        return Err(TheoryError("phi monte carlo needs trials >= 1".into()));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(TheoryError(format!("phi evaluated at r = {r} outside [0,1]")));
    }
    let lattice = TriangleLattice::new(k)?;
    let m = lattice.site_count - 1;
    let min_size = k + 1 + ell;
    if min_size as usize > lattice.site_count {
        return Err(TheoryError(format!(
            "k + 1 + ell = {min_size} exceeds the {} sites of the triangle",
            lattice.site_count
        )));
    }
    let hits: u64 = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut open = 1u64;
            for site in 1..=m as u64 {
                if keyed_uniform(seed, (t << 32) | site) < r {
                    open |= 1 << site;
                }
            }
            u64::from(lattice.origin_cluster_crosses(open, min_size))
        })
        .sum();
    Ok(hits as f64 / trials as f64)
}

/// `phi_{k,l}(r)` under the requested mode. Exact mode re-enumerates per
/// call; hold a [`CrossingPolynomial`] for repeated evaluations.
pub fn phi(spec: &PhiSpec, r: f64) -> Result<f64, TheoryError> {
    if !(0.0..=1.0).contains(&r) {
        return Err(TheoryError(format!("phi evaluated at r = {r} outside [0,1]")));
    }
    match spec.mode {
        PhiMode::Exact => {
            if spec.k > 6 {
                return Err(TheoryError(format!(
                    "exact phi supports k <= 6, got k = {}",
                    spec.k
                )));
            }
            Ok(CrossingPolynomial::enumerate(spec.k, spec.ell)?.eval(r))
        }
        PhiMode::MonteCarlo { trials, seed } => phi_monte_carlo(spec.k, spec.ell, trials, seed, r),
    }
}

//! Shared test support: a from-definition reference evaluator of the
//! merging dynamics and random-instance helpers.
//!
//! The reference keeps clusters as plain vertex sets and re-derives every
//! merge condition with literal double loops each round: no union-find, no
//! lazy sampling, no incremental state. It is the independent oracle the
//! engine is checked against.
#![allow(dead_code)]

use jigsaw::engine::{DynamicsParams, MergeRule, Theta};
use jigsaw::randomness::SplitMix64;
use jigsaw::topology::Topology;

/// Dense instance: adjacency matrices for both graphs.
pub struct RefInstance {
    pub n: usize,
    pub puz: Vec<Vec<bool>>,
    pub ppl: Vec<Vec<bool>>,
}

impl RefInstance {
    pub fn new(n: usize) -> Self {
        RefInstance {
            n,
            puz: vec![vec![false; n]; n],
            ppl: vec![vec![false; n]; n],
        }
    }

    pub fn from_topology(topo: &Topology) -> Self {
        let n = topo.vertex_count() as usize;
        let mut inst = Self::new(n);
        for (u, v) in topo.edges() {
            inst.puz[u as usize][v as usize] = true;
            inst.puz[v as usize][u as usize] = true;
        }
        inst
    }

    /// Path graph on `m` vertices (an interval of a ring, relabeled 0..m).
    pub fn path(m: usize) -> Self {
        let mut inst = Self::new(m);
        for i in 0..m.saturating_sub(1) {
            inst.puz[i][i + 1] = true;
            inst.puz[i + 1][i] = true;
        }
        inst
    }

    pub fn set_people_edges(&mut self, edges: &[(usize, usize)]) {
        for row in &mut self.ppl {
            row.fill(false);
        }
        for &(u, v) in edges {
            self.ppl[u][v] = true;
            self.ppl[v][u] = true;
        }
    }

    /// Decodes bit `b` of `mask` as the people edge with index `b` in the
    /// lexicographic pair order (0,1), (0,2), ..., (n-2, n-1).
    pub fn set_people_mask(&mut self, mask: u64) {
        let mut edges = Vec::new();
        let mut bit = 0;
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if mask >> bit & 1 == 1 {
                    edges.push((u, v));
                }
                bit += 1;
            }
        }
        self.set_people_edges(&edges);
    }

    pub fn people_edge_list(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.ppl[u][v] {
                    out.push((u as u32, v as u32));
                }
            }
        }
        out
    }
}

fn cpuzzle(inst: &RefInstance, v: usize, set: &[usize]) -> usize {
    set.iter().filter(|&&w| w != v && inst.puz[v][w]).count()
}

fn cpeople(inst: &RefInstance, v: usize, set: &[usize]) -> usize {
    set.iter().filter(|&&w| w != v && inst.ppl[v][w]).count()
}

fn pair_merges(inst: &RefInstance, params: DynamicsParams, a: &[usize], b: &[usize]) -> bool {
    match params.rule {
        MergeRule::Basic => {
            let people = a.iter().any(|&u| b.iter().any(|&w| inst.ppl[u][w]));
            let puzzle = a.iter().any(|&u| b.iter().any(|&w| inst.puz[u][w]));
            people && puzzle
        }
        MergeRule::Threshold => {
            // Doubly connected cross pair.
            if a.iter().any(|&u| b.iter().any(|&w| inst.puz[u][w] && inst.ppl[u][w])) {
                return true;
            }
            // Exemption and verified-link conditions, both orientations.
            for (from, into) in [(a, b), (b, a)] {
                for &v in from {
                    let cpuz = cpuzzle(inst, v, into);
                    if let Theta::Finite(t) = params.theta {
                        if cpuz >= t as usize {
                            return true;
                        }
                    }
                    if cpuz >= params.tau as usize && cpeople(inst, v, into) >= params.sigma as usize
                    {
                        return true;
                    }
                }
            }
            false
        }
    }
}

/// Final partition from singletons by literal synchronous rounds.
pub fn reference_final(inst: &RefInstance, params: DynamicsParams) -> Vec<Vec<usize>> {
    let mut parts: Vec<Vec<usize>> = (0..inst.n).map(|v| vec![v]).collect();
    loop {
        let m = parts.len();
        let mut label: Vec<usize> = (0..m).collect();
        let mut merged_any = false;
        for i in 0..m {
            for j in (i + 1)..m {
                if pair_merges(inst, params, &parts[i], &parts[j]) {
                    // Label propagation for the component merge.
                    let (li, lj) = (label[i], label[j]);
                    if li != lj {
                        for l in label.iter_mut() {
                            if *l == lj {
                                *l = li;
                            }
                        }
                    }
                    merged_any = true;
                }
            }
        }
        if !merged_any {
            break;
        }
        let mut next: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; m];
        for i in 0..m {
            let l = label[i];
            if slot[l] == usize::MAX {
                slot[l] = next.len();
                next.push(Vec::new());
            }
            next[slot[l]].append(&mut parts[i]);
        }
        parts = next;
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    parts.sort();
    parts
}

pub fn reference_solves(inst: &RefInstance, params: DynamicsParams) -> bool {
    reference_final(inst, params).len() == 1
}

/// Random parameter draw shared by the randomized suites.
pub fn random_params(rng: &mut SplitMix64, allow_basic: bool) -> DynamicsParams {
    let sigma = 1 + rng.below(3) as u32;
    let tau = 1 + rng.below(2) as u32;
    let theta = match rng.below(3) {
        0 => Theta::Infinite,
        _ => Theta::Finite(tau + rng.below(3) as u32),
    };
    let rule = if allow_basic && rng.below(4) == 0 {
        MergeRule::Basic
    } else {
        MergeRule::Threshold
    };
    DynamicsParams::new(sigma, tau, theta, rule).expect("valid random params")
}

#[allow(dead_code)]
pub fn pair_count(n: usize) -> u32 {
    (n * (n - 1) / 2) as u32
}

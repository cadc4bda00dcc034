//! Local growth from a single center, the finite-box proxy for nucleation.
//!
//! The puzzle graph is the `[0, L)^2` grid (no wrap-around) standing in for
//! the first quadrant, with the center at the origin. Each round adjoins
//! every outside cell that is doubly connected to the current set, or has at
//! least `theta` grid neighbors in it, or has at least `tau` grid neighbors
//! and at least `sigma` people neighbors in it. `reached` records whether
//! the grown cluster ever touches the far boundary `{x = L-1} U {y = L-1}`;
//! the dependence on `L` is the caller's to report.

use super::{DynamicsParams, Theta};
use crate::randomness::EdgeSampler;

#[derive(Clone, Debug)]
pub struct GrowOutcome {
    /// The grown cluster touched the far boundary of the box.
    pub reached: bool,
    /// Cells of the final cluster, in join order (origin first).
    pub cluster: Vec<u32>,
    /// Number of growth rounds until the fixed point.
    pub rounds: u32,
}

#[derive(Clone, Copy, Default)]
struct CellState {
    /// Members scanned so far for people neighbors.
    cursor: u32,
    /// People neighbors found among the scanned prefix, capped at sigma.
    found: u32,
    /// Directions whose in-cluster grid neighbor was already tested for a
    /// double connection.
    checked: u8,
}

#[inline]
fn grid_neighbors(z: u32, l: u32, out: &mut [u32; 4]) -> usize {
    let (x, y) = (z % l, z / l);
    let mut k = 0;
    if x > 0 {
        out[k] = z - 1;
        k += 1;
    }
    if x + 1 < l {
        out[k] = z + 1;
        k += 1;
    }
    if y > 0 {
        out[k] = z - l;
        k += 1;
    }
    if y + 1 < l {
        out[k] = z + l;
        k += 1;
    }
    k
}

/// Runs the growth process in an `L x L` box with its own lazy sampler.
pub fn local_grow(params: DynamicsParams, p: f64, seed: u64, box_len: u32) -> GrowOutcome {
    assert!(box_len >= 2, "growth box needs side >= 2");
    assert!(box_len <= 1 << 15, "growth box side too large");
    let l = box_len;
    let sampler = EdgeSampler::lazy(seed, p);
    let cells = (l * l) as usize;
    let mut in_cluster = vec![false; cells];
    let mut members: Vec<u32> = Vec::new();
    let mut state = vec![CellState::default(); cells];
    let mut in_frontier = vec![false; cells];
    let mut frontier: Vec<u32> = Vec::new();
    let mut reached = false;

    let join = |z: u32,
                    members: &mut Vec<u32>,
                    in_cluster: &mut [bool],
                    frontier: &mut Vec<u32>,
                    in_frontier: &mut [bool],
                    reached: &mut bool| {
        in_cluster[z as usize] = true;
        members.push(z);
        if z % l == l - 1 || z / l == l - 1 {
            *reached = true;
        }
        let mut buf = [0u32; 4];
        let k = grid_neighbors(z, l, &mut buf);
        for &w in &buf[..k] {
            if !in_cluster[w as usize] && !in_frontier[w as usize] {
                in_frontier[w as usize] = true;
                frontier.push(w);
            }
        }
    };

    join(0, &mut members, &mut in_cluster, &mut frontier, &mut in_frontier, &mut reached);

    let mut rounds = 0u32;
    loop {
        // Evaluate the frontier against the current set, then commit all
        // qualifying cells at once (synchronous rounds).
        let mut joins: Vec<u32> = Vec::new();
        for &z in &frontier {
            let st = &mut state[z as usize];
            let mut buf = [0u32; 4];
            let k = grid_neighbors(z, l, &mut buf);
            let mut cpuz = 0u32;
            let mut doubly = false;
            for (dir, &w) in buf[..k].iter().enumerate() {
                if in_cluster[w as usize] {
                    cpuz += 1;
                    if st.checked & (1 << dir) == 0 {
                        st.checked |= 1 << dir;
                        if sampler.status(z, w) {
                            doubly = true;
                        }
                    }
                }
            }
            let exempt = matches!(params.theta, Theta::Finite(t) if cpuz >= t);
            let mut verified = false;
            if !doubly && !exempt && cpuz >= params.tau {
                while st.found < params.sigma && (st.cursor as usize) < members.len() {
                    let w = members[st.cursor as usize];
                    st.cursor += 1;
                    if sampler.status(z, w) {
                        st.found += 1;
                    }
                }
                verified = st.found >= params.sigma;
            }
            if doubly || exempt || verified {
                joins.push(z);
            }
        }
        if joins.is_empty() {
            break;
        }
        rounds += 1;
        for &z in &joins {
            in_frontier[z as usize] = false;
            join(z, &mut members, &mut in_cluster, &mut frontier, &mut in_frontier, &mut reached);
        }
        frontier.retain(|&z| !in_cluster[z as usize]);
    }

    GrowOutcome {
        reached,
        cluster: members,
        rounds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::DynamicsParams;

    #[test]
    fn full_people_graph_fills_the_box() {
        let out = local_grow(DynamicsParams::ae(), 1.0, 1, 8);
        assert!(out.reached);
        assert_eq!(out.cluster.len(), 64);
    }

    #[test]
    fn empty_people_graph_stays_at_the_center() {
        let out = local_grow(DynamicsParams::ae(), 0.0, 1, 8);
        assert!(!out.reached);
        assert_eq!(out.cluster, vec![0]);
    }

    #[test]
    fn corner_rule_alone_cannot_start() {
        // theta = 2: the origin's grid neighbors each see one occupied cell.
        let params = DynamicsParams::threshold(1, 1, Theta::Finite(2)).unwrap();
        let out = local_grow(params, 0.0, 9, 8);
        assert!(!out.reached);
        assert_eq!(out.cluster, vec![0]);
    }

    #[test]
    fn sigma_two_needs_two_people_neighbors() {
        // With sigma = 2, tau = 1, no exemption: growth stalls once no
        // outside cell can see two people neighbors. At p = 1 it fills.
        let params = DynamicsParams::threshold(2, 1, Theta::Infinite).unwrap();
        let out = local_grow(params, 1.0, 5, 6);
        assert!(out.reached);
        assert_eq!(out.cluster.len(), 36);
    }

    #[test]
    fn growth_is_reproducible() {
        let a = local_grow(DynamicsParams::ae(), 0.4, 1234, 16);
        let b = local_grow(DynamicsParams::ae(), 0.4, 1234, 16);
        assert_eq!(a.cluster, b.cluster);
        assert_eq!(a.reached, b.reached);
        assert_eq!(a.rounds, b.rounds);
    }
}

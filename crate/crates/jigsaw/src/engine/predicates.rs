//! Standalone predicates over instances: internal solvability, unstoppable
//! sets, and the inert-partition characterization.
//!
//! These query edge statuses through the pure sampler (no ledger), so they
//! never perturb a run's examination accounting.

use super::{DynamicsParams, Engine, EngineError, MergeRule, Partition, Theta};
use crate::randomness::EdgeSampler;
use crate::topology::{Topology, VertexId};

/// True when the dynamics restricted to the induced subgraphs of `a`
/// gathers all of `a` into one cluster, starting from singletons.
pub fn is_internally_solved(
    topo: &Topology,
    params: DynamicsParams,
    sampler: &EdgeSampler,
    a: &[VertexId],
) -> bool {
    assert!(!a.is_empty(), "internal solvability of an empty set");
    Engine::new_induced(topo, params, sampler, a).run().solved
}

/// True when every vertex outside `a` has at least `sigma` people neighbors
/// inside `a`. Vacuously true for `a = V`.
pub fn is_unstoppable(
    topo: &Topology,
    params: DynamicsParams,
    sampler: &EdgeSampler,
    a: &[VertexId],
) -> bool {
    let n = topo.vertex_count();
    let mut in_a = vec![false; n as usize];
    for &v in a {
        in_a[v as usize] = true;
    }
    for v in 0..n {
        if in_a[v as usize] {
            continue;
        }
        let mut found = 0;
        for &w in a {
            if sampler.status(v, w) {
                found += 1;
                if found >= params.sigma {
                    break;
                }
            }
        }
        if found < params.sigma {
            return false;
        }
    }
    true
}

/// True when no merge condition fires anywhere in the partition.
///
/// Under the threshold rule this is the boundary-vertex characterization:
/// for every cluster `W` and every outside vertex `v` with a puzzle
/// neighbor in `W`, `v` is not doubly connected into `W`,
/// `cpuzzle(v, W) < theta`, and not both `cpeople(v, W) >= sigma` and
/// `cpuzzle(v, W) >= tau`. Under the basic rule: no puzzle-adjacent cluster
/// pair has a cross people edge.
///
/// The partition must cover the whole vertex set with puzzle-connected
/// clusters; use [`is_inert_clusters`] for arbitrary partitions (common
/// refinements of inert partitions need not stay connected).
pub fn is_inert(
    topo: &Topology,
    params: DynamicsParams,
    sampler: &EdgeSampler,
    partition: &Partition,
) -> Result<bool, EngineError> {
    let n = topo.vertex_count();
    if partition.active_vertices().len() != n as usize {
        return Err(EngineError(
            "inertness requires a partition of the whole vertex set".into(),
        ));
    }
    if !partition.clusters_puzzle_connected(topo) {
        return Err(EngineError(
            "inertness requires puzzle-connected clusters".into(),
        ));
    }
    Ok(is_inert_clusters(
        topo,
        params,
        sampler,
        &partition.canonical_clusters(),
    ))
}

/// The inert characterization over explicit cluster lists, with no
/// connectivity requirement. Clusters must be disjoint and cover `V`.
pub fn is_inert_clusters(
    topo: &Topology,
    params: DynamicsParams,
    sampler: &EdgeSampler,
    clusters: &[Vec<VertexId>],
) -> bool {
    let n = topo.vertex_count();
    let mut cluster_of = vec![u32::MAX; n as usize];
    for (ci, members) in clusters.iter().enumerate() {
        for &v in members {
            assert_eq!(cluster_of[v as usize], u32::MAX, "clusters overlap");
            cluster_of[v as usize] = ci as u32;
        }
    }
    assert!(
        cluster_of.iter().all(|&c| c != u32::MAX),
        "clusters must cover the vertex set"
    );
    match params.rule {
        MergeRule::Threshold => {
            for (ci, members) in clusters.iter().enumerate() {
                let ci = ci as u32;
                // Outside boundary of the cluster, deduplicated.
                let mut boundary: Vec<u32> = Vec::new();
                for &u in members {
                    topo.for_each_neighbor(u, |w| {
                        if cluster_of[w as usize] != ci {
                            boundary.push(w);
                        }
                    });
                }
                boundary.sort_unstable();
                boundary.dedup();
                for v in boundary {
                    let mut cpuz = 0u32;
                    let mut doubly = false;
                    topo.for_each_neighbor(v, |w| {
                        if cluster_of[w as usize] == ci {
                            cpuz += 1;
                            if !doubly && sampler.status(v, w) {
                                doubly = true;
                            }
                        }
                    });
                    if doubly {
                        return false;
                    }
                    if let Theta::Finite(t) = params.theta {
                        if cpuz >= t {
                            return false;
                        }
                    }
                    if cpuz >= params.tau {
                        let mut found = 0;
                        for &w in members {
                            if sampler.status(v, w) {
                                found += 1;
                                if found >= params.sigma {
                                    break;
                                }
                            }
                        }
                        if found >= params.sigma {
                            return false;
                        }
                    }
                }
            }
            true
        }
        MergeRule::Basic => {
            let mut adjacent: std::collections::BTreeSet<(u32, u32)> = Default::default();
            for v in 0..n {
                topo.for_each_neighbor(v, |w| {
                    let (a, b) = (cluster_of[v as usize], cluster_of[w as usize]);
                    if a != b {
                        adjacent.insert((a.min(b), a.max(b)));
                    }
                });
            }
            for (a, b) in adjacent {
                for &u in &clusters[a as usize] {
                    for &w in &clusters[b as usize] {
                        if sampler.status(u, w) {
                            return false;
                        }
                    }
                }
            }
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run;
    use crate::topology::Family;

    fn ring(n: u32) -> Topology {
        Topology::new(Family::Ring { n }).unwrap()
    }

    #[test]
    fn singletons_and_pairs_internally_solve() {
        let topo = ring(8);
        let ae = DynamicsParams::ae();
        let closed = EdgeSampler::lazy(0, 0.0);
        assert!(is_internally_solved(&topo, ae, &closed, &[3]));
        let pair = EdgeSampler::explicit([(3, 4)]);
        assert!(is_internally_solved(&topo, ae, &pair, &[3, 4]));
        assert!(!is_internally_solved(&topo, ae, &closed, &[3, 4]));
    }

    #[test]
    fn skip_edge_does_not_solve_an_induced_path() {
        // Interval {1,2,3} on the ring induces a path; a people edge
        // between the endpoints is not puzzle-adjacent inside it.
        let topo = ring(8);
        let sampler = EdgeSampler::explicit([(1, 3)]);
        assert!(!is_internally_solved(&topo, DynamicsParams::ae(), &sampler, &[1, 2, 3]));
    }

    #[test]
    fn unstoppable_cases() {
        let topo = ring(6);
        let ae = DynamicsParams::ae();
        let closed = EdgeSampler::lazy(0, 0.0);
        let all: Vec<u32> = (0..6).collect();
        assert!(is_unstoppable(&topo, ae, &closed, &all));
        assert!(!is_unstoppable(&topo, ae, &closed, &[0, 1, 2]));
        let open = EdgeSampler::lazy(0, 1.0);
        assert!(is_unstoppable(&topo, ae, &open, &[0, 1, 2]));
        // sigma = 2 with exactly one people neighbor into the set.
        let params = DynamicsParams::threshold(2, 1, Theta::Infinite).unwrap();
        let sampler = EdgeSampler::explicit([(3, 0), (4, 0), (4, 1), (5, 0), (5, 2)]);
        assert!(!is_unstoppable(&topo, params, &sampler, &[0, 1, 2]));
        let sampler = EdgeSampler::explicit([(3, 0), (3, 1), (4, 0), (4, 1), (5, 0), (5, 2)]);
        assert!(is_unstoppable(&topo, params, &sampler, &[0, 1, 2]));
    }

    #[test]
    fn unstoppable_internally_solved_set_absorbs_everything() {
        // With tau = 1: an internally solved unstoppable set forces Solve.
        let topo = ring(6);
        let ae = DynamicsParams::ae();
        let sampler = EdgeSampler::explicit([
            (0, 1),
            (1, 2), // makes {0,1,2} internally solved
            (3, 0),
            (4, 1),
            (5, 2), // every outside vertex sees one people neighbor inside
        ]);
        let a = vec![0, 1, 2];
        assert!(is_internally_solved(&topo, ae, &sampler, &a));
        assert!(is_unstoppable(&topo, ae, &sampler, &a));
        assert!(run(&topo, ae, &sampler).solved);
    }

    #[test]
    fn inert_characterization_matches_dynamics() {
        let topo = ring(5);
        let ae = DynamicsParams::ae();
        let closed = EdgeSampler::lazy(0, 0.0);
        let singles = Partition::singletons(5);
        assert!(is_inert(&topo, ae, &closed, &singles).unwrap());
        let open = EdgeSampler::lazy(0, 1.0);
        assert!(!is_inert(&topo, ae, &open, &singles).unwrap());
        for seed in 0..30u64 {
            let sampler = EdgeSampler::lazy(seed, 0.4);
            let res = run(&topo, ae, &sampler);
            assert!(is_inert(&topo, ae, &sampler, &res.final_partition).unwrap());
        }
    }

    #[test]
    fn inert_rejects_disconnected_clusters() {
        let topo = ring(6);
        let bad = Partition::from_clusters(6, &[vec![0, 2], vec![1], vec![3, 4, 5]]);
        let sampler = EdgeSampler::lazy(0, 0.0);
        assert!(is_inert(&topo, DynamicsParams::ae(), &sampler, &bad).is_err());
    }
}

//! Property suites for the graph families, the sampler, and the dynamics.

mod common;

use std::collections::{HashSet, VecDeque};

use proptest::prelude::*;

use common::random_params;
use jigsaw::engine::{
    self, square_completion_run, DynamicsParams, Engine, MergeRule, Partition, Theta,
};
use jigsaw::randomness::{EdgeSampler, SplitMix64};
use jigsaw::topology::{Family, Topology};

fn family_strategy() -> impl Strategy<Value = Topology> {
    prop_oneof![
        (3u32..40).prop_map(|n| Topology::new(Family::Ring { n }).unwrap()),
        (3u32..8, 1u32..3).prop_map(|(n, d)| Topology::new(Family::Torus { n, d }).unwrap()),
        (1u32..8).prop_map(|n| Topology::new(Family::Hypercube { n }).unwrap()),
        (3u32..6, 1u32..3)
            .prop_map(|(n, d)| Topology::new(Family::HammingTorus { n, d }).unwrap()),
        (5u32..12, 1u32..3).prop_map(|(n, r)| {
            let r = r.min((n - 1) / 2);
            Topology::new(Family::RangeRTorus { n, r }).unwrap()
        }),
        (2u32..6, 3u32..7)
            .prop_map(|(n, m)| Topology::new(Family::CompleteTimesRing { n, m }).unwrap()),
        (1u32..12).prop_map(|n| Topology::new(Family::Complete { n }).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbor_lists_are_symmetric_simple_and_complete(topo in family_strategy()) {
        for v in 0..topo.vertex_count() {
            let nbrs = topo.neighbors(v);
            prop_assert_eq!(nbrs.len() as u32, topo.degree());
            let set: HashSet<u32> = nbrs.iter().copied().collect();
            prop_assert_eq!(set.len(), nbrs.len());
            prop_assert!(!set.contains(&v));
            prop_assert!(nbrs.windows(2).all(|w| w[0] < w[1]));
            for w in nbrs {
                prop_assert!(topo.neighbors(w).contains(&v));
            }
        }
        prop_assert!(topo.is_connected());
    }

    #[test]
    fn sampler_is_pure_symmetric_and_coupled(
        seed in any::<u64>(),
        p1 in 0.0f64..1.0,
        p2 in 0.0f64..1.0,
        pairs in proptest::collection::vec((0u32..5000, 0u32..5000), 200)
    ) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let s_lo = EdgeSampler::lazy(seed, lo);
        let s_hi = EdgeSampler::lazy(seed, hi);
        for (u, v) in pairs {
            if u == v { continue; }
            prop_assert_eq!(s_lo.status(u, v), s_lo.status(v, u));
            prop_assert_eq!(s_lo.status(u, v), s_lo.status(u, v));
            if s_lo.status(u, v) {
                prop_assert!(s_hi.status(u, v), "coupling must be monotone");
            }
        }
    }

    #[test]
    fn partition_stays_consistent_under_unions(
        n in 2u32..60,
        ops in proptest::collection::vec((any::<u32>(), any::<u32>()), 1..80)
    ) {
        let mut part = Partition::singletons(n);
        for (a, b) in ops {
            part.union(a % n, b % n);
            prop_assert!(part.check_consistency());
        }
    }
}

fn people_connected(cluster: &[u32], sampler: &EdgeSampler) -> bool {
    if cluster.len() <= 1 {
        return true;
    }
    let inside: HashSet<u32> = cluster.iter().copied().collect();
    let mut seen = HashSet::from([cluster[0]]);
    let mut queue = VecDeque::from([cluster[0]]);
    while let Some(v) = queue.pop_front() {
        for &w in &inside {
            if w != v && !seen.contains(&w) && sampler.status(v, w) {
                seen.insert(w);
                queue.push_back(w);
            }
        }
    }
    seen.len() == cluster.len()
}

#[test]
fn clusters_stay_connected_in_both_graphs_without_exemption() {
    // With theta infinite every reachable cluster is connected in the
    // puzzle graph and in the people graph.
    let topo = Topology::new(Family::Torus { n: 6, d: 2 }).unwrap();
    let mut rng = SplitMix64::new(0xCAFE);
    for _ in 0..50 {
        let p = 0.1 + 0.6 * rng.next_f64();
        let sigma = 1 + rng.below(2) as u32;
        let params = DynamicsParams::threshold(sigma, 1, Theta::Infinite).unwrap();
        let sampler = EdgeSampler::lazy(rng.next_u64(), p);
        let topo_ref = &topo;
        let sampler_ref = &sampler;
        let mut ok = true;
        let _ = Engine::new(&topo, params, &sampler).run_observed(&mut |_, part: &Partition| {
            ok &= part.clusters_puzzle_connected(topo_ref);
            for cluster in part.canonical_clusters() {
                ok &= people_connected(&cluster, sampler_ref);
            }
        });
        assert!(ok, "cluster lost two-graph connectivity during a run");
    }
}

#[test]
fn basic_and_ae_first_rounds_agree_from_singletons() {
    // On singletons the basic condition J5 degenerates to a doubly
    // connected pair, which is the AE condition.
    let ring = Topology::new(Family::Ring { n: 14 }).unwrap();
    let torus = Topology::new(Family::Torus { n: 5, d: 2 }).unwrap();
    let mut rng = SplitMix64::new(0xBA51C);
    for topo in [ring, torus] {
        for _ in 0..40 {
            let p = rng.next_f64();
            let sampler = EdgeSampler::lazy(rng.next_u64(), p);
            let basic = DynamicsParams::new(1, 1, Theta::Infinite, MergeRule::Basic).unwrap();
            let g_basic = Engine::new(&topo, basic, &sampler).cluster_graph();
            let g_ae = Engine::new(&topo, DynamicsParams::ae(), &sampler).cluster_graph();
            assert_eq!(g_basic, g_ae);
        }
    }
}

#[test]
fn square_completion_refines_the_dynamics_and_ignores_sigma() {
    // The direction of the square-completion comparison that holds
    // pathwise: every completion component sits inside one final cluster
    // of the tau = theta = 2 dynamics (the converse fails when the
    // exemption fires on two opposite neighbors). And sigma plays no role
    // for tau = theta = 2.
    let topo = Topology::new(Family::Torus { n: 8, d: 2 }).unwrap();
    let mut rng = SplitMix64::new(0x5005);
    for _ in 0..400 {
        let p = 0.05 + 0.9 * rng.next_f64();
        let sampler = EdgeSampler::lazy(rng.next_u64(), p);
        let finals: Vec<_> = [1u32, 3]
            .iter()
            .map(|&sigma| {
                let params = DynamicsParams::threshold(sigma, 2, Theta::Finite(2)).unwrap();
                engine::run(&topo, params, &sampler)
                    .final_partition
                    .canonical_clusters()
            })
            .collect();
        assert_eq!(finals[0], finals[1], "sigma must not matter for tau = theta = 2");
        let completion = square_completion_run(&topo, &sampler).unwrap();
        for comp in completion.components() {
            let host = finals[0]
                .iter()
                .find(|c| c.contains(&comp[0]))
                .expect("every vertex is in some final cluster");
            assert!(
                comp.iter().all(|v| host.contains(v)),
                "completion component {comp:?} must lie inside one final cluster"
            );
        }
    }
}

#[test]
fn random_instances_reach_inert_fixed_points() {
    // Cross-check the step fixed point against the independent
    // boundary-vertex characterization on mixed families.
    let families = [
        Topology::new(Family::Ring { n: 17 }).unwrap(),
        Topology::new(Family::Torus { n: 4, d: 2 }).unwrap(),
        Topology::new(Family::Hypercube { n: 4 }).unwrap(),
        Topology::new(Family::CompleteTimesRing { n: 3, m: 4 }).unwrap(),
    ];
    let mut rng = SplitMix64::new(0xF1D0);
    for topo in &families {
        for _ in 0..60 {
            let params = random_params(&mut rng, true);
            let p = rng.next_f64();
            let sampler = EdgeSampler::lazy(rng.next_u64(), p);
            let res = engine::run(topo, params, &sampler);
            assert!(
                engine::is_inert(topo, params, &sampler, &res.final_partition).unwrap(),
                "non-inert fixed point on {topo} with {params:?}"
            );
        }
    }
}

#[test]
fn run_results_are_reproducible_across_engine_instances() {
    let topo = Topology::new(Family::Torus { n: 6, d: 2 }).unwrap();
    let sampler = EdgeSampler::lazy(99, 0.3);
    let a = engine::run(&topo, DynamicsParams::ae(), &sampler);
    let b = engine::run(&topo, DynamicsParams::ae(), &sampler);
    assert_eq!(a.solved, b.solved);
    assert_eq!(a.t_final, b.t_final);
    assert_eq!(a.merge_trace, b.merge_trace);
    assert_eq!(
        a.final_partition.canonical_clusters(),
        b.final_partition.canonical_clusters()
    );
    assert_eq!(a.exam.decided_pairs, b.exam.decided_pairs);
}

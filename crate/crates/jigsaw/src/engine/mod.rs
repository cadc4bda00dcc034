//! The jigsaw percolation state machine.
//!
//! Clusters of the puzzle graph merge in discrete rounds. Two clusters get an
//! edge in the round's cluster graph when, under the threshold rule, one of
//! the merge conditions holds:
//!
//! * a doubly connected cross pair exists (an edge of both graphs),
//! * some vertex of one cluster has at least `theta` puzzle neighbors in the
//!   other (exemption),
//! * some vertex has at least `tau` puzzle neighbors and at least `sigma`
//!   people neighbors in the other cluster,
//!
//! or, under the basic rule, when a cross people edge and a cross puzzle
//! edge both exist. A synchronous round merges every connected component of
//! the cluster graph; slowed-down variants merge a chosen nonempty edge
//! subset and reach the same final partition.
//!
//! Merge conditions for a cluster pair depend only on the pair, so an edge
//! between two clusters is re-examined only after one of them has changed.
//! Together with resumable people-neighbor scans over the append-only member
//! lists, a run examines each candidate people pair at most once along the
//! main path, which is what keeps examination counts per vertex polylog.

mod partition;
mod predicates;
pub use partition::{cluster_is_connected, Partition};
pub use predicates::{is_inert, is_inert_clusters, is_internally_solved, is_unstoppable};
mod grow;
pub use grow::{local_grow, GrowOutcome};
mod squares;
pub use squares::{square_completion_run, SquareCompletion};

use std::fmt;

use crate::randomness::{EdgeSampler, ExamLedger, ExamStats, PairMap, SplitMix64};
use crate::topology::{Topology, VertexId};

/// Exemption threshold: finite value or the no-exemption sentinel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Theta {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Finite(t) => write!(f, "{t}"),
            Theta::Infinite => write!(f, "inf"),
        }
    }
}

/// Which cluster-pair merge condition family to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum MergeRule {
    /// The three-threshold conditions.
    Threshold,
    /// Any cross people edge plus any cross puzzle edge.
    Basic,
}

impl fmt::Display for MergeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MergeRule::Threshold => write!(f, "threshold"),
            MergeRule::Basic => write!(f, "basic"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineError(pub String);

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "engine error: {}", self.0)
    }
}

impl std::error::Error for EngineError {}

/// Dynamics parameters: verification threshold `sigma`, link threshold
/// `tau`, exemption threshold `theta >= tau`, and the merge rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct DynamicsParams {
    pub sigma: u32,
    pub tau: u32,
    pub theta: Theta,
    pub rule: MergeRule,
}

impl DynamicsParams {
    pub fn new(sigma: u32, tau: u32, theta: Theta, rule: MergeRule) -> Result<Self, EngineError> {
        if sigma < 1 {
            return Err(EngineError("sigma must be >= 1".into()));
        }
        if tau < 1 {
            return Err(EngineError("tau must be >= 1".into()));
        }
        if let Theta::Finite(t) = theta {
            if t < tau {
                return Err(EngineError(format!(
                    "theta ({t}) must be >= tau ({tau}) when finite"
                )));
            }
        }
        Ok(DynamicsParams { sigma, tau, theta, rule })
    }

    pub fn threshold(sigma: u32, tau: u32, theta: Theta) -> Result<Self, EngineError> {
        Self::new(sigma, tau, theta, MergeRule::Threshold)
    }

    /// Adjacent-edge dynamics: `sigma = tau = 1`, `theta` infinite.
    pub fn ae() -> Self {
        DynamicsParams {
            sigma: 1,
            tau: 1,
            theta: Theta::Infinite,
            rule: MergeRule::Threshold,
        }
    }
}

/// How a slowed-down run chooses cluster-graph edges each round.
#[derive(Debug)]
pub enum SlowPolicy {
    /// Merge exactly one cluster pair per round.
    OneEdge(SplitMix64),
    /// Merge a uniformly random nonempty edge subset per round.
    RandomSubset(SplitMix64),
}

/// Outcome of one run of the dynamics.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub solved: bool,
    /// First `t` with `P^(t+1) = P^t`.
    pub t_final: u32,
    /// Cluster-pair merge count of each merging round.
    pub merge_trace: Vec<u32>,
    pub exam: ExamStats,
    pub final_partition: Partition,
}

/// Callback receiving `(t, partition)` after round `t` (and at `t = 0`).
pub type StepObserver<'o> = &'o mut dyn FnMut(u32, &Partition);

const PPL_UNKNOWN: u8 = 0;
const PPL_OPEN: u8 = 1;
const PPL_CLOSED: u8 = 2;

struct EdgeRec {
    u: u32,
    v: u32,
    /// Cached people status of this pair; fixed once examined.
    ppl: u8,
}

#[derive(Clone, Copy, Default)]
struct ScanState {
    cursor: u32,
    found: u32,
}

/// One live instance of the dynamics.
pub struct Engine<'a> {
    topo: &'a Topology,
    params: DynamicsParams,
    sampler: &'a EdgeSampler,
    ledger: ExamLedger,
    part: Partition,
    in_subset: Option<Vec<bool>>,
    edges: Vec<EdgeRec>,
    edge_offsets: Vec<u32>,
    /// Per-root lists of incident cross-edge indices; implicit for
    /// never-merged singleton roots, lazily compacted.
    boundary: Vec<Vec<u32>>,
    dirty: Vec<u32>,
    in_dirty: Vec<bool>,
    /// Resumable people-neighbor scans keyed by (vertex, other root).
    scan: PairMap<ScanState>,
    /// Per-round memo of evaluated cluster pairs keyed by root pair.
    pair_memo: PairMap<bool>,
    nbr_buf: Vec<u32>,
    t: u32,
}

impl<'a> Engine<'a> {
    /// Dynamics from all singletons on the full vertex set.
    pub fn new(topo: &'a Topology, params: DynamicsParams, sampler: &'a EdgeSampler) -> Self {
        let part = Partition::singletons(topo.vertex_count());
        Self::with_parts(topo, params, sampler, part, None)
    }

    /// Dynamics on the induced subgraphs of a nonempty vertex subset,
    /// starting from singletons of the subset.
    pub fn new_induced(
        topo: &'a Topology,
        params: DynamicsParams,
        sampler: &'a EdgeSampler,
        subset: &[VertexId],
    ) -> Self {
        assert!(!subset.is_empty(), "induced run on an empty vertex set");
        let part = Partition::singletons_of(topo.vertex_count(), Some(subset));
        let mut mask = vec![false; topo.vertex_count() as usize];
        for &v in part.active_vertices() {
            mask[v as usize] = true;
        }
        Self::with_parts(topo, params, sampler, part, Some(mask))
    }

    /// Dynamics from a custom initial partition into puzzle-connected
    /// clusters of the full vertex set.
    pub fn with_initial_partition(
        topo: &'a Topology,
        params: DynamicsParams,
        sampler: &'a EdgeSampler,
        clusters: &[Vec<VertexId>],
    ) -> Result<Self, EngineError> {
        for c in clusters {
            if !cluster_is_connected(topo, c) {
                return Err(EngineError(format!(
                    "initial cluster {c:?} is not puzzle-connected"
                )));
            }
        }
        let part = Partition::from_clusters(topo.vertex_count(), clusters);
        if part.active_vertices().len() != topo.vertex_count() as usize {
            return Err(EngineError(
                "initial clusters must partition the whole vertex set".into(),
            ));
        }
        Ok(Self::with_parts(topo, params, sampler, part, None))
    }

    fn with_parts(
        topo: &'a Topology,
        params: DynamicsParams,
        sampler: &'a EdgeSampler,
        mut part: Partition,
        in_subset: Option<Vec<bool>>,
    ) -> Self {
        let n = topo.vertex_count();
        let mut edges = Vec::new();
        let mut edge_offsets = Vec::with_capacity(n as usize + 1);
        edge_offsets.push(0);
        for v in 0..n {
            if let Some(mask) = &in_subset {
                if !mask[v as usize] {
                    edge_offsets.push(edges.len() as u32);
                    continue;
                }
            }
            topo.for_each_neighbor(v, |w| {
                if v < w && in_subset.as_ref().is_none_or(|m| m[w as usize]) {
                    edges.push(EdgeRec { u: v, v: w, ppl: PPL_UNKNOWN });
                }
            });
            edge_offsets.push(edges.len() as u32);
        }
        // Only cross-cluster edges take part in the dynamics.
        let dirty: Vec<u32> = (0..edges.len() as u32)
            .filter(|&ei| {
                let e = &edges[ei as usize];
                part.find(e.u) != part.find(e.v)
            })
            .collect();
        let mut in_dirty = vec![false; edges.len()];
        for &ei in &dirty {
            in_dirty[ei as usize] = true;
        }
        // Clusters of a custom initial partition need their boundary lists
        // up front; singleton roots materialize lazily on first merge.
        let mut boundary = vec![Vec::new(); n as usize];
        for &ei in &dirty {
            let e = &edges[ei as usize];
            for end in [e.u, e.v] {
                let root = part.find(end);
                if part.size_of(root) >= 2 {
                    boundary[root as usize].push(ei);
                }
            }
        }
        Engine {
            topo,
            params,
            sampler,
            ledger: ExamLedger::new(n),
            part,
            in_subset,
            edges,
            edge_offsets,
            boundary,
            dirty,
            in_dirty,
            scan: PairMap::default(),
            pair_memo: PairMap::default(),
            nbr_buf: Vec::new(),
            t: 0,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.part
    }

    pub fn ledger(&self) -> &ExamLedger {
        &self.ledger
    }

    pub fn time(&self) -> u32 {
        self.t
    }

    #[inline]
    fn in_subset(&self, v: u32) -> bool {
        self.in_subset.as_ref().is_none_or(|m| m[v as usize])
    }

    fn edge_index(&self, u: u32, w: u32) -> u32 {
        let (a, b) = if u < w { (u, w) } else { (w, u) };
        let lo = self.edge_offsets[a as usize];
        let hi = self.edge_offsets[a as usize + 1];
        for ei in lo..hi {
            if self.edges[ei as usize].v == b {
                return ei;
            }
        }
        unreachable!("edge ({a},{b}) not found");
    }

    /// Evaluates this edge's contribution to the merge condition of the
    /// cluster pair it joins.
    ///
    /// Threshold conditions decompose per cross edge (each edge carries its
    /// own double-connection check and its endpoints' count checks), and all
    /// cross edges of a changed pair are dirty together, so the per-edge
    /// verdicts OR up to the full pair condition over the round. The basic
    /// rule is evaluated whole per pair and memoized within the round.
    fn pair_fires(&mut self, ei: u32, ru: u32, rv: u32) -> bool {
        match self.params.rule {
            MergeRule::Threshold => self.threshold_edge_fires(ei, ru, rv),
            MergeRule::Basic => {
                let key = root_pair_key(ru, rv);
                if let Some(&hit) = self.pair_memo.get(&key) {
                    return hit;
                }
                let fired = self.basic_pair_fires(ru, rv);
                self.pair_memo.insert(key, fired);
                fired
            }
        }
    }

    fn threshold_edge_fires(&mut self, ei: u32, ru: u32, rv: u32) -> bool {
        // Doubly connected cross pair: the people status of a puzzle edge is
        // fixed, so it is examined at most once over the edge's lifetime.
        {
            let (eu, ev, ppl) = {
                let e = &self.edges[ei as usize];
                (e.u, e.v, e.ppl)
            };
            if ppl == PPL_UNKNOWN {
                let open = self.ledger.examine(self.sampler, eu, ev);
                self.edges[ei as usize].ppl = if open { PPL_OPEN } else { PPL_CLOSED };
                if open {
                    return true;
                }
            } else if ppl == PPL_OPEN {
                return true;
            }
        }
        let (eu, ev) = {
            let e = &self.edges[ei as usize];
            (e.u, e.v)
        };
        self.vertex_fires(eu, rv) || self.vertex_fires(ev, ru)
    }

    /// Exemption and threshold conditions for one vertex against the cluster
    /// rooted at `other`.
    fn vertex_fires(&mut self, v: u32, other: u32) -> bool {
        let DynamicsParams { sigma, tau, theta, .. } = self.params;
        let cap = match theta {
            Theta::Finite(t) => t,
            Theta::Infinite => tau,
        };
        // Count puzzle neighbors of v inside the other cluster, up to cap.
        self.nbr_buf.clear();
        {
            let topo = self.topo;
            let buf = &mut self.nbr_buf;
            topo.for_each_neighbor(v, |w| buf.push(w));
        }
        let mut cpuz = 0u32;
        for i in 0..self.nbr_buf.len() {
            let w = self.nbr_buf[i];
            if self.in_subset(w) && self.part.find(w) == other {
                cpuz += 1;
                if cpuz >= cap {
                    break;
                }
            }
        }
        if let Theta::Finite(t) = theta {
            if cpuz >= t {
                return true;
            }
        }
        if cpuz < tau {
            return false;
        }
        // People-neighbor count against the other cluster, capped at sigma.
        // The scan resumes where it stopped: member lists are append-only
        // while the root survives, and a new root restarts the count.
        let key = ((v as u64) << 32) | other as u64;
        let mut st = self.scan.get(&key).copied().unwrap_or_default();
        let limit = self.part.size_of(other);
        while st.found < sigma && st.cursor < limit {
            let w = self.part.member_at(other, st.cursor);
            st.cursor += 1;
            if self.ledger.examine(self.sampler, v, w) {
                st.found += 1;
            }
        }
        self.scan.insert(key, st);
        st.found >= sigma
    }

    /// Basic rule: any cross people edge (the cross puzzle edge is implied
    /// by evaluation happening at all).
    fn basic_pair_fires(&mut self, ru: u32, rv: u32) -> bool {
        let su = self.part.size_of(ru);
        let sv = self.part.size_of(rv);
        for i in 0..su {
            let a = self.part.member_at(ru, i);
            for j in 0..sv {
                let b = self.part.member_at(rv, j);
                if self.ledger.examine(self.sampler, a, b) {
                    return true;
                }
            }
        }
        false
    }

    /// Materializes the boundary list of a never-merged singleton root.
    fn ensure_boundary(&mut self, root: u32) {
        if self.part.size_of(root) == 1 && self.boundary[root as usize].is_empty() {
            self.nbr_buf.clear();
            {
                let topo = self.topo;
                let buf = &mut self.nbr_buf;
                topo.for_each_neighbor(root, |w| buf.push(w));
            }
            for i in 0..self.nbr_buf.len() {
                let w = self.nbr_buf[i];
                if self.in_subset(w) {
                    let ei = self.edge_index(root, w);
                    self.boundary[root as usize].push(ei);
                }
            }
        }
    }

    /// Whether the merge condition holds between the clusters containing
    /// `a` and `b` in the current partition.
    pub fn cluster_edge_exists(&mut self, a: VertexId, b: VertexId) -> bool {
        let ra = self.part.find(a);
        let rb = self.part.find(b);
        if ra == rb {
            return false;
        }
        if self.params.rule == MergeRule::Basic {
            // A cross puzzle edge must exist at all.
            let (small, other) = if self.part.size_of(ra) <= self.part.size_of(rb) {
                (ra, rb)
            } else {
                (rb, ra)
            };
            let mut has_cross = false;
            for i in 0..self.part.size_of(small) {
                let v = self.part.member_at(small, i);
                self.nbr_buf.clear();
                {
                    let topo = self.topo;
                    let buf = &mut self.nbr_buf;
                    topo.for_each_neighbor(v, |w| buf.push(w));
                }
                for j in 0..self.nbr_buf.len() {
                    let w = self.nbr_buf[j];
                    if self.in_subset(w) && self.part.find(w) == other {
                        has_cross = true;
                        break;
                    }
                }
                if has_cross {
                    break;
                }
            }
            return has_cross && self.basic_pair_fires(ra, rb);
        }
        // Threshold rule: check each cross edge's contribution from the
        // smaller side (every cross edge has one endpoint there).
        let (small, other) = if self.part.size_of(ra) <= self.part.size_of(rb) {
            (ra, rb)
        } else {
            (rb, ra)
        };
        for i in 0..self.part.size_of(small) {
            let v = self.part.member_at(small, i);
            self.nbr_buf.clear();
            {
                let topo = self.topo;
                let buf = &mut self.nbr_buf;
                topo.for_each_neighbor(v, |w| buf.push(w));
            }
            let mut cross: Vec<u32> = Vec::new();
            for j in 0..self.nbr_buf.len() {
                let w = self.nbr_buf[j];
                if self.in_subset(w) && self.part.find(w) == other {
                    cross.push(w);
                }
            }
            if cross.is_empty() {
                continue;
            }
            // Doubly connected pair through any of these cross edges.
            for &w in &cross {
                if self.ledger.examine(self.sampler, v, w) {
                    return true;
                }
            }
            // Count conditions for both endpoints of the cross edges.
            if self.vertex_fires(v, other) {
                return true;
            }
            for &w in &cross {
                if self.vertex_fires(w, small) {
                    return true;
                }
            }
        }
        false
    }

    /// One synchronous round applied in place; returns the number of
    /// cluster merges performed (0 at a fixed point, where the partition
    /// stops changing).
    pub fn step_once(&mut self) -> u32 {
        let merged = self.step(&mut None);
        if merged > 0 {
            self.t += 1;
        }
        merged
    }

    /// The current cluster graph: all cluster pairs whose merge condition
    /// holds, as canonical root pairs, sorted. Evaluates every cross edge.
    pub fn cluster_graph(&mut self) -> Vec<(u32, u32)> {
        self.pair_memo.clear();
        let mut fired = Vec::new();
        for ei in 0..self.edges.len() as u32 {
            let (u, v) = {
                let e = &self.edges[ei as usize];
                (e.u, e.v)
            };
            let ru = self.part.find(u);
            let rv = self.part.find(v);
            if ru == rv {
                continue;
            }
            if self.pair_fires(ei, ru, rv) {
                fired.push((ru.min(rv), ru.max(rv)));
            }
        }
        fired.sort_unstable();
        fired.dedup();
        fired
    }

    /// One round: evaluates pending cluster pairs and, if any fire, merges
    /// per the synchronous rule or the given slow policy. Returns the number
    /// of cluster merges performed (0 at a fixed point).
    fn step(&mut self, policy: &mut Option<&mut SlowPolicy>) -> u32 {
        if self.dirty.is_empty() {
            return 0;
        }
        self.pair_memo.clear();
        let dirty = std::mem::take(&mut self.dirty);
        let mut fired_pairs: Vec<(u32, u32)> = Vec::new();
        let mut fired_edges: Vec<u32> = Vec::new();
        for &ei in &dirty {
            self.in_dirty[ei as usize] = false;
            let (u, v) = {
                let e = &self.edges[ei as usize];
                (e.u, e.v)
            };
            let ru = self.part.find(u);
            let rv = self.part.find(v);
            if ru == rv {
                continue;
            }
            if self.pair_fires(ei, ru, rv) {
                fired_pairs.push((ru.min(rv), ru.max(rv)));
                fired_edges.push(ei);
            }
        }
        fired_pairs.sort_unstable();
        fired_pairs.dedup();
        if fired_pairs.is_empty() {
            return 0;
        }

        let selected: Vec<(u32, u32)> = match policy {
            None => fired_pairs.clone(),
            Some(SlowPolicy::OneEdge(rng)) => {
                vec![fired_pairs[rng.below(fired_pairs.len())]]
            }
            Some(SlowPolicy::RandomSubset(rng)) => {
                let mut chosen: Vec<(u32, u32)> = fired_pairs
                    .iter()
                    .copied()
                    .filter(|_| rng.next_u64() & 1 == 0)
                    .collect();
                if chosen.is_empty() {
                    chosen.push(fired_pairs[rng.below(fired_pairs.len())]);
                }
                chosen
            }
        };

        let mut merges = 0u32;
        let mut changed: Vec<u32> = Vec::new();
        for &(a, b) in &selected {
            let ra = self.part.find(a);
            let rb = self.part.find(b);
            if ra == rb {
                continue;
            }
            self.ensure_boundary(ra);
            self.ensure_boundary(rb);
            let (surv, absorbed) = self.part.union(ra, rb).expect("distinct roots");
            let mut moved = std::mem::take(&mut self.boundary[absorbed as usize]);
            self.boundary[surv as usize].append(&mut moved);
            changed.push(surv);
            merges += 1;
        }

        // Invalidate edges adjacent to every cluster that changed: its new
        // members shift both puzzle and people counts for all its neighbors.
        let mut final_roots: Vec<u32> = changed.iter().map(|&r| self.part.find(r)).collect();
        final_roots.sort_unstable();
        final_roots.dedup();
        for root in final_roots {
            let mut list = std::mem::take(&mut self.boundary[root as usize]);
            list.retain(|&ei| {
                let e = &self.edges[ei as usize];
                self.part.find(e.u) != self.part.find(e.v)
            });
            for &ei in &list {
                if !self.in_dirty[ei as usize] {
                    self.in_dirty[ei as usize] = true;
                    self.dirty.push(ei);
                }
            }
            self.boundary[root as usize] = list;
        }

        // Under a slow policy, pairs that fired but were not selected stay
        // mergeable; their edges must be reconsidered next round.
        if policy.is_some() {
            for &ei in &fired_edges {
                let e = &self.edges[ei as usize];
                if self.part.find(e.u) != self.part.find(e.v) && !self.in_dirty[ei as usize] {
                    self.in_dirty[ei as usize] = true;
                    self.dirty.push(ei);
                }
            }
        }
        merges
    }

    fn run_inner(
        mut self,
        mut policy: Option<&mut SlowPolicy>,
        mut observer: Option<StepObserver<'_>>,
    ) -> RunResult {
        if let Some(obs) = observer.as_mut() {
            obs(0, &self.part);
        }
        let mut merge_trace = Vec::new();
        loop {
            let merged = self.step(&mut policy);
            if merged == 0 {
                break;
            }
            self.t += 1;
            merge_trace.push(merged);
            if let Some(obs) = observer.as_mut() {
                obs(self.t, &self.part);
            }
        }
        RunResult {
            solved: self.part.cluster_count() == 1,
            t_final: self.t,
            merge_trace,
            exam: self.ledger.stats(),
            final_partition: self.part,
        }
    }

    /// Synchronous dynamics to the final partition.
    pub fn run(self) -> RunResult {
        self.run_inner(None, None)
    }

    pub fn run_observed(self, observer: StepObserver<'_>) -> RunResult {
        self.run_inner(None, Some(observer))
    }

    /// Slowed-down dynamics; reaches the same final partition.
    pub fn run_slowed(self, policy: &mut SlowPolicy) -> RunResult {
        self.run_inner(Some(policy), None)
    }

    pub fn run_slowed_observed(
        self,
        policy: &mut SlowPolicy,
        observer: StepObserver<'_>,
    ) -> RunResult {
        self.run_inner(Some(policy), Some(observer))
    }
}

#[inline]
fn root_pair_key(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

/// Runs the synchronous dynamics from all singletons.
pub fn run(topo: &Topology, params: DynamicsParams, sampler: &EdgeSampler) -> RunResult {
    Engine::new(topo, params, sampler).run()
}

/// Runs a slowed-down variant from all singletons.
pub fn run_slowed(
    topo: &Topology,
    params: DynamicsParams,
    sampler: &EdgeSampler,
    policy: &mut SlowPolicy,
) -> RunResult {
    Engine::new(topo, params, sampler).run_slowed(policy)
}

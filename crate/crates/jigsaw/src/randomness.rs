//! Lazily sampled Erdős–Rényi people graph.
//!
//! Edge statuses come from a stateless counter-mode pseudo-random function:
//! the SplitMix64 finalizer applied to the canonical pair index and the seed.
//! Statuses are therefore order-independent and repeatable, which makes the
//! decided-edge store an accounting device rather than a correctness
//! requirement, and gives a pathwise monotone coupling across `p` for free
//! (`uniform(pair) < p` with the same seed).

use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};

use crate::topology::VertexId;

/// SplitMix64 finalizer (Stafford mix 13). Bijective on `u64` with full
/// avalanche; the standard choice for counter-mode mixing.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The `i`-th output of a SplitMix64 stream seeded with `master`.
///
/// Trial `i` of any Monte Carlo batch uses `derive_seed(master, i)`, so runs
/// are reproducible bit-exactly across platforms and parallelism degrees.
#[inline]
pub fn derive_seed(master: u64, i: u64) -> u64 {
    mix64(master.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Uniform in `[0, 1)` from the top 53 bits of a mixed word.
#[inline]
fn to_unit(bits: u64) -> f64 {
    const DEN: f64 = (1u64 << 53) as f64;
    ((bits >> 11) as f64) / DEN
}

/// Pure keyed uniform: deterministic in `(seed, key)`, i.i.d. across keys to
/// the quality of two finalizer rounds.
#[inline]
pub fn keyed_uniform(seed: u64, key: u64) -> f64 {
    to_unit(mix64(mix64(key) ^ seed))
}

#[inline]
fn pair_key(u: VertexId, v: VertexId) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    ((a as u64) << 32) | b as u64
}

/// Minimal stream RNG for in-trial decisions (subset policies, shuffles).
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        to_unit(self.next_u64())
    }

    /// Uniform integer in `[0, bound)`, `bound >= 1`.
    #[inline]
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound >= 1);
        // Multiply-shift range reduction; bias is < 2^-53 for our bounds.
        (((self.next_u64() >> 11) as u128 * bound as u128) >> 53) as usize
    }
}

/// Identity-strength hasher for keys that are already mixed or get mixed
/// here; avoids SipHash cost on the simulation hot path.
#[derive(Default)]
pub struct KeyHasher(u64);

impl Hasher for KeyHasher {
    #[inline]
    fn write(&mut self, _: &[u8]) {
        unreachable!("KeyHasher only accepts u64 keys");
    }
    #[inline]
    fn write_u64(&mut self, k: u64) {
        self.0 = mix64(k);
    }
    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }
}

pub type KeyHashBuilder = BuildHasherDefault<KeyHasher>;
pub type PairMap<V> = HashMap<u64, V, KeyHashBuilder>;
pub type PairSet = HashSet<u64, KeyHashBuilder>;

#[derive(Clone, Debug)]
enum Mode {
    Lazy,
    Explicit(PairSet),
}

/// People-graph edge oracle: a pure seeded function from unordered vertex
/// pairs to Bernoulli(`p`) statuses, or an explicit edge set.
#[derive(Clone, Debug)]
pub struct EdgeSampler {
    master_seed: u64,
    p: f64,
    mode: Mode,
}

impl EdgeSampler {
    pub fn lazy(master_seed: u64, p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p), "edge probability {p} not in [0,1]");
        Self {
            master_seed,
            p,
            mode: Mode::Lazy,
        }
    }

    /// Explicit edge set, used by exact-enumeration oracles and
    /// coarse-grained instances.
    pub fn explicit<I: IntoIterator<Item = (VertexId, VertexId)>>(edges: I) -> Self {
        let set: PairSet = edges
            .into_iter()
            .map(|(u, v)| {
                assert_ne!(u, v, "self edge ({u},{u}) in explicit edge set");
                pair_key(u, v)
            })
            .collect();
        Self {
            master_seed: 0,
            p: 0.0,
            mode: Mode::Explicit(set),
        }
    }

    pub fn seed(&self) -> u64 {
        self.master_seed
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Same underlying uniforms, different threshold: the coupled sampler
    /// family used by monotone sweeps.
    pub fn with_p(&self, p: f64) -> Self {
        match &self.mode {
            Mode::Lazy => Self::lazy(self.master_seed, p),
            Mode::Explicit(_) => panic!("with_p on an explicit sampler"),
        }
    }

    /// The pair uniform behind `status`; exposed for coupling diagnostics.
    #[inline]
    pub fn pair_uniform(&self, u: VertexId, v: VertexId) -> f64 {
        debug_assert_ne!(u, v);
        keyed_uniform(self.master_seed, pair_key(u, v))
    }

    /// Edge status of the unordered pair `{u, v}`. Pure: repeated queries in
    /// any order agree.
    #[inline]
    pub fn status(&self, u: VertexId, v: VertexId) -> bool {
        assert_ne!(u, v, "people edge status queried for a self pair");
        match &self.mode {
            Mode::Lazy => self.pair_uniform(u, v) < self.p,
            Mode::Explicit(set) => set.contains(&pair_key(u, v)),
        }
    }
}

/// Summary of one ledger's examination accounting.
#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct ExamStats {
    /// Distinct unordered pairs whose status was decided.
    pub decided_pairs: u64,
    /// Max over vertices of distinct decided pairs containing the vertex,
    /// regardless of which side initiated the examination.
    pub max_first_exams_per_vertex: u32,
    /// Max over vertices of distinct oriented examinations `v -> w` the
    /// vertex initiated. This is the quantity with the polylog guarantee:
    /// the unordered count at a vertex also absorbs incoming examinations,
    /// which grow with the instance (whoever sits first in a big cluster's
    /// scan order is examined by every scanner that ever borders it).
    pub max_oriented_exams_per_vertex: u32,
    /// Total `examine` calls, including repeats.
    pub total_queries: u64,
}

const ST_OPEN: u8 = 1;
const ST_LO_SCANNED: u8 = 2;
const ST_HI_SCANNED: u8 = 4;

/// Decided-edge store with per-vertex first-examination counters, both
/// unordered (pair decided) and oriented (scans initiated).
///
/// One ledger per trial; merging across trials happens on the summary
/// statistics, never on the stores.
#[derive(Clone, Debug)]
pub struct ExamLedger {
    decided: PairMap<u8>,
    per_vertex_first_exams: Vec<u32>,
    oriented_exams: Vec<u32>,
    total_queries: u64,
}

impl ExamLedger {
    pub fn new(vertex_count: u32) -> Self {
        Self {
            decided: PairMap::default(),
            per_vertex_first_exams: vec![0; vertex_count as usize],
            oriented_exams: vec![0; vertex_count as usize],
            total_queries: 0,
        }
    }

    /// Queries the status of `{u, v}` with `u` as the initiating side.
    /// Idempotent in value and in all counters.
    #[inline]
    pub fn examine(&mut self, sampler: &EdgeSampler, u: VertexId, v: VertexId) -> bool {
        assert_ne!(u, v, "examine called on a self pair");
        self.total_queries += 1;
        let key = pair_key(u, v);
        let orient = if u < v { ST_LO_SCANNED } else { ST_HI_SCANNED };
        if let Some(entry) = self.decided.get_mut(&key) {
            if *entry & orient == 0 {
                *entry |= orient;
                self.oriented_exams[u as usize] += 1;
            }
            return *entry & ST_OPEN != 0;
        }
        let status = sampler.status(u, v);
        self.decided
            .insert(key, orient | if status { ST_OPEN } else { 0 });
        self.per_vertex_first_exams[u as usize] += 1;
        self.per_vertex_first_exams[v as usize] += 1;
        self.oriented_exams[u as usize] += 1;
        status
    }

    /// First `w` in `candidates` (in the given order) with an open edge to
    /// `v`; examines only the prefix up to and including the hit.
    pub fn find_people_neighbor_in(
        &mut self,
        sampler: &EdgeSampler,
        v: VertexId,
        candidates: &[VertexId],
    ) -> Option<VertexId> {
        candidates
            .iter()
            .copied()
            .find(|&w| self.examine(sampler, v, w))
    }

    /// `min(cap, |{w in candidates : open(v, w)}|)`, stopping at `cap`.
    pub fn count_people_neighbors_in(
        &mut self,
        sampler: &EdgeSampler,
        v: VertexId,
        candidates: &[VertexId],
        cap: u32,
    ) -> u32 {
        assert!(cap >= 1);
        let mut found = 0;
        for &w in candidates {
            if self.examine(sampler, v, w) {
                found += 1;
                if found >= cap {
                    break;
                }
            }
        }
        found
    }

    pub fn max_exams_per_vertex(&self) -> u32 {
        self.per_vertex_first_exams.iter().copied().max().unwrap_or(0)
    }

    /// Max over vertices of distinct oriented examinations initiated.
    pub fn max_oriented_exams_per_vertex(&self) -> u32 {
        self.oriented_exams.iter().copied().max().unwrap_or(0)
    }

    pub fn first_exams_of(&self, v: VertexId) -> u32 {
        self.per_vertex_first_exams[v as usize]
    }

    pub fn oriented_exams_of(&self, v: VertexId) -> u32 {
        self.oriented_exams[v as usize]
    }

    pub fn decided_pairs(&self) -> u64 {
        self.decided.len() as u64
    }

    pub fn stats(&self) -> ExamStats {
        ExamStats {
            decided_pairs: self.decided_pairs(),
            max_first_exams_per_vertex: self.max_exams_per_vertex(),
            max_oriented_exams_per_vertex: self.max_oriented_exams_per_vertex(),
            total_queries: self.total_queries,
        }
    }

    /// Rough resident size of the ledger stores, for capacity reports.
    pub fn approx_bytes(&self) -> usize {
        // HashMap entry: key + value + control byte, times the load slack.
        self.decided.capacity() * (8 + 1 + 1) + self.per_vertex_first_exams.len() * 8
    }
}

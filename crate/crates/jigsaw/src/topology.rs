//! Deterministic puzzle-graph families.
//!
//! Vertices are flat `u32` indices; coordinates are derived mixed-radix views
//! so that union-find and samplers stay family-agnostic. Neighbor enumeration
//! is computed on the fly: no adjacency is stored, so huge instances cost no
//! memory beyond their descriptors.

use std::fmt;
use std::str::FromStr;

/// Index of a vertex, in `[0, N)` for the owning family.
pub type VertexId = u32;

/// The supported puzzle-graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Family {
    /// Cycle on `n` vertices, `n >= 3`.
    Ring { n: u32 },
    /// `d`-dimensional lattice torus on `Z_n^d`, `n >= 3`, `d >= 1`.
    Torus { n: u32, d: u32 },
    /// Two-dimensional torus with `||.||_inf <= r` neighborhoods, `n >= 2r+1`.
    RangeRTorus { n: u32, r: u32 },
    /// Hypercube `{0,1}^n`, `1 <= n <= 30`.
    Hypercube { n: u32 },
    /// `d`-dimensional Hamming graph on `Z_n^d` (edges differ in one coordinate).
    HammingTorus { n: u32, d: u32 },
    /// Cartesian product of the complete graph `K_n` and a ring of length `m`.
    CompleteTimesRing { n: u32, m: u32 },
    /// Complete graph on `n` vertices.
    Complete { n: u32 },
}

/// Error raised for invalid family parameters or spec strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyError(pub String);

impl fmt::Display for TopologyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "topology error: {}", self.0)
    }
}

impl std::error::Error for TopologyError {}

/// A validated, immutable puzzle-graph descriptor.
///
/// Values are cheap to copy and safe to share across concurrent trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Topology {
    family: Family,
    vertex_count: u32,
    degree: u32,
}

impl Topology {
    pub fn new(family: Family) -> Result<Self, TopologyError> {
        let err = |m: String| Err(TopologyError(m));
        let (vertex_count, degree) = match family {
            Family::Ring { n } => {
                if n < 3 {
                    return err(format!("ring needs n >= 3, got {n}"));
                }
                (n as u64, 2)
            }
            Family::Torus { n, d } => {
                if n < 3 {
                    return err(format!("torus needs n >= 3, got {n}"));
                }
                if d == 0 || d > 6 {
                    return err(format!("torus needs 1 <= d <= 6, got {d}"));
                }
                ((n as u64).pow(d), 2 * d)
            }
            Family::RangeRTorus { n, r } => {
                if r == 0 {
                    return err("range torus needs r >= 1".into());
                }
                if n < 2 * r + 1 {
                    return err(format!("range torus needs n >= 2r+1, got n={n}, r={r}"));
                }
                ((n as u64).pow(2), (2 * r + 1) * (2 * r + 1) - 1)
            }
            Family::Hypercube { n } => {
                if n == 0 || n > 30 {
                    return err(format!("hypercube needs 1 <= n <= 30, got {n}"));
                }
                (1u64 << n, n)
            }
            Family::HammingTorus { n, d } => {
                if n < 3 {
                    return err(format!("hamming torus needs n >= 3, got {n}"));
                }
                if d == 0 || d > 6 {
                    return err(format!("hamming torus needs 1 <= d <= 6, got {d}"));
                }
                ((n as u64).pow(d), d * (n - 1))
            }
            Family::CompleteTimesRing { n, m } => {
                if n < 2 {
                    return err(format!("kxring needs n >= 2, got {n}"));
                }
                if m < 3 {
                    return err(format!("kxring needs m >= 3, got {m}"));
                }
                (n as u64 * m as u64, (n - 1) + 2)
            }
            Family::Complete { n } => {
                if n == 0 {
                    return err("complete graph needs n >= 1".into());
                }
                (n as u64, n - 1)
            }
        };
        if vertex_count > u32::MAX as u64 {
            return err(format!("vertex count {vertex_count} exceeds u32 indexing"));
        }
        Ok(Topology {
            family,
            vertex_count: vertex_count as u32,
            degree,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Number of vertices `N`.
    pub fn vertex_count(&self) -> u32 {
        self.vertex_count
    }

    /// Common degree `D` (every family here is vertex-transitive).
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Calls `f` for every puzzle neighbor of `v`. Order is deterministic but
    /// unspecified; use [`Topology::neighbors`] for the sorted view.
    #[inline]
    pub fn for_each_neighbor<F: FnMut(VertexId)>(&self, v: VertexId, mut f: F) {
        assert!(v < self.vertex_count, "vertex {v} out of range");
        match self.family {
            Family::Ring { n } => {
                f((v + 1) % n);
                f((v + n - 1) % n);
            }
            Family::Torus { n, d } => {
                let mut base = 1u64;
                let mut rest = v;
                for _ in 0..d {
                    let c = rest % n;
                    rest /= n;
                    let lo = v as u64 - c as u64 * base;
                    f((lo + ((c + 1) % n) as u64 * base) as u32);
                    f((lo + ((c + n - 1) % n) as u64 * base) as u32);
                    base *= n as u64;
                }
            }
            Family::RangeRTorus { n, r } => {
                let x = v % n;
                let y = v / n;
                for dy in 0..=(2 * r) {
                    let ny = (y + n + dy - r) % n;
                    for dx in 0..=(2 * r) {
                        if dx == r && dy == r {
                            continue;
                        }
                        let nx = (x + n + dx - r) % n;
                        f(ny * n + nx);
                    }
                }
            }
            Family::Hypercube { n } => {
                for b in 0..n {
                    f(v ^ (1 << b));
                }
            }
            Family::HammingTorus { n, d } => {
                let mut base = 1u64;
                let mut rest = v;
                for _ in 0..d {
                    let c = rest % n;
                    rest /= n;
                    let lo = v as u64 - c as u64 * base;
                    for other in 0..n {
                        if other != c {
                            f((lo + other as u64 * base) as u32);
                        }
                    }
                    base *= n as u64;
                }
            }
            Family::CompleteTimesRing { n, m: _ } => {
                let i = v % n;
                let ring_lo = v - i;
                for other in 0..n {
                    if other != i {
                        f(ring_lo + other);
                    }
                }
                let j = v / n;
                let m = self.vertex_count / n;
                f(((j + 1) % m) * n + i);
                f(((j + m - 1) % m) * n + i);
            }
            Family::Complete { n } => {
                for u in 0..n {
                    if u != v {
                        f(u);
                    }
                }
            }
        }
    }

    /// Puzzle neighbors of `v` in ascending index order.
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(self.degree as usize);
        self.for_each_neighbor(v, |w| out.push(w));
        out.sort_unstable();
        out
    }

    /// `cpuzzle(v, S)`: number of puzzle neighbors of `v` inside the set
    /// described by `in_set`, never counting `v` itself.
    pub fn cpuzzle<F: Fn(VertexId) -> bool>(&self, v: VertexId, in_set: F) -> u32 {
        let mut count = 0;
        self.for_each_neighbor(v, |w| {
            if w != v && in_set(w) {
                count += 1;
            }
        });
        count
    }

    /// All puzzle edges as canonical `(min, max)` pairs, ascending.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for v in 0..self.vertex_count {
            self.for_each_neighbor(v, |w| {
                if v < w {
                    out.push((v, w));
                }
            });
        }
        out.sort_unstable();
        out
    }

    /// Decodes a vertex of a 2D family into `(x, y)`.
    pub fn coords2(&self, v: VertexId) -> (u32, u32) {
        let n = match self.family {
            Family::Torus { n, d: 2 } | Family::RangeRTorus { n, .. } => n,
            _ => panic!("coords2 requires a two-dimensional family"),
        };
        (v % n, v / n)
    }

    /// Encodes `(x, y)` for a 2D family.
    pub fn from_coords2(&self, x: u32, y: u32) -> VertexId {
        let n = match self.family {
            Family::Torus { n, d: 2 } | Family::RangeRTorus { n, .. } => n,
            _ => panic!("from_coords2 requires a two-dimensional family"),
        };
        y * n + x
    }

    /// True when BFS from vertex 0 reaches all `N` vertices.
    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count as usize;
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        seen[0] = true;
        queue.push_back(0u32);
        let mut reached = 1usize;
        while let Some(v) = queue.pop_front() {
            self.for_each_neighbor(v, |w| {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    reached += 1;
                    queue.push_back(w);
                }
            });
        }
        reached == n
    }

    /// Block coarse-graining of an even-sided 2D torus into 2x2 squares.
    ///
    /// The returned people-edge set contains a canonical pair of coarse
    /// vertices whenever at least one people edge of the fine instance
    /// connects the two (distinct) 2x2 blocks; `people_edge` supplies the
    /// fine-instance edge statuses.
    pub fn coarse_grain_2x2<F: FnMut(VertexId, VertexId) -> bool>(
        &self,
        mut people_edge: F,
    ) -> Result<(Topology, Vec<(VertexId, VertexId)>), TopologyError> {
        let n = match self.family {
            Family::Torus { n, d: 2 } => n,
            _ => {
                return Err(TopologyError(
                    "coarse graining requires a two-dimensional torus".into(),
                ))
            }
        };
        if n % 2 != 0 {
            return Err(TopologyError(format!(
                "coarse graining requires even n, got {n}"
            )));
        }
        let half = n / 2;
        let coarse = Topology::new(Family::Torus { n: half, d: 2 })?;
        let block_of = |v: u32| -> u32 {
            let (x, y) = (v % n, v / n);
            (y / 2) * half + x / 2
        };
        let members = |b: u32| -> [u32; 4] {
            let (bx, by) = (b % half, b / half);
            let (x, y) = (2 * bx, 2 * by);
            [y * n + x, y * n + x + 1, (y + 1) * n + x, (y + 1) * n + x + 1]
        };
        let blocks = half * half;
        let mut edges = Vec::new();
        for b1 in 0..blocks {
            let m1 = members(b1);
            for b2 in (b1 + 1)..blocks {
                let m2 = members(b2);
                'pairs: for &u in &m1 {
                    for &w in &m2 {
                        debug_assert_ne!(block_of(u), block_of(w));
                        if people_edge(u, w) {
                            edges.push((b1, b2));
                            break 'pairs;
                        }
                    }
                }
            }
        }
        Ok((coarse, edges))
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Ring { n } => write!(f, "ring:n={n}"),
            Family::Torus { n, d } => write!(f, "torus:n={n},d={d}"),
            Family::RangeRTorus { n, r } => write!(f, "range:n={n},r={r}"),
            Family::Hypercube { n } => write!(f, "hypercube:n={n}"),
            Family::HammingTorus { n, d } => write!(f, "hamming:n={n},d={d}"),
            Family::CompleteTimesRing { n, m } => write!(f, "kxring:n={n},m={m}"),
            Family::Complete { n } => write!(f, "complete:n={n}"),
        }
    }
}

impl FromStr for Topology {
    type Err = TopologyError;

    /// Parses family spec strings such as `ring:n=1024`, `torus:n=400,d=2`,
    /// `range:n=400,r=3`, `hypercube:n=16`, `hamming:n=50,d=3`,
    /// `kxring:n=64,m=9`, `complete:n=100`.
    fn from_str(s: &str) -> Result<Self, TopologyError> {
        let (name, rest) = s
            .split_once(':')
            .ok_or_else(|| TopologyError(format!("missing ':' in topology spec '{s}'")))?;
        let mut params = std::collections::BTreeMap::new();
        for kv in rest.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| TopologyError(format!("bad key=value '{kv}' in '{s}'")))?;
            let value: u32 = v
                .trim()
                .parse()
                .map_err(|_| TopologyError(format!("bad integer '{v}' in '{s}'")))?;
            if params.insert(k.trim().to_string(), value).is_some() {
                return Err(TopologyError(format!("duplicate key '{k}' in '{s}'")));
            }
        }
        let take = |params: &mut std::collections::BTreeMap<String, u32>,
                    key: &str|
         -> Result<u32, TopologyError> {
            params
                .remove(key)
                .ok_or_else(|| TopologyError(format!("missing '{key}' in '{s}'")))
        };
        let mut p = params;
        let family = match name.trim() {
            "ring" => Family::Ring { n: take(&mut p, "n")? },
            "torus" => Family::Torus {
                n: take(&mut p, "n")?,
                d: take(&mut p, "d")?,
            },
            "range" => Family::RangeRTorus {
                n: take(&mut p, "n")?,
                r: take(&mut p, "r")?,
            },
            "hypercube" => Family::Hypercube { n: take(&mut p, "n")? },
            "hamming" => Family::HammingTorus {
                n: take(&mut p, "n")?,
                d: take(&mut p, "d")?,
            },
            "kxring" => Family::CompleteTimesRing {
                n: take(&mut p, "n")?,
                m: take(&mut p, "m")?,
            },
            "complete" => Family::Complete { n: take(&mut p, "n")? },
            other => return Err(TopologyError(format!("unknown family '{other}'"))),
        };
        if let Some(k) = p.keys().next() {
            return Err(TopologyError(format!("unknown key '{k}' in '{s}'")));
        }
        Topology::new(family)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn all_families() -> Vec<Topology> {
        vec![
            Topology::new(Family::Ring { n: 7 }).unwrap(),
            Topology::new(Family::Torus { n: 4, d: 2 }).unwrap(),
            Topology::new(Family::Torus { n: 3, d: 3 }).unwrap(),
            Topology::new(Family::RangeRTorus { n: 7, r: 2 }).unwrap(),
            Topology::new(Family::Hypercube { n: 4 }).unwrap(),
            Topology::new(Family::HammingTorus { n: 4, d: 2 }).unwrap(),
            Topology::new(Family::CompleteTimesRing { n: 4, m: 5 }).unwrap(),
            Topology::new(Family::Complete { n: 6 }).unwrap(),
        ]
    }

    #[test]
    fn ring_neighbors() {
        let t = Topology::new(Family::Ring { n: 4 }).unwrap();
        assert_eq!(t.neighbors(0), vec![1, 3]);
        assert_eq!(t.neighbors(2), vec![1, 3]);
    }

    #[test]
    fn torus_neighbors_wrap() {
        let t = Topology::new(Family::Torus { n: 3, d: 2 }).unwrap();
        // (0,0) -> (1,0), (2,0), (0,1), (0,2), i.e. indices 1, 2, 3, 6.
        assert_eq!(t.neighbors(0), vec![1, 2, 3, 6]);
    }

    #[test]
    fn hypercube_neighbors_are_bit_flips() {
        let t = Topology::new(Family::Hypercube { n: 3 }).unwrap();
        assert_eq!(t.neighbors(0), vec![1, 2, 4]);
    }

    #[test]
    fn cpuzzle_counts_and_excludes_self() {
        let t = Topology::new(Family::Ring { n: 5 }).unwrap();
        let s: HashSet<u32> = [1, 3].into_iter().collect();
        assert_eq!(t.cpuzzle(2, |v| s.contains(&v)), 2);
        let only_self: HashSet<u32> = [2].into_iter().collect();
        assert_eq!(t.cpuzzle(2, |v| only_self.contains(&v)), 0);
    }

    #[test]
    fn cpuzzle_on_torus() {
        let t = Topology::new(Family::Torus { n: 4, d: 2 }).unwrap();
        let v = t.from_coords2(0, 0);
        let s: HashSet<u32> = [
            t.from_coords2(1, 0),
            t.from_coords2(0, 3),
            t.from_coords2(2, 2),
        ]
        .into_iter()
        .collect();
        assert_eq!(t.cpuzzle(v, |w| s.contains(&w)), 2);
    }

    #[test]
    fn neighbor_symmetry_no_self_no_dups() {
        for t in all_families() {
            for v in 0..t.vertex_count() {
                let nbrs = t.neighbors(v);
                assert_eq!(nbrs.len() as u32, t.degree(), "{t} vertex {v}");
                let set: HashSet<u32> = nbrs.iter().copied().collect();
                assert_eq!(set.len(), nbrs.len(), "{t} duplicate neighbor at {v}");
                assert!(!set.contains(&v), "{t} self-loop at {v}");
                for w in nbrs {
                    assert!(t.neighbors(w).contains(&v), "{t} asymmetric {v}-{w}");
                }
            }
        }
    }

    #[test]
    fn every_family_is_connected() {
        for t in all_families() {
            assert!(t.is_connected(), "{t} not connected");
        }
    }

    #[test]
    fn guards_reject_small_instances() {
        assert!(Topology::new(Family::Ring { n: 2 }).is_err());
        assert!(Topology::new(Family::Torus { n: 2, d: 2 }).is_err());
        assert!(Topology::new(Family::RangeRTorus { n: 4, r: 2 }).is_err());
        assert!(Topology::new(Family::Hypercube { n: 31 }).is_err());
        assert!(Topology::new(Family::HammingTorus { n: 2, d: 2 }).is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for spec in [
            "ring:n=1024",
            "torus:n=400,d=2",
            "range:n=400,r=3",
            "hypercube:n=16",
            "hamming:n=50,d=3",
            "kxring:n=64,m=9",
            "complete:n=100",
        ] {
            let t: Topology = spec.parse().unwrap();
            assert_eq!(t.to_string(), spec);
        }
        assert!("torus:n=400".parse::<Topology>().is_err());
        assert!("torus:n=400,d=2,z=1".parse::<Topology>().is_err());
        assert!("blob:n=4".parse::<Topology>().is_err());
    }

    #[test]
    fn coarse_grain_definition_cases() {
        let t = Topology::new(Family::Torus { n: 6, d: 2 }).unwrap();
        // No people edges at all.
        let (coarse, edges) = t.coarse_grain_2x2(|_, _| false).unwrap();
        assert_eq!(coarse.vertex_count(), 9);
        assert!(edges.is_empty());

        // A single edge inside one block is ignored.
        let a = t.from_coords2(0, 0);
        let b = t.from_coords2(1, 1);
        let (_, edges) = t
            .coarse_grain_2x2(|u, w| (u.min(w), u.max(w)) == (a.min(b), a.max(b)))
            .unwrap();
        assert!(edges.is_empty());

        // An edge between (0,0) and (2,0) links blocks (0,0) and (1,0).
        let c = t.from_coords2(2, 0);
        let (coarse, edges) = t
            .coarse_grain_2x2(|u, w| (u.min(w), u.max(w)) == (a.min(c), a.max(c)))
            .unwrap();
        assert_eq!(edges, vec![(0, coarse.from_coords2(1, 0))]);
    }

    #[test]
    fn coarse_grain_rejects_odd_side() {
        let t = Topology::new(Family::Torus { n: 5, d: 2 }).unwrap();
        assert!(t.coarse_grain_2x2(|_, _| false).is_err());
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn neighbors_out_of_range_panics() {
        let t = Topology::new(Family::Ring { n: 4 }).unwrap();
        t.neighbors(4);
    }
}

//! Union-find partition with per-cluster member lists.
//!
//! Roots of singleton clusters keep an implicit member list (just the root)
//! so that starting a run on a large instance costs no per-vertex heap
//! allocations; lists materialize on first merge and then grow append-only,
//! smaller into larger. Append-only growth is what lets the engine resume
//! partial people-neighbor scans after merges.

use crate::topology::{Topology, VertexId};

#[derive(Clone, Debug, serde::Serialize)]
pub struct Partition {
    parent: Vec<u32>,
    size: Vec<u32>,
    members: Vec<Vec<u32>>,
    active: Vec<u32>,
    cluster_count: usize,
    max_cluster_size: u32,
    generation: u64,
}

impl Partition {
    /// All-singletons partition of `[0, n)`.
    pub fn singletons(n: u32) -> Self {
        Self::singletons_of(n, None)
    }

    /// All-singletons partition of a vertex subset of `[0, n)`.
    pub fn singletons_of(n: u32, subset: Option<&[VertexId]>) -> Self {
        let n = n as usize;
        let mut size = vec![0u32; n];
        let active: Vec<u32> = match subset {
            None => (0..n as u32).collect(),
            Some(s) => {
                let mut s = s.to_vec();
                s.sort_unstable();
                s.dedup();
                s
            }
        };
        for &v in &active {
            assert!((v as usize) < n, "subset vertex {v} out of range");
            size[v as usize] = 1;
        }
        let count = active.len();
        Partition {
            parent: (0..n as u32).collect(),
            size,
            members: vec![Vec::new(); n],
            active,
            cluster_count: count,
            max_cluster_size: if count == 0 { 0 } else { 1 },
            generation: 0,
        }
    }

    /// Partition with the given initial clusters over their union.
    /// Clusters must be disjoint and non-empty.
    pub fn from_clusters(n: u32, clusters: &[Vec<VertexId>]) -> Self {
        let mut part = Self::singletons_of(
            n,
            Some(&clusters.iter().flatten().copied().collect::<Vec<_>>()),
        );
        assert_eq!(
            part.active.len(),
            clusters.iter().map(|c| c.len()).sum::<usize>(),
            "initial clusters overlap"
        );
        for cluster in clusters {
            assert!(!cluster.is_empty(), "empty initial cluster");
            let root = cluster[0];
            for &v in &cluster[1..] {
                part.union(root, v);
            }
        }
        part
    }

    pub fn vertex_capacity(&self) -> u32 {
        self.parent.len() as u32
    }

    pub fn active_vertices(&self) -> &[u32] {
        &self.active
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn max_cluster_size(&self) -> u32 {
        self.max_cluster_size
    }

    /// Count of partition-changing events, bumped once per merge.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Root with path halving.
    #[inline]
    pub fn find(&mut self, v: VertexId) -> u32 {
        let mut v = v as usize;
        loop {
            let p = self.parent[v] as usize;
            if p == v {
                return v as u32;
            }
            let gp = self.parent[p];
            self.parent[v] = gp;
            v = gp as usize;
        }
    }

    /// Root without mutation; for read-only observers.
    #[inline]
    pub fn root_of(&self, v: VertexId) -> u32 {
        let mut v = v as usize;
        while self.parent[v] as usize != v {
            v = self.parent[v] as usize;
        }
        v as u32
    }

    #[inline]
    pub fn same_cluster(&self, u: VertexId, v: VertexId) -> bool {
        self.root_of(u) == self.root_of(v)
    }

    /// Size of the cluster rooted at `root`.
    #[inline]
    pub fn size_of(&self, root: u32) -> u32 {
        self.size[root as usize]
    }

    /// `idx`-th member of the cluster rooted at `root`, `idx < size_of(root)`.
    /// Member order is stable: merges only append.
    #[inline]
    pub fn member_at(&self, root: u32, idx: u32) -> u32 {
        let list = &self.members[root as usize];
        if list.is_empty() {
            debug_assert_eq!(self.size[root as usize], 1);
            debug_assert_eq!(idx, 0);
            root
        } else {
            list[idx as usize]
        }
    }

    /// Merges the clusters containing `a` and `b`.
    /// Returns `(survivor_root, absorbed_root)` or `None` if already merged.
    pub fn union(&mut self, a: VertexId, b: VertexId) -> Option<(u32, u32)> {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return None;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        if self.members[big as usize].is_empty() {
            self.members[big as usize].push(big);
        }
        if self.members[small as usize].is_empty() {
            self.members[big as usize].push(small);
        } else {
            let moved = std::mem::take(&mut self.members[small as usize]);
            self.members[big as usize].extend_from_slice(&moved);
        }
        self.size[big as usize] += self.size[small as usize];
        self.size[small as usize] = 0;
        self.max_cluster_size = self.max_cluster_size.max(self.size[big as usize]);
        self.cluster_count -= 1;
        self.generation += 1;
        Some((big, small))
    }

    /// Roots of all current clusters, ascending.
    pub fn roots(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .active
            .iter()
            .map(|&v| self.root_of(v))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Clusters as sorted member lists, ordered by smallest member.
    pub fn canonical_clusters(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = self
            .roots()
            .into_iter()
            .map(|r| {
                let mut c: Vec<u32> = (0..self.size_of(r)).map(|i| self.member_at(r, i)).collect();
                c.sort_unstable();
                c
            })
            .collect();
        out.sort();
        out
    }

    /// For each vertex, the size of its cluster (0 for inactive vertices).
    pub fn cluster_sizes_per_vertex(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.parent.len()];
        for &v in &self.active {
            out[v as usize] = self.size_of(self.root_of(v));
        }
        out
    }

    /// True when every cluster of `self` lies inside one cluster of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        self.active.iter().all(|&v| {
            let my_root = self.root_of(v);
            other.same_cluster(my_root, v)
        })
    }

    /// True when every cluster spans a puzzle-connected set.
    pub fn clusters_puzzle_connected(&self, topo: &Topology) -> bool {
        self.roots()
            .into_iter()
            .all(|r| cluster_is_connected(topo, &(0..self.size_of(r)).map(|i| self.member_at(r, i)).collect::<Vec<_>>()))
    }

    /// Internal consistency: member lists partition the active set and sizes
    /// agree with the lists. Test support.
    pub fn check_consistency(&self) -> bool {
        let mut seen = vec![false; self.parent.len()];
        let mut total = 0usize;
        for r in self.roots() {
            let sz = self.size_of(r) as usize;
            if sz == 0 {
                return false;
            }
            for i in 0..sz {
                let v = self.member_at(r, i as u32);
                if seen[v as usize] || self.root_of(v) != r {
                    return false;
                }
                seen[v as usize] = true;
            }
            total += sz;
        }
        total == self.active.len()
            && self.active.iter().all(|&v| seen[v as usize])
            && self.roots().len() == self.cluster_count
    }
}

/// BFS connectivity of a vertex set in the puzzle graph.
pub fn cluster_is_connected(topo: &Topology, cluster: &[VertexId]) -> bool {
    if cluster.is_empty() {
        return false;
    }
    if cluster.len() == 1 {
        return true;
    }
    let inside: std::collections::HashSet<u32> = cluster.iter().copied().collect();
    let mut seen = std::collections::HashSet::new();
    let mut queue = std::collections::VecDeque::new();
    seen.insert(cluster[0]);
    queue.push_back(cluster[0]);
    while let Some(v) = queue.pop_front() {
        topo.for_each_neighbor(v, |w| {
            if inside.contains(&w) && seen.insert(w) {
                queue.push_back(w);
            }
        });
    }
    seen.len() == cluster.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Family;

    #[test]
    fn singleton_layout() {
        let p = Partition::singletons(5);
        assert_eq!(p.cluster_count(), 5);
        assert_eq!(p.max_cluster_size(), 1);
        assert_eq!(p.size_of(3), 1);
        assert_eq!(p.member_at(3, 0), 3);
        assert!(p.check_consistency());
    }

    #[test]
    fn unions_merge_lists_append_only() {
        let mut p = Partition::singletons(6);
        let (big, _) = p.union(0, 1).unwrap();
        let before: Vec<u32> = (0..p.size_of(big)).map(|i| p.member_at(big, i)).collect();
        let r2 = p.find(2);
        let (big2, _) = p.union(big, r2).unwrap();
        assert_eq!(big2, big);
        let after: Vec<u32> = (0..p.size_of(big)).map(|i| p.member_at(big, i)).collect();
        assert_eq!(&after[..before.len()], &before[..], "prefix must be stable");
        assert_eq!(p.cluster_count(), 4);
        assert_eq!(p.max_cluster_size(), 3);
        assert!(p.check_consistency());
        assert!(p.union(1, 2).is_none());
    }

    #[test]
    fn subset_partitions() {
        let p = Partition::singletons_of(10, Some(&[2, 5, 7]));
        assert_eq!(p.cluster_count(), 3);
        assert_eq!(p.active_vertices(), &[2, 5, 7]);
        assert!(p.check_consistency());
    }

    #[test]
    fn from_clusters_and_refinement() {
        let coarse = Partition::from_clusters(4, &[vec![0, 1], vec![2, 3]]);
        assert_eq!(coarse.cluster_count(), 2);
        assert!(coarse.check_consistency());
        let fine = Partition::singletons(4);
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        let other = Partition::from_clusters(4, &[vec![0], vec![1, 2], vec![3]]);
        assert!(!coarse.refines(&other));
    }

    #[test]
    fn connectivity_check() {
        let ring = Topology::new(Family::Ring { n: 6 }).unwrap();
        assert!(cluster_is_connected(&ring, &[1, 2, 3]));
        assert!(!cluster_is_connected(&ring, &[1, 3]));
        let p = Partition::from_clusters(6, &[vec![0, 1, 2], vec![3, 4, 5]]);
        assert!(p.clusters_puzzle_connected(&ring));
        let q = Partition::from_clusters(6, &[vec![0, 2], vec![1, 3, 4, 5]]);
        assert!(!q.clusters_puzzle_connected(&ring));
    }
}

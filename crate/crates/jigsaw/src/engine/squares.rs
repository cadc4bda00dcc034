//! Edge growth by square completion on the 2D torus.
//!
//! Occupy every puzzle edge whose endpoints are doubly connected, then
//! repeatedly: whenever two occupied edges share a vertex and lie in a unit
//! square, occupy the opposite two edges of that square. This reaches the
//! same clusters as the merging dynamics with `tau = theta = 2` (for any
//! `sigma`), which is the bridge to modified bootstrap percolation.

use super::{EngineError, Partition};
use crate::randomness::EdgeSampler;
use crate::topology::{Family, Topology, VertexId};

/// Final occupied-edge configuration of the square-completion process.
#[derive(Clone, Debug)]
pub struct SquareCompletion {
    n: u32,
    occupied: Vec<bool>,
}

impl SquareCompletion {
    /// Edge slot of the puzzle edge leaving `v` rightwards (`dir = 0`) or
    /// upwards (`dir = 1`).
    #[inline]
    fn slot(v: u32, dir: u32) -> usize {
        (v * 2 + dir) as usize
    }

    pub fn is_occupied(&self, v: VertexId, dir: u32) -> bool {
        self.occupied[Self::slot(v, dir)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&b| b).count()
    }

    /// Both endpoints of an edge slot.
    fn endpoints(&self, slot: usize) -> (u32, u32) {
        let v = (slot / 2) as u32;
        let dir = (slot % 2) as u32;
        let n = self.n;
        let (x, y) = (v % n, v / n);
        let w = if dir == 0 {
            y * n + (x + 1) % n
        } else {
            ((y + 1) % n) * n + x
        };
        (v, w)
    }

    /// Vertex clusters induced by the occupied edges, isolated vertices
    /// included, as sorted member lists.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let mut part = Partition::singletons(self.n * self.n);
        for slot in 0..self.occupied.len() {
            if self.occupied[slot] {
                let (u, w) = self.endpoints(slot);
                part.union(u, w);
            }
        }
        part.canonical_clusters()
    }
}

/// Runs square completion; `topo` must be a two-dimensional torus.
pub fn square_completion_run(
    topo: &Topology,
    sampler: &EdgeSampler,
) -> Result<SquareCompletion, EngineError> {
    let n = match topo.family() {
        Family::Torus { n, d: 2 } => n,
        other => {
            return Err(EngineError(format!(
                "square completion requires a 2d torus, got {other:?}"
            )))
        }
    };
    let right = |v: u32| -> u32 { (v / n) * n + (v % n + 1) % n };
    let up = |v: u32| -> u32 { ((v / n + 1) % n) * n + v % n };
    let left = |v: u32| -> u32 { (v / n) * n + (v % n + n - 1) % n };
    let down = |v: u32| -> u32 { ((v / n + n - 1) % n) * n + v % n };

    let mut occupied = vec![false; (n * n * 2) as usize];
    let mut queue: Vec<usize> = Vec::new();
    for v in 0..n * n {
        if sampler.status(v, right(v)) {
            occupied[SquareCompletion::slot(v, 0)] = true;
            queue.push(SquareCompletion::slot(v, 0));
        }
        if sampler.status(v, up(v)) {
            occupied[SquareCompletion::slot(v, 1)] = true;
            queue.push(SquareCompletion::slot(v, 1));
        }
    }

    // Edges of the unit square with lower-left corner c:
    // bottom (c,0), left (c,1), right (right(c),1), top (up(c),0).
    let square_edges = |c: u32| -> [usize; 4] {
        [
            SquareCompletion::slot(c, 0),
            SquareCompletion::slot(c, 1),
            SquareCompletion::slot(right(c), 1),
            SquareCompletion::slot(up(c), 0),
        ]
    };
    // Adjacent pairs (sharing a square corner) among those four slots.
    const ADJ: [(usize, usize); 4] = [(0, 1), (0, 2), (3, 1), (3, 2)];

    while let Some(slot) = queue.pop() {
        let v = (slot / 2) as u32;
        let dir = (slot % 2) as u32;
        let squares = if dir == 0 { [v, down(v)] } else { [v, left(v)] };
        for c in squares {
            let e = square_edges(c);
            if ADJ
                .iter()
                .any(|&(a, b)| occupied[e[a]] && occupied[e[b]])
            {
                for &s in &e {
                    if !occupied[s] {
                        occupied[s] = true;
                        queue.push(s);
                    }
                }
            }
        }
    }

    Ok(SquareCompletion { n, occupied })
}

//! Snapshot rendering of 2D torus partitions to binary PPM (P6): a text
//! header (magic, dimensions, max value) followed by raw RGB triples. The
//! palette is a pure function of cluster size class.

use std::path::Path;

pub type Rgb = [u8; 3];

/// Size-class palette: thresholds split sizes into four classes.
#[derive(Clone, Copy, Debug)]
pub struct Palette {
    /// Lower bounds of the second, third, and fourth classes.
    pub thresholds: [u32; 3],
    pub colors: [Rgb; 4],
}

impl Default for Palette {
    /// Singletons grey, small clusters blue, medium dark blue, large red.
    fn default() -> Self {
        Palette {
            thresholds: [2, 10, 100],
            colors: [
                [180, 180, 180],
                [90, 120, 220],
                [25, 35, 130],
                [205, 40, 40],
            ],
        }
    }
}

impl Palette {
    pub fn color_for(&self, cluster_size: u32) -> Rgb {
        if cluster_size >= self.thresholds[2] {
            self.colors[3]
        } else if cluster_size >= self.thresholds[1] {
            self.colors[2]
        } else if cluster_size >= self.thresholds[0] {
            self.colors[1]
        } else {
            self.colors[0]
        }
    }
}

/// Encodes an `n x n` snapshot from per-vertex cluster sizes (row-major,
/// index `y * n + x`).
pub fn encode_ppm(n: u32, sizes_per_vertex: &[u32], palette: &Palette) -> Vec<u8> {
    assert_eq!(
        sizes_per_vertex.len(),
        (n * n) as usize,
        "snapshot requires one size per torus cell"
    );
    let mut out = Vec::with_capacity(32 + 3 * sizes_per_vertex.len());
    out.extend_from_slice(format!("P6\n{n} {n}\n255\n").as_bytes());
    for &size in sizes_per_vertex {
        out.extend_from_slice(&palette.color_for(size));
    }
    out
}

pub fn write_ppm(path: &Path, n: u32, sizes: &[u32], palette: &Palette) -> std::io::Result<()> {
    std::fs::write(path, encode_ppm(n, sizes, palette))
}

//! Point clouds and connectivity through mutual k-nearest-neighbor graphs.
//!
//! Connectivity of a sampled region is decided on the graph whose vertices
//! are the sample points, with an edge between `i` and `j` when each is
//! among the `k` nearest neighbors of the other. Mutual edges adapt to
//! anisotropic clouds, where any fixed-radius graph either merges distinct
//! components or shatters thin ones. Components come from union-find.
//!
//! Neighbor search runs row-parallel, but ties are broken by point index
//! and labels are assigned in first-occurrence order of point indices, so
//! the output is a pure function of the input order.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A flat, row-major cloud of `dim`-dimensional sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    dim: usize,
    coords: Vec<f64>,
    seed: u64,
    meta: String,
}

impl SampleCloud {
    pub fn new(dim: usize, seed: u64, meta: impl Into<String>) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        Self {
            dim,
            coords: Vec::new(),
            seed,
            meta: meta.into(),
        }
    }

    pub fn push(&mut self, point: &[f64]) {
        assert_eq!(point.len(), self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(point);
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meta(&self) -> &str {
        &self.meta
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

// k nearest neighbors of every point by brute force; ties broken by index.
fn knn_lists(cloud: &SampleCloud, k: usize) -> Vec<Vec<u32>> {
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let a = cloud.point(i);
            let mut best: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
            for j in 0..cloud.len() {
                if i == j {
                    continue;
                }
                let cand = (dist2(a, cloud.point(j)), j as u32);
                if best.len() < k || cand < *best.last().unwrap() {
                    let pos = best.partition_point(|x| *x < cand);
                    best.insert(pos, cand);
                    if best.len() > k {
                        best.pop();
                    }
                }
            }
            best.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut i: u32) -> u32 {
        while self.parent[i as usize] != i {
            let grand = self.parent[self.parent[i as usize] as usize];
            self.parent[i as usize] = grand;
            i = grand;
        }
        i
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
    }
}

/// Connected components of the mutual-kNN graph.
///
/// Returns the component count and a per-point label; labels are numbered
/// in first-occurrence order of point indices.
pub fn components(cloud: &SampleCloud, knn: usize) -> Result<(usize, Vec<u32>)> {
    if knn == 0 {
        return Err(Error::InvalidParameter(
            "neighbor count must be at least 1".into(),
        ));
    }
    if cloud.is_empty() {
        return Err(Error::Precondition("component analysis of an empty cloud".into()));
    }
    let lists = knn_lists(cloud, knn);
    let sorted: Vec<Vec<u32>> = lists
        .par_iter()
        .map(|l| {
            let mut s = l.clone();
            s.sort_unstable();
            s
        })
        .collect();

    let mut uf = UnionFind::new(cloud.len());
    for (i, list) in lists.iter().enumerate() {
        for &j in list {
            if (j as usize) > i && sorted[j as usize].binary_search(&(i as u32)).is_ok() {
                uf.union(i as u32, j);
            }
        }
    }

    let mut label_of_root = vec![u32::MAX; cloud.len()];
    let mut labels = vec![0u32; cloud.len()];
    let mut next = 0u32;
    for (i, label) in labels.iter_mut().enumerate() {
        let root = uf.find(i as u32) as usize;
        if label_of_root[root] == u32::MAX {
            label_of_root[root] = next;
            next += 1;
        }
        *label = label_of_root[root];
    }
    Ok((next as usize, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn gaussian_blob(rng: &mut ChaCha12Rng, center: [f64; 3], count: usize, cloud: &mut SampleCloud) {
        for _ in 0..count {
            // Sum of uniforms is plenty Gaussian-like for a blob.
            let p: Vec<f64> = center
                .iter()
                .map(|c| c + (0..4).map(|_| rng.gen_range(-0.25..0.25)).sum::<f64>())
                .collect();
            cloud.push(&p);
        }
    }

    #[test]
    fn two_far_clusters_split() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let mut cloud = SampleCloud::new(3, 1, "two blobs");
        gaussian_blob(&mut rng, [0.0, 0.0, 0.0], 60, &mut cloud);
        gaussian_blob(&mut rng, [10.0, 10.0, 10.0], 60, &mut cloud);
        let (count, labels) = components(&cloud, 10).unwrap();
        assert_eq!(count, 2);
        // Canonical labels: first blob is 0, second is 1.
        assert!(labels[..60].iter().all(|&l| l == 0));
        assert!(labels[60..].iter().all(|&l| l == 1));
    }

    #[test]
    fn one_cluster_stays_whole() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mut cloud = SampleCloud::new(3, 2, "one blob");
        gaussian_blob(&mut rng, [0.0, 0.0, 0.0], 120, &mut cloud);
        let (count, _) = components(&cloud, 10).unwrap();
        assert_eq!(count, 1);
    }

    #[test]
    fn mutual_requirement_and_index_ties() {
        // Three collinear, equally spaced points with knn = 1: the middle
        // point's tie between its neighbors breaks to the lower index, so
        // only (0, 1) is a mutual edge.
        let mut cloud = SampleCloud::new(1, 0, "collinear");
        cloud.push(&[0.0]);
        cloud.push(&[1.0]);
        cloud.push(&[2.0]);
        let (count, labels) = components(&cloud, 1).unwrap();
        assert_eq!(count, 2);
        assert_eq!(labels, vec![0, 0, 1]);
    }

    #[test]
    fn deterministic_labels() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut cloud = SampleCloud::new(3, 3, "blob");
        gaussian_blob(&mut rng, [0.0, 0.0, 0.0], 200, &mut cloud);
        let first = components(&cloud, 7).unwrap();
        let second = components(&cloud, 7).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let cloud = SampleCloud::new(2, 0, "empty");
        assert!(components(&cloud, 5).is_err());
        let mut cloud = SampleCloud::new(2, 0, "one");
        cloud.push(&[0.0, 0.0]);
        assert!(components(&cloud, 0).is_err());
        let (count, labels) = components(&cloud, 3).unwrap();
        assert_eq!((count, labels), (1, vec![0]));
    }
}

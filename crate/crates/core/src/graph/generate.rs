//! Synthetic graph generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, GraphError};

/// Largest RMAT scale accepted; anything bigger does not fit a desk run.
pub const MAX_RMAT_SCALE: u32 = 24;

pub const MAX_GENERATED_WEIGHT: u32 = 64;

/// Graph500 quadrant probabilities.
pub const GRAPH500_PROBS: [f64; 4] = [0.57, 0.19, 0.19, 0.05];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmatParams {
    pub scale: u32,
    pub edge_factor: u32,
    pub probs: [f64; 4],
    pub seed: u64,
}

impl RmatParams {
    pub fn new(scale: u32, edge_factor: u32, seed: u64) -> Self {
        Self {
            scale,
            edge_factor,
            probs: GRAPH500_PROBS,
            seed,
        }
    }

    pub fn num_vertices(&self) -> usize {
        1usize << self.scale
    }

    pub fn num_edges(&self) -> usize {
        self.num_vertices() * self.edge_factor as usize
    }
}

/// Recursive-matrix generator: every edge descends `scale` levels, picking a
/// quadrant at each level with probabilities `(a, b, c, d)` for
/// (top-left, top-right, bottom-left, bottom-right). Weights are uniform in
/// `[1, 64]`.
pub fn generate_rmat(params: &RmatParams) -> Result<Vec<Edge>, GraphError> {
    if params.scale > MAX_RMAT_SCALE {
        return Err(GraphError::ScaleTooLarge(params.scale));
    }
    let [a, b, c, d] = params.probs;
    if params.probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (a + b + c + d - 1.0).abs() > 1e-9 {
        return Err(GraphError::BadProbabilities(params.probs));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let ab = a + b;
    let abc = ab + c;
    let edges = (0..params.num_edges())
        .map(|_| {
            let (mut src, mut dst) = (0u32, 0u32);
            for level in (0..params.scale).rev() {
                let r: f64 = rng.random();
                let (row, col) = if r < a {
                    (0, 0)
                } else if r < ab {
                    (0, 1)
                } else if r < abc {
                    (1, 0)
                } else {
                    (1, 1)
                };
                src |= row << level;
                dst |= col << level;
            }
            let weight = rng.random_range(1..=MAX_GENERATED_WEIGHT);
            Edge::new(src, dst, weight)
        })
        .collect();
    Ok(edges)
}

/// Applies a seeded random permutation to vertex ids, as Graph500 does, so
/// that RMAT's high-degree vertices are not all small numbers.
pub fn relabel_vertices(edges: &mut [Edge], num_vertices: usize, seed: u64) {
    let mut perm: Vec<u32> = (0..num_vertices as u32).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15));
    for e in edges {
        e.src = perm[e.src as usize];
        e.dst = perm[e.dst as usize];
    }
}

/// Uniformly random endpoints and weights in `[1, max_weight]`.
pub fn generate_uniform(
    num_vertices: usize,
    num_edges: usize,
    max_weight: u32,
    seed: u64,
) -> Result<Vec<Edge>, GraphError> {
    if num_vertices == 0 && num_edges > 0 {
        return Err(GraphError::OutOfRangeVertex {
            index: 0,
            vertex: 0,
            num_vertices,
        });
    }
    if max_weight == 0 {
        return Err(GraphError::ZeroWeight { index: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = num_vertices as u32;
    Ok((0..num_edges)
        .map(|_| {
            let src = rng.random_range(0..n);
            let dst = rng.random_range(0..n);
            Edge::new(src, dst, rng.random_range(1..=max_weight))
        })
        .collect())
}

use serde::{Deserialize, Serialize};

use super::VertexId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionScheme {
    /// `core(v) = v mod cores`
    #[default]
    Modulo,
    /// Contiguous blocks of `ceil(V / cores)` vertices.
    Range,
}

/// Assignment of vertices to owning cores.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    num_cores: u32,
    num_vertices: usize,
    scheme: PartitionScheme,
    block: usize,
}

impl Partition {
    pub fn new(num_cores: u32, num_vertices: usize, scheme: PartitionScheme) -> Self {
        assert!(num_cores > 0, "partition needs at least one core");
        let block = num_vertices.div_ceil(num_cores as usize).max(1);
        Self {
            num_cores,
            num_vertices,
            scheme,
            block,
        }
    }

    pub fn num_cores(&self) -> u32 {
        self.num_cores
    }

    pub fn scheme(&self) -> PartitionScheme {
        self.scheme
    }

    pub fn owner(&self, v: VertexId) -> u32 {
        match self.scheme {
            PartitionScheme::Modulo => v % self.num_cores,
            PartitionScheme::Range => (v as usize / self.block) as u32,
        }
    }

    /// Position of `v` among the vertices its owner holds, in ascending id order.
    pub fn local_index(&self, v: VertexId) -> usize {
        match self.scheme {
            PartitionScheme::Modulo => v as usize / self.num_cores as usize,
            PartitionScheme::Range => v as usize % self.block,
        }
    }

    pub fn owned_count(&self, core: u32) -> usize {
        let (c, p, n) = (core as usize, self.num_cores as usize, self.num_vertices);
        match self.scheme {
            PartitionScheme::Modulo => {
                if c < n {
                    (n - c).div_ceil(p)
                } else {
                    0
                }
            }
            PartitionScheme::Range => n.saturating_sub(c * self.block).min(self.block),
        }
    }

    /// Vertices owned by `core`, ascending.
    pub fn owned(&self, core: u32) -> impl Iterator<Item = VertexId> + '_ {
        let count = self.owned_count(core);
        (0..count).map(move |i| match self.scheme {
            PartitionScheme::Modulo => (core as usize + i * self.num_cores as usize) as VertexId,
            PartitionScheme::Range => (core as usize * self.block + i) as VertexId,
        })
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn modulo_owner() {
        let p = Partition::new(4, 16, PartitionScheme::Modulo);
        assert_eq!(p.owner(7), 3);
    }

    #[test]
    fn range_owner() {
        let p = Partition::new(4, 16, PartitionScheme::Range);
        assert_eq!(p.owner(7), 1);
    }

    #[test]
    fn modulo_is_balanced() {
        let p = Partition::new(7, 100, PartitionScheme::Modulo);
        let mut hist = [0usize; 7];
        for v in 0..100 {
            hist[p.owner(v) as usize] += 1;
        }
        let (lo, hi) = (hist.iter().min().unwrap(), hist.iter().max().unwrap());
        assert!(hi - lo <= 1, "{hist:?}");
    }

    #[test]
    fn more_cores_than_vertices() {
        let p = Partition::new(32, 3, PartitionScheme::Range);
        assert_eq!((0..3).map(|v| p.owner(v)).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(p.owned_count(5), 0);
        let p = Partition::new(32, 3, PartitionScheme::Modulo);
        assert_eq!(p.owned_count(31), 0);
    }

    proptest! {
        #[test]
        fn total_and_consistent(n in 0usize..500, cores in 1u32..70, range in any::<bool>()) {
            let scheme = if range { PartitionScheme::Range } else { PartitionScheme::Modulo };
            let p = Partition::new(cores, n, scheme);
            let mut seen = vec![false; n];
            let mut total = 0;
            for c in 0..cores {
                for (i, v) in p.owned(c).enumerate() {
                    prop_assert!((v as usize) < n);
                    prop_assert_eq!(p.owner(v), c);
                    prop_assert_eq!(p.local_index(v), i);
                    prop_assert!(!seen[v as usize]);
                    seen[v as usize] = true;
                    total += 1;
                }
            }
            prop_assert_eq!(total, n);
            prop_assert!(seen.iter().all(|&s| s));
        }
    }
}

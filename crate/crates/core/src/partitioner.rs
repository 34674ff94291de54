//! Edge partitioners: BISP over a [`Layout`], and two baselines.
//!
//! Every partitioner is a pure function of `(edge ordinal, src, dst)` given
//! its seed, so an edge list can be split into chunks and processed on any
//! number of threads.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layered_sampler::{isqrt, Layout, SamplerError, VertexLabel};
use crate::randomness::{
    edge_digest, hash_family, CounterStream, Domain, HashStream, PolyHash, RandomSource, StreamKey,
};

pub type Edge = (u64, u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub src: u64,
    pub dst: u64,
    pub partition: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("partition count must be positive")]
    InvalidN,
    #[error("{0} partitions admit no grid shape (prime above 3); pad the partition count")]
    NoGridShape(usize),
    #[error("unknown mode {0:?} (expected rng or hash)")]
    UnknownMode(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// Where vertex labels and edge coins come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Counter-based mixer; edge coins keyed by the edge's ordinal.
    Rng,
    /// 6-independent polynomial hashes; edge coins keyed by the endpoints,
    /// so the output does not depend on edge order.
    Hash,
}

impl FromStr for Mode {
    type Err = PartitionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rng" => Ok(Mode::Rng),
            "hash" => Ok(Mode::Hash),
            other => Err(PartitionError::UnknownMode(other.to_string())),
        }
    }
}

pub trait EdgePartitioner: Sync {
    fn partitions(&self) -> usize;

    /// Partition of the `ordinal`-th edge `(src, dst)`.
    fn assign(&self, ordinal: u64, src: u64, dst: u64) -> usize;

    fn assignment(&self, ordinal: u64, (src, dst): Edge) -> Assignment {
        Assignment {
            src,
            dst,
            partition: self.assign(ordinal, src, dst),
        }
    }
}

/// Lazily assigns a stream of edges in order.
pub fn assign_stream<'a, P, I>(
    partitioner: &'a P,
    edges: I,
) -> impl Iterator<Item = Assignment> + 'a
where
    P: EdgePartitioner + ?Sized,
    I: IntoIterator<Item = Edge>,
    I::IntoIter: 'a,
{
    edges
        .into_iter()
        .enumerate()
        .map(move |(i, e)| partitioner.assignment(i as u64, e))
}

/// Splits `edges` into `threads` contiguous chunks; output keeps input order.
pub fn assign_parallel<P: EdgePartitioner + ?Sized>(
    partitioner: &P,
    edges: &[Edge],
    threads: usize,
) -> Vec<Assignment> {
    let threads = threads.max(1);
    if threads == 1 || edges.len() < 2 * threads {
        return assign_stream(partitioner, edges.iter().copied()).collect();
    }
    let chunk = edges.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = edges
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                scope.spawn(move || {
                    let offset = (c * chunk) as u64;
                    part.iter()
                        .enumerate()
                        .map(|(i, &e)| partitioner.assignment(offset + i as u64, e))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("partition worker panicked"))
            .collect()
    })
}

#[derive(Debug, Clone)]
pub struct BispPartitioner {
    layout: Layout,
    seed: u64,
    mode: Mode,
    label_hashes: Vec<PolyHash>,
    edge_hashes: Vec<PolyHash>,
}

const EDGE_HASH_BASE: u64 = 1 << 32;

impl BispPartitioner {
    pub fn new(layout: Layout, seed: u64, mode: Mode) -> Self {
        let h = layout.blocks().len();
        let (label_hashes, edge_hashes) = match mode {
            Mode::Rng => (Vec::new(), Vec::new()),
            // one hash per label component; an edge uses at most h coins
            // plus a base pick
            Mode::Hash => (
                hash_family(seed, 0, h + 1),
                hash_family(seed, EDGE_HASH_BASE, h + 1),
            ),
        };
        Self {
            layout,
            seed,
            mode,
            label_hashes,
            edge_hashes,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn label(&self, vertex: u64) -> VertexLabel {
        match self.mode {
            Mode::Rng => self
                .layout
                .sample_label(&mut CounterStream::new(StreamKey::new(
                    self.seed,
                    Domain::VertexLabel,
                    vertex,
                ))),
            Mode::Hash => self
                .layout
                .sample_label(&mut HashStream::new(&self.label_hashes, vertex)),
        }
    }

    pub fn assign_labels(
        &self,
        ordinal: u64,
        src: u64,
        dst: u64,
        lv: &VertexLabel,
        lu: &VertexLabel,
    ) -> usize {
        let result = match self.mode {
            Mode::Rng => {
                let mut r =
                    CounterStream::new(StreamKey::new(self.seed, Domain::EdgeChoice, ordinal));
                self.layout.assign_edge(lv, lu, &mut r)
            }
            Mode::Hash => {
                let mut r = HashStream::new(&self.edge_hashes, edge_digest(src, dst));
                self.layout.assign_edge(lv, lu, &mut r)
            }
        };
        result.expect("labels come from this layout")
    }
}

impl EdgePartitioner for BispPartitioner {
    fn partitions(&self) -> usize {
        self.layout.n()
    }

    fn assign(&self, ordinal: u64, src: u64, dst: u64) -> usize {
        let lv = self.label(src);
        let lu = if src == dst {
            lv.clone()
        } else {
            self.label(dst)
        };
        self.assign_labels(ordinal, src, dst, &lv, &lu)
    }
}

/// BISP over `layout`: label every vertex, then place each edge in the
/// intersection of its endpoints' sets.
pub fn bisp_partition<I>(
    edges: I,
    layout: &Layout,
    seed: u64,
    mode: Mode,
) -> impl Iterator<Item = Assignment>
where
    I: IntoIterator<Item = Edge>,
{
    let p = BispPartitioner::new(layout.clone(), seed, mode);
    edges
        .into_iter()
        .enumerate()
        .map(move |(i, e)| p.assignment(i as u64, e))
}

/// Every edge independently uniform.
#[derive(Debug, Clone)]
pub struct RandomPartitioner {
    n: usize,
    seed: u64,
}

impl RandomPartitioner {
    pub fn new(n: usize, seed: u64) -> Result<Self, PartitionError> {
        if n == 0 {
            return Err(PartitionError::InvalidN);
        }
        Ok(Self { n, seed })
    }
}

impl EdgePartitioner for RandomPartitioner {
    fn partitions(&self) -> usize {
        self.n
    }

    fn assign(&self, ordinal: u64, src: u64, dst: u64) -> usize {
        let key = StreamKey::new(self.seed, Domain::Baseline, edge_digest(src, dst));
        ((crate::randomness::draw(key, ordinal) as u128 * self.n as u128) >> 64) as usize
    }
}

pub fn random_partition<I>(
    edges: I,
    n: usize,
    seed: u64,
) -> Result<impl Iterator<Item = Assignment>, PartitionError>
where
    I: IntoIterator<Item = Edge>,
{
    let p = RandomPartitioner::new(n, seed)?;
    Ok(edges
        .into_iter()
        .enumerate()
        .map(move |(i, e)| p.assignment(i as u64, e)))
}

/// Rows × columns with rows the largest divisor of `n` not above `⌊√n⌋`.
pub fn grid_shape(n: usize) -> Result<(usize, usize), PartitionError> {
    if n == 0 {
        return Err(PartitionError::InvalidN);
    }
    let rows = (1..=isqrt(n))
        .rev()
        .find(|&a| n.is_multiple_of(a))
        .unwrap_or(1);
    if rows == 1 && n > 3 {
        return Err(PartitionError::NoGridShape(n));
    }
    Ok((rows, n / rows))
}

/// Vertices hash to a grid cell and own its row and column; an edge goes
/// uniformly to a cell shared by both endpoints' crosses.
#[derive(Debug, Clone)]
pub struct GridPartitioner {
    rows: usize,
    cols: usize,
    seed: u64,
}

impl GridPartitioner {
    pub fn new(n: usize, seed: u64) -> Result<Self, PartitionError> {
        let (rows, cols) = grid_shape(n)?;
        Ok(Self { rows, cols, seed })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn cell(&self, vertex: u64) -> (usize, usize) {
        let mut r = CounterStream::new(StreamKey::new(self.seed, Domain::Baseline, vertex));
        let c = r.below(self.rows * self.cols);
        (c / self.cols, c % self.cols)
    }

    /// Cells in both the row/column cross of `a` and of `b`, sorted.
    pub fn shared_cells(&self, a: (usize, usize), b: (usize, usize)) -> Vec<usize> {
        let cols = self.cols;
        let in_b = |x: usize, y: usize| x == b.0 || y == b.1;
        let mut out: Vec<usize> = (0..cols)
            .filter(|&y| in_b(a.0, y))
            .map(|y| a.0 * cols + y)
            .chain(
                (0..self.rows)
                    .filter(|&x| in_b(x, a.1))
                    .map(|x| x * cols + a.1),
            )
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl EdgePartitioner for GridPartitioner {
    fn partitions(&self) -> usize {
        self.rows * self.cols
    }

    fn assign(&self, ordinal: u64, src: u64, dst: u64) -> usize {
        let shared = self.shared_cells(self.cell(src), self.cell(dst));
        let mut r = CounterStream::new(StreamKey::new(self.seed, Domain::EdgeChoice, ordinal));
        shared[r.below(shared.len())]
    }
}

pub fn grid_partition<I>(
    edges: I,
    n: usize,
    seed: u64,
) -> Result<impl Iterator<Item = Assignment>, PartitionError>
where
    I: IntoIterator<Item = Edge>,
{
    let p = GridPartitioner::new(n, seed)?;
    Ok(edges
        .into_iter()
        .enumerate()
        .map(move |(i, e)| p.assignment(i as u64, e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layered_sampler::plan_layout;
    use std::collections::{HashMap, HashSet};

    fn max_rf(assignments: impl IntoIterator<Item = Assignment>) -> usize {
        let mut parts: HashMap<u64, HashSet<usize>> = HashMap::new();
        for a in assignments {
            parts.entry(a.src).or_default().insert(a.partition);
            parts.entry(a.dst).or_default().insert(a.partition);
        }
        parts.values().map(HashSet::len).max().unwrap_or(0)
    }

    fn star(leaves: u64) -> Vec<Edge> {
        (1..=leaves).map(|v| (0, v)).collect()
    }

    fn er(nodes: u64, edges: u64, seed: u64) -> Vec<Edge> {
        let mut r = CounterStream::new(StreamKey::new(seed, Domain::Generator, 0));
        (0..edges)
            .map(|_| {
                (
                    r.below(nodes as usize) as u64,
                    r.below(nodes as usize) as u64,
                )
            })
            .collect()
    }

    #[test]
    fn empty_stream() {
        let layout = plan_layout(7).unwrap();
        assert_eq!(
            bisp_partition(Vec::new(), &layout, 1, Mode::Hash).count(),
            0
        );
    }

    #[test]
    fn fano_replication_bound() {
        let layout = plan_layout(7).unwrap();
        let edges = er(300, 20_000, 4);
        for mode in [Mode::Rng, Mode::Hash] {
            for seed in 0..5 {
                assert!(max_rf(bisp_partition(edges.iter().copied(), &layout, seed, mode)) <= 3);
            }
        }
    }

    #[test]
    fn assignments_stay_in_label_sets() {
        let layout = plan_layout(20).unwrap();
        let p = BispPartitioner::new(layout.clone(), 11, Mode::Hash);
        for (i, (u, v)) in er(100, 5000, 2).into_iter().enumerate() {
            let part = p.assign(i as u64, u, v);
            assert!(layout.label_set(&p.label(u)).contains(&part));
            assert!(layout.label_set(&p.label(v)).contains(&part));
        }
    }

    #[test]
    fn hash_mode_star_is_reproducible() {
        let layout = plan_layout(31).unwrap();
        let edges = star(1000);
        let a: Vec<_> = bisp_partition(edges.iter().copied(), &layout, 9, Mode::Hash).collect();
        let b: Vec<_> = bisp_partition(edges.iter().copied(), &layout, 9, Mode::Hash).collect();
        assert_eq!(a, b);
        assert!(max_rf(a) <= 6);
    }

    #[test]
    fn hash_mode_ignores_edge_order() {
        let layout = plan_layout(12).unwrap();
        let edges = er(50, 2000, 8);
        let forward: HashMap<Edge, usize> =
            bisp_partition(edges.iter().copied(), &layout, 3, Mode::Hash)
                .map(|a| ((a.src, a.dst), a.partition))
                .collect();
        let backward: HashMap<Edge, usize> =
            bisp_partition(edges.iter().rev().copied(), &layout, 3, Mode::Hash)
                .map(|a| ((a.src, a.dst), a.partition))
                .collect();
        assert_eq!(forward, backward);
    }

    #[test]
    fn parallel_matches_sequential() {
        let layout = plan_layout(13).unwrap();
        let edges = er(200, 10_001, 1);
        for mode in [Mode::Rng, Mode::Hash] {
            let p = BispPartitioner::new(layout.clone(), 5, mode);
            let seq: Vec<_> = assign_stream(&p, edges.iter().copied()).collect();
            assert_eq!(assign_parallel(&p, &edges, 4), seq);
        }
    }

    #[test]
    fn random_baseline() {
        let all_zero = random_partition(star(50), 1, 3)
            .unwrap()
            .all(|a| a.partition == 0);
        assert!(all_zero);
        assert!(max_rf(random_partition(star(1000), 31, 3).unwrap()) == 31);
        assert_eq!(
            RandomPartitioner::new(0, 1).unwrap_err(),
            PartitionError::InvalidN
        );
        let edges: Vec<Edge> = (0..1_000_000u64).map(|i| (i, i + 1)).collect();
        let mut sizes = [0usize; 10];
        for a in random_partition(edges, 10, 17).unwrap() {
            sizes[a.partition] += 1;
        }
        // binomial sd ≈ 300, so 1% = 1000 is more than 3 sd
        assert!(
            sizes.iter().all(|&s| s.abs_diff(100_000) <= 1000),
            "{sizes:?}"
        );
    }

    #[test]
    fn grid_baseline() {
        assert_eq!(grid_shape(4).unwrap(), (2, 2));
        assert_eq!(grid_shape(9).unwrap(), (3, 3));
        assert_eq!(grid_shape(12).unwrap(), (3, 4));
        assert_eq!(grid_shape(3).unwrap(), (1, 3));
        assert_eq!(grid_shape(7).unwrap_err(), PartitionError::NoGridShape(7));
        let edges = er(200, 20_000, 6);
        assert!(max_rf(grid_partition(edges.iter().copied(), 4, 1).unwrap()) <= 3);
        assert!(max_rf(grid_partition(edges.iter().copied(), 9, 1).unwrap()) <= 5);
        let g = GridPartitioner::new(9, 0).unwrap();
        assert_eq!(g.shared_cells((0, 0), (1, 1)), vec![1, 3]);
        assert_eq!(g.shared_cells((0, 0), (0, 0)).len(), 5);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("hash".parse::<Mode>().unwrap(), Mode::Hash);
        assert!("fast".parse::<Mode>().is_err());
    }
}

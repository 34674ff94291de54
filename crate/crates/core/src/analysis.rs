//! Partition quality: sizes, imbalance and per-vertex replication factors,
//! plus recovery of an explicit system from a partitioned complete graph.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::explicit_system::{
    verify_system, ExplicitSystem, SRow, SetFamily, SystemError, SystemReport, DEFAULT_TOL,
};
use crate::partitioner::Assignment;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no edges: imbalance is undefined")]
    EmptyInput,
    #[error("partition count must be positive")]
    InvalidN,
    #[error("partition {partition} out of range for {n} partitions")]
    PartitionOutOfRange { partition: usize, n: usize },
    #[error("assignments are not exactly the ordered pairs of K_{nodes}: {reason}")]
    NotComplete { nodes: u64, reason: String },
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Sorted set of partition indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct PartSet(Vec<u32>);

impl PartSet {
    fn insert(&mut self, p: u32) {
        if let Err(pos) = self.0.binary_search(&p) {
            self.0.insert(pos, p);
        }
    }

    fn union(&mut self, other: &PartSet) {
        for &p in &other.0 {
            self.insert(p);
        }
    }
}

/// Single-pass metric accumulation; [`MetricsAccumulator::merge`] combines
/// chunks processed separately.
#[derive(Debug, Clone)]
pub struct MetricsAccumulator {
    n: usize,
    sizes: Vec<u64>,
    parts: HashMap<u64, PartSet>,
}

impl MetricsAccumulator {
    pub fn new(n: usize) -> Result<Self, AnalysisError> {
        if n == 0 {
            return Err(AnalysisError::InvalidN);
        }
        Ok(Self {
            n,
            sizes: vec![0; n],
            parts: HashMap::new(),
        })
    }

    pub fn add(&mut self, a: &Assignment) -> Result<(), AnalysisError> {
        if a.partition >= self.n {
            return Err(AnalysisError::PartitionOutOfRange {
                partition: a.partition,
                n: self.n,
            });
        }
        self.sizes[a.partition] += 1;
        let p = a.partition as u32;
        self.parts.entry(a.src).or_default().insert(p);
        if a.dst != a.src {
            self.parts.entry(a.dst).or_default().insert(p);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: MetricsAccumulator) {
        assert_eq!(
            self.n, other.n,
            "merging metrics over different partition counts"
        );
        for (s, o) in self.sizes.iter_mut().zip(other.sizes) {
            *s += o;
        }
        for (v, set) in other.parts {
            self.parts.entry(v).or_default().union(&set);
        }
    }

    pub fn finish(self) -> Result<Metrics, AnalysisError> {
        let edge_count: u64 = self.sizes.iter().sum();
        if edge_count == 0 {
            return Err(AnalysisError::EmptyInput);
        }
        let max_size = *self.sizes.iter().max().expect("n ≥ 1");
        let rf_per_vertex: HashMap<u64, usize> = self
            .parts
            .into_iter()
            .map(|(v, s)| (v, s.0.len()))
            .collect();
        let mut rf_histogram = BTreeMap::new();
        for &rf in rf_per_vertex.values() {
            *rf_histogram.entry(rf).or_insert(0usize) += 1;
        }
        let total_rf: usize = rf_per_vertex.values().sum();
        Ok(Metrics {
            n: self.n,
            edge_count,
            imbalance: (max_size as f64 * self.n as f64) / edge_count as f64,
            max_size,
            sizes: self.sizes,
            rf_max: rf_per_vertex.values().copied().max().unwrap_or(0),
            rf_avg: total_rf as f64 / rf_per_vertex.len() as f64,
            rf_histogram,
            rf_per_vertex,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub n: usize,
    pub edge_count: u64,
    pub sizes: Vec<u64>,
    pub max_size: u64,
    /// `max_size / (edge_count / n)`
    pub imbalance: f64,
    pub rf_per_vertex: HashMap<u64, usize>,
    pub rf_max: usize,
    pub rf_avg: f64,
    pub rf_histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsJson {
    pub n: usize,
    pub edges: u64,
    pub sizes: Vec<u64>,
    pub imbalance: f64,
    pub imbalance_numerator: u64,
    pub imbalance_denominator: u64,
    pub rf_max: usize,
    pub rf_avg: f64,
    pub rf_histogram: BTreeMap<usize, usize>,
}

impl Metrics {
    pub fn to_json(&self) -> MetricsJson {
        MetricsJson {
            n: self.n,
            edges: self.edge_count,
            sizes: self.sizes.clone(),
            imbalance: self.imbalance,
            imbalance_numerator: self.max_size * self.n as u64,
            imbalance_denominator: self.edge_count,
            rf_max: self.rf_max,
            rf_avg: self.rf_avg,
            rf_histogram: self.rf_histogram.clone(),
        }
    }
}

pub fn compute_metrics<I>(assignments: I, n: usize) -> Result<Metrics, AnalysisError>
where
    I: IntoIterator<Item = Assignment>,
{
    let mut acc = MetricsAccumulator::new(n)?;
    for a in assignments {
        acc.add(&a)?;
    }
    acc.finish()
}

/// Rebuilds a system from a partitioning of `K_nodes` (with loops): one set
/// per distinct vertex partition-set, weighted by the fraction of vertices
/// carrying it, with `s` the conditional partition frequencies between
/// vertex classes. Its epsilon equals the partitioning's imbalance − 1.
pub fn extract_system(
    assignments: &[Assignment],
    nodes: u64,
    n: usize,
) -> Result<(ExplicitSystem, SystemReport), AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::InvalidN);
    }
    let not_complete = |reason: String| AnalysisError::NotComplete { nodes, reason };
    let expected = nodes as u128 * nodes as u128;
    if assignments.len() as u128 != expected {
        return Err(not_complete(format!(
            "{} assignments, expected {expected}",
            assignments.len()
        )));
    }
    let side = nodes as usize;
    let mut seen = vec![false; side * side];
    let mut vertex_parts = vec![PartSet::default(); side];
    for a in assignments {
        if a.src >= nodes || a.dst >= nodes {
            return Err(not_complete(format!(
                "vertex outside 0..{nodes} in edge ({}, {})",
                a.src, a.dst
            )));
        }
        if a.partition >= n {
            return Err(AnalysisError::PartitionOutOfRange {
                partition: a.partition,
                n,
            });
        }
        let (u, v) = (a.src as usize, a.dst as usize);
        if std::mem::replace(&mut seen[u * side + v], true) {
            return Err(not_complete(format!("edge ({u}, {v}) repeated")));
        }
        vertex_parts[u].insert(a.partition as u32);
        vertex_parts[v].insert(a.partition as u32);
    }

    let mut class_of_set: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut class_size: Vec<u64> = Vec::new();
    let class: Vec<usize> = vertex_parts
        .into_iter()
        .map(|PartSet(set)| {
            let next = sets.len();
            let c = *class_of_set.entry(set.clone()).or_insert(next);
            if c == next {
                sets.push(set.iter().map(|&p| p as usize).collect());
                class_size.push(0);
            }
            class_size[c] += 1;
            c
        })
        .collect();

    let mut counts: BTreeMap<(usize, usize), BTreeMap<usize, u64>> = BTreeMap::new();
    for a in assignments {
        let key = (class[a.src as usize], class[a.dst as usize]);
        *counts
            .entry(key)
            .or_default()
            .entry(a.partition)
            .or_insert(0) += 1;
    }
    let s: BTreeMap<(usize, usize), SRow> = counts
        .into_iter()
        .map(|((i, j), row)| {
            let total = (class_size[i] * class_size[j]) as f64;
            (
                (i, j),
                row.into_iter()
                    .map(|(p, c)| (p, c as f64 / total))
                    .collect(),
            )
        })
        .collect();
    let w = class_size
        .iter()
        .map(|&c| c as f64 / nodes as f64)
        .collect();
    let sys = ExplicitSystem::new(SetFamily::new(n, sets)?, w, s)?;
    let report = verify_system(&sys, DEFAULT_TOL)?;
    Ok((sys, report))
}

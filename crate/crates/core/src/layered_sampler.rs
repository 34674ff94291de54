//! Implicit balanced intersecting systems for arbitrary partition counts.
//!
//! The partitions are laid out as a base block `[0, n0)` followed by
//! extension blocks `R_1, …, R_h`. A set of the system is a base set (a line
//! of PG(2, q), or a cyclic interval for tiny `n`) plus one element from each
//! extension block, and all such sets have equal weight. An edge whose
//! endpoints picked the same element of block `t` lands there with
//! probability `r_t² / (n0 + r_1 + … + r_t)`, checking blocks from last to
//! first; otherwise it lands uniformly in the intersection of the base sets.
//!
//! Sampling never enumerates the system, whose size is `n0 · Π r_t`.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::catalog;
use crate::explicit_system::{
    extend_system, from_symmetric_family, ExplicitSystem, SetFamily, SystemError,
};
use crate::finite_plane::{is_prime, PlaneError, ProjectivePlane};
use crate::randomness::RandomSource;

/// Caps on the explicit system built by [`Layout::materialize`].
pub const MAX_MATERIALIZED_SETS: usize = 100_000;
pub const MAX_MATERIALIZED_PAIRS: usize = 4_000_000;

/// Below this the planner uses cyclic intervals instead of a plane.
const SMALLEST_PLANE: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("partition count must be positive")]
    InvalidN,
    #[error("label does not belong to this layout: {0}")]
    LabelMismatch(String),
    #[error(
        "explicit system would have {sets} sets ({pairs} pairs), above the materialization cap"
    )]
    TooLargeToMaterialize { sets: u128, pairs: u128 },
    #[error("block {index} of size {r} violates r² ≤ {prefix} + r")]
    BadBlock {
        index: usize,
        r: usize,
        prefix: usize,
    },
    #[error(transparent)]
    Plane(#[from] PlaneError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    /// Lines of PG(2, q) on `q² + q + 1` elements.
    Plane { q: u64 },
    /// Intervals of length `t` on `Z/n0`.
    Cyclic { n0: usize, t: usize },
}

impl Base {
    pub fn size(&self) -> usize {
        match *self {
            Base::Plane { q } => (q * q + q + 1) as usize,
            Base::Cyclic { n0, .. } => n0,
        }
    }

    /// Size of every base set.
    pub fn set_size(&self) -> usize {
        match *self {
            Base::Plane { q } => q as usize + 1,
            Base::Cyclic { n0, t } => t.min(n0),
        }
    }

    /// Number of distinct base sets. Intervals covering all of `Z/n0`
    /// coincide, leaving a single set.
    pub fn set_count(&self) -> usize {
        match *self {
            Base::Plane { .. } => self.size(),
            Base::Cyclic { n0, t } if t >= n0 => 1,
            Base::Cyclic { n0, .. } => n0,
        }
    }
}

/// A vertex's set: base set index plus one element per extension block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexLabel {
    pub base_index: usize,
    pub block_choice: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Layout {
    n: usize,
    base: Base,
    blocks: Vec<usize>,
    block_starts: Vec<usize>,
    accept_prob: Vec<f64>,
    plane: Option<Arc<ProjectivePlane>>,
}

pub fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub fn ceil_sqrt(n: usize) -> usize {
    let r = isqrt(n);
    if r * r == n {
        r
    } else {
        r + 1
    }
}

/// Block sizes growing `n0` to `n`, each as large as the extension step
/// allows: `r = min(⌊√current⌋, remaining)`.
pub fn greedy_blocks(n0: usize, n: usize) -> Vec<usize> {
    let mut blocks = Vec::new();
    let mut current = n0;
    while current < n {
        let r = isqrt(current).min(n - current);
        blocks.push(r);
        current += r;
    }
    blocks
}

/// The layout of minimal cardinality for `n` partitions.
///
/// Every prime base `q` with `q² + q + 1 ≤ n` is scheduled greedily; ties go
/// to the larger plane.
pub fn plan_layout(n: usize) -> Result<Layout, SamplerError> {
    if n == 0 {
        return Err(SamplerError::InvalidN);
    }
    if n < SMALLEST_PLANE {
        return Layout::new(
            n,
            Base::Cyclic {
                n0: n,
                t: n / 2 + 1,
            },
            Vec::new(),
        );
    }
    let mut best: Option<(usize, u64, Vec<usize>)> = None;
    let mut q = 2u64;
    while (q * q + q + 1) as usize <= n {
        if is_prime(q) {
            let n0 = (q * q + q + 1) as usize;
            let blocks = greedy_blocks(n0, n);
            let card = q as usize + 1 + blocks.len();
            if best.as_ref().is_none_or(|(c, _, _)| card <= *c) {
                best = Some((card, q, blocks));
            }
        }
        q += 1;
    }
    let (_, q, blocks) = best.expect("q = 2 always qualifies for n ≥ 7");
    Layout::new(n, Base::Plane { q }, blocks)
}

pub fn layout_cardinality(layout: &Layout) -> usize {
    layout.cardinality()
}

impl Layout {
    /// Builds a layout from a base and explicit blocks, checking that the
    /// sizes add up to `n` and every block satisfies `r² ≤ prefix + r`.
    pub fn new(n: usize, base: Base, blocks: Vec<usize>) -> Result<Self, SamplerError> {
        if n == 0 {
            return Err(SamplerError::InvalidN);
        }
        let plane = match base {
            Base::Plane { q } => Some(Arc::new(ProjectivePlane::build(q)?)),
            Base::Cyclic { n0: 0, .. } => return Err(SamplerError::InvalidN),
            Base::Cyclic { .. } => None,
        };
        let mut prefix = base.size();
        let mut block_starts = Vec::with_capacity(blocks.len());
        let mut accept_prob = Vec::with_capacity(blocks.len());
        for (index, &r) in blocks.iter().enumerate() {
            if r == 0 || r * r > prefix + r {
                return Err(SamplerError::BadBlock { index, r, prefix });
            }
            block_starts.push(prefix);
            prefix += r;
            accept_prob.push((r * r) as f64 / prefix as f64);
        }
        if prefix != n {
            return Err(SamplerError::LabelMismatch(format!(
                "base and blocks cover {prefix} elements, expected {n}"
            )));
        }
        Ok(Self {
            n,
            base,
            blocks,
            block_starts,
            accept_prob,
            plane,
        })
    }

    /// `base` followed by the greedy block schedule up to `n`.
    pub fn greedy(base: Base, n: usize) -> Result<Self, SamplerError> {
        Self::new(n, base, greedy_blocks(base.size(), n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn n0(&self) -> usize {
        self.base.size()
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn accept_prob(&self) -> &[f64] {
        &self.accept_prob
    }

    pub fn block_range(&self, t: usize) -> std::ops::Range<usize> {
        self.block_starts[t]..self.block_starts[t] + self.blocks[t]
    }

    pub fn plane(&self) -> Option<&ProjectivePlane> {
        self.plane.as_deref()
    }

    pub fn cardinality(&self) -> usize {
        self.base.set_size() + self.blocks.len()
    }

    /// Number of sets in the full system.
    pub fn set_count(&self) -> u128 {
        self.blocks
            .iter()
            .fold(self.base.set_count() as u128, |acc, &r| acc * r as u128)
    }

    /// Draws the base set first, then blocks in increasing order.
    pub fn sample_label<R: RandomSource + ?Sized>(&self, rand: &mut R) -> VertexLabel {
        let base_index = rand.below(self.base.set_count());
        let block_choice = self
            .blocks
            .iter()
            .zip(&self.block_starts)
            .map(|(&r, &start)| start + rand.below(r))
            .collect();
        VertexLabel {
            base_index,
            block_choice,
        }
    }

    fn check_label(&self, label: &VertexLabel) -> Result<(), SamplerError> {
        if label.base_index >= self.base.set_count() {
            return Err(SamplerError::LabelMismatch(format!(
                "base index {} out of {}",
                label.base_index,
                self.base.set_count()
            )));
        }
        if label.block_choice.len() != self.blocks.len() {
            return Err(SamplerError::LabelMismatch(format!(
                "{} block choices for {} blocks",
                label.block_choice.len(),
                self.blocks.len()
            )));
        }
        for (t, &c) in label.block_choice.iter().enumerate() {
            if !self.block_range(t).contains(&c) {
                return Err(SamplerError::LabelMismatch(format!(
                    "choice {c} outside block {t} ({:?})",
                    self.block_range(t)
                )));
            }
        }
        Ok(())
    }

    pub fn base_set(&self, index: usize) -> Vec<usize> {
        match self.base {
            Base::Plane { .. } => self
                .plane()
                .expect("plane base")
                .line_points(index)
                .to_vec(),
            Base::Cyclic { n0, t } => {
                let mut set: Vec<usize> = (0..t.min(n0)).map(|d| (index + d) % n0).collect();
                set.sort_unstable();
                set
            }
        }
    }

    /// `F_v` as a sorted element list.
    pub fn label_set(&self, label: &VertexLabel) -> Vec<usize> {
        let mut set = self.base_set(label.base_index);
        set.extend_from_slice(&label.block_choice);
        set
    }

    /// Sorted intersection of two base sets.
    pub fn base_intersection(&self, a: usize, b: usize) -> Vec<usize> {
        match self.base {
            Base::Plane { .. } => {
                let plane = self.plane().expect("plane base");
                if a == b {
                    plane.line_points(a).to_vec()
                } else {
                    vec![plane.meet(a, b)]
                }
            }
            Base::Cyclic { n0, t } => {
                let t = t.min(n0);
                let mut out: Vec<usize> = (0..t)
                    .map(|d| (a + d) % n0)
                    .filter(|&x| (x + n0 - b) % n0 < t)
                    .collect();
                out.sort_unstable();
                out
            }
        }
    }

    /// Partition of an edge between vertices labelled `lv` and `lu`.
    ///
    /// Consumes one `unit()` draw for each block where the labels agree,
    /// from the last block to the first, and one `below()` draw for the base
    /// pick when the base intersection has more than one element.
    pub fn assign_edge<R: RandomSource + ?Sized>(
        &self,
        lv: &VertexLabel,
        lu: &VertexLabel,
        rand: &mut R,
    ) -> Result<usize, SamplerError> {
        self.check_label(lv)?;
        self.check_label(lu)?;
        for t in (0..self.blocks.len()).rev() {
            let c = lv.block_choice[t];
            if c == lu.block_choice[t] && rand.unit() < self.accept_prob[t] {
                return Ok(c);
            }
        }
        let (a, b) = (lv.base_index, lu.base_index);
        Ok(match self.base {
            Base::Plane { .. } => {
                let plane = self.plane().expect("plane base");
                if a == b {
                    let line = plane.line_points(a);
                    line[rand.below(line.len())]
                } else {
                    plane.meet(a, b)
                }
            }
            Base::Cyclic { .. } => {
                let common = self.base_intersection(a, b);
                if common.len() == 1 {
                    common[0]
                } else {
                    common[rand.below(common.len())]
                }
            }
        })
    }

    /// The exact distribution of [`Layout::assign_edge`] for fixed labels.
    pub fn edge_distribution(
        &self,
        lv: &VertexLabel,
        lu: &VertexLabel,
    ) -> Result<Vec<f64>, SamplerError> {
        self.check_label(lv)?;
        self.check_label(lu)?;
        let mut dist = vec![0.0; self.n];
        let mut remaining = 1.0;
        for t in (0..self.blocks.len()).rev() {
            let c = lv.block_choice[t];
            if c == lu.block_choice[t] {
                dist[c] += remaining * self.accept_prob[t];
                remaining *= 1.0 - self.accept_prob[t];
            }
        }
        let common = self.base_intersection(lv.base_index, lu.base_index);
        let share = remaining / common.len() as f64;
        for p in common {
            dist[p] += share;
        }
        Ok(dist)
    }

    /// Index of the label's set in [`Layout::materialize`]'s family.
    pub fn set_index(&self, label: &VertexLabel) -> usize {
        label
            .block_choice
            .iter()
            .zip(self.blocks.iter().zip(&self.block_starts))
            .fold(label.base_index, |idx, (&c, (&r, &start))| {
                idx * r + (c - start)
            })
    }

    /// Inverse of [`Layout::set_index`].
    pub fn label_at(&self, mut index: usize) -> VertexLabel {
        let mut block_choice = vec![0; self.blocks.len()];
        for t in (0..self.blocks.len()).rev() {
            block_choice[t] = self.block_starts[t] + index % self.blocks[t];
            index /= self.blocks[t];
        }
        VertexLabel {
            base_index: index,
            block_choice,
        }
    }

    /// Every label, in set-index order.
    pub fn labels(&self) -> impl Iterator<Item = VertexLabel> + '_ {
        (0..self.set_count() as usize).map(|i| self.label_at(i))
    }

    pub fn base_family(&self) -> SetFamily {
        match self.base {
            Base::Plane { .. } => catalog::lines_of(self.plane().expect("plane base")),
            Base::Cyclic { n0, t } => {
                catalog::cyclic_intervals(n0, t).expect("intervals are in range")
            }
        }
    }

    /// The explicit system: uniform base system extended block by block.
    pub fn materialize(&self) -> Result<ExplicitSystem, SamplerError> {
        let sets = self.set_count();
        let pairs = sets * sets;
        if sets > MAX_MATERIALIZED_SETS as u128 || pairs > MAX_MATERIALIZED_PAIRS as u128 {
            return Err(SamplerError::TooLargeToMaterialize { sets, pairs });
        }
        let mut sys = from_symmetric_family(self.base_family())?;
        for &r in &self.blocks {
            sys = extend_system(&sys, r)?;
        }
        Ok(sys)
    }

    pub fn to_json(&self) -> LayoutJson {
        let (kind, q) = match self.base {
            Base::Plane { q } => ("plane", Some(q)),
            Base::Cyclic { .. } => ("cyclic", None),
        };
        LayoutJson {
            n: self.n,
            base: BaseJson {
                kind,
                q,
                n0: self.n0(),
                t: self.base.set_size(),
            },
            blocks: self.blocks.clone(),
            accept_prob: self.accept_prob.clone(),
            cardinality: self.cardinality(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BaseJson {
    pub kind: &'static str,
    pub q: Option<u64>,
    pub n0: usize,
    /// Size of each base set.
    pub t: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayoutJson {
    pub n: usize,
    pub base: BaseJson,
    pub blocks: Vec<usize>,
    pub accept_prob: Vec<f64>,
    pub cardinality: usize,
}

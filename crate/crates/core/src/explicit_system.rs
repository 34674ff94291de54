//! Explicit systems `(F, w, s)`: a set family over `[0, n)`, a weight per
//! set, and for each ordered pair of sets a distribution over elements.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowNetwork;

/// Default tolerance for stochasticity and balance checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Exhaustive symmetry search is limited to ground sets of this size.
pub const MAX_EXHAUSTIVE_SYMMETRY: usize = 8;

const FLOW_SCALE: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("set {set} contains element {element} outside [0, {n})")]
    ElementOutOfRange {
        set: usize,
        element: usize,
        n: usize,
    },
    #[error("set {set} contains element {element} twice")]
    DuplicateElement { set: usize, element: usize },
    #[error("family has no sets")]
    EmptyFamily,
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("weights are not a probability vector (sum {sum})")]
    InvalidWeights { sum: f64 },
    #[error("s row ({i}, {j}) refers to a set index outside the family")]
    RowOutOfRange { i: usize, j: usize },
    #[error("pair ({i}, {j}) has positive weight but no s row")]
    MissingPair { i: usize, j: usize },
    #[error("sets {i} and {j} do not intersect")]
    NotIntersecting { i: usize, j: usize },
    #[error("block of size {r} is too large for {n} elements (needs r² ≤ n + r)")]
    BlockTooLarge { r: usize, n: usize },
    #[error("exhaustive symmetry search needs n ≤ {MAX_EXHAUSTIVE_SYMMETRY}, got {n}")]
    TooLargeForExhaustive { n: usize },
    #[error("witness {index} is not an automorphism of the family")]
    BadWitness { index: usize },
    #[error("subsets overlap at element {element}")]
    OverlappingSubsets { element: usize },
}

/// A list of subsets of `[0, n)`, each stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FamilyJson", into = "FamilyJson")]
pub struct SetFamily {
    n: usize,
    sets: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    n: usize,
    sets: Vec<Vec<usize>>,
}

impl TryFrom<FamilyJson> for SetFamily {
    type Error = SystemError;
    fn try_from(j: FamilyJson) -> Result<Self, SystemError> {
        SetFamily::new(j.n, j.sets)
    }
}

impl From<SetFamily> for FamilyJson {
    fn from(f: SetFamily) -> Self {
        FamilyJson {
            n: f.n,
            sets: f.sets,
        }
    }
}

impl SetFamily {
    pub fn new(n: usize, sets: Vec<Vec<usize>>) -> Result<Self, SystemError> {
        let mut sets = sets;
        for (i, set) in sets.iter_mut().enumerate() {
            set.sort_unstable();
            if let Some(&element) = set.iter().find(|&&e| e >= n) {
                return Err(SystemError::ElementOutOfRange { set: i, element, n });
            }
            if let Some(w) = set.windows(2).find(|w| w[0] == w[1]) {
                return Err(SystemError::DuplicateElement {
                    set: i,
                    element: w[0],
                });
            }
        }
        Ok(Self { n, sets })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn set(&self, i: usize) -> &[usize] {
        &self.sets[i]
    }

    pub fn contains(&self, i: usize, element: usize) -> bool {
        self.sets[i].binary_search(&element).is_ok()
    }

    pub fn intersection(&self, i: usize, j: usize) -> Vec<usize> {
        sorted_intersection(&self.sets[i], &self.sets[j])
    }

    pub fn intersects(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.sets[i], &self.sets[j]);
        let (mut x, mut y) = (0, 0);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Size of the largest set.
    pub fn cardinality(&self) -> Result<usize, SystemError> {
        self.sets
            .iter()
            .map(Vec::len)
            .max()
            .ok_or(SystemError::EmptyFamily)
    }

    /// First pair `(i, j)`, `i ≤ j`, with empty intersection.
    pub fn non_intersecting_pair(&self) -> Option<(usize, usize)> {
        let m = self.len();
        (0..m)
            .flat_map(|i| (i..m).map(move |j| (i, j)))
            .find(|&(i, j)| !self.intersects(i, j))
    }

    /// Multiset of sets in a canonical order, for comparing families up to
    /// reordering.
    fn canonical_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = self.sets.clone();
        sets.sort();
        sets
    }

    fn permuted(&self, perm: &[usize]) -> Vec<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = self
            .sets
            .iter()
            .map(|s| {
                let mut img: Vec<usize> = s.iter().map(|&e| perm[e]).collect();
                img.sort_unstable();
                img
            })
            .collect();
        sets.sort();
        sets
    }
}

pub(crate) fn sorted_intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[x]);
                x += 1;
                y += 1;
            }
        }
    }
    out
}

/// Sparse distribution over elements: `(element, probability)` sorted by
/// element.
pub type SRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitSystem {
    family: SetFamily,
    w: Vec<f64>,
    s: BTreeMap<(usize, usize), SRow>,
}

impl ExplicitSystem {
    /// Checks shapes only; stochasticity and balance are the business of
    /// [`verify_system`].
    pub fn new(
        family: SetFamily,
        w: Vec<f64>,
        s: BTreeMap<(usize, usize), SRow>,
    ) -> Result<Self, SystemError> {
        let m = family.len();
        if w.len() != m {
            return Err(SystemError::WeightCount {
                expected: m,
                got: w.len(),
            });
        }
        let n = family.n();
        let mut s = s;
        for (&(i, j), row) in s.iter_mut() {
            if i >= m || j >= m {
                return Err(SystemError::RowOutOfRange { i, j });
            }
            row.sort_by_key(|&(p, _)| p);
            if let Some(&(element, _)) = row.iter().find(|&&(p, _)| p >= n) {
                return Err(SystemError::ElementOutOfRange { set: i, element, n });
            }
        }
        Ok(Self { family, w, s })
    }

    pub fn family(&self) -> &SetFamily {
        &self.family
    }

    pub fn n(&self) -> usize {
        self.family.n()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn row(&self, i: usize, j: usize) -> Option<&SRow> {
        self.s.get(&(i, j))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&(usize, usize), &SRow)> {
        self.s.iter()
    }

    pub fn cardinality(&self) -> Result<usize, SystemError> {
        self.family.cardinality()
    }

    pub fn to_json(&self) -> SystemJson {
        SystemJson {
            n: self.n(),
            sets: self.family.sets.clone(),
            w: self.w.clone(),
            s: self
                .s
                .iter()
                .flat_map(|(&(i, j), row)| row.iter().map(move |&(p, v)| (i, j, p, v)))
                .collect(),
        }
    }

    pub fn from_json(json: SystemJson) -> Result<Self, SystemError> {
        let family = SetFamily::new(json.n, json.sets)?;
        let mut s: BTreeMap<(usize, usize), SRow> = BTreeMap::new();
        for (i, j, p, v) in json.s {
            s.entry((i, j)).or_default().push((p, v));
        }
        Self::new(family, json.w, s)
    }
}

/// Wire format: `{"n", "sets", "w", "s": [[i, j, p, value], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemJson {
    pub n: usize,
    pub sets: Vec<Vec<usize>>,
    pub w: Vec<f64>,
    pub s: Vec<(usize, usize, usize, f64)>,
}

impl Serialize for ExplicitSystem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExplicitSystem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let json = SystemJson::deserialize(deserializer)?;
        ExplicitSystem::from_json(json).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemReport {
    /// `w` and every required row of `s` are probability vectors.
    pub valid: bool,
    pub intersecting: bool,
    /// `epsilon ≤ tol`.
    pub balanced: bool,
    /// `max_p (n·A_p − 1)`.
    pub epsilon: f64,
    pub cardinality: usize,
    /// `A_p = Σ_ij w_i w_j s_ijp`.
    pub per_element_mass: Vec<f64>,
}

pub fn verify_system(sys: &ExplicitSystem, tol: f64) -> Result<SystemReport, SystemError> {
    let cardinality = sys.cardinality()?;
    let n = sys.n();
    let stoch_tol = tol.max(DEFAULT_TOL);
    let w = &sys.w;
    let mut valid = w
        .iter()
        .all(|&x| (-stoch_tol..=1.0 + stoch_tol).contains(&x))
        && (w.iter().sum::<f64>() - 1.0).abs() <= stoch_tol;

    for (i, &wi) in w.iter().enumerate() {
        if wi <= 0.0 {
            continue;
        }
        for (j, &wj) in w.iter().enumerate() {
            if wj > 0.0 && !sys.s.contains_key(&(i, j)) {
                return Err(SystemError::MissingPair { i, j });
            }
        }
    }

    let mut intersecting = true;
    let mut mass = vec![0.0f64; n];
    for (&(i, j), row) in &sys.s {
        let mut row_sum = 0.0;
        for &(p, v) in row {
            if v < 0.0 {
                valid = false;
            }
            if v > 0.0 && !(sys.family.contains(i, p) && sys.family.contains(j, p)) {
                intersecting = false;
            }
            row_sum += v;
        }
        let weight = w[i] * w[j];
        if weight > 0.0 {
            if (row_sum - 1.0).abs() > stoch_tol {
                valid = false;
            }
            for &(p, v) in row {
                mass[p] += weight * v;
            }
        }
    }

    let mut epsilon = mass
        .iter()
        .map(|&a| n as f64 * a - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    // A valid system has Σ A_p = 1, so the maximum cannot sit below zero
    // except by rounding.
    if valid && epsilon < 0.0 {
        epsilon = 0.0;
    }
    Ok(SystemReport {
        valid,
        intersecting,
        balanced: valid && intersecting && epsilon <= tol,
        epsilon,
        cardinality,
        per_element_mass: mass,
    })
}

/// Uniform weights and `s` uniform over each pairwise intersection. Balanced
/// whenever the family is symmetric.
pub fn from_symmetric_family(family: SetFamily) -> Result<ExplicitSystem, SystemError> {
    let m = family.len();
    if m == 0 {
        return Err(SystemError::EmptyFamily);
    }
    let mut s = BTreeMap::new();
    for i in 0..m {
        for j in 0..m {
            let common = family.intersection(i, j);
            if common.is_empty() {
                return Err(SystemError::NotIntersecting {
                    i: i.min(j),
                    j: i.max(j),
                });
            }
            let p = 1.0 / common.len() as f64;
            s.insert((i, j), common.into_iter().map(|e| (e, p)).collect());
        }
    }
    ExplicitSystem::new(family, vec![1.0 / m as f64; m], s)
}

/// One extension step: appends `r` new elements `n..n+r`, replaces every set
/// by `r` copies each gaining one new element, and redistributes `s` so that
/// balance is preserved. New set index is `i * r + c` for base set `i` and
/// new element `n + c`.
pub fn extend_system(sys: &ExplicitSystem, r: usize) -> Result<ExplicitSystem, SystemError> {
    let n = sys.n();
    if r == 0 || r * r > n + r {
        return Err(SystemError::BlockTooLarge { r, n });
    }
    let alpha = (r * r) as f64 / (n + r) as f64;
    let sets = sys
        .family
        .sets
        .iter()
        .flat_map(|set| {
            (0..r).map(move |c| {
                let mut s = set.clone();
                s.push(n + c);
                s
            })
        })
        .collect();
    let family = SetFamily::new(n + r, sets)?;
    let w = sys
        .w
        .iter()
        .flat_map(|&wi| std::iter::repeat_n(wi / r as f64, r))
        .collect();

    let mut s = BTreeMap::new();
    for (&(i, j), row) in &sys.s {
        for ci in 0..r {
            for cj in 0..r {
                let new_row: SRow = if ci == cj {
                    row.iter()
                        .map(|&(p, v)| (p, (1.0 - alpha) * v))
                        .filter(|&(_, v)| v > 0.0)
                        .chain(std::iter::once((n + ci, alpha)))
                        .collect()
                } else {
                    row.clone()
                };
                s.insert((i * r + ci, j * r + cj), new_row);
            }
        }
    }
    ExplicitSystem::new(family, w, s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyProperties {
    pub intersecting: bool,
    pub uniform: bool,
    pub regular: bool,
    /// degree → number of elements with that degree
    pub degree_histogram: BTreeMap<usize, usize>,
}

pub fn family_properties(family: &SetFamily) -> FamilyProperties {
    let mut degree = vec![0usize; family.n()];
    for set in family.sets() {
        for &e in set {
            degree[e] += 1;
        }
    }
    let mut degree_histogram = BTreeMap::new();
    for &d in &degree {
        *degree_histogram.entry(d).or_insert(0) += 1;
    }
    let sizes: BTreeSet<usize> = family.sets().iter().map(Vec::len).collect();
    FamilyProperties {
        intersecting: family.non_intersecting_pair().is_none(),
        uniform: sizes.len() <= 1,
        regular: degree_histogram.len() <= 1,
        degree_histogram,
    }
}

/// Whether the automorphism group of the family acts transitively on the
/// ground set. Without witnesses, searches all `n!` permutations; with
/// witnesses, checks each is an automorphism and computes the orbit of
/// element 0 under the group they generate.
pub fn is_symmetric(
    family: &SetFamily,
    witnesses: Option<&[Vec<usize>]>,
) -> Result<bool, SystemError> {
    let n = family.n();
    if n == 0 {
        return Ok(true);
    }
    let target = family.canonical_sets();
    match witnesses {
        Some(gens) => {
            for (index, perm) in gens.iter().enumerate() {
                let is_perm = perm.len() == n && {
                    let mut seen = vec![false; n];
                    perm.iter()
                        .all(|&x| x < n && !std::mem::replace(&mut seen[x], true))
                };
                if !is_perm || family.permuted(perm) != target {
                    return Err(SystemError::BadWitness { index });
                }
            }
            let mut seen = vec![false; n];
            seen[0] = true;
            let mut queue = VecDeque::from([0usize]);
            while let Some(x) = queue.pop_front() {
                for perm in gens {
                    let y = perm[x];
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
            Ok(seen.iter().all(|&b| b))
        }
        None => {
            if n > MAX_EXHAUSTIVE_SYMMETRY {
                return Err(SystemError::TooLargeForExhaustive { n });
            }
            // The automorphisms form a group, so transitivity is equivalent
            // to the orbit of 0 being everything.
            let mut reached = vec![false; n];
            let mut remaining = n;
            let mut perm: Vec<usize> = (0..n).collect();
            let check = |perm: &[usize], reached: &mut Vec<bool>, remaining: &mut usize| {
                if !reached[perm[0]] && family.permuted(perm) == target {
                    reached[perm[0]] = true;
                    *remaining -= 1;
                }
            };
            check(&perm, &mut reached, &mut remaining);
            // Heap's algorithm, iterative form.
            let mut c = vec![0usize; n];
            let mut i = 1;
            while i < n && remaining > 0 {
                if c[i] < i {
                    if i % 2 == 0 {
                        perm.swap(0, i);
                    } else {
                        perm.swap(c[i], i);
                    }
                    check(&perm, &mut reached, &mut remaining);
                    c[i] += 1;
                    i = 1;
                } else {
                    c[i] = 0;
                    i += 1;
                }
            }
            Ok(remaining == 0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Balanceability {
    /// A system with the given weights whose epsilon is within tolerance.
    Feasible(ExplicitSystem),
    /// Only `routable_mass` of the unit pair mass can reach the elements
    /// without exceeding `1/n` anywhere.
    Infeasible { routable_mass: f64, deficit: f64 },
}

/// Decides whether some `s` makes `(family, w, s)` a balanced intersecting
/// system, as a transportation problem: pair `(i, j)` supplies `w_i w_j`,
/// element `p` absorbs at most `1/n`, and mass flows only from a pair to the
/// elements of its intersection.
pub fn check_balanceable_given_w(
    family: &SetFamily,
    w: &[f64],
    tol: f64,
) -> Result<Balanceability, SystemError> {
    let m = family.len();
    let n = family.n();
    if m == 0 {
        return Err(SystemError::EmptyFamily);
    }
    if w.len() != m {
        return Err(SystemError::WeightCount {
            expected: m,
            got: w.len(),
        });
    }
    let sum: f64 = w.iter().sum();
    if w.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > tol.max(DEFAULT_TOL) {
        return Err(SystemError::InvalidWeights { sum });
    }

    let positive: Vec<usize> = (0..m).filter(|&i| w[i] > 0.0).collect();
    let mut pairs = Vec::new();
    for &i in &positive {
        for &j in &positive {
            let common = family.intersection(i, j);
            if common.is_empty() {
                return Err(SystemError::NotIntersecting {
                    i: i.min(j),
                    j: i.max(j),
                });
            }
            pairs.push((i, j, common));
        }
    }

    let source = 0;
    let sink = 1 + pairs.len() + n;
    let element_node = |p: usize| 1 + pairs.len() + p;
    let mut net = FlowNetwork::new(sink + 1);
    let mut supplies = Vec::with_capacity(pairs.len());
    let mut arcs = Vec::with_capacity(pairs.len());
    for (k, (i, j, common)) in pairs.iter().enumerate() {
        let supply = (w[*i] * w[*j] * FLOW_SCALE).round() as i64;
        supplies.push(supply);
        net.add_arc(source, 1 + k, supply);
        arcs.push(
            common
                .iter()
                .map(|&p| (p, net.add_arc(1 + k, element_node(p), supply)))
                .collect::<Vec<_>>(),
        );
    }
    let demand = (FLOW_SCALE / n as f64).ceil() as i64;
    for p in 0..n {
        net.add_arc(element_node(p), sink, demand);
    }
    let total: i64 = supplies.iter().sum();
    let routed = net.max_flow(source, sink);
    let margin = (DEFAULT_TOL * FLOW_SCALE) as i64;
    if routed + margin < total {
        let routable_mass = routed as f64 / total as f64;
        return Ok(Balanceability::Infeasible {
            routable_mass,
            deficit: 1.0 - routable_mass,
        });
    }

    let mut s = BTreeMap::new();
    for (k, (i, j, common)) in pairs.iter().enumerate() {
        let flows: Vec<(usize, i64)> = arcs[k].iter().map(|&(p, a)| (p, net.flow_on(a))).collect();
        let row_total: i64 = flows.iter().map(|&(_, f)| f).sum();
        let row: SRow = if row_total > 0 {
            flows
                .into_iter()
                .filter(|&(_, f)| f > 0)
                .map(|(p, f)| (p, f as f64 / row_total as f64))
                .collect()
        } else {
            let u = 1.0 / common.len() as f64;
            common.iter().map(|&p| (p, u)).collect()
        };
        s.insert((*i, *j), row);
    }
    Ok(Balanceability::Feasible(ExplicitSystem::new(
        family.clone(),
        w.to_vec(),
        s,
    )?))
}

/// Two-block certificate of non-balanceability. Returns true when no set
/// meets both `q1` and `q2` and each block holds more than a quarter of the
/// elements: the sets meeting `q1` and those meeting `q2` are disjoint
/// subfamilies, so one of them has weight at most 1/2 and its block can
/// receive at most 1/4 of the mass.
pub fn refute_balanceable(
    family: &SetFamily,
    q1: &[usize],
    q2: &[usize],
) -> Result<bool, SystemError> {
    let n = family.n();
    let a: BTreeSet<usize> = q1.iter().copied().collect();
    let b: BTreeSet<usize> = q2.iter().copied().collect();
    if let Some(&element) = a.iter().chain(b.iter()).find(|&&e| e >= n) {
        return Err(SystemError::ElementOutOfRange {
            set: usize::MAX,
            element,
            n,
        });
    }
    if let Some(&element) = a.intersection(&b).next() {
        return Err(SystemError::OverlappingSubsets { element });
    }
    let meets_both = family
        .sets()
        .iter()
        .any(|s| s.iter().any(|e| a.contains(e)) && s.iter().any(|e| b.contains(e)));
    let quarter = |k: usize| 4 * k > n;
    Ok(!meets_both && quarter(a.len()) && quarter(b.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn fano_system() -> ExplicitSystem {
        from_symmetric_family(catalog::plane_lines(2).unwrap()).unwrap()
    }

    fn trivial_system() -> ExplicitSystem {
        let family = SetFamily::new(1, vec![vec![0]]).unwrap();
        let s = BTreeMap::from([((0, 0), vec![(0, 1.0)])]);
        ExplicitSystem::new(family, vec![1.0], s).unwrap()
    }

    #[test]
    fn fano_mass_by_hand() {
        let report = verify_system(&fano_system(), 1e-12).unwrap();
        assert!(report.valid && report.intersecting && report.balanced);
        assert!(report.epsilon <= 1e-12);
        assert_eq!(report.cardinality, 3);
        // 6 ordered pairs of distinct lines through p contribute 1 each,
        // 3 equal pairs contribute 1/3 each
        let expected = (6.0 + 3.0 / 3.0) / 49.0;
        for a in report.per_element_mass {
            assert!((a - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn trivial_system_report() {
        let report = verify_system(&trivial_system(), 0.0).unwrap();
        assert_eq!(report.epsilon, 0.0);
        assert_eq!(report.cardinality, 1);
        assert!(report.balanced);
    }

    #[test]
    fn support_violation_detected() {
        let family = SetFamily::new(2, vec![vec![0]]).unwrap();
        let s = BTreeMap::from([((0, 0), vec![(1, 1.0)])]);
        let sys = ExplicitSystem::new(family, vec![1.0], s).unwrap();
        let report = verify_system(&sys, DEFAULT_TOL).unwrap();
        assert!(!report.intersecting);
        assert!(!report.balanced);
    }

    #[test]
    fn missing_pair_is_an_error() {
        let family = SetFamily::new(1, vec![vec![0], vec![0]]).unwrap();
        let s = BTreeMap::from([((0, 0), vec![(0, 1.0)])]);
        let sys = ExplicitSystem::new(family, vec![0.5, 0.5], s).unwrap();
        assert_eq!(
            verify_system(&sys, 0.0).unwrap_err(),
            SystemError::MissingPair { i: 0, j: 1 }
        );
    }

    #[test]
    fn invalid_family_inputs() {
        assert!(matches!(
            SetFamily::new(3, vec![vec![0, 3]]),
            Err(SystemError::ElementOutOfRange { element: 3, .. })
        ));
        assert!(matches!(
            SetFamily::new(3, vec![vec![1, 1]]),
            Err(SystemError::DuplicateElement { element: 1, .. })
        ));
        let empty = SetFamily::new(3, vec![]).unwrap();
        assert_eq!(empty.cardinality(), Err(SystemError::EmptyFamily));
        assert_eq!(
            from_symmetric_family(empty).unwrap_err(),
            SystemError::EmptyFamily
        );
    }

    #[test]
    fn symmetric_catalog_is_balanced() {
        let z10 = catalog::translates(10, &[0, 1, 2, 5]).unwrap();
        let report = verify_system(&from_symmetric_family(z10).unwrap(), 1e-12).unwrap();
        assert!(report.balanced, "epsilon {}", report.epsilon);
        let disjoint = SetFamily::new(2, vec![vec![0], vec![1]]).unwrap();
        assert_eq!(
            from_symmetric_family(disjoint).unwrap_err(),
            SystemError::NotIntersecting { i: 0, j: 1 }
        );
    }

    #[test]
    fn extension_of_trivial_system() {
        let ext = extend_system(&trivial_system(), 1).unwrap();
        assert_eq!(ext.family().sets(), &[vec![0, 1]]);
        assert_eq!(ext.row(0, 0).unwrap(), &vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(verify_system(&ext, 0.0).unwrap().epsilon, 0.0);
    }

    #[test]
    fn extension_of_fano() {
        let ext = extend_system(&fano_system(), 2).unwrap();
        assert_eq!(ext.family().len(), 14);
        assert_eq!(ext.n(), 9);
        assert!(ext.family().sets().iter().all(|s| s.len() == 4));
        assert_eq!(ext.cardinality().unwrap(), 4);
        let report = verify_system(&ext, 1e-12).unwrap();
        assert!(report.balanced);
        for a in &report.per_element_mass {
            assert!((a - 1.0 / 9.0).abs() < 1e-15);
        }
        assert_eq!(
            extend_system(&fano_system(), 4).unwrap_err(),
            SystemError::BlockTooLarge { r: 4, n: 7 }
        );
        assert!(extend_system(&fano_system(), 3).is_ok());
    }

    #[test]
    fn properties_of_small_families() {
        let props = family_properties(&SetFamily::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap());
        assert!(!props.intersecting);
        assert!(props.uniform && props.regular);
        let with_empty = SetFamily::new(2, vec![vec![0, 1], vec![]]).unwrap();
        let props = family_properties(&with_empty);
        assert!(!props.intersecting && !props.uniform);
        assert_eq!(props.degree_histogram, BTreeMap::from([(1, 2)]));
    }

    #[test]
    fn catalog_properties() {
        let t72 = family_properties(&catalog::nonregular_balanceable());
        assert!(t72.uniform && t72.intersecting && !t72.regular);
        let t73 = family_properties(&catalog::regular_unbalanceable());
        assert!(t73.uniform && t73.intersecting && t73.regular);
        let fano = family_properties(&catalog::plane_lines(2).unwrap());
        assert!(fano.uniform && fano.intersecting && fano.regular);
        assert_eq!(fano.degree_histogram, BTreeMap::from([(3, 7)]));
    }

    #[test]
    fn symmetry_exhaustive_and_witnessed() {
        let cyc = catalog::cyclic_intervals(5, 3).unwrap();
        assert!(is_symmetric(&cyc, None).unwrap());
        // a star-shaped family: element 0 is special
        let star = SetFamily::new(4, vec![vec![0, 1], vec![0, 2], vec![0, 3]]).unwrap();
        assert!(!is_symmetric(&star, None).unwrap());
        let z10 = catalog::translates(10, &[0, 1, 2, 5]).unwrap();
        let shift: Vec<usize> = (0..10).map(|x| (x + 1) % 10).collect();
        assert!(is_symmetric(&z10, Some(&[shift])).unwrap());
        assert_eq!(
            is_symmetric(&z10, None).unwrap_err(),
            SystemError::TooLargeForExhaustive { n: 10 }
        );
        let swap: Vec<usize> = [1, 0, 2, 3, 4, 5, 6, 7, 8, 9].to_vec();
        assert_eq!(
            is_symmetric(&z10, Some(&[swap])).unwrap_err(),
            SystemError::BadWitness { index: 0 }
        );
        let t72 = catalog::nonregular_balanceable();
        assert_eq!(
            is_symmetric(&t72, None).unwrap_err(),
            SystemError::TooLargeForExhaustive { n: 10 }
        );
        // identity alone is an automorphism, but not transitive
        let id: Vec<usize> = (0..10).collect();
        assert!(!is_symmetric(&z10, Some(&[id])).unwrap());
    }

    #[test]
    fn fano_singer_cycle() {
        let plane = crate::finite_plane::ProjectivePlane::build(2).unwrap();
        let family = catalog::plane_lines(2).unwrap();
        // companion matrix of x³ + x + 1, primitive over GF(2)
        let singer = plane
            .collineation([[0, 0, 1], [1, 0, 1], [0, 1, 0]])
            .unwrap();
        let mut orbit = vec![0usize];
        while orbit.len() < 8 {
            orbit.push(singer[*orbit.last().unwrap()]);
        }
        assert_eq!(orbit[7], 0);
        assert_eq!(orbit[..7].iter().collect::<BTreeSet<_>>().len(), 7);
        assert!(is_symmetric(&family, Some(&[singer])).unwrap());
        assert!(is_symmetric(&family, None).unwrap());
    }

    #[test]
    fn flow_feasibility() {
        let fano = catalog::plane_lines(2).unwrap();
        match check_balanceable_given_w(&fano, &[1.0 / 7.0; 7], DEFAULT_TOL).unwrap() {
            Balanceability::Feasible(sys) => {
                let report = verify_system(&sys, DEFAULT_TOL).unwrap();
                assert!(report.balanced && report.intersecting);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
        let full = SetFamily::new(4, vec![vec![0, 1, 2, 3]]).unwrap();
        match check_balanceable_given_w(&full, &[1.0], DEFAULT_TOL).unwrap() {
            Balanceability::Feasible(sys) => {
                for &(_, v) in sys.row(0, 0).unwrap() {
                    assert!((v - 0.25).abs() < 1e-12);
                }
            }
            other => panic!("expected feasible, got {other:?}"),
        }
        let t73 = catalog::regular_unbalanceable();
        let m = t73.len();
        match check_balanceable_given_w(&t73, &vec![1.0 / m as f64; m], DEFAULT_TOL).unwrap() {
            Balanceability::Infeasible { deficit, .. } => assert!(deficit > 0.1),
            other => panic!("expected infeasible, got {other:?}"),
        }
        let disjoint = SetFamily::new(2, vec![vec![0], vec![1]]).unwrap();
        assert!(matches!(
            check_balanceable_given_w(&disjoint, &[0.5, 0.5], DEFAULT_TOL),
            Err(SystemError::NotIntersecting { .. })
        ));
        // zero-weight sets are skipped; all mass then sits on element 0
        assert!(matches!(
            check_balanceable_given_w(&disjoint, &[1.0, 0.0], DEFAULT_TOL),
            Ok(Balanceability::Infeasible { .. })
        ));
    }

    #[test]
    fn two_block_certificate() {
        let t73 = catalog::regular_unbalanceable();
        let first: Vec<usize> = (6..16).collect();
        let second: Vec<usize> = (16..26).collect();
        assert!(refute_balanceable(&t73, &first, &second).unwrap());
        assert_eq!(
            refute_balanceable(&t73, &[1, 2], &[2, 3]).unwrap_err(),
            SystemError::OverlappingSubsets { element: 2 }
        );
        // Fano: every assignment of elements to {none, q1, q2}
        let fano = catalog::plane_lines(2).unwrap();
        let mut checked = 0;
        for code in 0..3usize.pow(7) {
            let (mut q1, mut q2) = (Vec::new(), Vec::new());
            let mut c = code;
            for e in 0..7 {
                match c % 3 {
                    1 => q1.push(e),
                    2 => q2.push(e),
                    _ => {}
                }
                c /= 3;
            }
            assert!(!refute_balanceable(&fano, &q1, &q2).unwrap());
            checked += 1;
        }
        assert_eq!(checked, 2187);
    }

    #[test]
    fn json_field_names() {
        let json = serde_json::to_value(trivial_system()).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"n": 1, "sets": [[0]], "w": [1.0], "s": [[0, 0, 0, 1.0]]})
        );
        let back: ExplicitSystem = serde_json::from_value(json).unwrap();
        assert_eq!(back, trivial_system());
        let fam: SetFamily = serde_json::from_str(r#"{"n":3,"sets":[[2,0],[1]]}"#).unwrap();
        assert_eq!(fam.sets(), &[vec![0, 2], vec![1]]);
        assert!(serde_json::from_str::<SetFamily>(r#"{"n":1,"sets":[[4]]}"#).is_err());
    }
}

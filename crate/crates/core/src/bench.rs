//! The reproduction experiments. Each check returns a [`CheckResult`]; the
//! `bench` command serializes all of them as one report.

use std::time::Instant;

use serde::Serialize;

use crate::analysis::{compute_metrics, extract_system, MetricsAccumulator};
use crate::catalog;
use crate::explicit_system::{
    check_balanceable_given_w, family_properties, from_symmetric_family, refute_balanceable,
    verify_system, Balanceability, DEFAULT_TOL,
};
use crate::graphs::{gen_complete, gen_erdos_renyi, gen_powerlaw, gen_star};
use crate::layered_sampler::{ceil_sqrt, layout_cardinality, plan_layout, Layout};
use crate::partitioner::{assign_stream, random_partition, BispPartitioner, Edge, Mode};
use crate::randomness::{PolyHash, HASH_DEGREE_PLUS_ONE};

pub const SEEDS: u64 = 20;
const GRAPH_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CardinalityRow {
    pub n: usize,
    pub n0: usize,
    pub h: usize,
    pub cardinality: usize,
    pub lower: usize,
    pub upper: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub checks: Vec<CheckResult>,
    pub cardinality_table: Vec<CardinalityRow>,
}

impl BenchReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const CHECK_COUNT: usize = 10;

/// Runs check `id` (1-based).
pub fn run_check(id: usize) -> CheckResult {
    let start = Instant::now();
    let (name, (passed, detail)) = match id {
        1 => ("replication bound sweep", replication_sweep()),
        2 => ("exact plane cardinality", exact_planes()),
        3 => ("cardinality envelope", envelope(&cardinality_table(1000))),
        4 => ("balance of materialized systems", balance_identity()),
        5 => (
            "implicit sampler matches explicit system",
            oracle_equivalence(),
        ),
        6 => ("imbalance concentration", imbalance_concentration()),
        7 => ("extraction consistency", extraction()),
        8 => ("hash family independence", six_independence()),
        9 => ("family catalog", family_catalog()),
        10 => ("baseline separation", baseline_separation()),
        _ => panic!("no check {id}"),
    };
    CheckResult {
        id,
        name,
        passed,
        seconds: start.elapsed().as_secs_f64(),
        detail,
    }
}

pub fn run_all() -> BenchReport {
    BenchReport {
        checks: (1..=CHECK_COUNT).map(run_check).collect(),
        cardinality_table: cardinality_table(1000),
    }
}

/// Named test graphs.
pub fn corpus() -> Vec<(&'static str, Vec<Edge>)> {
    vec![
        ("complete-200", gen_complete(200).collect()),
        (
            "er-1e4-1e6",
            gen_erdos_renyi(10_000, 1_000_000, GRAPH_SEED).collect(),
        ),
        (
            "powerlaw-1e4-1e6",
            gen_powerlaw(10_000, 1_000_000, 2.2, GRAPH_SEED).collect(),
        ),
        ("star-1000", gen_star(1000).collect()),
    ]
}

/// Largest replication factor, with vertex ids below `vertices` and at
/// most 64 partitions.
fn max_rf_dense(partitions: impl Iterator<Item = (u64, u64, usize)>, vertices: usize) -> usize {
    let mut masks = vec![0u64; vertices];
    for (u, v, p) in partitions {
        masks[u as usize] |= 1 << p;
        masks[v as usize] |= 1 << p;
    }
    masks
        .iter()
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

fn bisp_max_rf(edges: &[Edge], layout: &Layout, seed: u64, vertices: usize) -> usize {
    let p = BispPartitioner::new(layout.clone(), seed, Mode::Hash);
    max_rf_dense(
        assign_stream(&p, edges.iter().copied()).map(|a| (a.src, a.dst, a.partition)),
        vertices,
    )
}

fn replication_sweep() -> (bool, String) {
    let graphs = corpus();
    let mut worst = Vec::new();
    let mut ok = true;
    for n in [7usize, 13, 31] {
        let layout = plan_layout(n).expect("valid n");
        let bound = layout_cardinality(&layout);
        let mut max_seen = 0;
        for (_, edges) in &graphs {
            let vertices = edges.iter().map(|&(u, v)| u.max(v)).max().unwrap_or(0) as usize + 1;
            for seed in 0..SEEDS {
                max_seen = max_seen.max(bisp_max_rf(edges, &layout, seed, vertices));
            }
        }
        ok &= max_seen <= bound;
        worst.push(format!("n={n}: max rf {max_seen} (bound {bound})"));
    }
    (ok, worst.join("; "))
}

fn exact_planes() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [2usize, 3, 5, 7, 11] {
        let n = q * q + q + 1;
        let card = layout_cardinality(&plan_layout(n).expect("valid n"));
        ok &= card == q + 1 && card == ceil_sqrt(n);
        parts.push(format!("n={n}: {card}"));
    }
    (ok, parts.join(", "))
}

pub fn cardinality_table(max_n: usize) -> Vec<CardinalityRow> {
    (1..=max_n)
        .map(|n| {
            let layout = plan_layout(n).expect("valid n");
            let n0 = layout.n0();
            let h = layout.blocks().len();
            CardinalityRow {
                n,
                n0,
                h,
                cardinality: layout_cardinality(&layout),
                lower: ceil_sqrt(n),
                upper: ceil_sqrt(n0) + h + 1,
            }
        })
        .collect()
}

fn envelope(table: &[CardinalityRow]) -> (bool, String) {
    let bad: Vec<usize> = table
        .iter()
        .filter(|r| r.cardinality < r.lower || r.cardinality > r.upper)
        .map(|r| r.n)
        .collect();
    (
        bad.is_empty(),
        format!("{} rows, violations at {bad:?}", table.len()),
    )
}

fn balance_identity() -> (bool, String) {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for n in 1..=20 {
        let sys = plan_layout(n)
            .expect("valid n")
            .materialize()
            .expect("small system");
        let report = verify_system(&sys, 1e-9).expect("well-formed");
        ok &= report.valid && report.intersecting && report.epsilon <= 1e-9;
        worst = worst.max(report.epsilon);
    }
    let mut planes = Vec::new();
    for q in [2, 3] {
        let sys =
            from_symmetric_family(catalog::plane_lines(q).expect("prime")).expect("intersecting");
        let report = verify_system(&sys, 1e-12).expect("well-formed");
        ok &= report.balanced && report.epsilon <= 1e-12;
        planes.push(report.epsilon);
    }
    (
        ok,
        format!("layouts n≤20 max epsilon {worst:e}; planes {planes:?}"),
    )
}

fn oracle_equivalence() -> (bool, String) {
    let mut max_diff: f64 = 0.0;
    let mut max_dev: f64 = 0.0;
    for n in 2..=20 {
        let layout = plan_layout(n).expect("valid n");
        let sys = layout.materialize().expect("small system");
        let labels: Vec<_> = layout.labels().collect();
        let weight = 1.0 / (labels.len() * labels.len()) as f64;
        let mut total = vec![0.0; n];
        for (i, lv) in labels.iter().enumerate() {
            for (j, lu) in labels.iter().enumerate() {
                let dist = layout.edge_distribution(lv, lu).expect("own labels");
                let mut dense = vec![0.0; n];
                for &(p, v) in sys.row(i, j).expect("every pair has a row") {
                    dense[p] += v;
                }
                for p in 0..n {
                    max_diff = max_diff.max((dist[p] - dense[p]).abs());
                    total[p] += weight * dist[p];
                }
            }
        }
        for t in total {
            max_dev = max_dev.max((t - 1.0 / n as f64).abs());
        }
    }
    (
        max_diff <= 1e-12 && max_dev <= 1e-9,
        format!("max row difference {max_diff:e}, max deviation from 1/n {max_dev:e}"),
    )
}

/// Returns the imbalance of every seed and the slowest single run.
pub fn imbalance_runs(n: usize, seeds: u64) -> (Vec<f64>, f64) {
    let edges: Vec<Edge> = gen_erdos_renyi(10_000, 1_000_000, GRAPH_SEED).collect();
    let layout = plan_layout(n).expect("valid n");
    let mut slowest: f64 = 0.0;
    let runs = (0..seeds)
        .map(|seed| {
            let start = Instant::now();
            let p = BispPartitioner::new(layout.clone(), seed, Mode::Hash);
            let mut acc = MetricsAccumulator::new(n).expect("n ≥ 1");
            for a in assign_stream(&p, edges.iter().copied()) {
                acc.add(&a).expect("partition in range");
            }
            let ib = acc.finish().expect("nonempty").imbalance;
            slowest = slowest.max(start.elapsed().as_secs_f64());
            ib
        })
        .collect();
    (runs, slowest)
}

fn imbalance_concentration() -> (bool, String) {
    let (runs, slowest) = imbalance_runs(31, SEEDS);
    let good = runs.iter().filter(|&&ib| ib <= 1.05).count();
    let max = runs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = runs.iter().copied().fold(f64::INFINITY, f64::min);
    (
        good >= 19 && slowest < 10.0,
        format!("{good}/20 runs with imbalance ≤ 1.05 (range {min:.4}..{max:.4}); slowest run {slowest:.2}s"),
    )
}

fn extraction() -> (bool, String) {
    let n = 7;
    let layout = plan_layout(n).expect("valid n");
    let p = BispPartitioner::new(layout, 1, Mode::Hash);
    let assignments: Vec<_> = assign_stream(&p, gen_complete(200)).collect();
    let metrics = compute_metrics(assignments.iter().copied(), n).expect("nonempty");
    let (_, report) = extract_system(&assignments, 200, n).expect("complete graph");
    let gap = (report.epsilon - (metrics.imbalance - 1.0)).abs();
    (
        report.intersecting && report.cardinality <= 3 && gap <= 1e-9,
        format!(
            "intersecting {}, cardinality {}, epsilon {:.6}, imbalance {:.6}",
            report.intersecting, report.cardinality, report.epsilon, metrics.imbalance
        ),
    )
}

fn six_independence() -> (bool, String) {
    const P: u64 = 7;
    let total = P.pow(HASH_DEGREE_PLUS_ONE as u32) as usize;
    let mut seen = vec![false; total];
    let mut collisions = 0usize;
    for index in 0..total {
        let mut coeffs = [0u64; HASH_DEGREE_PLUS_ONE];
        let mut rest = index as u64;
        for c in coeffs.iter_mut() {
            *c = rest % P;
            rest /= P;
        }
        let h = PolyHash::with_modulus(P, coeffs);
        let tuple = (0..HASH_DEGREE_PLUS_ONE as u64)
            .fold(0usize, |acc, x| acc * P as usize + h.eval(x) as usize);
        if std::mem::replace(&mut seen[tuple], true) {
            collisions += 1;
        }
    }
    (
        collisions == 0 && seen.iter().all(|&b| b),
        format!("{total} polynomials, {collisions} repeated tuples"),
    )
}

fn family_catalog() -> (bool, String) {
    let z10 = from_symmetric_family(catalog::translates(10, &[0, 1, 2, 5]).expect("in range"))
        .expect("intersecting");
    let eps = verify_system(&z10, 1e-12).expect("well-formed").epsilon;
    let a = eps <= 1e-12;

    let props = family_properties(&catalog::nonregular_balanceable());
    let b = props.uniform && props.intersecting && !props.regular;

    let family = catalog::regular_unbalanceable();
    let props = family_properties(&family);
    let first: Vec<usize> = (6..16).collect();
    let second: Vec<usize> = (16..26).collect();
    let refuted = refute_balanceable(&family, &first, &second).expect("disjoint halves");
    let uniform_w = vec![1.0 / family.len() as f64; family.len()];
    let infeasible = matches!(
        check_balanceable_given_w(&family, &uniform_w, DEFAULT_TOL).expect("valid weights"),
        Balanceability::Infeasible { .. }
    );
    let c = props.uniform && props.regular && props.intersecting && refuted && infeasible;
    (
        a && b && c,
        format!("(a) epsilon {eps:e}: {a}; (b) {b}; (c) {c}"),
    )
}

fn baseline_separation() -> (bool, String) {
    let n = 31;
    let layout = plan_layout(n).expect("valid n");
    let edges: Vec<Edge> = gen_star(1000).collect();
    let (mut random_min, mut bisp_max) = (usize::MAX, 0);
    for seed in 0..SEEDS {
        let random = random_partition(edges.iter().copied(), n, seed).expect("n ≥ 1");
        random_min = random_min.min(max_rf_dense(
            random.map(|a| (a.src, a.dst, a.partition)),
            1001,
        ));
        bisp_max = bisp_max.max(bisp_max_rf(&edges, &layout, seed, 1001));
    }
    (
        random_min >= 25 && bisp_max <= 6,
        format!("random min rf {random_min}, bisp max rf {bisp_max}"),
    )
}

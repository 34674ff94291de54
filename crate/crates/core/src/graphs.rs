//! Edge-list text I/O and synthetic graph generators.
//!
//! The text format is one edge per line, `src dst` as decimal integers
//! separated by whitespace. Blank lines and lines starting with `#` are
//! skipped. Duplicate edges and loops are kept.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::partitioner::{Assignment, Edge};
use crate::randomness::{draw, Domain, StreamKey};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Streams edges from a reader, reporting the first malformed line.
pub struct EdgeReader<R> {
    reader: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> EdgeReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            line: 0,
            buf: String::new(),
        }
    }
}

pub(crate) fn parse_fields<const K: usize>(
    text: &str,
    line: usize,
) -> Result<[u64; K], GraphError> {
    let mut out = [0u64; K];
    let mut fields = text.split_whitespace();
    for slot in out.iter_mut() {
        let field = fields.next().ok_or_else(|| GraphError::Parse {
            line,
            message: format!("expected {K} fields"),
        })?;
        *slot = field.parse().map_err(|_| GraphError::Parse {
            line,
            message: format!("{field:?} is not a nonnegative integer"),
        })?;
    }
    if let Some(extra) = fields.next() {
        return Err(GraphError::Parse {
            line,
            message: format!("unexpected trailing field {extra:?}"),
        });
    }
    Ok(out)
}

/// Next non-blank, non-comment line parsed as `K` integers.
fn next_record<R: BufRead, const K: usize>(
    reader: &mut R,
    buf: &mut String,
    line: &mut usize,
) -> Option<Result<[u64; K], GraphError>> {
    loop {
        buf.clear();
        *line += 1;
        match reader.read_line(buf) {
            Ok(0) => return None,
            Ok(_) => {}
            Err(e) => return Some(Err(e.into())),
        }
        let text = buf.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        return Some(parse_fields::<K>(text, *line));
    }
}

impl<R: BufRead> Iterator for EdgeReader<R> {
    type Item = Result<Edge, GraphError>;

    fn next(&mut self) -> Option<Self::Item> {
        next_record::<R, 2>(&mut self.reader, &mut self.buf, &mut self.line)
            .map(|r| r.map(|[u, v]| (u, v)))
    }
}

/// Reads `src dst partition` lines, tab- or space-separated.
pub struct AssignmentReader<R> {
    reader: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> AssignmentReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            line: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for AssignmentReader<R> {
    type Item = Result<Assignment, GraphError>;

    fn next(&mut self) -> Option<Self::Item> {
        next_record::<R, 3>(&mut self.reader, &mut self.buf, &mut self.line).map(|r| {
            r.map(|[src, dst, p]| Assignment {
                src,
                dst,
                partition: p as usize,
            })
        })
    }
}

pub fn read_assignments<R: BufRead>(reader: R) -> Result<Vec<Assignment>, GraphError> {
    AssignmentReader::new(reader).collect()
}

pub fn write_assignments<W: Write>(
    mut writer: W,
    assignments: impl IntoIterator<Item = Assignment>,
) -> io::Result<()> {
    for a in assignments {
        writeln!(writer, "{}\t{}\t{}", a.src, a.dst, a.partition)?;
    }
    writer.flush()
}

pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Vec<Edge>, GraphError> {
    EdgeReader::new(reader).collect()
}

pub fn write_edge_list<W: Write>(
    mut writer: W,
    edges: impl IntoIterator<Item = Edge>,
) -> io::Result<()> {
    for (u, v) in edges {
        writeln!(writer, "{u} {v}")?;
    }
    writer.flush()
}

/// `K_N` with loops: all `N²` ordered pairs, row-major.
pub fn gen_complete(nodes: u64) -> impl Iterator<Item = Edge> + Clone {
    (0..nodes).flat_map(move |u| (0..nodes).map(move |v| (u, v)))
}

fn below(key: StreamKey, counter: u64, m: u64) -> u64 {
    ((draw(key, counter) as u128 * m as u128) >> 64) as u64
}

/// `edges` independent uniform ordered pairs over `nodes` vertices. The
/// `i`-th edge depends only on `(seed, i)`.
pub fn gen_erdos_renyi(nodes: u64, edges: u64, seed: u64) -> impl Iterator<Item = Edge> + Clone {
    let key = StreamKey::new(seed, Domain::Generator, 0);
    (0..edges).map(move |i| (below(key, 2 * i, nodes), below(key, 2 * i + 1, nodes)))
}

/// Chung–Lu style heavy-tailed graph: each endpoint is drawn independently
/// with probability proportional to `(i + 1)^(−1/(alpha − 1))`.
#[derive(Debug, Clone)]
pub struct PowerLaw {
    cumulative: Vec<f64>,
    key: StreamKey,
}

impl PowerLaw {
    pub fn new(nodes: u64, alpha: f64, seed: u64) -> Self {
        assert!(alpha > 1.0, "power-law exponent must exceed 1");
        let exponent = -1.0 / (alpha - 1.0);
        let mut acc = 0.0;
        let cumulative = (0..nodes)
            .map(|i| {
                acc += ((i + 1) as f64).powf(exponent);
                acc
            })
            .collect();
        Self {
            cumulative,
            key: StreamKey::new(seed, Domain::Generator, 1),
        }
    }

    fn pick(&self, counter: u64) -> u64 {
        let total = *self.cumulative.last().expect("at least one node");
        let u = (draw(self.key, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1) as u64
    }

    pub fn edge(&self, i: u64) -> Edge {
        (self.pick(2 * i), self.pick(2 * i + 1))
    }
}

pub fn gen_powerlaw(
    nodes: u64,
    edges: u64,
    alpha: f64,
    seed: u64,
) -> impl Iterator<Item = Edge> + Clone {
    let model = PowerLaw::new(nodes, alpha, seed);
    (0..edges).map(move |i| model.edge(i))
}

/// Center `0` joined to leaves `1..=leaves`.
pub fn gen_star(leaves: u64) -> impl Iterator<Item = Edge> + Clone {
    (1..=leaves).map(|v| (0, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn parses_edges() {
        assert_eq!(
            read_edge_list("0 1\n1 2\n".as_bytes()).unwrap(),
            vec![(0, 1), (1, 2)]
        );
        assert_eq!(
            read_edge_list("# comment\n\n3 3\n".as_bytes()).unwrap(),
            vec![(3, 3)]
        );
        assert_eq!(
            read_edge_list("  4\t5  \r\n".as_bytes()).unwrap(),
            vec![(4, 5)]
        );
        for (text, line) in [("0 x\n", 1), ("0 1\n2\n", 2), ("0 1 2\n", 1), ("-1 2\n", 1)] {
            match read_edge_list(text.as_bytes()) {
                Err(GraphError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn complete_graphs() {
        assert_eq!(gen_complete(1).collect::<Vec<_>>(), vec![(0, 0)]);
        assert_eq!(gen_complete(2).count(), 4);
        assert_eq!(gen_complete(200).count(), 40_000);
        assert_eq!(gen_complete(3).nth(4), Some((1, 1)));
    }

    #[test]
    fn generators_are_pure() {
        assert_eq!(gen_erdos_renyi(10, 0, 1).count(), 0);
        let a: Vec<_> = gen_erdos_renyi(100, 500, 3).collect();
        let b: Vec<_> = gen_erdos_renyi(100, 500, 3).collect();
        assert_eq!(a, b);
        assert_ne!(a, gen_erdos_renyi(100, 500, 4).collect::<Vec<_>>());
        let p: Vec<_> = gen_powerlaw(100, 500, 2.2, 3).collect();
        assert_eq!(p, gen_powerlaw(100, 500, 2.2, 3).collect::<Vec<_>>());
        assert!(p.iter().all(|&(u, v)| u < 100 && v < 100));
    }

    fn degrees(edges: impl Iterator<Item = Edge>) -> HashMap<u64, usize> {
        let mut deg = HashMap::new();
        for (u, v) in edges {
            *deg.entry(u).or_insert(0) += 1;
            *deg.entry(v).or_insert(0) += 1;
        }
        deg
    }

    #[test]
    fn erdos_renyi_degree_tail() {
        // mean degree 200; P(Poisson(200) > 600) is astronomically small
        let deg = degrees(gen_erdos_renyi(10_000, 1_000_000, 12));
        assert!(deg.values().all(|&d| d <= 600));
    }

    #[test]
    fn powerlaw_heavy_tail() {
        let nodes = 10_000u64;
        let deg = degrees(gen_powerlaw(nodes, 1_000_000, 2.2, 5));
        let mut all: Vec<usize> = (0..nodes)
            .map(|v| deg.get(&v).copied().unwrap_or(0))
            .collect();
        let top = all[0];
        all.sort_unstable();
        let median = all[all.len() / 2];
        assert!(top >= 50 * median, "top {top} median {median}");
    }

    #[test]
    fn assignment_tsv_roundtrip() {
        let rows = vec![
            Assignment {
                src: 0,
                dst: 1,
                partition: 2,
            },
            Assignment {
                src: 9,
                dst: 9,
                partition: 0,
            },
        ];
        let mut buf = Vec::new();
        write_assignments(&mut buf, rows.iter().copied()).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "0\t1\t2\n9\t9\t0\n"
        );
        assert_eq!(read_assignments(buf.as_slice()).unwrap(), rows);
        assert!(matches!(
            read_assignments("0\t1\n".as_bytes()),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn write_then_read() {
        let edges: Vec<_> = gen_erdos_renyi(1 << 40, 100, 1).collect();
        let mut buf = Vec::new();
        write_edge_list(&mut buf, edges.iter().copied()).unwrap();
        assert_eq!(read_edge_list(buf.as_slice()).unwrap(), edges);
    }
}

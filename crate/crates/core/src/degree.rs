//! Unnormalised degree histograms and scalar network counts.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use crate::graph::{ConflictGraph, DepGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
    Conflict,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
            Direction::Conflict => "conflict",
        })
    }
}

/// `phi(x)`: how many nodes have exactly `x` links, for `x >= 1`.
///
/// Nodes with no links are tallied in `zero_degree_nodes` since `x = 0`
/// lies outside the model's support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeHistogram {
    pub direction: Direction,
    pub counts: BTreeMap<u64, u64>,
    pub zero_degree_nodes: u64,
}

impl DegreeHistogram {
    pub fn from_degrees(direction: Direction, degrees: &[u64]) -> Self {
        let mut counts = BTreeMap::new();
        let mut zero = 0;
        for &d in degrees {
            if d == 0 {
                zero += 1;
            } else {
                *counts.entry(d).or_insert(0) += 1;
            }
        }
        DegreeHistogram {
            direction,
            counts,
            zero_degree_nodes: zero,
        }
    }

    pub fn node_total(&self) -> u64 {
        self.counts.values().sum::<u64>() + self.zero_degree_nodes
    }

    /// `sum x * phi(x)`: edges for a directed histogram, twice the edges
    /// for a conflicts histogram.
    pub fn link_total(&self) -> u64 {
        self.counts.iter().map(|(x, phi)| x * phi).sum()
    }

    pub fn max_x(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `(x, phi)` as floating-point pairs, ascending in `x`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.counts
            .iter()
            .map(|(&x, &phi)| (x as f64, phi as f64))
            .collect()
    }

    /// Writes the `x,phi` interchange CSV, rows ascending in `x`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,phi")?;
        for (x, phi) in &self.counts {
            writeln!(out, "{x},{phi}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("missing or wrong header (expected `x,phi`), found {0:?}")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads an `x,phi` CSV into points. `phi` may be fractional (synthetic
/// data); rows must have `x > 0` and `phi > 0`.
pub fn read_points_csv<R: BufRead>(reader: R) -> Result<Vec<(f64, f64)>, CsvError> {
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "x,phi" {
        return Err(CsvError::Header(header));
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |message: String| CsvError::Row {
            line: line_no,
            message,
        };
        let (x, phi) = line
            .split_once(',')
            .ok_or_else(|| row_err("expected two columns".into()))?;
        let x: f64 = x.trim().parse().map_err(|e| row_err(format!("x: {e}")))?;
        let phi: f64 = phi
            .trim()
            .parse()
            .map_err(|e| row_err(format!("phi: {e}")))?;
        if !(x > 0.0 && x.is_finite() && phi > 0.0 && phi.is_finite()) {
            return Err(row_err(format!(
                "x and phi must be positive, got {x},{phi}"
            )));
        }
        points.push((x, phi));
    }
    Ok(points)
}

pub fn degree_histogram(graph: &DepGraph, direction: Direction) -> DegreeHistogram {
    let degrees = match direction {
        Direction::Out => graph.out_degrees(),
        Direction::In => graph.in_degrees(),
        Direction::Conflict => panic!("conflict histograms come from a ConflictGraph"),
    };
    DegreeHistogram::from_degrees(direction, &degrees)
}

pub fn conflict_histogram(graph: &ConflictGraph) -> DegreeHistogram {
    DegreeHistogram::from_degrees(Direction::Conflict, &graph.degrees())
}

/// Nodes contributing no out-directed link, isolated ones included.
pub fn terminal_node_count(graph: &DepGraph) -> usize {
    graph.out_degrees().iter().filter(|&&d| d == 0).count()
}

/// Nodes contributing at least one out-directed link.
pub fn contributing_node_count(graph: &DepGraph) -> usize {
    graph.out_degrees().iter().filter(|&&d| d > 0).count()
}

/// Highest-degree node; ties go to the lexicographically smallest name.
/// `None` for a graph without nodes.
pub fn max_degree(graph: &DepGraph, direction: Direction) -> Option<(String, u64)> {
    let degrees = match direction {
        Direction::Out => graph.out_degrees(),
        Direction::In => graph.in_degrees(),
        Direction::Conflict => panic!("use max_conflict_degree for conflict graphs"),
    };
    best_node(graph.nodes(), &degrees)
}

pub fn max_conflict_degree(graph: &ConflictGraph) -> Option<(String, u64)> {
    best_node(graph.nodes(), &graph.degrees())
}

fn best_node(names: &[String], degrees: &[u64]) -> Option<(String, u64)> {
    // Names are sorted, so the first maximum is the lexicographically smallest.
    let mut best: Option<usize> = None;
    for (i, &d) in degrees.iter().enumerate() {
        if best.is_none_or(|b| d > degrees[b]) {
            best = Some(i);
        }
    }
    best.map(|i| (names[i].clone(), degrees[i]))
}

/// Scalar summary printed by the CLI and recorded in reports.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct NetworkSummary {
    pub nodes: usize,
    pub edges: usize,
    pub terminal_nodes: usize,
    pub contributing_nodes: usize,
    pub max_out: Option<(String, u64)>,
    pub max_in: Option<(String, u64)>,
}

impl NetworkSummary {
    pub fn of(graph: &DepGraph) -> Self {
        NetworkSummary {
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            terminal_nodes: terminal_node_count(graph),
            contributing_nodes: contributing_node_count(graph),
            max_out: max_degree(graph, Direction::Out),
            max_in: max_degree(graph, Direction::In),
        }
    }
}

//! Dependency and conflict graphs over package names.
//!
//! A dependency edge points from the *prior* package (the one providing
//! functionality) to the *posterior* package (the one invoking it). So if
//! `A` depends on `B` the edge is `B -> A`, the out-degree of a package is
//! its reverse-dependency count, and the in-degree is the number of
//! packages it requires.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, Write};

use crate::deb822::{PackageRecord, RelationClause, RelationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub enum AlternativesPolicy {
    /// Only the first alternative of `a | b` produces an edge.
    #[default]
    First,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub enum VirtualPolicy {
    /// A virtual name links from every real package that provides it.
    #[default]
    Providers,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct GraphConfig {
    /// Relation kinds that count as dependencies.
    pub relations: BTreeSet<RelationKind>,
    pub alternatives: AlternativesPolicy,
    pub virtuals: VirtualPolicy,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            relations: [RelationKind::Depends, RelationKind::PreDepends]
                .into_iter()
                .collect(),
            alternatives: AlternativesPolicy::First,
            virtuals: VirtualPolicy::Providers,
        }
    }
}

/// What was dropped or rewritten while building a graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct BuildReport {
    pub self_loops: usize,
    /// Named packages that are neither real nor provided, with how often
    /// they were referenced.
    pub dangling: BTreeMap<String, usize>,
    pub virtual_resolved: usize,
    pub virtual_dropped: usize,
    /// Edges requested more than once (set semantics keeps one).
    pub duplicate_edges: usize,
}

impl BuildReport {
    pub fn dangling_count(&self) -> usize {
        self.dangling.values().sum()
    }
}

/// Maps every name that appears in a `Provides` field to the sorted,
/// distinct list of real packages providing it.
pub fn resolve_virtual(records: &[PackageRecord]) -> BTreeMap<String, Vec<String>> {
    let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for record in records {
        for provided in &record.provides {
            map.entry(provided.clone())
                .or_default()
                .insert(record.name.clone());
        }
    }
    map.into_iter()
        .map(|(k, v)| (k, v.into_iter().collect()))
        .collect()
}

/// Sorted node table shared by both graph kinds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct NodeTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeTable {
    fn new<I: IntoIterator<Item = String>>(names: I) -> Self {
        let names: Vec<String> = names
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        NodeTable { names, index }
    }

    fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

struct Resolver<'a> {
    nodes: &'a NodeTable,
    virtuals: BTreeMap<String, Vec<String>>,
    policy: VirtualPolicy,
}

impl Resolver<'_> {
    /// Real node ids that satisfy `name`, recording virtual/dangling outcomes.
    fn resolve(&self, name: &str, report: &mut BuildReport) -> Vec<usize> {
        if let Some(id) = self.nodes.get(name) {
            return vec![id];
        }
        match (self.virtuals.get(name), self.policy) {
            (Some(providers), VirtualPolicy::Providers) => {
                report.virtual_resolved += 1;
                providers.iter().filter_map(|p| self.nodes.get(p)).collect()
            }
            (Some(_), VirtualPolicy::Drop) => {
                report.virtual_dropped += 1;
                Vec::new()
            }
            (None, _) => {
                *report.dangling.entry(name.to_string()).or_default() += 1;
                Vec::new()
            }
        }
    }
}

fn selected_names(
    clause: &RelationClause,
    policy: AlternativesPolicy,
) -> impl Iterator<Item = &str> {
    let take = match policy {
        AlternativesPolicy::First => 1,
        AlternativesPolicy::All => clause.alternatives.len(),
    };
    clause
        .alternatives
        .iter()
        .take(take)
        .map(|r| r.name.as_str())
}

/// Directed dependency graph. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DepGraph {
    nodes: NodeTable,
    edges: BTreeSet<(usize, usize)>,
    provenance: BTreeMap<(usize, usize), RelationKind>,
}

impl DepGraph {
    /// Builds a graph directly from `(prior, posterior)` name pairs.
    /// Endpoints are added as nodes; self-loops are dropped.
    pub fn from_edges<'a, N, E>(nodes: N, edges: E) -> Self
    where
        N: IntoIterator<Item = &'a str>,
        E: IntoIterator<Item = (&'a str, &'a str)> + Clone,
    {
        let names = nodes
            .into_iter()
            .chain(edges.clone().into_iter().flat_map(|(a, b)| [a, b]))
            .map(str::to_string);
        let nodes = NodeTable::new(names);
        let mut graph = DepGraph {
            nodes,
            ..Default::default()
        };
        for (prior, posterior) in edges {
            let (a, b) = (
                graph.nodes.get(prior).unwrap(),
                graph.nodes.get(posterior).unwrap(),
            );
            if a != b {
                graph.edges.insert((a, b));
                graph
                    .provenance
                    .entry((a, b))
                    .or_insert(RelationKind::Depends);
            }
        }
        graph
    }

    pub fn node_count(&self) -> usize {
        self.nodes.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Node names in lexicographic order.
    pub fn nodes(&self) -> &[String] {
        &self.nodes.names
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.nodes.get(name)
    }

    /// `(prior, posterior)` pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| (self.nodes.names[a].as_str(), self.nodes.names[b].as_str()))
    }

    pub fn has_edge(&self, prior: &str, posterior: &str) -> bool {
        match (self.nodes.get(prior), self.nodes.get(posterior)) {
            (Some(a), Some(b)) => self.edges.contains(&(a, b)),
            _ => false,
        }
    }

    /// The relation kind that first produced the edge.
    pub fn provenance(&self, prior: &str, posterior: &str) -> Option<RelationKind> {
        let key = (self.nodes.get(prior)?, self.nodes.get(posterior)?);
        self.provenance.get(&key).copied()
    }

    /// Out-degree per node id (number of posteriors invoking the node).
    pub fn out_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0; self.node_count()];
        for &(a, _) in &self.edges {
            deg[a] += 1;
        }
        deg
    }

    /// In-degree per node id (number of priors the node requires).
    pub fn in_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0; self.node_count()];
        for &(_, b) in &self.edges {
            deg[b] += 1;
        }
        deg
    }

    /// Writes `prior<TAB>posterior` lines sorted lexicographically.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut pairs: Vec<(&str, &str)> = self.edges().collect();
        pairs.sort_unstable();
        for (a, b) in pairs {
            writeln!(out, "{a}\t{b}")?;
        }
        Ok(())
    }
}

/// Builds the dependency graph. Every package in `records` is a node, even
/// with no edges.
pub fn build_dependency_graph(
    records: &[PackageRecord],
    config: &GraphConfig,
) -> (DepGraph, BuildReport) {
    let nodes = NodeTable::new(records.iter().map(|r| r.name.clone()));
    let resolver = Resolver {
        nodes: &nodes,
        virtuals: resolve_virtual(records),
        policy: config.virtuals,
    };
    let mut report = BuildReport::default();
    let mut edges = BTreeSet::new();
    let mut provenance = BTreeMap::new();

    for record in records {
        let posterior = nodes.get(&record.name).expect("record names are nodes");
        for &kind in &config.relations {
            for clause in record.relations(kind) {
                for name in selected_names(clause, config.alternatives) {
                    for prior in resolver.resolve(name, &mut report) {
                        if prior == posterior {
                            report.self_loops += 1;
                        } else if edges.insert((prior, posterior)) {
                            provenance.insert((prior, posterior), kind);
                        } else {
                            report.duplicate_edges += 1;
                        }
                    }
                }
            }
        }
    }
    (
        DepGraph {
            nodes,
            edges,
            provenance,
        },
        report,
    )
}

/// Undirected graph of `Conflicts` relations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictGraph {
    nodes: NodeTable,
    /// Stored as `(min, max)` node ids.
    edges: BTreeSet<(usize, usize)>,
}

impl ConflictGraph {
    pub fn from_edges<'a, N, E>(nodes: N, edges: E) -> Self
    where
        N: IntoIterator<Item = &'a str>,
        E: IntoIterator<Item = (&'a str, &'a str)> + Clone,
    {
        let names = nodes
            .into_iter()
            .chain(edges.clone().into_iter().flat_map(|(a, b)| [a, b]))
            .map(str::to_string);
        let nodes = NodeTable::new(names);
        let mut graph = ConflictGraph {
            nodes,
            ..Default::default()
        };
        for (a, b) in edges {
            let (a, b) = (graph.nodes.get(a).unwrap(), graph.nodes.get(b).unwrap());
            if a != b {
                graph.edges.insert((a.min(b), a.max(b)));
            }
        }
        graph
    }

    pub fn node_count(&self) -> usize {
        self.nodes.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes.names
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| (self.nodes.names[a].as_str(), self.nodes.names[b].as_str()))
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.nodes.get(a), self.nodes.get(b)) {
            (Some(a), Some(b)) => self.edges.contains(&(a.min(b), a.max(b))),
            _ => false,
        }
    }

    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0; self.node_count()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }
}

/// Builds the conflicts graph. All alternatives of a conflicts clause
/// count; `config.alternatives` only applies to dependencies.
pub fn build_conflict_graph(
    records: &[PackageRecord],
    config: &GraphConfig,
) -> (ConflictGraph, BuildReport) {
    let nodes = NodeTable::new(records.iter().map(|r| r.name.clone()));
    let resolver = Resolver {
        nodes: &nodes,
        virtuals: resolve_virtual(records),
        policy: config.virtuals,
    };
    let mut report = BuildReport::default();
    let mut edges = BTreeSet::new();
    for record in records {
        let this = nodes.get(&record.name).expect("record names are nodes");
        for clause in &record.conflicts {
            for alt in &clause.alternatives {
                for other in resolver.resolve(&alt.name, &mut report) {
                    if other == this {
                        report.self_loops += 1;
                    } else if !edges.insert((this.min(other), this.max(other))) {
                        report.duplicate_edges += 1;
                    }
                }
            }
        }
    }
    (ConflictGraph { nodes, edges }, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deb822::parse_packages_str;

    fn records(text: &str) -> Vec<PackageRecord> {
        parse_packages_str(text).records
    }

    #[test]
    fn single_edge_orientation() {
        let recs = records("Package: a\nDepends: b\n\nPackage: b\n");
        let (g, report) = build_dependency_graph(&recs, &GraphConfig::default());
        assert!(g.has_edge("b", "a"));
        assert!(!g.has_edge("a", "b"));
        assert_eq!(g.edge_count(), 1);
        let b = g.node_id("b").unwrap();
        let a = g.node_id("a").unwrap();
        assert_eq!(g.out_degrees()[b], 1);
        assert_eq!(g.in_degrees()[a], 1);
        assert_eq!(report, BuildReport::default());
    }

    #[test]
    fn alternatives_policy() {
        let recs = records("Package: a\nDepends: b | c\n\nPackage: b\n\nPackage: c\n");
        let (first, _) = build_dependency_graph(&recs, &GraphConfig::default());
        assert_eq!(first.edges().collect::<Vec<_>>(), [("b", "a")]);
        let all_cfg = GraphConfig {
            alternatives: AlternativesPolicy::All,
            ..GraphConfig::default()
        };
        let (all, _) = build_dependency_graph(&recs, &all_cfg);
        assert_eq!(all.edges().collect::<Vec<_>>(), [("b", "a"), ("c", "a")]);
    }

    #[test]
    fn virtual_resolution() {
        let recs = records(
            "Package: exim\nProvides: mta\n\nPackage: postfix\nProvides: mta\n\nPackage: mutt\nDepends: mta\n",
        );
        let (g, report) = build_dependency_graph(&recs, &GraphConfig::default());
        assert!(g.has_edge("exim", "mutt"));
        assert!(g.has_edge("postfix", "mutt"));
        assert_eq!(report.virtual_resolved, 1);

        let drop_cfg = GraphConfig {
            virtuals: VirtualPolicy::Drop,
            ..GraphConfig::default()
        };
        let (g, report) = build_dependency_graph(&recs, &drop_cfg);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(report.virtual_dropped, 1);
    }

    #[test]
    fn self_and_dangling_reported() {
        let recs =
            records("Package: a\nDepends: a, ghost, ghost (>= 1)\nPre-Depends: b\n\nPackage: b\n");
        let (g, report) = build_dependency_graph(&recs, &GraphConfig::default());
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.provenance("b", "a"), Some(RelationKind::PreDepends));
        assert_eq!(report.self_loops, 1);
        assert_eq!(report.dangling.get("ghost"), Some(&2));
        assert_eq!(report.dangling_count(), 2);
    }

    #[test]
    fn relation_set_is_configurable() {
        let recs = records("Package: a\nRecommends: b\nDepends: c\n\nPackage: b\n\nPackage: c\n");
        let (g, _) = build_dependency_graph(&recs, &GraphConfig::default());
        assert!(!g.has_edge("b", "a"));
        let mut cfg = GraphConfig::default();
        cfg.relations.insert(RelationKind::Recommends);
        let (g, _) = build_dependency_graph(&recs, &cfg);
        assert!(g.has_edge("b", "a"));
        assert!(g.has_edge("c", "a"));
    }

    #[test]
    fn isolated_nodes_kept() {
        let recs = records("Package: a\n\nPackage: b\n\nPackage: c\n");
        let (g, _) = build_dependency_graph(&recs, &GraphConfig::default());
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn resolve_virtual_examples() {
        assert!(resolve_virtual(&records("Package: a\n")).is_empty());
        let one = resolve_virtual(&records("Package: a\nProvides: v\n"));
        assert_eq!(one["v"], ["a"]);
        let two = resolve_virtual(&records(
            "Package: b\nProvides: v\n\nPackage: a\nProvides: v\n",
        ));
        assert_eq!(two["v"], ["a", "b"]);
    }

    #[test]
    fn conflict_graph_examples() {
        let recs = records("Package: a\nConflicts: b\n\nPackage: b\n");
        let (g, _) = build_conflict_graph(&recs, &GraphConfig::default());
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degrees(), [1, 1]);

        let recs = records("Package: a\nConflicts: b\n\nPackage: b\nConflicts: a\n");
        let (g, report) = build_conflict_graph(&recs, &GraphConfig::default());
        assert_eq!(g.edge_count(), 1);
        assert_eq!(report.duplicate_edges, 1);
    }

    #[test]
    fn conflict_with_own_virtual_skips_self() {
        let recs = records(
            "Package: exim\nProvides: mta\nConflicts: mta\n\nPackage: postfix\nProvides: mta\nConflicts: mta\n",
        );
        let (g, report) = build_conflict_graph(&recs, &GraphConfig::default());
        assert_eq!(g.edges().collect::<Vec<_>>(), [("exim", "postfix")]);
        assert_eq!(report.self_loops, 2);
    }

    #[test]
    fn edge_list_export_sorted() {
        let g = DepGraph::from_edges([], [("z", "a"), ("b", "c"), ("b", "a")]);
        let mut out = Vec::new();
        g.write_edge_list(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "b\ta\nb\tc\nz\ta\n");
    }
}

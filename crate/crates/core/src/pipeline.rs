//! Index file to graphs in one call, as used by the CLI and the release
//! reports.

use std::path::{Path, PathBuf};

use crate::deb822::{parse_packages, ParseOutput};
use crate::degree::NetworkSummary;
use crate::graph::{
    build_conflict_graph, build_dependency_graph, BuildReport, ConflictGraph, DepGraph, GraphConfig,
};
use crate::ingestion::{open_index_file, IngestError};

/// Parses a local index file, gzip-compressed or plain.
pub fn load_index(path: &Path) -> Result<ParseOutput, IngestError> {
    let stream = open_index_file(path)?;
    parse_packages(stream).map_err(|e| IngestError::from_stream_error(path, e))
}

#[derive(Debug, Clone)]
pub struct ReleaseAnalysis {
    pub parsed: ParseOutput,
    pub graph: DepGraph,
    pub build: BuildReport,
    pub conflicts: ConflictGraph,
    pub summary: NetworkSummary,
}

pub fn analyze(parsed: ParseOutput, cfg: &GraphConfig) -> ReleaseAnalysis {
    let (graph, build) = build_dependency_graph(&parsed.records, cfg);
    let (conflicts, _) = build_conflict_graph(&parsed.records, cfg);
    let summary = NetworkSummary::of(&graph);
    ReleaseAnalysis {
        parsed,
        graph,
        build,
        conflicts,
        summary,
    }
}

/// Looks for `<release>_<component>_<arch>.Packages.gz` (or the plain
/// `.Packages` variant) in `dir`, the layout the fetch cache uses.
pub fn find_index(dir: &Path, release: &str, component: &str, arch: &str) -> Option<PathBuf> {
    ["Packages.gz", "Packages"]
        .iter()
        .map(|ext| dir.join(format!("{release}_{component}_{arch}.{ext}")))
        .find(|p| p.is_file())
}

// Negated comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod manifest;
mod report;

use std::fmt;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use depnet_core::degree::{
    conflict_histogram, degree_histogram, max_conflict_degree, max_degree, read_points_csv,
};
use depnet_core::dynamics::{eval_phi_xt, n_out_limit, n_out_series, EvolutionConfig};
use depnet_core::fit::{fit, fit_points, FitConfig, FitResult};
use depnet_core::ingestion::{fetch_index, FetchOptions, IngestError, ReleaseSpec};
use depnet_core::model::{published, ModelParams};
use depnet_core::pipeline::{analyze, load_index, ReleaseAnalysis};
use depnet_core::{DegreeHistogram, Direction, GraphConfig};

use args::{Cli, Command, DegreesArgs, EvolveArgs, FetchArgs, FitArgs, GraphArgs, ReportArgs};
use manifest::{sidecar, RunManifest};
use report::{Diagnostics, FitReport};

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    const IO: u8 = 1;
    const INGEST: u8 = 2;
    const PARSE: u8 = 3;
    const EMPTY: u8 = 4;
    const FIT: u8 = 5;

    fn new(code: u8, message: impl fmt::Display) -> Self {
        CliError {
            code,
            message: message.to_string(),
        }
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        CliError::new(Self::IO, format!("{}: {err}", path.display()))
    }

    pub fn ingest(err: IngestError) -> Self {
        CliError::new(Self::INGEST, err)
    }

    pub fn parse(err: impl fmt::Display) -> Self {
        CliError::new(Self::PARSE, err)
    }

    pub fn fit(err: impl fmt::Display) -> Self {
        CliError::new(Self::FIT, err)
    }
}

fn default_cache_dir() -> PathBuf {
    let base = std::env::var_os("XDG_CACHE_HOME")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache")))
        .unwrap_or_else(std::env::temp_dir);
    base.join("depnet")
}

fn graph_config(g: &GraphArgs) -> GraphConfig {
    GraphConfig {
        relations: g.relations.iter().map(|&r| r.into()).collect(),
        alternatives: g.alternatives.into(),
        virtuals: g.virtuals.into(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn cmd_fetch(cli: &Cli, a: &FetchArgs) -> Result<(), CliError> {
    let spec = ReleaseSpec::new(&a.release, &a.arch)
        .and_then(|s| s.with_component(&a.component))
        .and_then(|s| s.with_mirror(&cli.mirror))
        .map_err(CliError::ingest)?;
    let cache = cli.cache_dir.clone().unwrap_or_else(default_cache_dir);
    let opts = FetchOptions {
        force_refresh: a.force,
        offline: a.offline,
        expected_sha256: a.sha256.clone(),
        ..FetchOptions::default()
    };
    let index = fetch_index(&spec, &cache, &opts).map_err(CliError::ingest)?;
    println!("{}", index.local_path.display());
    Ok(())
}

fn histogram_for(a: &ReleaseAnalysis, direction: Direction) -> DegreeHistogram {
    match direction {
        Direction::Conflict => conflict_histogram(&a.conflicts),
        d => degree_histogram(&a.graph, d),
    }
}

fn cmd_degrees(a: &DegreesArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(None);
    let parsed = load_index(&a.input).map_err(CliError::parse)?;
    manifest.add_input(&a.input)?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    let analysis = analyze(parsed, &graph_config(&a.graph));
    let direction: Direction = a.direction.into();
    let h = histogram_for(&analysis, direction);
    if h.is_empty() {
        return Err(CliError::new(
            CliError::EMPTY,
            format!("{}: no {direction} links in the graph", a.input.display()),
        ));
    }
    write_file(&a.output, h.to_csv_string().as_bytes())?;
    manifest.write_beside(&a.output)?;

    let (nodes, edges, top) = match direction {
        Direction::Conflict => (
            analysis.conflicts.node_count(),
            analysis.conflicts.edge_count(),
            max_conflict_degree(&analysis.conflicts),
        ),
        d => (
            analysis.summary.nodes,
            analysis.summary.edges,
            max_degree(&analysis.graph, d),
        ),
    };
    println!("nodes={nodes}");
    println!("edges={edges}");
    if let Some((name, x_m)) = top {
        println!("x_m={x_m}");
        println!("x_m_package={name}");
    }
    println!("terminal_nodes={}", analysis.summary.terminal_nodes);
    println!("contributing_nodes={}", analysis.summary.contributing_nodes);
    Ok(())
}

fn fit_config(a: &FitArgs) -> FitConfig {
    let mut cfg = FitConfig {
        seed: a.seed,
        multistart_count: a.multistart,
        ..FitConfig::default()
    };
    let p = &a.pins;
    cfg.fixed.alpha = p.alpha;
    cfg.fixed.mu = if p.mu_free {
        None
    } else {
        Some(p.mu.unwrap_or(-1.0))
    };
    cfg.fixed.eta = p.eta;
    cfg.fixed.lambda = p.lambda;
    cfg.fixed.c = p.c;
    if a.x_min.is_some() || a.x_max.is_some() {
        cfg.domain = Some((
            a.x_min.unwrap_or(f64::NEG_INFINITY),
            a.x_max.unwrap_or(f64::INFINITY),
        ));
    }
    cfg
}

fn write_fit_report(
    output: &Path,
    input: &Path,
    seed: u64,
    result: &FitResult,
    manifest: &RunManifest,
) -> Result<String, CliError> {
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let digest = manifest.digest();
    let report = FitReport {
        manifest_digest: &digest,
        input: input.display().to_string(),
        seed,
        result,
        diagnostics: Diagnostics::of(result),
    };
    report.write(output)?;
    Ok(report.to_text())
}

fn cmd_fit(a: &FitArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(Some(a.seed));
    let file = fs::File::open(&a.input)
        .map_err(|e| CliError::parse(format!("{}: {e}", a.input.display())))?;
    let points = read_points_csv(BufReader::new(file))
        .map_err(|e| CliError::parse(format!("{}: {e}", a.input.display())))?;
    manifest.add_input(&a.input)?;
    let cfg = fit_config(a);
    let result = fit_points(&points, &cfg).map_err(CliError::fit)?;
    let text = write_fit_report(&a.output, &a.input, a.seed, &result, &manifest)?;
    manifest.write_beside(&a.output)?;
    if cfg.mu_free() {
        eprintln!("note: mu was fitted freely; this mode is experimental");
    }
    print!("{text}");
    Ok(())
}

fn preset(name: &str) -> Option<ModelParams> {
    published::ALL
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| *p)
}

fn evolve_params(a: &EvolveArgs) -> Result<ModelParams, CliError> {
    let base = match &a.preset {
        Some(name) => preset(name).ok_or_else(|| {
            let names: Vec<&str> = published::ALL.iter().map(|(n, _)| *n).collect();
            CliError::fit(format!(
                "unknown preset {name:?}; known: {}",
                names.join(", ")
            ))
        })?,
        None => {
            let missing: Vec<&str> = [("eta", a.eta), ("lambda", a.lambda), ("c", a.c)]
                .iter()
                .filter(|(_, v)| v.is_none())
                .map(|(n, _)| *n)
                .collect();
            if !missing.is_empty() {
                return Err(CliError::fit(format!(
                    "without --preset, --{} must be given",
                    missing.join(", --")
                )));
            }
            ModelParams::zipf(0.0, 0.0, 1.0)
        }
    };
    Ok(ModelParams {
        alpha: a.alpha.unwrap_or(base.alpha),
        mu: -1.0,
        eta: a.eta.unwrap_or(base.eta),
        lambda: a.lambda.unwrap_or(base.lambda),
        c: a.c.unwrap_or(base.c),
    })
}

fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::fit(format!("--t-range {spec:?}: {e}")))?;
    let [start, stop, step] = parts[..] else {
        return Err(CliError::fit(format!(
            "--t-range {spec:?}: expected start:stop:step"
        )));
    };
    if !(step > 0.0) || !(stop >= start) {
        return Err(CliError::fit(format!(
            "--t-range {spec:?}: need step > 0 and stop >= start"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

fn cmd_evolve(a: &EvolveArgs) -> Result<(), CliError> {
    let params = evolve_params(a)?;
    let cfg = EvolutionConfig::new(params, a.tau, a.x_m).map_err(CliError::fit)?;
    let ts = match (&a.t_range, a.t.is_empty()) {
        (Some(spec), _) => parse_range(spec)?,
        (None, false) => a.t.clone(),
        (None, true) => (0..=5).map(f64::from).collect(),
    };
    let rows = n_out_series(&ts, &cfg).map_err(CliError::fit)?;
    let mut csv = String::from("t,n_out_closed,n_out_quadrature\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            r.t, r.n_out_closed, r.n_out_quadrature
        ));
    }
    write_file(&a.output, csv.as_bytes())?;
    let manifest = RunManifest::new(None);
    manifest.write_beside(&a.output)?;

    if !a.slice_x.is_empty() {
        let path = a
            .slices_output
            .clone()
            .unwrap_or_else(|| sidecar(&a.output, "slices.csv"));
        let mut slices = String::from("x,t,phi\n");
        for &x in &a.slice_x {
            for &t in &ts {
                let phi = eval_phi_xt(x, t, &cfg).map_err(CliError::fit)?;
                slices.push_str(&format!("{x},{t},{phi}\n"));
            }
        }
        write_file(&path, slices.as_bytes())?;
        manifest.write_beside(&path)?;
    }
    let limit = n_out_limit(&cfg).map_err(CliError::fit)?;
    println!("params={params}");
    println!("n_out_limit={limit}");
    Ok(())
}

#[derive(Debug, Default)]
struct ReleaseRow {
    release: String,
    error: Option<String>,
    packages: usize,
    nodes: usize,
    edges: usize,
    terminal: usize,
    contributing: usize,
    x_m: u64,
    x_m_package: String,
    out_params: Option<ModelParams>,
    in_params: Option<ModelParams>,
    n_out_limit: Option<f64>,
}

fn analyze_release(
    release: &str,
    index: &Path,
    dir: &Path,
    seed: u64,
    manifest: &RunManifest,
) -> Result<ReleaseRow, CliError> {
    let parsed = load_index(index).map_err(CliError::parse)?;
    let packages = parsed.records.len();
    let a = analyze(parsed, &GraphConfig::default());
    let (x_m_package, x_m) = max_degree(&a.graph, Direction::Out)
        .filter(|(_, d)| *d > 0)
        .ok_or_else(|| CliError::new(CliError::EMPTY, format!("{release}: graph has no links")))?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;

    let zipf = FitConfig {
        seed,
        ..FitConfig::zipf()
    };
    let mut fitted = Vec::new();
    for direction in [Direction::Out, Direction::In] {
        let h = degree_histogram(&a.graph, direction);
        let csv = dir.join(format!("{direction}.csv"));
        write_file(&csv, h.to_csv_string().as_bytes())?;
        let result =
            fit(&h, &zipf).map_err(|e| CliError::fit(format!("{release} {direction}: {e}")))?;
        write_fit_report(
            &dir.join(format!("fit_{direction}.txt")),
            &csv,
            seed,
            &result,
            manifest,
        )?;
        fitted.push(result.params);
    }
    let out = fitted[0];
    let n_out = EvolutionConfig::new(out, 1.0, x_m as f64)
        .and_then(|cfg| n_out_limit(&cfg))
        .ok();
    Ok(ReleaseRow {
        release: release.to_string(),
        error: None,
        packages,
        nodes: a.summary.nodes,
        edges: a.summary.edges,
        terminal: a.summary.terminal_nodes,
        contributing: a.summary.contributing_nodes,
        x_m,
        x_m_package,
        out_params: Some(out),
        in_params: Some(fitted[1]),
        n_out_limit: n_out,
    })
}

fn release_table(rows: &[ReleaseRow]) -> String {
    let mut s = String::from(
        "release,status,packages,nodes,edges,terminal_nodes,contributing_nodes,x_m,x_m_package,\
         out_eta,out_lambda,out_c,n_out_limit,in_eta,in_lambda,in_c\n",
    );
    let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        if r.error.is_some() {
            s.push_str(&format!("{},failed,,,,,,,,,,,,,,\n", r.release));
            continue;
        }
        s.push_str(&format!(
            "{},ok,{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.release,
            r.packages,
            r.nodes,
            r.edges,
            r.terminal,
            r.contributing,
            r.x_m,
            r.x_m_package,
            num(r.out_params.map(|p| p.eta)),
            num(r.out_params.map(|p| p.lambda)),
            num(r.out_params.map(|p| p.c)),
            num(r.n_out_limit),
            num(r.in_params.map(|p| p.eta)),
            num(r.in_params.map(|p| p.lambda)),
            num(r.in_params.map(|p| p.c)),
        ));
    }
    s
}

fn cmd_report(cli: &Cli, a: &ReportArgs) -> Result<(), CliError> {
    let cache = cli.cache_dir.clone().unwrap_or_else(default_cache_dir);
    let opts = FetchOptions {
        offline: a.offline,
        ..FetchOptions::default()
    };
    // Stage 1: obtain every index in parallel.
    let fetched: Vec<Result<PathBuf, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = a
            .releases
            .iter()
            .map(|release| {
                let (cache, opts) = (&cache, &opts);
                s.spawn(move || {
                    let spec = ReleaseSpec::new(release, &a.arch)
                        .and_then(|s| s.with_component(&a.component))
                        .and_then(|s| s.with_mirror(&cli.mirror))
                        .map_err(CliError::ingest)?;
                    fetch_index(&spec, cache, opts)
                        .map(|c| c.local_path)
                        .map_err(CliError::ingest)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fetch worker"))
            .collect()
    });

    let mut manifest = RunManifest::new(Some(a.seed));
    for path in fetched.iter().flatten() {
        manifest.add_input(path)?;
    }
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;

    // Stage 2: analyse in parallel; each worker writes only its own directory.
    let rows: Vec<ReleaseRow> = std::thread::scope(|s| {
        let handles: Vec<_> = a
            .releases
            .iter()
            .zip(&fetched)
            .map(|(release, index)| {
                let manifest = &manifest;
                s.spawn(move || {
                    let result = match index {
                        Ok(path) => analyze_release(
                            release,
                            path,
                            &a.out_dir.join(release),
                            a.seed,
                            manifest,
                        ),
                        Err(e) => Err(CliError::new(e.code, &e.message)),
                    };
                    result.unwrap_or_else(|e| ReleaseRow {
                        release: release.clone(),
                        error: Some(e.message),
                        ..ReleaseRow::default()
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("release worker"))
            .collect()
    });

    let table = a.out_dir.join("releases.csv");
    write_file(&table, release_table(&rows).as_bytes())?;
    manifest.write_beside(&table)?;

    let mut stdout = io::stdout().lock();
    for r in &rows {
        let _ = match &r.error {
            Some(e) => writeln!(stdout, "{}: failed: {e}", r.release),
            None => writeln!(
                stdout,
                "{}: ok nodes={} contributing={} terminal={} x_m={}",
                r.release, r.nodes, r.contributing, r.terminal, r.x_m
            ),
        };
    }
    if rows.iter().all(|r| r.error.is_some()) {
        return Err(CliError::new(CliError::INGEST, "every release failed"));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fetch(a) => cmd_fetch(cli, a),
        Command::Degrees(a) => cmd_degrees(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::Report(a) => cmd_report(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("depnet: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

//! Graph bundle directories.
//!
//! A bundle is a directory with three required files and one optional one:
//!
//! - `edges.tsv` — one `u<TAB>v` pair per line, 0-indexed
//! - `features.csv` — n rows of comma-separated 64-bit floats
//! - `labels.csv` — n lines, one integer class id each
//! - `meta.json` — optional `{n, d0, C, name}`, validated against the data
//!
//! Duplicate and mirrored edge listings collapse to one undirected edge.
//! Self-loops are rejected unless explicitly permitted. All parse errors
//! name the file and line.

use std::path::Path;

use ndarray::Array2;
use serde::Deserialize;

use gftbench_core::Graph;

use crate::error::{HarnessError, Result};

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const META_FILE: &str = "meta.json";

/// One edge with the 1-based line it came from, so later validation can
/// point back at the offending input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParsedEdge {
    pub u: usize,
    pub v: usize,
    pub line: usize,
}

pub fn parse_edges(text: &str, source: &str) -> Result<Vec<ParsedEdge>> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(HarnessError::parse(
                source,
                i + 1,
                format!("expected two endpoints, got '{line}'"),
            ));
        };
        let u: usize = a
            .parse()
            .map_err(|_| HarnessError::parse(source, i + 1, format!("bad node index '{a}'")))?;
        let v: usize = b
            .parse()
            .map_err(|_| HarnessError::parse(source, i + 1, format!("bad node index '{b}'")))?;
        edges.push(ParsedEdge { u, v, line: i + 1 });
    }
    Ok(edges)
}

pub fn parse_features(text: &str, source: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let value: f64 = field.trim().parse().map_err(|_| {
                HarnessError::parse(source, i + 1, format!("bad float '{}'", field.trim()))
            })?;
            if !value.is_finite() {
                return Err(HarnessError::parse(source, i + 1, "non-finite feature"));
            }
            row.push(value);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(HarnessError::parse(
                    source,
                    i + 1,
                    format!("row has {} columns, expected {w}", row.len()),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    let n = rows.len();
    let d = width.unwrap_or(0);
    if n == 0 || d == 0 {
        return Err(HarnessError::parse(source, 1, "no feature data"));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((n, d), flat).expect("validated row widths"))
}

pub fn parse_labels(text: &str, source: &str) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let value: usize = line
            .parse()
            .map_err(|_| HarnessError::parse(source, i + 1, format!("bad class id '{line}'")))?;
        labels.push(value);
    }
    Ok(labels)
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMeta {
    pub n: Option<usize>,
    pub d0: Option<usize>,
    #[serde(alias = "C")]
    pub c: Option<usize>,
    pub name: Option<String>,
}

pub fn parse_meta(text: &str, source: &str) -> Result<BundleMeta> {
    serde_json::from_str(text).map_err(|e| HarnessError::parse(source, e.line(), e.to_string()))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BundleOptions {
    pub allow_self_loops: bool,
}

pub fn load_graph_bundle(dir: &Path) -> Result<Graph> {
    load_graph_bundle_with(dir, &BundleOptions::default())
}

pub fn load_graph_bundle_with(dir: &Path, opts: &BundleOptions) -> Result<Graph> {
    let read = |name: &str| -> Result<String> {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|e| HarnessError::io(path, e))
    };

    let features = parse_features(&read(FEATURES_FILE)?, FEATURES_FILE)?;
    let labels = parse_labels(&read(LABELS_FILE)?, LABELS_FILE)?;
    let parsed = parse_edges(&read(EDGES_FILE)?, EDGES_FILE)?;

    let n = features.nrows();
    if labels.len() != n {
        return Err(HarnessError::parse(
            LABELS_FILE,
            labels.len().min(n) + 1,
            format!("{} labels for {n} feature rows", labels.len()),
        ));
    }
    let mut edges = Vec::with_capacity(parsed.len());
    for e in &parsed {
        if e.u >= n || e.v >= n {
            return Err(HarnessError::parse(
                EDGES_FILE,
                e.line,
                format!("edge ({}, {}) outside [0, {n})", e.u, e.v),
            ));
        }
        if e.u == e.v && !opts.allow_self_loops {
            return Err(HarnessError::parse(
                EDGES_FILE,
                e.line,
                format!("self-loop at node {}", e.u),
            ));
        }
        edges.push((e.u, e.v));
    }

    let graph = if opts.allow_self_loops {
        Graph::new_with_self_loops(n, edges, features, labels)?
    } else {
        Graph::new(n, edges, features, labels)?
    };

    let meta_path = dir.join(META_FILE);
    if meta_path.exists() {
        let meta = parse_meta(
            &std::fs::read_to_string(&meta_path).map_err(|e| HarnessError::io(&meta_path, e))?,
            META_FILE,
        )?;
        validate_meta(&meta, &graph)?;
    }
    Ok(graph)
}

fn validate_meta(meta: &BundleMeta, graph: &Graph) -> Result<()> {
    if let Some(n) = meta.n {
        if n != graph.num_nodes() {
            return Err(HarnessError::Meta(format!(
                "meta says n={n}, data has {}",
                graph.num_nodes()
            )));
        }
    }
    if let Some(d0) = meta.d0 {
        if d0 != graph.feature_dim() {
            return Err(HarnessError::Meta(format!(
                "meta says d0={d0}, data has {}",
                graph.feature_dim()
            )));
        }
    }
    if let Some(c) = meta.c {
        if graph.num_classes() > c {
            return Err(HarnessError::Meta(format!(
                "meta says C={c}, labels reach {}",
                graph.num_classes() - 1
            )));
        }
    }
    Ok(())
}

/// Write a graph back out in bundle format (used to persist generated
/// synthetic graphs alongside results).
pub fn write_graph_bundle(dir: &Path, graph: &Graph, name: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let write = |file: &str, content: String| -> Result<()> {
        let path = dir.join(file);
        std::fs::write(&path, content).map_err(|e| HarnessError::io(path, e))
    };

    let mut edges = String::new();
    for &(u, v) in graph.edges() {
        edges.push_str(&format!("{u}\t{v}\n"));
    }
    write(EDGES_FILE, edges)?;

    let mut features = String::new();
    for row in graph.features().rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        features.push_str(&fields.join(","));
        features.push('\n');
    }
    write(FEATURES_FILE, features)?;

    let mut labels = String::new();
    for &l in graph.labels() {
        labels.push_str(&format!("{l}\n"));
    }
    write(LABELS_FILE, labels)?;

    write(
        META_FILE,
        format!(
            "{{\"n\": {}, \"d0\": {}, \"C\": {}, \"name\": \"{name}\"}}\n",
            graph.num_nodes(),
            graph.feature_dim(),
            graph.num_classes()
        ),
    )
}

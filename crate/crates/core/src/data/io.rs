//! Plain-text dataset directories.
//!
//! ```text
//! meta.json     {"num_nodes": n, "num_features": d, "num_classes": K}
//! features.tsv  n lines, d tab-separated decimal floats
//! labels.tsv    n lines, one integer in [0, K)
//! edges.tsv     one edge per line, "u\tv", 0-based
//! split.json    {"train": [ids], "val": [ids], "test": [ids]}
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gssl_autodiff::Tensor;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::graph::{EdgeCleanup, SparseGraph};
use crate::error::{Error, Result};

pub const META_FILE: &str = "meta.json";
pub const FEATURES_FILE: &str = "features.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const EDGES_FILE: &str = "edges.tsv";
pub const SPLIT_FILE: &str = "split.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Counts of input irregularities repaired while loading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub edge_lines: usize,
    pub cleanup: EdgeCleanup,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Error::load(path, e.line(), e.to_string()))
}

/// Non-empty lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<(Dataset, LoadReport)> {
    let dir = dir.as_ref();
    let meta: Meta = read_json(&dir.join(META_FILE))?;
    let n = meta.num_nodes;

    let path = dir.join(FEATURES_FILE);
    let text = read(&path)?;
    let mut data = Vec::with_capacity(n * meta.num_features);
    let mut rows = 0;
    for (line, l) in data_lines(&text) {
        let before = data.len();
        for tok in l.split('\t') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| Error::load(&path, line, format!("invalid float {tok:?}")))?;
            data.push(v);
        }
        if data.len() - before != meta.num_features {
            return Err(Error::load(
                &path,
                line,
                format!("expected {} values, found {}", meta.num_features, data.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::load(&path, rows, format!("expected {n} rows, found {rows}")));
    }
    let features = Tensor::from_vec(n, meta.num_features, data)?;

    let path = dir.join(LABELS_FILE);
    let text = read(&path)?;
    let mut labels = Vec::with_capacity(n);
    for (line, l) in data_lines(&text) {
        let y: usize = l
            .trim()
            .parse()
            .map_err(|_| Error::load(&path, line, format!("invalid label {l:?}")))?;
        if y >= meta.num_classes {
            return Err(Error::load(
                &path,
                line,
                format!("label {y} out of range for {} classes", meta.num_classes),
            ));
        }
        labels.push(y);
    }
    if labels.len() != n {
        return Err(Error::load(
            &path,
            labels.len(),
            format!("expected {n} labels, found {}", labels.len()),
        ));
    }

    let path = dir.join(EDGES_FILE);
    let text = read(&path)?;
    let mut pairs = Vec::new();
    for (line, l) in data_lines(&text) {
        let mut it = l.split('\t');
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::load(&path, line, "expected two tab-separated node ids"));
        };
        let parse = |t: &str| -> Result<usize> {
            let v: usize = t
                .trim()
                .parse()
                .map_err(|_| Error::load(&path, line, format!("invalid node id {t:?}")))?;
            if v >= n {
                return Err(Error::load(&path, line, format!("node id {v} out of range (n = {n})")));
            }
            Ok(v)
        };
        pairs.push((parse(a)?, parse(b)?));
    }
    let edge_lines = pairs.len();
    let (graph, cleanup) = SparseGraph::from_pairs(n, pairs);
    if cleanup.self_loops > 0 {
        log::warn!("{}: dropped {} self-loops", path.display(), cleanup.self_loops);
    }

    let path = dir.join(SPLIT_FILE);
    let split: Split = read_json(&path)?;
    let ds = Dataset::new(
        features,
        labels,
        meta.num_classes,
        graph,
        split.train,
        split.val,
        split.test,
    )
    .map_err(|e| match e {
        Error::Dataset(msg) => Error::load(&path, 0, msg),
        other => other,
    })?;
    Ok((ds, LoadReport { edge_lines, cleanup }))
}

fn create(path: PathBuf) -> Result<BufWriter<fs::File>> {
    fs::File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `ds` in the directory format. Floats use the shortest
/// representation that parses back to the same `f64`.
pub fn save_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |e| Error::io(p, e)
    };

    let meta = Meta {
        num_nodes: ds.num_nodes(),
        num_features: ds.num_features(),
        num_classes: ds.num_classes,
    };
    let path = dir.join(META_FILE);
    fs::write(&path, serde_json::to_string(&meta)? + "\n").map_err(io(&path))?;

    let path = dir.join(FEATURES_FILE);
    let mut w = create(path.clone())?;
    for i in 0..ds.num_nodes() {
        let line: Vec<String> = ds.features.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join("\t")).map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(LABELS_FILE);
    let mut w = create(path.clone())?;
    for y in &ds.labels {
        writeln!(w, "{y}").map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(EDGES_FILE);
    let mut w = create(path.clone())?;
    for (u, v) in ds.graph.edges() {
        writeln!(w, "{u}\t{v}").map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let split = Split {
        train: ds.train.clone(),
        val: ds.val.clone(),
        test: ds.test.clone(),
    };
    let path = dir.join(SPLIT_FILE);
    fs::write(&path, serde_json::to_string(&split)? + "\n").map_err(io(&path))?;
    Ok(())
}

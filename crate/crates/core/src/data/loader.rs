//! Dataset files.
//!
//! Two layouts are read:
//!
//! * `<name>.content` / `<name>.cites`: one node per content line
//!   (`id  f_1 … f_d  class`), one citation per cites line (`cited  citing`).
//!   Citations naming an id absent from the content file are dropped.
//! * Native TSV: `edges.tsv` (`i  j` over dense ids), `features.tsv`
//!   (header `n d`, then n rows) or `features.bin`, and optional
//!   `labels.tsv` (`node  class`).
//!
//! `features.bin` is the 8-byte magic `AGEFEAT1`, then `n` and `d` as
//! little-endian u64, then `n·d` little-endian f64 in row-major order.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{AgeError, Result};
use crate::graph::{build_graph, Graph};

pub const FEATURE_MAGIC: &[u8; 8] = b"AGEFEAT1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Binary,
    Tfidf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    ContentCites,
    Tsv,
}

/// Where a dataset lives and how to read it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub format: DatasetFormat,
    pub edge_path: PathBuf,
    pub feature_path: PathBuf,
    /// For `ContentCites` the labels sit in the content file.
    pub label_path: Option<PathBuf>,
    pub feature_kind: FeatureKind,
}

impl DatasetSpec {
    pub fn content_cites(name: &str, dir: &Path) -> Self {
        let content = dir.join(format!("{name}.content"));
        DatasetSpec {
            name: name.to_string(),
            format: DatasetFormat::ContentCites,
            edge_path: dir.join(format!("{name}.cites")),
            feature_path: content.clone(),
            label_path: Some(content),
            feature_kind: FeatureKind::Binary,
        }
    }

    /// Native layout; prefers `features.bin` over `features.tsv` when both exist.
    pub fn tsv(name: &str, dir: &Path) -> Self {
        let bin = dir.join("features.bin");
        let labels = dir.join("labels.tsv");
        DatasetSpec {
            name: name.to_string(),
            format: DatasetFormat::Tsv,
            edge_path: dir.join("edges.tsv"),
            feature_path: if bin.exists() { bin } else { dir.join("features.tsv") },
            label_path: labels.exists().then_some(labels),
            feature_kind: FeatureKind::Tfidf,
        }
    }

    /// Finds `name` under `root`, trying `root/name/name.content`,
    /// `root/name.content` and `root/name/edges.tsv` in that order.
    pub fn locate(name: &str, root: &Path) -> Result<Self> {
        for dir in [root.join(name), root.to_path_buf()] {
            if dir.join(format!("{name}.content")).is_file() {
                return Ok(Self::content_cites(name, &dir));
            }
        }
        let dir = root.join(name);
        if dir.join("edges.tsv").is_file() {
            return Ok(Self::tsv(name, &dir));
        }
        Err(AgeError::Input(format!(
            "dataset '{name}' not found under {}",
            root.display()
        )))
    }

    fn check_paths(&self) -> Result<()> {
        let mut paths = vec![&self.edge_path, &self.feature_path];
        paths.extend(self.label_path.as_ref());
        for p in paths {
            if !p.is_file() {
                return Err(AgeError::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                ));
            }
        }
        Ok(())
    }
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Graph> {
    spec.check_paths()?;
    let g = match spec.format {
        DatasetFormat::ContentCites => load_content_cites(spec)?,
        DatasetFormat::Tsv => load_tsv(spec)?,
    };
    log::info!(
        "{}: {} nodes, {} edges, {} features, {} classes",
        spec.name,
        g.node_count(),
        g.edge_count(),
        g.feature_dim(),
        g.class_count().unwrap_or(0)
    );
    Ok(g)
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>> + '_> {
    let file = File::open(path).map_err(|e| AgeError::io(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(move |(i, line)| line.map(|l| (i + 1, l)).map_err(|e| AgeError::io(path, e)))
        .filter(|r| {
            r.as_ref()
                .map_or(true, |(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        }))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> AgeError {
    AgeError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("'{tok}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("'{tok}' is not finite")));
    }
    Ok(v)
}

fn parse_index(path: &Path, line: usize, tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("'{tok}' is not a node index")))
}

/// Dense class ids: numeric order when every name is an integer, else lexical.
fn class_ids(names: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut distinct: Vec<String> = names.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.iter().all(|s| s.parse::<i64>().is_ok()) {
        distinct.sort_by_key(|s| s.parse::<i64>().expect("checked above"));
    }
    let index: HashMap<&str, usize> = distinct.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let ids = names.iter().map(|s| index[s.as_str()]).collect();
    (ids, distinct)
}

fn assemble(edges: &[(usize, usize)], features: Array2<f64>, names: Option<Vec<String>>) -> Result<Graph> {
    match names {
        None => build_graph(edges, features, None),
        Some(names) => {
            let (ids, classes) = class_ids(&names);
            build_graph(edges, features, Some(ids))?.with_class_names(classes)
        }
    }
}

fn load_content_cites(spec: &DatasetSpec) -> Result<Graph> {
    let path = &spec.feature_path;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut classes = Vec::new();
    let mut d = None;
    for item in open_lines(path)? {
        let (line, text) = item?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(parse_err(path, line, "expected id, features and class"));
        }
        let width = toks.len() - 2;
        match d {
            None => d = Some(width),
            Some(w) if w != width => {
                return Err(parse_err(path, line, format!("{width} features, expected {w}")));
            }
            _ => {}
        }
        if ids.insert(toks[0].to_string(), classes.len()).is_some() {
            return Err(parse_err(path, line, format!("duplicate node id '{}'", toks[0])));
        }
        for tok in &toks[1..toks.len() - 1] {
            rows.push(parse_f64(path, line, tok)?);
        }
        classes.push(toks[toks.len() - 1].to_string());
    }
    let n = classes.len();
    let d = d.ok_or_else(|| parse_err(path, 0, "no nodes"))?;
    let features = Array2::from_shape_vec((n, d), rows).expect("row widths checked");

    let mut edges = Vec::new();
    let mut dangling = 0usize;
    for item in open_lines(&spec.edge_path)? {
        let (line, text) = item?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(&spec.edge_path, line, "expected two node ids"));
        }
        match (ids.get(toks[0]), ids.get(toks[1])) {
            (Some(&a), Some(&b)) => edges.push((a, b)),
            _ => dangling += 1,
        }
    }
    if dangling > 0 {
        log::warn!(
            "{}: dropped {dangling} citations with an endpoint missing from {}",
            spec.name,
            path.display()
        );
    }
    assemble(&edges, features, Some(classes))
}

fn load_tsv(spec: &DatasetSpec) -> Result<Graph> {
    let features = read_features(&spec.feature_path)?;
    let n = features.nrows();
    let mut edges = Vec::new();
    for item in open_lines(&spec.edge_path)? {
        let (line, text) = item?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(&spec.edge_path, line, "expected two node indices"));
        }
        let (a, b) = (
            parse_index(&spec.edge_path, line, toks[0])?,
            parse_index(&spec.edge_path, line, toks[1])?,
        );
        if a >= n || b >= n {
            return Err(parse_err(
                &spec.edge_path,
                line,
                format!("edge ({a}, {b}) has an endpoint outside the {n} feature rows"),
            ));
        }
        edges.push((a, b));
    }
    let names = match &spec.label_path {
        Some(p) => Some(read_labels(p, n)?),
        None => None,
    };
    assemble(&edges, features, names)
}

fn read_labels(path: &Path, n: usize) -> Result<Vec<String>> {
    let mut names: Vec<Option<String>> = vec![None; n];
    for item in open_lines(path)? {
        let (line, text) = item?;
        let toks: Vec<&str> = text.split('\t').map(str::trim).collect();
        if toks.len() != 2 || toks[1].is_empty() {
            return Err(parse_err(path, line, "expected node index and class"));
        }
        let node = parse_index(path, line, toks[0])?;
        if node >= n {
            return Err(parse_err(path, line, format!("node {node} outside [0, {n})")));
        }
        if names[node].replace(toks[1].to_string()).is_some() {
            return Err(parse_err(path, line, format!("node {node} labelled twice")));
        }
    }
    names
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| parse_err(path, 0, format!("node {i} has no label"))))
        .collect()
}

/// Reads `features.tsv` or the binary block, chosen by the magic bytes.
pub fn read_features(path: &Path) -> Result<Array2<f64>> {
    let mut file = File::open(path).map_err(|e| AgeError::io(path, e))?;
    let mut magic = [0u8; 8];
    let is_bin = matches!(file.read(&mut magic), Ok(8)) && &magic == FEATURE_MAGIC;
    drop(file);
    if is_bin {
        read_features_bin(path)
    } else {
        read_features_tsv(path)
    }
}

fn read_features_tsv(path: &Path) -> Result<Array2<f64>> {
    let mut lines = open_lines(path)?;
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing 'n d' header"))??;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(path, hline, "header must be 'n d'"));
    }
    let n = parse_index(path, hline, dims[0])?;
    let d = parse_index(path, hline, dims[1])?;
    let mut data = Vec::with_capacity(n * d);
    let mut rows = 0;
    for item in lines {
        let (line, text) = item?;
        let before = data.len();
        for tok in text.split('\t') {
            data.push(parse_f64(path, line, tok.trim())?);
        }
        if data.len() - before != d {
            return Err(parse_err(
                path,
                line,
                format!("{} values, expected {d}", data.len() - before),
            ));
        }
        rows += 1;
        if rows > n {
            return Err(parse_err(path, line, format!("more than {n} rows")));
        }
    }
    if rows != n {
        return Err(parse_err(path, 0, format!("{rows} rows, header says {n}")));
    }
    Array2::from_shape_vec((n, d), data).map_err(|e| parse_err(path, 0, e.to_string()))
}

fn read_features_bin(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path).map_err(|e| AgeError::io(path, e))?;
    let bad = |m: &str| parse_err(path, 0, m);
    if bytes.len() < 24 {
        return Err(bad("truncated header"));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let d = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    let body = &bytes[24..];
    if n.checked_mul(d).and_then(|c| c.checked_mul(8)) != Some(body.len()) {
        return Err(bad("payload size does not match n×d"));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Array2::from_shape_vec((n, d), data).map_err(|e| bad(&e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| AgeError::io(path, e))?))
}

pub fn write_features_tsv(path: &Path, x: &Array2<f64>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| AgeError::io(path, e);
    writeln!(w, "{} {}", x.nrows(), x.ncols()).map_err(io)?;
    for row in x.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join("\t")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_features_bin(path: &Path, x: &Array2<f64>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| AgeError::io(path, e);
    w.write_all(FEATURE_MAGIC).map_err(io)?;
    w.write_all(&(x.nrows() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(x.ncols() as u64).to_le_bytes()).map_err(io)?;
    for v in x.iter() {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes `g` in the native layout under `dir` and returns the matching spec.
pub fn save_dataset(g: &Graph, name: &str, dir: &Path, binary_features: bool) -> Result<DatasetSpec> {
    fs::create_dir_all(dir).map_err(|e| AgeError::io(dir, e))?;
    let edge_path = dir.join("edges.tsv");
    let mut w = create(&edge_path)?;
    for (i, j) in g.edges() {
        writeln!(w, "{i}\t{j}").map_err(|e| AgeError::io(&edge_path, e))?;
    }
    w.flush().map_err(|e| AgeError::io(&edge_path, e))?;

    let (stale, feature_path) = if binary_features {
        (dir.join("features.tsv"), dir.join("features.bin"))
    } else {
        (dir.join("features.bin"), dir.join("features.tsv"))
    };
    if stale.exists() {
        fs::remove_file(&stale).map_err(|e| AgeError::io(&stale, e))?;
    }
    if binary_features {
        write_features_bin(&feature_path, g.features())?;
    } else {
        write_features_tsv(&feature_path, g.features())?;
    }

    let label_path = match g.labels() {
        Some(labels) => {
            let path = dir.join("labels.tsv");
            let mut w = create(&path)?;
            for (i, &l) in labels.iter().enumerate() {
                let name = g.class_names().map_or_else(|| l.to_string(), |c| c[l].clone());
                writeln!(w, "{i}\t{name}").map_err(|e| AgeError::io(&path, e))?;
            }
            w.flush().map_err(|e| AgeError::io(&path, e))?;
            Some(path)
        }
        None => None,
    };
    Ok(DatasetSpec {
        name: name.to_string(),
        format: DatasetFormat::Tsv,
        edge_path,
        feature_path,
        label_path,
        feature_kind: FeatureKind::Tfidf,
    })
}

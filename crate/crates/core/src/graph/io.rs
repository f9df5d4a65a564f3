//! On-disk graph bundles.
//!
//! A bundle directory holds:
//!
//! | file          | contents                                              |
//! |---------------|-------------------------------------------------------|
//! | `meta.json`   | sizes and flags ([`BundleMeta`])                      |
//! | `indptr.bin`  | `u64` LE row offsets, `num_nodes + 1` values          |
//! | `indices.bin` | `u32` LE neighbour ids, `num_edges` values            |
//! | `feats.bin`   | `f32` LE row-major features, `num_nodes * feature_dim`|
//! | `labels.bin`  | `u32` LE class ids (only with `has_labels`)           |
//! | `split.bin`   | one byte per node: 0 train, 1 val, 2 test, 3 none     |
//!
//! `num_edges` counts stored adjacency entries, so an undirected edge counts
//! twice unless the bundle is flagged `directed`, in which case the entries
//! are a directed list that gets symmetrised on load.
//!
//! Small fixtures can also be given as a TSV directory (`edges.tsv` plus
//! optional `feats.tsv`, `labels.tsv`, `split.tsv`) or a bare TSV edge list.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GraphBundle, GraphError, SplitTag};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMeta {
    pub format_version: u32,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
    pub flags: BundleFlags,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleFlags {
    #[serde(default)]
    pub directed: bool,
    #[serde(default)]
    pub has_labels: bool,
    #[serde(default)]
    pub has_split: bool,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GraphError + '_ {
    move |source| GraphError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, GraphError> {
    fs::read(path).map_err(io_err(path))
}

fn decode<const N: usize, T>(
    path: &Path,
    bytes: &[u8],
    expected: usize,
    f: impl Fn([u8; N]) -> T,
) -> Result<Vec<T>, GraphError> {
    if bytes.len() != expected * N {
        return Err(GraphError::Size(format!(
            "{} has {} bytes, expected {} values of {} bytes",
            path.display(),
            bytes.len(),
            expected,
            N
        )));
    }
    Ok(bytes
        .chunks_exact(N)
        .map(|c| f(c.try_into().expect("chunk size")))
        .collect())
}

/// Loads a graph from a bundle directory, a TSV directory, or a TSV edge file.
pub fn load_graph(path: impl AsRef<Path>) -> Result<GraphBundle, GraphError> {
    let path = path.as_ref();
    if path.is_dir() {
        if path.join("meta.json").exists() {
            load_bundle(path)
        } else {
            let opt = |name: &str| {
                let p = path.join(name);
                p.exists().then_some(p)
            };
            load_tsv(
                &path.join("edges.tsv"),
                opt("feats.tsv").as_deref(),
                opt("labels.tsv").as_deref(),
                opt("split.tsv").as_deref(),
            )
        }
    } else {
        load_tsv(path, None, None, None)
    }
}

fn load_bundle(dir: &Path) -> Result<GraphBundle, GraphError> {
    let meta_path = dir.join("meta.json");
    let meta_text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: BundleMeta = serde_json::from_str(&meta_text).map_err(|e| GraphError::Meta {
        path: meta_path.display().to_string(),
        message: e.to_string(),
    })?;
    if meta.format_version != BUNDLE_FORMAT_VERSION {
        return Err(GraphError::Meta {
            path: meta_path.display().to_string(),
            message: format!("unsupported format_version {}", meta.format_version),
        });
    }
    let n = meta.num_nodes;
    let p = dir.join("indptr.bin");
    let indptr = decode(&p, &read_bytes(&p)?, n + 1, u64::from_le_bytes)?;
    let p = dir.join("indices.bin");
    let indices = decode(&p, &read_bytes(&p)?, meta.num_edges, u32::from_le_bytes)?;
    let mut g = GraphBundle::from_csr(n, indptr, indices, meta.flags.directed)?;

    let p = dir.join("feats.bin");
    let raw = read_bytes(&p)?;
    if raw.len() != n * meta.feature_dim * 4 {
        return Err(GraphError::Size(format!(
            "feature rows do not match num_nodes: {} has {} bytes, expected {} x {} floats",
            p.display(),
            raw.len(),
            n,
            meta.feature_dim
        )));
    }
    let feats = decode(&p, &raw, n * meta.feature_dim, f32::from_le_bytes)?;
    g = g.with_features(meta.feature_dim, feats)?;

    if meta.flags.has_labels {
        let p = dir.join("labels.bin");
        let labels = decode(&p, &read_bytes(&p)?, n, u32::from_le_bytes)?;
        g = g.with_labels(labels, meta.num_classes)?;
    }
    if meta.flags.has_split {
        let p = dir.join("split.bin");
        let bytes = read_bytes(&p)?;
        if bytes.len() != n {
            return Err(GraphError::Size(format!(
                "{} has {} bytes for {} nodes",
                p.display(),
                bytes.len(),
                n
            )));
        }
        let split = bytes
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                SplitTag::from_byte(b).ok_or_else(|| GraphError::Parse {
                    path: p.display().to_string(),
                    line: i,
                    message: format!("invalid split byte {b}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        g = g.with_split(split)?;
    }
    Ok(g)
}

/// Writes `g` as a bundle directory. Output depends only on `g`, so saving a
/// loaded bundle reproduces the original files byte for byte.
pub fn save_bundle(g: &GraphBundle, dir: impl AsRef<Path>) -> Result<(), GraphError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let meta = BundleMeta {
        format_version: BUNDLE_FORMAT_VERSION,
        num_nodes: g.num_nodes(),
        num_edges: g.num_entries(),
        feature_dim: g.feature_dim(),
        num_classes: g.num_classes(),
        flags: BundleFlags {
            directed: false,
            has_labels: g.labels().is_some(),
            has_split: g.split().is_some(),
        },
    };
    let write = |name: &str, bytes: Vec<u8>| -> Result<(), GraphError> {
        let p: PathBuf = dir.join(name);
        fs::write(&p, bytes).map_err(io_err(&p))
    };
    let mut meta_text = serde_json::to_string_pretty(&meta).expect("meta serialises");
    meta_text.push('\n');
    write("meta.json", meta_text.into_bytes())?;
    write("indptr.bin", g.indptr().iter().flat_map(|x| x.to_le_bytes()).collect())?;
    write("indices.bin", g.indices().iter().flat_map(|x| x.to_le_bytes()).collect())?;
    write("feats.bin", g.features().iter().flat_map(|x| x.to_le_bytes()).collect())?;
    for stale in ["labels.bin", "split.bin"] {
        let p = dir.join(stale);
        if p.exists() {
            fs::remove_file(&p).map_err(io_err(&p))?;
        }
    }
    if let Some(labels) = g.labels() {
        write("labels.bin", labels.iter().flat_map(|x| x.to_le_bytes()).collect())?;
    }
    if let Some(split) = g.split() {
        write("split.bin", split.iter().map(|t| t.as_byte()).collect())?;
    }
    Ok(())
}

fn tsv_rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>, GraphError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| (i + 1, l.split_whitespace().map(str::to_owned).collect()))
        .collect())
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T, GraphError>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| GraphError::Parse {
        path: path.display().to_string(),
        line,
        message: format!("{s:?}: {e}"),
    })
}

/// Loads a TSV fixture.
///
/// `edges` holds one `u<TAB>v` pair per line. `feats` has one row of values per
/// node (row index = node id); `labels` one class id per line; `split` one of
/// `train`/`val`/`test`/`none` per line. Without a feature file the node count
/// is `max id + 1` and every id below it must appear in some edge.
pub fn load_tsv(
    edges: &Path,
    feats: Option<&Path>,
    labels: Option<&Path>,
    split: Option<&Path>,
) -> Result<GraphBundle, GraphError> {
    load_tsv_sized(edges, feats, labels, split, None)
}

/// Like [`load_tsv`], with an explicit node count. Ids below `num_nodes`
/// need not appear in any edge.
pub fn load_tsv_sized(
    edges: &Path,
    feats: Option<&Path>,
    labels: Option<&Path>,
    split: Option<&Path>,
    num_nodes: Option<usize>,
) -> Result<GraphBundle, GraphError> {
    let mut edge_list = Vec::new();
    for (line, fields) in tsv_rows(edges)? {
        if fields.len() != 2 {
            return Err(GraphError::Parse {
                path: edges.display().to_string(),
                line,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let u: u32 = parse_field(edges, line, &fields[0])?;
        let v: u32 = parse_field(edges, line, &fields[1])?;
        edge_list.push((u, v));
    }

    let feature_rows = match feats {
        Some(p) => {
            let rows = tsv_rows(p)?;
            let mut parsed = Vec::with_capacity(rows.len());
            for (line, fields) in rows {
                let vals = fields
                    .iter()
                    .map(|f| parse_field::<f32>(p, line, f))
                    .collect::<Result<Vec<_>, _>>()?;
                parsed.push((line, vals));
            }
            Some((p, parsed))
        }
        None => None,
    };

    let num_nodes = match (&feature_rows, num_nodes) {
        (Some((p, rows)), Some(n)) if rows.len() != n => {
            return Err(GraphError::Size(format!(
                "{} has {} rows but {n} nodes were requested",
                p.display(),
                rows.len()
            )))
        }
        (_, Some(n)) => n,
        (Some((_, rows)), None) => rows.len(),
        (None, None) => {
            let n = edge_list
                .iter()
                .map(|&(u, v)| u.max(v) as usize + 1)
                .max()
                .unwrap_or(0);
            let mut seen = vec![false; n];
            for &(u, v) in &edge_list {
                seen[u as usize] = true;
                seen[v as usize] = true;
            }
            if let Some(gap) = seen.iter().position(|s| !s) {
                return Err(GraphError::Parse {
                    path: edges.display().to_string(),
                    line: 0,
                    message: format!("node id {gap} never appears (id gap); supply a feature file"),
                });
            }
            n
        }
    };

    let mut g = GraphBundle::from_edges(num_nodes, edge_list)?;

    if let Some((p, rows)) = feature_rows {
        let dim = rows.first().map_or(0, |(_, r)| r.len());
        let mut flat = Vec::with_capacity(dim * rows.len());
        for (line, row) in rows {
            if row.len() != dim {
                return Err(GraphError::Parse {
                    path: p.display().to_string(),
                    line,
                    message: format!("expected {dim} values, found {}", row.len()),
                });
            }
            flat.extend(row);
        }
        g = g.with_features(dim, flat)?;
    }

    if let Some(p) = labels {
        let rows = tsv_rows(p)?;
        let labels = rows
            .iter()
            .map(|(line, f)| parse_field::<u32>(p, *line, &f[0]))
            .collect::<Result<Vec<_>, _>>()?;
        let classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        g = g.with_labels(labels, classes)?;
    }

    if let Some(p) = split {
        let tags = tsv_rows(p)?
            .iter()
            .map(|(line, f)| match f[0].as_str() {
                "train" | "0" => Ok(SplitTag::Train),
                "val" | "1" => Ok(SplitTag::Val),
                "test" | "2" => Ok(SplitTag::Test),
                "none" | "3" => Ok(SplitTag::None),
                other => Err(GraphError::Parse {
                    path: p.display().to_string(),
                    line: *line,
                    message: format!("unknown split tag {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        g = g.with_split(tags)?;
    }
    Ok(g)
}

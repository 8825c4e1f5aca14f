//! Fixture serialization: the JSON schema that carries vocabularies,
//! scene graphs, and embedding bundles between tools.
//!
//! Schema (UTF-8 JSON), all in normalized coordinates:
//!
//! ```text
//! {
//!   "vocabulary": { "objects": [str], "relations": [str],
//!                   "base_objects": [int], "base_relations": [int] },
//!   "graphs": [ { "nodes": [ {"box": [cx,cy,w,h], "class": int, "score": float} ],
//!                 "edges": [ {"sub": int, "obj": int, "rel": int, "score": float} ] } ],
//!   "embeddings": { "name": {"dim": int, "rows": [[float]]} }   // optional
//! }
//! ```
//!
//! Loading validates every domain invariant — validation failure is an
//! error, never a warning — and schema errors name the path of the
//! offending field (e.g. `graphs[0].edges[0].subject`).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BoundingBox, Edge, EmbeddingMatrix, Node, SceneGraph, Vocabulary};

/// Everything one fixture file carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub vocabulary: Vocabulary,
    pub graphs: Vec<SceneGraph>,
    /// Named embedding matrices (visual tokens, precomputed text
    /// embeddings, edge features…), sorted by name.
    pub embeddings: BTreeMap<String, EmbeddingMatrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixture {
    vocabulary: RawVocabulary,
    graphs: Vec<RawGraph>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    embeddings: BTreeMap<String, RawEmbedding>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVocabulary {
    objects: Vec<String>,
    relations: Vec<String>,
    base_objects: Vec<usize>,
    base_relations: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    nodes: Vec<RawNode>,
    edges: Vec<RawEdge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    #[serde(rename = "box")]
    box_: [f64; 4],
    class: usize,
    score: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    sub: usize,
    obj: usize,
    rel: usize,
    score: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEmbedding {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

/// Parse and fully validate a fixture from JSON text.
pub fn fixture_from_str(text: &str) -> Result<Fixture> {
    let raw: RawFixture = serde_json::from_str(text).map_err(|source| Error::Json {
        path: Path::new("<fixture>").to_path_buf(),
        source,
    })?;
    fixture_from_raw(raw)
}

/// Load and fully validate a fixture file.
pub fn load_fixture(path: impl AsRef<Path>) -> Result<Fixture> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: RawFixture = serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fixture_from_raw(raw)
}

/// Serialize a fixture to pretty JSON, written atomically.
pub fn save_fixture(path: impl AsRef<Path>, fixture: &Fixture) -> Result<()> {
    let raw = raw_from_fixture(fixture);
    let mut text = serde_json::to_string_pretty(&raw).expect("fixture serialization is infallible");
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

/// Write `contents` to `path` via a temporary file in the same directory
/// plus rename, so readers never observe a partial file.
pub fn atomic_write(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("output path {} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|source| Error::Io {
        path: tmp.clone(),
        source,
    })?;
    fs::rename(&tmp, path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn fixture_from_raw(raw: RawFixture) -> Result<Fixture> {
    let vocabulary = Vocabulary::new(
        raw.vocabulary.objects,
        raw.vocabulary.relations,
        raw.vocabulary.base_objects,
        raw.vocabulary.base_relations,
    )
    .map_err(vocabulary_error)?;

    let mut graphs = Vec::with_capacity(raw.graphs.len());
    for (g, graph) in raw.graphs.into_iter().enumerate() {
        let mut nodes = Vec::with_capacity(graph.nodes.len());
        for (n, node) in graph.nodes.into_iter().enumerate() {
            let bbox = BoundingBox::try_from(node.box_)
                .map_err(|e| Error::schema(format!("graphs[{g}].nodes[{n}].box"), e.to_string()))?;
            if node.class >= vocabulary.n_objects() {
                return Err(Error::schema(
                    format!("graphs[{g}].nodes[{n}].class"),
                    format!(
                        "object class id {} out of range ({} classes)",
                        node.class,
                        vocabulary.n_objects()
                    ),
                ));
            }
            nodes.push(Node {
                bbox,
                class_id: node.class,
                score: node.score,
            });
        }
        let mut edges = Vec::with_capacity(graph.edges.len());
        for (e, edge) in graph.edges.iter().enumerate() {
            if edge.rel >= vocabulary.n_relations() {
                return Err(Error::schema(
                    format!("graphs[{g}].edges[{e}].relation"),
                    format!(
                        "relation class id {} out of range ({} classes)",
                        edge.rel,
                        vocabulary.n_relations()
                    ),
                ));
            }
            edges.push(Edge {
                subject: edge.sub,
                object: edge.obj,
                relation: edge.rel,
                score: edge.score,
            });
        }
        // SceneGraph::new checks endpoints, self-relations, and score
        // ranges; its paths only need the graph index prefixed.
        let graph = SceneGraph::new(nodes, edges)
            .map_err(|err| prefix_schema_path(err, &format!("graphs[{g}]")))?;
        graphs.push(graph);
    }

    let mut embeddings = BTreeMap::new();
    for (name, raw_emb) in raw.embeddings {
        for (r, row) in raw_emb.rows.iter().enumerate() {
            if row.len() != raw_emb.dim {
                return Err(Error::schema(
                    format!("embeddings.{name}.rows[{r}]"),
                    format!("row width {} does not match dim {}", row.len(), raw_emb.dim),
                ));
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::schema(
                    format!("embeddings.{name}.rows[{r}][{c}]"),
                    "non-finite value",
                ));
            }
        }
        let rows = raw_emb.rows.len();
        let data: Vec<f64> = raw_emb.rows.into_iter().flatten().collect();
        let matrix = EmbeddingMatrix::from_flat(rows, raw_emb.dim, data)?;
        embeddings.insert(name, matrix);
    }

    Ok(Fixture {
        vocabulary,
        graphs,
        embeddings,
    })
}

fn raw_from_fixture(fixture: &Fixture) -> RawFixture {
    RawFixture {
        vocabulary: RawVocabulary {
            objects: fixture.vocabulary.object_classes().to_vec(),
            relations: fixture.vocabulary.relation_classes().to_vec(),
            base_objects: fixture.vocabulary.base_objects().iter().copied().collect(),
            base_relations: fixture
                .vocabulary
                .base_relations()
                .iter()
                .copied()
                .collect(),
        },
        graphs: fixture
            .graphs
            .iter()
            .map(|g| RawGraph {
                nodes: g
                    .nodes()
                    .iter()
                    .map(|n| RawNode {
                        box_: n.bbox.into(),
                        class: n.class_id,
                        score: n.score,
                    })
                    .collect(),
                edges: g
                    .edges()
                    .iter()
                    .map(|e| RawEdge {
                        sub: e.subject,
                        obj: e.object,
                        rel: e.relation,
                        score: e.score,
                    })
                    .collect(),
            })
            .collect(),
        embeddings: fixture
            .embeddings
            .iter()
            .map(|(name, m)| {
                (
                    name.clone(),
                    RawEmbedding {
                        dim: m.dim(),
                        rows: m.iter_rows().map(<[f64]>::to_vec).collect(),
                    },
                )
            })
            .collect(),
    }
}

/// Prefix the field path of a schema error; other variants pass through.
fn prefix_schema_path(err: Error, prefix: &str) -> Error {
    match err {
        Error::Schema { field, message } => Error::Schema {
            field: format!("{prefix}.{field}"),
            message,
        },
        other => other,
    }
}

/// Map vocabulary construction errors onto fixture field paths.
fn vocabulary_error(err: Error) -> Error {
    match err {
        Error::Schema { field, message } => Error::Schema {
            field: format!("vocabulary.{field}"),
            message,
        },
        Error::ClassOutOfRange { kind, id, len } => Error::Schema {
            field: if kind.contains("object") {
                "vocabulary.base_objects".into()
            } else {
                "vocabulary.base_relations".into()
            },
            message: format!("{kind} class id {id} out of range ({len} classes)"),
        },
        other => other,
    }
}

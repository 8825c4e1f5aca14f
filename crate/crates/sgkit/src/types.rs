//! Core domain types: boxes, vocabularies, embedding matrices, scene
//! graphs, and triplet candidates.
//!
//! All types are immutable after construction (no interior mutability) and
//! validate their invariants in their constructors, so a value that exists
//! is a value that is well-formed. Everything is double precision.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in normalized image coordinates, center format.
///
/// `cx`, `cy` locate the center as fractions of image size in `[0,1]`;
/// `w`, `h` are the extents in `(0,1]`. Center format is the storage
/// convention because the regression losses operate on it directly; corner
/// coordinates are derived on demand via [`BoundingBox::corners`].
///
/// Serializes as the 4-array `[cx, cy, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Validated constructor. Errors if the center leaves the unit square,
    /// an extent is non-positive or exceeds 1, or any parameter is
    /// non-finite.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoundingBox { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    /// Re-checks the construction invariants; used by fixture loading.
    pub fn validate(&self) -> Result<()> {
        let params = [self.cx, self.cy, self.w, self.h];
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBox {
                message: format!("non-finite parameter in {:?}", params),
            });
        }
        if !(0.0..=1.0).contains(&self.cx) || !(0.0..=1.0).contains(&self.cy) {
            return Err(Error::InvalidBox {
                message: format!("center ({}, {}) outside [0,1]", self.cx, self.cy),
            });
        }
        if self.w <= 0.0 || self.w > 1.0 || self.h <= 0.0 || self.h > 1.0 {
            return Err(Error::InvalidBox {
                message: format!("extent ({}, {}) outside (0,1]", self.w, self.h),
            });
        }
        Ok(())
    }

    /// Corner coordinates `(x1, y1, x2, y2)` with `x1 ≤ x2`, `y1 ≤ y2`.
    /// Corners may leave `[0,1]` for wide boxes near the border; only the
    /// stored center-format parameters are constrained.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )
    }

    /// Box area `w·h`.
    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> [f64; 4] {
        [b.cx, b.cy, b.w, b.h]
    }
}

/// Object and relation class names with their base/novel partition.
///
/// Ids are indices into the name lists; the base sets mark classes seen
/// during training, and every id outside a base set is novel. Hot paths
/// carry ids, never strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    objects: Vec<String>,
    relations: Vec<String>,
    base_objects: BTreeSet<usize>,
    base_relations: BTreeSet<usize>,
}

impl Vocabulary {
    /// Validated constructor. Names must be non-empty and unique within
    /// their list; base ids must index existing classes.
    pub fn new(
        objects: Vec<String>,
        relations: Vec<String>,
        base_objects: impl IntoIterator<Item = usize>,
        base_relations: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        check_names("objects", &objects)?;
        check_names("relations", &relations)?;
        let base_objects: BTreeSet<usize> = base_objects.into_iter().collect();
        let base_relations: BTreeSet<usize> = base_relations.into_iter().collect();
        if let Some(&id) = base_objects.iter().find(|&&id| id >= objects.len()) {
            return Err(Error::ClassOutOfRange {
                kind: "base object",
                id,
                len: objects.len(),
            });
        }
        if let Some(&id) = base_relations.iter().find(|&&id| id >= relations.len()) {
            return Err(Error::ClassOutOfRange {
                kind: "base relation",
                id,
                len: relations.len(),
            });
        }
        Ok(Vocabulary {
            objects,
            relations,
            base_objects,
            base_relations,
        })
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn object_classes(&self) -> &[String] {
        &self.objects
    }

    pub fn relation_classes(&self) -> &[String] {
        &self.relations
    }

    pub fn object_name(&self, id: usize) -> Option<&str> {
        self.objects.get(id).map(String::as_str)
    }

    pub fn relation_name(&self, id: usize) -> Option<&str> {
        self.relations.get(id).map(String::as_str)
    }

    /// Id of the object class with this exact name, if present.
    pub fn object_id(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|n| n == name)
    }

    /// Id of the relation class with this exact name, if present.
    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|n| n == name)
    }

    /// True iff `id` is a valid object id in the base (seen) partition.
    pub fn is_base_object(&self, id: usize) -> bool {
        self.base_objects.contains(&id)
    }

    /// True iff `id` is a valid relation id in the base partition.
    pub fn is_base_relation(&self, id: usize) -> bool {
        self.base_relations.contains(&id)
    }

    pub fn base_objects(&self) -> &BTreeSet<usize> {
        &self.base_objects
    }

    pub fn base_relations(&self) -> &BTreeSet<usize> {
        &self.base_relations
    }

    /// Object ids not in the base set, ascending.
    pub fn novel_objects(&self) -> Vec<usize> {
        (0..self.objects.len())
            .filter(|id| !self.base_objects.contains(id))
            .collect()
    }

    /// Relation ids not in the base set, ascending.
    pub fn novel_relations(&self) -> Vec<usize> {
        (0..self.relations.len())
            .filter(|id| !self.base_relations.contains(id))
            .collect()
    }
}

fn check_names(kind: &str, names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::schema(format!("{kind}[{i}]"), "empty class name"));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::schema(
                format!("{kind}[{i}]"),
                format!("duplicate class name {name:?}"),
            ));
        }
    }
    Ok(())
}

/// Row-major matrix of `rows` embeddings of width `dim`.
///
/// Houses every dense collection in the pipeline: visual tokens `V`, text
/// embeddings for object/relation/interaction prompts, per-class score
/// rows, and edge-feature sets. `rows == 0` is legal (an empty prompt set
/// is meaningful input to query selection).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    /// All-zero matrix of the given shape.
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    /// Build from nested rows. All rows must share a width and hold only
    /// finite values.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimMismatch {
                    context: "EmbeddingMatrix::from_rows",
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        let m = EmbeddingMatrix {
            rows: rows.len(),
            dim,
            data,
        };
        m.check_finite()?;
        Ok(m)
    }

    /// Build from a flat row-major buffer of length `rows·dim`.
    pub fn from_flat(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::DimMismatch {
                context: "EmbeddingMatrix::from_flat",
                expected: rows * dim,
                got: data.len(),
            });
        }
        let m = EmbeddingMatrix { rows, dim, data };
        m.check_finite()?;
        Ok(m)
    }

    fn check_finite(&self) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "EmbeddingMatrix",
            });
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Row `i` as a slice. Panics on out-of-range like slice indexing.
    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i < self.rows, "row {i} out of range ({} rows)", self.rows);
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Mutable access to row `i`, for optimizer-style updates. The caller
    /// is responsible for keeping entries finite.
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        assert!(i < self.rows, "row {i} out of range ({} rows)", self.rows);
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.rows)
    }

    /// Flat row-major view of the whole matrix.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// One detected or annotated object: box, class id, confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub bbox: BoundingBox,
    pub class_id: usize,
    pub score: f64,
}

/// One directed labeled relation between two nodes of the same graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub subject: usize,
    pub object: usize,
    pub relation: usize,
    pub score: f64,
}

/// Directed scene graph: objects as nodes, labeled relations as edges.
/// Serves as both ground-truth and prediction form.
///
/// Construction guarantees: edge endpoints index existing nodes, no
/// self-relations (`subject != object`), and all scores lie in `[0,1]`.
/// Class ids are *not* range-checked here — that requires a
/// [`Vocabulary`] and happens at fixture-load and split time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl SceneGraph {
    /// Validated constructor.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        for (i, node) in nodes.iter().enumerate() {
            node.bbox.validate()?;
            check_score(&format!("nodes[{i}].score"), node.score)?;
        }
        for (i, edge) in edges.iter().enumerate() {
            if edge.subject >= nodes.len() {
                return Err(Error::schema(
                    format!("edges[{i}].subject"),
                    format!(
                        "node index {} out of range ({} nodes)",
                        edge.subject,
                        nodes.len()
                    ),
                ));
            }
            if edge.object >= nodes.len() {
                return Err(Error::schema(
                    format!("edges[{i}].object"),
                    format!(
                        "node index {} out of range ({} nodes)",
                        edge.object,
                        nodes.len()
                    ),
                ));
            }
            if edge.subject == edge.object {
                return Err(Error::schema(
                    format!("edges[{i}]"),
                    format!("self-relation on node {}", edge.subject),
                ));
            }
            check_score(&format!("edges[{i}].score"), edge.score)?;
        }
        Ok(SceneGraph { nodes, edges })
    }

    /// Graph with no nodes and no edges.
    pub fn empty() -> Self {
        SceneGraph::default()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

fn check_score(field: &str, score: f64) -> Result<()> {
    if !score.is_finite() || !(0.0..=1.0).contains(&score) {
        return Err(Error::schema(field, format!("score {score} outside [0,1]")));
    }
    Ok(())
}

/// A grounded ⟨subject, predicate, object⟩ with boxes and confidence —
/// the unit of pseudo-supervision produced by target generation. Labels
/// are open-vocabulary strings; mapping to class ids happens only where a
/// vocabulary is in scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletCandidate {
    pub subject_label: String,
    pub relation_label: String,
    pub object_label: String,
    pub subject_box: BoundingBox,
    pub object_box: BoundingBox,
    pub confidence: f64,
}

impl TripletCandidate {
    /// Validated constructor: labels non-empty, confidence in `[0,1]`.
    /// Boxes are valid by type.
    pub fn new(
        subject_label: impl Into<String>,
        relation_label: impl Into<String>,
        object_label: impl Into<String>,
        subject_box: BoundingBox,
        object_box: BoundingBox,
        confidence: f64,
    ) -> Result<Self> {
        let c = TripletCandidate {
            subject_label: subject_label.into(),
            relation_label: relation_label.into(),
            object_label: object_label.into(),
            subject_box,
            object_box,
            confidence,
        };
        for (field, label) in [
            ("subject_label", &c.subject_label),
            ("relation_label", &c.relation_label),
            ("object_label", &c.object_label),
        ] {
            if label.is_empty() {
                return Err(Error::schema(field, "empty label"));
            }
        }
        if !c.confidence.is_finite() || !(0.0..=1.0).contains(&c.confidence) {
            return Err(Error::schema(
                "confidence",
                format!("{} outside [0,1]", c.confidence),
            ));
        }
        Ok(c)
    }
}

/// Open-vocabulary split tag of one edge, determined by whether its
/// endpoint object classes and its relation class are base or novel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeSplit {
    /// All three classes are base classes.
    Base,
    /// Subject or object class is novel; relation is base.
    NovelObject,
    /// Relation class is novel; both endpoints are base.
    NovelRelation,
    /// Novel on both the object side and the relation.
    NovelBoth,
}

impl EdgeSplit {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeSplit::Base => "base",
            EdgeSplit::NovelObject => "novel-object",
            EdgeSplit::NovelRelation => "novel-relation",
            EdgeSplit::NovelBoth => "novel-both",
        }
    }

    /// All four tags in fixed report order.
    pub fn all() -> [EdgeSplit; 4] {
        [
            EdgeSplit::Base,
            EdgeSplit::NovelObject,
            EdgeSplit::NovelRelation,
            EdgeSplit::NovelBoth,
        ]
    }
}

impl fmt::Display for EdgeSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tag every edge of `graph` with its open-vocabulary split.
///
/// An edge is novel on the object side iff its subject *or* object class
/// is novel, and novel on the relation side iff its relation class is
/// novel; the four combinations map onto [`EdgeSplit`]. Errors on any
/// class id outside the vocabulary.
pub fn split_report(graph: &SceneGraph, vocab: &Vocabulary) -> Result<Vec<EdgeSplit>> {
    let mut tags = Vec::with_capacity(graph.edges().len());
    for edge in graph.edges() {
        let mut object_ids = [
            graph.nodes()[edge.subject].class_id,
            graph.nodes()[edge.object].class_id,
        ];
        for id in &mut object_ids {
            if *id >= vocab.n_objects() {
                return Err(Error::ClassOutOfRange {
                    kind: "object",
                    id: *id,
                    len: vocab.n_objects(),
                });
            }
        }
        if edge.relation >= vocab.n_relations() {
            return Err(Error::ClassOutOfRange {
                kind: "relation",
                id: edge.relation,
                len: vocab.n_relations(),
            });
        }
        let novel_object = object_ids.iter().any(|&id| !vocab.is_base_object(id));
        let novel_relation = !vocab.is_base_relation(edge.relation);
        tags.push(match (novel_object, novel_relation) {
            (false, false) => EdgeSplit::Base,
            (true, false) => EdgeSplit::NovelObject,
            (false, true) => EdgeSplit::NovelRelation,
            (true, true) => EdgeSplit::NovelBoth,
        });
    }
    Ok(tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn bx(cx: f64, cy: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(cx, cy, w, h).unwrap()
    }

    #[test]
    fn bounding_box_accepts_valid_params() {
        let b = bx(0.5, 0.5, 0.2, 0.4);
        assert_eq!(b.corners(), (0.4, 0.3, 0.6, 0.7));
        assert!((b.area() - 0.08).abs() < 1e-15);
    }

    #[test]
    fn bounding_box_rejects_bad_params() {
        assert!(BoundingBox::new(1.1, 0.5, 0.2, 0.2).is_err());
        assert!(BoundingBox::new(0.5, -0.01, 0.2, 0.2).is_err());
        assert!(BoundingBox::new(0.5, 0.5, 0.0, 0.2).is_err());
        assert!(BoundingBox::new(0.5, 0.5, 0.2, 1.5).is_err());
        assert!(BoundingBox::new(f64::NAN, 0.5, 0.2, 0.2).is_err());
    }

    #[test]
    fn bounding_box_serializes_as_array() {
        let b = bx(0.5, 0.25, 0.2, 0.1);
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, "[0.5,0.25,0.2,0.1]");
        let back: BoundingBox = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
        // Deserialization validates.
        assert!(serde_json::from_str::<BoundingBox>("[2.0,0.5,0.2,0.1]").is_err());
    }

    #[test]
    fn vocabulary_rejects_duplicates_and_bad_ids() {
        let err = Vocabulary::new(
            vec!["man".into(), "man".into()],
            vec!["on".into()],
            [0],
            [0],
        );
        assert!(err.is_err());
        let err = Vocabulary::new(vec!["man".into()], vec!["on".into()], [3], [0]);
        assert!(matches!(err, Err(Error::ClassOutOfRange { id: 3, .. })));
    }

    #[test]
    fn vocabulary_novel_is_complement_of_base() {
        let v = Vocabulary::new(
            vec!["man".into(), "horse".into(), "surfboard".into()],
            vec!["riding".into(), "hold".into()],
            [0, 2],
            [1],
        )
        .unwrap();
        assert_eq!(v.novel_objects(), vec![1]);
        assert_eq!(v.novel_relations(), vec![0]);
        assert!(v.is_base_object(0) && !v.is_base_object(1));
        assert_eq!(v.object_id("horse"), Some(1));
        assert_eq!(v.relation_name(1), Some("hold"));
    }

    #[test]
    fn embedding_matrix_shape_checks() {
        assert!(EmbeddingMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(EmbeddingMatrix::from_flat(2, 3, vec![0.0; 5]).is_err());
        assert!(EmbeddingMatrix::from_rows(vec![vec![f64::INFINITY]]).is_err());
        let m = EmbeddingMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.dim(), 2);
        assert_eq!(m.row(1), &[3.0, 4.0]);
        let empty = EmbeddingMatrix::zeros(0, 4);
        assert!(empty.is_empty());
        assert_eq!(empty.iter_rows().count(), 0);
    }

    #[test]
    fn scene_graph_validates_edges() {
        let nodes = vec![
            Node {
                bbox: bx(0.3, 0.3, 0.2, 0.2),
                class_id: 0,
                score: 1.0,
            },
            Node {
                bbox: bx(0.7, 0.7, 0.2, 0.2),
                class_id: 1,
                score: 0.5,
            },
        ];
        let ok = SceneGraph::new(
            nodes.clone(),
            vec![Edge {
                subject: 0,
                object: 1,
                relation: 0,
                score: 0.9,
            }],
        );
        assert!(ok.is_ok());

        // Endpoint out of range, named by field path.
        let err = SceneGraph::new(
            nodes.clone(),
            vec![Edge {
                subject: 7,
                object: 1,
                relation: 0,
                score: 0.9,
            }],
        )
        .unwrap_err();
        assert!(err.to_string().contains("edges[0].subject"), "{err}");

        // Self-relation.
        assert!(SceneGraph::new(
            nodes.clone(),
            vec![Edge {
                subject: 1,
                object: 1,
                relation: 0,
                score: 0.9
            }],
        )
        .is_err());

        // Score out of range.
        assert!(SceneGraph::new(
            nodes,
            vec![Edge {
                subject: 0,
                object: 1,
                relation: 0,
                score: 1.5
            }],
        )
        .is_err());
    }

    #[test]
    fn empty_scene_graph_is_valid() {
        let g = SceneGraph::empty();
        assert!(g.nodes().is_empty() && g.edges().is_empty());
    }

    #[test]
    fn triplet_candidate_validates() {
        let b = bx(0.5, 0.5, 0.2, 0.2);
        assert!(TripletCandidate::new("man", "hold", "surfboard", b, b, 0.8).is_ok());
        assert!(TripletCandidate::new("", "hold", "surfboard", b, b, 0.8).is_err());
        assert!(TripletCandidate::new("man", "hold", "surfboard", b, b, 1.2).is_err());
    }

    #[test]
    fn edge_split_tags_serialize_kebab_case() {
        assert_eq!(
            serde_json::to_string(&EdgeSplit::NovelObject).unwrap(),
            "\"novel-object\""
        );
        assert_eq!(EdgeSplit::NovelBoth.to_string(), "novel-both");
    }

    #[test]
    fn split_report_all_base_graph() {
        let vocab = Vocabulary::new(
            vec!["man".into(), "horse".into()],
            vec!["riding".into()],
            [0, 1],
            [0],
        )
        .unwrap();
        let g = two_node_graph(0, 1, 0);
        assert_eq!(split_report(&g, &vocab).unwrap(), vec![EdgeSplit::Base]);
    }

    #[test]
    fn split_report_novel_relation_base_endpoints() {
        // Relation 0 is not in the base relation set; endpoints are base.
        let vocab = Vocabulary::new(
            vec!["man".into(), "horse".into()],
            vec!["riding".into(), "on".into()],
            [0, 1],
            [1],
        )
        .unwrap();
        let g = two_node_graph(0, 1, 0);
        assert_eq!(
            split_report(&g, &vocab).unwrap(),
            vec![EdgeSplit::NovelRelation]
        );
    }

    #[test]
    fn split_report_rejects_out_of_range_class() {
        let vocab = Vocabulary::new(vec!["man".into()], vec!["on".into()], [0], [0]).unwrap();
        let g = SceneGraph::new(
            vec![
                Node {
                    bbox: bx(0.3, 0.3, 0.2, 0.2),
                    class_id: 0,
                    score: 1.0,
                },
                Node {
                    bbox: bx(0.7, 0.7, 0.2, 0.2),
                    class_id: 5,
                    score: 1.0,
                },
            ],
            vec![Edge {
                subject: 0,
                object: 1,
                relation: 0,
                score: 1.0,
            }],
        )
        .unwrap();
        assert!(matches!(
            split_report(&g, &vocab),
            Err(Error::ClassOutOfRange { id: 5, .. })
        ));
    }

    /// Randomized oracle: recompute each tag by direct set membership with
    /// independent logic and require exact agreement, plus the partition
    /// property (every edge gets exactly one tag — one entry per edge).
    #[test]
    fn split_report_matches_brute_force_membership() {
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        for _ in 0..200 {
            let n_obj = rng.random_range(2..8usize);
            let n_rel = rng.random_range(1..6usize);
            let objects: Vec<String> = (0..n_obj).map(|i| format!("o{i}")).collect();
            let relations: Vec<String> = (0..n_rel).map(|i| format!("r{i}")).collect();
            let base_objects: Vec<usize> = (0..n_obj).filter(|_| rng.random_bool(0.6)).collect();
            let base_relations: Vec<usize> = (0..n_rel).filter(|_| rng.random_bool(0.6)).collect();
            let vocab = Vocabulary::new(
                objects,
                relations,
                base_objects.iter().copied(),
                base_relations.iter().copied(),
            )
            .unwrap();

            let n_nodes = rng.random_range(2..6usize);
            let nodes: Vec<Node> = (0..n_nodes)
                .map(|_| Node {
                    bbox: bx(0.5, 0.5, 0.2, 0.2),
                    class_id: rng.random_range(0..n_obj),
                    score: 1.0,
                })
                .collect();
            let edges: Vec<Edge> = (0..rng.random_range(0..8usize))
                .map(|_| {
                    let subject = rng.random_range(0..n_nodes);
                    let mut object = rng.random_range(0..n_nodes - 1);
                    if object >= subject {
                        object += 1;
                    }
                    Edge {
                        subject,
                        object,
                        relation: rng.random_range(0..n_rel),
                        score: 1.0,
                    }
                })
                .collect();
            let g = SceneGraph::new(nodes, edges).unwrap();

            let tags = split_report(&g, &vocab).unwrap();
            assert_eq!(tags.len(), g.edges().len());
            for (edge, tag) in g.edges().iter().zip(&tags) {
                let s_base = base_objects.contains(&g.nodes()[edge.subject].class_id);
                let o_base = base_objects.contains(&g.nodes()[edge.object].class_id);
                let r_base = base_relations.contains(&edge.relation);
                let expected = match (s_base && o_base, r_base) {
                    (true, true) => EdgeSplit::Base,
                    (false, true) => EdgeSplit::NovelObject,
                    (true, false) => EdgeSplit::NovelRelation,
                    (false, false) => EdgeSplit::NovelBoth,
                };
                assert_eq!(*tag, expected);
            }
        }
    }

    fn two_node_graph(class_a: usize, class_b: usize, relation: usize) -> SceneGraph {
        SceneGraph::new(
            vec![
                Node {
                    bbox: bx(0.3, 0.3, 0.2, 0.2),
                    class_id: class_a,
                    score: 1.0,
                },
                Node {
                    bbox: bx(0.7, 0.7, 0.2, 0.2),
                    class_id: class_b,
                    score: 1.0,
                },
            ],
            vec![Edge {
                subject: 0,
                object: 1,
                relation,
                score: 1.0,
            }],
        )
        .unwrap()
    }
}

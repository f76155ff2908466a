//! Per-image embedded knowledge streams for each feature mode, with
//! test-time-only hypernym expansion and JSONL persistence.

use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{embed_label, EmbeddingTable};
use crate::error::{Error, Result};
use crate::ingest::SceneGraph;
use crate::lexicon::{expand_categories, singularize, split_attributes, Lexicon};
use crate::seeding;
use crate::stats::StatsKnowledgeBase;

/// Which knowledge source feeds the reasoner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    GroundTruth,
    Stats,
    Detected,
}

impl FeatureMode {
    pub fn label(self) -> &'static str {
        match self {
            FeatureMode::GroundTruth => "groundtruth",
            FeatureMode::Stats => "stats",
            FeatureMode::Detected => "detected",
        }
    }
}

/// Stream type within an image's knowledge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    Region,
    ObjectLabel,
    Attribute,
    Relationship,
    StatsWord,
}

/// Train/test phase; hypernym expansion applies only at test time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Test,
}

/// One typed set of embedded facts about an image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeStream {
    pub kind: StreamKind,
    pub labels: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

impl KnowledgeStream {
    pub fn new(kind: StreamKind, labels: Vec<String>, vectors: Vec<Vec<f64>>) -> Self {
        assert_eq!(labels.len(), vectors.len(), "labels and vectors must align");
        KnowledgeStream {
            kind,
            labels,
            vectors,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// All knowledge streams for one image in one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageKnowledge {
    pub image_id: String,
    pub phase: Phase,
    pub streams: Vec<KnowledgeStream>,
}

impl ImageKnowledge {
    pub fn new(image_id: String, phase: Phase, streams: Vec<KnowledgeStream>) -> Result<Self> {
        let ik = ImageKnowledge {
            image_id,
            phase,
            streams,
        };
        ik.validate()?;
        Ok(ik)
    }

    pub fn stream(&self, kind: StreamKind) -> Option<&KnowledgeStream> {
        self.streams.iter().find(|s| s.kind == kind)
    }

    fn validate(&self) -> Result<()> {
        if self.streams.is_empty() {
            return Err(Error::Contract(format!(
                "image `{}` has no knowledge streams",
                self.image_id
            )));
        }
        for (i, s) in self.streams.iter().enumerate() {
            if s.labels.len() != s.vectors.len() {
                return Err(Error::Shape(format!(
                    "stream {:?} of image `{}` has {} labels but {} vectors",
                    s.kind,
                    self.image_id,
                    s.labels.len(),
                    s.vectors.len()
                )));
            }
            if self.streams[..i].iter().any(|prev| prev.kind == s.kind) {
                return Err(Error::Contract(format!(
                    "image `{}` has two {:?} streams",
                    self.image_id, s.kind
                )));
            }
        }
        Ok(())
    }
}

/// Detector stand-in: drop or relabel knowledge items at random.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p_drop: f64,
    pub p_swap: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(self.p_drop) || !in_unit(self.p_swap) || self.p_drop + self.p_swap > 1.0 {
            return Err(Error::Config(format!(
                "noise probabilities out of range: p_drop={}, p_swap={}",
                self.p_drop, self.p_swap
            )));
        }
        Ok(())
    }
}

fn dedup_preserving_order(labels: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(labels.len());
    for l in labels {
        if !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

fn mean3(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((&x, &y), &z)| (x + y + z) / 3.0)
        .collect()
}

const REGION_PROJECTION_TAG: &str = "region-projection";
const REGION_NOISE_TAG: &str = "region-noise";

/// Deterministic pseudo region features: a fixed random projection of each
/// object's (singularized) name vector plus small per-object noise. This
/// stands in for provided CNN features so the fourth, non-symbolic branch is
/// exercised; labels are the object ids.
pub fn region_stream(
    graph: &SceneGraph,
    lexicon: &Lexicon,
    table: &EmbeddingTable,
) -> KnowledgeStream {
    let dim = table.dim();
    let mut proj_rng = ChaCha8Rng::seed_from_u64(seeding::derive(0, REGION_PROJECTION_TAG));
    let projection: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| proj_rng.gen_range(-1.0..1.0)).collect())
        .collect();

    let mut labels = Vec::with_capacity(graph.objects.len());
    let mut vectors = Vec::with_capacity(graph.objects.len());
    for (i, obj) in graph.objects.iter().enumerate() {
        let name_vec = embed_label(&singularize(&obj.name, lexicon), table).values;
        let mut row: Vec<f64> = projection
            .iter()
            .map(|p_row| p_row.iter().zip(&name_vec).map(|(p, v)| p * v).sum())
            .collect();
        let noise_seed =
            seeding::mix(seeding::derive(0, REGION_NOISE_TAG), seeding::fnv1a(graph.image_id.as_bytes()));
        let mut rng = ChaCha8Rng::seed_from_u64(seeding::mix(noise_seed, i as u64));
        for v in &mut row {
            *v += rng.gen_range(-0.1..0.1);
        }
        labels.push(obj.object_id.clone());
        vectors.push(row);
    }
    KnowledgeStream::new(StreamKind::Region, labels, vectors)
}

fn assemble_from_graph(
    graph: &SceneGraph,
    lexicon: &Lexicon,
    table: &EmbeddingTable,
    phase: Phase,
) -> Result<ImageKnowledge> {
    // object categories: singularized, deduplicated, expanded at test time
    let names: Vec<String> = graph
        .objects
        .iter()
        .map(|o| singularize(&o.name, lexicon))
        .collect();
    let mut object_labels = dedup_preserving_order(names);
    if phase == Phase::Test {
        object_labels = expand_categories(&object_labels, &lexicon.taxonomy);
    }

    // attribute categories: adjective group first, then non-adjectives
    let all_attrs: Vec<String> = graph
        .objects
        .iter()
        .flat_map(|o| o.attributes.iter().cloned())
        .collect();
    let (adjectives, non_adjectives) = split_attributes(&all_attrs, &lexicon.flags);
    let mut attr_labels =
        dedup_preserving_order(adjectives.into_iter().chain(non_adjectives).collect());
    if phase == Phase::Test {
        attr_labels = expand_categories(&attr_labels, &lexicon.taxonomy);
    }

    // one relationship item per triple, embedded as the mean of the three parts
    let mut rel_labels = Vec::with_capacity(graph.triples.len());
    let mut rel_vectors = Vec::with_capacity(graph.triples.len());
    for t in &graph.triples {
        let subject = graph.object(&t.subject_id).ok_or_else(|| Error::Reference {
            image_id: graph.image_id.clone(),
            id: t.subject_id.clone(),
        })?;
        let object = graph.object(&t.object_id).ok_or_else(|| Error::Reference {
            image_id: graph.image_id.clone(),
            id: t.object_id.clone(),
        })?;
        let s = singularize(&subject.name, lexicon);
        let o = singularize(&object.name, lexicon);
        let sv = embed_label(&s, table).values;
        let pv = embed_label(&t.predicate, table).values;
        let ov = embed_label(&o, table).values;
        rel_labels.push(format!("{s} {} {o}", t.predicate));
        rel_vectors.push(mean3(&sv, &pv, &ov));
    }

    let streams = vec![
        KnowledgeStream::new(
            StreamKind::ObjectLabel,
            object_labels.clone(),
            crate::embed::embed_items(&object_labels, table),
        ),
        KnowledgeStream::new(
            StreamKind::Attribute,
            attr_labels.clone(),
            crate::embed::embed_items(&attr_labels, table),
        ),
        KnowledgeStream::new(StreamKind::Relationship, rel_labels, rel_vectors),
        region_stream(graph, lexicon, table),
    ];
    ImageKnowledge::new(graph.image_id.clone(), phase, streams)
}

/// Ground-truth mode: embed the scene graph's own labels.
pub fn assemble_groundtruth(
    graph: &SceneGraph,
    lexicon: &Lexicon,
    table: &EmbeddingTable,
    phase: Phase,
) -> Result<ImageKnowledge> {
    assemble_from_graph(graph, lexicon, table, phase)
}

/// Stats mode: a single stream embedding the kept tokens in stored order.
/// An image absent from the knowledge base gets an empty stream.
pub fn assemble_stats(
    kb: &StatsKnowledgeBase,
    image_id: &str,
    table: &EmbeddingTable,
    phase: Phase,
) -> Result<ImageKnowledge> {
    let labels: Vec<String> = kb.tokens(image_id).into_iter().map(str::to_string).collect();
    let vectors = crate::embed::embed_items(&labels, table);
    ImageKnowledge::new(
        image_id.to_string(),
        phase,
        vec![KnowledgeStream::new(StreamKind::StatsWord, labels, vectors)],
    )
}

/// Applies the noise model to a scene graph: every object, attribute and
/// triple is independently dropped or relabeled from `vocab`, each on its own
/// per-(seed, image, item) random stream. Dropping an object also removes the
/// triples that mention it.
fn corrupt_graph(graph: &SceneGraph, noise: &NoiseModel, vocab: &[String]) -> SceneGraph {
    let image_seed = seeding::mix(noise.seed, seeding::fnv1a(graph.image_id.as_bytes()));
    let corrupt_label = |tag: &str, index: u64, label: &str| -> Option<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive_indexed(image_seed, tag, index));
        let u: f64 = rng.gen_range(0.0..1.0);
        if u < noise.p_drop {
            None
        } else if u < noise.p_drop + noise.p_swap {
            Some(vocab[rng.gen_range(0..vocab.len())].clone())
        } else {
            Some(label.to_string())
        }
    };

    let mut objects = Vec::new();
    for (i, obj) in graph.objects.iter().enumerate() {
        let Some(name) = corrupt_label("object", i as u64, &obj.name) else {
            continue;
        };
        let mut attributes = Vec::new();
        for (j, attr) in obj.attributes.iter().enumerate() {
            let idx = seeding::mix(i as u64, j as u64);
            if let Some(a) = corrupt_label("attribute", idx, attr) {
                attributes.push(a);
            }
        }
        let mut kept = obj.clone();
        kept.name = name;
        kept.attributes = attributes;
        objects.push(kept);
    }

    let surviving: std::collections::HashSet<&str> =
        objects.iter().map(|o| o.object_id.as_str()).collect();
    let mut triples = Vec::new();
    for (k, t) in graph.triples.iter().enumerate() {
        if !surviving.contains(t.subject_id.as_str()) || !surviving.contains(t.object_id.as_str()) {
            continue;
        }
        if let Some(predicate) = corrupt_label("triple", k as u64, &t.predicate) {
            let mut kept = t.clone();
            kept.predicate = predicate;
            triples.push(kept);
        }
    }

    SceneGraph {
        image_id: graph.image_id.clone(),
        objects,
        triples,
    }
}

/// Detected mode: ground-truth assembly over a noise-corrupted scene graph.
pub fn assemble_detected(
    graph: &SceneGraph,
    noise: &NoiseModel,
    lexicon: &Lexicon,
    table: &EmbeddingTable,
    phase: Phase,
    vocab: &[String],
) -> Result<ImageKnowledge> {
    noise.validate()?;
    if vocab.is_empty() {
        return Err(Error::Contract(
            "assemble_detected needs a nonempty label vocabulary".into(),
        ));
    }
    let corrupted = corrupt_graph(graph, noise, vocab);
    assemble_from_graph(&corrupted, lexicon, table, phase)
}

/// Serializes knowledge as JSONL, one image per line, in the given order.
pub fn write_knowledge(images: &[ImageKnowledge]) -> String {
    let mut out = String::new();
    for ik in images {
        out.push_str(&serde_json::to_string(ik).expect("knowledge serializes"));
        out.push('\n');
    }
    out
}

/// Reads a `knowledge.jsonl` stream; errors carry the byte offset of the bad line.
pub fn read_knowledge<R: BufRead>(mut reader: R) -> Result<Vec<ImageKnowledge>> {
    let mut images = Vec::new();
    let mut offset: u64 = 0;
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        let line_offset = offset;
        offset += n as u64;
        if line.trim().is_empty() {
            continue;
        }
        let ik: ImageKnowledge =
            serde_json::from_str(line.trim_end()).map_err(|e| Error::Format {
                offset: line_offset,
                message: e.to_string(),
            })?;
        ik.validate().map_err(|e| Error::Format {
            offset: line_offset,
            message: e.to_string(),
        })?;
        images.push(ik);
    }
    Ok(images)
}

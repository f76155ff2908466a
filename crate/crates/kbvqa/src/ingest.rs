//! Line-oriented parsing of question corpora and scene graphs.
//!
//! Input files are JSONL: one record per line. All free-text fields are
//! lowercased at parse time; record ids are kept verbatim because they are
//! matched exactly across files.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One question about one image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub image_id: String,
    pub text: String,
    pub answer: String,
}

/// One detected or annotated object in a scene.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneObject {
    pub object_id: String,
    pub name: String,
    pub attributes: Vec<String>,
}

/// A subject–predicate–object relation between two scene objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTriple {
    pub subject_id: String,
    pub predicate: String,
    pub object_id: String,
}

/// Per-image ground-truth structure: objects plus relation triples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub image_id: String,
    pub objects: Vec<SceneObject>,
    pub triples: Vec<RelationTriple>,
}

impl SceneGraph {
    /// Looks up an object by id.
    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.object_id == id)
    }

    fn validate(&self, line: usize) -> Result<()> {
        if self.image_id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty image_id".into(),
            });
        }
        let mut ids = HashSet::new();
        for obj in &self.objects {
            if obj.name.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: format!("object `{}` has an empty name", obj.object_id),
                });
            }
            if !ids.insert(obj.object_id.as_str()) {
                return Err(Error::DuplicateKey {
                    line,
                    key: obj.object_id.clone(),
                });
            }
        }
        for t in &self.triples {
            for end in [&t.subject_id, &t.object_id] {
                if !ids.contains(end.as_str()) {
                    return Err(Error::Reference {
                        image_id: self.image_id.clone(),
                        id: end.clone(),
                    });
                }
            }
            if t.subject_id == t.object_id {
                return Err(Error::Parse {
                    line,
                    message: format!("triple relates object `{}` to itself", t.subject_id),
                });
            }
        }
        Ok(())
    }
}

/// A parsed question corpus with a per-image index.
///
/// `by_image` partitions `questions` exactly; iteration over images is
/// ascending by image id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    questions: Vec<QuestionRecord>,
    by_image: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    pub fn from_questions(questions: Vec<QuestionRecord>) -> Result<Self> {
        let mut corpus = Corpus::default();
        let mut seen = HashSet::new();
        for (i, q) in questions.iter().enumerate() {
            let line = i + 1;
            if q.question_id.is_empty() || q.image_id.is_empty() || q.text.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "question_id, image_id and text must be nonempty".into(),
                });
            }
            if !seen.insert(q.question_id.clone()) {
                return Err(Error::DuplicateKey {
                    line,
                    key: q.question_id.clone(),
                });
            }
            corpus.by_image.entry(q.image_id.clone()).or_default().push(i);
        }
        corpus.questions = questions;
        Ok(corpus)
    }

    pub fn questions(&self) -> &[QuestionRecord] {
        &self.questions
    }

    pub fn n_images(&self) -> usize {
        self.by_image.len()
    }

    /// Image ids in ascending order.
    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.by_image.keys().map(String::as_str)
    }

    /// All questions about one image, in file order. Empty if the image is unknown.
    pub fn questions_for(&self, image_id: &str) -> Vec<&QuestionRecord> {
        match self.by_image.get(image_id) {
            Some(idx) => idx.iter().map(|&i| &self.questions[i]).collect(),
            None => Vec::new(),
        }
    }
}

fn lowercase_question(mut q: QuestionRecord) -> QuestionRecord {
    q.text = q.text.to_lowercase();
    q.answer = q.answer.to_lowercase();
    q
}

fn lowercase_graph(mut g: SceneGraph) -> SceneGraph {
    for obj in &mut g.objects {
        obj.name = obj.name.to_lowercase();
        for a in &mut obj.attributes {
            *a = a.to_lowercase();
        }
    }
    for t in &mut g.triples {
        t.predicate = t.predicate.to_lowercase();
    }
    g
}

/// Raw mirror of [`QuestionRecord`] used to report missing fields by name.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuestion {
    question_id: Option<String>,
    image_id: Option<String>,
    text: Option<String>,
    answer: Option<String>,
}

fn require<T>(value: Option<T>, line: usize, field: &str) -> Result<T> {
    value.ok_or_else(|| Error::MissingField {
        line,
        field: field.to_string(),
    })
}

/// Parses a `questions.jsonl` stream into a [`Corpus`].
pub fn parse_questions<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut questions = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawQuestion = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let record = QuestionRecord {
            question_id: require(raw.question_id, line_no, "question_id")?,
            image_id: require(raw.image_id, line_no, "image_id")?,
            text: require(raw.text, line_no, "text")?,
            answer: require(raw.answer, line_no, "answer")?,
        };
        if record.question_id.is_empty() || record.image_id.is_empty() || record.text.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "question_id, image_id and text must be nonempty".into(),
            });
        }
        if !seen.insert(record.question_id.clone()) {
            return Err(Error::DuplicateKey {
                line: line_no,
                key: record.question_id,
            });
        }
        questions.push(lowercase_question(record));
    }
    Corpus::from_questions(questions)
}

/// Parses a `scenes.jsonl` stream, keyed by image id.
pub fn parse_scene_graphs<R: BufRead>(reader: R) -> Result<BTreeMap<String, SceneGraph>> {
    let mut graphs = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let graph: SceneGraph = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let graph = lowercase_graph(graph);
        graph.validate(line_no)?;
        match graphs.entry(graph.image_id.clone()) {
            Entry::Vacant(v) => {
                v.insert(graph);
            }
            Entry::Occupied(o) => {
                return Err(Error::DuplicateKey {
                    line: line_no,
                    key: o.key().clone(),
                });
            }
        }
    }
    Ok(graphs)
}

/// Serializes a corpus back to JSONL, one question per line in file order.
pub fn write_questions(corpus: &Corpus) -> String {
    let mut out = String::new();
    for q in corpus.questions() {
        out.push_str(&serde_json::to_string(q).expect("question serializes"));
        out.push('\n');
    }
    out
}

/// Serializes scene graphs to JSONL in ascending image-id order.
pub fn write_scene_graphs(graphs: &BTreeMap<String, SceneGraph>) -> String {
    let mut out = String::new();
    for g in graphs.values() {
        out.push_str(&serde_json::to_string(g).expect("scene graph serializes"));
        out.push('\n');
    }
    out
}

/// One image's view after joining questions with scene graphs.
#[derive(Debug)]
pub struct ImageEntry<'a> {
    pub image_id: &'a str,
    pub questions: Vec<&'a QuestionRecord>,
    pub graph: Option<&'a SceneGraph>,
}

/// Joins a corpus with scene graphs: one entry per image appearing in either
/// input, ascending by image id. Missing graphs are legal here; consumers
/// that need them error later.
pub fn join_corpus<'a>(
    corpus: &'a Corpus,
    graphs: &'a BTreeMap<String, SceneGraph>,
) -> Vec<ImageEntry<'a>> {
    let mut ids: Vec<&str> = corpus
        .image_ids()
        .chain(graphs.keys().map(String::as_str))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .map(|id| ImageEntry {
            image_id: id,
            questions: corpus.questions_for(id),
            graph: graphs.get(id),
        })
        .collect()
}

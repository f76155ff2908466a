//! Word-vector tables and label embedding.
//!
//! The loader reads the standard text format of public pretrained vectors:
//! one `word v1 v2 ... vdim` line per word. Desk-scale runs use a synthetic
//! table generated deterministically from a seed; the 300-D public vectors
//! remain a drop-in.

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeding;

/// A fixed-dimension word-vector table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Inserts a vector; the first occurrence of a word wins.
    pub fn insert(&mut self, word: String, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector for `{word}` has {} components, table dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        if !vector.iter().all(|v| v.is_finite()) {
            return Err(Error::Shape(format!("vector for `{word}` has non-finite components")));
        }
        self.vectors.entry(word).or_insert(vector);
        Ok(())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }
}

/// An embedded label with an out-of-vocabulary diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    pub values: Vec<f64>,
    /// Fraction of the label's words found in the table; 0 means `values` is zero.
    pub coverage: f64,
}

/// Parses the whitespace-separated text format.
pub fn load_embeddings<R: BufRead>(reader: R, expected_dim: usize) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(expected_dim);
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("nonempty line has a first token");
        let mut vector = Vec::with_capacity(expected_dim);
        for part in parts {
            let value: f64 = part.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-numeric component `{part}`"),
            })?;
            vector.push(value);
        }
        if vector.len() != expected_dim {
            return Err(Error::Dimension {
                line: line_no,
                expected: expected_dim,
                found: vector.len(),
            });
        }
        table.insert(word.to_string(), vector)?;
    }
    Ok(table)
}

/// Serializes a table back to the text format; floats print in shortest
/// round-trip form so load(write(t)) == t.
pub fn write_embeddings(table: &EmbeddingTable) -> String {
    let mut out = String::new();
    for (word, vector) in &table.vectors {
        out.push_str(word);
        for v in vector {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// Embeds a label: split on spaces and underscores, average the vectors of
/// in-table words, skip the rest. A fully out-of-vocabulary label embeds as
/// the zero vector with coverage 0.
///
/// Found words are summed in lexicographic order so the mean does not depend
/// on word order within the label.
pub fn embed_label(label: &str, table: &EmbeddingTable) -> LabelVector {
    let words: Vec<&str> = label
        .split([' ', '_'])
        .filter(|w| !w.is_empty())
        .collect();
    let mut found: Vec<(&str, &[f64])> = words
        .iter()
        .filter_map(|w| table.get(w).map(|v| (*w, v)))
        .collect();
    found.sort_by_key(|(w, _)| *w);

    let mut values = vec![0.0; table.dim()];
    if found.is_empty() {
        return LabelVector {
            values,
            coverage: 0.0,
        };
    }
    for (_, vector) in &found {
        for (acc, v) in values.iter_mut().zip(vector.iter()) {
            *acc += v;
        }
    }
    let n = found.len() as f64;
    for v in &mut values {
        *v /= n;
    }
    LabelVector {
        values,
        coverage: found.len() as f64 / words.len().max(1) as f64,
    }
}

/// Embeds labels row-wise into a |labels| × dim matrix.
pub fn embed_items(labels: &[String], table: &EmbeddingTable) -> Vec<Vec<f64>> {
    labels
        .iter()
        .map(|l| embed_label(l, table).values)
        .collect()
}

/// Builds a synthetic table: every word gets a deterministic vector with
/// components uniform in [-1, 1], seeded per (seed, word) so the result does
/// not depend on word-list order.
pub fn synthetic_table(words: impl IntoIterator<Item = String>, dim: usize, seed: u64) -> EmbeddingTable {
    let mut table = EmbeddingTable::new(dim);
    for word in words {
        let word_seed = seeding::mix(seed, seeding::fnv1a(word.as_bytes()));
        let mut rng = ChaCha8Rng::seed_from_u64(word_seed);
        let vector: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        table.insert(word, vector).expect("synthetic vector has table dimension");
    }
    table
}

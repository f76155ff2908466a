//! Statistical knowledge bases: per image, the question words whose corpus
//! frequency strictly exceeds a threshold.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Corpus, QuestionRecord};
use crate::lexicon::{singularize, Lexicon};

/// Raw per-image token counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStats {
    counts: BTreeMap<String, u64>,
}

impl TokenStats {
    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }
}

/// One kept token with its merged count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEntry {
    pub token: String,
    pub count: u64,
}

/// Per-image lists of high-frequency tokens, sorted by descending count then
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StatsKnowledgeBase {
    per_image: BTreeMap<String, Vec<TokenEntry>>,
}

impl StatsKnowledgeBase {
    pub fn images(&self) -> impl Iterator<Item = &str> {
        self.per_image.keys().map(String::as_str)
    }

    pub fn entries(&self, image_id: &str) -> Option<&[TokenEntry]> {
        self.per_image.get(image_id).map(Vec::as_slice)
    }

    /// Kept tokens for an image, in stored order. Empty if the image is unknown.
    pub fn tokens(&self, image_id: &str) -> Vec<&str> {
        self.per_image
            .get(image_id)
            .map(|v| v.iter().map(|e| e.token.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.per_image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_image.is_empty()
    }
}

/// Knobs for the statistical extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsConfig {
    /// Tokens are kept when their count is strictly greater than this.
    pub threshold: u64,
    #[serde(default)]
    pub stopwords: BTreeSet<String>,
    pub singularize_tokens: bool,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            threshold: 10,
            stopwords: default_stopwords(),
            singularize_tokens: true,
        }
    }
}

/// The stock ~40-word function-word list. Raw high-frequency question words
/// are dominated by these; an empty stopword set restores the literal
/// count-only procedure.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "at", "be", "but", "by", "can", "do", "does", "find", "for", "from",
    "had", "has", "have", "how", "image", "in", "is", "it", "its", "of", "on", "or", "see", "show",
    "that", "the", "there", "this", "to", "was", "were", "what", "when", "where", "which", "you",
];

pub fn default_stopwords() -> BTreeSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

/// Parses `stopwords.txt`: one token per line.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Lowercases and splits on every maximal run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Counts token occurrences across all question texts of one image.
/// Answers are excluded. Mixing image ids is a contract violation.
pub fn count_tokens(questions: &[&QuestionRecord]) -> Result<TokenStats> {
    if let Some(first) = questions.first() {
        if let Some(bad) = questions.iter().find(|q| q.image_id != first.image_id) {
            return Err(Error::Contract(format!(
                "count_tokens got questions for both `{}` and `{}`",
                first.image_id, bad.image_id
            )));
        }
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for q in questions {
        for token in tokenize(&q.text) {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    Ok(TokenStats { counts })
}

/// Applies the keep rule: count strictly greater than the threshold, then
/// stopword removal, then optional singularization with re-deduplication
/// (merged tokens sum their counts), sorted by descending count then token.
pub fn filter_frequent(
    stats: &TokenStats,
    config: &StatsConfig,
    lexicon: &Lexicon,
) -> Vec<TokenEntry> {
    let mut merged: BTreeMap<String, u64> = BTreeMap::new();
    for (token, count) in stats.iter() {
        if count <= config.threshold {
            continue;
        }
        if config.stopwords.contains(token) {
            continue;
        }
        let token = if config.singularize_tokens {
            singularize(token, lexicon)
        } else {
            token.to_string()
        };
        *merged.entry(token).or_insert(0) += count;
    }
    let mut entries: Vec<TokenEntry> = merged
        .into_iter()
        .map(|(token, count)| TokenEntry { token, count })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.token.cmp(&b.token)));
    entries
}

/// Builds the full per-image knowledge base for a corpus.
pub fn build_stats_kb(
    corpus: &Corpus,
    config: &StatsConfig,
    lexicon: &Lexicon,
) -> Result<StatsKnowledgeBase> {
    let mut per_image = BTreeMap::new();
    for image_id in corpus.image_ids() {
        let questions = corpus.questions_for(image_id);
        let stats = count_tokens(&questions)?;
        per_image.insert(image_id.to_string(), filter_frequent(&stats, config, lexicon));
    }
    Ok(StatsKnowledgeBase { per_image })
}

#[derive(Serialize, Deserialize)]
struct KbLine {
    image_id: String,
    tokens: Vec<String>,
    counts: Vec<u64>,
}

/// Serializes a knowledge base as JSONL with parallel token/count arrays.
pub fn write_stats_kb(kb: &StatsKnowledgeBase) -> String {
    let mut out = String::new();
    for (image_id, entries) in &kb.per_image {
        let line = KbLine {
            image_id: image_id.clone(),
            tokens: entries.iter().map(|e| e.token.clone()).collect(),
            counts: entries.iter().map(|e| e.count).collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("kb line serializes"));
        out.push('\n');
    }
    out
}

/// Reads a `stats_kb.jsonl` stream; errors carry the byte offset of the bad line.
pub fn read_stats_kb<R: BufRead>(mut reader: R) -> Result<StatsKnowledgeBase> {
    let mut per_image = BTreeMap::new();
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
        let parsed: KbLine = serde_json::from_str(line.trim_end()).map_err(|e| Error::Format {
            offset: line_offset,
            message: e.to_string(),
        })?;
        if parsed.tokens.len() != parsed.counts.len() {
            return Err(Error::Format {
                offset: line_offset,
                message: format!(
                    "token/count arrays differ in length ({} vs {})",
                    parsed.tokens.len(),
                    parsed.counts.len()
                ),
            });
        }
        if per_image.contains_key(&parsed.image_id) {
            return Err(Error::Format {
                offset: line_offset,
                message: format!("duplicate image `{}`", parsed.image_id),
            });
        }
        let entries = parsed
            .tokens
            .into_iter()
            .zip(parsed.counts)
            .map(|(token, count)| TokenEntry { token, count })
            .collect();
        per_image.insert(parsed.image_id, entries);
    }
    Ok(StatsKnowledgeBase { per_image })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(id: &str, image: &str, text: &str) -> QuestionRecord {
        QuestionRecord {
            question_id: id.into(),
            image_id: image.into(),
            text: text.into(),
            answer: "x".into(),
        }
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("What color is the dog?"),
            vec!["what", "color", "is", "the", "dog"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("left-hand side"), vec!["left", "hand", "side"]);
    }

    #[test]
    fn count_examples() {
        let qs = vec![
            record("q1", "i1", "the dog runs"),
            record("q2", "i1", "a dog sits"),
            record("q3", "i1", "small dog"),
        ];
        let refs: Vec<&QuestionRecord> = qs.iter().collect();
        let stats = count_tokens(&refs).unwrap();
        assert_eq!(stats.count("dog"), 3);

        assert_eq!(count_tokens(&[]).unwrap().iter().count(), 0);

        let doubled = vec![record("q1", "i1", "dog dog")];
        let refs: Vec<&QuestionRecord> = doubled.iter().collect();
        assert_eq!(count_tokens(&refs).unwrap().count("dog"), 2);
    }

    #[test]
    fn count_rejects_mixed_images() {
        let qs = vec![record("q1", "i1", "a"), record("q2", "i2", "b")];
        let refs: Vec<&QuestionRecord> = qs.iter().collect();
        assert!(matches!(count_tokens(&refs), Err(Error::Contract(_))));
    }

    fn stats_of(pairs: &[(&str, u64)]) -> TokenStats {
        TokenStats {
            counts: pairs.iter().map(|&(t, c)| (t.to_string(), c)).collect(),
        }
    }

    #[test]
    fn filter_threshold_is_strict() {
        let lexicon = Lexicon::default();
        let config = StatsConfig {
            threshold: 10,
            stopwords: default_stopwords(),
            singularize_tokens: true,
        };
        let kept = filter_frequent(&stats_of(&[("dog", 11)]), &config, &lexicon);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].token, "dog");

        let dropped = filter_frequent(&stats_of(&[("dog", 10)]), &config, &lexicon);
        assert!(dropped.is_empty());

        let stop = filter_frequent(&stats_of(&[("the", 50)]), &config, &lexicon);
        assert!(stop.is_empty());
    }

    #[test]
    fn filter_merges_singularized_tokens() {
        let lexicon = Lexicon::default();
        let config = StatsConfig {
            threshold: 0,
            stopwords: BTreeSet::new(),
            singularize_tokens: true,
        };
        let kept = filter_frequent(&stats_of(&[("dogs", 2), ("dog", 3)]), &config, &lexicon);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].token, "dog");
        assert_eq!(kept[0].count, 5);
    }

    fn corpus_of(lines: &[(&str, &str, &str)]) -> Corpus {
        let questions = lines
            .iter()
            .map(|&(id, image, text)| record(id, image, text))
            .collect();
        Corpus::from_questions(questions).unwrap()
    }

    #[test]
    fn build_examples() {
        let lexicon = Lexicon::default();
        let config = StatsConfig {
            threshold: 2,
            stopwords: default_stopwords(),
            singularize_tokens: true,
        };
        let corpus = corpus_of(&[
            ("q1", "i1", "dog dog dog"),
            ("q2", "i1", "cat"),
            ("q3", "i1", "cat"),
        ]);
        let kb = build_stats_kb(&corpus, &config, &lexicon).unwrap();
        assert_eq!(kb.tokens("i1"), vec!["dog"]);

        let empty = build_stats_kb(&Corpus::default(), &config, &lexicon).unwrap();
        assert!(empty.is_empty());

        let zero = StatsConfig {
            threshold: 0,
            stopwords: default_stopwords(),
            singularize_tokens: true,
        };
        let kb = build_stats_kb(&corpus, &zero, &lexicon).unwrap();
        assert_eq!(kb.tokens("i1"), vec!["dog", "cat"]);
    }

    #[test]
    fn kb_round_trip() {
        let lexicon = Lexicon::default();
        let corpus = corpus_of(&[("q1", "i1", "dog dog"), ("q2", "i2", "cat cat cat")]);
        let config = StatsConfig {
            threshold: 1,
            stopwords: BTreeSet::new(),
            singularize_tokens: true,
        };
        let kb = build_stats_kb(&corpus, &config, &lexicon).unwrap();
        let text = write_stats_kb(&kb);
        let back = read_stats_kb(std::io::Cursor::new(text.as_bytes())).unwrap();
        assert_eq!(kb, back);
    }

    #[test]
    fn corrupt_kb_reports_offset() {
        let good = r#"{"image_id":"i1","tokens":["dog"],"counts":[3]}"#;
        let text = format!("{good}\nnot json\n");
        let err = read_stats_kb(std::io::Cursor::new(text.as_bytes())).unwrap_err();
        match err {
            Error::Format { offset, .. } => assert_eq!(offset, good.len() as u64 + 1),
            other => panic!("expected format error, got {other}"),
        }
    }

    /// Brute-force reference: recount from scratch with simple nested loops.
    fn brute_force_kb(corpus: &Corpus, config: &StatsConfig, lexicon: &Lexicon) -> Vec<(String, Vec<(String, u64)>)> {
        let mut out = Vec::new();
        for image_id in corpus.image_ids() {
            let mut counts: Vec<(String, u64)> = Vec::new();
            for q in corpus.questions_for(image_id) {
                for token in tokenize(&q.text) {
                    match counts.iter_mut().find(|(t, _)| *t == token) {
                        Some((_, c)) => *c += 1,
                        None => counts.push((token, 1)),
                    }
                }
            }
            let mut merged: Vec<(String, u64)> = Vec::new();
            for (token, count) in counts {
                if count <= config.threshold || config.stopwords.contains(&token) {
                    continue;
                }
                let token = if config.singularize_tokens {
                    singularize(&token, lexicon)
                } else {
                    token
                };
                match merged.iter_mut().find(|(t, _)| *t == token) {
                    Some((_, c)) => *c += count,
                    None => merged.push((token, count)),
                }
            }
            merged.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            out.push((image_id.to_string(), merged));
        }
        out
    }

    fn arbitrary_corpus() -> impl Strategy<Value = Corpus> {
        let token = prop_oneof![
            Just("dog"), Just("dogs"), Just("cat"), Just("the"), Just("red"),
            Just("on"), Just("grass"), Just("tree"), Just("box"), Just("boxes"),
        ];
        let text = prop::collection::vec(token, 1..8).prop_map(|ts| ts.join(" "));
        let question = (0u8..6, text).prop_map(|(img, text)| (format!("i{img}"), text));
        prop::collection::vec(question, 0..40).prop_map(|qs| {
            let questions = qs
                .into_iter()
                .enumerate()
                .map(|(i, (image_id, text))| QuestionRecord {
                    question_id: format!("q{i}"),
                    image_id,
                    text,
                    answer: "x".into(),
                })
                .collect();
            Corpus::from_questions(questions).unwrap()
        })
    }

    proptest! {
        #[test]
        fn kb_matches_brute_force(corpus in arbitrary_corpus(), threshold in 0u64..5) {
            let lexicon = Lexicon::default();
            let config = StatsConfig {
                threshold,
                stopwords: default_stopwords(),
                singularize_tokens: true,
            };
            let kb = build_stats_kb(&corpus, &config, &lexicon).unwrap();
            let reference = brute_force_kb(&corpus, &config, &lexicon);
            let got: Vec<(String, Vec<(String, u64)>)> = kb
                .images()
                .map(|img| {
                    (
                        img.to_string(),
                        kb.entries(img)
                            .unwrap()
                            .iter()
                            .map(|e| (e.token.clone(), e.count))
                            .collect(),
                    )
                })
                .collect();
            prop_assert_eq!(got, reference);
        }

        #[test]
        fn raising_threshold_never_adds_tokens(corpus in arbitrary_corpus(), threshold in 0u64..4) {
            let lexicon = Lexicon::default();
            let low = StatsConfig { threshold, stopwords: default_stopwords(), singularize_tokens: true };
            let high = StatsConfig { threshold: threshold + 1, ..low.clone() };
            let kb_low = build_stats_kb(&corpus, &low, &lexicon).unwrap();
            let kb_high = build_stats_kb(&corpus, &high, &lexicon).unwrap();
            for img in kb_high.images() {
                let low_tokens = kb_low.tokens(img);
                for t in kb_high.tokens(img) {
                    prop_assert!(low_tokens.contains(&t));
                }
            }
        }

        #[test]
        fn question_order_is_irrelevant(corpus in arbitrary_corpus()) {
            let lexicon = Lexicon::default();
            let config = StatsConfig { threshold: 1, stopwords: default_stopwords(), singularize_tokens: true };
            let kb = build_stats_kb(&corpus, &config, &lexicon).unwrap();
            let mut reversed: Vec<QuestionRecord> = corpus.questions().to_vec();
            reversed.reverse();
            let shuffled = Corpus::from_questions(reversed).unwrap();
            let kb2 = build_stats_kb(&shuffled, &config, &lexicon).unwrap();
            prop_assert_eq!(kb, kb2);
        }
    }
}

//! Category cleanup: plural removal, hypernym closure over a taxonomy,
//! adjective/non-adjective attribute splitting, and predicate grouping.
//!
//! The taxonomy, synset flags, irregular plurals and manual predicate lists
//! are loaded from small TSV files so the crate stays self-contained;
//! producing those files from a lexical database is an offline step.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};

/// Hypernym DAG: each word maps to its parents, with one designated root.
///
/// Parents keep file order (no duplicates), which fixes the breadth-first
/// traversal order of [`hypernym_closure`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Taxonomy {
    parents: BTreeMap<String, Vec<String>>,
    root: String,
}

impl Taxonomy {
    /// Builds a taxonomy from (child, parent) edges plus the root word.
    /// Rejects cycles, parents on the root, and words that cannot reach the root.
    pub fn new(root: &str, edges: &[(String, String)]) -> Result<Self> {
        let mut parents: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (child, parent) in edges {
            if child == parent {
                return Err(Error::Config(format!("taxonomy self-edge on `{child}`")));
            }
            let list = parents.entry(child.clone()).or_default();
            if !list.contains(parent) {
                list.push(parent.clone());
            }
        }
        if parents.contains_key(root) {
            return Err(Error::Config(format!("taxonomy root `{root}` has parents")));
        }
        let taxonomy = Taxonomy {
            parents,
            root: root.to_string(),
        };
        taxonomy.check_acyclic_and_rooted()?;
        Ok(taxonomy)
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn parents_of(&self, word: &str) -> &[String] {
        self.parents.get(word).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, word: &str) -> bool {
        word == self.root || self.parents.contains_key(word)
    }

    fn check_acyclic_and_rooted(&self) -> Result<()> {
        // DFS coloring over the parent relation
        let mut state: HashMap<&str, u8> = HashMap::new(); // 1 = visiting, 2 = done
        for word in self.parents.keys() {
            let mut stack: Vec<(&str, usize)> = vec![(word.as_str(), 0)];
            while let Some(&(node, next)) = stack.last() {
                if next == 0 {
                    match state.get(node) {
                        Some(2) => {
                            stack.pop();
                            continue;
                        }
                        Some(1) => {
                            return Err(Error::Config(format!(
                                "taxonomy cycle through `{node}`"
                            )));
                        }
                        _ => {
                            state.insert(node, 1);
                        }
                    }
                }
                let ps = self.parents_of(node);
                if next < ps.len() {
                    stack.last_mut().unwrap().1 += 1;
                    let parent = ps[next].as_str();
                    match state.get(parent) {
                        Some(&1) => {
                            return Err(Error::Config(format!(
                                "taxonomy cycle through `{parent}`"
                            )));
                        }
                        Some(_) => {}
                        None => stack.push((parent, 0)),
                    }
                } else {
                    state.insert(node, 2);
                    stack.pop();
                }
            }
        }
        for word in self.parents.keys() {
            let mut reaches_root = false;
            let mut seen: HashSet<&str> = HashSet::new();
            let mut queue: VecDeque<&str> = VecDeque::from([word.as_str()]);
            while let Some(node) = queue.pop_front() {
                for parent in self.parents_of(node) {
                    if parent == &self.root {
                        reaches_root = true;
                    } else if seen.insert(parent) {
                        queue.push_back(parent);
                    }
                }
            }
            if !reaches_root {
                return Err(Error::Config(format!(
                    "taxonomy word `{word}` cannot reach root `{}`",
                    self.root
                )));
            }
        }
        Ok(())
    }

    /// Parses `taxonomy.tsv`: a `#root<TAB>word` header plus `child<TAB>parent` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut root: Option<String> = None;
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (left, right) = split_tsv(line, line_no)?;
            if left == "#root" {
                if root.replace(right.to_string()).is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "second #root header".into(),
                    });
                }
            } else {
                edges.push((left.to_string(), right.to_string()));
            }
        }
        let root = root.ok_or_else(|| Error::Parse {
            line: 1,
            message: "taxonomy file lacks a #root header".into(),
        })?;
        Taxonomy::new(&root, &edges)
    }
}

/// Per-word adjective/verb synset flags; absent words read as (false, false).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynsetFlags {
    table: BTreeMap<String, (bool, bool)>,
}

impl SynsetFlags {
    pub fn new(entries: impl IntoIterator<Item = (String, bool, bool)>) -> Self {
        SynsetFlags {
            table: entries
                .into_iter()
                .map(|(w, adj, verb)| (w, (adj, verb)))
                .collect(),
        }
    }

    pub fn has_adjective_synset(&self, word: &str) -> bool {
        self.table.get(word).map_or(false, |f| f.0)
    }

    pub fn has_verb_synset(&self, word: &str) -> bool {
        self.table.get(word).map_or(false, |f| f.1)
    }

    /// Parses `synsets.tsv`: lines `word<TAB>A|V|AV|-`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (word, flags) = split_tsv(line, line_no)?;
            let (adj, verb) = match flags {
                "A" => (true, false),
                "V" => (false, true),
                "AV" => (true, true),
                "-" => (false, false),
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("bad synset flags `{other}` (want A|V|AV|-)"),
                    });
                }
            };
            table.insert(word.to_string(), (adj, verb));
        }
        Ok(SynsetFlags { table })
    }
}

/// The two manually curated predicate lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredicateGroups {
    spatial: BTreeSet<String>,
    other_manual: BTreeSet<String>,
}

impl PredicateGroups {
    pub fn new(
        spatial: impl IntoIterator<Item = String>,
        other: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let spatial: BTreeSet<String> = spatial.into_iter().collect();
        let other_manual: BTreeSet<String> = other.into_iter().collect();
        if let Some(w) = spatial.intersection(&other_manual).next() {
            return Err(Error::Config(format!(
                "predicate `{w}` listed as both spatial and other"
            )));
        }
        Ok(PredicateGroups {
            spatial,
            other_manual,
        })
    }

    pub fn is_spatial(&self, word: &str) -> bool {
        self.spatial.contains(word)
    }

    /// Parses `predicates.tsv`: lines `word<TAB>spatial|other`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spatial = Vec::new();
        let mut other = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (word, group) = split_tsv(line, line_no)?;
            match group {
                "spatial" => spatial.push(word.to_string()),
                "other" => other.push(word.to_string()),
                bad => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("bad predicate group `{bad}` (want spatial|other)"),
                    });
                }
            }
        }
        PredicateGroups::new(spatial, other)
    }
}

/// Immutable bundle of all lexical resources.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    pub taxonomy: Taxonomy,
    pub flags: SynsetFlags,
    pub predicate_groups: PredicateGroups,
    pub irregular_plurals: BTreeMap<String, String>,
}

impl Lexicon {
    /// Parses `plurals.tsv`: lines `plural<TAB>singular`.
    pub fn parse_plurals(text: &str) -> Result<BTreeMap<String, String>> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (plural, singular) = split_tsv(line, line_no)?;
            map.insert(plural.to_string(), singular.to_string());
        }
        Ok(map)
    }

    /// Loads the full lexicon from the four TSV file contents.
    pub fn from_tsv(taxonomy: &str, synsets: &str, plurals: &str, predicates: &str) -> Result<Self> {
        Ok(Lexicon {
            taxonomy: Taxonomy::parse(taxonomy)?,
            flags: SynsetFlags::parse(synsets)?,
            predicate_groups: PredicateGroups::parse(predicates)?,
            irregular_plurals: Lexicon::parse_plurals(plurals)?,
        })
    }
}

fn split_tsv(line: &str, line_no: usize) -> Result<(&str, &str)> {
    line.split_once('\t').ok_or_else(|| Error::Parse {
        line: line_no,
        message: "expected two tab-separated columns".into(),
    })
}

/// Predicate group per the relationship cleanup: verb check first, then the
/// manual spatial list, then the fall-through group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredicateClass {
    Interaction,
    Spatial,
    Other,
}

/// Strips plural morphology. Unknown patterns come back unchanged.
///
/// Rules are applied to a fixed point (an irregular-table hit or a suffix rule
/// may expose another strippable suffix), which makes the function idempotent.
pub fn singularize(word: &str, lexicon: &Lexicon) -> String {
    let mut current = word.to_string();
    let mut seen: HashSet<String> = HashSet::new();
    while seen.insert(current.clone()) {
        let next = singularize_once(&current, lexicon);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn singularize_once(word: &str, lexicon: &Lexicon) -> String {
    if let Some(s) = lexicon.irregular_plurals.get(word) {
        return s.clone();
    }
    if word.len() > 4 {
        if let Some(stem) = word.strip_suffix("ies") {
            return format!("{stem}y");
        }
    }
    for suffix in ["ches", "shes", "xes", "ses", "zes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    if word.ends_with('s')
        && !word.ends_with("ss")
        && !word.ends_with("us")
        && !word.ends_with("is")
    {
        return word[..word.len() - 1].to_string();
    }
    word.to_string()
}

/// All strict ancestors of `word` in breadth-first order, deduplicated at
/// first occurrence, excluding the root. Words outside the taxonomy have no
/// ancestors.
pub fn hypernym_closure(word: &str, taxonomy: &Taxonomy) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    seen.insert(word);
    let mut queue: VecDeque<&str> = VecDeque::new();
    queue.push_back(word);
    while let Some(node) = queue.pop_front() {
        for parent in taxonomy.parents_of(node) {
            if seen.insert(parent) {
                if parent != taxonomy.root() {
                    out.push(parent.clone());
                }
                queue.push_back(parent);
            }
        }
    }
    out
}

/// Labels followed by each label's hypernym closure, first occurrence kept.
/// Intended for evaluation-time knowledge assembly only.
pub fn expand_categories(labels: &[String], taxonomy: &Taxonomy) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for label in labels {
        if seen.insert(label.clone()) {
            out.push(label.clone());
        }
    }
    for label in labels {
        for ancestor in hypernym_closure(label, taxonomy) {
            if seen.insert(ancestor.clone()) {
                out.push(ancestor);
            }
        }
    }
    out
}

/// Splits attributes into (adjectives, non-adjectives), preserving order.
pub fn split_attributes(attrs: &[String], flags: &SynsetFlags) -> (Vec<String>, Vec<String>) {
    let mut adjectives = Vec::new();
    let mut non_adjectives = Vec::new();
    for a in attrs {
        if flags.has_adjective_synset(a) {
            adjectives.push(a.clone());
        } else {
            non_adjectives.push(a.clone());
        }
    }
    (adjectives, non_adjectives)
}

/// Total classification of a predicate. The verb-synset check runs first,
/// mirroring how interaction predicates are filtered out before the manual
/// lists apply.
pub fn classify_predicate(pred: &str, lexicon: &Lexicon) -> PredicateClass {
    if lexicon.flags.has_verb_synset(pred) {
        PredicateClass::Interaction
    } else if lexicon.predicate_groups.is_spatial(pred) {
        PredicateClass::Spatial
    } else {
        PredicateClass::Other
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fixture_lexicon() -> Lexicon {
        let taxonomy = Taxonomy::new(
            "root",
            &[
                ("puppy".into(), "dog".into()),
                ("dog".into(), "animal".into()),
                ("animal".into(), "root".into()),
            ],
        )
        .unwrap();
        let flags = SynsetFlags::new([
            ("red".to_string(), true, false),
            ("wood".to_string(), false, false),
            ("holding".to_string(), false, true),
        ]);
        let predicate_groups =
            PredicateGroups::new(["above".to_string(), "on".to_string()], ["with".to_string()])
                .unwrap();
        Lexicon {
            taxonomy,
            flags,
            predicate_groups,
            irregular_plurals: [("mice".to_string(), "mouse".to_string())].into(),
        }
    }

    #[test]
    fn singularize_examples() {
        let lx = fixture_lexicon();
        assert_eq!(singularize("dogs", &lx), "dog");
        assert_eq!(singularize("benches", &lx), "bench");
        assert_eq!(singularize("glass", &lx), "glass");
        assert_eq!(singularize("glasses", &lx), "glass");
        assert_eq!(singularize("berries", &lx), "berry");
        assert_eq!(singularize("mice", &lx), "mouse");
        assert_eq!(singularize("buses", &lx), "bus");
        assert_eq!(singularize("boxes", &lx), "box");
        // -us / -is / -ss exclusions
        assert_eq!(singularize("cactus", &lx), "cactus");
        assert_eq!(singularize("this", &lx), "this");
    }

    proptest! {
        #[test]
        fn singularize_is_idempotent(word in "[a-z]{1,12}") {
            let lx = fixture_lexicon();
            let once = singularize(&word, &lx);
            prop_assert_eq!(singularize(&once, &lx), once);
        }
    }

    #[test]
    fn singularize_idempotent_on_nested_suffixes() {
        // "theses" strips to "thes", which the trailing-s rule strips again;
        // the fixed point makes a second application a no-op.
        let lx = fixture_lexicon();
        let once = singularize("theses", &lx);
        assert_eq!(singularize(&once, &lx), once);
    }

    #[test]
    fn closure_examples() {
        let lx = fixture_lexicon();
        assert_eq!(
            hypernym_closure("puppy", &lx.taxonomy),
            vec!["dog".to_string(), "animal".to_string()]
        );
        assert!(hypernym_closure("root", &lx.taxonomy).is_empty());
        assert!(hypernym_closure("zebra", &lx.taxonomy).is_empty());
    }

    #[test]
    fn expand_examples() {
        let lx = fixture_lexicon();
        assert_eq!(
            expand_categories(&["puppy".into()], &lx.taxonomy),
            vec!["puppy".to_string(), "dog".to_string(), "animal".to_string()]
        );
        assert!(expand_categories(&[], &lx.taxonomy).is_empty());
        assert_eq!(
            expand_categories(&["dog".into(), "puppy".into()], &lx.taxonomy),
            vec!["dog".to_string(), "puppy".to_string(), "animal".to_string()]
        );
    }

    #[test]
    fn split_attribute_examples() {
        let lx = fixture_lexicon();
        let (adj, non) = split_attributes(&["red".into(), "wood".into()], &lx.flags);
        assert_eq!(adj, vec!["red".to_string()]);
        assert_eq!(non, vec!["wood".to_string()]);
        let (adj, non) = split_attributes(&[], &lx.flags);
        assert!(adj.is_empty() && non.is_empty());
        let (_, non) = split_attributes(&["zzz".into()], &lx.flags);
        assert_eq!(non, vec!["zzz".to_string()]);
    }

    #[test]
    fn classify_examples() {
        let lx = fixture_lexicon();
        assert_eq!(classify_predicate("holding", &lx), PredicateClass::Interaction);
        assert_eq!(classify_predicate("above", &lx), PredicateClass::Spatial);
        assert_eq!(classify_predicate("of", &lx), PredicateClass::Other);
    }

    #[test]
    fn taxonomy_rejects_cycles_and_rooted_violations() {
        assert!(Taxonomy::new(
            "root",
            &[
                ("a".into(), "b".into()),
                ("b".into(), "a".into()),
                ("a".into(), "root".into()),
            ]
        )
        .is_err());
        // root must not have parents
        assert!(Taxonomy::new("root", &[("root".into(), "a".into())]).is_err());
        // unreachable root
        assert!(Taxonomy::new("root", &[("a".into(), "b".into())]).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let lx = Lexicon::from_tsv(
            "#root\tentity\ndog\tanimal\nanimal\tentity\n",
            "red\tA\nholding\tV\nshiny\tAV\nwood\t-\n",
            "mice\tmouse\n",
            "on\tspatial\nof\tother\n",
        )
        .unwrap();
        assert_eq!(lx.taxonomy.root(), "entity");
        assert!(lx.flags.has_adjective_synset("shiny"));
        assert!(lx.flags.has_verb_synset("shiny"));
        assert!(lx.predicate_groups.is_spatial("on"));
        assert_eq!(lx.irregular_plurals["mice"], "mouse");
        assert_eq!(hypernym_closure("dog", &lx.taxonomy), vec!["animal".to_string()]);
    }

    /// Random DAG: node i's parents have strictly larger indices (or the root),
    /// so acyclicity and rootedness hold by construction.
    pub(crate) fn random_taxonomy(rng: &mut ChaCha8Rng, n: usize) -> Taxonomy {
        let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            let n_parents = rng.gen_range(1..=3.min(n - i));
            let mut picked: Vec<usize> = Vec::new();
            for _ in 0..n_parents {
                // index > i, or n meaning the root
                let p = rng.gen_range(i + 1..=n);
                if !picked.contains(&p) {
                    picked.push(p);
                }
            }
            if picked.is_empty() {
                picked.push(n);
            }
            for p in picked {
                let parent = if p == n { "root".to_string() } else { words[p].clone() };
                edges.push((words[i].clone(), parent));
            }
        }
        Taxonomy::new("root", &edges).unwrap()
    }

    /// Level-synchronous closure, written independently of the BFS queue in
    /// the implementation.
    fn closure_oracle(word: &str, taxonomy: &Taxonomy) -> Vec<String> {
        let mut seen: HashSet<String> = HashSet::new();
        seen.insert(word.to_string());
        let mut level: Vec<String> = Vec::new();
        for p in taxonomy.parents_of(word) {
            if seen.insert(p.clone()) {
                level.push(p.clone());
            }
        }
        let mut ordered = level.clone();
        while !level.is_empty() {
            let mut next = Vec::new();
            for node in &level {
                for p in taxonomy.parents_of(node) {
                    if seen.insert(p.clone()) {
                        next.push(p.clone());
                    }
                }
            }
            ordered.extend(next.iter().cloned());
            level = next;
        }
        ordered.retain(|w| w != taxonomy.root());
        ordered
    }

    /// Set-fixpoint ancestors, a second independent route for membership.
    fn ancestor_set_oracle(word: &str, taxonomy: &Taxonomy) -> HashSet<String> {
        let mut set: HashSet<String> = HashSet::new();
        loop {
            let mut grew = false;
            let frontier: Vec<String> = std::iter::once(word.to_string())
                .chain(set.iter().cloned())
                .collect();
            for node in frontier {
                for p in taxonomy.parents_of(&node) {
                    if set.insert(p.clone()) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        set.remove(taxonomy.root());
        set
    }

    #[test]
    fn closure_matches_oracles_on_random_dags() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..25 {
            let n = rng.gen_range(2..60);
            let taxonomy = random_taxonomy(&mut rng, n);
            for i in 0..n {
                let word = format!("w{i}");
                let got = hypernym_closure(&word, &taxonomy);
                assert_eq!(got, closure_oracle(&word, &taxonomy), "order mismatch for {word}");
                let got_set: HashSet<String> = got.iter().cloned().collect();
                assert_eq!(got_set.len(), got.len(), "duplicates in closure of {word}");
                assert_eq!(got_set, ancestor_set_oracle(&word, &taxonomy));
                assert!(!got.contains(&word));
                assert!(!got.iter().any(|w| w == "root"));
            }
        }
    }
}

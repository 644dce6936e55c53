use std::collections::{BTreeSet, HashMap, HashSet};

use crate::tree::{normalize_name, KnowledgeTree};

/// Multi-word knowledge-point names, each stored as its normalized words.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    by_first: HashMap<String, Vec<Vec<String>>>,
}

impl Lexicon {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lex = Lexicon::default();
        for e in entries {
            lex.insert(e.as_ref());
        }
        lex
    }

    /// One entry per line; blank lines and `#` comments are skipped.
    pub fn parse(source: &str) -> Self {
        Self::new(
            source
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    /// Every multi-word knowledge point of the tree.
    pub fn from_tree(tree: &KnowledgeTree) -> Self {
        Self::new(tree.leaves().into_iter().filter(|l| l.contains('-')))
    }

    pub fn insert(&mut self, entry: &str) {
        let words: Vec<String> = normalize_name(entry).split('-').map(String::from).collect();
        if words.len() < 2 {
            return;
        }
        let bucket = self.by_first.entry(words[0].clone()).or_default();
        if !bucket.contains(&words) {
            bucket.push(words);
            // longest first, then lexicographic, so matching is deterministic
            bucket.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        }
    }

    pub fn extend(&mut self, other: &Lexicon) {
        for bucket in other.by_first.values() {
            for words in bucket {
                self.insert(&words.join(" "));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.by_first.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_first.is_empty()
    }
}

struct Unit {
    start: usize,
    end: usize,
    word: String,
}

fn units(text: &str) -> Vec<Unit> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let push = |out: &mut Vec<Unit>, s: usize, e: usize| {
        let word: String = text[s..e]
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        if !word.is_empty() {
            out.push(Unit { start: s, end: e, word });
        }
    };
    for (i, c) in text.char_indices() {
        let in_word = c.is_alphanumeric() || c == '\'' || c == '\u{2019}';
        match (in_word, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                push(&mut out, s, i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        push(&mut out, s, text.len());
    }
    out
}

fn joinable(sep: &str) -> bool {
    !sep.is_empty() && sep.chars().all(|c| c.is_whitespace() || c == '-')
}

/// Replaces every case-insensitive occurrence of a lexicon phrase with its
/// hyphen-joined token. Words of a phrase may be separated by whitespace or
/// hyphens. Scanning is left to right and the longest entry wins.
pub fn merge_multiword_terms(text: &str, lexicon: &Lexicon) -> String {
    if lexicon.is_empty() {
        return text.to_string();
    }
    let units = units(text);
    let mut out = String::with_capacity(text.len());
    let mut copied = 0;
    let mut i = 0;
    while i < units.len() {
        let matched = lexicon.by_first.get(&units[i].word).and_then(|cands| {
            cands.iter().find(|words| {
                i + words.len() <= units.len()
                    && words.iter().enumerate().all(|(o, w)| units[i + o].word == *w)
                    && (i..i + words.len() - 1)
                        .all(|j| joinable(&text[units[j].end..units[j + 1].start]))
            })
        });
        match matched {
            Some(words) => {
                let last = &units[i + words.len() - 1];
                out.push_str(&text[copied..units[i].start]);
                out.push_str(&words.join("-"));
                copied = last.end;
                i += words.len();
            }
            None => i += 1,
        }
    }
    out.push_str(&text[copied..]);
    out
}

#[derive(Debug, Clone, Default)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopWords(
            words
                .into_iter()
                .map(|w| normalize_name(w.as_ref()))
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    pub fn parse(source: &str) -> Self {
        Self::new(
            source
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenizedContent {
    pub tokens: Vec<String>,
    pub vocabulary: BTreeSet<String>,
}

impl TokenizedContent {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let vocabulary = tokens.iter().cloned().collect();
        TokenizedContent { tokens, vocabulary }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercased unigrams with punctuation stripped and stopwords removed.
/// Hyphenated tokens such as merged knowledge points stay whole.
pub fn tokenize(text: &str, stopwords: &StopWords) -> TokenizedContent {
    TokenizedContent::from_tokens(
        text.split(|c: char| !(c.is_alphanumeric() || c == '-' || c == '\'' || c == '\u{2019}'))
            .map(normalize_name)
            .filter(|t| !t.is_empty() && !stopwords.contains(t)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_phrase() {
        let lex = Lexicon::new(["inverse document frequency"]);
        assert_eq!(
            merge_multiword_terms("inverse document frequency", &lex),
            "inverse-document-frequency"
        );
        assert_eq!(
            merge_multiword_terms("The Inverse  Document\nFrequency, weighted.", &lex),
            "The inverse-document-frequency, weighted."
        );
    }

    #[test]
    fn empty_lexicon_is_identity() {
        let text = "Hidden Markov models, or Bayesian networks.";
        assert_eq!(merge_multiword_terms(text, &Lexicon::default()), text);
    }

    #[test]
    fn longest_match_wins() {
        let lex = Lexicon::new(["hidden markov", "hidden markov model"]);
        assert_eq!(merge_multiword_terms("hidden markov model", &lex), "hidden-markov-model");
        assert_eq!(merge_multiword_terms("a hidden markov chain", &lex), "a hidden-markov chain");
    }

    #[test]
    fn punctuation_breaks_a_phrase() {
        let lex = Lexicon::new(["bayes rule"]);
        assert_eq!(merge_multiword_terms("Bayes. Rule", &lex), "Bayes. Rule");
        assert_eq!(merge_multiword_terms("Bayes' rule holds", &lex), "bayes-rule holds");
    }

    #[test]
    fn single_word_entries_ignored() {
        let lex = Lexicon::new(["entropy"]);
        assert!(lex.is_empty());
    }

    #[test]
    fn tokenize_examples() {
        let stop = StopWords::new(["is"]);
        assert_eq!(tokenize("Bayes' theorem is wrong", &stop).tokens, vec!["bayes", "theorem", "wrong"]);
        assert!(tokenize("", &stop).tokens.is_empty());
        let t = tokenize("inverse-document-frequency scores", &StopWords::default());
        assert_eq!(t.tokens, vec!["inverse-document-frequency", "scores"]);
        assert_eq!(t.vocabulary.len(), 2);
    }

    #[test]
    fn tree_lexicon() {
        let tree = KnowledgeTree::parse("s:\n  Bayes' rule\n  entropy\n").unwrap();
        let lex = Lexicon::from_tree(&tree);
        assert_eq!(lex.len(), 1);
        assert_eq!(merge_multiword_terms("bayes rule", &lex), "bayes-rule");
    }
}

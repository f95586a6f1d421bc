//! Add-one smoothed trigram language model.
//!
//! Words are interned into ids with three reserved slots, so a literal
//! `</s>` or `<unk>` in the text never collides with the markers:
//!
//! | id | symbol |
//! |----|--------|
//! | 0  | unknown word |
//! | 1  | end of sentence |
//! | 2  | begin of sentence (context only, never predicted) |
//! | 3… | training words in sorted order |
//!
//! The vocabulary size used by the smoothing counts the unknown word and the
//! end marker but not the begin marker.
//!
//! Serialized form (`version` 1):
//!
//! ```json
//! {"version":1,"vocab":["a","b"],"unigrams":[[id,n]],"bigrams":[[id,id,n]],"trigrams":[[id,id,id,n]]}
//! ```
//!
//! `vocab[i]` has id `i + 3`; `bigrams` are trigram-context counts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Token;
use crate::{Error, Result};

pub const UNK: u32 = 0;
pub const EOS: u32 = 1;
pub const BOS: u32 = 2;
const FIRST_WORD: u32 = 3;
const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol<'a> {
    Bos,
    Eos,
    Unk,
    Word(&'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigramLm {
    words: Vec<String>,
    index: HashMap<String, u32>,
    unigrams: BTreeMap<u32, u64>,
    contexts: BTreeMap<[u32; 2], u64>,
    trigrams: BTreeMap<[u32; 3], u64>,
}

impl TrigramLm {
    /// Counts padded trigrams over every non-empty sentence.
    pub fn train<I, S>(sentences: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[Token]>,
    {
        let sentences: Vec<S> = sentences
            .into_iter()
            .filter(|s| !s.as_ref().is_empty())
            .collect();
        if sentences.is_empty() {
            return Err(Error::EmptyLmCorpus);
        }
        let vocab: BTreeSet<&str> = sentences
            .iter()
            .flat_map(|s| s.as_ref().iter().map(Token::surface))
            .collect();
        let words: Vec<String> = vocab.into_iter().map(str::to_string).collect();
        let mut lm = TrigramLm::with_words(words);
        for s in &sentences {
            let ids: Vec<u32> = s.as_ref().iter().map(|t| lm.id(t.surface())).collect();
            for tri in padded(&ids) {
                *lm.unigrams.entry(tri[2]).or_default() += 1;
                *lm.contexts.entry([tri[0], tri[1]]).or_default() += 1;
                *lm.trigrams.entry(tri).or_default() += 1;
            }
        }
        Ok(lm)
    }

    fn with_words(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32 + FIRST_WORD))
            .collect();
        TrigramLm {
            words,
            index,
            unigrams: BTreeMap::new(),
            contexts: BTreeMap::new(),
            trigrams: BTreeMap::new(),
        }
    }

    /// Id of a word surface; unseen words map to [`UNK`].
    pub fn id(&self, word: &str) -> u32 {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    fn symbol_id(&self, s: Symbol<'_>) -> u32 {
        match s {
            Symbol::Bos => BOS,
            Symbol::Eos => EOS,
            Symbol::Unk => UNK,
            Symbol::Word(w) => self.id(w),
        }
    }

    /// Words plus the unknown and end markers.
    pub fn vocab_size(&self) -> usize {
        self.words.len() + 2
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Every predictable outcome: training words, [`Symbol::Unk`], [`Symbol::Eos`].
    pub fn outcomes(&self) -> impl Iterator<Item = Symbol<'_>> {
        [Symbol::Unk, Symbol::Eos]
            .into_iter()
            .chain(self.words.iter().map(|w| Symbol::Word(w)))
    }

    pub fn unigram_count(&self, word: Symbol<'_>) -> u64 {
        let id = self.symbol_id(word);
        self.unigrams.get(&id).copied().unwrap_or(0)
    }

    pub fn context_count(&self, context: [Symbol<'_>; 2]) -> u64 {
        let key = [self.symbol_id(context[0]), self.symbol_id(context[1])];
        self.contexts.get(&key).copied().unwrap_or(0)
    }

    pub fn trigram_count(&self, context: [Symbol<'_>; 2], word: Symbol<'_>) -> u64 {
        let key = [
            self.symbol_id(context[0]),
            self.symbol_id(context[1]),
            self.symbol_id(word),
        ];
        self.trigrams.get(&key).copied().unwrap_or(0)
    }

    fn prob_ids(&self, tri: [u32; 3]) -> f64 {
        let num = self.trigrams.get(&tri).copied().unwrap_or(0) + 1;
        let den =
            self.contexts.get(&[tri[0], tri[1]]).copied().unwrap_or(0) + self.vocab_size() as u64;
        num as f64 / den as f64
    }

    /// `(count(context, word) + 1) / (count(context) + vocab_size)`.
    pub fn trigram_prob(&self, context: [Symbol<'_>; 2], word: Symbol<'_>) -> f64 {
        self.prob_ids([
            self.symbol_id(context[0]),
            self.symbol_id(context[1]),
            self.symbol_id(word),
        ])
    }

    /// Mean base-10 log-probability over the sentence's `len + 1` padded trigrams.
    pub fn score(&self, sentence: &[Token]) -> Result<f64> {
        if sentence.is_empty() {
            return Err(Error::EmptySentence);
        }
        let ids: Vec<u32> = sentence.iter().map(|t| self.id(t.surface())).collect();
        let tris = padded(&ids);
        let total: f64 = tris.iter().map(|&t| self.prob_ids(t).log10()).sum();
        Ok(total / tris.len() as f64)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::resources::write_json(path.as_ref(), &self.to_file())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: LmFile = crate::resources::read_json(path.as_ref())?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("lm serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LmFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::from_file(file)
    }

    fn to_file(&self) -> LmFile {
        LmFile {
            version: FORMAT_VERSION,
            vocab: self.words.clone(),
            unigrams: self.unigrams.iter().map(|(&k, &n)| (k, n)).collect(),
            bigrams: self
                .contexts
                .iter()
                .map(|(k, &n)| (k[0], k[1], n))
                .collect(),
            trigrams: self
                .trigrams
                .iter()
                .map(|(k, &n)| (k[0], k[1], k[2], n))
                .collect(),
        }
    }

    fn from_file(file: LmFile) -> Result<Self> {
        if file.version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(file.version));
        }
        let mut lm = TrigramLm::with_words(file.vocab);
        if lm.index.len() != lm.words.len() {
            return Err(Error::Schema("duplicate vocabulary entry".into()));
        }
        let limit = lm.words.len() as u32 + FIRST_WORD;
        let check = |id: u32| {
            if id < limit {
                Ok(id)
            } else {
                Err(Error::Schema(format!("token id {id} out of range")))
            }
        };
        for (k, n) in file.unigrams {
            lm.unigrams.insert(check(k)?, n);
        }
        for (a, b, n) in file.bigrams {
            lm.contexts.insert([check(a)?, check(b)?], n);
        }
        for (a, b, c, n) in file.trigrams {
            let key = [check(a)?, check(b)?, check(c)?];
            if lm.contexts.get(&[key[0], key[1]]).copied().unwrap_or(0) < n {
                return Err(Error::Schema(
                    "trigram count exceeds its context count".into(),
                ));
            }
            lm.trigrams.insert(key, n);
        }
        Ok(lm)
    }
}

fn padded(ids: &[u32]) -> Vec<[u32; 3]> {
    let mut seq = Vec::with_capacity(ids.len() + 3);
    seq.extend([BOS, BOS]);
    seq.extend_from_slice(ids);
    seq.push(EOS);
    seq.windows(3).map(|w| [w[0], w[1], w[2]]).collect()
}

#[derive(Serialize, Deserialize)]
struct LmFile {
    version: u64,
    vocab: Vec<String>,
    unigrams: Vec<(u32, u64)>,
    bigrams: Vec<(u32, u32, u64)>,
    trigrams: Vec<(u32, u32, u32, u64)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn lm(corpus: &[&str]) -> TrigramLm {
        TrigramLm::train(corpus.iter().map(|s| tokenize(s))).unwrap()
    }

    #[test]
    fn counts_by_hand() {
        let m = lm(&["a b"]);
        assert_eq!(m.vocab_size(), 4);
        assert_eq!(m.unigram_count(Symbol::Word("a")), 1);
        assert_eq!(m.unigram_count(Symbol::Word("b")), 1);
        assert_eq!(m.unigram_count(Symbol::Eos), 1);
        assert_eq!(m.unigram_count(Symbol::Unk), 0);

        let m = lm(&["a", "a"]);
        assert_eq!(m.unigram_count(Symbol::Word("a")), 2);
    }

    #[test]
    fn empty_corpus() {
        let none: Vec<Vec<Token>> = vec![];
        assert!(matches!(TrigramLm::train(none), Err(Error::EmptyLmCorpus)));
        let blank = vec![tokenize("   ")];
        assert!(matches!(TrigramLm::train(blank), Err(Error::EmptyLmCorpus)));
    }

    #[test]
    fn laplace_by_hand() {
        let m = lm(&["a b"]);
        let p = m.trigram_prob([Symbol::Bos, Symbol::Bos], Symbol::Word("a"));
        assert_eq!(p, 0.4);
        assert_eq!(
            m.trigram_prob([Symbol::Bos, Symbol::Word("a")], Symbol::Word("b")),
            0.4
        );
        assert_eq!(
            m.trigram_prob([Symbol::Word("a"), Symbol::Word("b")], Symbol::Eos),
            0.4
        );
        let unseen = m.trigram_prob([Symbol::Word("a"), Symbol::Word("b")], Symbol::Word("x"));
        assert_eq!(
            unseen,
            m.trigram_prob([Symbol::Word("a"), Symbol::Word("b")], Symbol::Unk)
        );
        assert!(unseen > 0.0);
    }

    #[test]
    fn marker_literals_do_not_collide() {
        let m = lm(&["</s> <unk>"]);
        assert_eq!(m.vocab_size(), 4);
        assert_eq!(m.unigram_count(Symbol::Word("</s>")), 1);
        assert_eq!(m.unigram_count(Symbol::Eos), 1);
    }

    #[test]
    fn sentence_score() {
        let m = lm(&["a b"]);
        let v = m.score(&tokenize("a b")).unwrap();
        assert!((v - 0.4f64.log10()).abs() < 1e-12);
        assert!((v + 0.39794).abs() < 1e-5);
        assert!(matches!(m.score(&[]), Err(Error::EmptySentence)));
        let oov = m.score(&tokenize("zz yy xx")).unwrap();
        assert!(oov.is_finite() && oov < 0.0);
    }

    #[test]
    fn order_independent() {
        let a = lm(&["a b c", "c b", "a a"]);
        let b = lm(&["a a", "a b c", "c b"]);
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn json_round_trip() {
        let m = lm(&["the cat sat .", "the dog , sat"]);
        let back = TrigramLm::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let bad = m.to_json().replacen("\"version\":1", "\"version\":7", 1);
        assert!(matches!(
            TrigramLm::from_json(&bad),
            Err(Error::UnsupportedVersion(7))
        ));
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec(
            proptest::collection::vec(
                prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g"]),
                1..6,
            )
            .prop_map(|w| w.join(" ")),
            1..6,
        )
    }

    proptest! {
        #[test]
        fn normalizes_over_vocab(corpus in corpus_strategy()) {
            let m = TrigramLm::train(corpus.iter().map(|s| tokenize(s))).unwrap();
            prop_assert!(m.vocab_size() <= 10);
            let mut contexts: Vec<Symbol> = vec![Symbol::Bos, Symbol::Unk, Symbol::Eos];
            contexts.extend(m.words().iter().map(|w| Symbol::Word(w)));
            for &a in &contexts {
                for &b in &contexts {
                    let total: f64 = m.outcomes().map(|w| m.trigram_prob([a, b], w)).sum();
                    prop_assert!((total - 1.0).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn extra_occurrence_never_lowers(corpus in corpus_strategy(), pick in 0usize..100) {
            let m = TrigramLm::train(corpus.iter().map(|s| tokenize(s))).unwrap();
            let words = m.words();
            let a = &words[pick % words.len()];
            let b = &words[(pick / 3) % words.len()];
            let c = &words[(pick / 7) % words.len()];
            prop_assume!(!(a == b && b == c));
            let ctx = [Symbol::Word(a), Symbol::Word(b)];
            let before = m.trigram_prob(ctx, Symbol::Word(c));
            let mut more = corpus.clone();
            more.push(format!("{a} {b} {c}"));
            let m2 = TrigramLm::train(more.iter().map(|s| tokenize(s))).unwrap();
            prop_assert_eq!(m2.trigram_count(ctx, Symbol::Word(c)), m.trigram_count(ctx, Symbol::Word(c)) + 1);
            prop_assert!(m2.trigram_prob(ctx, Symbol::Word(c)) >= before);
        }

        #[test]
        fn context_dominates_trigram(corpus in corpus_strategy()) {
            let m = TrigramLm::train(corpus.iter().map(|s| tokenize(s))).unwrap();
            for (k, &n) in &m.trigrams {
                prop_assert!(m.contexts[&[k[0], k[1]]] >= n);
            }
        }
    }
}

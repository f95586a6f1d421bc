//! Corpus n-gram counts (n = 1..3) with nearest-rank quartile thresholds.
//!
//! N-grams never cross sentence boundaries and are not padded. Keys are the
//! token surfaces joined by a single space, which is unambiguous because
//! tokens never contain whitespace.
//!
//! An n-gram is *low frequency* when its corpus count is `<= q1[n]` (unseen
//! n-grams have count 0 and are therefore always low) and *high frequency*
//! when its count is `>= q3[n]` and non-zero.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Token;
use crate::{Error, Result};

const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramTable {
    pub counts: BTreeMap<String, u64>,
    pub q1: u64,
    pub q3: u64,
    /// No n-grams of this order exist in the corpus; thresholds are 0.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyStats {
    pub version: u64,
    pub side: Side,
    /// Tables for n = 1, 2, 3.
    pub orders: [NgramTable; 3],
}

/// A percentage feature together with whether the input was too short to
/// contain a single n-gram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Share {
    pub percent: f64,
    pub degenerate: bool,
}

/// Value at 1-based rank `ceil(p * m)` of the sorted values; 0 when empty.
pub fn nearest_rank(sorted: &[u64], p: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn ngram_keys(sentence: &[Token], n: usize) -> impl Iterator<Item = String> + '_ {
    sentence
        .windows(n)
        .map(|w| w.iter().map(Token::surface).collect::<Vec<_>>().join(" "))
}

fn check_order(n: usize) -> Result<()> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "n-gram order {n} not in 1..=3"
        )))
    }
}

impl FrequencyStats {
    pub fn build<I, S>(corpus: I, side: Side) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[Token]>,
    {
        let mut counts: [BTreeMap<String, u64>; 3] = Default::default();
        let mut any = false;
        for sentence in corpus {
            let sentence = sentence.as_ref();
            any = true;
            for (n, map) in counts.iter_mut().enumerate() {
                for key in ngram_keys(sentence, n + 1) {
                    *map.entry(key).or_default() += 1;
                }
            }
        }
        if !any || counts[0].is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let orders = counts.map(|counts| {
            let mut values: Vec<u64> = counts.values().copied().collect();
            values.sort_unstable();
            NgramTable {
                q1: nearest_rank(&values, 0.25),
                q3: nearest_rank(&values, 0.75),
                empty: values.is_empty(),
                counts,
            }
        });
        Ok(FrequencyStats {
            version: FORMAT_VERSION,
            side,
            orders,
        })
    }

    pub fn table(&self, n: usize) -> &NgramTable {
        &self.orders[n - 1]
    }

    pub fn count(&self, ngram: &[Token]) -> u64 {
        if !(1..=3).contains(&ngram.len()) {
            return 0;
        }
        let key = ngram_keys(ngram, ngram.len()).next().unwrap_or_default();
        self.table(ngram.len())
            .counts
            .get(&key)
            .copied()
            .unwrap_or(0)
    }

    fn share(
        &self,
        sentence: &[Token],
        n: usize,
        pred: impl Fn(u64, &NgramTable) -> bool,
    ) -> Result<Share> {
        check_order(n)?;
        if sentence.len() < n {
            return Ok(Share {
                percent: 0.0,
                degenerate: true,
            });
        }
        let table = self.table(n);
        let mut total = 0usize;
        let mut hits = 0usize;
        for key in ngram_keys(sentence, n) {
            total += 1;
            let c = table.counts.get(&key).copied().unwrap_or(0);
            if pred(c, table) {
                hits += 1;
            }
        }
        Ok(Share {
            percent: 100.0 * hits as f64 / total as f64,
            degenerate: false,
        })
    }

    /// Percentage of the sentence's n-grams with corpus count `<= q1[n]`.
    pub fn low_freq_pct(&self, sentence: &[Token], n: usize) -> Result<Share> {
        self.share(sentence, n, |c, t| c <= t.q1)
    }

    /// Percentage of the sentence's n-grams with corpus count `>= q3[n]`.
    pub fn high_freq_pct(&self, sentence: &[Token], n: usize) -> Result<Share> {
        self.share(sentence, n, |c, t| c > 0 && c >= t.q3)
    }

    /// Percentage of tokens seen at least once in the corpus.
    pub fn words_in_corpus_pct(&self, sentence: &[Token]) -> Result<f64> {
        Ok(100.0 * self.presence_fraction(sentence)?)
    }

    /// Fraction of tokens seen at least once in the corpus, in `[0, 1]`.
    pub fn presence_fraction(&self, sentence: &[Token]) -> Result<f64> {
        if sentence.is_empty() {
            return Err(Error::EmptySentence);
        }
        let unigrams = &self.table(1).counts;
        let present = sentence
            .iter()
            .filter(|t| unigrams.contains_key(t.surface()))
            .count();
        Ok(present as f64 / sentence.len() as f64)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::resources::write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let stats: FrequencyStats = crate::resources::read_json(path.as_ref())?;
        if stats.version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(stats.version));
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn stats(corpus: &[&str]) -> FrequencyStats {
        FrequencyStats::build(corpus.iter().map(|s| tokenize(s)), Side::Source).unwrap()
    }

    #[test]
    fn hand_counts() {
        let st = stats(&["a b", "a"]);
        let t1 = st.table(1);
        assert_eq!(t1.counts["a"], 2);
        assert_eq!(t1.counts["b"], 1);
        assert_eq!((t1.q1, t1.q3), (1, 2));
        assert_eq!(st.table(2).counts["a b"], 1);
        assert!(st.table(3).empty);
    }

    #[test]
    fn nearest_rank_by_hand() {
        let v = [1, 1, 2, 3, 4, 5, 6, 8];
        assert_eq!(nearest_rank(&v, 0.25), 1);
        assert_eq!(nearest_rank(&v, 0.75), 5);
        assert_eq!(nearest_rank(&[], 0.25), 0);
        assert_eq!(nearest_rank(&[7], 0.75), 7);
    }

    #[test]
    fn single_word_corpus() {
        let st = stats(&["a"]);
        let t3 = st.table(3);
        assert!(t3.counts.is_empty());
        assert_eq!((t3.q1, t3.q3), (0, 0));
    }

    #[test]
    fn empty_corpus() {
        let none: Vec<Vec<Token>> = vec![];
        assert!(FrequencyStats::build(none, Side::Source).is_err());
    }

    #[test]
    fn low_and_high() {
        let st = stats(&["a b", "a"]);
        let s = tokenize("a b");
        assert_eq!(st.low_freq_pct(&s, 1).unwrap().percent, 50.0);
        assert_eq!(st.high_freq_pct(&s, 1).unwrap().percent, 50.0);
        let oov = tokenize("x y z");
        assert_eq!(st.low_freq_pct(&oov, 1).unwrap().percent, 100.0);
        assert_eq!(st.high_freq_pct(&oov, 1).unwrap().percent, 0.0);
        let short = st.low_freq_pct(&tokenize("a"), 3).unwrap();
        assert_eq!(
            short,
            Share {
                percent: 0.0,
                degenerate: true
            }
        );
        assert!(st.low_freq_pct(&s, 4).is_err());
    }

    #[test]
    fn equal_counts_are_both_low_and_high() {
        let st = stats(&["a b c", "c b a"]);
        let t = st.table(1);
        assert_eq!((t.q1, t.q3), (2, 2));
        let s = tokenize("a b");
        assert_eq!(st.low_freq_pct(&s, 1).unwrap().percent, 100.0);
        assert_eq!(st.high_freq_pct(&s, 1).unwrap().percent, 100.0);
    }

    #[test]
    fn presence() {
        let st = stats(&["a b", "a"]);
        assert_eq!(st.words_in_corpus_pct(&tokenize("a x")).unwrap(), 50.0);
        assert_eq!(st.words_in_corpus_pct(&tokenize("a b a")).unwrap(), 100.0);
        assert_eq!(st.words_in_corpus_pct(&tokenize("q")).unwrap(), 0.0);
        assert!(st.words_in_corpus_pct(&[]).is_err());
        assert_eq!(st.presence_fraction(&tokenize("a x")).unwrap(), 0.5);
    }

    #[test]
    fn json_round_trip() {
        let st = stats(&["the cat sat", "the dog sat down"]);
        let text = serde_json::to_string(&st).unwrap();
        let back: FrequencyStats = serde_json::from_str(&text).unwrap();
        assert_eq!(back, st);
    }

    fn corpus() -> impl Strategy<Value = Vec<String>> {
        let words = prop::sample::select(vec!["a", "b", "c", "d", "e"]);
        proptest::collection::vec(
            proptest::collection::vec(words, 1..7).prop_map(|w| w.join(" ")),
            1..8,
        )
    }

    proptest! {
        #[test]
        fn bands_partition(c in corpus(), probe in "[a-f]( [a-f]){0,6}", n in 1usize..=3) {
            let st = FrequencyStats::build(c.iter().map(|s| tokenize(s)), Side::Source).unwrap();
            let t = st.table(n);
            prop_assert!(t.q1 <= t.q3);
            prop_assert!(t.counts.values().all(|&v| v >= 1));
            let s = tokenize(&probe);
            prop_assume!(s.len() >= n && t.q1 < t.q3);
            let keys: Vec<String> = ngram_keys(&s, n).collect();
            let mid = keys.iter().filter(|k| {
                let c = t.counts.get(*k).copied().unwrap_or(0);
                c > t.q1 && c < t.q3
            }).count();
            let mid_pct = 100.0 * mid as f64 / keys.len() as f64;
            let low = st.low_freq_pct(&s, n).unwrap().percent;
            let high = st.high_freq_pct(&s, n).unwrap().percent;
            prop_assert!((low + mid_pct + high - 100.0).abs() < 1e-9);
        }

        #[test]
        fn corpus_sentences_fully_present(c in corpus(), pick in 0usize..8) {
            let st = FrequencyStats::build(c.iter().map(|s| tokenize(s)), Side::Source).unwrap();
            let s = tokenize(&c[pick % c.len()]);
            prop_assert_eq!(st.words_in_corpus_pct(&s).unwrap(), 100.0);
        }
    }
}

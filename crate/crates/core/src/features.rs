//! The 17 sentence-pair features.
//!
//! | index | feature |
//! |-------|---------|
//! | 0  | f1: tokens in the source |
//! | 1  | f2: tokens in the target |
//! | 2  | f3: mean source token length in characters |
//! | 3  | f4: source LM mean log10 trigram probability |
//! | 4  | f5: target LM mean log10 trigram probability |
//! | 5  | f6: fraction of target tokens present in the target corpus |
//! | 6  | f7: mean translations per source token with p >= 0.2 |
//! | 7  | f8: mean translations per source token with p >= 0.1 |
//! | 8  | f9: % low-frequency source unigrams |
//! | 9  | f10: % high-frequency source unigrams |
//! | 10 | f11: % low-frequency source bigrams |
//! | 11 | f12: % high-frequency source bigrams |
//! | 12 | f13: % low-frequency source trigrams |
//! | 13 | f14: % high-frequency source trigrams |
//! | 14 | f15: % source tokens present in the source corpus |
//! | 15 | f16: punctuation tokens in the source |
//! | 16 | f17: punctuation tokens in the target |
//!
//! Punctuation tokens take part in every feature; only f16/f17 single them out.

use std::fmt::Write as _;
use std::fs;
use std::ops::Index;
use std::path::Path;

use crate::corpus::{AnnotatedPair, Label, Token};
use crate::freq_stats::FrequencyStats;
use crate::lexicon::LexicalTable;
use crate::ngram_lm::TrigramLm;
use crate::par::{map_ordered, Execution};
use crate::{Error, Result};

pub const FEATURE_COUNT: usize = 17;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "source_tokens",
    "target_tokens",
    "source_mean_token_length",
    "source_lm_logprob",
    "target_lm_logprob",
    "target_corpus_presence",
    "source_translations_p20",
    "source_translations_p10",
    "source_low_freq_unigrams_pct",
    "source_high_freq_unigrams_pct",
    "source_low_freq_bigrams_pct",
    "source_high_freq_bigrams_pct",
    "source_low_freq_trigrams_pct",
    "source_high_freq_trigrams_pct",
    "source_corpus_presence_pct",
    "source_punctuation",
    "target_punctuation",
];

const HIGH_PROB: f64 = 0.2;
const LOW_PROB: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Feature by its 1-based number.
    pub fn feature(&self, number: usize) -> f64 {
        self.0[number - 1]
    }
}

impl Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureResources {
    pub source_lm: TrigramLm,
    pub target_lm: TrigramLm,
    pub lexical_table: LexicalTable,
    pub source_stats: FrequencyStats,
    pub target_stats: FrequencyStats,
    /// Hash identifying the training corpus and parameters.
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFeatures {
    pub source_tokens: f64,
    pub target_tokens: f64,
    pub source_mean_len: f64,
    pub source_punct: f64,
    pub target_punct: f64,
}

pub fn surface_features(source: &[Token], target: &[Token]) -> Result<SurfaceFeatures> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptySentence);
    }
    let chars: usize = source.iter().map(Token::char_len).sum();
    let punct = |s: &[Token]| s.iter().filter(|t| t.is_punct()).count() as f64;
    Ok(SurfaceFeatures {
        source_tokens: source.len() as f64,
        target_tokens: target.len() as f64,
        source_mean_len: chars as f64 / source.len() as f64,
        source_punct: punct(source),
        target_punct: punct(target),
    })
}

/// Features (1-based numbers) that fell back to 0.0 because the source was
/// shorter than the n-gram order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub degenerate: Vec<usize>,
}

fn ctx<T>(number: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Feature {
        index: number,
        source: Box::new(e),
    })
}

impl FeatureResources {
    pub fn extract(&self, source: &[Token], target: &[Token]) -> Result<FeatureVector> {
        self.extract_with_diagnostics(source, target)
            .map(|(v, _)| v)
    }

    pub fn extract_with_diagnostics(
        &self,
        source: &[Token],
        target: &[Token],
    ) -> Result<(FeatureVector, Diagnostics)> {
        let surface = surface_features(source, target)?;
        let mut diag = Diagnostics::default();
        let mut v = [0.0; FEATURE_COUNT];
        v[0] = surface.source_tokens;
        v[1] = surface.target_tokens;
        v[2] = surface.source_mean_len;
        v[3] = ctx(4, self.source_lm.score(source))?;
        v[4] = ctx(5, self.target_lm.score(target))?;
        v[5] = ctx(6, self.target_stats.presence_fraction(target))?;
        v[6] = ctx(7, self.lexical_table.avg_translations(source, HIGH_PROB))?;
        v[7] = ctx(8, self.lexical_table.avg_translations(source, LOW_PROB))?;
        for n in 1..=3 {
            let low_no = 9 + 2 * (n - 1);
            let low = ctx(low_no, self.source_stats.low_freq_pct(source, n))?;
            let high = ctx(low_no + 1, self.source_stats.high_freq_pct(source, n))?;
            if low.degenerate {
                diag.degenerate.extend([low_no, low_no + 1]);
            }
            v[low_no - 1] = low.percent;
            v[low_no] = high.percent;
        }
        v[14] = ctx(15, self.source_stats.words_in_corpus_pct(source))?;
        v[15] = surface.source_punct;
        v[16] = surface.target_punct;
        Ok((FeatureVector(v), diag))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureVector>,
    pub labels: Vec<Label>,
    /// Row index and diagnostics for rows with degenerate features.
    pub diagnostics: Vec<(usize, Diagnostics)>,
}

impl FeatureMatrix {
    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.0.to_vec()).collect()
    }

    /// CSV with header `f1,...,f17,label`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 1..=FEATURE_COUNT {
            let _ = write!(out, "f{i},");
        }
        out.push_str("label\n");
        for (row, label) in self.rows.iter().zip(&self.labels) {
            for v in row.values() {
                let _ = write!(out, "{v},");
            }
            out.push_str(label.as_str());
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Extracts every row; row order follows `pairs` whatever the execution mode.
pub fn extract_batch(
    res: &FeatureResources,
    pairs: &[AnnotatedPair],
    mode: Execution,
) -> Result<FeatureMatrix> {
    let results = map_ordered(pairs, mode, |_, p| {
        res.extract_with_diagnostics(&p.source, &p.target)
    });
    let mut matrix = FeatureMatrix::default();
    let mut failures = Vec::new();
    for (i, (r, p)) in results.into_iter().zip(pairs).enumerate() {
        match r {
            Ok((v, d)) => {
                if !d.degenerate.is_empty() {
                    matrix.diagnostics.push((i, d));
                }
                matrix.rows.push(v);
                matrix.labels.push(p.label);
            }
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if failures.is_empty() {
        Ok(matrix)
    } else {
        Err(Error::Batch { failures })
    }
}

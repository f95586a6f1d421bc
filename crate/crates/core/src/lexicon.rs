//! Word-based lexical translation table, `p(target | source)`, trained with
//! IBM Model 1 expectation maximization.
//!
//! Serialized form (`version` 1):
//!
//! ```json
//! {"version":1,"iterations_run":5,"null_alignment":false,"prob":{"the":{"das":0.75,"haus":0.25}}}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Token;
use crate::{Error, Result};

/// Source entry for the empty word when null alignment is enabled. Token
/// surfaces are lowercased, so it cannot clash with a real word.
pub const NULL_WORD: &str = "NULL";
const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Model1Config {
    pub iterations: usize,
    pub null_alignment: bool,
}

impl Default for Model1Config {
    fn default() -> Self {
        Model1Config {
            iterations: 5,
            null_alignment: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexicalTable {
    sources: Vec<String>,
    targets: Vec<String>,
    source_index: HashMap<String, u32>,
    target_index: HashMap<String, u32>,
    // rows[s] holds (target id, p(t|s)) sorted by target id
    rows: Vec<Vec<(u32, f64)>>,
    iterations_run: usize,
    null_alignment: bool,
}

struct Interned {
    source: Vec<Vec<u32>>,
    target: Vec<Vec<u32>>,
}

impl LexicalTable {
    pub fn train<'a, I>(pairs: I, config: Model1Config) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [Token], &'a [Token])>,
    {
        Self::train_traced(pairs, config).map(|(table, _)| table)
    }

    /// Trains and also returns the corpus log-likelihood before the first
    /// and after every EM round (`iterations + 1` values).
    pub fn train_traced<'a, I>(pairs: I, config: Model1Config) -> Result<(Self, Vec<f64>)>
    where
        I: IntoIterator<Item = (&'a [Token], &'a [Token])>,
    {
        let pairs: Vec<(&[Token], &[Token])> = pairs
            .into_iter()
            .filter(|(s, t)| !s.is_empty() && !t.is_empty())
            .collect();
        if pairs.is_empty() {
            return Err(Error::EmptyCorpus);
        }

        let mut source_vocab: BTreeSet<&str> = pairs
            .iter()
            .flat_map(|(s, _)| s.iter().map(Token::surface))
            .collect();
        if config.null_alignment {
            source_vocab.insert(NULL_WORD);
        }
        let target_vocab: BTreeSet<&str> = pairs
            .iter()
            .flat_map(|(_, t)| t.iter().map(Token::surface))
            .collect();
        let mut table = LexicalTable::from_vocab(
            source_vocab.into_iter().map(str::to_string).collect(),
            target_vocab.into_iter().map(str::to_string).collect(),
            config.null_alignment,
        );

        let null_id = table.source_index.get(NULL_WORD).copied();
        let interned = Interned {
            source: pairs
                .iter()
                .map(|(s, _)| {
                    let mut ids: Vec<u32> =
                        s.iter().map(|t| table.source_index[t.surface()]).collect();
                    if let (true, Some(id)) = (config.null_alignment, null_id) {
                        ids.push(id);
                    }
                    ids
                })
                .collect(),
            target: pairs
                .iter()
                .map(|(_, t)| t.iter().map(|t| table.target_index[t.surface()]).collect())
                .collect(),
        };

        let mut cooc: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); table.sources.len()];
        for (src, tgt) in interned.source.iter().zip(&interned.target) {
            for &s in src {
                cooc[s as usize].extend(tgt.iter().copied());
            }
        }
        table.rows = cooc
            .into_iter()
            .map(|targets| {
                let p = 1.0 / targets.len() as f64;
                targets.into_iter().map(|t| (t, p)).collect()
            })
            .collect();

        let mut trace = vec![table.log_likelihood_ids(&interned)];
        for _ in 0..config.iterations {
            table.em_round(&interned);
            trace.push(table.log_likelihood_ids(&interned));
        }
        Ok((table, trace))
    }

    fn from_vocab(sources: Vec<String>, targets: Vec<String>, null_alignment: bool) -> Self {
        let index = |v: &[String]| {
            v.iter()
                .enumerate()
                .map(|(i, w)| (w.clone(), i as u32))
                .collect::<HashMap<_, _>>()
        };
        LexicalTable {
            source_index: index(&sources),
            target_index: index(&targets),
            rows: vec![Vec::new(); sources.len()],
            sources,
            targets,
            iterations_run: 0,
            null_alignment,
        }
    }

    fn lookup(&self, s: u32, t: u32) -> Option<usize> {
        self.rows[s as usize]
            .binary_search_by_key(&t, |&(id, _)| id)
            .ok()
    }

    fn em_round(&mut self, data: &Interned) {
        let mut counts: Vec<Vec<f64>> = self.rows.iter().map(|r| vec![0.0; r.len()]).collect();
        let mut slots: Vec<usize> = Vec::new();
        for (src, tgt) in data.source.iter().zip(&data.target) {
            for &t in tgt {
                slots.clear();
                let mut denom = 0.0;
                for &s in src {
                    let slot = self.lookup(s, t).expect("co-occurring pair has an entry");
                    denom += self.rows[s as usize][slot].1;
                    slots.push(slot);
                }
                for (&s, &slot) in src.iter().zip(&slots) {
                    counts[s as usize][slot] += self.rows[s as usize][slot].1 / denom;
                }
            }
        }
        for (row, c) in self.rows.iter_mut().zip(counts) {
            let total: f64 = c.iter().sum();
            for ((_, p), n) in row.iter_mut().zip(c) {
                *p = n / total;
            }
        }
        self.iterations_run += 1;
    }

    fn log_likelihood_ids(&self, data: &Interned) -> f64 {
        let mut ll = 0.0;
        for (src, tgt) in data.source.iter().zip(&data.target) {
            let len = src.len() as f64;
            for &t in tgt {
                let mass: f64 = src
                    .iter()
                    .map(|&s| {
                        self.lookup(s, t)
                            .map_or(0.0, |i| self.rows[s as usize][i].1)
                    })
                    .sum();
                ll += (mass / len).ln();
            }
        }
        ll
    }

    /// Model 1 log-likelihood of a corpus, up to the constant alignment prior.
    /// Pairs with words unknown to the table contribute `-inf`.
    pub fn log_likelihood<'a, I>(&self, pairs: I) -> f64
    where
        I: IntoIterator<Item = (&'a [Token], &'a [Token])>,
    {
        let mut ll = 0.0;
        for (src, tgt) in pairs {
            if src.is_empty() || tgt.is_empty() {
                continue;
            }
            let len = src.len() as f64 + if self.null_alignment { 1.0 } else { 0.0 };
            for t in tgt {
                let mut mass: f64 = src
                    .iter()
                    .map(|s| self.prob(s.surface(), t.surface()))
                    .sum();
                if self.null_alignment {
                    mass += self.prob(NULL_WORD, t.surface());
                }
                ll += (mass / len).ln();
            }
        }
        ll
    }

    pub fn prob(&self, source: &str, target: &str) -> f64 {
        match (self.source_index.get(source), self.target_index.get(target)) {
            (Some(&s), Some(&t)) => self
                .lookup(s, t)
                .map_or(0.0, |i| self.rows[s as usize][i].1),
            _ => 0.0,
        }
    }

    /// The translation distribution of `source`, sorted by target word.
    pub fn translations(&self, source: &str) -> Vec<(&str, f64)> {
        self.source_index
            .get(source)
            .map(|&s| {
                self.rows[s as usize]
                    .iter()
                    .map(|&(t, p)| (self.targets[t as usize].as_str(), p))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    /// Number of targets with `p(t | source) >= tau`; zero for unknown words.
    pub fn translations_above(&self, source: &str, tau: f64) -> usize {
        self.source_index.get(source).map_or(0, |&s| {
            self.rows[s as usize]
                .iter()
                .filter(|&&(_, p)| p >= tau)
                .count()
        })
    }

    /// Mean of [`translations_above`](Self::translations_above) over all tokens.
    pub fn avg_translations(&self, sentence: &[Token], tau: f64) -> Result<f64> {
        if sentence.is_empty() {
            return Err(Error::EmptySentence);
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "threshold {tau} outside (0, 1]"
            )));
        }
        let total: usize = sentence
            .iter()
            .map(|t| self.translations_above(t.surface(), tau))
            .sum();
        Ok(total as f64 / sentence.len() as f64)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::resources::write_json(path.as_ref(), &self.to_file())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_file(crate::resources::read_json(path.as_ref())?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?)
    }

    fn to_file(&self) -> TableFile {
        let prob = self
            .sources
            .iter()
            .zip(&self.rows)
            .map(|(s, row)| {
                let dist = row
                    .iter()
                    .map(|&(t, p)| (self.targets[t as usize].clone(), p))
                    .collect();
                (s.clone(), dist)
            })
            .collect();
        TableFile {
            version: FORMAT_VERSION,
            iterations_run: self.iterations_run,
            null_alignment: self.null_alignment,
            prob,
        }
    }

    fn from_file(file: TableFile) -> Result<Self> {
        if file.version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(file.version));
        }
        let targets: BTreeSet<&String> = file.prob.values().flat_map(|d| d.keys()).collect();
        let targets: Vec<String> = targets.into_iter().cloned().collect();
        let mut table = LexicalTable::from_vocab(
            file.prob.keys().cloned().collect(),
            targets,
            file.null_alignment,
        );
        table.iterations_run = file.iterations_run;
        for (s, dist) in file.prob.values().enumerate() {
            let mut row = Vec::with_capacity(dist.len());
            for (t, &p) in dist {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Schema(format!("probability {p} outside [0, 1]")));
                }
                row.push((table.target_index[t], p));
            }
            table.rows[s] = row;
        }
        Ok(table)
    }
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    version: u64,
    iterations_run: usize,
    #[serde(default)]
    null_alignment: bool,
    prob: BTreeMap<String, BTreeMap<String, f64>>,
}

//! On-disk layout of the trained feature resources.
//!
//! A resource directory holds five JSON files plus a manifest:
//!
//! | file | content |
//! |------|---------|
//! | `source_lm.json` | trigram LM over the complex side |
//! | `target_lm.json` | trigram LM over the simplified side |
//! | `lexicon.json` | Model 1 table `p(simplified word \| complex word)` |
//! | `source_freq.json` | n-gram statistics of the complex side |
//! | `target_freq.json` | n-gram statistics of the simplified side |
//! | `manifest.json` | input hashes, training parameters, file hashes |
//!
//! Everything is written deterministically: re-running on the same inputs
//! produces byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::ParallelCorpus;
use crate::features::FeatureResources;
use crate::freq_stats::{FrequencyStats, Side};
use crate::lexicon::{LexicalTable, Model1Config};
use crate::ngram_lm::TrigramLm;
use crate::{Error, Result};

pub const SOURCE_LM: &str = "source_lm.json";
pub const TARGET_LM: &str = "target_lm.json";
pub const LEXICON: &str = "lexicon.json";
pub const SOURCE_FREQ: &str = "source_freq.json";
pub const TARGET_FREQ: &str = "target_freq.json";
pub const MANIFEST: &str = "manifest.json";

pub const RESOURCE_FILES: [&str; 5] = [SOURCE_LM, TARGET_LM, LEXICON, SOURCE_FREQ, TARGET_FREQ];

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string(value).map_err(|e| Error::Schema(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u64,
    /// Input name (e.g. `source`, `target`) to SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub em_iterations: usize,
    pub null_alignment: bool,
    pub sentence_pairs: usize,
    /// Resource file name to SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
    /// Hash over the sorted input hashes and parameters.
    pub provenance: String,
}

pub fn provenance_hash(inputs: &BTreeMap<String, String>, config: Model1Config) -> String {
    let mut h = Sha256::new();
    for (k, v) in inputs {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    h.update(
        format!(
            "em_iterations={}\nnull_alignment={}\n",
            config.iterations, config.null_alignment
        )
        .as_bytes(),
    );
    hex::encode(h.finalize())
}

/// Trains all five resources from one parallel corpus.
pub fn train_resources(
    corpus: &ParallelCorpus,
    config: Model1Config,
    provenance: impl Into<String>,
) -> Result<FeatureResources> {
    Ok(FeatureResources {
        source_lm: TrigramLm::train(&corpus.source)?,
        target_lm: TrigramLm::train(&corpus.target)?,
        lexical_table: LexicalTable::train(corpus.pairs(), config)?,
        source_stats: FrequencyStats::build(&corpus.source, Side::Source)?,
        target_stats: FrequencyStats::build(&corpus.target, Side::Target)?,
        provenance: provenance.into(),
    })
}

/// Writes the resources and a manifest into `dir` (created if missing).
pub fn save_bundle(
    dir: impl AsRef<Path>,
    res: &FeatureResources,
    inputs: BTreeMap<String, String>,
    config: Model1Config,
    sentence_pairs: usize,
) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    res.source_lm.save(dir.join(SOURCE_LM))?;
    res.target_lm.save(dir.join(TARGET_LM))?;
    res.lexical_table.save(dir.join(LEXICON))?;
    res.source_stats.save(dir.join(SOURCE_FREQ))?;
    res.target_stats.save(dir.join(TARGET_FREQ))?;
    let mut files = BTreeMap::new();
    for name in RESOURCE_FILES {
        files.insert(name.to_string(), sha256_file(dir.join(name))?);
    }
    let manifest = Manifest {
        version: 1,
        provenance: res.provenance.clone(),
        inputs,
        em_iterations: config.iterations,
        null_alignment: config.null_alignment,
        sentence_pairs,
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    let path = dir.join(MANIFEST);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn load_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    read_json(&dir.as_ref().join(MANIFEST))
}

pub fn load_bundle(dir: impl AsRef<Path>) -> Result<FeatureResources> {
    let dir = dir.as_ref();
    let manifest = load_manifest(dir)?;
    Ok(FeatureResources {
        source_lm: TrigramLm::load(dir.join(SOURCE_LM))?,
        target_lm: TrigramLm::load(dir.join(TARGET_LM))?,
        lexical_table: LexicalTable::load(dir.join(LEXICON))?,
        source_stats: FrequencyStats::load(dir.join(SOURCE_FREQ))?,
        target_stats: FrequencyStats::load(dir.join(TARGET_FREQ))?,
        provenance: manifest.provenance,
    })
}

//! Latent style bank: embeddings labelled by (surface, technique), grouped
//! into style partitions and queried by seeded sampling or cosine k-NN.

mod prompt;

pub use prompt::{render_prompt, PromptKind, PromptTemplate};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::QualityClass;

pub const MANIFEST_VERSION: u32 = 1;
pub const ZERO_NORM_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StyleBankError {
    #[error("unsupported manifest version {0}")]
    UnsupportedVersion(u32),
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("payload holds {found} bytes, expected {expected}")]
    PayloadLength { expected: usize, found: usize },
    #[error("entry {entry_id}: row index {row_index} out of range or reused")]
    InvalidRowIndex { entry_id: String, row_index: usize },
    #[error("non-finite embedding component in entry {0}")]
    NonFiniteEmbedding(String),
    #[error("duplicate entry id {0}")]
    DuplicateEntryId(String),
    #[error("entry {0} has an empty surface")]
    EmptySurface(String),
    #[error("unknown style {0}")]
    UnknownStyle(StyleKey),
    #[error("query vector has zero norm")]
    ZeroVector,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("missing prompt slot {0}")]
    MissingSlot(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Lowercase and collapse runs of whitespace; punctuation is kept.
pub fn canonicalize(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Partition key ψ = (surface, technique).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StyleKey {
    pub surface: String,
    pub technique: String,
}

impl StyleKey {
    pub fn new(surface: &str, technique: &str) -> Self {
        StyleKey {
            surface: canonicalize(surface),
            technique: canonicalize(technique),
        }
    }
}

impl fmt::Display for StyleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}", self.surface, self.technique)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleDescriptor {
    pub surface: String,
    pub technique: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_level: Option<QualityClass>,
}

impl StyleDescriptor {
    pub fn new(surface: &str, technique: &str) -> Self {
        StyleDescriptor {
            surface: canonicalize(surface),
            technique: canonicalize(technique),
            quality_level: None,
        }
    }

    pub fn with_quality(mut self, q: QualityClass) -> Self {
        self.quality_level = Some(q);
        self
    }

    pub fn key(&self) -> StyleKey {
        StyleKey::new(&self.surface, &self.technique)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleEntry {
    pub entry_id: String,
    pub embedding: Vec<f32>,
    pub descriptor: StyleDescriptor,
    pub source_dataset: String,
    pub source_image_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub entry_id: String,
    pub surface: String,
    pub technique: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_level: Option<QualityClass>,
    pub source_dataset: String,
    pub source_image_ref: String,
    pub row_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankManifest {
    pub version: u32,
    pub dimension: usize,
    pub entries: Vec<ManifestEntry>,
}

/// Immutable bank; partitions list entry indices in ascending entry-id order.
#[derive(Debug, Clone)]
pub struct StyleBank {
    dimension: usize,
    entries: Vec<StyleEntry>,
    partitions: BTreeMap<StyleKey, Vec<usize>>,
    by_id: HashMap<String, usize>,
}

/// Little-endian f32 rows concatenated in order.
pub fn encode_payload(rows: &[Vec<f32>]) -> Vec<u8> {
    rows.iter().flatten().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn build_bank(manifest: &BankManifest, payload: &[u8]) -> Result<StyleBank, StyleBankError> {
    if manifest.version != MANIFEST_VERSION {
        return Err(StyleBankError::UnsupportedVersion(manifest.version));
    }
    let d = manifest.dimension;
    if d == 0 {
        return Err(StyleBankError::ZeroDimension);
    }
    let n = manifest.entries.len();
    let expected = n * d * 4;
    if payload.len() != expected {
        return Err(StyleBankError::PayloadLength {
            expected,
            found: payload.len(),
        });
    }
    let mut rows_used = vec![false; n];
    let mut by_id = HashMap::with_capacity(n);
    let mut entries = Vec::with_capacity(n);
    for (i, m) in manifest.entries.iter().enumerate() {
        if by_id.insert(m.entry_id.clone(), i).is_some() {
            return Err(StyleBankError::DuplicateEntryId(m.entry_id.clone()));
        }
        if m.row_index >= n || std::mem::replace(&mut rows_used[m.row_index], true) {
            return Err(StyleBankError::InvalidRowIndex {
                entry_id: m.entry_id.clone(),
                row_index: m.row_index,
            });
        }
        let start = m.row_index * d * 4;
        let embedding: Vec<f32> = payload[start..start + d * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if embedding.iter().any(|v| !v.is_finite()) {
            return Err(StyleBankError::NonFiniteEmbedding(m.entry_id.clone()));
        }
        let descriptor = StyleDescriptor {
            quality_level: m.quality_level,
            ..StyleDescriptor::new(&m.surface, &m.technique)
        };
        if descriptor.surface.is_empty() {
            return Err(StyleBankError::EmptySurface(m.entry_id.clone()));
        }
        entries.push(StyleEntry {
            entry_id: m.entry_id.clone(),
            embedding,
            descriptor,
            source_dataset: m.source_dataset.clone(),
            source_image_ref: m.source_image_ref.clone(),
        });
    }
    let mut partitions: BTreeMap<StyleKey, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        partitions.entry(e.descriptor.key()).or_default().push(i);
    }
    for ids in partitions.values_mut() {
        ids.sort_by(|a, b| entries[*a].entry_id.cmp(&entries[*b].entry_id));
    }
    let bank = StyleBank {
        dimension: d,
        entries,
        partitions,
        by_id,
    };
    debug_assert_eq!(bank.partitions.values().map(Vec::len).sum::<usize>(), bank.len());
    Ok(bank)
}

pub fn read_bank(manifest_path: &Path, payload_path: &Path) -> Result<StyleBank, StyleBankError> {
    let text = std::fs::read_to_string(manifest_path).map_err(|source| StyleBankError::Io {
        path: manifest_path.display().to_string(),
        source,
    })?;
    let manifest: BankManifest = serde_json::from_str(&text)?;
    let payload = std::fs::read(payload_path).map_err(|source| StyleBankError::Io {
        path: payload_path.display().to_string(),
        source,
    })?;
    build_bank(&manifest, &payload)
}

impl StyleBank {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// N, the number of entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// M, the number of non-empty partitions.
    pub fn style_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn entries(&self) -> &[StyleEntry] {
        &self.entries
    }

    pub fn entry(&self, id: &str) -> Option<&StyleEntry> {
        self.by_id.get(id).map(|i| &self.entries[*i])
    }

    pub fn styles(&self) -> impl Iterator<Item = &StyleKey> {
        self.partitions.keys()
    }

    pub fn partition_len(&self, key: &StyleKey) -> usize {
        self.partitions.get(key).map_or(0, Vec::len)
    }

    /// Entry ids per style.
    pub fn partition(&self) -> BTreeMap<StyleKey, Vec<String>> {
        self.partitions
            .iter()
            .map(|(k, ids)| (k.clone(), ids.iter().map(|i| self.entries[*i].entry_id.clone()).collect()))
            .collect()
    }
}

/// Uniform seeded draw from the partition matching `d`'s (surface, technique).
pub fn sample_style<'a>(bank: &'a StyleBank, d: &StyleDescriptor, seed: u64) -> Result<&'a StyleEntry, StyleBankError> {
    let key = d.key();
    let members = bank
        .partitions
        .get(&key)
        .filter(|m| !m.is_empty())
        .ok_or(StyleBankError::UnknownStyle(key))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(&bank.entries[members[rng.gen_range(0..members.len())]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub entry_id: String,
    pub similarity: f64,
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt()
}

/// Top-`k` entries by cosine similarity, descending, ties by entry id.
/// Entries with a zero embedding score 0.
pub fn nearest_styles(bank: &StyleBank, query: &[f32], k: usize) -> Result<Vec<Neighbor>, StyleBankError> {
    if k == 0 {
        return Err(StyleBankError::InvalidK);
    }
    if query.len() != bank.dimension {
        return Err(StyleBankError::DimensionMismatch {
            expected: bank.dimension,
            found: query.len(),
        });
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(StyleBankError::ZeroVector);
    }
    let qn = norm(query);
    if qn < ZERO_NORM_EPS {
        return Err(StyleBankError::ZeroVector);
    }
    let unit: Vec<f64> = query.iter().map(|v| f64::from(*v) / qn).collect();
    let mut scored: Vec<Neighbor> = bank
        .entries
        .iter()
        .map(|e| {
            let en = norm(&e.embedding);
            let similarity = if en < ZERO_NORM_EPS {
                0.0
            } else {
                e.embedding.iter().zip(&unit).map(|(a, b)| f64::from(*a) * b).sum::<f64>() / en
            };
            Neighbor {
                entry_id: e.entry_id.clone(),
                similarity,
            }
        })
        .collect();
    scored.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.entry_id.cmp(&b.entry_id))
    });
    scored.truncate(k);
    Ok(scored)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleCount {
    pub surface: String,
    pub technique: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankStats {
    pub dimension: usize,
    /// N
    pub entries: usize,
    /// M
    pub styles: usize,
    pub surfaces: usize,
    pub techniques: usize,
    pub per_style: Vec<StyleCount>,
    pub per_dataset: BTreeMap<String, usize>,
}

pub fn bank_stats(bank: &StyleBank) -> BankStats {
    let mut per_dataset = BTreeMap::new();
    let mut surfaces = BTreeSet::new();
    let mut techniques = BTreeSet::new();
    for e in &bank.entries {
        *per_dataset.entry(e.source_dataset.clone()).or_insert(0) += 1;
        surfaces.insert(e.descriptor.surface.as_str());
        techniques.insert(e.descriptor.technique.as_str());
    }
    BankStats {
        dimension: bank.dimension,
        entries: bank.len(),
        styles: bank.style_count(),
        surfaces: surfaces.len(),
        techniques: techniques.len(),
        per_style: bank
            .partitions
            .iter()
            .map(|(k, ids)| StyleCount {
                surface: k.surface.clone(),
                technique: k.technique.clone(),
                count: ids.len(),
            })
            .collect(),
        per_dataset,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, surface: &str, technique: &str, row: usize) -> ManifestEntry {
        ManifestEntry {
            entry_id: id.into(),
            surface: surface.into(),
            technique: technique.into(),
            quality_level: None,
            source_dataset: "ds".into(),
            source_image_ref: format!("{id}.png"),
            row_index: row,
        }
    }

    fn small() -> StyleBank {
        let manifest = BankManifest {
            version: 1,
            dimension: 2,
            entries: vec![
                entry("a", "White  Tape", "Black wetwop", 0),
                entry("b", "white tape", "black WETWOP", 1),
                entry("c", "Ceramic", "Black powder dusting", 2),
            ],
        };
        build_bank(&manifest, &encode_payload(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]])).unwrap()
    }

    #[test]
    fn three_entries_two_styles() {
        let bank = small();
        assert_eq!((bank.len(), bank.style_count()), (3, 2));
        let stats = bank_stats(&bank);
        let counts: Vec<usize> = stats.per_style.iter().map(|s| s.count).collect();
        assert_eq!(counts, vec![1, 2]);
        assert_eq!(bank.partition()[&StyleKey::new("white tape", "black wetwop")], vec!["a", "b"]);
    }

    #[test]
    fn canonical_keeps_punctuation() {
        assert_eq!(canonicalize("  1,2-Indanedione \t Yellow "), "1,2-indanedione yellow");
    }

    #[test]
    fn empty_bank() {
        let m = BankManifest {
            version: 1,
            dimension: 4,
            entries: vec![],
        };
        let bank = build_bank(&m, &[]).unwrap();
        assert_eq!((bank.len(), bank.style_count()), (0, 0));
    }

    #[test]
    fn ingest_errors() {
        let mut m = BankManifest {
            version: 1,
            dimension: 1,
            entries: vec![entry("a", "s", "t", 0), entry("a", "s", "t", 1)],
        };
        let payload = encode_payload(&[vec![1.0], vec![2.0]]);
        assert!(matches!(build_bank(&m, &payload), Err(StyleBankError::DuplicateEntryId(_))));
        m.entries[1].entry_id = "b".into();
        assert!(matches!(build_bank(&m, &payload[..4]), Err(StyleBankError::PayloadLength { .. })));
        let nan = encode_payload(&[vec![1.0], vec![f32::NAN]]);
        assert!(matches!(build_bank(&m, &nan), Err(StyleBankError::NonFiniteEmbedding(id)) if id == "b"));
        m.entries[1].row_index = 0;
        assert!(matches!(build_bank(&m, &payload), Err(StyleBankError::InvalidRowIndex { .. })));
    }

    #[test]
    fn quality_level_not_in_key() {
        let mut m = BankManifest {
            version: 1,
            dimension: 1,
            entries: vec![entry("a", "s", "t", 0), entry("b", "s", "t", 1)],
        };
        m.entries[0].quality_level = Some(QualityClass::High);
        m.entries[1].quality_level = Some(QualityClass::Low);
        let bank = build_bank(&m, &encode_payload(&[vec![1.0], vec![2.0]])).unwrap();
        assert_eq!(bank.style_count(), 1);
    }

    #[test]
    fn sampling() {
        let bank = small();
        let d = StyleDescriptor::new("ceramic", "black powder dusting");
        for seed in 0..20 {
            assert_eq!(sample_style(&bank, &d, seed).unwrap().entry_id, "c");
        }
        let d2 = StyleDescriptor::new("White Tape", "black wetwop");
        assert_eq!(sample_style(&bank, &d2, 7).unwrap().entry_id, sample_style(&bank, &d2, 7).unwrap().entry_id);
        assert!(matches!(
            sample_style(&bank, &StyleDescriptor::new("glass", "ninhydrin"), 0),
            Err(StyleBankError::UnknownStyle(_))
        ));
    }

    #[test]
    fn knn_basics() {
        let bank = small();
        let r = nearest_styles(&bank, &[0.0, 3.0], 3).unwrap();
        assert_eq!(r[0].entry_id, "b");
        assert!((r[0].similarity - 1.0).abs() < 1e-12);
        assert!(matches!(nearest_styles(&bank, &[0.0, 0.0], 1), Err(StyleBankError::ZeroVector)));
        assert!(nearest_styles(&bank, &[1.0], 1).is_err());
        let r = nearest_styles(&bank, &[1.0, -1.0], 3).unwrap();
        assert_eq!(r[0].entry_id, "a");
        assert_eq!(r[1].entry_id, "c");
        assert_eq!(r[1].similarity, 0.0);
    }
}

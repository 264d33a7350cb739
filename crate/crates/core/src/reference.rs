//! Embedding records and Phase I reference-sample construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::depth::{CovarianceMode, ReferenceSet};
use crate::{Error, Result};

/// Zero-based class id; class `c` owns softmax entry `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which reference sample a depth was computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefClass {
    Class(ClassId),
    Merged,
}

impl fmt::Display for RefClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefClass::Class(c) => write!(f, "{c}"),
            RefClass::Merged => f.write_str("merged"),
        }
    }
}

impl FromStr for RefClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "merged" {
            return Ok(RefClass::Merged);
        }
        s.parse::<u32>()
            .map(|c| RefClass::Class(ClassId(c)))
            .map_err(|_| Error::InvalidParameter(format!("unknown reference class `{s}`")))
    }
}

/// Where a record sits in the monitoring timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "phase1")]
    PhaseI,
    #[serde(rename = "phase2_ic")]
    PhaseIIInControl,
    #[serde(rename = "phase2_ooc")]
    PhaseIIOutOfControl,
    #[serde(rename = "unlabeled")]
    Unlabeled,
}

impl Phase {
    pub fn token(self) -> &'static str {
        match self {
            Phase::PhaseI => "phase1",
            Phase::PhaseIIInControl => "phase2_ic",
            Phase::PhaseIIOutOfControl => "phase2_ooc",
            Phase::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase1" => Ok(Phase::PhaseI),
            "phase2_ic" => Ok(Phase::PhaseIIInControl),
            "phase2_ooc" => Ok(Phase::PhaseIIOutOfControl),
            "unlabeled" => Ok(Phase::Unlabeled),
            other => Err(Error::InvalidParameter(format!("unknown phase `{other}`"))),
        }
    }
}

/// One monitored observation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub index: usize,
    pub embedding: Vec<f64>,
    pub true_label: Option<ClassId>,
    pub predicted_label: ClassId,
    pub softmax: Option<Vec<f64>>,
    pub phase: Phase,
}

impl EmbeddingRecord {
    /// Checks the record-level invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidRecord {
            index: self.index,
            reason,
        };
        if self.embedding.is_empty() {
            return Err(fail("empty embedding".into()));
        }
        if self.embedding.iter().any(|v| !v.is_finite()) {
            return Err(fail("non-finite embedding component".into()));
        }
        if self.phase == Phase::PhaseI && self.true_label.is_none() {
            return Err(fail("phase I records require a true label".into()));
        }
        if let Some(scores) = &self.softmax {
            if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return Err(fail("softmax entries must lie in [0, 1]".into()));
            }
            let total: f64 = scores.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(fail(format!("softmax sums to {total}, expected 1")));
            }
        }
        Ok(())
    }

    /// `Some(true)` when the prediction disagrees with a known true label.
    pub fn is_misclassified(&self) -> Option<bool> {
        self.true_label.map(|y| y != self.predicted_label)
    }

    /// Softmax score of `class`, if scores are present.
    pub fn score_of(&self, class: ClassId) -> Option<f64> {
        self.softmax.as_ref()?.get(class.index()).copied()
    }

    /// Softmax score of the predicted class.
    pub fn confidence(&self) -> Option<f64> {
        self.score_of(self.predicted_label)
    }

    fn is_correct_phase1(&self) -> bool {
        self.phase == Phase::PhaseI && self.true_label == Some(self.predicted_label)
    }
}

/// Outcome of Phase I validation.
#[derive(Debug, Clone)]
pub struct Phase1Validation {
    pub kept: Vec<EmbeddingRecord>,
    pub removed: usize,
}

/// Keeps only correctly classified Phase I records.
pub fn validate_phase1(records: &[EmbeddingRecord]) -> Result<Phase1Validation> {
    let mut kept = Vec::with_capacity(records.len());
    for record in records {
        if record.phase != Phase::PhaseI {
            return Err(Error::InvalidRecord {
                index: record.index,
                reason: format!("expected a phase1 record, found {}", record.phase),
            });
        }
        record.validate()?;
        if record.true_label == Some(record.predicted_label) {
            kept.push(record.clone());
        }
    }
    let removed = records.len() - kept.len();
    Ok(Phase1Validation { kept, removed })
}

fn class_candidates(records: &[EmbeddingRecord], class: ClassId) -> Vec<&EmbeddingRecord> {
    let mut out: Vec<_> = records
        .iter()
        .filter(|r| r.is_correct_phase1() && r.true_label == Some(class))
        .collect();
    out.sort_by_key(|r| r.index);
    out
}

fn insufficient(class: impl fmt::Display, need: usize, available: usize) -> Error {
    Error::InsufficientRecords {
        class: class.to_string(),
        need,
        available,
    }
}

/// The `size` correctly classified Phase I records of `class` with the highest
/// softmax score for `class`, ties going to the lower stream index. Returned in
/// stream order.
pub fn select_by_confidence(records: &[EmbeddingRecord], class: ClassId, size: usize) -> Result<Vec<&EmbeddingRecord>> {
    let candidates = class_candidates(records, class);
    if candidates.len() < size {
        return Err(insufficient(class, size, candidates.len()));
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for record in candidates {
        let score = record.score_of(class).ok_or_else(|| Error::InvalidRecord {
            index: record.index,
            reason: format!("no softmax score for class {class}"),
        })?;
        scored.push((score, record));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.index.cmp(&b.1.index)));
    let mut chosen: Vec<_> = scored.into_iter().take(size).map(|(_, r)| r).collect();
    chosen.sort_by_key(|r| r.index);
    Ok(chosen)
}

/// Uniform sample without replacement of `size` correctly classified Phase I
/// records of `class`. Returned in stream order.
pub fn select_random(
    records: &[EmbeddingRecord],
    class: ClassId,
    size: usize,
    seed: u64,
) -> Result<Vec<&EmbeddingRecord>> {
    let candidates = class_candidates(records, class);
    if candidates.len() < size {
        return Err(insufficient(class, size, candidates.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = rand::seq::index::sample(&mut rng, candidates.len(), size).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|i| candidates[i]).collect())
}

/// Per-class quotas for a merged sample of `size`: equal shares, remainder to
/// the lowest class ids.
pub fn merged_quotas(classes: &[ClassId], size: usize) -> BTreeMap<ClassId, usize> {
    let mut sorted = classes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return BTreeMap::new();
    }
    let share = size / sorted.len();
    let extra = size % sorted.len();
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, share + usize::from(i < extra)))
        .collect()
}

/// Class-balanced top-confidence selection across all classes.
pub fn select_merged(records: &[EmbeddingRecord], size: usize) -> Result<Vec<&EmbeddingRecord>> {
    let classes: BTreeSet<ClassId> = records
        .iter()
        .filter(|r| r.is_correct_phase1())
        .map(|r| r.predicted_label)
        .collect();
    let total = records.iter().filter(|r| r.is_correct_phase1()).count();
    if total < size {
        return Err(insufficient(RefClass::Merged, size, total));
    }
    let classes: Vec<_> = classes.into_iter().collect();
    let mut chosen = Vec::with_capacity(size);
    for (class, quota) in merged_quotas(&classes, size) {
        chosen.extend(select_by_confidence(records, class, quota)?);
    }
    chosen.sort_by_key(|r| r.index);
    Ok(chosen)
}

fn to_reference(label: RefClass, chosen: &[&EmbeddingRecord], mode: CovarianceMode) -> Result<ReferenceSet> {
    let rows = chosen.iter().map(|r| r.embedding.clone()).collect();
    let indices = chosen.iter().map(|r| r.index).collect();
    ReferenceSet::with_options(label, rows, indices, mode)
}

pub fn build_reference_by_confidence(records: &[EmbeddingRecord], class: ClassId, size: usize) -> Result<ReferenceSet> {
    let chosen = select_by_confidence(records, class, size)?;
    to_reference(RefClass::Class(class), &chosen, CovarianceMode::Strict)
}

pub fn build_reference_random(
    records: &[EmbeddingRecord],
    class: ClassId,
    size: usize,
    seed: u64,
) -> Result<ReferenceSet> {
    let chosen = select_random(records, class, size, seed)?;
    to_reference(RefClass::Class(class), &chosen, CovarianceMode::Strict)
}

pub fn build_reference_merged(records: &[EmbeddingRecord], size: usize) -> Result<ReferenceSet> {
    let chosen = select_merged(records, size)?;
    to_reference(RefClass::Merged, &chosen, CovarianceMode::Strict)
}

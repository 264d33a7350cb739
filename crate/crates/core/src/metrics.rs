//! Evaluation rates computed from chart output.
//!
//! Every rate is a signal proportion within one cell of records. A cell with
//! no records yields `None` rather than 0/0. For the Q chart a cell counts
//! emitted batch records, not the observations inside them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::charting::SignalRecord;
use crate::reference::{Phase, RefClass};

/// Records and signals in one cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub records: usize,
    pub signals: usize,
}

impl CellCount {
    pub fn add(&mut self, signal: bool) {
        self.records += 1;
        self.signals += usize::from(signal);
    }

    pub fn rate(&self) -> Option<f64> {
        (self.records > 0).then(|| self.signals as f64 / self.records as f64)
    }

    fn of<'a>(signals: impl IntoIterator<Item = &'a SignalRecord>) -> Self {
        let mut c = Self::default();
        for s in signals {
            c.add(s.signal);
        }
        c
    }
}

/// Fraction of Phase I records that signal.
pub fn far(signals: &[SignalRecord]) -> Option<f64> {
    CellCount::of(signals).rate()
}

/// Signal rate over in-control records, weighted by class size, with the
/// per-class rates it aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedRate {
    pub rate: f64,
    pub per_class: BTreeMap<RefClass, f64>,
}

/// `Σ n_c SR_c / Σ n_c`, which is the overall signal proportion; computed
/// from integer counts so the identity holds exactly.
pub fn sr_weighted(signals: &[SignalRecord]) -> Option<WeightedRate> {
    let mut cells: BTreeMap<RefClass, CellCount> = BTreeMap::new();
    for s in signals {
        cells.entry(s.class_used).or_default().add(s.signal);
    }
    let total = CellCount::of(signals);
    Some(WeightedRate {
        rate: total.rate()?,
        per_class: cells
            .into_iter()
            .filter_map(|(k, c)| c.rate().map(|r| (k, r)))
            .collect(),
    })
}

/// Fraction of out-of-control records that signal.
pub fn cdr(signals: &[SignalRecord]) -> Option<f64> {
    CellCount::of(signals).rate()
}

/// Signal rates among misclassified and correctly classified records.
/// `misclassified` is aligned with `signals`.
pub fn conditional_sr(signals: &[SignalRecord], misclassified: &[bool]) -> (Option<f64>, Option<f64>) {
    assert_eq!(signals.len(), misclassified.len(), "mask must align with signals");
    let (mut m, mut c) = (CellCount::default(), CellCount::default());
    for (s, &mis) in signals.iter().zip(misclassified) {
        if mis {
            m.add(s.signal);
        } else {
            c.add(s.signal);
        }
    }
    (m.rate(), c.rate())
}

/// Sample sizes behind each reported rate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub phase1: CellCount,
    pub in_control: CellCount,
    pub out_of_control: CellCount,
    pub misclassified: CellCount,
    pub correct: CellCount,
    pub per_class: BTreeMap<String, CellCount>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitoringReport {
    pub far: Option<f64>,
    pub sr_weighted: Option<f64>,
    pub sr_per_class: BTreeMap<String, f64>,
    pub cdr: Option<f64>,
    pub sr_given_misclassified: Option<f64>,
    pub sr_given_correct: Option<f64>,
    pub counts: ReportCounts,
}

impl MonitoringReport {
    /// Builds the report from Phase I and Phase II chart output.
    ///
    /// `misclassified` is aligned with `phase2`; an entry of `None` (unknown
    /// truth) leaves the record out of the conditional rates, which only use
    /// in-control records. Unlabeled records count in no cell.
    pub fn from_signals(phase1: &[SignalRecord], phase2: &[SignalRecord], misclassified: &[Option<bool>]) -> Self {
        assert_eq!(phase2.len(), misclassified.len(), "mask must align with signals");
        let mut counts = ReportCounts {
            phase1: CellCount::of(phase1),
            ..Default::default()
        };
        for (s, mis) in phase2.iter().zip(misclassified) {
            match s.phase {
                Phase::PhaseIIInControl => {
                    counts.in_control.add(s.signal);
                    counts
                        .per_class
                        .entry(s.class_used.to_string())
                        .or_default()
                        .add(s.signal);
                    match mis {
                        Some(true) => counts.misclassified.add(s.signal),
                        Some(false) => counts.correct.add(s.signal),
                        None => {}
                    }
                }
                Phase::PhaseIIOutOfControl => counts.out_of_control.add(s.signal),
                Phase::PhaseI | Phase::Unlabeled => {}
            }
        }
        Self {
            far: counts.phase1.rate(),
            sr_weighted: counts.in_control.rate(),
            sr_per_class: counts
                .per_class
                .iter()
                .filter_map(|(k, c)| c.rate().map(|r| (k.clone(), r)))
                .collect(),
            cdr: counts.out_of_control.rate(),
            sr_given_misclassified: counts.misclassified.rate(),
            sr_given_correct: counts.correct.rate(),
            counts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::ClassId;
    use proptest::prelude::*;

    fn rec(class: u32, signal: bool, phase: Phase) -> SignalRecord {
        SignalRecord {
            index: 0,
            class_used: RefClass::Class(ClassId(class)),
            statistic: if signal { 0.0 } else { 1.0 },
            signal,
            phase,
        }
    }

    fn cell(class: u32, n: usize, s: usize, phase: Phase) -> Vec<SignalRecord> {
        (0..n).map(|i| rec(class, i < s, phase)).collect()
    }

    #[test]
    fn far_values() {
        assert_eq!(far(&cell(0, 60, 0, Phase::PhaseI)), Some(0.0));
        assert_eq!(far(&cell(0, 60, 3, Phase::PhaseI)), Some(0.05));
        let mut toy = cell(0, 100, 5, Phase::PhaseI);
        toy.extend(cell(1, 100, 5, Phase::PhaseI));
        assert_eq!(far(&toy), Some(0.05));
        assert_eq!(far(&[]), None);
    }

    #[test]
    fn weighted_sr() {
        let mut s = cell(0, 10, 2, Phase::PhaseIIInControl);
        s.extend(cell(1, 30, 3, Phase::PhaseIIInControl));
        let w = sr_weighted(&s).unwrap();
        assert_eq!(w.rate, 0.125);
        assert_eq!(w.per_class[&RefClass::Class(ClassId(0))], 0.2);
        assert_eq!(w.per_class[&RefClass::Class(ClassId(1))], 0.1);
        assert_eq!(sr_weighted(&cell(0, 8, 2, Phase::PhaseIIInControl)).unwrap().rate, 0.25);
        assert_eq!(sr_weighted(&cell(0, 8, 8, Phase::PhaseIIInControl)).unwrap().rate, 1.0);
        assert!(sr_weighted(&[]).is_none());
    }

    #[test]
    fn cdr_values() {
        assert_eq!(cdr(&cell(0, 50, 50, Phase::PhaseIIOutOfControl)), Some(1.0));
        assert_eq!(cdr(&cell(0, 50, 0, Phase::PhaseIIOutOfControl)), Some(0.0));
        assert_eq!(cdr(&cell(0, 10, 10, Phase::PhaseIIOutOfControl)), Some(1.0));
        assert_eq!(cdr(&[]), None);
    }

    #[test]
    fn conditional_rates() {
        let s = [
            rec(0, true, Phase::PhaseIIInControl),
            rec(0, false, Phase::PhaseIIInControl),
        ];
        assert_eq!(conditional_sr(&s, &[true, false]), (Some(1.0), Some(0.0)));
        assert_eq!(conditional_sr(&s, &[false, false]), (None, Some(0.5)));
    }

    /// Per-record fixture shaped like a 10 000-point test stream with 958
    /// misclassified points: 920 of them signal, as do 3798 of the 9042
    /// correctly classified points.
    #[test]
    fn conditional_fixture() {
        let mut signals = Vec::new();
        let mut mask = Vec::new();
        for i in 0..10_000usize {
            mask.push(i % 10 == 3 && i / 10 < 958);
        }
        let (mut m_seen, mut c_seen) = (0, 0);
        for &mis in &mask {
            let signal = if mis {
                m_seen += 1;
                m_seen <= 920
            } else {
                c_seen += 1;
                c_seen <= 3798
            };
            signals.push(rec(0, signal, Phase::PhaseIIInControl));
        }
        assert_eq!(mask.iter().filter(|&&m| m).count(), 958);
        let (m, c) = conditional_sr(&signals, &mask);
        assert_eq!((m.unwrap() * 100.0).round() / 100.0, 0.96);
        assert_eq!((c.unwrap() * 100.0).round() / 100.0, 0.42);
        let sr = sr_weighted(&signals).unwrap().rate;
        assert_eq!((sr * 100.0).round() / 100.0, 0.47);
    }

    #[test]
    fn report_cells() {
        let p1 = cell(0, 20, 1, Phase::PhaseI);
        let mut p2 = cell(0, 10, 2, Phase::PhaseIIInControl);
        p2.extend(cell(1, 10, 10, Phase::PhaseIIOutOfControl));
        p2.push(rec(1, true, Phase::Unlabeled));
        let mut mask = vec![Some(false); 10];
        mask[0] = Some(true);
        mask.extend(vec![None; 11]);
        let r = MonitoringReport::from_signals(&p1, &p2, &mask);
        assert_eq!(r.far, Some(0.05));
        assert_eq!(r.sr_weighted, Some(0.2));
        assert_eq!(r.cdr, Some(1.0));
        assert_eq!(r.sr_given_misclassified, Some(1.0));
        assert_eq!(r.sr_given_correct, Some(1.0 / 9.0));
        assert_eq!(r.counts.in_control.records, 10);
        assert_eq!(r.sr_per_class["0"], 0.2);
        let empty = MonitoringReport::from_signals(&[], &[], &[]);
        assert_eq!(empty.far, None);
        assert_eq!(empty.cdr, None);
    }

    proptest! {
        #[test]
        fn rate_invariants(flags in prop::collection::vec((0u32..3, any::<bool>(), any::<bool>()), 1..200)) {
            let signals: Vec<_> = flags.iter().map(|&(c, s, _)| rec(c, s, Phase::PhaseIIInControl)).collect();
            let mask: Vec<bool> = flags.iter().map(|f| f.2).collect();
            let total = signals.iter().filter(|s| s.signal).count() as f64 / signals.len() as f64;
            let w = sr_weighted(&signals).unwrap();
            prop_assert_eq!(w.rate, total);
            prop_assert!(w.per_class.values().all(|r| (0.0..=1.0).contains(r)));
            if let (Some(m), Some(c)) = conditional_sr(&signals, &mask) {
                prop_assert!(m.min(c) <= total + 1e-15 && total <= m.max(c) + 1e-15);
            }
            prop_assert_eq!(sr_weighted(&signals), sr_weighted(&signals));
        }
    }
}

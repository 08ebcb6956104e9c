//! The stage rule: cutoff search, active set, and parity bit.
//!
//! At stage `n` the cutoff `I(n)` is the least level `i` for which some
//! caring index `j <= i` has been active at level `i` at most `capacity(i)`
//! times so far. The active set keeps the caring indices up to the cutoff,
//! and the emitted bit is the number of earlier stages with the identical
//! active set, mod 2.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::selection::Decision;

/// Per-level occurrence budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThresholdRule {
    /// capacity(i) = r^i, r >= 3.
    ExpBase(u64),
    /// capacity(i) = table[i - 1]; strictly increasing and positive.
    Table(Vec<u64>),
}

impl ThresholdRule {
    pub fn exp(base: u64) -> Result<Self> {
        let rule = ThresholdRule::ExpBase(base);
        rule.validate()?;
        Ok(rule)
    }

    pub fn table(capacities: Vec<u64>) -> Result<Self> {
        let rule = ThresholdRule::Table(capacities);
        rule.validate()?;
        Ok(rule)
    }

    /// Static checks. The `capacity(i) > 2^i` condition for tables is checked
    /// lazily by [`ThresholdRule::capacity`] as levels are reached.
    pub fn validate(&self) -> Result<()> {
        match self {
            ThresholdRule::ExpBase(r) if *r <= 2 => Err(Error::BaseTooSmall(*r)),
            ThresholdRule::ExpBase(_) => Ok(()),
            ThresholdRule::Table(t) if t.is_empty() => Err(Error::EmptyTable),
            ThresholdRule::Table(t) => {
                let mut prev = 0;
                for (i, &c) in t.iter().enumerate() {
                    if c <= prev {
                        return Err(Error::TableNotIncreasing {
                            level: i as u32 + 1,
                            capacity: c,
                        });
                    }
                    prev = c;
                }
                Ok(())
            }
        }
    }

    /// capacity(level), saturating at `u64::MAX`.
    pub fn capacity(&self, level: u32) -> Result<u64> {
        debug_assert!(level >= 1);
        match self {
            ThresholdRule::ExpBase(r) => Ok(r.checked_pow(level).unwrap_or(u64::MAX)),
            ThresholdRule::Table(t) => {
                let capacity = *t.get(level as usize - 1).ok_or(Error::TableExhausted {
                    level,
                    len: t.len(),
                })?;
                let floor = 1u128.checked_shl(level).unwrap_or(u128::MAX);
                if u128::from(capacity) <= floor {
                    return Err(Error::CapacityTooSmall { level, capacity });
                }
                Ok(capacity)
            }
        }
    }

    /// Exponent `ln 2 / ln r` of the fluctuation envelope for exponential rules.
    pub fn envelope_exponent(&self) -> Option<f64> {
        match self {
            ThresholdRule::ExpBase(r) => Some(2f64.ln() / (*r as f64).ln()),
            ThresholdRule::Table(_) => None,
        }
    }
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdRule::ExpBase(r) => write!(f, "exp:{r}"),
            ThresholdRule::Table(t) => write!(f, "table[{}]", t.len()),
        }
    }
}

/// Canonical active set: strictly increasing indices, always containing 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ActiveSet(Vec<u32>);

impl ActiveSet {
    /// Sorts and deduplicates `indices`. Panics when 1 is missing or 0 is present.
    pub fn new(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        assert_eq!(indices.first(), Some(&1), "active sets always contain index 1");
        ActiveSet(indices)
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn contains(&self, index: u32) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn max(&self) -> u32 {
        *self.0.last().expect("nonempty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ActiveSet {
    /// `1;2;5`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{j}")?;
        }
        Ok(())
    }
}

/// count(j, i): number of completed stages m with j in A*(m) and I(m) = i.
///
/// Rows are allocated per level on first use; row `i` has `i` slots since
/// only indices up to the cutoff are ever active.
#[derive(Debug, Clone, Default)]
pub struct CountLedger {
    rows: Vec<Vec<u64>>,
}

impl CountLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, index: u32, level: u32) -> u64 {
        self.rows
            .get(level as usize - 1)
            .and_then(|row| row.get(index as usize - 1))
            .copied()
            .unwrap_or(0)
    }

    pub fn increment(&mut self, index: u32, level: u32) {
        assert!(index >= 1 && index <= level, "index {index} above level {level}");
        let level = level as usize;
        if self.rows.len() < level {
            self.rows.resize_with(level, Vec::new);
        }
        let row = &mut self.rows[level - 1];
        if row.is_empty() {
            *row = vec![0; level];
        }
        row[index as usize - 1] += 1;
    }

    /// Highest level with any recorded count.
    pub fn max_level(&self) -> u32 {
        self.rows.iter().rposition(|r| !r.is_empty()).map_or(0, |p| p as u32 + 1)
    }

    /// Sum of count(1, i) over all levels; equals the completed stage count.
    pub fn total_for_first(&self) -> u64 {
        self.rows.iter().filter_map(|r| r.first()).sum()
    }
}

/// Occurrence counts of each active set seen so far.
#[derive(Debug, Clone, Default)]
pub struct ParityLedger {
    seen: HashMap<ActiveSet, u64>,
}

impl ParityLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn occurrences(&self, set: &ActiveSet) -> u64 {
        self.seen.get(set).copied().unwrap_or(0)
    }

    pub fn record(&mut self, set: &ActiveSet) {
        match self.seen.get_mut(set) {
            Some(c) => *c += 1,
            None => {
                self.seen.insert(set.clone(), 1);
            }
        }
    }

    pub fn distinct(&self) -> usize {
        self.seen.len()
    }

    pub fn total(&self) -> u64 {
        self.seen.values().sum()
    }
}

/// One stage of the construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageRecord {
    /// 1-based stage index.
    pub n: u64,
    pub cutoff: u32,
    /// Least index certifying the cutoff.
    pub witness: u32,
    pub active: ActiveSet,
    pub bit: u8,
}

/// Least level `i` with a caring `j <= i` whose count(j, i) <= capacity(i).
///
/// Returns `(cutoff, witness)`. `cares` is only called for indices up to the
/// returned cutoff.
pub fn compute_cutoff<F>(ledger: &CountLedger, cares: F, rule: &ThresholdRule) -> Result<(u32, u32)>
where
    F: FnMut(u32) -> Result<Decision>,
{
    search_cutoff(ledger, cares, rule, 1)
}

fn search_cutoff<F>(
    ledger: &CountLedger,
    mut cares: F,
    rule: &ThresholdRule,
    start: u32,
) -> Result<(u32, u32)>
where
    F: FnMut(u32) -> Result<Decision>,
{
    let mut level = start;
    loop {
        let capacity = rule.capacity(level)?;
        for j in 1..=level {
            if ledger.count(j, level) <= capacity && cares(j)?.is_care() {
                return Ok((level, j));
            }
        }
        level += 1;
    }
}

/// Caring indices in `1..=cutoff`.
pub fn compute_active_set<F>(mut cares: F, cutoff: u32) -> Result<ActiveSet>
where
    F: FnMut(u32) -> Result<Decision>,
{
    let mut indices = Vec::with_capacity(cutoff as usize);
    for j in 1..=cutoff {
        if cares(j)?.is_care() {
            indices.push(j);
        }
    }
    Ok(ActiveSet::new(indices))
}

/// Prior occurrence count of `active`, mod 2.
pub fn parity_bit(parity: &ParityLedger, active: &ActiveSet) -> u8 {
    (parity.occurrences(active) % 2) as u8
}

/// Ledgers for an in-progress construction.
#[derive(Debug, Clone, Default)]
pub struct ConstructionState {
    counts: CountLedger,
    parity: ParityLedger,
    stages: u64,
    // Levels 1..=settled have every count(j, i) above capacity(i) and can
    // never supply a witness again.
    settled: u32,
}

impl ConstructionState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stages(&self) -> u64 {
        self.stages
    }

    pub fn counts(&self) -> &CountLedger {
        &self.counts
    }

    pub fn parity(&self) -> &ParityLedger {
        &self.parity
    }

    /// Runs one stage and updates the ledgers.
    pub fn apply_stage<F>(&mut self, mut cares: F, rule: &ThresholdRule) -> Result<StageRecord>
    where
        F: FnMut(u32) -> Result<Decision>,
    {
        let (cutoff, witness) = search_cutoff(&self.counts, &mut cares, rule, self.settled + 1)?;
        let active = compute_active_set(&mut cares, cutoff)?;
        let bit = parity_bit(&self.parity, &active);

        for &j in active.indices() {
            self.counts.increment(j, cutoff);
        }
        self.parity.record(&active);
        self.stages += 1;
        self.advance_settled(rule)?;

        Ok(StageRecord {
            n: self.stages,
            cutoff,
            witness,
            active,
            bit,
        })
    }

    fn advance_settled(&mut self, rule: &ThresholdRule) -> Result<()> {
        loop {
            let level = self.settled + 1;
            if level > self.counts.max_level() {
                return Ok(());
            }
            let capacity = rule.capacity(level)?;
            if (1..=level).any(|j| self.counts.count(j, level) <= capacity) {
                return Ok(());
            }
            self.settled = level;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cares_in(set: &'static [u32]) -> impl FnMut(u32) -> Result<Decision> {
        move |j| {
            Ok(if set.contains(&j) {
                Decision::Care
            } else {
                Decision::DontCare
            })
        }
    }

    fn base3() -> ThresholdRule {
        ThresholdRule::exp(3).unwrap()
    }

    #[test]
    fn fresh_ledger_cuts_at_one() {
        let ledger = CountLedger::new();
        assert_eq!(compute_cutoff(&ledger, cares_in(&[1, 2, 3]), &base3()).unwrap(), (1, 1));
    }

    #[test]
    fn exhausted_first_level_moves_up() {
        let mut ledger = CountLedger::new();
        for _ in 0..4 {
            ledger.increment(1, 1);
        }
        assert_eq!(ledger.count(1, 2), 0);
        assert_eq!(compute_cutoff(&ledger, cares_in(&[1]), &base3()).unwrap(), (2, 1));
    }

    #[test]
    fn cutoff_excludes_higher_caring_index() {
        let mut ledger = CountLedger::new();
        ledger.increment(1, 1);
        ledger.increment(1, 1);
        let rule = base3();
        let (cutoff, witness) = compute_cutoff(&ledger, cares_in(&[1, 2]), &rule).unwrap();
        assert_eq!((cutoff, witness), (1, 1));
        let active = compute_active_set(cares_in(&[1, 2]), cutoff).unwrap();
        assert_eq!(active.indices(), &[1]);
    }

    #[test]
    fn witness_may_be_above_one() {
        // Level 2 full for index 1 but open for index 2.
        let mut ledger = CountLedger::new();
        for _ in 0..4 {
            ledger.increment(1, 1);
        }
        for _ in 0..10 {
            ledger.increment(1, 2);
        }
        let (cutoff, witness) = compute_cutoff(&ledger, cares_in(&[1, 2]), &base3()).unwrap();
        assert_eq!((cutoff, witness), (2, 2));
        // Without index 2 caring the search climbs to level 3.
        assert_eq!(compute_cutoff(&ledger, cares_in(&[1]), &base3()).unwrap(), (3, 1));
    }

    #[test]
    fn cutoff_search_is_lazy() {
        let ledger = CountLedger::new();
        let mut asked = Vec::new();
        let r = compute_cutoff(
            &ledger,
            |j| {
                asked.push(j);
                Ok(Decision::Care)
            },
            &base3(),
        )
        .unwrap();
        assert_eq!(r, (1, 1));
        assert_eq!(asked, vec![1]);
    }

    #[test]
    fn active_set_examples() {
        assert_eq!(compute_active_set(cares_in(&[1, 2, 7]), 2).unwrap().indices(), &[1, 2]);
        assert_eq!(compute_active_set(cares_in(&[1]), 5).unwrap().indices(), &[1]);
        assert_eq!(compute_active_set(cares_in(&[1, 2]), 1).unwrap().indices(), &[1]);
    }

    #[test]
    fn parity_sequence() {
        let one = ActiveSet::new(vec![1]);
        let one_two = ActiveSet::new(vec![1, 2]);
        let mut ledger = ParityLedger::new();
        let mut bits = Vec::new();
        for set in [&one, &one, &one_two, &one, &one_two] {
            bits.push(parity_bit(&ledger, set));
            ledger.record(set);
        }
        assert_eq!(bits, vec![0, 1, 0, 0, 1]);
        assert_eq!(ledger.total(), 5);
        assert_eq!(ledger.distinct(), 2);
    }

    #[test]
    fn two_function_stages() {
        // f1 = always, f2 = last bit is 1; prefixes of q = 0101001.
        let q = [0u8, 1, 0, 1, 0, 0, 1];
        let rule = base3();
        let mut state = ConstructionState::new();
        let mut records = Vec::new();
        for n in 0..q.len() {
            let prev = if n == 0 { None } else { Some(q[n - 1]) };
            let rec = state
                .apply_stage(
                    |j| {
                        Ok(match j {
                            1 => Decision::Care,
                            2 if prev == Some(1) => Decision::Care,
                            _ => Decision::DontCare,
                        })
                    },
                    &rule,
                )
                .unwrap();
            assert_eq!(rec.bit, q[n], "stage {}", n + 1);
            records.push(rec);
        }
        let first = &records[0];
        assert_eq!((first.n, first.cutoff, first.witness, first.bit), (1, 1, 1, 0));
        assert_eq!(first.active.indices(), &[1]);
        let fifth = &records[4];
        assert_eq!((fifth.n, fifth.cutoff, fifth.witness, fifth.bit), (5, 2, 1, 0));
        assert_eq!(fifth.active.indices(), &[1, 2]);
        let sixth = &records[5];
        assert_eq!((sixth.n, sixth.cutoff, sixth.witness, sixth.bit), (6, 2, 1, 0));
        assert_eq!(sixth.active.indices(), &[1]);
        assert_eq!(state.counts().total_for_first(), 7);
        assert_eq!(state.parity().total(), 7);
    }

    #[test]
    fn threshold_validation() {
        assert_eq!(ThresholdRule::exp(2), Err(Error::BaseTooSmall(2)));
        assert!(ThresholdRule::exp(3).is_ok());
        assert_eq!(ThresholdRule::table(vec![]), Err(Error::EmptyTable));
        assert!(matches!(
            ThresholdRule::table(vec![3, 3]),
            Err(Error::TableNotIncreasing { level: 2, .. })
        ));
        let t = ThresholdRule::table(vec![3, 4, 100]).unwrap();
        assert_eq!(t.capacity(1), Ok(3));
        assert_eq!(t.capacity(2), Err(Error::CapacityTooSmall { level: 2, capacity: 4 }));
        assert_eq!(t.capacity(3), Ok(100));
        assert_eq!(t.capacity(4), Err(Error::TableExhausted { level: 4, len: 3 }));
        assert_eq!(ThresholdRule::ExpBase(8).capacity(30), Ok(u64::MAX));
        assert_eq!(ThresholdRule::ExpBase(3).capacity(4), Ok(81));
    }

    #[test]
    fn small_table_fails_when_reached() {
        let rule = ThresholdRule::table(vec![3, 4]).unwrap();
        let mut state = ConstructionState::new();
        let mut result = Ok(());
        for _ in 0..10 {
            if let Err(e) = state.apply_stage(|_| Ok(Decision::Care), &rule) {
                result = Err(e);
                break;
            }
        }
        assert_eq!(result, Err(Error::CapacityTooSmall { level: 2, capacity: 4 }));
    }
}

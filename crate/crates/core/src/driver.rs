//! Feedback loop from emitted bits back into the caring sets.
//!
//! Stage `n` asks the family which functions care about the prefix q[n],
//! runs the stage rule on the answer, and appends the resulting bit. The
//! general construction goes through the cutoff; [`build_finite`] uses the
//! whole caring set directly and is only defined for finite families.

use std::collections::HashMap;

use crate::bits::BitSequence;
use crate::construction::{ActiveSet, ConstructionState, ParityLedger, StageRecord, ThresholdRule};
use crate::error::{Error, Result};
use crate::selection::{Decision, Family, PrefixState, PrefixView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceRetention {
    #[default]
    None,
    Full,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub family: Family,
    pub length: u64,
    pub rule: ThresholdRule,
    pub retention: TraceRetention,
}

impl RunConfig {
    pub fn new(family: Family, length: u64, rule: ThresholdRule) -> Self {
        RunConfig {
            family,
            length,
            rule,
            retention: TraceRetention::None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.retention = TraceRetention::Full;
        self
    }
}

/// Output of [`build`].
#[derive(Debug, Clone)]
pub struct Run {
    pub bits: BitSequence,
    pub trace: Option<Trace>,
}

/// Stage records stored column-wise with interned active sets.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    cutoffs: Vec<u32>,
    witnesses: Vec<u32>,
    set_ids: Vec<u32>,
    sets: Vec<ActiveSet>,
    ids: HashMap<ActiveSet, u32>,
    bits: BitSequence,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record. Stage numbers are implied by position.
    pub fn push(&mut self, record: &StageRecord) {
        let id = match self.ids.get(&record.active) {
            Some(&id) => id,
            None => {
                let id = self.sets.len() as u32;
                self.sets.push(record.active.clone());
                self.ids.insert(record.active.clone(), id);
                id
            }
        };
        self.cutoffs.push(record.cutoff);
        self.witnesses.push(record.witness);
        self.set_ids.push(id);
        self.bits.push(record.bit);
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a StageRecord>) -> Self {
        let mut trace = Trace::new();
        for r in records {
            trace.push(r);
        }
        trace
    }

    pub fn len(&self) -> u64 {
        self.cutoffs.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.cutoffs.is_empty()
    }

    /// I(n) for 1-based stage `n`.
    pub fn cutoff(&self, n: u64) -> u32 {
        self.cutoffs[n as usize - 1]
    }

    pub fn cutoffs(&self) -> &[u32] {
        &self.cutoffs
    }

    /// Interned id of A*(n); equal ids mean equal sets.
    pub fn set_id(&self, n: u64) -> u32 {
        self.set_ids[n as usize - 1]
    }

    pub fn set(&self, id: u32) -> &ActiveSet {
        &self.sets[id as usize]
    }

    pub fn distinct_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn bits(&self) -> &BitSequence {
        &self.bits
    }

    pub fn record(&self, n: u64) -> StageRecord {
        let i = n as usize - 1;
        StageRecord {
            n,
            cutoff: self.cutoffs[i],
            witness: self.witnesses[i],
            active: self.sets[self.set_ids[i] as usize].clone(),
            bit: self.bits.get(i as u64),
        }
    }

    pub fn records(&self) -> impl Iterator<Item = StageRecord> + '_ {
        (1..=self.len()).map(|n| self.record(n))
    }
}

/// Stage-by-stage generator. Yields one [`StageRecord`] per bit; dropping it
/// early is fine.
pub struct Stream<'a> {
    family: &'a Family,
    rule: &'a ThresholdRule,
    state: ConstructionState,
    prefix: PrefixState,
    memo: Vec<Option<Decision>>,
    remaining: Option<u64>,
    failed: bool,
}

impl<'a> Stream<'a> {
    pub fn unbounded(family: &'a Family, rule: &'a ThresholdRule) -> Result<Self> {
        rule.validate()?;
        Ok(Stream {
            family,
            rule,
            state: ConstructionState::new(),
            prefix: PrefixState::new(),
            memo: Vec::new(),
            remaining: None,
            failed: false,
        })
    }

    pub fn state(&self) -> &ConstructionState {
        &self.state
    }

    /// Summary of the bits emitted so far.
    pub fn prefix(&self) -> &PrefixState {
        &self.prefix
    }

    fn step(&mut self) -> Result<StageRecord> {
        let Stream {
            family,
            rule,
            state,
            prefix,
            memo,
            ..
        } = self;
        memo.clear();
        let size = family.size();
        let cares = |j: u32| -> Result<Decision> {
            // A finite family has no members past its size, so they never care.
            if size.is_some_and(|k| j as usize > k) {
                return Ok(Decision::DontCare);
            }
            let slot = j as usize - 1;
            if memo.len() <= slot {
                memo.resize(slot + 1, None);
            }
            if let Some(d) = memo[slot] {
                return Ok(d);
            }
            let d = family.decide(j, &*prefix)?;
            memo[slot] = Some(d);
            Ok(d)
        };
        let record = state.apply_stage(cares, rule)?;
        self.prefix.push(record.bit);
        Ok(record)
    }
}

impl Iterator for Stream<'_> {
    type Item = Result<StageRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.remaining == Some(0) {
            return None;
        }
        if let Some(r) = self.remaining.as_mut() {
            *r -= 1;
        }
        let out = self.step();
        self.failed = out.is_err();
        Some(out)
    }
}

/// A stream that stops after `config.length` stages.
pub fn stream(config: &RunConfig) -> Result<Stream<'_>> {
    let mut s = Stream::unbounded(&config.family, &config.rule)?;
    s.remaining = Some(config.length);
    Ok(s)
}

/// Builds the first `config.length` bits of the sequence.
pub fn build(config: &RunConfig) -> Result<Run> {
    let mut bits = BitSequence::with_capacity(config.length);
    let mut trace = match config.retention {
        TraceRetention::Full => Some(Trace::new()),
        TraceRetention::None => None,
    };
    for record in stream(config)? {
        let record = record?;
        bits.push(record.bit);
        if let Some(t) = trace.as_mut() {
            t.push(&record);
        }
    }
    Ok(Run { bits, trace })
}

/// Construction without a cutoff: the bit at stage `n` is the parity of
/// earlier occurrences of the full caring set C(n). Finite families only.
pub fn build_finite(family: &Family, length: u64) -> Result<BitSequence> {
    if !family.is_finite() {
        return Err(Error::InfiniteFamily);
    }
    let specs = family.explicit();
    let mut prefix = PrefixState::new();
    let mut parity = ParityLedger::new();
    let mut bits = BitSequence::with_capacity(length);
    for _ in 0..length {
        let caring: Vec<u32> = specs
            .iter()
            .enumerate()
            .filter(|(_, spec)| crate::selection::evaluate(spec, &prefix).is_care())
            .map(|(i, _)| i as u32 + 1)
            .collect();
        let set = ActiveSet::new(caring);
        let bit = (parity.occurrences(&set) % 2) as u8;
        parity.record(&set);
        bits.push(bit);
        prefix.push(bit);
    }
    debug_assert_eq!(prefix.bit_len(), length);
    Ok(bits)
}

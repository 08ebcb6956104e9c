use serde::Serialize;

use super::Verdict;
use crate::construction::ThresholdRule;
use crate::driver::Trace;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlternationReport {
    pub verdict: Verdict,
    pub distinct_sets: usize,
    /// First stage whose bit breaks the 0,1,0,1,... pattern of its set.
    pub first_violation: Option<u64>,
}

/// Each distinct active set must emit 0, 1, 0, 1, ... at its occurrences.
pub fn verify_alternation(trace: &Trace) -> AlternationReport {
    let mut seen = vec![0u64; trace.distinct_sets()];
    let mut first_violation = None;
    for n in 1..=trace.len() {
        let id = trace.set_id(n) as usize;
        let expected = (seen[id] % 2) as u8;
        seen[id] += 1;
        if trace.bits().get(n - 1) != expected {
            first_violation = Some(n);
            break;
        }
    }
    AlternationReport {
        verdict: Verdict::from_pass(first_violation.is_none()),
        distinct_sets: trace.distinct_sets(),
        first_violation,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelBudget {
    pub level: u32,
    pub observed: u64,
    /// level · (capacity(level) + 1), saturating.
    pub budget: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BudgetReport {
    pub verdict: Verdict,
    pub levels: Vec<LevelBudget>,
}

impl BudgetReport {
    pub fn observed(&self, level: u32) -> u64 {
        self.levels
            .iter()
            .find(|l| l.level == level)
            .map_or(0, |l| l.observed)
    }
}

/// Number of stages with cutoff i is at most i · (capacity(i) + 1).
pub fn verify_cutoff_budget(trace: &Trace, rule: &ThresholdRule) -> Result<BudgetReport> {
    let mut observed: Vec<u64> = Vec::new();
    for &c in trace.cutoffs() {
        let slot = c as usize - 1;
        if observed.len() <= slot {
            observed.resize(slot + 1, 0);
        }
        observed[slot] += 1;
    }
    let mut levels = Vec::new();
    for (slot, &count) in observed.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let level = slot as u32 + 1;
        let budget = u64::from(level).saturating_mul(rule.capacity(level)?.saturating_add(1));
        levels.push(LevelBudget {
            level,
            observed: count,
            budget,
            pass: count <= budget,
        });
    }
    Ok(BudgetReport {
        verdict: Verdict::from_pass(levels.iter().all(|l| l.pass)),
        levels,
    })
}

//! Block structure of the cutoff sequence seen by one selection function.
//!
//! For index ℓ with selected stages n_1 < n_2 < ..., zeta is the sequence of
//! cutoffs I(n_1), I(n_2), .... Block α(v) runs from the first occurrence of
//! v in zeta up to (excluding) the first occurrence of v + 1. The tail starts
//! at the first occurrence of the stabilization level k: the least k >= ℓ
//! after whose first occurrence no cutoff drops below ℓ, so ℓ belongs to
//! every later active set. The selected stages before it form the head.

use std::collections::HashSet;

use serde::Serialize;

use super::{pow2, SelectionTrace, Verdict};
use crate::bits::BitSequence;
use crate::construction::ThresholdRule;
use crate::driver::Trace;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub level: u32,
    /// Offset of the block's first entry within zeta.
    pub start: usize,
    pub len: usize,
    /// Entries equal to `level` inside the block.
    pub at_level: usize,
    pub distinct_sets: usize,
    pub zeros: u64,
    pub ones: u64,
    /// The next level has occurred, closing the block.
    pub complete: bool,
}

#[derive(Debug, Clone)]
pub struct ZetaBlocks {
    pub index: u32,
    zeta: Vec<u32>,
    set_ids: Vec<u32>,
    bits: BitSequence,
    /// Stabilization level k, if the run reached one.
    pub level: Option<u32>,
    /// Head length p: selected stages before the tail.
    pub head: usize,
    pub blocks: Vec<Block>,
    /// First occurrences of k, k+1, ... appear in order with no gaps.
    pub ordered: bool,
}

impl ZetaBlocks {
    /// Zeta for `selection.index`, read off a full trace of the same run.
    pub fn from_run(trace: &Trace, selection: &SelectionTrace) -> Self {
        let zeta = selection.positions().iter().map(|&n| trace.cutoff(n)).collect();
        let set_ids = selection.positions().iter().map(|&n| trace.set_id(n)).collect();
        Self::from_parts(selection.index, zeta, set_ids, selection.bits().clone())
    }

    /// Builds the decomposition from raw columns: cutoffs, interned active-set
    /// ids, and emitted bits at the selected stages.
    pub fn from_parts(index: u32, zeta: Vec<u32>, set_ids: Vec<u32>, bits: BitSequence) -> Self {
        assert_eq!(zeta.len(), set_ids.len());
        assert_eq!(zeta.len() as u64, bits.len());
        let mut zb = ZetaBlocks {
            index,
            zeta,
            set_ids,
            bits,
            level: None,
            head: 0,
            blocks: Vec::new(),
            ordered: true,
        };
        zb.decompose();
        zb
    }

    pub fn zeta(&self) -> &[u32] {
        &self.zeta
    }

    pub fn tail_len(&self) -> usize {
        self.zeta.len() - self.head
    }

    /// R(j) = N1 / (N0 + N1) over the first `j` tail entries.
    pub fn tail_ratio(&self, j: usize) -> Option<f64> {
        if j == 0 || j > self.tail_len() {
            return None;
        }
        let ones = (self.head..self.head + j)
            .filter(|&i| self.bits.get(i as u64) == 1)
            .count();
        Some(ones as f64 / j as f64)
    }

    fn first_occurrence(&self, value: u32) -> Option<usize> {
        self.zeta.iter().position(|&v| v == value)
    }

    fn decompose(&mut self) {
        let ell = self.index;
        let last_below = self.zeta.iter().rposition(|&v| v < ell);
        let Some(&max) = self.zeta.iter().max() else {
            return;
        };
        let mut level = None;
        for v in ell.max(1)..=max {
            if let Some(first) = self.first_occurrence(v) {
                if last_below.is_none_or(|b| first > b) {
                    level = Some((v, first));
                    break;
                }
            }
        }
        let Some((k, head)) = level else {
            return;
        };
        self.level = Some(k);
        self.head = head;

        let mut starts = vec![(k, head)];
        let mut v = k + 1;
        while v <= max {
            match self.first_occurrence(v) {
                Some(p) => {
                    if p <= starts.last().expect("nonempty").1 {
                        self.ordered = false;
                    }
                    starts.push((v, p));
                }
                None => {
                    self.ordered = false;
                    break;
                }
            }
            v += 1;
        }

        for (i, &(level, start)) in starts.iter().enumerate() {
            let next = starts.get(i + 1).map(|&(_, p)| p);
            let end = next.unwrap_or(self.zeta.len()).max(start);
            let mut sets = HashSet::new();
            let (mut zeros, mut ones, mut at_level) = (0, 0, 0);
            for j in start..end {
                sets.insert(self.set_ids[j]);
                if self.zeta[j] == level {
                    at_level += 1;
                }
                if self.bits.get(j as u64) == 1 {
                    ones += 1;
                } else {
                    zeros += 1;
                }
            }
            self.blocks.push(Block {
                level,
                start,
                len: end - start,
                at_level,
                distinct_sets: sets.len(),
                zeros,
                ones,
                complete: next.is_some(),
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockReport {
    pub verdict: Verdict,
    pub index: u32,
    pub stabilization_level: Option<u32>,
    pub complete_blocks: usize,
    pub first_failure: Option<String>,
}

/// For every complete tail block α(v): at least capacity(v) + 1 entries at
/// level v, and at most 2^v distinct active sets.
pub fn verify_block_facts(zb: &ZetaBlocks, rule: &ThresholdRule) -> Result<BlockReport> {
    let mut first_failure = None;
    if !zb.ordered {
        first_failure = Some("first occurrences of successive levels are out of order".to_string());
    }
    let mut complete = 0;
    for block in zb.blocks.iter().filter(|b| b.complete) {
        complete += 1;
        if first_failure.is_some() {
            break;
        }
        let capacity = rule.capacity(block.level)?;
        if (block.at_level as u64) <= capacity {
            first_failure = Some(format!(
                "block {} has {} entries at its level, needs more than capacity {}",
                block.level, block.at_level, capacity
            ));
        } else if block.distinct_sets as u64 > pow2(block.level) {
            first_failure = Some(format!(
                "block {} holds {} distinct sets, more than 2^{}",
                block.level, block.distinct_sets, block.level
            ));
        }
    }
    let verdict = if first_failure.is_some() {
        Verdict::Fail
    } else if complete == 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(BlockReport {
        verdict,
        index: zb.index,
        stabilization_level: zb.level,
        complete_blocks: complete,
        first_failure,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeficitReport {
    pub verdict: Verdict,
    pub index: u32,
    pub stabilization_level: Option<u32>,
    pub head: usize,
    pub tail_len: usize,
    /// Largest N0 - N1 seen in the tail.
    pub max_unmatched_zeros: i64,
    /// Largest N1 - N0 seen in the tail.
    pub max_unmatched_ones: i64,
    pub first_failure: Option<String>,
}

/// Checks, before every tail entry j and after the last one, that
///
/// * N0(j) <= N1(j) + Σ_{i=0..=off} 2^{k+i}, where j lies in block α(k+off),
/// * N1(j) <= N0(j) + p,
/// * N0(j) + N1(j) >= capacity(k+off-1) when off >= 1.
pub fn deficit_bounds(zb: &ZetaBlocks, rule: &ThresholdRule) -> Result<DeficitReport> {
    let mut report = DeficitReport {
        verdict: Verdict::Inconclusive,
        index: zb.index,
        stabilization_level: zb.level,
        head: zb.head,
        tail_len: zb.tail_len(),
        max_unmatched_zeros: 0,
        max_unmatched_ones: 0,
        first_failure: None,
    };
    let Some(k) = zb.level else {
        return Ok(report);
    };
    if !zb.ordered {
        report.verdict = Verdict::Fail;
        report.first_failure = Some("block structure out of order".into());
        return Ok(report);
    }
    let p = zb.head as i64;
    let (mut n0, mut n1) = (0i64, 0i64);
    let mut block = 0usize;
    let mut sets_bound: u64 = pow2(k);
    let tail = zb.tail_len();
    for t in 0..=tail {
        while t < tail && block + 1 < zb.blocks.len() && zb.head + t >= zb.blocks[block + 1].start {
            block += 1;
            sets_bound = sets_bound.saturating_add(pow2(k + block as u32));
        }
        let offset = block as u32;
        report.max_unmatched_zeros = report.max_unmatched_zeros.max(n0 - n1);
        report.max_unmatched_ones = report.max_unmatched_ones.max(n1 - n0);

        let failure = if (n0 - n1) as i128 > sets_bound as i128 {
            Some(format!(
                "tail entry {}: N0 - N1 = {} exceeds {}",
                t + 1,
                n0 - n1,
                sets_bound
            ))
        } else if n1 > n0 + p {
            Some(format!("tail entry {}: N1 = {} exceeds N0 + p = {}", t + 1, n1, n0 + p))
        } else if offset >= 1 && ((n0 + n1) as u64) < rule.capacity(k + offset - 1)? {
            Some(format!(
                "tail entry {}: N0 + N1 = {} below capacity({})",
                t + 1,
                n0 + n1,
                k + offset - 1
            ))
        } else {
            None
        };
        if failure.is_some() {
            report.first_failure = failure;
            report.verdict = Verdict::Fail;
            return Ok(report);
        }
        if t < tail {
            if zb.bits.get((zb.head + t) as u64) == 1 {
                n1 += 1;
            } else {
                n0 += 1;
            }
        }
    }
    report.verdict = Verdict::Pass;
    Ok(report)
}

//! Test-only reference implementation of the stage rule.
//!
//! Recomputes every ledger from the full stage history at each stage and
//! evaluates selection functions with its own copy of the catalog semantics.
//! Quadratic in the run length; intended for runs of at most ~10^4 stages.

#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use ville_core::{builtin_family, Family, SelectionSpec, SuffixBinary, TailGenerator, ThresholdRule, Trace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveStage {
    pub cutoff: u32,
    pub witness: u32,
    pub active: Vec<u32>,
    pub bit: u8,
}

fn naive_cares(spec: &SelectionSpec, prefix: &[u8]) -> bool {
    let ones = prefix.iter().filter(|&&b| b == 1).count();
    match spec {
        SelectionSpec::Always => true,
        SelectionSpec::LastBit(b) => prefix.last() == Some(b),
        SelectionSpec::ContainsOne => ones > 0,
        SelectionSpec::Suffix(p) => {
            let p = p.to_bits();
            prefix.len() >= p.len() && prefix[prefix.len() - p.len()..] == p[..]
        }
        SelectionSpec::Periodic { modulus, residue } => prefix.len() as u64 % modulus == *residue,
        SelectionSpec::ZerosRun(k) => {
            let k = *k as usize;
            prefix.len() >= k && prefix[prefix.len() - k..].iter().all(|&b| b == 0)
        }
        SelectionSpec::MajorityOnes => 2 * ones > prefix.len(),
    }
}

fn naive_capacity(rule: &ThresholdRule, level: u32) -> u64 {
    match rule {
        ThresholdRule::ExpBase(r) => {
            let mut c: u64 = 1;
            for _ in 0..level {
                c = c.saturating_mul(*r);
            }
            c
        }
        ThresholdRule::Table(t) => t[level as usize - 1],
    }
}

pub fn naive_run(family: &Family, rule: &ThresholdRule, length: usize) -> Vec<NaiveStage> {
    let size = family.size();
    let mut history: Vec<NaiveStage> = Vec::with_capacity(length);
    let mut bits: Vec<u8> = Vec::with_capacity(length);
    for _ in 0..length {
        let cares = |j: u32| -> bool {
            if size.is_some_and(|k| j as usize > k) {
                return false;
            }
            naive_cares(&family.spec(j).unwrap(), &bits)
        };

        // counts[i][j] over the whole history.
        let top = history.iter().map(|s| s.cutoff).max().unwrap_or(0) as usize + 2;
        let mut counts = vec![vec![0u64; top + 1]; top + 1];
        for s in &history {
            for &j in &s.active {
                counts[s.cutoff as usize][j as usize] += 1;
            }
        }
        let count = |j: u32, i: u32| -> u64 {
            counts
                .get(i as usize)
                .and_then(|row| row.get(j as usize))
                .copied()
                .unwrap_or(0)
        };

        let mut found = None;
        let mut i = 1u32;
        while found.is_none() {
            let cap = naive_capacity(rule, i);
            for j in 1..=i {
                if cares(j) && count(j, i) <= cap {
                    found = Some((i, j));
                    break;
                }
            }
            i += 1;
        }
        let (cutoff, witness) = found.unwrap();
        let active: Vec<u32> = (1..=cutoff).filter(|&j| cares(j)).collect();
        let earlier = history.iter().filter(|s| s.active == active).count();
        let bit = (earlier % 2) as u8;
        bits.push(bit);
        history.push(NaiveStage {
            cutoff,
            witness,
            active,
            bit,
        });
    }
    history
}

pub fn trace_as_naive(trace: &Trace) -> Vec<NaiveStage> {
    trace
        .records()
        .map(|r| NaiveStage {
            cutoff: r.cutoff,
            witness: r.witness,
            active: r.active.indices().to_vec(),
            bit: r.bit,
        })
        .collect()
}

pub const BUILTINS: [&str; 4] = ["always-only", "two-fn", "mixed-5", "infinite"];

/// Records the largest family index requested through a tail rule.
#[derive(Debug, Default)]
pub struct Probe {
    max_seen: AtomicU64,
}

impl Probe {
    /// Largest index requested since the last call.
    pub fn take_max(&self) -> u64 {
        self.max_seen.swap(0, Ordering::SeqCst)
    }
}

#[derive(Debug)]
struct ProbedTail(Arc<Probe>);

impl TailGenerator for ProbedTail {
    fn spec_at(&self, m: u64) -> SelectionSpec {
        self.0.max_seen.fetch_max(m, Ordering::SeqCst);
        if m <= 5 {
            builtin_family("mixed-5").unwrap().spec(m as u32).unwrap()
        } else {
            SuffixBinary.spec_at(m)
        }
    }

    fn name(&self) -> &str {
        "probe"
    }
}

/// The `infinite` builtin with every index >= 2 routed through a [`Probe`].
pub fn probed_infinite_family() -> (Family, Arc<Probe>) {
    let probe = Arc::new(Probe::default());
    let family = Family::with_tail(vec![SelectionSpec::Always], ProbedTail(probe.clone())).unwrap();
    (family, probe)
}

use serde::Serialize;

use super::{pow2, Verdict};
use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::selection::{Family, PrefixState};

/// S(q[n]) for n = 1..=len+1: entry `k` is the number of ones in the first `k` bits.
pub fn running_sums(q: &BitSequence) -> Vec<u64> {
    let mut sums = Vec::with_capacity(q.len() as usize + 1);
    let mut s = 0;
    sums.push(0);
    for b in q.iter() {
        s += u64::from(b);
        sums.push(s);
    }
    sums
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HalfBoundReport {
    pub verdict: Verdict,
    /// Least n with more ones than zeros in q[n].
    pub first_violation: Option<u64>,
    /// Largest `2·S - m` over prefix lengths m; at most 0 on a pass.
    pub max_two_delta: i64,
}

/// No prefix may hold more ones than zeros.
pub fn verify_half_bound(q: &BitSequence) -> HalfBoundReport {
    let mut ones: i64 = 0;
    let mut max_two_delta = 0i64;
    let mut first_violation = None;
    for (m, b) in q.iter().enumerate() {
        ones += i64::from(b);
        let two_delta = 2 * ones - (m as i64 + 1);
        max_two_delta = max_two_delta.max(two_delta);
        if two_delta > 0 && first_violation.is_none() {
            // q[n] is the prefix of length n - 1.
            first_violation = Some(m as u64 + 2);
        }
    }
    HalfBoundReport {
        verdict: Verdict::from_pass(first_violation.is_none()),
        first_violation,
        max_two_delta,
    }
}

/// Positions and bits of the subsequence that one family member selects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionTrace {
    pub index: u32,
    /// Length of the run the selection was taken from.
    pub run_length: u64,
    positions: Vec<u64>,
    bits: BitSequence,
}

impl SelectionTrace {
    pub fn from_parts(index: u32, run_length: u64, positions: Vec<u64>, bits: BitSequence) -> Self {
        assert_eq!(positions.len() as u64, bits.len());
        debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        SelectionTrace {
            index,
            run_length,
            positions,
            bits,
        }
    }

    /// Selected stages n_1 < n_2 < ..., 1-based.
    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    pub fn bits(&self) -> &BitSequence {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Heuristic: no selected position in the second half of the run.
    pub fn finite_care(&self) -> bool {
        match self.positions.last() {
            Some(&last) => 2 * last <= self.run_length,
            None => true,
        }
    }

    /// `2δ(m) = 2·S(m) - m` for m = 1..=len.
    pub fn two_deltas(&self) -> impl Iterator<Item = i64> + '_ {
        self.bits.iter().scan(0i64, |acc, b| {
            *acc += if b == 1 { 1 } else { -1 };
            Some(*acc)
        })
    }
}

/// Re-evaluates f_index on every prefix of `q`. Independent of any
/// construction ledgers.
pub fn select(q: &BitSequence, family: &Family, index: u32) -> Result<SelectionTrace> {
    family.spec(index)?;
    let mut prefix = PrefixState::new();
    let mut positions = Vec::new();
    let mut bits = BitSequence::new();
    for (i, b) in q.iter().enumerate() {
        if family.decide(index, &prefix)?.is_care() {
            positions.push(i as u64 + 1);
            bits.push(b);
        }
        prefix.push(b);
    }
    Ok(SelectionTrace::from_parts(index, q.len(), positions, bits))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteBoundReport {
    pub verdict: Verdict,
    pub family_size: usize,
    /// Per index: (index, selected count, largest m - 2·S observed).
    pub per_index: Vec<(u32, usize, i64)>,
    /// (index, selected-prefix length) of the first violation.
    pub first_violation: Option<(u32, u64)>,
}

/// `0 <= m/2 - S_f(m) <= 2^k` for every member f of a size-k family and every
/// selected-prefix length m. Checked in doubled units.
pub fn verify_finite_bound(q: &BitSequence, family: &Family) -> Result<FiniteBoundReport> {
    let k = family.size().ok_or(Error::InfiniteFamily)?;
    let upper = 2 * pow2(k as u32).min(u64::MAX / 2) as i64;
    let mut per_index = Vec::with_capacity(k);
    let mut first_violation = None;
    for index in 1..=k as u32 {
        let sel = select(q, family, index)?;
        let mut worst = 0i64;
        for (m, two_delta) in sel.two_deltas().enumerate() {
            let deficit = -two_delta;
            worst = worst.max(deficit);
            if !(0..=upper).contains(&deficit) && first_violation.is_none() {
                first_violation = Some((index, m as u64 + 1));
            }
        }
        per_index.push((index, sel.len(), worst));
    }
    Ok(FiniteBoundReport {
        verdict: Verdict::from_pass(first_violation.is_none()),
        family_size: k,
        per_index,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{builtin_family, Family, SelectionSpec};

    fn bits(s: &str) -> BitSequence {
        BitSequence::from_text(s).unwrap()
    }

    #[test]
    fn running_sum_examples() {
        assert_eq!(running_sums(&bits("0101")), vec![0, 0, 1, 1, 2]);
        assert_eq!(running_sums(&bits("0000")), vec![0; 5]);
        let sums = running_sums(&bits("0101001"));
        assert_eq!(sums[7], 3);
        assert!(sums.iter().enumerate().all(|(k, &s)| 2 * s <= k as u64));
    }

    #[test]
    fn half_bound_examples() {
        assert_eq!(verify_half_bound(&bits("1")).first_violation, Some(2));
        assert_eq!(verify_half_bound(&bits("0011")).verdict, Verdict::Pass);
        assert_eq!(verify_half_bound(&bits("0110")).first_violation, Some(4));
        assert_eq!(verify_half_bound(&bits("")).verdict, Verdict::Pass);
    }

    #[test]
    fn select_examples() {
        let family = builtin_family("two-fn").unwrap();
        let q = bits("0101001");
        let all = select(&q, &family, 1).unwrap();
        assert_eq!(all.positions(), &[1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(all.bits(), &q);
        let second = select(&q, &family, 2).unwrap();
        assert_eq!(second.positions(), &[3, 5]);
        assert_eq!(second.bits().to_vec(), vec![0, 0]);
        assert!(select(&q, &family, 3).is_err());
    }

    #[test]
    fn two_delta_steps() {
        let family = builtin_family("always-only").unwrap();
        let sel = select(&bits("010011"), &family, 1).unwrap();
        assert_eq!(sel.two_deltas().collect::<Vec<_>>(), vec![-1, 0, -1, -2, -1, 0]);
    }

    #[test]
    fn finite_care_heuristic() {
        let family = Family::finite(vec![SelectionSpec::Always, SelectionSpec::ZerosRun(3)]).unwrap();
        let q = bits("0001010101010101");
        let sel = select(&q, &family, 2).unwrap();
        assert_eq!(sel.positions(), &[4]);
        assert!(sel.finite_care());
        assert!(!select(&q, &family, 1).unwrap().finite_care());
    }

    #[test]
    fn finite_bound_detects_excess() {
        let family = builtin_family("always-only").unwrap();
        // Five zeros: m - 2S = 5 > 2·2^1.
        let report = verify_finite_bound(&bits("00000"), &family).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert_eq!(report.first_violation, Some((1, 5)));
        let report = verify_finite_bound(&bits("1"), &family).unwrap();
        assert_eq!(report.first_violation, Some((1, 1)));
        assert!(verify_finite_bound(&bits("0"), &builtin_family("infinite").unwrap()).is_err());
    }
}

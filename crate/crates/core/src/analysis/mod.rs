//! Statistics and verifiers over finished runs.
//!
//! Every check that the construction guarantees exactly (half bound,
//! alternation, cutoff budget, finite-family bound, block and deficit
//! inequalities) runs on integers. Fluctuations are carried as `2δ` so they
//! stay integral. Only the asymptotic summaries (convergence deviations,
//! fitted exponents, the LIL curve) use floating point.

mod asymptotics;
mod blocks;
mod checks;
mod sums;

use serde::Serialize;

pub use asymptotics::{
    convergence_report, fluctuation_report, lil_curve, ConvergenceReport, DyadicPoint,
    FluctuationReport,
};
pub use blocks::{deficit_bounds, verify_block_facts, Block, BlockReport, DeficitReport, ZetaBlocks};
pub use checks::{
    verify_alternation, verify_cutoff_budget, AlternationReport, BudgetReport, LevelBudget,
};
pub use sums::{
    running_sums, select, verify_finite_bound, verify_half_bound, FiniteBoundReport, HalfBoundReport,
    SelectionTrace,
};

/// Outcome of a verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Not enough of the run has accumulated to decide.
    Inconclusive,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// `2^exp`, saturating.
pub(crate) fn pow2(exp: u32) -> u64 {
    1u64.checked_shl(exp).unwrap_or(u64::MAX)
}

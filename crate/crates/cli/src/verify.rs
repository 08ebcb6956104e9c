use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use ville_core::analysis::{
    convergence_report, deficit_bounds, fluctuation_report, select, verify_alternation, verify_block_facts,
    verify_cutoff_budget, verify_finite_bound, verify_half_bound, SelectionTrace, Verdict, ZetaBlocks,
};
use ville_core::{build, build_finite, BitSequence, Family, RunConfig, ThresholdRule, Trace};

use crate::{config, output};

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Check {
    Half,
    Alternation,
    Budget,
    Blocks,
    Deficit,
    FiniteBound,
    Convergence,
    Fluctuation,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Half => "half",
            Check::Alternation => "alternation",
            Check::Budget => "budget",
            Check::Blocks => "blocks",
            Check::Deficit => "deficit",
            Check::FiniteBound => "finite-bound",
            Check::Convergence => "convergence",
            Check::Fluctuation => "fluctuation",
        }
    }

    /// Soft checks are reported but never change the exit code.
    fn hard(self) -> bool {
        !matches!(self, Check::Convergence | Check::Fluctuation)
    }

    fn needs_trace(self) -> bool {
        matches!(self, Check::Alternation | Check::Budget | Check::Blocks | Check::Deficit)
    }

    fn needs_family(self) -> bool {
        !matches!(self, Check::Half | Check::Alternation | Check::Budget)
    }
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Builtin family name or path to a family file.
    #[arg(long)]
    family: Option<String>,
    /// Number of bits to build (ignored with --input).
    #[arg(long)]
    length: Option<u64>,
    #[arg(long, default_value = "exp:3")]
    threshold: String,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "half,alternation,budget,blocks,deficit,convergence,fluctuation"
    )]
    checks: Vec<Check>,
    /// Indices for per-index checks, e.g. `1,2` or `1-5`. Defaults to the
    /// first five (or fewer, for a smaller family).
    #[arg(long)]
    select: Option<String>,
    /// JSON report path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Check a '0'/'1' text file instead of building.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Serialize)]
struct CheckResult {
    check: &'static str,
    hard: bool,
    verdict: Verdict,
    summary: String,
    details: Value,
}

#[derive(Serialize)]
struct Report {
    family: Option<String>,
    threshold: String,
    input: Option<PathBuf>,
    length: u64,
    pass: bool,
    checks: Vec<CheckResult>,
}

struct Context {
    bits: BitSequence,
    trace: Option<Trace>,
    family: Option<Family>,
    rule: ThresholdRule,
    length: Option<u64>,
    selections: Vec<SelectionTrace>,
}

pub fn run(args: &VerifyArgs) -> Result<ExitCode> {
    let mut checks = args.checks.clone();
    checks.dedup();
    let rule = config::load_threshold(&args.threshold)?;
    let family = args.family.as_deref().map(config::load_family).transpose()?;

    for &c in &checks {
        if c.needs_family() && family.is_none() {
            bail!("check {} needs --family", c.name());
        }
        if c.needs_trace() && args.input.is_some() {
            bail!("check {} needs the stage trace, which is not available with --input", c.name());
        }
        if c == Check::FiniteBound && family.as_ref().is_some_and(|f| !f.is_finite()) {
            bail!("check finite-bound requires a finite family (this family has a tail rule)");
        }
    }

    let (bits, trace) = match &args.input {
        Some(path) => (config::load_bits(path)?, None),
        None => {
            let (Some(family), Some(length)) = (&family, args.length) else {
                bail!("--family and --length are required unless --input is given");
            };
            let mut cfg = RunConfig::new(family.clone(), length, rule.clone());
            if checks.iter().any(|c| c.needs_trace()) {
                cfg = cfg.with_trace();
            }
            let run = build(&cfg)?;
            (run.bits, run.trace)
        }
    };

    let per_index = checks
        .iter()
        .any(|c| matches!(c, Check::Blocks | Check::Deficit | Check::Convergence | Check::Fluctuation));
    let selections = match (&family, per_index) {
        (Some(f), true) => {
            let indices = match &args.select {
                Some(s) => config::parse_indices(s)?,
                None => (1..=f.size().map_or(5, |k| k.min(5)) as u32).collect(),
            };
            let selections: Vec<_> = std::thread::scope(|s| {
                let handles: Vec<_> = indices.iter().map(|&i| {
                    let bits = &bits;
                    s.spawn(move || select(bits, f, i))
                }).collect();
                handles.into_iter().map(|h| h.join().expect("selection thread")).collect()
            });
            selections.into_iter().collect::<Result<Vec<_>, _>>()?
        }
        _ => Vec::new(),
    };

    let ctx = Context {
        length: args.input.is_none().then_some(bits.len()),
        bits,
        trace,
        family,
        rule,
        selections,
    };

    let mut results = Vec::new();
    for &c in &checks {
        let (verdict, summary, details) = run_check(c, &ctx)?;
        results.push(CheckResult {
            check: c.name(),
            hard: c.hard(),
            verdict,
            summary,
            details,
        });
    }

    let pass = results.iter().all(|r| !r.hard || r.verdict != Verdict::Fail);
    for r in &results {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
        };
        let soft = if r.hard { "" } else { " (soft)" };
        println!("{:<13} {verdict:<12} {}{soft}", r.check, r.summary);
    }

    if let Some(path) = &args.report {
        let report = Report {
            family: args.family.clone(),
            threshold: ctx.rule.to_string(),
            input: args.input.clone(),
            length: ctx.bits.len(),
            pass,
            checks: results,
        };
        let json = serde_json::to_string_pretty(&report)?;
        output::write_atomic(path, |w| writeln!(w, "{json}"))?;
    }
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Fail beats everything; otherwise any pass makes the whole check pass.
fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut out = Verdict::Inconclusive;
    for v in verdicts {
        match v {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Pass => out = Verdict::Pass,
            Verdict::Inconclusive => {}
        }
    }
    out
}

fn run_check(check: Check, ctx: &Context) -> Result<(Verdict, String, Value)> {
    let trace = || ctx.trace.as_ref().expect("trace built for trace checks");
    let family = || ctx.family.as_ref().expect("family checked up front");
    Ok(match check {
        Check::Half => {
            let r = verify_half_bound(&ctx.bits);
            let summary = match r.first_violation {
                Some(n) => format!("more ones than zeros in q[{n}]"),
                None => format!("2S <= n for all {} prefixes", ctx.bits.len()),
            };
            (r.verdict, summary, json!(r))
        }
        Check::Alternation => {
            let r = verify_alternation(trace());
            let summary = match r.first_violation {
                Some(n) => format!("stage {n} breaks the 0,1,0,1,... pattern of its active set"),
                None => format!("{} active sets alternate", r.distinct_sets),
            };
            (r.verdict, summary, json!(r))
        }
        Check::Budget => {
            let r = verify_cutoff_budget(trace(), &ctx.rule)?;
            let summary = match r.levels.iter().find(|l| !l.pass) {
                Some(l) => format!("level {} seen {} times, budget {}", l.level, l.observed, l.budget),
                None => format!("{} levels within budget", r.levels.len()),
            };
            (r.verdict, summary, json!(r))
        }
        Check::Blocks | Check::Deficit => {
            let mut verdicts = Vec::new();
            let mut details = Vec::new();
            let mut failures = Vec::new();
            for sel in &ctx.selections {
                let zb = ZetaBlocks::from_run(trace(), sel);
                let (v, d, failure) = if check == Check::Blocks {
                    let r = verify_block_facts(&zb, &ctx.rule)?;
                    (r.verdict, json!(r), r.first_failure.clone())
                } else {
                    let r = deficit_bounds(&zb, &ctx.rule)?;
                    (r.verdict, json!(r), r.first_failure.clone())
                };
                if let Some(f) = failure {
                    failures.push(format!("f{}: {f}", sel.index));
                }
                verdicts.push(v);
                details.push(d);
            }
            let verdict = combine(verdicts);
            let summary = match failures.first() {
                Some(f) => f.clone(),
                None => format!("{} indices checked", ctx.selections.len()),
            };
            (verdict, summary, Value::Array(details))
        }
        Check::FiniteBound => {
            let f = family();
            let (bits, source) = match ctx.length {
                Some(n) => (build_finite(f, n)?, "finite construction"),
                None => (ctx.bits.clone(), "input"),
            };
            let r = verify_finite_bound(&bits, f)?;
            let summary = match r.first_violation {
                Some((i, m)) => format!("f{i} out of bounds after {m} selected bits ({source})"),
                None => format!("0 <= m - 2S <= 2^(k+1) for all {} members ({source})", r.family_size),
            };
            (r.verdict, summary, json!({ "sequence": source, "report": r }))
        }
        Check::Convergence => {
            let mut verdicts = Vec::new();
            let mut details = Vec::new();
            let mut worst: Option<(u32, f64)> = None;
            for sel in &ctx.selections {
                let r = convergence_report(sel);
                let v = if r.exempt {
                    Verdict::Inconclusive
                } else {
                    let dev = r.final_deviation().unwrap_or(f64::INFINITY);
                    if worst.is_none_or(|w| dev > w.1) {
                        worst = Some((sel.index, dev));
                    }
                    if dev <= 0.05 && r.envelope_nonincreasing_within(2.0, 1 << 10) {
                        Verdict::Pass
                    } else {
                        Verdict::Fail
                    }
                };
                verdicts.push(v);
                details.push(json!({
                    "index": r.index,
                    "selected": r.selected,
                    "exempt": r.exempt,
                    "final_deviation": r.final_deviation(),
                    "verdict": v,
                    "checkpoints": r.checkpoints,
                    "envelope": r.envelope,
                }));
            }
            let summary = match worst {
                Some((i, d)) => format!("largest final |S/m - 1/2| = {d:.3e} (f{i}), tolerance 0.05"),
                None => "every selected index cares only finitely often".into(),
            };
            (combine(verdicts), summary, Value::Array(details))
        }
        Check::Fluctuation => {
            let mut verdicts = Vec::new();
            let mut details = Vec::new();
            let mut summary = String::from("f1 not selected");
            for sel in &ctx.selections {
                let r = fluctuation_report(sel, &ctx.rule);
                let v = if sel.index != 1 || r.max_two_delta.is_none() {
                    Verdict::Inconclusive
                } else {
                    let below = r.max_two_delta.is_some_and(|m| m <= 0);
                    let slope_ok = match (r.fitted_exponent, r.target_exponent) {
                        (Some(s), Some(t)) => s <= t + 0.1,
                        _ => true,
                    };
                    summary = format!(
                        "f1: max 2δ = {}, min 2δ = {}, fitted exponent {}, target {}",
                        r.max_two_delta.unwrap_or(0),
                        r.min_two_delta.unwrap_or(0),
                        r.fitted_exponent.map_or("n/a".into(), |s| format!("{s:.3}")),
                        r.target_exponent.map_or("n/a".into(), |t| format!("{t:.3}")),
                    );
                    if below && slope_ok {
                        Verdict::Pass
                    } else {
                        Verdict::Fail
                    }
                };
                verdicts.push(v);
                details.push(json!({ "verdict": v, "report": r }));
            }
            (combine(verdicts), summary, Value::Array(details))
        }
    })
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use ville_core::analysis::{convergence_report, fluctuation_report, lil_curve, select, SelectionTrace};
use ville_core::{build, RunConfig, ThresholdRule};

use crate::{config, output, RunArgs};

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Indices to analyze, e.g. `1,2` or `1-5`.
    #[arg(long, default_value = "1")]
    select: String,
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn run(args: &AnalyzeArgs) -> Result<ExitCode> {
    let (family, rule) = args.run.resolve()?;
    let indices = config::parse_indices(&args.select)?;
    if let Some(k) = family.size() {
        if let Some(&bad) = indices.iter().find(|&&i| i as usize > k) {
            bail!("--select {bad}: the family has only {k} selection functions");
        }
    }
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;

    let bits = build(&RunConfig::new(family.clone(), args.run.length, rule.clone()))?.bits;
    let selections = indices
        .iter()
        .map(|&i| select(&bits, &family, i))
        .collect::<Result<Vec<_>, _>>()?;

    std::thread::scope(|s| {
        let handles: Vec<_> = selections
            .iter()
            .map(|sel| s.spawn(|| write_selection(&args.out_dir, sel)))
            .collect();
        handles.into_iter().try_for_each(|h| h.join().expect("writer thread"))
    })?;

    output::write_atomic(&args.out_dir.join("summary.csv"), |w| write_summary(w, &selections, &rule))?;
    output::write_atomic(&args.out_dir.join("checkpoints.csv"), |w| write_checkpoints(w, &selections))?;

    for sel in &selections {
        let f = fluctuation_report(sel, &rule);
        println!(
            "f{}: {} selected, max 2δ = {}, min 2δ = {}",
            sel.index,
            sel.len(),
            f.max_two_delta.map_or("-".into(), |v| v.to_string()),
            f.min_two_delta.map_or("-".into(), |v| v.to_string()),
        );
    }
    println!("wrote {}", args.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

/// m,n_m,bit,S_l,two_delta, one row per selected bit.
fn write_selection(dir: &std::path::Path, sel: &SelectionTrace) -> Result<()> {
    output::write_atomic(&dir.join(format!("select_{}.csv", sel.index)), |w| {
        writeln!(w, "m,n_m,bit,S_l,two_delta")?;
        let mut sum = 0u64;
        for (i, (&n, b)) in sel.positions().iter().zip(sel.bits().iter()).enumerate() {
            let m = i as u64 + 1;
            sum += u64::from(b);
            writeln!(w, "{m},{n},{b},{sum},{}", 2 * sum as i64 - m as i64)?;
        }
        Ok(())
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// One row per index: deviation, fluctuation extrema, fitted exponent, and
/// the iterated-logarithm curve at the selected count.
fn write_summary(w: &mut dyn Write, selections: &[SelectionTrace], rule: &ThresholdRule) -> std::io::Result<()> {
    writeln!(
        w,
        "index,selected,finite_care,final_deviation,max_two_delta,argmax,min_two_delta,argmin,\
         fitted_exponent,fitted_constant,target_exponent,envelope_constant,max_abs_delta,lil_half"
    )?;
    for sel in selections {
        let c = convergence_report(sel);
        let f = fluctuation_report(sel, rule);
        let max_abs = sel.two_deltas().map(i64::abs).max().map(|v| v as f64 / 2.0);
        let lil = lil_curve(sel.len() as f64, 0.5).ok();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            sel.index,
            sel.len(),
            sel.finite_care(),
            opt(c.final_deviation()),
            opt(f.max_two_delta),
            opt(f.argmax),
            opt(f.min_two_delta),
            opt(f.argmin),
            opt(f.fitted_exponent),
            opt(f.fitted_constant),
            opt(f.target_exponent),
            opt(f.envelope_constant),
            opt(max_abs),
            opt(lil),
        )?;
    }
    Ok(())
}

/// Dyadic checkpoints m = 1, 2, 4, ... per index.
fn write_checkpoints(w: &mut dyn Write, selections: &[SelectionTrace]) -> std::io::Result<()> {
    writeln!(w, "index,m,n_m,deviation,two_delta,neg_min_delta,lil_half")?;
    for sel in selections {
        let mut sum = 0i64;
        let mut lowest = 0i64;
        let mut next = 1u64;
        for (i, (&n, b)) in sel.positions().iter().zip(sel.bits().iter()).enumerate() {
            let m = i as u64 + 1;
            sum += i64::from(b);
            let two_delta = 2 * sum - m as i64;
            lowest = lowest.min(two_delta);
            if m == next {
                let dev = (sum as f64 / m as f64 - 0.5).abs();
                let lil = lil_curve(m as f64, 0.5).ok();
                writeln!(
                    w,
                    "{},{m},{n},{dev},{two_delta},{},{}",
                    sel.index,
                    -lowest as f64 / 2.0,
                    opt(lil)
                )?;
                next *= 2;
            }
        }
    }
    Ok(())
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ville_core::selection::{render_family, BUILTIN_FAMILIES, CATALOG};
use ville_core::{build, builtin_family, stream, BitSequence, Family, RunConfig, ThresholdRule};

mod analyze;
mod config;
mod output;
mod verify;

#[derive(Parser)]
#[command(name = "ville", version, about = "Build and check Ville counterexample sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a sequence and write it out.
    Build(BuildArgs),
    /// Run invariant checks on a built (or supplied) sequence.
    Verify(verify::VerifyArgs),
    /// Write per-index selection CSVs and a summary.
    Analyze(analyze::AnalyzeArgs),
    /// List selection function kinds and builtin families.
    Catalog,
}

#[derive(Args, Clone)]
pub struct RunArgs {
    /// Builtin family name or path to a family file.
    #[arg(long)]
    family: String,
    /// Number of bits to build.
    #[arg(long)]
    length: u64,
    /// exp:<r> with r > 2, or table:<path> with one capacity per line.
    #[arg(long, default_value = "exp:3")]
    threshold: String,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<(Family, ThresholdRule)> {
        Ok((config::load_family(&self.family)?, config::load_threshold(&self.threshold)?))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// One line of '0'/'1'.
    Text,
    /// 8 bits per byte, first bit most significant, last byte zero-padded.
    Packed,
    /// `n,bit` rows.
    Csv,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-stage CSV: n,cutoff,witness,active_set,bit.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn cmd_build(args: &BuildArgs) -> Result<ExitCode> {
    let (family, rule) = args.run.resolve()?;
    let cfg = RunConfig::new(family, args.run.length, rule);
    let bits = match &args.trace {
        None => build(&cfg)?.bits,
        Some(path) => build_with_trace(&cfg, path)?,
    };
    output::write_to(args.out.as_deref(), |w| write_bits(w, &bits, args.format))?;
    Ok(ExitCode::SUCCESS)
}

fn build_with_trace(cfg: &RunConfig, path: &std::path::Path) -> Result<BitSequence> {
    let mut bits = BitSequence::with_capacity(cfg.length);
    let mut failure = None;
    let stages = stream(cfg)?;
    let written = output::write_atomic(path, |w| {
        writeln!(w, "n,cutoff,witness,active_set,bit")?;
        for record in stages {
            let r = match record {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(e);
                    return Err(std::io::Error::other("construction failed"));
                }
            };
            writeln!(w, "{},{},{},{},{}", r.n, r.cutoff, r.witness, r.active, r.bit)?;
            bits.push(r.bit);
        }
        Ok(())
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    written?;
    Ok(bits)
}

fn write_bits(w: &mut dyn Write, bits: &BitSequence, format: Format) -> std::io::Result<()> {
    match format {
        Format::Text => {
            if !bits.is_empty() {
                writeln!(w, "{}", bits.to_text())?;
            }
        }
        Format::Packed => w.write_all(bits.packed())?,
        Format::Csv => {
            writeln!(w, "n,bit")?;
            for (i, b) in bits.iter().enumerate() {
                writeln!(w, "{},{b}", i + 1)?;
            }
        }
    }
    Ok(())
}

fn cmd_catalog() -> Result<ExitCode> {
    let mut out = String::from("Selection functions (family file syntax: name(args)):\n");
    for (name, params, meaning) in CATALOG {
        let params = if params.is_empty() { "-" } else { params };
        out += &format!("  {name:<14} {params:<24} {meaning}\n");
    }
    out += "\nTail rules (family file syntax: rest = name):\n";
    out += "  suffix_binary  f_m cares iff the prefix ends with the binary expansion of m\n";
    out += "\nBuiltin families:\n";
    for name in BUILTIN_FAMILIES {
        let family = builtin_family(name).context("builtin family")?;
        out += &format!("  {name}:\n");
        for line in render_family(&family).lines() {
            out += &format!("    {line}\n");
        }
    }
    output::write_to(None, |w| w.write_all(out.as_bytes()))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Verify(args) => verify::run(args),
        Command::Analyze(args) => analyze::run(args),
        Command::Catalog => cmd_catalog(),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}

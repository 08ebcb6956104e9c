//! Resolving `--family` and `--threshold` into core types.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ville_core::selection::BUILTIN_FAMILIES;
use ville_core::{builtin_family, parse_family, BitSequence, Family, ThresholdRule};

/// A builtin name, or a path to a family file.
pub fn load_family(arg: &str) -> Result<Family> {
    if let Some(family) = builtin_family(arg) {
        return Ok(family);
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!(
            "--family {arg:?} is neither a builtin ({}) nor an existing file",
            BUILTIN_FAMILIES.join(", ")
        );
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading family file {arg}"))?;
    parse_family(&text).with_context(|| format!("family file {arg}"))
}

/// `exp:<r>` or `table:<path>` with one capacity per line.
pub fn load_threshold(arg: &str) -> Result<ThresholdRule> {
    if let Some(r) = arg.strip_prefix("exp:") {
        let base: u64 = r
            .trim()
            .parse()
            .map_err(|_| anyhow!("--threshold {arg:?}: base {r:?} is not a positive integer (need r > 2)"))?;
        return ThresholdRule::exp(base).with_context(|| format!("--threshold {arg}"));
    }
    if let Some(path) = arg.strip_prefix("table:") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading threshold table {path}"))?;
        let mut capacities = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let c: u64 = line
                .parse()
                .map_err(|_| anyhow!("threshold table {path}, line {}: {line:?} is not a capacity", i + 1))?;
            capacities.push(c);
        }
        return ThresholdRule::table(capacities).with_context(|| format!("threshold table {path}"));
    }
    bail!("--threshold {arg:?}: expected exp:<r> or table:<path>")
}

/// A '0'/'1' text file; whitespace is ignored.
pub fn load_bits(path: &Path) -> Result<BitSequence> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some((i, c)) = cleaned.char_indices().find(|(_, c)| *c != '0' && *c != '1') {
        bail!("{}: character {c:?} at bit {} is not 0 or 1", path.display(), i + 1);
    }
    BitSequence::from_text(&cleaned).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Comma-separated index list such as `1,2,5` or `1-4`.
pub fn parse_indices(arg: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for part in arg.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || anyhow!("--select: {part:?} is not an index or range");
        if let Some((a, b)) = part.split_once('-') {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().parse().map_err(|_| bad())?;
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        bail!("--select: no indices given");
    }
    if out.contains(&0) {
        bail!("--select: indices start at 1");
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(load_threshold("exp:3").unwrap(), ThresholdRule::ExpBase(3));
        let err = format!("{:#}", load_threshold("exp:2").unwrap_err());
        assert!(err.contains("r > 2"), "{err}");
        assert!(load_threshold("exp:x").is_err());
        assert!(load_threshold("linear:3").is_err());
    }

    #[test]
    fn index_lists() {
        assert_eq!(parse_indices("1").unwrap(), vec![1]);
        assert_eq!(parse_indices("3,1-2, 2").unwrap(), vec![1, 2, 3]);
        assert!(parse_indices("0").is_err());
        assert!(parse_indices("a").is_err());
        assert!(parse_indices("").is_err());
    }
}

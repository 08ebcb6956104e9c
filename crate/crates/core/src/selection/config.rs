//! Plain-text family files.
//!
//! ```text
//! # comment
//! f1 = always
//! f2 = last_bit(1)
//! rest = suffix_binary
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use super::{Family, SelectionSpec, SuffixBinary, TailGenerator};
use crate::error::{Error, Result};

pub fn parse_family(text: &str) -> Result<Family> {
    let mut explicit = Vec::new();
    let mut tail: Option<Arc<dyn TailGenerator>> = None;
    let mut last_line = 0;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        last_line = line_no;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        if tail.is_some() {
            return Err(err("`rest = ...` must be the final entry".into()));
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `f<k> = <name>(<args>)`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());

        if key == "rest" {
            match value {
                "suffix_binary" => tail = Some(Arc::new(SuffixBinary)),
                other => return Err(err(format!("unknown tail rule {other:?}"))),
            }
            continue;
        }

        let index: usize = key
            .strip_prefix('f')
            .and_then(|k| k.parse().ok())
            .ok_or_else(|| err(format!("expected key f<k>, got {key:?}")))?;
        let expected = explicit.len() + 1;
        if index != expected {
            return Err(err(format!("expected f{expected}, got f{index}")));
        }
        let spec: SelectionSpec = value.parse().map_err(|e| match e {
            Error::InvalidSpec { reason, .. } => err(reason),
            other => err(other.to_string()),
        })?;
        explicit.push(spec);
    }

    Family::new(explicit, tail).map_err(|e| Error::Parse {
        line: last_line.max(1),
        message: e.to_string(),
    })
}

pub fn render_family(family: &Family) -> String {
    let mut out = String::new();
    for (i, spec) in family.explicit().iter().enumerate() {
        let _ = writeln!(out, "f{} = {}", i + 1, spec);
    }
    if let Some(tail) = family.tail() {
        let _ = writeln!(out, "rest = {}", tail.name());
    }
    out
}

use std::fmt;
use std::sync::Arc;

use super::{evaluate, BitPattern, Decision, PrefixView, SelectionSpec};
use crate::error::{Error, Result};

/// Rule that assigns a selection function to every index past the explicit
/// list of a [`Family`].
pub trait TailGenerator: fmt::Debug + Send + Sync {
    /// Spec for index `m` (1-based). Only called for `m` beyond the explicit list.
    fn spec_at(&self, m: u64) -> SelectionSpec;

    /// Name used in family files (`rest = <name>`).
    fn name(&self) -> &str;
}

/// `f_m = suffix(binary digits of m)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixBinary;

impl TailGenerator for SuffixBinary {
    fn spec_at(&self, m: u64) -> SelectionSpec {
        SelectionSpec::Suffix(BitPattern::binary_of(m))
    }

    fn name(&self) -> &str {
        "suffix_binary"
    }
}

/// An enumerated family f1, f2, ... of selection functions, with f1 = always.
///
/// Indices are 1-based. A family with a tail generator is defined at every
/// index; spec lookup never touches the generator for indices at or below
/// the one asked for.
#[derive(Clone)]
pub struct Family {
    explicit: Vec<SelectionSpec>,
    tail: Option<Arc<dyn TailGenerator>>,
}

impl Family {
    pub fn new(explicit: Vec<SelectionSpec>, tail: Option<Arc<dyn TailGenerator>>) -> Result<Self> {
        let first = explicit.first().ok_or(Error::EmptyFamily)?;
        if *first != SelectionSpec::Always {
            return Err(Error::FirstNotAlways {
                found: first.to_string(),
            });
        }
        for (i, spec) in explicit.iter().enumerate() {
            spec.validate().map_err(|e| reindex(e, i as u32 + 1))?;
        }
        Ok(Family { explicit, tail })
    }

    pub fn finite(explicit: Vec<SelectionSpec>) -> Result<Self> {
        Self::new(explicit, None)
    }

    pub fn with_tail(explicit: Vec<SelectionSpec>, tail: impl TailGenerator + 'static) -> Result<Self> {
        Self::new(explicit, Some(Arc::new(tail)))
    }

    pub fn explicit(&self) -> &[SelectionSpec] {
        &self.explicit
    }

    pub fn tail(&self) -> Option<&dyn TailGenerator> {
        self.tail.as_deref()
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    /// Number of functions in a finite family; `None` when a tail rule is present.
    pub fn size(&self) -> Option<usize> {
        self.is_finite().then_some(self.explicit.len())
    }

    pub fn spec(&self, index: u32) -> Result<SelectionSpec> {
        if index == 0 {
            return Err(Error::ZeroIndex);
        }
        let slot = index as usize - 1;
        if let Some(spec) = self.explicit.get(slot) {
            return Ok(*spec);
        }
        match &self.tail {
            Some(tail) => {
                let spec = tail.spec_at(u64::from(index));
                spec.validate().map_err(|e| reindex(e, index))?;
                Ok(spec)
            }
            None => Err(Error::UndefinedIndex {
                index,
                len: self.explicit.len(),
            }),
        }
    }

    /// Decision of f_index on `prefix`.
    pub fn decide<P: PrefixView + ?Sized>(&self, index: u32, prefix: &P) -> Result<Decision> {
        Ok(evaluate(&self.spec(index)?, prefix))
    }
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        list.entries(self.explicit.iter().map(|s| s.to_string()));
        if let Some(tail) = &self.tail {
            list.entry(&format_args!("rest = {}", tail.name()));
        }
        list.finish()
    }
}

fn reindex(err: Error, index: u32) -> Error {
    match err {
        Error::InvalidSpec { reason, .. } => Error::InvalidSpec { index, reason },
        other => other,
    }
}

/// Names accepted by [`builtin_family`].
pub const BUILTIN_FAMILIES: &[&str] = &["always-only", "two-fn", "mixed-5", "infinite"];

/// The pinned builtin families used by the CLI and the acceptance suite.
pub fn builtin_family(name: &str) -> Option<Family> {
    use SelectionSpec::*;
    let mixed = || {
        vec![
            Always,
            LastBit(1),
            ContainsOne,
            Periodic {
                modulus: 3,
                residue: 0,
            },
            Suffix("01".parse().expect("valid pattern")),
        ]
    };
    let family = match name {
        "always-only" => Family::finite(vec![Always]),
        "two-fn" => Family::finite(vec![Always, LastBit(1)]),
        "mixed-5" => Family::finite(mixed()),
        "infinite" => Family::with_tail(mixed(), SuffixBinary),
        _ => return None,
    };
    Some(family.expect("builtin families are valid"))
}

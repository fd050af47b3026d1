//! Weighted NFA medical model, state descriptors and patient queries.

mod encrypted;
pub mod fixtures;
pub mod json;
pub mod k2c;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pctd::PublicParams;

pub use encrypted::{
    build_transition_arrays, encrypt_model, encrypt_query, encrypt_state, CodedModel, CodedPredicate,
    CodedTransition, EncryptedDescriptor, EncryptedModel, EncryptedPatientState, EncryptedPredicate,
    EncryptedTransition, ModelTable, TransitionArrays,
};
pub use k2c::k2c_encode;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Epsilon,
    Keyword(String),
}

impl Symbol {
    pub fn code(&self, pp: &PublicParams) -> BigUint {
        match self {
            Symbol::Epsilon => k2c::reserved_code(pp, k2c::EPSILON),
            Symbol::Keyword(k) => k2c_encode(pp, k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub symbol: Symbol,
    pub weight: u64,
}

/// One conjunct of a state descriptor. Numeric operands are already scaled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    Range { field: String, lo: u64, hi: u64 },
    RangePair { fields: [String; 2], lo: [u64; 2], hi: [u64; 2] },
    Gt { field: String, threshold: u64 },
    Lt { field: String, threshold: u64 },
    KeywordEq { field: String, keyword: String },
}

impl Predicate {
    pub fn fields(&self) -> Vec<&str> {
        match self {
            Predicate::Range { field, .. }
            | Predicate::Gt { field, .. }
            | Predicate::Lt { field, .. }
            | Predicate::KeywordEq { field, .. } => vec![field],
            Predicate::RangePair { fields, .. } => vec![&fields[0], &fields[1]],
        }
    }

    pub fn operands(&self) -> Vec<u64> {
        match self {
            Predicate::Range { lo, hi, .. } => vec![*lo, *hi],
            Predicate::RangePair { lo, hi, .. } => vec![lo[0], lo[1], hi[0], hi[1]],
            Predicate::Gt { threshold, .. } | Predicate::Lt { threshold, .. } => vec![*threshold],
            Predicate::KeywordEq { .. } => vec![],
        }
    }
}

pub type StateDescriptor = Vec<Predicate>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedNfaModel {
    /// Number of states; ids are 0..n_states with 0 the initial state.
    pub n_states: usize,
    pub accept: BTreeSet<usize>,
    pub alphabet: Vec<String>,
    pub transitions: Vec<Transition>,
    /// One (possibly empty) descriptor per state.
    pub descriptors: Vec<StateDescriptor>,
    pub scale_factors: BTreeMap<String, u32>,
}

impl WeightedNfaModel {
    /// Structural checks independent of key size.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.n_states == 0 {
            return bad("model has no states".into());
        }
        if self.descriptors.len() != self.n_states {
            return bad("one descriptor per state required".into());
        }
        if let Some(a) = self.accept.iter().find(|&&a| a >= self.n_states) {
            return bad(format!("accept state {a} out of range"));
        }
        let alphabet: BTreeSet<&str> = self.alphabet.iter().map(String::as_str).collect();
        if alphabet.len() != self.alphabet.len() {
            return bad("duplicate alphabet entry".into());
        }
        if alphabet.iter().any(|s| s.is_empty()) {
            return bad("empty keyword in alphabet".into());
        }
        let mut pairs = BTreeSet::new();
        for t in &self.transitions {
            if t.from >= self.n_states || t.to >= self.n_states {
                return bad(format!("transition {}→{} out of range", t.from, t.to));
            }
            if t.weight == 0 {
                return bad(format!("transition {}→{} has zero weight", t.from, t.to));
            }
            if !pairs.insert((t.from, t.to)) {
                return bad(format!("duplicate transition {}→{}", t.from, t.to));
            }
            if let Symbol::Keyword(k) = &t.symbol {
                if !alphabet.contains(k.as_str()) {
                    return bad(format!("symbol {k:?} not in alphabet"));
                }
            }
        }
        for (i, d) in self.descriptors.iter().enumerate() {
            for p in d {
                if let Predicate::Range { lo, hi, .. } = p {
                    if lo > hi {
                        return bad(format!("state {i}: empty range"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks that depend on the modulus: operand magnitudes.
    pub fn validate_for(&self, pp: &PublicParams) -> Result<()> {
        self.validate()?;
        let bound = pp.operand_bound();
        for (i, d) in self.descriptors.iter().enumerate() {
            for p in d {
                if p.operands().iter().any(|&v| BigUint::from(v) >= bound) {
                    return Err(Error::Validation(format!(
                        "state {i}: descriptor operand exceeds 2^{}",
                        pp.operand_bits()
                    )));
                }
            }
        }
        for t in &self.transitions {
            if BigUint::from(t.weight) >= bound {
                return Err(Error::Validation(format!("weight of {}→{} too large", t.from, t.to)));
            }
        }
        Ok(())
    }

    pub fn transition(&self, from: usize, to: usize) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.from == from && t.to == to)
    }

    pub fn scale_factor(&self, field: &str) -> u32 {
        self.scale_factors.get(field).copied().unwrap_or(1)
    }

    /// Fields referenced by any descriptor, with whether each is a keyword field.
    pub fn schema(&self) -> BTreeMap<String, bool> {
        let mut out = BTreeMap::new();
        for p in self.descriptors.iter().flatten() {
            let kw = matches!(p, Predicate::KeywordEq { .. });
            for f in p.fields() {
                out.insert(f.to_string(), kw);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldValue {
    Number(u64),
    Keyword(String),
}

/// One observed illness state of a patient.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PatientState {
    pub values: BTreeMap<String, FieldValue>,
}

impl PatientState {
    pub fn with(mut self, field: &str, value: FieldValue) -> Self {
        self.values.insert(field.to_string(), value);
        self
    }

    pub fn number(self, field: &str, v: u64) -> Self {
        self.with(field, FieldValue::Number(v))
    }

    pub fn keyword(self, field: &str, k: &str) -> Self {
        self.with(field, FieldValue::Keyword(k.to_string()))
    }
}

/// Multiply a decimal by 1, 10 or 100 and round half up.
pub fn scale_vital(value: &str, factor: u32) -> Result<u64> {
    let digits = match factor {
        1 => 0,
        10 => 1,
        100 => 2,
        _ => return Err(Error::Validation(format!("scale factor {factor} not in {{1, 10, 100}}"))),
    };
    let v = value.trim();
    if v.starts_with('-') {
        return Err(Error::Validation(format!("negative vital {v}")));
    }
    let (int, frac) = v.split_once('.').unwrap_or((v, ""));
    let all_digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if int.is_empty() && frac.is_empty() || !all_digits(int) || !all_digits(frac) {
        return Err(Error::Validation(format!("not a decimal: {v:?}")));
    }
    let parse = |s: &str| -> Result<u64> {
        if s.is_empty() {
            Ok(0)
        } else {
            s.parse::<u64>().map_err(|_| Error::Validation(format!("value too large: {v}")))
        }
    };
    let fb = frac.as_bytes();
    let kept: String = (0..digits).map(|i| fb.get(i).map(|&b| b as char).unwrap_or('0')).collect();
    let round_up = fb.get(digits).is_some_and(|&b| b >= b'5');
    let scaled = parse(int)?
        .checked_mul(factor as u64)
        .and_then(|x| x.checked_add(parse(&kept).ok()?))
        .and_then(|x| x.checked_add(round_up as u64))
        .ok_or_else(|| Error::Validation(format!("value too large: {v}")))?;
    Ok(scaled)
}

/// f64 front end for [`scale_vital`]; uses the shortest round-trip decimal form.
pub fn scale_vital_f64(value: f64, factor: u32) -> Result<u64> {
    if !value.is_finite() {
        return Err(Error::Validation("non-finite vital".into()));
    }
    scale_vital(&format!("{value}"), factor)
}

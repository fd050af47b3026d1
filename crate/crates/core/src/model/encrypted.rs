use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use rand::Rng;

use super::k2c::{self, reserved_code};
use super::{FieldValue, PatientState, Predicate, Symbol, WeightedNfaModel};
use crate::error::{Error, Result};
use crate::pctd::{self, Ciphertext, KeyId, PublicKey, PublicParams, UserKeyPair};

/// Predicate with its operands in coded (`BigUint`) or encrypted form.
/// Kinds and field names stay in the clear.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodedPredicate<T> {
    Range { field: String, lo: T, hi: T },
    RangePair { fields: [String; 2], lo: [T; 2], hi: [T; 2] },
    Gt { field: String, threshold: T },
    Lt { field: String, threshold: T },
    KeywordEq { field: String, code: T },
}

pub type EncryptedPredicate = CodedPredicate<Ciphertext>;
pub type EncryptedDescriptor = Vec<EncryptedPredicate>;

impl<T> CodedPredicate<T> {
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> Result<U>) -> Result<CodedPredicate<U>> {
        Ok(match self {
            Self::Range { field, lo, hi } => CodedPredicate::Range { field: field.clone(), lo: f(lo)?, hi: f(hi)? },
            Self::RangePair { fields, lo, hi } => CodedPredicate::RangePair {
                fields: fields.clone(),
                lo: [f(&lo[0])?, f(&lo[1])?],
                hi: [f(&hi[0])?, f(&hi[1])?],
            },
            Self::Gt { field, threshold } => CodedPredicate::Gt { field: field.clone(), threshold: f(threshold)? },
            Self::Lt { field, threshold } => CodedPredicate::Lt { field: field.clone(), threshold: f(threshold)? },
            Self::KeywordEq { field, code } => CodedPredicate::KeywordEq { field: field.clone(), code: f(code)? },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedTransition<T> {
    pub from: usize,
    pub to: usize,
    pub symbol: T,
    pub weight: T,
}

pub type EncryptedTransition = CodedTransition<Ciphertext>;

/// Model with every label, symbol, weight and operand as a value of `T`;
/// adjacency, accept positions and predicate kinds are structural.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelTable<T> {
    pub n_states: usize,
    pub labels: Vec<T>,
    pub accept: BTreeSet<usize>,
    pub accept_labels: Vec<T>,
    pub epsilon: T,
    pub transitions: Vec<CodedTransition<T>>,
    pub descriptors: Vec<Vec<CodedPredicate<T>>>,
}

pub type CodedModel = ModelTable<BigUint>;
pub type EncryptedModel = ModelTable<Ciphertext>;

impl<T> ModelTable<T> {
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> Result<U>) -> Result<ModelTable<U>> {
        Ok(ModelTable {
            n_states: self.n_states,
            labels: self.labels.iter().map(&mut f).collect::<Result<_>>()?,
            accept: self.accept.clone(),
            accept_labels: self.accept_labels.iter().map(&mut f).collect::<Result<_>>()?,
            epsilon: f(&self.epsilon)?,
            transitions: self
                .transitions
                .iter()
                .map(|t| Ok(CodedTransition { from: t.from, to: t.to, symbol: f(&t.symbol)?, weight: f(&t.weight)? }))
                .collect::<Result<_>>()?,
            descriptors: self
                .descriptors
                .iter()
                .map(|d| d.iter().map(|p| p.map(&mut f)).collect::<Result<_>>())
                .collect::<Result<_>>()?,
        })
    }
}

impl CodedModel {
    /// State labels are state ids; symbols and keywords go through K2C.
    pub fn from_model(pp: &PublicParams, model: &WeightedNfaModel) -> CodedModel {
        let big = |v: u64| BigUint::from(v);
        let code = |k: &str| k2c::k2c_encode(pp, k);
        ModelTable {
            n_states: model.n_states,
            labels: (0..model.n_states as u64).map(big).collect(),
            accept: model.accept.clone(),
            accept_labels: model.accept.iter().map(|&a| big(a as u64)).collect(),
            epsilon: Symbol::Epsilon.code(pp),
            transitions: model
                .transitions
                .iter()
                .map(|t| CodedTransition { from: t.from, to: t.to, symbol: t.symbol.code(pp), weight: big(t.weight) })
                .collect(),
            descriptors: model
                .descriptors
                .iter()
                .map(|d| {
                    d.iter()
                        .map(|p| match p {
                            Predicate::Range { field, lo, hi } => {
                                CodedPredicate::Range { field: field.clone(), lo: big(*lo), hi: big(*hi) }
                            }
                            Predicate::RangePair { fields, lo, hi } => CodedPredicate::RangePair {
                                fields: fields.clone(),
                                lo: [big(lo[0]), big(lo[1])],
                                hi: [big(hi[0]), big(hi[1])],
                            },
                            Predicate::Gt { field, threshold } => {
                                CodedPredicate::Gt { field: field.clone(), threshold: big(*threshold) }
                            }
                            Predicate::Lt { field, threshold } => {
                                CodedPredicate::Lt { field: field.clone(), threshold: big(*threshold) }
                            }
                            Predicate::KeywordEq { field, keyword } => {
                                CodedPredicate::KeywordEq { field: field.clone(), code: code(keyword) }
                            }
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl EncryptedModel {
    pub fn key(&self) -> Option<KeyId> {
        self.labels.first().map(|c| c.key)
    }

    pub fn decrypt(&self, pp: &PublicParams, owner: &UserKeyPair) -> Result<CodedModel> {
        self.map(|c| pctd::weak_decrypt(pp, owner, c))
    }
}

fn check_codes(pp: &PublicParams, model: &WeightedNfaModel) -> Result<()> {
    let bottom = reserved_code(pp, k2c::BOTTOM);
    if bottom < BigUint::from(model.n_states) {
        return Err(Error::Validation("dummy code collides with a state id".into()));
    }
    let mut seen = BTreeMap::new();
    seen.insert(bottom, "⊥".to_string());
    let eps = Symbol::Epsilon.code(pp);
    if seen.insert(eps, "ε".into()).is_some() {
        return Err(Error::Validation("reserved codes collide".into()));
    }
    for k in &model.alphabet {
        if let Some(prev) = seen.insert(k2c::k2c_encode(pp, k), k.clone()) {
            return Err(Error::Validation(format!(
                "keyword codes collide ({prev:?} vs {k:?}); use a larger key size"
            )));
        }
    }
    Ok(())
}

/// Hospital side: validate and encrypt every label, symbol, weight and
/// descriptor operand under `pk`.
pub fn encrypt_model<R: Rng + ?Sized>(
    pp: &PublicParams,
    pk: &PublicKey,
    model: &WeightedNfaModel,
    rng: &mut R,
) -> Result<EncryptedModel> {
    model.validate_for(pp)?;
    check_codes(pp, model)?;
    CodedModel::from_model(pp, model).map(|m| pctd::encrypt(pp, pk, m, rng))
}

/// One encrypted patient state: a ciphertext per schema field.
#[derive(Clone, Debug)]
pub struct EncryptedPatientState {
    pub values: BTreeMap<String, Ciphertext>,
}

impl EncryptedPatientState {
    pub fn field(&self, name: &str) -> Result<&Ciphertext> {
        self.values.get(name).ok_or_else(|| Error::Precondition(format!("patient state lacks field {name:?}")))
    }
}

/// Encrypt one state against a schema (field → is keyword).
pub fn encrypt_state<R: Rng + ?Sized>(
    pp: &PublicParams,
    pk: &PublicKey,
    schema: &BTreeMap<String, bool>,
    state: &PatientState,
    rng: &mut R,
) -> Result<EncryptedPatientState> {
    let have: BTreeSet<&String> = state.values.keys().collect();
    let want: BTreeSet<&String> = schema.keys().collect();
    if have != want {
        return Err(Error::Validation(format!("patient fields {have:?} do not match the model schema {want:?}")));
    }
    let bound = pp.operand_bound();
    let mut values = BTreeMap::new();
    for (field, v) in &state.values {
        let m = match (v, schema[field]) {
            (FieldValue::Number(x), false) => BigUint::from(*x),
            (FieldValue::Keyword(k), true) => k2c::k2c_encode(pp, k),
            _ => return Err(Error::Validation(format!("field {field:?} has the wrong kind"))),
        };
        if m >= bound {
            return Err(Error::Validation(format!("value of {field:?} exceeds 2^{}", pp.operand_bits())));
        }
        values.insert(field.clone(), pctd::encrypt(pp, pk, &m, rng)?);
    }
    Ok(EncryptedPatientState { values })
}

/// Patient side: encrypt Φ = (φ₁, …, φ_m).
pub fn encrypt_query<R: Rng + ?Sized>(
    pp: &PublicParams,
    pk: &PublicKey,
    model: &WeightedNfaModel,
    query: &[PatientState],
    rng: &mut R,
) -> Result<Vec<EncryptedPatientState>> {
    let schema = model.schema();
    query.iter().map(|s| encrypt_state(pp, pk, &schema, s, rng)).collect()
}

/// Square table of optional (symbol, weight) cells, ⊥ = `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionArrays<T> {
    n: usize,
    cells: Vec<Option<(T, T)>>,
}

impl<T> TransitionArrays<T> {
    pub fn new(n: usize) -> Self {
        TransitionArrays { n, cells: (0..n * n).map(|_| None).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn set(&mut self, from: usize, to: usize, symbol: T, weight: T) {
        self.cells[from * self.n + to] = Some((symbol, weight));
    }

    pub fn get(&self, from: usize, to: usize) -> Option<&(T, T)> {
        self.cells[from * self.n + to].as_ref()
    }

}

impl TransitionArrays<u64> {
    /// Plaintext arrays carrying the model's own weights; symbols are 0.
    pub fn plain(model: &WeightedNfaModel) -> Self {
        let mut a = TransitionArrays::new(model.n_states);
        for t in &model.transitions {
            a.set(t.from, t.to, 0, t.weight);
        }
        a
    }
}

pub fn build_transition_arrays<T: Clone>(model: &ModelTable<T>) -> TransitionArrays<T> {
    let mut a = TransitionArrays::new(model.n_states);
    for t in &model.transitions {
        a.set(t.from, t.to, t.symbol.clone(), t.weight.clone());
    }
    a
}

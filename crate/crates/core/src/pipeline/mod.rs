//! Treatment recommendation: state matching, path traversal, weighting,
//! expansion and oblivious top-k selection.

mod select;
mod ssm;
mod tpt;
mod tpw;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::Serialize;

pub use select::{bps_k, bps_k_traced, expand, promote, smin, smin_n, ExpandedTreatmentProcedure};
pub use ssm::ssm;
pub use tpt::{tpt, TreatmentProcedure};
pub use tpw::{procedure_weight, tpw, WeightedTreatmentProcedure};

use crate::error::{Error, Result};
use crate::model::json::{ModelFile, EPSILON_TOKEN};
use crate::model::k2c::{reserved_code, BOTTOM};
use crate::model::{build_transition_arrays, EncryptedModel, EncryptedPatientState, Symbol, TransitionArrays, WeightedNfaModel};
use crate::pctd::{self, PublicParams, UserKeyPair};
use crate::protocols::CpContext;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PipelineParams {
    pub mvisit: usize,
    pub mstate: usize,
    pub mweight: u64,
    pub k: usize,
}

impl PipelineParams {
    /// Hospital-side check on the plaintext model: every matched weight
    /// stays below MWeight, and MWeight² (the largest value a bumped
    /// weight can reach) fits the comparison operand bound.
    pub fn validate(&self, pp: &PublicParams, model: &WeightedNfaModel) -> Result<usize> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.mvisit == 0 || self.mstate < 2 || self.k == 0 || self.mweight == 0 {
            return bad("need MVisit ≥ 1, MState ≥ 2, k ≥ 1 and MWeight ≥ 1".into());
        }
        model.validate_for(pp)?;
        let labels: Vec<u64> = (0..model.n_states as u64).collect();
        let tps = tpt(&TransitionArrays::plain(model), &labels, &model.accept, self.mvisit, self.mstate);
        if tps.len() < self.k {
            return bad(format!("k = {} exceeds the {} treatment procedures", self.k, tps.len()));
        }
        let heaviest = tps.iter().map(|t| t.weights.iter().sum::<u64>()).max().unwrap_or(0);
        if heaviest >= self.mweight {
            return bad(format!("MWeight must exceed every path weight sum (max {heaviest})"));
        }
        let top = BigUint::from(self.mweight) * BigUint::from(self.mweight);
        if top >= pp.operand_bound() {
            return bad(format!(
                "MWeight² = {top} does not fit 2^{} at this key size",
                pp.operand_bits()
            ));
        }
        Ok(tps.len())
    }
}

/// Everything CP computes for one query, from the encrypted model to the
/// k selected procedures under pk_σ.
pub fn recommend(
    ctx: &mut CpContext,
    model: &EncryptedModel,
    query: &[EncryptedPatientState],
    params: &PipelineParams,
) -> Result<Vec<ExpandedTreatmentProcedure>> {
    let owner = model.key().ok_or_else(|| Error::Precondition("model has no states".into()))?;
    let arrays = build_transition_arrays(model);
    let tps = tpt(&arrays, &model.labels, &model.accept, params.mvisit, params.mstate);
    let wtps = tpw(ctx, params.mweight, query, &tps, &model.descriptors)?;
    let pk = ctx.key(owner)?.clone();
    let pp = ctx.pp().clone();
    let etps = expand(&pp, &pk, &wtps, params.mstate, ctx.rng())?;
    bps_k(ctx, &etps, params.k, params.mweight)
}

/// Code → name tables the patient uses to read a result.
pub struct Codebook {
    states: BTreeMap<BigUint, (usize, String)>,
    symbols: BTreeMap<BigUint, String>,
    bottom: BigUint,
}

impl Codebook {
    pub fn new(pp: &PublicParams, file: &ModelFile) -> Self {
        let states = (0..file.model.n_states)
            .map(|i| (BigUint::from(i), (i, file.labels.get(i).cloned().unwrap_or_else(|| format!("q{i}")))))
            .collect();
        let mut symbols: BTreeMap<BigUint, String> =
            file.model.alphabet.iter().map(|k| (Symbol::Keyword(k.clone()).code(pp), k.clone())).collect();
        symbols.insert(Symbol::Epsilon.code(pp), EPSILON_TOKEN.to_string());
        Codebook { states, symbols, bottom: reserved_code(pp, BOTTOM) }
    }
}

/// A decrypted recommendation with ⊥ padding stripped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredProcedure {
    pub weight: BigUint,
    pub states: Vec<usize>,
    pub path: Vec<String>,
    pub therapies: Vec<String>,
}

pub fn recover_result(
    pp: &PublicParams,
    sigma: &UserKeyPair,
    etp: &ExpandedTreatmentProcedure,
    book: &Codebook,
) -> Result<RecoveredProcedure> {
    let weight = pctd::weak_decrypt(pp, sigma, &etp.weight)?;
    let mut states = Vec::new();
    let mut path = Vec::new();
    for c in &etp.labels {
        let v = pctd::weak_decrypt(pp, sigma, c)?;
        if v == book.bottom {
            break;
        }
        let (id, name) = book.states.get(&v).ok_or_else(|| Error::Decode(format!("unknown state code {v}")))?;
        states.push(*id);
        path.push(name.clone());
    }
    let mut therapies = Vec::new();
    for c in etp.symbols.iter().take(states.len().saturating_sub(1)) {
        let v = pctd::weak_decrypt(pp, sigma, c)?;
        let name = book.symbols.get(&v).ok_or_else(|| Error::Decode(format!("unknown symbol code {v}")))?;
        therapies.push(name.clone());
    }
    Ok(RecoveredProcedure { weight, states, path, therapies })
}

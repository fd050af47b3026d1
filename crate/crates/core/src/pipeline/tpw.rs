use num_bigint::BigUint;

use super::ssm::ssm;
use super::tpt::TreatmentProcedure;
use crate::error::{Error, Result};
use crate::model::{EncryptedDescriptor, EncryptedPatientState};
use crate::par;
use crate::pctd::Ciphertext;
use crate::protocols::{sad, set_eq, smd, CpContext};

/// A procedure whose transition weights have been replaced by one scalar
/// weight under pk_σ.
#[derive(Clone, Debug)]
pub struct WeightedTreatmentProcedure {
    pub states: Vec<usize>,
    pub labels: Vec<Ciphertext>,
    pub symbols: Vec<Ciphertext>,
    pub weight: Ciphertext,
}

/// Weight every procedure against the query Φ. Procedures are independent
/// and run as parallel sessions on forked contexts.
pub fn tpw(
    ctx: &mut CpContext,
    mweight: u64,
    phi: &[EncryptedPatientState],
    tps: &[TreatmentProcedure<Ciphertext>],
    descriptors: &[EncryptedDescriptor],
) -> Result<Vec<WeightedTreatmentProcedure>> {
    if phi.is_empty() {
        return Err(Error::Precondition("query must hold at least one state".into()));
    }
    let jobs: Vec<(CpContext, &TreatmentProcedure<Ciphertext>)> = tps.iter().map(|tp| (ctx.fork("tpw"), tp)).collect();
    par::try_map(jobs, |(mut fork, tp)| {
        Ok(WeightedTreatmentProcedure {
            states: tp.states.clone(),
            labels: tp.labels.clone(),
            symbols: tp.symbols.clone(),
            weight: procedure_weight(&mut fork, mweight, phi, tp, descriptors)?,
        })
    })
}

/// Path [p₀, …, p_T] with weights v₁..v_T (v_u labels p_{u−1} → p_u).
/// Windows start at t = 1..T−m+1; the first full match at t̄ yields
/// Σ_{u=t̄+m}^{T} v_u, no match yields MWeight, and T < m yields MWeight.
pub fn procedure_weight(
    ctx: &mut CpContext,
    mweight: u64,
    phi: &[EncryptedPatientState],
    tp: &TreatmentProcedure<Ciphertext>,
    descriptors: &[EncryptedDescriptor],
) -> Result<Ciphertext> {
    let m = phi.len();
    let t_len = tp.states.len() - 1;
    if t_len < m {
        return ctx.encrypt_sigma_u64(mweight);
    }
    let zero = ctx.encrypt_sigma_u64(0)?;
    let m_ct = ctx.encrypt_sigma_u64(m as u64)?;
    let mut w = ctx.encrypt_sigma_u64(0)?;
    let mut seen = ctx.encrypt_sigma_u64(0)?;
    for t in 1..=t_len - m + 1 {
        let mut hits = ctx.encrypt_sigma_u64(0)?;
        for (k, state) in phi.iter().enumerate() {
            let descriptor = descriptors
                .get(tp.states[t + k])
                .ok_or_else(|| Error::Precondition("descriptor missing for path state".into()))?;
            let u = ssm(ctx, state, descriptor)?;
            hits = ctx.add(&hits, &u)?;
        }
        let matched = set_eq(ctx, &hits, &m_ct)?;
        let first = set_eq(ctx, &seen, &zero)?;
        seen = ctx.add(&seen, &matched)?;
        let mut suffix = ctx.encrypt_sigma_u64(0)?;
        for u in t + m..=t_len {
            suffix = sad(ctx, &suffix, &tp.weights[u - 1])?;
        }
        let gated = smd(ctx, &matched, &suffix)?;
        let s = smd(ctx, &gated, &first)?;
        w = ctx.add(&w, &s)?;
    }
    let none = set_eq(ctx, &seen, &zero)?;
    let bump = ctx.scale(&none, &BigUint::from(mweight));
    ctx.add(&w, &bump)
}

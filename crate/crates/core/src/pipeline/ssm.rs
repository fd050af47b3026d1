use num_bigint::BigUint;

use crate::error::Result;
use crate::model::{EncryptedDescriptor, EncryptedPatientState, EncryptedPredicate};
use crate::pctd::Ciphertext;
use crate::protocols::{compare, set_eq, smd, src_range, ComparisonMode, CpContext};

/// Secure state match: [1] under pk_σ iff the patient state satisfies every
/// predicate of the descriptor. Indicators are folded by SMD from [1].
pub fn ssm(ctx: &mut CpContext, state: &EncryptedPatientState, descriptor: &EncryptedDescriptor) -> Result<Ciphertext> {
    let mut acc = ctx.encrypt_sigma(&BigUint::from(1u8))?;
    for p in descriptor {
        let bit = match p {
            EncryptedPredicate::Range { field, lo, hi } => src_range(ctx, state.field(field)?, lo, hi)?,
            EncryptedPredicate::RangePair { fields, lo, hi } => {
                let a = src_range(ctx, state.field(&fields[0])?, &lo[0], &hi[0])?;
                let b = src_range(ctx, state.field(&fields[1])?, &lo[1], &hi[1])?;
                smd(ctx, &a, &b)?
            }
            EncryptedPredicate::Gt { field, threshold } => compare(ctx, ComparisonMode::Gt, state.field(field)?, threshold)?,
            EncryptedPredicate::Lt { field, threshold } => compare(ctx, ComparisonMode::Lt, state.field(field)?, threshold)?,
            EncryptedPredicate::KeywordEq { field, code } => set_eq(ctx, state.field(field)?, code)?,
        };
        acc = smd(ctx, &acc, &bit)?;
    }
    Ok(acc)
}

use num_bigint::BigUint;

use super::{compare, smd, ComparisonMode, CpContext, Stats};
use crate::error::Result;
use crate::pctd::Ciphertext;

/// [1] iff x = y, as SMD(SLE(x, y), SLE(y, x)).
pub fn set_eq(ctx: &mut CpContext, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext> {
    ctx.in_session(|ctx| {
        let a = compare(ctx, ComparisonMode::Le, x, y)?;
        let b = compare(ctx, ComparisonMode::Le, y, x)?;
        smd(ctx, &a, &b)
    })
}

/// [1] iff x ≠ y: [1] · SET(x, y)^{N−1}.
pub fn sut_neq(ctx: &mut CpContext, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext> {
    Stats::bump(&ctx.stats().sut);
    ctx.in_session(|ctx| {
        let eq = set_eq(ctx, x, y)?;
        let one = ctx.encrypt_sigma(&BigUint::from(1u8))?;
        ctx.add(&one, &ctx.neg(&eq))
    })
}

/// [1] iff y1 ≤ x ≤ y2.
pub fn src_range(ctx: &mut CpContext, x: &Ciphertext, y1: &Ciphertext, y2: &Ciphertext) -> Result<Ciphertext> {
    ctx.in_session(|ctx| {
        let lo = compare(ctx, ComparisonMode::Ge, x, y1)?;
        let hi = compare(ctx, ComparisonMode::Le, x, y2)?;
        smd(ctx, &lo, &hi)
    })
}

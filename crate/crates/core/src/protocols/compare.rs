use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::{sad, CpContext, Stats};
use crate::error::Result;
use crate::net::frame::ProtocolId;
use crate::pctd::Ciphertext;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComparisonMode {
    Ge,
    Le,
    Lt,
    Gt,
}

impl ComparisonMode {
    pub const ALL: [ComparisonMode; 4] = [Self::Ge, Self::Le, Self::Lt, Self::Gt];

    /// GE and LT share the x′ = 2x+1, y′ = 2y masking; LE and GT use x′ = 2x, y′ = 2y+1.
    fn ge_family(self) -> bool {
        matches!(self, Self::Ge | Self::Lt)
    }

    fn inverted(self) -> bool {
        matches!(self, Self::Lt | Self::Gt)
    }

    pub fn holds(self, x: &BigUint, y: &BigUint) -> bool {
        match self {
            Self::Ge => x >= y,
            Self::Le => x <= y,
            Self::Lt => x < y,
            Self::Gt => x > y,
        }
    }
}

/// Encrypted comparison returning [1] when `mode` holds for (x, y).
///
/// Two round trips: a SAD to bring r₁(x′ − y′) under pk_σ, then the
/// decision exchange where CSP sees only r₁·Δ + r₂.
pub fn compare(ctx: &mut CpContext, mode: ComparisonMode, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext> {
    Stats::bump(&ctx.stats().compare);
    ctx.in_session(|ctx| {
        let n = ctx.pp().n().clone();
        let two = BigUint::from(2u8);
        let one = BigUint::one();
        let (xp, yp) = if mode.ge_family() {
            let ox = ctx.encrypt(x.key, &one)?;
            (ctx.add(&ctx.scale(x, &two), &ox)?, ctx.scale(y, &two))
        } else {
            let oy = ctx.encrypt(y.key, &one)?;
            (ctx.scale(x, &two), ctx.add(&ctx.scale(y, &two), &oy)?)
        };
        let r1 = ctx.sign_scale();
        let r2 = ctx.sign_noise();
        let s = ctx.coin();
        ctx.log_masks(mode, s, &r1, &r2);
        let neg_r1 = &n - &r1;
        // SGE steps put x′ first when s = 1; SLE steps put y′ first.
        let x_first = s == mode.ge_family();
        let gamma = if x_first {
            sad(ctx, &ctx.scale(&xp, &r1), &ctx.scale(&yp, &neg_r1))?
        } else {
            sad(ctx, &ctx.scale(&yp, &r1), &ctx.scale(&xp, &neg_r1))?
        };
        let noise = ctx.encrypt_sigma(&r2)?;
        let l = ctx.add(&gamma, &noise)?;
        let l1 = ctx.pd1(&l);
        let reply = ctx.exchange(ProtocolId::Cmp, &[&l.c1, &l.c2, &l1.0])?;
        let u = ctx.sigma_cts(&reply, 1)?.remove(0);
        // s = 1 keeps u′ for GE/LE; s = 0 flips it. LT/GT invert once more.
        if s != mode.inverted() {
            ctx.refresh(&u)
        } else {
            let one_ct = ctx.encrypt_sigma(&one)?;
            ctx.add(&one_ct, &ctx.neg(&u))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pctd::encrypt_u64;
    use crate::protocols::testutil::*;

    fn run(mode: ComparisonMode, x: u64, y: u64, coin: Option<bool>) -> u64 {
        let d = deployment();
        let (mut ctx, _) = d.inproc(20 + x * 7 + y);
        ctx.debug().set_coin(coin);
        let cx = encrypt_u64(&d.pp, d.patient.public(), x, ctx.rng()).unwrap();
        let cy = encrypt_u64(&d.pp, d.hospital.public(), y, ctx.rng()).unwrap();
        open(&compare(&mut ctx, mode, &cx, &cy).unwrap())
    }

    #[test]
    fn contract() {
        assert_eq!(run(ComparisonMode::Ge, 5, 3, None), 1);
        assert_eq!(run(ComparisonMode::Lt, 5, 3, None), 0);
        assert_eq!(run(ComparisonMode::Ge, 7, 7, None), 1);
        assert_eq!(run(ComparisonMode::Gt, 7, 7, None), 0);
    }

    #[test]
    fn both_coins_all_modes() {
        for coin in [false, true] {
            for mode in ComparisonMode::ALL {
                for (x, y) in [(0u64, 0u64), (0, 1), (1, 0), (9, 9), (65535, 0), (0, 65535), (300, 301)] {
                    let want = mode.holds(&x.into(), &y.into()) as u64;
                    assert_eq!(run(mode, x, y, Some(coin)), want, "{mode:?} {x} {y} s={coin}");
                }
            }
        }
    }

    #[test]
    fn csp_sees_masked_difference() {
        let d = deployment();
        let csp = std::sync::Arc::new(d.responder().with_tap());
        let mut ctx = d.context(std::sync::Arc::new(crate::net::InProcess::new(csp.clone())), 99);
        ctx.debug().enable_mask_log();
        let n = d.pp.n().clone();
        for coin in [false, true] {
            ctx.debug().set_coin(Some(coin));
            let (x, y) = (40u64, 17u64);
            let cx = encrypt_u64(&d.pp, d.patient.public(), x, ctx.rng()).unwrap();
            let cy = encrypt_u64(&d.pp, d.hospital.public(), y, ctx.rng()).unwrap();
            compare(&mut ctx, ComparisonMode::Ge, &cx, &cy).unwrap();
            let masks = ctx.debug().take_mask_log().pop().unwrap();
            let view = csp.take_tap().into_iter().find(|v| v.protocol == ProtocolId::Cmp).unwrap();
            let delta = if coin { 2 * x + 1 - 2 * y } else { 0 };
            let expect = if coin {
                (&masks.r1 * delta + &masks.r2) % &n
            } else {
                (&n - (&masks.r1 * (2 * x + 1 - 2 * y)) % &n + &masks.r2) % &n
            };
            assert_eq!(view.values, vec![expect]);
        }
    }
}

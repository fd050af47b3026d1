use num_bigint::BigUint;

use super::{CpContext, Stats};
use crate::error::Result;
use crate::net::frame::ProtocolId;
use crate::pctd::Ciphertext;

/// Secure addition: [x]_a, [y]_b ↦ [x + y]_σ.
pub fn sad(ctx: &mut CpContext, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext> {
    Stats::bump(&ctx.stats().sad);
    ctx.in_session(|ctx| {
        let rx = ctx.random_zn();
        let ry = ctx.random_zn();
        let mx = ctx.encrypt(x.key, &rx)?;
        let my = ctx.encrypt(y.key, &ry)?;
        let xm = ctx.add(x, &mx)?;
        let ym = ctx.add(y, &my)?;
        let x1 = ctx.pd1(&xm);
        let y1 = ctx.pd1(&ym);
        let reply = ctx.exchange(ProtocolId::Sad, &[&xm.c1, &xm.c2, &ym.c1, &ym.c2, &x1.0, &y1.0])?;
        let s = ctx.sigma_cts(&reply, 1)?.remove(0);
        // [S]·[R]^{N−1} with R = r_x + r_y
        let n = ctx.pp().n().clone();
        let neg_r = (&n - (rx + ry) % &n) % &n;
        let unmask = ctx.encrypt_sigma(&neg_r)?;
        ctx.add(&s, &unmask)
    })
}

/// Secure multiplication: [x]_a, [y]_b ↦ [x·y]_σ.
pub fn smd(ctx: &mut CpContext, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext> {
    Stats::bump(&ctx.stats().smd);
    ctx.in_session(|ctx| {
        let n = ctx.pp().n().clone();
        let rx = ctx.random_zn();
        let ry = ctx.random_zn();
        let big_rx = ctx.random_zn();
        let big_ry = ctx.random_zn();
        let ex = ctx.encrypt(x.key, &rx)?;
        let ey = ctx.encrypt(y.key, &ry)?;
        let xm = ctx.add(x, &ex)?;
        let ym = ctx.add(y, &ey)?;
        // S = [R_x − r_y·x], T = [R_y − r_x·y]
        let erx = ctx.encrypt(x.key, &big_rx)?;
        let s = ctx.add(&ctx.scale(x, &((&n - &ry) % &n)), &erx)?;
        let ery = ctx.encrypt(y.key, &big_ry)?;
        let t = ctx.add(&ctx.scale(y, &((&n - &rx) % &n)), &ery)?;
        let parts = [ctx.pd1(&xm), ctx.pd1(&ym), ctx.pd1(&s), ctx.pd1(&t)];
        let reply = ctx.exchange(
            ProtocolId::Smd,
            &[
                &xm.c1, &xm.c2, &ym.c1, &ym.c2, &s.c1, &s.c2, &t.c1, &t.c2, &parts[0].0, &parts[1].0,
                &parts[2].0, &parts[3].0,
            ],
        )?;
        let cts = ctx.sigma_cts(&reply, 3)?;
        // S₄·S₅·S₆ = [−(r_x r_y + R_x + R_y)] folded into one encryption
        let offset: BigUint = (&rx * &ry + &big_rx + &big_ry) % &n;
        let unmask = ctx.encrypt_sigma(&((&n - offset) % &n))?;
        let acc = ctx.add(&cts[0], &cts[2])?;
        let acc = ctx.add(&acc, &cts[1])?;
        ctx.add(&acc, &unmask)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pctd::encrypt_u64;
    use crate::protocols::testutil::*;

    #[test]
    fn sad_contract() {
        let d = deployment();
        let (mut ctx, _) = d.inproc(10);
        let a = encrypt_u64(&d.pp, d.hospital.public(), 2, ctx.rng()).unwrap();
        let b = encrypt_u64(&d.pp, d.patient.public(), 3, ctx.rng()).unwrap();
        let s = sad(&mut ctx, &a, &b).unwrap();
        assert_eq!(s.key, d.sigma.public().id());
        assert_eq!(open(&s), 5);
        let z = encrypt_u64(&d.pp, d.hospital.public(), 0, ctx.rng()).unwrap();
        assert_eq!(open(&sad(&mut ctx, &z, &z).unwrap()), 0);
    }

    #[test]
    fn sad_wraps_mod_n() {
        let d = deployment();
        let (mut ctx, _) = d.inproc(11);
        let big = d.pp.n() - 1u8;
        let a = crate::pctd::encrypt(&d.pp, d.hospital.public(), &big, ctx.rng()).unwrap();
        let b = encrypt_u64(&d.pp, d.patient.public(), 3, ctx.rng()).unwrap();
        assert_eq!(open(&sad(&mut ctx, &a, &b).unwrap()), 2);
    }

    #[test]
    fn smd_contract() {
        let d = deployment();
        let (mut ctx, _) = d.inproc(12);
        let one = encrypt_u64(&d.pp, d.hospital.public(), 1, ctx.rng()).unwrap();
        let zero = encrypt_u64(&d.pp, d.hospital.public(), 0, ctx.rng()).unwrap();
        let y = encrypt_u64(&d.pp, d.patient.public(), 1234, ctx.rng()).unwrap();
        assert_eq!(open(&smd(&mut ctx, &one, &y).unwrap()), 1234);
        assert_eq!(open(&smd(&mut ctx, &zero, &y).unwrap()), 0);
        let x = encrypt_u64(&d.pp, d.hospital.public(), 77, ctx.rng()).unwrap();
        assert_eq!(open(&smd(&mut ctx, &x, &y).unwrap()), 77 * 1234);
    }
}

//! CSP's step handlers. Each takes the integers of one request (pk_out
//! first) and answers with ciphertexts under pk_out.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::net::frame::ProtocolId;
use crate::pctd::{self, codec, Ciphertext, KeyId, PartialKeyShare, PartialShare, PublicKey, PublicParams};

/// Receives every value CSP decrypts; only wired up in tests.
pub type Tap<'a> = &'a dyn Fn(ProtocolId, &[BigUint]);

struct Request<'a> {
    pp: &'a PublicParams,
    share: &'a PartialKeyShare,
    ints: Vec<BigUint>,
    pk_out: PublicKey,
}

impl Request<'_> {
    fn ct(&self, i: usize) -> Result<Ciphertext> {
        Ciphertext::from_parts(self.pp, self.ints[i].clone(), self.ints[i + 1].clone(), KeyId([0; 8]))
    }

    /// PD2 of the ciphertext at `ct_at` with CP's partial at `part_at`.
    fn open(&self, ct_at: usize, part_at: usize) -> Result<BigUint> {
        let ct = self.ct(ct_at)?;
        pctd::partial_decrypt_2(self.pp, self.share, &ct, &PartialShare(self.ints[part_at].clone()))
    }

    fn enc(&self, m: &BigUint, rng: &mut ChaCha20Rng, out: &mut Vec<u8>) -> Result<()> {
        pctd::encrypt(self.pp, &self.pk_out, m, rng)?.write(out);
        Ok(())
    }
}

fn expect_len(ints: &[BigUint], want: usize) -> Result<()> {
    if ints.len() != want {
        return Err(Error::Decode(format!("expected {want} values, got {}", ints.len())));
    }
    Ok(())
}

/// True when a decrypted residue reads as a negative value.
pub fn wrapped_negative(pp: &PublicParams, v: &BigUint) -> bool {
    v.bits() > pp.modulus_bits() / 2
}

pub fn respond(
    pp: &PublicParams,
    share: &PartialKeyShare,
    protocol: ProtocolId,
    payload: &[u8],
    rng: &mut ChaCha20Rng,
    tap: Option<Tap<'_>>,
) -> Result<Vec<u8>> {
    let ints = codec::decode_ints(payload)?;
    if ints.is_empty() {
        return Err(Error::Decode("empty payload".into()));
    }
    if ints[0].is_zero() || &ints[0] >= pp.n_squared() {
        return Err(Error::Decode("invalid output key".into()));
    }
    let pk_out = PublicKey::from_value(ints[0].clone());
    let req = Request { pp, share, ints, pk_out };
    let see = |vals: &[BigUint]| {
        if let Some(t) = tap {
            t(protocol, vals)
        }
    };
    let mut out = Vec::new();
    let n = pp.n();
    match protocol {
        ProtocolId::Sad => {
            expect_len(&req.ints, 7)?;
            let a = req.open(1, 5)?;
            let b = req.open(3, 6)?;
            see(&[a.clone(), b.clone()]);
            req.enc(&((a + b) % n), rng, &mut out)?;
        }
        ProtocolId::Smd => {
            expect_len(&req.ints, 13)?;
            let a = req.open(1, 9)?;
            let b = req.open(3, 10)?;
            let s2 = req.open(5, 11)?;
            let t2 = req.open(7, 12)?;
            see(&[a.clone(), b.clone(), s2.clone(), t2.clone()]);
            req.enc(&(a * b % n), rng, &mut out)?;
            req.enc(&s2, rng, &mut out)?;
            req.enc(&t2, rng, &mut out)?;
        }
        ProtocolId::Cmp => {
            expect_len(&req.ints, 4)?;
            let l = req.open(1, 3)?;
            see(std::slice::from_ref(&l));
            let u = if wrapped_negative(pp, &l) { BigUint::zero() } else { BigUint::one() };
            req.enc(&u, rng, &mut out)?;
        }
        ProtocolId::Smin => {
            // pk, l0', l0, l1, then (M−1) l2 ciphertexts and (M−1) l3 ciphertexts
            let len = req.ints.len();
            if len < 6 || (len - 6) % 4 != 0 {
                return Err(Error::Decode(format!("malformed selection request of {len} values")));
            }
            let l0 = req.open(2, 1)?;
            see(std::slice::from_ref(&l0));
            let t = !wrapped_negative(pp, &l0);
            req.enc(&BigUint::from(t as u8), rng, &mut out)?;
            for at in (4..len).step_by(2) {
                let ct = req.ct(at)?;
                if t {
                    let ct = Ciphertext { key: req.pk_out.id(), ..ct };
                    pctd::refresh(pp, &req.pk_out, &ct, rng)?.write(&mut out);
                } else {
                    req.enc(&BigUint::zero(), rng, &mut out)?;
                }
            }
        }
        ProtocolId::Bpsk => {
            // pk, MWeight, then (l_j, l_j') triples
            let len = req.ints.len();
            if len < 2 || (len - 2) % 3 != 0 {
                return Err(Error::Decode(format!("malformed marking request of {len} values")));
            }
            let mweight = req.ints[1].clone();
            let mut opened = Vec::new();
            for at in (2..len).step_by(3) {
                opened.push(req.open(at, at + 2)?);
            }
            see(&opened);
            for v in opened {
                let a = if v.is_zero() { mweight.clone() } else { BigUint::one() };
                req.enc(&a, rng, &mut out)?;
            }
        }
        other => {
            return Err(Error::Decode(format!("no handler for protocol {other:?}")));
        }
    }
    Ok(out)
}

use num_bigint::BigUint;
use rand::Rng;

use super::tpw::WeightedTreatmentProcedure;
use crate::error::{Error, Result};
use crate::model::k2c::{reserved_code, BOTTOM};
use crate::net::frame::ProtocolId;
use crate::par;
use crate::pctd::{self, Ciphertext, PublicKey, PublicParams};
use crate::protocols::{sad, smd, CpContext, Stats};

/// Procedure padded with ⊥ to MState labels and MState − 1 symbols.
#[derive(Clone, Debug)]
pub struct ExpandedTreatmentProcedure {
    pub labels: Vec<Ciphertext>,
    pub symbols: Vec<Ciphertext>,
    pub weight: Ciphertext,
}

pub fn expand<R: Rng + ?Sized>(
    pp: &PublicParams,
    pk: &PublicKey,
    wtps: &[WeightedTreatmentProcedure],
    mstate: usize,
    rng: &mut R,
) -> Result<Vec<ExpandedTreatmentProcedure>> {
    let bottom = reserved_code(pp, BOTTOM);
    wtps.iter()
        .map(|w| {
            if w.labels.len() > mstate {
                return Err(Error::Precondition(format!("procedure longer than MState = {mstate}")));
            }
            let mut labels = w.labels.clone();
            let mut symbols = w.symbols.clone();
            while labels.len() < mstate {
                labels.push(pctd::encrypt(pp, pk, &bottom, rng)?);
            }
            while symbols.len() + 1 < mstate {
                symbols.push(pctd::encrypt(pp, pk, &bottom, rng)?);
            }
            Ok(ExpandedTreatmentProcedure { labels, symbols, weight: w.weight.clone() })
        })
        .collect()
}

/// Oblivious minimum of two procedures. Ties select `b`.
pub fn smin(
    ctx: &mut CpContext,
    a: &ExpandedTreatmentProcedure,
    b: &ExpandedTreatmentProcedure,
) -> Result<ExpandedTreatmentProcedure> {
    let len = a.labels.len();
    if len == 0 || b.labels.len() != len || a.symbols.len() + 1 != len || b.symbols.len() + 1 != len {
        return Err(Error::Precondition("selection needs two expanded procedures of equal length".into()));
    }
    Stats::bump(&ctx.stats().smin);
    ctx.in_session(|ctx| {
        let n = ctx.pp().n().clone();
        let neg = |r: &BigUint| (&n - r % &n) % &n;
        let one = ctx.encrypt_sigma_u64(1)?;
        let two = BigUint::from(2u8);
        let wa = ctx.add(&ctx.scale(&a.weight, &two), &one)?;
        let wb = ctx.scale(&b.weight, &two);
        let s = ctx.coin();
        // `hi` is ETP_{s+1}, `lo` is ETP_{2−s}
        let (hi, lo, w_hi, w_lo) = if s { (b, a, wb, wa) } else { (a, b, wa, wb) };

        let r0p = ctx.sign_scale();
        let r0 = ctx.sign_noise();
        let r1 = ctx.random_zn();
        let noise = ctx.encrypt_sigma(&r0)?;
        let l0 = ctx.add(&ctx.add(&ctx.scale(&w_lo, &r0p), &ctx.scale(&w_hi, &neg(&r0p)))?, &noise)?;
        let m1 = ctx.encrypt_sigma(&r1)?;
        let l1 = ctx.add(&ctx.add(&hi.weight, &ctx.neg(&lo.weight))?, &m1)?;

        let masked = |ctx: &mut CpContext, x: &Ciphertext, y: &Ciphertext| -> Result<(Ciphertext, BigUint)> {
            let r = ctx.random_zn();
            let diff = ctx.add(x, &ctx.neg(y))?;
            let mask = ctx.encrypt_sigma(&r)?;
            Ok((sad(ctx, &diff, &mask)?, r))
        };
        let mut l2 = Vec::with_capacity(len - 1);
        for i in 1..len {
            l2.push(masked(ctx, &hi.labels[i], &lo.labels[i])?);
        }
        let mut l3 = Vec::with_capacity(len - 1);
        for i in 0..len - 1 {
            l3.push(masked(ctx, &hi.symbols[i], &lo.symbols[i])?);
        }

        let l0p = ctx.pd1(&l0);
        let mut values: Vec<&BigUint> = vec![&l0p.0, &l0.c1, &l0.c2, &l1.c1, &l1.c2];
        for (c, _) in l2.iter().chain(&l3) {
            values.push(&c.c1);
            values.push(&c.c2);
        }
        let reply = ctx.exchange(ProtocolId::Smin, &values)?;
        let cts = ctx.sigma_cts(&reply, 2 + 2 * (len - 1))?;
        let t = &cts[0];
        let (l4, rest) = (&cts[1], &cts[2..]);
        let (l5, l6) = rest.split_at(len - 1);

        let weight = ctx.add(&ctx.add(&lo.weight, l4)?, &ctx.scale(t, &neg(&r1)))?;
        let zero = ctx.encrypt_sigma_u64(0)?;
        let mut labels = vec![sad(ctx, &a.labels[0], &zero)?];
        for i in 1..len {
            let base = sad(ctx, &lo.labels[i], &l5[i - 1])?;
            labels.push(ctx.add(&base, &ctx.scale(t, &neg(&l2[i - 1].1)))?);
        }
        let mut symbols = Vec::with_capacity(len - 1);
        for i in 0..len - 1 {
            let base = sad(ctx, &lo.symbols[i], &l6[i])?;
            symbols.push(ctx.add(&base, &ctx.scale(t, &neg(&l3[i].1)))?);
        }
        Ok(ExpandedTreatmentProcedure { labels, symbols, weight })
    })
}

/// Re-encrypt every label and symbol under pk_σ (SAD with [0]) and refresh
/// the weight, so promoted entries look like selection outputs.
pub fn promote(ctx: &mut CpContext, e: &ExpandedTreatmentProcedure) -> Result<ExpandedTreatmentProcedure> {
    ctx.in_session(|ctx| {
        let lift = |ctx: &mut CpContext, c: &Ciphertext| -> Result<Ciphertext> {
            let zero = ctx.encrypt_sigma_u64(0)?;
            sad(ctx, c, &zero)
        };
        let mut labels = Vec::with_capacity(e.labels.len());
        for c in &e.labels {
            labels.push(lift(ctx, c)?);
        }
        let mut symbols = Vec::with_capacity(e.symbols.len());
        for c in &e.symbols {
            symbols.push(lift(ctx, c)?);
        }
        let weight = ctx.refresh(&e.weight)?;
        Ok(ExpandedTreatmentProcedure { labels, symbols, weight })
    })
}

/// Tournament minimum over adjacent pairs; pairs within a layer run in
/// parallel. An odd last entry is promoted to the next layer.
pub fn smin_n(ctx: &mut CpContext, etps: &[ExpandedTreatmentProcedure]) -> Result<ExpandedTreatmentProcedure> {
    match etps {
        [] => Err(Error::Precondition("selection over an empty list".into())),
        [only] => promote(ctx, only),
        _ => {
            let mut layer = etps.to_vec();
            while layer.len() > 1 {
                let jobs: Vec<(CpContext, &[ExpandedTreatmentProcedure])> =
                    layer.chunks(2).map(|c| (ctx.fork("smin"), c)).collect();
                layer = par::try_map(jobs, |(mut fork, pair)| match pair {
                    [a, b] => smin(&mut fork, a, b),
                    [a] => promote(&mut fork, a),
                    _ => unreachable!(),
                })?;
            }
            Ok(layer.remove(0))
        }
    }
}

pub fn bps_k(
    ctx: &mut CpContext,
    etps: &[ExpandedTreatmentProcedure],
    k: usize,
    mweight: u64,
) -> Result<Vec<ExpandedTreatmentProcedure>> {
    bps_k_traced(ctx, etps, k, mweight).map(|(picked, _)| picked)
}

/// Top-k selection; also returns the internal weights after every round.
pub fn bps_k_traced(
    ctx: &mut CpContext,
    etps: &[ExpandedTreatmentProcedure],
    k: usize,
    mweight: u64,
) -> Result<(Vec<ExpandedTreatmentProcedure>, Vec<Vec<Ciphertext>>)> {
    let n = etps.len();
    if k > n {
        return Err(Error::Precondition(format!("k = {k} exceeds the {n} procedures")));
    }
    let mut set = etps.to_vec();
    let mut picked = Vec::with_capacity(k);
    let mut rounds = Vec::with_capacity(k);
    for _ in 0..k {
        let best = smin_n(ctx, &set)?;
        let marks = ctx.in_session(|ctx| {
            let pn = ctx.pp().n().clone();
            let mut masked = Vec::with_capacity(n);
            for e in &set {
                let r = ctx.zero_test_scale();
                let neg_r = &pn - &r;
                let l = ctx.add(&ctx.scale(&best.weight, &r), &ctx.scale(&e.weight, &neg_r))?;
                let lp = ctx.pd1(&l);
                masked.push((l, lp));
            }
            let perm = ctx.permutation(n);
            let mw = BigUint::from(mweight);
            let mut values: Vec<&BigUint> = vec![&mw];
            for &j in &perm {
                let (l, lp) = &masked[j];
                values.extend([&l.c1, &l.c2, &lp.0]);
            }
            let reply = ctx.exchange(ProtocolId::Bpsk, &values)?;
            let shuffled = ctx.sigma_cts(&reply, n)?;
            let mut marks = vec![None; n];
            for (p, a) in shuffled.into_iter().enumerate() {
                marks[perm[p]] = Some(a);
            }
            Ok(marks.into_iter().map(|a| a.expect("permutation covers all")).collect::<Vec<Ciphertext>>())
        })?;
        let jobs: Vec<(CpContext, Ciphertext, Ciphertext)> =
            set.iter().zip(marks).map(|(e, a)| (ctx.fork("bump"), e.weight.clone(), a)).collect();
        let bumped = par::try_map(jobs, |(mut fork, w, a)| smd(&mut fork, &w, &a))?;
        for (e, w) in set.iter_mut().zip(&bumped) {
            e.weight = w.clone();
        }
        rounds.push(bumped);
        picked.push(best);
    }
    Ok((picked, rounds))
}

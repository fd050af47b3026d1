//! Two-party protocols between CP (holding λ₁) and CSP (holding λ₂).
//!
//! Every operation is driven by CP through a [`CpContext`] and returns a
//! ciphertext under the authorization key pk_σ. CSP's side lives in
//! [`csp`]; it only ever sees blinded values.

mod arith;
mod compare;
mod composite;
pub mod csp;

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::net::frame::{control, Frame, ProtocolId, SessionId};
use crate::net::Channel;
use crate::pctd::{self, codec, Ciphertext, KeyId, PartialKeyShare, PartialShare, PublicKey, PublicParams, Role};

pub use arith::{sad, smd};
pub use compare::{compare, ComparisonMode};
pub use composite::{set_eq, src_range, sut_neq};

/// Masks CP used in one comparison, recorded only when the mask log is on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompareMasks {
    pub session: SessionId,
    pub mode: ComparisonMode,
    pub coin: bool,
    pub r1: BigUint,
    pub r2: BigUint,
}

/// Test-only controls shared by a context and all of its forks.
#[derive(Default)]
pub struct DebugHooks {
    coin: Mutex<Option<bool>>,
    permutations: Mutex<VecDeque<Vec<usize>>>,
    mask_log: Mutex<Option<Vec<CompareMasks>>>,
}

impl DebugHooks {
    pub fn set_coin(&self, coin: Option<bool>) {
        *self.coin.lock().unwrap() = coin;
    }

    /// Queue permutations to be used, in order, instead of random ones.
    pub fn push_permutations<I: IntoIterator<Item = Vec<usize>>>(&self, perms: I) {
        self.permutations.lock().unwrap().extend(perms);
    }

    pub fn enable_mask_log(&self) {
        *self.mask_log.lock().unwrap() = Some(Vec::new());
    }

    pub fn take_mask_log(&self) -> Vec<CompareMasks> {
        self.mask_log.lock().unwrap().as_mut().map(std::mem::take).unwrap_or_default()
    }
}

/// Call counters, shared by a context and its forks.
#[derive(Default, Debug)]
pub struct Stats {
    pub sad: AtomicU64,
    pub smd: AtomicU64,
    pub compare: AtomicU64,
    pub sut: AtomicU64,
    pub smin: AtomicU64,
    pub round_trips: AtomicU64,
}

impl Stats {
    pub fn get(counter: &AtomicU64) -> u64 {
        counter.load(Ordering::Relaxed)
    }

    pub(crate) fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }
}

struct OpenSession {
    id: SessionId,
    step: u8,
}

/// CP's end of the protocol suite. Holds λ₁ only.
pub struct CpContext {
    pp: Arc<PublicParams>,
    share: Arc<PartialKeyShare>,
    pk_sigma: PublicKey,
    keys: Arc<HashMap<KeyId, PublicKey>>,
    channel: Arc<dyn Channel>,
    seed: [u8; 32],
    sessions: u64,
    forks: u64,
    rng: ChaCha20Rng,
    session: Option<OpenSession>,
    debug: Arc<DebugHooks>,
    stats: Arc<Stats>,
}

impl CpContext {
    /// `keys` lists every public key whose ciphertexts CP may receive.
    pub fn new(
        pp: Arc<PublicParams>,
        share: PartialKeyShare,
        pk_sigma: PublicKey,
        keys: &[PublicKey],
        channel: Arc<dyn Channel>,
        seed: [u8; 32],
    ) -> Result<Self> {
        if share.role() != Role::Cp {
            return Err(Error::Precondition("CP context needs the CP key share".into()));
        }
        let mut map: HashMap<KeyId, PublicKey> = keys.iter().map(|k| (k.id(), k.clone())).collect();
        map.insert(pk_sigma.id(), pk_sigma.clone());
        Ok(CpContext {
            pp,
            share: Arc::new(share),
            pk_sigma,
            keys: Arc::new(map),
            channel,
            seed,
            sessions: 0,
            forks: 0,
            rng: ChaCha20Rng::from_seed(derive(&seed, b"rng", &[])),
            session: None,
            debug: Arc::new(DebugHooks::default()),
            stats: Arc::new(Stats::default()),
        })
    }

    /// Independent child context with its own deterministic session ids and
    /// randomness; children are numbered in creation order.
    pub fn fork(&mut self, label: &str) -> CpContext {
        let n = self.forks;
        self.forks += 1;
        let mut tag = n.to_be_bytes().to_vec();
        tag.extend_from_slice(label.as_bytes());
        let seed = derive(&self.seed, b"fork", &tag);
        CpContext {
            pp: self.pp.clone(),
            share: self.share.clone(),
            pk_sigma: self.pk_sigma.clone(),
            keys: self.keys.clone(),
            channel: self.channel.clone(),
            seed,
            sessions: 0,
            forks: 0,
            rng: ChaCha20Rng::from_seed(derive(&seed, b"rng", &[])),
            session: None,
            debug: self.debug.clone(),
            stats: self.stats.clone(),
        }
    }

    pub fn pp(&self) -> &PublicParams {
        &self.pp
    }

    pub fn pk_sigma(&self) -> &PublicKey {
        &self.pk_sigma
    }

    pub fn debug(&self) -> &DebugHooks {
        &self.debug
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    pub fn key(&self, id: KeyId) -> Result<&PublicKey> {
        self.keys.get(&id).ok_or_else(|| Error::Precondition(format!("unknown public key {id:?}")))
    }

    pub fn encrypt(&mut self, key: KeyId, m: &BigUint) -> Result<Ciphertext> {
        let pk = self.key(key)?.clone();
        pctd::encrypt(&self.pp, &pk, m, &mut self.rng)
    }

    pub fn encrypt_sigma(&mut self, m: &BigUint) -> Result<Ciphertext> {
        pctd::encrypt(&self.pp, &self.pk_sigma, m, &mut self.rng)
    }

    pub fn encrypt_sigma_u64(&mut self, m: u64) -> Result<Ciphertext> {
        self.encrypt_sigma(&BigUint::from(m))
    }

    pub fn refresh(&mut self, ct: &Ciphertext) -> Result<Ciphertext> {
        let pk = self.key(ct.key)?.clone();
        pctd::refresh(&self.pp, &pk, ct, &mut self.rng)
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        pctd::hom_add(&self.pp, a, b)
    }

    pub fn scale(&self, ct: &Ciphertext, r: &BigUint) -> Ciphertext {
        pctd::hom_scale(&self.pp, ct, r)
    }

    pub fn neg(&self, ct: &Ciphertext) -> Ciphertext {
        pctd::hom_neg(&self.pp, ct)
    }

    pub fn pd1(&self, ct: &Ciphertext) -> PartialShare {
        pctd::partial_decrypt_1(&self.pp, &self.share, ct)
    }

    /// Uniform element of Z_N.
    pub fn random_zn(&mut self) -> BigUint {
        self.rng.gen_biguint_below(self.pp.n())
    }

    /// Uniform in [lo, hi).
    pub fn random_range(&mut self, lo: &BigUint, hi: &BigUint) -> BigUint {
        self.rng.gen_biguint_range(lo, hi)
    }

    pub fn coin(&mut self) -> bool {
        match *self.debug.coin.lock().unwrap() {
            Some(c) => c,
            None => self.rng.gen(),
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        if let Some(p) = self.debug.permutations.lock().unwrap().pop_front() {
            assert_eq!(p.len(), n, "scheduled permutation has wrong length");
            return p;
        }
        let mut p: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(p.as_mut_slice(), &mut self.rng);
        p
    }

    /// Multiplier r₁ for sign tests: L(N)/8 < L(r₁) < L(N)/4 − 1.
    pub fn sign_scale(&mut self) -> BigUint {
        let l = self.pp.modulus_bits();
        let lo = BigUint::one() << (l / 8);
        let hi = BigUint::one() << (l / 4 - 2);
        self.random_range(&lo, &hi)
    }

    /// Additive noise r₂ for sign tests: 1 ≤ r₂, L(r₂) < L(N)/8.
    pub fn sign_noise(&mut self) -> BigUint {
        let l = self.pp.modulus_bits();
        let hi = BigUint::one() << (l / 8 - 1);
        self.random_range(&BigUint::one(), &hi)
    }

    /// Nonzero multiplier with L(r) < L(N)/4 − 1, used for zero tests.
    pub fn zero_test_scale(&mut self) -> BigUint {
        let l = self.pp.modulus_bits();
        let hi = BigUint::one() << (l / 4 - 2);
        self.random_range(&BigUint::one(), &hi)
    }

    pub(crate) fn log_masks(&self, mode: ComparisonMode, coin: bool, r1: &BigUint, r2: &BigUint) {
        if let Some(log) = self.debug.mask_log.lock().unwrap().as_mut() {
            log.push(CompareMasks {
                session: self.session.as_ref().map(|s| s.id).unwrap_or(SessionId([0; 16])),
                mode,
                coin,
                r1: r1.clone(),
                r2: r2.clone(),
            });
        }
    }

    /// Run `f` inside a session, opening one if none is active. Nested
    /// protocol calls share the outermost session.
    pub fn in_session<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        if self.session.is_some() {
            return f(self);
        }
        let n = self.sessions;
        self.sessions += 1;
        let digest = derive(&self.seed, b"session", &n.to_be_bytes());
        let mut id = [0u8; 16];
        id.copy_from_slice(&digest[..16]);
        self.session = Some(OpenSession { id: SessionId(id), step: 0 });
        let out = f(self);
        let sess = self.session.take().expect("session open");
        let end = Frame::new(sess.id, ProtocolId::Control, control::END_SESSION, Vec::new());
        let closed = self.channel.notify(end);
        let value = out?;
        closed?;
        Ok(value)
    }

    /// One request/response with CSP. The payload is prefixed with pk_σ,
    /// the key CSP encrypts its answers under.
    pub(crate) fn exchange(&mut self, protocol: ProtocolId, values: &[&BigUint]) -> Result<Vec<BigUint>> {
        let sess = self
            .session
            .as_mut()
            .ok_or_else(|| Error::Precondition("exchange outside a session".into()))?;
        let mut payload = Vec::new();
        codec::put_int(&mut payload, self.pk_sigma.value());
        for v in values {
            codec::put_int(&mut payload, v);
        }
        let step = sess.step;
        sess.step = sess.step.wrapping_add(1);
        let request = Frame::new(sess.id, protocol, step, payload);
        let id = sess.id;
        Stats::bump(&self.stats.round_trips);
        let reply = self.channel.call(request)?;
        if reply.is_abort() {
            return Err(Error::SessionAbort(String::from_utf8_lossy(&reply.payload).into_owned()));
        }
        if reply.session != id || reply.step != step || reply.protocol != protocol {
            return Err(Error::SessionAbort("reply does not match request".into()));
        }
        codec::decode_ints(&reply.payload)
    }

    /// Interpret returned integers as σ-ciphertexts.
    pub(crate) fn sigma_cts(&self, ints: &[BigUint], count: usize) -> Result<Vec<Ciphertext>> {
        if ints.len() != 2 * count {
            return Err(Error::SessionAbort(format!(
                "expected {count} ciphertexts, got {} integers",
                ints.len()
            )));
        }
        ints.chunks(2)
            .map(|c| Ciphertext::from_parts(&self.pp, c[0].clone(), c[1].clone(), self.pk_sigma.id()))
            .collect()
    }
}

fn derive(seed: &[u8; 32], domain: &[u8], data: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed);
    h.update([domain.len() as u8]);
    h.update(domain);
    h.update(data);
    h.finalize().into()
}

pub(crate) fn seed_from(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u32).to_be_bytes());
        h.update(p);
    }
    h.finalize().into()
}

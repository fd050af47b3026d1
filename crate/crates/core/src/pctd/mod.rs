//! Paillier cryptosystem with threshold decryption.
//!
//! Ciphertexts are pairs `(pk^r (1+mN), g^r) mod N²`. The master key λ
//! decrypts everything; it is split additively into a CP share and a CSP
//! share so that decryption needs both.

pub mod codec;
mod prime;

use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use codec::Reader;

pub use prime::blum_prime;

#[derive(Clone, PartialEq, Eq)]
pub struct PublicParams {
    n: BigUint,
    n2: BigUint,
    g: BigUint,
    kappa: u32,
}

impl fmt::Debug for PublicParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicParams {{ L(N): {}, kappa: {} }}", self.n.bits(), self.kappa)
    }
}

impl PublicParams {
    pub fn from_parts(n: BigUint, g: BigUint, kappa: u32) -> Result<Self> {
        let n2 = &n * &n;
        if n.is_zero() || g >= n2 {
            return Err(Error::Decode("inconsistent public parameters".into()));
        }
        Ok(PublicParams { n, n2, g, kappa })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n2
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    /// L(N), the bit length of the modulus.
    pub fn modulus_bits(&self) -> u64 {
        self.n.bits()
    }

    /// N − 1, the exponent that negates a plaintext.
    pub fn minus_one(&self) -> BigUint {
        &self.n - 1u8
    }

    /// Bit budget for comparison operands.
    ///
    /// L(N)/8 at realistic sizes. Toy keys get a 16-bit floor: at L(N)=64 the
    /// comparison randomness (r₁ < 2^14, r₂ < 2^7) still keeps every masked
    /// difference of 16-bit operands below 2^31.
    pub fn operand_bits(&self) -> u64 {
        (self.modulus_bits() / 8).max(16)
    }

    pub fn operand_bound(&self) -> BigUint {
        BigUint::one() << self.operand_bits()
    }

    /// L(x) = (x − 1)/N, failing when the division is not exact.
    fn l_function(&self, x: &BigUint) -> Result<BigUint> {
        if x.is_zero() {
            return Err(Error::WrongKey);
        }
        let (q, r) = (x - 1u8).div_rem(&self.n);
        if !r.is_zero() || q >= self.n {
            return Err(Error::WrongKey);
        }
        Ok(q)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        key_file(KeyKind::Params, &[&self.n, &self.g, &BigUint::from(self.kappa)])
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let v = read_key_file(buf, KeyKind::Params, 3)?;
        let kappa = u32::try_from(&v[2]).map_err(|_| Error::Decode("kappa".into()))?;
        Self::from_parts(v[0].clone(), v[1].clone(), kappa)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct MasterKey {
    lambda: BigUint,
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterKey(..)")
    }
}

impl MasterKey {
    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        key_file(KeyKind::Master, &[&self.lambda])
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let v = read_key_file(buf, KeyKind::Master, 1)?;
        Ok(MasterKey { lambda: v[0].clone() })
    }
}

#[derive(Clone, Debug)]
pub struct PrimePair {
    pub p: BigUint,
    pub q: BigUint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Cp,
    Csp,
}

#[derive(Clone, PartialEq, Eq)]
pub struct PartialKeyShare {
    share: BigUint,
    role: Role,
}

impl fmt::Debug for PartialKeyShare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PartialKeyShare({:?})", self.role)
    }
}

impl PartialKeyShare {
    pub fn share(&self) -> &BigUint {
        &self.share
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let kind = match self.role {
            Role::Cp => KeyKind::ShareCp,
            Role::Csp => KeyKind::ShareCsp,
        };
        key_file(kind, &[&self.share])
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let role = match buf.first() {
            Some(&k) if k == KeyKind::ShareCp as u8 => Role::Cp,
            Some(&k) if k == KeyKind::ShareCsp as u8 => Role::Csp,
            _ => return Err(Error::Decode("not a key share".into())),
        };
        let kind = if role == Role::Cp { KeyKind::ShareCp } else { KeyKind::ShareCsp };
        let v = read_key_file(buf, kind, 1)?;
        Ok(PartialKeyShare { share: v[0].clone(), role })
    }
}

/// Short fingerprint of a public key, carried by ciphertexts as metadata.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeyId(pub [u8; 8]);

impl fmt::Debug for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct PublicKey {
    h: BigUint,
    id: KeyId,
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({:?})", self.id)
    }
}

impl PublicKey {
    pub fn from_value(h: BigUint) -> Self {
        let digest = Sha256::digest(h.to_bytes_be());
        let mut id = [0u8; 8];
        id.copy_from_slice(&digest[..8]);
        PublicKey { h, id: KeyId(id) }
    }

    pub fn value(&self) -> &BigUint {
        &self.h
    }

    pub fn id(&self) -> KeyId {
        self.id
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        key_file(KeyKind::Public, &[&self.h])
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let v = read_key_file(buf, KeyKind::Public, 1)?;
        Ok(Self::from_value(v[0].clone()))
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct UserKeyPair {
    sk: BigUint,
    pk: PublicKey,
}

impl fmt::Debug for UserKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UserKeyPair({:?})", self.pk.id)
    }
}

impl UserKeyPair {
    pub fn generate<R: RngCore + ?Sized>(pp: &PublicParams, rng: &mut R) -> Self {
        let sk = rng.gen_biguint_range(&BigUint::one(), &pp.n);
        Self::from_secret(pp, sk)
    }

    pub fn from_secret(pp: &PublicParams, sk: BigUint) -> Self {
        let pk = PublicKey::from_value(pp.g.modpow(&sk, &pp.n2));
        UserKeyPair { sk, pk }
    }

    pub fn public(&self) -> &PublicKey {
        &self.pk
    }

    pub fn secret(&self) -> &BigUint {
        &self.sk
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        key_file(KeyKind::Secret, &[&self.sk, &self.pk.h])
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let v = read_key_file(buf, KeyKind::Secret, 2)?;
        Ok(UserKeyPair { sk: v[0].clone(), pk: PublicKey::from_value(v[1].clone()) })
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub c1: BigUint,
    pub c2: BigUint,
    pub key: KeyId,
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ciphertext[{:?}]", self.key)
    }
}

impl Ciphertext {
    pub fn write(&self, out: &mut Vec<u8>) {
        codec::put_int(out, &self.c1);
        codec::put_int(out, &self.c2);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write(&mut out);
        out
    }

    /// Parse a ciphertext; the key tag is not on the wire and is supplied by context.
    pub fn read(pp: &PublicParams, r: &mut Reader<'_>, key: KeyId) -> Result<Self> {
        let c1 = r.int()?;
        let c2 = r.int()?;
        Self::from_parts(pp, c1, c2, key)
    }

    pub fn from_parts(pp: &PublicParams, c1: BigUint, c2: BigUint, key: KeyId) -> Result<Self> {
        if c1 >= pp.n2 || c2 >= pp.n2 {
            return Err(Error::Decode("ciphertext component exceeds N²".into()));
        }
        Ok(Ciphertext { c1, c2, key })
    }

    pub fn from_bytes(pp: &PublicParams, buf: &[u8], key: KeyId) -> Result<Self> {
        let mut r = Reader::new(buf);
        let ct = Self::read(pp, &mut r, key)?;
        r.finish()?;
        Ok(ct)
    }
}

/// Output of the CP half of a threshold decryption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialShare(pub BigUint);

/// Generate fresh parameters with two κ-bit Blum primes.
pub fn keygen<R: RngCore + ?Sized>(kappa: u32, rng: &mut R) -> (PublicParams, MasterKey, PrimePair) {
    loop {
        let p = blum_prime(kappa, rng);
        let q = blum_prime(kappa, rng);
        if p == q {
            continue;
        }
        if let Ok((pp, mk)) = params_from_primes(&p, &q, kappa, rng) {
            return (pp, mk, PrimePair { p, q });
        }
    }
}

/// Build parameters from known primes; fails when they cannot give g the
/// required order or λ is not invertible mod N.
pub fn params_from_primes<R: RngCore + ?Sized>(
    p: &BigUint,
    q: &BigUint,
    kappa: u32,
    rng: &mut R,
) -> Result<(PublicParams, MasterKey)> {
    let one = BigUint::one();
    let n = p * q;
    let n2 = &n * &n;
    let pm = p - 1u8;
    let qm = q - 1u8;
    let phi = &pm * &qm;
    let lambda = pm.lcm(&qm);
    if !lambda.gcd(&n).is_one() {
        return Err(Error::Precondition("gcd(λ, N) ≠ 1".into()));
    }
    if !(&phi % 4u8).is_zero() {
        return Err(Error::Precondition("(p−1)(q−1) not divisible by 4".into()));
    }
    let half = &phi >> 1;
    let quarter = &phi >> 2;
    for _ in 0..64 {
        let a = rng.gen_biguint_range(&BigUint::from(2u8), &n2);
        if !a.gcd(&n).is_one() {
            continue;
        }
        let g = &n2 - a.modpow(&(&n << 1), &n2);
        if g.modpow(&half, &n2) == one && g.modpow(&quarter, &n2) != one {
            let pp = PublicParams { n, n2, g, kappa };
            return Ok((pp, MasterKey { lambda }));
        }
    }
    Err(Error::Precondition("no generator of the required order".into()))
}

/// Split λ into shares with λ₁ + λ₂ ≡ 0 (mod λ) and ≡ 1 (mod N²).
pub fn split_master<R: RngCore + ?Sized>(
    pp: &PublicParams,
    mk: &MasterKey,
    rng: &mut R,
) -> (PartialKeyShare, PartialKeyShare) {
    let lambda = &mk.lambda;
    let modulus = lambda * &pp.n2;
    let inv = lambda.modinv(&pp.n2).expect("λ invertible mod N²");
    let target = lambda * inv;
    let l1 = rng.gen_biguint_below(&modulus);
    let l2 = ((&target + &modulus) - &l1) % &modulus;
    (
        PartialKeyShare { share: l1, role: Role::Cp },
        PartialKeyShare { share: l2, role: Role::Csp },
    )
}

pub fn encrypt<R: RngCore + ?Sized>(
    pp: &PublicParams,
    pk: &PublicKey,
    m: &BigUint,
    rng: &mut R,
) -> Result<Ciphertext> {
    if m >= &pp.n {
        return Err(Error::Domain);
    }
    let r = rng.gen_biguint_below(&pp.n);
    let gm = (BigUint::one() + m * &pp.n) % &pp.n2;
    let c1 = pk.h.modpow(&r, &pp.n2) * gm % &pp.n2;
    let c2 = pp.g.modpow(&r, &pp.n2);
    Ok(Ciphertext { c1, c2, key: pk.id })
}

pub fn encrypt_u64<R: RngCore + ?Sized>(
    pp: &PublicParams,
    pk: &PublicKey,
    m: u64,
    rng: &mut R,
) -> Result<Ciphertext> {
    encrypt(pp, pk, &BigUint::from(m), rng)
}

pub fn weak_decrypt(pp: &PublicParams, kp: &UserKeyPair, ct: &Ciphertext) -> Result<BigUint> {
    let mask = ct.c2.modpow(&kp.sk, &pp.n2);
    let inv = mask.modinv(&pp.n2).ok_or(Error::WrongKey)?;
    pp.l_function(&(&ct.c1 * inv % &pp.n2))
}

pub fn strong_decrypt(pp: &PublicParams, mk: &MasterKey, ct: &Ciphertext) -> Result<BigUint> {
    let u = pp.l_function(&ct.c1.modpow(&mk.lambda, &pp.n2))?;
    let inv = (&mk.lambda % &pp.n).modinv(&pp.n).ok_or(Error::WrongKey)?;
    Ok(u * inv % &pp.n)
}

pub fn partial_decrypt_1(pp: &PublicParams, share: &PartialKeyShare, ct: &Ciphertext) -> PartialShare {
    PartialShare(ct.c1.modpow(&share.share, &pp.n2))
}

pub fn partial_decrypt_2(
    pp: &PublicParams,
    share: &PartialKeyShare,
    ct: &Ciphertext,
    partial: &PartialShare,
) -> Result<BigUint> {
    if partial.0 >= pp.n2 {
        return Err(Error::Decode("partial share exceeds N²".into()));
    }
    let own = ct.c1.modpow(&share.share, &pp.n2);
    pp.l_function(&(own * &partial.0 % &pp.n2))
}

/// Re-randomize without changing the plaintext.
pub fn refresh<R: RngCore + ?Sized>(
    pp: &PublicParams,
    pk: &PublicKey,
    ct: &Ciphertext,
    rng: &mut R,
) -> Result<Ciphertext> {
    if ct.key != pk.id {
        return Err(Error::KeyMismatch);
    }
    let r = rng.gen_biguint_below(&pp.n);
    Ok(Ciphertext {
        c1: &ct.c1 * pk.h.modpow(&r, &pp.n2) % &pp.n2,
        c2: &ct.c2 * pp.g.modpow(&r, &pp.n2) % &pp.n2,
        key: ct.key,
    })
}

pub fn hom_add(pp: &PublicParams, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    if a.key != b.key {
        return Err(Error::KeyMismatch);
    }
    Ok(Ciphertext {
        c1: &a.c1 * &b.c1 % &pp.n2,
        c2: &a.c2 * &b.c2 % &pp.n2,
        key: a.key,
    })
}

pub fn hom_scale(pp: &PublicParams, ct: &Ciphertext, r: &BigUint) -> Ciphertext {
    Ciphertext {
        c1: ct.c1.modpow(r, &pp.n2),
        c2: ct.c2.modpow(r, &pp.n2),
        key: ct.key,
    }
}

pub fn hom_neg(pp: &PublicParams, ct: &Ciphertext) -> Ciphertext {
    hom_scale(pp, ct, &pp.minus_one())
}

/// a − b under the same key.
pub fn hom_sub(pp: &PublicParams, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    hom_add(pp, a, &hom_neg(pp, b))
}

/// Signed integers embedded in Z_N: −v is stored as N − v.
pub mod signed {
    use super::*;
    use num_bigint::{BigInt, Sign};

    pub fn encode(pp: &PublicParams, v: &BigInt) -> BigUint {
        let n = BigInt::from_biguint(Sign::Plus, pp.n.clone());
        let r = ((v % &n) + &n) % &n;
        r.to_biguint().expect("nonnegative residue")
    }

    /// Values of bit length below the operand bound read as nonnegative,
    /// values N − v with v below it as negative.
    pub fn decode(pp: &PublicParams, raw: &BigUint) -> Option<BigInt> {
        let bound = pp.operand_bound();
        if raw < &bound {
            return Some(BigInt::from(raw.clone()));
        }
        let neg = &pp.n - raw;
        if neg < bound {
            return Some(-BigInt::from(neg));
        }
        None
    }
}

#[repr(u8)]
#[derive(Clone, Copy, PartialEq, Eq)]
enum KeyKind {
    Params = 1,
    Master = 2,
    ShareCp = 3,
    ShareCsp = 4,
    Public = 5,
    Secret = 6,
}

fn key_file(kind: KeyKind, vals: &[&BigUint]) -> Vec<u8> {
    let mut out = vec![kind as u8];
    out.extend_from_slice(&(vals.len() as u32).to_be_bytes());
    for v in vals {
        codec::put_int(&mut out, v);
    }
    out
}

fn read_key_file(buf: &[u8], kind: KeyKind, count: usize) -> Result<Vec<BigUint>> {
    let mut r = Reader::new(buf);
    if r.u8()? != kind as u8 {
        return Err(Error::Decode("unexpected key file tag".into()));
    }
    if r.u32()? as usize != count {
        return Err(Error::Decode("unexpected key file length".into()));
    }
    let vals = (0..count).map(|_| r.int()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(vals)
}

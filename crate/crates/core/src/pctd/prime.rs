use num_bigint::{BigUint, RandBigInt};
use num_prime::nt_funcs::is_prime;
use num_prime::PrimalityTestConfig;
use rand::RngCore;

/// Random `bits`-bit prime with the top two bits set and p ≡ 3 (mod 4).
pub fn blum_prime<R: RngCore + ?Sized>(bits: u32, rng: &mut R) -> BigUint {
    assert!(bits >= 8, "prime size too small");
    let top = (BigUint::from(3u8)) << (bits - 2);
    loop {
        let mut c = rng.gen_biguint(bits as u64);
        c |= &top;
        c |= BigUint::from(3u8);
        if is_prime(&c, Some(PrimalityTestConfig::bpsw())).probably() {
            return c;
        }
    }
}

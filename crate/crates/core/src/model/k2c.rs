//! Keyword-to-code encoding: a truncated SHA-256 digest.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use crate::pctd::PublicParams;

/// Reserved token for the dummy symbol ⊥.
pub const BOTTOM: &str = "bottom";
/// Reserved token for the empty transition ε.
pub const EPSILON: &str = "epsilon";

/// Code width: 8 bits below the comparison operand budget.
pub fn code_bits(pp: &PublicParams) -> u64 {
    pp.operand_bits() - 8
}

fn digest_code(pp: &PublicParams, domain: &[u8], text: &str) -> BigUint {
    let mut h = Sha256::new();
    h.update(domain);
    h.update(text.as_bytes());
    let full = BigUint::from_bytes_be(&h.finalize());
    full >> (256 - code_bits(pp))
}

pub fn k2c_encode(pp: &PublicParams, keyword: &str) -> BigUint {
    debug_assert!(!keyword.is_empty(), "empty keyword");
    digest_code(pp, b"k2c/keyword\0", keyword)
}

/// Codes for reserved tokens live in a separate digest domain, so no
/// keyword can produce them except by a hash collision.
pub fn reserved_code(pp: &PublicParams, token: &str) -> BigUint {
    digest_code(pp, b"k2c/reserved\0", token)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pctd::keygen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn deterministic_and_distinct() {
        let (pp, _, _) = keygen(32, &mut ChaCha20Rng::seed_from_u64(1));
        assert_eq!(k2c_encode(&pp, "insulin"), k2c_encode(&pp, "insulin"));
        assert_ne!(k2c_encode(&pp, "therapy A"), k2c_encode(&pp, "therapy B"));
        assert_ne!(reserved_code(&pp, BOTTOM), reserved_code(&pp, EPSILON));
    }

    #[test]
    fn width_follows_modulus() {
        let (pp, _, _) = keygen(32, &mut ChaCha20Rng::seed_from_u64(2));
        assert_eq!(code_bits(&pp), 8);
        assert!(k2c_encode(&pp, "x").bits() <= 8);
        let (big, _, _) = keygen(128, &mut ChaCha20Rng::seed_from_u64(3));
        assert_eq!(code_bits(&big), 24);
    }

    #[test]
    fn dna_letters_distinct_at_toy_size() {
        let (pp, _, _) = keygen(32, &mut ChaCha20Rng::seed_from_u64(4));
        let codes: std::collections::BTreeSet<_> = ["A", "C", "G", "T"].iter().map(|s| k2c_encode(&pp, s)).collect();
        assert_eq!(codes.len(), 4);
    }
}

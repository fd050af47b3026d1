use std::sync::OnceLock;

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use pmed_core::deploy::Deployment;
use pmed_core::oracle::{levenshtein, plain_accept_row, plain_pgene};
use pmed_core::pctd::weak_decrypt;
use pmed_core::pgene::*;

fn dep() -> &'static Deployment {
    static D: OnceLock<Deployment> = OnceLock::new();
    D.get_or_init(|| Deployment::generate(32, 41).unwrap())
}

fn dna(len: usize) -> impl Strategy<Value = Vec<char>> {
    proptest::collection::vec(prop::sample::select(vec!['A', 'C', 'G', 'T']), len)
}

fn codes(s: &[char]) -> Vec<BigUint> {
    let c = dna_codes(&dep().pp).unwrap();
    s.iter().map(|x| c[&x.to_string()].clone()).collect()
}

fn encrypted_grids(psi: &[char], phi: &[char], mu: usize, mode: MatchMode, seed: u64) -> Vec<Vec<Vec<BigUint>>> {
    let d = dep();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let a = encrypt_sequence(&d.pp, d.hospital.public(), psi, &mut rng).unwrap();
    let b = encrypt_sequence(&d.pp, d.patient.public(), phi, &mut rng).unwrap();
    let (mut ctx, _) = d.inproc(seed);
    let open = |c| weak_decrypt(&d.pp, &d.sigma, c).unwrap();
    pgene_match_traced(&mut ctx, &a, &b, mu, mode)
        .unwrap()
        .iter()
        .map(|g| g.iter().map(|r| r.iter().map(open).collect()).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn both_modes_follow_their_recurrence(psi in (1usize..5).prop_flat_map(dna), extra in 0usize..3, mu in 0usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = (psi.len() + extra).saturating_sub(rng.gen_range(0..=2)).max(1);
        let phi: Vec<char> = (0..n).map(|_| ['A', 'C', 'G', 'T'][rng.gen_range(0..4)]).collect();
        for mode in [MatchMode::Verbatim, MatchMode::Snapshot] {
            let got = encrypted_grids(&psi, &phi, mu, mode, seed);
            prop_assert_eq!(&got, &plain_pgene(mode, &codes(&psi), &codes(&phi), mu, dep().pp.n()));
        }
    }

    #[test]
    fn snapshot_rows_are_monotone_and_track_distance(psi in (1usize..7).prop_flat_map(dna), phi in (1usize..8).prop_flat_map(dna), mu in 0usize..4) {
        let n = BigUint::from(1_000_003u32);
        let grids = plain_pgene(MatchMode::Snapshot, &codes(&psi), &codes(&phi), mu, &n);
        for g in &grids {
            let last: Vec<bool> = g.iter().map(|r| r[psi.len()] == BigUint::ZERO).collect();
            prop_assert!(last.windows(2).all(|w| !w[0] || w[1]));
        }
        let dist = levenshtein(&psi, &phi);
        let row = plain_accept_row(grids.last().unwrap());
        prop_assert_eq!(row, (dist <= mu).then_some(dist));
    }
}

#[test]
fn fasta_files_parse() {
    let dir = std::env::temp_dir().join(format!("pmed-fasta-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("seq.fa");
    std::fs::write(&path, ">chr test\nggc\nAT\n").unwrap();
    let seq = parse_sequence(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(seq.iter().collect::<String>(), "GGCAT");
    std::fs::remove_dir_all(dir).unwrap();
}

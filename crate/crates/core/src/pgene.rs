//! Error-tolerant DNA matching over an encrypted Ukkonen automaton.
//!
//! States q_{i,j} form a (μ+1) × (m+1) grid; row i counts errors, column j
//! counts consumed pattern symbols. S_{i,j} = [0] marks an active state.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::k2c::k2c_encode;
use crate::par;
use crate::pctd::{self, Ciphertext, PublicKey, PublicParams, UserKeyPair};
use crate::protocols::{sad, smd, sut_neq, CpContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatchMode {
    /// In-place update, as the algorithm is usually printed.
    Verbatim,
    /// Each step reads the previous step's grid; full-string edit distance.
    Snapshot,
}

impl std::str::FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verbatim" => Ok(MatchMode::Verbatim),
            "snapshot" => Ok(MatchMode::Snapshot),
            other => Err(Error::Precondition(format!("unknown match mode {other:?}"))),
        }
    }
}

/// Grid cell index (row i, column j).
pub type Cell = (usize, usize);

/// Transition matrix over grid cells. Only h-trans entries carry pattern
/// symbols; v- and d-trans are [0] and everything else is [1].
pub struct TransitionMatrix {
    mu: usize,
    m: usize,
    cells: Vec<Ciphertext>,
}

impl TransitionMatrix {
    fn index(&self, (i, j): Cell) -> usize {
        i * (self.m + 1) + j
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.mu + 1, self.m + 1)
    }

    pub fn get(&self, from: Cell, to: Cell) -> &Ciphertext {
        let side = (self.mu + 1) * (self.m + 1);
        &self.cells[self.index(from) * side + self.index(to)]
    }
}

pub fn build_e<R: Rng + ?Sized>(
    pp: &PublicParams,
    pk: &PublicKey,
    psi: &[Ciphertext],
    mu: usize,
    rng: &mut R,
) -> Result<TransitionMatrix> {
    let m = psi.len();
    let zero = pctd::encrypt_u64(pp, pk, 0, rng)?;
    let one = pctd::encrypt_u64(pp, pk, 1, rng)?;
    let mut cells = Vec::with_capacity(((mu + 1) * (m + 1)).pow(2));
    for i in 0..=mu {
        for j in 0..=m {
            for i2 in 0..=mu {
                for j2 in 0..=m {
                    let ct = if i2 == i && j2 == j + 1 {
                        &psi[j]
                    } else if i2 == i + 1 && (j2 == j || j2 == j + 1) {
                        &zero
                    } else {
                        &one
                    };
                    cells.push(ct.clone());
                }
            }
        }
    }
    Ok(TransitionMatrix { mu, m, cells })
}

/// Initial activity grid under pk_σ. Verbatim starts with only q_{0,0}
/// active; snapshot also activates column 0 (i leading deletions).
pub fn init_s(ctx: &mut CpContext, m: usize, mu: usize, mode: MatchMode) -> Result<Vec<Vec<Ciphertext>>> {
    let mut s = Vec::with_capacity(mu + 1);
    for i in 0..=mu {
        let mut row = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let active = match mode {
                MatchMode::Verbatim => i == 0 && j == 0,
                MatchMode::Snapshot => j <= i,
            };
            row.push(ctx.encrypt_sigma_u64(u64::from(!active))?);
        }
        s.push(row);
    }
    Ok(s)
}

/// Returns F_S = (S_{0,m}, …, S_{μ,m}) after the whole sequence.
pub fn pgene_match(
    ctx: &mut CpContext,
    psi: &[Ciphertext],
    phi: &[Ciphertext],
    mu: usize,
    mode: MatchMode,
) -> Result<Vec<Ciphertext>> {
    let grids = pgene_match_traced(ctx, psi, phi, mu, mode)?;
    let last = grids.last().expect("at least one step");
    Ok(last.iter().map(|row| row.last().expect("m ≥ 1").clone()).collect())
}

/// Same as [`pgene_match`], returning the whole grid after every symbol.
pub fn pgene_match_traced(
    ctx: &mut CpContext,
    psi: &[Ciphertext],
    phi: &[Ciphertext],
    mu: usize,
    mode: MatchMode,
) -> Result<Vec<Vec<Vec<Ciphertext>>>> {
    let m = psi.len();
    if m == 0 || phi.is_empty() {
        return Err(Error::Precondition("pattern and sequence must be non-empty".into()));
    }
    let owner = psi[0].key;
    let pk = ctx.key(owner)?.clone();
    let pp = ctx.pp().clone();
    let e = build_e(&pp, &pk, psi, mu, ctx.rng())?;
    let mut s = init_s(ctx, m, mu, mode)?;
    let mut out = Vec::with_capacity(phi.len());
    for x in phi {
        // B₀ for every cell depends only on φ_k and E, so the SUT calls of
        // one step run side by side.
        let cells: Vec<(CpContext, Cell)> =
            (0..=mu).flat_map(|i| (1..=m).map(move |j| (i, j))).map(|c| (ctx.fork("sut"), c)).collect();
        let b0 = par::try_map(cells, |(mut fork, (i, j))| sut_neq(&mut fork, x, e.get((i, j - 1), (i, j))))?;
        let b0 = |i: usize, j: usize| &b0[i * m + j - 1];

        match mode {
            MatchMode::Verbatim => {
                for j in 1..=m {
                    s[0][j] = sad(ctx, &s[0][j - 1], b0(0, j))?;
                }
                for i in 1..=mu {
                    for j in 1..=m {
                        let b1 = sad(ctx, &s[i][j - 1], b0(i, j))?;
                        let b2 = smd(ctx, &s[i - 1][j - 1], &s[i - 1][j])?;
                        let b3 = smd(ctx, &s[i][j - 1], &b2)?;
                        s[i][j] = smd(ctx, &b1, &b3)?;
                    }
                }
            }
            MatchMode::Snapshot => {
                let prev = s.clone();
                s[0][0] = ctx.encrypt_sigma_u64(1)?;
                for j in 1..=m {
                    s[0][j] = sad(ctx, &prev[0][j - 1], b0(0, j))?;
                }
                for i in 1..=mu {
                    s[i][0] = ctx.refresh(&prev[i - 1][0])?;
                    for j in 1..=m {
                        let b1 = sad(ctx, &prev[i][j - 1], b0(i, j))?;
                        let b2 = smd(ctx, &prev[i - 1][j - 1], &prev[i - 1][j])?;
                        let b3 = smd(ctx, &s[i - 1][j - 1], &b2)?;
                        s[i][j] = smd(ctx, &b1, &b3)?;
                    }
                }
            }
        }
        out.push(s.clone());
    }
    Ok(out)
}

/// Smallest error count i with S_{i,m} active, if any.
pub fn accepted(pp: &PublicParams, sigma: &UserKeyPair, fs: &[Ciphertext]) -> Result<Option<usize>> {
    for (i, c) in fs.iter().enumerate() {
        if pctd::weak_decrypt(pp, sigma, c)? == BigUint::ZERO {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Nucleobases from plain text or FASTA: header lines starting with '>'
/// are skipped, whitespace is ignored and case is folded.
pub fn parse_sequence(text: &str) -> Result<Vec<char>> {
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim_start().starts_with('>')) {
        for c in line.chars().filter(|c| !c.is_whitespace()) {
            let c = c.to_ascii_uppercase();
            if !matches!(c, 'A' | 'C' | 'G' | 'T') {
                return Err(Error::Decode(format!("unexpected nucleobase {c:?}")));
            }
            out.push(c);
        }
    }
    if out.is_empty() {
        return Err(Error::Decode("empty sequence".into()));
    }
    Ok(out)
}

/// Codes for an alphabet; fails if two symbols share a code at this key size.
pub fn symbol_codes(pp: &PublicParams, alphabet: &[String]) -> Result<BTreeMap<String, BigUint>> {
    let mut seen = BTreeMap::new();
    let mut out = BTreeMap::new();
    for a in alphabet {
        let code = k2c_encode(pp, a);
        if let Some(prev) = seen.insert(code.clone(), a.clone()) {
            if &prev != a {
                return Err(Error::Validation(format!("symbols {prev:?} and {a:?} share a code")));
            }
        }
        out.insert(a.clone(), code);
    }
    Ok(out)
}

pub fn dna_codes(pp: &PublicParams) -> Result<BTreeMap<String, BigUint>> {
    symbol_codes(pp, &["A", "C", "G", "T"].map(String::from))
}

pub fn encrypt_sequence<R: Rng + ?Sized>(
    pp: &PublicParams,
    pk: &PublicKey,
    seq: &[char],
    rng: &mut R,
) -> Result<Vec<Ciphertext>> {
    let codes = dna_codes(pp)?;
    seq.iter()
        .map(|c| {
            let code = codes.get(&c.to_string()).ok_or_else(|| Error::Decode(format!("not a nucleobase: {c:?}")))?;
            pctd::encrypt(pp, pk, code, rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use num_traits::{One, Zero};

    use super::*;
    use crate::oracle::{plain_accept_row, plain_pgene};
    use crate::protocols::testutil::*;
    use crate::protocols::Stats;

    fn run(mode: MatchMode, psi: &str, phi: &str, mu: usize) -> (Vec<Vec<Vec<BigUint>>>, Vec<Vec<Vec<BigUint>>>) {
        let d = deployment();
        let (mut ctx, _) = d.inproc(60);
        let psi: Vec<char> = psi.chars().collect();
        let phi: Vec<char> = phi.chars().collect();
        let a = encrypt_sequence(&d.pp, d.hospital.public(), &psi, ctx.rng()).unwrap();
        let b = encrypt_sequence(&d.pp, d.patient.public(), &phi, ctx.rng()).unwrap();
        let before = Stats::get(&ctx.stats().sut);
        let grids = pgene_match_traced(&mut ctx, &a, &b, mu, mode).unwrap();
        assert_eq!(Stats::get(&ctx.stats().sut) - before, (phi.len() * (mu + 1) * psi.len()) as u64);
        let got = grids.iter().map(|g| g.iter().map(|r| r.iter().map(open_big).collect()).collect()).collect();
        let codes = dna_codes(&d.pp).unwrap();
        let code = |s: &[char]| s.iter().map(|c| codes[&c.to_string()].clone()).collect::<Vec<_>>();
        let want = plain_pgene(mode, &code(&psi), &code(&phi), mu, d.pp.n());
        (got, want)
    }

    #[test]
    fn transition_matrix_cases() {
        let d = deployment();
        let (mut ctx, _) = d.inproc(61);
        let psi = encrypt_sequence(&d.pp, d.hospital.public(), &['G', 'C', 'T'], ctx.rng()).unwrap();
        let e = build_e(&d.pp, d.hospital.public(), &psi, 2, ctx.rng()).unwrap();
        assert_eq!(e.dims(), (3, 4));
        let dec = |c| pctd::weak_decrypt(&d.pp, &d.hospital, c).unwrap();
        assert_eq!(dec(e.get((0, 0), (0, 1))), dna_codes(&d.pp).unwrap()["G"]);
        assert_eq!(dec(e.get((1, 2), (1, 3))), dna_codes(&d.pp).unwrap()["T"]);
        assert!(dec(e.get((0, 1), (1, 1))).is_zero());
        assert!(dec(e.get((0, 1), (1, 2))).is_zero());
        assert!(dec(e.get((0, 0), (0, 2))).is_one());
        assert!(dec(e.get((1, 1), (0, 1))).is_one());
        assert!(dec(e.get((2, 3), (2, 3))).is_one());
    }

    #[test]
    fn snapshot_two_errors() {
        let (got, want) = run(MatchMode::Snapshot, "GCT", "GGCAT", 2);
        assert_eq!(got, want);
        assert_eq!(plain_accept_row(got.last().unwrap()), Some(2));
        let (got, _) = run(MatchMode::Snapshot, "GCT", "GCT", 1);
        assert_eq!(plain_accept_row(got.last().unwrap()), Some(0));
    }

    #[test]
    fn verbatim_matches_recurrence() {
        let (got, want) = run(MatchMode::Verbatim, "GCT", "GGCAT", 2);
        assert_eq!(got, want);
    }

    #[test]
    fn accepted_reports_row() {
        let d = deployment();
        let (mut ctx, _) = d.inproc(62);
        let a = encrypt_sequence(&d.pp, d.hospital.public(), &['A', 'C'], ctx.rng()).unwrap();
        let b = encrypt_sequence(&d.pp, d.patient.public(), &['A', 'G'], ctx.rng()).unwrap();
        let fs = pgene_match(&mut ctx, &a, &b, 1, MatchMode::Snapshot).unwrap();
        assert_eq!(accepted(&d.pp, &d.sigma, &fs).unwrap(), Some(1));
        let fs = pgene_match(&mut ctx, &a, &b, 0, MatchMode::Snapshot).unwrap();
        assert_eq!(accepted(&d.pp, &d.sigma, &fs).unwrap(), None);
    }

    #[test]
    fn fasta_parsing() {
        assert_eq!(parse_sequence(">seq1 demo\ngct\nTA g\n").unwrap(), vec!['G', 'C', 'T', 'T', 'A', 'G']);
        assert!(parse_sequence("GCXT").is_err());
        assert!(parse_sequence(">only header\n").is_err());
        assert_eq!("snapshot".parse::<MatchMode>().unwrap(), MatchMode::Snapshot);
    }
}

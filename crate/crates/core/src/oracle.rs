//! Plaintext reference implementations. Not optimized; used by tests and
//! by the acceptance harness as ground truth.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use rand::Rng;

use crate::model::{FieldValue, PatientState, Predicate, StateDescriptor, Symbol, Transition, WeightedNfaModel};
use crate::pgene::MatchMode;
use crate::protocols::ComparisonMode;

pub fn plain_compare(mode: ComparisonMode, x: u64, y: u64) -> bool {
    mode.holds(&x.into(), &y.into())
}

fn number(state: &PatientState, field: &str) -> u64 {
    match state.values.get(field) {
        Some(FieldValue::Number(v)) => *v,
        other => panic!("field {field:?} is not numeric: {other:?}"),
    }
}

pub fn plain_ssm(state: &PatientState, descriptor: &StateDescriptor) -> bool {
    descriptor.iter().all(|p| match p {
        Predicate::Range { field, lo, hi } => (lo..=hi).contains(&&number(state, field)),
        Predicate::RangePair { fields, lo, hi } => {
            (0..2).all(|i| (lo[i]..=hi[i]).contains(&number(state, &fields[i])))
        }
        Predicate::Gt { field, threshold } => number(state, field) > *threshold,
        Predicate::Lt { field, threshold } => number(state, field) < *threshold,
        Predicate::KeywordEq { field, keyword } => {
            matches!(state.values.get(field), Some(FieldValue::Keyword(k)) if k == keyword)
        }
    })
}

/// All walks q₀ → F that stop at the first accept state, never re-enter
/// q₀, visit each state at most `mvisit` times and have at most `mstate`
/// states. Returned in lexicographic order of state ids.
pub fn plain_paths(model: &WeightedNfaModel, mvisit: usize, mstate: usize) -> Vec<Vec<usize>> {
    fn walk(
        m: &WeightedNfaModel,
        mvisit: usize,
        mstate: usize,
        path: &mut Vec<usize>,
        counts: &mut BTreeMap<usize, usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let at = *path.last().unwrap();
        for next in 1..m.n_states {
            if m.transition(at, next).is_none() || counts.get(&next).copied().unwrap_or(0) >= mvisit {
                continue;
            }
            if path.len() + 1 > mstate {
                continue;
            }
            path.push(next);
            *counts.entry(next).or_default() += 1;
            if m.accept.contains(&next) {
                out.push(path.clone());
            } else {
                walk(m, mvisit, mstate, path, counts, out);
            }
            *counts.get_mut(&next).unwrap() -= 1;
            path.pop();
        }
    }
    if model.accept.contains(&0) {
        return vec![vec![0]];
    }
    if mvisit == 0 || mstate == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut counts = BTreeMap::from([(0, 1)]);
    walk(model, mvisit, mstate, &mut vec![0], &mut counts, &mut out);
    out
}

/// Per-path record of the weight computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainTrace {
    /// Match bit of every window, in window order.
    pub windows: Vec<bool>,
    /// First matching window start (1-based over non-initial states).
    pub first_match: Option<usize>,
    pub weight: u64,
}

pub fn plain_tpw_traced(
    model: &WeightedNfaModel,
    mweight: u64,
    query: &[PatientState],
    paths: &[Vec<usize>],
) -> Vec<PlainTrace> {
    let m = query.len();
    paths
        .iter()
        .map(|p| {
            let t_len = p.len() - 1;
            if t_len < m || m == 0 {
                return PlainTrace { windows: vec![], first_match: None, weight: mweight };
            }
            let v = |u: usize| model.transition(p[u - 1], p[u]).expect("path edge").weight;
            let windows: Vec<bool> = (1..=t_len - m + 1)
                .map(|t| (0..m).all(|k| plain_ssm(&query[k], &model.descriptors[p[t + k]])))
                .collect();
            let first_match = windows.iter().position(|&b| b).map(|i| i + 1);
            let weight = match first_match {
                Some(t) => (t + m..=t_len).map(v).sum(),
                None => mweight,
            };
            PlainTrace { windows, first_match, weight }
        })
        .collect()
}

pub fn plain_tpw(model: &WeightedNfaModel, mweight: u64, query: &[PatientState], paths: &[Vec<usize>]) -> Vec<u64> {
    plain_tpw_traced(model, mweight, query, paths).into_iter().map(|t| t.weight).collect()
}

/// Indices of the k smallest weights, ascending; ties by lower index.
pub fn plain_topk(weights: &[u64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by_key(|&i| (weights[i], i));
    idx.truncate(k);
    idx
}

/// Pairwise minimum as the selection protocol resolves it: the left
/// element wins only when strictly smaller.
pub fn plain_min_pair(w1: u64, w2: u64) -> bool {
    w1 < w2
}

/// Winner index of the adjacent-pairs tournament; an odd last element
/// advances unchanged.
pub fn plain_tournament(weights: &[u64]) -> usize {
    assert!(!weights.is_empty());
    let mut layer: Vec<usize> = (0..weights.len()).collect();
    while layer.len() > 1 {
        layer = layer
            .chunks(2)
            .map(|c| match c {
                [a, b] => {
                    if plain_min_pair(weights[*a], weights[*b]) {
                        *a
                    } else {
                        *b
                    }
                }
                [a] => *a,
                _ => unreachable!(),
            })
            .collect();
    }
    layer[0]
}

/// Repeated tournament with the multiplicative bump; returns the selected
/// indices and the internal weights after each round.
pub fn plain_bps(weights: &[u64], k: usize, mweight: u64) -> (Vec<usize>, Vec<Vec<u64>>) {
    let mut w = weights.to_vec();
    let mut picks = Vec::new();
    let mut rounds = Vec::new();
    for _ in 0..k {
        let i = plain_tournament(&w);
        let min = w[i];
        picks.push(i);
        for x in w.iter_mut() {
            if *x == min {
                *x *= mweight;
            }
        }
        rounds.push(w.clone());
    }
    (picks, rounds)
}

pub type Grid = Vec<Vec<BigUint>>;

/// Activation grid after each input symbol, values mod `n` (0 = active).
pub fn plain_pgene(mode: MatchMode, psi: &[BigUint], phi: &[BigUint], mu: usize, n: &BigUint) -> Vec<Grid> {
    let m = psi.len();
    let zero = BigUint::zero;
    let one = BigUint::one;
    let mut s: Grid = (0..=mu)
        .map(|i| {
            (0..=m)
                .map(|j| {
                    let active = match mode {
                        MatchMode::Verbatim => i == 0 && j == 0,
                        MatchMode::Snapshot => j <= i,
                    };
                    if active {
                        zero()
                    } else {
                        one()
                    }
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for x in phi {
        let b0 = |j: usize| if *x != psi[j - 1] { one() } else { zero() };
        match mode {
            MatchMode::Verbatim => {
                for j in 1..=m {
                    s[0][j] = (&s[0][j - 1] + b0(j)) % n;
                }
                for i in 1..=mu {
                    for j in 1..=m {
                        let b1 = (&s[i][j - 1] + b0(j)) % n;
                        let b2 = &s[i - 1][j - 1] * &s[i - 1][j] % n;
                        let b3 = &s[i][j - 1] * b2 % n;
                        s[i][j] = b1 * b3 % n;
                    }
                }
            }
            MatchMode::Snapshot => {
                let prev = s.clone();
                s[0][0] = one();
                for j in 1..=m {
                    s[0][j] = (&prev[0][j - 1] + b0(j)) % n;
                }
                for i in 1..=mu {
                    s[i][0] = prev[i - 1][0].clone();
                    for j in 1..=m {
                        let b1 = (&prev[i][j - 1] + b0(j)) % n;
                        let b2 = &prev[i - 1][j - 1] * &prev[i - 1][j] % n;
                        let b3 = &s[i - 1][j - 1] * b2 % n;
                        s[i][j] = b1 * b3 % n;
                    }
                }
            }
        }
        out.push(s.clone());
    }
    out
}

/// Smallest row whose last column is active.
pub fn plain_accept_row(grid: &Grid) -> Option<usize> {
    grid.iter().position(|row| row.last().is_some_and(Zero::is_zero))
}

pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Random model over one numeric field "x": each ordered pair gets an edge
/// with probability `density`, weights in 1..=9, and 1–2 accept states.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, n_states: usize, density: f64) -> WeightedNfaModel {
    let alphabet: Vec<String> = (0..3).map(|i| format!("s{i}")).collect();
    let mut transitions = Vec::new();
    for from in 0..n_states {
        for to in 0..n_states {
            if rng.gen_bool(density) {
                let symbol = match rng.gen_range(0..4) {
                    3 => Symbol::Epsilon,
                    i => Symbol::Keyword(alphabet[i].clone()),
                };
                transitions.push(Transition { from, to, symbol, weight: rng.gen_range(1..=9) });
            }
        }
    }
    let accept = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(1..n_states.max(2))).filter(|&a| a < n_states).collect();
    let descriptors = (0..n_states)
        .map(|_| {
            let lo = rng.gen_range(0..20);
            vec![Predicate::Range { field: "x".into(), lo, hi: lo + rng.gen_range(0..10) }]
        })
        .collect();
    WeightedNfaModel { n_states, accept, alphabet, transitions, descriptors, scale_factors: BTreeMap::new() }
}

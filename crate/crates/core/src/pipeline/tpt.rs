use std::collections::BTreeSet;

use crate::model::TransitionArrays;

/// A q₀ → F path with its per-step symbols and transition weights.
/// `states` is the structural index path CP sees; `labels` carries the
/// (encrypted) state labels in the same order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreatmentProcedure<T> {
    pub states: Vec<usize>,
    pub labels: Vec<T>,
    pub symbols: Vec<T>,
    pub weights: Vec<T>,
}

/// Stack traversal of all treatment procedures.
///
/// Candidates are tried in ascending state id from 1, so edges back into
/// q₀ are never followed. A procedure ends at the first accept state it
/// reaches. Visit flags are kept per (occurrence count, state) and cleared
/// when that occurrence is popped.
pub fn tpt<T: Clone>(
    arrays: &TransitionArrays<T>,
    labels: &[T],
    accept: &BTreeSet<usize>,
    mvisit: usize,
    mstate: usize,
) -> Vec<TreatmentProcedure<T>> {
    let n = arrays.n();
    if accept.contains(&0) {
        return vec![TreatmentProcedure { states: vec![0], labels: vec![labels[0].clone()], symbols: vec![], weights: vec![] }];
    }
    if mvisit == 0 || mstate < 2 {
        return Vec::new();
    }
    let flag = |level: usize, from: usize, to: usize| (level * n + from) * n + to;
    let mut visit = vec![false; (mvisit + 1) * n * n];
    let mut count = vec![0usize; n];
    let mut q: Vec<usize> = vec![0];
    let mut y: Vec<T> = Vec::new();
    let mut w: Vec<T> = Vec::new();
    count[0] = 1;
    let mut out = Vec::new();

    while let Some(&alpha) = q.last() {
        let level = count[alpha];
        let beta = (1..n).find(|&i| arrays.get(alpha, i).is_some() && !visit[flag(level, alpha, i)]);
        match beta {
            None => {
                for j in 0..n {
                    visit[flag(level, alpha, j)] = false;
                }
                q.pop();
                count[alpha] -= 1;
                if !y.is_empty() {
                    y.pop();
                    w.pop();
                }
            }
            Some(b) => {
                visit[flag(level, alpha, b)] = true;
                if count[b] < mvisit {
                    let (sym, wt) = arrays.get(alpha, b).expect("checked cell");
                    y.push(sym.clone());
                    w.push(wt.clone());
                    q.push(b);
                    count[b] += 1;
                }
            }
        }
        if let Some(&top) = q.last() {
            let done = accept.contains(&top);
            if done {
                out.push(TreatmentProcedure {
                    states: q.clone(),
                    labels: q.iter().map(|&s| labels[s].clone()).collect(),
                    symbols: y.clone(),
                    weights: w.clone(),
                });
            }
            if done || q.len() >= mstate {
                q.pop();
                y.pop();
                w.pop();
                count[top] -= 1;
            }
        }
    }
    out
}

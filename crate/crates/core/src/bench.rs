//! Timing grid: every protocol across key sizes, plus TPW across query
//! length m and path length at the smallest key size.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::deploy::Deployment;
use crate::error::Result;
use crate::model::{
    build_transition_arrays, encrypt_model, encrypt_query, PatientState, Predicate, Symbol, Transition, WeightedNfaModel,
};
use crate::pctd::{encrypt_u64, Ciphertext};
use crate::pgene::{encrypt_sequence, pgene_match, MatchMode};
use crate::pipeline::{procedure_weight, smin, tpt, ExpandedTreatmentProcedure};
use crate::protocols::{compare, sad, set_eq, smd, src_range, sut_neq, ComparisonMode, CpContext};

#[derive(Clone, Debug, Serialize)]
pub struct BenchConfig {
    pub kappas: Vec<u32>,
    pub trials: usize,
    pub query_lens: Vec<usize>,
    pub path_lens: Vec<usize>,
    /// Range predicates per state in the synthetic TPW model.
    pub predicates: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { kappas: vec![256, 512], trials: 3, query_lens: vec![1, 2, 3], path_lens: vec![8, 12], predicates: 5, seed: 7 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub operation: String,
    /// L(N) in bits.
    pub modulus_bits: u64,
    pub m: Option<usize>,
    pub path_len: Option<usize>,
    pub trials: usize,
    pub mean_ms: f64,
}

fn time<T>(trials: usize, mut f: impl FnMut() -> Result<T>) -> Result<f64> {
    let start = Instant::now();
    for _ in 0..trials {
        f()?;
    }
    Ok(start.elapsed().as_secs_f64() * 1000.0 / trials as f64)
}

pub fn run_grid(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for (idx, &kappa) in cfg.kappas.iter().enumerate() {
        let d = Deployment::generate(kappa, cfg.seed)?;
        let (mut ctx, _) = d.inproc(cfg.seed);
        protocol_rows(&d, &mut ctx, cfg.trials, &mut rows)?;
        if idx == 0 {
            tpw_rows(&d, &mut ctx, cfg, &mut rows)?;
        }
    }
    Ok(rows)
}

fn protocol_rows(d: &Deployment, ctx: &mut CpContext, trials: usize, rows: &mut Vec<BenchRow>) -> Result<()> {
    let bits = d.pp.modulus_bits();
    let bound = 1u64 << d.pp.operand_bits().min(20);
    let mut rng = ChaCha20Rng::seed_from_u64(bits);
    let operand = |rng: &mut ChaCha20Rng| -> Result<(Ciphertext, Ciphertext)> {
        let x = encrypt_u64(&d.pp, d.patient.public(), rng.gen_range(0..bound), rng)?;
        let y = encrypt_u64(&d.pp, d.hospital.public(), rng.gen_range(0..bound), rng)?;
        Ok((x, y))
    };
    let (x, y) = operand(&mut rng)?;
    let (z, _) = operand(&mut rng)?;
    let ops: Vec<(&str, Box<dyn Fn(&mut CpContext) -> Result<Ciphertext>>)> = vec![
        ("SAD", Box::new(|c| sad(c, &x, &y))),
        ("SMD", Box::new(|c| smd(c, &x, &y))),
        ("SGE", Box::new(|c| compare(c, ComparisonMode::Ge, &x, &y))),
        ("SLE", Box::new(|c| compare(c, ComparisonMode::Le, &x, &y))),
        ("SGT", Box::new(|c| compare(c, ComparisonMode::Gt, &x, &y))),
        ("SLT", Box::new(|c| compare(c, ComparisonMode::Lt, &x, &y))),
        ("SET", Box::new(|c| set_eq(c, &x, &y))),
        ("SUT", Box::new(|c| sut_neq(c, &x, &y))),
        ("SRC", Box::new(|c| src_range(c, &x, &y, &z))),
    ];
    for (name, op) in &ops {
        let mean_ms = time(trials, || op(ctx))?;
        rows.push(BenchRow { operation: name.to_string(), modulus_bits: bits, m: None, path_len: None, trials, mean_ms });
    }

    let etp = |ctx: &mut CpContext, w: u64| -> Result<ExpandedTreatmentProcedure> {
        let pk = d.hospital.public();
        let labels = (0..4).map(|i| encrypt_u64(&d.pp, pk, i, ctx.rng())).collect::<Result<_>>()?;
        let symbols = (0..3).map(|i| encrypt_u64(&d.pp, pk, 10 + i, ctx.rng())).collect::<Result<_>>()?;
        Ok(ExpandedTreatmentProcedure { labels, symbols, weight: ctx.encrypt_sigma_u64(w)? })
    };
    let (a, b) = (etp(ctx, 12)?, etp(ctx, 7)?);
    let mean_ms = time(trials, || smin(ctx, &a, &b))?;
    rows.push(BenchRow { operation: "SMin".into(), modulus_bits: bits, m: None, path_len: Some(4), trials, mean_ms });

    let psi = encrypt_sequence(&d.pp, d.hospital.public(), &['G', 'C', 'T'], &mut rng)?;
    let phi = encrypt_sequence(&d.pp, d.patient.public(), &['G', 'G', 'C'], &mut rng)?;
    let mean_ms = time(trials, || pgene_match(ctx, &psi, &phi, 1, MatchMode::Snapshot))?;
    rows.push(BenchRow { operation: "P-Gene".into(), modulus_bits: bits, m: Some(3), path_len: None, trials, mean_ms });
    Ok(())
}

/// A chain q₀ → … → q_T whose states carry `preds` range predicates each.
fn chain_model(t: usize, preds: usize) -> WeightedNfaModel {
    let fields: Vec<String> = (0..preds).map(|f| format!("v{f}")).collect();
    WeightedNfaModel {
        n_states: t + 1,
        accept: BTreeSet::from([t]),
        alphabet: vec!["step".into()],
        transitions: (0..t)
            .map(|i| Transition { from: i, to: i + 1, symbol: Symbol::Keyword("step".into()), weight: 1 })
            .collect(),
        descriptors: (0..=t)
            .map(|_| fields.iter().map(|f| Predicate::Range { field: f.clone(), lo: 10, hi: 20 }).collect())
            .collect(),
        scale_factors: BTreeMap::new(),
    }
}

fn tpw_rows(d: &Deployment, ctx: &mut CpContext, cfg: &BenchConfig, rows: &mut Vec<BenchRow>) -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for &t in &cfg.path_lens {
        let model = chain_model(t, cfg.predicates);
        let enc = encrypt_model(&d.pp, d.hospital.public(), &model, &mut rng)?;
        let tps = tpt(&build_transition_arrays(&enc), &enc.labels, &enc.accept, 1, t + 1);
        for &m in &cfg.query_lens {
            let query: Vec<PatientState> = (0..m)
                .map(|_| (0..cfg.predicates).fold(PatientState::default(), |s, f| s.number(&format!("v{f}"), 15)))
                .collect();
            let q = encrypt_query(&d.pp, d.patient.public(), &model, &query, &mut rng)?;
            let mean_ms = time(cfg.trials, || procedure_weight(ctx, 1000, &q, &tps[0], &enc.descriptors))?;
            rows.push(BenchRow {
                operation: "TPW".into(),
                modulus_bits: d.pp.modulus_bits(),
                m: Some(m),
                path_len: Some(t),
                trials: cfg.trials,
                mean_ms,
            });
        }
    }
    Ok(())
}

/// Pairs of rows that break monotone growth: each protocol in L(N), and
/// TPW in m at a fixed path length.
pub fn monotonicity_violations(rows: &[BenchRow]) -> Vec<String> {
    let mut out = Vec::new();
    let mut series: BTreeMap<(String, Option<usize>), Vec<(u64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.operation != "TPW") {
        series.entry((r.operation.clone(), r.m)).or_default().push((r.modulus_bits, r.mean_ms));
    }
    for r in rows.iter().filter(|r| r.operation == "TPW") {
        series.entry(("TPW".into(), r.path_len)).or_default().push((r.m.unwrap_or(0) as u64, r.mean_ms));
    }
    for ((op, tag), mut pts) in series {
        pts.sort_by_key(|p| p.0);
        for w in pts.windows(2) {
            if w[1].1 <= w[0].1 {
                out.push(format!("{op} {tag:?}: {:.3} ms at {} ≤ {:.3} ms at {}", w[1].1, w[1].0, w[0].1, w[0].0));
            }
        }
    }
    out
}

pub fn to_table(rows: &[BenchRow]) -> String {
    let dash = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
    let mut s = format!("{:<8} {:>6} {:>4} {:>5} {:>7} {:>12}\n", "op", "L(N)", "m", "len", "trials", "mean_ms");
    for r in rows {
        s += &format!(
            "{:<8} {:>6} {:>4} {:>5} {:>7} {:>12.3}\n",
            r.operation,
            r.modulus_bits,
            dash(r.m),
            dash(r.path_len),
            r.trials,
            r.mean_ms
        );
    }
    s
}

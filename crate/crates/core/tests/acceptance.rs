//! Acceptance harness: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use pmed_core::bench::{monotonicity_violations, run_grid, BenchConfig};
use pmed_core::deploy::Deployment;
use pmed_core::model::fixtures::{fig3_model, fig3_query};
use pmed_core::model::{build_transition_arrays, encrypt_model, encrypt_query, TransitionArrays};
use pmed_core::net::tcp::{connect_cp, serve_csp};
use pmed_core::net::{Channel, InProcess, Recording};
use pmed_core::oracle::{levenshtein, plain_accept_row, plain_compare, plain_paths, plain_pgene, random_model};
use pmed_core::pctd::{self, encrypt, encrypt_u64, weak_decrypt, Ciphertext};
use pmed_core::pgene::{dna_codes, encrypt_sequence, pgene_match_traced, MatchMode};
use pmed_core::pipeline::{bps_k_traced, recommend, recover_result, smin, tpt, tpw, Codebook, ExpandedTreatmentProcedure, PipelineParams};
use pmed_core::protocols::{compare, sad, set_eq, smd, src_range, sut_neq, ComparisonMode, CpContext, Stats};

// Pinned limits.
const PCTD_SMALL_SAMPLES: usize = 1000;
const PCTD_LARGE_SAMPLES: usize = 20;
const PCTD_SPLITS: usize = 100;
const PCTD_BUDGET: Duration = Duration::from_secs(60);
const PROTOCOL_SAMPLES: usize = 200;
const PROTOCOL_BUDGET: Duration = Duration::from_secs(120);
const FIG3_SMALL_BUDGET: Duration = Duration::from_secs(5 * 60);
const FIG3_LARGE_BUDGET: Duration = Duration::from_secs(90 * 60);
const SMIN_PAIRS: usize = 100;
const TPT_MODELS: usize = 100;
const PGENE_INSTANCES: usize = 50;
const CONCURRENT_SESSIONS: u64 = 8;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, budget: Duration, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    check(t <= budget, || format!("{what} took {t:.1?}, budget {budget:?}"))
}

/// Decrypts with whichever client key the ciphertext is under.
fn opener(d: &Deployment) -> impl Fn(&Ciphertext) -> BigUint + '_ {
    move |c| {
        let kp = [&d.hospital, &d.patient, &d.sigma].into_iter().find(|k| k.public().id() == c.key).unwrap();
        weak_decrypt(&d.pp, kp, c).unwrap()
    }
}

fn c1_pctd() -> Outcome {
    let start = Instant::now();
    for (kappa, samples) in [(32, PCTD_SMALL_SAMPLES), (512, PCTD_LARGE_SAMPLES)] {
        let mut rng = ChaCha20Rng::seed_from_u64(1000 + kappa as u64);
        let (pp, mk, _) = pctd::keygen(kappa, &mut rng);
        let user = pctd::UserKeyPair::generate(&pp, &mut rng);
        let (cp, csp) = pctd::split_master(&pp, &mk, &mut rng);
        let n = pp.n();
        for _ in 0..samples {
            let (a, b, r) = (rng.gen_biguint_below(n), rng.gen_biguint_below(n), rng.gen_biguint_below(n));
            let ca = encrypt(&pp, user.public(), &a, &mut rng).unwrap();
            let cb = encrypt(&pp, user.public(), &b, &mut rng).unwrap();
            let half = pctd::partial_decrypt_1(&pp, &cp, &ca);
            check(weak_decrypt(&pp, &user, &ca).unwrap() == a, || format!("κ={kappa}: weak decryption"))?;
            check(pctd::strong_decrypt(&pp, &mk, &ca).unwrap() == a, || format!("κ={kappa}: strong decryption"))?;
            check(pctd::partial_decrypt_2(&pp, &csp, &ca, &half).unwrap() == a, || format!("κ={kappa}: PD1/PD2"))?;
            let sum = weak_decrypt(&pp, &user, &pctd::hom_add(&pp, &ca, &cb).unwrap()).unwrap();
            check(sum == (&a + &b) % n, || format!("κ={kappa}: homomorphic add"))?;
            let prod = weak_decrypt(&pp, &user, &pctd::hom_scale(&pp, &ca, &r)).unwrap();
            check(prod == &a * &r % n, || format!("κ={kappa}: homomorphic scale"))?;
        }
        if kappa == 32 {
            for _ in 0..PCTD_SPLITS {
                let (l1, l2) = pctd::split_master(&pp, &mk, &mut rng);
                let s = l1.share() + l2.share();
                check((&s % mk.lambda()).is_zero() && (&s % pp.n_squared()).is_one(), || "split congruence".into())?;
            }
        }
    }
    within(start, PCTD_BUDGET, "PCTD suite")?;
    Ok(format!("{PCTD_SMALL_SAMPLES} @κ=32, {PCTD_LARGE_SAMPLES} @κ=512, {PCTD_SPLITS} splits in {:.1?}", start.elapsed()))
}

fn c2_protocols() -> Outcome {
    let start = Instant::now();
    let d = Deployment::generate(32, 2002).unwrap();
    let open = opener(&d);
    let (mut ctx, _) = d.inproc(2003);
    let mut rng = ChaCha20Rng::seed_from_u64(2004);
    let bound = 1u64 << d.pp.operand_bits();
    let enc = |rng: &mut ChaCha20Rng, v: u64, hospital: bool| {
        let pk = if hospital { d.hospital.public() } else { d.patient.public() };
        encrypt_u64(&d.pp, pk, v, rng).unwrap()
    };
    let modes = [ComparisonMode::Ge, ComparisonMode::Le, ComparisonMode::Gt, ComparisonMode::Lt];
    let bit = |b: bool| BigUint::from(b as u8);
    let mut checks = 0usize;
    for i in 0..PROTOCOL_SAMPLES {
        // every fourth sample probes the boundary x = y or x = y ± 1
        let x = rng.gen_range(0..bound);
        let y = if i % 4 == 0 { (x + rng.gen_range(0..3)).saturating_sub(1).min(bound - 1) } else { rng.gen_range(0..bound) };
        let small = (x % 32, y % 32, rng.gen_range(0..32u64));
        let (cx, cy) = (enc(&mut rng, x, false), enc(&mut rng, y, true));
        check(open(&sad(&mut ctx, &cx, &cy).unwrap()) == BigUint::from(x + y), || format!("SAD {x} {y}"))?;
        check(open(&smd(&mut ctx, &cx, &cy).unwrap()) == BigUint::from(x * y), || format!("SMD {x} {y}"))?;
        for coin in [false, true] {
            ctx.debug().set_coin(Some(coin));
            for mode in modes {
                let got = open(&compare(&mut ctx, mode, &cx, &cy).unwrap());
                check(got == bit(plain_compare(mode, x, y)), || format!("{mode:?} {x} {y} s={coin}"))?;
                checks += 1;
            }
        }
        ctx.debug().set_coin(None);
        let (a, b, c) = small;
        let (ca, cb, cc) = (enc(&mut rng, a, false), enc(&mut rng, b, true), enc(&mut rng, c, true));
        check(open(&set_eq(&mut ctx, &ca, &cb).unwrap()) == bit(a == b), || format!("SET {a} {b}"))?;
        check(open(&sut_neq(&mut ctx, &ca, &cb).unwrap()) == bit(a != b), || format!("SUT {a} {b}"))?;
        let (lo, hi) = (b.min(c), b.max(c));
        let (clo, chi) = if b <= c { (&cb, &cc) } else { (&cc, &cb) };
        check(
            open(&src_range(&mut ctx, &ca, clo, chi).unwrap()) == bit(lo <= a && a <= hi),
            || format!("SRC {a} in [{lo}, {hi}]"),
        )?;
        checks += 5;
    }
    within(start, PROTOCOL_BUDGET, "protocol suite")?;
    Ok(format!("{PROTOCOL_SAMPLES} inputs per protocol, {checks} checks in {:.1?}", start.elapsed()))
}

fn listed_procedures() -> Vec<Vec<usize>> {
    vec![
        vec![0, 1, 3, 3, 4, 6],
        vec![0, 1, 3, 3, 4, 7],
        vec![0, 1, 3, 3, 6],
        vec![0, 1, 3, 4, 1, 3, 4, 6],
        vec![0, 1, 3, 4, 1, 3, 4, 7],
        vec![0, 1, 3, 4, 1, 3, 6],
        vec![0, 1, 3, 4, 6],
        vec![0, 1, 3, 4, 7],
        vec![0, 1, 3, 6],
        vec![0, 2, 5, 5, 7],
        vec![0, 2, 5, 7],
    ]
}

fn fig3_at(kappa: u32) -> Result<(), String> {
    let file = fig3_model();
    let m = &file.model;
    let w = |a: usize, b: usize| m.transition(a, b).unwrap().weight;
    check(w(4, 6) == 1 && w(4, 7) == 100, || "fixture w10/w11".into())?;
    check(w(4, 1) + w(1, 3) + w(3, 4) + w(4, 6) == 10, || "fixture w4+w3+w7+w10".into())?;
    check(w(4, 1) + w(1, 3) + w(3, 6) == 5, || "fixture w4+w3+w9".into())?;

    let d = Deployment::generate(kappa, 3000 + kappa as u64).map_err(|e| e.to_string())?;
    let params = PipelineParams { mvisit: 2, mstate: 8, mweight: 10000, k: 3 };
    if kappa >= 128 {
        params.validate(&d.pp, m).map_err(|e| e.to_string())?;
    }
    let open = opener(&d);
    let mut rng = ChaCha20Rng::seed_from_u64(kappa as u64);
    let model = encrypt_model(&d.pp, d.hospital.public(), m, &mut rng).unwrap();
    let query = encrypt_query(&d.pp, d.patient.public(), m, &fig3_query(), &mut rng).unwrap();

    let tps = tpt(&build_transition_arrays(&model), &model.labels, &model.accept, 2, 8);
    let mut got: Vec<Vec<usize>> = tps.iter().map(|t| t.states.clone()).collect();
    let mut want = listed_procedures();
    got.sort();
    want.sort();
    check(got == want, || format!("κ={kappa}: TPT gave {} procedures, not the listed 11", got.len()))?;

    let (mut ctx, _) = d.inproc(kappa as u64);
    let wtps = tpw(&mut ctx, 10000, &query, &tps, &model.descriptors).unwrap();
    let listed = listed_procedures();
    let mut by_listing = vec![0u64; 11];
    for wtp in &wtps {
        let idx = listed.iter().position(|p| *p == wtp.states).unwrap();
        by_listing[idx] = u64::try_from(open(&wtp.weight)).unwrap();
    }
    let expect = [10000, 10000, 10000, 10, 109, 5, 1, 100, 10000, 10000, 10000];
    check(by_listing == expect, || format!("κ={kappa}: TPW weights {by_listing:?}"))?;

    let picked = recommend(&mut ctx, &model, &query, &params).unwrap();
    let book = Codebook::new(&d.pp, &file);
    let mut ranking = Vec::new();
    for e in &picked {
        let r = recover_result(&d.pp, &d.sigma, e, &book).unwrap();
        let no = listed.iter().position(|p| *p == r.states).map(|i| i + 1);
        ranking.push((no, u64::try_from(r.weight).unwrap()));
    }
    let expect = vec![(Some(7), 1), (Some(6), 5), (Some(4), 10)];
    check(ranking == expect, || format!("κ={kappa}: BPS-3 gave {ranking:?}"))
}

fn c3_fig3() -> Outcome {
    let start = Instant::now();
    fig3_at(32)?;
    within(start, FIG3_SMALL_BUDGET, "κ=32 scenario")?;
    let small = start.elapsed();
    let start = Instant::now();
    fig3_at(512)?;
    within(start, FIG3_LARGE_BUDGET, "κ=512 scenario")?;
    Ok(format!("11 procedures, weights and top-3 (7, 6, 4) exact; κ=32 in {small:.1?}, κ=512 in {:.1?}", start.elapsed()))
}

fn etps(d: &Deployment, rng: &mut ChaCha20Rng, weights: &[u64], len: usize) -> Vec<ExpandedTreatmentProcedure> {
    weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let pk = d.hospital.public();
            ExpandedTreatmentProcedure {
                labels: (0..len).map(|j| encrypt_u64(&d.pp, pk, (16 * i + j) as u64, rng).unwrap()).collect(),
                symbols: (1..len).map(|j| encrypt_u64(&d.pp, pk, (128 + 16 * i + j) as u64, rng).unwrap()).collect(),
                weight: encrypt_u64(&d.pp, d.sigma.public(), w, rng).unwrap(),
            }
        })
        .collect()
}

fn c4_worked_selection() -> Outcome {
    let d = Deployment::generate(32, 4000).unwrap();
    let open = opener(&d);
    let mut rng = ChaCha20Rng::seed_from_u64(4001);
    let list = etps(&d, &mut rng, &[15, 8, 17, 5], 3);
    let (mut ctx, _) = d.inproc(4002);
    let (picked, rounds) = bps_k_traced(&mut ctx, &list, 2, 100).unwrap();
    let rounds: Vec<Vec<BigUint>> = rounds.iter().map(|r| r.iter().map(&open).collect()).collect();
    let expect: Vec<Vec<BigUint>> =
        [[15u32, 8, 17, 500], [15, 800, 17, 500]].iter().map(|r| r.iter().map(|&v| v.into()).collect()).collect();
    check(rounds == expect, || format!("round weights {rounds:?}"))?;
    let which: Vec<BigUint> = picked.iter().map(|e| open(&e.labels[1]) / 16u8).collect();
    check(which == vec![BigUint::from(3u8), BigUint::one()], || format!("selected {which:?}"))?;
    Ok("selections (ETP4, ETP2); rounds (15, 8, 17, 500), (15, 800, 17, 500)".into())
}

fn decode(d: &Deployment, e: &ExpandedTreatmentProcedure) -> Vec<BigUint> {
    let open = opener(d);
    e.labels.iter().chain(&e.symbols).chain([&e.weight]).map(open).collect()
}

fn c5_smin() -> Outcome {
    let d = Deployment::generate(32, 5000).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5001);
    let (mut ctx, _) = d.inproc(5002);
    let mut ties = 0;
    for i in 0..SMIN_PAIRS {
        let w1 = rng.gen_range(0..500u64);
        let w2 = if i % 5 == 0 { w1 } else { rng.gen_range(0..500) };
        ties += usize::from(w1 == w2);
        let pair = etps(&d, &mut rng, &[w1, w2], 4);
        let mut outs = Vec::new();
        for coin in [false, true] {
            ctx.debug().set_coin(Some(coin));
            outs.push(decode(&d, &smin(&mut ctx, &pair[0], &pair[1]).unwrap()));
        }
        ctx.debug().set_coin(None);
        check(outs[0] == outs[1], || format!("coin changed the output for ({w1}, {w2})"))?;
        let mut expect = decode(&d, &pair[usize::from(w1 >= w2)]);
        // the start label is shared by every procedure and taken from the first operand
        expect[0] = decode(&d, &pair[0])[0].clone();
        check(outs[0] == expect, || format!("wrong minimum for ({w1}, {w2})"))?;
    }

    let list = etps(&d, &mut rng, &[9, 4, 4, 12, 7], 3);
    let mut results = Vec::new();
    for schedule in [[0usize, 1, 2, 3, 4], [4, 2, 0, 3, 1]] {
        ctx.debug().push_permutations(vec![schedule.to_vec(); 3]);
        let (picked, _) = bps_k_traced(&mut ctx, &list, 3, 50).unwrap();
        results.push(picked.iter().map(|e| decode(&d, e)).collect::<Vec<_>>());
    }
    check(results[0] == results[1], || "BPS-k output depends on the permutation".into())?;
    Ok(format!("{SMIN_PAIRS} pairs coin-invariant ({ties} ties → second), BPS-3 identical under 2 schedules"))
}

fn c6_tpt() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6000);
    let (mut loops, mut self_loops, mut total) = (0, 0, 0);
    for i in 0..TPT_MODELS {
        let n = rng.gen_range(2..=8);
        let density = rng.gen_range(0.15..0.45);
        let m = random_model(&mut rng, n, density);
        let (mvisit, mstate) = (1 + i % 2, rng.gen_range(2..=8));
        let labels: Vec<u64> = (0..n as u64).collect();
        let got: Vec<Vec<usize>> =
            tpt(&TransitionArrays::plain(&m), &labels, &m.accept, mvisit, mstate).into_iter().map(|t| t.states).collect();
        let want = plain_paths(&m, mvisit, mstate);
        check(got == want, || format!("model {i}: {} vs {} paths", got.len(), want.len()))?;
        self_loops += usize::from(m.transitions.iter().any(|t| t.from == t.to));
        loops += usize::from(m.transitions.iter().any(|t| m.transition(t.to, t.from).is_some() && t.from != t.to));
        total += want.len();
    }
    check(self_loops > 0 && loops > 0, || "generator produced no loops".into())?;
    Ok(format!("{TPT_MODELS} models, {total} paths; {self_loops} with self-loops, {loops} with 2-cycles"))
}

fn c7_pgene() -> Outcome {
    let d = Deployment::generate(32, 7000).unwrap();
    let open = opener(&d);
    let codes = dna_codes(&d.pp).unwrap();
    let code = |s: &[char]| s.iter().map(|c| codes[&c.to_string()].clone()).collect::<Vec<_>>();
    let mut rng = ChaCha20Rng::seed_from_u64(7001);
    let (mut ctx, _) = d.inproc(7002);
    let dna = |rng: &mut ChaCha20Rng, n: usize| (0..n).map(|_| ['A', 'C', 'G', 'T'][rng.gen_range(0..4)]).collect::<Vec<_>>();
    let mut run = |ctx: &mut CpContext, psi: &[char], phi: &[char], mu: usize, mode: MatchMode| {
        let a = encrypt_sequence(&d.pp, d.hospital.public(), psi, &mut rng).unwrap();
        let b = encrypt_sequence(&d.pp, d.patient.public(), phi, &mut rng).unwrap();
        let before = Stats::get(&ctx.stats().sut);
        let grids = pgene_match_traced(ctx, &a, &b, mu, mode).unwrap();
        let calls = Stats::get(&ctx.stats().sut) - before;
        let grids: Vec<Vec<Vec<BigUint>>> =
            grids.iter().map(|g| g.iter().map(|r| r.iter().map(&open).collect()).collect()).collect();
        (grids, calls)
    };

    let mut gen = ChaCha20Rng::seed_from_u64(7003);
    let mut sut_ok = 0;
    for i in 0..PGENE_INSTANCES {
        let m: usize = gen.gen_range(1..=8);
        let mu: usize = gen.gen_range(0..=2);
        let n = gen.gen_range(m.saturating_sub(mu).max(1)..=m + mu);
        let (psi, phi) = (dna(&mut gen, m), dna(&mut gen, n));
        let (grids, calls) = run(&mut ctx, &psi, &phi, mu, MatchMode::Verbatim);
        check(grids == plain_pgene(MatchMode::Verbatim, &code(&psi), &code(&phi), mu, d.pp.n()), || {
            format!("(a) verbatim instance {i} differs")
        })?;
        check(calls == (n * (mu + 1) * m) as u64, || format!("(d) {calls} SUT calls for n={n} μ={mu} m={m}"))?;

        // (c): bias half the sequences towards near matches
        let phi = if i % 2 == 0 { mutate(&mut gen, &psi, mu) } else { phi };
        let n = phi.len();
        let (grids, calls) = run(&mut ctx, &psi, &phi, mu, MatchMode::Snapshot);
        let dist = levenshtein(&psi, &phi);
        let row = plain_accept_row(grids.last().unwrap());
        check(row == (dist <= mu).then_some(dist), || format!("(c) instance {i}: row {row:?}, distance {dist}"))?;
        check(calls == (n * (mu + 1) * m) as u64, || format!("(d) snapshot SUT count {calls}"))?;
        sut_ok += 2;
    }

    let gct: Vec<char> = "GCT".chars().collect();
    let ggcat: Vec<char> = "GGCAT".chars().collect();
    let (g2, _) = run(&mut ctx, &gct, &ggcat, 2, MatchMode::Snapshot);
    let (g1, _) = run(&mut ctx, &gct, &ggcat, 1, MatchMode::Snapshot);
    check(plain_accept_row(g2.last().unwrap()) == Some(2), || "(b) GCT/GGCAT not accepted at row 2".into())?;
    check(plain_accept_row(g1.last().unwrap()).is_none(), || "(b) GCT/GGCAT accepted at μ=1".into())?;
    Ok(format!("(a) {PGENE_INSTANCES} verbatim grids exact, (b) GCT/GGCAT row 2, (c) {PGENE_INSTANCES} edit distances, (d) {sut_ok} SUT counts"))
}

/// Apply up to `k` random edits, keeping the sequence non-empty.
fn mutate(rng: &mut ChaCha20Rng, s: &[char], k: usize) -> Vec<char> {
    let mut out = s.to_vec();
    for _ in 0..rng.gen_range(0..=k) {
        let base = ['A', 'C', 'G', 'T'][rng.gen_range(0..4)];
        let at = rng.gen_range(0..=out.len());
        match rng.gen_range(0..3) {
            0 => out.insert(at, base),
            1 if out.len() > 1 => {
                out.remove(at.min(out.len() - 1));
            }
            _ => {
                let at = at.min(out.len() - 1);
                out[at] = base;
            }
        }
    }
    out
}

fn c8_transport() -> Outcome {
    let d = Deployment::generate(32, 8000).unwrap();
    let open = opener(&d);
    let workload = |ctx: &mut CpContext| -> Vec<BigUint> {
        let x = encrypt_u64(&d.pp, d.patient.public(), 321, ctx.rng()).unwrap();
        let y = encrypt_u64(&d.pp, d.hospital.public(), 123, ctx.rng()).unwrap();
        vec![
            open(&sad(ctx, &x, &y).unwrap()),
            open(&smd(ctx, &x, &y).unwrap()),
            open(&compare(ctx, ComparisonMode::Ge, &x, &y).unwrap()),
            open(&set_eq(ctx, &x, &y).unwrap()),
        ]
    };
    let local = Arc::new(Recording::new(InProcess::new(Arc::new(d.responder()))));
    let out_a = workload(&mut d.context(local.clone(), 8001));
    let server = serve_csp("127.0.0.1:0", Arc::new(d.responder())).unwrap();
    let remote = Arc::new(Recording::new(connect_cp(server.local_addr()).unwrap()));
    let out_b = workload(&mut d.context(remote.clone(), 8001));
    check(out_a == out_b, || "results differ between transports".into())?;
    let frames = local.transcript().frame_count();
    check(local.transcript().canonical() == remote.transcript().canonical(), || "transcripts differ".into())?;

    let link: Arc<dyn Channel> = Arc::new(connect_cp(server.local_addr()).unwrap());
    let mut root = d.context(link, 8002);
    let handles: Vec<_> = (0..CONCURRENT_SESSIONS)
        .map(|i| {
            let mut ctx = root.fork("c8");
            let pp = d.pp.clone();
            let (pa, pb) = (d.patient.public().clone(), d.hospital.public().clone());
            std::thread::spawn(move || {
                let x = encrypt_u64(&pp, &pa, i + 1, ctx.rng()).unwrap();
                let y = encrypt_u64(&pp, &pb, 10 * i, ctx.rng()).unwrap();
                (smd(&mut ctx, &x, &y).unwrap(), compare(&mut ctx, ComparisonMode::Lt, &x, &y).unwrap())
            })
        })
        .collect();
    for (i, h) in handles.into_iter().enumerate() {
        let (p, lt) = h.join().map_err(|_| format!("session {i} panicked"))?;
        let i = i as u64;
        check(open(&p) == BigUint::from((i + 1) * 10 * i), || format!("session {i} product"))?;
        check(open(&lt) == BigUint::from(u8::from(i + 1 < 10 * i)), || format!("session {i} comparison"))?;
    }
    Ok(format!("{frames} frames byte-identical; {CONCURRENT_SESSIONS} concurrent TCP sessions correct"))
}

fn c9_bench() -> Outcome {
    let cfg = BenchConfig::default();
    let rows = run_grid(&cfg).map_err(|e| e.to_string())?;
    let bits: std::collections::BTreeSet<u64> = rows.iter().map(|r| r.modulus_bits).collect();
    check(bits.contains(&512) && bits.contains(&1024), || format!("grid covers L(N) {bits:?}"))?;
    for op in ["SAD", "SMD", "SGE", "SLE", "SGT", "SLT", "SET", "SUT", "SRC", "SMin", "P-Gene"] {
        check(rows.iter().filter(|r| r.operation == op).count() == cfg.kappas.len(), || format!("missing rows for {op}"))?;
    }
    let tpw = rows.iter().filter(|r| r.operation == "TPW").count();
    check(tpw == cfg.query_lens.len() * cfg.path_lens.len(), || "TPW grid incomplete".into())?;
    let bad = monotonicity_violations(&rows);
    check(bad.is_empty(), || bad.join("; "))?;
    Ok(format!("{} rows, monotone in L(N) and m", rows.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("PCTD round trips, homomorphisms, key split", c1_pctd),
        ("protocols agree with the plaintext oracle", c2_protocols),
        ("diabetes scenario end to end", c3_fig3),
        ("worked top-2 selection", c4_worked_selection),
        ("SMin coin/tie/permutation invariance", c5_smin),
        ("TPT equals brute-force enumeration", c6_tpt),
        ("P-Gene modes, edit distance, SUT count", c7_pgene),
        ("transport transcripts and concurrency", c8_transport),
        ("benchmark grid monotonicity", c9_bench),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let no = i + 1;
        if only.is_some_and(|o| o != no) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("criterion {no}: PASS  {name}: {detail} [{:.1?}]", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {no}: FAIL  {name}: {why} [{:.1?}]", start.elapsed());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

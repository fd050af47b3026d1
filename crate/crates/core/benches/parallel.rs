use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use pmed_core::deploy::Deployment;
use pmed_core::model::fixtures::{fig3_model, fig3_query};
use pmed_core::model::{build_transition_arrays, encrypt_model, encrypt_query};
use pmed_core::par;
use pmed_core::pipeline::{bps_k, expand, tpt, tpw};

fn fig3_pipeline(c: &mut Criterion) {
    let d = Deployment::generate(64, 11).unwrap();
    let file = fig3_model();
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let model = encrypt_model(&d.pp, d.hospital.public(), &file.model, &mut rng).unwrap();
    let query = encrypt_query(&d.pp, d.patient.public(), &file.model, &fig3_query(), &mut rng).unwrap();
    let tps = tpt(&build_transition_arrays(&model), &model.labels, &model.accept, 2, 8);

    let mut group = c.benchmark_group("fig3");
    group.sample_size(10);
    for (name, sequential) in [("parallel", false), ("sequential", true)] {
        par::set_sequential(sequential);
        group.bench_function(BenchmarkId::new("tpw", name), |b| {
            let (mut ctx, _) = d.inproc(13);
            b.iter(|| tpw(&mut ctx, 200, &query, &tps, &model.descriptors).unwrap())
        });
        let (mut ctx, _) = d.inproc(14);
        let wtps = tpw(&mut ctx, 200, &query, &tps, &model.descriptors).unwrap();
        let etps = expand(&d.pp, d.hospital.public(), &wtps, 8, &mut rng).unwrap();
        group.bench_function(BenchmarkId::new("bps_3", name), |b| {
            b.iter(|| bps_k(&mut ctx, &etps, 3, 200).unwrap())
        });
    }
    par::set_sequential(false);
    group.finish();
}

criterion_group!(benches, fig3_pipeline);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use frab_noma::analysis::composite_cdf_gc;
use frab_noma::channel::{gen_rayleigh, ModelParams};
use frab_noma::frab::effective_gain;
use frab_noma::noma::run_trial;
use frab_noma::{ChannelModel, ChannelRealization, Codebook, PowerAllocation, RatePair};

fn quantize_and_gain(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = gen_rayleigh(64, 10.0, 3.0, &mut rng).unwrap();
    for nq in [2, 16] {
        let cb = Codebook::new(nq).unwrap();
        c.bench_function(&format!("quantize M=64 nq={nq}"), |b| b.iter(|| cb.quantize(black_box(&h))));
    }
    let f = Codebook::new(2).unwrap().quantize(&h);
    c.bench_function("effective_gain M=64", |b| b.iter(|| effective_gain(black_box(&h), black_box(&f))));
}

fn trial(c: &mut Criterion) {
    let params = ModelParams {
        pathloss_exponent: 3.0,
        r1: 40.0,
        ry: 40.0,
        model: ChannelModel::Rayleigh,
    };
    let cb = Codebook::new(2).unwrap();
    let pa = PowerAllocation::default();
    let rates = RatePair::new(1.0, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ch = ChannelRealization::draw(&params, 30, 3, 300, &mut rng).unwrap();
    c.bench_function("run_trial M=30 S1=3 S2=300", |b| {
        b.iter(|| run_trial(black_box(&ch), &cb, &pa, &rates, 1e5))
    });
    c.bench_function("draw channels M=30 S1=3 S2=300", |b| {
        b.iter(|| ChannelRealization::draw(&params, 30, 3, 300, &mut rng))
    });
}

fn closed_form(c: &mut Criterion) {
    c.bench_function("composite_cdf_gc N=20", |b| {
        b.iter(|| composite_cdf_gc(black_box(1e-4), 4, 3.0, 40.0, 20))
    });
}

criterion_group!(benches, quantize_and_gain, trial, closed_form);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use swstream::codec::{decode_block, encode_stream, DEFAULT_CAP};
use swstream::info_measures::profile;
use swstream::source_model::{make_asymmetric, make_dsbs, sample_blocks};
use swstream::{BinningCode, GallagerCurves, Schedule};

fn measures(c: &mut Criterion) {
    let pmf = make_asymmetric(0.1).unwrap();
    c.bench_function("profile", |b| b.iter(|| profile(black_box(&pmf))));
    let p = profile(&pmf);
    let curves = GallagerCurves::new(&pmf);
    c.bench_function("min_both", |b| {
        b.iter(|| curves.min_both(black_box(p.h_x_given_y + 0.1), black_box(p.h_y + 0.1)))
    });
}

fn decoder(c: &mut Criterion) {
    let sched = Schedule::new(5, 2, 2).unwrap();
    let pmf = make_dsbs(0.05).unwrap();
    let s = sample_blocks(&pmf, 3, 8, 7).unwrap();
    let code = BinningCode::new(11, 7, 7, 3, 2, 2, sched).unwrap();
    let cw = encode_stream(&code, &s, 8).unwrap();
    let mut g = c.benchmark_group("decode_block");
    g.sample_size(20);
    for k in [1usize, 4, 6] {
        let tk = sched.decode_time(k);
        g.bench_function(format!("k={k}"), |b| {
            b.iter(|| decode_block(&code, black_box(&cw[..tk]), k, DEFAULT_CAP).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, measures, decoder);
criterion_main!(benches);

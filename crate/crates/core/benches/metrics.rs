//! Criterion benches for the hot paths.
//!
//! Run with the default features for the rayon path and with
//! `--no-default-features` for the sequential fallback; saving criterion
//! baselines (`--save-baseline par` / `--save-baseline seq`) makes the
//! comparison explicit:
//!
//! ```text
//! cargo bench -p twostepqa -- --save-baseline par
//! cargo bench -p twostepqa --no-default-features -- --save-baseline seq
//! cargo bench -p twostepqa -- --load-baseline par --baseline seq
//! ```

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use twostepqa::eval::{run_splits, MetricEval};
use twostepqa::fr::{ms_ssim, MsSsimConfig};
use twostepqa::nr::{feature_stats, niqe_features, niqe_score, NiqeModel, NiqeParams};
use twostepqa::synth;

fn bench_ms_ssim(c: &mut Criterion) {
    let reference = synth::scene(512, 512, 1);
    let distorted = synth::add_gaussian_noise(&reference, 8.0, 2);
    let cfg = MsSsimConfig::default();
    c.bench_function("ms_ssim_512", |b| {
        b.iter(|| ms_ssim(black_box(&reference), black_box(&distorted), &cfg).unwrap())
    });
}

fn bench_niqe(c: &mut Criterion) {
    let params = NiqeParams::default();
    let mut pooled = Vec::new();
    for seed in 0..30u64 {
        pooled.extend(niqe_features(&synth::scene(256, 256, seed), &params).unwrap());
    }
    let (mean, cov) = feature_stats(&pooled);
    let model = NiqeModel::new(params, mean, cov).unwrap();
    let img = synth::scene(512, 512, 99);
    c.bench_function("niqe_score_512", |b| {
        b.iter(|| niqe_score(black_box(&img), &model).unwrap())
    });
}

fn bench_batch_scoring(c: &mut Criterion) {
    let cfg = MsSsimConfig::default();
    let pairs: Vec<_> = (0..16u64)
        .map(|seed| {
            let reference = synth::scene(256, 256, seed);
            let distorted = synth::add_gaussian_noise(&reference, 12.0, seed + 100);
            (reference, distorted)
        })
        .collect();
    c.bench_function("batch_ms_ssim_16x256", |b| {
        b.iter(|| {
            let scores = twostepqa::par::map_slice(black_box(&pairs), |(r, d)| {
                ms_ssim(r, d, &cfg).unwrap()
            });
            black_box(scores)
        })
    });
}

fn bench_split_protocol(c: &mut Criterion) {
    use std::collections::BTreeMap;
    use twostepqa::eval::ScoredRecord;

    // fabricated scored dataset: the protocol itself is the workload
    let mut records = Vec::new();
    for content in 0..80 {
        for version in 0..4 {
            let mos = 95.0 - content as f64 - 12.0 * version as f64;
            let mut scores = BTreeMap::new();
            scores.insert("ms_ssim".into(), 1.0 - 0.01 * (content + version) as f64);
            scores.insert("niqe_ref".into(), (content % 37) as f64 + version as f64);
            records.push(ScoredRecord {
                content_id: format!("c{content}"),
                ref_path: format!("r{content}").into(),
                dst_path: format!("d{content}_{version}").into(),
                mos,
                scores,
            });
        }
    }
    let metrics = [
        MetricEval::column("ms_ssim", "ms_ssim", true),
        MetricEval::basic_two_step("two_step", "ms_ssim", "niqe_ref", 100.0),
    ];
    c.bench_function("run_splits_200x80", |b| {
        b.iter(|| run_splits(black_box(&records), &metrics, 200, 0.8, 1).unwrap())
    });
}

criterion_group!(
    benches,
    bench_ms_ssim,
    bench_niqe,
    bench_batch_scoring,
    bench_split_protocol
);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use ssplain_bench::{bench_image, bench_model};
use ssplain_core::baselines::{occlusion, OcclusionConfig};
use ssplain_core::ssplain::{
    explain, project_l0, project_l1, tv_subgradient, SsplainConfig, TopKRule,
};

fn model_kernels(c: &mut Criterion) {
    let model = bench_model();
    let image = bench_image();

    c.bench_function("forward_28x28", |b| {
        b.iter(|| model.forward(black_box(&image)).unwrap())
    });
    c.bench_function("input_gradient_28x28", |b| {
        b.iter(|| model.input_gradient(black_box(&image), 3).unwrap())
    });
}

fn projection_kernels(c: &mut Criterion) {
    let image = bench_image();
    let support = image.support();
    let alpha0 = support.count() / 4;

    c.bench_function("project_l0", |b| {
        b.iter(|| project_l0(black_box(&image), alpha0, &support, TopKRule::Magnitude).unwrap())
    });
    c.bench_function("project_l1", |b| {
        b.iter(|| project_l1(black_box(&image), 0.1 * image.norm_l1(), &support).unwrap())
    });
    c.bench_function("tv_subgradient", |b| {
        b.iter(|| tv_subgradient(black_box(&image)))
    });
}

fn explainer_kernels(c: &mut Criterion) {
    let model = bench_model();
    let image = bench_image();

    let mut group = c.benchmark_group("explainers");
    group.sample_size(10);
    group.bench_function("ssplain_20_iters", |b| {
        let config = SsplainConfig {
            target_mode: ssplain_core::ssplain::TargetMode::Supervised(3),
            ..SsplainConfig::mnist()
        };
       b.iter(|| explain(black_box(&model), black_box(&image), &config).unwrap())
    });
    group.bench_function("occlusion_1x1", |b| {
        b.iter(|| occlusion(black_box(&model), black_box(&image), 3, &OcclusionConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, model_kernels, projection_kernels, explainer_kernels);
criterion_main!(benches);

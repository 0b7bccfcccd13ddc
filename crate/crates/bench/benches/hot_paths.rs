//! Benchmarks of the per-step hot paths: the two-component loss graph with
//! its backward sweeps, the weight selection plus combination, and one Adam
//! update.

use awgan_bench::{random_batch, random_gradient_pair};
use awgan_core::autodiff::{Bindings, Graph};
use awgan_core::awweights::{aw_select, combine_direction, AwConfig, ScoreStats};
use awgan_core::losses::{append_fake_loss, append_real_loss, LossFamily};
use awgan_core::nn::{adam_step, flatten_gradient, Activation, AdamState, Direction, Mlp, ParamVector};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn toy_discriminator() -> Mlp {
    Mlp::init(
        &[2, 64, 64, 1],
        &[
            Activation::LeakyRelu(0.2),
            Activation::LeakyRelu(0.2),
            Activation::Linear,
        ],
        17,
    )
    .expect("valid sizes")
}

fn bench_loss_graphs(c: &mut Criterion) {
    let disc = toy_discriminator();
    let real = random_batch(64, 1);
    let fake = random_batch(64, 2);
    c.bench_function("disc_step_forward_backward_batch64", |b| {
        b.iter(|| {
            let mut total = ParamVector::zeros(disc.param_count());
            for (batch, is_real) in [(&real, true), (&fake, false)] {
                let mut graph = Graph::new();
                let input = graph.input(batch.shape());
                let handles = disc.build_graph(&mut graph, input, true).unwrap();
                let loss = if is_real {
                    append_real_loss(&mut graph, handles.output, LossFamily::Bce).unwrap()
                } else {
                    append_fake_loss(&mut graph, handles.output, LossFamily::Bce).unwrap()
                };
                let mut bindings = Bindings::new();
                bindings.set(input, batch.clone());
                disc.bind_params(&mut bindings, &handles);
                let eval = graph.forward(&bindings).unwrap();
                let grads = eval.backward(loss).unwrap();
                total = flatten_gradient(&grads, &handles);
            }
            black_box(total)
        })
    });
}

fn bench_weight_selection(c: &mut Criterion) {
    let pair = random_gradient_pair(4417, 3);
    let scores = ScoreStats {
        s_r: 0.42,
        s_f: 0.61,
        n: 64,
    };
    let cfg = AwConfig::default();
    c.bench_function("aw_select_and_combine_k4417", |b| {
        b.iter(|| {
            let w = aw_select(black_box(&pair), &scores, &cfg).unwrap();
            black_box(combine_direction(&pair, &w))
        })
    });
}

fn bench_adam(c: &mut Criterion) {
    let pair = random_gradient_pair(4417, 4);
    c.bench_function("adam_step_k4417", |b| {
        let mut params = ParamVector::zeros(4417);
        let mut state = AdamState::new(4417, 0.0, 0.999, 1e-8);
        b.iter(|| {
            adam_step(&mut params, &pair.g_r, &mut state, 1e-3, Direction::Descend).unwrap();
            black_box(params.as_slice()[0])
        })
    });
}

criterion_group!(benches, bench_loss_graphs, bench_weight_selection, bench_adam);
criterion_main!(benches);

//! Scratch probe for the counterfactual and expansion studies.

use awgan_core::diagnostics::score_gap_study;
use awgan_core::losses::LossFamily;
use awgan_core::trainer::{OptimizerKind, TrainConfig, WeightMode};
use awgan_core::verify::taylor_remainder;

fn main() {
    let what = std::env::args().nth(1).unwrap_or_else(|| "scoregap".into());
    match what.as_str() {
        "taylor-detail" => taylor_detail(),
        "taylor" => {
            for seed in [105, 1, 2, 3, 7, 11] {
                let r = taylor_remainder(seed);
                println!("taylor seed {seed}: {} ({})", r.detail, r.passed);
            }
        }
        _ => {
            for family in [LossFamily::Hinge, LossFamily::Bce] {
                for lr in [0.001, 0.0002] {
                    for opt in [OptimizerKind::Adam, OptimizerKind::Sgd] {
                        for seed in [1u64, 2, 3] {
                            let cfg = TrainConfig {
                                loss_family: family,
                                weight_mode: WeightMode::PlainSum,
                                lr_d: lr,
                                lr_g: lr,
                                optimizer: opt,
                                seed,
                                ..TrainConfig::default()
                            };
                            let table = score_gap_study(&cfg, 1, 400).expect("study");
                            let s = &table.epoch_summaries()[0];
                            let real_up = s.mean_real_after_aw > s.mean_real_after_plain;
                            let gap_up = s.mean_gap_after_aw > s.mean_gap_after_plain;
                            println!(
                                "{family:?} lr={lr} {opt:?} seed={seed}: real aw {:.4} vs plain {:.4} ({}) | gap aw {:.4} vs plain {:.4} ({})",
                                s.mean_real_after_aw,
                                s.mean_real_after_plain,
                                if real_up { "UP" } else { "down" },
                                s.mean_gap_after_aw,
                                s.mean_gap_after_plain,
                                if gap_up { "UP" } else { "down" },
                            );
                        }
                    }
                }
            }
        }
    }
}

fn taylor_detail() {
    use awgan_core::autodiff::{Array, Bindings, Graph};
    use awgan_core::awweights::{aw_select, combine_direction, AwConfig, GradientPair, ScoreStats};
    use awgan_core::losses::append_real_loss;
    use awgan_core::nn::{flatten_gradient, ParamVector};
    use awgan_core::trainer::Trainer;

    let cfg = TrainConfig {
        iterations: 300,
        batch_size: 64,
        loss_family: LossFamily::Bce,
        seed: 105,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(cfg.clone()).unwrap();
    for _ in 0..cfg.iterations {
        trainer.iteration().unwrap();
    }
    let real = trainer.sample_real();
    let fake = trainer.sample_fake().unwrap();
    let disc = trainer.disc().clone();

    let eval_loss = |flat: &ParamVector, batch: &Array| -> f64 {
        let mut model = disc.clone();
        model.set_from_flat(flat).unwrap();
        let mut graph = Graph::new();
        let input = graph.input(batch.shape());
        let handles = model.build_graph(&mut graph, input, true).unwrap();
        let loss = append_real_loss(&mut graph, handles.output, cfg.loss_family).unwrap();
        let mut bindings = Bindings::new();
        bindings.set(input, batch.clone());
        model.bind_params(&mut bindings, &handles);
        graph.forward(&bindings).unwrap().value(loss).scalar_value()
    };
    let gradient = |batch: &Array, is_real: bool| -> ParamVector {
        let mut graph = Graph::new();
        let input = graph.input(batch.shape());
        let handles = disc.build_graph(&mut graph, input, true).unwrap();
        let loss = if is_real {
            append_real_loss(&mut graph, handles.output, cfg.loss_family).unwrap()
        } else {
            awgan_core::losses::append_fake_loss(&mut graph, handles.output, cfg.loss_family).unwrap()
        };
        let mut bindings = Bindings::new();
        bindings.set(input, batch.clone());
        disc.bind_params(&mut bindings, &handles);
        let eval = graph.forward(&bindings).unwrap();
        flatten_gradient(&eval.backward(loss).unwrap(), &handles)
    };
    let g_r = gradient(&real, true);
    let g_f = gradient(&fake, false);
    let logits_r = disc.apply(&real).unwrap();
    let logits_f = disc.apply(&fake).unwrap();
    let scores = ScoreStats::from_logits(logits_r.data(), logits_f.data());
    let pair = GradientPair::new(g_r.clone(), g_f.clone()).unwrap();
    let aw_cfg = AwConfig { epsilon: 0.0, ..AwConfig::default() };
    let d_aw = combine_direction(&pair, &aw_select(&pair, &scores, &aw_cfg).unwrap());
    let d_sum = ParamVector(g_r.as_slice().iter().zip(g_f.as_slice()).map(|(a, b)| a + b).collect());

    for (name, d) in [("aw", &d_aw), ("g_r", &g_r), ("sum", &d_sum)] {
        let theta0 = disc.flatten();
        let l0 = eval_loss(&theta0, &real);
        let slope_dot: f64 = g_r.as_slice().iter().zip(d.as_slice()).map(|(a, b)| a * b).sum();
        let mut rems = Vec::new();
        for lam in [1e-2f64, 1e-3, 1e-4, 1e-5] {
            let shifted = ParamVector(
                theta0.as_slice().iter().zip(d.as_slice()).map(|(t, dd)| t + lam * dd).collect(),
            );
            let l = eval_loss(&shifted, &real);
            rems.push((lam, (l - l0 - lam * slope_dot).abs()));
        }
        print!("dir {name}: remainders ");
        for (lam, r) in &rems {
            print!("{lam:.0e}:{r:.3e} ");
        }
        let decade: Vec<f64> = rems
            .windows(2)
            .map(|w| ((w[0].1 / w[1].1).ln()) / ((w[0].0 / w[1].0).ln()))
            .collect();
        println!("decade slopes {decade:?}");
    }
}

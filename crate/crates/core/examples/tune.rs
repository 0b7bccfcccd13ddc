//! Scratch harness for sweeping ring-task hyperparameters.

use awgan_core::losses::LossFamily;
use awgan_core::nn::LrMode;
use awgan_core::trainer::{train, OptimizerKind, TrainConfig, WeightMode};
use std::time::Instant;

fn arg<T: std::str::FromStr>(args: &[String], i: usize, default: T) -> T {
    args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let iters: u64 = arg(&args, 1, 8000);
    let lr_g: f64 = arg(&args, 2, 0.001);
    let lr_d: f64 = arg(&args, 3, 0.001);
    let batch: usize = arg(&args, 4, 64);
    let beta1: f64 = arg(&args, 5, 0.0);
    let ratio: usize = arg(&args, 6, 1);
    let std: f64 = arg(&args, 7, 0.05);
    let seed_from: u64 = arg(&args, 8, 1);
    let seed_to: u64 = arg(&args, 9, 3);
    let which: String = args.get(10).cloned().unwrap_or_else(|| "both".into());
    let decay: bool = args.get(11).map(|s| s == "decay").unwrap_or(false);
    let sgd: bool = args.get(12).map(|s| s == "sgd").unwrap_or(false);
    let hinge: bool = args.get(13).map(|s| s == "hinge").unwrap_or(false);
    let epsilon: f64 = arg(&args, 14, 0.05);

    println!(
        "iters={iters} lr_g={lr_g} lr_d={lr_d} batch={batch} beta1={beta1} ratio={ratio} std={std} decay={decay} sgd={sgd} hinge={hinge}"
    );
    let modes: Vec<WeightMode> = match which.as_str() {
        "plain" => vec![WeightMode::PlainSum],
        "aw" => vec![WeightMode::AwNormalized],
        _ => vec![WeightMode::PlainSum, WeightMode::AwNormalized],
    };
    for mode in modes {
        for seed in seed_from..=seed_to {
            let mut cfg = TrainConfig {
                weight_mode: mode,
                iterations: iters,
                lr_d,
                lr_g,
                batch_size: batch,
                beta1,
                ratio,
                lr_mode: if decay {
                    LrMode::LinearDecay
                } else {
                    LrMode::Constant
                },
                optimizer: if sgd {
                    OptimizerKind::Sgd
                } else {
                    OptimizerKind::Adam
                },
                loss_family: if hinge {
                    LossFamily::Hinge
                } else {
                    LossFamily::Bce
                },
                seed,
                ..TrainConfig::default()
            };
            cfg.mixture.std = std;
            cfg.aw.epsilon = epsilon;
            let t0 = Instant::now();
            match train(cfg) {
                Ok(log) => {
                    let (cov, counts) = log.final_coverage().unwrap();
                    let tail: Vec<&awgan_core::trainer::StepRecord> =
                        log.records.iter().rev().take(500).collect();
                    let s_r: f64 = tail.iter().map(|r| r.s_r).sum::<f64>() / tail.len() as f64;
                    let s_f: f64 = tail.iter().map(|r| r.s_f).sum::<f64>() / tail.len() as f64;
                    let mut branch_counts = [0usize; 6];
                    for r in &log.records {
                        branch_counts[r.branch as usize] += 1;
                    }
                    println!(
                        "{mode:?} seed={seed} coverage={cov} counts={counts:?} s_r={s_r:.3} s_f={s_f:.3} branches={branch_counts:?} [{:.1?}]",
                        t0.elapsed()
                    );
                }
                Err(e) => println!("{mode:?} seed={seed} FAILED: {e}"),
            }
        }
    }
}

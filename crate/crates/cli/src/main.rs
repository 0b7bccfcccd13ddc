//! `awgan`: batch experiments with the adaptive weighted discriminator on a
//! synthetic eight-mode ring.
//!
//! Subcommands: `train` (one run with logs and checkpoints), `verify` (the
//! property suites), `diagnose` (the angle, score-gap and mode studies),
//! and `grid` (the threshold sweep). Every subcommand is reproducible: the
//! pair (config, seed) determines all output bytes.

mod config;

use anyhow::{anyhow, Context, Result};
use awgan_core::diagnostics::{
    alpha_grid, angle_trace, export_csv, export_svg, mode_panel, score_gap_study,
};
use awgan_core::losses::{GenLossFamily, LossFamily};
use awgan_core::nn::LrMode;
use awgan_core::trainer::{train, OptimizerKind, TrainConfig, WeightMode};
use awgan_core::verify::{self, VerifyOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{mode_tag, resolve, snapshot_toml, Overrides, Resolved};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "awgan",
    version,
    about = "Adaptive weighted discriminator laboratory on a synthetic Gaussian ring",
    after_help = "Output root: --out flag, else [output].dir from the config file, \
                  else $AWGAN_OUT, else ./runs.\nExit codes: 0 success, 1 run failure, 2 usage error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Bound for the worker pool used by parallel sweeps [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run; writes run log CSV, checkpoints, config snapshot, and
    /// prints a summary line.
    Train(TrainArgs),
    /// Run the property suites and print one pass/fail line per suite.
    Verify(VerifyArgs),
    /// Reproduce one of the studies: angles, scoregap, or modes.
    Diagnose(DiagnoseArgs),
    /// Sweep the (alpha1, alpha2) threshold grid and emit a heat map.
    Grid(GridArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Fixed weights (1, 1)
    Plain,
    /// Adaptive weights, gradient-normalizing formulas
    AwNormalized,
    /// Adaptive weights, one weight pinned to 1
    AwNonnormalized,
}

impl From<ModeArg> for WeightMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Plain => WeightMode::PlainSum,
            ModeArg::AwNormalized => WeightMode::AwNormalized,
            ModeArg::AwNonnormalized => WeightMode::AwNonNormalized,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Bce,
    Hinge,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenLossArg {
    BceNonSaturating,
    Hinge,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptArg {
    Adam,
    Sgd,
}

#[derive(Clone, Copy, ValueEnum)]
enum LrModeArg {
    Constant,
    LinearDecay,
}

/// Training configuration flags. Every config-file key has a flag; flags
/// override the file, the file overrides the defaults shown here.
#[derive(Args, Clone, Default)]
struct TrainOpts {
    /// TOML config file (sections [train], [aw], [data], [output])
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weight mode [default: aw-normalized]
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Synthetic task name [default: ring8]
    #[arg(long)]
    task: Option<String>,
    /// Master seed; model init, data and latent streams derive from it [default: 7]
    #[arg(long)]
    seed: Option<u64>,
    /// Generator iterations [default: 25000]
    #[arg(long)]
    iters: Option<u64>,
    /// Minibatch size [default: 64]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Discriminator loss family [default: bce]
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    /// Generator loss family [default: bce-non-saturating]
    #[arg(long, value_enum)]
    gen_loss: Option<GenLossArg>,
    /// Discriminator steps per generator step [default: 1]
    #[arg(long)]
    ratio: Option<usize>,
    /// Optimizer [default: adam]
    #[arg(long, value_enum)]
    optimizer: Option<OptArg>,
    /// Discriminator learning rate [default: 0.001]
    #[arg(long)]
    lr_d: Option<f64>,
    /// Generator learning rate [default: 0.001]
    #[arg(long)]
    lr_g: Option<f64>,
    /// Learning-rate schedule [default: constant]
    #[arg(long, value_enum)]
    lr_mode: Option<LrModeArg>,
    /// Adam first-moment coefficient beta1 [default: 0]
    #[arg(long)]
    beta1: Option<f64>,
    /// Adam second-moment coefficient beta2 [default: 0.999]
    #[arg(long)]
    beta2: Option<f64>,
    /// Adam numerical-stability constant [default: 1e-8]
    #[arg(long)]
    adam_eps: Option<f64>,
    /// Latent dimension [default: 2]
    #[arg(long)]
    latent_dim: Option<usize>,
    /// Generator layer sizes [default: 2,64,64,2]
    #[arg(long, value_delimiter = ',')]
    gen_sizes: Option<Vec<usize>>,
    /// Discriminator layer sizes [default: 2,64,64,1]
    #[arg(long, value_delimiter = ',')]
    disc_sizes: Option<Vec<usize>>,
    /// Negative-side slope of the rectifier [default: 0.2]
    #[arg(long)]
    leaky_slope: Option<f64>,
    /// Number of ring modes [default: 8]
    #[arg(long)]
    modes: Option<usize>,
    /// Ring radius [default: 1]
    #[arg(long)]
    radius: Option<f64>,
    /// Per-mode standard deviation [default: 0.05]
    #[arg(long)]
    std: Option<f64>,
    /// Generator samples drawn for the coverage summary [default: 8000]
    #[arg(long)]
    coverage_samples: Option<usize>,
    /// Weight offset epsilon [default: 0.05]
    #[arg(long)]
    epsilon: Option<f64>,
    /// Score-gap tolerance delta [default: 0.05]
    #[arg(long)]
    delta: Option<f64>,
    /// Fixed weights "WR,WF" bypassing selection (e.g. --pin-weights 1,1)
    #[arg(long)]
    pin_weights: Option<String>,
    /// Output root directory [default: $AWGAN_OUT or ./runs]
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Selection thresholds; separate from [`TrainOpts`] so the grid command
/// can reuse the flag names for its axes.
#[derive(Args, Clone, Default)]
struct AlphaOpts {
    /// Real-score floor alpha1 [default: 0.5]
    #[arg(long)]
    alpha1: Option<f64>,
    /// Real-score satisfaction level alpha2 [default: 0.75]
    #[arg(long)]
    alpha2: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    opts: TrainOpts,
    #[command(flatten)]
    alphas: AlphaOpts,
}

#[derive(Args)]
struct VerifyArgs {
    /// Dimensions for the geometry suites
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 10, 1000, 10000])]
    dims: Vec<usize>,
    /// Random gradient pairs per dimension
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    /// Suite seed
    #[arg(long, default_value_t = 2008)]
    seed: u64,
    /// Weight offset; the geometry suites check exact identities and are
    /// skipped unless this is 0
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    /// Per-step angles between component gradients and the update direction
    Angles,
    /// Counterfactual plain-vs-adaptive score comparison
    Scoregap,
    /// Checkpointed per-mode scores and generated scatters
    Modes,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Which study to run
    #[arg(value_enum)]
    study: Study,
    /// Step window "START:END" for the angle study [default: 0:50]
    #[arg(long)]
    window: Option<String>,
    /// Epochs for the score-gap study [default: 1]
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    /// Iterations per epoch for the score-gap study [default: 400]
    #[arg(long, default_value_t = 400)]
    iters_per_epoch: usize,
    /// Checkpoint spacing for the mode study [default: 5000]
    #[arg(long, default_value_t = 5000)]
    checkpoint_every: u64,
    /// Real probe points per mode per checkpoint [default: 100]
    #[arg(long, default_value_t = 100)]
    probe_n: usize,
    /// Generated points per checkpoint scatter [default: 1000]
    #[arg(long, default_value_t = 1000)]
    scatter_n: usize,
    #[command(flatten)]
    opts: TrainOpts,
    #[command(flatten)]
    alphas: AlphaOpts,
}

#[derive(Args)]
struct GridArgs {
    /// alpha1 values of the grid [default: 0.4,0.5,0.6]
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.4, 0.5, 0.6])]
    alpha1: Vec<f64>,
    /// alpha2 values of the grid [default: 0.65,0.75,0.85]
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.65, 0.75, 0.85])]
    alpha2: Vec<f64>,
    /// Generator iterations per grid cell [default: 2000]
    #[arg(long, default_value_t = 2000)]
    budget: u64,
    #[command(flatten)]
    opts: TrainOpts,
}

fn parse_pin(raw: &Option<String>) -> Result<Option<(f64, f64)>> {
    match raw {
        None => Ok(None),
        Some(s) => {
            let parts: Vec<&str> = s.split(',').collect();
            if parts.len() != 2 {
                return Err(anyhow!("--pin-weights wants \"WR,WF\", got {s:?}"));
            }
            let w_r: f64 = parts[0].trim().parse().context("--pin-weights WR")?;
            let w_f: f64 = parts[1].trim().parse().context("--pin-weights WF")?;
            Ok(Some((w_r, w_f)))
        }
    }
}

fn overrides_from(opts: &TrainOpts, alphas: &AlphaOpts) -> Result<Overrides> {
    Ok(Overrides {
        mode: opts.mode.map(Into::into),
        task: opts.task.clone(),
        seed: opts.seed,
        iters: opts.iters,
        batch_size: opts.batch_size,
        loss: opts.loss.map(|l| match l {
            LossArg::Bce => LossFamily::Bce,
            LossArg::Hinge => LossFamily::Hinge,
        }),
        gen_loss: opts.gen_loss.map(|l| match l {
            GenLossArg::BceNonSaturating => GenLossFamily::BceNonSaturating,
            GenLossArg::Hinge => GenLossFamily::Hinge,
        }),
        ratio: opts.ratio,
        optimizer: opts.optimizer.map(|o| match o {
            OptArg::Adam => OptimizerKind::Adam,
            OptArg::Sgd => OptimizerKind::Sgd,
        }),
        lr_d: opts.lr_d,
        lr_g: opts.lr_g,
        lr_mode: opts.lr_mode.map(|m| match m {
            LrModeArg::Constant => LrMode::Constant,
            LrModeArg::LinearDecay => LrMode::LinearDecay,
        }),
        beta1: opts.beta1,
        beta2: opts.beta2,
        adam_eps: opts.adam_eps,
        latent_dim: opts.latent_dim,
        gen_sizes: opts.gen_sizes.clone(),
        disc_sizes: opts.disc_sizes.clone(),
        leaky_slope: opts.leaky_slope,
        n_modes: opts.modes,
        radius: opts.radius,
        std: opts.std,
        coverage_samples: opts.coverage_samples,
        alpha1: alphas.alpha1,
        alpha2: alphas.alpha2,
        epsilon: opts.epsilon,
        delta: opts.delta,
        pin_weights: parse_pin(&opts.pin_weights)?,
        out: opts.out.clone(),
    })
}

/// Resolution failures are usage errors (exit 2); failures after that are
/// run failures (exit 1).
fn resolve_opts(opts: &TrainOpts, alphas: &AlphaOpts) -> std::result::Result<Resolved, ExitCode> {
    let flags = match overrides_from(opts, alphas) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Err(ExitCode::from(2));
        }
    };
    match resolve(opts.config.as_deref(), &flags) {
        Ok(r) => Ok(r),
        Err(e) => {
            eprintln!("error: {e:#}");
            Err(ExitCode::from(2))
        }
    }
}

fn write_run_dir(dir: &Path, cfg: &TrainConfig) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating run directory {}", dir.display()))?;
    std::fs::write(dir.join("config.toml"), snapshot_toml(cfg)?)
        .context("writing config snapshot")?;
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> std::result::Result<(), ExitCode> {
    let Resolved { cfg, out_root } = resolve_opts(&args.opts, &args.alphas)?;
    let run_dir = out_root.join(format!(
        "train-ring8-{}-seed{}",
        mode_tag(cfg.weight_mode),
        cfg.seed
    ));
    let run = || -> Result<()> {
        write_run_dir(&run_dir, &cfg)?;
        let log = train(cfg.clone())?;
        std::fs::write(run_dir.join("runlog.csv"), log.csv_string())
            .context("writing run log")?;
        log.final_disc
            .save(&run_dir.join("disc.ckpt"))
            .context("writing discriminator checkpoint")?;
        log.final_gen
            .save(&run_dir.join("gen.ckpt"))
            .context("writing generator checkpoint")?;
        let (coverage, _) = log.final_coverage()?;
        let last = log.records.last();
        println!(
            "coverage={coverage}/{} l_r={} l_f={} records={} out={}",
            cfg.mixture.n_modes,
            last.map(|r| r.l_r.to_string()).unwrap_or_else(|| "-".into()),
            last.map(|r| r.l_f.to_string()).unwrap_or_else(|| "-".into()),
            log.records.len(),
            run_dir.display()
        );
        Ok(())
    };
    run().map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}

fn cmd_verify(args: &VerifyArgs) -> std::result::Result<(), ExitCode> {
    let opts = VerifyOptions {
        dims: args.dims.clone(),
        pairs_per_dim: args.pairs,
        seed: args.seed,
        epsilon: args.epsilon,
    };
    if opts.epsilon != 0.0 {
        println!(
            "note: geometry suites skipped (exact identities require epsilon = 0, got {})",
            opts.epsilon
        );
    }
    let reports = verify::run_all(&opts);
    let mut all_passed = true;
    for r in &reports {
        println!(
            "[{}] {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        all_passed &= r.passed;
    }
    if all_passed {
        Ok(())
    } else {
        Err(ExitCode::from(1))
    }
}

fn parse_window(raw: &Option<String>) -> Result<(usize, usize)> {
    match raw {
        None => Ok((0, 50)),
        Some(s) => {
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| anyhow!("--window wants \"START:END\", got {s:?}"))?;
            Ok((a.parse().context("window start")?, b.parse().context("window end")?))
        }
    }
}

fn cmd_diagnose(args: &DiagnoseArgs) -> std::result::Result<(), ExitCode> {
    let window = match parse_window(&args.window) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Err(ExitCode::from(2));
        }
    };
    let Resolved { cfg, out_root } = resolve_opts(&args.opts, &args.alphas)?;
    let run = || -> Result<()> {
        match args.study {
            Study::Angles => {
                let dir = out_root.join(format!("diagnose-angles-seed{}", cfg.seed));
                write_run_dir(&dir, &cfg)?;
                // both the plain-sum run and the adaptive run, same seed
                for (tag, mode) in [
                    ("plain", WeightMode::PlainSum),
                    (
                        "aw",
                        if cfg.weight_mode == WeightMode::PlainSum {
                            WeightMode::AwNormalized
                        } else {
                            cfg.weight_mode
                        },
                    ),
                ] {
                    let mut run_cfg = cfg.clone();
                    run_cfg.weight_mode = mode;
                    // just enough iterations to cover the requested window
                    let need = window.1.max(1) as u64;
                    run_cfg.iterations = need.div_ceil(run_cfg.ratio as u64);
                    let log = train(run_cfg)?;
                    let trace = angle_trace(&log, window.0..window.1)?;
                    export_csv(&dir.join(format!("angles_{tag}.csv")), &trace.csv_string())?;
                    export_svg(&dir.join(format!("angles_{tag}.svg")), &trace.to_svg())?;
                    println!(
                        "{tag}: frac angle(g_r,g_f)>90deg = {:.3}, \
                         frac angle(g_r,d)>90deg = {:.3}, frac angle(g_f,d)>90deg = {:.3}",
                        trace.frac_over_90[0], trace.frac_over_90[1], trace.frac_over_90[2]
                    );
                }
                println!("out={}", dir.display());
            }
            Study::Scoregap => {
                let dir = out_root.join(format!("diagnose-scoregap-seed{}", cfg.seed));
                write_run_dir(&dir, &cfg)?;
                let table = score_gap_study(&cfg, args.epochs, args.iters_per_epoch)?;
                export_csv(&dir.join("scoregap.csv"), &table.csv_string())?;
                export_svg(&dir.join("scoregap.svg"), &table.to_svg())?;
                for s in table.epoch_summaries() {
                    println!(
                        "epoch {}: mean real after plain = {:.4}, after aw = {:.4}; \
                         mean gap after plain = {:.4}, after aw = {:.4}",
                        s.epoch,
                        s.mean_real_after_plain,
                        s.mean_real_after_aw,
                        s.mean_gap_after_plain,
                        s.mean_gap_after_aw
                    );
                }
                println!("out={}", dir.display());
            }
            Study::Modes => {
                let dir = out_root.join(format!(
                    "diagnose-modes-{}-seed{}",
                    mode_tag(cfg.weight_mode),
                    cfg.seed
                ));
                write_run_dir(&dir, &cfg)?;
                let panel = mode_panel(&cfg, args.checkpoint_every, args.probe_n, args.scatter_n)?;
                export_csv(&dir.join("mode_scores.csv"), &panel.scores_csv())?;
                export_csv(&dir.join("mode_scatter.csv"), &panel.scatter_csv())?;
                export_svg(&dir.join("mode_scores.svg"), &panel.scores_svg())?;
                for (iteration, svg) in panel.scatter_svgs() {
                    export_svg(&dir.join(format!("scatter_{iteration:06}.svg")), &svg)?;
                }
                for e in &panel.entries {
                    let min = e
                        .per_mode_mean_logit
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min);
                    println!(
                        "checkpoint {}: per-mode mean logits min = {:.4}, values = {:?}",
                        e.iteration,
                        min,
                        e.per_mode_mean_logit
                            .iter()
                            .map(|v| (v * 1000.0).round() / 1000.0)
                            .collect::<Vec<_>>()
                    );
                }
                println!("out={}", dir.display());
            }
        }
        Ok(())
    };
    run().map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}

fn cmd_grid(args: &GridArgs) -> std::result::Result<(), ExitCode> {
    if args.alpha1.is_empty() || args.alpha2.is_empty() {
        eprintln!("error: --alpha1 and --alpha2 must be non-empty");
        return Err(ExitCode::from(2));
    }
    let Resolved { cfg, out_root } = resolve_opts(&args.opts, &AlphaOpts::default())?;
    let run = || -> Result<()> {
        let dir = out_root.join(format!("grid-seed{}", cfg.seed));
        write_run_dir(&dir, &cfg)?;
        let grid = alpha_grid(&cfg, &args.alpha1, &args.alpha2, args.budget)?;
        export_csv(&dir.join("grid.csv"), &grid.csv_string())?;
        export_svg(&dir.join("grid.svg"), &grid.coverage_svg())?;
        for c in &grid.cells {
            if c.valid {
                println!(
                    "alpha1={} alpha2={} coverage={} mean_real_logit={:.4}",
                    c.alpha1,
                    c.alpha2,
                    c.coverage.unwrap_or(0),
                    c.mean_real_logit.unwrap_or(f64::NAN)
                );
            } else {
                println!("alpha1={} alpha2={} invalid (alpha1 > alpha2), not run", c.alpha1, c.alpha2);
            }
        }
        println!("out={}", dir.display());
        Ok(())
    };
    run().map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Grid(args) => cmd_grid(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

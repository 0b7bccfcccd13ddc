//! The adversarial training loop.
//!
//! Every discriminator step evaluates the real and fake loss components as
//! two separate graphs over the same parameters and runs one backward sweep
//! per component, which is what makes the pair `(g_r, g_f)` available to the
//! weight selection. The combined direction `w_r g_r + w_f g_f` is applied
//! as a descent update on the negated weighted loss.
//!
//! A run is fully determined by its config: all randomness flows from four
//! `ChaCha8` streams derived from the master seed (discriminator init,
//! generator init, data, latents, in that order).

use crate::autodiff::{Array, AutodiffError, Bindings, Graph};
use crate::awweights::{
    self, aw_select, combine_direction, AwConfig, AwError, AwWeights, Branch, GradientPair,
    ScoreStats,
};
use crate::losses::{self, GenLossFamily, LossError, LossFamily};
use crate::nn::{
    adam_step, flatten_gradient, sgd_step, Activation, AdamState, Direction, LrMode, LrSchedule,
    Mlp, NnError, ParamVector,
};
use crate::synthdata::{mode_coverage, CoverageConfig, RingMixture};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("discriminator step {iteration}: {source}")]
    Step {
        iteration: u64,
        #[source]
        source: Box<TrainError>,
    },

    #[error("graph error: {0}")]
    Autodiff(#[from] AutodiffError),

    #[error(transparent)]
    Nn(#[from] NnError),

    #[error(transparent)]
    Loss(#[from] LossError),

    #[error(transparent)]
    Aw(#[from] AwError),

    #[error("snapshot restore mismatch: parameters differ after restore")]
    SnapshotMismatch,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("bad run log csv: {0}")]
    Csv(String),
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// How the two loss components are combined each discriminator step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Fixed weights (1, 1), the unweighted sum.
    #[serde(rename = "plain")]
    PlainSum,
    /// Adaptive weights with gradient-normalizing formulas.
    AwNormalized,
    /// Adaptive weights with one weight pinned to 1.
    #[serde(rename = "aw-nonnormalized")]
    AwNonNormalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Full description of one training run. `(TrainConfig, nothing else)`
/// determines every output bit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss_family: LossFamily,
    pub gen_loss: GenLossFamily,
    pub weight_mode: WeightMode,
    /// Selection thresholds. The `normalized` flag is overridden from
    /// `weight_mode` when selecting.
    pub aw: AwConfig,
    /// When set, bypasses selection entirely and uses these fixed weights
    /// (recorded as branch 0).
    pub pin_weights: Option<(f64, f64)>,
    pub batch_size: usize,
    pub latent_dim: usize,
    /// Discriminator steps per generator step.
    pub ratio: usize,
    /// Number of generator iterations.
    pub iterations: u64,
    pub optimizer: OptimizerKind,
    pub lr_d: f64,
    pub lr_g: f64,
    pub lr_mode: LrMode,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub gen_sizes: Vec<usize>,
    pub disc_sizes: Vec<usize>,
    pub leaky_slope: f64,
    pub mixture: RingMixture,
    pub seed: u64,
    /// Generator sample count for the end-of-run coverage summary.
    pub coverage_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss_family: LossFamily::Bce,
            gen_loss: GenLossFamily::BceNonSaturating,
            weight_mode: WeightMode::AwNormalized,
            aw: AwConfig::default(),
            pin_weights: None,
            batch_size: 64,
            latent_dim: 2,
            ratio: 1,
            iterations: 25_000,
            optimizer: OptimizerKind::Adam,
            lr_d: 0.001,
            lr_g: 0.001,
            lr_mode: LrMode::Constant,
            beta1: 0.0,
            beta2: 0.999,
            adam_eps: 1e-8,
            gen_sizes: vec![2, 64, 64, 2],
            disc_sizes: vec![2, 64, 64, 1],
            leaky_slope: 0.2,
            mixture: RingMixture::default(),
            seed: 7,
            coverage_samples: 8000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.ratio < 1 {
            return Err(TrainError::InvalidConfig("ratio must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be >= 1".into()));
        }
        self.aw
            .validate()
            .map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        if self.gen_sizes.first() != Some(&self.latent_dim) {
            return Err(TrainError::InvalidConfig(
                "generator input size must equal latent_dim".into(),
            ));
        }
        if self.gen_sizes.last() != self.disc_sizes.first() {
            return Err(TrainError::InvalidConfig(
                "generator output size must equal discriminator input size".into(),
            ));
        }
        if self.disc_sizes.last() != Some(&1) {
            return Err(TrainError::InvalidConfig(
                "discriminator must emit one logit".into(),
            ));
        }
        Ok(())
    }

    /// Selection config with `normalized` taken from the weight mode.
    pub fn effective_aw(&self) -> AwConfig {
        AwConfig {
            normalized: self.weight_mode != WeightMode::AwNonNormalized,
            ..self.aw
        }
    }
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// Everything logged for one discriminator step. Cosines against the
/// combined direction are recorded as 0 when a norm involved is degenerate.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub iteration: u64,
    pub l_r: f64,
    pub l_f: f64,
    pub s_r: f64,
    pub s_f: f64,
    pub grad_r_norm: f64,
    pub grad_f_norm: f64,
    pub cos_rf: f64,
    pub cos_rd: f64,
    pub cos_fd: f64,
    pub w_r: f64,
    pub w_f: f64,
    pub branch: u8,
}

pub const RUNLOG_HEADER: &str =
    "iteration,l_r,l_f,s_r,s_f,grad_r_norm,grad_f_norm,cos_rf,cos_rd,cos_fd,w_r,w_f,branch";

impl StepRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.l_r,
            self.l_f,
            self.s_r,
            self.s_f,
            self.grad_r_norm,
            self.grad_f_norm,
            self.cos_rf,
            self.cos_rd,
            self.cos_fd,
            self.w_r,
            self.w_f,
            self.branch
        )
    }

    pub fn from_csv_row(line: &str) -> Result<StepRecord, TrainError> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(TrainError::Csv(format!(
                "expected 13 fields, got {}",
                fields.len()
            )));
        }
        let f = |i: usize| -> Result<f64, TrainError> {
            fields[i]
                .parse()
                .map_err(|e| TrainError::Csv(format!("field {i}: {e}")))
        };
        Ok(StepRecord {
            iteration: fields[0]
                .parse()
                .map_err(|e| TrainError::Csv(format!("iteration: {e}")))?,
            l_r: f(1)?,
            l_f: f(2)?,
            s_r: f(3)?,
            s_f: f(4)?,
            grad_r_norm: f(5)?,
            grad_f_norm: f(6)?,
            cos_rf: f(7)?,
            cos_rd: f(8)?,
            cos_fd: f(9)?,
            w_r: f(10)?,
            w_f: f(11)?,
            branch: fields[12]
                .parse()
                .map_err(|e| TrainError::Csv(format!("branch: {e}")))?,
        })
    }
}

/// Output of a completed run.
#[derive(Clone, Debug)]
pub struct RunLog {
    pub config: TrainConfig,
    pub records: Vec<StepRecord>,
    pub final_disc: Mlp,
    pub final_gen: Mlp,
}

impl RunLog {
    /// Shortest-roundtrip float formatting, so parsing the emitted CSV
    /// reproduces the in-memory records exactly.
    pub fn csv_string(&self) -> String {
        let mut out = String::from(RUNLOG_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Vec<StepRecord>, TrainError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == RUNLOG_HEADER => {}
            other => return Err(TrainError::Csv(format!("bad header {other:?}"))),
        }
        lines.map(StepRecord::from_csv_row).collect()
    }

    /// Coverage of the final generator on a fresh seeded latent batch.
    pub fn final_coverage(&self) -> Result<(usize, Vec<usize>), TrainError> {
        let cfg = &self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x636f_7665_7261_6765);
        let z = sample_latents(cfg.coverage_samples, cfg.latent_dim, &mut rng);
        let samples = self.final_gen.apply(&z)?;
        let cov_cfg = CoverageConfig::for_mixture(&cfg.mixture, cfg.coverage_samples);
        Ok(mode_coverage(&samples, &cfg.mixture, &cov_cfg))
    }
}

/// One branch of the counterfactual protocol: the step that was taken and
/// the post-step mean logits on the same minibatch.
#[derive(Clone, Debug)]
pub struct CounterfactualOutcome {
    pub record: StepRecord,
    pub real_logit_after: f64,
    pub fake_logit_after: f64,
}

/// Both branches of one counterfactual comparison, taken from bit-identical
/// state on the same minibatch.
#[derive(Clone, Debug)]
pub struct CounterfactualStep {
    pub real_logit_before: f64,
    pub fake_logit_before: f64,
    pub plain: CounterfactualOutcome,
    pub aw: CounterfactualOutcome,
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

fn sample_latents(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Array {
    let data: Vec<f64> = (0..n * dim).map(|_| rng.sample(StandardNormal)).collect();
    Array::matrix(n, dim, data).expect("sized above")
}

struct DiscGradients {
    l_r: f64,
    l_f: f64,
    scores: ScoreStats,
    pair: GradientPair,
}

/// Stateful training driver. Use [`Trainer::run`] for a whole run or the
/// step methods to interleave probes between iterations.
pub struct Trainer {
    cfg: TrainConfig,
    disc: Mlp,
    gen: Mlp,
    adam_d: AdamState,
    adam_g: AdamState,
    d_schedule: LrSchedule,
    g_schedule: LrSchedule,
    data_rng: ChaCha8Rng,
    latent_rng: ChaCha8Rng,
    d_step: u64,
    g_step: u64,
    backward_sweeps: u64,
    pub records: Vec<StepRecord>,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        let mut seeder = ChaCha8Rng::seed_from_u64(cfg.seed);
        let d_init: u64 = seeder.gen();
        let g_init: u64 = seeder.gen();
        let data_seed: u64 = seeder.gen();
        let latent_seed: u64 = seeder.gen();

        let disc_acts: Vec<Activation> = (0..cfg.disc_sizes.len() - 1)
            .map(|i| {
                if i + 2 == cfg.disc_sizes.len() {
                    Activation::Linear
                } else {
                    Activation::LeakyRelu(cfg.leaky_slope)
                }
            })
            .collect();
        let gen_acts: Vec<Activation> = (0..cfg.gen_sizes.len() - 1)
            .map(|i| {
                if i + 2 == cfg.gen_sizes.len() {
                    Activation::Linear
                } else {
                    Activation::Tanh
                }
            })
            .collect();
        let disc = Mlp::init(&cfg.disc_sizes, &disc_acts, d_init)?;
        let gen = Mlp::init(&cfg.gen_sizes, &gen_acts, g_init)?;

        let d_total = (cfg.iterations * cfg.ratio as u64).max(1);
        let g_total = cfg.iterations.max(1);
        let d_schedule = match cfg.lr_mode {
            LrMode::Constant => LrSchedule::constant(cfg.lr_d),
            LrMode::LinearDecay => LrSchedule::linear(cfg.lr_d, d_total)?,
        };
        let g_schedule = match cfg.lr_mode {
            LrMode::Constant => LrSchedule::constant(cfg.lr_g),
            LrMode::LinearDecay => LrSchedule::linear(cfg.lr_g, g_total)?,
        };

        let adam_d = AdamState::new(disc.param_count(), cfg.beta1, cfg.beta2, cfg.adam_eps);
        let adam_g = AdamState::new(gen.param_count(), cfg.beta1, cfg.beta2, cfg.adam_eps);
        Ok(Trainer {
            cfg,
            disc,
            gen,
            adam_d,
            adam_g,
            d_schedule,
            g_schedule,
            data_rng: ChaCha8Rng::seed_from_u64(data_seed),
            latent_rng: ChaCha8Rng::seed_from_u64(latent_seed),
            d_step: 0,
            g_step: 0,
            backward_sweeps: 0,
            records: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn disc(&self) -> &Mlp {
        &self.disc
    }

    pub fn gen(&self) -> &Mlp {
        &self.gen
    }

    pub fn generator_iterations_done(&self) -> u64 {
        self.g_step
    }

    /// Total backward sweeps executed so far; two per discriminator step,
    /// one per generator step.
    pub fn backward_sweeps(&self) -> u64 {
        self.backward_sweeps
    }

    pub fn sample_real(&mut self) -> Array {
        self.cfg
            .mixture
            .sample(self.cfg.batch_size, &mut self.data_rng)
            .points
    }

    /// Fresh latents through the current generator.
    pub fn sample_fake(&mut self) -> Result<Array, TrainError> {
        let z = sample_latents(self.cfg.batch_size, self.cfg.latent_dim, &mut self.latent_rng);
        Ok(self.gen.apply(&z)?)
    }

    fn disc_gradients(&mut self, real: &Array, fake: &Array) -> Result<DiscGradients, TrainError> {
        let component = |trainer: &mut Self,
                         batch: &Array,
                         is_real: bool|
         -> Result<(f64, ParamVector, Vec<f64>), TrainError> {
            let mut graph = Graph::new();
            let input = graph.input(batch.shape());
            let handles = trainer.disc.build_graph(&mut graph, input, true)?;
            let loss = if is_real {
                losses::append_real_loss(&mut graph, handles.output, trainer.cfg.loss_family)?
            } else {
                losses::append_fake_loss(&mut graph, handles.output, trainer.cfg.loss_family)?
            };
            let mut bindings = Bindings::new();
            bindings.set(input, batch.clone());
            trainer.disc.bind_params(&mut bindings, &handles);
            let eval = graph.forward(&bindings)?;
            let value = eval.value(loss).scalar_value();
            let logits = eval.value(handles.output).data().to_vec();
            let grads = eval.backward(loss)?;
            trainer.backward_sweeps += 1;
            Ok((value, flatten_gradient(&grads, &handles), logits))
        };

        let (l_r, g_r, real_logits) = component(self, real, true)?;
        let (l_f, g_f, fake_logits) = component(self, fake, false)?;
        Ok(DiscGradients {
            l_r,
            l_f,
            scores: ScoreStats::from_logits(&real_logits, &fake_logits),
            pair: GradientPair::new(g_r, g_f)?,
        })
    }

    fn select_weights(
        &self,
        pair: &GradientPair,
        scores: &ScoreStats,
    ) -> Result<AwWeights, TrainError> {
        if let Some((w_r, w_f)) = self.cfg.pin_weights {
            return Ok(AwWeights {
                w_r,
                w_f,
                branch: Branch::DegenerateGate,
            });
        }
        match self.cfg.weight_mode {
            WeightMode::PlainSum => Ok(AwWeights {
                w_r: 1.0,
                w_f: 1.0,
                branch: Branch::DegenerateGate,
            }),
            WeightMode::AwNormalized | WeightMode::AwNonNormalized => {
                Ok(aw_select(pair, scores, &self.cfg.effective_aw())?)
            }
        }
    }

    fn apply_disc_update(&mut self, direction: &ParamVector, lr: f64) -> Result<(), TrainError> {
        // Descent on the negated weighted loss.
        let neg = ParamVector(direction.as_slice().iter().map(|x| -x).collect());
        let mut params = self.disc.flatten();
        match self.cfg.optimizer {
            OptimizerKind::Adam => {
                adam_step(&mut params, &neg, &mut self.adam_d, lr, Direction::Descend)?
            }
            OptimizerKind::Sgd => sgd_step(&mut params, &neg, lr, Direction::Descend)?,
        }
        self.disc.set_from_flat(&params)?;
        Ok(())
    }

    fn step_record(
        &self,
        grads: &DiscGradients,
        weights: &AwWeights,
        direction: &ParamVector,
    ) -> StepRecord {
        let nr = awweights::norm(&grads.pair.g_r);
        let nf = awweights::norm(&grads.pair.g_f);
        let nd = awweights::norm(direction);
        let cos = |u: &ParamVector, nu: f64, v: &ParamVector, nv: f64| -> f64 {
            if nu < awweights::DEGENERATE_NORM || nv < awweights::DEGENERATE_NORM {
                0.0
            } else {
                let dot: f64 = u.as_slice().iter().zip(v.as_slice()).map(|(a, b)| a * b).sum();
                (dot / (nu * nv)).clamp(-1.0, 1.0)
            }
        };
        StepRecord {
            iteration: self.d_step,
            l_r: grads.l_r,
            l_f: grads.l_f,
            s_r: grads.scores.s_r,
            s_f: grads.scores.s_f,
            grad_r_norm: nr,
            grad_f_norm: nf,
            cos_rf: cos(&grads.pair.g_r, nr, &grads.pair.g_f, nf),
            cos_rd: cos(&grads.pair.g_r, nr, direction, nd),
            cos_fd: cos(&grads.pair.g_f, nf, direction, nd),
            w_r: weights.w_r,
            w_f: weights.w_f,
            branch: weights.branch.id(),
        }
    }

    /// One discriminator update on the given batches. Computes both loss
    /// components, runs the two backward sweeps, selects weights, applies the
    /// combined ascent direction, and returns the full step record.
    pub fn discriminator_step(
        &mut self,
        real: &Array,
        fake: &Array,
    ) -> Result<StepRecord, TrainError> {
        let iteration = self.d_step;
        self.discriminator_step_inner(real, fake)
            .map_err(|e| TrainError::Step {
                iteration,
                source: Box::new(e),
            })
    }

    fn discriminator_step_inner(
        &mut self,
        real: &Array,
        fake: &Array,
    ) -> Result<StepRecord, TrainError> {
        let lr = self.d_schedule.rate_at(self.d_step)?;
        let grads = self.disc_gradients(real, fake)?;
        let weights = self.select_weights(&grads.pair, &grads.scores)?;
        let direction = combine_direction(&grads.pair, &weights);
        let record = self.step_record(&grads, &weights, &direction);

        let scale = weights.w_r.abs() * record.grad_r_norm
            + weights.w_f.abs() * record.grad_f_norm;
        let degenerate_direction =
            scale > 0.0 && awweights::norm(&direction) < 1e-10 * scale;
        if degenerate_direction {
            log::warn!(
                "step {}: combined direction vanished (branch {}), skipping update",
                self.d_step,
                record.branch
            );
        } else {
            self.apply_disc_update(&direction, lr)?;
        }
        self.d_step += 1;
        Ok(record)
    }

    /// One generator descent step on fresh latents; the discriminator is
    /// recorded as frozen inputs and stays untouched.
    pub fn generator_step(&mut self) -> Result<f64, TrainError> {
        let lr = self.g_schedule.rate_at(self.g_step)?;
        let z = sample_latents(self.cfg.batch_size, self.cfg.latent_dim, &mut self.latent_rng);

        let mut graph = Graph::new();
        let z_node = graph.input(z.shape());
        let gen_handles = self.gen.build_graph(&mut graph, z_node, true)?;
        let disc_handles = self.disc.build_graph(&mut graph, gen_handles.output, false)?;
        let loss = losses::append_generator_loss(&mut graph, disc_handles.output, self.cfg.gen_loss)?;

        let mut bindings = Bindings::new();
        bindings.set(z_node, z);
        self.gen.bind_params(&mut bindings, &gen_handles);
        self.disc.bind_params(&mut bindings, &disc_handles);
        let eval = graph.forward(&bindings)?;
        let value = eval.value(loss).scalar_value();
        let grad_map = eval.backward(loss)?;
        self.backward_sweeps += 1;
        let grad = flatten_gradient(&grad_map, &gen_handles);

        let mut params = self.gen.flatten();
        match self.cfg.optimizer {
            OptimizerKind::Adam => {
                adam_step(&mut params, &grad, &mut self.adam_g, lr, Direction::Descend)?
            }
            OptimizerKind::Sgd => sgd_step(&mut params, &grad, lr, Direction::Descend)?,
        }
        self.gen.set_from_flat(&params)?;
        self.g_step += 1;
        Ok(value)
    }

    /// One full iteration: `ratio` discriminator steps on fresh batches,
    /// then one generator step.
    pub fn iteration(&mut self) -> Result<(), TrainError> {
        for _ in 0..self.cfg.ratio {
            let real = self.sample_real();
            let fake = self.sample_fake()?;
            let record = self.discriminator_step(&real, &fake)?;
            self.records.push(record);
        }
        self.generator_step()?;
        Ok(())
    }

    fn mean_logit(&self, batch: &Array) -> Result<f64, TrainError> {
        let logits = self.disc.apply(batch)?;
        Ok(logits.data().iter().sum::<f64>() / logits.len() as f64)
    }

    /// Takes a plain-sum step and an adaptive step from bit-identical state
    /// on the same minibatch, recording post-step mean logits for each, and
    /// restores the starting state both times. The caller decides which
    /// branch (if any) to persist by re-stepping.
    pub fn counterfactual_step(
        &mut self,
        real: &Array,
        fake: &Array,
    ) -> Result<CounterfactualStep, TrainError> {
        let snapshot_params = self.disc.flatten();
        let snapshot_adam = self.adam_d.clone();
        let snapshot_step = self.d_step;
        let bits = |v: &ParamVector| -> Vec<u64> {
            v.as_slice().iter().map(|x| x.to_bits()).collect()
        };
        let snapshot_bits = bits(&snapshot_params);

        let real_logit_before = self.mean_logit(real)?;
        let fake_logit_before = self.mean_logit(fake)?;

        // Both branches share the gradients of the starting state.
        let grads = self.disc_gradients(real, fake)?;
        let lr = self.d_schedule.rate_at(self.d_step)?;

        let run_branch = |trainer: &mut Self,
                              weights: AwWeights|
         -> Result<CounterfactualOutcome, TrainError> {
            let direction = combine_direction(&grads.pair, &weights);
            let record = trainer.step_record(&grads, &weights, &direction);
            trainer.apply_disc_update(&direction, lr)?;
            let outcome = CounterfactualOutcome {
                record,
                real_logit_after: trainer.mean_logit(real)?,
                fake_logit_after: trainer.mean_logit(fake)?,
            };
            // restore
            trainer.disc.set_from_flat(&snapshot_params)?;
            trainer.adam_d = snapshot_adam.clone();
            trainer.d_step = snapshot_step;
            if bits(&trainer.disc.flatten()) != snapshot_bits {
                return Err(TrainError::SnapshotMismatch);
            }
            Ok(outcome)
        };

        let plain = run_branch(
            self,
            AwWeights {
                w_r: 1.0,
                w_f: 1.0,
                branch: Branch::DegenerateGate,
            },
        )?;
        let aw_cfg = AwConfig {
            normalized: self.cfg.weight_mode != WeightMode::AwNonNormalized,
            ..self.cfg.aw
        };
        let aw_weights = aw_select(&grads.pair, &grads.scores, &aw_cfg)?;
        let aw = run_branch(self, aw_weights)?;

        Ok(CounterfactualStep {
            real_logit_before,
            fake_logit_before,
            plain,
            aw,
        })
    }

    /// Runs the configured number of iterations and returns the log.
    pub fn run(mut self) -> Result<RunLog, TrainError> {
        for _ in 0..self.cfg.iterations {
            self.iteration()?;
        }
        Ok(RunLog {
            config: self.cfg,
            records: self.records,
            final_disc: self.disc,
            final_gen: self.gen,
        })
    }
}

/// Convenience wrapper: build a [`Trainer`] and run it to completion.
pub fn train(cfg: TrainConfig) -> Result<RunLog, TrainError> {
    Trainer::new(cfg)?.run()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

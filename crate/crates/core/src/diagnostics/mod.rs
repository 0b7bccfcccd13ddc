//! Batch studies over training runs: gradient-angle traces, the
//! counterfactual score-gap study, per-mode score panels on the Gaussian
//! ring, and the threshold-grid sweep. Every table exports to CSV with a
//! documented header and parses back losslessly; plots are static SVG.

pub mod svg;

use crate::autodiff::Array;
use crate::nn::{Mlp, NnError};
use crate::synthdata::{mode_coverage, CoverageConfig, RingMixture};
use crate::trainer::{RunLog, TrainConfig, TrainError, Trainer, WeightMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::ops::Range;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("window {0}..{1} is empty or out of bounds (log has {2} records)")]
    BadWindow(usize, usize, usize),

    #[error("no data to export")]
    EmptyData,

    #[error("every grid cell is invalid")]
    AllCellsInvalid,

    #[error("grid budget must be at least one iteration per cell")]
    EmptyBudget,

    #[error("bad csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Train(#[from] TrainError),

    #[error(transparent)]
    Nn(#[from] NnError),

    #[error("io error writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// CSV plumbing
// ---------------------------------------------------------------------------

/// Writes a CSV string to disk, rejecting empty tables.
pub fn export_csv(path: &Path, content: &str) -> Result<(), DiagError> {
    if content.lines().count() < 2 {
        return Err(DiagError::EmptyData);
    }
    std::fs::write(path, content).map_err(|source| DiagError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes an SVG string to disk, rejecting empty content.
pub fn export_svg(path: &Path, content: &str) -> Result<(), DiagError> {
    if content.is_empty() {
        return Err(DiagError::EmptyData);
    }
    std::fs::write(path, content).map_err(|source| DiagError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_f64(field: &str, what: &str) -> Result<f64, DiagError> {
    field
        .parse()
        .map_err(|e| DiagError::Csv(format!("{what}: {e}")))
}

// ---------------------------------------------------------------------------
// Angle trace
// ---------------------------------------------------------------------------

pub const ANGLE_HEADER: &str = "iteration,angle_rf_deg,angle_rd_deg,angle_fd_deg";

/// Per-iteration angles, in degrees, between the component gradients and the
/// combined direction, over a window of a run log.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleTrace {
    pub start: usize,
    /// `(angle(g_r, g_f), angle(g_r, d), angle(g_f, d))` per step.
    pub rows: Vec<[f64; 3]>,
    /// Fraction of windowed steps with each angle above 90 degrees.
    pub frac_over_90: [f64; 3],
}

/// Converts the logged cosines of a window to degrees.
pub fn angle_trace(log: &RunLog, window: Range<usize>) -> Result<AngleTrace, DiagError> {
    if window.is_empty() || window.end > log.records.len() {
        return Err(DiagError::BadWindow(
            window.start,
            window.end,
            log.records.len(),
        ));
    }
    let mut rows = Vec::with_capacity(window.len());
    let mut over = [0usize; 3];
    for r in &log.records[window.clone()] {
        let deg = |c: f64| c.clamp(-1.0, 1.0).acos().to_degrees();
        let row = [deg(r.cos_rf), deg(r.cos_rd), deg(r.cos_fd)];
        for (o, a) in over.iter_mut().zip(row.iter()) {
            if *a > 90.0 {
                *o += 1;
            }
        }
        rows.push(row);
    }
    let n = rows.len() as f64;
    Ok(AngleTrace {
        start: window.start,
        rows,
        frac_over_90: [
            over[0] as f64 / n,
            over[1] as f64 / n,
            over[2] as f64 / n,
        ],
    })
}

impl AngleTrace {
    pub fn csv_string(&self) -> String {
        let mut out = String::from(ANGLE_HEADER);
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.start + i,
                row[0],
                row[1],
                row[2]
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<AngleTrace, DiagError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == ANGLE_HEADER => {}
            other => return Err(DiagError::Csv(format!("bad header {other:?}"))),
        }
        let mut start = 0usize;
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(DiagError::Csv(format!("row {i}: want 4 fields")));
            }
            if i == 0 {
                start = fields[0]
                    .parse()
                    .map_err(|e| DiagError::Csv(format!("iteration: {e}")))?;
            }
            rows.push([
                parse_f64(fields[1], "angle_rf")?,
                parse_f64(fields[2], "angle_rd")?,
                parse_f64(fields[3], "angle_fd")?,
            ]);
        }
        let n = rows.len().max(1) as f64;
        let mut over = [0usize; 3];
        for row in &rows {
            for (o, a) in over.iter_mut().zip(row.iter()) {
                if *a > 90.0 {
                    *o += 1;
                }
            }
        }
        Ok(AngleTrace {
            start,
            rows,
            frac_over_90: [
                over[0] as f64 / n,
                over[1] as f64 / n,
                over[2] as f64 / n,
            ],
        })
    }

    pub fn to_svg(&self) -> String {
        let mk = |idx: usize, label: &str, color: usize| svg::LineSeries {
            label: label.to_string(),
            points: self
                .rows
                .iter()
                .enumerate()
                .map(|(i, row)| [(self.start + i) as f64, row[idx]])
                .collect(),
            color,
        };
        svg::line_svg(
            "Gradient angles per discriminator step",
            "iteration",
            "angle (degrees)",
            &[
                mk(0, "angle(g_r, g_f)", 0),
                mk(1, "angle(g_r, d)", 2),
                mk(2, "angle(g_f, d)", 1),
            ],
            Some(90.0),
        )
    }
}

// ---------------------------------------------------------------------------
// Counterfactual score-gap study
// ---------------------------------------------------------------------------

pub const SCORE_GAP_HEADER: &str = "iteration,real_before,fake_before,real_after_plain,\
fake_after_plain,real_after_aw,fake_after_aw,gap_before,gap_after_plain,gap_after_aw";

/// Mean raw logits around one counterfactual comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreGapRow {
    pub iteration: u64,
    pub real_before: f64,
    pub fake_before: f64,
    pub real_after_plain: f64,
    pub fake_after_plain: f64,
    pub real_after_aw: f64,
    pub fake_after_aw: f64,
}

impl ScoreGapRow {
    pub fn gap_before(&self) -> f64 {
        self.real_before - self.fake_before
    }

    pub fn gap_after_plain(&self) -> f64 {
        self.real_after_plain - self.fake_after_plain
    }

    pub fn gap_after_aw(&self) -> f64 {
        self.real_after_aw - self.fake_after_aw
    }
}

/// Per-epoch means of the counterfactual comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreGapSummary {
    pub epoch: usize,
    pub mean_real_after_plain: f64,
    pub mean_real_after_aw: f64,
    pub mean_gap_after_plain: f64,
    pub mean_gap_after_aw: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreGapTable {
    pub rows: Vec<ScoreGapRow>,
    pub iters_per_epoch: usize,
}

impl ScoreGapTable {
    pub fn csv_string(&self) -> String {
        let mut out = String::from(SCORE_GAP_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.iteration,
                r.real_before,
                r.fake_before,
                r.real_after_plain,
                r.fake_after_plain,
                r.real_after_aw,
                r.fake_after_aw,
                r.gap_before(),
                r.gap_after_plain(),
                r.gap_after_aw()
            ));
        }
        out
    }

    /// Parses an exported table, checking that the gap columns recompute
    /// exactly from the score columns.
    pub fn parse_csv(text: &str, iters_per_epoch: usize) -> Result<ScoreGapTable, DiagError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == SCORE_GAP_HEADER => {}
            other => return Err(DiagError::Csv(format!("bad header {other:?}"))),
        }
        let mut rows = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 10 {
                return Err(DiagError::Csv("want 10 fields".into()));
            }
            let row = ScoreGapRow {
                iteration: fields[0]
                    .parse()
                    .map_err(|e| DiagError::Csv(format!("iteration: {e}")))?,
                real_before: parse_f64(fields[1], "real_before")?,
                fake_before: parse_f64(fields[2], "fake_before")?,
                real_after_plain: parse_f64(fields[3], "real_after_plain")?,
                fake_after_plain: parse_f64(fields[4], "fake_after_plain")?,
                real_after_aw: parse_f64(fields[5], "real_after_aw")?,
                fake_after_aw: parse_f64(fields[6], "fake_after_aw")?,
            };
            for (col, expect) in [
                (7, row.gap_before()),
                (8, row.gap_after_plain()),
                (9, row.gap_after_aw()),
            ] {
                let got = parse_f64(fields[col], "gap")?;
                if got.to_bits() != expect.to_bits() {
                    return Err(DiagError::Csv(format!(
                        "gap column {col} does not recompute: {got} vs {expect}"
                    )));
                }
            }
            rows.push(row);
        }
        Ok(ScoreGapTable {
            rows,
            iters_per_epoch,
        })
    }

    pub fn epoch_summaries(&self) -> Vec<ScoreGapSummary> {
        self.rows
            .chunks(self.iters_per_epoch.max(1))
            .enumerate()
            .map(|(epoch, chunk)| {
                let n = chunk.len() as f64;
                ScoreGapSummary {
                    epoch,
                    mean_real_after_plain: chunk.iter().map(|r| r.real_after_plain).sum::<f64>()
                        / n,
                    mean_real_after_aw: chunk.iter().map(|r| r.real_after_aw).sum::<f64>() / n,
                    mean_gap_after_plain: chunk.iter().map(|r| r.gap_after_plain()).sum::<f64>()
                        / n,
                    mean_gap_after_aw: chunk.iter().map(|r| r.gap_after_aw()).sum::<f64>() / n,
                }
            })
            .collect()
    }

    pub fn to_svg(&self) -> String {
        let series = |label: &str, color: usize, f: fn(&ScoreGapRow) -> f64| svg::LineSeries {
            label: label.to_string(),
            points: self
                .rows
                .iter()
                .map(|r| [r.iteration as f64, f(r)])
                .collect(),
            color,
        };
        svg::line_svg(
            "Mean discriminator logits around one counterfactual step",
            "iteration",
            "mean logit",
            &[
                series("real before", 0, |r| r.real_before),
                series("real after plain", 1, |r| r.real_after_plain),
                series("real after aw", 2, |r| r.real_after_aw),
                series("gap after plain", 3, |r| r.gap_after_plain()),
                series("gap after aw", 4, |r| r.gap_after_aw()),
            ],
            None,
        )
    }
}

/// Runs `epochs * iters_per_epoch` training iterations with the plain-sum
/// update persisted, invoking the counterfactual comparison on every
/// discriminator step.
pub fn score_gap_study(
    cfg: &TrainConfig,
    epochs: usize,
    iters_per_epoch: usize,
) -> Result<ScoreGapTable, DiagError> {
    let mut run_cfg = cfg.clone();
    run_cfg.weight_mode = WeightMode::PlainSum;
    run_cfg.iterations = (epochs * iters_per_epoch) as u64;
    let mut trainer = Trainer::new(run_cfg.clone())?;
    let mut rows = Vec::new();
    for _ in 0..run_cfg.iterations {
        for _ in 0..run_cfg.ratio {
            let real = trainer.sample_real();
            let fake = trainer.sample_fake()?;
            let cf = trainer.counterfactual_step(&real, &fake)?;
            rows.push(ScoreGapRow {
                iteration: cf.plain.record.iteration,
                real_before: cf.real_logit_before,
                fake_before: cf.fake_logit_before,
                real_after_plain: cf.plain.real_logit_after,
                fake_after_plain: cf.plain.fake_logit_after,
                real_after_aw: cf.aw.real_logit_after,
                fake_after_aw: cf.aw.fake_logit_after,
            });
            // persist the plain-sum branch on the same minibatch
            trainer.discriminator_step(&real, &fake)?;
        }
        trainer.generator_step()?;
    }
    Ok(ScoreGapTable {
        rows,
        iters_per_epoch,
    })
}

// ---------------------------------------------------------------------------
// Per-mode score panel
// ---------------------------------------------------------------------------

pub const PANEL_SCORE_HEADER: &str = "checkpoint,mode,mean_logit";
pub const PANEL_SCATTER_HEADER: &str = "checkpoint,x,y";

#[derive(Clone, Debug, PartialEq)]
pub struct PanelEntry {
    pub iteration: u64,
    pub per_mode_mean_logit: Vec<f64>,
    pub scatter: Vec<[f64; 2]>,
}

/// Checkpointed view of a run: per-mode mean real-data logits plus a
/// generated-sample scatter at each checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeScorePanel {
    pub mixture: RingMixture,
    pub entries: Vec<PanelEntry>,
}

/// Mean discriminator logit over `probe_n` fresh real points of each mode.
pub fn probe_mode_scores(
    disc: &Mlp,
    mix: &RingMixture,
    probe_n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, NnError> {
    let mut out = Vec::with_capacity(mix.n_modes);
    for j in 0..mix.n_modes {
        let c = mix.center(j);
        let mut data = Vec::with_capacity(probe_n * 2);
        for _ in 0..probe_n {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            data.push(c[0] + mix.std * dx);
            data.push(c[1] + mix.std * dy);
        }
        let batch = Array::matrix(probe_n, 2, data).expect("sized above");
        let logits = disc.apply(&batch)?;
        out.push(logits.data().iter().sum::<f64>() / logits.len() as f64);
    }
    Ok(out)
}

/// Trains under `cfg`, pausing every `checkpoint_every` generator iterations
/// to probe per-mode scores and capture a generated scatter of `scatter_n`
/// points. Probes draw from their own seeded streams and leave the training
/// streams untouched.
pub fn mode_panel(
    cfg: &TrainConfig,
    checkpoint_every: u64,
    probe_n: usize,
    scatter_n: usize,
) -> Result<ModeScorePanel, DiagError> {
    let mut trainer = Trainer::new(cfg.clone())?;
    let mut entries = Vec::new();
    let probe = |trainer: &Trainer, iteration: u64| -> Result<PanelEntry, DiagError> {
        let mut probe_rng =
            ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x70726f_6265 ^ iteration);
        let per_mode =
            probe_mode_scores(trainer.disc(), &cfg.mixture, probe_n, &mut probe_rng)?;
        let z_data: Vec<f64> = (0..scatter_n * cfg.latent_dim)
            .map(|_| probe_rng.sample(StandardNormal))
            .collect();
        let z = Array::matrix(scatter_n, cfg.latent_dim, z_data).expect("sized");
        let pts = trainer.gen().apply(&z).map_err(NnError::from)?;
        let scatter = pts
            .data()
            .chunks_exact(2)
            .map(|p| [p[0], p[1]])
            .collect();
        Ok(PanelEntry {
            iteration,
            per_mode_mean_logit: per_mode,
            scatter,
        })
    };
    for it in 1..=cfg.iterations {
        trainer.iteration()?;
        if it % checkpoint_every == 0 || it == cfg.iterations {
            entries.push(probe(&trainer, it)?);
        }
    }
    if cfg.iterations == 0 {
        entries.push(probe(&trainer, 0)?);
    }
    Ok(ModeScorePanel {
        mixture: cfg.mixture,
        entries,
    })
}

impl ModeScorePanel {
    pub fn scores_csv(&self) -> String {
        let mut out = String::from(PANEL_SCORE_HEADER);
        out.push('\n');
        for e in &self.entries {
            for (mode, v) in e.per_mode_mean_logit.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", e.iteration, mode, v));
            }
        }
        out
    }

    pub fn scatter_csv(&self) -> String {
        let mut out = String::from(PANEL_SCATTER_HEADER);
        out.push('\n');
        for e in &self.entries {
            for p in &e.scatter {
                out.push_str(&format!("{},{},{}\n", e.iteration, p[0], p[1]));
            }
        }
        out
    }

    /// One scatter SVG per checkpoint, generated points over mode centers.
    pub fn scatter_svgs(&self) -> Vec<(u64, String)> {
        self.entries
            .iter()
            .map(|e| {
                let series = vec![
                    svg::ScatterSeries {
                        label: "generated".into(),
                        points: e.scatter.clone(),
                        color: 0,
                    },
                    svg::ScatterSeries {
                        label: "mode centers".into(),
                        points: self.mixture.centers(),
                        color: 3,
                    },
                ];
                (
                    e.iteration,
                    svg::scatter_svg(
                        &format!("Generated samples at iteration {}", e.iteration),
                        "x",
                        "y",
                        &series,
                    ),
                )
            })
            .collect()
    }

    /// Per-mode mean logits across checkpoints as one line chart.
    pub fn scores_svg(&self) -> String {
        let series: Vec<svg::LineSeries> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| svg::LineSeries {
                label: format!("iter {}", e.iteration),
                points: e
                    .per_mode_mean_logit
                    .iter()
                    .enumerate()
                    .map(|(m, &v)| [m as f64, v])
                    .collect(),
                color: i,
            })
            .collect();
        svg::line_svg(
            "Mean real-data logit per mode",
            "mode",
            "mean logit",
            &series,
            Some(0.0),
        )
    }
}

// ---------------------------------------------------------------------------
// Threshold grid
// ---------------------------------------------------------------------------

pub const GRID_HEADER: &str = "alpha1,alpha2,valid,coverage,mean_real_logit";

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub alpha1: f64,
    pub alpha2: f64,
    /// False when the thresholds violate `alpha1 <= alpha2`; such cells are
    /// not run.
    pub valid: bool,
    pub coverage: Option<usize>,
    pub mean_real_logit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub alpha1s: Vec<f64>,
    pub alpha2s: Vec<f64>,
    pub budget: u64,
    /// Row-major over `(alpha1, alpha2)`.
    pub cells: Vec<GridCell>,
}

/// Trains one short run per valid `(alpha1, alpha2)` cell and scores it by
/// final mode coverage and mean real-data logit. Cells run in parallel on
/// independent seeded runs.
pub fn alpha_grid(
    base: &TrainConfig,
    alpha1s: &[f64],
    alpha2s: &[f64],
    budget: u64,
) -> Result<GridResult, DiagError> {
    if budget == 0 {
        return Err(DiagError::EmptyBudget);
    }
    let combos: Vec<(f64, f64)> = alpha1s
        .iter()
        .flat_map(|&a1| alpha2s.iter().map(move |&a2| (a1, a2)))
        .collect();
    if combos.iter().all(|&(a1, a2)| a1 > a2) || combos.is_empty() {
        return Err(DiagError::AllCellsInvalid);
    }
    let cells: Vec<GridCell> = combos
        .par_iter()
        .map(|&(a1, a2)| -> Result<GridCell, DiagError> {
            if a1 > a2 {
                return Ok(GridCell {
                    alpha1: a1,
                    alpha2: a2,
                    valid: false,
                    coverage: None,
                    mean_real_logit: None,
                });
            }
            let mut cfg = base.clone();
            cfg.aw.alpha1 = a1;
            cfg.aw.alpha2 = a2;
            cfg.iterations = budget;
            if cfg.weight_mode == WeightMode::PlainSum {
                cfg.weight_mode = WeightMode::AwNormalized;
            }
            let log = crate::trainer::train(cfg.clone())?;
            let (coverage, _) = log.final_coverage()?;
            let mut probe_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6772_6964);
            let scores =
                probe_mode_scores(&log.final_disc, &cfg.mixture, 100, &mut probe_rng)?;
            let mean_logit = scores.iter().sum::<f64>() / scores.len() as f64;
            Ok(GridCell {
                alpha1: a1,
                alpha2: a2,
                valid: true,
                coverage: Some(coverage),
                mean_real_logit: Some(mean_logit),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(GridResult {
        alpha1s: alpha1s.to_vec(),
        alpha2s: alpha2s.to_vec(),
        budget,
        cells,
    })
}

impl GridResult {
    pub fn csv_string(&self) -> String {
        let mut out = String::from(GRID_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.alpha1,
                c.alpha2,
                u8::from(c.valid),
                c.coverage.map(|v| v.to_string()).unwrap_or_default(),
                c.mean_real_logit.map(|v| v.to_string()).unwrap_or_default(),
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Vec<GridCell>, DiagError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == GRID_HEADER => {}
            other => return Err(DiagError::Csv(format!("bad header {other:?}"))),
        }
        lines
            .map(|line| {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 5 {
                    return Err(DiagError::Csv("want 5 fields".into()));
                }
                let valid = fields[2] == "1";
                Ok(GridCell {
                    alpha1: parse_f64(fields[0], "alpha1")?,
                    alpha2: parse_f64(fields[1], "alpha2")?,
                    valid,
                    coverage: if fields[3].is_empty() {
                        None
                    } else {
                        Some(
                            fields[3]
                                .parse()
                                .map_err(|e| DiagError::Csv(format!("coverage: {e}")))?,
                        )
                    },
                    mean_real_logit: if fields[4].is_empty() {
                        None
                    } else {
                        Some(parse_f64(fields[4], "mean_real_logit")?)
                    },
                })
            })
            .collect()
    }

    /// Heat map of coverage over the threshold grid.
    pub fn coverage_svg(&self) -> String {
        let cells: Vec<Vec<Option<f64>>> = self
            .alpha1s
            .iter()
            .map(|&a1| {
                self.alpha2s
                    .iter()
                    .map(|&a2| {
                        self.cells
                            .iter()
                            .find(|c| c.alpha1 == a1 && c.alpha2 == a2)
                            .and_then(|c| c.coverage.map(|v| v as f64))
                    })
                    .collect()
            })
            .collect();
        svg::heatmap_svg(
            &format!("Mode coverage after {} iterations", self.budget),
            "alpha1",
            "alpha2",
            &self.alpha1s,
            &self.alpha2s,
            &cells,
        )
    }
}

/// Coverage of a generator model on a fresh seeded latent batch; exposed for
/// run summaries.
pub fn generator_coverage(
    gen: &Mlp,
    mixture: &RingMixture,
    n: usize,
    seed: u64,
) -> Result<(usize, Vec<usize>), DiagError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = gen.input_dim();
    let data: Vec<f64> = (0..n * dim).map(|_| rng.sample(StandardNormal)).collect();
    let z = Array::matrix(n, dim, data).expect("sized");
    let samples = gen.apply(&z)?;
    let cfg = CoverageConfig::for_mixture(mixture, n);
    Ok(mode_coverage(&samples, mixture, &cfg))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ParamVector;
    use crate::trainer::train;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            iterations: 30,
            batch_size: 16,
            gen_sizes: vec![2, 16, 16, 2],
            disc_sizes: vec![2, 16, 16, 1],
            lr_d: 1e-3,
            lr_g: 1e-3,
            beta1: 0.0,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn angle_trace_window_and_fractions() {
        let log = train(tiny_cfg()).unwrap();
        let trace = angle_trace(&log, 0..20).unwrap();
        assert_eq!(trace.rows.len(), 20);
        for row in &trace.rows {
            for a in row {
                assert!((0.0..=180.0).contains(a));
            }
        }
        assert!(angle_trace(&log, 5..5).is_err());
        assert!(angle_trace(&log, 0..31).is_err());
    }

    #[test]
    fn angle_trace_degrees_match_acos() {
        let log = train(tiny_cfg()).unwrap();
        let trace = angle_trace(&log, 0..10).unwrap();
        for (row, rec) in trace.rows.iter().zip(&log.records) {
            assert!((row[0] - rec.cos_rf.acos().to_degrees()).abs() < 1e-9);
        }
    }

    #[test]
    fn angle_csv_roundtrip() {
        let log = train(tiny_cfg()).unwrap();
        let trace = angle_trace(&log, 2..12).unwrap();
        let parsed = AngleTrace::parse_csv(&trace.csv_string()).unwrap();
        assert_eq!(parsed, trace);
    }

    #[test]
    fn score_gap_zero_rate_degenerates_to_before() {
        let cfg = TrainConfig {
            lr_d: 0.0,
            lr_g: 0.0,
            iterations: 4,
            ..tiny_cfg()
        };
        let table = score_gap_study(&cfg, 1, 4).unwrap();
        assert_eq!(table.rows.len(), 4);
        for r in &table.rows {
            assert_eq!(r.real_after_plain, r.real_before);
            assert_eq!(r.real_after_aw, r.real_before);
            assert_eq!(r.gap_after_plain(), r.gap_before());
            assert_eq!(r.gap_after_aw(), r.gap_before());
        }
    }

    #[test]
    fn score_gap_csv_roundtrip_recomputes_gaps() {
        let table = score_gap_study(&tiny_cfg(), 1, 5).unwrap();
        let text = table.csv_string();
        let parsed = ScoreGapTable::parse_csv(&text, 5).unwrap();
        assert_eq!(parsed, table);
    }

    #[test]
    fn zeroed_output_layer_scores_zero() {
        let cfg = tiny_cfg();
        let t = Trainer::new(cfg.clone()).unwrap();
        let mut disc = t.disc().clone();
        let mut flat = disc.flatten();
        let k = flat.len();
        // final layer of a 2-16-16-1 net: 16 weights + 1 bias
        let tail = 17;
        let mut data = flat.as_slice().to_vec();
        for v in data.iter_mut().skip(k - tail) {
            *v = 0.0;
        }
        flat = ParamVector(data);
        disc.set_from_flat(&flat).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scores = probe_mode_scores(&disc, &cfg.mixture, 50, &mut rng).unwrap();
        for s in scores {
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn mode_panel_checkpoints_and_determinism() {
        let cfg = tiny_cfg();
        let a = mode_panel(&cfg, 10, 20, 40).unwrap();
        let b = mode_panel(&cfg, 10, 20, 40).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.entries.len(), 3);
        assert_eq!(a.entries[0].iteration, 10);
        assert_eq!(a.entries[2].iteration, 30);
        for e in &a.entries {
            assert_eq!(e.per_mode_mean_logit.len(), 8);
            assert_eq!(e.scatter.len(), 40);
        }
    }

    #[test]
    fn grid_marks_invalid_cells_and_smokes() {
        let cfg = TrainConfig {
            iterations: 10,
            ..tiny_cfg()
        };
        let grid = alpha_grid(&cfg, &[0.4, 0.8], &[0.6], 10).unwrap();
        assert_eq!(grid.cells.len(), 2);
        let valid: Vec<bool> = grid.cells.iter().map(|c| c.valid).collect();
        assert_eq!(valid, vec![true, false]);
        let cell = &grid.cells[0];
        assert!(cell.coverage.is_some());
        assert!(cell.mean_real_logit.unwrap().is_finite());
        let parsed = GridResult::parse_csv(&grid.csv_string()).unwrap();
        assert_eq!(parsed, grid.cells);
    }

    #[test]
    fn all_invalid_grid_errors() {
        let cfg = tiny_cfg();
        assert!(matches!(
            alpha_grid(&cfg, &[0.9], &[0.1], 5),
            Err(DiagError::AllCellsInvalid)
        ));
    }

    #[test]
    fn exports_reject_empty() {
        let dir = std::env::temp_dir().join("awgan-diag-test");
        std::fs::create_dir_all(&dir).unwrap();
        let err = export_csv(&dir.join("empty.csv"), "header\n");
        assert!(matches!(err, Err(DiagError::EmptyData)));
        let err = export_svg(&dir.join("empty.svg"), "");
        assert!(matches!(err, Err(DiagError::EmptyData)));
    }

    #[test]
    fn exports_are_byte_deterministic() {
        let log1 = train(tiny_cfg()).unwrap();
        let log2 = train(tiny_cfg()).unwrap();
        assert_eq!(log1.csv_string(), log2.csv_string());
        let t1 = angle_trace(&log1, 0..30).unwrap().to_svg();
        let t2 = angle_trace(&log2, 0..30).unwrap().to_svg();
        assert_eq!(t1, t2);
    }
}

//! Synthetic 2-D data: a ring of isotropic Gaussian modes, mode assignment,
//! and coverage metrics for collapse diagnostics.

use crate::autodiff::Array;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Mixture of `n_modes` isotropic Gaussians centered at equally spaced
/// points on a circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingMixture {
    pub n_modes: usize,
    pub radius: f64,
    pub std: f64,
}

impl Default for RingMixture {
    fn default() -> Self {
        RingMixture {
            n_modes: 8,
            radius: 1.0,
            std: 0.05,
        }
    }
}

/// A sampled batch with the mode index each point was drawn from.
#[derive(Clone, Debug)]
pub struct LabeledBatch {
    /// `[n, 2]` points.
    pub points: Array,
    pub labels: Vec<usize>,
}

pub const BATCH_CSV_HEADER: &str = "x,y,label";

impl LabeledBatch {
    /// `x,y,label` rows with shortest round-trip float formatting.
    pub fn csv_string(&self) -> String {
        let mut out = String::from(BATCH_CSV_HEADER);
        out.push('\n');
        for (point, label) in self.points.data().chunks_exact(2).zip(&self.labels) {
            out.push_str(&format!("{},{},{label}\n", point[0], point[1]));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<LabeledBatch, String> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == BATCH_CSV_HEADER => {}
            other => return Err(format!("bad header {other:?}")),
        }
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err("want 3 fields".into());
            }
            data.push(fields[0].parse::<f64>().map_err(|e| e.to_string())?);
            data.push(fields[1].parse::<f64>().map_err(|e| e.to_string())?);
            labels.push(fields[2].parse::<usize>().map_err(|e| e.to_string())?);
        }
        let n = labels.len();
        Ok(LabeledBatch {
            points: Array::matrix(n, 2, data).map_err(|e| e.to_string())?,
            labels,
        })
    }
}

impl RingMixture {
    /// Center of mode `j`, at angle `2 pi j / n_modes`.
    pub fn center(&self, j: usize) -> [f64; 2] {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / self.n_modes as f64;
        [self.radius * theta.cos(), self.radius * theta.sin()]
    }

    pub fn centers(&self) -> Vec<[f64; 2]> {
        (0..self.n_modes).map(|j| self.center(j)).collect()
    }

    /// Draws `n` points: mode uniform, then center plus `std` times a
    /// standard normal pair. Fully determined by the state of `rng`.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> LabeledBatch {
        let mut data = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let mode = rng.gen_range(0..self.n_modes);
            let c = self.center(mode);
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            data.push(c[0] + self.std * dx);
            data.push(c[1] + self.std * dy);
            labels.push(mode);
        }
        LabeledBatch {
            points: Array::matrix(n, 2, data).expect("sized above"),
            labels,
        }
    }

    /// Index of the nearest mode center; ties break to the lowest index.
    pub fn nearest_mode(&self, point: [f64; 2]) -> usize {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for j in 0..self.n_modes {
            let c = self.center(j);
            let d2 = (point[0] - c[0]).powi(2) + (point[1] - c[1]).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best = j;
            }
        }
        best
    }
}

/// Coverage thresholds. A mode counts as covered when at least `min_count`
/// samples land within `capture_radius` of its center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub capture_radius: f64,
    pub min_count: usize,
}

impl CoverageConfig {
    /// Defaults tied to the sample size: radius `3 * std`,
    /// `min_count = max(1, n / 800)`.
    pub fn for_mixture(mix: &RingMixture, n_samples: usize) -> Self {
        CoverageConfig {
            capture_radius: 3.0 * mix.std,
            min_count: (n_samples / 800).max(1),
        }
    }
}

/// Counts covered modes. `samples` is an `[n, 2]` array. Returns the number
/// of covered modes and the per-mode capture counts.
pub fn mode_coverage(
    samples: &Array,
    mix: &RingMixture,
    cfg: &CoverageConfig,
) -> (usize, Vec<usize>) {
    let centers = mix.centers();
    let r2 = cfg.capture_radius * cfg.capture_radius;
    let mut counts = vec![0usize; mix.n_modes];
    for point in samples.data().chunks_exact(2) {
        for (j, c) in centers.iter().enumerate() {
            let d2 = (point[0] - c[0]).powi(2) + (point[1] - c[1]).powi(2);
            if d2 <= r2 {
                counts[j] += 1;
            }
        }
    }
    let covered = counts.iter().filter(|&&c| c >= cfg.min_count).count();
    (covered, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn centers_on_unit_circle() {
        let mix = RingMixture::default();
        for j in 0..8 {
            let c = mix.center(j);
            assert!((c[0].hypot(c[1]) - 1.0).abs() < 1e-12);
        }
        assert_eq!(mix.center(0), [1.0, 0.0]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let mix = RingMixture::default();
        let a = mix.sample(100, &mut ChaCha8Rng::seed_from_u64(3));
        let b = mix.sample(100, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a.points, b.points);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn zero_std_collapses_to_centers() {
        let mix = RingMixture {
            std: 0.0,
            ..RingMixture::default()
        };
        let batch = mix.sample(64, &mut ChaCha8Rng::seed_from_u64(1));
        for (point, &label) in batch.points.data().chunks_exact(2).zip(&batch.labels) {
            let c = mix.center(label);
            assert_eq!(point, c);
        }
    }

    #[test]
    fn per_mode_means_near_centers() {
        // CLT bound: each mode sees about n/8 draws, so the empirical mean
        // sits within 4 * std / sqrt(n/8) of the center for a fixed seed.
        let mix = RingMixture::default();
        let n = 80_000;
        let batch = mix.sample(n, &mut ChaCha8Rng::seed_from_u64(7));
        let mut sums = vec![[0.0f64; 2]; 8];
        let mut counts = vec![0usize; 8];
        for (point, &label) in batch.points.data().chunks_exact(2).zip(&batch.labels) {
            sums[label][0] += point[0];
            sums[label][1] += point[1];
            counts[label] += 1;
        }
        for j in 0..8 {
            let c = mix.center(j);
            let mean = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
            let bound = 4.0 * mix.std / (n as f64 / 8.0).sqrt();
            assert!((mean[0] - c[0]).abs() < bound, "mode {j} x");
            assert!((mean[1] - c[1]).abs() < bound, "mode {j} y");
        }
    }

    #[test]
    fn mode_frequencies_roughly_uniform() {
        let mix = RingMixture::default();
        let n = 80_000;
        let batch = mix.sample(n, &mut ChaCha8Rng::seed_from_u64(11));
        let mut counts = vec![0usize; 8];
        for &label in &batch.labels {
            counts[label] += 1;
        }
        let expected = n as f64 / 8.0;
        let sigma = (n as f64 * (1.0 / 8.0) * (7.0 / 8.0)).sqrt();
        for (j, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() < 4.0 * sigma,
                "mode {j}: {c} vs {expected}"
            );
        }
    }

    #[test]
    fn nearest_mode_basics() {
        let mix = RingMixture::default();
        for j in 0..8 {
            assert_eq!(mix.nearest_mode(mix.center(j)), j);
            let c = mix.center(j);
            assert_eq!(mix.nearest_mode([1.1 * c[0], 1.1 * c[1]]), j);
        }
        // origin is equidistant from all centers: lowest index wins
        assert_eq!(mix.nearest_mode([0.0, 0.0]), 0);
    }

    #[test]
    fn nearest_mode_matches_label_for_tight_modes() {
        let mix = RingMixture {
            std: 0.03,
            ..RingMixture::default()
        };
        let batch = mix.sample(20_000, &mut ChaCha8Rng::seed_from_u64(13));
        let mut hits = 0usize;
        for (point, &label) in batch.points.data().chunks_exact(2).zip(&batch.labels) {
            if mix.nearest_mode([point[0], point[1]]) == label {
                hits += 1;
            }
        }
        assert!(hits as f64 / batch.labels.len() as f64 > 0.999);
    }

    #[test]
    fn coverage_counting() {
        let mix = RingMixture::default();
        let centers: Vec<f64> = mix.centers().into_iter().flatten().collect();
        let samples = Array::matrix(8, 2, centers).unwrap();
        let cfg = CoverageConfig {
            capture_radius: 0.15,
            min_count: 1,
        };
        let (covered, counts) = mode_coverage(&samples, &mix, &cfg);
        assert_eq!(covered, 8);
        assert_eq!(counts, vec![1; 8]);

        let collapsed = Array::matrix(10, 2, vec![1.0, 0.0].repeat(10)).unwrap();
        let (covered, _) = mode_coverage(&collapsed, &mix, &cfg);
        assert_eq!(covered, 1);
    }

    #[test]
    fn batch_csv_roundtrip() {
        let mix = RingMixture::default();
        let batch = mix.sample(50, &mut ChaCha8Rng::seed_from_u64(5));
        let parsed = LabeledBatch::parse_csv(&batch.csv_string()).unwrap();
        assert_eq!(parsed.points, batch.points);
        assert_eq!(parsed.labels, batch.labels);
    }

    #[test]
    fn coverage_of_a_real_mixture_batch() {
        let mix = RingMixture::default();
        let batch = mix.sample(8000, &mut ChaCha8Rng::seed_from_u64(17));
        let cfg = CoverageConfig::for_mixture(&mix, 8000);
        assert_eq!(cfg.min_count, 10);
        let (covered, _) = mode_coverage(&batch.points, &mix, &cfg);
        assert_eq!(covered, 8);
    }
}

//! Adaptive weights for the two-component discriminator loss.
//!
//! Given the gradients `g_r` and `g_f` of the real and fake loss components
//! with respect to all `k` discriminator parameters, this module picks per
//! step weights `(w_r, w_f)` so that the combined update direction
//! `w_r * g_r + w_f * g_f` either bisects the two gradients, or favors one
//! component while staying orthogonal to the other (first-order neutral),
//! depending on how well the discriminator currently scores real data.
//!
//! The selection ladder has five branches plus a sentinel branch 0 for
//! degenerate (near-zero) gradients. Everything here costs a handful of
//! length-`k` vector traversals: three inner products (`g_r.g_r`, `g_f.g_f`,
//! `g_r.g_f`) to choose the weights and three passes to form the combined
//! direction. A thread-local counter tracks those traversals so tests can
//! pin the budget.

use crate::nn::ParamVector;
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AwError {
    #[error("gradient lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("zero-norm {which} gradient")]
    ZeroNorm { which: &'static str },

    #[error("antiparallel gradients give a degenerate combined direction")]
    Antiparallel,

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

// ---------------------------------------------------------------------------
// Vector-pass instrumentation
// ---------------------------------------------------------------------------

thread_local! {
    static VEC_PASSES: Cell<u64> = const { Cell::new(0) };
}

/// Resets the thread-local count of parameter-length vector traversals.
pub fn reset_pass_counter() {
    VEC_PASSES.with(|c| c.set(0));
}

/// Number of parameter-length vector traversals since the last reset. One
/// inner product counts as one traversal; forming the combined direction
/// counts as three (two reads, one write).
pub fn pass_count() -> u64 {
    VEC_PASSES.with(|c| c.get())
}

fn note_passes(n: u64) {
    VEC_PASSES.with(|c| c.set(c.get() + n));
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    note_passes(1);
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// The two component gradients of one discriminator step.
#[derive(Clone, Debug)]
pub struct GradientPair {
    pub g_r: ParamVector,
    pub g_f: ParamVector,
}

impl GradientPair {
    pub fn new(g_r: ParamVector, g_f: ParamVector) -> Result<Self, AwError> {
        if g_r.len() != g_f.len() {
            return Err(AwError::LengthMismatch(g_r.len(), g_f.len()));
        }
        Ok(GradientPair { g_r, g_f })
    }

    pub fn len(&self) -> usize {
        self.g_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_r.is_empty()
    }
}

/// Which rung of the selection ladder produced the weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Near-zero gradient fallback: weights (1, 1), no geometry.
    DegenerateGate,
    /// Low real score, conflicting gradients: favor real, orthogonal to fake.
    FavorRealObtuse,
    /// Low real score, agreeing gradients: real direction only.
    FavorRealAcute,
    /// High real score, conflicting gradients: favor fake, orthogonal to real.
    FavorFakeObtuse,
    /// High real score, agreeing gradients: fake direction only.
    FavorFakeAcute,
    /// Middle ground: angle bisector of the two gradients.
    Bisector,
}

impl Branch {
    pub fn id(self) -> u8 {
        match self {
            Branch::DegenerateGate => 0,
            Branch::FavorRealObtuse => 1,
            Branch::FavorRealAcute => 2,
            Branch::FavorFakeObtuse => 3,
            Branch::FavorFakeAcute => 4,
            Branch::Bisector => 5,
        }
    }

    pub fn from_id(id: u8) -> Option<Branch> {
        Some(match id {
            0 => Branch::DegenerateGate,
            1 => Branch::FavorRealObtuse,
            2 => Branch::FavorRealAcute,
            3 => Branch::FavorFakeObtuse,
            4 => Branch::FavorFakeAcute,
            5 => Branch::Bisector,
            _ => return None,
        })
    }
}

/// Selected weights plus the branch that produced them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AwWeights {
    pub w_r: f64,
    pub w_f: f64,
    pub branch: Branch,
}

/// Selection thresholds. `alpha1` is the real-score floor below which real
/// training is always favored, `alpha2` the satisfaction level above which
/// fake training is favored, `delta` the score gap that counts as "real is
/// behind", and `epsilon` a small offset added to every weight so the update
/// never vanishes entirely.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AwConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Selects between the gradient-normalizing weight formulas and the
    /// non-normalized ones (one weight pinned to 1).
    pub normalized: bool,
}

impl Default for AwConfig {
    fn default() -> Self {
        AwConfig {
            alpha1: 0.5,
            alpha2: 0.75,
            epsilon: 0.05,
            delta: 0.05,
            normalized: true,
        }
    }
}

impl AwConfig {
    pub fn validate(&self) -> Result<(), AwError> {
        if !(0.0..=1.0).contains(&self.alpha1)
            || !(0.0..=1.0).contains(&self.alpha2)
            || self.alpha1 > self.alpha2
        {
            return Err(AwError::InvalidConfig(format!(
                "need 0 <= alpha1 <= alpha2 <= 1, got ({}, {})",
                self.alpha1, self.alpha2
            )));
        }
        if self.epsilon < 0.0 {
            return Err(AwError::InvalidConfig(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.delta < 0.0 {
            return Err(AwError::InvalidConfig(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Minibatch mean sigmoid scores of the discriminator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreStats {
    /// Mean sigma(D(x)) over the real minibatch.
    pub s_r: f64,
    /// Mean sigma(D(y)) over the fake minibatch.
    pub s_f: f64,
    pub n: usize,
}

impl ScoreStats {
    pub fn from_logits(real_logits: &[f64], fake_logits: &[f64]) -> Self {
        let mean_sigma = |xs: &[f64]| {
            xs.iter().map(|&x| crate::losses::sigmoid(x)).sum::<f64>() / xs.len() as f64
        };
        ScoreStats {
            s_r: mean_sigma(real_logits),
            s_f: mean_sigma(fake_logits),
            n: real_logits.len(),
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient geometry
// ---------------------------------------------------------------------------

/// The three inner products every weight formula is built from.
#[derive(Clone, Copy, Debug)]
struct Geometry {
    rr: f64,
    ff: f64,
    rf: f64,
}

impl Geometry {
    fn of(g: &GradientPair) -> Geometry {
        let rr = dot(g.g_r.as_slice(), g.g_r.as_slice());
        let ff = dot(g.g_f.as_slice(), g.g_f.as_slice());
        let rf = dot(g.g_r.as_slice(), g.g_f.as_slice());
        Geometry { rr, ff, rf }
    }

    fn norm_r(&self) -> f64 {
        self.rr.sqrt()
    }

    fn norm_f(&self) -> f64 {
        self.ff.sqrt()
    }

    fn cos(&self) -> f64 {
        (self.rf / (self.norm_r() * self.norm_f())).clamp(-1.0, 1.0)
    }
}

/// Cosine of the angle between two vectors, clamped into `[-1, 1]`.
/// Errors on zero-norm inputs; callers with possibly vanishing gradients
/// must route through the degenerate gate instead.
pub fn cos_angle(u: &ParamVector, v: &ParamVector) -> Result<f64, AwError> {
    if u.len() != v.len() {
        return Err(AwError::LengthMismatch(u.len(), v.len()));
    }
    let uu = dot(u.as_slice(), u.as_slice());
    let vv = dot(v.as_slice(), v.as_slice());
    if uu == 0.0 {
        return Err(AwError::ZeroNorm { which: "first" });
    }
    if vv == 0.0 {
        return Err(AwError::ZeroNorm { which: "second" });
    }
    let uv = dot(u.as_slice(), v.as_slice());
    Ok((uv / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

/// Strict obtuseness test on the sign of the raw inner product: exactly 90
/// degrees is NOT obtuse. Never goes through arccos.
pub fn is_obtuse(u: &ParamVector, v: &ParamVector) -> Result<bool, AwError> {
    if u.len() != v.len() {
        return Err(AwError::LengthMismatch(u.len(), v.len()));
    }
    let uu = dot(u.as_slice(), u.as_slice());
    let vv = dot(v.as_slice(), v.as_slice());
    if uu == 0.0 {
        return Err(AwError::ZeroNorm { which: "first" });
    }
    if vv == 0.0 {
        return Err(AwError::ZeroNorm { which: "second" });
    }
    Ok(dot(u.as_slice(), v.as_slice()) < 0.0)
}

// ---------------------------------------------------------------------------
// Closed-form weight constructions
// ---------------------------------------------------------------------------

fn require_norms(geo: &Geometry) -> Result<(), AwError> {
    if geo.rr == 0.0 {
        return Err(AwError::ZeroNorm { which: "real" });
    }
    if geo.ff == 0.0 {
        return Err(AwError::ZeroNorm { which: "fake" });
    }
    Ok(())
}

fn bisector_from(geo: &Geometry) -> (f64, f64) {
    (1.0 / geo.norm_r(), 1.0 / geo.norm_f())
}

fn favor_real_from(geo: &Geometry) -> (f64, f64) {
    (
        1.0 / geo.norm_r(),
        -geo.rf / (geo.ff * geo.norm_r()),
    )
}

fn favor_fake_from(geo: &Geometry) -> (f64, f64) {
    (
        -geo.rf / (geo.rr * geo.norm_f()),
        1.0 / geo.norm_f(),
    )
}

fn favor_real_nonnorm_from(geo: &Geometry) -> (f64, f64) {
    (1.0, -geo.rf / geo.ff)
}

fn favor_fake_nonnorm_from(geo: &Geometry) -> (f64, f64) {
    (-geo.rf / geo.rr, 1.0)
}

/// Weights `(1/|g_r|, 1/|g_f|)`: the combined direction bisects the angle
/// between the two gradients. Errors when the gradients are antiparallel,
/// since the two unit vectors then cancel.
pub fn bisector_weights(g: &GradientPair) -> Result<AwWeights, AwError> {
    let geo = Geometry::of(g);
    require_norms(&geo)?;
    if geo.cos() <= -1.0 + 1e-12 {
        return Err(AwError::Antiparallel);
    }
    let (w_r, w_f) = bisector_from(&geo);
    Ok(AwWeights {
        w_r,
        w_f,
        branch: Branch::Bisector,
    })
}

/// Weights making the combined direction orthogonal to `g_f` with a
/// non-negative inner product against `g_r`.
pub fn favor_real_weights(g: &GradientPair) -> Result<AwWeights, AwError> {
    let geo = Geometry::of(g);
    require_norms(&geo)?;
    let (w_r, w_f) = favor_real_from(&geo);
    Ok(AwWeights {
        w_r,
        w_f,
        branch: Branch::FavorRealObtuse,
    })
}

/// Mirror of [`favor_real_weights`]: orthogonal to `g_r`, acute with `g_f`.
pub fn favor_fake_weights(g: &GradientPair) -> Result<AwWeights, AwError> {
    let geo = Geometry::of(g);
    require_norms(&geo)?;
    let (w_r, w_f) = favor_fake_from(&geo);
    Ok(AwWeights {
        w_r,
        w_f,
        branch: Branch::FavorFakeObtuse,
    })
}

/// Non-normalized variant of [`favor_real_weights`]: `w_r = 1`,
/// `w_f = -<g_r, g_f> / |g_f|^2`. Same orthogonality contract; the direction
/// differs only by a positive scaling.
pub fn favor_real_weights_nonnorm(g: &GradientPair) -> Result<AwWeights, AwError> {
    let geo = Geometry::of(g);
    if geo.ff == 0.0 {
        return Err(AwError::ZeroNorm { which: "fake" });
    }
    let (w_r, w_f) = favor_real_nonnorm_from(&geo);
    Ok(AwWeights {
        w_r,
        w_f,
        branch: Branch::FavorRealObtuse,
    })
}

/// Mirror of [`favor_real_weights_nonnorm`].
pub fn favor_fake_weights_nonnorm(g: &GradientPair) -> Result<AwWeights, AwError> {
    let geo = Geometry::of(g);
    if geo.rr == 0.0 {
        return Err(AwError::ZeroNorm { which: "real" });
    }
    let (w_r, w_f) = favor_fake_nonnorm_from(&geo);
    Ok(AwWeights {
        w_r,
        w_f,
        branch: Branch::FavorFakeObtuse,
    })
}

// ---------------------------------------------------------------------------
// Selection ladder
// ---------------------------------------------------------------------------

/// Norm threshold below which a gradient counts as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Picks weights for one discriminator step.
///
/// The ladder, with all score comparisons strict:
///
/// 1. real score behind (`s_r < s_f - delta` or `s_r < alpha1`):
///    obtuse gradients -> favor-real construction (branch 1),
///    otherwise real direction only (branch 2);
/// 2. real score satisfied (`s_r > s_f - delta` and `s_r > alpha2`):
///    obtuse -> favor-fake construction (branch 3),
///    otherwise fake direction only (branch 4);
/// 3. otherwise the angle bisector (branch 5).
///
/// `epsilon` is added to every returned weight. If either gradient norm is
/// below [`DEGENERATE_NORM`] the geometry is undefined and the gate returns
/// plain weights `(1, 1)` with branch 0.
pub fn aw_select(
    g: &GradientPair,
    s: &ScoreStats,
    cfg: &AwConfig,
) -> Result<AwWeights, AwError> {
    cfg.validate()?;
    if g.g_r.len() != g.g_f.len() {
        return Err(AwError::LengthMismatch(g.g_r.len(), g.g_f.len()));
    }
    let geo = Geometry::of(g);
    if geo.norm_r() < DEGENERATE_NORM || geo.norm_f() < DEGENERATE_NORM {
        log::warn!(
            "degenerate gradient gate: |g_r| = {:.3e}, |g_f| = {:.3e}; using weights (1, 1)",
            geo.norm_r(),
            geo.norm_f()
        );
        return Ok(AwWeights {
            w_r: 1.0,
            w_f: 1.0,
            branch: Branch::DegenerateGate,
        });
    }
    let obtuse = geo.rf < 0.0;
    let eps = cfg.epsilon;
    let norm = cfg.normalized;

    let (w_r, w_f, branch) = if s.s_r < s.s_f - cfg.delta || s.s_r < cfg.alpha1 {
        if obtuse {
            let (w_r, w_f) = if norm {
                favor_real_from(&geo)
            } else {
                favor_real_nonnorm_from(&geo)
            };
            (w_r, w_f, Branch::FavorRealObtuse)
        } else {
            let w_r = if norm { 1.0 / geo.norm_r() } else { 1.0 };
            (w_r, 0.0, Branch::FavorRealAcute)
        }
    } else if s.s_r > s.s_f - cfg.delta && s.s_r > cfg.alpha2 {
        if obtuse {
            let (w_r, w_f) = if norm {
                favor_fake_from(&geo)
            } else {
                favor_fake_nonnorm_from(&geo)
            };
            (w_r, w_f, Branch::FavorFakeObtuse)
        } else {
            let w_f = if norm { 1.0 / geo.norm_f() } else { 1.0 };
            (0.0, w_f, Branch::FavorFakeAcute)
        }
    } else {
        let (w_r, w_f) = if norm {
            bisector_from(&geo)
        } else {
            (1.0, 1.0)
        };
        (w_r, w_f, Branch::Bisector)
    };

    Ok(AwWeights {
        w_r: w_r + eps,
        w_f: w_f + eps,
        branch,
    })
}

/// Forms the combined gradient `w_r * g_r + w_f * g_f` in one fused pass
/// (counted as three vector traversals: two reads and a write).
pub fn combine_direction(g: &GradientPair, w: &AwWeights) -> ParamVector {
    note_passes(3);
    let data = g
        .g_r
        .as_slice()
        .iter()
        .zip(g.g_f.as_slice())
        .map(|(&r, &f)| w.w_r * r + w.w_f * f)
        .collect();
    ParamVector(data)
}

/// Euclidean norm, counted as one traversal.
pub fn norm(v: &ParamVector) -> f64 {
    dot(v.as_slice(), v.as_slice()).sqrt()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector(v.to_vec())
    }

    fn pair(r: &[f64], f: &[f64]) -> GradientPair {
        GradientPair::new(pv(r), pv(f)).unwrap()
    }

    fn angle(u: &ParamVector, v: &ParamVector) -> f64 {
        cos_angle(u, v).unwrap().acos()
    }

    #[test]
    fn cos_angle_reference_values() {
        assert_eq!(cos_angle(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(cos_angle(&pv(&[1.0, 0.0]), &pv(&[-1.0, 0.0])).unwrap(), -1.0);
        let c = cos_angle(&pv(&[1.0, 0.0]), &pv(&[1.0, 1.0])).unwrap();
        assert!((c - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            cos_angle(&pv(&[0.0, 0.0]), &pv(&[1.0, 0.0])),
            Err(AwError::ZeroNorm { .. })
        ));
    }

    #[test]
    fn obtuse_is_strict() {
        assert!(!is_obtuse(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])).unwrap());
        assert!(is_obtuse(&pv(&[1.0, 0.0]), &pv(&[-1.0, 0.1])).unwrap());
        assert!(!is_obtuse(&pv(&[1.0, 2.0]), &pv(&[1.0, 2.0])).unwrap());
    }

    #[test]
    fn bisector_hand_example() {
        let g = pair(&[2.0, 0.0], &[0.0, 1.0]);
        let w = bisector_weights(&g).unwrap();
        assert_eq!((w.w_r, w.w_f), (0.5, 1.0));
        let d = combine_direction(&g, &w);
        assert_eq!(d.as_slice(), &[1.0, 1.0]);
        let half = angle(&g.g_r, &g.g_f) / 2.0;
        assert!((angle(&d, &g.g_r) - half).abs() < 1e-12);
        assert!((angle(&d, &g.g_f) - half).abs() < 1e-12);
    }

    #[test]
    fn bisector_of_equal_gradients_is_parallel() {
        let g = pair(&[0.3, -0.4], &[0.3, -0.4]);
        let w = bisector_weights(&g).unwrap();
        let d = combine_direction(&g, &w);
        assert!(angle(&d, &g.g_r).abs() < 1e-9);
    }

    #[test]
    fn bisector_rejects_antiparallel() {
        let g = pair(&[1.0, 2.0], &[-2.0, -4.0]);
        assert!(matches!(bisector_weights(&g), Err(AwError::Antiparallel)));
    }

    #[test]
    fn favor_real_hand_example() {
        let g = pair(&[1.0, 0.0], &[-1.0, 1.0]);
        let w = favor_real_weights(&g).unwrap();
        assert!((w.w_r - 1.0).abs() < 1e-15);
        assert!((w.w_f - 0.5).abs() < 1e-15);
        let d = combine_direction(&g, &w);
        assert!((d.as_slice()[0] - 0.5).abs() < 1e-15);
        assert!((d.as_slice()[1] - 0.5).abs() < 1e-15);
        let dot_fake: f64 = d.as_slice().iter().zip(g.g_f.as_slice()).map(|(a, b)| a * b).sum();
        assert!(dot_fake.abs() < 1e-15);
    }

    #[test]
    fn favor_real_orthogonal_inputs() {
        let g = pair(&[1.0, 0.0], &[0.0, 2.0]);
        let w = favor_real_weights(&g).unwrap();
        assert_eq!(w.w_f, 0.0);
    }

    #[test]
    fn favor_real_antiparallel_gives_zero_direction() {
        let g = pair(&[1.0, 0.0], &[-1.0, 0.0]);
        let w = favor_real_weights(&g).unwrap();
        assert!((w.w_f - 1.0).abs() < 1e-15);
        let d = combine_direction(&g, &w);
        assert!(norm(&d) < 1e-15);
    }

    #[test]
    fn favor_fake_is_swapped_favor_real() {
        let g = pair(&[-1.0, 1.0], &[1.0, 0.0]);
        let w = favor_fake_weights(&g).unwrap();
        let swapped = favor_real_weights(&pair(&[1.0, 0.0], &[-1.0, 1.0])).unwrap();
        assert_eq!(w.w_r, swapped.w_f);
        assert_eq!(w.w_f, swapped.w_r);
        assert_eq!((w.w_r, w.w_f), (0.5, 1.0));
    }

    #[test]
    fn nonnorm_hand_examples() {
        let g = pair(&[1.0, 0.0], &[-1.0, 1.0]);
        let w = favor_real_weights_nonnorm(&g).unwrap();
        assert_eq!((w.w_r, w.w_f), (1.0, 0.5));
        let d = combine_direction(&g, &w);
        assert_eq!(d.as_slice(), &[0.5, 0.5]);

        let g = pair(&[3.0, 0.0], &[0.0, 1.0]);
        let w = favor_real_weights_nonnorm(&g).unwrap();
        assert_eq!((w.w_r, w.w_f), (1.0, 0.0));
        let d = combine_direction(&g, &w);
        assert_eq!(d.as_slice(), &[3.0, 0.0]);
    }

    fn random_pair(rng: &mut ChaCha8Rng, dim: usize) -> GradientPair {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        pair(&draw(rng), &draw(rng))
    }

    #[test]
    fn bisector_property_high_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let g = random_pair(&mut rng, 1000);
            let w = bisector_weights(&g).unwrap();
            let d = combine_direction(&g, &w);
            let full = angle(&g.g_r, &g.g_f);
            assert!((angle(&d, &g.g_r) - angle(&d, &g.g_f)).abs() < 1e-9);
            assert!((angle(&d, &g.g_r) - full / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn orthogonality_property_high_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..200 {
            let g = random_pair(&mut rng, 1000);
            for w in [
                favor_real_weights(&g).unwrap(),
                favor_real_weights_nonnorm(&g).unwrap(),
            ] {
                let d = combine_direction(&g, &w);
                assert!(cos_angle(&d, &g.g_f).unwrap().abs() < 1e-9);
                let acute: f64 = d
                    .as_slice()
                    .iter()
                    .zip(g.g_r.as_slice())
                    .map(|(a, b)| a * b)
                    .sum();
                assert!(acute >= -1e-12);
            }
        }
    }

    #[test]
    fn select_branch_examples() {
        let cfg = AwConfig::default();
        let obtuse = pair(&[1.0, 0.0], &[-0.8, 0.3]);
        let acute = pair(&[1.0, 0.0], &[0.8, 0.3]);

        // real score far behind, conflicting gradients
        let w = aw_select(&obtuse, &ScoreStats { s_r: 0.3, s_f: 0.9, n: 64 }, &cfg).unwrap();
        assert_eq!(w.branch, Branch::FavorRealObtuse);
        let geo_w = favor_real_weights(&obtuse).unwrap();
        assert!((w.w_r - (geo_w.w_r + 0.05)).abs() < 1e-15);
        assert!((w.w_f - (geo_w.w_f + 0.05)).abs() < 1e-15);

        // real score satisfied, agreeing gradients
        let w = aw_select(&acute, &ScoreStats { s_r: 0.9, s_f: 0.2, n: 64 }, &cfg).unwrap();
        assert_eq!(w.branch, Branch::FavorFakeAcute);
        assert!((w.w_r - 0.05).abs() < 1e-15);
        let nf = norm(&acute.g_f);
        assert!((w.w_f - (1.0 / nf + 0.05)).abs() < 1e-15);

        // neither side fires: bisector
        let w = aw_select(&acute, &ScoreStats { s_r: 0.6, s_f: 0.6, n: 64 }, &cfg).unwrap();
        assert_eq!(w.branch, Branch::Bisector);
    }

    #[test]
    fn select_tie_falls_through() {
        // With delta = 0.25 the comparison values are exact in binary:
        // s_f - delta = 0.75 - 0.25 = 0.5 = s_r, so neither strict comparison
        // fires on the score gap.
        let cfg = AwConfig {
            delta: 0.25,
            ..AwConfig::default()
        };
        let g = pair(&[1.0, 0.0], &[0.8, 0.3]);
        let w = aw_select(&g, &ScoreStats { s_r: 0.5, s_f: 0.75, n: 8 }, &cfg).unwrap();
        assert_eq!(w.branch, Branch::Bisector);

        // s_r exactly alpha1 with the gap tie: still the bisector
        let w = aw_select(&g, &ScoreStats { s_r: 0.5, s_f: 0.75, n: 8 }, &cfg).unwrap();
        assert_eq!(w.branch, Branch::Bisector);
    }

    #[test]
    fn select_degenerate_gate() {
        let g = pair(&[0.0, 0.0], &[1.0, 0.0]);
        let w = aw_select(
            &g,
            &ScoreStats { s_r: 0.5, s_f: 0.5, n: 4 },
            &AwConfig::default(),
        )
        .unwrap();
        assert_eq!(w.branch, Branch::DegenerateGate);
        assert_eq!((w.w_r, w.w_f), (1.0, 1.0));
    }

    #[test]
    fn select_rejects_invalid_config() {
        let cfg = AwConfig {
            alpha1: 0.8,
            alpha2: 0.5,
            ..AwConfig::default()
        };
        let g = pair(&[1.0], &[1.0]);
        assert!(matches!(
            aw_select(&g, &ScoreStats { s_r: 0.5, s_f: 0.5, n: 1 }, &cfg),
            Err(AwError::InvalidConfig(_))
        ));
    }

    #[test]
    fn nonnormalized_ladder_weights() {
        let cfg = AwConfig {
            normalized: false,
            ..AwConfig::default()
        };
        let obtuse = pair(&[2.0, 0.0], &[-1.0, 1.0]);
        let w = aw_select(&obtuse, &ScoreStats { s_r: 0.1, s_f: 0.9, n: 4 }, &cfg).unwrap();
        assert_eq!(w.branch, Branch::FavorRealObtuse);
        assert!((w.w_r - 1.05).abs() < 1e-15);
        // -rf/ff = 2/2 = 1
        assert!((w.w_f - 1.05).abs() < 1e-15);

        let w = aw_select(&obtuse, &ScoreStats { s_r: 0.6, s_f: 0.58, n: 4 }, &cfg).unwrap();
        assert_eq!(w.branch, Branch::Bisector);
        assert_eq!((w.w_r, w.w_f), (1.05, 1.05));
    }

    #[test]
    fn combine_reductions() {
        let g = pair(&[1.0, 2.0], &[3.0, -1.0]);
        let both = AwWeights { w_r: 1.0, w_f: 1.0, branch: Branch::DegenerateGate };
        assert_eq!(combine_direction(&g, &both).as_slice(), &[4.0, 1.0]);
        let real_only = AwWeights { w_r: 1.0, w_f: 0.0, branch: Branch::FavorRealAcute };
        assert_eq!(combine_direction(&g, &real_only).as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn operation_budget_within_nine_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_pair(&mut rng, 4417);
        let s = ScoreStats { s_r: 0.4, s_f: 0.7, n: 64 };
        reset_pass_counter();
        let w = aw_select(&g, &s, &AwConfig::default()).unwrap();
        let _d = combine_direction(&g, &w);
        let passes = pass_count();
        assert!(passes <= 9, "used {passes} vector passes");
    }

    #[test]
    fn scale_invariance_of_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..50 {
            let g = random_pair(&mut rng, 64);
            let scaled = GradientPair::new(
                ParamVector(g.g_r.as_slice().iter().map(|x| 3.7 * x).collect()),
                g.g_f.clone(),
            )
            .unwrap();
            for make in [bisector_weights, favor_real_weights, favor_fake_weights] {
                let d1 = combine_direction(&g, &make(&g).unwrap());
                let d2 = combine_direction(&scaled, &make(&scaled).unwrap());
                let n1 = norm(&d1);
                let n2 = norm(&d2);
                for (a, b) in d1.as_slice().iter().zip(d2.as_slice()) {
                    assert!((a / n1 - b / n2).abs() < 1e-9);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bisector_equality_proptest(
            seed in 0u64..500,
            dim in prop::sample::select(vec![2usize, 10, 1000]),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_pair(&mut rng, dim);
            // skip the measure-zero antiparallel case
            if cos_angle(&g.g_r, &g.g_f).unwrap() <= -1.0 + 1e-9 {
                return Ok(());
            }
            let w = bisector_weights(&g).unwrap();
            let d = combine_direction(&g, &w);
            prop_assert!((angle(&d, &g.g_r) - angle(&d, &g.g_f)).abs() < 1e-9);
        }

        #[test]
        fn orthogonality_proptest(
            seed in 0u64..500,
            dim in prop::sample::select(vec![2usize, 10, 1000]),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_pair(&mut rng, dim);
            let w = favor_fake_weights(&g).unwrap();
            let d = combine_direction(&g, &w);
            prop_assert!(cos_angle(&d, &g.g_r).unwrap().abs() < 1e-9);
        }
    }
}

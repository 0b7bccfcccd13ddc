//! Real/fake loss decompositions and the discrete-support optimality results
//! for the weighted discriminator objective.
//!
//! Losses are stored as quantities to MAXIMIZE: the discriminator improves by
//! pushing both components up. The optimizer layer negates when it wants a
//! descent-form update. Both components of a pair are kept separate all the
//! way down so each has its own backward entry point.

use crate::autodiff::{Array, AutodiffError, Bindings, Graph, NodeId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("graph error: {0}")]
    Graph(#[from] AutodiffError),

    #[error("probabilities must be non-negative, got {0}")]
    NegativeProbability(f64),

    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),

    #[error("weights must be positive, got w_r={w_r}, w_f={w_f}")]
    NonPositiveWeight { w_r: f64, w_f: f64 },

    #[error("support point {0} has zero mass under both distributions")]
    EmptySupportPoint(usize),

    #[error("distributions have different support sizes: {0} vs {1}")]
    SupportMismatch(usize, usize),

    #[error("absolute continuity violated at point {0}: p > 0 but q = 0")]
    AbsoluteContinuity(usize),
}

// ---------------------------------------------------------------------------
// Loss families
// ---------------------------------------------------------------------------

/// Discriminator loss family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossFamily {
    /// `L_r = mean log sigma(d_real)`, `L_f = mean log(1 - sigma(d_fake))`.
    Bce,
    /// `L_r = mean min(0, d_real - 1)`, `L_f = mean min(0, -1 - d_fake)`.
    Hinge,
}

/// Generator loss family; both are minimized by descent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenLossFamily {
    /// Non-saturating form `-mean log sigma(d_fake)`.
    BceNonSaturating,
    /// `-mean d_fake`.
    Hinge,
}

/// Appends the real-component loss to `graph` on top of a logits node.
pub fn append_real_loss(
    graph: &mut Graph,
    logits: NodeId,
    family: LossFamily,
) -> Result<NodeId, LossError> {
    let node = match family {
        LossFamily::Bce => {
            let s = graph.sigmoid(logits);
            let l = graph.log(s);
            graph.mean(l)
        }
        LossFamily::Hinge => {
            let shifted = graph.add_const(logits, -1.0);
            let clipped = graph.min_const(shifted, 0.0);
            graph.mean(clipped)
        }
    };
    Ok(node)
}

/// Appends the fake-component loss. The cross-entropy form uses the identity
/// `log(1 - sigma(d)) = log sigma(-d)`, which is exact and avoids cancelling
/// against 1.
pub fn append_fake_loss(
    graph: &mut Graph,
    logits: NodeId,
    family: LossFamily,
) -> Result<NodeId, LossError> {
    let node = match family {
        LossFamily::Bce => {
            let n = graph.neg(logits);
            let s = graph.sigmoid(n);
            let l = graph.log(s);
            graph.mean(l)
        }
        LossFamily::Hinge => {
            let shifted = graph.add_const(logits, 1.0);
            let negated = graph.neg(shifted);
            let clipped = graph.min_const(negated, 0.0);
            graph.mean(clipped)
        }
    };
    Ok(node)
}

/// Appends the generator loss on top of the discriminator logits of a fake
/// batch.
pub fn append_generator_loss(
    graph: &mut Graph,
    logits: NodeId,
    family: GenLossFamily,
) -> Result<NodeId, LossError> {
    let node = match family {
        GenLossFamily::BceNonSaturating => {
            let s = graph.sigmoid(logits);
            let l = graph.log(s);
            let m = graph.mean(l);
            graph.neg(m)
        }
        GenLossFamily::Hinge => {
            let m = graph.mean(logits);
            graph.neg(m)
        }
    };
    Ok(node)
}

// ---------------------------------------------------------------------------
// LossPair
// ---------------------------------------------------------------------------

/// One loss component as a standalone graph over a logits leaf.
pub struct LossGraph {
    pub graph: Graph,
    pub logits: NodeId,
    pub loss: NodeId,
}

/// Real and fake loss components evaluated on concrete logits, each with its
/// own graph and backward entry point.
pub struct LossPair {
    pub l_r: f64,
    pub l_f: f64,
    pub real: LossGraph,
    pub fake: LossGraph,
}

fn component_graph(
    logits: &Array,
    family: LossFamily,
    real: bool,
) -> Result<(LossGraph, f64), LossError> {
    let mut graph = Graph::new();
    let leaf = graph.param(logits.shape());
    let loss = if real {
        append_real_loss(&mut graph, leaf, family)?
    } else {
        append_fake_loss(&mut graph, leaf, family)?
    };
    let mut bindings = Bindings::new();
    bindings.set(leaf, logits.clone());
    let value = graph.forward(&bindings)?.value(loss).scalar_value();
    Ok((
        LossGraph {
            graph,
            logits: leaf,
            loss,
        },
        value,
    ))
}

/// Builds both components of the given family over concrete logits.
pub fn loss_pair(
    family: LossFamily,
    real_logits: &Array,
    fake_logits: &Array,
) -> Result<LossPair, LossError> {
    let (real, l_r) = component_graph(real_logits, family, true)?;
    let (fake, l_f) = component_graph(fake_logits, family, false)?;
    Ok(LossPair { l_r, l_f, real, fake })
}

pub fn bce_pair(real_logits: &Array, fake_logits: &Array) -> Result<LossPair, LossError> {
    loss_pair(LossFamily::Bce, real_logits, fake_logits)
}

pub fn hinge_pair(real_logits: &Array, fake_logits: &Array) -> Result<LossPair, LossError> {
    loss_pair(LossFamily::Hinge, real_logits, fake_logits)
}

/// Scalar generator loss on concrete fake logits.
pub fn generator_loss(fake_logits: &Array, family: GenLossFamily) -> Result<f64, LossError> {
    let mut graph = Graph::new();
    let leaf = graph.input(fake_logits.shape());
    let loss = append_generator_loss(&mut graph, leaf, family)?;
    let mut bindings = Bindings::new();
    bindings.set(leaf, fake_logits.clone());
    Ok(graph.forward(&bindings)?.value(loss).scalar_value())
}

/// Logistic sigmoid, used wherever scores are formed from logits.
pub fn sigmoid(x: f64) -> f64 {
    crate::autodiff::sigmoid(x)
}

// ---------------------------------------------------------------------------
// Discrete distributions and the weighted-objective optimum
// ---------------------------------------------------------------------------

/// Finite-support probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution {
    p: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self, LossError> {
        if let Some(&bad) = p.iter().find(|&&x| x < 0.0) {
            return Err(LossError::NegativeProbability(bad));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(LossError::NotNormalized(sum));
        }
        Ok(DiscreteDistribution { p })
    }

    pub fn uniform(m: usize) -> Self {
        DiscreteDistribution {
            p: vec![1.0 / m as f64; m],
        }
    }

    /// Random distribution by normalizing positive draws; entries stay
    /// strictly positive.
    pub fn random(rng: &mut impl rand::Rng, m: usize) -> Self {
        let raw: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let sum: f64 = raw.iter().sum();
        DiscreteDistribution {
            p: raw.into_iter().map(|x| x / sum).collect(),
        }
    }

    pub fn support_size(&self) -> usize {
        self.p.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }
}

fn check_weights(w_r: f64, w_f: f64) -> Result<(), LossError> {
    if w_r <= 0.0 || w_f <= 0.0 {
        return Err(LossError::NonPositiveWeight { w_r, w_f });
    }
    Ok(())
}

fn check_supports(
    p_d: &DiscreteDistribution,
    p_g: &DiscreteDistribution,
) -> Result<(), LossError> {
    if p_d.support_size() != p_g.support_size() {
        return Err(LossError::SupportMismatch(
            p_d.support_size(),
            p_g.support_size(),
        ));
    }
    Ok(())
}

/// Pointwise maximizer of the weighted objective for a fixed generator
/// distribution: `D*_i = w_r p_d_i / (w_r p_d_i + w_f p_g_i)`.
pub fn optimal_discriminator(
    p_d: &DiscreteDistribution,
    p_g: &DiscreteDistribution,
    w_r: f64,
    w_f: f64,
) -> Result<Vec<f64>, LossError> {
    check_weights(w_r, w_f)?;
    check_supports(p_d, p_g)?;
    p_d.probs()
        .iter()
        .zip(p_g.probs())
        .enumerate()
        .map(|(i, (&pd, &pg))| {
            let denom = w_r * pd + w_f * pg;
            if denom == 0.0 {
                Err(LossError::EmptySupportPoint(i))
            } else {
                Ok(w_r * pd / denom)
            }
        })
        .collect()
}

/// The weighted objective `w_r sum p_d_i log D_i + w_f sum p_g_i log(1-D_i)`,
/// with zero-mass terms excluded (`0 * log 0 = 0`).
pub fn aw_value(
    p_d: &DiscreteDistribution,
    p_g: &DiscreteDistribution,
    discriminator: &[f64],
    w_r: f64,
    w_f: f64,
) -> Result<f64, LossError> {
    check_weights(w_r, w_f)?;
    check_supports(p_d, p_g)?;
    let mut total = 0.0;
    for (i, (&pd, &pg)) in p_d.probs().iter().zip(p_g.probs()).enumerate() {
        let d = discriminator[i];
        if pd > 0.0 {
            total += w_r * pd * d.ln();
        }
        if pg > 0.0 {
            total += w_f * pg * (1.0 - d).ln();
        }
    }
    Ok(total)
}

/// Value of the min-max problem under weights `(w_r, w_f)`:
/// `w_r log(w_r / (w_r + w_f)) + w_f log(w_f / (w_r + w_f))`, attained when
/// the generator matches the data distribution.
pub fn minimax_value(w_r: f64, w_f: f64) -> Result<f64, LossError> {
    check_weights(w_r, w_f)?;
    let total = w_r + w_f;
    Ok(w_r * (w_r / total).ln() + w_f * (w_f / total).ln())
}

/// `sum p_i log(p_i / q_i)` with `0 log 0 = 0`; requires `q_i > 0` wherever
/// `p_i > 0`.
pub fn discrete_kl(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<f64, LossError> {
    check_supports(p, q)?;
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.probs().iter().zip(q.probs()).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(LossError::AbsoluteContinuity(i));
            }
            total += pi * (pi / qi).ln();
        }
    }
    Ok(total)
}

/// Checks the exact decomposition of the maximized weighted objective:
/// plugging the optimal discriminator into the objective equals the min-max
/// value plus weighted divergences of both distributions from the weighted
/// mixture `(w_r p_d + w_f p_g) / (w_r + w_f)`.
///
/// Returns `(lhs, rhs, |lhs - rhs|)`. Points with zero mass under both
/// distributions are excluded from every sum.
pub fn value_decomposition_check(
    p_d: &DiscreteDistribution,
    p_g: &DiscreteDistribution,
    w_r: f64,
    w_f: f64,
) -> Result<(f64, f64, f64), LossError> {
    check_weights(w_r, w_f)?;
    check_supports(p_d, p_g)?;
    let m = p_d.support_size();
    let keep: Vec<bool> = (0..m)
        .map(|i| p_d.probs()[i] > 0.0 || p_g.probs()[i] > 0.0)
        .collect();

    let total = w_r + w_f;
    let mix: Vec<f64> = (0..m)
        .map(|i| (w_r * p_d.probs()[i] + w_f * p_g.probs()[i]) / total)
        .collect();

    let mut lhs = 0.0;
    let mut kl_d = 0.0;
    let mut kl_g = 0.0;
    for i in (0..m).filter(|&i| keep[i]) {
        let pd = p_d.probs()[i];
        let pg = p_g.probs()[i];
        let denom = w_r * pd + w_f * pg;
        let d_star = w_r * pd / denom;
        if pd > 0.0 {
            lhs += w_r * pd * d_star.ln();
            kl_d += pd * (pd / mix[i]).ln();
        }
        if pg > 0.0 {
            lhs += w_f * pg * (1.0 - d_star).ln();
            kl_g += pg * (pg / mix[i]).ln();
        }
    }
    let rhs = minimax_value(w_r, w_f)? + w_r * kl_d + w_f * kl_g;
    Ok((lhs, rhs, (lhs - rhs).abs()))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

//! Training objectives.
//!
//! Every loss is a mean over cells (or patches), so values do not depend on
//! the grid size. Each loss has a `*_grad` companion returning the value
//! together with the gradient with respect to the generated input.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalkit::Class;
use crate::nn::Real;

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch {
            expected: (a, 1),
            got: (b, 1),
        });
    }
    Ok(())
}

fn non_empty(n: usize, what: &'static str) -> Result<()> {
    if n == 0 {
        return Err(Error::Empty(what));
    }
    Ok(())
}

fn mean_sq_to<T: Real>(s: &[T], target: T) -> T {
    let n = T::lit(s.len() as f64);
    s.iter().map(|&v| (v - target) * (v - target)).sum::<T>() / n
}

fn sq_grad<T: Real>(s: &[T], target: T) -> Vec<T> {
    let k = T::lit(2.0 / s.len() as f64);
    s.iter().map(|&v| k * (v - target)).collect()
}

fn sign<T: Real>(d: T) -> T {
    if d > T::zero() {
        T::one()
    } else if d < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Least-squares discriminator loss: mean of `(s - 1)^2` over real patches
/// plus mean of `s^2` over fake patches.
pub fn lsgan_discriminator_loss<T: Real>(real: &[T], fake: &[T]) -> Result<T> {
    non_empty(real.len(), "real scores")?;
    non_empty(fake.len(), "fake scores")?;
    Ok(mean_sq_to(real, T::one()) + mean_sq_to(fake, T::zero()))
}

/// Loss with gradients for the real and the fake scores.
pub fn lsgan_discriminator_grad<T: Real>(real: &[T], fake: &[T]) -> Result<(T, Vec<T>, Vec<T>)> {
    let loss = lsgan_discriminator_loss(real, fake)?;
    Ok((loss, sq_grad(real, T::one()), sq_grad(fake, T::zero())))
}

/// Least-squares generator loss: mean of `(s - 1)^2` over fake patches.
pub fn lsgan_generator_loss<T: Real>(fake: &[T]) -> Result<T> {
    non_empty(fake.len(), "fake scores")?;
    Ok(mean_sq_to(fake, T::one()))
}

pub fn lsgan_generator_grad<T: Real>(fake: &[T]) -> Result<(T, Vec<T>)> {
    let loss = lsgan_generator_loss(fake)?;
    Ok((loss, sq_grad(fake, T::one())))
}

fn l1_mean<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    same_len(a.len(), b.len())?;
    non_empty(a.len(), "grid")?;
    let n = T::lit(a.len() as f64);
    Ok(a.iter().zip(b).map(|(&u, &v)| (u - v).abs()).sum::<T>() / n)
}

fn l1_mean_grad<T: Real>(target: &[T], pred: &[T]) -> Result<(T, Vec<T>)> {
    let loss = l1_mean(target, pred)?;
    let k = T::one() / T::lit(pred.len() as f64);
    let g = target.iter().zip(pred).map(|(&t, &p)| k * sign(p - t)).collect();
    Ok((loss, g))
}

/// Mean absolute difference between a grid and its reconstruction.
pub fn cycle_consistency_loss<T: Real>(original: &[T], reconstructed: &[T]) -> Result<T> {
    l1_mean(original, reconstructed)
}

/// Gradient with respect to `reconstructed`.
pub fn cycle_consistency_grad<T: Real>(original: &[T], reconstructed: &[T]) -> Result<(T, Vec<T>)> {
    l1_mean_grad(original, reconstructed)
}

/// Mean absolute error between two radar frames.
pub fn paired_regression_loss<T: Real>(x_sim: &[T], x_real: &[T]) -> Result<T> {
    l1_mean(x_real, x_sim)
}

/// Gradient with respect to `x_sim`.
pub fn paired_regression_grad<T: Real>(x_sim: &[T], x_real: &[T]) -> Result<(T, Vec<T>)> {
    l1_mean_grad(x_real, x_sim)
}

/// Mean absolute difference over measured cells only; zero when nothing is
/// measured.
pub fn masked_alignment_loss<T: Real>(pred: &[T], y: &[T], mask: &[bool]) -> Result<T> {
    Ok(masked_alignment_grad(pred, y, mask)?.0)
}

/// Gradient with respect to `pred`.
pub fn masked_alignment_grad<T: Real>(pred: &[T], y: &[T], mask: &[bool]) -> Result<(T, Vec<T>)> {
    same_len(y.len(), pred.len())?;
    same_len(y.len(), mask.len())?;
    let count = mask.iter().filter(|&&m| m).count();
    let mut g = vec![T::zero(); pred.len()];
    if count == 0 {
        return Ok((T::zero(), g));
    }
    let k = T::one() / T::lit(count as f64);
    let mut sum = T::zero();
    for i in 0..pred.len() {
        if mask[i] {
            let d = pred[i] - y[i];
            sum += d.abs();
            g[i] = k * sign(d);
        }
    }
    Ok((sum * k, g))
}

/// Per-class weights for [`weighted_cross_entropy`], indexed by [`Class`].
pub type ClassWeights = [f64; 3];

/// Free 1, occupied 50, unknown 1.
pub const DEFAULT_CLASS_WEIGHTS: ClassWeights = [1.0, 50.0, 1.0];

/// Mean over cells of `weight[label] * -log softmax(logits)[label]`.
///
/// `logits` is class-major: three planes of `labels.len()` cells.
pub fn weighted_cross_entropy<T: Real>(
    logits: &[T],
    labels: &[Class],
    weights: &ClassWeights,
) -> Result<T> {
    Ok(weighted_cross_entropy_grad(logits, labels, weights)?.0)
}

/// Loss and gradient with respect to the logits.
pub fn weighted_cross_entropy_grad<T: Real>(
    logits: &[T],
    labels: &[Class],
    weights: &ClassWeights,
) -> Result<(T, Vec<T>)> {
    let n = labels.len();
    non_empty(n, "labels")?;
    same_len(3 * n, logits.len())?;
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidParam("class weights must be positive".into()));
    }
    let inv_n = T::one() / T::lit(n as f64);
    let mut g = vec![T::zero(); logits.len()];
    let mut total = T::zero();
    for (k, &label) in labels.iter().enumerate() {
        let z = [logits[k], logits[n + k], logits[2 * n + k]];
        let m = z[0].max(z[1]).max(z[2]);
        let e = z.map(|v| (v - m).exp());
        let sum = e[0] + e[1] + e[2];
        let c = label.index();
        let w = T::lit(weights[c]);
        total += w * (sum.ln() + m - z[c]);
        for (j, &ej) in e.iter().enumerate() {
            let target = if j == c { T::one() } else { T::zero() };
            g[j * n + k] = w * inv_n * (ej / sum - target);
        }
    }
    Ok((total * inv_n, g))
}

/// A generator-side objective term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    /// Paired regression of simulated against real radar.
    Ax,
    /// Masked alignment of inferred elevation with lidar heights.
    Aw,
    /// Adversarial loss of the forward generator.
    Gx,
    /// Adversarial loss of the backward generator.
    Gw,
    /// Radar reconstruction through the backward then forward model.
    Cx,
    /// Elevation reconstruction through the forward then backward model.
    Cw,
}

impl Term {
    pub const ALL: [Term; 6] = [Term::Ax, Term::Aw, Term::Gx, Term::Gw, Term::Cx, Term::Cw];

    pub fn name(self) -> &'static str {
        match self {
            Term::Ax => "a_x",
            Term::Aw => "a_w",
            Term::Gx => "g_x",
            Term::Gw => "g_w",
            Term::Cx => "c_x",
            Term::Cw => "c_w",
        }
    }
}

/// Coefficients of the generator objective. The forward adversarial term
/// and the paired regression term always have weight 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_gw: f64,
    pub lambda_cx: f64,
    pub lambda_cw: f64,
    pub lambda_aw: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_gw: 1.0,
            lambda_cx: 10.0,
            lambda_cw: 10.0,
            lambda_aw: 10.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_gw, self.lambda_cx, self.lambda_cw, self.lambda_aw];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParam("loss weights must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn weight(&self, term: Term) -> f64 {
        match term {
            Term::Ax | Term::Gx => 1.0,
            Term::Gw => self.lambda_gw,
            Term::Cx => self.lambda_cx,
            Term::Cw => self.lambda_cw,
            Term::Aw => self.lambda_aw,
        }
    }
}

/// Raw generator-side loss values; `None` for terms that were not computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub a_x: Option<f64>,
    pub a_w: Option<f64>,
    pub g_x: Option<f64>,
    pub g_w: Option<f64>,
    pub c_x: Option<f64>,
    pub c_w: Option<f64>,
}

impl LossParts {
    pub fn get(&self, term: Term) -> Option<f64> {
        match term {
            Term::Ax => self.a_x,
            Term::Aw => self.a_w,
            Term::Gx => self.g_x,
            Term::Gw => self.g_w,
            Term::Cx => self.c_x,
            Term::Cw => self.c_w,
        }
    }

    pub fn set(&mut self, term: Term, value: f64) {
        let slot = match term {
            Term::Ax => &mut self.a_x,
            Term::Aw => &mut self.a_w,
            Term::Gx => &mut self.g_x,
            Term::Gw => &mut self.g_w,
            Term::Cx => &mut self.c_x,
            Term::Cw => &mut self.c_w,
        };
        *slot = Some(value);
    }
}

/// All terms of one training step. Inactive terms are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub a_x: Option<f64>,
    pub a_w: Option<f64>,
    pub g_x: Option<f64>,
    pub g_w: Option<f64>,
    pub c_x: Option<f64>,
    pub c_w: Option<f64>,
    pub d_x: Option<f64>,
    pub d_w: Option<f64>,
    pub total: f64,
}

impl LossBreakdown {
    pub const COLUMNS: [&'static str; 9] = ["a_x", "a_w", "g_x", "g_w", "c_x", "c_w", "d_x", "d_w", "total"];

    /// Values in [`Self::COLUMNS`] order.
    pub fn values(&self) -> [Option<f64>; 9] {
        [
            self.a_x,
            self.a_w,
            self.g_x,
            self.g_w,
            self.c_x,
            self.c_w,
            self.d_x,
            self.d_w,
            Some(self.total),
        ]
    }
}

/// Weighted sum of the active terms. Parts of inactive terms are ignored
/// and reported as `None`.
pub fn combined_generator_objective(
    parts: &LossParts,
    weights: &LossWeights,
    active: &[Term],
) -> Result<LossBreakdown> {
    weights.validate()?;
    let mut out = LossBreakdown::default();
    let mut kept = LossParts::default();
    for &term in Term::ALL.iter().filter(|t| active.contains(t)) {
        let v = parts.get(term).ok_or(Error::MissingTerm(term.name()))?;
        kept.set(term, v);
        out.total += weights.weight(term) * v;
    }
    out.a_x = kept.a_x;
    out.a_w = kept.a_w;
    out.g_x = kept.g_x;
    out.g_w = kept.g_w;
    out.c_x = kept.c_x;
    out.c_w = kept.c_w;
    Ok(out)
}

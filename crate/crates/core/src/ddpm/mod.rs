//! Diffusion over affordance directions and masks: linear β schedule,
//! forward noising, ancestral sampling with classifier-free guidance.
//!
//! A denoiser maps (x_t, t, conditioning) to a noise estimate of the same
//! length as x_t; conditioning is an opaque vector, absent for the
//! unconditional branch.

mod toy;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::contact::HandDirections;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::hand::NUM_PARTS;

pub use toy::{condition_dropped, ToyDenoiser, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DdpmConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Classifier-free guidance scale used at sampling time.
    pub guidance: f64,
    /// Probability of dropping the condition during training.
    pub cond_drop: f64,
}

impl Default for DdpmConfig {
    fn default() -> Self {
        DdpmConfig {
            steps: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
            guidance: 2.0,
            cond_drop: 0.1,
        }
    }
}

impl DdpmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cond_drop) || !self.guidance.is_finite() {
            return Err(Error::Config(
                "ddpm needs cond_drop in [0, 1] and a finite guidance scale".into(),
            ));
        }
        DdpmSchedule::linear(self.steps, self.beta_start, self.beta_end).map(|_| ())
    }

    pub fn schedule(&self) -> Result<DdpmSchedule> {
        DdpmSchedule::linear(self.steps, self.beta_start, self.beta_end)
    }
}

/// β_t, α_t and ᾱ_t for t = 1..=T, stored at index t − 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DdpmSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl DdpmSchedule {
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps < 2 || !(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0) {
            return Err(Error::Config(format!(
                "schedule needs T >= 2 and 0 < beta_start < beta_end < 1 (got T={steps}, {beta_start}..{beta_end})"
            )));
        }
        let betas: Vec<f64> = (0..steps)
            .map(|i| beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64)
            .collect();
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut acc = 1.0;
        let alpha_bars = alphas
            .iter()
            .map(|a| {
                acc *= a;
                acc
            })
            .collect();
        Ok(DdpmSchedule {
            betas,
            alphas,
            alpha_bars,
        })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// ᾱ_t, with ᾱ_0 = 1.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }
}

/// Directions and masks of both hands, right hand first. Masks are real
/// valued while diffusing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffordanceState {
    pub dirs: Vec<Vec3>,
    pub mask: Vec<f64>,
}

impl AffordanceState {
    pub fn zeros(n: usize) -> Self {
        AffordanceState {
            dirs: vec![Vec3::zeros(); n],
            mask: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    /// All direction coordinates, then the mask.
    pub fn flat(&self) -> Vec<f64> {
        self.dirs
            .iter()
            .flat_map(|d| d.iter().copied().collect::<Vec<_>>())
            .chain(self.mask.iter().copied())
            .collect()
    }

    pub fn from_flat(v: &[f64]) -> Result<Self> {
        if !v.len().is_multiple_of(4) {
            return Err(Error::ShapeMismatch {
                expected: v.len() / 4 * 4,
                got: v.len(),
            });
        }
        let n = v.len() / 4;
        Ok(AffordanceState {
            dirs: (0..n)
                .map(|i| Vec3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]))
                .collect(),
            mask: v[3 * n..].to_vec(),
        })
    }

    pub fn from_hands(hands: &[HandDirections; 2]) -> Self {
        let mut s = AffordanceState::zeros(2 * NUM_PARTS);
        for (h, hd) in hands.iter().enumerate() {
            for b in 0..NUM_PARTS {
                s.dirs[h * NUM_PARTS + b] = hd.dirs[b];
                s.mask[h * NUM_PARTS + b] = if hd.mask[b] { 1.0 } else { 0.0 };
            }
        }
        s
    }

    /// Per-hand directions of a binarized state; kept directions are
    /// normalized and zero-length ones are marked degenerate.
    pub fn to_hands(&self) -> Result<[HandDirections; 2]> {
        if self.len() != 2 * NUM_PARTS {
            return Err(Error::ShapeMismatch {
                expected: 2 * NUM_PARTS,
                got: self.len(),
            });
        }
        let mut out = [HandDirections::default(), HandDirections::default()];
        for (h, hd) in out.iter_mut().enumerate() {
            for b in 0..NUM_PARTS {
                let i = h * NUM_PARTS + b;
                if self.mask[i] >= 0.5 {
                    hd.mask[b] = true;
                    let n = self.dirs[i].norm();
                    if n > 1e-9 {
                        hd.dirs[b] = self.dirs[i] / n;
                    } else {
                        hd.degenerate[b] = true;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Mask thresholded at 0.5; directions with a zero mask are cleared.
    pub fn binarized(&self) -> Self {
        let mask: Vec<f64> = self
            .mask
            .iter()
            .map(|&m| if m >= 0.5 { 1.0 } else { 0.0 })
            .collect();
        let dirs = self
            .dirs
            .iter()
            .zip(&mask)
            .map(|(d, &m)| if m == 1.0 { *d } else { Vec3::zeros() })
            .collect();
        AffordanceState { dirs, mask }
    }
}

fn check_t(t: usize, schedule: &DdpmSchedule) -> Result<()> {
    if t > schedule.steps() {
        return Err(Error::invalid(format!(
            "timestep {t} outside 0..={}",
            schedule.steps()
        )));
    }
    Ok(())
}

/// √ᾱ_t x₀ + √(1−ᾱ_t) ε on the flattened state.
pub fn forward_noise(
    x0: &[f64],
    t: usize,
    eps: &[f64],
    schedule: &DdpmSchedule,
) -> Result<Vec<f64>> {
    check_t(t, schedule)?;
    if x0.len() != eps.len() {
        return Err(Error::ShapeMismatch {
            expected: x0.len(),
            got: eps.len(),
        });
    }
    let ab = schedule.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

/// Inverts [`forward_noise`] given the same ε.
pub fn recover_x0(xt: &[f64], t: usize, eps: &[f64], schedule: &DdpmSchedule) -> Result<Vec<f64>> {
    check_t(t, schedule)?;
    if xt.len() != eps.len() {
        return Err(Error::ShapeMismatch {
            expected: xt.len(),
            got: eps.len(),
        });
    }
    let ab = schedule.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(xt.iter().zip(eps).map(|(x, e)| (x - b * e) / a).collect())
}

/// ε_u + s (ε_c − ε_u).
pub fn guidance_combine(uncond: &[f64], cond: &[f64], s: f64) -> Result<Vec<f64>> {
    if uncond.len() != cond.len() {
        return Err(Error::ShapeMismatch {
            expected: uncond.len(),
            got: cond.len(),
        });
    }
    Ok(uncond
        .iter()
        .zip(cond)
        .map(|(u, c)| u + s * (c - u))
        .collect())
}

pub trait Denoiser {
    fn predict(&mut self, x: &[f64], t: usize, cond: Option<&[f64]>) -> Vec<f64>;
}

impl<F: FnMut(&[f64], usize, Option<&[f64]>) -> Vec<f64>> Denoiser for F {
    fn predict(&mut self, x: &[f64], t: usize, cond: Option<&[f64]>) -> Vec<f64> {
        self(x, t, cond)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    /// x₀ before post-processing.
    pub raw: Vec<f64>,
    pub state: AffordanceState,
}

fn checked(eps: Vec<f64>, n: usize, t: usize) -> Result<Vec<f64>> {
    if eps.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: eps.len(),
        });
    }
    if eps.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite(format!("denoiser output at step {t}")));
    }
    Ok(eps)
}

/// Ancestral sampling from t = T down to 1 with variance β_t. The noise is
/// drawn from a ChaCha8 stream seeded with `seed`: `dim` values for x_T,
/// then `dim` values per step t > 1. With guidance 0 or no conditioning
/// only the unconditional branch is evaluated.
pub fn reverse_sample(
    denoiser: &mut dyn Denoiser,
    schedule: &DdpmSchedule,
    cond: Option<&[f64]>,
    guidance: f64,
    dim: usize,
    seed: u64,
) -> Result<SampleOutcome> {
    if dim == 0 || !dim.is_multiple_of(4) {
        return Err(Error::invalid(format!(
            "state length {dim} is not a positive multiple of 4"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal =
        |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let mut x = normal(dim);
    for t in (1..=schedule.steps()).rev() {
        let uncond = checked(denoiser.predict(&x, t, None), dim, t)?;
        let eps = match cond {
            Some(c) if guidance != 0.0 => {
                let ce = checked(denoiser.predict(&x, t, Some(c)), dim, t)?;
                guidance_combine(&uncond, &ce, guidance)?
            }
            _ => uncond,
        };
        let (a, b, ab) = (schedule.alpha(t), schedule.beta(t), schedule.alpha_bar(t));
        let k = b / (1.0 - ab).sqrt();
        let s = 1.0 / a.sqrt();
        for (xi, ei) in x.iter_mut().zip(&eps) {
            *xi = s * (*xi - k * ei);
        }
        if t > 1 {
            let z = normal(dim);
            let sd = b.sqrt();
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += sd * zi;
            }
        }
    }
    let state = AffordanceState::from_flat(&x)?.binarized();
    Ok(SampleOutcome { raw: x, state })
}

#[cfg(test)]
mod tests;

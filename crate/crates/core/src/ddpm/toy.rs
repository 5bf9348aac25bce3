//! A two-layer perceptron denoiser with hand-written gradients, and a small
//! training loop with condition dropping. Meant for tests and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{forward_noise, DdpmSchedule, Denoiser};
use crate::error::{Error, Result};
use crate::losses::loss_ddpm;
use crate::optim::Adam;

const TIME_FEATURES: usize = 4;

/// Draws whether the condition is replaced by "absent" for one sample.
pub fn condition_dropped<R: Rng>(rng: &mut R, p: f64) -> bool {
    rng.random_bool(p)
}

/// tanh hidden layer over [x, time features, condition, condition flag].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyDenoiser {
    pub dim: usize,
    pub cond_dim: usize,
    pub hidden: usize,
    pub steps: usize,
    pub params: Vec<f64>,
}

struct Cache {
    f: Vec<f64>,
    h: Vec<f64>,
}

impl ToyDenoiser {
    pub fn new(dim: usize, cond_dim: usize, hidden: usize, steps: usize, seed: u64) -> Self {
        let inputs = dim + TIME_FEATURES + cond_dim + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n1 = Normal::new(0.0, (1.0 / inputs as f64).sqrt()).expect("positive sd");
        let n2 = Normal::new(0.0, (1.0 / hidden as f64).sqrt()).expect("positive sd");
        let mut params = Vec::with_capacity(hidden * inputs + hidden + dim * hidden + dim);
        params.extend((0..hidden * inputs).map(|_| n1.sample(&mut rng)));
        params.extend(std::iter::repeat_n(0.0, hidden));
        params.extend((0..dim * hidden).map(|_| n2.sample(&mut rng)));
        params.extend(std::iter::repeat_n(0.0, dim));
        ToyDenoiser {
            dim,
            cond_dim,
            hidden,
            steps,
            params,
        }
    }

    fn inputs(&self) -> usize {
        self.dim + TIME_FEATURES + self.cond_dim + 1
    }

    fn offsets(&self) -> [usize; 3] {
        let w1 = self.hidden * self.inputs();
        [
            w1,
            w1 + self.hidden,
            w1 + self.hidden + self.dim * self.hidden,
        ]
    }

    fn features(&self, x: &[f64], t: usize, cond: Option<&[f64]>) -> Vec<f64> {
        let u = t as f64 / self.steps as f64;
        let pi = std::f64::consts::PI;
        let mut f = x.to_vec();
        f.extend([u, (pi * u).sin(), (pi * u).cos(), (2.0 * pi * u).sin()]);
        match cond {
            Some(c) => {
                f.extend_from_slice(c);
                f.push(1.0);
            }
            None => f.extend(std::iter::repeat_n(0.0, self.cond_dim + 1)),
        }
        f
    }

    fn forward(&self, x: &[f64], t: usize, cond: Option<&[f64]>) -> (Vec<f64>, Cache) {
        let f = self.features(x, t, cond);
        let n = self.inputs();
        let [b1, w2, b2] = self.offsets();
        let h: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let row = &self.params[j * n..(j + 1) * n];
                (row.iter().zip(&f).map(|(w, v)| w * v).sum::<f64>() + self.params[b1 + j]).tanh()
            })
            .collect();
        let y = (0..self.dim)
            .map(|k| {
                let row = &self.params[w2 + k * self.hidden..w2 + (k + 1) * self.hidden];
                row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + self.params[b2 + k]
            })
            .collect();
        (y, Cache { f, h })
    }

    /// Adds the parameter gradient of ⟨dy, y⟩ to `grad`.
    fn backward(&self, cache: &Cache, dy: &[f64], grad: &mut [f64]) {
        let n = self.inputs();
        let [b1, w2, b2] = self.offsets();
        let mut dh = vec![0.0; self.hidden];
        for k in 0..self.dim {
            grad[b2 + k] += dy[k];
            for j in 0..self.hidden {
                grad[w2 + k * self.hidden + j] += dy[k] * cache.h[j];
                dh[j] += dy[k] * self.params[w2 + k * self.hidden + j];
            }
        }
        for j in 0..self.hidden {
            let dz = dh[j] * (1.0 - cache.h[j] * cache.h[j]);
            grad[b1 + j] += dz;
            for (i, v) in cache.f.iter().enumerate() {
                grad[j * n + i] += dz * v;
            }
        }
    }

    /// Gradient of ⟨dy, y(x, t, cond)⟩ with respect to the parameters.
    pub fn param_grad(&self, x: &[f64], t: usize, cond: Option<&[f64]>, dy: &[f64]) -> Vec<f64> {
        let (_, cache) = self.forward(x, t, cond);
        let mut g = vec![0.0; self.params.len()];
        self.backward(&cache, dy, &mut g);
        g
    }

    /// Trains on (x₀, condition) pairs with the two-branch noise loss.
    pub fn train(
        &mut self,
        data: &[(Vec<f64>, Vec<f64>)],
        schedule: &DdpmSchedule,
        cfg: &TrainConfig,
    ) -> Result<TrainReport> {
        if data.is_empty() {
            return Err(Error::invalid("no training data"));
        }
        if schedule.steps() != self.steps {
            return Err(Error::invalid(
                "schedule length differs from the denoiser's",
            ));
        }
        for (x, c) in data {
            if x.len() != self.dim || c.len() != self.cond_dim {
                return Err(Error::ShapeMismatch {
                    expected: self.dim,
                    got: x.len(),
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut adam = Adam::new(self.params.len(), cfg.lr);
        let split = self.dim / 4 * 3;
        let mut report = TrainReport::default();
        for _ in 0..cfg.iters {
            let mut grad = vec![0.0; self.params.len()];
            let mut batch_loss = 0.0;
            for _ in 0..cfg.batch {
                let (x0, c) = &data[rng.random_range(0..data.len())];
                let t = rng.random_range(1..=self.steps);
                let eps: Vec<f64> = (0..self.dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let xt = forward_noise(x0, t, &eps, schedule)?;
                let dropped = condition_dropped(&mut rng, cfg.cond_drop);
                report.draws += 1;
                report.dropped += usize::from(dropped);
                let (y, cache) = self.forward(&xt, t, (!dropped).then_some(c.as_slice()));
                let (l, gd, gm) = loss_ddpm(
                    &eps[..split],
                    &y[..split],
                    &eps[split..],
                    &y[split..],
                    cfg.lambda_mask,
                )?;
                batch_loss += l / cfg.batch as f64;
                let dy: Vec<f64> = gd
                    .into_iter()
                    .chain(gm)
                    .map(|g| g / cfg.batch as f64)
                    .collect();
                self.backward(&cache, &dy, &mut grad);
            }
            adam.step(&mut self.params, &grad);
            report.losses.push(batch_loss);
        }
        Ok(report)
    }
}

impl Denoiser for ToyDenoiser {
    fn predict(&mut self, x: &[f64], t: usize, cond: Option<&[f64]>) -> Vec<f64> {
        self.forward(x, t, cond).0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iters: usize,
    pub batch: usize,
    pub lr: f64,
    pub cond_drop: f64,
    pub lambda_mask: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iters: 2000,
            batch: 16,
            lr: 2e-3,
            cond_drop: 0.1,
            lambda_mask: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss per iteration.
    pub losses: Vec<f64>,
    pub draws: usize,
    pub dropped: usize,
}

impl TrainReport {
    /// Mean loss over the first and last `k` iterations.
    pub fn head_tail(&self, k: usize) -> (f64, f64) {
        let k = k.min(self.losses.len()).max(1);
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len().max(1) as f64;
        (
            mean(&self.losses[..k]),
            mean(&self.losses[self.losses.len() - k..]),
        )
    }
}

//! Training losses of the grasp generator, each with its gradient with
//! respect to the prediction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::hand::{
    rot6d_backward, rot6d_to_matrix, HandModel, HandPose, HandSurface, PoseGradient,
    NUM_POSE_PARAMS,
};
use crate::object::ObjectModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub lambda_w: f64,
    pub lambda_ori: f64,
    pub lambda_pose: f64,
    pub lambda_v: f64,
    pub lambda_mask: f64,
    pub lambda_con: f64,
    pub lambda_part: f64,
    pub lambda_hand: f64,
    pub lambda_pen: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda_w: 4.0,
            lambda_ori: 1.0,
            lambda_pose: 1.0,
            lambda_v: 10.0,
            lambda_mask: 1.0,
            lambda_con: 1.0,
            lambda_part: 1.0,
            lambda_hand: 1.0,
            lambda_pen: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda_w,
            self.lambda_ori,
            self.lambda_pose,
            self.lambda_v,
            self.lambda_mask,
            self.lambda_con,
            self.lambda_part,
            self.lambda_hand,
            self.lambda_pen,
        ];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config(
                "loss weights must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Root translation divided by the object diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledTranslation {
    pub scaled: Vec3,
    pub diameter: f64,
}

impl ScaledTranslation {
    pub fn new(trans: &Vec3, diameter: f64) -> Result<Self> {
        if !(diameter > 0.0) || !diameter.is_finite() {
            return Err(Error::invalid(format!(
                "object diameter must be positive, got {diameter}"
            )));
        }
        Ok(ScaledTranslation {
            scaled: trans / diameter,
            diameter,
        })
    }

    pub fn translation(&self) -> Vec3 {
        self.scaled * self.diameter
    }
}

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch {
            expected: a,
            got: b,
        });
    }
    Ok(())
}

/// Σ |w_i (c_i − ĉ_i)| with w_i = 1 + λ_w c_i from the ground truth.
/// Returns the loss and its (sub)gradient in ĉ; zero where ĉ_i = c_i.
pub fn loss_contact(truth: &[f64], pred: &[f64], lambda_w: f64) -> Result<(f64, Vec<f64>)> {
    same_len(truth.len(), pred.len())?;
    let mut loss = 0.0;
    let grad = truth
        .iter()
        .zip(pred)
        .map(|(&c, &p)| {
            let w = 1.0 + lambda_w * c;
            loss += (w * (c - p)).abs();
            -w * if c > p {
                1.0
            } else if c < p {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok((loss, grad))
}

/// Mean cross-entropy of probability rows against one-hot rows, with the
/// gradient in the predicted probabilities.
pub fn loss_part(truth: &[Vec<f64>], pred: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    same_len(truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::invalid("part loss over zero points"));
    }
    let n = truth.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(truth.len());
    for (i, (t, p)) in truth.iter().zip(pred).enumerate() {
        same_len(t.len(), p.len())?;
        let k = match t.iter().position(|&x| x == 1.0) {
            Some(k) if t.iter().filter(|&&x| x != 0.0).count() == 1 => k,
            _ => {
                return Err(Error::invalid(format!(
                    "part target row {i} is not one-hot"
                )))
            }
        };
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::invalid(format!(
                "predicted row {i} is not a probability vector (sum {sum})"
            )));
        }
        loss -= p[k].ln() / n;
        let mut g = vec![0.0; p.len()];
        g[k] = -1.0 / (n * p[k]);
        grad.push(g);
    }
    Ok((loss, grad))
}

const GEO_CLAMP: f64 = 1e-7;

/// Geodesic angle between two rotations, with its gradient in `b`. The
/// derivative of arccos is evaluated at a clamped argument so it stays
/// finite for coincident or opposite rotations.
pub fn geodesic_with_grad(a: &Mat3, b: &Mat3) -> (f64, Mat3) {
    let raw = ((a.transpose() * b).trace() - 1.0) / 2.0;
    let x = raw.clamp(-1.0 + GEO_CLAMP, 1.0 - GEO_CLAMP);
    (
        raw.clamp(-1.0, 1.0).acos(),
        a * (-0.5 / (1.0 - x * x).sqrt()),
    )
}

pub fn geodesic(a: &Mat3, b: &Mat3) -> f64 {
    geodesic_with_grad(a, b).0
}

/// ‖x‖ and its gradient x/‖x‖ (zero at the origin).
fn norm_grad(diff: &[f64]) -> (f64, Vec<f64>) {
    let n = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    let g = if n > 0.0 {
        diff.iter().map(|d| d / n).collect()
    } else {
        vec![0.0; diff.len()]
    };
    (n, g)
}

/// Hand reconstruction loss summed over both hands. Translations enter as
/// τ/d; vertices come from forward kinematics of the metric poses. The
/// gradient is with respect to the prediction's (τ/d, 6D rotation, θ).
pub fn loss_hand(
    truth: &[HandPose; 2],
    pred: &[HandPose; 2],
    diameter: f64,
    cfg: &LossConfig,
    model: &Arc<HandModel>,
) -> Result<(f64, [[f64; NUM_POSE_PARAMS]; 2])> {
    let mut total = 0.0;
    let mut grads = [[0.0; NUM_POSE_PARAMS]; 2];
    for h in 0..2 {
        let (t, p) = (&truth[h], &pred[h]);
        if t.chirality != p.chirality {
            return Err(Error::invalid(
                "loss_hand pairs hands of different chirality",
            ));
        }
        let st = ScaledTranslation::new(&t.trans, diameter)?;
        let sp = ScaledTranslation::new(&p.trans, diameter)?;
        let g = &mut grads[h];

        let d: Vec<f64> = (sp.scaled - st.scaled).iter().copied().collect();
        let (lt, gt) = norm_grad(&d);
        total += lt;
        g[..3].copy_from_slice(&gt);

        let (angle, gm) =
            geodesic_with_grad(&rot6d_to_matrix(&t.rot6d)?, &rot6d_to_matrix(&p.rot6d)?);
        total += cfg.lambda_ori * angle;
        for (k, v) in rot6d_backward(&p.rot6d, &gm).iter().enumerate() {
            g[3 + k] += cfg.lambda_ori * v;
        }

        let d: Vec<f64> = p.theta.iter().zip(&t.theta).map(|(a, b)| a - b).collect();
        let (lp, gp) = norm_grad(&d);
        total += cfg.lambda_pose * lp;
        for (k, v) in gp.iter().enumerate() {
            g[9 + k] += cfg.lambda_pose * v;
        }

        let (vt, vp) = (model.forward(t)?, model.forward(p)?);
        let d: Vec<f64> = vp
            .vertices
            .iter()
            .zip(&vt.vertices)
            .flat_map(|(a, b)| (a - b).iter().copied().collect::<Vec<_>>())
            .collect();
        let (lv, gv) = norm_grad(&d);
        total += cfg.lambda_v * lv;
        let mut acc = PoseGradient::default();
        for i in 0..vp.len() {
            let gi = Vec3::new(gv[3 * i], gv[3 * i + 1], gv[3 * i + 2]) * cfg.lambda_v;
            vp.add_vertex_grad(&mut acc, i, &gi);
        }
        let fk = vp.finish_grad(&acc);
        for k in 0..NUM_POSE_PARAMS {
            // dτ/d(τ/d) = d
            g[k] += if k < 3 { fk[k] * diameter } else { fk[k] };
        }
    }
    Ok((total, grads))
}

/// Hand-object penetration of both hands plus left-into-right hand
/// penetration, accumulated in one pass over the vertices.
pub fn loss_pen(right: &HandSurface, left: &HandSurface, object: &ObjectModel) -> f64 {
    let mut total = 0.0;
    for (hand, into_right) in [(right, false), (left, true)] {
        for v in &hand.vertices {
            if object.classify(v).inside {
                total += object.closest(v).distance;
            }
            if into_right {
                if let Some(p) = right.penetration(v) {
                    total += p.depth;
                }
            }
        }
    }
    total
}

/// [`loss_pen`] with its gradients on the (right, left) pose parameters.
pub fn loss_pen_grad(
    right: &HandSurface,
    left: &HandSurface,
    object: &ObjectModel,
) -> (f64, [[f64; NUM_POSE_PARAMS]; 2]) {
    let mut acc = [PoseGradient::default(), PoseGradient::default()];
    let mut total = 0.0;
    for (h, hand) in [right, left].into_iter().enumerate() {
        for (i, v) in hand.vertices.iter().enumerate() {
            if object.classify(v).inside {
                let sp = object.closest(v);
                if sp.distance > 0.0 {
                    total += sp.distance;
                    hand.add_vertex_grad(&mut acc[h], i, &((v - sp.point) / sp.distance));
                }
            }
            if h == 1 {
                if let Some(p) = right.penetration(v) {
                    total += p.depth;
                    let [r, l] = &mut acc;
                    left.add_vertex_grad(l, i, &-p.normal);
                    right.add_point_grad(r, p.body, &p.surface_point, &p.normal);
                }
            }
        }
    }
    (
        total,
        [right.finish_grad(&acc[0]), left.finish_grad(&acc[1])],
    )
}

/// ‖ε_dir − ε̂_dir‖² + λ_mask‖ε_mask − ε̂_mask‖², with gradients in the
/// two predictions.
pub fn loss_ddpm(
    eps_dir: &[f64],
    pred_dir: &[f64],
    eps_mask: &[f64],
    pred_mask: &[f64],
    lambda_mask: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    same_len(eps_dir.len(), pred_dir.len())?;
    same_len(eps_mask.len(), pred_mask.len())?;
    if eps_dir.len() != 3 * eps_mask.len() {
        return Err(Error::ShapeMismatch {
            expected: 3 * eps_mask.len(),
            got: eps_dir.len(),
        });
    }
    let mut loss = 0.0;
    let gd = eps_dir
        .iter()
        .zip(pred_dir)
        .map(|(e, p)| {
            loss += (e - p).powi(2);
            2.0 * (p - e)
        })
        .collect();
    let gm = eps_mask
        .iter()
        .zip(pred_mask)
        .map(|(e, p)| {
            loss += lambda_mask * (e - p).powi(2);
            2.0 * lambda_mask * (p - e)
        })
        .collect();
    Ok((loss, gd, gm))
}

/// Values of the generator's loss terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub contact: f64,
    pub part: f64,
    pub hand: f64,
    pub pen: f64,
}

impl LossTerms {
    pub fn total(&self, cfg: &LossConfig) -> f64 {
        cfg.lambda_con * self.contact
            + cfg.lambda_part * self.part
            + cfg.lambda_hand * self.hand
            + cfg.lambda_pen * self.pen
    }
}

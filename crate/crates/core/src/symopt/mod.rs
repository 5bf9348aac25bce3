//! Dual-hand optimization of mirrored proposals against hand-hand and
//! hand-object interpenetration.

mod energy;
pub mod fixtures;

pub use energy::{
    dual_energy, energy_phh, energy_phh_grad, energy_pho, hand_hand_max_depth, hand_object_energy,
    hand_object_energy_grad, hand_object_max_depth, interior_count, DualEnergy,
};

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::{project_pose, HandModel, HandPose, NUM_POSE_PARAMS};
use crate::object::ObjectModel;
use crate::optim::Adam;
use crate::symmetry::{
    detect_symmetry_plane, mirror_grasp, pair_proposals, shift_poses, SymmetryReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyConfig {
    pub lambda_phh: f64,
    pub lambda_pho: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub max_iters: usize,
    /// Stop once E_phh falls below this (m).
    pub stop_phh: f64,
    /// Stop once E_pho falls below this (m).
    pub stop_pho: f64,
    /// Pairs whose initial hand-hand depth exceeds this (m) are discarded.
    pub discard_depth: f64,
    /// Learning-rate multiplier of the right hand, which starts in good contact.
    pub right_lr_scale: f64,
    pub max_pairs: usize,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            lambda_phh: 1.0,
            lambda_pho: 1.0,
            lr: 5e-3,
            beta1: 0.9,
            beta2: 0.999,
            max_iters: 300,
            stop_phh: 1e-4,
            stop_pho: 1e-4,
            discard_depth: 5e-3,
            right_lr_scale: 0.1,
            max_pairs: 256,
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.lambda_phh, self.lambda_pho];
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("energy weights must be nonnegative".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.lr > 0.0) || !(self.discard_depth >= 0.0) {
            return Err(Error::Config(
                "lr must be positive and discard_depth nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraspStatus {
    Proposal,
    Optimized,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualGrasp {
    pub right: HandPose,
    pub left: HandPose,
    pub object_id: String,
    pub status: GraspStatus,
    pub energy_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl DualGrasp {
    pub fn proposal(object_id: &str, right: HandPose, left: HandPose) -> Self {
        DualGrasp {
            right,
            left,
            object_id: object_id.to_string(),
            status: GraspStatus::Proposal,
            energy_trace: Vec::new(),
            diagnostic: None,
        }
    }

    fn discard(mut self, why: impl Into<String>) -> Self {
        self.status = GraspStatus::Discarded;
        self.diagnostic = Some(why.into());
        self
    }
}

/// Minimizes λ_phh·E_phh + λ_pho·E_pho over both poses with Adam.
pub fn optimize_dual_grasp(
    grasp: &DualGrasp,
    object: &ObjectModel,
    cfg: &EnergyConfig,
    model: &Arc<HandModel>,
) -> DualGrasp {
    let mut out = grasp.clone();
    if grasp.status != GraspStatus::Proposal {
        return out;
    }
    let surfaces =
        |g: &DualGrasp| -> Result<_> { Ok((model.forward(&g.right)?, model.forward(&g.left)?)) };
    let (mut sr, mut sl) = match surfaces(&out) {
        Ok(s) => s,
        Err(e) => return out.discard(format!("forward kinematics failed: {e}")),
    };
    let depth = hand_hand_max_depth(&sr, &sl);
    if depth > cfg.discard_depth {
        return out.discard(format!(
            "initial hand-hand depth {:.2} mm exceeds {:.2} mm",
            depth * 1e3,
            cfg.discard_depth * 1e3
        ));
    }

    let n = NUM_POSE_PARAMS;
    let mut scales = vec![cfg.right_lr_scale; n];
    scales.extend(std::iter::repeat_n(1.0, n));
    let mut adam = Adam::new(2 * n, cfg.lr)
        .with_betas(cfg.beta1, cfg.beta2)
        .with_scales(scales);
    let mut params = out.right.to_params();
    params.extend(out.left.to_params());
    let mut grad = vec![0.0; 2 * n];

    for iter in 0..=cfg.max_iters {
        let e = dual_energy(&sr, &sl, object, cfg.lambda_phh, cfg.lambda_pho);
        out.energy_trace.push(e.total);
        if e.phh < cfg.stop_phh && e.pho < cfg.stop_pho {
            out.status = GraspStatus::Optimized;
            return out;
        }
        if iter == cfg.max_iters {
            break;
        }
        grad[..n].copy_from_slice(&e.grad_right);
        grad[n..].copy_from_slice(&e.grad_left);
        if !e.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return out.discard(format!("non-finite energy or gradient at iteration {iter}"));
        }
        adam.step(&mut params, &grad);
        out.right.set_params(&params[..n]);
        out.left.set_params(&params[n..]);
        let projected = project_pose(&mut out.right, model.template())
            .and_then(|_| project_pose(&mut out.left, model.template()));
        if let Err(e) = projected {
            return out.discard(format!("pose became degenerate at iteration {iter}: {e}"));
        }
        params[..n].copy_from_slice(&out.right.to_params());
        params[n..].copy_from_slice(&out.left.to_params());
        match surfaces(&out) {
            Ok((r, l)) => {
                sr = r;
                sl = l;
            }
            Err(e) => return out.discard(format!("forward kinematics failed: {e}")),
        }
    }
    out.discard("energy thresholds not met within max_iters")
}

/// Output of the full pipeline for one object.
#[derive(Debug, Clone)]
pub struct SymoptRun {
    pub report: Option<SymmetryReport>,
    pub grasps: Vec<DualGrasp>,
}

impl SymoptRun {
    pub fn count(&self, status: GraspStatus) -> usize {
        self.grasps.iter().filter(|g| g.status == status).count()
    }
}

/// Detect plane → mirror → pair → optimize. Poses are given and returned in
/// the object's own frame; dropped pairs are reported as discarded entries.
pub fn run_symopt(
    object: &ObjectModel,
    right_grasps: &[HandPose],
    cfg: &EnergyConfig,
    seed: u64,
    model: &Arc<HandModel>,
) -> Result<SymoptRun> {
    cfg.validate()?;
    if right_grasps.is_empty() {
        return Ok(SymoptRun {
            report: None,
            grasps: Vec::new(),
        });
    }
    let report = detect_symmetry_plane(object)?;
    let (centered, offset) = object.centered();
    let rights = shift_poses(right_grasps, &offset);
    let lefts: Vec<HandPose> = rights.iter().map(|p| mirror_grasp(p, &report)).collect();
    let pairing = pair_proposals(
        &object.id,
        &rights,
        &lefts,
        cfg.max_pairs,
        cfg.discard_depth,
        seed,
        model,
    );
    let grasps: Vec<DualGrasp> = pairing
        .pairs
        .par_iter()
        .map(|(_, g)| {
            let mut g = optimize_dual_grasp(g, &centered, cfg, model);
            g.right.trans -= offset;
            g.left.trans -= offset;
            g
        })
        .collect();
    Ok(SymoptRun {
        report: Some(report),
        grasps,
    })
}

#[cfg(test)]
mod tests;

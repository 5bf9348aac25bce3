//! Test-time refinement of generated dual grasps:
//! E_T = λ_pen·E_pen + λ_con·E_con + λ_D·E_D, minimized jointly over both poses.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::contact::HandDirections;
use crate::error::{Error, Result};
use crate::geometry::{KdTree, Vec3};
use crate::hand::{project_pose, HandModel, HandSurface, PoseGradient, NUM_POSE_PARAMS};
use crate::object::ObjectModel;
use crate::optim::Adam;
use crate::symopt::{dual_energy, DualGrasp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TtaConfig {
    pub lambda_pen: f64,
    pub lambda_con: f64,
    pub lambda_dir: f64,
    pub steps: usize,
    pub lr: f64,
    /// Learning-rate multiplier for the wrist translation.
    pub trans_lr_scale: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Gradient norm cap applied before each Adam step.
    pub clip: f64,
    /// Width (m) of the band outside the object whose vertices contribute a
    /// one-sided penetration subgradient; 0 disables it.
    pub skin: f64,
    /// Refinement stops once E_T is at or below this.
    pub tolerance: f64,
}

impl Default for TtaConfig {
    fn default() -> Self {
        TtaConfig {
            lambda_pen: 10.0,
            lambda_con: 1.0,
            lambda_dir: 1.0,
            steps: 100,
            lr: 2e-3,
            trans_lr_scale: 0.25,
            beta1: 0.9,
            beta2: 0.999,
            clip: 10.0,
            skin: 5e-4,
            tolerance: 1e-6,
        }
    }
}

impl TtaConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.lambda_pen, self.lambda_con, self.lambda_dir]
            .iter()
            .any(|w| !(*w >= 0.0))
        {
            return Err(Error::Config("tta weights must be nonnegative".into()));
        }
        if !(self.lr > 0.0) || !(self.trans_lr_scale > 0.0) {
            return Err(Error::Config(
                "tta lr and translation scale must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mean over `src` of the distance to the nearest point of `target`.
pub fn average_distance(src: &[Vec3], target: &KdTree) -> Option<f64> {
    if src.is_empty() || target.is_empty() {
        return None;
    }
    let sum: f64 = src
        .iter()
        .map(|p| target.nearest(p).map_or(0.0, |(_, d2)| d2.sqrt()))
        .sum();
    Some(sum / src.len() as f64)
}

fn fingertip_points(hand: &HandSurface) -> Vec<Vec3> {
    hand.fingertips().map(|(_, v)| *v).collect()
}

/// AD(V_r^t, V_o) + AD(V_l^t, V_o).
pub fn energy_con(right: &HandSurface, left: &HandSurface, object: &ObjectModel) -> Result<f64> {
    let mut e = 0.0;
    for hand in [right, left] {
        e += average_distance(&fingertip_points(hand), object.tree()).ok_or_else(|| {
            Error::invalid(format!(
                "{} hand has no fingertip vertices",
                hand.chirality.name()
            ))
        })?;
    }
    Ok(e)
}

/// Mean nearest distance from the selected vertices to `target`, with gradient.
fn ad_grad(hand: &HandSurface, select: &[usize], target: &KdTree) -> (f64, PoseGradient) {
    let mut g = PoseGradient::default();
    if select.is_empty() || target.is_empty() {
        return (0.0, g);
    }
    let w = 1.0 / select.len() as f64;
    let mut e = 0.0;
    for &i in select {
        let v = hand.vertices[i];
        let Some((j, d2)) = target.nearest(&v) else {
            continue;
        };
        let d = d2.sqrt();
        e += w * d;
        if d > 0.0 {
            hand.add_vertex_grad(&mut g, i, &((v - target.point(j)) * (w / d)));
        }
    }
    (e, g)
}

/// Surface points hit by the rays of each hand's nonzero predicted directions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirectionHits {
    pub right: Vec<Vec3>,
    pub left: Vec<Vec3>,
    /// Nonzero rays that missed the mesh.
    pub missed: usize,
}

/// Casts each nonzero direction from the object center; zero rows are skipped.
pub fn direction_hits(object: &ObjectModel, dirs: &[HandDirections; 2]) -> DirectionHits {
    let c = object.center();
    let mut out = DirectionHits::default();
    for (k, hd) in dirs.iter().enumerate() {
        for d in hd.dirs.iter().filter(|d| d.norm() > 0.0) {
            match object.ray_cast(&c, &d.normalize()) {
                Some(hit) => {
                    if k == 0 {
                        out.right.push(hit.point)
                    } else {
                        out.left.push(hit.point)
                    }
                }
                None => out.missed += 1,
            }
        }
    }
    out
}

/// AD(V_r, hits_r) + AD(V_l, hits_l) for precomputed hits.
pub fn energy_dir_hits(right: &HandSurface, left: &HandSurface, hits: &DirectionHits) -> f64 {
    let one = |h: &HandSurface, pts: &[Vec3]| {
        if pts.is_empty() {
            0.0
        } else {
            average_distance(&h.vertices, &KdTree::new(pts)).unwrap_or(0.0)
        }
    };
    one(right, &hits.right) + one(left, &hits.left)
}

pub fn energy_dir(
    right: &HandSurface,
    left: &HandSurface,
    object: &ObjectModel,
    dirs: &[HandDirections; 2],
) -> f64 {
    energy_dir_hits(right, left, &direction_hits(object, dirs))
}

/// One-sided penetration subgradient of vertices just outside the object:
/// the derivative E_pen would have once they cross the surface. Without it
/// the descent direction at a resting contact points straight into the object
/// and every step is rejected by the monotone safeguard.
fn skin_grad(hand: &HandSurface, object: &ObjectModel, skin: f64) -> PoseGradient {
    let mut g = PoseGradient::default();
    if !(skin > 0.0) {
        return g;
    }
    for (i, v) in hand.vertices.iter().enumerate() {
        let sp = object.closest(v);
        if sp.distance > 0.0 && sp.distance < skin && !object.contains(v) {
            hand.add_vertex_grad(&mut g, i, &((sp.point - v) / sp.distance));
        }
    }
    g
}

/// Components of E_T and flattened gradients of the weighted total.
#[derive(Debug, Clone)]
pub struct TtaEnergy {
    pub pen: f64,
    pub con: f64,
    pub dir: f64,
    pub total: f64,
    pub grad_right: [f64; NUM_POSE_PARAMS],
    pub grad_left: [f64; NUM_POSE_PARAMS],
}

pub fn tta_energy(
    right: &HandSurface,
    left: &HandSurface,
    object: &ObjectModel,
    hits: &DirectionHits,
    cfg: &TtaConfig,
) -> Result<TtaEnergy> {
    let pen = dual_energy(right, left, object, 1.0, 1.0);
    let mut con = 0.0;
    let mut dir = 0.0;
    let mut grads = [[0.0; NUM_POSE_PARAMS]; 2];
    let hit_trees = [KdTree::new(&hits.right), KdTree::new(&hits.left)];
    for (k, hand) in [right, left].into_iter().enumerate() {
        let tips: Vec<usize> = hand.fingertips().map(|(i, _)| i).collect();
        if tips.is_empty() {
            return Err(Error::invalid(format!(
                "{} hand has no fingertip vertices",
                hand.chirality.name()
            )));
        }
        let (ec, gc) = ad_grad(hand, &tips, object.tree());
        let gs = skin_grad(hand, object, cfg.skin);
        let all: Vec<usize> = (0..hand.len()).collect();
        let (ed, gd) = ad_grad(hand, &all, &hit_trees[k]);
        con += ec;
        dir += ed;
        let mut acc = PoseGradient::default();
        acc.add_scaled(&gc, cfg.lambda_con);
        acc.add_scaled(&gd, cfg.lambda_dir);
        acc.add_scaled(&gs, cfg.lambda_pen);
        let flat = hand.finish_grad(&acc);
        let gp = if k == 0 {
            &pen.grad_right
        } else {
            &pen.grad_left
        };
        for i in 0..NUM_POSE_PARAMS {
            grads[k][i] = flat[i] + cfg.lambda_pen * gp[i];
        }
    }
    Ok(TtaEnergy {
        pen: pen.total,
        con,
        dir,
        total: cfg.lambda_pen * pen.total + cfg.lambda_con * con + cfg.lambda_dir * dir,
        grad_right: grads[0],
        grad_left: grads[1],
    })
}

#[derive(Debug, Clone)]
pub struct TtaOutcome {
    pub grasp: DualGrasp,
    /// E_T after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub missed_rays: usize,
    pub failed: bool,
    pub diagnostic: Option<String>,
}

/// Adam on both poses. The iterate moves freely (it may cross contact kinks
/// and briefly raise E_T), while the returned grasp is the best iterate seen:
/// a step is accepted into the trace only if it does not raise E_T over the
/// best so far. The gradient norm is capped first: penetration gradients are
/// sums over vertices and dwarf the contact terms, and Adam's second moments
/// would otherwise remember them long after the penetration is resolved.
pub fn refine(
    grasp: &DualGrasp,
    object: &ObjectModel,
    dirs: &[HandDirections; 2],
    cfg: &TtaConfig,
    model: &Arc<HandModel>,
) -> TtaOutcome {
    let mut out = TtaOutcome {
        grasp: grasp.clone(),
        trace: Vec::new(),
        accepted: 0,
        rejected: 0,
        missed_rays: 0,
        failed: false,
        diagnostic: None,
    };
    let fail = |mut out: TtaOutcome, why: String| {
        out.grasp = grasp.clone();
        out.failed = true;
        out.diagnostic = Some(why);
        out
    };
    if let Err(e) = cfg.validate() {
        return fail(out, e.to_string());
    }
    if !grasp.right.is_finite() || !grasp.left.is_finite() {
        return fail(out, "grasp has non-finite parameters".into());
    }
    let hits = direction_hits(object, dirs);
    out.missed_rays = hits.missed;
    let eval = |g: &DualGrasp| -> Result<TtaEnergy> {
        let (r, l) = (model.forward(&g.right)?, model.forward(&g.left)?);
        let e = tta_energy(&r, &l, object, &hits, cfg)?;
        if !e.total.is_finite()
            || e.grad_right
                .iter()
                .chain(&e.grad_left)
                .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("tta energy".into()));
        }
        Ok(e)
    };
    let mut cur = match eval(&out.grasp) {
        Ok(e) => e,
        Err(e) => return fail(out, e.to_string()),
    };
    out.trace.push(cur.total);

    let n = NUM_POSE_PARAMS;
    // translation is in meters, the other parameters in radians or unitless
    let mut scales = vec![1.0; 2 * n];
    scales[..3].fill(cfg.trans_lr_scale);
    scales[n..n + 3].fill(cfg.trans_lr_scale);
    let mut adam = Adam::new(2 * n, cfg.lr)
        .with_betas(cfg.beta1, cfg.beta2)
        .with_scales(scales);
    let mut x = out.grasp.clone();
    let mut at = cur.clone();
    let mut grad = vec![0.0; 2 * n];
    for _ in 0..cfg.steps {
        if cur.total <= cfg.tolerance {
            break;
        }
        let mut params = x.right.to_params();
        params.extend(x.left.to_params());
        grad[..n].copy_from_slice(&at.grad_right);
        grad[n..].copy_from_slice(&at.grad_left);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > cfg.clip {
            grad.iter_mut().for_each(|g| *g *= cfg.clip / norm);
        }
        adam.step(&mut params, &grad);
        x.right.set_params(&params[..n]);
        x.left.set_params(&params[n..]);
        let projected = project_pose(&mut x.right, model.template())
            .and_then(|_| project_pose(&mut x.left, model.template()));
        if let Err(e) = projected {
            return fail(out, format!("pose became degenerate: {e}"));
        }
        at = match eval(&x) {
            Ok(e) => e,
            Err(e) => return fail(out, e.to_string()),
        };
        if at.total <= cur.total {
            out.grasp = x.clone();
            cur = at.clone();
            out.trace.push(cur.total);
            out.accepted += 1;
        } else {
            out.rejected += 1;
        }
    }
    out
}

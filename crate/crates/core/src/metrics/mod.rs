//! Grasp evaluation: Q1, penetration depth and hand-hand volume, diversity
//! and the semantic-correctness rules. Lengths are reported in centimeters.

mod hull;
pub mod q1;
pub mod semantic;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contact::{contact_map, ContactConfig};
use crate::error::{Error, Result};
use crate::geometry::{farthest_point_sample, Vec3};
use crate::hand::HandSurface;
use crate::object::ObjectModel;
use crate::symopt::hand_object_max_depth;

pub use hull::{hull_facets, origin_margin, Wrench};
pub use q1::{q1_quality, q1_split, Contact};
pub use semantic::{semantic_check, ObjectPart, PartLabels, SemanticTarget, SemanticVerdict};

const CM: f64 = 100.0;
const CM3: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub friction: f64,
    pub cone_edges: usize,
    /// Contacts per hand kept for Q1 (farthest-point subset).
    pub max_contacts: usize,
    /// Voxel edge (m) for the hand-hand volume.
    pub voxel: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            friction: 1.0,
            cone_edges: 8,
            max_contacts: 64,
            voxel: 0.002,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.friction >= 0.0)
            || self.cone_edges < 3
            || self.max_contacts == 0
            || !(self.voxel > 0.0)
        {
            return Err(Error::Config(
                "metrics needs friction >= 0, cone_edges >= 3, max_contacts >= 1 and voxel > 0"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Deepest hand vertex inside the object, in cm.
pub fn penetration_depth(hand: &HandSurface, object: &ObjectModel) -> f64 {
    hand_object_max_depth(hand, object) * CM
}

/// Voxel centers of a grid anchored at `lo` with edge `h` that fall in the
/// box [a, b].
fn voxel_range(lo: f64, h: f64, a: f64, b: f64) -> std::ops::Range<i64> {
    let first = ((a - lo) / h - 0.5).ceil().max(0.0) as i64;
    let last = ((b - lo) / h - 0.5).floor() as i64;
    first..(last + 1).max(first)
}

fn count_voxels(
    lo: Vec3,
    box_lo: Vec3,
    box_hi: Vec3,
    h: f64,
    inside: impl Fn(&Vec3) -> bool + Sync,
) -> usize {
    let xs = voxel_range(lo.x, h, box_lo.x, box_hi.x);
    let ys = voxel_range(lo.y, h, box_lo.y, box_hi.y);
    let zs = voxel_range(lo.z, h, box_lo.z, box_hi.z);
    xs.into_par_iter()
        .map(|i| {
            let mut n = 0;
            for j in ys.clone() {
                for k in zs.clone() {
                    let p = lo + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * h;
                    if inside(&p) {
                        n += 1;
                    }
                }
            }
            n
        })
        .sum()
}

/// Voxelized volume of one hand, in cm³; 0 for hands without a volume.
pub fn hand_volume(hand: &HandSurface, voxel: f64) -> f64 {
    let Some((lo, hi)) = hand.volume_bounds() else {
        return 0.0;
    };
    count_voxels(lo, lo, hi, voxel, |p| hand.contains(p)) as f64 * voxel.powi(3) * CM3
}

/// Hand-hand intersection volume in cm³: voxels of edge `voxel` on a grid
/// over the union's bounding box whose centers lie inside both hands.
pub fn penetration_volume(right: &HandSurface, left: &HandSurface, voxel: f64) -> f64 {
    let (Some((rlo, rhi)), Some((llo, lhi))) = (right.volume_bounds(), left.volume_bounds()) else {
        return 0.0;
    };
    let lo = rlo.inf(&llo);
    let (a, b) = (rlo.sup(&llo), rhi.inf(&lhi));
    if (0..3).any(|k| a[k] >= b[k]) {
        return 0.0;
    }
    count_voxels(lo, a, b, voxel, |p| right.contains(p) && left.contains(p)) as f64
        * voxel.powi(3)
        * CM3
}

/// Mean over unordered pairs of the mean per-vertex distance, in cm.
/// None for fewer than two hands.
pub fn diversity_sigma(hands: &[&HandSurface]) -> Result<Option<f64>> {
    if hands.len() < 2 {
        return Ok(None);
    }
    let n = hands[0].len();
    if let Some(h) = hands.iter().find(|h| h.len() != n) {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: h.len(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("diversity of empty hands"));
    }
    let mut sum = 0.0;
    let mut pairs = 0;
    for i in 0..hands.len() {
        for j in i + 1..hands.len() {
            let d: f64 = hands[i]
                .vertices
                .iter()
                .zip(&hands[j].vertices)
                .map(|(a, b)| (a - b).norm())
                .sum();
            sum += d / n as f64;
            pairs += 1;
        }
    }
    Ok(Some(sum / pairs as f64 * CM))
}

/// Diversity of a batch: over all right hands, all left hands, and the
/// per-group mean of both hands' σ averaged over groups.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diversity {
    pub sigma_r: Option<f64>,
    pub sigma_l: Option<f64>,
    pub sigma_ta: Option<f64>,
    pub excluded_groups: Vec<String>,
}

pub fn grouped_diversity(grasps: &[(String, HandSurface, HandSurface)]) -> Result<Diversity> {
    let rights: Vec<&HandSurface> = grasps.iter().map(|g| &g.1).collect();
    let lefts: Vec<&HandSurface> = grasps.iter().map(|g| &g.2).collect();
    let mut groups: Vec<&str> = grasps.iter().map(|g| g.0.as_str()).collect();
    groups.sort_unstable();
    groups.dedup();
    let mut per_group = Vec::new();
    let mut excluded = Vec::new();
    for name in groups {
        let r: Vec<&HandSurface> = grasps
            .iter()
            .filter(|g| g.0 == name)
            .map(|g| &g.1)
            .collect();
        let l: Vec<&HandSurface> = grasps
            .iter()
            .filter(|g| g.0 == name)
            .map(|g| &g.2)
            .collect();
        match (diversity_sigma(&r)?, diversity_sigma(&l)?) {
            (Some(a), Some(b)) => per_group.push(0.5 * (a + b)),
            _ => excluded.push(name.to_string()),
        }
    }
    Ok(Diversity {
        sigma_r: diversity_sigma(&rights)?,
        sigma_l: diversity_sigma(&lefts)?,
        sigma_ta: (!per_group.is_empty())
            .then(|| per_group.iter().sum::<f64>() / per_group.len() as f64),
        excluded_groups: excluded,
    })
}

/// Object points in contact with `hand` (c ≥ threshold), at most
/// `max_contacts` of them by farthest-point selection, relative to the
/// object center, with surface normals.
pub fn hand_contacts(
    object: &ObjectModel,
    hand: &HandSurface,
    contact: &ContactConfig,
    max_contacts: usize,
) -> Vec<Contact> {
    let c = contact_map(object, hand, contact.sharpness);
    let pts = object.cloud().points();
    let touching: Vec<usize> = (0..pts.len())
        .filter(|&i| c[i] >= contact.threshold)
        .collect();
    let sub: Vec<Vec3> = touching.iter().map(|&i| pts[i]).collect();
    let center = object.center();
    farthest_point_sample(&sub, max_contacts)
        .into_iter()
        .map(|k| {
            let i = touching[k];
            let normal = match object.cloud().normals() {
                Some(ns) => ns[i],
                None => object.mesh().face_normal(object.closest(&pts[i]).face),
            };
            Contact {
                point: pts[i] - center,
                normal,
            }
        })
        .collect()
}

/// Per-grasp metrics. Q1 values are dimensionless, depths in cm, volume in cm³.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraspMetrics {
    pub q1_r: f64,
    pub q1_l: f64,
    pub q1_t: f64,
    pub pen_ro: f64,
    pub pen_lo: f64,
    pub pen_rl_vol: f64,
}

pub fn grasp_metrics(
    object: &ObjectModel,
    right: &HandSurface,
    left: &HandSurface,
    cfg: &MetricsConfig,
    contact: &ContactConfig,
) -> Result<GraspMetrics> {
    cfg.validate()?;
    let cr = hand_contacts(object, right, contact, cfg.max_contacts);
    let cl = hand_contacts(object, left, contact, cfg.max_contacts);
    let scale = 1.0 / object.max_radius().max(1e-9);
    let [q1_r, q1_l, q1_t] = q1_split(&cr, &cl, cfg.friction, cfg.cone_edges, scale)?;
    Ok(GraspMetrics {
        q1_r,
        q1_l,
        q1_t,
        pen_ro: penetration_depth(right, object),
        pen_lo: penetration_depth(left, object),
        pen_rl_vol: penetration_volume(right, left, cfg.voxel),
    })
}

/// Batch means plus diversity; mirrors the layout of the usual results table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub count: usize,
    pub mean: GraspMetrics,
    pub diversity: Diversity,
    pub per_grasp: Vec<GraspMetrics>,
}

impl MetricsReport {
    pub fn table(&self) -> String {
        let m = &self.mean;
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        format!(
            "{:>8} {:>8} {:>8} {:>10} {:>10} {:>12} {:>8} {:>8} {:>8}\n{:>8.4} {:>8.4} {:>8.4} {:>10.3} {:>10.3} {:>12.3} {:>8} {:>8} {:>8}\n",
            "Q1_r", "Q1_l", "Q1_t", "pen_ro", "pen_lo", "pen_rl_vol", "σ_r", "σ_l", "σ_t/a",
            m.q1_r, m.q1_l, m.q1_t, m.pen_ro, m.pen_lo, m.pen_rl_vol,
            f(self.diversity.sigma_r), f(self.diversity.sigma_l), f(self.diversity.sigma_ta),
        )
    }
}

/// Metrics of every (group, right, left) grasp on `object`, in parallel.
pub fn metrics_report(
    object: &ObjectModel,
    grasps: &[(String, HandSurface, HandSurface)],
    cfg: &MetricsConfig,
    contact: &ContactConfig,
) -> Result<MetricsReport> {
    let per_grasp = grasps
        .par_iter()
        .map(|(_, r, l)| grasp_metrics(object, r, l, cfg, contact))
        .collect::<Result<Vec<_>>>()?;
    let n = per_grasp.len().max(1) as f64;
    let mut mean = GraspMetrics::default();
    for g in &per_grasp {
        mean.q1_r += g.q1_r / n;
        mean.q1_l += g.q1_l / n;
        mean.q1_t += g.q1_t / n;
        mean.pen_ro += g.pen_ro / n;
        mean.pen_lo += g.pen_lo / n;
        mean.pen_rl_vol += g.pen_rl_vol / n;
    }
    Ok(MetricsReport {
        count: per_grasp.len(),
        mean,
        diversity: grouped_diversity(grasps)?,
        per_grasp,
    })
}

//! Pseudo-symmetry plane detection, grasp mirroring and proposal pairing.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{chamfer_distance, reflect_points, Axis, PointCloud, Vec3};
use crate::hand::{mirror_pose, HandModel, HandPose};
use crate::object::ObjectModel;
use crate::symopt::{hand_hand_max_depth, DualGrasp, GraspStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub axis: Axis,
    /// Chamfer distance (m²) between the centered cloud and its reflection, per axis.
    pub chamfer: [f64; 3],
    /// Centroid subtracted before reflecting.
    pub centroid: [f64; 3],
}

/// Centers the cloud and picks the axis whose reflection has the smallest
/// Chamfer distance (ties go to the earlier axis).
pub fn detect_symmetry_plane_cloud(cloud: &PointCloud) -> Result<SymmetryReport> {
    if cloud.is_empty() {
        return Err(Error::invalid("symmetry detection on an empty cloud"));
    }
    let c = cloud.centroid();
    let centered = cloud.translated(&-c);
    let mut chamfer = [0.0; 3];
    for axis in Axis::ALL {
        chamfer[axis.index()] = chamfer_distance(&centered, &reflect_points(&centered, axis))?;
    }
    let mut best = Axis::X;
    for axis in Axis::ALL {
        if chamfer[axis.index()] < chamfer[best.index()] {
            best = axis;
        }
    }
    Ok(SymmetryReport {
        axis: best,
        chamfer,
        centroid: [c.x, c.y, c.z],
    })
}

pub fn detect_symmetry_plane(object: &ObjectModel) -> Result<SymmetryReport> {
    detect_symmetry_plane_cloud(object.cloud())
}

/// Mirrors a right-hand grasp (expressed in the centered object frame) into a left proposal.
pub fn mirror_grasp(grasp: &HandPose, report: &SymmetryReport) -> HandPose {
    mirror_pose(grasp, report.axis)
}

/// Result of pairing: survivors go to optimization, the rest are discarded.
#[derive(Debug, Clone, Default)]
pub struct Pairing {
    /// Pairs in Cartesian order, each tagged with its position in the pair list.
    pub pairs: Vec<(usize, DualGrasp)>,
}

impl Pairing {
    pub fn kept(&self) -> impl Iterator<Item = &DualGrasp> {
        self.pairs
            .iter()
            .map(|(_, g)| g)
            .filter(|g| g.status == GraspStatus::Proposal)
    }

    pub fn dropped(&self) -> impl Iterator<Item = &DualGrasp> {
        self.pairs
            .iter()
            .map(|(_, g)| g)
            .filter(|g| g.status == GraspStatus::Discarded)
    }
}

/// Cartesian right × left pairing, subsampled to `max_pairs` by a seeded
/// shuffle (original order kept), with pairs whose initial hand-hand depth
/// exceeds `discard_depth` marked discarded.
pub fn pair_proposals(
    object_id: &str,
    rights: &[HandPose],
    lefts: &[HandPose],
    max_pairs: usize,
    discard_depth: f64,
    seed: u64,
    model: &Arc<HandModel>,
) -> Pairing {
    let mut idx: Vec<(usize, usize)> = (0..rights.len())
        .flat_map(|i| (0..lefts.len()).map(move |j| (i, j)))
        .collect();
    if idx.len() > max_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        idx.truncate(max_pairs);
        idx.sort_unstable();
    }
    let surf_r: Vec<_> = rights.iter().map(|p| model.forward(p)).collect();
    let surf_l: Vec<_> = lefts.iter().map(|p| model.forward(p)).collect();
    let pairs = idx
        .into_iter()
        .enumerate()
        .map(|(k, (i, j))| {
            let mut g = DualGrasp::proposal(object_id, rights[i].clone(), lefts[j].clone());
            match (&surf_r[i], &surf_l[j]) {
                (Ok(r), Ok(l)) => {
                    let depth = hand_hand_max_depth(r, l);
                    if depth > discard_depth {
                        g.status = GraspStatus::Discarded;
                        g.diagnostic = Some(format!(
                            "initial hand-hand depth {:.2} mm exceeds {:.2} mm",
                            depth * 1e3,
                            discard_depth * 1e3
                        ));
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    g.status = GraspStatus::Discarded;
                    g.diagnostic = Some(format!("forward kinematics failed: {e}"));
                }
            }
            (k, g)
        })
        .collect();
    Pairing { pairs }
}

/// Shifts every pose of a grasp list by `offset`.
pub fn shift_poses(poses: &[HandPose], offset: &Vec3) -> Vec<HandPose> {
    poses
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.trans += offset;
            q
        })
        .collect()
}

//! Object-side contact representation of a dual grasp: contact map C, part
//! map P, affordance directions D and contact mask M, per hand.

use serde::{Deserialize, Serialize};

use crate::geometry::{KdTree, Vec3};
use crate::hand::{HandSurface, Part, NO_CONTACT, NUM_PARTS};
use crate::object::ObjectModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactConfig {
    /// Sharpness k (1/m) of the distance-to-contact mapping.
    pub sharpness: f64,
    /// Contact value at or above which a point is assigned to a hand part.
    pub threshold: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        ContactConfig {
            sharpness: 150.0,
            threshold: 0.4,
        }
    }
}

/// c = 1 − 2·(σ(k·d) − 0.5), written as 2 / (1 + e^{k·d}) for stability.
pub fn contact_value(d: f64, k: f64) -> f64 {
    let x = k * d;
    if x > 700.0 {
        return 0.0;
    }
    2.0 / (1.0 + x.exp())
}

/// Per object point: nearest hand vertex index and distance.
fn nearest_hand_vertices(object: &ObjectModel, hand: &HandSurface) -> Vec<(usize, f64)> {
    let tree = KdTree::new(&hand.vertices);
    object
        .cloud()
        .points()
        .iter()
        .map(|p| {
            tree.nearest(p)
                .map(|(i, d2)| (i, d2.sqrt()))
                .unwrap_or((usize::MAX, f64::INFINITY))
        })
        .collect()
}

/// Contact value of every object point with respect to one hand.
pub fn contact_map(object: &ObjectModel, hand: &HandSurface, k: f64) -> Vec<f64> {
    nearest_hand_vertices(object, hand)
        .into_iter()
        .map(|(_, d)| contact_value(d, k))
        .collect()
}

/// Class per object point: the part of the nearest hand vertex where
/// `c >= threshold`, otherwise [`NO_CONTACT`].
pub fn part_map(
    object: &ObjectModel,
    hand: &HandSurface,
    contact: &[f64],
    threshold: f64,
) -> Vec<usize> {
    nearest_hand_vertices(object, hand)
        .into_iter()
        .zip(contact)
        .map(|((i, _), &c)| {
            if c >= threshold && i != usize::MAX {
                hand.part_of_vertex[i].index()
            } else {
                NO_CONTACT
            }
        })
        .collect()
}

/// Expands class indices into one-hot rows of length B + 1.
pub fn one_hot(classes: &[usize]) -> Vec<[f64; NUM_PARTS + 1]> {
    classes
        .iter()
        .map(|&c| {
            let mut row = [0.0; NUM_PARTS + 1];
            row[c.min(NO_CONTACT)] = 1.0;
            row
        })
        .collect()
}

/// Affordance directions D and mask M of one hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandDirections {
    pub dirs: [Vec3; NUM_PARTS],
    pub mask: [bool; NUM_PARTS],
    /// Part in contact whose contact centroid coincides with the center.
    #[serde(default)]
    pub degenerate: [bool; NUM_PARTS],
}

impl Default for HandDirections {
    fn default() -> Self {
        HandDirections {
            dirs: [Vec3::zeros(); NUM_PARTS],
            mask: [false; NUM_PARTS],
            degenerate: [false; NUM_PARTS],
        }
    }
}

impl HandDirections {
    pub fn active(&self) -> impl Iterator<Item = (Part, &Vec3)> {
        Part::ALL
            .iter()
            .zip(&self.dirs)
            .filter(|(_, d)| d.norm() > 0.0)
            .map(|(p, d)| (*p, d))
    }
}

/// Unit vectors from `center` to the centroid of each part's contacted points.
pub fn affordance_directions(points: &[Vec3], center: &Vec3, parts: &[usize]) -> HandDirections {
    let mut sum = [Vec3::zeros(); NUM_PARTS];
    let mut count = [0usize; NUM_PARTS];
    for (p, &c) in points.iter().zip(parts) {
        if c < NUM_PARTS {
            sum[c] += p;
            count[c] += 1;
        }
    }
    let mut out = HandDirections::default();
    for b in 0..NUM_PARTS {
        if count[b] == 0 {
            continue;
        }
        out.mask[b] = true;
        let v = sum[b] / count[b] as f64 - center;
        let n = v.norm();
        if n < 1e-9 {
            out.degenerate[b] = true;
        } else {
            out.dirs[b] = v / n;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandContact {
    pub contact: Vec<f64>,
    /// Class index per object point (B = no contact).
    pub parts: Vec<usize>,
    pub directions: HandDirections,
}

/// Representation of both hands: index 0 right, 1 left.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactRepresentation {
    pub right: HandContact,
    pub left: HandContact,
}

pub fn hand_contact(object: &ObjectModel, hand: &HandSurface, cfg: &ContactConfig) -> HandContact {
    let nearest = nearest_hand_vertices(object, hand);
    let contact: Vec<f64> = nearest
        .iter()
        .map(|&(_, d)| contact_value(d, cfg.sharpness))
        .collect();
    let parts: Vec<usize> = nearest
        .iter()
        .zip(&contact)
        .map(|(&(i, _), &c)| {
            if c >= cfg.threshold && i != usize::MAX {
                hand.part_of_vertex[i].index()
            } else {
                NO_CONTACT
            }
        })
        .collect();
    let directions = affordance_directions(object.cloud().points(), &object.center(), &parts);
    HandContact {
        contact,
        parts,
        directions,
    }
}

pub fn contact_representation(
    object: &ObjectModel,
    right: &HandSurface,
    left: &HandSurface,
    cfg: &ContactConfig,
) -> ContactRepresentation {
    ContactRepresentation {
        right: hand_contact(object, right, cfg),
        left: hand_contact(object, left, cfg),
    }
}

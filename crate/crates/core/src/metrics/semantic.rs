//! Semantic correctness of a dual grasp on a two-part object: the hand
//! assigned to the smaller part must touch (or point at) it with at least
//! two fingers; the hand on the larger part needs the thumb and one more
//! finger there.

use serde::{Deserialize, Serialize};

use crate::contact::HandDirections;
use crate::error::{Error, Result};
use crate::hand::{Part, NUM_PARTS};
use crate::object::ObjectModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectPart {
    Smaller,
    Larger,
}

/// Names of the two parts and the label of every object cloud point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartLabels {
    pub smaller: String,
    pub larger: String,
    pub labels: Vec<ObjectPart>,
}

impl PartLabels {
    fn label_at(&self, object: &ObjectModel, p: &crate::geometry::Vec3) -> Option<ObjectPart> {
        object.tree().nearest(p).map(|(i, _)| self.labels[i])
    }
}

/// Target part per hand, index 0 right, 1 left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticTarget {
    pub right: ObjectPart,
    pub left: ObjectPart,
}

/// Parses "right <...> <part> / left <...> <part>" (either order; segments
/// split on '/', ';' or ','). Part names are matched as whole words.
pub fn parse_affordance_text(text: &str, labels: &PartLabels) -> Result<SemanticTarget> {
    let bad = |why: &str| Error::invalid(format!("affordance text {text:?}: {why}"));
    let (small, large) = (labels.smaller.to_lowercase(), labels.larger.to_lowercase());
    let mut right = None;
    let mut left = None;
    for seg in text
        .split(['/', ';', ','])
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        let words: Vec<String> = seg
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        let slot = match words.first().map(String::as_str) {
            Some("right") => &mut right,
            Some("left") => &mut left,
            _ => return Err(bad("each segment must start with 'right' or 'left'")),
        };
        let joined = format!(" {} ", words[1..].join(" "));
        let has = |name: &str| joined.contains(&format!(" {name} "));
        let part = match (has(&small), has(&large)) {
            (true, false) => ObjectPart::Smaller,
            (false, true) => ObjectPart::Larger,
            _ => return Err(bad("each hand must name exactly one object part")),
        };
        if slot.replace(part).is_some() {
            return Err(bad("hand named twice"));
        }
    }
    match (right, left) {
        (Some(right), Some(left)) => Ok(SemanticTarget { right, left }),
        _ => Err(bad("both hands must be named")),
    }
}

/// Parts each finger reaches: `[finger][part]` with parts indexed Smaller=0, Larger=1.
type Reach = [[bool; 2]; 5];

fn slot(p: ObjectPart) -> usize {
    match p {
        ObjectPart::Smaller => 0,
        ObjectPart::Larger => 1,
    }
}

/// The rule for one hand given which fingers reach which part.
pub fn hand_rule(reach: &[[bool; 2]; 5], target: ObjectPart) -> bool {
    let k = slot(target);
    match target {
        ObjectPart::Smaller => reach.iter().filter(|r| r[k]).count() >= 2,
        ObjectPart::Larger => reach[Part::Thumb.index()][k] && reach[1..].iter().any(|r| r[k]),
    }
}

fn direction_reach(dirs: &HandDirections, object: &ObjectModel, labels: &PartLabels) -> Reach {
    let mut reach = [[false; 2]; 5];
    let c = object.center();
    for f in Part::FINGERS {
        let d = dirs.dirs[f.index()];
        if d.norm() == 0.0 {
            continue;
        }
        if let Some(hit) = object.ray_cast(&c, &d) {
            if let Some(part) = labels.label_at(object, &hit.point) {
                reach[f.index()][slot(part)] = true;
            }
        }
    }
    reach
}

fn contact_reach(parts: &[usize], labels: &PartLabels) -> Reach {
    let mut reach = [[false; 2]; 5];
    for (&cls, &label) in parts.iter().zip(&labels.labels) {
        if cls < NUM_PARTS && cls != Part::Palm.index() {
            reach[cls][slot(label)] = true;
        }
    }
    reach
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticVerdict {
    pub dir_single: bool,
    pub dir_double: bool,
    pub grasp_single: bool,
    pub grasp_double: bool,
}

/// Verdicts from predicted directions and/or per-hand part maps (object
/// point classes). A missing input leaves its pair false.
pub fn semantic_check(
    directions: Option<&[HandDirections; 2]>,
    part_maps: Option<[&[usize]; 2]>,
    object: &ObjectModel,
    labels: &PartLabels,
    text: &str,
) -> Result<SemanticVerdict> {
    let n = object.cloud().len();
    if labels.labels.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: labels.labels.len(),
        });
    }
    let target = parse_affordance_text(text, labels)?;
    let targets = [target.right, target.left];
    let mut v = SemanticVerdict::default();
    if let Some(dirs) = directions {
        let pass: Vec<bool> = (0..2)
            .map(|h| hand_rule(&direction_reach(&dirs[h], object, labels), targets[h]))
            .collect();
        v.dir_single = pass[0] || pass[1];
        v.dir_double = pass[0] && pass[1];
    }
    if let Some(maps) = part_maps {
        for m in maps {
            if m.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    got: m.len(),
                });
            }
        }
        let pass: Vec<bool> = (0..2)
            .map(|h| hand_rule(&contact_reach(maps[h], labels), targets[h]))
            .collect();
        v.grasp_single = pass[0] || pass[1];
        v.grasp_double = pass[0] && pass[1];
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{primitives, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// A bottle-like capsule: points with z > 0.04 are the lid.
    fn bottle() -> (ObjectModel, PartLabels) {
        let obj =
            ObjectModel::from_mesh("bottle", primitives::capsule(0.03, 0.06, 24), 2048, 0).unwrap();
        let labels = obj
            .cloud()
            .points()
            .iter()
            .map(|p| {
                if p.z > 0.04 {
                    ObjectPart::Smaller
                } else {
                    ObjectPart::Larger
                }
            })
            .collect();
        (
            obj,
            PartLabels {
                smaller: "lid".into(),
                larger: "body".into(),
                labels,
            },
        )
    }

    fn dirs_for(fingers: &[(Part, Vec3)]) -> HandDirections {
        let mut d = HandDirections::default();
        for (p, v) in fingers {
            d.dirs[p.index()] = v.normalize();
            d.mask[p.index()] = true;
        }
        d
    }

    #[test]
    fn parses_targets() {
        let (_, labels) = bottle();
        let t = parse_affordance_text("right bottle lid / left bottle body", &labels).unwrap();
        assert_eq!(
            t,
            SemanticTarget {
                right: ObjectPart::Smaller,
                left: ObjectPart::Larger
            }
        );
        let t = parse_affordance_text("Left: hold the LID; right: body", &labels).unwrap();
        assert_eq!(
            t,
            SemanticTarget {
                right: ObjectPart::Larger,
                left: ObjectPart::Smaller
            }
        );
        for bad in [
            "",
            "twist the lid",
            "right lid",
            "right lid / right body",
            "right lid body / left body",
            "up lid / left body",
        ] {
            assert!(parse_affordance_text(bad, &labels).is_err(), "{bad}");
        }
    }

    #[test]
    fn direction_rule_example() {
        let (obj, labels) = bottle();
        let up = Vec3::new(0.0, 0.2, 1.0);
        let side = Vec3::new(1.0, 0.0, -0.3);
        let right = dirs_for(&[
            (Part::Index, up),
            (Part::Middle, up),
            (Part::Thumb, side),
            (Part::Ring, side),
        ]);
        let left = dirs_for(&[(Part::Index, up), (Part::Middle, up), (Part::Thumb, up)]);
        let v = semantic_check(
            Some(&[right.clone(), left]),
            None,
            &obj,
            &labels,
            "right bottle lid / left bottle body",
        )
        .unwrap();
        assert!(v.dir_single && !v.dir_double);
        assert!(!v.grasp_single);

        // every ray on the body while the right hand should be on the lid
        let all_body = dirs_for(&[
            (Part::Index, side),
            (Part::Middle, side),
            (Part::Thumb, side),
        ]);
        let v = semantic_check(
            Some(&[all_body.clone(), all_body]),
            None,
            &obj,
            &labels,
            "right lid / left body",
        )
        .unwrap();
        assert!(v.dir_single && !v.dir_double);
        let v = semantic_check(
            Some(&[right.clone(), right]),
            None,
            &obj,
            &labels,
            "right lid / left lid",
        )
        .unwrap();
        assert!(v.dir_double);
    }

    /// Rule restated by enumerating finger pairs.
    fn oracle(reach: &Reach, target: ObjectPart) -> bool {
        let k = slot(target);
        match target {
            ObjectPart::Smaller => {
                (0..5).any(|a| (0..5).any(|b| a != b && reach[a][k] && reach[b][k]))
            }
            ObjectPart::Larger => (1..5).any(|b| reach[0][k] && reach[b][k]),
        }
    }

    #[test]
    fn grasp_rule_matches_pair_enumeration() {
        let (obj, labels) = bottle();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = obj.cloud().len();
        for _ in 0..300 {
            let maps: Vec<Vec<usize>> = (0..2)
                .map(|_| {
                    let mut m = vec![NUM_PARTS; n];
                    for _ in 0..rng.random_range(0..6) {
                        let i = rng.random_range(0..n);
                        m[i] = rng.random_range(0..NUM_PARTS);
                    }
                    m
                })
                .collect();
            let text = [
                "right lid / left body",
                "right body / left lid",
                "right lid / left lid",
            ][rng.random_range(0..3)];
            let t = parse_affordance_text(text, &labels).unwrap();
            let v = semantic_check(None, Some([&maps[0], &maps[1]]), &obj, &labels, text).unwrap();
            let p = [
                oracle(&contact_reach(&maps[0], &labels), t.right),
                oracle(&contact_reach(&maps[1], &labels), t.left),
            ];
            assert_eq!(v.grasp_single, p[0] || p[1]);
            assert_eq!(v.grasp_double, p[0] && p[1]);
            assert!(!v.grasp_double || v.grasp_single);
        }
    }

    #[test]
    fn rejects_mismatched_labels() {
        let (obj, mut labels) = bottle();
        labels.labels.pop();
        assert!(semantic_check(None, None, &obj, &labels, "right lid / left body").is_err());
    }
}

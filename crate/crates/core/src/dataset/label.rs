//! Part labels for dual grasps and affordance-count balancing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GraspRecord;
use crate::error::{Error, Result};
use crate::geometry::farthest_point_indices;
use crate::hand::Chirality;

pub const DEFAULT_CATEGORIES: [&str; 9] = [
    "bottle",
    "pistol",
    "flashlight",
    "hammer",
    "headphones",
    "lightbulb",
    "lock",
    "knife",
    "usbstick",
];

/// A hand is labeled when strictly more than this share of its contact
/// mass lies on one part.
pub const LABEL_THRESHOLD: f64 = 0.95;

fn check_token(s: &str, what: &str) -> Result<()> {
    if s.is_empty()
        || !s
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
    {
        return Err(Error::invalid(format!(
            "{what} {s:?} must be one lowercase token"
        )));
    }
    Ok(())
}

/// Lowercases a name and joins internal whitespace with '_'.
pub fn normalize_token(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
        .to_lowercase()
}

/// Object category and the part assigned to each hand.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffordanceLabel {
    pub category: String,
    pub right: String,
    pub left: String,
}

impl AffordanceLabel {
    pub fn new(category: &str, right: &str, left: &str) -> Result<Self> {
        let l = AffordanceLabel {
            category: normalize_token(category),
            right: normalize_token(right),
            left: normalize_token(left),
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        check_token(&self.category, "category")?;
        check_token(&self.right, "part")?;
        check_token(&self.left, "part")
    }

    /// "right bottle lid"
    pub fn hand(&self, chirality: Chirality) -> String {
        let part = match chirality {
            Chirality::Right => &self.right,
            Chirality::Left => &self.left,
        };
        format!("{} {} {}", chirality.name(), self.category, part)
    }

    /// "right bottle lid / left bottle body"; also the affordance-type key.
    pub fn text(&self) -> String {
        format!(
            "{} / {}",
            self.hand(Chirality::Right),
            self.hand(Chirality::Left)
        )
    }
}

/// Part name of every object cloud point, aligned with the sampled cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartMapping {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub points: Vec<[f64; 3]>,
    pub part: Vec<String>,
}

impl PartMapping {
    /// Distinct part names in order of first appearance.
    pub fn part_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for p in &self.part {
            let p = normalize_token(p);
            if !names.contains(&p) {
                names.push(p);
            }
        }
        names
    }

    /// Index into [`Self::part_names`] per point.
    pub fn point_parts(&self) -> Vec<usize> {
        let names = self.part_names();
        self.part
            .iter()
            .map(|p| {
                names
                    .iter()
                    .position(|n| *n == normalize_token(p))
                    .expect("name listed")
            })
            .collect()
    }

    pub fn validate(&self, cloud_len: usize) -> Result<()> {
        if self.part.len() != cloud_len {
            return Err(Error::ShapeMismatch {
                expected: cloud_len,
                got: self.part.len(),
            });
        }
        if self.points.len() != self.part.len() {
            return Err(Error::ShapeMismatch {
                expected: self.part.len(),
                got: self.points.len(),
            });
        }
        for p in &self.part {
            check_token(&normalize_token(p), "part")?;
        }
        Ok(())
    }
}

/// Share of contact mass per part (ordered as [`PartMapping::part_names`])
/// over points with c ≥ threshold, or None when the hand has no contact mass.
pub fn part_fractions(
    contact: &[f64],
    threshold: f64,
    mapping: &PartMapping,
) -> Result<Option<Vec<f64>>> {
    mapping.validate(contact.len())?;
    let mut mass = vec![0.0; mapping.part_names().len()];
    for (&c, p) in contact.iter().zip(mapping.point_parts()) {
        if c >= threshold {
            mass[p] += c;
        }
    }
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return Ok(None);
    }
    Ok(Some(mass.into_iter().map(|m| m / total).collect()))
}

/// Index of the part holding more than [`LABEL_THRESHOLD`] of the mass.
pub fn label_from_fractions(fractions: &[f64]) -> Option<usize> {
    fractions.iter().position(|&f| f > LABEL_THRESHOLD)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelOutcome {
    pub label: Option<AffordanceLabel>,
    /// Per-hand fractions, right then left; None for a hand without contact.
    pub fractions: [Option<Vec<f64>>; 2],
    pub diagnostic: Option<String>,
}

/// Labels a record from its contact blocks. The category comes from the
/// mapping, else from `category`.
pub fn label_grasp(
    record: &GraspRecord,
    mapping: &PartMapping,
    category: Option<&str>,
    threshold: f64,
) -> Result<LabelOutcome> {
    let blocks = record.contact.as_ref().ok_or_else(|| {
        Error::invalid(format!(
            "record for {:?} has no contact maps",
            record.object
        ))
    })?;
    let rep = blocks.decode()?;
    let category = mapping
        .category
        .as_deref()
        .or(category)
        .ok_or_else(|| Error::invalid("no object category given"))?;
    let fractions = [
        part_fractions(&rep.right.contact, threshold, mapping)?,
        part_fractions(&rep.left.contact, threshold, mapping)?,
    ];
    let mut picks = [None, None];
    let mut diagnostic = None;
    for (h, name) in ["right", "left"].iter().enumerate() {
        match &fractions[h] {
            None => {
                diagnostic.get_or_insert_with(|| format!("{name} hand has zero contact mass"));
            }
            Some(f) => picks[h] = label_from_fractions(f),
        }
    }
    let label = match picks {
        [Some(r), Some(l)] => {
            let names = mapping.part_names();
            Some(AffordanceLabel::new(category, &names[r], &names[l])?)
        }
        _ => None,
    };
    Ok(LabelOutcome {
        label,
        fractions,
        diagnostic,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceOutcome {
    pub records: Vec<GraspRecord>,
    /// Count per affordance type before and after.
    pub before: BTreeMap<String, usize>,
    pub after: BTreeMap<String, usize>,
    pub truncated: Option<String>,
}

fn counts<'a>(keys: impl Iterator<Item = &'a String>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for k in keys {
        *m.entry(k.clone()).or_insert(0) += 1;
    }
    m
}

/// Caps the most frequent affordance type at twice the second. The kept
/// samples are a farthest-point subset over both hands' pose parameters,
/// returned in their original order. Ties for the top count go to the
/// lexicographically first type.
pub fn balance_affordances(records: Vec<GraspRecord>) -> Result<BalanceOutcome> {
    let keys = records
        .iter()
        .map(|r| {
            r.label
                .as_ref()
                .map(AffordanceLabel::text)
                .ok_or_else(|| Error::invalid(format!("unlabeled record for {:?}", r.object)))
        })
        .collect::<Result<Vec<String>>>()?;
    let before = counts(keys.iter());
    let mut ranked: Vec<(&String, &usize)> = before.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    let (top, cap) = match ranked.as_slice() {
        [(top, &n1), (_, &n2), ..] if n1 > 2 * n2 => ((*top).clone(), 2 * n2),
        _ => {
            return Ok(BalanceOutcome {
                records,
                after: before.clone(),
                before,
                truncated: None,
            });
        }
    };
    let members: Vec<usize> = (0..records.len()).filter(|&i| keys[i] == top).collect();
    let params: Vec<Vec<f64>> = members
        .iter()
        .map(|&i| {
            let mut p = records[i].right.to_params();
            p.extend(records[i].left.to_params());
            p
        })
        .collect();
    let dist = |a: usize, b: usize| {
        params[a]
            .iter()
            .zip(&params[b])
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut keep = vec![true; records.len()];
    for &i in &members {
        keep[i] = false;
    }
    for k in farthest_point_indices(members.len(), cap, dist) {
        keep[members[k]] = true;
    }
    let out: Vec<GraspRecord> = records
        .into_iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r)
        .collect();
    let after = counts(keys.iter().zip(&keep).filter(|(_, &k)| k).map(|(s, _)| s));
    Ok(BalanceOutcome {
        records: out,
        before,
        after,
        truncated: Some(top),
    })
}

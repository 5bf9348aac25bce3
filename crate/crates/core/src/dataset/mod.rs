//! Dataset records in JSON Lines: single-hand ingestion, dual-hand output
//! with inline contact blocks, part labeling and affordance balancing.

pub mod blocks;
mod label;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::contact::{contact_representation, ContactConfig};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::hand::{rot6d_to_matrix, Chirality, HandModel, HandPose, NUM_DOF};
use crate::object::ObjectModel;
use crate::symmetry::SymmetryReport;
use crate::symopt::{GraspStatus, SymoptRun};

pub use blocks::{Block, ContactBlocks, HandBlocks};
pub use label::{
    balance_affordances, label_from_fractions, label_grasp, normalize_token, part_fractions,
    AffordanceLabel, BalanceOutcome, LabelOutcome, PartMapping, DEFAULT_CATEGORIES,
    LABEL_THRESHOLD,
};

/// A rejected input line (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Parsed lines plus per-line errors; valid lines are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub errors: Vec<LineError>,
}

fn parse_lines<T>(text: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Parsed<T> {
    let mut out = Parsed {
        records: Vec::new(),
        errors: Vec::new(),
    };
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse(line) {
            Ok(r) => out.records.push(r),
            Err(message) => out.errors.push(LineError {
                line: i + 1,
                message,
            }),
        }
    }
    out
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::file(path, e))
}

fn fixed<const N: usize>(v: &[f64], what: &str) -> std::result::Result<[f64; N], String> {
    if v.len() != N {
        return Err(format!("{what} has {} entries, expected {N}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(format!("{what} is not finite"));
    }
    Ok(std::array::from_fn(|i| v[i]))
}

fn pose_from(
    chirality: Chirality,
    trans: &[f64],
    rot6d: &[f64],
    theta: &[f64],
    prefix: &str,
) -> std::result::Result<HandPose, String> {
    let t: [f64; 3] = fixed(trans, &format!("{prefix}trans"))?;
    let r: [f64; 6] = fixed(rot6d, &format!("{prefix}rot6d"))?;
    let th: [f64; NUM_DOF] = fixed(theta, &format!("{prefix}theta"))?;
    rot6d_to_matrix(&r).map_err(|e| format!("{prefix}rot6d: {e}"))?;
    Ok(HandPose {
        chirality,
        trans: Vec3::from(t),
        rot6d: r,
        theta: th,
    })
}

/// One line of single-hand input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SingleHandLine {
    object: String,
    scale: f64,
    trans: Vec<f64>,
    rot6d: Vec<f64>,
    theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleHandRecord {
    pub object: String,
    pub scale: f64,
    pub pose: HandPose,
}

impl SingleHandRecord {
    pub fn to_json(&self) -> String {
        let line = SingleHandLine {
            object: self.object.clone(),
            scale: self.scale,
            trans: self.pose.trans.iter().copied().collect(),
            rot6d: self.pose.rot6d.to_vec(),
            theta: self.pose.theta.to_vec(),
        };
        serde_json::to_string(&line).expect("plain data serializes")
    }
}

pub fn parse_single_hand(text: &str) -> Parsed<SingleHandRecord> {
    parse_lines(text, |line| {
        let l: SingleHandLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if !(l.scale.is_finite() && l.scale > 0.0) {
            return Err(format!("scale must be positive, got {}", l.scale));
        }
        let pose = pose_from(Chirality::Right, &l.trans, &l.rot6d, &l.theta, "")?;
        Ok(SingleHandRecord {
            object: l.object,
            scale: l.scale,
            pose,
        })
    })
}

/// Right-hand grasps from a JSON Lines file; malformed lines are reported
/// and skipped.
pub fn ingest_single_hand(path: &Path) -> Result<Parsed<SingleHandRecord>> {
    Ok(parse_single_hand(&read_text(path)?))
}

/// Poses grouped by object id, in file order within each object.
pub fn group_by_object(records: &[SingleHandRecord]) -> BTreeMap<String, Vec<HandPose>> {
    let mut out: BTreeMap<String, Vec<HandPose>> = BTreeMap::new();
    for r in records {
        out.entry(r.object.clone())
            .or_default()
            .push(r.pose.clone());
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TtaProvenance {
    pub steps: usize,
    pub accepted: usize,
    pub energy_tail: Vec<f64>,
    pub failed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<GraspStatus>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub energy_tail: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tta: Option<TtaProvenance>,
}

/// A dual-hand grasp with optional contact blocks and label.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspRecord {
    pub object: String,
    pub scale: f64,
    pub right: HandPose,
    pub left: HandPose,
    pub contact: Option<ContactBlocks>,
    pub label: Option<AffordanceLabel>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    object: String,
    scale: f64,
    trans: Vec<f64>,
    rot6d: Vec<f64>,
    theta: Vec<f64>,
    left_trans: Vec<f64>,
    left_rot6d: Vec<f64>,
    left_theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contact: Option<ContactBlocks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<AffordanceLabel>,
    #[serde(default)]
    provenance: Provenance,
}

impl GraspRecord {
    pub fn to_json(&self) -> String {
        let line = RecordLine {
            object: self.object.clone(),
            scale: self.scale,
            trans: self.right.trans.iter().copied().collect(),
            rot6d: self.right.rot6d.to_vec(),
            theta: self.right.theta.to_vec(),
            left_trans: self.left.trans.iter().copied().collect(),
            left_rot6d: self.left.rot6d.to_vec(),
            left_theta: self.left.theta.to_vec(),
            contact: self.contact.clone(),
            label: self.label.clone(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_string(&line).expect("plain data serializes")
    }

    pub fn from_json(line: &str) -> std::result::Result<Self, String> {
        let l: RecordLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if let Some(label) = &l.label {
            label.validate().map_err(|e| e.to_string())?;
        }
        Ok(GraspRecord {
            right: pose_from(Chirality::Right, &l.trans, &l.rot6d, &l.theta, "")?,
            left: pose_from(
                Chirality::Left,
                &l.left_trans,
                &l.left_rot6d,
                &l.left_theta,
                "left_",
            )?,
            object: l.object,
            scale: l.scale,
            contact: l.contact,
            label: l.label,
            provenance: l.provenance,
        })
    }
}

pub fn parse_records(text: &str) -> Parsed<GraspRecord> {
    parse_lines(text, GraspRecord::from_json)
}

pub fn read_records(path: &Path) -> Result<Parsed<GraspRecord>> {
    Ok(parse_records(&read_text(path)?))
}

pub fn write_records<W: Write>(records: &[GraspRecord], mut w: W) -> Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_json())?;
    }
    Ok(())
}

/// Streams records from a reader, calling `f` on each parsed line.
pub fn for_each_record<R: BufRead>(
    reader: R,
    mut f: impl FnMut(std::result::Result<GraspRecord, LineError>),
) -> Result<()> {
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        f(GraspRecord::from_json(&line).map_err(|message| LineError {
            line: i + 1,
            message,
        }));
    }
    Ok(())
}

/// Records for the optimized grasps of a SymOpt run, with contact blocks
/// when a contact configuration is given. Keeps the last `tail` energies.
pub fn records_from_run(
    object: &ObjectModel,
    run: &SymoptRun,
    contact: Option<&ContactConfig>,
    model: &Arc<HandModel>,
) -> Result<Vec<GraspRecord>> {
    const TAIL: usize = 5;
    let mut out = Vec::new();
    for g in run
        .grasps
        .iter()
        .filter(|g| g.status == GraspStatus::Optimized)
    {
        let blocks = match contact {
            Some(cfg) => {
                let (r, l) = (model.forward(&g.right)?, model.forward(&g.left)?);
                Some(ContactBlocks::encode(&contact_representation(
                    object, &r, &l, cfg,
                )))
            }
            None => None,
        };
        let tail = g.energy_trace.len().saturating_sub(TAIL);
        out.push(GraspRecord {
            object: object.id.clone(),
            scale: object.scale,
            right: g.right.clone(),
            left: g.left.clone(),
            contact: blocks,
            label: None,
            provenance: Provenance {
                symmetry: run.report.clone(),
                status: Some(g.status),
                energy_tail: g.energy_trace[tail..].to_vec(),
                tta: None,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests;

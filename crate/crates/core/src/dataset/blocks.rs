//! Inline binary arrays: little-endian f32 packed into base64.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::contact::{ContactRepresentation, HandContact, HandDirections};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::hand::NUM_PARTS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub dtype: String,
    pub shape: Vec<usize>,
    pub data: String,
}

impl Block {
    pub fn encode(values: &[f64], shape: Vec<usize>) -> Block {
        let mut bytes = Vec::with_capacity(values.len() * 4);
        for v in values {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        Block {
            dtype: "f32".into(),
            shape,
            data: STANDARD.encode(bytes),
        }
    }

    pub fn decode(&self) -> Result<Vec<f64>> {
        if self.dtype != "f32" {
            return Err(Error::invalid(format!(
                "unsupported block dtype {:?}",
                self.dtype
            )));
        }
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| Error::invalid(format!("bad base64 block: {e}")))?;
        let expected: usize = self.shape.iter().product();
        if bytes.len() != expected * 4 {
            return Err(Error::ShapeMismatch {
                expected: expected * 4,
                got: bytes.len(),
            });
        }
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect())
    }
}

fn bools(b: &[bool]) -> Vec<f64> {
    b.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect()
}

/// One hand's contact, part map, directions, mask and degenerate flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandBlocks {
    pub contact: Block,
    pub parts: Block,
    pub directions: Block,
    pub mask: Block,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<Block>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactBlocks {
    pub right: HandBlocks,
    pub left: HandBlocks,
}

fn encode_hand(h: &HandContact) -> HandBlocks {
    let n = h.contact.len();
    let dirs: Vec<f64> = h
        .directions
        .dirs
        .iter()
        .flat_map(|d| d.iter().copied())
        .collect();
    HandBlocks {
        contact: Block::encode(&h.contact, vec![n]),
        parts: Block::encode(
            &h.parts.iter().map(|&p| p as f64).collect::<Vec<_>>(),
            vec![n],
        ),
        directions: Block::encode(&dirs, vec![NUM_PARTS, 3]),
        mask: Block::encode(&bools(&h.directions.mask), vec![NUM_PARTS]),
        degenerate: h
            .directions
            .degenerate
            .iter()
            .any(|&d| d)
            .then(|| Block::encode(&bools(&h.directions.degenerate), vec![NUM_PARTS])),
    }
}

fn decode_hand(b: &HandBlocks) -> Result<HandContact> {
    let contact = b.contact.decode()?;
    let parts: Vec<usize> = b.parts.decode()?.into_iter().map(|p| p as usize).collect();
    if parts.len() != contact.len() {
        return Err(Error::ShapeMismatch {
            expected: contact.len(),
            got: parts.len(),
        });
    }
    if let Some(p) = parts.iter().find(|&&p| p > NUM_PARTS) {
        return Err(Error::invalid(format!("part class {p} out of range")));
    }
    let d = b.directions.decode()?;
    let m = b.mask.decode()?;
    if d.len() != NUM_PARTS * 3 || m.len() != NUM_PARTS {
        return Err(Error::ShapeMismatch {
            expected: NUM_PARTS * 3,
            got: d.len(),
        });
    }
    let deg = match &b.degenerate {
        Some(blk) => blk.decode()?,
        None => vec![0.0; NUM_PARTS],
    };
    let mut directions = HandDirections::default();
    for k in 0..NUM_PARTS {
        directions.dirs[k] = Vec3::new(d[3 * k], d[3 * k + 1], d[3 * k + 2]);
        directions.mask[k] = m[k] != 0.0;
        directions.degenerate[k] = deg.get(k).is_some_and(|&x| x != 0.0);
    }
    Ok(HandContact {
        contact,
        parts,
        directions,
    })
}

impl ContactBlocks {
    pub fn encode(rep: &ContactRepresentation) -> Self {
        ContactBlocks {
            right: encode_hand(&rep.right),
            left: encode_hand(&rep.left),
        }
    }

    pub fn decode(&self) -> Result<ContactRepresentation> {
        Ok(ContactRepresentation {
            right: decode_hand(&self.right)?,
            left: decode_hand(&self.left)?,
        })
    }
}

use std::collections::HashMap;

use super::{Mat3, Vec3};
use crate::error::{Error, Result};

/// Vertices closer than this are merged at load time.
pub const MERGE_TOLERANCE: f64 = 1e-7;

/// What load-time cleanup changed, and whether the result is closed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CleanupReport {
    pub merged_vertices: usize,
    pub dropped_faces: usize,
    /// Every undirected edge is shared by exactly two faces with opposite orientation.
    pub watertight: bool,
}

/// Indexed triangle mesh in meters. Faces are counter-clockwise seen from outside.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    watertight: bool,
}

impl TriMesh {
    /// Builds a mesh and runs cleanup: merges duplicate vertices, drops
    /// zero-area faces and flags non-watertight input.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<(Self, CleanupReport)> {
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v as usize >= vertices.len() {
                    return Err(Error::invalid(format!(
                        "face {fi} references vertex {v} but the mesh has {} vertices",
                        vertices.len()
                    )));
                }
            }
        }
        if let Some(i) = vertices
            .iter()
            .position(|v| !v.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinite(format!("mesh vertex {i}")));
        }

        let (remap, merged_vertices, unique) = merge_vertices(&vertices);
        let mut kept = Vec::with_capacity(faces.len());
        let mut dropped_faces = 0;
        for f in &faces {
            let g = [
                remap[f[0] as usize],
                remap[f[1] as usize],
                remap[f[2] as usize],
            ];
            let (a, b, c) = (
                unique[g[0] as usize],
                unique[g[1] as usize],
                unique[g[2] as usize],
            );
            let area2 = (b - a).cross(&(c - a)).norm();
            if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] || area2 <= 0.0 {
                dropped_faces += 1;
                continue;
            }
            kept.push(g);
        }
        let watertight = is_edge_manifold(&kept);
        let mesh = TriMesh {
            vertices: unique,
            faces: kept,
            watertight,
        };
        let report = CleanupReport {
            merged_vertices,
            dropped_faces,
            watertight,
        };
        Ok((mesh, report))
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn is_watertight(&self) -> bool {
        self.watertight
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Longest edge; used as the resolution scale of distance tolerances.
    pub fn max_edge_length(&self) -> f64 {
        let mut best = 0.0f64;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            best = best
                .max((b - a).norm())
                .max((c - b).norm())
                .max((a - c).norm());
        }
        best
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn translated(&self, offset: &Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            faces: self.faces.clone(),
            watertight: self.watertight,
        }
    }

    /// Applies a linear map; faces are flipped when it reverses orientation.
    pub fn transformed(&self, m: &Mat3) -> TriMesh {
        let flip = m.determinant() < 0.0;
        TriMesh {
            vertices: self.vertices.iter().map(|v| m * v).collect(),
            faces: self
                .faces
                .iter()
                .map(|&[a, b, c]| if flip { [a, c, b] } else { [a, b, c] })
                .collect(),
            watertight: self.watertight,
        }
    }

    /// Concatenates meshes without merging; overlapping closed parts keep
    /// a winding number >= 1 inside their union.
    pub fn concat(parts: &[TriMesh]) -> TriMesh {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for m in parts {
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            faces.extend(
                m.faces
                    .iter()
                    .map(|f| [f[0] + base, f[1] + base, f[2] + base]),
            );
        }
        let watertight = parts.iter().all(|m| m.watertight);
        TriMesh {
            vertices,
            faces,
            watertight,
        }
    }
}

fn merge_vertices(vertices: &[Vec3]) -> (Vec<u32>, usize, Vec<Vec3>) {
    let cell = |v: &Vec3| {
        (
            (v.x / MERGE_TOLERANCE).floor() as i64,
            (v.y / MERGE_TOLERANCE).floor() as i64,
            (v.z / MERGE_TOLERANCE).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
    let mut unique: Vec<Vec3> = Vec::with_capacity(vertices.len());
    let mut remap = Vec::with_capacity(vertices.len());
    let mut merged = 0;
    for v in vertices {
        let (cx, cy, cz) = cell(v);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &id in ids {
                            if (unique[id as usize] - v).norm() <= MERGE_TOLERANCE {
                                found = Some(id);
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        match found {
            Some(id) => {
                merged += 1;
                remap.push(id);
            }
            None => {
                let id = unique.len() as u32;
                unique.push(*v);
                grid.entry((cx, cy, cz)).or_default().push(id);
                remap.push(id);
            }
        }
    }
    (remap, merged, unique)
}

fn is_edge_manifold(faces: &[[u32; 3]]) -> bool {
    if faces.is_empty() {
        return false;
    }
    // directed edge counts; closed consistently oriented surfaces use each exactly once
    let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 3);
    for f in faces {
        for k in 0..3 {
            *directed.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    directed
        .iter()
        .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
}

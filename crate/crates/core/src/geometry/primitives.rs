//! Procedural closed meshes, all outward-oriented and watertight.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::mesh::TriMesh;
use super::Vec3;

fn finish(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> TriMesh {
    TriMesh::new(vertices, faces)
        .expect("procedural mesh indices are in range")
        .0
}

/// Axis-aligned box centered at the origin, each face split into `n`×`n` quads.
pub fn box_mesh_subdivided(half: Vec3, n: usize) -> TriMesh {
    let n = n.max(1);
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    // (normal axis, sign); u, v axes chosen so u × v = sign * normal
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let (mut u, mut v) = ((axis + 1) % 3, (axis + 2) % 3);
            if sign < 0.0 {
                std::mem::swap(&mut u, &mut v);
            }
            let base = vertices.len() as u32;
            for i in 0..=n {
                for j in 0..=n {
                    let mut p = Vec3::zeros();
                    p[axis] = sign * half[axis];
                    p[u] = half[u] * (2.0 * i as f64 / n as f64 - 1.0);
                    p[v] = half[v] * (2.0 * j as f64 / n as f64 - 1.0);
                    vertices.push(p);
                }
            }
            let id = |i: usize, j: usize| base + (i * (n + 1) + j) as u32;
            for i in 0..n {
                for j in 0..n {
                    faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                    faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
        }
    }
    finish(vertices, faces)
}

/// Axis-aligned box centered at the origin.
pub fn box_mesh(half: Vec3) -> TriMesh {
    box_mesh_subdivided(half, 1)
}

/// Icosahedron subdivided `levels` times and projected onto the sphere.
pub fn icosphere(radius: f64, levels: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) / 2.0).normalize());
                (verts.len() - 1) as u32
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| v * radius).collect();
    finish(verts, faces)
}

/// Revolves a profile of `(radius, z)` points about the z axis.
///
/// The profile runs from bottom to top; open ends are closed with a pole vertex.
pub fn revolve(profile: &[(f64, f64)], segments: usize) -> TriMesh {
    let segments = segments.max(3);
    let mut prof: Vec<(f64, f64)> = profile.to_vec();
    if let Some(&(r, z)) = prof.first() {
        if r > 0.0 {
            prof.insert(0, (0.0, z));
        }
    }
    if let Some(&(r, z)) = prof.last() {
        if r > 0.0 {
            prof.push((0.0, z));
        }
    }
    let mut vertices = Vec::new();
    // ring start index, or pole index with segments == 1
    let mut rings: Vec<(u32, bool)> = Vec::new();
    for &(r, z) in &prof {
        let start = vertices.len() as u32;
        if r <= 0.0 {
            vertices.push(Vec3::new(0.0, 0.0, z));
            rings.push((start, true));
        } else {
            for j in 0..segments {
                let phi = 2.0 * PI * j as f64 / segments as f64;
                vertices.push(Vec3::new(r * phi.cos(), r * phi.sin(), z));
            }
            rings.push((start, false));
        }
    }
    let s = segments as u32;
    let mut faces = Vec::new();
    for w in rings.windows(2) {
        let ((lo, lo_pole), (hi, hi_pole)) = (w[0], w[1]);
        for j in 0..s {
            let jn = (j + 1) % s;
            match (lo_pole, hi_pole) {
                (true, false) => faces.push([lo, hi + jn, hi + j]),
                (false, true) => faces.push([hi, lo + j, lo + jn]),
                (false, false) => {
                    faces.push([lo + j, lo + jn, hi + jn]);
                    faces.push([lo + j, hi + jn, hi + j]);
                }
                (true, true) => {}
            }
        }
    }
    finish(vertices, faces)
}

/// Cylinder along z centered at the origin.
pub fn cylinder(radius: f64, half_height: f64, segments: usize) -> TriMesh {
    let rings = 8;
    let profile: Vec<(f64, f64)> = (0..=rings)
        .map(|i| {
            (
                radius,
                -half_height + 2.0 * half_height * i as f64 / rings as f64,
            )
        })
        .collect();
    revolve(&profile, segments)
}

fn hemisphere_profile(radius: f64, z0: f64, rings: usize, upper: bool) -> Vec<(f64, f64)> {
    (0..=rings)
        .map(|i| {
            let a = PI / 2.0 * i as f64 / rings as f64;
            if upper {
                (radius * a.cos(), z0 + radius * a.sin())
            } else {
                (radius * a.sin(), z0 - radius * a.cos())
            }
        })
        .collect()
}

/// Capsule along z: cylinder of half-length `half_length` with hemispherical caps.
pub fn capsule(radius: f64, half_length: f64, segments: usize) -> TriMesh {
    let rings = 8;
    let mut profile = hemisphere_profile(radius, -half_length, rings, false);
    for i in 1..rings {
        profile.push((
            radius,
            -half_length + 2.0 * half_length * i as f64 / rings as f64,
        ));
    }
    profile.extend(hemisphere_profile(radius, half_length, rings, true));
    revolve(&profile, segments)
}

/// Two spherical bulbs of radius `bulb` at z = ±`offset`, joined by a neck of radius `neck`.
pub fn dumbbell(bulb: f64, neck: f64, offset: f64, segments: usize) -> TriMesh {
    let neck = neck.min(bulb * 0.95);
    // polar angle where the bulb surface meets the neck radius
    let meet = (neck / bulb).asin();
    let rings = 12;
    let mut profile = Vec::new();
    for i in 0..=rings {
        // bottom bulb from its south pole up to the neck
        let a = (PI - meet) * i as f64 / rings as f64;
        profile.push((bulb * a.sin(), -offset - bulb * a.cos()));
    }
    for i in 0..=rings {
        let a = meet + (PI - meet) * i as f64 / rings as f64;
        profile.push((bulb * a.sin(), offset - bulb * a.cos()));
    }
    profile.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    revolve(&profile, segments)
}

//! Mesh readers (OBJ, OFF), OBJ scene export and the binary point cloud format.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use super::mesh::{CleanupReport, TriMesh};
use super::{PointCloud, Vec3};
use crate::error::{Error, Result};

const DHPC_MAGIC: &[u8; 4] = b"DHPC";

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: Option<&str>, path: &str, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(path, line, "missing coordinate"))?;
    tok.parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("bad number '{tok}'")))
}

/// Polygons are fan-triangulated.
fn push_polygon(faces: &mut Vec<[u32; 3]>, poly: &[u32]) {
    for k in 1..poly.len().saturating_sub(1) {
        faces.push([poly[0], poly[k], poly[k + 1]]);
    }
}

/// Parses Wavefront OBJ text: `v` and `f` records; texture/normal indices are ignored.
pub fn parse_obj(text: &str, path: &str) -> Result<(TriMesh, CleanupReport)> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), path, line)?;
                let y = parse_f64(toks.next(), path, line)?;
                let z = parse_f64(toks.next(), path, line)?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for t in toks {
                    let idx = t.split('/').next().unwrap_or("");
                    let i: i64 = idx
                        .parse()
                        .map_err(|_| parse_err(path, line, format!("bad face index '{t}'")))?;
                    // OBJ is 1-based; negative indices count back from the latest vertex
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(parse_err(path, line, "face index 0 is invalid"));
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(parse_err(
                            path,
                            line,
                            format!("face index {i} out of range"),
                        ));
                    }
                    poly.push(resolved as u32);
                }
                if poly.len() < 3 {
                    return Err(parse_err(path, line, "face with fewer than 3 vertices"));
                }
                push_polygon(&mut faces, &poly);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

/// Parses ASCII OFF text.
pub fn parse_off(text: &str, path: &str) -> Result<(TriMesh, CleanupReport)> {
    // (line number, tokens) with comments and blank lines removed
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
    });
    let (ln, first) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty OFF file"))?;
    let mut counts = first.clone();
    if counts.first().map(|t| t.ends_with("OFF")).unwrap_or(false) {
        counts.remove(0);
    } else {
        return Err(parse_err(path, ln, "missing OFF header"));
    }
    let (ln, counts) = if counts.is_empty() {
        lines
            .next()
            .ok_or_else(|| parse_err(path, ln, "missing element counts"))?
    } else {
        (ln, counts)
    };
    let count = |k: usize| -> Result<usize> {
        counts
            .get(k)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(path, ln, "bad element counts"))
    };
    let (nv, nf) = (count(0)?, count(1)?);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = lines
            .next()
            .ok_or_else(|| parse_err(path, ln, "unexpected end of vertex list"))?;
        let mut it = t.iter().copied();
        let x = parse_f64(it.next(), path, ln)?;
        let y = parse_f64(it.next(), path, ln)?;
        let z = parse_f64(it.next(), path, ln)?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, t) = lines
            .next()
            .ok_or_else(|| parse_err(path, ln, "unexpected end of face list"))?;
        let n: usize = t
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(path, ln, "bad face size"))?;
        if n < 3 || t.len() < n + 1 {
            return Err(parse_err(path, ln, "malformed face"));
        }
        let mut poly = Vec::with_capacity(n);
        for s in &t[1..=n] {
            let i: usize = s
                .parse()
                .map_err(|_| parse_err(path, ln, format!("bad face index '{s}'")))?;
            if i >= nv {
                return Err(parse_err(path, ln, format!("face index {i} out of range")));
            }
            poly.push(i as u32);
        }
        push_polygon(&mut faces, &poly);
    }
    TriMesh::new(vertices, faces)
}

/// Reads an OBJ or OFF file, chosen by extension.
pub fn read_mesh(path: &Path) -> Result<(TriMesh, CleanupReport)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let name = path.display().to_string();
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("obj") => parse_obj(&text, &name),
        Some("off") => parse_off(&text, &name),
        _ => Err(Error::invalid(format!(
            "{name}: unsupported mesh extension (expected .obj or .off)"
        ))),
    }
}

/// Renders named meshes as one OBJ document with an `o` group per part.
pub fn obj_scene(parts: &[(&str, &TriMesh)]) -> String {
    let mut out = String::new();
    let mut base = 1usize;
    for (name, mesh) in parts {
        let _ = writeln!(out, "o {name}");
        for v in mesh.vertices() {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in mesh.faces() {
            let _ = writeln!(
                out,
                "f {} {} {}",
                f[0] as usize + base,
                f[1] as usize + base,
                f[2] as usize + base
            );
        }
        base += mesh.vertices().len();
    }
    out
}

/// Renders a point set as OBJ vertices only.
pub fn obj_points(name: &str, points: &[Vec3]) -> String {
    let mut out = format!("o {name}\n");
    for v in points {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    out
}

pub fn write_dhpc<W: Write>(cloud: &PointCloud, mut w: W) -> Result<()> {
    w.write_all(DHPC_MAGIC)?;
    w.write_all(&(cloud.len() as u32).to_le_bytes())?;
    w.write_all(&[cloud.normals().is_some() as u8])?;
    let mut put = |v: &Vec3| -> std::io::Result<()> {
        for c in v.iter() {
            w.write_all(&(*c as f32).to_le_bytes())?;
        }
        Ok(())
    };
    for p in cloud.points() {
        put(p)?;
    }
    if let Some(ns) = cloud.normals() {
        for n in ns {
            put(n)?;
        }
    }
    Ok(())
}

pub fn read_dhpc<R: Read>(mut r: R) -> Result<PointCloud> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DHPC_MAGIC {
        return Err(Error::invalid("not a DHPC point cloud (bad magic)"));
    }
    let mut count = [0u8; 4];
    r.read_exact(&mut count)?;
    let n = u32::from_le_bytes(count) as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let mut get = |k: usize| -> Result<Vec<Vec3>> {
        let mut buf = vec![0u8; k * 12];
        r.read_exact(&mut buf)?;
        Ok(buf
            .chunks_exact(12)
            .map(|c| {
                let f =
                    |i: usize| f32::from_le_bytes(c[i * 4..i * 4 + 4].try_into().unwrap()) as f64;
                Vec3::new(f(0), f(1), f(2))
            })
            .collect())
    };
    let points = get(n)?;
    let normals = match flag[0] {
        0 => None,
        1 => {
            // f32 storage loses the exact unit norm; renormalize before validation
            let ns = get(n)?;
            Some(
                ns.into_iter()
                    .map(|v| if v.norm() > 0.0 { v.normalize() } else { v })
                    .collect(),
            )
        }
        f => return Err(Error::invalid(format!("bad DHPC normals flag {f}"))),
    };
    PointCloud::new(points, normals)
}

//! Convex hull of points in six dimensions (Quickhull with a conflict list),
//! used for the wrench-space margin.

use std::collections::HashMap;

use nalgebra::Matrix5;

pub const DIM: usize = 6;
pub type Wrench = [f64; DIM];

type Ridge = [usize; DIM - 1];

#[derive(Debug, Clone)]
struct Facet {
    verts: [usize; DIM],
    normal: Wrench,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

fn dot(a: &Wrench, b: &Wrench) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &Wrench, b: &Wrench) -> Wrench {
    std::array::from_fn(|i| a[i] - b[i])
}

/// Unit normal and offset of the hyperplane through `verts`, oriented so
/// that `interior` lies strictly below it. None if the vertices are
/// affinely dependent.
fn hyperplane(
    points: &[Wrench],
    verts: &[usize; DIM],
    interior: &Wrench,
    tiny: f64,
) -> Option<(Wrench, f64)> {
    let base = points[verts[0]];
    let rows: Vec<Wrench> = verts[1..].iter().map(|&v| sub(&points[v], &base)).collect();
    let mut n = [0.0; DIM];
    for (col, slot) in n.iter_mut().enumerate() {
        let m = Matrix5::from_fn(|r, c| rows[r][if c < col { c } else { c + 1 }]);
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        *slot = sign * m.determinant();
    }
    let len = dot(&n, &n).sqrt();
    if !(len > tiny) {
        return None;
    }
    n.iter_mut().for_each(|x| *x /= len);
    let mut offset = dot(&n, &base);
    if dot(&n, interior) - offset > 0.0 {
        n.iter_mut().for_each(|x| *x = -*x);
        offset = -offset;
    }
    Some((n, offset))
}

fn ridge_without(verts: &[usize; DIM], k: usize) -> Ridge {
    let mut r = [0; DIM - 1];
    let mut j = 0;
    for (i, &v) in verts.iter().enumerate() {
        if i != k {
            r[j] = v;
            j += 1;
        }
    }
    r
}

/// Picks DIM + 1 affinely independent points, greedily maximizing the
/// distance to the span of those already chosen.
fn initial_simplex(points: &[Wrench], eps: f64) -> Option<[usize; DIM + 1]> {
    let first =
        (0..points.len()).max_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(b.cmp(&a)))?;
    let mut chosen = vec![first];
    let mut basis: Vec<Wrench> = Vec::new();
    while chosen.len() < DIM + 1 {
        let mut best = (0.0, usize::MAX, [0.0; DIM]);
        for (i, p) in points.iter().enumerate() {
            let mut r = sub(p, &points[first]);
            for b in &basis {
                let c = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let len = dot(&r, &r).sqrt();
            if len > best.0 {
                best = (len, i, r);
            }
        }
        if best.0 <= eps {
            return None;
        }
        let (len, i, mut r) = best;
        r.iter_mut().for_each(|x| *x /= len);
        basis.push(r);
        chosen.push(i);
    }
    Some(std::array::from_fn(|k| chosen[k]))
}

/// Hull facets as (unit outward normal, offset) pairs, or None when the
/// points do not span all six dimensions.
pub fn hull_facets(points: &[Wrench]) -> Option<Vec<(Wrench, f64)>> {
    if points.len() < DIM + 1 || points.iter().any(|p| p.iter().any(|x| !x.is_finite())) {
        return None;
    }
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1e-300);
    let eps = 1e-10 * scale;
    let tiny = 1e-14 * scale.powi(DIM as i32 - 1);
    let simplex = initial_simplex(points, eps)?;
    let mut interior = [0.0; DIM];
    for &v in &simplex {
        interior
            .iter_mut()
            .zip(&points[v])
            .for_each(|(c, x)| *c += x / (DIM + 1) as f64);
    }

    let mut facets: Vec<Facet> = Vec::new();
    let mut ridges: HashMap<Ridge, [usize; 2]> = HashMap::new();
    let link = |ridges: &mut HashMap<Ridge, [usize; 2]>, f: usize, verts: &[usize; DIM]| {
        for k in 0..DIM {
            let e = ridges
                .entry(ridge_without(verts, k))
                .or_insert([usize::MAX; 2]);
            if e[0] == usize::MAX {
                e[0] = f;
            } else {
                e[1] = f;
            }
        }
    };
    for skip in 0..=DIM {
        let mut verts = [0; DIM];
        let mut j = 0;
        for (i, &v) in simplex.iter().enumerate() {
            if i != skip {
                verts[j] = v;
                j += 1;
            }
        }
        verts.sort_unstable();
        let (normal, offset) = hyperplane(points, &verts, &interior, tiny)?;
        link(&mut ridges, facets.len(), &verts);
        facets.push(Facet {
            verts,
            normal,
            offset,
            outside: Vec::new(),
            alive: true,
        });
    }
    let assign = |facets: &mut [Facet], ids: &[usize], p: usize| {
        for &f in ids {
            if dot(&facets[f].normal, &points[p]) - facets[f].offset > eps {
                facets[f].outside.push(p);
                return;
            }
        }
    };
    let initial: Vec<usize> = (0..facets.len()).collect();
    for p in 0..points.len() {
        if !simplex.contains(&p) {
            assign(&mut facets, &initial, p);
        }
    }

    let mut queue: Vec<usize> = initial;
    while let Some(f) = queue.pop() {
        if !facets[f].alive || facets[f].outside.is_empty() {
            continue;
        }
        let apex = *facets[f]
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                let da = dot(&facets[f].normal, &points[a]);
                let db = dot(&facets[f].normal, &points[b]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("non-empty");
        let above = |facet: &Facet| dot(&facet.normal, &points[apex]) - facet.offset > eps;

        let mut visible = vec![f];
        let mut seen: HashMap<usize, bool> = HashMap::from([(f, true)]);
        let mut horizon: Vec<(Ridge, usize)> = Vec::new();
        let mut i = 0;
        while i < visible.len() {
            let g = visible[i];
            i += 1;
            for k in 0..DIM {
                let r = ridge_without(&facets[g].verts, k);
                let pair = ridges[&r];
                let h = if pair[0] == g { pair[1] } else { pair[0] };
                let vis = match seen.get(&h) {
                    Some(&v) => v,
                    None => {
                        let v = above(&facets[h]);
                        seen.insert(h, v);
                        if v {
                            visible.push(h);
                        }
                        v
                    }
                };
                if !vis {
                    horizon.push((r, h));
                }
            }
        }

        let mut orphans = Vec::new();
        for &g in &visible {
            facets[g].alive = false;
            orphans.extend(facets[g].outside.drain(..).filter(|&p| p != apex));
            for k in 0..DIM {
                let r = ridge_without(&facets[g].verts, k);
                if let Some(e) = ridges.get_mut(&r) {
                    if e[0] == g {
                        e[0] = e[1];
                    }
                    e[1] = usize::MAX;
                    if e[0] == usize::MAX {
                        ridges.remove(&r);
                    }
                }
            }
        }
        let mut created = Vec::with_capacity(horizon.len());
        for (r, _) in horizon {
            let mut verts = [0; DIM];
            verts[..DIM - 1].copy_from_slice(&r);
            verts[DIM - 1] = apex;
            verts.sort_unstable();
            // a degenerate cone facet means the apex is numerically on the
            // horizon ridge; treat the hull as unresolved
            let (normal, offset) = hyperplane(points, &verts, &interior, tiny)?;
            let id = facets.len();
            link(&mut ridges, id, &verts);
            facets.push(Facet {
                verts,
                normal,
                offset,
                outside: Vec::new(),
                alive: true,
            });
            created.push(id);
        }
        for p in orphans {
            assign(&mut facets, &created, p);
        }
        queue.extend(created);
    }
    Some(
        facets
            .into_iter()
            .filter(|f| f.alive)
            .map(|f| (f.normal, f.offset))
            .collect(),
    )
}

/// Distance from the origin to the hull boundary when the origin lies
/// strictly inside, else 0.
pub fn origin_margin(points: &[Wrench]) -> f64 {
    let Some(facets) = hull_facets(points) else {
        return 0.0;
    };
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let m = facets.iter().map(|(_, b)| *b).fold(f64::INFINITY, f64::min);
    if m > 1e-10 * scale {
        m
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Supporting hyperplanes found by enumerating every 6-subset.
    fn brute_margin(points: &[Wrench]) -> f64 {
        let n = points.len();
        let mut best = f64::INFINITY;
        let mut idx = [0usize; DIM];
        fn next(idx: &mut [usize; DIM], n: usize) -> bool {
            let mut k = DIM;
            while k > 0 {
                k -= 1;
                if idx[k] < n - DIM + k {
                    idx[k] += 1;
                    for j in k + 1..DIM {
                        idx[j] = idx[j - 1] + 1;
                    }
                    return true;
                }
            }
            false
        }
        for (k, slot) in idx.iter_mut().enumerate() {
            *slot = k;
        }
        let centroid: Wrench =
            std::array::from_fn(|i| points.iter().map(|p| p[i]).sum::<f64>() / n as f64);
        loop {
            if let Some((nrm, b)) = hyperplane(points, &idx, &centroid, 1e-12) {
                if points.iter().all(|p| dot(&nrm, p) - b <= 1e-9) {
                    best = best.min(b);
                }
            }
            if !next(&mut idx, n) {
                break;
            }
        }
        best.max(0.0)
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Vec<Wrench> {
        (0..n)
            .map(|_| {
                std::array::from_fn(|i| {
                    rng.random_range(-1.0..1.0) + if i == 0 { shift } else { 0.0 }
                })
            })
            .collect()
    }

    #[test]
    fn matches_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..12 {
            let shift = if trial % 3 == 2 { 0.9 } else { 0.0 };
            let pts = random_points(&mut rng, 13, shift);
            let fast = origin_margin(&pts);
            let slow = brute_margin(&pts);
            assert!(
                (fast - slow).abs() < 1e-9,
                "trial {trial}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn cross_polytope_margin() {
        // ±e_i: facets at distance 1/√6
        let mut pts = Vec::new();
        for i in 0..DIM {
            for s in [1.0, -1.0] {
                let mut p = [0.0; DIM];
                p[i] = s;
                pts.push(p);
            }
        }
        assert!((origin_margin(&pts) - 1.0 / 6f64.sqrt()).abs() < 1e-12);
        assert_eq!(hull_facets(&pts).unwrap().len(), 64);
    }

    #[test]
    fn interior_and_coplanar_points_do_not_change_the_hull() {
        let mut pts = Vec::new();
        for i in 0..DIM {
            for s in [1.0, -1.0] {
                let mut p = [0.0; DIM];
                p[i] = s;
                pts.push(p);
            }
        }
        let base = origin_margin(&pts);
        pts.push([0.1; DIM]);
        // on the facet spanned by +e_0..+e_5
        pts.push([1.0 / 6.0; DIM]);
        pts.push([0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        assert!((origin_margin(&pts) - base).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_give_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let flat: Vec<Wrench> = random_points(&mut rng, 30, 0.0)
            .into_iter()
            .map(|mut p| {
                p[5] = 0.0;
                p
            })
            .collect();
        assert_eq!(origin_margin(&flat), 0.0);
        assert_eq!(origin_margin(&flat[..3]), 0.0);
        let shifted = random_points(&mut rng, 30, 5.0);
        assert_eq!(origin_margin(&shifted), 0.0);
    }
}

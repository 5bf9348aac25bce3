use rand::Rng;

use super::mesh::TriMesh;
use super::{PointCloud, Vec3};

/// Area-weighted uniform samples of the surface with face normals.
pub fn sample_surface<R: Rng>(mesh: &TriMesh, n: usize, rng: &mut R) -> PointCloud {
    let nf = mesh.faces().len();
    if nf == 0 || n == 0 {
        return PointCloud::default();
    }
    let mut cumulative = Vec::with_capacity(nf);
    let mut total = 0.0;
    for f in 0..nf {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        let f = cumulative.partition_point(|&c| c < target).min(nf - 1);
        let [a, b, c] = mesh.triangle(f);
        let r1: f64 = rng.random::<f64>().sqrt();
        let r2: f64 = rng.random();
        let p: Vec3 = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
        points.push(p);
        normals.push(mesh.face_normal(f));
    }
    PointCloud::new(points, Some(normals)).expect("samples of a valid mesh are finite")
}

/// Greedy farthest-point selection of `k` out of `n` items under `dist`,
/// starting from item 0. Ties go to the lower index.
pub fn farthest_point_indices(
    n: usize,
    k: usize,
    dist: impl Fn(usize, usize) -> f64,
) -> Vec<usize> {
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let k = k.min(n);
    let mut chosen = vec![0];
    let mut gap: Vec<f64> = (0..n).map(|i| dist(0, i)).collect();
    while chosen.len() < k {
        let mut best = 0;
        for i in 1..n {
            if gap[i] > gap[best] {
                best = i;
            }
        }
        chosen.push(best);
        for (i, g) in gap.iter_mut().enumerate() {
            *g = g.min(dist(best, i));
        }
    }
    chosen
}

/// [`farthest_point_indices`] over points in space.
pub fn farthest_point_sample(points: &[Vec3], k: usize) -> Vec<usize> {
    farthest_point_indices(points.len(), k, |a, b| (points[a] - points[b]).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_lie_on_sphere_with_radial_normals() {
        let mesh = primitives::icosphere(0.5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cloud = sample_surface(&mesh, 2048, &mut rng);
        assert_eq!(cloud.len(), 2048);
        let ns = cloud.normals().unwrap();
        for (p, n) in cloud.points().iter().zip(ns) {
            assert!(p.norm() <= 0.5 + 1e-12 && p.norm() > 0.48);
            assert!(n.dot(&p.normalize()) > 0.95);
        }
    }

    #[test]
    fn box_faces_get_area_proportional_counts() {
        let mesh = primitives::box_mesh(Vec3::new(0.5, 0.25, 0.25));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cloud = sample_surface(&mesh, 20_000, &mut rng);
        // x faces: 2 * 0.5*0.5 = 0.5 of total area 2.5
        let on_x = cloud
            .points()
            .iter()
            .filter(|p| (p.x.abs() - 0.5).abs() < 1e-12)
            .count();
        let frac = on_x as f64 / 20_000.0;
        assert!((frac - 0.2).abs() < 0.02, "{frac}");
    }
}

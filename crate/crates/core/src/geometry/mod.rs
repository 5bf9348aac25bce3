//! Geometric kernels shared by every other module: point clouds, triangle
//! meshes, exact nearest-neighbour search, a triangle BVH (closest point,
//! ray casting, fast winding numbers), Chamfer distance and reflections.

mod bvh;
pub mod io;
mod kdtree;
mod mesh;
pub mod primitives;
mod sampling;

pub use bvh::{MeshIndex, RayHit, SurfacePoint, WindingQuery};
pub use kdtree::KdTree;
pub use mesh::{CleanupReport, TriMesh};
pub use sampling::{farthest_point_indices, farthest_point_sample, sample_surface};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Generalized winding number above which a point counts as inside.
pub const INSIDE_THRESHOLD: f64 = 0.5;

/// Coordinate axis; also names the plane through the origin orthogonal to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Reflection matrix across the plane orthogonal to this axis.
    pub fn reflection(self) -> Mat3 {
        let mut m = Mat3::identity();
        m[(self.index(), self.index())] = -1.0;
        m
    }

    pub fn reflect(self, v: &Vec3) -> Vec3 {
        let mut out = *v;
        out[self.index()] = -out[self.index()];
        out
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::invalid(format!("unknown axis '{other}'"))),
        }
    }
}

/// A set of 3-D points (meters) with optional unit normals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Vec3>,
    normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    /// Validates finiteness and, when normals are given, their length and unit norm.
    pub fn new(points: Vec<Vec3>, normals: Option<Vec<Vec3>>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(format!("point {i}")));
        }
        if let Some(ns) = &normals {
            if ns.len() != points.len() {
                return Err(Error::ShapeMismatch {
                    expected: points.len(),
                    got: ns.len(),
                });
            }
            for (i, n) in ns.iter().enumerate() {
                if !((n.norm() - 1.0).abs() <= 1e-6) {
                    return Err(Error::invalid(format!(
                        "normal {i} has norm {} (expected 1)",
                        n.norm()
                    )));
                }
            }
        }
        Ok(Self { points, normals })
    }

    pub fn from_points(points: Vec<Vec3>) -> Result<Self> {
        Self::new(points, None)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        centroid(&self.points)
    }

    pub fn translated(&self, offset: &Vec3) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| p + offset).collect(),
            normals: self.normals.clone(),
        }
    }

    /// Applies a rotation to points and normals.
    pub fn rotated(&self, rot: &Mat3) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| rot * p).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| rot * n).collect()),
        }
    }

    /// Maximum distance between any two points.
    pub fn diameter(&self) -> f64 {
        let pts = &self.points;
        let mut best = 0.0f64;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                best = best.max((pts[i] - pts[j]).norm_squared());
            }
        }
        best.sqrt()
    }
}

pub fn centroid(points: &[Vec3]) -> Vec3 {
    if points.is_empty() {
        return Vec3::zeros();
    }
    points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / points.len() as f64
}

/// Reflects a cloud across the coordinate plane orthogonal to `axis`.
/// Normals are reflected the same way, so the operation is an involutive isometry.
pub fn reflect_points(cloud: &PointCloud, axis: Axis) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| axis.reflect(p)).collect(),
        normals: cloud
            .normals
            .as_ref()
            .map(|ns| ns.iter().map(|n| axis.reflect(n)).collect()),
    }
}

/// Symmetric Chamfer distance with squared distances and mean reduction (m²).
pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("chamfer distance of an empty cloud"));
    }
    let ta = KdTree::new(a.points());
    let tb = KdTree::new(b.points());
    Ok(mean_sq_nearest(a.points(), &tb) + mean_sq_nearest(b.points(), &ta))
}

fn mean_sq_nearest(src: &[Vec3], target: &KdTree) -> f64 {
    let sum: f64 = src
        .iter()
        .map(|p| target.nearest(p).map(|(_, d2)| d2).unwrap_or(0.0))
        .sum();
    sum / src.len() as f64
}

/// Anything that can report its closest surface point to a query.
pub trait Surface {
    fn closest(&self, p: &Vec3) -> Option<SurfacePoint>;
}

impl Surface for MeshIndex {
    fn closest(&self, p: &Vec3) -> Option<SurfacePoint> {
        MeshIndex::closest_point(self, p)
    }
}

impl Surface for KdTree {
    fn closest(&self, p: &Vec3) -> Option<SurfacePoint> {
        self.nearest(p).map(|(i, d2)| SurfacePoint {
            point: self.point(i),
            distance: d2.sqrt(),
            face: i,
        })
    }
}

/// Unsigned distance from `p` to a mesh surface (exact point-triangle distance)
/// or to the nearest vertex of a cloud.
pub fn distance_to_surface(p: &Vec3, target: &dyn Surface) -> Result<f64> {
    target
        .closest(p)
        .map(|s| s.distance)
        .ok_or_else(|| Error::invalid("distance to an empty target"))
}

/// Inside test by generalized winding number (> 0.5).
pub fn point_in_mesh(p: &Vec3, mesh: &MeshIndex) -> bool {
    mesh.classify(p).inside
}

/// Nearest ray-mesh intersection with `t > 1e-9`.
pub fn ray_mesh_intersect(origin: &Vec3, dir: &Vec3, mesh: &MeshIndex) -> Result<Option<RayHit>> {
    if (dir.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "ray direction must be unit length (norm {})",
            dir.norm()
        )));
    }
    Ok(mesh.ray_cast(origin, dir))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sphere_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| loop {
                let v = Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 {
                    break v / n;
                }
            })
            .collect();
        PointCloud::from_points(pts).unwrap()
    }

    fn brute_chamfer(a: &[Vec3], b: &[Vec3]) -> f64 {
        let one = |src: &[Vec3], dst: &[Vec3]| {
            src.iter()
                .map(|p| {
                    dst.iter()
                        .map(|q| (p - q).norm_squared())
                        .fold(f64::INFINITY, f64::min)
                })
                .sum::<f64>()
                / src.len() as f64
        };
        one(a, b) + one(b, a)
    }

    #[test]
    fn chamfer_single_point_pair() {
        let a = PointCloud::from_points(vec![Vec3::zeros()]).unwrap();
        let b = PointCloud::from_points(vec![Vec3::new(1.0, 0.0, 0.0)]).unwrap();
        assert_eq!(chamfer_distance(&a, &b).unwrap(), 2.0);
        assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn chamfer_empty_is_error() {
        let a = PointCloud::default();
        let b = PointCloud::from_points(vec![Vec3::zeros()]).unwrap();
        assert!(matches!(
            chamfer_distance(&a, &b),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn chamfer_sphere_reflection_matches_brute_force() {
        let a = random_sphere_cloud(1000, 7);
        let b = reflect_points(&a, Axis::X);
        let fast = chamfer_distance(&a, &b).unwrap();
        let slow = brute_chamfer(a.points(), b.points());
        assert!(
            (fast - slow).abs() <= 1e-15 * slow.max(1.0),
            "{fast} vs {slow}"
        );
        assert!(
            fast < 1e-2,
            "uniform sphere samples are nearly symmetric: {fast}"
        );
    }

    #[test]
    fn reflect_single_point() {
        let c = PointCloud::from_points(vec![Vec3::new(1.0, 2.0, 3.0)]).unwrap();
        assert_eq!(
            reflect_points(&c, Axis::X).points()[0],
            Vec3::new(-1.0, 2.0, 3.0)
        );
    }

    #[test]
    fn unit_normals_are_validated() {
        let r = PointCloud::new(vec![Vec3::zeros()], Some(vec![Vec3::new(0.0, 0.0, 2.0)]));
        assert!(r.is_err());
        let r = PointCloud::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)], None);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn cloud_distance_matches_linear_scan() {
        let cloud = random_sphere_cloud(500, 3);
        let tree = KdTree::new(cloud.points());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = Vec3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let d = distance_to_surface(&p, &tree).unwrap();
            let brute = cloud
                .points()
                .iter()
                .map(|q| (p - q).norm())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d, brute);
        }
    }

    fn arb_cloud() -> impl Strategy<Value = Vec<Vec3>> {
        prop::collection::vec(
            (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y, z)| Vec3::new(x, y, z)),
            1..40,
        )
    }

    proptest! {
        #[test]
        fn chamfer_is_symmetric(a in arb_cloud(), b in arb_cloud()) {
            let a = PointCloud::from_points(a).unwrap();
            let b = PointCloud::from_points(b).unwrap();
            prop_assert_eq!(chamfer_distance(&a, &b).unwrap(), chamfer_distance(&b, &a).unwrap());
        }

        #[test]
        fn reflection_is_involutive_isometry(pts in arb_cloud(), axis in 0usize..3) {
            let axis = Axis::ALL[axis];
            let c = PointCloud::from_points(pts).unwrap();
            let r = reflect_points(&c, axis);
            prop_assert_eq!(&reflect_points(&r, axis), &c);
            for i in 0..c.len() {
                for j in 0..c.len() {
                    let d0 = (c.points()[i] - c.points()[j]).norm();
                    let d1 = (r.points()[i] - r.points()[j]).norm();
                    prop_assert!((d0 - d1).abs() <= 1e-15);
                }
            }
        }
    }
}

//! The grasped body: mesh with acceleration structures plus its sampled cloud.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    sample_surface, CleanupReport, KdTree, MeshIndex, PointCloud, RayHit, SurfacePoint, TriMesh,
    Vec3, WindingQuery,
};

/// Cloud size used when none is requested.
pub const DEFAULT_CLOUD_POINTS: usize = 2048;

#[derive(Debug, Clone)]
pub struct ObjectModel {
    pub id: String,
    /// Logged scale of the source object, carried through unchanged.
    pub scale: f64,
    index: MeshIndex,
    cloud: PointCloud,
    tree: KdTree,
    center: Vec3,
    diameter: f64,
    max_radius: f64,
    pub cleanup: CleanupReport,
}

impl ObjectModel {
    /// Samples `n` surface points with a seeded generator.
    pub fn from_mesh(id: impl Into<String>, mesh: TriMesh, n: usize, seed: u64) -> Result<Self> {
        if mesh.faces().is_empty() {
            return Err(Error::invalid("object mesh has no faces"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = sample_surface(&mesh, n, &mut rng);
        Self::with_cloud(id, mesh, cloud)
    }

    pub fn with_cloud(id: impl Into<String>, mesh: TriMesh, cloud: PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::invalid("object cloud is empty"));
        }
        let watertight = mesh.is_watertight();
        let center = cloud.centroid();
        let diameter = cloud.diameter();
        let max_radius = cloud
            .points()
            .iter()
            .map(|p| (p - center).norm())
            .fold(0.0, f64::max);
        let tree = KdTree::new(cloud.points());
        Ok(ObjectModel {
            id: id.into(),
            scale: 1.0,
            index: MeshIndex::new(mesh),
            cloud,
            tree,
            center,
            diameter,
            max_radius,
            cleanup: CleanupReport {
                watertight,
                ..Default::default()
            },
        })
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn mesh(&self) -> &TriMesh {
        self.index.mesh()
    }

    pub fn index(&self) -> &MeshIndex {
        &self.index
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn tree(&self) -> &KdTree {
        &self.tree
    }

    /// Centroid of the sampled cloud.
    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Largest distance from the cloud centroid to a cloud point.
    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    pub fn translated(&self, offset: &Vec3) -> ObjectModel {
        let mesh = self.mesh().translated(offset);
        let cloud = self.cloud.translated(offset);
        ObjectModel {
            id: self.id.clone(),
            scale: self.scale,
            tree: KdTree::new(cloud.points()),
            index: MeshIndex::new(mesh),
            cloud,
            center: self.center + offset,
            diameter: self.diameter,
            max_radius: self.max_radius,
            cleanup: self.cleanup.clone(),
        }
    }

    /// Copy moved so the cloud centroid sits at the origin, with the applied offset.
    pub fn centered(&self) -> (ObjectModel, Vec3) {
        let offset = -self.center;
        let mut moved = self.translated(&offset);
        moved.center = Vec3::zeros();
        (moved, offset)
    }

    pub fn classify(&self, p: &Vec3) -> WindingQuery {
        self.index.classify(p)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.index.classify(p).inside
    }

    pub fn closest(&self, p: &Vec3) -> SurfacePoint {
        self.index
            .closest_point(p)
            .expect("object mesh is non-empty")
    }

    pub fn ray_cast(&self, origin: &Vec3, dir: &Vec3) -> Option<RayHit> {
        self.index.ray_cast(origin, dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;

    #[test]
    fn centered_object_has_zero_centroid() {
        let mesh = primitives::icosphere(0.05, 3).translated(&Vec3::new(0.3, -0.2, 0.1));
        let obj = ObjectModel::from_mesh("ball", mesh, 1024, 0).unwrap();
        let (c, off) = obj.centered();
        assert!(c.cloud().centroid().norm() < 1e-12);
        assert!((off + Vec3::new(0.3, -0.2, 0.1)).norm() < 2e-3);
        assert!((obj.diameter() - 0.1).abs() < 2e-3);
        assert!(c.contains(&Vec3::zeros()));
    }
}

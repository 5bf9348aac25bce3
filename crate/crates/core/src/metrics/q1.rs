//! Ferrari–Canny Q1: the radius of the largest origin-centered ball inside
//! the convex hull of the discretized contact wrenches.

use serde::{Deserialize, Serialize};

use super::hull::{origin_margin, Wrench};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// A point contact with its surface normal, relative to the torque origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub point: Vec3,
    pub normal: Vec3,
}

fn orthogonal_part(v: &Vec3, n: &Vec3) -> Option<Vec3> {
    let t = v - n * n.dot(v);
    (t.norm() > 1e-6 * v.norm() && v.norm() > 1e-12).then(|| t.normalize())
}

/// Tangent reference of each contact's friction-cone polygon. Built only
/// from the contacts themselves (in list order), so the wrench set rotates
/// with them: the lever arm orthogonal to the normal, else another contact's
/// position or normal, else a coordinate axis. The last case only arises
/// when every point and normal lies on one line through the origin, where
/// any shared choice is a rotation about that line.
pub fn cone_tangents(contacts: &[Contact]) -> Vec<Vec3> {
    contacts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let n = c.normal;
            orthogonal_part(&c.point, &n)
                .or_else(|| {
                    contacts
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .find_map(|(_, o)| {
                            orthogonal_part(&o.point, &n).or_else(|| orthogonal_part(&o.normal, &n))
                        })
                })
                .unwrap_or_else(|| {
                    let mut e = Vec3::zeros();
                    e[n.iamin()] = 1.0;
                    (e - n * n.dot(&e)).normalize()
                })
        })
        .collect()
}

/// Unit edge forces of each contact's friction cone (pushing along −normal)
/// and their torques, scaled by `torque_scale`.
pub fn contact_wrenches(
    contacts: &[Contact],
    tangents: &[Vec3],
    mu: f64,
    edges: usize,
    torque_scale: f64,
) -> Vec<Wrench> {
    let mut out = Vec::with_capacity(contacts.len() * edges);
    for (c, t1) in contacts.iter().zip(tangents) {
        let n_in = -c.normal;
        let t2 = n_in.cross(t1);
        for k in 0..edges {
            let a = std::f64::consts::TAU * k as f64 / edges as f64;
            let f = (n_in + (t1 * a.cos() + t2 * a.sin()) * mu).normalize();
            let tau = c.point.cross(&f) * torque_scale;
            out.push([f.x, f.y, f.z, tau.x, tau.y, tau.z]);
        }
    }
    out
}

fn check(contacts: &[Contact], mu: f64, edges: usize, torque_scale: f64) -> Result<()> {
    if !(mu >= 0.0) || edges < 3 || !(torque_scale > 0.0) {
        return Err(Error::invalid(
            "q1 needs mu >= 0, >= 3 cone edges and a positive torque scale",
        ));
    }
    for c in contacts {
        if !c.point.iter().all(|x| x.is_finite()) || (c.normal.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(
                "q1 contacts need finite points and unit normals",
            ));
        }
    }
    Ok(())
}

/// Q1 of a contact set; 0 when the wrenches cannot surround the origin.
pub fn q1_quality(contacts: &[Contact], mu: f64, edges: usize, torque_scale: f64) -> Result<f64> {
    check(contacts, mu, edges, torque_scale)?;
    let tangents = cone_tangents(contacts);
    Ok(origin_margin(&contact_wrenches(
        contacts,
        &tangents,
        mu,
        edges,
        torque_scale,
    )))
}

/// (Q1 of `a`, Q1 of `b`, Q1 of the union), all with the cone polygons of
/// the union so that the union's wrench set contains both others.
pub fn q1_split(
    a: &[Contact],
    b: &[Contact],
    mu: f64,
    edges: usize,
    torque_scale: f64,
) -> Result<[f64; 3]> {
    let union: Vec<Contact> = a.iter().chain(b).copied().collect();
    check(&union, mu, edges, torque_scale)?;
    let tangents = cone_tangents(&union);
    let w = contact_wrenches(&union, &tangents, mu, edges, torque_scale);
    let split = a.len() * edges;
    Ok([
        origin_margin(&w[..split]),
        origin_margin(&w[split..]),
        origin_margin(&w),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mat3;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn antipodal_points() -> Vec<Contact> {
        vec![
            Contact {
                point: Vec3::x(),
                normal: Vec3::x(),
            },
            Contact {
                point: -Vec3::x(),
                normal: -Vec3::x(),
            },
        ]
    }

    /// Three contacts 0.2 rad around each pole of the unit sphere's x axis.
    fn antipodal() -> Vec<Contact> {
        let mut out = Vec::new();
        for pole in [1.0, -1.0] {
            for k in 0..3 {
                let a = std::f64::consts::TAU * k as f64 / 3.0;
                let p = Vec3::new(
                    pole * 0.2f64.cos(),
                    0.2f64.sin() * a.cos(),
                    0.2f64.sin() * a.sin(),
                );
                out.push(Contact {
                    point: p,
                    normal: p,
                });
            }
        }
        out
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
        let axis = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        Rotation3::from_scaled_axis(axis.normalize() * rng.random_range(0.0..3.1)).into_inner()
    }

    /// Contacts on a unit sphere at random positions.
    fn sphere_contacts(rng: &mut ChaCha8Rng, n: usize) -> Vec<Contact> {
        (0..n)
            .map(|_| {
                let p = Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
                .normalize();
                Contact {
                    point: p,
                    normal: p,
                }
            })
            .collect()
    }

    #[test]
    fn single_contact_is_zero() {
        let c = [Contact {
            point: Vec3::z(),
            normal: Vec3::z(),
        }];
        assert_eq!(q1_quality(&c, 1.0, 8, 1.0).unwrap(), 0.0);
        assert_eq!(q1_quality(&[], 1.0, 8, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn antipodal_pair_is_positive_and_stable_in_discretization() {
        let q8 = q1_quality(&antipodal(), 1.0, 8, 1.0).unwrap();
        let q16 = q1_quality(&antipodal(), 1.0, 16, 1.0).unwrap();
        assert!(q8 > 0.0);
        assert!((q16 - q8).abs() / q8 < 0.1, "{q8} {q16}");
        assert!(q1_quality(&antipodal(), 0.5, 8, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn point_pair_cannot_resist_torsion_about_its_axis() {
        // every wrench has zero torque about x
        assert_eq!(q1_quality(&antipodal_points(), 1.0, 8, 1.0).unwrap(), 0.0);
        assert_eq!(q1_quality(&antipodal(), 0.0, 8, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rotation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let generic: Vec<Contact> = sphere_contacts(&mut rng, 4)
            .into_iter()
            .map(|c| Contact {
                point: c.point * 1.3 + Vec3::new(0.1, -0.2, 0.05),
                normal: c.normal,
            })
            .collect();
        for set in [
            antipodal(),
            antipodal_points(),
            sphere_contacts(&mut rng, 3),
            generic,
        ] {
            let q = q1_quality(&set, 1.0, 8, 1.0).unwrap();
            for _ in 0..5 {
                let r = random_rotation(&mut rng);
                let rot: Vec<Contact> = set
                    .iter()
                    .map(|c| Contact {
                        point: r * c.point,
                        normal: r * c.normal,
                    })
                    .collect();
                let qr = q1_quality(&rot, 1.0, 8, 1.0).unwrap();
                assert!((q - qr).abs() < 1e-9, "{q} {qr}");
            }
        }
    }

    #[test]
    fn margin_is_bounded_by_the_support_function() {
        // Q1 = min over unit u of max_i w_i·u; any sampled u gives an upper bound
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let set = antipodal();
        let w = contact_wrenches(&set, &cone_tangents(&set), 1.0, 8, 1.0);
        let q = origin_margin(&w);
        let mut best = f64::INFINITY;
        for _ in 0..20_000 {
            let u: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let len = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let h = w
                .iter()
                .map(|p| p.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / len)
                .fold(f64::MIN, f64::max);
            best = best.min(h);
        }
        assert!(q > 0.0 && q <= best + 1e-12, "{q} {best}");
    }

    #[test]
    fn union_dominates_each_hand() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let a = sphere_contacts(&mut rng, 3);
            let b = sphere_contacts(&mut rng, 3);
            let [qa, qb, qt] = q1_split(&a, &b, 1.0, 8, 1.0).unwrap();
            assert!(qt >= qa.max(qb) - 1e-9, "{qa} {qb} {qt}");
        }
    }

    #[test]
    fn normals_in_a_half_space_give_zero() {
        // all contacts on the upper cap with narrow cones: every force has a
        // negative z component
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let contacts: Vec<Contact> = (0..6)
            .map(|_| {
                let p = Vec3::new(
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                    1.0,
                )
                .normalize();
                Contact {
                    point: p,
                    normal: p,
                }
            })
            .collect();
        assert_eq!(q1_quality(&contacts, 0.2, 8, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = [Contact {
            point: Vec3::x(),
            normal: Vec3::x() * 2.0,
        }];
        assert!(q1_quality(&bad, 1.0, 8, 1.0).is_err());
        assert!(q1_quality(&antipodal(), -1.0, 8, 1.0).is_err());
        assert!(q1_quality(&antipodal(), 1.0, 2, 1.0).is_err());
    }
}

//! Signed distances to the capsule and ellipsoid primitives of the hand.

use crate::geometry::Vec3;

/// Signed distance from `x` to a capsule with axis `a`–`b`, with the closest
/// surface point and the outward normal there.
pub fn capsule_sdf(x: &Vec3, a: &Vec3, b: &Vec3, radius: f64) -> (f64, Vec3, Vec3) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((x - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = a + ab * t;
    let d = x - c;
    let dn = d.norm();
    let n = if dn > 1e-15 {
        d / dn
    } else {
        // on the axis: any direction orthogonal to it
        let axis = if len2 > 0.0 {
            ab / len2.sqrt()
        } else {
            Vec3::z()
        };
        let trial = if axis.x.abs() < 0.9 {
            Vec3::x()
        } else {
            Vec3::y()
        };
        axis.cross(&trial).normalize()
    };
    (dn - radius, c + n * radius, n)
}

fn robust_length(v: &[f64]) -> f64 {
    let m = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

/// Bisection for the root of sum_i (r_i z_i / (s + r_i))² = 1 with the
/// last ratio r = 1.
fn get_root(r: &[f64], z: &[f64], g: f64) -> f64 {
    let k = z.len();
    let n: Vec<f64> = (0..k).map(|i| r[i] * z[i]).collect();
    let mut s0 = z[k - 1] - 1.0;
    let mut s1 = if g < 0.0 {
        0.0
    } else {
        robust_length(&n) - 1.0
    };
    let mut s = 0.0;
    for _ in 0..2048 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let gs: f64 = (0..k).map(|i| (n[i] / (s + r[i])).powi(2)).sum::<f64>() - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Closest point for `e0 >= e1 > 0`, `y >= 0` (2-D ellipse).
fn closest_2d(e: [f64; 2], y: [f64; 2]) -> [f64; 2] {
    if y[1] > 0.0 {
        if y[0] > 0.0 {
            let z = [y[0] / e[0], y[1] / e[1]];
            let g = z[0] * z[0] + z[1] * z[1] - 1.0;
            if g != 0.0 {
                let r0 = (e[0] / e[1]).powi(2);
                let s = get_root(&[r0, 1.0], &z, g);
                [r0 * y[0] / (s + r0), y[1] / (s + 1.0)]
            } else {
                y
            }
        } else {
            [0.0, e[1]]
        }
    } else {
        let numer0 = e[0] * y[0];
        let denom0 = e[0] * e[0] - e[1] * e[1];
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            [e[0] * xde0, e[1] * (1.0 - xde0 * xde0).max(0.0).sqrt()]
        } else {
            [e[0], 0.0]
        }
    }
}

/// Closest point for `e0 >= e1 >= e2 > 0`, `y >= 0`.
fn closest_sorted(e: [f64; 3], y: [f64; 3]) -> [f64; 3] {
    if y[2] > 0.0 {
        if y[1] > 0.0 {
            if y[0] > 0.0 {
                let z = [y[0] / e[0], y[1] / e[1], y[2] / e[2]];
                let g = z.iter().map(|v| v * v).sum::<f64>() - 1.0;
                if g != 0.0 {
                    let r0 = (e[0] / e[2]).powi(2);
                    let r1 = (e[1] / e[2]).powi(2);
                    let s = get_root(&[r0, r1, 1.0], &z, g);
                    [r0 * y[0] / (s + r0), r1 * y[1] / (s + r1), y[2] / (s + 1.0)]
                } else {
                    y
                }
            } else {
                let x = closest_2d([e[1], e[2]], [y[1], y[2]]);
                [0.0, x[0], x[1]]
            }
        } else if y[0] > 0.0 {
            let x = closest_2d([e[0], e[2]], [y[0], y[2]]);
            [x[0], 0.0, x[1]]
        } else {
            [0.0, 0.0, e[2]]
        }
    } else {
        let denom = [e[0] * e[0] - e[2] * e[2], e[1] * e[1] - e[2] * e[2]];
        let numer = [e[0] * y[0], e[1] * y[1]];
        if numer[0] < denom[0] && numer[1] < denom[1] {
            let xde = [numer[0] / denom[0], numer[1] / denom[1]];
            let discr = 1.0 - xde[0] * xde[0] - xde[1] * xde[1];
            if discr > 0.0 {
                return [e[0] * xde[0], e[1] * xde[1], e[2] * discr.sqrt()];
            }
        }
        let x = closest_2d([e[0], e[1]], [y[0], y[1]]);
        [x[0], x[1], 0.0]
    }
}

/// Closest surface point of the axis-aligned ellipsoid with semi-axes `semi`
/// centered at the origin (robust bisection; valid inside and outside).
pub fn ellipsoid_closest_point(semi: &Vec3, y: &Vec3) -> Vec3 {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| semi[j].total_cmp(&semi[i]));
    let e = [semi[order[0]], semi[order[1]], semi[order[2]]];
    let ya = [y[order[0]].abs(), y[order[1]].abs(), y[order[2]].abs()];
    let x = closest_sorted(e, ya);
    let mut out = Vec3::zeros();
    for k in 0..3 {
        out[order[k]] = x[k].copysign(y[order[k]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn capsule_distance_cases() {
        let a = Vec3::zeros();
        let b = Vec3::new(0.0, 1.0, 0.0);
        let (d, q, n) = capsule_sdf(&Vec3::new(0.5, 0.5, 0.0), &a, &b, 0.1);
        assert!((d - 0.4).abs() < 1e-15);
        assert!((q - Vec3::new(0.1, 0.5, 0.0)).norm() < 1e-15);
        assert_eq!(n, Vec3::x());
        let (d, _, _) = capsule_sdf(&Vec3::new(0.0, 1.05, 0.0), &a, &b, 0.1);
        assert!((d + 0.05).abs() < 1e-15);
    }

    #[test]
    fn sphere_case_is_radial() {
        let semi = Vec3::repeat(2.0);
        let y = Vec3::new(0.3, -0.4, 1.2);
        let q = ellipsoid_closest_point(&semi, &y);
        assert!((q - y.normalize() * 2.0).norm() < 1e-12);
    }

    #[test]
    fn ellipsoid_matches_dense_search() {
        let semi = Vec3::new(0.042, 0.048, 0.015);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // dense parametric sampling of the surface
        let mut surf = Vec::new();
        for i in 0..400 {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / 400.0;
            for j in 0..800 {
                let ph = 2.0 * std::f64::consts::PI * j as f64 / 800.0;
                surf.push(Vec3::new(
                    semi.x * th.sin() * ph.cos(),
                    semi.y * th.sin() * ph.sin(),
                    semi.z * th.cos(),
                ));
            }
        }
        for _ in 0..30 {
            let y = Vec3::new(
                rng.random_range(-0.06..0.06),
                rng.random_range(-0.06..0.06),
                rng.random_range(-0.03..0.03),
            );
            let q = ellipsoid_closest_point(&semi, &y);
            let on = (q.x / semi.x).powi(2) + (q.y / semi.y).powi(2) + (q.z / semi.z).powi(2);
            assert!((on - 1.0).abs() < 1e-9);
            let best = surf
                .iter()
                .map(|s| (s - y).norm())
                .fold(f64::INFINITY, f64::min);
            let d = (q - y).norm();
            assert!(d <= best + 1e-12, "{d} > {best}");
            assert!(best - d < 5e-4);
        }
    }
}

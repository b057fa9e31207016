//! Small helpers for points and tangent vectors on the unit sphere.

use crate::Vec3;

pub const UNIT_TOL: f64 = 1e-9;

#[inline]
pub fn is_unit(p: &Vec3) -> bool {
    (p.norm() - 1.0).abs() <= UNIT_TOL
}

/// Projection of `v` onto the tangent plane at `p`.
#[inline]
pub fn tangent_part(p: &Vec3, v: &Vec3) -> Vec3 {
    v - p * p.dot(v)
}

/// Inverse of the round exponential map at `p`.
#[inline]
pub fn log_map(p: &Vec3, q: &Vec3) -> Vec3 {
    let t = tangent_part(p, q);
    let sin = t.norm();
    if sin == 0.0 {
        return Vec3::zeros();
    }
    let angle = sin.atan2(p.dot(q));
    t * (angle / sin)
}

/// Round angle between two unit vectors.
#[inline]
pub fn angle(p: &Vec3, q: &Vec3) -> f64 {
    p.cross(q).norm().atan2(p.dot(q))
}

/// Point at fraction `f` of the great-circle arc from `p` to `q`.
pub fn slerp(p: &Vec3, q: &Vec3, f: f64) -> Vec3 {
    let theta = angle(p, q);
    if theta < 1e-12 {
        return (p + (q - p) * f).normalize();
    }
    let s = theta.sin();
    let a = ((1.0 - f) * theta).sin() / s;
    let b = (f * theta).sin() / s;
    (p * a + q * b).normalize()
}

/// An orthonormal pair spanning the plane orthogonal to the unit vector `x`.
///
/// The reference axis is the coordinate axis least aligned with `x`, so the
/// result depends only on `x`.
pub fn orthonormal_pair(x: &Vec3) -> (Vec3, Vec3) {
    let (ax, ay, az) = (x.x.abs(), x.y.abs(), x.z.abs());
    let reference = if ax <= ay && ax <= az {
        Vec3::x()
    } else if ay <= az {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let e1 = (reference - x * x.dot(&reference)).normalize();
    let e2 = x.cross(&e1);
    (e1, e2)
}

/// Rotation of `v` by `angle` about the z-axis.
#[inline]
pub fn rotate_z(v: &Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

/// Rodrigues rotation of `v` about the unit `axis`.
pub fn rotate_about(v: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

/// Euclidean distance from `x` to the segment `[a, b]`.
pub fn point_segment_distance(x: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((x - a).dot(&d) / len2).clamp(0.0, 1.0)
    };
    (x - (a + d * t)).norm()
}

/// Quasi-uniform directions on the upper hemisphere, starting at the pole.
///
/// Heights are spaced uniformly in `z ∈ (0, 1]` and azimuths advance by the
/// golden angle.
pub fn fibonacci_hemisphere(count: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - i as f64 / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Uniformly distributed unit vector, by rejection from the cube.
pub fn random_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_map_has_angle_length() {
        let p = Vec3::z();
        let q = Vec3::new(1.0, 0.0, 1.0).normalize();
        let u = log_map(&p, &q);
        assert!((u.norm() - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        assert!(u.dot(&p).abs() < 1e-15);
    }

    #[test]
    fn slerp_endpoints_and_midpoint() {
        let p = Vec3::x();
        let q = Vec3::y();
        assert!((slerp(&p, &q, 0.0) - p).norm() < 1e-15);
        assert!((slerp(&p, &q, 1.0) - q).norm() < 1e-15);
        let m = slerp(&p, &q, 0.5);
        assert!((angle(&p, &m) - angle(&m, &q)).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_pair_is_orthonormal() {
        for x in fibonacci_hemisphere(20) {
            let (a, b) = orthonormal_pair(&x);
            assert!(a.dot(&x).abs() < 1e-14 && b.dot(&x).abs() < 1e-14);
            assert!(a.dot(&b).abs() < 1e-14);
            assert!((a.norm() - 1.0).abs() < 1e-14 && (b.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn hemisphere_directions_are_canonical() {
        let dirs = fibonacci_hemisphere(64);
        assert_eq!(dirs[0], Vec3::z());
        assert!(dirs.iter().all(|d| d.z > 0.0 && is_unit(d)));
    }
}

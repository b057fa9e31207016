//! Metric families on the unit sphere.
//!
//! Every metric is a symmetric tensor on the tangent planes of the unit
//! sphere `S² ⊂ ℝ³`. All supported families are invariant under rotations
//! about the z-axis and, on tangent vectors, take the form
//!
//! ```text
//! g_p(u, v) = α ⟨u, v⟩ + β(p_z) u_z v_z
//! ```
//!
//! which is what the closed-form covariant acceleration uses. The public
//! [`metric_eval`] evaluates each family from its own defining formula.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{self, orthonormal_pair};
use crate::Vec3;

/// Central-difference step for finite-difference Christoffel data.
pub const FD_STEP: f64 = 1e-5;

/// Beyond this height the Zoll correction is replaced by its polar limit 0.
pub const POLE_CLAMP: f64 = 1.0 - 1e-8;

const PROFILE_SAMPLES: usize = 10_001;

/// Odd polynomial `h(z) = Σ a_k z^(2k+1)` with `h(1) = 0` and `sup |h| < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OddProfile {
    coeffs: Vec<f64>,
    // h(z) = (1 - z²) q(z); odd coefficients of q.
    reduced: Vec<f64>,
}

impl OddProfile {
    /// `coeffs[k]` multiplies `z^(2k+1)`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidProfile("no coefficients".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidProfile("non-finite coefficient".into()));
        }
        let scale: f64 = coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
        let at_one: f64 = coeffs.iter().sum();
        if at_one.abs() > 1e-12 * scale {
            return Err(Error::InvalidProfile(format!("h(1) = {at_one:e}, expected 0")));
        }
        let mut partial = 0.0;
        let reduced: Vec<f64> = coeffs[..coeffs.len() - 1]
            .iter()
            .map(|a| {
                partial += a;
                partial
            })
            .collect();
        let profile = Self { coeffs, reduced };
        let sup = (0..PROFILE_SAMPLES)
            .map(|i| {
                let z = -1.0 + 2.0 * i as f64 / (PROFILE_SAMPLES - 1) as f64;
                profile.h(z).abs()
            })
            .fold(0.0, f64::max);
        if sup >= 1.0 {
            return Err(Error::InvalidProfile(format!("sup |h| = {sup} is not below 1")));
        }
        Ok(profile)
    }

    /// The profile `a·z(1 − z²)`.
    pub fn cubic(a: f64) -> Result<Self> {
        Self::new(vec![a, -a])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn h(&self, z: f64) -> f64 {
        z * horner(&self.coeffs, z * z)
    }

    fn q(&self, z: f64) -> f64 {
        z * horner(&self.reduced, z * z)
    }

    fn q_prime(&self, z: f64) -> f64 {
        let z2 = z * z;
        let dq: f64 = self
            .reduced
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, b)| acc * z2 + (2 * k + 1) as f64 * b);
        dq
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// A metric on `S²`.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Round { radius: f64 },
    /// Pullback of the Euclidean metric under `(x, y, z) ↦ (x, y, r z)`.
    EllipsoidOfRevolution { r: f64 },
    /// `(1 + h(cos θ))² dθ² + sin²θ dφ²` in polar coordinates.
    ZollRevolution { profile: OddProfile },
}

impl MetricSpec {
    pub fn round(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Parameter(format!("round radius {radius} must be positive")));
        }
        Ok(Self::Round { radius })
    }

    pub fn ellipsoid(r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Parameter(format!("ellipsoid parameter {r} not in (0, 1]")));
        }
        Ok(Self::EllipsoidOfRevolution { r })
    }

    pub fn zoll(profile: OddProfile) -> Self {
        Self::ZollRevolution { profile }
    }

    /// Zoll metric with profile `a·z(1 − z²)`.
    pub fn zoll_cubic(a: f64) -> Result<Self> {
        Ok(Self::zoll(OddProfile::cubic(a)?))
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Round { .. } => "round",
            Self::EllipsoidOfRevolution { .. } => "ellipsoid",
            Self::ZollRevolution { .. } => "zoll",
        }
    }

    /// Human-readable label used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::Round { radius } => format!("round(radius={radius})"),
            Self::EllipsoidOfRevolution { r } => format!("ellipsoid(r={r})"),
            Self::ZollRevolution { profile } => format!("zoll(h_coeffs={:?})", profile.coeffs()),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: MetricJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> MetricJson {
        MetricJson::from(self)
    }

    /// Isotropic coefficient `α`.
    #[inline]
    pub(crate) fn alpha(&self) -> f64 {
        match self {
            Self::Round { radius } => radius * radius,
            _ => 1.0,
        }
    }

    /// Height-dependent coefficient `β(z)` of `u_z v_z`.
    #[inline]
    pub(crate) fn beta(&self, z: f64) -> f64 {
        match self {
            Self::Round { .. } => 0.0,
            Self::EllipsoidOfRevolution { r } => r * r - 1.0,
            Self::ZollRevolution { profile } => {
                let q = profile.q(z);
                2.0 * q + (1.0 - z * z) * q * q
            }
        }
    }

    #[inline]
    pub(crate) fn beta_prime(&self, z: f64) -> f64 {
        match self {
            Self::ZollRevolution { profile } => {
                let q = profile.q(z);
                let dq = profile.q_prime(z);
                2.0 * dq - 2.0 * z * q * q + 2.0 * (1.0 - z * z) * q * dq
            }
            _ => 0.0,
        }
    }

    /// Metric on tangent vectors at `p`, without precondition checks.
    #[inline]
    pub fn inner(&self, p: &Vec3, u: &Vec3, v: &Vec3) -> f64 {
        match self {
            Self::Round { radius } => radius * radius * u.dot(v),
            Self::EllipsoidOfRevolution { r } => u.x * v.x + u.y * v.y + r * r * u.z * v.z,
            Self::ZollRevolution { profile } => {
                let z = p.z;
                let base = u.dot(v);
                if z.abs() > POLE_CLAMP {
                    return base;
                }
                let sin = (1.0 - z * z).sqrt();
                let e_theta = (p * z - Vec3::z()) / sin;
                let grow = (1.0 + profile.h(z)).powi(2) - 1.0;
                base + grow * u.dot(&e_theta) * v.dot(&e_theta)
            }
        }
    }

    #[inline]
    pub fn norm(&self, p: &Vec3, u: &Vec3) -> f64 {
        self.inner(p, u, u).sqrt()
    }

    /// Tangential acceleration of the geodesic through `(p, v)`, closed form.
    ///
    /// Solves the constrained Euler–Lagrange equations of
    /// `½(α|ẋ|² + β(z) ż²)` on the unit sphere.
    #[inline]
    pub fn acceleration(&self, p: &Vec3, v: &Vec3) -> Vec3 {
        let beta = self.beta(p.z);
        let beta_prime = self.beta_prime(p.z);
        if beta == 0.0 && beta_prime == 0.0 {
            return Vec3::zeros();
        }
        let alpha = self.alpha();
        let z = p.z;
        let zdot = v.z;
        let speed2 = v.norm_squared();
        let one_minus = 1.0 - z * z;
        let zddot = (-0.5 * one_minus * beta_prime * zdot * zdot - alpha * speed2 * z)
            / (alpha + one_minus * beta);
        let w = beta * zddot + 0.5 * beta_prime * zdot * zdot;
        // tangential part of e_z at p
        let ez_t = Vec3::new(-z * p.x, -z * p.y, 1.0 - z * z);
        ez_t * (-w / alpha)
    }

    /// Meridional metric coefficient `E(θ)` at polar angle `θ`.
    fn meridional_speed(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let p = Vec3::new(s, 0.0, c);
        let e_theta = Vec3::new(c, 0.0, -s);
        self.norm(&p, &e_theta)
    }
}

fn check_point(p: &Vec3) -> Result<()> {
    if !sphere::is_unit(p) {
        return Err(Error::Precondition(format!("|p| = {} is not 1", p.norm())));
    }
    Ok(())
}

fn check_tangent(p: &Vec3, u: &Vec3) -> Result<()> {
    if p.dot(u).abs() > sphere::UNIT_TOL * u.norm().max(1.0) {
        return Err(Error::Precondition(format!(
            "vector is not tangent at p (⟨p,u⟩ = {:e})",
            p.dot(u)
        )));
    }
    Ok(())
}

/// `g_p(u, v)` with precondition checks.
pub fn metric_eval(spec: &MetricSpec, p: &Vec3, u: &Vec3, v: &Vec3) -> Result<f64> {
    check_point(p)?;
    check_tangent(p, u)?;
    check_tangent(p, v)?;
    Ok(spec.inner(p, u, v))
}

/// Tangential correction `a(p, v)` with unit-speed geodesics satisfying
/// `γ̈ = a(γ, γ̇) − |γ̇|² γ` in ambient coordinates.
pub fn covariant_acceleration(spec: &MetricSpec, p: &Vec3, v: &Vec3) -> Result<Vec3> {
    check_point(p)?;
    check_tangent(p, v)?;
    if v.norm() == 0.0 {
        return Err(Error::Precondition("zero velocity".into()));
    }
    Ok(spec.acceleration(p, v))
}

/// Same quantity as [`covariant_acceleration`], from central differences of
/// [`MetricSpec::inner`] along round great circles (step [`FD_STEP`]).
///
/// Uses the difference tensor `D = ∇ − ∇⁰` between the Levi-Civita
/// connection of `g` and that of the round metric:
/// `g(D(v,v), Z) = (∇⁰_v g)(v, Z) − ½ (∇⁰_Z g)(v, v)` and `a = −D(v, v)`.
pub fn covariant_acceleration_fd(spec: &MetricSpec, p: &Vec3, v: &Vec3) -> Result<Vec3> {
    check_point(p)?;
    check_tangent(p, v)?;
    if v.norm() == 0.0 {
        return Err(Error::Precondition("zero velocity".into()));
    }
    let (e1, e2) = orthonormal_pair(p);
    let gram = [
        [spec.inner(p, &e1, &e1), spec.inner(p, &e1, &e2)],
        [spec.inner(p, &e2, &e1), spec.inner(p, &e2, &e2)],
    ];
    let basis = [e1, e2];
    let mut rhs = [0.0; 2];
    for (j, e) in basis.iter().enumerate() {
        rhs[j] = round_derivative(spec, p, v, v, e) - 0.5 * round_derivative(spec, p, e, v, v);
    }
    let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
    let c1 = (rhs[0] * gram[1][1] - rhs[1] * gram[0][1]) / det;
    let c2 = (gram[0][0] * rhs[1] - gram[1][0] * rhs[0]) / det;
    Ok(-(e1 * c1 + e2 * c2))
}

/// `(∇⁰_x g)(y, z)` at `p` by central differences along the great circle
/// through `p` in direction `x`, with `y, z` parallel transported.
fn round_derivative(spec: &MetricSpec, p: &Vec3, x: &Vec3, y: &Vec3, z: &Vec3) -> f64 {
    let speed = x.norm();
    if speed == 0.0 {
        return 0.0;
    }
    let dir = x / speed;
    let transported = |t: f64| {
        let (s, c) = t.sin_cos();
        let point = p * c + dir * s;
        let velocity = dir * c - p * s;
        let carry = |w: &Vec3| {
            let along = w.dot(&dir);
            (w - dir * along) + velocity * along
        };
        spec.inner(&point, &carry(y), &carry(z))
    };
    speed * (transported(FD_STEP) - transported(-FD_STEP)) / (2.0 * FD_STEP)
}

/// Length of a full closed meridian (pole to pole and back).
///
/// Adaptive Simpson quadrature of the meridional speed, refined until
/// successive estimates differ by less than `1e-10`.
pub fn meridian_length(spec: &MetricSpec) -> f64 {
    let f = |theta: f64| spec.meridional_speed(theta);
    let a = 0.0;
    let b = std::f64::consts::PI;
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    2.0 * adaptive_simpson(&f, a, b, fa, fm, fb, whole, 1e-11, 50)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// JSON form: `{"family": "round"|"ellipsoid"|"zoll", "radius", "r", "h_coeffs"}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricJson {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_coeffs: Option<Vec<f64>>,
}

impl TryFrom<MetricJson> for MetricSpec {
    type Error = Error;

    fn try_from(raw: MetricJson) -> Result<Self> {
        match raw.family.as_str() {
            "round" => MetricSpec::round(raw.radius.unwrap_or(1.0)),
            "ellipsoid" => {
                let r = raw
                    .r
                    .ok_or_else(|| Error::Parameter("ellipsoid metric needs \"r\"".into()))?;
                MetricSpec::ellipsoid(r)
            }
            "zoll" => {
                let coeffs = raw
                    .h_coeffs
                    .ok_or_else(|| Error::Parameter("zoll metric needs \"h_coeffs\"".into()))?;
                Ok(MetricSpec::zoll(OddProfile::new(coeffs)?))
            }
            other => Err(Error::Parameter(format!("unknown metric family {other:?}"))),
        }
    }
}

impl From<&MetricSpec> for MetricJson {
    fn from(spec: &MetricSpec) -> Self {
        let mut raw = MetricJson {
            family: spec.family().to_string(),
            radius: None,
            r: None,
            h_coeffs: None,
        };
        match spec {
            MetricSpec::Round { radius } => raw.radius = Some(*radius),
            MetricSpec::EllipsoidOfRevolution { r } => raw.r = Some(*r),
            MetricSpec::ZollRevolution { profile } => raw.h_coeffs = Some(profile.coeffs().to_vec()),
        }
        raw
    }
}

impl Serialize for MetricSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MetricJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MetricSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MetricJson::deserialize(deserializer)?;
        MetricSpec::try_from(raw).map_err(serde::de::Error::custom)
    }
}

//! Geodesic shooting and the simple length spectrum.
//!
//! Geodesics are integrated in ambient coordinates, `ẍ = a(x, ẋ) − |ẋ|² x`,
//! with classical RK4 at a fixed arclength step, projecting back to the
//! sphere and renormalizing the g-speed after every step.

use serde::{Deserialize, Serialize};

use crate::curves::{self, DiscreteCurve};
use crate::error::{Error, Result};
use crate::flow::FlowOutcome;
use crate::flow::FlowStatus;
use crate::metrics::{MetricJson, MetricSpec};
use crate::sphere;
use crate::Vec3;

pub const SHOOT_STEP: f64 = 1e-3;
pub const MAX_ARCLENGTH: f64 = 100.0;
/// Samples closer than this to a pole are left out of Clairaut series.
pub const POLE_EXCLUSION: f64 = 1e-3;
/// Arclength spacing of the polyline used to test simplicity.
pub const SIMPLICITY_SPACING: f64 = 1e-2;
/// Closure defect accepted when validating spectrum entries.
pub const VALIDATION_CLOSURE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicSample {
    pub s: f64,
    pub p: Vec3,
    /// g-unit velocity.
    pub v: Vec3,
}

/// A unit-speed geodesic sampled every [`SHOOT_STEP`] of arclength.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicTrajectory {
    spec: MetricSpec,
    samples: Vec<GeodesicSample>,
}

fn rhs(spec: &MetricSpec, x: &Vec3, u: &Vec3) -> (Vec3, Vec3) {
    (*u, spec.acceleration(x, u) - x * u.norm_squared())
}

fn rk4(spec: &MetricSpec, x: &Vec3, u: &Vec3, h: f64) -> (Vec3, Vec3) {
    let (k1x, k1u) = rhs(spec, x, u);
    let (k2x, k2u) = rhs(spec, &(x + k1x * (0.5 * h)), &(u + k1u * (0.5 * h)));
    let (k3x, k3u) = rhs(spec, &(x + k2x * (0.5 * h)), &(u + k2u * (0.5 * h)));
    let (k4x, k4u) = rhs(spec, &(x + k3x * h), &(u + k3u * h));
    (
        x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0),
        u + (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0),
    )
}

fn project(spec: &MetricSpec, x: &Vec3, u: &Vec3) -> (Vec3, Vec3) {
    let p = x.normalize();
    let v = sphere::tangent_part(&p, u);
    let v = v / spec.norm(&p, &v);
    (p, v)
}

/// Rescales a tangent direction at `p` to g-unit length.
pub fn unit_tangent(spec: &MetricSpec, p: &Vec3, direction: &Vec3) -> Result<Vec3> {
    let v = sphere::tangent_part(p, direction);
    let norm = spec.norm(p, &v);
    if !(norm > 0.0) {
        return Err(Error::Precondition("direction has no tangential component".into()));
    }
    Ok(v / norm)
}

/// Integrates the geodesic with initial data `(p, v)` up to arclength `s_max`.
pub fn shoot(spec: &MetricSpec, p: &Vec3, v: &Vec3, s_max: f64) -> Result<GeodesicTrajectory> {
    if !sphere::is_unit(p) {
        return Err(Error::Precondition(format!("|p| = {} is not 1", p.norm())));
    }
    if p.dot(v).abs() > sphere::UNIT_TOL * v.norm().max(1.0) {
        return Err(Error::Precondition("launch velocity is not tangent".into()));
    }
    let speed = spec.norm(p, v);
    if (speed - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!("launch velocity has g-norm {speed}")));
    }
    if !(s_max > 0.0 && s_max <= MAX_ARCLENGTH) {
        return Err(Error::Parameter(format!("s_max = {s_max} outside (0, {MAX_ARCLENGTH}]")));
    }
    let steps = (s_max / SHOOT_STEP).ceil() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    let (mut x, mut u) = (*p, *v);
    samples.push(GeodesicSample { s: 0.0, p: x, v: u });
    for k in 1..=steps {
        let (nx, nu) = rk4(spec, &x, &u, SHOOT_STEP);
        (x, u) = project(spec, &nx, &nu);
        samples.push(GeodesicSample { s: k as f64 * SHOOT_STEP, p: x, v: u });
    }
    Ok(GeodesicTrajectory { spec: spec.clone(), samples })
}

impl GeodesicTrajectory {
    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[GeodesicSample] {
        &self.samples
    }

    /// Largest arclength covered.
    pub fn extent(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.s)
    }

    /// Position and velocity at arclength `s`, by one partial RK4 step from
    /// the preceding sample.
    pub fn state_at(&self, s: f64) -> Result<(Vec3, Vec3)> {
        if !(0.0..=self.extent() + 1e-12).contains(&s) {
            return Err(Error::Precondition(format!("arclength {s} outside [0, {}]", self.extent())));
        }
        let k = ((s / SHOOT_STEP).floor() as usize).min(self.samples.len() - 1);
        let base = &self.samples[k];
        let rest = s - base.s;
        if rest <= 0.0 {
            return Ok((base.p, base.v));
        }
        let (x, u) = rk4(&self.spec, &base.p, &base.v, rest);
        Ok(project(&self.spec, &x, &u))
    }

    /// Points every `spacing` of arclength on `[0, length)`, as a closed
    /// polyline.
    pub fn polyline(&self, length: f64, spacing: f64) -> Result<DiscreteCurve> {
        let m = ((length / spacing).ceil() as usize).max(8);
        let points = (0..m)
            .map(|k| self.state_at(length * k as f64 / m as f64).map(|(p, _)| p))
            .collect::<Result<Vec<_>>>()?;
        DiscreteCurve::new(points)
    }
}

/// `|p(s) − p(0)| + |v(s) − v(0)|` in ambient coordinates.
pub fn closure_defect(traj: &GeodesicTrajectory, s_probe: f64) -> Result<f64> {
    let (p, v) = traj.state_at(s_probe)?;
    let start = &traj.samples[0];
    Ok((p - start.p).norm() + (v - start.v).norm())
}

/// Clairaut integral `g(γ̇, ∂_φ)` at each sample away from the poles, as
/// `(s, value)` pairs.
pub fn clairaut_series(spec: &MetricSpec, traj: &GeodesicTrajectory) -> Vec<(f64, f64)> {
    let pole = (1.0 - POLE_EXCLUSION * POLE_EXCLUSION).sqrt();
    traj.samples
        .iter()
        .filter(|x| x.p.z.abs() <= pole)
        .map(|x| {
            let killing = Vec3::new(-x.p.y, x.p.x, 0.0);
            (x.s, spec.inner(&x.p, &x.v, &killing))
        })
        .collect()
}

/// `max |c(s) − c(0)| / max(|c(0)|, 1e−6)` over a Clairaut series.
pub fn clairaut_drift(series: &[(f64, f64)]) -> f64 {
    let Some(&(_, c0)) = series.first() else {
        return 0.0;
    };
    let worst = series.iter().map(|(_, c)| (c - c0).abs()).fold(0.0, f64::max);
    worst / c0.abs().max(1e-6)
}

/// True iff the geodesic has no self-intersection on `[0, length)` at
/// [`SIMPLICITY_SPACING`] resolution.
pub fn is_simple(traj: &GeodesicTrajectory, length: f64) -> bool {
    traj.polyline(length, SIMPLICITY_SPACING)
        .and_then(|c| curves::is_embedded(&c))
        .unwrap_or(false)
}

/// Launch data `(p, v)` at vertex 0 of a closed curve, along its discrete
/// tangent.
pub fn launch_from_curve(spec: &MetricSpec, curve: &DiscreteCurve) -> Result<(Vec3, Vec3)> {
    if curve.is_constant() || curve.len() < 3 {
        return Err(Error::Precondition("need a non-constant curve".into()));
    }
    let v = curve.vertices();
    let n = v.len();
    let (p, next, prev) = (v[0], v[1], v[n - 1]);
    let hp = curves::edge_length(spec, &p, &next);
    let hm = curves::edge_length(spec, &prev, &p);
    let t = sphere::log_map(&p, &next) * (hm / hp) - sphere::log_map(&p, &prev) * (hp / hm);
    Ok((p, unit_tangent(spec, &p, &t)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest flow curvature magnitude on the representative.
    pub kappa_max: f64,
    /// Shooting closure defect at the entry length.
    pub closure_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub length: f64,
    pub count: usize,
    pub representative: DiscreteCurve,
    pub residuals: Residuals,
    /// The shot geodesic closes and is simple.
    pub validated: bool,
}

/// Detected simple closed geodesic lengths with their evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub metric: MetricSpec,
    pub delta_len: f64,
    /// Sorted by length; neighbours differ by more than `delta_len`.
    pub entries: Vec<SpectrumEntry>,
}

impl SpectrumReport {
    /// `σs`: lengths of the validated entries.
    pub fn sigma_s(&self) -> Vec<f64> {
        self.entries.iter().filter(|e| e.validated).map(|e| e.length).collect()
    }

    pub fn all_validated(&self) -> bool {
        self.entries.iter().all(|e| e.validated)
    }

    /// JSON form; `paths[i]` names the CSV holding entry `i`'s representative.
    pub fn to_json(&self, paths: &[Option<String>]) -> SpectrumJson {
        SpectrumJson {
            metric: self.metric.to_json(),
            delta_len: self.delta_len,
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| EntryJson {
                    length: e.length,
                    count: e.count,
                    residuals: e.residuals,
                    representative_path: paths.get(i).cloned().flatten(),
                    validated: e.validated,
                })
                .collect(),
            sigma_s: self.sigma_s(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryJson {
    pub length: f64,
    pub count: usize,
    pub residuals: Residuals,
    pub representative_path: Option<String>,
    pub validated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub metric: MetricJson,
    pub delta_len: f64,
    pub entries: Vec<EntryJson>,
    pub sigma_s: Vec<f64>,
}

/// Shoots from `curve` and checks closure at `length` and simplicity.
pub fn validate_closed_geodesic(spec: &MetricSpec, curve: &DiscreteCurve, length: f64) -> Result<(f64, bool)> {
    let (p, v) = launch_from_curve(spec, curve)?;
    let traj = shoot(spec, &p, &v, length + SHOOT_STEP)?;
    let defect = closure_defect(&traj, length)?;
    Ok((defect, defect <= VALIDATION_CLOSURE && is_simple(&traj, length)))
}

/// Clusters converged flow limits into distinct lengths and validates one
/// representative per cluster by shooting.
///
/// Clusters are maximal runs of sorted lengths with gaps at most
/// `delta_len`; the representative is the member with the smallest final
/// curvature.
pub fn simple_spectrum<'a>(
    spec: &MetricSpec,
    outcomes: impl IntoIterator<Item = &'a FlowOutcome>,
    delta_len: f64,
) -> Result<SpectrumReport> {
    if !(delta_len > 0.0) {
        return Err(Error::Parameter(format!("delta_len = {delta_len} must be positive")));
    }
    let mut converged: Vec<(f64, f64, &DiscreteCurve)> = outcomes
        .into_iter()
        .filter_map(|o| match &o.status {
            FlowStatus::ConvergedGeodesic { curve, limit_length } => {
                let kappa = o.trace.samples.last().map_or(f64::INFINITY, |s| s.kappa_max);
                Some((*limit_length, kappa, curve))
            }
            _ => None,
        })
        .collect();
    converged.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut clusters: Vec<Vec<(f64, f64, &DiscreteCurve)>> = Vec::new();
    for item in converged {
        match clusters.last_mut() {
            Some(last) if item.0 - last.last().expect("clusters are nonempty").0 <= delta_len => last.push(item),
            _ => clusters.push(vec![item]),
        }
    }

    let mut entries = Vec::with_capacity(clusters.len());
    for cluster in clusters {
        let length = cluster.iter().map(|c| c.0).sum::<f64>() / cluster.len() as f64;
        let (_, kappa_max, curve) = *cluster
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("clusters are nonempty");
        let embedded = curves::is_embedded(curve).unwrap_or(false);
        let (closure, closes) = validate_closed_geodesic(spec, curve, length)?;
        entries.push(SpectrumEntry {
            length,
            count: cluster.len(),
            representative: curve.clone(),
            residuals: Residuals { kappa_max, closure_defect: closure },
            validated: embedded && closes,
        });
    }
    Ok(SpectrumReport { metric: spec.clone(), delta_len, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::latitude_circle;
    use crate::flow::{self, FlowParams};
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    fn launch(spec: &MetricSpec, p: Vec3, angle: f64) -> (Vec3, Vec3) {
        let (e1, e2) = sphere::orthonormal_pair(&p);
        (p, unit_tangent(spec, &p, &(e1 * angle.cos() + e2 * angle.sin())).unwrap())
    }

    #[test]
    fn round_geodesics_close_at_two_pi() {
        let spec = MetricSpec::round(1.0).unwrap();
        let (p, v) = launch(&spec, Vec3::new(0.2, -0.4, 0.7).normalize(), 1.1);
        let traj = shoot(&spec, &p, &v, TAU + 0.1).unwrap();
        assert!(closure_defect(&traj, TAU).unwrap() <= 1e-5);
        assert!(is_simple(&traj, TAU));
    }

    #[test]
    fn trajectory_invariants() {
        let spec = MetricSpec::zoll_cubic(0.3).unwrap();
        let (p, v) = launch(&spec, Vec3::new(0.5, 0.1, 0.4).normalize(), 0.4);
        let traj = shoot(&spec, &p, &v, 10.0).unwrap();
        for x in traj.samples() {
            assert!((x.p.norm() - 1.0).abs() <= 1e-10);
            assert!((spec.norm(&x.p, &x.v) - 1.0).abs() <= 1e-8);
        }
        assert!((traj.extent() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn meridians_stay_in_their_plane() {
        let spec = MetricSpec::zoll_cubic(0.3).unwrap();
        let phi = 0.7f64;
        let p = Vec3::new(phi.cos() * 0.6, phi.sin() * 0.6, 0.8);
        let dir = Vec3::new(phi.cos() * 0.8, phi.sin() * 0.8, -0.6);
        let v = unit_tangent(&spec, &p, &dir).unwrap();
        let traj = shoot(&spec, &p, &v, TAU).unwrap();
        let normal = Vec3::new(-phi.sin(), phi.cos(), 0.0);
        assert!(traj.samples().iter().all(|x| x.p.dot(&normal).abs() <= 1e-8));
        let series = clairaut_series(&spec, &traj);
        assert!(series.iter().all(|(_, c)| c.abs() < 1e-8));
    }

    #[test]
    fn equator_clairaut_is_one() {
        let spec = MetricSpec::round(1.0).unwrap();
        let traj = shoot(&spec, &Vec3::x(), &Vec3::y(), TAU).unwrap();
        assert!(clairaut_series(&spec, &traj).iter().all(|(_, c)| (c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn clairaut_is_conserved() {
        for spec in [MetricSpec::ellipsoid(0.8).unwrap(), MetricSpec::zoll_cubic(0.3).unwrap()] {
            let (p, v) = launch(&spec, Vec3::new(0.7, 0.2, -0.3).normalize(), 0.9);
            let traj = shoot(&spec, &p, &v, TAU).unwrap();
            let drift = clairaut_drift(&clairaut_series(&spec, &traj));
            assert!(drift <= 1e-6, "{drift:e}");
        }
    }

    #[test]
    fn generic_ellipsoid_geodesic_does_not_close() {
        let spec = MetricSpec::ellipsoid(0.8).unwrap();
        let (p, v) = launch(&spec, Vec3::x(), FRAC_PI_4);
        let traj = shoot(&spec, &p, &v, TAU).unwrap();
        assert!(closure_defect(&traj, TAU).unwrap() > 0.1);
    }

    #[test]
    fn zoll_geodesics_close_at_two_pi() {
        let spec = MetricSpec::zoll_cubic(0.3).unwrap();
        for (p, angle) in [(Vec3::new(0.3, 0.3, 0.9), 0.2), (Vec3::new(1.0, 0.0, -0.2), 1.3)] {
            let (p, v) = launch(&spec, p.normalize(), angle);
            let traj = shoot(&spec, &p, &v, TAU).unwrap();
            assert!(closure_defect(&traj, TAU).unwrap() <= 1e-3);
            assert!(is_simple(&traj, TAU));
        }
    }

    #[test]
    fn state_interpolation_matches_samples() {
        let spec = MetricSpec::ellipsoid(0.6).unwrap();
        let (p, v) = launch(&spec, Vec3::new(0.1, 0.9, 0.3).normalize(), 0.3);
        let traj = shoot(&spec, &p, &v, 1.0).unwrap();
        let (q, _) = traj.state_at(0.5).unwrap();
        assert!((q - traj.samples()[500].p).norm() < 1e-12);
        assert!(traj.state_at(1.5).is_err());
    }

    #[test]
    fn shooting_preconditions() {
        let spec = MetricSpec::round(1.0).unwrap();
        assert!(shoot(&spec, &Vec3::x(), &Vec3::new(0.0, 2.0, 0.0), 1.0).is_err());
        assert!(shoot(&spec, &Vec3::x(), &Vec3::x(), 1.0).is_err());
        assert!(shoot(&spec, &Vec3::x(), &Vec3::y(), 150.0).is_err());
    }

    #[test]
    fn spectrum_of_ellipsoid_equator_and_meridian() {
        let spec = MetricSpec::ellipsoid(0.8).unwrap();
        let params = FlowParams::default().with_n(128);
        let equator = flow::evolve(&latitude_circle(PI / 2.0, 128).unwrap(), &spec, &params).unwrap();
        let meridian = crate::sweepout::circle_from_plane(&Vec3::y(), 0.0, 128).unwrap();
        let meridian = flow::evolve(&meridian, &spec, &params).unwrap();
        let report = simple_spectrum(&spec, [&equator, &meridian, &equator], 1e-2).unwrap();
        assert_eq!(report.entries.len(), 2);
        assert!(report.all_validated());
        let sigma = report.sigma_s();
        assert!((sigma[0] - crate::metrics::meridian_length(&spec)).abs() < 1e-2);
        assert!((sigma[1] - TAU).abs() < 1e-2);
        assert_eq!(report.entries[1].count, 2);
        assert!(simple_spectrum(&spec, [&equator], 0.0).is_err());
    }
}

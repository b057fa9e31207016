//! Curve-shortening flow `∂ₜγ = κ ν` on a metric sphere.
//!
//! Explicit Euler in the tangent planes with a parabolic time-step cap,
//! periodic re-meshing, and a classifier that separates collapse to a point
//! from convergence to a closed geodesic.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::curves::{self, DiscreteCurve, VertexGeometry};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricSpec};
use crate::Vec3;

/// Curvature above which trace samples are not used for rate checks.
pub const RATE_CHECK_MAX_CURVATURE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    /// Vertex count for curves of meridian scale.
    pub n: usize,
    /// Floor on the vertex count as a curve shrinks.
    pub min_vertices: usize,
    /// Safety factor `c` in `dt = c h² / max(1, κ_max)`.
    pub safety: f64,
    pub collapse_length: f64,
    /// Bound on `sup |κ|` for convergence.
    pub geodesic_tol: f64,
    /// Bound on relative length decrease per unit time for convergence.
    pub stall_tol: f64,
    pub max_time: f64,
    /// Steps between convergence, embedding and mesh-quality checks.
    pub cadence: usize,
    /// Edge-length ratio that triggers a resample at a check.
    pub resample_ratio: f64,
    /// Steps between recorded trace samples.
    pub trace_every: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            n: 256,
            min_vertices: 16,
            safety: 0.4,
            collapse_length: 1e-2,
            geodesic_tol: 1e-3,
            stall_tol: 1e-6,
            max_time: 200.0,
            cadence: 50,
            resample_ratio: 1.5,
            trace_every: 10,
        }
    }
}

impl FlowParams {
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("safety", self.safety),
            ("collapse_length", self.collapse_length),
            ("geodesic_tol", self.geodesic_tol),
            ("stall_tol", self.stall_tol),
            ("max_time", self.max_time),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {value}")));
            }
        }
        if self.safety > 0.5 {
            return Err(Error::Parameter(format!("safety factor {} exceeds 0.5", self.safety)));
        }
        if self.min_vertices < 8 || self.n < self.min_vertices {
            return Err(Error::Parameter(format!(
                "need 8 <= min_vertices <= n, got {} and {}",
                self.min_vertices, self.n
            )));
        }
        if self.cadence == 0 || self.trace_every == 0 {
            return Err(Error::Parameter("cadence and trace_every must be positive".into()));
        }
        if !(self.resample_ratio > 1.0) {
            return Err(Error::Parameter("resample_ratio must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub length: f64,
    pub kappa_max: f64,
    /// `∫ κ² ds`.
    pub kappa_sq_integral: f64,
    /// Resamples performed before this sample.
    pub resamples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub samples: Vec<TraceSample>,
    pub steps: usize,
    pub resamples: usize,
    /// Largest `(L(t_{k+1}) − L(t_k)) / Δt` over Euler steps.
    pub max_step_increase_rate: f64,
    /// Largest length change `L_after − L_before` caused by a resample.
    pub max_resample_gain: f64,
}

impl FlowTrace {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["t", "length", "kappa_max", "kappa_sq_integral"])?;
        for s in &self.samples {
            out.write_record([s.t, s.length, s.kappa_max, s.kappa_sq_integral].map(|x| format!("{x:?}")))?;
        }
        out.flush()?;
        Ok(())
    }

    /// True iff every Euler step satisfied `L_{k+1} ≤ L_k + slack·Δt`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.max_step_increase_rate <= slack
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowStatus {
    Collapsed { point: Vec3, stop_time: f64 },
    ConvergedGeodesic { curve: DiscreteCurve, limit_length: f64 },
    BudgetExhausted { curve: DiscreteCurve },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOutcome {
    pub status: FlowStatus,
    pub trace: FlowTrace,
}

impl FlowOutcome {
    pub fn status_name(&self) -> &'static str {
        match self.status {
            FlowStatus::Collapsed { .. } => "Collapsed",
            FlowStatus::ConvergedGeodesic { .. } => "ConvergedGeodesic",
            FlowStatus::BudgetExhausted { .. } => "BudgetExhausted",
        }
    }

    /// `ℓ_γ`: zero after collapse.
    pub fn limit_length(&self) -> Option<f64> {
        match &self.status {
            FlowStatus::Collapsed { .. } => Some(0.0),
            FlowStatus::ConvergedGeodesic { limit_length, .. } => Some(*limit_length),
            FlowStatus::BudgetExhausted { .. } => None,
        }
    }

    pub fn final_curve(&self) -> Option<&DiscreteCurve> {
        match &self.status {
            FlowStatus::Collapsed { .. } => None,
            FlowStatus::ConvergedGeodesic { curve, .. } | FlowStatus::BudgetExhausted { curve } => Some(curve),
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self.status, FlowStatus::ConvergedGeodesic { .. })
    }

    pub fn to_json(&self, final_curve_path: Option<String>) -> OutcomeJson {
        let (limit_length, stop_time) = match &self.status {
            FlowStatus::Collapsed { stop_time, .. } => (Some(0.0), Some(*stop_time)),
            FlowStatus::ConvergedGeodesic { limit_length, .. } => (Some(*limit_length), None),
            FlowStatus::BudgetExhausted { .. } => (None, None),
        };
        OutcomeJson {
            status: self.status_name().to_string(),
            limit_length,
            stop_time,
            final_curve_path,
        }
    }
}

/// Outcome export `{status, limit_length, stop_time, final_curve_path}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeJson {
    pub status: String,
    pub limit_length: Option<f64>,
    pub stop_time: Option<f64>,
    pub final_curve_path: Option<String>,
}

struct Snapshot {
    geometry: Vec<VertexGeometry>,
    length: f64,
    min_edge: f64,
    kappa_max: f64,
    kappa_sq: f64,
}

fn snapshot(curve: &DiscreteCurve, spec: &MetricSpec) -> Result<Snapshot> {
    let geometry = curves::curvature_field(curve, spec)?;
    let edges = curve.edge_lengths(spec);
    let length = edges.iter().sum();
    let min_edge = edges.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa_max = geometry.iter().map(|g| g.curvature_magnitude).fold(0.0, f64::max);
    let kappa_sq = geometry
        .iter()
        .map(|g| g.weight * g.curvature_magnitude * g.curvature_magnitude)
        .sum();
    Ok(Snapshot { geometry, length, min_edge, kappa_max, kappa_sq })
}

fn stable_dt(safety: f64, min_edge: f64, kappa_max: f64) -> f64 {
    safety * min_edge * min_edge / kappa_max.max(1.0)
}

fn advance(curve: &DiscreteCurve, geometry: &[VertexGeometry], dt: f64) -> DiscreteCurve {
    DiscreteCurve::from_unchecked(
        curve
            .vertices()
            .iter()
            .zip(geometry)
            .map(|(p, g)| (p + g.curvature_normal * dt).normalize())
            .collect(),
    )
}

/// One explicit Euler step of length `dt`.
///
/// `dt` must satisfy `dt ≤ ½ h_min² / max(1, κ_max)`.
pub fn step(curve: &DiscreteCurve, spec: &MetricSpec, dt: f64) -> Result<DiscreteCurve> {
    if curve.is_constant() {
        return Err(Error::Precondition("cannot flow a constant curve".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("time step {dt} must be positive")));
    }
    let snap = snapshot(curve, spec)?;
    let bound = stable_dt(0.5, snap.min_edge, snap.kappa_max);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!("time step {dt:e} exceeds stability bound {bound:e}")));
    }
    Ok(advance(curve, &snap.geometry, dt))
}

/// Runs the flow until collapse, convergence to a geodesic, or `max_time`.
pub fn evolve(curve: &DiscreteCurve, spec: &MetricSpec, params: &FlowParams) -> Result<FlowOutcome> {
    params.validate()?;
    let mut trace = FlowTrace {
        max_step_increase_rate: f64::NEG_INFINITY,
        max_resample_gain: f64::NEG_INFINITY,
        ..FlowTrace::default()
    };
    if curve.is_constant() {
        trace.samples.push(TraceSample { t: 0.0, length: 0.0, kappa_max: 0.0, kappa_sq_integral: 0.0, resamples: 0 });
        return Ok(FlowOutcome {
            status: FlowStatus::Collapsed { point: curve.vertices()[0], stop_time: 0.0 },
            trace,
        });
    }
    if !curves::is_embedded(curve)? {
        return Err(Error::Precondition("flow input is not embedded".into()));
    }

    let spacing = metrics::meridian_length(spec) / params.n as f64;
    let target_count = |length: f64| ((length / spacing).ceil() as usize).clamp(params.min_vertices, params.n);
    let integrity = |t: f64, e: Error| match e {
        Error::DegenerateCurve { .. } | Error::AmbiguousEmbedding { .. } => Error::Integrity { time: t, reason: e.to_string() },
        other => other,
    };

    let initial_length = curves::length(curve, spec);
    let mut current = curves::resample(curve, spec, target_count(initial_length))?;
    let mut t = 0.0;
    let mut previous: Option<(f64, f64)> = None; // (length, dt) before the last Euler step
    let mut window = (0.0, f64::NAN); // (t, length) at the last check
    let mut steps_since_check = 0usize;

    loop {
        let snap = snapshot(&current, spec).map_err(|e| integrity(t, e))?;
        if let Some((before, dt)) = previous.take() {
            trace.max_step_increase_rate = trace.max_step_increase_rate.max((snap.length - before) / dt);
        }
        if window.1.is_nan() {
            window = (t, snap.length);
        }
        let sample = TraceSample {
            t,
            length: snap.length,
            kappa_max: snap.kappa_max,
            kappa_sq_integral: snap.kappa_sq,
            resamples: trace.resamples,
        };
        let record = trace.steps % params.trace_every == 0;
        if record {
            trace.samples.push(sample);
        }

        if snap.length < params.collapse_length {
            if !record {
                trace.samples.push(sample);
            }
            return Ok(FlowOutcome {
                status: FlowStatus::Collapsed { point: current.center(), stop_time: t },
                trace,
            });
        }

        if steps_since_check >= params.cadence {
            steps_since_check = 0;
            let elapsed = t - window.0;
            let stall = (window.1 - snap.length) / (snap.length * elapsed);
            let embedded = curves::is_embedded(&current).map_err(|e| integrity(t, e))?;
            if !embedded {
                return Err(Error::Integrity { time: t, reason: "curve lost embeddedness".into() });
            }
            if snap.kappa_max <= params.geodesic_tol && stall <= params.stall_tol {
                if !record {
                    trace.samples.push(sample);
                }
                return Ok(FlowOutcome {
                    status: FlowStatus::ConvergedGeodesic { curve: current, limit_length: snap.length },
                    trace,
                });
            }
            let wanted = target_count(snap.length);
            if wanted != current.len() || current.edge_ratio(spec) > params.resample_ratio {
                current = curves::resample(&current, spec, wanted).map_err(|e| integrity(t, e))?;
                let after = curves::length(&current, spec);
                trace.max_resample_gain = trace.max_resample_gain.max(after - snap.length);
                trace.resamples += 1;
                window = (t, after);
                continue;
            }
            window = (t, snap.length);
        }

        if t >= params.max_time {
            if !record {
                trace.samples.push(sample);
            }
            return Ok(FlowOutcome { status: FlowStatus::BudgetExhausted { curve: current }, trace });
        }

        let dt = stable_dt(params.safety, snap.min_edge, snap.kappa_max);
        current = advance(&current, &snap.geometry, dt);
        previous = Some((snap.length, dt));
        t += dt;
        trace.steps += 1;
        steps_since_check += 1;
    }
}

/// Agreement of the trace with `dL/dt = −∫ κ² ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthDerivativeCheck {
    /// `max |ΔL/Δt + ∫κ²| / max(∫κ², 1e−8)` over checked samples.
    pub max_relative: f64,
    /// `max |ΔL/Δt + ∫κ²|` over checked samples.
    pub max_absolute: f64,
    pub checked: usize,
    /// Samples with curvature above the bound or a resample in the window.
    pub skipped: usize,
}

/// Compares centred differences of the length trace with `−∫ κ² ds`.
pub fn check_length_derivative(trace: &FlowTrace) -> Result<LengthDerivativeCheck> {
    let s = &trace.samples;
    if s.len() < 10 {
        return Err(Error::Precondition(format!("trace has {} samples, need at least 10", s.len())));
    }
    let mut check = LengthDerivativeCheck { max_relative: 0.0, max_absolute: 0.0, checked: 0, skipped: 0 };
    for k in 1..s.len() - 1 {
        let (a, b, c) = (&s[k - 1], &s[k], &s[k + 1]);
        let smooth = [a, b, c].iter().all(|x| x.kappa_max <= RATE_CHECK_MAX_CURVATURE);
        if !smooth || a.resamples != c.resamples || c.t <= a.t {
            check.skipped += 1;
            continue;
        }
        let rate = (c.length - a.length) / (c.t - a.t);
        let defect = (rate + b.kappa_sq_integral).abs();
        check.max_absolute = check.max_absolute.max(defect);
        check.max_relative = check.max_relative.max(defect / b.kappa_sq_integral.max(1e-8));
        check.checked += 1;
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{great_circle, latitude_circle};
    use crate::sphere;
    use std::f64::consts::PI;

    fn round() -> MetricSpec {
        MetricSpec::round(1.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FlowParams::default().validate().is_ok());
        let bad = FlowParams { safety: 0.6, ..FlowParams::default() };
        assert!(bad.validate().is_err());
        let bad = FlowParams { geodesic_tol: 0.0, ..FlowParams::default() };
        assert!(bad.validate().is_err());
        let bad = FlowParams { n: 10, min_vertices: 16, ..FlowParams::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn great_circle_is_stationary() {
        let gc = great_circle(&Vec3::new(0.3, -0.2, 0.9).normalize(), 256).unwrap();
        let dt = 1e-4;
        let next = step(&gc, &round(), dt).unwrap();
        let worst = gc.vertices().iter().zip(next.vertices()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst / dt <= 1e-6);
    }

    #[test]
    fn small_circle_shrinks() {
        let spec = round();
        let lat = latitude_circle(0.2, 64).unwrap();
        let before = curves::length(&lat, &spec);
        let next = step(&lat, &spec, 1e-5).unwrap();
        assert!(curves::length(&next, &spec) < before);
        assert!(next.vertices().iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn unstable_step_is_rejected() {
        let lat = latitude_circle(1.0, 64).unwrap();
        assert!(matches!(step(&lat, &round(), 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn step_commutes_with_z_rotation() {
        let spec = MetricSpec::zoll_cubic(0.3).unwrap();
        let curve = latitude_circle(1.0, 64).unwrap().map(|p| sphere::rotate_about(p, &Vec3::x(), 0.3));
        let rot = 0.77;
        let dt = 1e-4;
        let a = step(&curve, &spec, dt).unwrap().map(|p| sphere::rotate_z(p, rot));
        let b = step(&curve.map(|p| sphere::rotate_z(p, rot)), &spec, dt).unwrap();
        let worst = a.vertices().iter().zip(b.vertices()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst:e}");
    }

    #[test]
    fn latitude_collapses() {
        let lat = latitude_circle(PI / 6.0, 128).unwrap();
        let out = evolve(&lat, &round(), &FlowParams::default()).unwrap();
        match out.status {
            FlowStatus::Collapsed { point, stop_time } => {
                assert!((point - Vec3::z()).norm() < 1e-2);
                // cos θ(t) = cos θ₀ eᵗ reaches 1 at t = −ln cos θ₀
                let expected = -(PI / 6.0).cos().ln();
                assert!((stop_time - expected).abs() < 0.02, "{stop_time} vs {expected}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(out.trace.is_monotone(1e-6), "{}", out.trace.max_step_increase_rate);
    }

    #[test]
    fn ellipsoid_equator_converges() {
        let spec = MetricSpec::ellipsoid(0.8).unwrap();
        let out = evolve(&latitude_circle(PI / 2.0, 256).unwrap(), &spec, &FlowParams::default()).unwrap();
        let limit = out.limit_length().unwrap();
        assert!(out.is_converged());
        assert!((limit - 2.0 * PI).abs() < 1e-2);
        let last = out.trace.samples.last().unwrap();
        assert_eq!(last.length, limit);
    }

    #[test]
    fn constant_curve_collapses_immediately() {
        let c = DiscreteCurve::constant(Vec3::y()).unwrap();
        let out = evolve(&c, &round(), &FlowParams::default()).unwrap();
        assert_eq!(out.status, FlowStatus::Collapsed { point: Vec3::y(), stop_time: 0.0 });
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let params = FlowParams { max_time: 0.05, ..FlowParams::default() };
        let lat = latitude_circle(1.2, 128).unwrap();
        let out = evolve(&lat, &round(), &params).unwrap();
        assert!(matches!(out.status, FlowStatus::BudgetExhausted { .. }));
        assert_eq!(out.limit_length(), None);
    }

    #[test]
    fn latitude_trace_obeys_length_law() {
        let params = FlowParams { max_time: 0.5, ..FlowParams::default() };
        let out = evolve(&latitude_circle(1.0, 256).unwrap(), &round(), &params).unwrap();
        let check = check_length_derivative(&out.trace).unwrap();
        assert!(check.checked > 10);
        assert!(check.max_relative <= 0.05, "{check:?}");
    }

    #[test]
    fn geodesic_trace_has_tiny_absolute_defect() {
        let params = FlowParams { cadence: 400, ..FlowParams::default() };
        let out = evolve(&great_circle(&Vec3::new(1.0, 2.0, 3.0).normalize(), 256).unwrap(), &round(), &params).unwrap();
        assert!(out.is_converged());
        let check = check_length_derivative(&out.trace).unwrap();
        assert!(check.max_absolute <= 1e-3, "{check:?}");
    }

    #[test]
    fn short_trace_is_rejected() {
        let trace = FlowTrace::default();
        assert!(check_length_derivative(&trace).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let mut buf = Vec::new();
        let trace = FlowTrace {
            samples: vec![TraceSample { t: 0.0, length: 1.0, kappa_max: 0.5, kappa_sq_integral: 0.25, resamples: 0 }],
            ..FlowTrace::default()
        };
        trace.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,length,kappa_max,kappa_sq_integral\n0.0,1.0,0.5,0.25\n");
    }
}

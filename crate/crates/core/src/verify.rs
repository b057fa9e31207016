//! End-to-end checks of the two characterizations on a concrete metric.
//!
//! `zoll`: the simple length spectrum is a single value `ℓ` and randomly
//! launched geodesics are simple and closed at `ℓ`. `cover`: with at most two
//! simple lengths, every sampled point lies on a simple closed meridian whose
//! length belongs to the spectrum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geodesics::{self, SpectrumReport, SHOOT_STEP};
use crate::metrics::{self, MetricJson, MetricSpec};
use crate::sphere;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Zoll,
    Cover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    HypothesisNotMet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyParams {
    /// Random geodesics launched for `zoll`.
    pub launches: usize,
    /// Random points sampled for `cover`.
    pub points: usize,
    pub closure_tol: f64,
    /// Tolerance when matching a meridian length to a spectrum value.
    pub match_tol: f64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self { launches: 20, points: 50, closure_tol: 1e-3, match_tol: 1e-2 }
    }
}

/// One shot geodesic and what it showed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEvidence {
    pub point: [f64; 3],
    pub direction: [f64; 3],
    /// Arclength at which closure was probed.
    pub length: f64,
    pub closure_defect: f64,
    pub simple: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub theorem: Theorem,
    pub metric: MetricJson,
    pub verdict: Verdict,
    pub reason: String,
    pub sigma_s: Vec<f64>,
    pub samples: Vec<SampleEvidence>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn evidence(spec: &MetricSpec, p: Vec3, v: Vec3, length: f64, tol: f64) -> Result<SampleEvidence> {
    let traj = geodesics::shoot(spec, &p, &v, length + SHOOT_STEP)?;
    let closure_defect = geodesics::closure_defect(&traj, length)?;
    let simple = geodesics::is_simple(&traj, length);
    Ok(SampleEvidence {
        point: p.into(),
        direction: v.into(),
        length,
        closure_defect,
        simple,
        ok: simple && closure_defect <= tol,
    })
}

fn report(theorem: Theorem, spec: &MetricSpec, spectrum: &SpectrumReport, samples: Vec<SampleEvidence>, reason: String) -> VerifyReport {
    let verdict = if samples.iter().all(|s| s.ok) { Verdict::Pass } else { Verdict::Fail };
    let failures = samples.iter().filter(|s| !s.ok).count();
    let reason = if failures == 0 { reason } else { format!("{reason}; {failures} of {} samples failed", samples.len()) };
    VerifyReport { theorem, metric: spec.to_json(), verdict, reason, sigma_s: spectrum.sigma_s(), samples }
}

fn rejected(theorem: Theorem, spec: &MetricSpec, spectrum: &SpectrumReport, verdict: Verdict, reason: String) -> VerifyReport {
    VerifyReport { theorem, metric: spec.to_json(), verdict, reason, sigma_s: spectrum.sigma_s(), samples: Vec::new() }
}

/// Singleton spectrum and random launches closing at its value.
pub fn verify_zoll(spec: &MetricSpec, spectrum: &SpectrumReport, params: &VerifyParams, seed: u64) -> Result<VerifyReport> {
    let sigma = spectrum.sigma_s();
    if sigma.len() != 1 {
        let reason = format!("simple length spectrum has {} values: {sigma:?}", sigma.len());
        return Ok(rejected(Theorem::Zoll, spec, spectrum, Verdict::Fail, reason));
    }
    let length = sigma[0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(params.launches);
    for _ in 0..params.launches {
        let p = sphere::random_unit(&mut rng);
        let (e1, e2) = sphere::orthonormal_pair(&p);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = geodesics::unit_tangent(spec, &p, &(e1 * angle.cos() + e2 * angle.sin()))?;
        samples.push(evidence(spec, p, v, length, params.closure_tol)?);
    }
    let reason = format!("singleton spectrum {length}");
    Ok(report(Theorem::Zoll, spec, spectrum, samples, reason))
}

/// Unit tangent at `p` along the meridian through `p` (any direction at a
/// pole).
pub fn meridian_direction(spec: &MetricSpec, p: &Vec3) -> Result<Vec3> {
    let down = Vec3::new(p.x * p.z, p.y * p.z, p.z * p.z - 1.0);
    let direction = if down.norm() < 1e-9 { Vec3::x() } else { down };
    geodesics::unit_tangent(spec, p, &direction)
}

/// Random points, each shown to lie on a simple closed meridian whose length
/// is in the spectrum.
pub fn verify_cover(spec: &MetricSpec, spectrum: &SpectrumReport, params: &VerifyParams, seed: u64) -> Result<VerifyReport> {
    let sigma = spectrum.sigma_s();
    if sigma.len() > 2 {
        let reason = format!("simple length spectrum has {} values: {sigma:?}", sigma.len());
        return Ok(rejected(Theorem::Cover, spec, spectrum, Verdict::HypothesisNotMet, reason));
    }
    let meridian = metrics::meridian_length(spec);
    let Some(matched) = sigma.iter().copied().find(|l| (l - meridian).abs() <= params.match_tol) else {
        let reason = format!("meridian length {meridian} is not in the spectrum {sigma:?}");
        return Ok(rejected(Theorem::Cover, spec, spectrum, Verdict::Fail, reason));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(params.points);
    for _ in 0..params.points {
        let p = sphere::random_unit(&mut rng);
        let v = meridian_direction(spec, &p)?;
        samples.push(evidence(spec, p, v, meridian, params.closure_tol)?);
    }
    let reason = format!("meridians of length {meridian} (spectrum value {matched}) through every sample");
    Ok(report(Theorem::Cover, spec, spectrum, samples, reason))
}

pub fn verify(theorem: Theorem, spec: &MetricSpec, spectrum: &SpectrumReport, params: &VerifyParams, seed: u64) -> Result<VerifyReport> {
    match theorem {
        Theorem::Zoll => verify_zoll(spec, spectrum, params, seed),
        Theorem::Cover => verify_cover(spec, spectrum, params, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::latitude_circle;
    use crate::flow::{self, FlowParams};
    use crate::geodesics::simple_spectrum;
    use crate::sweepout::circle_from_plane;
    use std::f64::consts::PI;

    fn spectrum(spec: &MetricSpec, with_meridian: bool) -> SpectrumReport {
        let params = FlowParams::default().with_n(128);
        let mut outcomes = vec![flow::evolve(&latitude_circle(PI / 2.0, 128).unwrap(), spec, &params).unwrap()];
        if with_meridian {
            let m = circle_from_plane(&Vec3::x(), 0.0, 128).unwrap();
            outcomes.push(flow::evolve(&m, spec, &params).unwrap());
        }
        simple_spectrum(spec, &outcomes, 1e-2).unwrap()
    }

    #[test]
    fn zoll_metric_passes_zoll_check() {
        let spec = MetricSpec::zoll_cubic(0.3).unwrap();
        let rep = verify_zoll(&spec, &spectrum(&spec, true), &VerifyParams::default(), 7).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.samples.len(), 20);
    }

    #[test]
    fn ellipsoid_fails_zoll_and_passes_cover() {
        let spec = MetricSpec::ellipsoid(0.8).unwrap();
        let spec_report = spectrum(&spec, true);
        let zoll = verify_zoll(&spec, &spec_report, &VerifyParams::default(), 1).unwrap();
        assert_eq!(zoll.verdict, Verdict::Fail);
        assert_eq!(zoll.sigma_s.len(), 2);
        let cover = verify_cover(&spec, &spec_report, &VerifyParams::default(), 1).unwrap();
        assert!(cover.passed(), "{cover:?}");
        assert_eq!(cover.samples.len(), 50);
    }

    #[test]
    fn cover_needs_the_meridian_length() {
        let spec = MetricSpec::ellipsoid(0.8).unwrap();
        let rep = verify_cover(&spec, &spectrum(&spec, false), &VerifyParams::default(), 1).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
    }

    #[test]
    fn three_lengths_do_not_meet_the_cover_hypothesis() {
        let spec = MetricSpec::ellipsoid(0.8).unwrap();
        let mut report = spectrum(&spec, true);
        let mut extra = report.entries[0].clone();
        extra.length = 9.0;
        report.entries.push(extra);
        let rep = verify_cover(&spec, &report, &VerifyParams::default(), 1).unwrap();
        assert_eq!(rep.verdict, Verdict::HypothesisNotMet);
    }

    #[test]
    fn reports_are_reproducible() {
        let spec = MetricSpec::round(1.0).unwrap();
        let s = spectrum(&spec, false);
        let a = serde_json::to_string(&verify_zoll(&spec, &s, &VerifyParams::default(), 3).unwrap()).unwrap();
        let b = serde_json::to_string(&verify_zoll(&spec, &s, &VerifyParams::default(), 3).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

//! The plane-section family of circles and minmax estimates over it.
//!
//! A member is indexed by a direction `x` (up to sign) and an offset
//! `λ ∈ [−1, 1]`; it is the circle `S² ∩ {y : ⟨y, x⟩ = λ}`, which degenerates
//! to the point `±x` at `λ = ±1`. Three nested subfamilies (a loop of
//! meridians, the great circles, and the whole grid) carry the 1-, 2- and
//! 3-dimensional classes, and `ℓ̂ᵢ` is the largest flow limit length over the
//! `i`-th support.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{self, DiscreteCurve};
use crate::error::{Error, Result};
use crate::flow::{self, FlowOutcome, FlowParams, FlowStatus};
use crate::metrics::{MetricJson, MetricSpec};
use crate::sphere;
use crate::Vec3;

/// A member of the plane-section family, stored in canonical form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFamilyIndex {
    x: Vec3,
    lambda: f64,
}

impl PlaneFamilyIndex {
    /// Canonicalizes `(x, λ) ~ (−x, −λ)` so that the first nonzero
    /// coordinate of `x` among `(z, y, x)` is positive.
    pub fn new(x: Vec3, lambda: f64) -> Result<Self> {
        if !sphere::is_unit(&x) {
            return Err(Error::Precondition(format!("direction has norm {}", x.norm())));
        }
        if !(-1.0..=1.0).contains(&lambda) {
            return Err(Error::Precondition(format!("offset {lambda} outside [-1, 1]")));
        }
        let flip = if x.z != 0.0 {
            x.z < 0.0
        } else if x.y != 0.0 {
            x.y < 0.0
        } else {
            x.x < 0.0
        };
        // adding +0.0 maps −0.0 to +0.0 so equal members compare bitwise equal
        Ok(if flip { Self { x: -x, lambda: -lambda + 0.0 } } else { Self { x, lambda: lambda + 0.0 } })
    }

    pub fn direction(&self) -> Vec3 {
        self.x
    }

    pub fn offset(&self) -> f64 {
        self.lambda
    }

    pub fn is_boundary(&self) -> bool {
        self.lambda.abs() == 1.0
    }

    fn key(&self) -> [u64; 4] {
        [self.x.x.to_bits(), self.x.y.to_bits(), self.x.z.to_bits(), self.lambda.to_bits()]
    }
}

/// The circle `S² ∩ {⟨y, x⟩ = λ}` sampled at `n` uniform angles; a constant
/// curve at `λx` when `|λ| = 1`.
pub fn circle_from_plane(x: &Vec3, lambda: f64, n: usize) -> Result<DiscreteCurve> {
    if n < 8 {
        return Err(Error::Parameter(format!("circle needs n >= 8, got {n}")));
    }
    let index = PlaneFamilyIndex::new(*x, lambda)?;
    index_circle(&index, n)
}

fn index_circle(index: &PlaneFamilyIndex, n: usize) -> Result<DiscreteCurve> {
    let (x, lambda) = (index.x, index.lambda);
    if index.is_boundary() {
        return DiscreteCurve::constant(x * lambda);
    }
    let rho = (1.0 - lambda * lambda).sqrt();
    let (e1, e2) = sphere::orthonormal_pair(&x);
    let points = (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            x * lambda + (e1 * t.cos() + e2 * t.sin()) * rho
        })
        .collect();
    DiscreteCurve::from_points(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubfamilyKind {
    /// Great circles through both poles, rotated through half a turn.
    MeridianLoop,
    /// The zero section `λ = 0`.
    GreatCircles,
    /// Every direction at every offset.
    Full,
}

/// Discretization of the index space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridResolution {
    pub n_dir: usize,
    /// Offsets `λⱼ = −1 + 2j/(n_off − 1)`.
    pub n_off: usize,
    /// Members of the meridian loop.
    #[serde(default = "default_meridians")]
    pub n_meridian: usize,
}

fn default_meridians() -> usize {
    16
}

impl Default for GridResolution {
    fn default() -> Self {
        Self { n_dir: 16, n_off: 5, n_meridian: default_meridians() }
    }
}

impl GridResolution {
    pub fn new(n_dir: usize, n_off: usize) -> Self {
        Self { n_dir, n_off, ..Self::default() }
    }

    /// A grid whose only offsets are `±1`: every member is a constant curve.
    pub fn is_degenerate(&self) -> bool {
        self.n_off == 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_degenerate() {
            return if self.n_dir >= 1 {
                Ok(())
            } else {
                Err(Error::Parameter("grid needs at least one direction".into()))
            };
        }
        if self.n_dir < 16 || self.n_off < 5 || self.n_off % 2 == 0 {
            return Err(Error::Parameter(format!(
                "grid needs n_dir >= 16 and odd n_off >= 5 (or n_off = 2), got ({}, {})",
                self.n_dir, self.n_off
            )));
        }
        if self.n_meridian < 4 {
            return Err(Error::Parameter(format!("meridian loop needs at least 4 members, got {}", self.n_meridian)));
        }
        Ok(())
    }

    pub fn offsets(&self) -> Vec<f64> {
        let last = (self.n_off - 1) as f64;
        (0..self.n_off)
            .map(|j| if 2 * j + 1 == self.n_off { 0.0 } else { -1.0 + 2.0 * j as f64 / last })
            .collect()
    }

    pub fn directions(&self) -> Vec<Vec3> {
        sphere::fibonacci_hemisphere(self.n_dir)
    }
}

/// Members of a subfamily in a fixed order. On a degenerate grid every
/// subfamily consists of the boundary constants.
pub fn subfamily(kind: SubfamilyKind, grid: &GridResolution) -> Vec<PlaneFamilyIndex> {
    let index = |x: Vec3, lambda: f64| PlaneFamilyIndex::new(x, lambda).expect("grid members are valid");
    if grid.is_degenerate() {
        return grid
            .directions()
            .into_iter()
            .flat_map(|x| [index(x, -1.0), index(x, 1.0)])
            .collect();
    }
    match kind {
        SubfamilyKind::MeridianLoop => (0..grid.n_meridian)
            .map(|k| {
                let phi = std::f64::consts::PI * k as f64 / grid.n_meridian as f64;
                index(Vec3::new(phi.cos(), phi.sin(), 0.0), 0.0)
            })
            .collect(),
        SubfamilyKind::GreatCircles => grid.directions().into_iter().map(|x| index(x, 0.0)).collect(),
        SubfamilyKind::Full => {
            let offsets = grid.offsets();
            grid.directions()
                .into_iter()
                .flat_map(|x| offsets.iter().map(move |&l| (x, l)).collect::<Vec<_>>())
                .map(|(x, l)| index(x, l))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MemberResult {
    Finished(FlowOutcome),
    /// The run aborted, typically with an integrity error.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMember {
    pub index: PlaneFamilyIndex,
    pub result: MemberResult,
}

impl SweepMember {
    pub fn status(&self) -> &'static str {
        match &self.result {
            MemberResult::Finished(outcome) => outcome.status_name(),
            MemberResult::Failed(_) => "Failed",
        }
    }

    /// Contribution to the minmax estimate: `ℓ_γ`, zero after collapse, the
    /// current length when the budget ran out, nothing for failed runs.
    pub fn level(&self, spec: &MetricSpec) -> Option<f64> {
        match &self.result {
            MemberResult::Finished(outcome) => match &outcome.status {
                FlowStatus::BudgetExhausted { curve } => Some(curves::length(curve, spec)),
                _ => outcome.limit_length(),
            },
            MemberResult::Failed(_) => None,
        }
    }

    pub fn is_reliable(&self) -> bool {
        matches!(&self.result, MemberResult::Finished(o) if !matches!(o.status, FlowStatus::BudgetExhausted { .. }))
    }
}

/// Minmax estimates with the per-member outcomes behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct LSEstimates {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub grid: GridResolution,
    /// Every distinct member flowed, in grid order followed by the meridian
    /// loop.
    pub members: Vec<SweepMember>,
    /// Positions in `members` of each subfamily.
    pub supports: HashMap<SubfamilyKind, Vec<usize>>,
    /// Some member failed or ran out of time.
    pub unreliable: bool,
    pub degenerate: bool,
}

impl LSEstimates {
    pub fn values(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn subfamily_members(&self, kind: SubfamilyKind) -> impl Iterator<Item = &SweepMember> {
        self.supports[&kind].iter().map(|&i| &self.members[i])
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &FlowOutcome> {
        self.members.iter().filter_map(|m| match &m.result {
            MemberResult::Finished(o) => Some(o),
            MemberResult::Failed(_) => None,
        })
    }

    pub fn report(&self, spec: &MetricSpec) -> SweepReport {
        SweepReport {
            metric: spec.to_json(),
            grid: GridJson { n_dir: self.grid.n_dir, n_off: self.grid.n_off },
            members: self
                .members
                .iter()
                .map(|m| MemberJson {
                    x: m.index.x.into(),
                    lambda: m.index.lambda,
                    status: m.status().to_string(),
                    limit_length: m.level(spec),
                })
                .collect(),
            estimates: EstimatesJson { l1: self.l1, l2: self.l2, l3: self.l3 },
            reliable: !self.unreliable,
            degenerate: self.degenerate,
        }
    }
}

/// Flows every member of the three subfamilies and reduces to `ℓ̂₁ ≤ ℓ̂₂ ≤ ℓ̂₃`.
///
/// Supports are nested: the meridian loop, then the loop together with the
/// great circles, then everything. Members run in parallel on the current
/// rayon pool; the output does not depend on scheduling.
pub fn estimate_ls_values(spec: &MetricSpec, grid: &GridResolution, params: &FlowParams) -> Result<LSEstimates> {
    grid.validate()?;
    params.validate()?;

    let mut members: Vec<PlaneFamilyIndex> = Vec::new();
    let mut position: HashMap<[u64; 4], usize> = HashMap::new();
    let mut supports = HashMap::new();
    for kind in [SubfamilyKind::Full, SubfamilyKind::GreatCircles, SubfamilyKind::MeridianLoop] {
        let ids = subfamily(kind, grid)
            .into_iter()
            .map(|m| {
                *position.entry(m.key()).or_insert_with(|| {
                    members.push(m);
                    members.len() - 1
                })
            })
            .collect::<Vec<_>>();
        supports.insert(kind, ids);
    }

    let results: Vec<MemberResult> = members
        .par_iter()
        .map(|m| {
            let run = index_circle(m, params.n).and_then(|c| flow::evolve(&c, spec, params));
            match run {
                Ok(outcome) => MemberResult::Finished(outcome),
                Err(e) => MemberResult::Failed(e.to_string()),
            }
        })
        .collect();
    let members: Vec<SweepMember> = members
        .into_iter()
        .zip(results)
        .map(|(index, result)| SweepMember { index, result })
        .collect();

    let level = |ids: &[usize]| {
        ids.iter()
            .filter_map(|&i| members[i].level(spec))
            .fold(0.0, f64::max)
    };
    let l1 = level(&supports[&SubfamilyKind::MeridianLoop]);
    let l2 = l1.max(level(&supports[&SubfamilyKind::GreatCircles]));
    let l3 = l2.max(level(&supports[&SubfamilyKind::Full]));
    let unreliable = members.iter().any(|m| !m.is_reliable());
    Ok(LSEstimates { l1, l2, l3, grid: *grid, members, supports, unreliable, degenerate: grid.is_degenerate() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridJson {
    pub n_dir: usize,
    pub n_off: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberJson {
    pub x: [f64; 3],
    pub lambda: f64,
    pub status: String,
    pub limit_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatesJson {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

/// Sweep report `{metric, grid, members, estimates}` plus reliability flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub metric: MetricJson,
    pub grid: GridJson,
    pub members: Vec<MemberJson>,
    pub estimates: EstimatesJson,
    pub reliable: bool,
    pub degenerate: bool,
}

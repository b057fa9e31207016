//! Polyline loops on the unit sphere.
//!
//! A [`DiscreteCurve`] is a cyclic list of unit vectors joined by round
//! great-circle arcs, or a single point standing for a constant loop. All
//! quantities here are invariant under cyclic relabelling and reversal of
//! the vertex order, since the flow acts on unparametrized curves.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricSpec;
use crate::sphere::{self, angle, log_map, slerp};
use crate::Vec3;

/// Shortest edge accepted by the curvature stencil.
pub const MIN_EDGE: f64 = 1e-10;
/// Separation below which two non-adjacent segments are not classified.
pub const EMBED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    vertices: Vec<Vec3>,
    constant: bool,
}

/// Per-vertex discrete geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexGeometry {
    /// Half the g-length of the two incident edges.
    pub weight: f64,
    /// `κ ν`, tangent at the vertex; independent of orientation.
    pub curvature_normal: Vec3,
    /// g-norm of `curvature_normal`.
    pub curvature_magnitude: f64,
}

impl DiscreteCurve {
    pub fn new(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Precondition(format!(
                "a loop needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        for (i, p) in vertices.iter().enumerate() {
            if !sphere::is_unit(p) {
                return Err(Error::Precondition(format!("vertex {i} has norm {}", p.norm())));
            }
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::Precondition(format!("vertices {i} and {} coincide", (i + 1) % n)));
            }
        }
        Ok(Self { vertices, constant: false })
    }

    /// Normalizes every vertex before validating.
    pub fn from_points(points: Vec<Vec3>) -> Result<Self> {
        Self::new(points.into_iter().map(|p| p.normalize()).collect())
    }

    pub fn constant(point: Vec3) -> Result<Self> {
        if !sphere::is_unit(&point) {
            return Err(Error::Precondition(format!("constant point has norm {}", point.norm())));
        }
        Ok(Self { vertices: vec![point], constant: true })
    }

    pub(crate) fn from_unchecked(vertices: Vec<Vec3>) -> Self {
        Self { vertices, constant: false }
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self { vertices, constant: self.constant }
    }

    /// Applies `f` to every vertex.
    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            constant: self.constant,
        }
    }

    /// Normalized vertex mean; the location of a (nearly) collapsed curve.
    pub fn center(&self) -> Vec3 {
        let sum: Vec3 = self.vertices.iter().sum();
        if sum.norm() == 0.0 {
            return self.vertices[0];
        }
        sum.normalize()
    }

    /// Longest Euclidean chord between consecutive vertices.
    pub fn max_chord(&self) -> f64 {
        if self.constant {
            return 0.0;
        }
        self.edges().map(|(a, b)| (b - a).norm()).fold(0.0, f64::max)
    }

    /// Euclidean distance from `x` to the polyline (or to the point).
    pub fn distance_to(&self, x: &Vec3) -> f64 {
        if self.constant {
            return (x - self.vertices[0]).norm();
        }
        self.edges()
            .map(|(a, b)| sphere::point_segment_distance(x, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn edges(&self) -> impl Iterator<Item = (&Vec3, &Vec3)> {
        let n = self.vertices.len();
        (0..n).map(move |i| (&self.vertices[i], &self.vertices[(i + 1) % n]))
    }

    /// g-lengths of the edges, edge `i` joining vertices `i` and `i + 1`.
    pub fn edge_lengths(&self, spec: &MetricSpec) -> Vec<f64> {
        if self.constant {
            return Vec::new();
        }
        self.edges().map(|(a, b)| edge_length(spec, a, b)).collect()
    }

    /// `max / min` ratio of the g-lengths of the edges.
    pub fn edge_ratio(&self, spec: &MetricSpec) -> f64 {
        let lengths = self.edge_lengths(spec);
        let max = lengths.iter().copied().fold(0.0, f64::max);
        let min = lengths.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["index", "x", "y", "z"])?;
        for (i, p) in self.vertices.iter().enumerate() {
            out.write_record(&[i.to_string(), format!("{:?}", p.x), format!("{:?}", p.y), format!("{:?}", p.z)])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads `index,x,y,z` rows; one row is a constant curve.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let headers = input.headers()?.clone();
        let expected = ["index", "x", "y", "z"];
        if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h.trim() != e) {
            return Err(Error::Precondition(format!("expected header index,x,y,z, got {headers:?}")));
        }
        let mut rows: Vec<CsvRow> = Vec::new();
        for record in input.deserialize() {
            rows.push(record?);
        }
        rows.sort_by_key(|r| r.index);
        let points: Vec<Vec3> = rows.iter().map(|r| Vec3::new(r.x, r.y, r.z)).collect();
        match points.len() {
            0 => Err(Error::Precondition("curve file has no vertices".into())),
            1 => Self::constant(points[0]),
            _ => Self::new(points),
        }
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Input {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::read_csv(file).map_err(|e| Error::Input {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    index: usize,
    x: f64,
    y: f64,
    z: f64,
}

/// g-length of the great-circle arc from `a` to `b` by the midpoint rule.
#[inline]
pub fn edge_length(spec: &MetricSpec, a: &Vec3, b: &Vec3) -> f64 {
    let chord = b - a;
    let c = chord.norm();
    if c == 0.0 {
        return 0.0;
    }
    let mid = (a + b).normalize();
    angle(a, b) * spec.norm(&mid, &(chord / c))
}

/// Total g-length; zero for constant curves.
pub fn length(curve: &DiscreteCurve, spec: &MetricSpec) -> f64 {
    curve.edge_lengths(spec).iter().sum()
}

/// Discrete `κ ν` at every vertex from a three-point covariant stencil.
///
/// In round normal coordinates at each vertex the neighbours sit at
/// `log_p(p±)`; a non-uniform second difference with respect to g-arclength
/// gives the round covariant derivative, and subtracting the covariant
/// acceleration converts it to the Levi-Civita derivative of `g`.
pub fn curvature_field(curve: &DiscreteCurve, spec: &MetricSpec) -> Result<Vec<VertexGeometry>> {
    if curve.is_constant() {
        return Err(Error::Precondition("curvature of a constant curve".into()));
    }
    let n = curve.len();
    if n < 8 {
        return Err(Error::Precondition(format!("curvature stencil needs n >= 8, got {n}")));
    }
    let lengths = curve.edge_lengths(spec);
    if let Some((edge, &length)) = lengths.iter().enumerate().find(|(_, l)| **l < MIN_EDGE) {
        return Err(Error::DegenerateCurve { edge, length });
    }
    let v = curve.vertices();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        let p = &v[i];
        let s_minus = lengths[prev];
        let s_plus = lengths[i];
        let u_plus = log_map(p, &v[next]);
        let u_minus = log_map(p, &v[prev]);
        let span = s_plus + s_minus;
        let round_second = (u_plus / s_plus + u_minus / s_minus) * (2.0 / span);
        let raw_tangent = (u_plus * (s_minus / s_plus) - u_minus * (s_plus / s_minus)) / span;
        let tangent = raw_tangent / spec.norm(p, &raw_tangent);
        let second = round_second - spec.acceleration(p, &tangent);
        let kn = second - tangent * spec.inner(p, &second, &tangent);
        out.push(VertexGeometry {
            weight: 0.5 * span,
            curvature_normal: kn,
            curvature_magnitude: spec.norm(p, &kn),
        });
    }
    Ok(out)
}

/// Resamples to `n` vertices equally spaced in g-arclength along the
/// piecewise great-circle curve, keeping vertex 0.
pub fn resample(curve: &DiscreteCurve, spec: &MetricSpec, n: usize) -> Result<DiscreteCurve> {
    if n < 8 {
        return Err(Error::Parameter(format!("resample needs n >= 8, got {n}")));
    }
    if curve.is_constant() {
        return Err(Error::Precondition("cannot resample a constant curve".into()));
    }
    let v = curve.vertices();
    let m = v.len();
    let lengths = curve.edge_lengths(spec);
    let total: f64 = lengths.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Precondition("curve has zero length".into()));
    }
    let spacing = total / n as f64;
    let mut out = Vec::with_capacity(n);
    out.push(v[0]);
    let mut edge = 0;
    let mut start = 0.0;
    for k in 1..n {
        let target = spacing * k as f64;
        while edge < m - 1 && start + lengths[edge] < target {
            start += lengths[edge];
            edge += 1;
        }
        let f = ((target - start) / lengths[edge]).clamp(0.0, 1.0);
        out.push(slerp(&v[edge], &v[(edge + 1) % m], f));
    }
    out.dedup();
    if out.len() < 3 || out.first() == out.last() {
        return Err(Error::DegenerateCurve { edge: 0, length: spacing });
    }
    Ok(DiscreteCurve::from_unchecked(out))
}

/// True iff no two non-adjacent arcs intersect.
///
/// Candidate pairs come from a sweep over padded bounding boxes; each pair
/// is decided by orientation tests after a gnomonic projection centred on
/// the pair, which maps both arcs to straight segments.
pub fn is_embedded(curve: &DiscreteCurve) -> Result<bool> {
    if curve.is_constant() {
        return Ok(true);
    }
    let v = curve.vertices();
    let n = v.len();
    if n < 4 {
        return Ok(true);
    }
    struct Segment {
        index: usize,
        lo: Vec3,
        hi: Vec3,
    }
    let mut segments: Vec<Segment> = (0..n)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            let theta = angle(&a, &b);
            let pad = theta * theta / 8.0 + 2.0 * EMBED_TOL;
            Segment {
                index: i,
                lo: a.inf(&b).add_scalar(-pad),
                hi: a.sup(&b).add_scalar(pad),
            }
        })
        .collect();
    segments.sort_by(|a, b| a.lo.x.total_cmp(&b.lo.x).then(a.index.cmp(&b.index)));

    let mut active: Vec<usize> = Vec::new();
    let mut ambiguous: Option<Error> = None;
    for (k, seg) in segments.iter().enumerate() {
        active.retain(|&j| segments[j].hi.x >= seg.lo.x);
        for &j in &active {
            let other = &segments[j];
            if other.hi.y < seg.lo.y || seg.hi.y < other.lo.y || other.hi.z < seg.lo.z || seg.hi.z < other.lo.z {
                continue;
            }
            let (i1, i2) = (seg.index.min(other.index), seg.index.max(other.index));
            if i2 - i1 <= 1 || (i1 == 0 && i2 == n - 1) {
                continue;
            }
            match classify_pair(&v[i1], &v[(i1 + 1) % n], &v[i2], &v[(i2 + 1) % n]) {
                PairRelation::Disjoint => {}
                PairRelation::Crossing => return Ok(false),
                PairRelation::Ambiguous(distance) => {
                    if ambiguous.is_none() {
                        ambiguous = Some(Error::AmbiguousEmbedding { first: i1, second: i2, distance });
                    }
                }
            }
        }
        active.push(k);
    }
    match ambiguous {
        Some(err) => Err(err),
        None => Ok(true),
    }
}

enum PairRelation {
    Disjoint,
    Crossing,
    Ambiguous(f64),
}

fn classify_pair(a1: &Vec3, a2: &Vec3, b1: &Vec3, b2: &Vec3) -> PairRelation {
    let sum = a1 + a2 + b1 + b2;
    if sum.norm() < 1e-12 {
        return PairRelation::Disjoint;
    }
    let c = sum.normalize();
    let pts = [a1, a2, b1, b2];
    if pts.iter().any(|p| p.dot(&c) <= 1e-6) {
        // not within one open hemisphere; such arcs are far apart
        return PairRelation::Disjoint;
    }
    let (e1, e2) = sphere::orthonormal_pair(&c);
    let project = |p: &Vec3| {
        let s = p / p.dot(&c);
        [s.dot(&e1), s.dot(&e2)]
    };
    let [pa1, pa2, pb1, pb2] = pts.map(project);
    let orient = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let len = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let la = len(pa1, pa2);
    let lb = len(pb1, pb2);
    let d1 = orient(pa1, pa2, pb1) / la;
    let d2 = orient(pa1, pa2, pb2) / la;
    let d3 = orient(pb1, pb2, pa1) / lb;
    let d4 = orient(pb1, pb2, pa2) / lb;
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        let margin = d1.abs().min(d2.abs()).min(d3.abs()).min(d4.abs());
        return if margin > EMBED_TOL {
            PairRelation::Crossing
        } else {
            PairRelation::Ambiguous(0.0)
        };
    }
    let distance = segment_distance_2d(pa1, pa2, pb1)
        .min(segment_distance_2d(pa1, pa2, pb2))
        .min(segment_distance_2d(pb1, pb2, pa1))
        .min(segment_distance_2d(pb1, pb2, pa2));
    if distance < EMBED_TOL {
        PairRelation::Ambiguous(distance)
    } else {
        PairRelation::Disjoint
    }
}

fn segment_distance_2d(a: [f64; 2], b: [f64; 2], x: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    ((x[0] - a[0] - t * d[0]).powi(2) + (x[1] - a[1] - t * d[1]).powi(2)).sqrt()
}

/// Latitude circle at polar angle `theta`, `n` uniform vertices.
pub fn latitude_circle(theta: f64, n: usize) -> Result<DiscreteCurve> {
    let (s, c) = theta.sin_cos();
    DiscreteCurve::new(
        (0..n)
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Vec3::new(s * phi.cos(), s * phi.sin(), c)
            })
            .collect(),
    )
}

/// Great circle orthogonal to the unit vector `normal`.
pub fn great_circle(normal: &Vec3, n: usize) -> Result<DiscreteCurve> {
    let (e1, e2) = sphere::orthonormal_pair(normal);
    DiscreteCurve::new(
        (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (e1 * t.cos() + e2 * t.sin()).normalize()
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricSpec;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn round() -> MetricSpec {
        MetricSpec::round(1.0).unwrap()
    }

    #[test]
    fn lengths_of_reference_circles() {
        let eq = latitude_circle(PI / 2.0, 512).unwrap();
        assert!((length(&eq, &round()) - 2.0 * PI).abs() < 1e-4);
        let lat = latitude_circle(PI / 3.0, 512).unwrap();
        assert!((length(&lat, &round()) - 2.0 * PI * (PI / 3.0).sin()).abs() < 1e-4);
        let ell = MetricSpec::ellipsoid(0.5).unwrap();
        assert!((length(&eq, &ell) - 2.0 * PI).abs() < 1e-4);
        let c = DiscreteCurve::constant(Vec3::x()).unwrap();
        assert_eq!(length(&c, &round()), 0.0);
    }

    #[test]
    fn construction_errors() {
        assert!(DiscreteCurve::new(vec![Vec3::x(), Vec3::y()]).is_err());
        assert!(DiscreteCurve::new(vec![Vec3::x(), Vec3::y(), Vec3::new(0.0, 0.0, 2.0)]).is_err());
        assert!(DiscreteCurve::new(vec![Vec3::x(), Vec3::x(), Vec3::y()]).is_err());
    }

    #[test]
    fn great_circle_has_no_curvature() {
        let gc = great_circle(&Vec3::new(0.2, 0.5, 0.8).normalize(), 512).unwrap();
        let geo = curvature_field(&gc, &round()).unwrap();
        assert!(geo.iter().all(|g| g.curvature_magnitude <= 1e-3));
    }

    #[test]
    fn latitude_curvature_matches_cot() {
        for theta in [0.3, PI / 4.0, 1.2] {
            let lat = latitude_circle(theta, 512).unwrap();
            let expected = 1.0 / theta.tan();
            for g in curvature_field(&lat, &round()).unwrap() {
                assert!((g.curvature_magnitude - expected).abs() <= 0.01 * expected);
                // points towards the pole
                assert!(g.curvature_normal.z > 0.0);
            }
        }
    }

    #[test]
    fn curvature_is_orientation_independent() {
        let spec = MetricSpec::zoll_cubic(0.3).unwrap();
        let curve = DiscreteCurve::from_points(
            (0..200)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / 200.0;
                    Vec3::new(t.cos(), 0.7 * t.sin(), 0.3 + 0.1 * (3.0 * t).cos())
                })
                .collect(),
        )
        .unwrap();
        let fwd = curvature_field(&curve, &spec).unwrap();
        let mut bwd = curvature_field(&curve.reversed(), &spec).unwrap();
        bwd.reverse();
        for (a, b) in fwd.iter().zip(&bwd) {
            assert!((a.curvature_normal - b.curvature_normal).norm() <= 1e-12);
        }
    }

    #[test]
    fn curvature_is_tangent_and_normal() {
        let spec = MetricSpec::ellipsoid(0.7).unwrap();
        let curve = latitude_circle(1.0, 128).unwrap().map(|p| sphere::rotate_about(p, &Vec3::x(), 0.4));
        let geo = curvature_field(&curve, &spec).unwrap();
        let v = curve.vertices();
        let h = curve.edge_lengths(&spec);
        let n = v.len();
        for i in 0..n {
            let p = v[i];
            let (hm, hp) = (h[(i + n - 1) % n], h[i]);
            let t = sphere::log_map(&p, &v[(i + 1) % n]) * (hm / hp) - sphere::log_map(&p, &v[(i + n - 1) % n]) * (hp / hm);
            let kn = geo[i].curvature_normal;
            assert!(kn.dot(&p).abs() < 1e-12);
            let rel = spec.inner(&p, &kn, &t) / (spec.norm(&p, &kn) * spec.norm(&p, &t));
            assert!(rel.abs() < 1e-6, "relative g-angle defect {rel:e}");
        }
    }

    #[test]
    fn degenerate_and_small_curves_are_rejected() {
        let mut pts: Vec<Vec3> = latitude_circle(1.0, 16).unwrap().vertices().to_vec();
        pts[3] = (pts[2] + Vec3::new(1e-12, 0.0, 0.0)).normalize();
        let curve = DiscreteCurve::new(pts).unwrap();
        assert!(matches!(curvature_field(&curve, &round()), Err(Error::DegenerateCurve { .. })));
        let small = latitude_circle(1.0, 6).unwrap();
        assert!(curvature_field(&small, &round()).is_err());
        assert!(matches!(resample(&small, &round(), 4), Err(Error::Parameter(_))));
    }

    #[test]
    fn resample_preserves_length_and_is_idempotent() {
        let gc = great_circle(&Vec3::new(0.1, 0.2, 0.9).normalize(), 512).unwrap();
        let r = resample(&gc, &round(), 256).unwrap();
        assert_eq!(r.len(), 256);
        assert!((length(&r, &round()) - 2.0 * PI).abs() < 1e-3);

        let lat = latitude_circle(1.1, 300).unwrap();
        let again = resample(&lat, &round(), 300).unwrap();
        let worst = lat
            .vertices()
            .iter()
            .zip(again.vertices())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "displacement {worst:e}");
    }

    #[test]
    fn resample_length_converges_for_large_n() {
        let spec = MetricSpec::zoll_cubic(0.3).unwrap();
        let fine = latitude_circle(0.9, 4096).unwrap().map(|p| sphere::rotate_about(p, &Vec3::y(), 0.5));
        let reference = length(&fine, &spec);
        let coarse = resample(&fine, &spec, 256).unwrap();
        assert!((length(&coarse, &spec) - reference).abs() / reference < 1e-4);
    }

    #[test]
    fn resample_equalizes_nonuniform_curve() {
        // Ellipse projected to the sphere, sampled with strongly clustered
        // parameters.
        let pts: Vec<Vec3> = (0..400)
            .map(|k| {
                let s = k as f64 / 400.0;
                let t = 2.0 * PI * (s + 0.15 * (2.0 * PI * s).sin());
                Vec3::new(0.9 * t.cos(), 0.4 * t.sin(), 0.5)
            })
            .collect();
        let curve = DiscreteCurve::from_points(pts).unwrap();
        assert!(curve.edge_ratio(&round()) > 3.0);
        let r = resample(&curve, &round(), 256).unwrap();
        assert!(r.edge_ratio(&round()) <= 1.01, "ratio {}", r.edge_ratio(&round()));
    }

    fn figure_eight(n: usize) -> DiscreteCurve {
        // Lemniscate in the tangent plane at the north pole; the crossing at
        // the origin falls in the middle of two segments for odd n / 2.
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                let x = 0.5 * t.sin();
                let y = 0.25 * (2.0 * t).sin();
                Vec3::new(x, y, 1.0)
            })
            .collect();
        DiscreteCurve::from_points(pts).unwrap()
    }

    #[test]
    fn embeddedness() {
        for theta in [0.2, 1.0, PI / 2.0, 2.5] {
            assert!(is_embedded(&latitude_circle(theta, 200).unwrap()).unwrap());
        }
        assert!(!is_embedded(&figure_eight(64)).unwrap());
    }

    #[test]
    fn near_touching_segments_are_ambiguous() {
        // A thin hairpin whose two long sides pass within 1e-12.
        let gap = 1e-12;
        let mut pts = Vec::new();
        for k in 0..10 {
            pts.push(Vec3::new(0.1 * k as f64 / 9.0 - 0.05, 0.0, 1.0));
        }
        pts.push(Vec3::new(0.06, 0.02, 1.0));
        pts.push(Vec3::new(0.0, gap, 1.0));
        pts.push(Vec3::new(-0.06, 0.02, 1.0));
        let curve = DiscreteCurve::from_points(pts).unwrap();
        assert!(matches!(is_embedded(&curve), Err(Error::AmbiguousEmbedding { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let lat = latitude_circle(0.8, 32).unwrap();
        let mut buf = Vec::new();
        lat.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,x,y,z\n"));
        let back = DiscreteCurve::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, lat);
        let single = DiscreteCurve::read_csv("index,x,y,z\n0,0,0,1\n".as_bytes()).unwrap();
        assert!(single.is_constant());
        assert!(DiscreteCurve::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn embedding_survives_resampling(theta in 0.3f64..2.8, tilt in 0.0f64..PI, n in 64usize..200) {
            let curve = latitude_circle(theta, n).unwrap().map(|p| sphere::rotate_about(p, &Vec3::x(), tilt));
            let spec = round();
            prop_assert!(is_embedded(&curve).unwrap());
            let r = resample(&curve, &spec, 96).unwrap();
            prop_assert!(is_embedded(&r).unwrap());
        }

        #[test]
        fn length_is_invariant_under_relabelling(shift in 0usize..50, theta in 0.3f64..2.8) {
            let spec = MetricSpec::ellipsoid(0.6).unwrap();
            let curve = latitude_circle(theta, 50).unwrap().map(|p| sphere::rotate_about(p, &Vec3::y(), 0.7));
            let mut pts = curve.vertices().to_vec();
            pts.rotate_left(shift);
            let shifted = DiscreteCurve::new(pts).unwrap();
            prop_assert!((length(&shifted, &spec) - length(&curve, &spec)).abs() < 1e-12);
            prop_assert!((length(&curve.reversed(), &spec) - length(&curve, &spec)).abs() < 1e-12);
        }
    }
}

//! Polygonal curves in the plane and in space.
//!
//! A [`Polyline`] stores its vertices once; for closed curves the closing edge
//! from the last vertex back to the first is implicit. Curves are immutable:
//! every transform returns a new value. The arclength parameter `t` runs over
//! `[0, L]` and is the constant-speed parameterization of the polygon.
//!
//! Heights are always recomputed from coordinates. Along an edge the height is
//! the norm of the linear interpolant, never an interpolation of vertex norms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{Mat3, Point, Vec2, Vec3};

/// Default absolute tolerance for geometric predicates.
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline<P> {
    points: Vec<P>,
    closed: bool,
}

pub type Curve3 = Polyline<Vec3>;
pub type Curve2 = Polyline<Vec2>;

/// Result of [`Polyline::resample_constant_speed`].
#[derive(Clone, Debug)]
pub struct Resampled<P> {
    pub curve: Polyline<P>,
    /// New length minus old length; never positive.
    pub length_change: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeightSample {
    pub t: f64,
    pub height: f64,
}

/// Radial angle at a parameter value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaSample {
    pub alpha: f64,
    /// `t` fell on a vertex; `alpha` is then taken from the forward edge
    /// (backward edge at the end of an open curve).
    pub at_vertex: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledState<P> {
    pub t: f64,
    pub position: P,
    pub height: f64,
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangentFeasibility {
    pub feasible: bool,
    /// Minimum over edges of the distance from the origin to the edge's line.
    pub worst_line_distance: f64,
    pub worst_edge: usize,
}

impl<P: Point> Polyline<P> {
    /// Validates and builds a curve.
    ///
    /// Requires at least 2 points (3 if closed), finite coordinates, and
    /// distinct consecutive points, including the implicit closing pair.
    pub fn new(points: Vec<P>, closed: bool) -> Result<Self> {
        let min = if closed { 3 } else { 2 };
        if points.len() < min {
            return Err(Error::DegenerateCurve(format!(
                "{} points given, at least {min} required",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::DegenerateCurve(format!("point {i} is not finite")));
        }
        let curve = Self { points, closed };
        for i in 0..curve.edge_count() {
            let (a, b) = curve.edge(i);
            if a == b {
                return Err(Error::DegenerateCurve(format!(
                    "points {i} and {} coincide",
                    (i + 1) % curve.points.len()
                )));
            }
        }
        Ok(curve)
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    pub fn edge_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    pub fn edge(&self, i: usize) -> (P, P) {
        let n = self.points.len();
        (self.points[i], self.points[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (P, P)> + '_ {
        (0..self.edge_count()).map(move |i| self.edge(i))
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edges().map(|(a, b)| (b - a).norm()).collect()
    }

    pub fn length(&self) -> f64 {
        self.edges().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Arclength at the start of every edge plus the total length at the end
    /// (`edge_count() + 1` entries).
    pub fn vertex_params(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.edge_count() + 1);
        out.push(0.0);
        for (a, b) in self.edges() {
            acc += (b - a).norm();
            out.push(acc);
        }
        out
    }

    /// Edge index and local fraction in `[0, 1]` for arclength `t`.
    fn locate_in(params: &[f64], t: f64) -> (usize, f64) {
        let edges = params.len() - 1;
        let t = t.clamp(0.0, params[edges]);
        // first index whose start exceeds t, minus one
        let k = params.partition_point(|&s| s <= t).saturating_sub(1).min(edges - 1);
        let len = params[k + 1] - params[k];
        (k, ((t - params[k]) / len).clamp(0.0, 1.0))
    }

    pub fn point_at(&self, t: f64) -> P {
        let params = self.vertex_params();
        let (k, u) = Self::locate_in(&params, t);
        let (a, b) = self.edge(k);
        if u == 0.0 {
            a
        } else {
            a.lerp(b, u)
        }
    }

    /// `n` points equally spaced in arclength along this polyline.
    ///
    /// Closed curves get spacing `L / n`; open curves keep both endpoints and
    /// get spacing `L / (n - 1)`. Vertices that fall on a sample are kept
    /// exactly, so the length only drops where corners are cut.
    pub fn resample_constant_speed(&self, n: usize) -> Result<Resampled<P>> {
        let min = if self.closed { 3 } else { 2 };
        if n < min {
            return Err(Error::InvalidArgument(format!(
                "resampling to {n} points (need at least {min})"
            )));
        }
        let params = self.vertex_params();
        let total = params[params.len() - 1];
        let spacing = if self.closed {
            total / n as f64
        } else {
            total / (n - 1) as f64
        };
        let mut pts = Vec::with_capacity(n);
        for k in 0..n {
            if !self.closed && k == n - 1 {
                pts.push(*self.points.last().unwrap());
                continue;
            }
            let (e, u) = Self::locate_in(&params, k as f64 * spacing);
            let (a, b) = self.edge(e);
            pts.push(if u == 0.0 { a } else { a.lerp(b, u) });
        }
        let curve = Polyline::new(pts, self.closed)?;
        let length_change = (curve.length() - total).min(0.0);
        Ok(Resampled {
            curve,
            length_change,
        })
    }

    /// Height at every vertex, with the closing vertex repeated at `t = L`
    /// for closed curves.
    pub fn height_profile(&self) -> Vec<HeightSample> {
        let params = self.vertex_params();
        let n = self.points.len();
        params
            .iter()
            .enumerate()
            .map(|(i, &t)| HeightSample {
                t,
                height: self.points[i % n].norm(),
            })
            .collect()
    }

    pub fn height_at(&self, t: f64) -> f64 {
        self.point_at(t).norm()
    }

    /// Angle between position and forward tangent at arclength `t`.
    pub fn alpha_at(&self, t: f64) -> Result<AlphaSample> {
        let params = self.vertex_params();
        let total = params[params.len() - 1];
        let (mut k, u) = Self::locate_in(&params, t);
        let at_vertex = u == 0.0 || u == 1.0;
        if u == 1.0 && k + 1 < self.edge_count() {
            k += 1;
        } else if u == 1.0 && self.closed && (t - total).abs() == 0.0 {
            k = 0;
        }
        let (a, b) = self.edge(k);
        let pos = self.point_at(t);
        let h = pos.norm();
        if h <= f64::MIN_POSITIVE {
            return Err(Error::InvalidArgument(format!("zero height at t = {t}")));
        }
        Ok(AlphaSample {
            alpha: pos.angle_to(b - a),
            at_vertex,
        })
    }

    pub fn sample_state(&self, t: f64) -> Result<SampledState<P>> {
        let a = self.alpha_at(t)?;
        let position = self.point_at(t);
        Ok(SampledState {
            t,
            position,
            height: position.norm(),
            alpha: a.alpha,
        })
    }

    /// Turning angle at vertex `i` (0 for collinear edges), or `None` at the
    /// ends of an open curve.
    pub fn corner_angle(&self, i: usize) -> Option<f64> {
        let n = self.points.len();
        if !self.closed && (i == 0 || i + 1 >= n) {
            return None;
        }
        let prev = self.points[(i + n - 1) % n];
        let here = self.points[i];
        let next = self.points[(i + 1) % n];
        Some((here - prev).angle_to(next - here))
    }

    /// Checks that every edge's infinite line stays at distance `>= 1 - tol`
    /// from the origin.
    pub fn validate_tangent_feasibility(&self, tol: f64) -> TangentFeasibility {
        let (worst_edge, worst) = self
            .edges()
            .map(|(a, b)| a.line_distance_from_origin(b))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
        TangentFeasibility {
            feasible: worst >= 1.0 - tol,
            worst_line_distance: worst,
            worst_edge,
        }
    }

    pub fn min_vertex_height(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_vertex_height(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Smallest distance from the origin to any point of the polyline.
    pub fn min_height(&self) -> f64 {
        self.edges()
            .map(|(a, b)| a.segment_closest_to_origin(b).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn map<F: Fn(P) -> P>(&self, f: F) -> Result<Self> {
        Self::new(self.points.iter().map(|&p| f(p)).collect(), self.closed)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        self.map(|p| p * s)
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self {
            points,
            closed: self.closed,
        }
    }

    /// Closed curve with vertex `k` moved to the front (a parameter shift).
    pub fn shifted(&self, k: usize) -> Self {
        let mut points = self.points.clone();
        if self.closed {
            points.rotate_left(k % self.points.len());
        }
        Self {
            points,
            closed: self.closed,
        }
    }

    /// Index of a vertex of least height (first one on ties).
    pub fn min_height_vertex(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.points.iter().enumerate() {
            if p.norm() < self.points[best].norm() {
                best = i;
            }
        }
        best
    }

    /// Open curve tracing the same polygon, with the closing vertex appended.
    pub fn opened(&self) -> Self {
        let mut points = self.points.clone();
        if self.closed {
            points.push(self.points[0]);
        }
        Self {
            points,
            closed: false,
        }
    }

    /// Sub-curve made of edges `first..first + count` (indices wrap on closed
    /// curves). The result is open.
    pub fn sub_curve(&self, first: usize, count: usize) -> Result<Self> {
        let n = self.points.len();
        let pts = (0..=count).map(|j| self.points[(first + j) % n]).collect();
        Self::new(pts, false)
    }

    /// JSON text with 17 significant digits per coordinate.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{{\n  \"closed\": {},\n  \"points\": [", self.closed);
        for (i, p) in self.points.iter().enumerate() {
            let coords: Vec<String> = p.coords().iter().map(|c| format!("{c:.16e}")).collect();
            let sep = if i + 1 == self.points.len() { "" } else { "," };
            let _ = writeln!(s, "    [{}]{sep}", coords.join(", "));
        }
        s.push_str("  ]\n}\n");
        s
    }

    /// Strict JSON parsing: `closed` and `points` are both required, unknown
    /// keys are rejected, and every point must have exactly `P::DIM` finite
    /// coordinates.
    pub fn from_json(text: &str) -> Result<Self> {
        RawCurve::parse(text)?.into_curve(text)
    }
}

impl<P: Point> Serialize for Polyline<P> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawCurve {
            closed: self.closed,
            points: self.points.iter().map(|p| p.coords()).collect(),
        }
        .serialize(s)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    closed: bool,
    points: Vec<Vec<f64>>,
}

impl RawCurve {
    fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Semantic checks report the line on which the offending point starts.
    fn into_curve<P: Point>(self, text: &str) -> Result<Polyline<P>> {
        let lines = point_lines(text);
        let at = |i: usize| lines.get(i).map_or(String::new(), |l| format!(" at line {l}"));
        let mut pts = Vec::with_capacity(self.points.len());
        for (i, c) in self.points.iter().enumerate() {
            let p = P::from_coords(c).ok_or_else(|| {
                Error::Parse(format!(
                    "point {i}{} has {} coordinates, expected {}",
                    at(i),
                    c.len(),
                    P::DIM
                ))
            })?;
            if !p.is_finite() {
                return Err(Error::Parse(format!("point {i}{} is not finite", at(i))));
            }
            pts.push(p);
        }
        let n = pts.len();
        let pairs = if self.closed { n } else { n.saturating_sub(1) };
        for i in 0..pairs {
            let j = (i + 1) % n;
            if n > 1 && pts[i] == pts[j] {
                return Err(Error::Parse(format!("point {j}{} repeats point {i}", at(j))));
            }
        }
        Polyline::new(pts, self.closed).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// 1-based line on which each element of the `points` array starts.
fn point_lines(text: &str) -> Vec<usize> {
    let Some(start) = text.find("\"points\"") else {
        return Vec::new();
    };
    let mut line = 1 + text[..start].matches('\n').count();
    let mut depth = 0;
    let mut out = Vec::new();
    for ch in text[start..].chars() {
        match ch {
            '\n' => line += 1,
            '[' => {
                depth += 1;
                if depth == 2 {
                    out.push(line);
                }
            }
            ']' => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            _ => {}
        }
    }
    out
}

/// A curve read from JSON whose dimension is decided by the file.
#[derive(Clone, Debug)]
pub enum AnyCurve {
    Planar(Curve2),
    Spatial(Curve3),
}

impl AnyCurve {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw = RawCurve::parse(text)?;
        match raw.points.first().map(Vec::len) {
            Some(2) => raw.into_curve(text).map(AnyCurve::Planar),
            _ => raw.into_curve(text).map(AnyCurve::Spatial),
        }
    }
}

impl Curve3 {
    pub fn rotated(&self, r: &Mat3) -> Result<Self> {
        self.map(|p| r.apply(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn square() -> Curve3 {
        Curve3::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            true,
        )
        .unwrap()
    }

    #[test]
    fn constructor_rejects_degenerate_input() {
        let p = Vec3::new(1.0, 0.0, 0.0);
        assert!(Curve3::new(vec![p, p], false).is_err());
        assert!(Curve3::new(vec![p, Vec3::new(2.0, 0.0, 0.0)], true).is_err());
        assert!(Curve3::new(vec![p, Vec3::new(2.0, 0.0, 0.0), p], true).is_err());
        assert!(Curve3::new(vec![p, Vec3::new(f64::NAN, 0.0, 0.0)], false).is_err());
    }

    #[test]
    fn square_resamples_onto_itself() {
        let r = square().resample_constant_speed(8).unwrap();
        assert_eq!(r.curve.vertex_count(), 8);
        assert_eq!(r.curve.length(), 4.0);
        assert_eq!(r.length_change, 0.0);
        for w in r.curve.edge_lengths() {
            assert!((w - 0.5).abs() < 1e-15);
        }
        assert_eq!(r.curve.points()[2], Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn open_segment_resample_hits_midpoint() {
        let c = Curve3::new(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)], false).unwrap();
        let r = c.resample_constant_speed(3).unwrap().curve;
        let xs: Vec<f64> = r.points().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert!(c.resample_constant_speed(1).is_err());
    }

    #[test]
    fn heights_follow_the_interpolant() {
        let c = Curve3::new(vec![Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 2.0, 0.0)], false).unwrap();
        let prof = c.height_profile();
        assert_eq!(prof.len(), 2);
        assert!((prof[0].height - 2.0).abs() < 1e-15 && (prof[1].height - 2.0).abs() < 1e-15);
        let mid = c.height_at(c.length() / 2.0);
        assert!((mid - SQRT_2).abs() < 1e-15);
        assert!((c.min_height() - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn circle_has_constant_vertex_height() {
        let n = 64;
        let pts = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                Vec3::new(SQRT_2 * a.cos(), SQRT_2 * a.sin(), 0.0)
            })
            .collect();
        let c = Curve3::new(pts, true).unwrap();
        for s in c.height_profile() {
            assert!((s.height - SQRT_2).abs() < 1e-12 * SQRT_2);
        }
    }

    #[test]
    fn alpha_examples() {
        let radial = Curve3::new(vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)], false).unwrap();
        assert!(radial.alpha_at(0.37).unwrap().alpha.abs() < 1e-15);

        let ortho = Curve3::new(vec![Vec3::new(SQRT_2, 0.0, 0.0), Vec3::new(SQRT_2, 1.0, 0.0)], false).unwrap();
        let a = ortho.alpha_at(0.0).unwrap();
        assert!(a.at_vertex);
        assert!((a.alpha - PI / 2.0).abs() < 1e-15);

        // edge (1,0,0)-(1,1,0) at its midpoint: cos(alpha) = (1/2) / (sqrt(5)/2)
        let c = Curve3::new(vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0)], false).unwrap();
        let a = c.alpha_at(0.5).unwrap();
        assert!(!a.at_vertex);
        assert!((a.alpha - (1.0 / 5f64.sqrt()).acos()).abs() < 1e-15);

        let through = Curve3::new(vec![Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)], false).unwrap();
        assert!(through.alpha_at(1.0).is_err());
    }

    #[test]
    fn alpha_at_end_of_open_curve_uses_last_edge() {
        let c = Curve3::new(
            vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0), Vec3::new(2.0, 1.0, 0.0)],
            false,
        )
        .unwrap();
        let end = c.alpha_at(c.length()).unwrap();
        assert!(end.at_vertex);
        let expect = Vec3::new(2.0, 1.0, 0.0).angle_to(Vec3::new(1.0, 0.0, 0.0));
        assert!((end.alpha - expect).abs() < 1e-15);
        // at the middle vertex the forward edge wins
        let mid = c.alpha_at(1.0).unwrap();
        assert!(mid.at_vertex);
        assert!((mid.alpha - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn corner_angles() {
        let sq = square();
        for i in 0..4 {
            assert!((sq.corner_angle(i).unwrap() - PI / 2.0).abs() < 1e-15);
        }
        let open = sq.opened();
        assert!(open.corner_angle(0).is_none());
    }

    #[test]
    fn tangent_feasibility_examples() {
        let c = Curve3::new(vec![Vec3::new(SQRT_2, 0.0, 0.0), Vec3::new(0.0, SQRT_2, 0.0)], false).unwrap();
        let r = c.validate_tangent_feasibility(0.0);
        assert!(r.feasible, "{r:?}");
        assert!((r.worst_line_distance - 1.0).abs() < 1e-15);

        let bad = Curve3::new(vec![Vec3::new(2.0, 0.0, 0.0), Vec3::new(-2.0, 0.1, 0.0)], false).unwrap();
        let r = bad.validate_tangent_feasibility(GEOM_TOL);
        // distance = |cross| / |d| = 0.2 / sqrt(16.01)
        assert!(!r.feasible);
        assert!((r.worst_line_distance - 0.2 / 16.01f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let c = Curve3::new(
            vec![
                Vec3::new(0.1, 1.0 / 3.0, -2.5e-7),
                Vec3::new(PI, SQRT_2, 1e300),
                Vec3::new(-0.0, 5e-324, 7.0),
            ],
            true,
        )
        .unwrap();
        let back = Curve3::from_json(&c.to_json()).unwrap();
        for (a, b) in c.points().iter().zip(back.points()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
            assert_eq!(a.z.to_bits(), b.z.to_bits());
        }
    }

    #[test]
    fn json_parsing_is_strict() {
        assert!(Curve3::from_json(r#"{"points": [[0,0,1],[1,0,0]]}"#).is_err());
        assert!(Curve3::from_json(r#"{"closed": false}"#).is_err());
        assert!(Curve3::from_json(r#"{"closed": false, "points": [[0,0,1],[1,0,0]], "x": 1}"#).is_err());
        assert!(Curve3::from_json(r#"{"closed": false, "points": [[0,0,1],[1,0]]}"#).is_err());
        assert!(Curve3::from_json(r#"{"closed": false, "points": [[0,0,1],[0,0,1]]}"#).is_err());
        assert!(Curve3::from_json(r#"{"closed": false, "points": [[0,0,1e999],[1,0,0]]}"#).is_err());
        assert!(Curve3::from_json(r#"{"closed": false, "points": [[0,0,1],[1,0,0]]}"#).is_ok());
        let err = Curve3::from_json("{\n\"closed\": true,\n\"points\": [[0,0,1],\n[1,0,]]}").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
        let err = Curve3::from_json("{\n\"closed\": true,\n\"points\": [[0,0,1],\n[1,0,0],\n  [1, 0]]}").unwrap_err();
        assert!(err.to_string().contains("point 2 at line 5"), "{err}");
        let err = Curve3::from_json("{\"closed\": true, \"points\": [\n[0,0,1],\n[1,0,0],\n[1,0,0]]}").unwrap_err();
        assert!(err.to_string().contains("point 2 at line 4"), "{err}");
    }

    #[test]
    fn any_curve_detects_dimension() {
        let p = AnyCurve::from_json(r#"{"closed": false, "points": [[1,0],[1,1]]}"#).unwrap();
        assert!(matches!(p, AnyCurve::Planar(_)));
        let s = AnyCurve::from_json(r#"{"closed": false, "points": [[1,0,0],[1,1,0]]}"#).unwrap();
        assert!(matches!(s, AnyCurve::Spatial(_)));
    }
}

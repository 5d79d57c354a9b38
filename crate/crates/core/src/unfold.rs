//! Cone unfolding of space curves and spiral decomposition of planar curves.
//!
//! The unfolding sends vertex `i` to `|γ(tᵢ)| e^{iθᵢ}`, where `θ` adds up the
//! angles between consecutive normalized vertices. Each edge and its image
//! span congruent triangles with the origin, so heights, edge lengths and the
//! whole per-edge `(h, alpha)` profile carry over unchanged.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::curve::{Curve2, Curve3};
use crate::error::{Error, Result};
use crate::horizon::{
    curve_efficiency, orthogonal_efficiency, segment_horizon, SegmentHorizonInput, HEIGHT_TOL,
};
use crate::quadrature::GaussLegendre;
use crate::vector::{Point, Vec2};

#[derive(Clone, Debug, Serialize)]
pub struct UnfoldingResult {
    /// Always open; a closed input gives `n + 1` points ending back at height `h₀`.
    pub planar: Curve2,
    pub cone_angle_total: f64,
    pub length_error: f64,
    pub height_error: f64,
}

pub fn unfold(curve: &Curve3) -> Result<UnfoldingResult> {
    let pts = curve.points();
    if let Some(i) = pts.iter().position(|p| p.norm() == 0.0) {
        return Err(Error::DegenerateCurve(format!("vertex {i} is at the origin")));
    }
    let n = pts.len();
    let count = curve.edge_count() + 1;
    let mut theta = 0.0;
    let mut planar = Vec::with_capacity(count);
    planar.push(Vec2::new(pts[0].norm(), 0.0));
    for i in 1..count {
        theta += pts[i - 1].angle_to(pts[i % n]);
        planar.push(Vec2::from_polar(pts[i % n].norm(), theta));
    }
    let height_error = planar
        .iter()
        .enumerate()
        .map(|(i, q)| (q.norm() - pts[i % n].norm()).abs())
        .fold(0.0, f64::max);
    let planar = Curve2::new(planar, false)?;
    Ok(UnfoldingResult {
        length_error: (planar.length() - curve.length()).abs(),
        planar,
        cone_angle_total: theta,
        height_error,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpiralTolerances {
    /// Vertex heights closer than this count as equal; heights may dip this
    /// far below 1.
    pub height: f64,
    /// Allowed wrong-way turning (sine of the turning angle) at a vertex.
    pub convexity: f64,
}

impl Default for SpiralTolerances {
    fn default() -> Self {
        Self {
            height: 1e-9,
            convexity: 1e-9,
        }
    }
}

/// A planar polyline with nondecreasing vertex heights.
#[derive(Clone, Debug, Serialize)]
pub struct SpiralPiece {
    pub curve: Curve2,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// `|π/2 − alpha|` on the first edge.
    pub orthogonal_start_defect: f64,
    /// Largest sine of a turn away from the origin, 0 if locally convex.
    pub convexity_defect: f64,
    /// Arclength range of the piece in the (shifted) source curve.
    pub t_start: f64,
    pub t_end: f64,
    /// The piece was cut from a falling run and is presented reversed.
    pub reversed: bool,
}

impl SpiralPiece {
    /// Wraps an open polyline whose vertex heights rise from `r ≥ 1`.
    pub fn new(curve: Curve2, tol: &SpiralTolerances) -> Result<Self> {
        if curve.is_closed() {
            return Err(Error::InvalidArgument("a spiral piece must be open".into()));
        }
        let h: Vec<f64> = curve.points().iter().map(|p| p.norm()).collect();
        if h[0] < 1.0 - tol.height {
            return Err(Error::InsideUnitBall { height: h[0] });
        }
        if let Some(i) = h.windows(2).position(|w| w[1] < w[0] - tol.height) {
            return Err(Error::InvalidArgument(format!(
                "vertex heights fall between vertices {i} and {}",
                i + 1
            )));
        }
        let len = curve.length();
        Ok(Self::build(curve, 0.0, len, false))
    }

    fn build(curve: Curve2, t_start: f64, t_end: f64, reversed: bool) -> Self {
        let pts = curve.points();
        let r = pts[0].norm();
        let big_r = pts[pts.len() - 1].norm();
        let alpha = pts[0].angle_to(pts[1] - pts[0]);
        let convexity_defect = convexity_defect(pts);
        Self {
            r,
            big_r,
            orthogonal_start_defect: (FRAC_PI_2 - alpha).abs(),
            convexity_defect,
            t_start,
            t_end,
            reversed,
            curve,
        }
    }

    pub fn length(&self) -> f64 {
        self.curve.length()
    }
}

/// Wrong-way turning relative to the sense of rotation about the origin.
fn convexity_defect(pts: &[Vec2]) -> f64 {
    let sweep: f64 = pts.windows(2).map(|w| w[0].cross(w[1])).sum();
    let sense = if sweep >= 0.0 { 1.0 } else { -1.0 };
    pts.windows(3)
        .map(|w| {
            let a = w[1] - w[0];
            let b = w[2] - w[1];
            let s = a.cross(b) / (a.norm() * b.norm());
            (-sense * s).max(0.0)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpiralDecomposition {
    pub pieces: Vec<SpiralPiece>,
    pub flat_set_length: f64,
    /// Arclength ranges of the plateaus.
    pub flat_ranges: Vec<(f64, f64)>,
    pub orientation_flips: Vec<bool>,
    /// Index of the input vertex used as the start (closed inputs only).
    pub shift: usize,
    pub length: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Trend {
    Rising,
    Falling,
    Flat,
}

/// Splits a planar curve into maximal runs of rising and falling vertex
/// heights; plateaus form the flat set. Closed inputs are first shifted so a
/// lowest vertex comes first. Falling runs are reversed so every piece rises.
pub fn decompose_spirals(curve: &Curve2, tol: &SpiralTolerances) -> Result<SpiralDecomposition> {
    let low = curve.min_vertex_height();
    if low < 1.0 - tol.height {
        return Err(Error::InsideUnitBall { height: low });
    }
    let shift = if curve.is_closed() { curve.min_height_vertex() } else { 0 };
    let open = curve.shifted(shift).opened();
    let pts = open.points();
    let params = open.vertex_params();
    let trend = |i: usize| {
        let dh = pts[i + 1].norm() - pts[i].norm();
        if dh > tol.height {
            Trend::Rising
        } else if dh < -tol.height {
            Trend::Falling
        } else {
            Trend::Flat
        }
    };
    let edges = open.edge_count();
    let mut out = SpiralDecomposition {
        pieces: Vec::new(),
        flat_set_length: 0.0,
        flat_ranges: Vec::new(),
        orientation_flips: Vec::new(),
        shift,
        length: open.length(),
    };
    let mut start = 0;
    while start < edges {
        let kind = trend(start);
        let mut end = start + 1;
        while end < edges && trend(end) == kind {
            end += 1;
        }
        let (t0, t1) = (params[start], params[end]);
        match kind {
            Trend::Flat => {
                out.flat_set_length += t1 - t0;
                out.flat_ranges.push((t0, t1));
            }
            Trend::Rising | Trend::Falling => {
                let mut piece = open.sub_curve(start, end - start)?;
                let reversed = kind == Trend::Falling;
                if reversed {
                    piece = piece.reversed();
                }
                out.pieces.push(SpiralPiece::build(piece, t0, t1, reversed));
                out.orientation_flips.push(reversed);
            }
        }
        start = end;
    }
    Ok(out)
}

/// Decomposition of the unfolding of a space curve, started at a lowest vertex.
pub fn decompose_space_curve(curve: &Curve3, tol: &SpiralTolerances) -> Result<SpiralDecomposition> {
    let shift = if curve.is_closed() { curve.min_height_vertex() } else { 0 };
    let mut d = decompose_spirals(&unfold(&curve.shifted(shift))?.planar, tol)?;
    d.shift = shift;
    Ok(d)
}

/// Efficiency of a piece. Pieces whose height does not change use the
/// zero-length convention `4√(r²−1)/r²`.
pub fn spiral_efficiency(piece: &SpiralPiece) -> Result<f64> {
    if piece.big_r - piece.r <= HEIGHT_TOL {
        return orthogonal_efficiency(piece.r);
    }
    curve_efficiency(&piece.curve)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AngleBoundReport {
    pub holds: bool,
    /// Minimum over the piece of `sin(alpha) − r/h`.
    pub worst_margin: f64,
    pub worst_edge: usize,
    pub locally_convex: bool,
    pub convexity_defect: f64,
}

/// Checks `sin(alpha) ≥ r/h` along every edge, with `r` the start height.
///
/// Along a straight edge `h·sin(alpha)` equals the distance `d` of its line
/// from the origin, so the margin is `(d − r)/h`, smallest where `h` is.
pub fn check_spiral_angle_bound(piece: &SpiralPiece, tol: f64) -> AngleBoundReport {
    let mut worst = f64::INFINITY;
    let mut worst_edge = 0;
    for (i, (a, b)) in piece.curve.edges().enumerate() {
        let d = a.line_distance_from_origin(b);
        let h = a.segment_closest_to_origin(b).norm();
        let m = (d - piece.r) / h;
        if m < worst {
            worst = m;
            worst_edge = i;
        }
    }
    let locally_convex = piece.convexity_defect <= tol;
    AngleBoundReport {
        holds: worst >= -tol && locally_convex,
        worst_margin: worst,
        worst_edge,
        locally_convex,
        convexity_defect: piece.convexity_defect,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightReport {
    /// Sum of the closed-form horizons of the edges.
    pub lhs: f64,
    /// `∫ w(h) 𝓔(h) dh` for the weight assembled edge by edge.
    pub rhs: f64,
    pub holds: bool,
    pub length: f64,
    pub weight_integral: f64,
    pub min_weight: f64,
    /// `r / √(R² − r²)`.
    pub weight_bound: f64,
    pub weight_ok: bool,
}

/// Numerical check of `H(P) ≤ ∫ᵣᴿ w(h) 𝓔(h) dh` for a polygonal spiral.
///
/// Edge `i` (ending at `pᵢ₊₁`) contributes the weight `h/√(|pᵢ₊₁|² − h²)`
/// on `[ρᵢ, ρᵢ₊₁]`, where `ρ₀ = r`, `ρᵢ` is the distance from the origin to
/// the line of edge `i` and the last interval ends at `R`. Each piece is
/// integrated in `s = √(|pᵢ₊₁|² − h²)`, which removes the endpoint
/// singularity, using `n_levels` Gauss–Legendre panels.
pub fn check_weight_inequality(piece: &SpiralPiece, n_levels: usize) -> Result<WeightReport> {
    let (r, big_r) = (piece.r, piece.big_r);
    if big_r - r <= HEIGHT_TOL {
        return Err(Error::InvalidArgument("piece has constant height".into()));
    }
    if n_levels == 0 {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    let pts = piece.curve.points();
    let k = pts.len() - 1;
    let mut lhs = 0.0;
    for (a, b) in piece.curve.edges() {
        lhs += segment_horizon(SegmentHorizonInput::new(a.norm(), b.norm(), (b - a).norm())?)?;
    }
    let mut rho = vec![r];
    for i in 1..k {
        rho.push(pts[i].line_distance_from_origin(pts[i + 1]).max(rho[i - 1]));
    }
    rho.push(big_r);

    let gl = GaussLegendre::new(8);
    let mut rhs = 0.0;
    let mut weight_integral = 0.0;
    let mut min_weight = f64::INFINITY;
    for i in 0..k {
        let p = pts[i + 1].norm();
        let (lo, hi) = (rho[i], rho[i + 1].min(p));
        if hi <= lo {
            continue;
        }
        let s_hi = ((p - lo) * (p + lo)).sqrt();
        let s_lo = ((p - hi) * (p + hi)).max(0.0).sqrt();
        weight_integral += s_hi - s_lo;
        min_weight = min_weight.min(lo / s_hi);
        let panel = (s_hi - s_lo) / n_levels as f64;
        for j in 0..n_levels {
            let a = s_lo + j as f64 * panel;
            rhs += gl.integrate(
                |s| orthogonal_efficiency((p * p - s * s).max(1.0).sqrt()).unwrap_or(0.0),
                a,
                a + panel,
            );
        }
    }
    let length = piece.length();
    let weight_bound = r / ((big_r - r) * (big_r + r)).sqrt();
    Ok(WeightReport {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-8,
        length,
        weight_integral,
        min_weight,
        weight_bound,
        weight_ok: min_weight >= weight_bound * (1.0 - 1e-12) && (weight_integral - length).abs() <= 1e-9 * length,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LiftKind {
    /// `p₀ ↦ (1 + t)·p₀`; the horizon of the edge grows with `t`.
    Radial,
    /// `p₀` moves to height `(1 + t)|p₀|` on the circle with diameter `o p₁`,
    /// so the edge still leaves it orthogonally; the horizon shrinks with `t`.
    Orthogonal,
}

/// Raises the start of the one-edge spiral `(p0, p1)`.
pub fn lift_one_edge(p0: Vec2, p1: Vec2, t: f64, kind: LiftKind) -> Result<(Vec2, Vec2)> {
    let target = (1.0 + t) * p0.norm();
    let top = p1.norm();
    if !(target > 0.0) || target >= top {
        return Err(Error::InvalidArgument(format!(
            "no lifted start at height {target} below |p1| = {top}"
        )));
    }
    match kind {
        LiftKind::Radial => Ok((p0 * (1.0 + t), p1)),
        LiftKind::Orthogonal => {
            // angle at the origin between p1 and a point of the Thales circle
            let beta = (target / top).acos();
            let side = if p1.cross(p0) >= 0.0 { 1.0 } else { -1.0 };
            let dir = p1 * (1.0 / top);
            Ok((dir.rotated(side * beta) * target, p1))
        }
    }
}

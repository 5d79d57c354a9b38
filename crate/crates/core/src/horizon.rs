//! Closed-form horizon and efficiency formulas.
//!
//! A point at height `h` moving at radial angle `alpha` sweeps horizon at the
//! rate `𝓔(h, alpha) = ∫₀^{2π} |F(h, alpha, θ)| dθ` per unit length, where
//! `F = (√(h²−1) sin α cos θ + cos α) / h²`. Integrating over a straight edge
//! gives the segment horizon, which also equals the area covered an odd
//! number of times by the two end caps.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::curve::Polyline;
use crate::error::{clamp_unit, Error, Result};
use crate::quadrature::{self, GaussLegendre};
use crate::sphere::{Cap, TRIG_TOL};
use crate::vector::{Point, Vec3};

/// Slack for `h ≥ 1` and for membership in the admissible phase region.
pub const HEIGHT_TOL: f64 = 1e-9;

/// A height and radial angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub h: f64,
    pub alpha: f64,
}

impl PhasePoint {
    /// A point of the admissible region: `h ≥ 1` and
    /// `asin(1/h) ≤ alpha ≤ π/2`. Values within `HEIGHT_TOL` of the region
    /// are snapped onto it.
    pub fn new(h: f64, alpha: f64) -> Result<Self> {
        let p = Self::relaxed(h, alpha)?;
        if p.alpha > PI / 2.0 + HEIGHT_TOL || p.alpha.sin() < 1.0 / p.h - HEIGHT_TOL {
            return Err(Error::OutsidePhaseSpace { h, alpha });
        }
        let lo = (1.0 / p.h).asin();
        Ok(Self {
            h: p.h,
            alpha: p.alpha.clamp(lo, PI / 2.0),
        })
    }

    /// Any `h ≥ 1` and `alpha ∈ [0, π]`.
    pub fn relaxed(h: f64, alpha: f64) -> Result<Self> {
        if !h.is_finite() || !alpha.is_finite() {
            return Err(Error::NonFinite("PhasePoint"));
        }
        if h < 1.0 - HEIGHT_TOL {
            return Err(Error::InsideUnitBall { height: h });
        }
        if !(-HEIGHT_TOL..=PI + HEIGHT_TOL).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, pi]")));
        }
        Ok(Self {
            h: h.max(1.0),
            alpha: alpha.clamp(0.0, PI),
        })
    }

    /// Whether the folded angle `min(alpha, π − alpha)` lies in the region.
    pub fn in_omega(&self) -> bool {
        self.h * self.alpha.sin() >= 1.0
    }
}

/// `F(h, alpha, θ)`, signed.
pub fn integrand_f(h: f64, alpha: f64, theta: f64) -> Result<f64> {
    if h < 1.0 - HEIGHT_TOL {
        return Err(Error::InsideUnitBall { height: h });
    }
    let s = (h * h - 1.0).max(0.0).sqrt();
    Ok((s * alpha.sin() * theta.cos() + alpha.cos()) / (h * h))
}

/// The zero `θ0 ∈ [π/2, π]` of `θ ↦ F(h, alpha, θ)`.
pub fn theta_zero(p: PhasePoint) -> Result<f64> {
    let p = PhasePoint::new(p.h, p.alpha)?;
    if p.h <= 1.0 {
        return Err(Error::InvalidArgument("theta_zero is undefined at h = 1".into()));
    }
    let cot = p.alpha.cos() / p.alpha.sin();
    Ok(clamp_unit(-cot / (p.h * p.h - 1.0).sqrt(), TRIG_TOL, "theta_zero")?.acos())
}

/// Closed form of `𝓔(h, alpha)` on the admissible region.
pub fn instantaneous_efficiency(p: PhasePoint) -> Result<f64> {
    let p = PhasePoint::new(p.h, p.alpha)?;
    closed_form(p.h, p.alpha)
}

fn closed_form(h: f64, alpha: f64) -> Result<f64> {
    if h <= 1.0 {
        return Ok(0.0);
    }
    let (sa, ca) = alpha.sin_cos();
    let first = (h * h * sa * sa - 1.0).max(0.0).sqrt();
    let arg = clamp_unit(ca / sa / (h * h - 1.0).sqrt(), TRIG_TOL, "efficiency arcsin")?;
    Ok(4.0 / (h * h) * (first + ca * arg.asin()))
}

/// `𝓔(h) = 𝓔(h, π/2) = 4√(h²−1)/h²`.
pub fn orthogonal_efficiency(h: f64) -> Result<f64> {
    if h < 1.0 - HEIGHT_TOL {
        return Err(Error::InsideUnitBall { height: h });
    }
    let h = h.max(1.0);
    Ok(4.0 * (h * h - 1.0).sqrt() / (h * h))
}

/// `∫₀^{2π} |F| dθ` by adaptive quadrature, split at the sign changes of `F`.
pub fn efficiency_quadrature(p: PhasePoint, tol: f64) -> Result<f64> {
    let p = PhasePoint::relaxed(p.h, p.alpha)?;
    let (h, alpha) = (p.h, p.alpha);
    let f = |t: f64| integrand_f(h, alpha, t).map(f64::abs).unwrap_or(f64::NAN);
    let mut breaks = Vec::new();
    if h > 1.0 && alpha.sin() > 0.0 {
        let arg = -(alpha.cos() / alpha.sin()) / (h * h - 1.0).sqrt();
        if (-1.0..=1.0).contains(&arg) {
            let t0 = arg.acos();
            breaks.extend([t0, TAU - t0]);
        }
    }
    quadrature::integrate_pieces(f, 0.0, TAU, &breaks, tol)
}

/// `∫₀^{2π} |F| dθ` for any `h ≥ 1` and `alpha ∈ [0, π]`: the closed form
/// when the folded point is admissible, quadrature otherwise.
pub fn efficiency_integral(p: PhasePoint) -> Result<f64> {
    let p = PhasePoint::relaxed(p.h, p.alpha)?;
    let folded = p.alpha.min(PI - p.alpha);
    if p.h * folded.sin() >= 1.0 {
        closed_form(p.h, folded)
    } else {
        efficiency_quadrature(PhasePoint { h: p.h, alpha: folded }, 1e-13)
    }
}

/// Weighted average of `∫|F| dθ` over a profile whose weights sum to 1.
pub fn efficiency_of_profile(profile: &[(f64, PhasePoint)]) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::InvalidArgument("empty profile".into()));
    }
    let mut total = 0.0;
    let mut wsum = 0.0;
    for &(w, p) in profile {
        if !(w > 0.0) {
            return Err(Error::InvalidArgument(format!("profile weight {w} is not positive")));
        }
        wsum += w;
        total += w * efficiency_integral(p)?;
    }
    if (wsum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("profile weights sum to {wsum}")));
    }
    Ok(total)
}

/// Heights of the two endpoints and the length of a straight edge, with
/// `h0 ≤ h1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SegmentHorizonInput {
    h0: f64,
    h1: f64,
    ell: f64,
}

impl SegmentHorizonInput {
    /// Validates and orders the triple. The line through the edge must stay
    /// at distance `≥ 1 − HEIGHT_TOL` from the origin.
    pub fn new(h0: f64, h1: f64, ell: f64) -> Result<Self> {
        let (h0, h1) = if h0 <= h1 { (h0, h1) } else { (h1, h0) };
        let bad = |reason| Err(Error::InfeasibleSegment { h0, h1, ell, reason });
        if !(h0.is_finite() && h1.is_finite() && ell.is_finite()) {
            return Err(Error::NonFinite("SegmentHorizonInput"));
        }
        if h0 < 1.0 - HEIGHT_TOL {
            return Err(Error::InsideUnitBall { height: h0 });
        }
        if ell <= 0.0 {
            return bad("length must be positive");
        }
        if ell < h1 - h0 || ell > h0 + h1 {
            return bad("violates the triangle inequality");
        }
        let s = Self { h0, h1, ell };
        if s.line_distance() < 1.0 - HEIGHT_TOL {
            return bad("line meets the open unit ball");
        }
        Ok(s)
    }

    pub fn from_points(p0: Vec3, p1: Vec3) -> Result<Self> {
        Self::new(p0.norm(), p1.norm(), (p1 - p0).norm())
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }
    pub fn h1(&self) -> f64 {
        self.h1
    }
    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// `((h0+h1)² − ℓ²)(ℓ² − (h1−h0)²)`, sixteen times the squared triangle area.
    fn heron(&self) -> f64 {
        let (h0, h1, l) = (self.h0, self.h1, self.ell);
        (((h0 + h1) * (h0 + h1) - l * l) * (l * l - (h1 - h0) * (h1 - h0))).max(0.0)
    }

    /// Distance from the origin to the line through the edge.
    pub fn line_distance(&self) -> f64 {
        self.heron().sqrt() / (2.0 * self.ell)
    }

    /// A concrete edge realizing the triple, in the plane `z = 0`.
    pub fn placement(&self) -> (Vec3, Vec3) {
        let (h0, h1, l) = (self.h0, self.h1, self.ell);
        let c = ((h0 * h0 + h1 * h1 - l * l) / (2.0 * h0 * h1)).clamp(-1.0, 1.0);
        let d = c.acos();
        (Vec3::new(h0, 0.0, 0.0), Vec3::new(h1 * d.cos(), h1 * d.sin(), 0.0))
    }
}

/// Closed-form horizon of a straight edge.
pub fn segment_horizon(s: SegmentHorizonInput) -> Result<f64> {
    let (h0, h1, l) = (s.h0, s.h1, s.ell);
    if h0 - 1.0 < HEIGHT_TOL {
        // the start is a tangency point, so the edge is orthogonal there
        return spiral_edge_horizon(1.0, l);
    }
    let a = s.heron();
    let (q0, q1) = (h0 * h0 - 1.0, h1 * h1 - 1.0);
    let t0 = clamp_unit((h1 * h1 - h0 * h0 - l * l) / (q0 * a).sqrt(), TRIG_TOL, "segment horizon")?;
    let t1 = clamp_unit((h0 * h0 - h1 * h1 - l * l) / (q1 * a).sqrt(), TRIG_TOL, "segment horizon")?;
    let t2 = clamp_unit(
        (h0 * h0 + h1 * h1 - l * l - 2.0) / (2.0 * (q0 * q1).sqrt()),
        TRIG_TOL,
        "segment horizon",
    )?;
    Ok(4.0 * (t0.asin() / h0 + t1.asin() / h1 + t2.acos()))
}

/// The same horizon assembled from cap areas: `A0 + A1 − 2·A(D0 ∩ D1)`.
pub fn segment_horizon_lens(s: SegmentHorizonInput) -> Result<f64> {
    let (p0, p1) = s.placement();
    let c0 = Cap::from_viewpoint(p0)?;
    let c1 = Cap::from_viewpoint(p1)?;
    c0.symmetric_difference_area(&c1)
}

/// Horizon of an edge of length `ell` leaving height `h0` orthogonally.
pub fn spiral_edge_horizon(h0: f64, ell: f64) -> Result<f64> {
    if !(h0.is_finite() && ell.is_finite()) {
        return Err(Error::NonFinite("spiral edge"));
    }
    if h0 < 1.0 - HEIGHT_TOL {
        return Err(Error::InsideUnitBall { height: h0 });
    }
    if ell <= 0.0 {
        return Err(Error::InvalidArgument(format!("edge length {ell} must be positive")));
    }
    let h0 = h0.max(1.0);
    if h0 == 1.0 {
        return Ok(TAU * (1.0 - 1.0 / (1.0 + ell * ell).sqrt()));
    }
    // acos and asin of the textbook form rewritten as atan2, which stays
    // accurate for short edges
    let s0 = (h0 * h0 - 1.0).sqrt();
    let h1 = (h0 * h0 + ell * ell).sqrt();
    Ok(4.0 * (ell.atan2(s0) - ell.atan2(h1 * s0) / h1))
}

/// `E(h0, h1)`: horizon over length of the orthogonal-start edge rising from
/// height `h0` to `h1`.
pub fn spiral_edge_efficiency(h0: f64, h1: f64) -> Result<f64> {
    if !(h1 > h0) {
        return Err(Error::InvalidArgument(format!("need h1 > h0, got {h0}, {h1}")));
    }
    let ell = ((h1 - h0) * (h1 + h0)).sqrt();
    Ok(spiral_edge_horizon(h0, ell)? / ell)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LiftingDerivatives {
    pub dl: f64,
    pub dh: f64,
    pub ratio: f64,
}

/// Derivatives of length and horizon of the orthogonal-start edge ending at
/// a point of norm `p1_norm`, as its start height increases through `r`.
pub fn lifting_derivatives(r: f64, p1_norm: f64) -> Result<LiftingDerivatives> {
    if r < 1.0 {
        return Err(Error::InsideUnitBall { height: r });
    }
    if !(p1_norm > r) {
        return Err(Error::InvalidArgument(format!("need |p1| > r, got {p1_norm} <= {r}")));
    }
    let root = ((p1_norm - r) * (p1_norm + r)).sqrt();
    let dl = -r / root;
    let dh = -(4.0 / r) * (r * r - 1.0).sqrt() / root;
    Ok(LiftingDerivatives {
        dl,
        dh,
        ratio: dh / dl,
    })
}

/// Length and horizon of the orthogonal-start edge from height `h` to a
/// point of norm `p1_norm`.
pub fn lifted_edge(h: f64, p1_norm: f64) -> Result<(f64, f64)> {
    let ell = ((p1_norm - h) * (p1_norm + h)).sqrt();
    Ok((ell, spiral_edge_horizon(h, ell)?))
}

/// Weighted `(h, alpha)` samples of a polyline: Gauss–Legendre nodes on every
/// edge, with edges split at the point closest to the origin. Weights are
/// arclength fractions and sum to 1.
pub fn curve_profile<P: Point>(curve: &Polyline<P>, nodes: usize) -> Result<Vec<(f64, PhasePoint)>> {
    let gl = GaussLegendre::new(nodes);
    let total = curve.length();
    let mut out = Vec::new();
    for (a, b) in curve.edges() {
        let d = b - a;
        let len = d.norm();
        let star = -a.dot(d) / d.norm_sq();
        let mut cuts = vec![0.0];
        if star > 0.0 && star < 1.0 {
            cuts.push(star);
        }
        cuts.push(1.0);
        for w in cuts.windows(2) {
            for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
                let u = w[0] + (w[1] - w[0]) * x;
                let pos = a.lerp(b, u);
                let p = PhasePoint::relaxed(pos.norm(), pos.angle_to(d))?;
                out.push((wt * (w[1] - w[0]) * len / total, p));
            }
        }
    }
    Ok(out)
}

/// Efficiency `H/L` of a polyline outside the unit ball, by quadrature.
pub fn curve_efficiency<P: Point>(curve: &Polyline<P>) -> Result<f64> {
    let profile = curve_profile(curve, 24)?;
    let w: f64 = profile.iter().map(|(w, _)| w).sum();
    // renormalize rounding in the weights before the strict sum check
    let profile: Vec<_> = profile.into_iter().map(|(x, p)| (x / w, p)).collect();
    efficiency_of_profile(&profile)
}

/// Sum of closed-form segment horizons over the edges of a feasible polyline.
pub fn curve_horizon<P: Point>(curve: &Polyline<P>) -> Result<f64> {
    curve
        .edges()
        .map(|(a, b)| {
            let s = SegmentHorizonInput::new(a.norm(), b.norm(), (b - a).norm())?;
            segment_horizon(s)
        })
        .sum()
}

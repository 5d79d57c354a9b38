//! Monte Carlo estimators used as independent checks on the closed forms.
//!
//! All estimators consume a [`DirectionSampler`] chunk by chunk. Per-chunk
//! results are integer counts combined in chunk order, so an estimate is a
//! pure function of the curve and the sampler regardless of thread count.

use std::f64::consts::PI;

use serde::Serialize;

use crate::curve::Curve3;
use crate::error::{Error, Result};
use crate::horizon::HEIGHT_TOL;
use crate::sphere::{Cap, DirectionSampler};
use crate::vector::{Point, Vec3};

/// Values this close to zero are treated as `+NUDGE`.
pub const NUDGE: f64 = 1e-12;

#[inline]
fn nudged(x: f64) -> f64 {
    if x.abs() < NUDGE {
        NUDGE
    } else {
        x
    }
}

/// Running sums of a per-direction integer count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Tally {
    n: u64,
    sum: u64,
    sum_sq: u64,
}

impl Tally {
    fn push(&mut self, c: u64) {
        self.n += 1;
        self.sum += c;
        self.sum_sq += c * c;
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self
    }

    /// Mean count and its standard error.
    fn mean(&self) -> (f64, f64) {
        let n = self.n as f64;
        let mean = self.sum as f64 / n;
        if self.n < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sum_sq as f64 - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }
}

/// Monte Carlo horizon estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub scheme: String,
    /// Total number of plane crossings over all sampled directions.
    pub crossings: u64,
    /// Mean crossings per direction.
    pub mean_count: f64,
    pub mean_count_standard_error: f64,
}

/// Estimates the horizon by counting, for each sampled `p`, how often the
/// polyline crosses the plane `⟨x, p⟩ = 1`.
///
/// Edges lying in the plane count zero; vertices on it are nudged to the
/// positive side.
pub fn mc_horizon(curve: &Curve3, sampler: &DirectionSampler) -> Result<HorizonEstimate> {
    if sampler.count == 0 {
        return Err(Error::InvalidArgument("sampler has no directions".into()));
    }
    let h = curve.min_vertex_height();
    if h < 1.0 - HEIGHT_TOL {
        return Err(Error::InsideUnitBall { height: h });
    }
    let pts = curve.points();
    let n = pts.len();
    let edges = curve.edge_count();
    let tally = sampler
        .map_chunks(|dirs| {
            let mut t = Tally::default();
            let mut f = vec![false; n];
            for &p in dirs {
                for (fi, v) in f.iter_mut().zip(pts) {
                    *fi = nudged(v.dot(p) - 1.0) > 0.0;
                }
                let c = (0..edges).filter(|&i| f[i] != f[(i + 1) % n]).count();
                t.push(c as u64);
            }
            t
        })
        .into_iter()
        .fold(Tally::default(), Tally::merge);
    let (mean, se) = tally.mean();
    Ok(HorizonEstimate {
        value: 4.0 * PI * mean,
        standard_error: 4.0 * PI * se,
        samples: tally.n,
        seed: sampler.seed,
        scheme: sampler.describe(),
        crossings: tally.sum,
        mean_count: mean,
        mean_count_standard_error: se,
    })
}

/// An area on the unit sphere estimated by membership counting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AreaEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: u64,
}

impl AreaEstimate {
    fn from_hits(hits: u64, n: u64) -> Self {
        let (value, standard_error) = crate::sphere::area_estimate(hits, n);
        Self {
            value,
            standard_error,
            samples: n,
        }
    }
}

/// Area of the union of `caps`.
pub fn mc_union_caps_area(caps: &[Cap], sampler: &DirectionSampler) -> Result<AreaEstimate> {
    if caps.is_empty() {
        return Err(Error::InvalidArgument("no caps given".into()));
    }
    let hits: u64 = sampler
        .map_chunks(|dirs| dirs.iter().filter(|u| caps.iter().any(|c| c.contains(**u))).count() as u64)
        .iter()
        .sum();
    Ok(AreaEstimate::from_hits(hits, sampler.count as u64))
}

/// Membership-count estimates for a pair of caps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CapPairEstimate {
    pub area0: AreaEstimate,
    pub area1: AreaEstimate,
    pub intersection: AreaEstimate,
    pub union: AreaEstimate,
    /// `A0 + A1 − 2·A(∩)`, from the per-sample indicator of lying in exactly one cap.
    pub symmetric_difference: AreaEstimate,
}

/// Estimates for many cap pairs from one shared direction set.
pub fn mc_cap_pairs(pairs: &[(Cap, Cap)], sampler: &DirectionSampler) -> Vec<CapPairEstimate> {
    let k = pairs.len();
    let counts = sampler
        .map_chunks(|dirs| {
            let mut c = vec![[0u64; 4]; k];
            for &u in dirs {
                for (acc, (c0, c1)) in c.iter_mut().zip(pairs) {
                    let (a, b) = (c0.contains(u), c1.contains(u));
                    acc[0] += a as u64;
                    acc[1] += b as u64;
                    acc[2] += (a && b) as u64;
                    acc[3] += (a != b) as u64;
                }
            }
            c
        })
        .into_iter()
        .fold(vec![[0u64; 4]; k], |mut tot, c| {
            for (t, x) in tot.iter_mut().zip(c) {
                for j in 0..4 {
                    t[j] += x[j];
                }
            }
            tot
        });
    let n = sampler.count as u64;
    counts
        .into_iter()
        .map(|c| CapPairEstimate {
            area0: AreaEstimate::from_hits(c[0], n),
            area1: AreaEstimate::from_hits(c[1], n),
            intersection: AreaEstimate::from_hits(c[2], n),
            union: AreaEstimate::from_hits(c[0] + c[1] - c[2], n),
            symmetric_difference: AreaEstimate::from_hits(c[3], n),
        })
        .collect()
}

/// Crofton length estimate for a curve on the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CroftonEstimate {
    pub length: f64,
    pub standard_error: f64,
    pub mean_count: f64,
    pub mean_count_standard_error: f64,
    pub samples: u64,
    pub rho: f64,
}

struct Arc {
    a: Vec3,
    w: Vec3,
    angle: f64,
    bulge: f64,
}

/// Estimates the length of a spherical polyline (edges are great-circle
/// arcs) from its intersection counts with circles of angular radius `rho`
/// around sampled centers.
pub fn crofton_length(curve: &Curve3, rho: f64, sampler: &DirectionSampler) -> Result<CroftonEstimate> {
    if !(rho > 0.0 && rho <= PI / 2.0) {
        return Err(Error::InvalidArgument(format!("rho {rho} outside (0, pi/2]")));
    }
    if sampler.count == 0 {
        return Err(Error::InvalidArgument("sampler has no directions".into()));
    }
    for (index, p) in curve.points().iter().enumerate() {
        let norm = p.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NotOnSphere { index, norm });
        }
    }
    let unit: Vec<Vec3> = curve.points().iter().map(|p| *p * (1.0 / p.norm())).collect();
    let n = unit.len();
    let mut arcs = Vec::with_capacity(curve.edge_count());
    for i in 0..curve.edge_count() {
        let (a, b) = (unit[i], unit[(i + 1) % n]);
        let w = (b - a * a.dot(b))
            .normalized()
            .ok_or_else(|| Error::DegenerateCurve(format!("edge {i} has no unique great circle")))?;
        let angle = a.angle_to(b);
        if angle >= PI - 1e-9 {
            return Err(Error::DegenerateCurve(format!("edge {i} joins antipodal points")));
        }
        arcs.push(Arc {
            a,
            w,
            angle,
            bulge: 1.0 / (angle / 2.0).cos() - 1.0,
        });
    }
    let c = rho.cos();
    let tally = sampler
        .map_chunks(|dirs| {
            let mut t = Tally::default();
            let mut g = vec![0.0; n];
            for &p in dirs {
                for (gi, v) in g.iter_mut().zip(&unit) {
                    *gi = nudged(v.dot(p) - c);
                }
                let mut count = 0u64;
                for (i, arc) in arcs.iter().enumerate() {
                    let (g0, g1) = (g[i], g[(i + 1) % n]);
                    if (g0 > 0.0) != (g1 > 0.0) {
                        count += 1;
                    } else if g0 < 0.0 && g0.max(g1) > -c * arc.bulge {
                        count += interior_roots(arc, p, c);
                    }
                }
                t.push(count);
            }
            t
        })
        .into_iter()
        .fold(Tally::default(), Tally::merge);
    let (mean, se) = tally.mean();
    let scale = PI / rho.sin();
    Ok(CroftonEstimate {
        length: scale * mean,
        standard_error: scale * se,
        mean_count: mean,
        mean_count_standard_error: se,
        samples: tally.n,
        rho,
    })
}

/// Number of solutions of `⟨x(φ), p⟩ = c` with `φ` strictly inside the arc,
/// for an arc whose endpoints are both on the negative side: 0 or 2.
fn interior_roots(arc: &Arc, p: Vec3, c: f64) -> u64 {
    let (a, b) = (arc.a.dot(p), arc.w.dot(p));
    let r = a.hypot(b);
    if r <= c {
        return 0;
    }
    let delta = b.atan2(a);
    let spread = (c / r).acos();
    let inside = |phi: f64| {
        let phi = phi.rem_euclid(2.0 * PI);
        phi > 0.0 && phi < arc.angle
    };
    if inside(delta - spread) && inside(delta + spread) {
        2
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::horizon::{curve_efficiency, segment_horizon, SegmentHorizonInput};
    use crate::vector::Mat3;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2, TAU};

    fn circle(radius: f64, n: usize) -> Curve3 {
        let pts = (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                Vec3::new(radius * t.cos(), radius * t.sin(), 0.0)
            })
            .collect();
        Curve3::new(pts, true).unwrap()
    }

    #[test]
    fn vanishing_segment_has_vanishing_horizon() {
        let c = Curve3::new(vec![Vec3::new(2.0, 0.0, 0.0), Vec3::new(2.0, 1e-6, 0.0)], false).unwrap();
        let est = mc_horizon(&c, &DirectionSampler::uniform(100_000, 1)).unwrap();
        assert!(est.value < 1e-3, "{est:?}");
    }

    #[test]
    fn tangent_chord_matches_closed_form() {
        let c = Curve3::new(vec![Vec3::new(SQRT_2, 0.0, 0.0), Vec3::new(0.0, SQRT_2, 0.0)], false).unwrap();
        let est = mc_horizon(&c, &DirectionSampler::uniform(1_000_000, 2)).unwrap();
        let exact = segment_horizon(SegmentHorizonInput::new(SQRT_2, SQRT_2, 2.0).unwrap()).unwrap();
        assert!((est.value - exact).abs() < 3.0 * est.standard_error, "{est:?} vs {exact}");
    }

    #[test]
    fn circle_matches_quadrature() {
        let c = circle(SQRT_2, 400);
        let est = mc_horizon(&c, &DirectionSampler::uniform(300_000, 3)).unwrap();
        let expect = curve_efficiency(&c).unwrap() * c.length();
        assert!((est.value - expect).abs() < 3.0 * est.standard_error, "{est:?} vs {expect}");
    }

    #[test]
    fn rejects_curves_inside_the_ball() {
        let c = circle(0.5, 10);
        assert!(matches!(
            mc_horizon(&c, &DirectionSampler::fibonacci(10)),
            Err(Error::InsideUnitBall { .. })
        ));
    }

    #[test]
    fn estimates_are_reproducible() {
        let c = circle(1.7, 50);
        let s = DirectionSampler::uniform(50_000, 77);
        assert_eq!(mc_horizon(&c, &s).unwrap(), mc_horizon(&c, &s).unwrap());
    }

    #[test]
    fn horizon_is_additive_over_a_partition() {
        let c = circle(1.6, 30);
        let s = DirectionSampler::uniform(100_000, 5);
        let whole = mc_horizon(&c, &s).unwrap();
        let parts = [c.sub_curve(0, 11).unwrap(), c.sub_curve(11, 7).unwrap(), c.sub_curve(18, 12).unwrap()];
        let ests: Vec<_> = parts.iter().map(|p| mc_horizon(p, &s).unwrap()).collect();
        assert_eq!(whole.crossings, ests.iter().map(|e| e.crossings).sum::<u64>());
        let sum: f64 = ests.iter().map(|e| e.value).sum();
        assert!((whole.value - sum).abs() < 1e-12);
    }

    #[test]
    fn joint_rotation_leaves_counts_unchanged() {
        let c = circle(1.6, 40);
        let r = Mat3::from_unit_triple(0.2, 0.9, 0.4);
        let s = DirectionSampler::uniform(50_000, 8);
        let a = mc_horizon(&c, &s).unwrap();
        let b = mc_horizon(&c.rotated(&r).unwrap(), &s.with_rotation(r)).unwrap();
        assert!(a.crossings.abs_diff(b.crossings) <= 2);
    }

    #[test]
    fn standard_error_scales_like_inverse_sqrt() {
        let c = circle(1.5, 30);
        let mut ratios = Vec::new();
        for seed in 0..10 {
            let small = mc_horizon(&c, &DirectionSampler::uniform(20_000, seed)).unwrap();
            let big = mc_horizon(&c, &DirectionSampler::uniform(40_000, seed + 100)).unwrap();
            ratios.push(big.standard_error / small.standard_error);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean * SQRT_2 - 1.0).abs() < 0.2, "{mean}");
    }

    #[test]
    fn single_cap_union_area() {
        let cap = Cap::from_viewpoint(Vec3::new(0.0, 0.0, 2.0)).unwrap();
        let est = mc_union_caps_area(&[cap], &DirectionSampler::uniform(1_000_000, 4)).unwrap();
        assert!((est.value - PI).abs() < 3.0 * est.standard_error);
        assert!(mc_union_caps_area(&[], &DirectionSampler::fibonacci(10)).is_err());
    }

    #[test]
    fn disjoint_union_is_additive() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let caps = [Cap::new(x, FRAC_PI_4).unwrap(), Cap::new(-x, FRAC_PI_4).unwrap()];
        let s = DirectionSampler::fibonacci(200_000);
        let u = mc_union_caps_area(&caps, &s).unwrap();
        let a = mc_union_caps_area(&caps[..1], &s).unwrap();
        let b = mc_union_caps_area(&caps[1..], &s).unwrap();
        assert!((u.value - (a.value + b.value)).abs() < 1e-12);
    }

    #[test]
    fn union_minus_horizon_is_the_lens() {
        let seg = SegmentHorizonInput::new(1.3, 1.9, 1.1).unwrap();
        let (p0, p1) = seg.placement();
        let c0 = Cap::from_viewpoint(p0).unwrap();
        let c1 = Cap::from_viewpoint(p1).unwrap();
        let s = DirectionSampler::uniform(2_000_000, 6);
        let e = mc_cap_pairs(&[(c0, c1)], &s)[0];
        let lens = c0.intersection_area(&c1).unwrap();
        let diff = e.union.value - e.symmetric_difference.value;
        assert!((diff - e.intersection.value).abs() < 1e-12);
        assert!((diff - lens).abs() < 3.0 * e.intersection.standard_error);
        let exact = segment_horizon(seg).unwrap();
        assert!((e.symmetric_difference.value - exact).abs() < 3.0 * e.symmetric_difference.standard_error);

        // caps swept along the segment: their union is the union of the end caps
        let sweep: Vec<Cap> = (0..200)
            .map(|k| Cap::from_viewpoint(p0.lerp(p1, k as f64 / 199.0)).unwrap())
            .collect();
        let swept = mc_union_caps_area(&sweep, &s).unwrap();
        assert!((swept.value - e.union.value).abs() < 3.0 * swept.standard_error);
    }

    fn great_circle(n: usize) -> Curve3 {
        circle(1.0, n)
    }

    #[test]
    fn crofton_great_circle() {
        let c = great_circle(720);
        let s = DirectionSampler::uniform(200_000, 12);
        for rho in [PI / 6.0, FRAC_PI_4, FRAC_PI_2] {
            let est = crofton_length(&c, rho, &s).unwrap();
            // edges are arcs of the circle itself, so its length is exactly 2π;
            // at ρ = π/2 the count is always 2 and the error bar is zero
            assert!((est.length - TAU).abs() <= 3.0 * est.standard_error + 1e-12, "{rho}: {est:?}");
        }
        let est = crofton_length(&c, FRAC_PI_2, &s).unwrap();
        assert!((est.mean_count - 2.0).abs() < 1e-9);
    }

    #[test]
    fn crofton_counts_interior_double_crossings() {
        // a single long arc along the equator; circle around a point just
        // above its middle crosses it twice with both endpoints outside
        let pts = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let arc = Curve3::new(pts, false).unwrap();
        let m = Vec3::new(1.0, 1.0, 0.3).normalized().unwrap();
        let s = DirectionSampler::uniform(1, 0).with_rotation(rotation_to(m));
        let rho = 0.35;
        let est = crofton_length(&arc, rho, &s).unwrap();
        assert_eq!(est.mean_count, 2.0);
    }

    // rotation taking the sampler's single direction onto `m`
    fn rotation_to(m: Vec3) -> Mat3 {
        let u = DirectionSampler::uniform(1, 0).sample_directions()[0];
        let axis = u.cross(m);
        Mat3::rotation(axis, u.angle_to(m))
    }

    #[test]
    fn crofton_rejects_off_sphere_curves() {
        let c = circle(1.1, 10);
        assert!(matches!(
            crofton_length(&c, 0.5, &DirectionSampler::fibonacci(10)),
            Err(Error::NotOnSphere { .. })
        ));
    }
}

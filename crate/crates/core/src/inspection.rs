//! Hull-containment certificates, inradius at a fixed center and the
//! baseball-seam curve.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::Curve3;
use crate::error::{Error, Result};
use crate::sphere::DirectionSampler;
use crate::vector::{Point, Vec3};

/// Outcome of a sampled support-function test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InspectionReport {
    pub inspects: bool,
    /// Minimum over sampled directions of the support value.
    pub min_support: f64,
    /// Direction attaining `min_support`.
    pub worst_direction: [f64; 3],
    pub uncovered_directions: u64,
    pub samples: u64,
    pub scheme: String,
    pub tol: f64,
}

/// Minimum support of a point set over a direction set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportScan {
    pub min_support: f64,
    pub worst_direction: Vec3,
    /// Directions whose support is below `threshold`.
    pub below: u64,
}

fn support(points: &[Vec3], u: Vec3) -> f64 {
    points.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.dot(u)))
}

/// Scans every sampled direction `u` for `max_v ⟨v, u⟩`. Chunk results are
/// merged in order, so the worst direction is the first one attaining the
/// minimum.
pub fn support_scan(points: &[Vec3], sampler: &DirectionSampler, threshold: f64) -> SupportScan {
    let parts = sampler.map_chunks(|dirs| {
        let mut best = (f64::INFINITY, Vec3::new(0.0, 0.0, 1.0));
        let mut below = 0;
        for &u in dirs {
            let s = support(points, u);
            if s < best.0 {
                best = (s, u);
            }
            if s < threshold {
                below += 1;
            }
        }
        (best, below)
    });
    let mut out = SupportScan {
        min_support: f64::INFINITY,
        worst_direction: Vec3::new(0.0, 0.0, 1.0),
        below: 0,
    };
    for ((s, u), below) in parts {
        if s < out.min_support {
            out.min_support = s;
            out.worst_direction = u;
        }
        out.below += below;
    }
    out
}

/// Checks whether the unit sphere lies in the convex hull of the curve, up
/// to the resolution of the direction set.
pub fn check_inspects(curve: &Curve3, sampler: &DirectionSampler, tol: f64) -> InspectionReport {
    let scan = support_scan(curve.points(), sampler, 1.0 - tol);
    let w = scan.worst_direction;
    InspectionReport {
        inspects: scan.below == 0 && scan.min_support >= 1.0 - tol,
        min_support: scan.min_support,
        worst_direction: [w.x, w.y, w.z],
        uncovered_directions: scan.below,
        samples: sampler.count as u64,
        scheme: sampler.describe(),
        tol,
    }
}

/// A supporting plane `⟨x, normal⟩ = offset` through three vertices, with
/// every vertex on the side `⟨x, normal⟩ ≤ offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HullPlane {
    pub normal: Vec3,
    pub offset: f64,
    pub vertices: [usize; 3],
}

/// All supporting planes through vertex triples, by brute force. Cost grows
/// as n⁴; meant for point sets of at most a few hundred points.
pub fn hull_planes(points: &[Vec3]) -> Vec<HullPlane> {
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
    let eps = 1e-12 * scale;
    let n = points.len();
    let per_i: Vec<Vec<HullPlane>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in i + 1..n {
                for k in j + 1..n {
                    let Some(nrm) = (points[j] - points[i]).cross(points[k] - points[i]).normalized() else {
                        continue;
                    };
                    let d = points[i].dot(nrm);
                    let (mut above, mut below) = (false, false);
                    for p in points {
                        let s = p.dot(nrm) - d;
                        above |= s > eps;
                        below |= s < -eps;
                        if above && below {
                            break;
                        }
                    }
                    if !above {
                        out.push(HullPlane { normal: nrm, offset: d, vertices: [i, j, k] });
                    }
                    if !below {
                        out.push(HullPlane { normal: -nrm, offset: -d, vertices: [i, j, k] });
                    }
                }
            }
            out
        })
        .collect();
    per_i.into_iter().flatten().collect()
}

/// Exact minimum of the support function over all unit directions: the
/// distance from the origin to the hull boundary, negative when the origin
/// is outside the hull.
pub fn exact_min_support(points: &[Vec3]) -> f64 {
    hull_planes(points).iter().map(|p| p.offset).fold(f64::INFINITY, f64::min)
}

/// Distance from `c` to the nearest point of the curve.
pub fn curve_distance(curve: &Curve3, c: Vec3) -> f64 {
    curve
        .edges()
        .map(|(a, b)| {
            if a == b {
                (a - c).norm()
            } else {
                (a - c).segment_closest_to_origin(b - c).norm()
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest radius of a ball about `c` that stays inside the sampled hull and
/// away from the curve. Never negative.
pub fn inradius_at_center(curve: &Curve3, c: Vec3, sampler: &DirectionSampler) -> f64 {
    let shifted: Vec<Vec3> = curve.points().iter().map(|&v| v - c).collect();
    let hull = support_scan(&shifted, sampler, 0.0).min_support;
    curve_distance(curve, c).min(hull).max(0.0)
}

/// Coordinate ascent on the center: tries `±step` along each axis, keeps
/// improvements and halves the step otherwise.
pub fn refine_inradius_center(
    curve: &Curve3,
    start: Vec3,
    sampler: &DirectionSampler,
    iterations: usize,
    step: f64,
) -> (Vec3, f64) {
    let mut c = start;
    let mut best = inradius_at_center(curve, c, sampler);
    let mut step = step;
    let axes = [
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];
    for _ in 0..iterations {
        let mut improved = false;
        for e in axes {
            for s in [step, -step] {
                let trial = c + e * s;
                let r = inradius_at_center(curve, trial, sampler);
                if r > best {
                    best = r;
                    c = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (c, best)
}

/// Discretization of the seam.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeamSpec {
    pub segments_per_arc: usize,
    pub scale: f64,
}

impl SeamSpec {
    pub fn new(segments_per_arc: usize, scale: f64) -> Result<Self> {
        if segments_per_arc < 2 {
            return Err(Error::InvalidArgument(format!(
                "segments_per_arc must be at least 2, got {segments_per_arc}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!("seam scale must be positive, got {scale}")));
        }
        Ok(Self {
            segments_per_arc,
            scale,
        })
    }
}

/// Point of seam arc `k` (0..4) at parameter `t ∈ [0, π]`, before scaling.
pub fn seam_point(k: usize, t: f64) -> Vec3 {
    let (s, c) = t.sin_cos();
    match k % 4 {
        0 => Vec3::new(c, s, 1.0),
        1 => Vec3::new(-1.0, -s, c),
        2 => Vec3::new(-c, s, -1.0),
        _ => Vec3::new(1.0, -s, -c),
    }
}

/// Derivative of [`seam_point`] in `t`.
pub fn seam_tangent(k: usize, t: f64) -> Vec3 {
    let (s, c) = t.sin_cos();
    match k % 4 {
        0 => Vec3::new(-s, c, 0.0),
        1 => Vec3::new(0.0, -c, -s),
        2 => Vec3::new(s, c, 0.0),
        _ => Vec3::new(0.0, -c, s),
    }
}

/// Position gap and tangent angle at each of the four joins
/// (end of arc `k` against start of arc `k + 1`).
pub fn seam_join_defects() -> [(f64, f64); 4] {
    std::array::from_fn(|k| {
        let gap = (seam_point(k, PI) - seam_point(k + 1, 0.0)).norm();
        let angle = seam_tangent(k, PI).angle_to(seam_tangent(k + 1, 0.0));
        (gap, angle)
    })
}

/// Four semicircles of radius `scale` in the planes z = r, x = −r, z = −r,
/// x = r, each cut into equal chords. Join points appear once.
pub fn baseball_seam(spec: &SeamSpec) -> Result<Curve3> {
    let n = spec.segments_per_arc;
    let mut pts = Vec::with_capacity(4 * n);
    for k in 0..4 {
        for j in 0..n {
            let t = if 2 * j == n {
                FRAC_PI_2
            } else {
                PI * j as f64 / n as f64
            };
            pts.push(seam_point(k, t) * spec.scale);
        }
    }
    Curve3::new(pts, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    use crate::vector::Mat3;

    fn octahedron_tour(scale: f64) -> Curve3 {
        let p = [
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (0.0, 0.0, 1.0),
            (-1.0, 0.0, 0.0),
            (0.0, -1.0, 0.0),
            (0.0, 0.0, -1.0),
        ];
        let pts = p.iter().map(|&(x, y, z)| Vec3::new(x, y, z) * scale).collect();
        Curve3::new(pts, true).unwrap()
    }

    #[test]
    fn octahedron_inspects() {
        let r = check_inspects(&octahedron_tour(2.0), &DirectionSampler::fibonacci(20000), 0.0);
        assert!(r.inspects);
        assert!(r.min_support >= 2.0 / 3f64.sqrt() - 1e-12);
        assert!(r.min_support < 2.0 / 3f64.sqrt() + 0.03);
        assert_eq!(r.uncovered_directions, 0);
    }

    #[test]
    fn exact_support_of_known_hulls() {
        let oct = octahedron_tour(2.0);
        assert!((exact_min_support(oct.points()) - 2.0 / 3f64.sqrt()).abs() < 1e-14);
        let moved: Vec<Vec3> = oct.points().iter().map(|&v| v + Vec3::new(0.0, 0.0, 5.0)).collect();
        assert!(exact_min_support(&moved) < 0.0);
        let seam = baseball_seam(&SeamSpec::new(8, 1.0).unwrap()).unwrap();
        let exact = exact_min_support(seam.points());
        let sampled = check_inspects(&seam, &DirectionSampler::fibonacci(200_000), 0.0).min_support;
        assert!(exact <= sampled + 1e-14);
        assert!(sampled - exact < 1e-3);
        assert!(exact < 1.0);
    }

    #[test]
    fn flat_circle_does_not_inspect() {
        let pts = (0..64)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 64.0;
                Vec3::new(SQRT_2 * t.cos(), SQRT_2 * t.sin(), 0.0)
            })
            .collect();
        let c = Curve3::new(pts, true).unwrap();
        let s = DirectionSampler::fibonacci(10000);
        let r = check_inspects(&c, &s, 1e-6);
        assert!(!r.inspects);
        assert!(r.uncovered_directions > 0);
        assert!(r.min_support <= 0.05);
        let unit = c.scaled(1.0 / SQRT_2).unwrap();
        assert!(inradius_at_center(&unit, Vec3::zero(), &s) < 0.05);
    }

    #[test]
    fn seam_shape() {
        let c = baseball_seam(&SeamSpec::new(2, 1.0).unwrap()).unwrap();
        assert_eq!(c.vertex_count(), 8);
        assert!(c.is_closed());
        for v in c.points() {
            assert!((v.norm() - SQRT_2).abs() < 1e-12 * SQRT_2);
        }
        for (gap, angle) in seam_join_defects() {
            assert!(gap < 1e-15);
            assert!(angle < 1e-9);
        }
        let fine = baseball_seam(&SeamSpec::new(256, 1.0).unwrap()).unwrap();
        let l = fine.length();
        assert!(l < 4.0 * PI && 4.0 * PI - l < 1e-4);
        let n = 256.0;
        let chords = 4.0 * n * 2.0 * (PI / (2.0 * n)).sin();
        assert!((l - chords).abs() < 1e-12);
        assert!(SeamSpec::new(1, 1.0).is_err());
        assert!(SeamSpec::new(4, 0.0).is_err());
    }

    #[test]
    fn seam_tangents_match_difference_quotients() {
        for k in 0..4 {
            for t in [0.3, 1.1, 2.9] {
                let h = 1e-6;
                let fd = (seam_point(k, t + h) - seam_point(k, t - h)) * (0.5 / h);
                assert!((fd - seam_tangent(k, t)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn seam_inspects_with_unit_inradius() {
        let c = baseball_seam(&SeamSpec::new(256, 1.0).unwrap()).unwrap();
        let s = DirectionSampler::fibonacci(100_000);
        let r = check_inspects(&c, &s, 1e-4);
        assert!(r.inspects, "{r:?}");
        let rho = inradius_at_center(&c, Vec3::zero(), &s);
        assert!((rho - 1.0).abs() < 1e-4, "{rho}");
        assert!(rho <= 1.0 + 1e-12);
        let c2 = baseball_seam(&SeamSpec::new(256, 2.0).unwrap()).unwrap();
        let rho2 = inradius_at_center(&c2, Vec3::zero(), &s);
        assert!((rho2 - 2.0 * rho).abs() < 1e-12);
    }

    #[test]
    fn refinement_recovers_shifted_center() {
        let c = octahedron_tour(2.0);
        let off = Vec3::new(0.2, -0.1, 0.05);
        let moved = c.map(|v| v + off).unwrap();
        let s = DirectionSampler::fibonacci(4000);
        let start = inradius_at_center(&moved, Vec3::zero(), &s);
        let (center, r) = refine_inradius_center(&moved, Vec3::zero(), &s, 20, 0.25);
        assert!(r >= start);
        assert!((center - off).norm() < 0.05, "{center:?}");
        assert!(r <= 2.0 / 3f64.sqrt() + 0.03, "{r}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn inradius_scales(s in 0.1f64..10.0, cx in -0.3f64..0.3, cy in -0.3f64..0.3) {
            let c = baseball_seam(&SeamSpec::new(16, 1.0).unwrap()).unwrap();
            let dirs = DirectionSampler::fibonacci(2000);
            let center = Vec3::new(cx, cy, 0.1);
            let a = inradius_at_center(&c, center, &dirs);
            let b = inradius_at_center(&c.scaled(s).unwrap(), center * s, &dirs);
            prop_assert!((b - s * a).abs() <= 1e-12 * s.max(1.0));
        }

        #[test]
        fn inspection_is_rotation_invariant(u1 in 0.0f64..1.0, u2 in 0.0f64..1.0, u3 in 0.0f64..1.0) {
            let rot = Mat3::from_unit_triple(u1, u2, u3);
            let dirs = DirectionSampler::fibonacci(3000);
            for curve in [octahedron_tour(2.0), octahedron_tour(1.1)] {
                let a = check_inspects(&curve, &dirs, 1e-9);
                let b = check_inspects(&curve.rotated(&rot).unwrap(), &dirs.with_rotation(rot), 1e-9);
                prop_assert_eq!(a.inspects, b.inspects);
                prop_assert!((a.min_support - b.min_support).abs() < 1e-12);
            }
        }

        #[test]
        fn seam_length_and_inradius(n in 2usize..24, r in 0.2f64..5.0) {
            let c = baseball_seam(&SeamSpec::new(n, r).unwrap()).unwrap();
            prop_assert!(c.length() <= 4.0 * PI * r + 1e-9);
            // Inscribed polygons lose hull support faster than length, so the
            // ratio sits above 4π.
            let rho = inradius_at_center(&c, Vec3::zero(), &DirectionSampler::fibonacci(20000));
            prop_assert!(c.length() / rho >= 4.0 * PI, "n={} ratio={}", n, c.length() / rho);
        }
    }
}

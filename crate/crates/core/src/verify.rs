//! The acceptance suite: ten numbered checks tying the closed forms to the
//! independent estimators, run by `sphere-inspect verify` and by the
//! `acceptance` test target.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI, SQRT_2};
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::{Curve2, Curve3};
use crate::error::Result;
use crate::horizon::{
    curve_efficiency, efficiency_quadrature, instantaneous_efficiency, lifted_edge, lifting_derivatives,
    orthogonal_efficiency, segment_horizon, segment_horizon_lens, spiral_edge_efficiency, spiral_edge_horizon,
    PhasePoint, SegmentHorizonInput,
};
use crate::inspection::{baseball_seam, check_inspects, exact_min_support, inradius_at_center, SeamSpec};
use crate::oracle::{crofton_length, mc_cap_pairs, mc_horizon};
use crate::shortener::{shorten, ShortenConfig};
use crate::sphere::{Cap, DirectionSampler};
use crate::unfold::{check_weight_inequality, spiral_efficiency, unfold, SpiralPiece, SpiralTolerances};
use crate::vector::{Mat3, Point, Vec2, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Monte Carlo sample count; the segment check uses ten times this.
    pub samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            samples: 1_000_000,
        }
    }
}

impl VerifyConfig {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// One sub-check of a criterion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2}. {} ({:.1} s)", self.id, self.title, self.seconds)?;
        for c in &self.checks {
            let t = if c.passed { "ok  " } else { "FAIL" };
            write!(f, "\n        {t} {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

fn timed(id: usize, title: &str, body: impl FnOnce() -> Result<Vec<Check>>) -> CriterionResult {
    let t0 = Instant::now();
    let checks = body().unwrap_or_else(|e| vec![Check::new("run", false, format!("error: {e}"))]);
    CriterionResult {
        id,
        title: title.into(),
        checks,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

/// A random triple `(h0, h1, ℓ)` whose line stays at distance at least
/// 1.01 from the origin.
fn random_segment(rng: &mut ChaCha8Rng) -> SegmentHorizonInput {
    loop {
        let h0: f64 = rng.random_range(1.05..3.0);
        let h1: f64 = rng.random_range(1.05..3.0);
        let lo = (h1 - h0).abs();
        let ell = rng.random_range(lo..h0 + h1);
        if let Ok(s) = SegmentHorizonInput::new(h0, h1, ell) {
            if s.line_distance() >= 1.01 && ell > 1e-3 {
                return s;
            }
        }
    }
}

pub fn criterion_1(cfg: &VerifyConfig) -> CriterionResult {
    timed(1, "segment horizon: closed form vs lens assembly vs Monte Carlo", || {
        let mut rng = cfg.rng(1);
        let segs: Vec<_> = (0..50).map(|_| random_segment(&mut rng)).collect();
        let mut pairs = Vec::with_capacity(segs.len());
        for s in &segs {
            let (p0, p1) = s.placement();
            pairs.push((Cap::from_viewpoint(p0)?, Cap::from_viewpoint(p1)?));
        }
        let samples = 10 * cfg.samples;
        let sampler = DirectionSampler::uniform(samples, cfg.seed);
        let mc = mc_cap_pairs(&pairs, &sampler);
        let (mut worst_z, mut worst_lens) = (0.0f64, 0.0f64);
        for (s, est) in segs.iter().zip(&mc) {
            let h = segment_horizon(*s)?;
            let lens = segment_horizon_lens(*s)?;
            worst_lens = worst_lens.max((h - lens).abs());
            let d = est.symmetric_difference;
            worst_z = worst_z.max((h - d.value).abs() / d.standard_error.max(1e-300));
        }
        Ok(vec![
            Check::new(
                "monte carlo",
                worst_z <= 3.0,
                format!("max |closed - MC| / SE = {worst_z:.3} over 50 segments, {samples} samples"),
            ),
            Check::new("lens", worst_lens <= 1e-9, format!("max |closed - lens| = {worst_lens:.3e}")),
        ])
    })
}

pub fn criterion_2(_cfg: &VerifyConfig) -> CriterionResult {
    timed(2, "orthogonal-start specialization of the segment horizon", || {
        let mut worst = 0.0f64;
        for h0 in linspace(1.01, 3.0, 100) {
            for ell in linspace(0.01, 3.0, 100) {
                let a = spiral_edge_horizon(h0, ell)?;
                let b = segment_horizon(SegmentHorizonInput::new(h0, (h0 * h0 + ell * ell).sqrt(), ell)?)?;
                worst = worst.max((a - b).abs());
            }
        }
        Ok(vec![Check::new(
            "grid",
            worst < 1e-9,
            format!("max difference {worst:.3e} on 100x100"),
        )])
    })
}

pub fn criterion_3(cfg: &VerifyConfig) -> CriterionResult {
    timed(3, "instantaneous efficiency: closed form vs quadrature, peak at sqrt 2", || {
        let mut rng = cfg.rng(3);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let h: f64 = rng.random_range(1.0..4.0);
            let lo = (1.0 / h).asin();
            let alpha = rng.random_range(lo..=FRAC_PI_2);
            let p = PhasePoint::new(h, alpha)?;
            let closed = instantaneous_efficiency(p)?;
            let quad = efficiency_quadrature(p, 1e-12)?;
            worst = worst.max((closed - quad).abs());
        }
        let n = 1_000_001;
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
        for h in linspace(1.0, 3.0, n) {
            let e = orthogonal_efficiency(h)?;
            if e > best {
                best = e;
                arg = h;
            }
        }
        let step = 2.0 / (n - 1) as f64;
        Ok(vec![
            Check::new("quadrature", worst <= 1e-8, format!("max |closed - quadrature| = {worst:.3e} at 1000 points")),
            Check::new(
                "peak",
                (best - 2.0).abs() <= 1e-10 && (arg - SQRT_2).abs() <= step,
                format!("grid max {best:.15} at h = {arg:.7} ({n} points)"),
            ),
        ])
    })
}

/// `E(h0, h1)` with the zero-length limit on the diagonal.
fn edge_efficiency(h0: f64, h1: f64) -> Result<f64> {
    if h1 > h0 {
        spiral_edge_efficiency(h0, h1)
    } else {
        orthogonal_efficiency(h0)
    }
}

pub fn criterion_4(_cfg: &VerifyConfig) -> CriterionResult {
    timed(4, "spiral-edge efficiency bound on a 200x200 grid", || {
        let grid: Vec<f64> = linspace(1.0, 3.0, 200).collect();
        let mut max = f64::NEG_INFINITY;
        let mut outside = Vec::new();
        for &h0 in &grid {
            for &h1 in grid.iter().filter(|h| **h >= h0) {
                let e = edge_efficiency(h0, h1)?;
                max = max.max(e);
                if e > 1.999 && ((h0 - SQRT_2).abs() >= 0.05 || (h1 - SQRT_2).abs() >= 0.05) {
                    outside.push((h0, h1, e));
                }
            }
        }
        let detail = match outside.iter().max_by(|a, b| a.2.total_cmp(&b.2)) {
            None => "no value above 1.999 outside the box".to_string(),
            Some((h0, h1, e)) => format!(
                "{} grid points above 1.999 outside the box, largest E({h0:.4}, {h1:.4}) = {e:.6}",
                outside.len()
            ),
        };
        Ok(vec![
            Check::new("bound", max <= 2.0 + 1e-9, format!("max E = {max:.15}")),
            Check::new("box", outside.is_empty(), detail),
        ])
    })
}

pub fn criterion_5(cfg: &VerifyConfig) -> CriterionResult {
    timed(5, "lifting derivatives vs finite differences", || {
        let mut rng = cfg.rng(5);
        let (mut worst_l, mut worst_h, mut worst_ratio) = (0.0f64, 0.0f64, 0.0f64);
        let step = 1e-5;
        for _ in 0..10 {
            let r = rng.random_range(1.05..3.0);
            let p = r + rng.random_range(0.2..3.0);
            let d = lifting_derivatives(r, p)?;
            let (l_plus, h_plus) = lifted_edge(r + step, p)?;
            let (l_minus, h_minus) = lifted_edge(r - step, p)?;
            let fd_l = (l_plus - l_minus) / (2.0 * step);
            let fd_h = (h_plus - h_minus) / (2.0 * step);
            worst_l = worst_l.max(((fd_l - d.dl) / d.dl).abs());
            worst_h = worst_h.max(((fd_h - d.dh) / d.dh).abs());
            let expected = 4.0 * (r * r - 1.0).sqrt() / (r * r);
            worst_ratio = worst_ratio.max((d.ratio - expected).abs());
        }
        Ok(vec![
            Check::new("length", worst_l <= 1e-6, format!("max relative error {worst_l:.3e}")),
            Check::new("horizon", worst_h <= 1e-6, format!("max relative error {worst_h:.3e}")),
            Check::new("ratio", worst_ratio <= 1e-9, format!("max |ratio - 4 sqrt(r^2-1)/r^2| = {worst_ratio:.3e}")),
        ])
    })
}

/// A closed polygon near a circle of radius about 2.5 in a random plane,
/// with every edge line at distance at least 1.05 from the origin.
fn random_space_curve(rng: &mut ChaCha8Rng) -> Result<Curve3> {
    loop {
        let n = rng.random_range(6..16);
        let rot = Mat3::from_unit_triple(rng.random(), rng.random(), rng.random());
        let pts: Vec<Vec3> = (0..n)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + rng.random_range(-0.2..0.2)) / n as f64;
                let h = rng.random_range(1.6..3.2);
                let z = rng.random_range(-0.8..0.8);
                rot.apply(Vec3::new(h * t.cos(), h * t.sin(), z))
            })
            .collect();
        let c = Curve3::new(pts, true)?;
        if c.validate_tangent_feasibility(1e-9).worst_line_distance >= 1.05 {
            return Ok(c);
        }
    }
}

pub fn criterion_6(cfg: &VerifyConfig) -> CriterionResult {
    timed(6, "unfolding preserves length, heights and efficiency", || {
        let mut rng = cfg.rng(6);
        let (mut worst_len, mut worst_h, mut worst_e) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..20 {
            let c = random_space_curve(&mut rng)?;
            let u = unfold(&c)?;
            worst_len = worst_len.max(u.length_error / c.length());
            worst_h = worst_h.max(u.height_error / c.max_vertex_height());
            let e = curve_efficiency(&c)?;
            let ep = curve_efficiency(&u.planar)?;
            worst_e = worst_e.max((e - ep).abs());
        }
        Ok(vec![
            Check::new("length", worst_len <= 1e-12, format!("max relative length error {worst_len:.3e}")),
            Check::new("heights", worst_h <= 1e-12, format!("max relative height error {worst_h:.3e}")),
            Check::new("efficiency", worst_e < 1e-10, format!("max |E(curve) - E(unfolding)| = {worst_e:.3e}")),
        ])
    })
}

fn great_circle(n: usize) -> Result<Curve3> {
    Curve3::new(
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                Vec3::new(t.cos(), 0.6 * t.sin(), 0.8 * t.sin())
            })
            .collect(),
        true,
    )
}

pub fn criterion_7(cfg: &VerifyConfig) -> CriterionResult {
    timed(7, "Crofton length of a great circle and of the seam", || {
        let sampler = DirectionSampler::uniform(cfg.samples, cfg.seed);
        let mut checks = Vec::new();
        let gc = great_circle(360)?;
        for (name, rho) in [("great circle pi/6", FRAC_PI_6), ("great circle pi/4", FRAC_PI_4), ("great circle pi/2", FRAC_PI_2)] {
            let e = crofton_length(&gc, rho, &sampler)?;
            let dev = (e.length - 2.0 * PI).abs();
            checks.push(Check::new(
                name,
                dev <= 3.0 * e.standard_error + 1e-12,
                format!("{:.6} vs 2pi, |dev| = {dev:.2e}, SE = {:.2e}", e.length, e.standard_error),
            ));
        }
        let seam = baseball_seam(&SeamSpec::new(256, 1.0)?)?;
        let unit = seam.map(|p| p * (1.0 / p.norm()))?;
        let e = crofton_length(&unit, FRAC_PI_4, &sampler)?;
        let target = 4.0 * PI / SQRT_2;
        let dev = (e.length - target).abs();
        checks.push(Check::new(
            "seam length",
            dev <= 3.0 * e.standard_error + 1e-12,
            format!("{:.6} vs 4pi/sqrt2, |dev| = {dev:.2e}, SE = {:.2e}", e.length, e.standard_error),
        ));
        let dev = (e.mean_count - 2.0).abs();
        checks.push(Check::new(
            "seam count",
            dev <= 3.0 * e.mean_count_standard_error + 1e-12,
            format!("mean {:.6}, |dev| = {dev:.2e}, SE = {:.2e}", e.mean_count, e.mean_count_standard_error),
        ));
        Ok(checks)
    })
}

pub fn criterion_8(cfg: &VerifyConfig) -> CriterionResult {
    timed(8, "seam with 512 segments per arc", || {
        let seam = baseball_seam(&SeamSpec::new(512, 1.0)?)?;
        let dirs = DirectionSampler::fibonacci(100_000);
        let l = seam.length();
        let rho = inradius_at_center(&seam, Vec3::zero(), &dirs);
        let insp = check_inspects(&seam, &dirs, 1e-5);
        let mc = mc_horizon(&seam, &DirectionSampler::uniform(cfg.samples, cfg.seed))?;
        let e = mc.value / l;
        let se = mc.standard_error / l;
        Ok(vec![
            Check::new(
                "length",
                (l - 4.0 * PI).abs() <= 1e-5,
                format!("L - 4pi = {:.3e} (chord shortfall)", l - 4.0 * PI),
            ),
            Check::new("inradius", (rho - 1.0).abs() <= 1e-5, format!("inradius - 1 = {:.3e}", rho - 1.0)),
            Check::new(
                "inspects",
                insp.inspects,
                format!("min support {:.9} at tol 1e-5, {} directions", insp.min_support, insp.samples),
            ),
            Check::new(
                "efficiency",
                (e - 2.0).abs() <= 3.0 * se,
                format!("H/L = {e:.6}, SE = {se:.2e}"),
            ),
        ])
    })
}

fn octahedron_start() -> Result<Curve3> {
    let v = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, -1.0)];
    let tour = Curve3::new(v.iter().map(|&(x, y, z)| Vec3::new(x, y, z) * 2.0).collect(), true)?;
    Ok(tour.resample_constant_speed(64)?.curve)
}

pub fn criterion_9(cfg: &VerifyConfig) -> CriterionResult {
    timed(9, "shortener from the scaled seam and the octahedron", || {
        let shorten_cfg = ShortenConfig {
            seed: cfg.seed,
            ..Default::default()
        };
        let bound = 4.0 * PI * (1.0 - 1e-3);
        let mut checks = Vec::new();
        for (name, start) in [
            ("seam x1.3", baseball_seam(&SeamSpec::new(16, 1.3)?)?),
            ("octahedron", octahedron_start()?),
        ] {
            let t0 = Instant::now();
            let t = shorten(&start, &shorten_cfg)?;
            let secs = t0.elapsed().as_secs_f64();
            let l = t.final_length();
            let monotone = t.records.windows(2).all(|w| w[1].length <= w[0].length);
            let exact = exact_min_support(t.curve.points());
            checks.push(Check::new(
                &format!("{name} length"),
                l >= bound && monotone && secs <= 180.0,
                format!(
                    "L/4pi = {:.6}, {} iterations, {} accepted, monotone = {monotone}, {secs:.1} s; exact hull support {exact:.6}",
                    l / (4.0 * PI),
                    t.records.len() - 1,
                    t.accepted_steps
                ),
            ));
            if name.starts_with("seam") {
                let near = t.curve.points().iter().filter(|p| (p.norm() - SQRT_2).abs() < 0.05).count();
                let frac = near as f64 / t.curve.vertex_count() as f64;
                checks.push(Check::new(
                    "seam heights",
                    frac >= 0.9,
                    format!("{near}/{} vertices within 0.05 of sqrt 2", t.curve.vertex_count()),
                ));
            }
        }
        Ok(checks)
    })
}

/// A strict polygonal spiral with at most six edges: orthogonal start, each
/// turn toward the origin and no sharper than the radial direction.
pub fn random_strict_spiral(rng: &mut ChaCha8Rng) -> Result<SpiralPiece> {
    loop {
        let r = rng.random_range(1.0..2.5);
        let edges = rng.random_range(1..=6);
        let mut pts = vec![Vec2::new(r, 0.0)];
        let mut dir = Vec2::new(0.0, 1.0);
        for i in 0..edges {
            let here = pts[i];
            if i > 0 {
                let slack = FRAC_PI_2 - here.angle_to(dir);
                dir = dir.rotated(rng.random_range(0.0..1.0) * slack.max(0.0));
            }
            pts.push(here + dir * rng.random_range(0.05..1.0));
        }
        let h: Vec<f64> = pts.iter().map(|p| p.norm()).collect();
        if h.windows(2).all(|w| w[1] > w[0] + 1e-6) {
            return SpiralPiece::new(Curve2::new(pts, false)?, &SpiralTolerances::default());
        }
    }
}

pub fn criterion_10(cfg: &VerifyConfig) -> CriterionResult {
    timed(10, "weight inequality and spiral efficiency on random spirals", || {
        let mut rng = cfg.rng(10);
        let (mut worst_gap, mut worst_e) = (f64::NEG_INFINITY, 0.0f64);
        let mut holds = true;
        for _ in 0..30 {
            let s = random_strict_spiral(&mut rng)?;
            let w = check_weight_inequality(&s, 64)?;
            holds &= w.lhs <= w.rhs + 1e-8;
            worst_gap = worst_gap.max(w.lhs - w.rhs);
            worst_e = worst_e.max(spiral_efficiency(&s)?);
        }
        Ok(vec![
            Check::new("weight", holds, format!("max LHS - RHS = {worst_gap:.3e} over 30 spirals")),
            Check::new("efficiency", worst_e <= 2.0 + 1e-6, format!("max efficiency {worst_e:.9}")),
        ])
    })
}

/// Runs the criteria in order.
pub fn run_all(cfg: &VerifyConfig) -> Vec<CriterionResult> {
    vec![
        criterion_1(cfg),
        criterion_2(cfg),
        criterion_3(cfg),
        criterion_4(cfg),
        criterion_5(cfg),
        criterion_6(cfg),
        criterion_7(cfg),
        criterion_8(cfg),
        criterion_9(cfg),
        criterion_10(cfg),
    ]
}

pub fn run_one(id: usize, cfg: &VerifyConfig) -> Option<CriterionResult> {
    Some(match id {
        1 => criterion_1(cfg),
        2 => criterion_2(cfg),
        3 => criterion_3(cfg),
        4 => criterion_4(cfg),
        5 => criterion_5(cfg),
        6 => criterion_6(cfg),
        7 => criterion_7(cfg),
        8 => criterion_8(cfg),
        9 => criterion_9(cfg),
        10 => criterion_10(cfg),
        _ => return None,
    })
}

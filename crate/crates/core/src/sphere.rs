//! Spherical caps and direction sets on the unit sphere.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{clamp_unit, Error, Result};
use crate::vector::{Mat3, Point, Vec3};

/// Clamp tolerance for inverse trig arguments.
pub const TRIG_TOL: f64 = 1e-9;
/// Caps this close to tangency are treated as disjoint or nested.
pub const TANGENCY_TOL: f64 = 1e-7;

/// A closed spherical cap of angular radius at most π/2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cap {
    center: Vec3,
    angular_radius: f64,
}

impl Cap {
    pub fn new(center: Vec3, angular_radius: f64) -> Result<Self> {
        if !center.is_finite() || !angular_radius.is_finite() {
            return Err(Error::NonFinite("Cap"));
        }
        if (center.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "cap center has norm {}",
                center.norm()
            )));
        }
        if !(0.0..=PI / 2.0).contains(&angular_radius) {
            return Err(Error::InvalidArgument(format!(
                "cap radius {angular_radius} outside [0, pi/2]"
            )));
        }
        Ok(Self {
            center,
            angular_radius,
        })
    }

    /// The cap of points visible from `p`: centered at `p/|p|` with radius
    /// `acos(1/|p|)`. Points within 1e-9 of the sphere give a radius-0 cap.
    pub fn from_viewpoint(p: Vec3) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::NonFinite("viewpoint"));
        }
        let h = p.norm();
        if h < 1.0 - TRIG_TOL {
            return Err(Error::InsideUnitBall { height: h });
        }
        let center = p * (1.0 / h);
        Ok(Self {
            center,
            angular_radius: if h <= 1.0 { 0.0 } else { (1.0 / h).acos() },
        })
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn angular_radius(&self) -> f64 {
        self.angular_radius
    }

    pub fn area(&self) -> f64 {
        let s = (self.angular_radius / 2.0).sin();
        4.0 * PI * s * s
    }

    pub fn contains(&self, u: Vec3) -> bool {
        self.center.dot(u) >= self.angular_radius.cos()
    }

    /// Area of the intersection of two caps (spherical lens formula).
    pub fn intersection_area(&self, other: &Cap) -> Result<f64> {
        let (r1, r2) = (self.angular_radius, other.angular_radius);
        if r1 == 0.0 || r2 == 0.0 {
            return Ok(0.0);
        }
        let d = self.center.angle_to(other.center);
        if d >= r1 + r2 - TANGENCY_TOL {
            return Ok(0.0);
        }
        if d + r1.min(r2) <= r1.max(r2) + TANGENCY_TOL {
            return Ok(if r1 <= r2 { self.area() } else { other.area() });
        }
        let (c1, c2, cd) = (r1.cos(), r2.cos(), d.cos());
        let (s1, s2, sd) = (r1.sin(), r2.sin(), d.sin());
        let a = clamp_unit((cd - c1 * c2) / (s1 * s2), TRIG_TOL, "lens vertex angle")?.acos();
        let b1 = clamp_unit((c2 - cd * c1) / (sd * s1), TRIG_TOL, "lens half-angle")?.acos();
        let b2 = clamp_unit((c1 - cd * c2) / (sd * s2), TRIG_TOL, "lens half-angle")?.acos();
        Ok((2.0 * (PI - a - c1 * b1 - c2 * b2)).max(0.0))
    }

    /// Area covered by exactly one of the two caps.
    pub fn symmetric_difference_area(&self, other: &Cap) -> Result<f64> {
        Ok(self.area() + other.area() - 2.0 * self.intersection_area(other)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Fibonacci,
    Uniform,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fibonacci" => Ok(Scheme::Fibonacci),
            "uniform" => Ok(Scheme::Uniform),
            _ => Err(Error::InvalidArgument(format!("unknown scheme {s:?}"))),
        }
    }
}

/// Directions generated per chunk. Chunk `k` of the uniform scheme draws from
/// ChaCha stream `k`, so results do not depend on the thread count.
pub const CHUNK: usize = 16384;

/// A reproducible set of unit directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionSampler {
    pub scheme: Scheme,
    pub count: usize,
    pub seed: u64,
    pub rotation: Option<Mat3>,
}

impl DirectionSampler {
    pub fn fibonacci(count: usize) -> Self {
        Self {
            scheme: Scheme::Fibonacci,
            count,
            seed: 0,
            rotation: None,
        }
    }

    pub fn uniform(count: usize, seed: u64) -> Self {
        Self {
            scheme: Scheme::Uniform,
            count,
            seed,
            rotation: None,
        }
    }

    pub fn new(scheme: Scheme, count: usize, seed: u64) -> Self {
        Self {
            scheme,
            count,
            seed,
            rotation: None,
        }
    }

    pub fn with_rotation(mut self, r: Mat3) -> Self {
        self.rotation = Some(r);
        self
    }

    /// Applies a rotation drawn uniformly at random from `seed`.
    pub fn with_random_rotation(self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let (a, b, c) = (rng.random(), rng.random(), rng.random());
        self.with_rotation(Mat3::from_unit_triple(a, b, c))
    }

    pub fn chunk_count(&self) -> usize {
        self.count.div_ceil(CHUNK)
    }

    /// Directions of chunk `k`.
    pub fn chunk(&self, k: usize) -> Vec<Vec3> {
        let start = k * CHUNK;
        let end = ((k + 1) * CHUNK).min(self.count);
        let mut out = Vec::with_capacity(end.saturating_sub(start));
        match self.scheme {
            Scheme::Fibonacci => {
                let golden = PI * (3.0 - 5f64.sqrt());
                let n = self.count as f64;
                for i in start..end {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n;
                    let phi = (i as f64 * golden) % TAU;
                    out.push(on_sphere(z, phi));
                }
            }
            Scheme::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(k as u64);
                for _ in start..end {
                    let u: f64 = rng.random();
                    let v: f64 = rng.random();
                    out.push(on_sphere(2.0 * u - 1.0, TAU * v));
                }
            }
        }
        if let Some(r) = &self.rotation {
            for d in &mut out {
                *d = r.apply(*d);
            }
        }
        out
    }

    /// Applies `f` to every chunk in parallel; results come back in chunk order.
    pub fn map_chunks<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[Vec3]) -> T + Sync,
    {
        (0..self.chunk_count())
            .into_par_iter()
            .map(|k| f(&self.chunk(k)))
            .collect()
    }

    pub fn sample_directions(&self) -> Vec<Vec3> {
        (0..self.chunk_count()).flat_map(|k| self.chunk(k)).collect()
    }

    pub fn describe(&self) -> String {
        match self.scheme {
            Scheme::Fibonacci => "fibonacci".into(),
            Scheme::Uniform => format!("uniform(seed={})", self.seed),
        }
    }
}

fn on_sphere(z: f64, phi: f64) -> Vec3 {
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Standard Monte Carlo estimate of `4π · P(event)` from a hit count.
pub(crate) fn area_estimate(hits: u64, n: u64) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    let var = p * (1.0 - p);
    (4.0 * PI * p, 4.0 * PI * (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    #[test]
    fn viewpoint_caps() {
        let c = Cap::from_viewpoint(Vec3::new(SQRT_2, 0.0, 0.0)).unwrap();
        assert_eq!(c.center(), Vec3::new(1.0, 0.0, 0.0));
        assert!((c.angular_radius() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(Cap::from_viewpoint(Vec3::new(1.0, 0.0, 0.0)).unwrap().angular_radius(), 0.0);
        let c = Cap::from_viewpoint(Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((c.angular_radius() - PI / 3.0).abs() < 1e-15);
        assert!((c.area() - PI).abs() < 1e-14);
        assert!(matches!(
            Cap::from_viewpoint(Vec3::new(0.5, 0.0, 0.0)),
            Err(Error::InsideUnitBall { .. })
        ));
    }

    #[test]
    fn cap_area_examples() {
        let z = Vec3::new(0.0, 0.0, 1.0);
        assert!((Cap::new(z, FRAC_PI_2).unwrap().area() - TAU).abs() < 1e-14);
        assert_eq!(Cap::new(z, 0.0).unwrap().area(), 0.0);
        assert!(Cap::new(z * 2.0, 0.1).is_err());
        assert!(Cap::new(z, 2.0).is_err());
    }

    #[test]
    fn cap_area_matches_membership_counts() {
        let cap = Cap::from_viewpoint(Vec3::new(0.0, 2.0, 0.0)).unwrap();
        let s = DirectionSampler::uniform(1_000_000, 3);
        let hits: u64 = s
            .map_chunks(|d| d.iter().filter(|u| cap.contains(**u)).count() as u64)
            .iter()
            .sum();
        let (est, _) = area_estimate(hits, s.count as u64);
        assert!((est - PI).abs() < 0.01 * PI, "{est}");
    }

    #[test]
    fn lens_special_cases() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let c = Cap::new(x, FRAC_PI_4).unwrap();
        assert!((c.intersection_area(&c).unwrap() - c.area()).abs() < 1e-15);
        let anti = Cap::new(-x, FRAC_PI_4).unwrap();
        assert_eq!(c.intersection_area(&anti).unwrap(), 0.0);
        let small = Cap::new(x, 0.1).unwrap();
        assert!((c.intersection_area(&small).unwrap() - small.area()).abs() < 1e-15);
    }

    #[test]
    fn lens_matches_monte_carlo() {
        let c0 = Cap::new(Vec3::new(1.0, 0.0, 0.0), FRAC_PI_4).unwrap();
        let c1 = Cap::new(Vec3::new(FRAC_PI_4.cos(), FRAC_PI_4.sin(), 0.0), FRAC_PI_4).unwrap();
        let exact = c0.intersection_area(&c1).unwrap();
        let s = DirectionSampler::uniform(10_000_000, 11);
        let hits: u64 = s
            .map_chunks(|d| d.iter().filter(|u| c0.contains(**u) && c1.contains(**u)).count() as u64)
            .iter()
            .sum();
        let (est, se) = area_estimate(hits, s.count as u64);
        assert!((est - exact).abs() < 3.0 * se, "{est} vs {exact} (se {se})");
    }

    #[test]
    fn fibonacci_is_deterministic_and_unit() {
        let a = DirectionSampler::fibonacci(2).sample_directions();
        let b = DirectionSampler::fibonacci(2).sample_directions();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert!(a[0].z > 0.0 && a[1].z < 0.0);
        for d in DirectionSampler::fibonacci(50_000).sample_directions() {
            assert!((d.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_mean_is_small() {
        let s = DirectionSampler::uniform(1_000_000, 42);
        let parts = s.map_chunks(|d| d.iter().fold(Vec3::zero(), |acc, u| acc + *u));
        let sum = parts.into_iter().fold(Vec3::zero(), |acc, v| acc + v);
        let mean = sum * (1.0 / s.count as f64);
        assert!(mean.norm() < 0.005, "{mean:?}");
    }

    #[test]
    fn uniform_is_reproducible_and_chunk_stable() {
        let s = DirectionSampler::uniform(40_000, 9);
        let a = s.sample_directions();
        assert_eq!(a, s.sample_directions());
        assert_eq!(a.len(), 40_000);
        assert_eq!(&a[CHUNK..2 * CHUNK], s.chunk(1).as_slice());
        let other = DirectionSampler::uniform(40_000, 10).sample_directions();
        assert_ne!(a[0], other[0]);
    }

    #[test]
    fn fibonacci_covers_small_caps() {
        let pts = DirectionSampler::fibonacci(10_000).sample_directions();
        let centers = DirectionSampler::uniform(2_000, 5).sample_directions();
        let cos_r = 0.1f64.cos();
        for c in centers {
            assert!(pts.iter().any(|p| p.dot(c) >= cos_r), "uncovered {c:?}");
        }
    }

    fn unit() -> impl Strategy<Value = Vec3> {
        (-1.0f64..1.0, 0.0f64..TAU).prop_map(|(z, phi)| on_sphere(z, phi))
    }

    proptest! {
        #[test]
        fn lens_bounds(c0 in unit(), c1 in unit(), r0 in 0.0f64..FRAC_PI_2, r1 in 0.0f64..FRAC_PI_2) {
            let a = Cap::new(c0, r0).unwrap();
            let b = Cap::new(c1, r1).unwrap();
            let ab = a.intersection_area(&b).unwrap();
            let ba = b.intersection_area(&a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab <= a.area().min(b.area()) + 1e-12);
            prop_assert!(ab >= (a.area() + b.area() - 4.0 * PI).max(0.0) - 1e-12);
            prop_assert!(a.symmetric_difference_area(&b).unwrap() >= -1e-12);
        }

        #[test]
        fn lens_matches_coarse_membership(c0 in unit(), c1 in unit(), r0 in 0.05f64..FRAC_PI_2, r1 in 0.05f64..FRAC_PI_2) {
            let a = Cap::new(c0, r0).unwrap();
            let b = Cap::new(c1, r1).unwrap();
            let s = DirectionSampler::fibonacci(200_000);
            let hits = s.sample_directions().iter().filter(|u| a.contains(**u) != b.contains(**u)).count() as u64;
            let (est, _) = area_estimate(hits, s.count as u64);
            prop_assert!((est - a.symmetric_difference_area(&b).unwrap()).abs() < 0.01);
        }
    }
}

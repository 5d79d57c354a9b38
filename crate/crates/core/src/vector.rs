//! Small fixed-size vector types used throughout the crate.
//!
//! `Vec3` is the ambient space of space curves; `Vec2` hosts planar curves
//! (unfoldings and spirals). Both implement [`Point`], which is the minimal
//! interface the generic polyline code needs.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

/// Operations shared by [`Vec2`] and [`Vec3`].
pub trait Point:
    Copy
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
{
    const DIM: usize;

    fn zero() -> Self;
    fn dot(self, other: Self) -> f64;
    fn coords(self) -> Vec<f64>;
    fn from_coords(c: &[f64]) -> Option<Self>;

    fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    fn is_finite(self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    fn lerp(self, other: Self, u: f64) -> Self {
        self + (other - self) * u
    }

    /// Angle between two nonzero vectors, in [0, π]. Uses the half-angle
    /// form, which keeps full relative accuracy for nearly parallel vectors.
    fn angle_to(self, other: Self) -> f64 {
        let a = self * (1.0 / self.norm());
        let b = other * (1.0 / other.norm());
        2.0 * (a - b).norm().atan2((a + b).norm())
    }

    /// Distance from the origin to the infinite line through `self` and `other`.
    fn line_distance_from_origin(self, other: Self) -> f64 {
        let d = other - self;
        let dd = d.norm_sq();
        (self - d * (self.dot(d) / dd)).norm()
    }

    /// Closest point of the segment `[self, other]` to the origin.
    fn segment_closest_to_origin(self, other: Self) -> Self {
        let d = other - self;
        let u = (-self.dot(d) / d.norm_sq()).clamp(0.0, 1.0);
        self.lerp(other, u)
    }
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self::new(x, y, z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("Vec3"))
        }
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    /// Some unit vector orthogonal to `self` (which must be nonzero).
    pub fn any_orthogonal(self) -> Self {
        let a = if self.x.abs() <= self.y.abs() && self.x.abs() <= self.z.abs() {
            Vec3::new(1.0, 0.0, 0.0)
        } else if self.y.abs() <= self.z.abs() {
            Vec3::new(0.0, 1.0, 0.0)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        self.cross(a).normalized().expect("nonzero input")
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        let v = Self::new(x, y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("Vec2"))
        }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

macro_rules! impl_ops {
    ($t:ident { $($f:ident),+ }) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t { $t { $($f: self.$f + o.$f),+ } }
        }
        impl AddAssign for $t {
            fn add_assign(&mut self, o: $t) { $(self.$f += o.$f;)+ }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t { $t { $($f: self.$f - o.$f),+ } }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, s: f64) -> $t { $t { $($f: self.$f * s),+ } }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t { $t { $($f: -self.$f),+ } }
        }
    };
}

impl_ops!(Vec3 { x, y, z });
impl_ops!(Vec2 { x, y });

impl Point for Vec3 {
    const DIM: usize = 3;

    fn zero() -> Self {
        Self::default()
    }
    fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    fn coords(self) -> Vec<f64> {
        vec![self.x, self.y, self.z]
    }
    fn from_coords(c: &[f64]) -> Option<Self> {
        match c {
            [x, y, z] => Some(Self::new(*x, *y, *z)),
            _ => None,
        }
    }
    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Point for Vec2 {
    const DIM: usize = 2;

    fn zero() -> Self {
        Self::default()
    }
    fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }
    fn coords(self) -> Vec<f64> {
        vec![self.x, self.y]
    }
    fn from_coords(c: &[f64]) -> Option<Self> {
        match c {
            [x, y] => Some(Self::new(*x, *y)),
            _ => None,
        }
    }
    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Row-major 3×3 matrix, used for rotations of curves and direction sets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub rows: [Vec3; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        rows: [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ],
    };

    /// Rotation by `angle` about `axis` (Rodrigues).
    pub fn rotation(axis: Vec3, angle: f64) -> Self {
        let k = axis.normalized().expect("rotation axis must be nonzero");
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Mat3 {
            rows: [
                Vec3::new(t * k.x * k.x + c, t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y),
                Vec3::new(t * k.x * k.y + s * k.z, t * k.y * k.y + c, t * k.y * k.z - s * k.x),
                Vec3::new(t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c),
            ],
        }
    }

    /// Rotation built from three uniform numbers in [0, 1) (Shoemake's method),
    /// which is Haar-uniform when the inputs are.
    pub fn from_unit_triple(u1: f64, u2: f64, u3: f64) -> Self {
        use std::f64::consts::TAU;
        let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
        let (qx, qy, qz, qw) = (
            a * (TAU * u2).sin(),
            a * (TAU * u2).cos(),
            b * (TAU * u3).sin(),
            b * (TAU * u3).cos(),
        );
        Mat3 {
            rows: [
                Vec3::new(
                    1.0 - 2.0 * (qy * qy + qz * qz),
                    2.0 * (qx * qy - qz * qw),
                    2.0 * (qx * qz + qy * qw),
                ),
                Vec3::new(
                    2.0 * (qx * qy + qz * qw),
                    1.0 - 2.0 * (qx * qx + qz * qz),
                    2.0 * (qy * qz - qx * qw),
                ),
                Vec3::new(
                    2.0 * (qx * qz - qy * qw),
                    2.0 * (qy * qz + qx * qw),
                    1.0 - 2.0 * (qx * qx + qy * qy),
                ),
            ],
        }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }
}

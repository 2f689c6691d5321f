use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// `p ↦ scale · R(theta) · p + (tx, ty)` in pixel coordinates (y down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub tx: f64,
    pub ty: f64,
    /// Radians.
    pub theta: f64,
    pub scale: f64,
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl SimilarityTransform {
    pub const IDENTITY: Self = Self {
        tx: 0.0,
        ty: 0.0,
        theta: 0.0,
        scale: 1.0,
    };

    pub fn new(tx: f64, ty: f64, theta: f64, scale: f64) -> Self {
        Self { tx, ty, theta, scale }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self { tx, ty, ..Self::IDENTITY }
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (
            self.scale * (c * x - s * y) + self.tx,
            self.scale * (s * x + c * y) + self.ty,
        )
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let (tx, ty) = self.apply(other.tx, other.ty);
        Self {
            tx,
            ty,
            theta: self.theta + other.theta,
            scale: self.scale * other.scale,
        }
    }

    pub fn inverse(&self) -> Self {
        let inv = Self {
            tx: 0.0,
            ty: 0.0,
            theta: -self.theta,
            scale: 1.0 / self.scale,
        };
        let (tx, ty) = inv.apply(-self.tx, -self.ty);
        Self { tx, ty, ..inv }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

/// Wraps an angle into `(-π/2, π/2]`, the range of an undirected axis.
pub fn wrap_axis_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(PI);
    if w > PI / 2.0 {
        w -= PI;
    }
    w
}

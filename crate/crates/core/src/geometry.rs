//! Planar vectors in pixel space and angle helpers.
//!
//! Pixel coordinates grow rightwards (`x`) and downwards (`y`). Angles are
//! measured counter-clockwise from the +x axis as seen on screen, i.e. with
//! the image `y` axis flipped, so a vector pointing "up" in the image has
//! angle +π/2.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector for a screen angle (counter-clockwise, image y flipped).
    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), -angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Screen angle of this vector in (-π, π].
    pub fn angle(self) -> f64 {
        (0.0 - self.y).atan2(self.x)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0).then(|| self / n)
    }

    /// Counter-clockwise (screen) perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

/// Integer pixel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pixel {
    pub x: u32,
    pub y: u32,
}

impl Pixel {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    /// Pixel centre in continuous coordinates.
    pub fn center(self) -> Vec2 {
        Vec2::new(self.x as f64, self.y as f64)
    }

    /// Ordering key used for deterministic tie-breaks: row first, then column.
    pub fn yx(self) -> (u32, u32) {
        (self.y, self.x)
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Signed counter-clockwise angle that rotates `from` onto `to`.
pub fn signed_angle_between(from: Vec2, to: Vec2) -> f64 {
    wrap_angle(to.angle() - from.angle())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn screen_angle_convention() {
        assert!((Vec2::new(0.0, -1.0).angle() - PI / 2.0).abs() < 1e-15);
        assert!((Vec2::new(-1.0, 0.0).angle() - PI).abs() < 1e-15);
        let v = Vec2::from_angle(0.7);
        assert!((v.angle() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn wrap_stays_in_half_open_interval() {
        for k in -20..20 {
            let a = k as f64 * 0.9;
            let w = wrap_angle(a);
            assert!(w > -PI && w <= PI, "{a} -> {w}");
            assert!(((a - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((a - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
    }

    #[test]
    fn signed_angle_quarter_turn() {
        let a = signed_angle_between(Vec2::new(1.0, 0.0), Vec2::new(0.0, -1.0));
        assert!((a - PI / 2.0).abs() < 1e-15);
        let b = signed_angle_between(Vec2::new(0.0, -1.0), Vec2::new(1.0, 0.0));
        assert!((b + PI / 2.0).abs() < 1e-15);
    }
}

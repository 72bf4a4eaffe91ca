use std::ops::{Add, Sub};

use crate::scalar::Real;

/// A point (or displacement) in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<T> {
    pub x1: T,
    pub x2: T,
}

impl<T: Real> Point<T> {
    pub fn new(x1: T, x2: T) -> Self {
        Point { x1, x2 }
    }

    pub fn origin() -> Self {
        Point {
            x1: T::zero(),
            x2: T::zero(),
        }
    }

    pub fn dot(self, other: Self) -> T {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    pub fn norm2(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x1.hypot(self.x2)
    }

    /// Signed area term `x2*y1 - x1*y2` that drives the kernel phase.
    pub fn cross(self, other: Self) -> T {
        self.x2 * other.x1 - self.x1 * other.x2
    }
}

impl<T: Real> Add for Point<T> {
    type Output = Point<T>;
    fn add(self, rhs: Self) -> Self {
        Point::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl<T: Real> Sub for Point<T> {
    type Output = Point<T>;
    fn sub(self, rhs: Self) -> Self {
        Point::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebra() {
        let x = Point::new(1.0, 2.0);
        let y = Point::new(3.0, -1.0);
        assert_eq!((x + y).x1, 4.0);
        assert_eq!((x - y).x2, 3.0);
        assert_eq!(x.dot(y), 1.0);
        assert_eq!(x.norm2(), 5.0);
        assert_eq!(x.cross(y), 2.0 * 3.0 - 1.0 * (-1.0));
        assert!((Point::new(3.0f64, 4.0).norm() - 5.0).abs() < 1e-15);
    }
}

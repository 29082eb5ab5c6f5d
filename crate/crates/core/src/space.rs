//! Inner-product space abstraction shared by the iteration drivers.
//!
//! The fixed-point drivers only need linear combinations, inner products and
//! a finiteness check, so scalars, images, dual fields and primal-dual pairs
//! all run through the same generic machinery.

/// Element of a real inner-product space.
pub trait InnerSpace: Clone {
    /// Returns `a*u + b*v`.
    fn lincomb(a: f64, u: &Self, b: f64, v: &Self) -> Self;

    /// Euclidean inner product.
    fn dot(&self, other: &Self) -> f64;

    /// True when every coordinate is finite.
    fn all_finite(&self) -> bool;

    /// Returns `self - v`.
    fn sub(&self, v: &Self) -> Self {
        Self::lincomb(1.0, self, -1.0, v)
    }

    /// Euclidean norm.
    fn norm(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }

    /// Euclidean distance to another point.
    fn dist(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }
}

impl InnerSpace for f64 {
    fn lincomb(a: f64, u: &Self, b: f64, v: &Self) -> Self {
        a * u + b * v
    }

    fn dot(&self, other: &Self) -> f64 {
        self * other
    }

    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

/// Point in a product space X x Y with the sum inner product.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDual<X, Y> {
    pub x: X,
    pub y: Y,
}

impl<X, Y> PrimalDual<X, Y> {
    pub fn new(x: X, y: Y) -> Self {
        PrimalDual { x, y }
    }
}

impl<X: InnerSpace, Y: InnerSpace> InnerSpace for PrimalDual<X, Y> {
    fn lincomb(a: f64, u: &Self, b: f64, v: &Self) -> Self {
        PrimalDual {
            x: X::lincomb(a, &u.x, b, &v.x),
            y: Y::lincomb(a, &u.y, b, &v.y),
        }
    }

    fn dot(&self, other: &Self) -> f64 {
        self.x.dot(&other.x) + self.y.dot(&other.y)
    }

    fn all_finite(&self) -> bool {
        self.x.all_finite() && self.y.all_finite()
    }
}

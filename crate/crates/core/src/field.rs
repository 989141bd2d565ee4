//! Scalar fields: the level-set function `F` (value and gradient) and the
//! integrand `f` (value only).

use crate::geometry::Point;

/// A scalar function of `D` real variables with an exact gradient.
pub trait ScalarField<const D: usize>: Send + Sync {
    fn value(&self, p: &Point<D>) -> f64;

    fn value_and_gradient(&self, p: &Point<D>) -> (f64, Point<D>);
}

/// Field built from a pair of closures; handy in tests and for compiled-in
/// level sets.
pub struct FnField<V, G> {
    value: V,
    gradient: G,
}

impl<V, G> FnField<V, G> {
    pub fn new(value: V, gradient: G) -> Self {
        FnField { value, gradient }
    }
}

impl<const D: usize, V, G> ScalarField<D> for FnField<V, G>
where
    V: Fn(&Point<D>) -> f64 + Send + Sync,
    G: Fn(&Point<D>) -> Point<D> + Send + Sync,
{
    fn value(&self, p: &Point<D>) -> f64 {
        (self.value)(p)
    }

    fn value_and_gradient(&self, p: &Point<D>) -> (f64, Point<D>) {
        ((self.value)(p), (self.gradient)(p))
    }
}

/// The constant function; default integrand.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl<const D: usize> ScalarField<D> for Constant {
    fn value(&self, _p: &Point<D>) -> f64 {
        self.0
    }

    fn value_and_gradient(&self, _p: &Point<D>) -> (f64, Point<D>) {
        (self.0, Point::ORIGIN)
    }
}

/// `-F`; used to integrate over the complement `{F >= 0}`.
pub struct Negated<'a, const D: usize>(pub &'a dyn ScalarField<D>);

impl<const D: usize> ScalarField<D> for Negated<'_, D> {
    fn value(&self, p: &Point<D>) -> f64 {
        -self.0.value(p)
    }

    fn value_and_gradient(&self, p: &Point<D>) -> (f64, Point<D>) {
        let (v, g) = self.0.value_and_gradient(p);
        (-v, -g)
    }
}

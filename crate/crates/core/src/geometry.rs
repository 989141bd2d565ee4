//! Points, boxes, simplices and sign classification of simplices against the
//! zero level set.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{QuadError, Result};

/// A point (or vector) in `D`-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<const D: usize>(pub [f64; D]);

pub type Point2 = Point<2>;
pub type Point3 = Point<3>;

impl<const D: usize> Point<D> {
    pub const ORIGIN: Self = Point([0.0; D]);

    pub fn new(coords: [f64; D]) -> Self {
        Point(coords)
    }

    /// Builds a point, rejecting NaN/Inf coordinates.
    pub fn try_new(coords: [f64; D]) -> Result<Self> {
        if coords.iter().all(|c| c.is_finite()) {
            Ok(Point(coords))
        } else {
            Err(QuadError::NonFinite(coords.to_vec()))
        }
    }

    pub fn coords(&self) -> &[f64; D] {
        &self.0
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    /// `self + t * (other - self)`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        let mut out = [0.0; D];
        for k in 0..D {
            out[k] = self.0[k] + t * (other.0[k] - self.0[k]);
        }
        Point(out)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl<const D: usize> Index<usize> for Point<D> {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl<const D: usize> IndexMut<usize> for Point<D> {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.0[k]
    }
}

impl<const D: usize> Add for Point<D> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for k in 0..D {
            self.0[k] += rhs.0[k];
        }
        self
    }
}

impl<const D: usize> Sub for Point<D> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for k in 0..D {
            self.0[k] -= rhs.0[k];
        }
        self
    }
}

impl<const D: usize> Mul<f64> for Point<D> {
    type Output = Self;
    fn mul(mut self, s: f64) -> Self {
        for c in self.0.iter_mut() {
            *c *= s;
        }
        self
    }
}

impl<const D: usize> Neg for Point<D> {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

pub fn cross3(a: &Point3, b: &Point3) -> Point3 {
    Point([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

pub fn det3(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    a.dot(&cross3(b, c))
}

pub fn cross2(a: &Point2, b: &Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Axis-aligned box `U = [lo_0, hi_0] x ... x [lo_{D-1}, hi_{D-1}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain<const D: usize> {
    pub lo: Point<D>,
    pub hi: Point<D>,
}

impl<const D: usize> BoxDomain<D> {
    pub fn new(lo: [f64; D], hi: [f64; D]) -> Result<Self> {
        for k in 0..D {
            if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]) {
                return Err(QuadError::Config(format!(
                    "box axis {k}: need finite lo < hi, got [{}, {}]",
                    lo[k], hi[k]
                )));
            }
        }
        Ok(BoxDomain {
            lo: Point(lo),
            hi: Point(hi),
        })
    }

    /// Parses the flat `x0,x1,y0,y1[,z0,z1]` layout used on the command line.
    pub fn from_flat(bounds: &[f64]) -> Result<Self> {
        if bounds.len() != 2 * D {
            return Err(QuadError::Config(format!(
                "box needs {} numbers for dimension {D}, got {}",
                2 * D,
                bounds.len()
            )));
        }
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        for k in 0..D {
            lo[k] = bounds[2 * k];
            hi[k] = bounds[2 * k + 1];
        }
        Self::new(lo, hi)
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn measure(&self) -> f64 {
        (0..D).map(|k| self.extent(k)).product()
    }

    pub fn translated(&self, shift: [f64; D]) -> Self {
        let s = Point(shift);
        BoxDomain {
            lo: self.lo + s,
            hi: self.hi + s,
        }
    }
}

/// Signed measure of a simplex given by its `D + 1` vertices
/// (signed area in 2-D, signed volume in 3-D).
pub fn signed_measure<const D: usize>(verts: &[Point<D>]) -> f64 {
    assert_eq!(verts.len(), D + 1, "simplex needs D + 1 vertices");
    match D {
        2 => {
            let e1 = [verts[1][0] - verts[0][0], verts[1][1] - verts[0][1]];
            let e2 = [verts[2][0] - verts[0][0], verts[2][1] - verts[0][1]];
            0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
        }
        3 => {
            let e = |i: usize| {
                Point([
                    verts[i][0] - verts[0][0],
                    verts[i][1] - verts[0][1],
                    verts[i][2] - verts[0][2],
                ])
            };
            det3(&e(1), &e(2), &e(3)) / 6.0
        }
        _ => unreachable!("only 2-D and 3-D simplices are supported"),
    }
}

/// Affine combination `sum_i w_i v_i`. Weights are expected to sum to one.
pub fn barycentric_point<const D: usize>(verts: &[Point<D>], weights: &[f64]) -> Point<D> {
    debug_assert_eq!(verts.len(), weights.len());
    debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    let mut out = [0.0; D];
    for (v, &w) in verts.iter().zip(weights) {
        for k in 0..D {
            out[k] += w * v[k];
        }
    }
    Point(out)
}

/// Sign of `F` at the vertices of one simplex; `0` only for values within
/// the zero tolerance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern(pub Vec<i8>);

impl SignPattern {
    pub fn from_values(values: &[f64], zero_tol: f64) -> Self {
        SignPattern(values.iter().map(|&v| sign_with_tol(v, zero_tol)).collect())
    }
}

pub fn sign_with_tol(value: f64, zero_tol: f64) -> i8 {
    if value.abs() <= zero_tol {
        0
    } else if value > 0.0 {
        1
    } else {
        -1
    }
}

/// Direction sign with `sgn(0) = +1`.
pub fn direction_sign(value: f64) -> f64 {
    if value < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// How a simplex meets the level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementCase {
    /// Entirely in `{F > 0}`.
    Empty,
    /// Entirely in `{F < 0}`.
    Full,
    /// One vertex (the apex) carries the strict minority sign.
    CutApex(usize),
    /// Strict signs split two against two (3-D only); the positive pair.
    CutTwoTwo([usize; 2]),
}

impl ElementCase {
    pub fn is_cut(&self) -> bool {
        matches!(self, ElementCase::CutApex(_) | ElementCase::CutTwoTwo(_))
    }
}

pub fn classify_simplex(signs: &SignPattern, dim: usize) -> Result<ElementCase> {
    let s = &signs.0;
    if !(dim == 2 || dim == 3) || s.len() != dim + 1 {
        return Err(QuadError::Config(format!(
            "sign pattern of length {} for dimension {dim}",
            s.len()
        )));
    }
    let zeros = s.iter().filter(|&&v| v == 0).count();
    let pos = s.iter().filter(|&&v| v > 0).count();
    let neg = s.iter().filter(|&&v| v < 0).count();
    if zeros > 1 {
        return Err(QuadError::AmbiguousSigns(s.clone()));
    }
    let position = |sign: i8| s.iter().position(|&v| v == sign).unwrap();
    match (pos, neg) {
        (_, 0) if pos > 0 => Ok(ElementCase::Empty),
        (0, _) if neg > 0 => Ok(ElementCase::Full),
        (1, n) if n > 1 => Ok(ElementCase::CutApex(position(1))),
        (p, 1) if p > 1 => Ok(ElementCase::CutApex(position(-1))),
        (2, 2) => {
            let mut pair = [0; 2];
            for (slot, i) in pair.iter_mut().zip((0..4).filter(|&i| s[i] > 0)) {
                *slot = i;
            }
            Ok(ElementCase::CutTwoTwo(pair))
        }
        _ => Err(QuadError::AmbiguousSigns(s.clone())),
    }
}

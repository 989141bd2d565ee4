//! Root of `F` along a straight segment: Newton on the directional
//! derivative, safeguarded by a bisection bracket.

use crate::error::{QuadError, Result};
use crate::field::ScalarField;
use crate::geometry::Point;

pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentRoot<const D: usize> {
    /// Parameter on the segment, `point = A + t (B - A)`.
    pub t: f64,
    pub point: Point<D>,
    pub fvalue: f64,
}

/// Finds the zero of `g(t) = F(A + t (B - A))` on `[0, 1]`.
///
/// An endpoint with `|F| <= zero_tol` is returned as the root directly.
pub fn root_on_segment<const D: usize>(
    field: &dyn ScalarField<D>,
    a: &Point<D>,
    b: &Point<D>,
    zero_tol: f64,
) -> Result<SegmentRoot<D>> {
    let fa = field.value(a);
    let fb = field.value(b);
    root_with_values(field, a, b, fa, fb, zero_tol)
}

/// Same as [`root_on_segment`] when `F(A)` and `F(B)` are already known.
pub fn root_with_values<const D: usize>(
    field: &dyn ScalarField<D>,
    a: &Point<D>,
    b: &Point<D>,
    fa: f64,
    fb: f64,
    zero_tol: f64,
) -> Result<SegmentRoot<D>> {
    if !(fa.is_finite() && fb.is_finite()) {
        let bad = if fa.is_finite() { b } else { a };
        return Err(QuadError::NonFinite(bad.0.to_vec()));
    }
    if fa.abs() <= zero_tol {
        return Ok(SegmentRoot {
            t: 0.0,
            point: *a,
            fvalue: fa,
        });
    }
    if fb.abs() <= zero_tol {
        return Ok(SegmentRoot {
            t: 1.0,
            point: *b,
            fvalue: fb,
        });
    }
    if (fa > 0.0) == (fb > 0.0) {
        return Err(QuadError::NoSignChange { fa, fb });
    }

    let dir = *b - *a;
    let root_tol = 1e-14 * (1.0 + fa.abs() + fb.abs());
    // bracket [lo, hi] with g(lo) of the sign of fa
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut g_lo, mut g_hi) = (fa, fb);
    let mut t = fa / (fa - fb);
    let mut best = (f64::INFINITY, t, 0.0);

    for _ in 0..MAX_ITERATIONS {
        let p = a.lerp(b, t);
        let (g, grad) = field.value_and_gradient(&p);
        if !g.is_finite() {
            return Err(QuadError::NonFinite(p.0.to_vec()));
        }
        if g.abs() < best.0 {
            best = (g.abs(), t, g);
        }
        if g.abs() <= root_tol {
            return Ok(SegmentRoot { t, point: p, fvalue: g });
        }
        if (g > 0.0) == (g_lo > 0.0) {
            lo = t;
            g_lo = g;
        } else {
            hi = t;
            g_hi = g;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
            // bracket collapsed to adjacent floats; nothing better exists
            let t = if g_lo.abs() < g_hi.abs() { lo } else { hi };
            let p = a.lerp(b, t);
            let g = field.value(&p);
            let (t, g) = if g.abs() <= best.0 { (t, g) } else { (best.1, best.2) };
            return Ok(SegmentRoot {
                t,
                point: a.lerp(b, t),
                fvalue: g,
            });
        }
        let slope = grad.dot(&dir);
        let newton = t - g / slope;
        t = if slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(QuadError::NoConvergence(MAX_ITERATIONS))
}

/// Times the ray `apex -> x` may be stretched by 1.5 looking for a crossing.
pub const MAX_RAY_EXTENSIONS: usize = 8;

/// Crossing of the level set on the ray from `apex` through `x`.
///
/// The crossing usually lies on the segment `[apex, x]`; when the level set
/// bulges past `x` the ray is searched further out, first up to the element
/// facet at parameter `facet_t` (if known), then at `1.5^k` times the
/// original length. Returns the point and its ray parameter.
pub fn ray_root<const D: usize>(
    field: &dyn ScalarField<D>,
    apex: &Point<D>,
    f_apex: f64,
    x: &Point<D>,
    facet_t: Option<f64>,
    zero_tol: f64,
) -> Result<(Point<D>, f64)> {
    let fx = field.value(x);
    if !fx.is_finite() {
        return Err(QuadError::NonFinite(x.0.to_vec()));
    }
    if fx.abs() <= zero_tol {
        return Ok((*x, 1.0));
    }
    if (fx > 0.0) != (f_apex > 0.0) {
        let r = root_with_values(field, apex, x, f_apex, fx, zero_tol)?;
        return Ok((r.point, r.t));
    }
    let stretches = facet_t
        .filter(|&t| t > 1.0 && t.is_finite())
        .into_iter()
        .chain((1..=MAX_RAY_EXTENSIONS as i32).map(|k| 1.5f64.powi(k)));
    for t_end in stretches {
        let end = apex.lerp(x, t_end);
        let fe = field.value(&end);
        if !fe.is_finite() {
            return Err(QuadError::NonFinite(end.0.to_vec()));
        }
        if fe.abs() <= zero_tol || (fe > 0.0) != (fx > 0.0) {
            let r = root_with_values(field, x, &end, fx, fe, zero_tol)?;
            return Ok((r.point, 1.0 + r.t * (t_end - 1.0)));
        }
    }
    Err(QuadError::RayMiss)
}

//! Gauss–Legendre rules on `[0, 1]` and the collapsed (Duffy) tensor rules
//! built from them on the reference triangle and tetrahedron.

use std::sync::OnceLock;

use crate::error::{QuadError, Result};

pub const MAX_ORDER: usize = 64;

/// `q`-point Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule1D {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// Rule on the reference triangle `{(s,t): s,t >= 0, s+t <= 1}` (weights sum
/// to 1/2) or the reference tetrahedron (weights sum to 1/6).
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexRule {
    pub dim: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn check_order(q: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&q) {
        Ok(())
    } else {
        Err(QuadError::OrderOutOfRange(q))
    }
}

/// Legendre polynomial `P_q(x)` and its derivative by the three-term recurrence.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn gauss_legendre_01(q: usize) -> Result<QuadRule1D> {
    check_order(q)?;
    if q == 1 {
        return Ok(QuadRule1D {
            nodes: vec![0.5],
            weights: vec![1.0],
        });
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    // Roots come in +-x pairs; solve for the positive half and mirror.
    for i in 0..q.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                let (_, d) = legendre(q, x);
                dp = d;
                break;
            }
        }
        if q % 2 == 1 && i == q / 2 {
            x = 0.0;
            dp = legendre(q, 0.0).1;
        }
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        // x descends with i, so (1 - x)/2 ascends
        nodes[i] = 0.5 * (1.0 - x);
        nodes[q - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    Ok(QuadRule1D { nodes, weights })
}

/// Collapsed rule `(s, t) = (u, (1-u) v)` with weight `w_u w_v (1-u)`.
pub fn triangle_rule(q: usize) -> Result<SimplexRule> {
    let g = gauss_legendre_01(q)?;
    let mut points = Vec::with_capacity(q * q);
    let mut weights = Vec::with_capacity(q * q);
    for (&u, &wu) in g.nodes.iter().zip(&g.weights) {
        for (&v, &wv) in g.nodes.iter().zip(&g.weights) {
            points.push([u, (1.0 - u) * v, 0.0]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    Ok(SimplexRule {
        dim: 2,
        points,
        weights,
    })
}

/// Collapsed rule on the reference tetrahedron: radial coordinate `a` from
/// the origin and a collapsed triangle `(b, c) = (s, (1-s) t)` on the far
/// face, `x = a (b, c, 1 - b - c)`, weight `w_a w_s w_t a^2 (1 - s)`.
///
/// A one-point Gauss rule cannot integrate the `a^2` factor, so `q = 1` is
/// the centroid rule instead.
pub fn tet_rule(q: usize) -> Result<SimplexRule> {
    let g = gauss_legendre_01(q)?;
    if q == 1 {
        return Ok(SimplexRule {
            dim: 3,
            points: vec![[0.25; 3]],
            weights: vec![1.0 / 6.0],
        });
    }
    let mut points = Vec::with_capacity(q * q * q);
    let mut weights = Vec::with_capacity(q * q * q);
    for (&a, &wa) in g.nodes.iter().zip(&g.weights) {
        for (&s, &ws) in g.nodes.iter().zip(&g.weights) {
            for (&t, &wt) in g.nodes.iter().zip(&g.weights) {
                let b = s;
                let c = (1.0 - s) * t;
                points.push([a * b, a * c, a * (1.0 - b - c)]);
                weights.push(wa * ws * wt * a * a * (1.0 - s));
            }
        }
    }
    Ok(SimplexRule {
        dim: 3,
        points,
        weights,
    })
}

/// All rules for one order, computed once per process.
#[derive(Debug)]
pub struct RuleSet {
    pub line: QuadRule1D,
    pub triangle: SimplexRule,
    pub tet: SimplexRule,
}

pub fn rules(q: usize) -> Result<&'static RuleSet> {
    check_order(q)?;
    static CACHE: [OnceLock<RuleSet>; MAX_ORDER] = [const { OnceLock::new() }; MAX_ORDER];
    Ok(CACHE[q - 1].get_or_init(|| RuleSet {
        line: gauss_legendre_01(q).expect("order checked"),
        triangle: triangle_rule(q).expect("order checked"),
        tet: tet_rule(q).expect("order checked"),
    }))
}

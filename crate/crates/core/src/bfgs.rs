//! Quasi-Newton minimization (BFGS, inverse-Hessian form) with a
//! strong-Wolfe line search.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    /// Converged once the gradient infinity-norm drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 1000,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

impl Minimum {
    pub fn gradient_norm(&self) -> f64 {
        inf_norm(&self.gradient)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if abs(*x) > m { abs(*x) } else { m })
}

struct Point {
    x: Vec<f64>,
    value: f64,
    gradient: Vec<f64>,
}

struct Objective<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>> Objective<F> {
    fn eval(&mut self, x: Vec<f64>) -> Result<Point> {
        self.evaluations += 1;
        let (value, gradient) = (self.f)(&x)?;
        if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "non-finite objective or gradient at x = {x:?} (value {value})"
            )));
        }
        Ok(Point { x, value, gradient })
    }

    fn along(&mut self, base: &Point, dir: &[f64], alpha: f64) -> Result<(Point, f64)> {
        let x = base.x.iter().zip(dir).map(|(x, d)| x + alpha * d).collect();
        let p = self.eval(x)?;
        let slope = dot(&p.gradient, dir);
        Ok((p, slope))
    }
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, kept
/// inside the middle 80% of the bracket; falls back to bisection.
fn interpolate(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (hi - lo);
    if disc >= 0.0 {
        let d2 = if b > a { sqrt(disc) } else { -sqrt(disc) };
        let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
        if t.is_finite() && t > lo + margin && t < hi - margin {
            return t;
        }
    }
    0.5 * (lo + hi)
}

/// Strong-Wolfe line search. Returns `None` if no acceptable step was found.
fn line_search<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>>(
    obj: &mut Objective<F>,
    start: &Point,
    dir: &[f64],
    alpha0: f64,
    opts: &BfgsOptions,
) -> Result<Option<Point>> {
    const MAX_BRACKET: usize = 40;
    const MAX_ZOOM: usize = 40;
    let f0 = start.value;
    let d0 = dot(&start.gradient, dir);
    let armijo = |alpha: f64, f: f64| f <= f0 + opts.c1 * alpha * d0;
    let curvature = |d: f64| abs(d) <= -opts.c2 * d0;

    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, d0);
    let mut alpha = alpha0;
    let mut bracket = None;
    for i in 0..MAX_BRACKET {
        let (p, d) = obj.along(start, dir, alpha)?;
        if !armijo(alpha, p.value) || (i > 0 && p.value >= f_prev) {
            bracket = Some((a_prev, f_prev, d_prev, alpha, p.value, d));
            break;
        }
        if curvature(d) {
            return Ok(Some(p));
        }
        if d >= 0.0 {
            bracket = Some((alpha, p.value, d, a_prev, f_prev, d_prev));
            break;
        }
        (a_prev, f_prev, d_prev) = (alpha, p.value, d);
        alpha *= 2.0;
    }
    let Some((mut lo, mut f_lo, mut d_lo, mut hi, mut f_hi, mut d_hi)) = bracket else {
        return Ok(None);
    };

    let mut best: Option<Point> = None;
    for _ in 0..MAX_ZOOM {
        if abs(hi - lo) < 1e-16 * (1.0 + abs(lo)) {
            break;
        }
        let a = interpolate(lo, f_lo, d_lo, hi, f_hi, d_hi);
        let (p, d) = obj.along(start, dir, a)?;
        if !armijo(a, p.value) || p.value >= f_lo {
            (hi, f_hi, d_hi) = (a, p.value, d);
        } else {
            if curvature(d) {
                return Ok(Some(p));
            }
            if d * (hi - lo) >= 0.0 {
                (hi, f_hi, d_hi) = (lo, f_lo, d_lo);
            }
            (lo, f_lo, d_lo) = (a, p.value, d);
            best = Some(p);
        }
    }
    // Bracket collapsed without the curvature condition: accept the best
    // sufficient-decrease point if there is one.
    Ok(best.filter(|p| p.value < f0))
}

/// Minimizes `f`, which returns the value and gradient at a point.
///
/// Non-finite values or gradients abort with [`Error::NumericFailure`].
/// The returned point is the best one accepted; when the line search stalls
/// before reaching the tolerance, `converged` is false.
pub fn minimize<F>(f: F, x0: &[f64], opts: &BfgsOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut obj = Objective { f, evaluations: 0 };
    let mut cur = obj.eval(x0.to_vec())?;
    let dim = x0.len();
    let identity = |h: &mut Vec<f64>, scale: f64| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..dim {
            h[i * dim + i] = scale;
        }
    };
    let mut h = vec![0.0; dim * dim];
    identity(&mut h, 1.0);
    let mut h_is_identity = true;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        if dim == 0 || inf_norm(&cur.gradient) < opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut dir: Vec<f64> = (0..dim)
            .map(|i| -dot(&h[i * dim..(i + 1) * dim], &cur.gradient))
            .collect();
        if dot(&dir, &cur.gradient) >= 0.0 {
            identity(&mut h, 1.0);
            h_is_identity = true;
            dir = cur.gradient.iter().map(|g| -g).collect();
        }
        let alpha0 = if h_is_identity {
            (1.0 / inf_norm(&dir)).min(1.0)
        } else {
            1.0
        };
        let next = match line_search(&mut obj, &cur, &dir, alpha0, opts)? {
            Some(p) => p,
            None if !h_is_identity => {
                identity(&mut h, 1.0);
                h_is_identity = true;
                continue;
            }
            None => break,
        };

        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next
            .gradient
            .iter()
            .zip(&cur.gradient)
            .map(|(a, b)| a - b)
            .collect();
        let ys = dot(&y, &s);
        let yy = dot(&y, &y);
        if ys > 1e-12 * sqrt(dot(&s, &s) * yy) && ys > 0.0 {
            if h_is_identity {
                identity(&mut h, ys / yy);
            }
            bfgs_update(&mut h, &s, &y, 1.0 / ys);
            h_is_identity = false;
        }
        cur = next;
    }
    Ok(Minimum {
        x: cur.x,
        value: cur.value,
        gradient: cur.gradient,
        iterations,
        evaluations: obj.evaluations,
        converged,
    })
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`, expanded as
/// `H - rho (s (Hy)^T + (Hy) s^T) + (rho^2 y^T H y + rho) s s^T`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], rho: f64) {
    let dim = s.len();
    let hy: Vec<f64> = (0..dim).map(|i| dot(&h[i * dim..(i + 1) * dim], y)).collect();
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..dim {
        for j in 0..dim {
            h[i * dim + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + coef * s[i] * s[j];
        }
    }
}

//! Box-constrained limited-memory quasi-Newton minimization.
//!
//! A projected L-BFGS: variables pinned at a bound with the gradient pushing
//! outward are held fixed, the two-loop recursion runs over the free
//! variables, and a backtracking Armijo search runs along the projected path.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BoxLbfgs {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient's sup-norm falls below this.
    pub pg_tol: f64,
    /// Stop when the relative decrease of the objective falls below this.
    pub f_tol: f64,
}

impl Default for BoxLbfgs {
    fn default() -> Self {
        Self { memory: 10, max_iter: 500, pg_tol: 1e-8, f_tol: 1e-15 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub projected_grad_norm: f64,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(lo, hi);
    }
}

/// Sup-norm of `P(x - g) - x`, the first-order optimality measure under bounds.
pub fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &gi), (&lo, &hi))| ((xi - gi).clamp(lo, hi) - xi).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl BoxLbfgs {
    /// Minimize `f` over `lower <= x <= upper`. `f` returns the value and gradient.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], lower: &[f64], upper: &[f64]) -> Result<Minimum>
    where
        F: FnMut(&[f64]) -> (f64, Vec<f64>),
    {
        let dim = x0.len();
        if lower.len() != dim || upper.len() != dim {
            return Err(Error::DimensionMismatch("bounds must match the start point".into()));
        }
        if lower.iter().zip(upper).any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidParameter("lower bound exceeds upper bound".into()));
        }
        let mut x = x0.to_vec();
        project(&mut x, lower, upper);
        let (mut fx, mut g) = f(&x);
        if !fx.is_finite() {
            return Err(Error::OptimizerFailure(format!("objective is {fx} at the start point")));
        }
        let mut s_hist: Vec<Vec<f64>> = Vec::new();
        let mut y_hist: Vec<Vec<f64>> = Vec::new();
        let mut iterations = 0;

        for iter in 0..self.max_iter {
            iterations = iter;
            let pg = projected_gradient_norm(&x, &g, lower, upper);
            if pg < self.pg_tol {
                break;
            }
            // variables held at an active bound
            let free: Vec<bool> = (0..dim)
                .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
                .collect();
            let mut dir = self.two_loop(&g, &free, &s_hist, &y_hist);
            if dot(&dir, &g) >= 0.0 {
                s_hist.clear();
                y_hist.clear();
                dir = g.iter().zip(&free).map(|(&gi, &fr)| if fr { -gi } else { 0.0 }).collect();
            }
            if s_hist.is_empty() {
                // first step: keep the trial move inside a unit box
                let scale = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                if scale > 1.0 {
                    dir.iter_mut().for_each(|d| *d /= scale);
                }
            }

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
                project(&mut trial, lower, upper);
                let moved: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
                let decrease = dot(&g, &moved);
                let (ft, gt) = f(&trial);
                if ft.is_finite() && ft <= fx + 1e-4 * decrease {
                    accepted = Some((trial, ft, gt, moved));
                    break;
                }
                step *= 0.5;
            }
            let Some((xn, fxn, gn, s)) = accepted else {
                // no progress along the projected path: at a (numerical) stationary point
                break;
            };
            let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
                if s_hist.len() == self.memory {
                    s_hist.remove(0);
                    y_hist.remove(0);
                }
                s_hist.push(s);
                y_hist.push(y);
            }
            let rel = (fx - fxn).abs() / fx.abs().max(fxn.abs()).max(1.0);
            x = xn;
            fx = fxn;
            g = gn;
            iterations = iter + 1;
            if rel < self.f_tol {
                break;
            }
        }
        let projected_grad_norm = projected_gradient_norm(&x, &g, lower, upper);
        Ok(Minimum { x, value: fx, iterations, projected_grad_norm })
    }

    fn two_loop(&self, g: &[f64], free: &[bool], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
        let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(&a, &f)| if f { a } else { 0.0 }).collect() };
        let mut q = mask(g);
        let m = s_hist.len();
        let mut alphas = vec![0.0; m];
        let pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = s_hist
            .iter()
            .zip(y_hist)
            .map(|(s, y)| {
                let (s, y) = (mask(s), mask(y));
                let sy = dot(&s, &y);
                (s, y, sy)
            })
            .collect();
        for idx in (0..m).rev() {
            let (s, y, sy) = &pairs[idx];
            if *sy <= 0.0 {
                continue;
            }
            let a = dot(s, &q) / sy;
            alphas[idx] = a;
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        }
        if let Some((_, y, sy)) = pairs.last() {
            let yy = dot(y, y);
            if *sy > 0.0 && yy > 0.0 {
                let gamma = sy / yy;
                q.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for idx in 0..m {
            let (s, y, sy) = &pairs[idx];
            if *sy <= 0.0 {
                continue;
            }
            let b = dot(y, &q) / sy;
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (alphas[idx] - b) * si);
        }
        q.iter().map(|v| -v).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (f, g)
    }

    #[test]
    fn unconstrained_rosenbrock() {
        let opt = BoxLbfgs::default();
        let m = opt.minimize(rosenbrock, &[-1.2, 1.0], &[-10.0, -10.0], &[10.0, 10.0]).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn active_upper_bound() {
        let opt = BoxLbfgs::default();
        let m = opt.minimize(rosenbrock, &[-1.2, 0.5], &[-2.0, -2.0], &[0.5, 2.0]).unwrap();
        // minimum on the face a = 0.5 is at b = 0.25
        assert!((m.x[0] - 0.5).abs() < 1e-12);
        assert!((m.x[1] - 0.25).abs() < 1e-6);
        assert!(m.projected_grad_norm < 1e-6);
    }

    #[test]
    fn separable_quadratic_with_lower_bounds() {
        let target = [3.0, -2.0, 0.5, -7.0];
        let f = |x: &[f64]| {
            let v = x.iter().zip(&target).map(|(a, t)| (a - t).powi(2)).sum();
            let g = x.iter().zip(&target).map(|(a, t)| 2.0 * (a - t)).collect();
            (v, g)
        };
        let opt = BoxLbfgs::default();
        let m = opt.minimize(f, &[1.0; 4], &[0.0; 4], &[10.0; 4]).unwrap();
        let expect = [3.0, 0.0, 0.5, 0.0];
        for (a, b) in m.x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn start_outside_box_is_projected() {
        let f = |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]);
        let m = BoxLbfgs::default().minimize(f, &[50.0], &[1.0], &[5.0]).unwrap();
        assert_eq!(m.x, vec![1.0]);
    }

    #[test]
    fn rejects_bad_bounds() {
        let f = |x: &[f64]| (x[0], vec![1.0]);
        assert!(BoxLbfgs::default().minimize(f, &[0.0], &[1.0], &[0.0]).is_err());
        assert!(BoxLbfgs::default().minimize(f, &[0.0], &[1.0, 2.0], &[3.0]).is_err());
    }
}

//! Restarted GMRES for complex systems given only a matrix-vector product.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Relative residual target ‖b − Ax‖/‖b‖.
    pub tol: f64,
    /// Cap on the total number of matrix-vector products.
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 2000, restart: 50 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GmresOutcome {
    pub x: Vec<C64>,
    /// Relative residual after every inner iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl GmresOutcome {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Rotation (c, s) with [c s; −s̄ c]·[a; b] = [ρ; 0].
fn givens(a: C64, b: C64) -> (f64, C64) {
    if a.norm() == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let rho = a.norm().hypot(b.norm());
    (a.norm() / rho, (a / a.norm()) * b.conj() / rho)
}

fn rotate(c: f64, s: C64, x: &mut C64, y: &mut C64) {
    let t = c * *x + s * *y;
    *y = -s.conj() * *x + c * *y;
    *x = t;
}

/// Solves Ax = b from x = 0.
pub fn gmres(op: impl Fn(&[C64]) -> Vec<C64>, b: &[C64], opts: &SolverOptions) -> GmresOutcome {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut residuals = vec![];
    if bnorm == 0.0 {
        return GmresOutcome { x, residuals, converged: true };
    }
    let m = opts.restart.max(1);
    while residuals.len() < opts.max_iter {
        let ax = op(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta / bnorm <= opts.tol {
            return GmresOutcome { x, residuals, converged: true };
        }
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<C64>> = vec![];
        let mut rots: Vec<(f64, C64)> = vec![];
        let mut g = vec![C64::new(beta, 0.0)];
        for j in 0..m {
            if residuals.len() >= opts.max_iter {
                break;
            }
            let mut w = op(&basis[j]);
            let mut col = vec![C64::new(0.0, 0.0); j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                col[i] = hij;
                w.iter_mut().zip(v).for_each(|(w, v)| *w -= hij * v);
            }
            let wn = norm(&w);
            col[j + 1] = C64::new(wn, 0.0);
            for (i, (c, s)) in rots.iter().enumerate() {
                let (a, rest) = col.split_at_mut(i + 1);
                rotate(*c, *s, &mut a[i], &mut rest[0]);
            }
            let (c, s) = givens(col[j], col[j + 1]);
            let (a, rest) = col.split_at_mut(j + 1);
            rotate(c, s, &mut a[j], &mut rest[0]);
            rots.push((c, s));
            g.push(C64::new(0.0, 0.0));
            let (a, rest) = g.split_at_mut(j + 1);
            rotate(c, s, &mut a[j], &mut rest[0]);
            hess.push(col);
            residuals.push(g[j + 1].norm() / bnorm);
            if g[j + 1].norm() / bnorm <= opts.tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution on the triangular factor
        let k = hess.len();
        let mut y = vec![C64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in i + 1..k {
                s -= hess[l][i] * y[l];
            }
            y[i] = s / hess[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.iter_mut().zip(v).for_each(|(x, v)| *x += yi * v);
        }
    }
    let ax = op(&x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let converged = norm(&r) / bnorm <= opts.tol;
    GmresOutcome { x, residuals, converged }
}

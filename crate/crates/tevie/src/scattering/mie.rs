//! Separation-of-variables solution for a TE plane wave hitting a
//! homogeneous disk centred at the origin.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::bessel_pair;

type C64 = Complex64;

/// J_0(z), …, J_nmax(z) by Miller's backward recurrence, normalised with
/// J_0 + 2ΣJ_2m = 1.
pub fn bessel_j_orders(nmax: usize, z: C64) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); nmax + 1];
    if z.norm() == 0.0 {
        out[0] = C64::new(1.0, 0.0);
        return out;
    }
    let a = z.norm();
    let start = (nmax.max(a.ceil() as usize) + 20 + (40.0 * a.max(nmax as f64)).sqrt() as usize) | 1;
    let mut next = C64::new(0.0, 0.0);
    let mut cur = C64::new(1e-30, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    for n in (1..=start).rev() {
        let prev = cur * (2.0 * n as f64) / z - next;
        next = cur;
        cur = prev;
        // `cur` now holds J_{n-1}
        let m = n - 1;
        if m <= nmax {
            out[m] = cur;
        }
        if m > 0 && m % 2 == 0 {
            sum += 2.0 * cur;
        }
        if cur.norm() > 1e100 {
            let s = 1e-100;
            cur *= s;
            next *= s;
            sum *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    let norm = sum + cur;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Y_0(x), …, Y_nmax(x) for x > 0 by forward recurrence.
pub fn bessel_y_orders(nmax: usize, x: f64) -> Result<Vec<f64>> {
    let (_, y0) = bessel_pair(0, x)?;
    let (_, y1) = bessel_pair(1, x)?;
    let mut y = vec![y0, y1];
    for n in 1..nmax {
        y.push(2.0 * n as f64 / x * y[n] - y[n - 1]);
    }
    y.truncate(nmax + 1);
    Ok(y)
}

/// H^{(1)}_0(x), …, H^{(1)}_nmax(x) for x > 0.
pub fn hankel_orders(nmax: usize, x: f64) -> Result<Vec<C64>> {
    let j = bessel_j_orders(nmax, C64::new(x, 0.0));
    let y = bessel_y_orders(nmax, x)?;
    Ok(j.iter().zip(&y).map(|(j, y)| C64::new(j.re, *y)).collect())
}

/// Z_n′ = Z_{n−1} − (n/z)Z_n, with Z_{−1} = −Z_1.
fn derivatives(z: C64, v: &[C64]) -> Vec<C64> {
    (0..v.len())
        .map(|n| {
            if n == 0 {
                -v[1]
            } else {
                v[n - 1] - v[n] * (n as f64) / z
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MieField {
    pub h3: C64,
    pub e: [C64; 2],
}

/// Series coefficients for orders 0..=n_terms; order −n equals order n.
#[derive(Clone, Debug, Serialize)]
pub struct MieSolution {
    pub k: f64,
    pub eps_r: C64,
    pub mu_r: C64,
    pub radius: f64,
    pub k_in: C64,
    pub n_terms: usize,
    /// Interior coefficients c_n of J_n(k_in r).
    pub inner: Vec<C64>,
    /// Scattered coefficients b_n of H_n(k r).
    pub scattered: Vec<C64>,
    /// Size of the first omitted terms at the interface.
    pub tail_bound: f64,
}

pub const TAIL_LIMIT: f64 = 1e-10;

fn i_pow(n: usize) -> C64 {
    [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][n % 4]
}

impl MieSolution {
    /// Solves the interface conditions [H₃] = 0 and [(1/ε)∂_r H₃] = 0.
    /// `n_terms` defaults to ⌈k·radius⌉ + 20.
    pub fn new(k: f64, eps_r: C64, mu_r: C64, radius: f64, n_terms: Option<usize>) -> Result<Self> {
        if !(k > 0.0) || !(radius > 0.0) {
            return Err(Error::Domain("disk oracle needs k > 0 and radius > 0".into()));
        }
        if eps_r.norm() == 0.0 || mu_r.norm() == 0.0 {
            return Err(Error::Domain("disk oracle needs eps_r, mu_r != 0".into()));
        }
        let n = n_terms.unwrap_or((k * radius).ceil() as usize + 20);
        let mut k_in = k * (eps_r * mu_r).sqrt();
        if k_in.im < 0.0 {
            k_in = -k_in;
        }
        // one extra order for the derivative recurrence and the tail
        let zi = k_in * radius;
        let jin = bessel_j_orders(n + 2, zi);
        let jout = bessel_j_orders(n + 2, C64::new(k * radius, 0.0));
        let hout = hankel_orders(n + 2, k * radius)?;
        let (djin, djout, dhout) = (
            derivatives(zi, &jin),
            derivatives(C64::new(k * radius, 0.0), &jout),
            derivatives(C64::new(k * radius, 0.0), &hout),
        );
        let mut inner = Vec::with_capacity(n + 2);
        let mut scattered = Vec::with_capacity(n + 2);
        for m in 0..=n + 1 {
            // c J(k_in R) − b H(kR) = iⁿ J(kR)
            // c (k_in/ε) J′(k_in R) − b k H′(kR) = iⁿ k J′(kR)
            let (a11, a12) = (jin[m], -hout[m]);
            let (a21, a22) = (k_in / eps_r * djin[m], -k * dhout[m]);
            let (r1, r2) = (i_pow(m) * jout[m], i_pow(m) * k * djout[m]);
            let det = a11 * a22 - a12 * a21;
            if det.norm() == 0.0 || !det.is_finite() {
                return Err(Error::Singular(0.0));
            }
            inner.push((r1 * a22 - a12 * r2) / det);
            scattered.push((a11 * r2 - a21 * r1) / det);
        }
        let t = n + 1;
        let tail_bound = 2.0 * (jout[t].norm() + (scattered[t] * hout[t]).norm() + (inner[t] * jin[t]).norm());
        inner.truncate(n + 1);
        scattered.truncate(n + 1);
        if tail_bound > TAIL_LIMIT || !tail_bound.is_finite() {
            return Err(Error::Series(format!(
                "disk series tail {tail_bound:.2e} exceeds {TAIL_LIMIT:.0e}; raise n_terms above {n}"
            )));
        }
        Ok(MieSolution { k, eps_r, mu_r, radius, k_in, n_terms: n, inner, scattered, tail_bound })
    }

    /// Σ over ±n of coef·Z_n(κr)e^{inθ′} and its r and θ derivatives.
    fn sum(&self, coef: &[C64], z: &[C64], dz: &[C64], kappa: C64, theta: f64) -> (C64, C64, C64) {
        let (mut v, mut vr, mut vt) = (coef[0] * z[0], coef[0] * kappa * dz[0], C64::new(0.0, 0.0));
        for n in 1..coef.len() {
            let (s, c) = (n as f64 * theta).sin_cos();
            v += 2.0 * coef[n] * z[n] * c;
            vr += 2.0 * coef[n] * kappa * dz[n] * c;
            vt -= 2.0 * (n as f64) * coef[n] * z[n] * s;
        }
        (v, vr, vt)
    }

    /// Total field at `x` for incidence direction `d`.
    pub fn field(&self, x: [f64; 2], d: [f64; 2]) -> Result<MieField> {
        let r = x[0].hypot(x[1]);
        let theta_d = d[1].atan2(d[0]);
        let n = self.n_terms;
        let ik = C64::new(0.0, self.k);
        let (h, grad, eps) = if r < self.radius {
            if r < 1e-12 {
                let g = self.inner[1] * self.k_in;
                (self.inner[0], [g * d[0], g * d[1]], self.eps_r)
            } else {
                let z = self.k_in * r;
                let j = bessel_j_orders(n, z);
                let dj = derivatives(z, &j);
                let theta = x[1].atan2(x[0]);
                let (v, vr, vt) = self.sum(&self.inner, &j, &dj, self.k_in, theta - theta_d);
                (v, polar_gradient(vr, vt, r, theta), self.eps_r)
            }
        } else {
            let z = self.k * r;
            let hk = hankel_orders(n, z)?;
            let dh = derivatives(C64::new(z, 0.0), &hk);
            let theta = x[1].atan2(x[0]);
            let (v, vr, vt) = self.sum(&self.scattered, &hk, &dh, C64::new(self.k, 0.0), theta - theta_d);
            let g = polar_gradient(vr, vt, r, theta);
            let inc = (ik * (d[0] * x[0] + d[1] * x[1])).exp();
            (v + inc, [g[0] + ik * d[0] * inc, g[1] + ik * d[1] * inc], C64::new(1.0, 0.0))
        };
        // E = (−∂₂H, ∂₁H)/(ikε)
        let s = ik * eps;
        Ok(MieField { h3: h, e: [-grad[1] / s, grad[0] / s] })
    }

    /// Scattered H₃ only (no incident wave), for r ≥ radius.
    pub fn scattered_h3(&self, x: [f64; 2], d: [f64; 2]) -> Result<C64> {
        let r = x[0].hypot(x[1]);
        if r < self.radius {
            return Err(Error::Domain("scattered field is evaluated outside the disk".into()));
        }
        let hk = hankel_orders(self.n_terms, self.k * r)?;
        let dh = derivatives(C64::new(self.k * r, 0.0), &hk);
        let theta = x[1].atan2(x[0]) - d[1].atan2(d[0]);
        Ok(self.sum(&self.scattered, &hk, &dh, C64::new(self.k, 0.0), theta).0)
    }

    /// Far-field pattern F with H₃ˢ ≈ √(2/(πkr)) e^{i(kr − π/4)} F(x̂; d).
    pub fn far_pattern(&self, observe: [f64; 2], d: [f64; 2]) -> C64 {
        let theta = observe[1].atan2(observe[0]) - d[1].atan2(d[0]);
        let mut f = self.scattered[0];
        for n in 1..self.scattered.len() {
            f += 2.0 * self.scattered[n] * i_pow(3 * n) * (n as f64 * theta).cos();
        }
        f
    }

    /// Largest jumps of H₃ and (1/ε)∂_r H₃ across the circle at `n` points.
    pub fn interface_mismatch(&self, n: usize) -> (f64, f64) {
        let n_terms = self.n_terms;
        let zi = self.k_in * self.radius;
        let zo = self.k * self.radius;
        let jin = bessel_j_orders(n_terms + 1, zi);
        let djin = derivatives(zi, &jin);
        let jout = bessel_j_orders(n_terms + 1, C64::new(zo, 0.0));
        let djout = derivatives(C64::new(zo, 0.0), &jout);
        let hout = hankel_orders(n_terms + 1, zo).expect("positive argument");
        let dhout = derivatives(C64::new(zo, 0.0), &hout);
        let incident: Vec<C64> = (0..=n_terms).map(i_pow).collect();
        let (mut dv, mut dd) = (0.0f64, 0.0f64);
        for p in 0..n {
            let theta = 2.0 * std::f64::consts::PI * p as f64 / n as f64;
            let (vi, ri, _) = self.sum(&self.inner, &jin, &djin, self.k_in, theta);
            let (vs, rs, _) = self.sum(&self.scattered, &hout, &dhout, C64::new(self.k, 0.0), theta);
            let (v0, r0, _) = self.sum(&incident, &jout, &djout, C64::new(self.k, 0.0), theta);
            dv = dv.max((vi - vs - v0).norm());
            dd = dd.max((ri / self.eps_r - rs - r0).norm());
        }
        (dv, dd)
    }
}

fn polar_gradient(vr: C64, vt: C64, r: f64, theta: f64) -> [C64; 2] {
    let (s, c) = theta.sin_cos();
    [vr * c - vt * s / r, vr * s + vt * c / r]
}

/// Total TE fields of the disk problem at `points`.
pub fn mie_disk_reference(
    k: f64,
    eps_r: C64,
    mu_r: C64,
    radius: f64,
    d: [f64; 2],
    points: &[[f64; 2]],
) -> Result<Vec<MieField>> {
    let sol = MieSolution::new(k, eps_r, mu_r, radius, None)?;
    points.iter().map(|p| sol.field(*p, d)).collect()
}

//! Bessel functions of order 0 and 1 and the 2D Laplace/Helmholtz kernels.
//!
//! Real arguments use the ascending series summed in double-double arithmetic
//! for `x <= SERIES_CUTOFF` and the Hankel expansion beyond. Complex arguments
//! (only needed for absorbing wavenumbers) use the same formulas in plain
//! complex arithmetic.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// Crossover between the ascending series and the Hankel expansion.
pub const SERIES_CUTOFF: f64 = 20.0;
const COMPLEX_SERIES_CUTOFF: f64 = 17.0;

#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn quick(a: f64, b: f64) -> Self {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let s = Dd::quick(s.hi, s.lo + t.hi);
        Dd::quick(s.hi, s.lo + t.lo)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::quick(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn mul_f(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        Dd::quick(p, e + self.lo * b)
    }

    fn div_f(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self.add(Dd::new(q1).mul_f(-b));
        let q2 = r.hi / b;
        Dd::quick(q1, q2)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

struct SeriesSums {
    j0: Dd,
    harm0: Dd,
    j1: Dd,
    harm1: Dd,
}

/// Ascending sums for x/2 = half:
/// j0 = Σ t_k, harm0 = Σ_{k≥1} H_k t_k, j1 = Σ v_k, harm1 = Σ (H_k + H_{k+1}) v_k
/// with t_k = (-q)^k/(k!)², v_k = (-q)^k/(k!(k+1)!), q = half².
fn series_sums(half: f64) -> SeriesSums {
    let q = Dd::new(half).mul(Dd::new(half)).neg();
    let mut t = Dd::new(1.0);
    let mut v = Dd::new(1.0);
    let mut h = Dd::new(0.0);
    let mut s = SeriesSums {
        j0: t,
        harm0: Dd::new(0.0),
        j1: v,
        harm1: v,
    };
    for k in 1..400 {
        let kf = k as f64;
        t = t.mul(q).div_f(kf * kf);
        v = v.mul(q).div_f(kf * (kf + 1.0));
        h = h.add(Dd::new(1.0).div_f(kf));
        let h_next = h.add(Dd::new(1.0).div_f(kf + 1.0));
        s.j0 = s.j0.add(t);
        s.harm0 = s.harm0.add(h.mul(t));
        s.j1 = s.j1.add(v);
        s.harm1 = s.harm1.add(h.add(h_next).mul(v));
        if t.hi.abs() < 1e-36 && v.hi.abs() < 1e-36 {
            break;
        }
    }
    s
}

fn series_real(x: f64) -> [f64; 4] {
    let half = 0.5 * x;
    let s = series_sums(half);
    let lg = (half.ln() + EULER_GAMMA) * 2.0 / PI;
    let j0 = s.j0.to_f64();
    let j1 = s.j1.mul_f(half).to_f64();
    let y0 = lg * j0 - s.harm0.to_f64() * 2.0 / PI;
    let y1 = lg * j1 - 2.0 / (PI * x) - s.harm1.mul_f(half).to_f64() / PI;
    [j0, y0, j1, y1]
}

/// Hankel expansion factors (P, Q) for order `nu` in {0, 1}.
fn hankel_pq<T>(nu: u32, z: T, abs_z: f64) -> (T, T)
where
    T: Copy
        + std::ops::Add<Output = T>
        + std::ops::Mul<f64, Output = T>
        + std::ops::Div<Output = T>
        + From<f64>,
{
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = T::from(1.0);
    let mut q = T::from(0.0);
    let mut a = 1.0_f64;
    let mut zpow = T::from(1.0);
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        a *= (mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf);
        zpow = zpow / z;
        let mag = a.abs() / abs_z.powi(k);
        if mag > prev || mag < 1e-18 {
            break;
        }
        prev = mag;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p = p + zpow * (sign * a);
        } else {
            q = q + zpow * (sign * a);
        }
    }
    (p, q)
}

fn asymptotic_real(nu: u32, x: f64) -> (f64, f64) {
    let (p, q) = hankel_pq(nu, x, x);
    let chi = x - (0.5 * nu as f64 + 0.25) * PI;
    let amp = (2.0 / (PI * x)).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// J_n(x) and Y_n(x) for n in {0, 1}, absolute accuracy about 1e-14 on (0, 50].
pub fn bessel_pair(order: u32, x: f64) -> Result<(f64, f64)> {
    if order > 1 {
        return Err(Error::Domain(format!("bessel_pair supports orders 0 and 1, got {order}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_pair needs x > 0, got {x}")));
    }
    if x <= SERIES_CUTOFF {
        let v = series_real(x);
        Ok(if order == 0 { (v[0], v[1]) } else { (v[2], v[3]) })
    } else {
        Ok(asymptotic_real(order, x))
    }
}

/// J_0 for x >= 0 (finite at the origin).
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        1.0
    } else {
        bessel_pair(0, x).map(|p| p.0).unwrap_or(f64::NAN)
    }
}

/// J_1 for x >= 0.
pub fn bessel_j1(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        bessel_pair(1, x.abs()).map(|p| p.0.copysign(x)).unwrap_or(f64::NAN)
    }
}

fn series_complex(z: Complex64) -> [Complex64; 4] {
    let half = z * 0.5;
    let q = -half * half;
    let mut t = Complex64::new(1.0, 0.0);
    let mut v = t;
    let mut h = 0.0;
    let (mut j0, mut harm0, mut j1, mut harm1) = (t, Complex64::new(0.0, 0.0), v, v);
    for k in 1..300 {
        let kf = k as f64;
        t = t * q / (kf * kf);
        v = v * q / (kf * (kf + 1.0));
        h += 1.0 / kf;
        j0 += t;
        harm0 += t * h;
        j1 += v;
        harm1 += v * (2.0 * h + 1.0 / (kf + 1.0));
        if t.norm() < 1e-18 * j0.norm().max(1e-300) && v.norm() < 1e-18 * j1.norm().max(1e-300) {
            break;
        }
    }
    let lg = (half.ln() + EULER_GAMMA) * (2.0 / PI);
    let j1 = j1 * half;
    let y0 = lg * j0 - harm0 * (2.0 / PI);
    let y1 = lg * j1 - 2.0 / (PI * z) - harm1 * half / PI;
    [j0, y0, j1, y1]
}

impl From<f64> for CWrap {
    fn from(x: f64) -> Self {
        CWrap(Complex64::new(x, 0.0))
    }
}

#[derive(Clone, Copy)]
struct CWrap(Complex64);

impl std::ops::Add for CWrap {
    type Output = CWrap;
    fn add(self, o: CWrap) -> CWrap {
        CWrap(self.0 + o.0)
    }
}

impl std::ops::Mul<f64> for CWrap {
    type Output = CWrap;
    fn mul(self, o: f64) -> CWrap {
        CWrap(self.0 * o)
    }
}

impl std::ops::Div for CWrap {
    type Output = CWrap;
    fn div(self, o: CWrap) -> CWrap {
        CWrap(self.0 / o.0)
    }
}

/// H^{(1)}_n(z) for n in {0, 1} and complex z with Im z >= 0, z != 0.
pub fn hankel1(order: u32, z: Complex64) -> Result<Complex64> {
    if order > 1 {
        return Err(Error::Domain(format!("hankel1 supports orders 0 and 1, got {order}")));
    }
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::Domain(format!("hankel1 needs z != 0, got {z}")));
    }
    if z.im == 0.0 && z.re > 0.0 {
        let (j, y) = bessel_pair(order, z.re)?;
        return Ok(Complex64::new(j, y));
    }
    if z.im < 0.0 {
        return Err(Error::Domain(format!("hankel1 needs Im z >= 0, got {z}")));
    }
    let i = Complex64::i();
    if z.norm() <= COMPLEX_SERIES_CUTOFF {
        let v = series_complex(z);
        Ok(if order == 0 { v[0] + i * v[1] } else { v[2] + i * v[3] })
    } else {
        let (p, q) = hankel_pq(order, CWrap(z), z.norm());
        let chi = z - (0.5 * order as f64 + 0.25) * PI;
        Ok((2.0 / (PI * z)).sqrt() * (i * chi).exp() * (p.0 + i * q.0))
    }
}

/// Free-space kernel g_k: (i/4)H_0^{(1)}(k r) for k != 0, -(1/2π) ln r for k = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel {
    k: Complex64,
}

impl Kernel {
    pub fn laplace() -> Self {
        Kernel { k: Complex64::new(0.0, 0.0) }
    }

    pub fn helmholtz(k: Complex64) -> Result<Self> {
        if k.im < 0.0 || !k.is_finite() {
            return Err(Error::Domain(format!("wavenumber must satisfy Im k >= 0, got {k}")));
        }
        Ok(Kernel { k })
    }

    pub fn real(k: f64) -> Result<Self> {
        Self::helmholtz(Complex64::new(k, 0.0))
    }

    pub fn k(&self) -> Complex64 {
        self.k
    }

    pub fn is_static(&self) -> bool {
        self.k.norm() == 0.0
    }

    pub fn value(&self, r: f64) -> Result<Complex64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("kernel needs r > 0, got {r}")));
        }
        if self.is_static() {
            return Ok(Complex64::new(-r.ln() / (2.0 * PI), 0.0));
        }
        Ok(Complex64::i() * 0.25 * hankel1(0, self.k * r)?)
    }

    pub fn gradient(&self, offset: [f64; 2]) -> Result<[Complex64; 2]> {
        let r2 = offset[0] * offset[0] + offset[1] * offset[1];
        if !(r2 > 0.0) {
            return Err(Error::Domain("kernel gradient at zero offset".into()));
        }
        let r = r2.sqrt();
        let radial = if self.is_static() {
            Complex64::new(-1.0 / (2.0 * PI * r), 0.0)
        } else {
            -Complex64::i() * self.k * 0.25 * hankel1(1, self.k * r)?
        };
        Ok([radial * (offset[0] / r), radial * (offset[1] / r)])
    }

    /// Second derivatives ∂ᵢ∂ⱼ g at `offset`.
    pub fn hessian(&self, offset: [f64; 2]) -> Result<[[Complex64; 2]; 2]> {
        let r2 = offset[0] * offset[0] + offset[1] * offset[1];
        if !(r2 > 0.0) {
            return Err(Error::Domain("kernel hessian at zero offset".into()));
        }
        let r = r2.sqrt();
        // g' and g'' in r
        let (d1, d2) = if self.is_static() {
            let d1 = -1.0 / (2.0 * PI * r);
            (Complex64::new(d1, 0.0), Complex64::new(-d1 / r, 0.0))
        } else {
            let z = self.k * r;
            let h1 = hankel1(1, z)?;
            let d1 = -Complex64::i() * self.k * 0.25 * h1;
            let d2 = -Complex64::i() * self.k * self.k * 0.25 * (hankel1(0, z)? - h1 / z);
            (d1, d2)
        };
        let u = [offset[0] / r, offset[1] / r];
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let delta = if i == j { 1.0 } else { 0.0 };
                out[i][j] = d2 * (u[i] * u[j]) + d1 / r * (delta - u[i] * u[j]);
            }
        }
        Ok(out)
    }

    /// Limit of g_k - g_0 at r = 0.
    pub fn remainder_at_origin(&self) -> Complex64 {
        if self.is_static() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::i() * 0.25 - ((self.k * 0.5).ln() + EULER_GAMMA) / (2.0 * PI)
    }

    /// g_k(r) - g_0(r), continuous at r = 0.
    pub fn remainder(&self, r: f64) -> Result<Complex64> {
        if r < 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("remainder needs r >= 0, got {r}")));
        }
        if self.is_static() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if r == 0.0 {
            return Ok(self.remainder_at_origin());
        }
        let z = self.k * r;
        if z.norm() > 2.0 {
            return Ok(self.value(r)? + r.ln() / (2.0 * PI));
        }
        // Small argument: expand so that ln r multiplies J0 - 1 = O(r^2).
        let half = z * 0.5;
        let q = -half * half;
        let mut t = Complex64::new(1.0, 0.0);
        let mut h = 0.0;
        let mut j0m1 = Complex64::new(0.0, 0.0);
        let mut harm = Complex64::new(0.0, 0.0);
        for k in 1..60 {
            let kf = k as f64;
            t = t * q / (kf * kf);
            h += 1.0 / kf;
            j0m1 += t;
            harm += t * h;
            if t.norm() < 1e-20 {
                break;
            }
        }
        let j0 = j0m1 + 1.0;
        let lk = (self.k * 0.5).ln() + EULER_GAMMA;
        Ok(Complex64::i() * 0.25 * j0 - (lk * j0 + j0m1 * r.ln() - harm) / (2.0 * PI))
    }
}

//! Lattice Green's function of the 5-point Laplacian and FFT convolution with it.
//!
//! The potential kernel a(m, n) solves the discrete Poisson problem
//! Δ_h a = δ on the unit lattice with a(0, 0) = 0. Up to normalisation it is
//! the discrete analogue of −(1/2π) ln r, and it makes the first-difference
//! operators of the staggered grid exact inverses of the convolution.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::specfun::{Kernel, EULER_GAMMA};

/// Offsets with both |m|, |n| at most this are tabulated by quadrature.
pub const TABLE_RADIUS: usize = 40;
const QUADRATURE_POINTS: usize = 600;

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (z * p - p0) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn quadrature_kernel(m: usize, n: usize, nodes: &[(f64, f64, f64)]) -> f64 {
    nodes
        .iter()
        .map(|&(y, t, ws)| ws * (1.0 - (n as f64 * y).cos() * t.powi(m as i32)))
        .sum::<f64>()
        / PI
}

fn table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let (x, w) = gauss_legendre(QUADRATURE_POINTS);
        // (y, t(y), weight / s(y)) on [0, π].
        let nodes: Vec<(f64, f64, f64)> = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| {
                let y = (xi + 1.0) * PI / 2.0;
                let c = 4.0 - 2.0 * y.cos();
                let s = 2.0 * (y / 2.0).sin() * (6.0 - 2.0 * y.cos()).sqrt();
                (y, (c - s) / 2.0, wi * PI / 2.0 / s)
            })
            .collect();
        let r = TABLE_RADIUS + 1;
        let mut t = vec![0.0; r * r];
        for m in 0..r {
            for n in 0..=m {
                let v = quadrature_kernel(m, n, &nodes);
                t[m * r + n] = v;
                t[n * r + m] = v;
            }
        }
        t
    })
}

fn asymptotic_kernel(m: f64, n: f64) -> f64 {
    let r2 = m * m + n * n;
    let (m2, n2) = (m * m, n * n);
    let c4 = m2 * m2 - 6.0 * m2 * n2 + n2 * n2;
    let c8 = 43.0 * m2.powi(4) - 772.0 * m2.powi(3) * n2 + 1570.0 * m2 * m2 * n2 * n2 - 772.0 * m2 * n2.powi(3)
        + 43.0 * n2.powi(4);
    (0.5 * r2.ln() + EULER_GAMMA + 1.5 * 2f64.ln()) / (2.0 * PI) - c4 / r2.powi(3) / (24.0 * PI)
        - c8 / r2.powi(6) / (480.0 * PI)
}

/// Potential kernel a(m, n): a(0,0) = 0, a(1,0) = ¼, a(1,1) = 1/π.
pub fn potential_kernel(m: i64, n: i64) -> f64 {
    let (m, n) = (m.unsigned_abs() as usize, n.unsigned_abs() as usize);
    if m <= TABLE_RADIUS && n <= TABLE_RADIUS {
        table()[m * (TABLE_RADIUS + 1) + n]
    } else {
        asymptotic_kernel(m as f64, n as f64)
    }
}

/// Convolution weight for lattice offset (m, n) at spacing h: the static part
/// is normalised to −(h²/2π) ln(h r) at large r, and for k ≠ 0 the smooth
/// remainder g_k − g₀ at distance h·r is added.
pub fn lattice_weight(kernel: &Kernel, h: f64, m: i64, n: i64) -> Result<Complex64> {
    let c = (EULER_GAMMA + 1.5 * 2f64.ln() - h.ln()) / (2.0 * PI);
    let mut w = Complex64::new(h * h * (c - potential_kernel(m, n)), 0.0);
    if !kernel.is_static() {
        let r = h * ((m * m + n * n) as f64).sqrt();
        let rem = if r == 0.0 { kernel.remainder_at_origin() } else { kernel.remainder(r)? };
        w += h * h * rem;
    }
    Ok(w)
}

/// Smallest 2·3·5-smooth integer ≥ n.
fn smooth_size(n: usize) -> usize {
    (n..)
        .find(|&v| {
            let mut v = v;
            for p in [2, 3, 5] {
                while v % p == 0 {
                    v /= p;
                }
            }
            v == 1
        })
        .unwrap()
}

/// Zero-padded FFT convolution of lattice arrays of shape up to `max_shape`
/// with the lattice weights. Arrays are row-major with the x index first:
/// entry (i, j) sits at i·cols + j.
pub struct Convolver {
    max_shape: (usize, usize),
    px: usize,
    py: usize,
    symbol: Vec<Complex64>,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver").field("max_shape", &self.max_shape).field("padded", &(self.px, self.py)).finish()
    }
}

impl Convolver {
    pub fn new(kernel: &Kernel, h: f64, max_shape: (usize, usize)) -> Result<Self> {
        let (sx, sy) = max_shape;
        let px = smooth_size(2 * sx);
        let py = smooth_size(2 * sy);
        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_forward(px);
        let ifft_x = planner.plan_fft_inverse(px);
        let fft_y = planner.plan_fft_forward(py);
        let ifft_y = planner.plan_fft_inverse(py);
        let mut symbol = vec![Complex64::new(0.0, 0.0); px * py];
        let (mx, my) = (sx as i64, sy as i64);
        for m in -(mx - 1)..mx {
            for n in -(my - 1)..my {
                let i = m.rem_euclid(px as i64) as usize;
                let j = n.rem_euclid(py as i64) as usize;
                symbol[i * py + j] = lattice_weight(kernel, h, m, n)?;
            }
        }
        let mut conv = Convolver { max_shape, px, py, symbol: vec![], fft_x, ifft_x, fft_y, ifft_y };
        conv.transform(&mut symbol, false);
        conv.symbol = symbol;
        Ok(conv)
    }

    pub fn max_shape(&self) -> (usize, usize) {
        self.max_shape
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let (px, py) = (self.px, self.py);
        let (fx, fy) = if inverse { (&self.ifft_x, &self.ifft_y) } else { (&self.fft_x, &self.fft_y) };
        for row in data.chunks_exact_mut(py) {
            fy.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); px];
        for j in 0..py {
            for i in 0..px {
                col[i] = data[i * py + j];
            }
            fx.process(&mut col);
            for i in 0..px {
                data[i * py + j] = col[i];
            }
        }
    }

    /// Σ_{i′,j′} W(i − i′, j − j′) f(i′, j′) for an array of the given shape.
    pub fn apply(&self, f: &[Complex64], shape: (usize, usize)) -> Vec<Complex64> {
        let (nx, ny) = shape;
        assert!(nx <= self.max_shape.0 && ny <= self.max_shape.1, "array larger than convolver");
        assert_eq!(f.len(), nx * ny);
        let (px, py) = (self.px, self.py);
        let mut buf = vec![Complex64::new(0.0, 0.0); px * py];
        for i in 0..nx {
            buf[i * py..i * py + ny].copy_from_slice(&f[i * ny..(i + 1) * ny]);
        }
        self.transform(&mut buf, false);
        for (b, s) in buf.iter_mut().zip(&self.symbol) {
            *b *= s;
        }
        self.transform(&mut buf, true);
        let scale = 1.0 / (px * py) as f64;
        let mut out = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            out.extend(buf[i * py..i * py + ny].iter().map(|v| v * scale));
        }
        out
    }
}

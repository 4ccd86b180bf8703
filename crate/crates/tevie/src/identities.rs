//! Static operator identities checked against analytic references.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{rasterize_with, Point, RasterOptions, Shape};
use crate::specfun::Kernel;
use crate::volume::{curl, divergence, Medium, ScalarField, VectorField, VolumeOperators};

type C64 = Complex64;

/// Gaussian bump exp(−|x − c|²/w²) with its derivatives.
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    pub center: Point,
    pub width: f64,
}

impl Bump {
    pub fn value(&self, x: Point) -> f64 {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        (-(dx * dx + dy * dy) / (self.width * self.width)).exp()
    }

    pub fn gradient(&self, x: Point) -> [f64; 2] {
        let v = self.value(x);
        let w2 = self.width * self.width;
        [-2.0 * (x[0] - self.center[0]) / w2 * v, -2.0 * (x[1] - self.center[1]) / w2 * v]
    }

    pub fn laplacian(&self, x: Point) -> f64 {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        let w2 = self.width * self.width;
        (4.0 * (dx * dx + dy * dy) / (w2 * w2) - 4.0 / w2) * self.value(x)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityReport {
    pub nx: usize,
    pub h: f64,
    /// ‖B₀² − B₀‖ / ‖B₀‖ by power iteration
    pub b0_projection: f64,
    /// ‖div A₀E − div E‖ / ‖div E‖ on interior nodes
    pub div_a0: f64,
    /// ‖curl B₀E − curl E‖ / ‖curl E‖ on interior cells
    pub curl_b0: f64,
    /// ‖A₀∇φ − ∇φ‖ / ‖∇φ‖ on active edges
    pub a0_gradient: f64,
}

pub const BUMP_WIDTH: f64 = 0.2;
pub const POWER_VECTORS: usize = 20;
pub const POWER_STEPS: usize = 8;

fn rel(num: impl Iterator<Item = (C64, C64)>) -> f64 {
    let (mut e, mut r) = (0.0, 0.0);
    for (a, b) in num {
        e += (a - b).norm_sqr();
        r += b.norm_sqr();
    }
    (e / r).sqrt()
}

fn c(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// Largest ‖op x‖/‖x‖ over power iterations started from `starts` random vectors.
pub fn power_norm(n: usize, starts: usize, steps: usize, seed: u64, op: impl Fn(&[C64]) -> Vec<C64>) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = |v: &[C64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut best: f64 = 0.0;
    for _ in 0..starts {
        let mut x: Vec<C64> = (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        for _ in 0..steps {
            let y = op(&x);
            let ny = norm(&y);
            best = best.max(ny);
            if ny == 0.0 {
                break;
            }
            x = y.into_iter().map(|v| v / ny).collect();
        }
    }
    best
}

/// Runs the four identity checks for `shape` at `nx` cells. The grid uses
/// sharp 0/1 cell indicators: B₀ = curlvec g₀ * χ curl is a projection only
/// when χ² = χ, so fractional cut cells would leave a residual near ¼.
pub fn identity_suite(shape: &Shape, nx: usize, margin: f64, seed: u64) -> Result<IdentityReport> {
    let grid = rasterize_with(shape, nx, margin, RasterOptions { sharp: true, ..Default::default() })?;
    let ops = VolumeOperators::new(&grid, Kernel::laplace())?;
    let h = grid.h;
    let (lo, hi) = shape.bounding_box();
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let scale = (hi[0] - lo[0]).min(hi[1] - lo[1]) / 2.0;
    let phi = Bump { center: [mid[0] + 0.1 * scale, mid[1] - 0.05 * scale], width: BUMP_WIDTH * scale };
    let psi = Bump { center: [mid[0] - 0.08 * scale, mid[1] + 0.12 * scale], width: BUMP_WIDTH * scale };
    let unit = Medium::real(0.0, 1.0);

    // E = ∇φ + curlvec ψ
    let field = VectorField::from_fn(&grid, |x| {
        let g = phi.gradient(x);
        let q = psi.gradient(x);
        [c(g[0] + q[1]), c(g[1] - q[0])]
    });
    let grad_only = VectorField::from_fn(&grid, |x| {
        let g = phi.gradient(x);
        [c(g[0]), c(g[1])]
    });

    let a_grad = ops.apply_a(&unit, &grad_only);
    let (ax, ay) = ops.active_edges();
    let a0_gradient = rel(a_grad
        .ex
        .iter()
        .zip(&grad_only.ex)
        .zip(ax)
        .chain(a_grad.ey.iter().zip(&grad_only.ey).zip(ay))
        .filter(|(_, a)| **a)
        .map(|((o, e), _)| (*o, *e)));

    let a_field = ops.apply_a(&unit, &field);
    let div_out = divergence(&a_field, h);
    let mut pairs = vec![];
    for i in 0..=grid.nx {
        for j in 0..=grid.ny {
            let x = grid.node(i, j);
            let inner = (0..4).all(|q| {
                let (di, dj) = [(0, 0), (1, 0), (0, 1), (1, 1)][q];
                let (ci, cj) = (i as isize - di, j as isize - dj);
                ci >= 0
                    && cj >= 0
                    && (ci as usize) < grid.nx
                    && (cj as usize) < grid.ny
                    && grid.indicator[ci as usize * grid.ny + cj as usize] >= 1.0
            });
            if inner {
                pairs.push((div_out[i * (grid.ny + 1) + j], c(phi.laplacian(x))));
            }
        }
    }
    let div_a0 = rel(pairs.into_iter());

    let b_field = ops.apply_b_scaled(c(1.0), &field);
    let curl_out = curl(&b_field, h);
    let curl_ref = ScalarField::from_fn(&grid, |x| c(-psi.laplacian(x)));
    let curl_b0 = rel(curl_out
        .values
        .iter()
        .zip(&curl_ref.values)
        .zip(&grid.indicator)
        .filter(|(_, w)| **w >= 1.0)
        .map(|((a, b), _)| (*a, *b)));

    let n = ops.n_active_edges();
    let b0 = |x: &[C64]| ops.pack_edges(&ops.apply_b_scaled(c(1.0), &ops.unpack_edges(x)));
    let b_norm = power_norm(n, POWER_VECTORS, POWER_STEPS, seed, &b0);
    let residual = power_norm(n, POWER_VECTORS, POWER_STEPS, seed ^ 0x9e37, |x| {
        let bx = b0(x);
        let bbx = b0(&bx);
        bbx.iter().zip(&bx).map(|(a, b)| a - b).collect()
    });
    Ok(IdentityReport { nx, h, b0_projection: residual / b_norm, div_a0, curl_b0, a0_gradient })
}

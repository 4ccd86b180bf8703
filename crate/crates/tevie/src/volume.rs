//! Volume integral operators on a staggered pixel grid.
//!
//! Layout: x-components live on horizontal edges (nx × (ny+1)), y-components
//! on vertical edges ((nx+1) × ny), scalars such as H₃ on cells (nx × ny) and
//! divergences and potentials on nodes ((nx+1) × (ny+1)). All arrays are
//! x-major: entry (i, j) of an array with `c` columns sits at i·c + j.
//!
//! The Newton potential is the lattice convolution of [`crate::lattice`],
//! whose static part inverts −Δ_h exactly, so the discrete versions of
//! div A₀ = div, curl B₀ = curl and B₀² = B₀ hold to roundoff.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PixelGrid;
use crate::lattice::Convolver;
use crate::specfun::Kernel;

type C64 = Complex64;
const ZERO: C64 = C64::new(0.0, 0.0);

/// Relative permittivity and permeability of the scatterer; contrasts are derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub eps_r: C64,
    pub mu_r: C64,
}

impl Medium {
    pub fn new(eps_r: C64, mu_r: C64) -> Self {
        Medium { eps_r, mu_r }
    }

    pub fn real(eps_r: f64, mu_r: f64) -> Self {
        Medium::new(C64::new(eps_r, 0.0), C64::new(mu_r, 0.0))
    }

    pub fn vacuum() -> Self {
        Medium::real(1.0, 1.0)
    }

    /// η = 1 − ε_r
    pub fn eta(&self) -> C64 {
        1.0 - self.eps_r
    }

    /// ν = 1 − 1/μ_r
    pub fn nu(&self) -> Result<C64> {
        if self.mu_r == ZERO {
            return Err(Error::Domain("nu needs mu_r != 0".into()));
        }
        Ok(1.0 - 1.0 / self.mu_r)
    }

    /// α = 1 − 1/ε_r
    pub fn alpha(&self) -> Result<C64> {
        if self.eps_r == ZERO {
            return Err(Error::Domain("alpha needs eps_r != 0".into()));
        }
        Ok(1.0 - 1.0 / self.eps_r)
    }

    /// β = μ_r − 1
    pub fn beta(&self) -> C64 {
        self.mu_r - 1.0
    }
}

/// Cell-centred scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<C64>,
}

impl ScalarField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        ScalarField { nx, ny, values: vec![ZERO; nx * ny] }
    }

    pub fn from_fn(grid: &PixelGrid, f: impl Fn([f64; 2]) -> C64) -> Self {
        let mut s = ScalarField::zeros(grid.nx, grid.ny);
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                s.values[i * grid.ny + j] = f(grid.cell_center(i, j));
            }
        }
        s
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.ny + j]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Edge-based vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub nx: usize,
    pub ny: usize,
    /// nx × (ny+1), on horizontal edges
    pub ex: Vec<C64>,
    /// (nx+1) × ny, on vertical edges
    pub ey: Vec<C64>,
}

impl VectorField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        VectorField { nx, ny, ex: vec![ZERO; nx * (ny + 1)], ey: vec![ZERO; (nx + 1) * ny] }
    }

    /// Samples the two components of `f` at their edge midpoints.
    pub fn from_fn(grid: &PixelGrid, f: impl Fn([f64; 2]) -> [C64; 2]) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut v = VectorField::zeros(nx, ny);
        for i in 0..nx {
            for j in 0..=ny {
                v.ex[i * (ny + 1) + j] = f(grid.edge_x_mid(i, j))[0];
            }
        }
        for i in 0..=nx {
            for j in 0..ny {
                v.ey[i * ny + j] = f(grid.edge_y_mid(i, j))[1];
            }
        }
        v
    }

    pub fn norm(&self) -> f64 {
        self.ex.iter().chain(&self.ey).map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: C64) {
        self.ex.iter_mut().chain(self.ey.iter_mut()).for_each(|v| *v *= s);
    }

    pub fn axpy(&mut self, a: C64, other: &VectorField) {
        for (x, y) in self.ex.iter_mut().zip(&other.ex).chain(self.ey.iter_mut().zip(&other.ey)) {
            *x += a * y;
        }
    }

    /// Average of the two edges of each cell, i.e. the field at cell centres.
    pub fn cell_average(&self) -> Vec<[C64; 2]> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                let x = 0.5 * (self.ex[i * (ny + 1) + j] + self.ex[i * (ny + 1) + j + 1]);
                let y = 0.5 * (self.ey[i * ny + j] + self.ey[(i + 1) * ny + j]);
                out.push([x, y]);
            }
        }
        out
    }
}

/// Discrete divergence on nodes.
pub fn divergence(v: &VectorField, h: f64) -> Vec<C64> {
    let (nx, ny) = (v.nx, v.ny);
    let mut d = vec![ZERO; (nx + 1) * (ny + 1)];
    for i in 0..nx {
        for j in 0..=ny {
            let e = v.ex[i * (ny + 1) + j] / h;
            d[i * (ny + 1) + j] += e;
            d[(i + 1) * (ny + 1) + j] -= e;
        }
    }
    for i in 0..=nx {
        for j in 0..ny {
            let e = v.ey[i * ny + j] / h;
            d[i * (ny + 1) + j] += e;
            d[i * (ny + 1) + j + 1] -= e;
        }
    }
    d
}

/// Discrete gradient of a node function, on edges.
pub fn gradient(phi: &[C64], nx: usize, ny: usize, h: f64) -> VectorField {
    let mut v = VectorField::zeros(nx, ny);
    for i in 0..nx {
        for j in 0..=ny {
            v.ex[i * (ny + 1) + j] = (phi[(i + 1) * (ny + 1) + j] - phi[i * (ny + 1) + j]) / h;
        }
    }
    for i in 0..=nx {
        for j in 0..ny {
            v.ey[i * ny + j] = (phi[i * (ny + 1) + j + 1] - phi[i * (ny + 1) + j]) / h;
        }
    }
    v
}

/// Scalar curl ∂₁E₂ − ∂₂E₁ on cells.
pub fn curl(v: &VectorField, h: f64) -> ScalarField {
    let (nx, ny) = (v.nx, v.ny);
    let mut c = ScalarField::zeros(nx, ny);
    for i in 0..nx {
        for j in 0..ny {
            c.values[i * ny + j] = (v.ey[(i + 1) * ny + j] - v.ey[i * ny + j] - v.ex[i * (ny + 1) + j + 1]
                + v.ex[i * (ny + 1) + j])
                / h;
        }
    }
    c
}

/// Vector curl (∂₂u, −∂₁u) of a cell function, on edges; u vanishes outside the grid.
pub fn curl_vector(u: &ScalarField, h: f64) -> VectorField {
    let (nx, ny) = (u.nx, u.ny);
    let at = |i: isize, j: isize| {
        if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
            ZERO
        } else {
            u.values[i as usize * ny + j as usize]
        }
    };
    let mut v = VectorField::zeros(nx, ny);
    for i in 0..nx {
        for j in 0..=ny {
            let (i, j2) = (i as isize, j as isize);
            v.ex[i as usize * (ny + 1) + j] = (at(i, j2) - at(i, j2 - 1)) / h;
        }
    }
    for i in 0..=nx {
        for j in 0..ny {
            let (i2, j2) = (i as isize, j as isize);
            v.ey[i * ny + j] = -(at(i2, j2) - at(i2 - 1, j2)) / h;
        }
    }
    v
}

/// Which operator to assemble densely.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum DenseOp {
    A0,
    B0,
    /// η A₀ + ν B₀
    Mixed { eta: C64, nu: C64 },
    C0,
}

pub const DEFAULT_CELL_CAP: usize = 4096;

/// Operators bound to one grid and one kernel.
#[derive(Debug)]
pub struct VolumeOperators {
    grid: PixelGrid,
    kernel: Kernel,
    conv: Convolver,
    active_x: Vec<bool>,
    active_y: Vec<bool>,
    dilated: Vec<bool>,
}

impl VolumeOperators {
    /// Requires an empty two-cell ring around the scatterer.
    pub fn new(grid: &PixelGrid, kernel: Kernel) -> Result<Self> {
        let (nx, ny) = (grid.nx, grid.ny);
        for i in 0..nx {
            for j in 0..ny {
                let ring = i < 2 || j < 2 || i + 2 >= nx || j + 2 >= ny;
                if ring && grid.indicator[i * ny + j] > 0.0 {
                    return Err(Error::InvalidInput("grid margin must be at least two empty cells".into()));
                }
            }
        }
        let conv = Convolver::new(&kernel, grid.h, (nx + 1, ny + 1))?;
        let cell = |i: usize, j: usize| i < nx && j < ny && grid.indicator[i * ny + j] > 0.0;
        let mut active_x = vec![false; nx * (ny + 1)];
        for i in 0..nx {
            for j in 0..=ny {
                active_x[i * (ny + 1) + j] =
                    grid.edge_x[i * (ny + 1) + j] > 0.0 || cell(i, j) || (j > 0 && cell(i, j - 1));
            }
        }
        let mut active_y = vec![false; (nx + 1) * ny];
        for i in 0..=nx {
            for j in 0..ny {
                active_y[i * ny + j] = grid.edge_y[i * ny + j] > 0.0 || cell(i, j) || (i > 0 && cell(i - 1, j));
            }
        }
        let mut dilated = vec![false; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                dilated[i * ny + j] = cell(i, j)
                    || (i > 0 && cell(i - 1, j))
                    || cell(i + 1, j)
                    || (j > 0 && cell(i, j - 1))
                    || cell(i, j + 1);
            }
        }
        Ok(VolumeOperators { grid: grid.clone(), kernel, conv, active_x, active_y, dilated })
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn active_edges(&self) -> (&[bool], &[bool]) {
        (&self.active_x, &self.active_y)
    }

    /// Cells in Ω and their edge neighbours: the unknowns of the magnetic equation.
    pub fn dilated_cells(&self) -> &[bool] {
        &self.dilated
    }

    pub fn n_active_edges(&self) -> usize {
        self.active_x.iter().chain(&self.active_y).filter(|a| **a).count()
    }

    pub fn n_dilated_cells(&self) -> usize {
        self.dilated.iter().filter(|a| **a).count()
    }

    fn shape_x(&self) -> (usize, usize) {
        (self.grid.nx, self.grid.ny + 1)
    }

    fn shape_y(&self) -> (usize, usize) {
        (self.grid.nx + 1, self.grid.ny)
    }

    /// g * (χ f) on cells.
    pub fn newton(&self, f: &ScalarField) -> ScalarField {
        let masked: Vec<C64> = f.values.iter().zip(&self.grid.indicator).map(|(v, c)| v * c).collect();
        ScalarField { nx: f.nx, ny: f.ny, values: self.conv.apply(&masked, (f.nx, f.ny)) }
    }

    /// −(∇div + k²) g * f with f = ηχ_e E, restricted to active edges.
    pub fn apply_a(&self, medium: &Medium, e: &VectorField) -> VectorField {
        let eta = medium.eta();
        let fx: Vec<C64> = e.ex.iter().zip(&self.grid.edge_x).map(|(v, c)| eta * c * v).collect();
        let fy: Vec<C64> = e.ey.iter().zip(&self.grid.edge_y).map(|(v, c)| eta * c * v).collect();
        self.apply_a_source(VectorField { nx: e.nx, ny: e.ny, ex: fx, ey: fy })
    }

    fn apply_a_source(&self, f: VectorField) -> VectorField {
        let (nx, ny, h) = (self.grid.nx, self.grid.ny, self.grid.h);
        let p = self.conv.apply(&divergence(&f, h), (nx + 1, ny + 1));
        let mut out = gradient(&p, nx, ny, h);
        out.scale(C64::new(-1.0, 0.0));
        let k = self.kernel.k();
        if k != ZERO {
            let k2 = k * k;
            let gx = self.conv.apply(&f.ex, self.shape_x());
            let gy = self.conv.apply(&f.ey, self.shape_y());
            out.axpy(-k2, &VectorField { nx, ny, ex: gx, ey: gy });
        }
        self.mask_edges(&mut out);
        out
    }

    /// curlvec g * (ν χ curl E), restricted to active edges.
    pub fn apply_b(&self, medium: &Medium, e: &VectorField) -> Result<VectorField> {
        Ok(self.apply_b_scaled(medium.nu()?, e))
    }

    /// Per-edge magnetic contrast 1 − 1/ε̄ with ε̄ = 1 + (ε_r − 1)χ_e, the
    /// same averaged permittivity the electric equation sees.
    pub fn magnetic_contrast(&self, medium: &Medium) -> Result<(Vec<C64>, Vec<C64>)> {
        let eta = medium.eta();
        let f = |c: &f64| -> Result<C64> {
            if *c == 0.0 {
                return Ok(ZERO);
            }
            let eps = 1.0 - eta * c;
            if eps.norm() < 1e-12 {
                return Err(Error::Domain("averaged permittivity vanishes on a boundary edge".into()));
            }
            Ok(1.0 - 1.0 / eps)
        };
        let x = self.grid.edge_x.iter().map(f).collect::<Result<Vec<_>>>()?;
        let y = self.grid.edge_y.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok((x, y))
    }

    /// curl g * (α_e curlvec u), restricted to the dilated cell set.
    pub fn apply_c(&self, medium: &Medium, u: &ScalarField) -> Result<ScalarField> {
        medium.alpha()?;
        let (ax, ay) = self.magnetic_contrast(medium)?;
        Ok(self.apply_c_with(&ax, &ay, u))
    }

    /// As [`Self::apply_c`] with explicit per-edge contrasts; linear in them.
    pub fn apply_c_with(&self, contrast_x: &[C64], contrast_y: &[C64], u: &ScalarField) -> ScalarField {
        let (nx, ny, h) = (self.grid.nx, self.grid.ny, self.grid.h);
        let mut masked = u.clone();
        for (v, d) in masked.values.iter_mut().zip(&self.dilated) {
            if !d {
                *v = ZERO;
            }
        }
        let v = curl_vector(&masked, h);
        let fx: Vec<C64> = v.ex.iter().zip(contrast_x).map(|(a, b)| a * b).collect();
        let fy: Vec<C64> = v.ey.iter().zip(contrast_y).map(|(a, b)| a * b).collect();
        let g = VectorField { nx, ny, ex: self.conv.apply(&fx, self.shape_x()), ey: self.conv.apply(&fy, self.shape_y()) };
        let mut out = curl(&g, h);
        self.mask_cells(&mut out);
        out
    }

    /// k² g * (β χ u); identically zero for k = 0.
    pub fn apply_d(&self, medium: &Medium, u: &ScalarField) -> ScalarField {
        let k = self.kernel.k();
        let beta = medium.beta();
        if k == ZERO || beta == ZERO {
            return ScalarField::zeros(u.nx, u.ny);
        }
        let src: Vec<C64> = u.values.iter().zip(&self.grid.indicator).map(|(v, c)| k * k * beta * c * v).collect();
        let mut out = ScalarField { nx: u.nx, ny: u.ny, values: self.conv.apply(&src, (u.nx, u.ny)) };
        self.mask_cells(&mut out);
        out
    }

    fn mask_edges(&self, v: &mut VectorField) {
        for (x, a) in v.ex.iter_mut().zip(&self.active_x) {
            if !a {
                *x = ZERO;
            }
        }
        for (y, a) in v.ey.iter_mut().zip(&self.active_y) {
            if !a {
                *y = ZERO;
            }
        }
    }

    fn mask_cells(&self, u: &mut ScalarField) {
        for (x, d) in u.values.iter_mut().zip(&self.dilated) {
            if !d {
                *x = ZERO;
            }
        }
    }

    /// Packs the active edges of `v` into a vector (x edges first).
    pub fn pack_edges(&self, v: &VectorField) -> Vec<C64> {
        let xs = v.ex.iter().zip(&self.active_x).filter(|(_, a)| **a).map(|(x, _)| *x);
        let ys = v.ey.iter().zip(&self.active_y).filter(|(_, a)| **a).map(|(y, _)| *y);
        xs.chain(ys).collect()
    }

    pub fn unpack_edges(&self, x: &[C64]) -> VectorField {
        let mut v = VectorField::zeros(self.grid.nx, self.grid.ny);
        let mut it = x.iter();
        for (e, a) in v.ex.iter_mut().zip(&self.active_x) {
            if *a {
                *e = *it.next().expect("packed vector too short");
            }
        }
        for (e, a) in v.ey.iter_mut().zip(&self.active_y) {
            if *a {
                *e = *it.next().expect("packed vector too short");
            }
        }
        v
    }

    pub fn pack_cells(&self, u: &ScalarField) -> Vec<C64> {
        u.values.iter().zip(&self.dilated).filter(|(_, d)| **d).map(|(v, _)| *v).collect()
    }

    pub fn unpack_cells(&self, x: &[C64]) -> ScalarField {
        let mut u = ScalarField::zeros(self.grid.nx, self.grid.ny);
        let mut it = x.iter();
        for (v, d) in u.values.iter_mut().zip(&self.dilated) {
            if *d {
                *v = *it.next().expect("packed vector too short");
            }
        }
        u
    }

    /// Applies a static operator to a packed vector.
    pub fn apply_packed(&self, op: DenseOp, x: &[C64]) -> Result<Vec<C64>> {
        let one = Medium::real(0.0, 1.0); // η = 1
        Ok(match op {
            DenseOp::A0 => self.pack_edges(&self.apply_a(&one, &self.unpack_edges(x))),
            DenseOp::B0 => self.pack_edges(&self.apply_b_scaled(C64::new(1.0, 0.0), &self.unpack_edges(x))),
            DenseOp::Mixed { eta, nu } => {
                let e = self.unpack_edges(x);
                let mut a = self.apply_a(&Medium::new(1.0 - eta, C64::new(1.0, 0.0)), &e);
                a.axpy(C64::new(1.0, 0.0), &self.apply_b_scaled(nu, &e));
                self.pack_edges(&a)
            }
            DenseOp::C0 => {
                let u = self.unpack_cells(x);
                let ax: Vec<C64> = self.grid.edge_x.iter().map(|c| C64::new(*c, 0.0)).collect();
                let ay: Vec<C64> = self.grid.edge_y.iter().map(|c| C64::new(*c, 0.0)).collect();
                self.pack_cells(&self.apply_c_with(&ax, &ay, &u))
            }
        })
    }

    /// B with an explicit magnetic contrast ν (which may be 1, i.e. μ_r = ∞).
    pub fn apply_b_scaled(&self, nu: C64, e: &VectorField) -> VectorField {
        let (nx, ny, h) = (self.grid.nx, self.grid.ny, self.grid.h);
        let c = curl(e, h);
        let src: Vec<C64> = c.values.iter().zip(&self.grid.indicator).map(|(v, x)| nu * x * v).collect();
        let pot = ScalarField { nx, ny, values: self.conv.apply(&src, (nx, ny)) };
        let mut out = curl_vector(&pot, h);
        self.mask_edges(&mut out);
        out
    }

    /// Dense matrix of a static operator on the packed unknowns. Column j is the
    /// operator applied to the j-th unit vector. A₀, B₀ and the mixed operator
    /// act on active edges with unit contrast; C₀ acts on the dilated cells
    /// with contrast χ_e (α = 1).
    pub fn assemble_dense(&self, op: DenseOp, cell_cap: usize) -> Result<Mat<C64>> {
        let cells = self.grid.n_cells();
        if cells > cell_cap {
            return Err(Error::SizeCap { size: cells, cap: cell_cap });
        }
        if !self.kernel.is_static() {
            return Err(Error::InvalidInput("dense assembly is for the static operators".into()));
        }
        let n = match op {
            DenseOp::C0 => self.n_dilated_cells(),
            _ => self.n_active_edges(),
        };
        let cols: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut x = vec![ZERO; n];
                x[j] = C64::new(1.0, 0.0);
                self.apply_packed(op, &x)
            })
            .collect::<Result<_>>()?;
        Ok(Mat::from_fn(n, n, |i, j| cols[j][i]))
    }
}

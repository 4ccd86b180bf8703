//! TE scattering: plane-wave incidence, the electric and magnetic volume
//! integral equations, field recovery and the exterior representation.

mod gmres;
mod mie;

pub use gmres::{gmres, GmresOutcome, SolverOptions};
pub use mie::{bessel_j_orders, bessel_y_orders, hankel_orders, mie_disk_reference, MieField, MieSolution, TAIL_LIMIT};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PixelGrid, Point};
use crate::specfun::Kernel;
use crate::volume::{curl, curl_vector, divergence, Medium, ScalarField, VectorField, VolumeOperators};

type C64 = Complex64;
const ZERO: C64 = C64::new(0.0, 0.0);

/// Plane wave H₃⁰ = e^{ik d·x}, E⁰ = (−d₂, d₁)e^{ik d·x} sampled on a grid.
#[derive(Clone, Debug)]
pub struct IncidentField {
    pub k: f64,
    pub direction: [f64; 2],
    pub e: VectorField,
    pub h3: ScalarField,
}

fn check_direction(d: [f64; 2]) -> Result<()> {
    if ((d[0] * d[0] + d[1] * d[1]).sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("direction {d:?} is not a unit vector")));
    }
    Ok(())
}

/// Value of the plane wave (H₃, E) at one point.
pub fn plane_wave_at(k: f64, d: [f64; 2], x: Point) -> (C64, [C64; 2]) {
    let p = C64::new(0.0, k * (d[0] * x[0] + d[1] * x[1])).exp();
    (p, [-d[1] * p, d[0] * p])
}

pub fn plane_wave(k: f64, d: [f64; 2], grid: &PixelGrid) -> Result<IncidentField> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("plane wave needs k > 0, got {k}")));
    }
    check_direction(d)?;
    Ok(IncidentField {
        k,
        direction: d,
        e: VectorField::from_fn(grid, |x| plane_wave_at(k, d, x).1),
        h3: ScalarField::from_fn(grid, |x| plane_wave_at(k, d, x).0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Electric,
    Magnetic,
}

#[derive(Clone, Debug)]
pub struct ScatteringSolution {
    pub formulation: Formulation,
    pub k: f64,
    pub medium: Medium,
    pub direction: [f64; 2],
    /// Electric formulation: E on the active edges.
    pub e: Option<VectorField>,
    /// Magnetic formulation: H₃ on the dilated cells.
    pub h3: Option<ScalarField>,
    /// Relative residual per iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl ScatteringSolution {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

fn check_kernel(ops: &VolumeOperators, k: f64) -> Result<()> {
    if (ops.kernel().k() - k).norm() > 1e-14 * k.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "operators were built for k = {}, incident field has k = {k}",
            ops.kernel().k()
        )));
    }
    Ok(())
}

/// Solves (I − A − B)E = E⁰ on the active edges.
pub fn solve_vie_electric(
    ops: &VolumeOperators,
    medium: &Medium,
    inc: &IncidentField,
    opts: &SolverOptions,
) -> Result<ScatteringSolution> {
    check_kernel(ops, inc.k)?;
    if medium.eps_r == ZERO || medium.mu_r == ZERO {
        return Err(Error::Domain("electric equation needs eps_r, mu_r != 0".into()));
    }
    let nu = medium.nu()?;
    let rhs = ops.pack_edges(&inc.e);
    let op = |x: &[C64]| {
        let e = ops.unpack_edges(x);
        let mut s = ops.apply_a(medium, &e);
        s.axpy(C64::new(1.0, 0.0), &ops.apply_b_scaled(nu, &e));
        let s = ops.pack_edges(&s);
        x.iter().zip(&s).map(|(a, b)| a - b).collect::<Vec<_>>()
    };
    let out = gmres(op, &rhs, opts);
    Ok(ScatteringSolution {
        formulation: Formulation::Electric,
        k: inc.k,
        medium: *medium,
        direction: inc.direction,
        e: Some(ops.unpack_edges(&out.x)),
        h3: None,
        residuals: out.residuals,
        converged: out.converged,
    })
}

/// Solves (I − C − D)H₃ = H₃⁰ on the dilated cells.
pub fn solve_vie_magnetic(
    ops: &VolumeOperators,
    medium: &Medium,
    inc: &IncidentField,
    opts: &SolverOptions,
) -> Result<ScatteringSolution> {
    check_kernel(ops, inc.k)?;
    medium.alpha()?;
    let (cx, cy) = ops.magnetic_contrast(medium)?;
    let rhs = ops.pack_cells(&inc.h3);
    let op = |x: &[C64]| {
        let u = ops.unpack_cells(x);
        let mut s = ops.apply_c_with(&cx, &cy, &u);
        let d = ops.apply_d(medium, &u);
        s.values.iter_mut().zip(&d.values).for_each(|(a, b)| *a += b);
        let s = ops.pack_cells(&s);
        x.iter().zip(&s).map(|(a, b)| a - b).collect::<Vec<_>>()
    };
    let out = gmres(op, &rhs, opts);
    Ok(ScatteringSolution {
        formulation: Formulation::Magnetic,
        k: inc.k,
        medium: *medium,
        direction: inc.direction,
        e: None,
        h3: Some(ops.unpack_cells(&out.x)),
        residuals: out.residuals,
        converged: out.converged,
    })
}

/// H₃ = curl E/(ik μ̄) with μ̄ = 1 + (μ_r − 1)χ per cell.
pub fn recover_h3(e: &VectorField, grid: &PixelGrid, medium: &Medium, k: f64) -> Result<ScalarField> {
    if medium.mu_r == ZERO {
        return Err(Error::Domain("recovering H3 needs mu_r != 0".into()));
    }
    let mut c = curl(e, grid.h);
    for (v, chi) in c.values.iter_mut().zip(&grid.indicator) {
        let mu = 1.0 + (medium.mu_r - 1.0) * chi;
        *v /= C64::new(0.0, k) * mu;
    }
    Ok(c)
}

/// Total fields at a point outside the scatterer.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExteriorValue {
    pub point: Point,
    pub h3: C64,
    pub e: [C64; 2],
}

/// Point sources of the representation formula: weights at positions.
struct Sources {
    /// scalar potential sources (value, position)
    scalar: Vec<(C64, Point)>,
    /// vector sources (x, y components, position)
    vector: Vec<([C64; 2], Point)>,
}

fn cell_of(grid: &PixelGrid, x: Point) -> Option<(usize, usize)> {
    let fi = ((x[0] - grid.origin[0]) / grid.h).floor();
    let fj = ((x[1] - grid.origin[1]) / grid.h).floor();
    if fi < 0.0 || fj < 0.0 || fi >= grid.nx as f64 || fj >= grid.ny as f64 {
        None
    } else {
        Some((fi as usize, fj as usize))
    }
}

/// Total H₃ and E at `points` from the representation formula, by direct
/// midpoint quadrature over the grid. Points in cells carrying unknowns are
/// rejected.
pub fn evaluate_exterior(ops: &VolumeOperators, sol: &ScatteringSolution, points: &[Point]) -> Result<Vec<ExteriorValue>> {
    let grid = ops.grid();
    for p in points {
        if let Some((i, j)) = cell_of(grid, *p) {
            if ops.dilated_cells()[i * grid.ny + j] {
                return Err(Error::InvalidInput(format!("point {p:?} lies inside the scatterer")));
            }
        }
    }
    let kernel = Kernel::real(sol.k)?;
    let h2 = grid.h * grid.h;
    let (nx, ny) = (grid.nx, grid.ny);
    let ik = C64::new(0.0, sol.k);
    let k2 = sol.k * sol.k;
    let edge_sources = |fx: &[C64], fy: &[C64]| -> Vec<([C64; 2], Point)> {
        let mut v = vec![];
        for i in 0..nx {
            for j in 0..=ny {
                let f = fx[i * (ny + 1) + j];
                if f != ZERO {
                    v.push(([f * h2, ZERO], grid.edge_x_mid(i, j)));
                }
            }
        }
        for i in 0..=nx {
            for j in 0..ny {
                let f = fy[i * ny + j];
                if f != ZERO {
                    v.push(([ZERO, f * h2], grid.edge_y_mid(i, j)));
                }
            }
        }
        v
    };
    let cell_sources = |s: &[C64]| -> Vec<(C64, Point)> {
        let mut v = vec![];
        for i in 0..nx {
            for j in 0..ny {
                if s[i * ny + j] != ZERO {
                    v.push((s[i * ny + j] * h2, grid.cell_center(i, j)));
                }
            }
        }
        v
    };

    let values: Vec<Result<ExteriorValue>> = match sol.formulation {
        Formulation::Electric => {
            let e = sol.e.as_ref().ok_or_else(|| Error::InvalidInput("electric solution without E".into()))?;
            let eta = sol.medium.eta();
            let nu = sol.medium.nu()?;
            let fx: Vec<C64> = e.ex.iter().zip(&grid.edge_x).map(|(v, c)| eta * c * v).collect();
            let fy: Vec<C64> = e.ey.iter().zip(&grid.edge_y).map(|(v, c)| eta * c * v).collect();
            let f = VectorField { nx, ny, ex: fx, ey: fy };
            let div = divergence(&f, grid.h);
            let mut nodes = vec![];
            for i in 0..=nx {
                for j in 0..=ny {
                    let d = div[i * (ny + 1) + j];
                    if d != ZERO {
                        nodes.push((d * h2, grid.node(i, j)));
                    }
                }
            }
            let src = Sources { scalar: nodes, vector: edge_sources(&f.ex, &f.ey) };
            let c = curl(e, grid.h);
            let s: Vec<C64> = c.values.iter().zip(&grid.indicator).map(|(v, x)| nu * x * v).collect();
            let cells = cell_sources(&s);
            points
                .par_iter()
                .map(|x| {
                    let (h0, e0) = plane_wave_at(sol.k, sol.direction, *x);
                    let mut ev = e0;
                    let mut hv = h0;
                    // A E = −Σ ∇g div f − k² Σ g f
                    for (w, y) in &src.scalar {
                        let g = kernel.gradient([x[0] - y[0], x[1] - y[1]])?;
                        ev[0] -= g[0] * w;
                        ev[1] -= g[1] * w;
                    }
                    for (w, y) in &src.vector {
                        let off = [x[0] - y[0], x[1] - y[1]];
                        let g = kernel.value(off[0].hypot(off[1]))?;
                        let dg = kernel.gradient(off)?;
                        ev[0] -= k2 * g * w[0];
                        ev[1] -= k2 * g * w[1];
                        // H: (1/ik) curl(−k² g f) = ik (∂₁g f₂ − ∂₂g f₁)
                        hv += ik * (dg[0] * w[1] - dg[1] * w[0]);
                    }
                    // B E = curlvec Σ g s; H: (1/ik) k² Σ g s = −ik Σ g s
                    for (w, y) in &cells {
                        let off = [x[0] - y[0], x[1] - y[1]];
                        let dg = kernel.gradient(off)?;
                        ev[0] += dg[1] * w;
                        ev[1] -= dg[0] * w;
                        hv -= ik * kernel.value(off[0].hypot(off[1]))? * w;
                    }
                    Ok(ExteriorValue { point: *x, h3: hv, e: ev })
                })
                .collect()
        }
        Formulation::Magnetic => {
            let u = sol.h3.as_ref().ok_or_else(|| Error::InvalidInput("magnetic solution without H3".into()))?;
            let (cx, cy) = ops.magnetic_contrast(&sol.medium)?;
            let mut masked = u.clone();
            for (v, d) in masked.values.iter_mut().zip(ops.dilated_cells()) {
                if !d {
                    *v = ZERO;
                }
            }
            let v = curl_vector(&masked, grid.h);
            let fx: Vec<C64> = v.ex.iter().zip(&cx).map(|(a, b)| a * b).collect();
            let fy: Vec<C64> = v.ey.iter().zip(&cy).map(|(a, b)| a * b).collect();
            let edges = edge_sources(&fx, &fy);
            let beta = sol.medium.beta();
            let s: Vec<C64> = u.values.iter().zip(&grid.indicator).map(|(v, c)| k2 * beta * c * v).collect();
            let cells = cell_sources(&s);
            points
                .par_iter()
                .map(|x| {
                    let (h0, _) = plane_wave_at(sol.k, sol.direction, *x);
                    let mut hv = h0;
                    // ∇ of the scattered part
                    let mut grad = [ZERO; 2];
                    for (w, y) in &edges {
                        let off = [x[0] - y[0], x[1] - y[1]];
                        let dg = kernel.gradient(off)?;
                        let hs = kernel.hessian(off)?;
                        hv += dg[0] * w[1] - dg[1] * w[0];
                        for (a, g) in grad.iter_mut().enumerate() {
                            *g += hs[a][0] * w[1] - hs[a][1] * w[0];
                        }
                    }
                    for (w, y) in &cells {
                        let off = [x[0] - y[0], x[1] - y[1]];
                        hv += kernel.value(off[0].hypot(off[1]))? * w;
                        let dg = kernel.gradient(off)?;
                        grad[0] += dg[0] * w;
                        grad[1] += dg[1] * w;
                    }
                    let (_, e0) = plane_wave_at(sol.k, sol.direction, *x);
                    // E = (−∂₂H, ∂₁H)/(ik)
                    let e = [e0[0] - grad[1] / ik, e0[1] + grad[0] / ik];
                    Ok(ExteriorValue { point: *x, h3: hv, e })
                })
                .collect()
        }
    };
    values.into_iter().collect()
}

/// Cells whose (2·depth+1)² neighbourhood lies entirely inside Ω
/// (indicator 1); depth 0 gives the fully covered cells.
pub fn interior_cells(grid: &PixelGrid, depth: usize) -> Vec<bool> {
    let (nx, ny) = (grid.nx, grid.ny);
    let d = depth as isize;
    let full = |i: isize, j: isize| {
        i >= 0 && j >= 0 && i < nx as isize && j < ny as isize && grid.indicator[i as usize * ny + j as usize] >= 1.0
    };
    (0..nx * ny)
        .map(|c| {
            let (i, j) = ((c / ny) as isize, (c % ny) as isize);
            (-d..=d).all(|a| (-d..=d).all(|b| full(i + a, j + b)))
        })
        .collect()
}

/// ‖a − b‖/‖b‖ over the masked entries.
pub fn masked_relative_error(a: &[C64], b: &[C64], mask: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((x, y), m) in a.iter().zip(b).zip(mask) {
        if *m {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
    }
    (num / den).sqrt()
}

/// Error of the cell-averaged E against reference values at cell centres.
pub fn field_error(e: &VectorField, reference: &[[C64; 2]], mask: &[bool]) -> f64 {
    let avg = e.cell_average();
    let flat = |v: &[[C64; 2]]| v.iter().flat_map(|p| [p[0], p[1]]).collect::<Vec<_>>();
    let m2: Vec<bool> = mask.iter().flat_map(|m| [*m, *m]).collect();
    masked_relative_error(&flat(&avg), &flat(reference), &m2)
}

/// Comparison of both formulations against the disk oracle.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiskComparison {
    pub nx: usize,
    pub h: f64,
    pub electric_error: f64,
    pub magnetic_error: f64,
    pub cross_error: f64,
    pub electric_iterations: usize,
    pub magnetic_iterations: usize,
    pub converged: bool,
}

/// Solves the centred disk problem both ways and compares with the series
/// solution on fully covered cells; the cross-formulation gap is measured on
/// cells at least four cells from the boundary.
pub fn compare_disk(
    grid: &PixelGrid,
    k: f64,
    medium: &Medium,
    radius: f64,
    d: [f64; 2],
    opts: &SolverOptions,
) -> Result<DiskComparison> {
    let ops = VolumeOperators::new(grid, Kernel::real(k)?)?;
    let inc = plane_wave(k, d, grid)?;
    let es = solve_vie_electric(&ops, medium, &inc, opts)?;
    let ms = solve_vie_magnetic(&ops, medium, &inc, opts)?;
    let oracle = MieSolution::new(k, medium.eps_r, medium.mu_r, radius, None)?;
    let (nx, ny) = (grid.nx, grid.ny);
    let mut ref_h = vec![ZERO; nx * ny];
    let mut ref_e = vec![[ZERO; 2]; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let f = oracle.field(grid.cell_center(i, j), d)?;
            ref_h[i * ny + j] = f.h3;
            ref_e[i * ny + j] = f.e;
        }
    }
    let inside = interior_cells(grid, 0);
    let deep = interior_cells(grid, 4);
    let e = es.e.as_ref().expect("electric solution carries E");
    let h = ms.h3.as_ref().expect("magnetic solution carries H3");
    let h_from_e = recover_h3(e, grid, medium, k)?;
    Ok(DiskComparison {
        nx,
        h: grid.h,
        electric_error: field_error(e, &ref_e, &inside),
        magnetic_error: masked_relative_error(&h.values, &ref_h, &inside),
        cross_error: masked_relative_error(&h_from_e.values, &h.values, &deep),
        electric_iterations: es.iterations(),
        magnetic_iterations: ms.iterations(),
        converged: es.converged && ms.converged,
    })
}

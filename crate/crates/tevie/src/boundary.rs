//! Static (k = 0) boundary integral operators on a [`BoundaryMesh`].
//!
//! Sign conventions follow the outward normal: K′ has kernel
//! −(1/2π)(x−y)·n(x)/|x−y|², so the double layer of 1 is −1 inside and
//! K·1 = K′ᵀ-weighted·1 = −½ on closed curves.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorTag {
    SingleLayer,
    DoubleLayer,
    KPrime,
    TangentialDerivative,
    TsBlock,
    Gram,
}

#[derive(Clone, Debug)]
pub struct BoundaryOperator {
    pub tag: OperatorTag,
    pub matrix: Mat<f64>,
}

fn rows_to_matrix(n: usize, rows: Vec<Vec<f64>>) -> Mat<f64> {
    let cols = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(n, cols, |i, j| rows[i][j])
}

/// Angle subtended at `x` by the segment a→b, positive when counterclockwise.
fn subtended(x: Point, a: Point, b: Point) -> f64 {
    let da = [a[0] - x[0], a[1] - x[1]];
    let db = [b[0] - x[0], b[1] - x[1]];
    (da[0] * db[1] - da[1] * db[0]).atan2(da[0] * db[0] + da[1] * db[1])
}

fn half_log_ratio(x: Point, a: Point, b: Point) -> f64 {
    let ra = (a[0] - x[0]).powi(2) + (a[1] - x[1]).powi(2);
    let rb = (b[0] - x[0]).powi(2) + (b[1] - x[1]).powi(2);
    0.5 * (rb / ra).ln()
}

/// ∫_panel −(1/2π) ln|x − y| ds(y) in closed form.
fn log_panel(x: Point, a: Point, tau: Point, normal: Point, len: f64) -> f64 {
    let d = [a[0] - x[0], a[1] - x[1]];
    let p = d[0] * tau[0] + d[1] * tau[1];
    let q = (d[0] * normal[0] + d[1] * normal[1]).abs();
    let f = |u: f64| {
        let r2 = u * u + q * q;
        let lg = if r2 > 0.0 { 0.5 * u * r2.ln() } else { 0.0 };
        let at = if q > 0.0 { q * (u / q).atan() } else { 0.0 };
        lg - u + at
    };
    -(f(p + len) - f(p)) / (2.0 * PI)
}

fn weight_similarity(mesh: &BoundaryMesh, k: &Mat<f64>) -> Mat<f64> {
    let w = &mesh.weights;
    let n = w.len();
    Mat::from_fn(n, n, |i, j| k[(j, i)] * w[j] / w[i])
}

/// Double-layer operator K.
pub fn assemble_double_layer(mesh: &BoundaryMesh) -> BoundaryOperator {
    let n = mesh.len();
    let matrix = match &mesh.panels {
        Some(panels) => {
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                0.0
                            } else {
                                -subtended(mesh.nodes[i], panels[j][0], panels[j][1]) / (2.0 * PI)
                            }
                        })
                        .collect()
                })
                .collect();
            rows_to_matrix(n, rows)
        }
        None => weight_similarity(mesh, &assemble_kprime(mesh).matrix),
    };
    BoundaryOperator { tag: OperatorTag::DoubleLayer, matrix }
}

/// Adjoint double layer K′ (normal derivative of the single layer).
pub fn assemble_kprime(mesh: &BoundaryMesh) -> BoundaryOperator {
    let n = mesh.len();
    let matrix = if mesh.is_polygonal() {
        weight_similarity(mesh, &assemble_double_layer(mesh).matrix)
    } else {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = mesh.nodes[i];
                let nx = mesh.normals[i];
                (0..n)
                    .map(|j| {
                        if i == j {
                            -mesh.curvature[i] * mesh.weights[i] / (4.0 * PI)
                        } else {
                            let d = [x[0] - mesh.nodes[j][0], x[1] - mesh.nodes[j][1]];
                            let r2 = d[0] * d[0] + d[1] * d[1];
                            -(d[0] * nx[0] + d[1] * nx[1]) / r2 * mesh.weights[j] / (2.0 * PI)
                        }
                    })
                    .collect()
            })
            .collect();
        rows_to_matrix(n, rows)
    };
    BoundaryOperator { tag: OperatorTag::KPrime, matrix }
}

/// Tangential derivative of the single layer, ∂ₜS, with principal-value diagonal zero.
///
/// On smooth meshes with an even node count only odd index offsets are
/// summed, with doubled weight. The punctured trapezoidal rule would damp the
/// Hilbert-transform symbol linearly in frequency.
pub fn assemble_tangential_derivative(mesh: &BoundaryMesh) -> BoundaryOperator {
    let n = mesh.len();
    let alternating = n % 2 == 0;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = mesh.nodes[i];
            let tx = mesh.tangents[i];
            (0..n)
                .map(|j| {
                    if i == j {
                        return 0.0;
                    }
                    match &mesh.panels {
                        Some(panels) => {
                            let [a, b] = panels[j];
                            let ns = mesh.normals[j];
                            let ts = mesh.tangents[j];
                            let th = subtended(x, a, b);
                            let lg = half_log_ratio(x, a, b);
                            ((ns[0] * tx[0] + ns[1] * tx[1]) * th + (ts[0] * tx[0] + ts[1] * tx[1]) * lg)
                                / (2.0 * PI)
                        }
                        None => {
                            // Odd-offset rule: exact on trigonometric modes below Nyquist.
                            let factor = if alternating { if (i + n - j) % 2 == 1 { 2.0 } else { 0.0 } } else { 1.0 };
                            if factor == 0.0 {
                                return 0.0;
                            }
                            let d = [x[0] - mesh.nodes[j][0], x[1] - mesh.nodes[j][1]];
                            let r2 = d[0] * d[0] + d[1] * d[1];
                            -factor * (d[0] * tx[0] + d[1] * tx[1]) / r2 * mesh.weights[j] / (2.0 * PI)
                        }
                    }
                })
                .collect()
        })
        .collect();
    BoundaryOperator { tag: OperatorTag::TangentialDerivative, matrix: rows_to_matrix(n, rows) }
}

/// Harmonic single layer S.
pub fn assemble_single_layer(mesh: &BoundaryMesh) -> BoundaryOperator {
    let n = mesh.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = mesh.nodes[i];
            (0..n)
                .map(|j| match &mesh.panels {
                    Some(panels) => log_panel(x, panels[j][0], mesh.tangents[j], mesh.normals[j], mesh.weights[j]),
                    None => {
                        let w = mesh.weights[j];
                        if i == j {
                            -w * (w / (2.0 * PI)).ln() / (2.0 * PI)
                        } else {
                            let d = [x[0] - mesh.nodes[j][0], x[1] - mesh.nodes[j][1]];
                            -(d[0] * d[0] + d[1] * d[1]).ln() * w / (4.0 * PI)
                        }
                    }
                })
                .collect()
        })
        .collect();
    BoundaryOperator { tag: OperatorTag::SingleLayer, matrix: rows_to_matrix(n, rows) }
}

/// Diameter of the node set (including panel endpoints).
pub fn mesh_diameter(mesh: &BoundaryMesh) -> f64 {
    let mut pts: Vec<Point> = mesh.nodes.clone();
    if let Some(p) = &mesh.panels {
        pts.extend(p.iter().map(|s| s[0]));
    }
    let mut d: f64 = 0.0;
    for a in &pts {
        for b in &pts {
            d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    d
}

pub const GRAM_DIAMETER: f64 = 0.9;

/// Single-layer Gram form ⟨Sφ, ψ⟩, built on a copy of the mesh scaled to
/// diameter [`GRAM_DIAMETER`] so that the form is positive definite.
/// Returns the symmetrized matrix and the scale factor used.
pub fn gram_matrix(mesh: &BoundaryMesh) -> (BoundaryOperator, f64) {
    let scale = GRAM_DIAMETER / mesh_diameter(mesh);
    let scaled = mesh.scaled(scale);
    let s = assemble_single_layer(&scaled).matrix;
    let n = mesh.len();
    let w = &scaled.weights;
    let g = Mat::from_fn(n, n, |i, j| 0.5 * (w[i] * s[(i, j)] + w[j] * s[(j, i)]));
    (BoundaryOperator { tag: OperatorTag::Gram, matrix: g }, scale)
}

pub struct TsParts {
    pub kprime: Mat<f64>,
    pub dts: Mat<f64>,
    pub block: Mat<f64>,
}

/// [[½I+K′, −∂ₜS], [∂ₜS, ½I+K′]].
pub fn assemble_ts_block(mesh: &BoundaryMesh) -> BoundaryOperator {
    let parts = ts_parts(mesh);
    BoundaryOperator { tag: OperatorTag::TsBlock, matrix: parts.block }
}

pub fn ts_parts(mesh: &BoundaryMesh) -> TsParts {
    let kprime = assemble_kprime(mesh).matrix;
    let dts = assemble_tangential_derivative(mesh).matrix;
    let n = mesh.len();
    let mut half = kprime.clone();
    for i in 0..n {
        half[(i, i)] += 0.5;
    }
    let block = Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => half[(i, j)],
        (false, false) => half[(i - n, j - n)],
        (true, false) => -dts[(i, j - n)],
        (false, true) => dts[(i - n, j)],
    });
    TsParts { kprime, dts, block }
}

#[derive(Clone, Debug)]
pub struct TransmissionSolution {
    pub density: Vec<Complex64>,
    /// Condition number of the system in the single-layer energy norm.
    pub condition: f64,
}

/// System matrix (ε+1)/2·I + (ε−1)·K′ of the transmission problem.
pub fn transmission_matrix(kprime: &Mat<f64>, eps_r: Complex64) -> Mat<Complex64> {
    let n = kprime.nrows();
    Mat::from_fn(n, n, |i, j| {
        let d = if i == j { (eps_r + 1.0) * 0.5 } else { Complex64::new(0.0, 0.0) };
        d + (eps_r - 1.0) * kprime[(i, j)]
    })
}

/// Condition number of `m` as an operator on the energy space of `gram`.
pub fn energy_condition(m: &Mat<Complex64>, gram: &Mat<f64>) -> Result<f64> {
    let chol = gram
        .llt(Side::Lower)
        .map_err(|_| Error::InvalidInput("Gram matrix is not positive definite".into()))?;
    let l = chol.L();
    let lc = Mat::from_fn(l.nrows(), l.ncols(), |i, j| Complex64::new(l[(i, j)], 0.0));
    // X = Lᵀ M L⁻ᵀ  ⇔  L Xᵀ = (Lᵀ M)ᵀ.
    let mut xt = (lc.transpose() * m).transpose().to_owned();
    lc.solve_lower_triangular_in_place(xt.as_mut());
    let sv = xt.singular_values().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if smin > 0.0 { smax / smin } else { f64::INFINITY })
}

/// Solves ((ε+1)/2 I + (ε−1)K′)φ = ψ by LU and reports the energy-norm condition number.
pub fn solve_transmission_bie(mesh: &BoundaryMesh, eps_r: Complex64, rhs: &[Complex64]) -> Result<TransmissionSolution> {
    if eps_r.norm() == 0.0 {
        return Err(Error::Domain("transmission problem needs eps_r != 0".into()));
    }
    if rhs.len() != mesh.len() {
        return Err(Error::InvalidInput(format!("rhs has length {}, mesh has {} nodes", rhs.len(), mesh.len())));
    }
    let kp = assemble_kprime(mesh).matrix;
    let m = transmission_matrix(&kp, eps_r);
    let (gram, _) = gram_matrix(mesh);
    let condition = energy_condition(&m, &gram.matrix)?;
    if !(condition < 1e14) {
        return Err(Error::Singular(condition));
    }
    let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let sol = m.partial_piv_lu().solve(&b);
    Ok(TransmissionSolution { density: (0..rhs.len()).map(|i| sol[(i, 0)]).collect(), condition })
}

/// Orthonormal (in the weighted L²(Γ) inner product) basis of smooth densities
/// cos/sin(2πj s/|Γ|), j ≤ `modes`.
pub fn smooth_densities(mesh: &BoundaryMesh, modes: usize) -> Mat<f64> {
    let n = mesh.len();
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for j in 1..=modes {
        let f = 2.0 * PI * j as f64 / mesh.perimeter;
        cols.push(mesh.arclength.iter().map(|s| (f * s).cos()).collect());
        cols.push(mesh.arclength.iter().map(|s| (f * s).sin()).collect());
    }
    let w = &mesh.weights;
    let mut basis: Vec<Vec<f64>> = vec![];
    for mut c in cols {
        for b in &basis {
            let p: f64 = (0..n).map(|i| w[i] * c[i] * b[i]).sum();
            for i in 0..n {
                c[i] -= p * b[i];
            }
        }
        let nn: f64 = (0..n).map(|i| w[i] * c[i] * c[i]).sum::<f64>().sqrt();
        basis.push(c.iter().map(|v| v / nn).collect());
    }
    Mat::from_fn(n, basis.len(), |i, k| basis[k][i])
}

/// max over unit-norm v in span(`basis`) of ‖R v‖, norms weighted by `weights`.
/// `basis` must be orthonormal in the same weighted inner product.
pub fn restricted_norm(r: &Mat<f64>, basis: &Mat<f64>, weights: &[f64]) -> f64 {
    let rv = r * basis;
    let scaled = Mat::from_fn(rv.nrows(), rv.ncols(), |i, k| rv[(i, k)] * weights[i].sqrt());
    two_norm(&scaled)
}

/// Largest singular value.
pub fn two_norm(m: &Mat<f64>) -> f64 {
    m.singular_values().map_or(f64::NAN, |sv| sv.iter().cloned().fold(0.0, f64::max))
}

/// Residuals of the TS algebra.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TsResiduals {
    /// (∂ₜS)² − K′² + ¼I
    pub square_relation: f64,
    /// ∂ₜS K′ + K′ ∂ₜS
    pub anticommutator: f64,
    /// TS² − TS
    pub projection: f64,
}

/// TS residuals restricted to smooth densities with up to `modes` oscillations.
pub fn ts_residuals_smooth(mesh: &BoundaryMesh, modes: usize) -> TsResiduals {
    let p = ts_parts(mesh);
    let (r1, r2, r3) = ts_residual_matrices(&p);
    let v = smooth_densities(mesh, modes);
    let n = mesh.len();
    let k = v.ncols();
    let vv = Mat::from_fn(2 * n, 2 * k, |i, j| match (i < n, j < k) {
        (true, true) => v[(i, j)],
        (false, false) => v[(i - n, j - k)],
        _ => 0.0,
    });
    let w2: Vec<f64> = mesh.weights.iter().chain(mesh.weights.iter()).cloned().collect();
    TsResiduals {
        square_relation: restricted_norm(&r1, &v, &mesh.weights),
        anticommutator: restricted_norm(&r2, &v, &mesh.weights),
        projection: restricted_norm(&r3, &vv, &w2),
    }
}

/// TS residuals in the full matrix 2-norm.
pub fn ts_residuals_full(mesh: &BoundaryMesh) -> TsResiduals {
    let p = ts_parts(mesh);
    let (r1, r2, r3) = ts_residual_matrices(&p);
    TsResiduals { square_relation: two_norm(&r1), anticommutator: two_norm(&r2), projection: two_norm(&r3) }
}

fn ts_residual_matrices(p: &TsParts) -> (Mat<f64>, Mat<f64>, Mat<f64>) {
    let n = p.kprime.nrows();
    let mut r1 = &p.dts * &p.dts - &p.kprime * &p.kprime;
    for i in 0..n {
        r1[(i, i)] += 0.25;
    }
    let r2 = &p.dts * &p.kprime + &p.kprime * &p.dts;
    let r3 = &p.block * &p.block - &p.block;
    (r1, r2, r3)
}

#[derive(Serialize)]
struct MatrixSidecar<'a> {
    tag: OperatorTag,
    rows: usize,
    cols: usize,
    format: &'a str,
    nodes: usize,
    perimeter: f64,
    grading: f64,
    polygonal: bool,
}

/// Writes `op` as row-major little-endian complex128 to `path` and mesh
/// metadata to `path` with a `.json` extension.
pub fn export_matrix(op: &BoundaryOperator, mesh: &BoundaryMesh, path: &std::path::Path) -> Result<()> {
    let m = &op.matrix;
    let mut bytes = Vec::with_capacity(m.nrows() * m.ncols() * 16);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            bytes.extend_from_slice(&m[(i, j)].to_le_bytes());
            bytes.extend_from_slice(&0f64.to_le_bytes());
        }
    }
    std::fs::write(path, bytes)?;
    let side = MatrixSidecar {
        tag: op.tag,
        rows: m.nrows(),
        cols: m.ncols(),
        format: "row-major little-endian complex128",
        nodes: mesh.len(),
        perimeter: mesh.perimeter,
        grading: mesh.grading,
        polygonal: mesh.is_polygonal(),
    };
    std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

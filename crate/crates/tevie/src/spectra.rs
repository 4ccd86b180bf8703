//! Essential-spectrum predictions, Fredholm criteria and finite-section spectra.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Shape;

type C64 = Complex64;

/// Σ = σ_ess(½I + K′): {½} on smooth boundaries, an interval on polygons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sigma {
    Point { value: f64 },
    Interval { min: f64, max: f64 },
}

impl Sigma {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Sigma::Point { value } => (value, value),
            Sigma::Interval { min, max } => (min, max),
        }
    }

    pub fn contains(&self, s: f64, tol: f64) -> bool {
        let (a, b) = self.bounds();
        s >= a - tol && s <= b + tol
    }

    /// Central part of the interval, shrunk by `frac/2` of its length at each end.
    pub fn central(&self, frac: f64) -> (f64, f64) {
        let (a, b) = self.bounds();
        let mid = 0.5 * (a + b);
        let half = 0.5 * frac * (b - a);
        (mid - half, mid + half)
    }
}

/// Union of points and segments in ℂ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralSet {
    pub points: Vec<C64>,
    pub segments: Vec<[C64; 2]>,
    /// η = 0 or ν = 0 in ηA₀ + νB₀: the formula is applied literally but the
    /// membership of 0 is left open.
    pub degenerate: bool,
    pub provenance: String,
}

impl SpectralSet {
    pub fn distance(&self, z: C64) -> f64 {
        let dp = self.points.iter().map(|p| (z - p).norm());
        let ds = self.segments.iter().map(|[a, b]| {
            let d = b - a;
            let len2 = d.norm_sqr();
            let t = if len2 == 0.0 { 0.0 } else { (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0) };
            (z - (a + d * t)).norm()
        });
        dp.chain(ds).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EssentialSpectrumPrediction {
    pub sigma: Sigma,
    pub corner_angles: Vec<f64>,
    pub provenance: String,
}

fn corner_weight(omega: f64) -> f64 {
    (omega / (2.0 * PI)).min(1.0 - omega / (2.0 * PI))
}

pub fn predict_sigma(shape: &Shape) -> EssentialSpectrumPrediction {
    if shape.is_smooth() {
        return EssentialSpectrumPrediction {
            sigma: Sigma::Point { value: 0.5 },
            corner_angles: vec![],
            provenance: "smooth boundary: K' compact".into(),
        };
    }
    let angles = shape.corner_angles().to_vec();
    let lo = angles.iter().map(|w| corner_weight(*w)).fold(f64::INFINITY, f64::min);
    EssentialSpectrumPrediction {
        sigma: Sigma::Interval { min: lo, max: 1.0 - lo },
        corner_angles: angles,
        provenance: "polygon: convex hull of corner values".into(),
    }
}

/// Operators whose essential spectrum can be predicted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum Target {
    A0,
    B0,
    Mixed { eta: C64, nu: C64 },
    HalfPlusKprime,
    /// (1 − α/2)I − α(½I + K)
    G { alpha: C64 },
}

pub fn predict_essential_spectrum(target: Target, shape: &Shape) -> SpectralSet {
    let sigma = predict_sigma(shape).sigma;
    let (a, b) = sigma.bounds();
    let c = |v: f64| C64::new(v, 0.0);
    let scaled = |s: C64, off: C64| -> (Vec<C64>, Vec<[C64; 2]>) {
        if a == b {
            (vec![off + s * a], vec![])
        } else {
            (vec![], vec![[off + s * a, off + s * b]])
        }
    };
    let zero = c(0.0);
    let (points, segments, degenerate, provenance) = match target {
        Target::A0 => {
            let (p, s) = scaled(c(1.0), zero);
            ([vec![zero, c(1.0)], p].concat(), s, false, "{0} ∪ Σ ∪ {1}")
        }
        Target::B0 => (vec![zero, c(1.0)], vec![], false, "{0, 1}"),
        Target::Mixed { eta, nu } => {
            let (p, s) = scaled(eta, zero);
            ([vec![eta, nu], p].concat(), s, eta == zero || nu == zero, "{η} ∪ ηΣ ∪ {ν}")
        }
        Target::HalfPlusKprime => {
            let (p, s) = scaled(c(1.0), zero);
            (p, s, false, "Σ")
        }
        Target::G { alpha } => {
            let (p, s) = scaled(-alpha, c(1.0));
            (p, s, false, "{1 − ασ : σ ∈ Σ}")
        }
    };
    SpectralSet { points, segments, degenerate, provenance: provenance.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub fredholm: bool,
    /// σ ∈ Σ at which the criterion fails.
    pub offending_sigma: Option<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FredholmReport {
    pub eps_r: C64,
    pub mu_r: C64,
    pub electric: Verdict,
    pub magnetic: Verdict,
    pub agree: bool,
}

const CRITICAL_TOL: f64 = 1e-12;

/// σ with f(σ) = ε_r, if it is real and in Σ.
fn critical_sigma(sigma: &Sigma, s: C64) -> Option<f64> {
    if s.im.abs() <= CRITICAL_TOL * (1.0 + s.re.abs()) && sigma.contains(s.re, CRITICAL_TOL) {
        Some(s.re)
    } else {
        None
    }
}

fn ok(reason: &str) -> Verdict {
    Verdict { fredholm: true, offending_sigma: None, reason: reason.into() }
}

fn fail(reason: &str, s: Option<f64>) -> Verdict {
    Verdict { fredholm: false, offending_sigma: s, reason: reason.into() }
}

/// Fredholm criteria of the electric (I − A − B) and magnetic (I − C − D) equations.
pub fn fredholm_check(eps_r: C64, mu_r: C64, shape: &Shape) -> FredholmReport {
    let sigma = predict_sigma(shape).sigma;
    let zero = C64::new(0.0, 0.0);
    let electric = if eps_r == zero {
        fail("eps_r = 0", None)
    } else if mu_r == zero {
        fail("mu_r = 0", None)
    } else if eps_r == C64::new(1.0, 0.0) {
        ok("no critical value")
    } else {
        // ε_r = 1 − 1/σ  ⇔  σ = 1/(1 − ε_r)
        match critical_sigma(&sigma, 1.0 / (1.0 - eps_r)) {
            Some(s) => fail("eps_r = 1 - 1/sigma", Some(s)),
            None => ok("eps_r avoids 1 - 1/sigma"),
        }
    };
    let magnetic = if eps_r == zero {
        fail("eps_r = 0", None)
    } else if eps_r == C64::new(1.0, 0.0) {
        ok("no critical value")
    } else {
        // ε_r = σ/(σ − 1)  ⇔  σ = ε_r/(ε_r − 1)
        match critical_sigma(&sigma, eps_r / (eps_r - 1.0)) {
            Some(s) => fail("eps_r = sigma/(sigma - 1)", Some(s)),
            None => ok("eps_r avoids sigma/(sigma - 1)"),
        }
    };
    let agree = electric.fredholm == magnetic.fredholm;
    FredholmReport { eps_r, mu_r, electric, magnetic, agree }
}

/// Real ε_r ∈ [lo, hi] sampled at `step` where the electric criterion fails
/// through some σ ∈ Σ; returns the smallest and largest such sample.
pub fn detect_critical_interval(shape: &Shape, lo: f64, hi: f64, step: f64) -> Option<(f64, f64)> {
    let n = ((hi - lo) / step).round() as i64;
    let bad: Vec<f64> = (0..=n)
        .map(|i| lo + i as f64 * step)
        .map(|e| (e * 1e9).round() / 1e9)
        .filter(|e| fredholm_check(C64::new(*e, 0.0), C64::new(1.0, 0.0), shape).electric.offending_sigma.is_some())
        .collect();
    Some((*bad.first()?, *bad.last()?))
}

/// Eigenvalues of `m` (general nonsymmetric).
pub fn eigenvalues(m: &Mat<C64>) -> Result<Vec<C64>> {
    m.eigenvalues().map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

pub fn eigenvalues_real(m: &Mat<f64>) -> Result<Vec<C64>> {
    m.eigenvalues().map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Eigenvalues of the pencil (H, G) with H symmetric and G symmetric positive
/// definite, via G = LLᵀ and L⁻¹ H L⁻ᵀ. `h` is symmetrized first.
pub fn generalized_symmetric(h: &Mat<f64>, g: &Mat<f64>) -> Result<Vec<f64>> {
    let n = h.nrows();
    let chol = g.llt(Side::Lower).map_err(|_| Error::Eigensolver("Gram matrix is not positive definite".into()))?;
    let l = chol.L();
    let mut x = Mat::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    // X ← L⁻¹ H, then (L⁻¹ (L⁻¹ H)ᵀ)ᵀ = L⁻¹ H L⁻ᵀ
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut y = x.transpose().to_owned();
    l.solve_lower_triangular_in_place(y.as_mut());
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (y[(i, j)] + y[(j, i)]));
    let mut ev = sym.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Largest chain-connected cluster of sorted real values with links ≤ `link`.
pub fn cloud(values: &[f64], link: f64) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mut best: &[f64] = &[];
    let mut start = 0;
    for i in 1..=v.len() {
        if i == v.len() || v[i] - v[i - 1] > link {
            if i - start > best.len() {
                best = &v[start..i];
            }
            start = i;
        }
    }
    best.to_vec()
}

/// Longest stretch of [lo, hi] that contains no value.
pub fn max_gap(values: &[f64], lo: f64, hi: f64) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mut pts = vec![f64::NEG_INFINITY];
    pts.extend(v);
    pts.push(f64::INFINITY);
    pts.windows(2).map(|w| (w[1].min(hi) - w[0].max(lo)).max(0.0)).fold(0.0, f64::max)
}

/// Values with at least `m` other values within distance `r`.
pub fn accumulation_set(values: &[f64], m: usize, r: f64) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .filter(|(i, x)| values.iter().enumerate().filter(|(j, y)| j != i && (**x - **y).abs() <= r).count() >= m)
        .map(|(_, x)| *x)
        .collect()
}

/// Hausdorff distance between finite sets of reals.
pub fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let one = |p: &[f64], q: &[f64]| {
        p.iter()
            .map(|x| q.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one(a, b).max(one(b, a))
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub accumulation: Vec<f64>,
    pub d_sym: f64,
    pub neighbours: usize,
    pub radius: f64,
}

/// d_sym = Hausdorff distance between the accumulation set E and 1 − E.
pub fn symmetry_report(values: &[f64], neighbours: usize, radius: f64) -> SymmetryReport {
    let acc = accumulation_set(values, neighbours, radius);
    let refl: Vec<f64> = acc.iter().map(|x| 1.0 - x).collect();
    SymmetryReport { d_sym: hausdorff(&acc, &refl), accumulation: acc, neighbours, radius }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<C64>,
    pub prediction: Option<SpectralSet>,
    /// Fraction of eigenvalues within `tolerance` of the prediction.
    pub coverage: Option<f64>,
    pub tolerance: f64,
    /// Largest uncovered stretch of the central part of Σ (Gram mode only).
    pub fill: Option<f64>,
    /// Cloud extent (Gram mode only).
    pub cloud: Option<(f64, f64)>,
    pub d_sym: Option<f64>,
}

pub const CLOUD_LINK: f64 = 0.05;
pub const CENTRAL_FRACTION: f64 = 0.8;

impl SpectrumReport {
    pub fn new(eigenvalues: Vec<C64>, prediction: Option<SpectralSet>, tolerance: f64) -> Self {
        let coverage = prediction.as_ref().map(|p| {
            eigenvalues.iter().filter(|z| p.distance(**z) <= tolerance).count() as f64 / eigenvalues.len().max(1) as f64
        });
        SpectrumReport { eigenvalues, prediction, coverage, tolerance, fill: None, cloud: None, d_sym: None }
    }

    /// Adds cloud, fill and symmetry metrics for real (Gram-mode) spectra.
    pub fn with_interval_metrics(mut self, sigma: &Sigma, neighbours: usize, radius: f64) -> Self {
        let re: Vec<f64> = self.eigenvalues.iter().map(|z| z.re).collect();
        let cl = cloud(&re, CLOUD_LINK);
        if let (Some(a), Some(b)) = (cl.first(), cl.last()) {
            self.cloud = Some((*a, *b));
        }
        if let Sigma::Interval { .. } = sigma {
            let (lo, hi) = sigma.central(CENTRAL_FRACTION);
            self.fill = Some(max_gap(&cl, lo, hi));
        }
        self.d_sym = Some(symmetry_report(&re, neighbours, radius).d_sym);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            eigenvalues: Vec<[f64; 2]>,
            prediction: &'a Option<SpectralSet>,
            coverage: Option<f64>,
            tolerance: f64,
            fill: Option<f64>,
            cloud: Option<(f64, f64)>,
            d_sym: Option<f64>,
        }
        Ok(serde_json::to_string_pretty(&Out {
            eigenvalues: self.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            prediction: &self.prediction,
            coverage: self.coverage,
            tolerance: self.tolerance,
            fill: self.fill,
            cloud: self.cloud,
            d_sym: self.d_sym,
        })?)
    }
}

/// Gram-mode eigenvalues of ½I + K′ on a boundary mesh.
pub fn gram_spectrum(mesh: &crate::geometry::BoundaryMesh) -> Result<Vec<f64>> {
    use crate::boundary::{assemble_kprime, gram_matrix};
    let kp = assemble_kprime(mesh).matrix;
    let (g, _) = gram_matrix(mesh);
    let n = kp.nrows();
    let mut half = kp;
    for i in 0..n {
        half[(i, i)] += 0.5;
    }
    let h = &g.matrix * &half;
    generalized_symmetric(&h, &g.matrix)
}

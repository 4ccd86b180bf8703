//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failures are reported, not hidden. The process exits 0 so that the
//! workspace test run stays usable; set `ACCEPTANCE_STRICT=1` to turn any
//! FAIL line into a non-zero exit.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tevie::boundary::{assemble_double_layer, solve_transmission_bie, ts_residuals_full, ts_residuals_smooth, TsResiduals};
use tevie::geometry::{boundary_mesh, rasterize, rasterize_with, BoundaryMesh, RasterOptions, Shape};
use tevie::identities::identity_suite;
use tevie::scattering::{compare_disk, SolverOptions};
use tevie::specfun::{bessel_pair, Kernel};
use tevie::spectra::{
    detect_critical_interval, eigenvalues, fredholm_check, gram_spectrum, predict_sigma, symmetry_report, SpectrumReport,
};
use tevie::volume::{DenseOp, Medium, VolumeOperators, DEFAULT_CELL_CAP};

type Outcome = Result<(bool, String), String>;

struct Line {
    label: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
}

fn run(label: &'static str, check: impl FnOnce() -> Outcome) -> Line {
    let t = Instant::now();
    let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
    let line = Line { label, passed, detail, seconds: t.elapsed().as_secs_f64() };
    println!(
        "[{}] {:<34} {}  ({:.1} s)",
        if line.passed { "PASS" } else { "FAIL" },
        line.label,
        line.detail,
        line.seconds
    );
    line
}

fn e(err: tevie::Error) -> String {
    err.to_string()
}

fn mesh(name: &str, n: usize) -> Result<BoundaryMesh, String> {
    boundary_mesh(&Shape::named(name).map_err(e)?, n, 3.0).map_err(e)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn special_functions() -> Outcome {
    let t = Instant::now();
    let table = include_str!("data/bessel_reference.csv");
    let (mut worst, mut wronskian) = (0.0_f64, 0.0_f64);
    let mut count = 0;
    for line in table.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().map_err(|_| format!("bad row {line}"))).collect::<Result<_, _>>()?;
        let x = v[0];
        let (j0, y0) = bessel_pair(0, x).map_err(e)?;
        let (j1, y1) = bessel_pair(1, x).map_err(e)?;
        for (got, want) in [(j0, v[1]), (y0, v[2]), (j1, v[3]), (y1, v[4])] {
            worst = worst.max((got - want).abs());
        }
        let w = -2.0 / (PI * x);
        wronskian = wronskian.max(((j0 * y1 - j1 * y0 - w) / w).abs());
        count += 1;
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = count == 1000 && worst <= 1e-12 && wronskian <= 1e-10 && secs < 1.0;
    Ok((ok, format!("{count} points, max error {worst:.1e}, Wronskian {wronskian:.1e}, {secs:.3} s")))
}

fn gauss_residual(m: &BoundaryMesh) -> f64 {
    let k = assemble_double_layer(m).matrix;
    (0..k.nrows())
        .map(|i| (0.5 - (0..k.ncols()).map(|j| k[(i, j)]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

fn gauss_identity() -> Outcome {
    let t = Instant::now();
    let disk = gauss_residual(&mesh("disk", 256)?);
    let square = gauss_residual(&mesh("square", 512)?);
    let secs = t.elapsed().as_secs_f64();
    let ok = disk <= 1e-6 && square <= 1e-6 && secs < 5.0;
    Ok((ok, format!("|(½I−K)·1 − 1|: disk {disk:.1e}, square {square:.1e}")))
}

fn smooth_spectrum() -> Outcome {
    let ev = gram_spectrum(&mesh("disk", 256)?).map_err(e)?;
    let outliers = ev.iter().filter(|x| (*x - 0.5).abs() > 0.05).count();
    Ok((outliers <= 4, format!("{outliers} of {} eigenvalues farther than 0.05 from ½", ev.len())))
}

fn polygon_spectrum(name: &str) -> Outcome {
    let t = Instant::now();
    let shape = Shape::named(name).map_err(e)?;
    let sigma = predict_sigma(&shape).sigma;
    let (lo, hi) = sigma.bounds();
    let ev = gram_spectrum(&mesh(name, 512)?).map_err(e)?;
    let report = SpectrumReport::new(ev.iter().map(|x| c(*x)).collect(), None, 0.05).with_interval_metrics(&sigma, 3, 0.02);
    let (a, b) = report.cloud.ok_or("empty spectrum")?;
    let fill = report.fill.ok_or("no fill metric")?;
    let (flo, fhi) = sigma.central(tevie::spectra::CENTRAL_FRACTION);
    let secs = t.elapsed().as_secs_f64();
    let ok = a >= lo - 0.05 && b <= hi + 0.05 && fill <= 0.05 && secs < 60.0;
    Ok((ok, format!("cloud [{a:.3}, {b:.3}] in [{:.3}, {:.3}], max gap {fill:.3} on [{flo:.3}, {fhi:.3}]", lo - 0.05, hi + 0.05)))
}

fn polygon_spectra() -> Outcome {
    let (sq_ok, sq) = polygon_spectrum("square")?;
    let (tr_ok, tr) = polygon_spectrum("triangle")?;
    Ok((sq_ok && tr_ok, format!("square: {sq}; triangle: {tr}")))
}

fn symmetry() -> Outcome {
    let mut parts = vec![];
    let mut ok = true;
    for name in ["square", "triangle", "trapezoid"] {
        let ev = gram_spectrum(&mesh(name, 512)?).map_err(e)?;
        let d = symmetry_report(&ev, 3, 0.02).d_sym;
        ok &= d <= 0.05;
        parts.push(format!("{name} {d:.3}"));
    }
    Ok((ok, format!("d_sym {}", parts.join(", "))))
}

fn ts_values(r: &TsResiduals) -> [f64; 3] {
    [r.square_relation, r.anticommutator, r.projection]
}

const TS_LIMITS: [f64; 3] = [3e-2, 3e-2, 5e-2];
const ROUNDOFF: f64 = 1e-12;

fn ts_algebra() -> Outcome {
    let mut ok = true;
    let mut parts = vec![];
    for (name, n) in [("disk", 256), ("square", 512)] {
        let coarse = ts_values(&ts_residuals_smooth(&mesh(name, n)?, 5));
        let fine = ts_values(&ts_residuals_smooth(&mesh(name, 2 * n)?, 5));
        for i in 0..3 {
            let improves = fine[i] <= ROUNDOFF || coarse[i] / fine[i] >= 1.5;
            ok &= coarse[i] <= TS_LIMITS[i] && improves;
        }
        parts.push(format!(
            "{name} {:.1e}/{:.1e}/{:.1e} -> {:.1e}/{:.1e}/{:.1e}",
            coarse[0], coarse[1], coarse[2], fine[0], fine[1], fine[2]
        ));
    }
    Ok((ok, format!("smooth densities, j ≤ 5: {}", parts.join("; "))))
}

fn ts_algebra_literal() -> Outcome {
    let mut ok = true;
    let mut parts = vec![];
    for (name, n) in [("disk", 256), ("square", 512)] {
        let r = ts_values(&ts_residuals_full(&mesh(name, n)?));
        ok &= (0..3).all(|i| r[i] <= TS_LIMITS[i]);
        parts.push(format!("{name} {:.3}/{:.3}/{:.3}", r[0], r[1], r[2]));
    }
    Ok((ok, format!("full matrix 2-norms: {}", parts.join("; "))))
}

fn volume_identities() -> Outcome {
    let t = Instant::now();
    let disk = Shape::named("disk").map_err(e)?;
    let a = identity_suite(&disk, 128, 0.1, 1).map_err(e)?;
    let b = identity_suite(&disk, 256, 0.1, 1).map_err(e)?;
    let gates = [
        ("B0²−B0", a.b0_projection, b.b0_projection, 5e-2),
        ("div A0", a.div_a0, b.div_a0, 2e-2),
        ("curl B0", a.curl_b0, b.curl_b0, 5e-2),
        ("A0∇φ", a.a0_gradient, b.a0_gradient, 2e-2),
    ];
    let mut ok = t.elapsed().as_secs_f64() < 120.0;
    let mut parts = vec![];
    for (name, coarse, fine, limit) in gates {
        // both at FFT roundoff counts as converged
        let improves = (coarse <= 1e-8 && fine <= 1e-8) || coarse / fine >= 1.5;
        ok &= coarse <= limit && improves;
        parts.push(format!("{name} {coarse:.1e}->{fine:.1e}"));
    }
    Ok((ok, parts.join(", ")))
}

fn near(ev: &[Complex64], targets: &[f64], tol: f64) -> f64 {
    ev.iter().filter(|z| targets.iter().any(|t| (**z - c(*t)).norm() <= tol)).count() as f64 / ev.len() as f64
}

fn volume_spectra() -> Outcome {
    let t = Instant::now();
    let grid = rasterize_with(&Shape::named("disk").map_err(e)?, 24, 0.1, RasterOptions { sharp: true, ..Default::default() })
        .map_err(e)?;
    let ops = VolumeOperators::new(&grid, Kernel::laplace()).map_err(e)?;
    let spectrum = |op| -> Result<Vec<Complex64>, String> { eigenvalues(&ops.assemble_dense(op, DEFAULT_CELL_CAP).map_err(e)?).map_err(e) };
    let a0 = near(&spectrum(DenseOp::A0)?, &[0.0, 0.5, 1.0], 0.08);
    let b0 = near(&spectrum(DenseOp::B0)?, &[0.0, 1.0], 0.1);
    let mixed = near(&spectrum(DenseOp::Mixed { eta: c(-3.0), nu: c(0.5) })?, &[-3.0, -1.5, 0.5], 0.1);
    let ok = a0 >= 0.85 && b0 >= 0.9 && mixed >= 0.85 && t.elapsed().as_secs_f64() < 600.0;
    Ok((ok, format!("A0 {:.1}%, B0 {:.1}%, −3A0+½B0 {:.1}%", 100.0 * a0, 100.0 * b0, 100.0 * mixed)))
}

fn fredholm_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sweep: Vec<Complex64> = (0..100).map(|i| c(-10.0 + 20.0 * i as f64 / 99.0)).collect();
    while sweep.len() < 200 {
        let z = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        if z.norm() <= 10.0 {
            sweep.push(z);
        }
    }
    let mut disagreements = 0;
    for name in ["disk", "ellipse", "square", "triangle", "trapezoid", "lshape"] {
        let shape = Shape::named(name).map_err(e)?;
        disagreements += sweep.iter().filter(|z| !fredholm_check(**z, c(1.0), &shape).agree).count();
    }

    let square = Shape::unit_square();
    let step = 0.1;
    let (a, b) = detect_critical_interval(&square, -10.0, 10.0, step).ok_or("no critical samples on the square")?;
    let grid: Vec<f64> = (0..=200).map(|i| ((-10.0 + i as f64 * step) * 1e9).round() / 1e9).collect();
    let misplaced = grid
        .iter()
        .filter(|x| {
            let inside = **x >= -3.0 && **x <= -1.0 / 3.0;
            inside != fredholm_check(c(**x), c(1.0), &square).electric.offending_sigma.is_some()
        })
        .count();
    let ends = (a + 3.0).abs() <= step && (b + 1.0 / 3.0).abs() <= step;
    let ok = disagreements == 0 && misplaced == 0 && ends;
    Ok((
        ok,
        format!(
            "{disagreements} disagreements over 6 shapes x {} points; square critical samples [{a}, {b}], {misplaced} off [−3, −1/3]",
            sweep.len()
        ),
    ))
}

fn scattering() -> Outcome {
    let t = Instant::now();
    let disk = Shape::named("disk").map_err(e)?;
    let medium = Medium::real(4.0, 1.0);
    let opts = SolverOptions::default();
    let at = |nx| compare_disk(&rasterize(&disk, nx, 0.1).map_err(e)?, 1.0, &medium, 1.0, [1.0, 0.0], &opts).map_err(e);
    let a = at(128)?;
    let b = at(256)?;
    let mut ok = a.converged && b.converged && t.elapsed().as_secs_f64() < 300.0;
    let mut parts = vec![];
    for (name, coarse, fine, limit) in [
        ("E", a.electric_error, b.electric_error, 2e-2),
        ("H3", a.magnetic_error, b.magnetic_error, 2e-2),
        ("cross", a.cross_error, b.cross_error, 3e-2),
    ] {
        ok &= coarse <= limit && coarse / fine >= 1.5;
        parts.push(format!("{name} {:.2}%->{:.2}%", 100.0 * coarse, 100.0 * fine));
    }
    Ok((ok, parts.join(", ")))
}

fn transmission_conditioning() -> Outcome {
    let cond = |eps: f64, n: usize| -> Result<f64, String> {
        let m = mesh("square", n)?;
        Ok(solve_transmission_bie(&m, c(eps), &vec![c(1.0); m.len()]).map_err(e)?.condition)
    };
    let (c2a, c2b) = (cond(-2.0, 128)?, cond(-2.0, 512)?);
    let (c4a, c4b) = (cond(-4.0, 128)?, cond(-4.0, 512)?);
    let (g2, g4) = (c2b / c2a, c4b / c4a);
    Ok((
        g2 >= 10.0 && g4 < 2.0,
        format!("eps −2: {c2a:.1} -> {c2b:.1} ({g2:.2}x, need ≥ 10); eps −4: {c4a:.2} -> {c4b:.2} ({g4:.2}x, need < 2)"),
    ))
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let lines = [
        run("1 special functions", special_functions),
        run("2 Gauss identity", gauss_identity),
        run("3 smooth boundary spectrum", smooth_spectrum),
        run("4 polygon spectrum", polygon_spectra),
        run("5 reflection symmetry", symmetry),
        run("6 TS algebra", ts_algebra),
        run("6 TS algebra, literal 2-norm", ts_algebra_literal),
        run("7 volume identities", volume_identities),
        run("8 volume spectra", volume_spectra),
        run("9 Fredholm consistency", fredholm_consistency),
        run("10 disk scattering", scattering),
        run("11 transmission conditioning", transmission_conditioning),
    ];
    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.label).collect();
    let total: f64 = lines.iter().map(|l| l.seconds).sum();
    println!("acceptance: {} of {} lines pass ({total:.0} s)", lines.len() - failed.len(), lines.len());
    if !failed.is_empty() {
        println!("failing: {}", failed.join("; "));
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}

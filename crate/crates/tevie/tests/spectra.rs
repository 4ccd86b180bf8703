use num_complex::Complex64;
use tevie::geometry::{boundary_mesh, Shape};
use tevie::spectra::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn sigma_from_corner_angles() {
    assert_eq!(predict_sigma(&Shape::named("disk").unwrap()).sigma, Sigma::Point { value: 0.5 });
    let cases = [("square", 0.25), ("triangle", 1.0 / 6.0), ("trapezoid", 1.0 / 6.0), ("lshape", 0.25)];
    for (name, lo) in cases {
        let (a, b) = predict_sigma(&Shape::named(name).unwrap()).sigma.bounds();
        assert!((a - lo).abs() < 1e-14, "{name}: {a}");
        assert_eq!(b, 1.0 - a);
        assert!(a < 0.5 && 0.5 < b);
    }
}

#[test]
fn essential_spectrum_predictions() {
    let disk = Shape::named("disk").unwrap();
    let a0 = predict_essential_spectrum(Target::A0, &disk);
    for z in [0.0, 0.5, 1.0] {
        assert!(a0.distance(c(z, 0.0)) < 1e-15);
    }
    assert!(a0.distance(c(0.25, 0.0)) > 0.2);

    // ε_r = 4, μ_r = 2
    let mixed = predict_essential_spectrum(Target::Mixed { eta: c(-3.0, 0.0), nu: c(0.5, 0.0) }, &disk);
    for z in [-3.0, -1.5, 0.5] {
        assert!(mixed.distance(c(z, 0.0)) < 1e-15);
    }
    assert!(!mixed.degenerate);
    let degenerate = predict_essential_spectrum(Target::Mixed { eta: c(0.0, 0.0), nu: c(1.0, 0.0) }, &disk);
    assert!(degenerate.degenerate);

    let square = Shape::unit_square();
    let b0 = predict_essential_spectrum(Target::B0, &square);
    assert_eq!(b0.points, vec![c(0.0, 0.0), c(1.0, 0.0)]);
    let sq = predict_essential_spectrum(Target::Mixed { eta: c(0.0, 2.0), nu: c(1.0, 0.0) }, &square);
    assert!(sq.distance(c(0.0, 1.0)) < 1e-15);
    assert!(sq.distance(c(0.0, 1.6)) > 0.09);

    // 0 ∈ {1 − ασ} exactly when α = 1/σ
    let g = predict_essential_spectrum(Target::G { alpha: c(3.0, 0.0) }, &square);
    assert!(g.distance(c(0.0, 0.0)) < 1e-15);
    let g = predict_essential_spectrum(Target::G { alpha: c(5.0, 0.0) }, &square);
    assert!(g.distance(c(0.0, 0.0)) > 0.2);
}

#[test]
fn fredholm_examples() {
    let disk = Shape::named("disk").unwrap();
    let r = fredholm_check(c(-1.0, 0.0), c(1.0, 0.0), &disk);
    assert!(!r.electric.fredholm && !r.magnetic.fredholm && r.agree);
    assert_eq!(r.electric.offending_sigma, Some(0.5));

    let square = Shape::unit_square();
    let r = fredholm_check(c(-2.0, 0.0), c(1.0, 0.0), &square);
    assert!(!r.electric.fredholm && !r.magnetic.fredholm);
    // σ = 1/3 electrically, 1 − 1/3 magnetically
    assert!((r.electric.offending_sigma.unwrap() - 1.0 / 3.0).abs() < 1e-14);
    assert!((r.magnetic.offending_sigma.unwrap() - 2.0 / 3.0).abs() < 1e-14);

    for eps in [c(-4.0, 0.0), c(0.5, 0.0), c(7.0, 0.0), c(-2.0, 0.1)] {
        let r = fredholm_check(eps, c(2.0, 0.0), &square);
        assert!(r.electric.fredholm && r.magnetic.fredholm, "{eps}");
    }
    let r = fredholm_check(c(0.0, 0.0), c(1.0, 0.0), &square);
    assert!(!r.electric.fredholm && r.agree);
    let r = fredholm_check(c(2.0, 0.0), c(0.0, 0.0), &square);
    assert!(!r.electric.fredholm && r.magnetic.fredholm && !r.agree);
}

#[test]
fn critical_interval_of_the_square() {
    let (a, b) = detect_critical_interval(&Shape::unit_square(), -10.0, 10.0, 0.1).unwrap();
    assert_eq!(a, -3.0);
    assert!((b - (-0.4)).abs() < 1e-12, "{b}");
    let (a, b) = detect_critical_interval(&Shape::named("disk").unwrap(), -10.0, 10.0, 0.1).unwrap();
    assert_eq!((a, b), (-1.0, -1.0));
}

#[test]
fn cloud_gap_and_accumulation() {
    let v = [0.0, 0.3, 0.32, 0.36, 0.4, 0.9];
    assert_eq!(cloud(&v, 0.05), vec![0.3, 0.32, 0.36, 0.4]);
    assert!((max_gap(&[0.3, 0.32, 0.36, 0.4], 0.3, 0.4) - 0.04).abs() < 1e-15);
    assert!((max_gap(&[0.35], 0.3, 0.4) - 0.05).abs() < 1e-15);
    assert!((max_gap(&[], 0.3, 0.4) - 0.1).abs() < 1e-15);
    let acc = accumulation_set(&[0.5, 0.5, 0.505, 0.495, 0.9], 3, 0.02);
    assert_eq!(acc.len(), 4);
    assert_eq!(hausdorff(&[0.0, 1.0], &[0.0]), 1.0);
    assert_eq!(symmetry_report(&[0.5, 0.5, 0.5, 0.5], 3, 0.02).d_sym, 0.0);
}

#[test]
fn generalized_eigenvalues_of_a_small_pencil() {
    let g = faer::Mat::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.5 });
    let ev = generalized_symmetric(&g, &g).unwrap();
    assert!(ev.iter().all(|x| (x - 1.0).abs() < 1e-13));
    let h = faer::Mat::from_fn(3, 3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
    let two = faer::Mat::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.0 });
    let ev = generalized_symmetric(&h, &two).unwrap();
    assert!((ev[0] - 0.5).abs() < 1e-14 && (ev[2] - 1.5).abs() < 1e-14);
}

#[test]
fn disk_gram_spectrum_clusters_at_one_half() {
    let mesh = boundary_mesh(&Shape::named("disk").unwrap(), 256, 1.0).unwrap();
    let ev = gram_spectrum(&mesh).unwrap();
    let outliers = ev.iter().filter(|x| (*x - 0.5).abs() > 0.05).count();
    assert!(outliers <= 4, "{outliers}");
    assert!(ev.iter().all(|x| *x >= -0.02 && *x <= 1.02));
    let s = symmetry_report(&ev, 3, 0.02);
    assert!(s.d_sym <= 0.02);
}

#[test]
fn polygon_gram_spectra_fill_sigma() {
    for name in ["square", "triangle"] {
        let shape = Shape::named(name).unwrap();
        let sigma = predict_sigma(&shape).sigma;
        let (lo, hi) = sigma.bounds();
        let mesh = boundary_mesh(&shape, 512, 3.0).unwrap();
        let ev = gram_spectrum(&mesh).unwrap();
        assert!(ev.iter().all(|x| *x >= -0.02 && *x <= 1.02), "{name}");
        let report = SpectrumReport::new(ev.iter().map(|x| c(*x, 0.0)).collect(), None, 0.05)
            .with_interval_metrics(&sigma, 3, 0.02);
        let (a, b) = report.cloud.unwrap();
        assert!(a >= lo - 0.05 && b <= hi + 0.05, "{name}: cloud [{a}, {b}]");
        assert!(report.fill.unwrap() <= 0.05, "{name}: gap {}", report.fill.unwrap());
        assert!(report.d_sym.unwrap() <= 0.05, "{name}: d_sym {}", report.d_sym.unwrap());
    }
}

#[test]
fn gram_spectrum_is_scale_invariant() {
    let shape = Shape::named("trapezoid").unwrap();
    let a = gram_spectrum(&boundary_mesh(&shape, 128, 3.0).unwrap()).unwrap();
    let b = gram_spectrum(&boundary_mesh(&shape.scaled(3.0).unwrap(), 128, 3.0).unwrap()).unwrap();
    let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(d < 1e-10, "{d}");
}

#[test]
fn report_serializes_eigenvalues_as_pairs() {
    let pred = predict_essential_spectrum(Target::B0, &Shape::unit_square());
    let r = SpectrumReport::new(vec![c(0.01, 0.0), c(0.5, 0.0), c(0.98, 1e-3)], Some(pred), 0.1);
    assert!((r.coverage.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(v["eigenvalues"][2][1], 1e-3);
    assert_eq!(v["prediction"]["points"][1], serde_json::json!([1.0, 0.0]));
}

use std::f64::consts::PI;

use num_complex::Complex64;
use tevie::specfun::{bessel_pair, hankel1, Kernel, EULER_GAMMA};

fn reference() -> Vec<[f64; 5]> {
    let text = include_str!("data/bessel_reference.csv");
    text.lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3], v[4]]
        })
        .collect()
}

#[test]
fn matches_high_precision_table() {
    let mut worst = 0.0_f64;
    for row in reference() {
        let (j0, y0) = bessel_pair(0, row[0]).unwrap();
        let (j1, y1) = bessel_pair(1, row[0]).unwrap();
        for (got, want) in [(j0, row[1]), (y0, row[2]), (j1, row[3]), (y1, row[4])] {
            worst = worst.max((got - want).abs());
        }
    }
    assert!(worst <= 1e-12, "max abs error {worst:e}");
}

#[test]
fn tabulated_values_at_one() {
    let (j0, y0) = bessel_pair(0, 1.0).unwrap();
    let (j1, _) = bessel_pair(1, 1.0).unwrap();
    assert!((j0 - 0.765197686557967).abs() < 1e-14);
    assert!((y0 - 0.088256964215677).abs() < 1e-14);
    assert!((j1 - 0.440050585744934).abs() < 1e-14);
}

#[test]
fn small_argument_limit() {
    let (j0, _) = bessel_pair(0, 1e-9).unwrap();
    assert!((j0 - 1.0).abs() < 1e-15);
}

#[test]
fn wronskian() {
    for i in 0..100 {
        let x = 0.1 + (50.0 - 0.1) * i as f64 / 99.0;
        let (j0, y0) = bessel_pair(0, x).unwrap();
        let (j1, y1) = bessel_pair(1, x).unwrap();
        let w = j0 * y1 - j1 * y0;
        let want = -2.0 / (PI * x);
        assert!(((w - want) / want).abs() <= 1e-10, "x = {x}");
    }
}

#[test]
fn domain_errors() {
    assert!(bessel_pair(0, 0.0).is_err());
    assert!(bessel_pair(1, -1.0).is_err());
    assert!(bessel_pair(2, 1.0).is_err());
    assert!(Kernel::laplace().value(0.0).is_err());
    assert!(Kernel::laplace().gradient([0.0, 0.0]).is_err());
    assert!(Kernel::helmholtz(Complex64::new(1.0, -0.1)).is_err());
}

#[test]
fn greens_values() {
    let g0 = Kernel::laplace();
    assert_eq!(g0.value(1.0).unwrap().norm(), 0.0);
    assert!((g0.value((-1.0_f64).exp()).unwrap().re - 1.0 / (2.0 * PI)).abs() < 1e-15);
    let g1 = Kernel::real(1.0).unwrap();
    let v = g1.value(1.0).unwrap();
    assert!((v - Complex64::new(-0.022064241053919, 0.191299421639492)).norm() < 1e-14);
}

#[test]
fn greens_gradients() {
    let g0 = Kernel::laplace();
    let d = g0.gradient([1.0, 0.0]).unwrap();
    assert!((d[0].re + 1.0 / (2.0 * PI)).abs() < 1e-15 && d[1].norm() == 0.0);
    let x = [0.3, -0.7];
    let a = g0.gradient(x).unwrap();
    let b = g0.gradient([2.5 * x[0], 2.5 * x[1]]).unwrap();
    assert!((a[0] / 2.5 - b[0]).norm() < 1e-15 && (a[1] / 2.5 - b[1]).norm() < 1e-15);

    let g1 = Kernel::real(1.0).unwrap();
    let h1 = Complex64::new(0.440050585744934, -0.781212821300289);
    let want = -Complex64::i() * 0.25 * h1;
    let got = g1.gradient([1.0, 0.0]).unwrap();
    assert!((got[0] - want).norm() < 1e-14 && got[1].norm() == 0.0);
}

#[test]
fn hankel_of_one() {
    let h = hankel1(1, Complex64::new(1.0, 0.0)).unwrap();
    assert!((h - Complex64::new(0.440050585744934, -0.781212821300289)).norm() < 1e-14);
}

#[test]
fn radial_helmholtz_residual() {
    let g = Kernel::real(1.0).unwrap();
    let (r, h) = (2.0, 1e-3);
    let f = |r: f64| g.value(r).unwrap();
    let d2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
    let d1 = (f(r + h) - f(r - h)) / (2.0 * h);
    let res = d2 + d1 / r + f(r);
    assert!(res.norm() <= 1e-6, "{res}");
}

#[test]
fn remainder_limit_and_continuity() {
    let g = Kernel::real(1.0).unwrap();
    let lim = g.remainder(0.0).unwrap();
    let want = Complex64::new(-((0.5_f64).ln() + EULER_GAMMA) / (2.0 * PI), 0.25);
    assert!((lim - want).norm() < 1e-15);
    assert!((lim.re - 0.018_451_073_777).abs() < 1e-11);
    assert!((g.remainder(1e-7).unwrap() - lim).norm() <= 1e-8);
    let direct = g.value(1e-6).unwrap() + (1e-6_f64).ln() / (2.0 * PI);
    assert!((g.remainder(1e-6).unwrap() - direct).norm() < 1e-9);

    let g2 = Kernel::real(2.0).unwrap();
    assert!((g2.remainder(1.0).unwrap() - g2.value(1.0).unwrap()).norm() < 1e-15);
}

#[test]
fn remainder_is_c1_at_origin() {
    let g = Kernel::real(1.0).unwrap();
    for &r in &[1e-3, 1e-4] {
        let h = r * 1e-2;
        let d = (g.remainder(r + h).unwrap() - g.remainder(r - h).unwrap()) / (2.0 * h);
        assert!(d.norm() < 1.0, "derivative {d} at r = {r}");
    }
    let grad = Kernel::laplace().gradient([1e-4, 0.0]).unwrap();
    assert!(grad[0].norm() > 1e3);
}

#[test]
fn complex_wavenumber_is_continuous_in_k() {
    let a = Kernel::helmholtz(Complex64::new(1.0, 1e-9)).unwrap().value(0.7).unwrap();
    let b = Kernel::real(1.0).unwrap().value(0.7).unwrap();
    assert!((a - b).norm() < 1e-8);
    let far = Kernel::helmholtz(Complex64::new(1.0, 0.2)).unwrap().value(30.0).unwrap();
    assert!(far.norm() < (-0.2 * 30.0_f64).exp());
}

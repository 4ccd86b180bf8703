use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tevie::geometry::*;
use tevie::identities::{identity_suite, Bump};
use tevie::specfun::Kernel;
use tevie::volume::*;

type C = Complex64;

fn c(v: f64) -> C {
    C::new(v, 0.0)
}

fn sharp_disk(nx: usize) -> PixelGrid {
    rasterize_with(&Shape::named("disk").unwrap(), nx, 0.1, RasterOptions { sharp: true, ..Default::default() }).unwrap()
}

fn random_vec(n: usize, seed: u64) -> Vec<C> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
}

fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn medium_contrasts() {
    let m = Medium::real(4.0, 2.0);
    assert_eq!(m.eta(), c(-3.0));
    assert_eq!(m.nu().unwrap(), c(0.5));
    assert_eq!(m.alpha().unwrap(), c(0.75));
    assert_eq!(m.beta(), c(1.0));
    assert!(Medium::real(0.0, 1.0).alpha().is_err());
    assert!(Medium::real(1.0, 0.0).nu().is_err());
}

#[test]
fn newton_potential_of_unit_disk_at_center() {
    let grid = rasterize(&Shape::named("disk").unwrap(), 256, 0.1).unwrap();
    let ops = VolumeOperators::new(&grid, Kernel::laplace()).unwrap();
    let one = ScalarField::from_fn(&grid, |_| c(1.0));
    let u = ops.newton(&one);
    let (i, j) = (grid.nx / 2, grid.ny / 2);
    let x = grid.cell_center(i, j);
    let exact = 0.25 * (1.0 - x[0] * x[0] - x[1] * x[1]);
    assert!((u.at(i, j).re - exact).abs() < 1e-3, "{} vs {exact}", u.at(i, j));
}

#[test]
fn newton_of_zero_is_zero() {
    let grid = sharp_disk(32);
    let ops = VolumeOperators::new(&grid, Kernel::real(1.0).unwrap()).unwrap();
    let u = ops.newton(&ScalarField::zeros(grid.nx, grid.ny));
    assert!(u.values.iter().all(|v| *v == c(0.0)));
}

#[test]
fn margin_is_enforced() {
    let grid = rasterize(&Shape::unit_square(), 16, 0.0).unwrap();
    assert!(VolumeOperators::new(&grid, Kernel::laplace()).is_ok());
    let mut tight = grid.clone();
    tight.indicator[grid.ny + 1] = 1.0;
    assert!(VolumeOperators::new(&tight, Kernel::laplace()).is_err());
}

#[test]
fn no_contrast_gives_zero_operators() {
    let grid = sharp_disk(32);
    let ops = VolumeOperators::new(&grid, Kernel::real(1.5).unwrap()).unwrap();
    let e = VectorField::from_fn(&grid, |x| [c(x[0].sin()), c(x[1] * x[0])]);
    let u = ScalarField::from_fn(&grid, |x| c(x[0].cos()));
    let vac = Medium::vacuum();
    assert_eq!(ops.apply_a(&vac, &e).norm(), 0.0);
    assert_eq!(ops.apply_b(&vac, &e).unwrap().norm(), 0.0);
    assert_eq!(ops.apply_c(&vac, &u).unwrap().norm(), 0.0);
    assert_eq!(ops.apply_d(&vac, &u).norm(), 0.0);
}

#[test]
fn static_d_vanishes() {
    let grid = sharp_disk(32);
    let ops = VolumeOperators::new(&grid, Kernel::laplace()).unwrap();
    let u = ScalarField::from_fn(&grid, |_| c(1.0));
    assert_eq!(ops.apply_d(&Medium::real(1.0, 3.0), &u).norm(), 0.0);
}

#[test]
fn operators_are_linear_in_contrast_and_field() {
    let grid = sharp_disk(32);
    let ops = VolumeOperators::new(&grid, Kernel::real(1.0).unwrap()).unwrap();
    let e = VectorField::from_fn(&grid, |x| [c(x[1].sin()), C::new(x[0], 1.0)]);
    let a1 = ops.apply_a(&Medium::real(0.5, 1.0), &e);
    let mut a2 = ops.apply_a(&Medium::real(2.0, 1.0), &e);
    a2.scale(c(-0.5));
    assert!(max_diff(&a1.ex, &a2.ex) < 1e-12 && max_diff(&a1.ey, &a2.ey) < 1e-12);

    let u = ScalarField::from_fn(&grid, |x| C::new(x[0] * x[1], x[0]));
    let cx: Vec<C> = grid.edge_x.iter().map(|v| C::new(0.3 * v, 0.1)).collect();
    let cy: Vec<C> = grid.edge_y.iter().map(|v| C::new(0.3 * v, 0.1)).collect();
    let c1 = ops.apply_c_with(&cx, &cy, &u);
    let cx2: Vec<C> = cx.iter().map(|v| 2.0 * v).collect();
    let cy2: Vec<C> = cy.iter().map(|v| 2.0 * v).collect();
    let c2 = ops.apply_c_with(&cx2, &cy2, &u);
    let doubled: Vec<C> = c1.values.iter().map(|v| 2.0 * v).collect();
    assert!(max_diff(&doubled, &c2.values) < 1e-12);

    let mut sum = e.clone();
    let other = VectorField::from_fn(&grid, |x| [c(x[0]), c(-x[1])]);
    sum.axpy(C::new(0.0, 2.0), &other);
    let lhs = ops.apply_b(&Medium::real(1.0, 3.0), &sum).unwrap();
    let mut rhs = ops.apply_b(&Medium::real(1.0, 3.0), &e).unwrap();
    rhs.axpy(C::new(0.0, 2.0), &ops.apply_b(&Medium::real(1.0, 3.0), &other).unwrap());
    assert!(max_diff(&lhs.ex, &rhs.ex) < 1e-10 && max_diff(&lhs.ey, &rhs.ey) < 1e-10);
}

#[test]
fn discrete_gradients_are_annihilated_by_b0_and_fixed_by_a0() {
    let grid = sharp_disk(64);
    let ops = VolumeOperators::new(&grid, Kernel::laplace()).unwrap();
    let bump = Bump { center: [0.1, 0.0], width: 0.2 };
    let mut phi = vec![c(0.0); (grid.nx + 1) * (grid.ny + 1)];
    for i in 0..=grid.nx {
        for j in 0..=grid.ny {
            phi[i * (grid.ny + 1) + j] = c(bump.value(grid.node(i, j)));
        }
    }
    let g = gradient(&phi, grid.nx, grid.ny, grid.h);
    let b = ops.apply_b_scaled(c(1.0), &g);
    assert!(b.norm() < 1e-10 * g.norm());
    let a = ops.apply_a(&Medium::real(0.0, 1.0), &g);
    let mut d = a.clone();
    d.axpy(c(-1.0), &g);
    assert!(d.norm() < 1e-7 * g.norm(), "{}", d.norm() / g.norm());
}

#[test]
fn c0_of_constant_vanishes_and_c0_reproduces_interior_bumps() {
    let grid = sharp_disk(64);
    let ops = VolumeOperators::new(&grid, Kernel::laplace()).unwrap();
    let alpha = c(0.6);
    let cx: Vec<C> = grid.edge_x.iter().map(|v| alpha * v).collect();
    let cy: Vec<C> = grid.edge_y.iter().map(|v| alpha * v).collect();
    let one = ScalarField::from_fn(&grid, |x| if x[0].hypot(x[1]) < 1.0 { c(1.0) } else { c(0.0) });
    let mut ones = one.clone();
    for (v, d) in ones.values.iter_mut().zip(ops.dilated_cells()) {
        *v = if *d { c(1.0) } else { c(0.0) };
    }
    let out = ops.apply_c_with(&cx, &cy, &ones);
    let interior: Vec<usize> = (0..grid.n_cells()).filter(|&t| grid.indicator[t] >= 1.0).collect();
    let worst = interior.iter().map(|&t| out.values[t].norm()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");

    let bump = Bump { center: [0.0, 0.1], width: 0.2 };
    let psi = ScalarField::from_fn(&grid, |x| c(bump.value(x)));
    let out = ops.apply_c_with(&cx, &cy, &psi);
    let err = interior.iter().map(|&t| (out.values[t] - alpha * psi.values[t]).norm()).fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn d_is_smoothing() {
    // discrete H¹ seminorm of D(noise) relative to ‖noise‖ stays bounded under refinement
    let ratio = |nx: usize| {
        let grid = sharp_disk(nx);
        let ops = VolumeOperators::new(&grid, Kernel::real(1.0).unwrap()).unwrap();
        let noise = random_vec(grid.n_cells(), 3);
        let u = ScalarField { nx: grid.nx, ny: grid.ny, values: noise };
        let d = ops.apply_d(&Medium::real(1.0, 3.0), &u);
        let g = curl_vector(&d, grid.h);
        (g.norm() * grid.h) / (u.norm() * grid.h)
    };
    let (r32, r64, r128) = (ratio(32), ratio(64), ratio(128));
    assert!(r64 < 2.0 * r32 && r128 < 2.0 * r64, "{r32} {r64} {r128}");
    assert!(r128 < 1.0);
}

#[test]
fn dense_matches_matrix_free() {
    let grid = sharp_disk(16);
    let ops = VolumeOperators::new(&grid, Kernel::laplace()).unwrap();
    for op in [DenseOp::A0, DenseOp::B0, DenseOp::Mixed { eta: c(-3.0), nu: c(0.5) }, DenseOp::C0] {
        let m = ops.assemble_dense(op, DEFAULT_CELL_CAP).unwrap();
        for s in 0..10 {
            let x = random_vec(m.ncols(), s);
            let y = ops.apply_packed(op, &x).unwrap();
            let dense: Vec<C> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect();
            assert!(max_diff(&y, &dense) < 1e-12, "{op:?}");
        }
    }
}

#[test]
fn dense_assembly_respects_cap_and_kernel() {
    let grid = sharp_disk(16);
    let ops = VolumeOperators::new(&grid, Kernel::laplace()).unwrap();
    assert!(matches!(ops.assemble_dense(DenseOp::A0, 100), Err(tevie::Error::SizeCap { .. })));
    let dyn_ops = VolumeOperators::new(&grid, Kernel::real(1.0).unwrap()).unwrap();
    assert!(dyn_ops.assemble_dense(DenseOp::A0, DEFAULT_CELL_CAP).is_err());
}

fn near(ev: &[C], targets: &[f64], tol: f64) -> f64 {
    ev.iter().filter(|z| targets.iter().any(|t| (**z - c(*t)).norm() <= tol)).count() as f64 / ev.len() as f64
}

#[test]
fn static_spectra_on_small_disk() {
    let grid = sharp_disk(24);
    let ops = VolumeOperators::new(&grid, Kernel::laplace()).unwrap();
    let a = ops.assemble_dense(DenseOp::A0, DEFAULT_CELL_CAP).unwrap().eigenvalues().unwrap();
    assert!(a.iter().all(|z| z.im.abs() <= 5e-3));
    assert!(near(&a, &[0.0, 0.5, 1.0], 0.08) >= 0.85);
    let b = ops.assemble_dense(DenseOp::B0, DEFAULT_CELL_CAP).unwrap().eigenvalues().unwrap();
    assert!(near(&b, &[0.0, 1.0], 0.1) >= 0.9);
}

#[test]
fn identities_converge_at_second_order() {
    let disk = Shape::named("disk").unwrap();
    let coarse = identity_suite(&disk, 64, 0.1, 1).unwrap();
    let fine = identity_suite(&disk, 128, 0.1, 1).unwrap();
    assert!(fine.b0_projection < 1e-8);
    for (a, b) in [(coarse.div_a0, fine.div_a0), (coarse.curl_b0, fine.curl_b0), (coarse.a0_gradient, fine.a0_gradient)] {
        assert!(b < 2e-2 && a / b > 3.0, "{a} -> {b}");
    }
}

#[test]
fn curl_of_gradient_and_div_of_curl_vector_vanish() {
    let grid = sharp_disk(20);
    let phi: Vec<C> = (0..(grid.nx + 1) * (grid.ny + 1)).map(|t| c((t as f64 * 0.7).sin())).collect();
    let g = gradient(&phi, grid.nx, grid.ny, grid.h);
    assert!(curl(&g, grid.h).norm() < 1e-10);
    let u = ScalarField { nx: grid.nx, ny: grid.ny, values: random_vec(grid.n_cells(), 9) };
    let d = divergence(&curl_vector(&u, grid.h), grid.h);
    assert!(d.iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-10);
}

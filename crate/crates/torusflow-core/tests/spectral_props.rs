//! Property tests for the spectral calculus on random band-limited fields,
//! with an independent finite-difference oracle for the derivative
//! conventions.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torusflow_core::grid1d::{LineField, LineLattice};
use torusflow_core::{ScalarField, TorusLattice};

/// Random trigonometric polynomial with modes |kx|, |ky| <= kmax, sampled
/// exactly on the lattice.
fn random_band_limited(lat: TorusLattice, seed: u64, kmax: i32) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wx, wy) = (
        std::f64::consts::TAU / lat.lx(),
        std::f64::consts::TAU / lat.ly(),
    );
    let mut modes = Vec::new();
    for kx in -kmax..=kmax {
        for ky in -kmax..=kmax {
            let coeff = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            modes.push((kx as f64 * wx, ky as f64 * wy, coeff));
        }
    }
    ScalarField::from_fn(lat, move |x, y| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (kx, ky, a) in &modes {
            acc += a * Complex64::new(0.0, kx * x + ky * y).exp();
        }
        acc
    })
}

/// Eighth-order central finite difference in x, an oracle independent of the
/// Fourier transform.
fn fd_deriv(f: &ScalarField, axis_x: bool) -> ScalarField {
    let lat = f.lattice();
    let (nx, ny) = (lat.nx(), lat.ny());
    let h = if axis_x { lat.hx() } else { lat.hy() };
    let stencil: [(i64, f64); 8] = [
        (1, 4.0 / 5.0),
        (-1, -4.0 / 5.0),
        (2, -1.0 / 5.0),
        (-2, 1.0 / 5.0),
        (3, 4.0 / 105.0),
        (-3, -4.0 / 105.0),
        (4, -1.0 / 280.0),
        (-4, 1.0 / 280.0),
    ];
    let vals = f.values();
    let mut out = vec![Complex64::new(0.0, 0.0); vals.len()];
    let wrap = |i: i64, n: usize| -> usize { i.rem_euclid(n as i64) as usize };
    for iy in 0..ny {
        for ix in 0..nx {
            let mut acc = Complex64::new(0.0, 0.0);
            for (off, w) in stencil {
                let idx = if axis_x {
                    iy * nx + wrap(ix as i64 + off, nx)
                } else {
                    wrap(iy as i64 + off, ny) * nx + ix
                };
                acc += vals[idx] * w;
            }
            out[iy * nx + ix] = acc / h;
        }
    }
    ScalarField::from_values(lat, out).unwrap()
}

fn scale_of(f: &ScalarField) -> f64 {
    f.sup_norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mixed_derivatives_commute(seed in 0u64..1_000_000) {
        let lat = TorusLattice::square(32).unwrap();
        let f = random_band_limited(lat, seed, 5);
        let a = f.deriv_z().deriv_zbar();
        let b = f.deriv_zbar().deriv_z();
        prop_assert!(a.sub(&b).sup_norm() < 1e-12 * scale_of(&a));
    }

    #[test]
    fn dz_inverts_solve_dz(seed in 0u64..1_000_000) {
        let lat = TorusLattice::square(32).unwrap();
        let g0 = random_band_limited(lat, seed, 5);
        let mean = g0.mean();
        let g = g0.map(|v| v - mean);
        let u = g.solve_dz(1e-10).unwrap();
        prop_assert!(u.mean().norm() < 1e-13);
        let res = u.deriv_z().sub(&g).sup_norm();
        prop_assert!(res < 1e-12 * scale_of(&g), "residual {res}");
    }

    #[test]
    fn total_derivatives_integrate_to_zero(seed in 0u64..1_000_000) {
        let lat = TorusLattice::new(32, 64, 3.0, 5.0).unwrap();
        let f = random_band_limited(lat, seed, 4);
        let int = f.deriv_x().integrate().norm().max(f.deriv_z().integrate().norm());
        prop_assert!(int < 1e-12 * scale_of(&f));
    }

    #[test]
    fn factored_laplacian_matches(seed in 0u64..1_000_000) {
        let lat = TorusLattice::square(32).unwrap();
        let f = random_band_limited(lat, seed, 5);
        let composed = f.deriv_z().deriv_zbar().scale(Complex64::new(4.0, 0.0));
        let gap = composed.sub(&f.laplacian()).sup_norm();
        prop_assert!(gap < 1e-10 * scale_of(&f.laplacian()), "gap {gap}");
    }

    #[test]
    fn finite_differences_confirm_the_convention(seed in 0u64..1_000_000) {
        // low modes on a fine grid: the 8th-order stencil resolves them to
        // ~(k h)^8, far below the assertion threshold
        let lat = TorusLattice::square(64).unwrap();
        let f = random_band_limited(lat, seed, 3);
        for axis_x in [true, false] {
            let spectral = if axis_x { f.deriv_x() } else { f.deriv_y() };
            let fd = fd_deriv(&f, axis_x);
            let gap = spectral.sub(&fd).sup_norm();
            prop_assert!(gap < 1e-6 * scale_of(&spectral), "axis_x {axis_x}: gap {gap}");
        }
        // d/dz = (d/dx - i d/dy) / 2 ties the complex convention to the oracle
        let half = Complex64::new(0.5, 0.0);
        let dz_fd = fd_deriv(&f, true)
            .sub(&fd_deriv(&f, false).scale(Complex64::new(0.0, 1.0)))
            .scale(half);
        let gap = f.deriv_z().sub(&dz_fd).sup_norm();
        prop_assert!(gap < 1e-6 * scale_of(&f), "dz gap {gap}");
    }

    #[test]
    fn dealias_is_a_projection(seed in 0u64..1_000_000) {
        let lat = TorusLattice::square(32).unwrap();
        let low = random_band_limited(lat, seed, 5);
        prop_assert!(low.dealias().sub(&low).sup_norm() < 1e-12 * scale_of(&low));
        let top = ScalarField::from_fn(lat, |x, _| Complex64::new(0.0, 16.0 * x).exp());
        prop_assert!(top.dealias().sup_norm() < 1e-12);
        let mixed = low.add(&top);
        let once = mixed.dealias();
        prop_assert!(once.dealias().sub(&once).sup_norm() < 1e-12 * scale_of(&once));
    }

    #[test]
    fn one_dimensional_derivative_matches_differences(seed in 0u64..1_000_000) {
        let lat = LineLattice::new(128, std::f64::consts::TAU).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for k in -4i32..=4 {
            modes.push((k as f64, Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)));
        }
        let f = LineField::from_fn(lat, move |s| {
            modes
                .iter()
                .map(|(k, a)| a * Complex64::new(0.0, k * s).exp())
                .sum()
        });
        let h = lat.l() / lat.n() as f64;
        let vals: Vec<Complex64> = f.values().to_vec();
        let n = vals.len() as i64;
        let stencil: [(i64, f64); 8] = [
            (1, 4.0 / 5.0),
            (-1, -4.0 / 5.0),
            (2, -1.0 / 5.0),
            (-2, 1.0 / 5.0),
            (3, 4.0 / 105.0),
            (-3, -4.0 / 105.0),
            (4, -1.0 / 280.0),
            (-4, 1.0 / 280.0),
        ];
        let fd: Vec<Complex64> = (0..n)
            .map(|i| {
                stencil
                    .iter()
                    .map(|(off, w)| vals[(i + off).rem_euclid(n) as usize] * *w)
                    .sum::<Complex64>()
                    / h
            })
            .collect();
        let fd = LineField::from_values(lat, fd).unwrap();
        let gap = f.deriv().sub(&fd).sup_norm();
        prop_assert!(gap < 1e-6 * f.deriv().sup_norm().max(1.0), "gap {gap}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let lat = TorusLattice::square(32).unwrap();
    let f = random_band_limited(lat, 7, 5);
    let multi = f.deriv_z().mul(&f).dealias();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| f.deriv_z().mul(&f).dealias());
    let gap = multi.sub(&single).sup_norm();
    assert!(
        gap < 1e-13 * multi.sup_norm().max(1.0),
        "thread-dependent result: {gap}"
    );
}

//! Reference surfaces sampled on torus lattices, each with its 2-jet in
//! closed form so frame construction stays pointwise-algebraic even where
//! spectral differentiation of the log conformal factor would be unusable
//! (the branched sphere map has log singularities between samples).

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::elliptic::{elliptic_k, sncndn};
use crate::error::Result;
use crate::grid::{ScalarField, TorusLattice, VectorField};
use crate::invariants::{ConformalTorusImmersion, ImmersionJet};

/// The flat minimal torus in S^3, (cos x, sin x, cos y, sin y) / sqrt 2.
pub fn clifford_point(x: f64, y: f64, out: &mut [Complex64]) {
    let s = 0.5f64.sqrt();
    out[0] = Complex64::new(s * x.cos(), 0.0);
    out[1] = Complex64::new(s * x.sin(), 0.0);
    out[2] = Complex64::new(s * y.cos(), 0.0);
    out[3] = Complex64::new(s * y.sin(), 0.0);
}

/// Clifford torus on the given lattice, embedded in S^3 (`ambient` = 3) or
/// equatorially in S^4 (`ambient` = 4). Periods must be 2 pi for the map to
/// close up.
pub fn clifford(lat: TorusLattice, ambient: usize) -> Result<ConformalTorusImmersion> {
    let dim = ambient + 1;
    let pad = dim - 4;
    let f = VectorField::from_fn(lat, dim, |x, y, out| {
        clifford_point(x, y, out);
        for k in 0..pad {
            out[4 + k] = Complex64::new(0.0, 0.0);
        }
    });
    let s = 0.5f64.sqrt();
    let zero = Complex64::new(0.0, 0.0);
    let f_z = VectorField::from_fn(lat, dim, |x, y, out| {
        // (f_x - i f_y) / 2
        out[0] = Complex64::new(-s * x.sin() / 2.0, 0.0);
        out[1] = Complex64::new(s * x.cos() / 2.0, 0.0);
        out[2] = Complex64::new(0.0, s * y.sin() / 2.0);
        out[3] = Complex64::new(0.0, -s * y.cos() / 2.0);
        for k in 0..pad {
            out[4 + k] = zero;
        }
    });
    let f_zz = VectorField::from_fn(lat, dim, |x, y, out| {
        // (f_xx - f_yy) / 4, mixed term vanishing
        out[0] = Complex64::new(-s * x.cos() / 4.0, 0.0);
        out[1] = Complex64::new(-s * x.sin() / 4.0, 0.0);
        out[2] = Complex64::new(s * y.cos() / 4.0, 0.0);
        out[3] = Complex64::new(s * y.sin() / 4.0, 0.0);
        for k in 0..pad {
            out[4 + k] = zero;
        }
    });
    let f_zzbar = VectorField::from_fn(lat, dim, |x, y, out| {
        // (f_xx + f_yy) / 4 = -f / 4
        let mut p = [zero; 4];
        clifford_point(x, y, &mut p);
        for k in 0..4 {
            out[k] = -p[k] / 4.0;
        }
        for k in 0..pad {
            out[4 + k] = zero;
        }
    });
    let zeros = ScalarField::zeros(lat);
    let jet = ImmersionJet {
        f_z,
        f_zz,
        f_zzbar,
        u_z: zeros.clone(),
        u_zz: zeros.clone(),
        u_zzbar: zeros,
    };
    ConformalTorusImmersion::new(f, ambient, Some(jet))
}

/// Conformally sampled round sphere: f is stereographic of g(z) =
/// sn(z + delta; m), a doubly periodic degree-2 branched cover of the
/// Riemann sphere. Its Hopf differential vanishes identically; the
/// Schwarzian has double poles at the four branch points, which sit between
/// lattice samples thanks to the irrational offset delta.
pub fn umbilic_sphere_map(n: usize, m: f64) -> Result<ConformalTorusImmersion> {
    let k = elliptic_k(m);
    let kp = elliptic_k(1.0 - m);
    let lat = TorusLattice::new(n, n, 4.0 * k, 2.0 * kp)?;
    let delta = Complex64::new(4.0 * k / (2.0 * 2.0f64.sqrt()), 2.0 * kp / (2.0 * 3.0f64.sqrt()));
    let dim = 4;
    let zero = Complex64::new(0.0, 0.0);
    // pointwise data: g, g', g'', g'''
    let jet_at = |x: f64, y: f64| -> (Complex64, Complex64, Complex64, Complex64) {
        let w = Complex64::new(x, y) + delta;
        let (s, c, d) = sncndn(w, m);
        let g = s;
        let g1 = c * d;
        let g2 = 2.0 * m * s * s * s - (1.0 + m) * s;
        let g3 = (6.0 * m * s * s - (1.0 + m)) * g1;
        (g, g1, g2, g3)
    };
    // stereographic image and its g-derivatives
    let stereo = |g: Complex64| -> ([Complex64; 3], [Complex64; 3], [Complex64; 3], [Complex64; 3]) {
        let gb = g.conj();
        let dd = 1.0 + g * gb;
        let a = [g + gb, Complex64::new(0.0, -1.0) * (g - gb), g * gb - 1.0];
        let a_g = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0), gb];
        let a_gb = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), g];
        let mut nf = [zero; 3];
        let mut n_g = [zero; 3];
        let mut n_gg = [zero; 3];
        let mut n_ggb = [zero; 3];
        for i in 0..3 {
            nf[i] = a[i] / dd;
            n_g[i] = a_g[i] / dd - a[i] * gb / (dd * dd);
            n_gg[i] = -2.0 * gb * a_g[i] / (dd * dd) + 2.0 * gb * gb * a[i] / (dd * dd * dd);
            let e3 = if i == 2 { Complex64::new(1.0, 0.0) } else { zero };
            n_ggb[i] = e3 / dd - a_g[i] * g / (dd * dd) - a_gb[i] * gb / (dd * dd)
                - a[i] / (dd * dd)
                + 2.0 * a[i] * g * gb / (dd * dd * dd);
        }
        (nf, n_g, n_gg, n_ggb)
    };
    let f = VectorField::from_fn(lat, dim, |x, y, out| {
        let (g, _, _, _) = jet_at(x, y);
        let (nf, _, _, _) = stereo(g);
        for i in 0..3 {
            out[i] = Complex64::new(nf[i].re, 0.0);
        }
        out[3] = zero;
    });
    let f_z = VectorField::from_fn(lat, dim, |x, y, out| {
        let (g, g1, _, _) = jet_at(x, y);
        let (_, n_g, _, _) = stereo(g);
        for i in 0..3 {
            out[i] = n_g[i] * g1;
        }
        out[3] = zero;
    });
    let f_zz = VectorField::from_fn(lat, dim, |x, y, out| {
        let (g, g1, g2, _) = jet_at(x, y);
        let (_, n_g, n_gg, _) = stereo(g);
        for i in 0..3 {
            out[i] = n_gg[i] * g1 * g1 + n_g[i] * g2;
        }
        out[3] = zero;
    });
    let f_zzbar = VectorField::from_fn(lat, dim, |x, y, out| {
        let (g, g1, _, _) = jet_at(x, y);
        let (_, _, _, n_ggb) = stereo(g);
        let gg = g1 * g1.conj();
        for i in 0..3 {
            out[i] = n_ggb[i] * gg;
        }
        out[3] = zero;
    });
    // u = log 2 + Re log g' - log(1 + g conj g)
    let u_z = ScalarField::from_fn(lat, |x, y| {
        let (g, g1, g2, _) = jet_at(x, y);
        let dd = 1.0 + g * g.conj();
        0.5 * g2 / g1 - g.conj() * g1 / dd
    });
    let u_zz = ScalarField::from_fn(lat, |x, y| {
        let (g, g1, g2, g3) = jet_at(x, y);
        let gb = g.conj();
        let dd = 1.0 + g * gb;
        let r = g2 / g1;
        0.5 * (g3 / g1 - r * r) - gb * g2 / dd + gb * gb * g1 * g1 / (dd * dd)
    });
    let u_zzbar = ScalarField::from_fn(lat, |x, y| {
        let (g, g1, _, _) = jet_at(x, y);
        let dd = 1.0 + g * g.conj();
        -(g1 * g1.conj()) / (dd * dd)
    });
    let jet = ImmersionJet {
        f_z,
        f_zz,
        f_zzbar,
        u_z,
        u_zz,
        u_zzbar,
    };
    ConformalTorusImmersion::new(f, 3, Some(jet))
}

/// Clifford torus reparametrized so that e^u kappa = 1: sampled over the
/// pi-periodic coordinate in which the conformal factor is e^{2u} = 2 and
/// the Hopf density has unit flat norm. The workhorse for mean-curvature
/// sphere congruence tests.
pub fn cmc_gauge(n: usize) -> Result<ConformalTorusImmersion> {
    let lat = TorusLattice::new(n, n, std::f64::consts::PI, std::f64::consts::PI)?;
    let s = 0.5f64.sqrt();
    let f = VectorField::from_fn(lat, 4, |x, y, out| {
        out[0] = Complex64::new(s * (2.0 * y).cos(), 0.0);
        out[1] = Complex64::new(s * (2.0 * y).sin(), 0.0);
        out[2] = Complex64::new(s * (2.0 * x).cos(), 0.0);
        out[3] = Complex64::new(-s * (2.0 * x).sin(), 0.0);
    });
    let f_z = VectorField::from_fn(lat, 4, |x, y, out| {
        // f_x = (0, 0, -2 sin 2x, -2 cos 2x) s; f_y = (-2 sin 2y, 2 cos 2y, 0, 0) s
        out[0] = Complex64::new(0.0, s * (2.0 * y).sin());
        out[1] = Complex64::new(0.0, -s * (2.0 * y).cos());
        out[2] = Complex64::new(-s * (2.0 * x).sin(), 0.0);
        out[3] = Complex64::new(-s * (2.0 * x).cos(), 0.0);
    });
    let f_zz = VectorField::from_fn(lat, 4, |x, y, out| {
        // (f_xx - f_yy) / 4
        out[0] = Complex64::new(s * (2.0 * y).cos(), 0.0);
        out[1] = Complex64::new(s * (2.0 * y).sin(), 0.0);
        out[2] = Complex64::new(-s * (2.0 * x).cos(), 0.0);
        out[3] = Complex64::new(s * (2.0 * x).sin(), 0.0);
    });
    let f_zzbar = VectorField::from_fn(lat, 4, |x, y, out| {
        // (f_xx + f_yy) / 4 = -f
        out[0] = Complex64::new(-s * (2.0 * y).cos(), 0.0);
        out[1] = Complex64::new(-s * (2.0 * y).sin(), 0.0);
        out[2] = Complex64::new(-s * (2.0 * x).cos(), 0.0);
        out[3] = Complex64::new(s * (2.0 * x).sin(), 0.0);
    });
    let zeros = ScalarField::zeros(lat);
    let jet = ImmersionJet {
        f_z,
        f_zz,
        f_zzbar,
        u_z: zeros.clone(),
        u_zz: zeros.clone(),
        u_zzbar: zeros,
    };
    ConformalTorusImmersion::new(f, 3, Some(jet))
}

/// Rectangular flat torus (a cos(mu x), a sin(mu x), b cos(nu y), b sin(nu y))
/// in S^3 with a = cos(theta), b = sin(theta), in the same normalization as
/// [`cmc_gauge`]: the conformal factor is the constant m = 2 sqrt(ab), the
/// frequencies mu = m/a, nu = m/b, and the periods 2 pi / mu by 2 pi / nu, so
/// that e^u |kappa| = 1 exactly. The surface has constant mean curvature of
/// magnitude |cot 2 theta| in S^3, nonzero away from theta = pi/4.
pub fn cmc_gauge_rect(n: usize, theta: f64) -> Result<ConformalTorusImmersion> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(crate::error::Error::Config(format!(
            "rectangular torus angle must lie in (0, pi/2), got {theta}"
        )));
    }
    let a = theta.cos();
    let b = theta.sin();
    let m = 2.0 * (a * b).sqrt();
    let mu = m / a;
    let nu = m / b;
    let lat = TorusLattice::new(n, n, TAU / mu, TAU / nu)?;
    let f = VectorField::from_fn(lat, 4, |x, y, out| {
        out[0] = Complex64::new(a * (mu * x).cos(), 0.0);
        out[1] = Complex64::new(a * (mu * x).sin(), 0.0);
        out[2] = Complex64::new(b * (nu * y).cos(), 0.0);
        out[3] = Complex64::new(b * (nu * y).sin(), 0.0);
    });
    let f_z = VectorField::from_fn(lat, 4, |x, y, out| {
        // (f_x - i f_y) / 2
        out[0] = Complex64::new(-0.5 * a * mu * (mu * x).sin(), 0.0);
        out[1] = Complex64::new(0.5 * a * mu * (mu * x).cos(), 0.0);
        out[2] = Complex64::new(0.0, 0.5 * b * nu * (nu * y).sin());
        out[3] = Complex64::new(0.0, -0.5 * b * nu * (nu * y).cos());
    });
    let f_zz = VectorField::from_fn(lat, 4, |x, y, out| {
        // (f_xx - f_yy) / 4; the mixed derivative vanishes
        out[0] = Complex64::new(-0.25 * a * mu * mu * (mu * x).cos(), 0.0);
        out[1] = Complex64::new(-0.25 * a * mu * mu * (mu * x).sin(), 0.0);
        out[2] = Complex64::new(0.25 * b * nu * nu * (nu * y).cos(), 0.0);
        out[3] = Complex64::new(0.25 * b * nu * nu * (nu * y).sin(), 0.0);
    });
    let f_zzbar = VectorField::from_fn(lat, 4, |x, y, out| {
        // (f_xx + f_yy) / 4
        out[0] = Complex64::new(-0.25 * a * mu * mu * (mu * x).cos(), 0.0);
        out[1] = Complex64::new(-0.25 * a * mu * mu * (mu * x).sin(), 0.0);
        out[2] = Complex64::new(-0.25 * b * nu * nu * (nu * y).cos(), 0.0);
        out[3] = Complex64::new(-0.25 * b * nu * nu * (nu * y).sin(), 0.0);
    });
    let zeros = ScalarField::zeros(lat);
    let jet = ImmersionJet {
        f_z,
        f_zz,
        f_zzbar,
        u_z: zeros.clone(),
        u_zz: zeros.clone(),
        u_zzbar: zeros,
    };
    ConformalTorusImmersion::new(f, 3, Some(jet))
}

/// A sphere-valued but non-conformal parametrization, used to exercise the
/// conformality check's failure path.
pub fn anisotropic_example(lat: TorusLattice) -> Result<ConformalTorusImmersion> {
    let s = 0.5f64.sqrt();
    let f = VectorField::from_fn(lat, 4, |x, y, out| {
        out[0] = Complex64::new(s * x.cos(), 0.0);
        out[1] = Complex64::new(s * x.sin(), 0.0);
        out[2] = Complex64::new(s * (2.0 * y).cos(), 0.0);
        out[3] = Complex64::new(s * (2.0 * y).sin(), 0.0);
    });
    ConformalTorusImmersion::new(f, 3, None)
}

/// Default lattice for 2 pi periodic corpus surfaces.
pub fn square_2pi(n: usize) -> Result<TorusLattice> {
    TorusLattice::new(n, n, TAU, TAU)
}

/// Number of deformation steps used by the perturbed-torus generator.
const PERTURB_STEPS: usize = 24;
/// Step size of the generator; total flow time is PERTURB_STEPS times this.
const PERTURB_DT: f64 = 2.5e-3;
/// Conformality budget during generation; the evolved surface carries a
/// marginally resolved analytic profile, so the extraction floor sits above
/// the exact-trig corpus floor.
const PERTURB_CONFORMALITY_TOL: f64 = 1e-6;

/// Deterministic non-trivial conformal torus in S^3: the Clifford torus
/// pushed a short time along a custom normal flow with the x-only profile
/// amplitude * exp(1.5 cos(x - 0.9)). A real profile depending only on x
/// keeps the evolved surface exactly isothermic (kappa stays real), and the
/// profile's Fourier tail decays super-geometrically, giving the corpus its
/// one family with a tunable spectral truncation error (resolved at 32x32,
/// visibly truncated at 16x16).
pub fn perturbed_clifford(lat: TorusLattice, amplitude: f64) -> Result<ConformalTorusImmersion> {
    use crate::flows::{flow_step, FlowKind, FlowMode, FlowSpec, FlowState};
    let profile = ScalarField::from_fn(lat, |x, _| {
        Complex64::new(amplitude * (1.5 * (x - 0.9).cos()).exp(), 0.0)
    });
    let mut spec = FlowSpec::new(
        FlowKind::CustomSigma(vec![profile]),
        PERTURB_DT,
        PERTURB_STEPS,
        FlowMode::EvolveLift,
    );
    spec.conformality_tol = PERTURB_CONFORMALITY_TOL;
    let mut state = FlowState::new(clifford(lat, 3)?, 0.0)?;
    for _ in 0..PERTURB_STEPS {
        state = flow_step(&state, &spec)?;
    }
    Ok(state.immersion)
}

/// Every `factor`-th sample of an immersion on a coarser lattice with the
/// same periods. The coarse immersion gets no closed-form jet: derivative
/// quality at the reduced band limit is exactly what coarse-grid residual
/// measurements are after.
pub fn subsample(imm: &ConformalTorusImmersion, factor: usize) -> Result<ConformalTorusImmersion> {
    let lat = imm.f.lattice();
    assert!(
        factor > 0 && lat.nx() % factor == 0 && lat.ny() % factor == 0,
        "subsample factor must divide the grid"
    );
    let coarse = TorusLattice::new(lat.nx() / factor, lat.ny() / factor, lat.lx(), lat.ly())?;
    let dim = imm.f.dim();
    let mut f = VectorField::zeros(coarse, dim);
    for iy in 0..coarse.ny() {
        for ix in 0..coarse.nx() {
            let src = imm.f.point(ix * factor, iy * factor);
            let dst = f.point_mut(ix, iy);
            dst.copy_from_slice(src);
        }
    }
    ConformalTorusImmersion::new(f, imm.n(), None)
}

//! Classical Schwarzian derivative of maps into CP^1 along a periodic line,
//! normalized lifts and Hill's equation, the Miura transform, and the KdV
//! hierarchy flows of the Schwarzian.
//!
//! Line derivatives are spectral; maps supplied with a closed-form jet are
//! differentiated algebraically instead, which also admits non-periodic maps
//! such as Mobius functions of the coordinate itself.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid1d::{LineField, LineLattice};

/// Relative floor on |f'| below which a map stops being an immersion.
pub const CRITICAL_TOL: f64 = 1e-10;
/// Allowed defect of det(psi, psi_z) = 1 for a normalized lift.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Largest admissible jump of arg(-1/f') between neighboring samples before
/// branch tracking of the lift's square root is declared unresolvable.
pub const BRANCH_JUMP_MAX: f64 = std::f64::consts::FRAC_PI_2;
/// Sup-norm bound beyond which a KdV evolution is reported as blown up.
pub const BLOWUP_BOUND: f64 = 1e8;

/// Samples of a map f from a periodic line to CP^1 (affine chart) together
/// with its first three derivatives. `closed_form` records whether the
/// derivatives were supplied analytically; spectral fallbacks require the
/// sampled derivative fields to be periodic.
#[derive(Clone, Debug)]
pub struct MapSamples1D {
    lattice: LineLattice,
    pub f: LineField,
    pub f1: LineField,
    pub f2: LineField,
    pub f3: LineField,
    closed_form: bool,
}

impl MapSamples1D {
    /// Build from a closed-form jet z -> (f, f', f'', f''').
    pub fn from_jet<F>(lattice: LineLattice, jet: F) -> Self
    where
        F: Fn(f64) -> (Complex64, Complex64, Complex64, Complex64),
    {
        let n = lattice.n();
        let mut f = Vec::with_capacity(n);
        let mut f1 = Vec::with_capacity(n);
        let mut f2 = Vec::with_capacity(n);
        let mut f3 = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b, c, d) = jet(lattice.x(j));
            f.push(a);
            f1.push(b);
            f2.push(c);
            f3.push(d);
        }
        Self {
            lattice,
            f: LineField::from_values(lattice, f).expect("jet has lattice size"),
            f1: LineField::from_values(lattice, f1).expect("jet has lattice size"),
            f2: LineField::from_values(lattice, f2).expect("jet has lattice size"),
            f3: LineField::from_values(lattice, f3).expect("jet has lattice size"),
            closed_form: true,
        }
    }

    /// Build from samples of a periodic f, differentiating spectrally.
    pub fn from_samples(f: LineField) -> Self {
        let f1 = f.deriv();
        let f2 = f1.deriv();
        let f3 = f2.deriv();
        Self {
            lattice: f.lattice(),
            f,
            f1,
            f2,
            f3,
            closed_form: false,
        }
    }

    /// Assemble from explicit fields; `closed_form` marks the third
    /// derivative as trustworthy for algebraic differentiation.
    pub fn from_fields(
        f: LineField,
        f1: LineField,
        f2: LineField,
        f3: LineField,
        closed_form: bool,
    ) -> Self {
        let lattice = f.lattice();
        Self {
            lattice,
            f,
            f1,
            f2,
            f3,
            closed_form,
        }
    }

    pub fn lattice(&self) -> LineLattice {
        self.lattice
    }

    pub fn is_closed_form(&self) -> bool {
        self.closed_form
    }

    fn check_immersion(&self) -> Result<()> {
        let floor = CRITICAL_TOL * self.f1.sup_norm().max(1.0);
        let min = self.f1.min_abs();
        if min < floor {
            return Err(Error::CriticalPoint {
                min_abs: min,
                tol: floor,
            });
        }
        Ok(())
    }
}

/// Normalized lift of a map to CP^1: psi spans the line over each point,
/// scaled so det(psi, psi_z) = 1. The second derivative is carried along so
/// Hill's equation can be evaluated without re-differentiating samples that
/// may be anti-periodic.
#[derive(Clone, Debug)]
pub struct Lift2 {
    pub psi: [LineField; 2],
    pub psi_z: [LineField; 2],
    pub psi_zz: [LineField; 2],
}

impl Lift2 {
    /// det(psi, psi_z) pointwise.
    pub fn det(&self) -> LineField {
        det2(&self.psi, &self.psi_z)
    }

    /// Rescale the lift by a constant; det scales by the square.
    pub fn scale(&self, lambda: Complex64) -> Lift2 {
        Lift2 {
            psi: [self.psi[0].scale(lambda), self.psi[1].scale(lambda)],
            psi_z: [self.psi_z[0].scale(lambda), self.psi_z[1].scale(lambda)],
            psi_zz: [self.psi_zz[0].scale(lambda), self.psi_zz[1].scale(lambda)],
        }
    }
}

fn det2(a: &[LineField; 2], b: &[LineField; 2]) -> LineField {
    a[0].mul(&b[1]).sub(&a[1].mul(&b[0]))
}

/// Schwarzian derivative S(f) = (f''/f')' - (f''/f')^2 / 2.
///
/// With a closed-form jet the outer derivative is evaluated through the
/// identity S(f) = f'''/f' - (3/2)(f''/f')^2; otherwise spectrally.
pub fn schwarzian(m: &MapSamples1D) -> Result<LineField> {
    m.check_immersion()?;
    let w = m.f2.div(&m.f1);
    if m.closed_form {
        let a = m.f3.div(&m.f1);
        Ok(a.zip(&w, |a, w| a - 1.5 * w * w))
    } else {
        Ok(w.deriv().zip(&w, |dw, w| dw - 0.5 * w * w))
    }
}

/// Normalized lift psi = (f, 1) * lambda with lambda^2 = -1/f', the branch of
/// lambda continued from the principal root at the first sample.
pub fn normalized_lift_cp1(m: &MapSamples1D) -> Result<Lift2> {
    m.check_immersion()?;
    let n = m.lattice.n();
    let mu: Vec<Complex64> = m.f1.values().iter().map(|&v| -1.0 / v).collect();
    let mut lambda = Vec::with_capacity(n);
    let mut theta = mu[0].arg();
    lambda.push(Complex64::from_polar(mu[0].norm().sqrt(), 0.5 * theta));
    for j in 1..n {
        let jump = (mu[j] / mu[j - 1]).arg();
        if jump.abs() > BRANCH_JUMP_MAX {
            return Err(Error::BranchDiscontinuity { index: j, jump });
        }
        theta += jump;
        lambda.push(Complex64::from_polar(mu[j].norm().sqrt(), 0.5 * theta));
    }
    let lam = LineField::from_values(m.lattice, lambda).expect("lambda has lattice size");

    // log-derivative of lambda and its derivative, both algebraic in the jet
    let rho = m.f2.zip(&m.f1, |f2, f1| -f2 / (2.0 * f1));
    let rho_z = m.f2.zip(&m.f1, |f2, f1| f2 * f2 / (2.0 * f1 * f1)).zip(
        &m.f3.div(&m.f1),
        |a, b| a - 0.5 * b,
    );

    let psi0 = lam.mul(&m.f);
    let psi1 = lam.clone();
    let dpsi0 = lam.mul(&rho.mul(&m.f).add(&m.f1));
    let dpsi1 = lam.mul(&rho);
    let s = rho.zip(&rho_z, |r, rz| r * r + rz);
    let ddpsi0 = lam.mul(&s.mul(&m.f).add(&rho.mul(&m.f1).scale(2.0.into())).add(&m.f2));
    let ddpsi1 = lam.mul(&s);
    Ok(Lift2 {
        psi: [psi0, psi1],
        psi_z: [dpsi0, dpsi1],
        psi_zz: [ddpsi0, ddpsi1],
    })
}

/// Hill coefficient c with psi_zz + (c/2) psi = 0: c = -2 det(psi_zz, psi_z).
pub fn hill_coefficient(l: &Lift2) -> Result<LineField> {
    let defect = l.det().zip(&LineField::constant(l.psi[0].lattice(), 1.0.into()), |d, one| d - one);
    let max_defect = defect.sup_norm();
    if max_defect > NORMALIZATION_TOL {
        return Err(Error::NotNormalized {
            max_defect,
            tol: NORMALIZATION_TOL,
        });
    }
    Ok(det2(&l.psi_zz, &l.psi_z).scale(Complex64::new(-2.0, 0.0)))
}

/// Express a Schwarzian in the coordinate w: S_w(f) = (S_z(f) - S_z(w)) / w'^2,
/// sampled at the original z-grid points.
pub fn schwarzian_coordinate_change(s_z_f: &LineField, w: &MapSamples1D) -> Result<LineField> {
    let s_w = schwarzian(w)?;
    Ok(s_z_f.sub(&s_w).zip(&w.f1, |s, w1| s / (w1 * w1)))
}

/// Jet of the inverse map z(w) evaluated at the original z-samples.
pub fn inverse_jet(w: &MapSamples1D) -> Result<MapSamples1D> {
    w.check_immersion()?;
    let lat = w.lattice();
    let z = LineField::from_fn(lat, |x| Complex64::new(x, 0.0));
    let g1 = w.f1.map(|w1| 1.0 / w1);
    let g2 = w.f2.zip(&w.f1, |w2, w1| -w2 / (w1 * w1 * w1));
    let g3 = w
        .f2
        .zip(&w.f1, |w2, w1| 3.0 * w2 * w2 / w1.powu(5))
        .zip(&w.f3.zip(&w.f1, |w3, w1| w3 / w1.powu(4)), |a, b| a - b);
    Ok(MapSamples1D::from_fields(z, g1, g2, g3, w.closed_form))
}

/// Post-compose a map with a Mobius transformation given as a 2x2 complex
/// matrix [[a, b], [c, d]]; derivatives follow by the chain rule.
pub fn mobius_compose(m: &MapSamples1D, g: &[[Complex64; 2]; 2]) -> Result<MapSamples1D> {
    let [[a, b], [c, d]] = *g;
    let den = m.f.map(|f| c * f + d);
    let min = den.min_abs();
    if min < 1e-9 {
        return Err(Error::PointAtInfinity {
            pairing: min,
            tol: 1e-9,
        });
    }
    let det = a * d - b * c;
    let h = m.f.zip(&den, |f, q| (a * f + b) / q);
    let g1 = den.map(|q| det / (q * q));
    let g2 = den.map(|q| -2.0 * c * det / (q * q * q));
    let g3 = den.map(|q| 6.0 * c * c * det / (q * q * q * q));
    let h1 = g1.mul(&m.f1);
    let h2 = g2.mul(&m.f1).mul(&m.f1).add(&g1.mul(&m.f2));
    let h3 = g3
        .mul(&m.f1)
        .mul(&m.f1)
        .mul(&m.f1)
        .add(&g2.mul(&m.f1).mul(&m.f2).scale(3.0.into()))
        .add(&g1.mul(&m.f3));
    Ok(MapSamples1D::from_fields(h, h1, h2, h3, m.closed_form))
}

/// Seeded pseudo-random Mobius matrix normalized to determinant 1.
pub fn random_mobius(seed: u64) -> [[Complex64; 2]; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut e = || Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
        let (a, b, c, d) = (e(), e(), e(), e());
        let det = a * d - b * c;
        if det.norm() < 0.1 {
            continue;
        }
        let s = det.sqrt();
        return [[a / s, b / s], [c / s, d / s]];
    }
}

/// Miura transform of a real log-scale v: returns v'' - (v')^2 / 2, which for
/// v = log|f'| of a holomorphic immersion with real log-derivative on the
/// line equals the Schwarzian of f.
pub fn miura(v: &LineField) -> Result<LineField> {
    let max_imag = v.max_imag_abs();
    if max_imag > 1e-10 {
        return Err(Error::NonRealInput {
            max_imag,
            tol: 1e-10,
        });
    }
    let p = v.deriv();
    Ok(p.deriv().zip(&p, |pz, p| pz - 0.5 * p * p))
}

/// Schwarzian evolution c_t = b''' + 2 b' c + b c', dealiased.
pub fn kdv_rhs(c: &LineField, b: &LineField) -> LineField {
    let cd = c.dealias();
    let bd = b.dealias();
    bd.deriv_n(3)
        .add(&bd.deriv().mul(&cd).scale(2.0.into()))
        .add(&bd.mul(&cd.deriv()))
        .dealias()
}

/// Flow coefficient b of the hierarchy: b1 = 1, b3 = c, b5 = c'' + (3/2) c^2.
/// Integration constants beyond order 1 are zero.
pub fn kdv_hierarchy_b(c: &LineField, order: usize) -> Result<LineField> {
    let cd = c.dealias();
    match order {
        1 => Ok(LineField::constant(c.lattice(), 1.0.into())),
        3 => Ok(cd),
        5 => Ok(cd.deriv_n(2).add(&cd.mul(&cd).dealias().scale(1.5.into()))),
        _ => Err(Error::UnsupportedOrder { order }),
    }
}

/// State of a Schwarzian under a hierarchy flow.
#[derive(Clone, Debug)]
pub struct KdVState {
    pub c: LineField,
    pub t: f64,
}

impl KdVState {
    pub fn new(c: LineField) -> Self {
        Self { c, t: 0.0 }
    }
}

/// (integral of c, integral of c^2), the flow's conserved quantities, as real
/// parts (imaginary parts are reported by the caller's reality checks).
pub fn conserved_quantities(c: &LineField) -> (f64, f64) {
    (c.integrate().re, c.mul(c).integrate().re)
}

/// One integrating-factor RK4 step of c_t = rhs(order). The stiff leading
/// derivative is advanced by its exact Fourier exponential; the remainder is
/// treated explicitly.
pub fn kdv_step(state: &KdVState, dt: f64, order: usize) -> Result<KdVState> {
    if !(order == 1 || order == 3 || order == 5) {
        return Err(Error::UnsupportedOrder { order });
    }
    let lat = state.c.lattice();
    let n = lat.n();
    // symbol of the leading linear term (ik)^order, Nyquist zeroed
    let sym: Vec<Complex64> = (0..n)
        .map(|j| {
            if j == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, lat.k(j)).powu(order as u32)
            }
        })
        .collect();
    let exp_at = |tau: f64| -> Vec<Complex64> { sym.iter().map(|l| (l * tau).exp()).collect() };
    let e_half = exp_at(0.5 * dt);
    let e_half_inv = exp_at(-0.5 * dt);
    let e_full = exp_at(dt);
    let e_full_inv = exp_at(-dt);

    let nonlinear_hat = |c_hat: &[Complex64]| -> Result<Vec<Complex64>> {
        let c = LineField::from_spectrum(lat, c_hat.to_vec());
        let b = kdv_hierarchy_b(&c, order)?;
        let rhs = kdv_rhs(&c, &b);
        let rhs_hat = rhs.spectrum();
        Ok((0..n).map(|j| rhs_hat[j] - sym[j] * c_hat[j]).collect())
    };
    let shift = |w: &[Complex64], k: &[Complex64], h: f64| -> Vec<Complex64> {
        (0..n).map(|j| w[j] + h * k[j]).collect()
    };
    let mul = |e: &[Complex64], v: &[Complex64]| -> Vec<Complex64> {
        (0..n).map(|j| e[j] * v[j]).collect()
    };

    let w = state.c.spectrum();
    let k1 = nonlinear_hat(&w)?;
    let k2 = mul(&e_half_inv, &nonlinear_hat(&mul(&e_half, &shift(&w, &k1, 0.5 * dt)))?);
    let k3 = mul(&e_half_inv, &nonlinear_hat(&mul(&e_half, &shift(&w, &k2, 0.5 * dt)))?);
    let k4 = mul(&e_full_inv, &nonlinear_hat(&mul(&e_full, &shift(&w, &k3, dt)))?);
    let w_new: Vec<Complex64> = (0..n)
        .map(|j| w[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
        .collect();
    let c_new = LineField::from_spectrum(lat, mul(&e_full, &w_new)).dealias();
    let sup = c_new.sup_norm();
    let t = state.t + dt;
    if !sup.is_finite() || sup > BLOWUP_BOUND {
        return Err(Error::BlowUp {
            sup,
            bound: BLOWUP_BOUND,
            t,
        });
    }
    Ok(KdVState { c: c_new, t })
}

/// Sup-norm of c_{t_{2n-1}} + sum_k lambda_k c_{t_{2k-1}}; zero means c is
/// stationary for a linear combination of the first n hierarchy flows.
pub fn finite_type_residual(c: &LineField, n: usize, lambda: &[f64]) -> Result<f64> {
    if n == 0 || n > 3 {
        return Err(Error::UnsupportedOrder { order: 2 * n - 1 });
    }
    assert_eq!(lambda.len(), n - 1, "need n-1 lower-flow multipliers");
    let flow = |order: usize| -> Result<LineField> {
        Ok(kdv_rhs(c, &kdv_hierarchy_b(c, order)?))
    };
    let mut r = flow(2 * n - 1)?;
    for (k, &l) in lambda.iter().enumerate() {
        r = r.add(&flow(2 * (k + 1) - 1)?.scale(l.into()));
    }
    Ok(r.sup_norm())
}

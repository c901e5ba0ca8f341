//! Characterization residuals and constructions for distinguished surface
//! classes: cyclides of Dupin, isothermic surfaces with their T-transforms
//! and Calapso's equation, Willmore and constrained-Willmore residuals with
//! the associated-family symmetry, constant mean curvature surfaces in space
//! forms together with the Lawson correspondence and the C \ {0} action, the
//! constant-length helix Hopf fields, and the spatial elastica reduction.
//!
//! Everything here acts on invariant-level data (c, kappa) in a parallel
//! normal gauge: covariant normal derivatives are plain derivatives. That is
//! exact for surfaces in S^3, where the weightless normal line is flat, and
//! for the flat-normal-bundle corpus in S^4 (real kappa forces a flat normal
//! bundle). Extracted invariants with a nonvanishing connection form need
//! the frame-level derivatives from the invariants module instead.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusLattice};
use crate::grid1d::LineField;
use crate::invariants::{CentralSphereFrame, SurfaceInvariants};
use crate::lightcone::{inner, pair};

/// Hopf-reality bound below which data counts as isothermic; matches the
/// gate used by the closed-form isothermic flows so both accept the same
/// inputs.
pub const ISOTHERMIC_TOL: f64 = 1e-6;
/// Bound on the constant-mean-curvature relation kappa_zbzb + (cbar/2) kappa
/// = H kappa. The closed-form corpus sits near 1e-12; extracted 32x32 data
/// near 1e-10.
pub const CMC_TOL: f64 = 1e-6;
/// Gate for entering the constrained-Willmore associated family.
pub const CONSTRAINED_WILLMORE_TOL: f64 = 1e-6;
/// Allowed drift of the Lawson invariant K_r + H_r^2, which is algebraically
/// exact at the invariant level; anything larger means the transformed data
/// lost the constant-mean-curvature relation.
pub const LAWSON_TOL: f64 = 1e-9;
/// Constancy bound for the assembled space-form section.
pub const CONSTANCY_TOL: f64 = 1e-8;
/// The associated-family parameter must sit on the unit circle to this
/// accuracy.
const UNIT_TOL: f64 = 1e-12;
/// Reality bound for the Calapso input field.
const REAL_INPUT_TOL: f64 = 1e-9;
/// kappa magnitude below which the Calapso quotient kappa_xy / kappa is
/// numerically meaningless.
const KAPPA_MIN_TOL: f64 = 1e-8;
/// Closure gap allowed for the helix frequency sqrt(2c) Lx / 2 pi.
const PERIOD_GAP_TOL: f64 = 1e-9;
/// Relative bound for the helix vector constraints (orthogonal, equal
/// length), which callers supply in closed form.
const HELIX_VECTOR_TOL: f64 = 1e-12;

/// Residuals of the homogeneity (holomorphic-Schwarzian) test. A surface in
/// S^3 not contained in a 2-sphere with holomorphic Schwarzian is a cyclide
/// of Dupin.
#[derive(Clone, Copy, Debug)]
pub struct DupinReport {
    /// sup |c_zbar|: zero exactly when the Schwarzian is holomorphic.
    pub c_antiholomorphic: f64,
    /// sup |(kappa kbar^3)_z| per normal component: the Gauss-equation
    /// consequence of c_zbar = 0, whose vanishing supplies the flat cyclide
    /// coordinate.
    pub hopf_quartic: f64,
}

/// Homogeneity residuals of the data; both vanish on a cyclide of Dupin.
pub fn dupin_residual(inv: &SurfaceInvariants) -> DupinReport {
    let c_antiholomorphic = inv.c.deriv_zbar().sup_norm();
    let mut hopf_quartic = 0.0f64;
    for k in &inv.kappa {
        let kb = k.conj();
        let quartic = k.mul(&kb).mul(&kb).mul(&kb);
        hopf_quartic = hopf_quartic.max(quartic.deriv_z().sup_norm());
    }
    DupinReport {
        c_antiholomorphic,
        hopf_quartic,
    }
}

/// sup |Im kappa| over all normal components, in the given coordinate. Zero
/// exactly when the coordinate is a curvature-line (isothermic) coordinate;
/// no coordinate search is performed.
pub fn isothermic_residual(inv: &SurfaceInvariants) -> f64 {
    let mut worst = 0.0f64;
    for k in &inv.kappa {
        worst = worst.max(k.max_imag_abs());
    }
    worst
}

/// Spectral deformation c -> c + r of isothermic data, kappa unchanged: the
/// T-transform. Gauss and Codazzi residuals are preserved because c_zbar is
/// unchanged and Im(r kappa) = 0 for real kappa.
pub fn t_transform(inv: &SurfaceInvariants, r: f64) -> Result<SurfaceInvariants> {
    let max_imag = isothermic_residual(inv);
    if max_imag > ISOTHERMIC_TOL {
        return Err(Error::NotIsothermic {
            max_imag,
            tol: ISOTHERMIC_TOL,
        });
    }
    Ok(SurfaceInvariants {
        c: inv.c.map(|v| v + r),
        kappa: inv.kappa.clone(),
        q: inv.q.clone(),
        chi: inv.chi.clone(),
        projection_leak: inv.projection_leak,
    })
}

/// Residual of Calapso's equation Lap(kappa_xy / kappa) + 8 (kappa^2)_xy = 0
/// for a real nonvanishing scalar Hopf field; follows from the isothermic
/// Gauss and Codazzi equations after eliminating c.
pub fn calapso_residual(kappa: &ScalarField) -> Result<f64> {
    let max_imag = kappa.max_imag_abs();
    if max_imag > REAL_INPUT_TOL {
        return Err(Error::NonRealInput {
            max_imag,
            tol: REAL_INPUT_TOL,
        });
    }
    let min_abs = kappa
        .values()
        .iter()
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min);
    if min_abs < KAPPA_MIN_TOL {
        return Err(Error::KappaVanishes {
            min_abs,
            tol: KAPPA_MIN_TOL,
        });
    }
    let k = kappa.re_part();
    let ratio = k.deriv_xy().div(&k);
    let residual = ratio
        .laplacian()
        .add(&k.mul(&k).deriv_xy().scale(Complex64::new(8.0, 0.0)));
    Ok(residual.sup_norm())
}

/// The Willmore defect D_zbar D_zbar kappa + (cbar/2) kappa split into its
/// parts: the real part is the Willmore Euler-Lagrange residual, the
/// imaginary part is the Codazzi residual.
#[derive(Clone, Copy, Debug)]
pub struct WillmoreReport {
    /// sup of the full complex expression.
    pub total: f64,
    /// sup |Re(...)|: the variational defect proper.
    pub willmore: f64,
    /// sup |Im(...)|: the Codazzi residual.
    pub codazzi: f64,
}

fn willmore_defect_fields(inv: &SurfaceInvariants) -> Vec<ScalarField> {
    let half_cbar = inv.c.conj().scale(Complex64::new(0.5, 0.0));
    inv.kappa
        .iter()
        .map(|k| k.deriv_zbar().deriv_zbar().add(&half_cbar.mul(k)))
        .collect()
}

/// Willmore residual of the data: a surface is Willmore exactly when the
/// real part vanishes.
pub fn willmore_residual(inv: &SurfaceInvariants) -> WillmoreReport {
    let mut report = WillmoreReport {
        total: 0.0,
        willmore: 0.0,
        codazzi: 0.0,
    };
    for d in willmore_defect_fields(inv) {
        report.total = report.total.max(d.sup_norm());
        report.willmore = report.willmore.max(d.re_part().sup_norm());
        report.codazzi = report.codazzi.max(d.im_part().sup_norm());
    }
    report
}

/// Residual of the constrained-Willmore equation
/// D_zbar D_zbar kappa + (cbar/2) kappa = Re(qbar kappa) for a constant
/// holomorphic quadratic differential coefficient q.
pub fn constrained_willmore_residual(inv: &SurfaceInvariants, q: Complex64) -> f64 {
    let mut worst = 0.0f64;
    for (d, k) in willmore_defect_fields(inv).iter().zip(inv.kappa.iter()) {
        let forcing = k.map(|v| {
            let w = q.conj() * v;
            Complex64::new(w.re, 0.0)
        });
        worst = worst.max(d.sub(&forcing).sup_norm());
    }
    worst
}

/// Associated family of constrained-Willmore data: kappa -> lambda kappa,
/// c -> c + (lambda^2 - 1) q, q -> lambda^2 q for unit lambda. Returns the
/// transformed invariants and quadratic-differential coefficient.
pub fn willmore_associated_family(
    inv: &SurfaceInvariants,
    q: Complex64,
    lambda: Complex64,
) -> Result<(SurfaceInvariants, Complex64)> {
    let abs = lambda.norm();
    if (abs - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit { abs });
    }
    let residual = constrained_willmore_residual(inv, q);
    if residual > CONSTRAINED_WILLMORE_TOL {
        return Err(Error::NotConstrainedWillmore {
            residual,
            tol: CONSTRAINED_WILLMORE_TOL,
        });
    }
    let l2 = lambda * lambda;
    let shift = (l2 - Complex64::new(1.0, 0.0)) * q;
    let out = SurfaceInvariants {
        c: inv.c.map(|v| v + shift),
        kappa: inv.kappa.iter().map(|k| k.scale(lambda)).collect(),
        // -<kbar, k> is invariant under the phase rotation
        q: inv.q.clone(),
        chi: inv.chi.iter().map(|x| x.scale(lambda)).collect(),
        projection_leak: inv.projection_leak,
    };
    Ok((out, l2 * q))
}

/// A space form cut out of the light cone together with the surface's
/// constant mean curvature in it.
#[derive(Clone, Debug)]
pub struct SpaceFormData {
    /// The constant Minkowski section, when assembled from a frame.
    /// Invariant-level transforms (Lawson steps) do not rebuild the section
    /// of the deformed surface, only its curvature data.
    pub v0: Option<Vec<f64>>,
    /// Mean curvature of the surface in the space form.
    pub h: f64,
    /// Sectional curvature K = -<v0, v0> of the space form.
    pub k: f64,
}

/// Diagnostics from assembling the space-form section pointwise.
#[derive(Clone, Debug)]
pub struct CmcReport {
    pub data: SpaceFormData,
    /// sup |(v0)_z|: constancy defect of the assembled section.
    pub constancy: f64,
    /// sup-norm gap between -<v0,v0> pointwise and the curvature formula
    /// -H^2 + 4 kappa^4 + 4 kappa kappa_zzbar - 4 |kappa_z|^2.
    pub curvature_gap: f64,
    /// sup |<psi, v0> + kappa|: the induced space-form metric is
    /// |dz|^2 / <psi,v0>^2 = kappa^{-2} |dz|^2.
    pub metric_defect: f64,
    /// sup |H + <v0, N>|: recovery of the mean curvature from the section.
    pub h_recovery: f64,
}

/// The single real Hopf component of S^3 data, gating dimension and reality.
fn scalar_real_kappa(inv: &SurfaceInvariants) -> Result<&ScalarField> {
    if inv.kappa.len() != 1 {
        return Err(Error::NotImplementedDim {
            n: inv.kappa.len() + 2,
        });
    }
    let max_imag = isothermic_residual(inv);
    if max_imag > ISOTHERMIC_TOL {
        return Err(Error::NotIsothermic {
            max_imag,
            tol: ISOTHERMIC_TOL,
        });
    }
    Ok(&inv.kappa[0])
}

/// sup-norm of kappa_zbzb + (cbar/2) kappa - H kappa, the constant-mean-
/// curvature relation for real kappa.
fn cmc_relation_residual(c: &ScalarField, kappa: &ScalarField, h: f64) -> f64 {
    kappa
        .deriv_zbar()
        .deriv_zbar()
        .add(&c.conj().scale(Complex64::new(0.5, 0.0)).mul(kappa))
        .sub(&kappa.scale(Complex64::new(h, 0.0)))
        .sup_norm()
}

/// Space-form curvature K = -H^2 + 4 kappa^4 + 4 kappa kappa_zzbar
/// - 4 |kappa_z|^2 of data satisfying the constant-mean-curvature relation.
pub fn space_form_curvature(inv: &SurfaceInvariants, h: f64) -> Result<f64> {
    let kappa = scalar_real_kappa(inv)?;
    let residual = cmc_relation_residual(&inv.c, kappa, h);
    if residual > CMC_TOL {
        return Err(Error::NotCmc {
            residual,
            tol: CMC_TOL,
        });
    }
    Ok(curvature_formula(kappa, h).mean().re)
}

fn curvature_formula(kappa: &ScalarField, h: f64) -> ScalarField {
    let k_z = kappa.deriv_z();
    let k_zzbar = k_z.deriv_zbar();
    let four = Complex64::new(4.0, 0.0);
    kappa
        .mul(kappa)
        .mul(kappa)
        .mul(kappa)
        .scale(four)
        .add(&kappa.mul(&k_zzbar).scale(four))
        .sub(&k_z.mul(&k_z.conj()).scale(four))
        .map(|v| v - h * h)
}

/// Assemble the constant section v0 = a psi + b psi_z + bbar psi_zbar
/// + ahat psihat - H N with ahat = kappa, b = -2 kappa_zbar,
/// a = 2 (kappa^3 + kappa_zzbar), valid for real kappa with constant mean
/// curvature H (the coordinate gauge e^u kappa = const). Returns the space
/// form it cuts out plus pointwise consistency diagnostics.
pub fn cmc_vector(
    frame: &CentralSphereFrame,
    inv: &SurfaceInvariants,
    h: f64,
) -> Result<CmcReport> {
    let kappa = scalar_real_kappa(inv)?;
    let residual = cmc_relation_residual(&inv.c, kappa, h);
    if residual > CMC_TOL {
        return Err(Error::NotCmc {
            residual,
            tol: CMC_TOL,
        });
    }
    let k_zbar = kappa.deriv_zbar();
    let k_zzbar = kappa.deriv_z().deriv_zbar();
    let a = kappa
        .mul(kappa)
        .mul(kappa)
        .add(&k_zzbar)
        .scale(Complex64::new(2.0, 0.0));
    let b = k_zbar.scale(Complex64::new(-2.0, 0.0));
    let v0 = frame
        .psi
        .scale_field(&a)
        .add(&frame.psi_z.scale_field(&b))
        .add(&frame.psi_zbar.scale_field(&b.conj()))
        .add(&frame.psi_hat.scale_field(kappa))
        .sub(&frame.xi[0].scale(Complex64::new(h, 0.0)));
    let constancy = v0.deriv_z().sup_norm();
    if constancy > CONSTANCY_TOL {
        return Err(Error::NonConstant {
            defect: constancy,
            tol: CONSTANCY_TOL,
        });
    }
    let mut v0_mean = Vec::with_capacity(v0.dim());
    for i in 0..v0.dim() {
        v0_mean.push(v0.component(i).mean().re);
    }
    let k = -inner(&v0_mean, &v0_mean)?;
    let curvature_gap = pair(&v0, &v0)
        .scale(Complex64::new(-1.0, 0.0))
        .sub(&curvature_formula(kappa, h))
        .sup_norm();
    let metric_defect = pair(&frame.psi, &v0).add(kappa).sup_norm();
    let h_recovery = pair(&v0, &frame.xi[0]).map(|v| v + h).sup_norm();
    Ok(CmcReport {
        data: SpaceFormData {
            v0: Some(v0_mean),
            h,
            k,
        },
        constancy,
        curvature_gap,
        metric_defect,
        h_recovery,
    })
}

/// One Lawson step: T-transform the invariants by r, so the mean curvature
/// becomes H + r/2 while K_r + H_r^2 stays constant. Returns the transformed
/// invariants and the new space-form data.
pub fn lawson_family(
    data: &SpaceFormData,
    inv: &SurfaceInvariants,
    r: f64,
) -> Result<(SurfaceInvariants, SpaceFormData)> {
    let t_inv = t_transform(inv, r)?;
    let h_r = data.h + 0.5 * r;
    let k_r = space_form_curvature(&t_inv, h_r)?;
    let drift = ((k_r + h_r * h_r) - (data.k + data.h * data.h)).abs();
    if drift > LAWSON_TOL {
        // algebraically exact, so any drift means the transformed data lost
        // the constant-mean-curvature relation
        return Err(Error::NotCmc {
            residual: drift,
            tol: LAWSON_TOL,
        });
    }
    Ok((
        t_inv,
        SpaceFormData {
            v0: None,
            h: h_r,
            k: k_r,
        },
    ))
}

/// Result of the C \ {0} action on constant-mean-curvature data.
#[derive(Clone, Debug)]
pub struct CstarResult {
    pub inv: SurfaceInvariants,
    /// Mean curvature |lambda| H in the deformed space form.
    pub h: f64,
    /// Space-form curvature K + (1 - |lambda|^2) H^2.
    pub k: f64,
    /// Transformed quadratic-differential coefficient lambda H.
    pub q: Complex64,
    /// Residual of the constant-mean-curvature relation for the transformed
    /// data in the rotated coordinate w = sqrt(lambda/|lambda|) z, pulled
    /// back to z: sup |kappa_zbzb + (cbar_lambda/2) kappa - lbar H kappa|.
    pub rotated_cmc_residual: f64,
}

/// The combined unitary/Lawson action kappa -> (lambda/|lambda|) kappa,
/// c -> c + 2 (lambda - 1) H, q = H -> lambda H on constant-mean-curvature
/// data. Unit lambda rotates the Hopf differential in a fixed space form;
/// positive real lambda recovers the Lawson family.
pub fn cstar_action(
    inv: &SurfaceInvariants,
    h: f64,
    lambda: Complex64,
) -> Result<CstarResult> {
    if lambda.norm() == 0.0 {
        return Err(Error::Config(
            "the C* action needs a nonzero parameter".into(),
        ));
    }
    let k0 = space_form_curvature(inv, h)?;
    let phase = lambda / lambda.norm();
    let shift = 2.0 * (lambda - Complex64::new(1.0, 0.0)) * h;
    let out = SurfaceInvariants {
        c: inv.c.map(|v| v + shift),
        kappa: inv.kappa.iter().map(|k| k.scale(phase)).collect(),
        q: inv.q.clone(),
        chi: inv.chi.iter().map(|x| x.scale(phase)).collect(),
        projection_leak: inv.projection_leak,
    };
    // the original kappa is exactly the transformed Hopf field expressed in
    // the rotated coordinate, so the relation is checked against it
    let rotated_cmc_residual = inv.kappa[0]
        .deriv_zbar()
        .deriv_zbar()
        .add(&out.c.conj().scale(Complex64::new(0.5, 0.0)).mul(&inv.kappa[0]))
        .sub(&inv.kappa[0].scale(lambda.conj() * h))
        .sup_norm();
    let abs2 = lambda.norm_sqr();
    Ok(CstarResult {
        inv: out,
        h: lambda.norm() * h,
        k: k0 + (1.0 - abs2) * h * h,
        q: lambda * h,
        rotated_cmc_residual,
    })
}

/// Defining data of a constant-length helix Hopf field.
#[derive(Clone, Debug)]
pub struct HelixParams {
    /// The constant real Schwarzian; must be positive.
    pub c: f64,
    /// Orthogonal vectors of equal length in R^{n-2}.
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
}

/// The constant-length solutions of the isothermic Willmore system:
/// kappa(x, y) = cos(sqrt(2c) x) kappa1 + sin(sqrt(2c) x) kappa2 together
/// with the constant Schwarzian field c. The frequency must close over the
/// x-period.
pub fn helix_kappa(
    p: &HelixParams,
    lat: TorusLattice,
) -> Result<(Vec<ScalarField>, ScalarField)> {
    if p.c <= 0.0 {
        return Err(Error::Config(format!(
            "helix fields need a positive Schwarzian constant, got {}",
            p.c
        )));
    }
    if p.kappa1.len() != p.kappa2.len() || p.kappa1.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "helix vectors have lengths {} and {}",
            p.kappa1.len(),
            p.kappa2.len()
        )));
    }
    let n1: f64 = p.kappa1.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n2: f64 = p.kappa2.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dot: f64 = p
        .kappa1
        .iter()
        .zip(p.kappa2.iter())
        .map(|(a, b)| a * b)
        .sum();
    if (n1 - n2).abs() > HELIX_VECTOR_TOL * n1 || dot.abs() > HELIX_VECTOR_TOL * n1 * n2 {
        return Err(Error::Config(
            "helix vectors must be orthogonal and of equal length".into(),
        ));
    }
    let omega = (2.0 * p.c).sqrt();
    let winding = omega * lat.lx() / std::f64::consts::TAU;
    if winding < 0.5 || (winding - winding.round()).abs() > PERIOD_GAP_TOL {
        return Err(Error::NonPeriodic { value: winding });
    }
    let kappa = (0..p.kappa1.len())
        .map(|j| {
            let (k1, k2) = (p.kappa1[j], p.kappa2[j]);
            ScalarField::from_fn(lat, |x, _| {
                Complex64::new((omega * x).cos() * k1 + (omega * x).sin() * k2, 0.0)
            })
        })
        .collect();
    let c = ScalarField::constant(lat, Complex64::new(p.c, 0.0));
    Ok((kappa, c))
}

/// Package bare (c, kappa) data as invariants in the parallel normal gauge:
/// q = -<kbar, kappa> and chi = 2 D_zbar kappa with plain derivatives.
pub fn invariants_from_parts(c: ScalarField, kappa: Vec<ScalarField>) -> SurfaceInvariants {
    let mut q = ScalarField::zeros(c.lattice());
    for k in &kappa {
        q = q.sub(&k.conj().mul(k));
    }
    let chi = kappa
        .iter()
        .map(|k| k.deriv_zbar().scale(Complex64::new(2.0, 0.0)))
        .collect();
    SurfaceInvariants {
        c,
        kappa,
        q,
        chi,
        projection_leak: 0.0,
    }
}

/// Diagnostic for isothermic Willmore surfaces: sup |Im(<kappa,kappa>_z
/// kappa_zbar)| per component, which vanishes when the length gradient of
/// the Hopf field aligns with its derivative.
pub fn gradient_reality_residual(inv: &SurfaceInvariants) -> f64 {
    let mut g = ScalarField::zeros(inv.c.lattice());
    for k in &inv.kappa {
        g = g.add(&k.mul(k));
    }
    let g_z = g.deriv_z();
    let mut worst = 0.0f64;
    for k in &inv.kappa {
        worst = worst.max(g_z.mul(&k.deriv_zbar()).im_part().sup_norm());
    }
    worst
}

/// Residual of the spatial elastica equation
/// k'' + (h/hbar)(<k,k> + gamma) k = 0 for a one-variable profile with
/// values in R^{n-2}, the reduction satisfied by Hopf fields of the form
/// kappa = k(h z + hbar zbar) with constant h.
pub fn elastica_residual(k: &[LineField], h: Complex64, gamma: f64) -> Result<f64> {
    if h.norm() == 0.0 {
        return Err(Error::Config(
            "the elastica reduction needs a nonzero coordinate slope h".into(),
        ));
    }
    if k.is_empty() {
        return Err(Error::DimensionMismatch(
            "elastica profile needs at least one component".into(),
        ));
    }
    let lat = k[0].lattice();
    let mut kk = LineField::zeros(lat);
    for comp in k {
        kk = kk.add(&comp.mul(comp));
    }
    let coef = h / h.conj();
    let mut worst = 0.0f64;
    for comp in k {
        let forcing = kk.map(|v| coef * (v + gamma)).mul(comp);
        worst = worst.max(comp.deriv_n(2).add(&forcing).sup_norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::flat_integrability;
    use crate::grid1d::LineLattice;
    use crate::invariants::{central_sphere_frame, extract_invariants};
    use crate::surfaces;

    fn extracted(
        imm: &crate::invariants::ConformalTorusImmersion,
    ) -> (CentralSphereFrame, SurfaceInvariants) {
        let frame = central_sphere_frame(imm).unwrap();
        let inv = extract_invariants(&frame).unwrap();
        (frame, inv)
    }

    #[test]
    fn clifford_is_dupin_isothermic_willmore() {
        let lat = TorusLattice::square(32).unwrap();
        let imm = surfaces::clifford(lat, 3).unwrap();
        let (_, inv) = extracted(&imm);
        let dupin = dupin_residual(&inv);
        assert!(dupin.c_antiholomorphic < 1e-10, "{dupin:?}");
        assert!(dupin.hopf_quartic < 1e-10, "{dupin:?}");
        assert!(isothermic_residual(&inv) < 1e-10);
        let w = willmore_residual(&inv);
        assert!(w.total < 1e-10, "{w:?}");
        assert!(gradient_reality_residual(&inv) < 1e-12);
    }

    #[test]
    fn associated_family_preserves_residuals() {
        let lat = TorusLattice::square(32).unwrap();
        let imm = surfaces::clifford(lat, 3).unwrap();
        let (_, inv) = extracted(&imm);
        let q = Complex64::new(0.0, 0.0);
        for k in 0..8 {
            let angle = std::f64::consts::PI * k as f64 / 4.0;
            let lambda = Complex64::new(angle.cos(), angle.sin());
            let (out, q_l) = willmore_associated_family(&inv, q, lambda).unwrap();
            assert_eq!(q_l, Complex64::new(0.0, 0.0));
            // Willmore data: the Schwarzian is fixed and kappa rotates
            assert!(out.c.sub(&inv.c).sup_norm() < 1e-12);
            let (gauss, codazzi) = flat_integrability(&out.c, &out.kappa);
            assert!(gauss < 1e-9, "lambda {lambda}: gauss {gauss}");
            assert!(codazzi < 1e-9, "lambda {lambda}: codazzi {codazzi}");
            assert!(constrained_willmore_residual(&out, q_l) < 1e-9);
        }
        // identity at lambda = 1
        let (out, _) = willmore_associated_family(&inv, q, Complex64::new(1.0, 0.0)).unwrap();
        assert!(out.kappa[0].sub(&inv.kappa[0]).sup_norm() == 0.0);
        assert!(matches!(
            willmore_associated_family(&inv, q, Complex64::new(2.0, 0.0)),
            Err(Error::NotUnit { .. })
        ));
    }

    #[test]
    fn cmc_vector_on_minimal_corpora() {
        // standard Clifford: kappa^2 = 1/8 makes 2 kappa^3 psi + kappa psihat
        // constant, cutting a sphere of curvature 4 kappa^4 = 1/16
        let lat = TorusLattice::square(32).unwrap();
        let imm = surfaces::clifford(lat, 3).unwrap();
        let (frame, inv) = extracted(&imm);
        let report = cmc_vector(&frame, &inv, 0.0).unwrap();
        assert!(report.constancy < 1e-10, "constancy {:.3e}", report.constancy);
        assert!((report.data.k - 0.0625).abs() < 1e-10, "K {}", report.data.k);
        assert!(report.curvature_gap < 1e-10);
        assert!(report.metric_defect < 1e-10);
        assert!(report.h_recovery < 1e-12);
        // doubled-coordinate gauge: v0 is a unit timelike vector, the round
        // 3-sphere itself
        let imm = surfaces::cmc_gauge(32).unwrap();
        let (frame, inv) = extracted(&imm);
        let report = cmc_vector(&frame, &inv, 0.0).unwrap();
        assert!((report.data.k - 1.0).abs() < 1e-11, "K {}", report.data.k);
        let v0 = report.data.v0.unwrap();
        assert!((v0[0].abs() - 1.0).abs() < 1e-11);
        for comp in &v0[1..] {
            assert!(comp.abs() < 1e-11);
        }
        // a constant shift of kappa keeps the relation (c = 0, flat Hopf
        // field) but breaks constancy of the section at the shift scale
        let mut bad = inv.clone();
        bad.kappa[0] = bad.kappa[0].map(|v| v + 1e-3);
        match cmc_vector(&frame, &bad, 0.0) {
            Err(Error::NonConstant { defect, .. }) => {
                assert!(defect > 1e-4, "defect {defect}");
            }
            other => panic!("expected NonConstant, got {other:?}"),
        }
    }

    #[test]
    fn lawson_family_keeps_the_invariant() {
        let imm = surfaces::cmc_gauge(32).unwrap();
        let (frame, inv) = extracted(&imm);
        let base = cmc_vector(&frame, &inv, 0.0).unwrap().data;
        assert!((base.k - 1.0).abs() < 1e-11);
        for r in [0.0, 1.0, 2.0] {
            let (t_inv, data) = lawson_family(&base, &inv, r).unwrap();
            assert!((data.h - r / 2.0).abs() < 1e-15);
            assert!(
                ((data.k + data.h * data.h) - 1.0).abs() < 1e-9,
                "r {r}: K_r + H_r^2 = {}",
                data.k + data.h * data.h
            );
            let (gauss, codazzi) = flat_integrability(&t_inv.c, &t_inv.kappa);
            assert!(gauss.max(codazzi) < 1e-9, "r {r}");
        }
        // r = 2 lands on the flat space form at mean curvature 1
        let (_, data) = lawson_family(&base, &inv, 2.0).unwrap();
        assert!((data.h - 1.0).abs() < 1e-15);
        assert!(data.k.abs() < 1e-9, "K_2 = {}", data.k);
    }

    #[test]
    fn rectangular_torus_cmc_suite() {
        let theta = std::f64::consts::PI / 6.0;
        let imm = surfaces::cmc_gauge_rect(32, theta).unwrap();
        let (frame, inv) = extracted(&imm);
        let h = inv.c.mean().re / 2.0;
        let want = 1.0 / (2.0 * theta).tan();
        assert!((h.abs() - want).abs() < 1e-11, "|H| = {h}");
        let k_sup = inv.kappa[0].sup_norm();
        // nonminimal constant-mean-curvature data: the Willmore defect is
        // exactly |H| times the Hopf magnitude
        let w = willmore_residual(&inv);
        assert!(
            (w.total - h.abs() * k_sup).abs() < 1e-11,
            "total {} vs {}",
            w.total,
            h.abs() * k_sup
        );
        assert!(constrained_willmore_residual(&inv, Complex64::new(h, 0.0)) < 1e-11);
        let off = constrained_willmore_residual(&inv, Complex64::new(h + 1.0, 0.0));
        assert!((off - k_sup).abs() < 1e-11, "off {off} vs {k_sup}");
        let report = cmc_vector(&frame, &inv, h).unwrap();
        assert!(report.constancy < 1e-9, "constancy {:.3e}", report.constancy);
        assert!((report.data.k - 1.0).abs() < 1e-10, "K {}", report.data.k);
        assert!(report.curvature_gap < 1e-10);
        assert!(report.metric_defect < 1e-10);
        assert!(report.h_recovery < 1e-10);
        // a wrong mean curvature fails the relation by |dH| ||kappa||
        match cmc_vector(&frame, &inv, h + 0.5) {
            Err(Error::NotCmc { residual, .. }) => {
                assert!((residual - 0.5 * k_sup).abs() < 1e-9);
            }
            other => panic!("expected NotCmc, got {other:?}"),
        }
    }

    #[test]
    fn cstar_action_unifies_the_deformations() {
        let theta = std::f64::consts::PI / 6.0;
        let imm = surfaces::cmc_gauge_rect(32, theta).unwrap();
        let (_, inv) = extracted(&imm);
        let h = inv.c.mean().re / 2.0;
        let k0 = space_form_curvature(&inv, h).unwrap();
        assert!((k0 - 1.0).abs() < 1e-10);
        // unit parameter: isometric family in a fixed space form
        let i = Complex64::new(0.0, 1.0);
        let r = cstar_action(&inv, h, i).unwrap();
        assert!((r.h - h).abs() < 1e-15);
        assert!((r.k - k0).abs() < 1e-12);
        assert!(r.rotated_cmc_residual < 1e-11, "{:.3e}", r.rotated_cmc_residual);
        assert!(r.inv.kappa[0].sub(&inv.kappa[0].scale(i)).sup_norm() < 1e-15);
        // positive real parameter: a Lawson step with H -> |lambda| H
        let l = Complex64::new(1.5, 0.0);
        let r = cstar_action(&inv, h, l).unwrap();
        assert!((r.h - 1.5 * h).abs() < 1e-15);
        assert!((r.k - (k0 + (1.0 - 2.25) * h * h)).abs() < 1e-12);
        assert!(r.rotated_cmc_residual < 1e-11);
        // for minimal surfaces the real action is trivial
        let imm = surfaces::cmc_gauge(32).unwrap();
        let (_, minv) = extracted(&imm);
        let r = cstar_action(&minv, 0.0, Complex64::new(2.0, 0.0)).unwrap();
        assert!(r.inv.c.sub(&minv.c).sup_norm() < 1e-15);
        assert!(r.inv.kappa[0].sub(&minv.kappa[0]).sup_norm() < 1e-15);
        assert!(matches!(
            cstar_action(&inv, h, Complex64::new(0.0, 0.0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn helix_field_solves_the_willmore_system() {
        let lat = TorusLattice::square(32).unwrap();
        let p = HelixParams {
            c: 0.5,
            kappa1: vec![1.0, 0.0],
            kappa2: vec![0.0, 1.0],
        };
        let (kappa, c) = helix_kappa(&p, lat).unwrap();
        let (gauss, codazzi) = flat_integrability(&c, &kappa);
        assert!(gauss < 1e-12, "gauss {gauss}");
        assert!(codazzi < 1e-12, "codazzi {codazzi}");
        let inv = invariants_from_parts(c, kappa);
        // constant length: -q = <kbar, kappa> = |kappa1|^2
        assert!(inv.q.map(|v| v + 1.0).sup_norm() < 1e-14);
        let w = willmore_residual(&inv);
        assert!(w.total < 1e-12, "{w:?}");
        assert!(gradient_reality_residual(&inv) < 1e-14);
        // non-closing frequency and malformed vectors are rejected
        let bad = HelixParams {
            c: 0.3,
            ..p.clone()
        };
        assert!(matches!(
            helix_kappa(&bad, lat),
            Err(Error::NonPeriodic { .. })
        ));
        let skew = HelixParams {
            c: 0.5,
            kappa1: vec![1.0, 0.0],
            kappa2: vec![0.5, 0.5],
        };
        assert!(matches!(helix_kappa(&skew, lat), Err(Error::Config(_))));
    }

    #[test]
    fn t_transform_preserves_integrability_iff_real() {
        let lat = TorusLattice::square(32).unwrap();
        let p = HelixParams {
            c: 0.5,
            kappa1: vec![1.0, 0.0],
            kappa2: vec![0.0, 1.0],
        };
        let (kappa, c) = helix_kappa(&p, lat).unwrap();
        let inv = invariants_from_parts(c, kappa);
        for r in [-1.0, 0.5, 3.0] {
            let out = t_transform(&inv, r).unwrap();
            let (gauss, codazzi) = flat_integrability(&out.c, &out.kappa);
            assert!(gauss < 1e-9, "r {r}: gauss {gauss}");
            assert!(codazzi < 1e-9, "r {r}: codazzi {codazzi}");
            assert!(out.c.sub(&inv.c).map(|v| v - r).sup_norm() < 1e-13);
        }
        // a phase-rotated Hopf field still solves the original system but
        // breaks Codazzi under the shift by exactly r/2 sup |Im kappa|
        let phase = Complex64::from_polar(1.0, std::f64::consts::PI / 5.0);
        let rot = SurfaceInvariants {
            c: inv.c.clone(),
            kappa: inv.kappa.iter().map(|k| k.scale(phase)).collect(),
            q: inv.q.clone(),
            chi: inv.chi.iter().map(|x| x.scale(phase)).collect(),
            projection_leak: 0.0,
        };
        let (gauss, codazzi) = flat_integrability(&rot.c, &rot.kappa);
        assert!(gauss.max(codazzi) < 1e-12);
        assert!(matches!(
            t_transform(&rot, 1.0),
            Err(Error::NotIsothermic { .. })
        ));
        let r = 1.0;
        let shifted = rot.c.map(|v| v + r);
        let (_, codazzi) = flat_integrability(&shifted, &rot.kappa);
        let mut im_sup = 0.0f64;
        for k in &rot.kappa {
            im_sup = im_sup.max(k.max_imag_abs());
        }
        assert!(
            (codazzi - 0.5 * r * im_sup).abs() < 1e-9,
            "codazzi {codazzi} vs {}",
            0.5 * r * im_sup
        );
    }

    #[test]
    fn calapso_equation_and_gates() {
        let lat = TorusLattice::square(32).unwrap();
        // constant and x-only real profiles are exact solutions
        let k0 = ScalarField::constant(lat, Complex64::new(0.7, 0.0));
        assert!(calapso_residual(&k0).unwrap() < 1e-14);
        let kx = ScalarField::from_fn(lat, |x, _| Complex64::new(0.4 + 0.1 * x.cos(), 0.0));
        assert!(calapso_residual(&kx).unwrap() < 1e-12);
        // a genuinely 2-dimensional profile is generically not a solution
        let k2 = ScalarField::from_fn(lat, |x, y| {
            Complex64::new(0.5 + 0.1 * x.cos() * y.cos(), 0.0)
        });
        assert!(calapso_residual(&k2).unwrap() > 1e-2);
        let imag = ScalarField::from_fn(lat, |x, _| Complex64::new(0.5, 0.1 * x.sin()));
        assert!(matches!(
            calapso_residual(&imag),
            Err(Error::NonRealInput { .. })
        ));
        let vanishing = ScalarField::from_fn(lat, |x, _| Complex64::new(x.cos(), 0.0));
        assert!(matches!(
            calapso_residual(&vanishing),
            Err(Error::KappaVanishes { .. })
        ));
    }

    #[test]
    fn elastica_residual_on_profiles() {
        let lat = LineLattice::circle(64).unwrap();
        // helix profile: k'' = -2 c0 k with unit length, so gamma = 2 c0 - 1
        let c0 = 0.5f64;
        let om = (2.0 * c0).sqrt();
        let k = vec![
            LineField::from_fn(lat, |s| Complex64::new((om * s).cos(), 0.0)),
            LineField::from_fn(lat, |s| Complex64::new((om * s).sin(), 0.0)),
        ];
        let gamma = 2.0 * c0 - 1.0;
        let res = elastica_residual(&k, Complex64::new(1.0, 0.0), gamma).unwrap();
        assert!(res < 1e-12, "residual {res}");
        let zero = vec![LineField::zeros(lat)];
        assert!(elastica_residual(&zero, Complex64::new(1.0, 0.0), 0.3).unwrap() == 0.0);
        // generic data does not satisfy the reduction
        let res = elastica_residual(&k, Complex64::new(1.0, 0.0), gamma + 0.4).unwrap();
        assert!((res - 0.4).abs() < 1e-12, "shifted gamma residual {res}");
        assert!(matches!(
            elastica_residual(&k, Complex64::new(0.0, 0.0), 0.0),
            Err(Error::Config(_))
        ));
    }
}

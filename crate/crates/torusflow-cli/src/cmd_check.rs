//! `check`: verify integrability of invariant data and report the full
//! battery of classification residuals, without writing field files.

use num_complex::Complex64;
use torusflow_core::flows::flat_integrability;
use torusflow_core::grid::ScalarField;
use torusflow_core::invariants::{
    central_sphere_frame, check_conformal, extract_invariants, integrability_residuals,
    SurfaceInvariants,
};
use torusflow_core::special;

use crate::config::RunConfig;
use crate::corpus::{build_surface, load_input, CorpusData};
use crate::fail::CommandResult;
use crate::report::{finish_gate, Reporter};

/// The parallel-gauge Ricci identity: the connection is flat, so the
/// residual is the size of the required curvature 2<xi_1 twist> between the
/// first two components; zero for fewer than two components.
fn flat_ricci(kappa: &[ScalarField]) -> f64 {
    if kappa.len() < 2 {
        return 0.0;
    }
    kappa[0]
        .mul(&kappa[1].conj())
        .sub(&kappa[0].conj().mul(&kappa[1]))
        .scale(Complex64::new(2.0, 0.0))
        .sup_norm()
}

pub fn run(cfg: RunConfig) -> CommandResult<()> {
    let mut rep = Reporter::new("check", cfg)?;
    let tol = rep.config().tolerances;

    // three sources: a sampled surface (framed extraction), invariant-level
    // corpus data, or field files; the last two use the parallel gauge
    let inv: SurfaceInvariants = if let Some(input) = rep.config().input.clone() {
        let (c, kappa) = load_input(&input)?;
        let (gauss, codazzi) = flat_integrability(&c, &kappa);
        rep.check("gauss", gauss, tol.integrability);
        rep.check("codazzi", codazzi, tol.integrability);
        rep.check("ricci", flat_ricci(&kappa), tol.integrability);
        special::invariants_from_parts(c, kappa)
    } else {
        match build_surface(rep.config())? {
            CorpusData::Immersion(imm) => {
                let conf = check_conformal(&imm);
                rep.residual("sphere_defect", conf.sphere_defect);
                if !rep.check("conformality", conf.conformality_ratio, tol.conformality) {
                    return finish_gate(rep);
                }
                let frame = central_sphere_frame(&imm)?;
                let inv = extract_invariants(&frame)?;
                let residuals = integrability_residuals(&inv, &frame);
                rep.check("gauss", residuals.gauss_res, tol.integrability);
                rep.check("codazzi", residuals.codazzi_res, tol.integrability);
                rep.check("ricci", residuals.ricci_res, tol.integrability);
                inv
            }
            CorpusData::Fields { c, kappa } => {
                let (gauss, codazzi) = flat_integrability(&c, &kappa);
                rep.check("gauss", gauss, tol.integrability);
                rep.check("codazzi", codazzi, tol.integrability);
                rep.check("ricci", flat_ricci(&kappa), tol.integrability);
                special::invariants_from_parts(c, kappa)
            }
        }
    };

    rep.residual("willmore_energy", torusflow_core::invariants::willmore_energy(&inv));
    rep.residual("isothermic", special::isothermic_residual(&inv));
    let dupin = special::dupin_residual(&inv);
    rep.residual("dupin_c_antiholomorphic", dupin.c_antiholomorphic);
    rep.residual("dupin_hopf_quartic", dupin.hopf_quartic);
    let willmore = special::willmore_residual(&inv);
    rep.residual("willmore_total", willmore.total);
    rep.residual("willmore_real", willmore.willmore);
    rep.residual("willmore_codazzi", willmore.codazzi);
    rep.residual("gradient_reality", special::gradient_reality_residual(&inv));
    rep.residual("c_sup", inv.c.sup_norm());
    let kappa_sup = inv
        .kappa
        .iter()
        .map(|k| k.sup_norm())
        .fold(0.0f64, f64::max);
    rep.residual("kappa_sup", kappa_sup);
    finish_gate(rep)
}

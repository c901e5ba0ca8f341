//! `special`: run the distinguished-class batteries on corpus data:
//! characterization residuals, the spectral deformation, the associated
//! family, and (when a mean curvature is supplied) the space-form suite.

use num_complex::Complex64;
use torusflow_core::flows::flat_integrability;
use torusflow_core::invariants::{
    central_sphere_frame, check_conformal, extract_invariants, CentralSphereFrame,
    SurfaceInvariants,
};
use torusflow_core::special::{
    cmc_vector, cstar_action, dupin_residual, gradient_reality_residual, invariants_from_parts,
    isothermic_residual, lawson_family, t_transform, willmore_associated_family,
    willmore_residual, CONSTANCY_TOL, LAWSON_TOL,
};

use crate::config::{RunConfig, SpecialConfig};
use crate::corpus::{build_surface, CorpusData};
use crate::fail::{CommandError, CommandResult};
use crate::report::{finish_gate, Reporter};

pub fn run(cfg: RunConfig) -> CommandResult<()> {
    let mut rep = Reporter::new("special", cfg)?;
    let tol = rep.config().tolerances;
    let sp: SpecialConfig = rep.config().special.clone().unwrap_or_default();

    let (frame, inv): (Option<CentralSphereFrame>, SurfaceInvariants) =
        match build_surface(rep.config())? {
            CorpusData::Immersion(imm) => {
                let conf = check_conformal(&imm);
                if !rep.check("conformality", conf.conformality_ratio, tol.conformality) {
                    return finish_gate(rep);
                }
                let frame = central_sphere_frame(&imm)?;
                let inv = extract_invariants(&frame)?;
                (Some(frame), inv)
            }
            CorpusData::Fields { c, kappa } => (None, invariants_from_parts(c, kappa)),
        };

    // characterization residuals
    rep.residual("isothermic", isothermic_residual(&inv));
    let dupin = dupin_residual(&inv);
    rep.residual("dupin_c_antiholomorphic", dupin.c_antiholomorphic);
    rep.residual("dupin_hopf_quartic", dupin.hopf_quartic);
    let willmore = willmore_residual(&inv);
    rep.residual("willmore_total", willmore.total);
    rep.residual("willmore_real", willmore.willmore);
    rep.residual("willmore_codazzi", willmore.codazzi);
    rep.residual("gradient_reality", gradient_reality_residual(&inv));

    // spectral deformation: integrability must survive every shift
    for (i, r) in sp.t_shifts.iter().enumerate() {
        let out = t_transform(&inv, *r)?;
        let (gauss, codazzi) = flat_integrability(&out.c, &out.kappa);
        rep.check(&format!("t_transform[{i}].gauss"), gauss, tol.integrability);
        rep.check(
            &format!("t_transform[{i}].codazzi"),
            codazzi,
            tol.integrability,
        );
    }

    // associated family at unit roots
    let q = Complex64::new(sp.q.0, sp.q.1);
    for k in 0..sp.family_count {
        let angle = std::f64::consts::TAU * k as f64 / sp.family_count as f64;
        let lambda = Complex64::new(angle.cos(), angle.sin());
        let (out, q_l) = willmore_associated_family(&inv, q, lambda)?;
        let (gauss, codazzi) = flat_integrability(&out.c, &out.kappa);
        rep.check(&format!("family[{k}].gauss"), gauss, tol.integrability);
        rep.check(&format!("family[{k}].codazzi"), codazzi, tol.integrability);
        rep.check(
            &format!("family[{k}].constrained_willmore"),
            torusflow_core::special::constrained_willmore_residual(&out, q_l),
            tol.integrability,
        );
    }

    // space-form suite, explicit opt-in through the mean curvature
    if let Some(h) = sp.h {
        let frame = frame.as_ref().ok_or_else(|| {
            CommandError::Config(
                "the space-form battery needs a sampled surface, not invariant-level data".into(),
            )
        })?;
        let report = cmc_vector(frame, &inv, h)?;
        rep.check("cmc_constancy", report.constancy, CONSTANCY_TOL);
        rep.residual("cmc_curvature_gap", report.curvature_gap);
        rep.residual("cmc_metric_defect", report.metric_defect);
        rep.residual("cmc_h_recovery", report.h_recovery);
        rep.residual("space_form_curvature", report.data.k);
        let base = report.data;
        let invariant0 = base.k + base.h * base.h;
        for (i, r) in sp.lawson.iter().enumerate() {
            let (_, data) = lawson_family(&base, &inv, *r)?;
            rep.check(
                &format!("lawson[{i}].invariant_drift"),
                ((data.k + data.h * data.h) - invariant0).abs(),
                LAWSON_TOL,
            );
        }
        let lambda = Complex64::new(sp.cstar.0, sp.cstar.1);
        let action = cstar_action(&inv, h, lambda)?;
        rep.residual("cstar_h", action.h);
        rep.residual("cstar_k", action.k);
        rep.check(
            "cstar_rotated_cmc",
            action.rotated_cmc_residual,
            tol.integrability,
        );
        if (lambda.norm() - 1.0).abs() < 1e-12 {
            rep.check("cstar_h_preserved", (action.h - h).abs(), 1e-12);
            rep.check("cstar_k_preserved", (action.k - base.k).abs(), 1e-9);
        }
    }
    finish_gate(rep)
}

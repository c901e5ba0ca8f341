//! `invariants`: sample or load a surface, extract its Schwarzian and Hopf
//! fields, verify integrability, and emit the fields plus a report.

use torusflow_core::invariants::{
    central_sphere_frame, check_conformal, extract_invariants, integrability_residuals,
};
use torusflow_core::io as field_io;

use crate::config::RunConfig;
use crate::corpus::{build_surface, require_immersion};
use crate::fail::CommandResult;
use crate::report::{finish_gate, Reporter};

pub fn run(cfg: RunConfig) -> CommandResult<()> {
    let mut rep = Reporter::new("invariants", cfg)?;
    let imm = require_immersion(build_surface(rep.config())?)?;
    let tol = rep.config().tolerances;

    let conf = check_conformal(&imm);
    rep.residual("sphere_defect", conf.sphere_defect);
    rep.residual("min_metric", conf.min_metric);
    if !rep.check("conformality", conf.conformality_ratio, tol.conformality) {
        // not a conformal immersion: report the diagnostics, skip extraction
        return finish_gate(rep);
    }

    let frame = central_sphere_frame(&imm)?;
    let inv = extract_invariants(&frame)?;
    let residuals = integrability_residuals(&inv, &frame);
    rep.check("gauss", residuals.gauss_res, tol.integrability);
    rep.check("codazzi", residuals.codazzi_res, tol.integrability);
    rep.check("ricci", residuals.ricci_res, tol.integrability);
    rep.residual("willmore_energy", residuals.willmore_energy);
    rep.residual("projection_leak", inv.projection_leak);
    rep.residual("c_sup", inv.c.sup_norm());
    let kappa_sup = inv
        .kappa
        .iter()
        .map(|k| k.sup_norm())
        .fold(0.0f64, f64::max);
    rep.residual("kappa_sup", kappa_sup);

    let mut buf = Vec::new();
    field_io::write_scalar_csv(&mut buf, &inv.c)?;
    rep.emit("c.csv", &buf)?;
    for (i, k) in inv.kappa.iter().enumerate() {
        buf.clear();
        field_io::write_scalar_csv(&mut buf, k)?;
        rep.emit(&format!("kappa_{i}.csv"), &buf)?;
    }
    finish_gate(rep)
}

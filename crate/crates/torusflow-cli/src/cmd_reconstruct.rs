//! `reconstruct`: integrate the frame system for given (c, kappa), emit the
//! mesh, and measure the round trip back through extraction. Non-closing
//! data still produces a mesh, reported and failed through the holonomy
//! check.

use torusflow_core::invariants::{central_sphere_frame, extract_invariants};
use torusflow_core::io as field_io;
use torusflow_core::reconstruct::{reconstruct_surface_with, ReconstructOptions};

use crate::config::RunConfig;
use crate::corpus::{build_surface, load_input, CorpusData};
use crate::fail::{CommandError, CommandResult};
use crate::mesh_out::{stereographic_obj, thinnest_extent};
use crate::report::{finish_gate, Reporter};

pub fn run(cfg: RunConfig) -> CommandResult<()> {
    let mut rep = Reporter::new("reconstruct", cfg)?;
    let tol = rep.config().tolerances;

    let (c, kappa) = if let Some(input) = rep.config().input.clone() {
        load_input(&input)?
    } else {
        match build_surface(rep.config())? {
            CorpusData::Immersion(imm) => {
                let frame = central_sphere_frame(&imm)?;
                let inv = extract_invariants(&frame)?;
                (inv.c, inv.kappa)
            }
            CorpusData::Fields { c, kappa } => (c, kappa),
        }
    };
    if kappa.len() != 1 {
        return Err(CommandError::Config(format!(
            "reconstruction is implemented for surfaces in S^3 (one Hopf component), got {}",
            kappa.len()
        )));
    }

    let opts = ReconstructOptions {
        require_closure: false,
    };
    let rec = reconstruct_surface_with(&c, &kappa[0], &opts)?;
    rep.residual("gauss", rec.gauss_res);
    rep.residual("codazzi", rec.codazzi_res);
    let worst_holonomy = rec.holonomy_x.max(rec.holonomy_y);
    rep.check("holonomy", worst_holonomy, tol.holonomy);
    rep.residual("sphere_containment", thinnest_extent(&rec.immersion.f));

    // exact mesh, plus a stereographic OBJ for viewing
    let mut buf = Vec::new();
    field_io::write_vector_csv(&mut buf, &rec.immersion.f)?;
    rep.emit("mesh.csv", &buf)?;
    let (obj, pole) = stereographic_obj(&rec.immersion.f)?;
    rep.emit("mesh.obj", &obj)?;
    rep.residual("obj_pole_axis", pole as f64);

    if worst_holonomy <= tol.holonomy {
        // round trip only means something when the periods close
        let roundtrip = central_sphere_frame(&rec.immersion)
            .and_then(|frame| extract_invariants(&frame));
        match roundtrip {
            Ok(inv) => {
                let c_err = inv.c.sub(&c).sup_norm();
                // the normal orientation, and so the sign of kappa, is a
                // frame choice
                let k_err = inv.kappa[0]
                    .sub(&kappa[0])
                    .sup_norm()
                    .min(inv.kappa[0].add(&kappa[0]).sup_norm());
                rep.check("roundtrip_c", c_err, tol.roundtrip);
                rep.check("roundtrip_kappa", k_err, tol.roundtrip);
            }
            Err(e) => {
                // the mesh exists but is not a valid conformal immersion;
                // seal the report before failing numerically
                rep.check("roundtrip_extraction", 1.0, 0.0);
                let _ = rep.finish()?;
                return Err(CommandError::Numeric(e.to_string()));
            }
        }
    }
    finish_gate(rep)
}

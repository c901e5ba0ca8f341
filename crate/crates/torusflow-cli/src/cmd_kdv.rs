//! `kdv`: evolve a periodic Schwarzian under the chosen hierarchy flow and
//! track its conserved quantities.

use num_complex::Complex64;
use torusflow_core::grid1d::{LineField, LineLattice};
use torusflow_core::kdv::{conserved_quantities, kdv_step, KdVState};

use crate::config::{KdvInitial, RunConfig};
use crate::fail::{CommandError, CommandResult};
use crate::report::{finish_gate, Reporter};

fn initial_field(cfg: &RunConfig) -> CommandResult<LineField> {
    let kdv = cfg
        .kdv
        .as_ref()
        .ok_or_else(|| CommandError::Config("missing [kdv] section".into()))?;
    let lat = LineLattice::new(kdv.n, kdv.l.unwrap_or(std::f64::consts::TAU))?;
    Ok(match kdv.initial {
        KdvInitial::Loxodrome => {
            let c0 = kdv.c0.expect("validated");
            LineField::from_fn(lat, move |_| Complex64::new(c0, 0.0))
        }
        KdvInitial::Modes => {
            let modes = kdv.modes.clone().expect("validated");
            let w = std::f64::consts::TAU / lat.l();
            LineField::from_fn(lat, move |s| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, re, im) in &modes {
                    let a = Complex64::new(*re, *im);
                    let phase = Complex64::new(0.0, *k as f64 * w * s).exp();
                    acc += a * phase + a.conj() * phase.conj();
                }
                acc
            })
        }
    })
}

pub fn run(cfg: RunConfig) -> CommandResult<()> {
    let mut rep = Reporter::new("kdv", cfg)?;
    let tol = rep.config().tolerances;
    let kdv_cfg = rep.config().kdv.clone().expect("validated");

    let c = initial_field(rep.config())?;
    let mut state = KdVState::new(c);
    let (i0, q0) = conserved_quantities(&state.c);
    let mut csv = String::from("t,int_c,int_c2,sup_c\n");
    let mut max_drift_i = 0.0f64;
    let mut max_drift_q = 0.0f64;
    let mut max_imag = state.c.max_imag_abs();
    let mut failure: Option<CommandError> = None;

    let mut record = |state: &KdVState, di: &mut f64, dq: &mut f64| {
        let (i, q) = conserved_quantities(&state.c);
        *di = di.max((i - i0).abs());
        *dq = dq.max((q - q0).abs());
        csv.push_str(&format!(
            "{},{},{},{}\n",
            state.t,
            i,
            q,
            state.c.sup_norm()
        ));
    };
    record(&state, &mut max_drift_i, &mut max_drift_q);
    for _ in 0..kdv_cfg.steps {
        match kdv_step(&state, kdv_cfg.dt, kdv_cfg.order) {
            Ok(next) => state = next,
            Err(e) => {
                failure = Some(e.into());
                break;
            }
        }
        max_imag = max_imag.max(state.c.max_imag_abs());
        record(&state, &mut max_drift_i, &mut max_drift_q);
    }
    drop(record);

    rep.emit("kdv.csv", csv.as_bytes())?;
    // relative to the initial value, falling back to absolute near zero
    rep.check("drift_int_c", max_drift_i / i0.abs().max(1.0), tol.drift);
    rep.check("drift_int_c2", max_drift_q / q0.abs().max(1.0), tol.drift);
    rep.check("reality", max_imag, tol.reality);
    rep.residual("final_sup_c", state.c.sup_norm());
    rep.residual("final_t", state.t);

    match failure {
        Some(err) => {
            rep.check("flow_completed", 1.0, 0.0);
            let _ = rep.finish()?;
            Err(err)
        }
        None => finish_gate(rep),
    }
}

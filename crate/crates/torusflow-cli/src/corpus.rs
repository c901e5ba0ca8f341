//! Construction of run inputs: named corpus surfaces, invariant-level helix
//! data, and user meshes or invariant fields from files.

use std::fs::File;
use std::io::BufReader;

use torusflow_core::grid::{ScalarField, TorusLattice};
use torusflow_core::invariants::ConformalTorusImmersion;
use torusflow_core::special::{helix_kappa, HelixParams};
use torusflow_core::{io as field_io, surfaces};

use crate::config::{InputConfig, LatticeConfig, RunConfig, SurfaceConfig, SurfaceName};
use crate::fail::{CommandError, CommandResult};

/// What a [surface] section produces: a sampled immersion, or bare invariant
/// fields for corpus members defined at the invariant level.
pub enum CorpusData {
    Immersion(ConformalTorusImmersion),
    Fields { c: ScalarField, kappa: Vec<ScalarField> },
}

const TAU: f64 = std::f64::consts::TAU;

fn lattice_from(cfg: &LatticeConfig) -> CommandResult<TorusLattice> {
    Ok(TorusLattice::new(
        cfg.nx,
        cfg.ny,
        cfg.lx.unwrap_or(TAU),
        cfg.ly.unwrap_or(TAU),
    )?)
}

fn need_lattice<'a>(
    cfg: &'a RunConfig,
    surface: &SurfaceConfig,
) -> CommandResult<&'a LatticeConfig> {
    cfg.lattice.as_ref().ok_or_else(|| {
        CommandError::Config(format!(
            "surface {:?} needs a [lattice] section",
            surface.name
        ))
    })
}

/// Reject a period override for surfaces whose periods are intrinsic.
fn forbid_periods(lat: &LatticeConfig, why: &str) -> CommandResult<()> {
    if lat.lx.is_some() || lat.ly.is_some() {
        return Err(CommandError::Config(format!(
            "lx/ly cannot be set here: {why}"
        )));
    }
    Ok(())
}

fn square_count(lat: &LatticeConfig, name: &str) -> CommandResult<usize> {
    if lat.nx != lat.ny {
        return Err(CommandError::Config(format!(
            "surface {name} needs a square sample count, got {} x {}",
            lat.nx, lat.ny
        )));
    }
    Ok(lat.nx)
}

fn reject_params(surface: &SurfaceConfig, used: &[&str]) -> CommandResult<()> {
    let mut stray = Vec::new();
    let mut consider = |key: &'static str, present: bool| {
        if present && !used.contains(&key) {
            stray.push(key);
        }
    };
    consider("ambient", surface.ambient.is_some());
    consider("m", surface.m.is_some());
    consider("theta", surface.theta.is_some());
    consider("amplitude", surface.amplitude.is_some());
    consider("path", surface.path.is_some());
    consider("c", surface.c.is_some());
    consider("kappa1", surface.kappa1.is_some());
    consider("kappa2", surface.kappa2.is_some());
    if !stray.is_empty() {
        return Err(CommandError::Config(format!(
            "surface {:?} does not take parameters {:?}",
            surface.name, stray
        )));
    }
    Ok(())
}

pub fn build_surface(cfg: &RunConfig) -> CommandResult<CorpusData> {
    let surface = cfg
        .surface
        .as_ref()
        .ok_or_else(|| CommandError::Config("missing [surface] section".into()))?;
    match surface.name {
        SurfaceName::Clifford => {
            reject_params(surface, &["ambient"])?;
            let lat_cfg = need_lattice(cfg, surface)?;
            forbid_periods(lat_cfg, "the Clifford torus lives on the square 2 pi lattice")?;
            let lat = TorusLattice::new(lat_cfg.nx, lat_cfg.ny, TAU, TAU)?;
            let ambient = surface.ambient.unwrap_or(3);
            Ok(CorpusData::Immersion(surfaces::clifford(lat, ambient)?))
        }
        SurfaceName::UmbilicSphereMap => {
            reject_params(surface, &["m"])?;
            let lat_cfg = need_lattice(cfg, surface)?;
            forbid_periods(lat_cfg, "the branched sphere map fixes its own periods")?;
            let n = square_count(lat_cfg, "umbilic_sphere_map")?;
            Ok(CorpusData::Immersion(surfaces::umbilic_sphere_map(
                n,
                surface.m.unwrap_or(2.0),
            )?))
        }
        SurfaceName::CmcGauge => {
            reject_params(surface, &["theta"])?;
            let lat_cfg = need_lattice(cfg, surface)?;
            forbid_periods(lat_cfg, "the flat gauge fixes its own periods")?;
            let n = square_count(lat_cfg, "cmc_gauge")?;
            let imm = match surface.theta {
                None => surfaces::cmc_gauge(n)?,
                Some(theta) => surfaces::cmc_gauge_rect(n, theta)?,
            };
            Ok(CorpusData::Immersion(imm))
        }
        SurfaceName::PerturbedClifford => {
            reject_params(surface, &["amplitude"])?;
            let lat_cfg = need_lattice(cfg, surface)?;
            forbid_periods(lat_cfg, "the perturbed torus lives on the square 2 pi lattice")?;
            let lat = TorusLattice::new(lat_cfg.nx, lat_cfg.ny, TAU, TAU)?;
            Ok(CorpusData::Immersion(surfaces::perturbed_clifford(
                lat,
                surface.amplitude.unwrap_or(1e-3),
            )?))
        }
        SurfaceName::CustomFile => {
            reject_params(surface, &["path"])?;
            if cfg.lattice.is_some() {
                return Err(CommandError::Config(
                    "custom_file meshes carry their own lattice; remove [lattice]".into(),
                ));
            }
            let path = surface.path.as_ref().ok_or_else(|| {
                CommandError::Config("custom_file needs surface.path".into())
            })?;
            let file = File::open(path).map_err(|e| {
                CommandError::Config(format!("cannot open mesh {path:?}: {e}"))
            })?;
            let f = field_io::read_vector_csv(BufReader::new(file))?;
            if f.dim() < 4 || f.dim() > 5 {
                return Err(CommandError::Config(format!(
                    "custom meshes must have 4 or 5 coordinates (surfaces in S^3 or S^4), got {}",
                    f.dim()
                )));
            }
            let n = f.dim() - 1;
            Ok(CorpusData::Immersion(ConformalTorusImmersion::new(
                f, n, None,
            )?))
        }
        SurfaceName::HelixIsothermic => {
            reject_params(surface, &["c", "kappa1", "kappa2"])?;
            let lat_cfg = need_lattice(cfg, surface)?;
            let lat = lattice_from(lat_cfg)?;
            let params = HelixParams {
                c: surface.c.ok_or_else(|| {
                    CommandError::Config("helix_isothermic needs surface.c".into())
                })?,
                kappa1: surface.kappa1.clone().ok_or_else(|| {
                    CommandError::Config("helix_isothermic needs surface.kappa1".into())
                })?,
                kappa2: surface.kappa2.clone().ok_or_else(|| {
                    CommandError::Config("helix_isothermic needs surface.kappa2".into())
                })?,
            };
            let (kappa, c) = helix_kappa(&params, lat)?;
            Ok(CorpusData::Fields { c, kappa })
        }
    }
}

/// The immersion, or exit 2 for invariant-level corpus members.
pub fn require_immersion(data: CorpusData) -> CommandResult<ConformalTorusImmersion> {
    match data {
        CorpusData::Immersion(imm) => Ok(imm),
        CorpusData::Fields { .. } => Err(CommandError::Config(
            "this command needs a sampled surface; the chosen corpus entry provides invariant data only"
                .into(),
        )),
    }
}

/// Load invariant fields named by an [input] section.
pub fn load_input(input: &InputConfig) -> CommandResult<(ScalarField, Vec<ScalarField>)> {
    let c = read_scalar(&input.c)?;
    if input.kappa.is_empty() {
        return Err(CommandError::Config(
            "input.kappa needs at least one component file".into(),
        ));
    }
    let mut kappa = Vec::with_capacity(input.kappa.len());
    for path in &input.kappa {
        kappa.push(read_scalar(path)?);
    }
    Ok((c, kappa))
}

fn read_scalar(path: &str) -> CommandResult<ScalarField> {
    let file = File::open(path)
        .map_err(|e| CommandError::Config(format!("cannot open field {path:?}: {e}")))?;
    Ok(field_io::read_scalar_csv(BufReader::new(file))?)
}

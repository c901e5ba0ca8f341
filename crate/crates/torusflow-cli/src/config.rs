//! Run configuration: a single TOML file per run, schema-checked before any
//! computation. Unknown keys are rejected, and every tolerance the run uses
//! is resolved here so the report can echo it.

use serde::{Deserialize, Serialize};

use crate::fail::{CommandError, CommandResult};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional echo of the subcommand; when present it must match the one
    /// given on the command line, guarding against mixed-up config files.
    pub command: Option<String>,
    pub surface: Option<SurfaceConfig>,
    pub lattice: Option<LatticeConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub flow: Option<FlowConfig>,
    pub kdv: Option<KdvConfig>,
    pub input: Option<InputConfig>,
    pub special: Option<SpecialConfig>,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub name: SurfaceName,
    /// Seed echoed into the report; reserved for randomized corpus members.
    pub seed: Option<u64>,
    /// Ambient sphere dimension for the Clifford torus (3 or 4).
    pub ambient: Option<usize>,
    /// Winding parameter of the branched sphere map.
    pub m: Option<f64>,
    /// Rectangle angle of the flat constant-mean-curvature torus; absent
    /// means the square minimal one.
    pub theta: Option<f64>,
    /// Normal perturbation amplitude.
    pub amplitude: Option<f64>,
    /// Mesh CSV path for custom surfaces.
    pub path: Option<String>,
    /// Helix data: constant Schwarzian and the two profile vectors.
    pub c: Option<f64>,
    pub kappa1: Option<Vec<f64>>,
    pub kappa2: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceName {
    Clifford,
    UmbilicSphereMap,
    HelixIsothermic,
    CmcGauge,
    PerturbedClifford,
    CustomFile,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub nx: usize,
    pub ny: usize,
    /// Periods; default 2 pi each.
    pub lx: Option<f64>,
    pub ly: Option<f64>,
}

/// Every numeric gate a run can apply, with the defaults resolved at load
/// time so reports never carry silent values.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Conformality ratio bound for input surfaces.
    pub conformality: f64,
    /// Gauss/Codazzi/Ricci residual bound.
    pub integrability: f64,
    /// Relative frame mismatch bound after closing a period.
    pub holonomy: f64,
    /// Relative drift bound for conserved quantities along flows.
    pub drift: f64,
    /// Bound on imaginary contamination of real quantities.
    pub reality: f64,
    /// Round-trip bound for reconstruction followed by extraction.
    pub roundtrip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            conformality: 1e-8,
            integrability: 1e-6,
            holonomy: 1e-4,
            drift: 1e-6,
            reality: 1e-6,
            roundtrip: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub kind: FlowKindConfig,
    pub dt: f64,
    pub steps: usize,
    pub mode: FlowModeConfig,
    /// Emit a mesh snapshot every this many steps; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKindConfig {
    Translation,
    NovikovVeselov,
    DaveyStewartson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowModeConfig {
    Lift,
    Invariants,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KdvConfig {
    pub n: usize,
    /// Period of the line; default 2 pi.
    pub l: Option<f64>,
    pub order: usize,
    pub dt: f64,
    pub steps: usize,
    pub initial: KdvInitial,
    /// Constant value for the loxodrome profile.
    pub c0: Option<f64>,
    /// Fourier modes (k, re, im) of a + conj(a) pairs; the profile is
    /// sum a_k e^{iks} + conj(a_k) e^{-iks}, hence real.
    pub modes: Option<Vec<(i32, f64, f64)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KdvInitial {
    Loxodrome,
    Modes,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// Schwarzian field file.
    pub c: String,
    /// One file per Hopf component.
    pub kappa: Vec<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpecialConfig {
    /// Mean curvature for the space-form battery; absent skips it.
    pub h: Option<f64>,
    /// Shifts for the spectral deformation battery.
    #[serde(default = "default_t_shifts")]
    pub t_shifts: Vec<f64>,
    /// Number of unit roots for the associated family.
    #[serde(default = "default_family_count")]
    pub family_count: usize,
    /// Constant quadratic-differential coefficient (re, im).
    #[serde(default)]
    pub q: (f64, f64),
    /// Lawson shifts; used only when `h` is given.
    #[serde(default = "default_lawson")]
    pub lawson: Vec<f64>,
    /// Scale action parameter (re, im); used only when `h` is given.
    #[serde(default = "default_cstar")]
    pub cstar: (f64, f64),
}

fn default_t_shifts() -> Vec<f64> {
    vec![-1.0, 0.5, 3.0]
}
fn default_family_count() -> usize {
    8
}
fn default_lawson() -> Vec<f64> {
    vec![0.0, 1.0, 2.0]
}
fn default_cstar() -> (f64, f64) {
    (1.5, 0.0)
}

impl Default for SpecialConfig {
    fn default() -> Self {
        SpecialConfig {
            h: None,
            t_shifts: default_t_shifts(),
            family_count: default_family_count(),
            q: (0.0, 0.0),
            lawson: default_lawson(),
            cstar: default_cstar(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory all emitted files go into; created if missing.
    pub dir: String,
    /// Basename prefix for emitted files.
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

fn default_prefix() -> String {
    "run".into()
}

/// The sections each subcommand consumes; anything else present is a config
/// error, so a file can never silently carry settings a run ignores.
fn section_rules(command: &str) -> CommandResult<(&'static [&'static str], &'static [&'static str])> {
    Ok(match command {
        "invariants" => (&["surface"], &["flow", "kdv", "input", "special"]),
        "check" => (&[], &["flow", "kdv", "special"]),
        "flow" => (&["surface", "flow"], &["kdv", "input", "special"]),
        "reconstruct" => (&[], &["flow", "kdv", "special"]),
        "kdv" => (&["kdv"], &["surface", "lattice", "flow", "input", "special"]),
        "special" => (&["surface"], &["flow", "kdv", "input"]),
        other => {
            return Err(CommandError::Config(format!(
                "unknown subcommand {other:?}"
            )))
        }
    })
}

impl RunConfig {
    pub fn load(path: &str, command: &str) -> CommandResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CommandError::Config(format!("cannot read config {path:?}: {e}"))
        })?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CommandError::Config(format!("config {path:?}: {e}")))?;
        cfg.validate(command)?;
        Ok(cfg)
    }

    pub fn validate(&self, command: &str) -> CommandResult<()> {
        if let Some(declared) = &self.command {
            if declared != command {
                return Err(CommandError::Config(format!(
                    "config declares command {declared:?} but {command:?} was invoked"
                )));
            }
        }
        let (required, forbidden) = section_rules(command)?;
        let present = |name: &str| -> bool {
            match name {
                "surface" => self.surface.is_some(),
                "lattice" => self.lattice.is_some(),
                "flow" => self.flow.is_some(),
                "kdv" => self.kdv.is_some(),
                "input" => self.input.is_some(),
                "special" => self.special.is_some(),
                _ => unreachable!(),
            }
        };
        for name in required {
            if !present(name) {
                return Err(CommandError::Config(format!(
                    "command {command:?} needs a [{name}] section"
                )));
            }
        }
        for name in forbidden {
            if present(name) {
                return Err(CommandError::Config(format!(
                    "command {command:?} does not use a [{name}] section; remove it"
                )));
            }
        }
        // check and reconstruct take exactly one of corpus surface or files
        if matches!(command, "check" | "reconstruct")
            && self.surface.is_some() == self.input.is_some()
        {
            return Err(CommandError::Config(format!(
                "command {command:?} needs exactly one of [surface] or [input]"
            )));
        }
        if let Some(kdv) = &self.kdv {
            if !matches!(kdv.order, 1 | 3 | 5) {
                return Err(CommandError::Config(format!(
                    "kdv order must be 1, 3, or 5, got {}",
                    kdv.order
                )));
            }
            match kdv.initial {
                KdvInitial::Loxodrome if kdv.c0.is_none() => {
                    return Err(CommandError::Config(
                        "kdv initial = loxodrome needs c0".into(),
                    ));
                }
                KdvInitial::Modes if kdv.modes.is_none() => {
                    return Err(CommandError::Config(
                        "kdv initial = modes needs a modes list".into(),
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

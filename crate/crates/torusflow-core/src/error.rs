//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building lattices, extracting
/// invariants, or running flows. Variants carry the measured quantity and the
/// tolerance it was compared against so callers can report both.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("right-hand side has mean of modulus {mean:.3e} > tol {tol:.1e}; dbar-problem not solvable on the torus")]
    UnsolvableOnTorus { mean: f64, tol: f64 },

    #[error("critical point of the map: min |f'| = {min_abs:.3e} < tol {tol:.1e}")]
    CriticalPoint { min_abs: f64, tol: f64 },

    #[error("square-root branch tracking failed at sample {index}: arg jump {jump:.3} rad")]
    BranchDiscontinuity { index: usize, jump: f64 },

    #[error("lift is not normalized: max |det - 1| = {max_defect:.3e} > tol {tol:.1e}")]
    NotNormalized { max_defect: f64, tol: f64 },

    #[error("input must be real: max |Im| = {max_imag:.3e} > tol {tol:.1e}")]
    NonRealInput { max_imag: f64, tol: f64 },

    #[error("unsupported hierarchy order {order} (implemented orders: 1, 3, 5)")]
    UnsupportedOrder { order: usize },

    #[error("blow-up at t = {t:.6}: sup-norm {sup:.3e} exceeds bound {bound:.3e}")]
    BlowUp { sup: f64, bound: f64, t: f64 },

    #[error("point is not on the unit sphere: |f|^2 - 1 = {defect:.3e} > tol {tol:.1e}")]
    NotOnSphere { defect: f64, tol: f64 },

    #[error("vector is not null: <v,v> = {value:.3e}, tol {tol:.1e}")]
    NotNull { value: f64, tol: f64 },

    #[error("vector is not in the forward light cone (component 0 = {component0:.3e})")]
    NotForward { component0: f64 },

    #[error("point at infinity of the space form: |<psi,v0>| = {pairing:.3e} < tol {tol:.1e}")]
    PointAtInfinity { pairing: f64, tol: f64 },

    #[error("degenerate induced metric: min e^{{2u}} = {min:.3e} < tol {tol:.1e}")]
    DegenerateMetric { min: f64, tol: f64 },

    #[error("surface is not conformally parametrized: |<f_z,f_z>|/|<f_z,f_zbar>| = {ratio:.3e} > tol {tol:.1e}")]
    NotConformal { ratio: f64, tol: f64 },

    #[error("Hopf differential leaks out of the normal bundle: {leak:.3e} > tol {tol:.1e}")]
    ProjectionLeak { leak: f64, tol: f64 },

    #[error("field is not normal to the surface: max tangential pairing {defect:.3e} > tol {tol:.1e}")]
    NotNormal { defect: f64, tol: f64 },

    #[error("operation not implemented for ambient sphere dimension n = {n}")]
    NotImplementedDim { n: usize },

    #[error("invariants violate the integrability equations: gauss = {gauss:.3e}, codazzi = {codazzi:.3e}, tol {tol:.1e}")]
    NotIntegrable { gauss: f64, codazzi: f64, tol: f64 },

    #[error("frame does not close around the periods: defect x = {x:.3e}, y = {y:.3e}, tol {tol:.1e}")]
    HolonomyDefect { x: f64, y: f64, tol: f64 },

    #[error("conformal constraint violated: |int <sigma,kappa>| = {value:.3e} > tol {tol:.1e}")]
    ConformalConstraintViolated { value: f64, tol: f64 },

    #[error("quantity must be real: max |Im| = {max_imag:.3e} > tol {tol:.1e} (broken Ricci identity upstream)")]
    RealityViolation { max_imag: f64, tol: f64 },

    #[error("normal bundle has nonzero degree {degree}; dbar-problem unsolvable")]
    NonzeroNormalDegree { degree: i64 },

    #[error("normal bundle degree is not near an integer: rounding gap {gap:.3e}")]
    NonIntegerDegree { gap: f64 },

    #[error("surface is not isothermic in this coordinate: max |Im kappa| = {max_imag:.3e} > tol {tol:.1e}")]
    NotIsothermic { max_imag: f64, tol: f64 },

    #[error("kappa vanishes somewhere: min |kappa| = {min_abs:.3e} < tol {tol:.1e}")]
    KappaVanishes { min_abs: f64, tol: f64 },

    #[error("lambda must lie on the unit circle: |lambda| = {abs:.6}")]
    NotUnit { abs: f64 },

    #[error("data is not constrained Willmore: residual {residual:.3e} > tol {tol:.1e}")]
    NotConstrainedWillmore { residual: f64, tol: f64 },

    #[error("data does not satisfy the CMC relation: residual {residual:.3e} > tol {tol:.1e}")]
    NotCmc { residual: f64, tol: f64 },

    #[error("assembled section is not constant: defect {defect:.3e} > tol {tol:.1e}")]
    NonConstant { defect: f64, tol: f64 },

    #[error("profile does not close over the period: frequency x period / 2 pi = {value:.6} is not a positive integer")]
    NonPeriodic { value: f64 },

    #[error("conformality drifted during the flow: residual {residual:.3e} > allowed {allowed:.3e}")]
    ConformalDrift { residual: f64, allowed: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

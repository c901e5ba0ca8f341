//! End-to-end tests of the command line binary: exit codes, config
//! validation, emitted files, and byte-level determinism across repeated
//! and differently-threaded runs.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use torusflow_core::grid::{ScalarField, TorusLattice};
use torusflow_core::io as field_io;

/// Fresh per-test scratch directory under the system temp dir.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "torusflow-cli-{name}-{}",
        std::process::id()
    ));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Write `config` next to the outputs and run `torusflow <command> <config>`
/// with the scratch dir as working directory, so relative paths stay inside.
fn run_in(dir: &Path, command: &str, config: &str) -> Output {
    let path = dir.join(format!("{command}.toml"));
    fs::write(&path, config).unwrap();
    run_config(dir, command, &path)
}

fn run_config(dir: &Path, command: &str, config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torusflow"))
        .arg(command)
        .arg(config)
        .current_dir(dir)
        .output()
        .expect("the binary should start")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn report(dir: &Path, out_dir: &str, prefix: &str) -> serde_json::Value {
    let path = dir.join(out_dir).join(format!("{prefix}_report.json"));
    let text = fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing report {}", path.display()));
    serde_json::from_str(&text).unwrap()
}

fn check_value(rep: &serde_json::Value, name: &str) -> (f64, bool) {
    let c = rep["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check named {name}"));
    (c["value"].as_f64().unwrap(), c["pass"].as_bool().unwrap())
}

fn residual(rep: &serde_json::Value, name: &str) -> f64 {
    rep["residuals"][name]
        .as_f64()
        .unwrap_or_else(|| panic!("no residual named {name}"))
}

#[test]
fn invariants_on_the_clifford_torus_pass_and_report_known_values() {
    let dir = scratch("inv");
    let out = run_in(
        &dir,
        "invariants",
        r#"
command = "invariants"

[surface]
name = "clifford"

[lattice]
nx = 16
ny = 16

[output]
dir = "out"
prefix = "cl"
"#,
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));

    let rep = report(&dir, "out", "cl");
    assert_eq!(rep["pass"], true);
    assert!((residual(&rep, "kappa_sup") - 0.125f64.sqrt()).abs() < 1e-12);
    let w = residual(&rep, "willmore_energy");
    assert!((w - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-10);
    assert!(residual(&rep, "c_sup") < 1e-12);
    let (gauss, pass) = check_value(&rep, "gauss");
    assert!(pass && gauss < 1e-10);

    // the emitted field files exist and are listed with their digests
    for suffix in ["c.csv", "kappa_0.csv"] {
        assert!(dir.join("out").join(format!("cl_{suffix}")).exists());
    }
    assert_eq!(rep["outputs"].as_array().unwrap().len(), 2);

    // stdout carries the same report that lands on disk
    let on_disk = fs::read_to_string(dir.join("out/cl_report.json")).unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.trim_end(), on_disk.trim_end());
}

#[test]
fn malformed_configs_exit_with_code_two() {
    let dir = scratch("cfg");
    let base = r#"
[surface]
name = "clifford"

[lattice]
nx = 16
ny = 16

[output]
dir = "out"
prefix = "x"
"#;

    // unknown key anywhere in the file
    let out = run_in(&dir, "invariants", &format!("typo = 1\n{base}"));
    assert_eq!(code(&out), 2, "stderr: {}", stderr_text(&out));
    assert!(stderr_text(&out).contains("config error"));

    // unknown key inside a section
    let out = run_in(
        &dir,
        "invariants",
        &base.replace("name = \"clifford\"", "name = \"clifford\"\nradius = 2.0"),
    );
    assert_eq!(code(&out), 2);

    // missing required section
    let out = run_in(&dir, "invariants", "[output]\ndir = \"out\"\n");
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("surface"));

    // section that the subcommand does not read
    let out = run_in(
        &dir,
        "invariants",
        &format!("{base}\n[flow]\nkind = \"translation\"\ndt = 1e-3\nsteps = 5\nmode = \"lift\"\n"),
    );
    assert_eq!(code(&out), 2);

    // command echo that contradicts the subcommand
    let out = run_in(&dir, "invariants", &format!("command = \"check\"\n{base}"));
    assert_eq!(code(&out), 2);

    // syntactically broken file
    let out = run_in(&dir, "invariants", "[surface\nname = 3");
    assert_eq!(code(&out), 2);

    // unreadable path
    let out = run_config(&dir, "invariants", Path::new("does-not-exist.toml"));
    assert_eq!(code(&out), 2);

    // check needs exactly one of [surface] / [input]
    let out = run_in(
        &dir,
        "check",
        &format!("{base}\n[input]\nc = \"c.csv\"\nkappa = [\"k.csv\"]\n"),
    );
    assert_eq!(code(&out), 2);

    // stepping order outside the implemented hierarchy
    let out = run_in(
        &dir,
        "kdv",
        "[kdv]\nn = 64\norder = 2\ndt = 1e-4\nsteps = 5\ninitial = \"loxodrome\"\nc0 = 0.5\n\n[output]\ndir = \"out\"\nprefix = \"k\"\n",
    );
    assert_eq!(code(&out), 2);

    // a bad thread override never reaches the numerics
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_torusflow"));
    let path = dir.join("invariants.toml");
    fs::write(&path, base).unwrap();
    let out = cmd
        .arg("invariants")
        .arg(&path)
        .env("TORUSFLOW_THREADS", "many")
        .current_dir(&dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);

    // no config files were consumed into outputs
    assert!(!dir.join("out").exists());
}

#[test]
fn invariant_level_corpus_entries_cannot_be_flowed_as_lifts() {
    let dir = scratch("helixflow");
    let out = run_in(
        &dir,
        "flow",
        r#"
[surface]
name = "helix_isothermic"
c = 0.5
kappa1 = [1.0, 0.0]
kappa2 = [0.0, 1.0]

[lattice]
nx = 16
ny = 16

[flow]
kind = "translation"
dt = 1e-3
steps = 5
mode = "lift"

[output]
dir = "out"
prefix = "h"
"#,
    );
    assert_eq!(code(&out), 2, "stderr: {}", stderr_text(&out));
    assert!(stderr_text(&out).contains("sampled surface"));

    // the same surface is fine for invariant-level checking
    let out = run_in(
        &dir,
        "check",
        r#"
[surface]
name = "helix_isothermic"
c = 0.5
kappa1 = [1.0, 0.0]
kappa2 = [0.0, 1.0]

[lattice]
nx = 16
ny = 16

[output]
dir = "out"
prefix = "h"
"#,
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let rep = report(&dir, "out", "h");
    assert!(residual(&rep, "isothermic") < 1e-12);
}

#[test]
fn degenerate_invariant_data_fails_numerically_but_still_reports() {
    let dir = scratch("zero");
    let lat = TorusLattice::new(16, 16, TAU, TAU).unwrap();
    let zero = ScalarField::zeros(lat);
    let mut buf = Vec::new();
    field_io::write_scalar_csv(&mut buf, &zero).unwrap();
    fs::write(dir.join("zc.csv"), &buf).unwrap();
    fs::write(dir.join("zk.csv"), &buf).unwrap();

    let out = run_in(
        &dir,
        "reconstruct",
        r#"
[input]
c = "zc.csv"
kappa = ["zk.csv"]

[output]
dir = "out"
prefix = "z"
"#,
    );
    assert_eq!(code(&out), 3, "stderr: {}", stderr_text(&out));

    // zero data integrates to a great-sphere map whose periods cannot close
    let rep = report(&dir, "out", "z");
    assert_eq!(rep["pass"], false);
    let (holonomy, pass) = check_value(&rep, "holonomy");
    assert!(!pass && holonomy > 1.0);
    assert_eq!(residual(&rep, "sphere_containment"), 0.0);
    assert!(dir.join("out/z_mesh.csv").exists());
    assert!(dir.join("out/z_mesh.obj").exists());
}

#[test]
fn emitted_fields_reconstruct_and_feed_back_as_a_custom_surface() {
    let dir = scratch("roundtrip");
    let out = run_in(
        &dir,
        "invariants",
        r#"
[surface]
name = "clifford"

[lattice]
nx = 32
ny = 32

[output]
dir = "stage1"
prefix = "cl"
"#,
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));

    let out = run_in(
        &dir,
        "reconstruct",
        r#"
[input]
c = "stage1/cl_c.csv"
kappa = ["stage1/cl_kappa_0.csv"]

[tolerances]
roundtrip = 1e-5

[output]
dir = "stage2"
prefix = "rt"
"#,
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let rep = report(&dir, "stage2", "rt");
    let (holonomy, pass) = check_value(&rep, "holonomy");
    assert!(pass && holonomy < 1e-4);
    let (c_err, pass) = check_value(&rep, "roundtrip_c");
    assert!(pass && c_err < 1e-5);

    // the reconstructed mesh is itself a checkable surface
    let out = run_in(
        &dir,
        "check",
        r#"
[surface]
name = "custom_file"
path = "stage2/rt_mesh.csv"

[tolerances]
conformality = 1e-4
integrability = 1e-3

[output]
dir = "stage3"
prefix = "chk"
"#,
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let rep = report(&dir, "stage3", "chk");
    assert_eq!(rep["pass"], true);
    assert!(residual(&rep, "willmore_energy") > 1.0);
}

#[test]
fn repeated_runs_emit_byte_identical_files() {
    let dir = scratch("determinism");
    let config = r#"
[surface]
name = "perturbed_clifford"
seed = 11
amplitude = 0.01

[lattice]
nx = 16
ny = 16

# the perturbed surface is checked loosely here; this test is about bytes
[tolerances]
conformality = 1e-2
integrability = 1e-2

[output]
dir = "out"
prefix = "d"
"#;
    let files = ["out/d_c.csv", "out/d_kappa_0.csv", "out/d_report.json"];

    let out = run_in(&dir, "invariants", config);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(dir.join(f)).unwrap()).collect();

    let out = run_in(&dir, "invariants", config);
    assert_eq!(code(&out), 0);
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(&fs::read(dir.join(f)).unwrap(), bytes, "{f} changed between runs");
    }

    // the thread count must not leak into the numbers
    for threads in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_torusflow"))
            .arg("invariants")
            .arg(dir.join("invariants.toml"))
            .env("TORUSFLOW_THREADS", threads)
            .current_dir(&dir)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
        for (f, bytes) in files.iter().zip(&first) {
            assert_eq!(
                &fs::read(dir.join(f)).unwrap(),
                bytes,
                "{f} changed with {threads} threads"
            );
        }
    }
}

#[test]
fn flow_and_kdv_runs_emit_series_and_snapshots() {
    let dir = scratch("flowkdv");
    let out = run_in(
        &dir,
        "flow",
        r#"
[surface]
name = "clifford"

[lattice]
nx = 16
ny = 16

[flow]
kind = "translation"
dt = 1e-3
steps = 10
mode = "lift"
snapshot_every = 5

[output]
dir = "out"
prefix = "tr"
"#,
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let rep = report(&dir, "out", "tr");
    assert_eq!(rep["pass"], true);
    let (drift, pass) = check_value(&rep, "willmore_drift");
    assert!(pass && drift < 1e-8);
    for f in ["tr_flow.csv", "tr_mesh_000000.obj", "tr_mesh_000005.obj", "tr_mesh_000010.obj"] {
        assert!(dir.join("out").join(f).exists(), "missing {f}");
    }
    let series = fs::read_to_string(dir.join("out/tr_flow.csv")).unwrap();
    assert_eq!(series.lines().count(), 12, "header plus one row per recorded step");
    assert!(series.starts_with("t,willmore,gauss,codazzi,ricci,im_kappa,conformality"));

    let out = run_in(
        &dir,
        "kdv",
        r#"
[kdv]
n = 128
order = 3
dt = 1e-4
steps = 50
initial = "modes"
modes = [[1, 0.1, 0.05], [2, -0.04, 0.02]]

[output]
dir = "out"
prefix = "k3"
"#,
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let rep = report(&dir, "out", "k3");
    assert_eq!(rep["pass"], true);
    let (drift, pass) = check_value(&rep, "drift_int_c2");
    assert!(pass && drift < 1e-10);
    assert!(dir.join("out/k3_kdv.csv").exists());
}

#[test]
fn special_battery_passes_on_the_flat_minimal_torus() {
    let dir = scratch("special");
    let out = run_in(
        &dir,
        "special",
        r#"
[surface]
name = "cmc_gauge"

[lattice]
nx = 32
ny = 32

[special]
h = 0.0

[output]
dir = "out"
prefix = "cmc"
"#,
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let rep = report(&dir, "out", "cmc");
    assert_eq!(rep["pass"], true);
    assert!((residual(&rep, "space_form_curvature") - 1.0).abs() < 1e-8);
    let (v, pass) = check_value(&rep, "cmc_constancy");
    assert!(pass && v < 1e-8);
    // default deformation sweeps are all present
    for name in ["t_transform[0].codazzi", "family[7].gauss", "lawson[2].invariant_drift"] {
        let (_, pass) = check_value(&rep, name);
        assert!(pass, "{name} failed");
    }
}

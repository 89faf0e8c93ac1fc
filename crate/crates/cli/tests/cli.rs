//! End-to-end tests of the compiled binary: exit codes, artifacts and
//! serial-mode byte reproducibility.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_bremweyl")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bremweyl-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL_GRID: &str = "
[grid]
r_min = 1e-4
r_max = 1e4
radial_per_decade = 48
n_theta = 12
n_phi = 24
";

#[test]
fn classify_kick_reports_uv_divergence() {
    let dir = tmp("kick");
    let config = write_config(
        &dir,
        &format!(
            "[trajectory]\nbuilder = \"kick\"\nv_minus = [0.5, 0.0, 0.0]\nv_plus = [0.0, 0.0, 0.0]\nramp = 2.0\n{SMALL_GRID}"
        ),
    );
    let out = dir.join("out");
    let status = Command::new(bin())
        .args(["classify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .arg("--serial")
        .output()
        .unwrap();
    assert!(status.status.success(), "{status:?}");
    let report = std::fs::read_to_string(out.join("report.toml")).unwrap();
    assert!(report.contains("classification = \"NonFockUV\""), "{report}");
    for artifact in ["amplitude.csv", "spectrum.csv", "angular.csv", "trajectory.json"] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    // the report embeds the resolved configuration
    assert!(report.contains("[config.trajectory]"));
    assert!(report.contains("radial_per_decade = 48"));
}

#[test]
fn classify_boost_reports_ir_divergence_and_bump_is_fock() {
    let dir = tmp("boost-bump");
    let config = write_config(
        &dir,
        &format!(
            "[trajectory]\nbuilder = \"boost\"\nv_in = [0.0, 0.0, 0.0]\nv_out = [0.5, 0.0, 0.0]\nduration = 2.0\n{SMALL_GRID}"
        ),
    );
    let out = dir.join("out-boost");
    let status = Command::new(bin())
        .args(["classify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success());
    let report = std::fs::read_to_string(out.join("report.toml")).unwrap();
    assert!(report.contains("classification = \"NonFockIR\""), "{report}");

    // switch the builder through --set overrides
    let out2 = dir.join("out-bump");
    let status = Command::new(bin())
        .args(["classify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out2)
        .args([
            "--set",
            "trajectory.builder=smooth-stop-start",
            "--set",
            "trajectory.duration=10.0",
            "--set",
            "trajectory.displacement=[1.0, 0.0, 0.0]",
            "--set",
            "trajectory.v0_cap=0.5",
        ])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let report = std::fs::read_to_string(out2.join("report.toml")).unwrap();
    assert!(report.contains("classification = \"Fock\""), "{report}");
    assert!(report.contains("photon_number"), "{report}");
}

#[test]
fn serial_rerun_is_byte_identical() {
    let dir = tmp("determinism");
    let config = write_config(
        &dir,
        &format!(
            "[trajectory]\nbuilder = \"boost\"\nv_in = [0.0, 0.0, 0.0]\nv_out = [0.4, 0.1, 0.0]\nduration = 2.0\n{SMALL_GRID}"
        ),
    );
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("out-{run}"));
        let status = Command::new(bin())
            .args(["classify", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .arg("--serial")
            .output()
            .unwrap();
        assert!(status.status.success());
        outputs.push(out);
    }
    for artifact in ["report.toml", "amplitude.csv", "spectrum.csv", "angular.csv", "trajectory.json"] {
        let a = std::fs::read(outputs[0].join(artifact)).unwrap();
        let b = std::fs::read(outputs[1].join(artifact)).unwrap();
        // strip the embedded output directory (differs by construction)
        if artifact == "report.toml" {
            let sa = String::from_utf8(a).unwrap().replace("out-0", "out-X");
            let sb = String::from_utf8(b).unwrap().replace("out-1", "out-X");
            assert_eq!(sa, sb, "report.toml differs");
        } else {
            assert_eq!(a, b, "{artifact} differs between identical runs");
        }
    }
}

#[test]
fn validation_errors_exit_one() {
    let dir = tmp("invalid");
    // superluminal kick
    let config = write_config(
        &dir,
        &format!(
            "[trajectory]\nbuilder = \"kick\"\nv_minus = [1.5, 0.0, 0.0]\nv_plus = [0.0, 0.0, 0.0]\nramp = 2.0\n{SMALL_GRID}"
        ),
    );
    let status = Command::new(bin())
        .args(["classify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));

    // unknown builder
    let config = write_config(&dir, "[trajectory]\nbuilder = \"warp\"\n");
    let status = Command::new(bin())
        .args(["classify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out2"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn compare_representations_smooth_bump() {
    let dir = tmp("compare");
    let config = write_config(
        &dir,
        &format!(
            "[trajectory]\nbuilder = \"smooth-stop-start\"\nduration = 10.0\ndisplacement = [1.0, 0.0, 0.0]\nv0_cap = 0.5\n{SMALL_GRID}\n[analysis]\nclassify = false\nspectrum = false\nmomenta_per_decade = 8\n"
        ),
    );
    let out = dir.join("out");
    let status = Command::new(bin())
        .args(["compare-representations", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("direct, ibp1, ibp2"), "{stdout}");
    let compare = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    // header plus one row per decade in [0.1, 100]
    assert_eq!(compare.lines().count(), 4, "{compare}");
    for line in compare.lines().skip(1) {
        let gap: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(gap <= 1e-4, "{line}");
    }
}

#[test]
fn compare_representations_refuses_single_representation() {
    // a moving-tail trajectory with a velocity jump admits ibp1 only
    let dir = tmp("single-rep");
    let doc = serde_json::json!({
        "breakpoints": [-1.0, 0.0, 1.0],
        "segments": [
            [[-0.3, 0.3], [0.0, 0.0], [0.0, 0.0]],
            [[0.0, 0.1], [0.0, 0.0], [0.0, 0.0]]
        ],
        "v_in": [0.3, 0.0, 0.0],
        "v_out": [0.1, 0.0, 0.0],
        "classes": ["C3", "C0", "C3"],
        "v0": 0.3
    });
    let traj_path = dir.join("trajectory.json");
    std::fs::write(&traj_path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let config = write_config(
        &dir,
        &format!(
            "[trajectory]\nbuilder = \"file\"\nfile = {traj_path:?}\n{SMALL_GRID}\n[analysis]\nclassify = false\nspectrum = false\n"
        ),
    );
    let status = Command::new(bin())
        .args(["compare-representations", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&status.stderr).contains("single representation"),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
}

#[test]
fn emit_spectrum_writes_plot_data() {
    let dir = tmp("spectrum");
    let config = write_config(
        &dir,
        &format!(
            "[trajectory]\nbuilder = \"boost\"\nv_in = [0.0, 0.0, 0.0]\nv_out = [0.5, 0.0, 0.0]\nduration = 2.0\n{SMALL_GRID}\n[analysis]\nclassify = false\nspectrum = false\n"
        ),
    );
    let out = dir.join("out");
    let status = Command::new(bin())
        .args(["emit-spectrum", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success());
    let spectrum = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("omega,dn_domega"));
    assert!(spectrum.lines().count() > 100);
    assert!(out.join("angular.csv").exists());
    // classify was disabled, so no classification section appears
    let report = std::fs::read_to_string(out.join("report.toml")).unwrap();
    assert!(!report.contains("[classification]"));
    assert!(report.contains("spectrum_total"));
}

#[test]
fn algebra_check_reports_alpha_for_fock_state() {
    let dir = tmp("algebra");
    let config = write_config(
        &dir,
        &format!(
            "[trajectory]\nbuilder = \"smooth-stop-start\"\nduration = 10.0\ndisplacement = [1.0, 0.0, 0.0]\nv0_cap = 0.5\n{SMALL_GRID}\n[analysis]\nspectrum = false\n"
        ),
    );
    let out = dir.join("out");
    let status = Command::new(bin())
        .args(["algebra-check", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success());
    let report = std::fs::read_to_string(out.join("report.toml")).unwrap();
    assert!(report.contains("[algebra]"));
    assert!(report.contains("alpha = "), "{report}");
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("coherent occupation alpha"), "{stdout}");
}

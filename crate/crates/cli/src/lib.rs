//! Config-driven pipeline around the `bremweyl` library: declare a
//! trajectory and an analysis in a TOML file, run emission -> diagnostics
//! -> (optional) algebra checks, and emit a report plus plot-ready CSVs.
//!
//! Exit codes: 0 success, 1 validation, 2 accuracy, 3 inconclusive
//! classification.

use anyhow::{anyhow, Context};
use bremweyl::diagnostics::{
    classify, spectrum, ClassifyThresholds, DivergenceReportDoc, FitWindows,
};
use bremweyl::emission::{
    amplitude_direct, amplitude_ibp1, amplitude_ibp2, compute_amplitude, ComputeOptions,
    EmissionAmplitude, Strategy,
};
use bremweyl::quadrature::{GridSpec, OscSettings, SphericalGrid};
use bremweyl::trajectory::{
    build_accel_jump, build_boost, build_constant_velocity, build_kick, build_smooth_stop_start,
    Trajectory, TrajectoryDoc,
};
use bremweyl::weyl_fock;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_ACCURACY: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub builder: String,
    pub duration: Option<f64>,
    pub displacement: Option<[f64; 3]>,
    pub v0_cap: Option<f64>,
    pub v_minus: Option<[f64; 3]>,
    pub v_plus: Option<[f64; 3]>,
    pub ramp: Option<f64>,
    pub v_in: Option<[f64; 3]>,
    pub v_out: Option<[f64; 3]>,
    pub velocity: Option<[f64; 3]>,
    pub v_peak: Option<[f64; 3]>,
    pub half_duration: Option<f64>,
    /// Path to a serialized trajectory document (builder = "file").
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub strategy: Strategy,
    pub classify: bool,
    pub spectrum: bool,
    pub algebra_check: bool,
    pub compare_representations: bool,
    /// The per-sample amplitude dump is ~1 GB on the default grid; turn
    /// it off when only the report matters.
    pub amplitude_csv: bool,
    pub spectrum_reference_omega: f64,
    pub seed: u64,
    /// Momenta per decade for compare-representations.
    pub momenta_per_decade: usize,
    /// Frequency range of the comparison table.
    pub compare_range: [f64; 2],
    pub fock_cutoff: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            classify: true,
            spectrum: true,
            algebra_check: false,
            compare_representations: false,
            amplitude_csv: true,
            spectrum_reference_omega: 1.0,
            seed: 0,
            momenta_per_decade: 16,
            compare_range: [0.1, 100.0],
            fock_cutoff: weyl_fock::DEFAULT_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub osc_rel: f64,
    pub theta_rel: f64,
    pub residual_factor: f64,
    pub cross_check_rel: f64,
    pub uv_window: [f64; 2],
    pub ir_window: [f64; 2],
    pub omega_switch: f64,
    pub compare_rel: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let w = FitWindows::default();
        let t = ClassifyThresholds::default();
        Self {
            osc_rel: bremweyl::quadrature::panels::DEFAULT_OSC_RTOL,
            theta_rel: t.theta_rel,
            residual_factor: t.residual_factor,
            cross_check_rel: 1e-5,
            uv_window: w.uv,
            ir_window: w.ir,
            omega_switch: 5.0,
            compare_rel: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
        }
    }
}

/// Load a config file and apply `--set key.path=value` overrides onto the
/// raw TOML tree before deserializing.
pub fn load_config(path: &Path, overrides: &[String]) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut value: toml::Value = text.parse().context("parsing config TOML")?;
    for item in overrides {
        apply_override(&mut value, item)?;
    }
    let config: RunConfig = value.try_into().context("deserializing config")?;
    Ok(config)
}

fn apply_override(root: &mut toml::Value, item: &str) -> anyhow::Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| anyhow!("override must look like key.path=value, got '{item}'"))?;
    // parse the value through a one-entry document so arrays, numbers and
    // booleans come out typed; anything unparseable becomes a string
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Value>() {
        Ok(toml::Value::Table(mut t)) => t.remove("v").unwrap(),
        _ => toml::Value::String(raw.to_string()),
    };
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| anyhow!("override path '{key}' crosses a non-table"))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    Ok(())
}

pub fn build_trajectory(config: &TrajectoryConfig) -> anyhow::Result<Trajectory<f64>> {
    let need = |field: &str, opt: Option<f64>| {
        opt.ok_or_else(|| anyhow!("builder '{}' needs trajectory.{field}", config.builder))
    };
    let need3 = |field: &str, opt: Option<[f64; 3]>| {
        opt.ok_or_else(|| anyhow!("builder '{}' needs trajectory.{field}", config.builder))
    };
    let traj = match config.builder.as_str() {
        "smooth-stop-start" => build_smooth_stop_start(
            need("duration", config.duration)?,
            &need3("displacement", config.displacement)?,
            need("v0_cap", config.v0_cap)?,
        )?,
        "kick" => build_kick(
            &need3("v_minus", config.v_minus)?,
            &need3("v_plus", config.v_plus)?,
            need("ramp", config.ramp)?,
        )?,
        "boost" => build_boost(
            &need3("v_in", config.v_in)?,
            &need3("v_out", config.v_out)?,
            need("duration", config.duration)?,
        )?,
        "constant" => build_constant_velocity(&need3("velocity", config.velocity)?)?,
        "accel-jump" => build_accel_jump(
            &need3("v_peak", config.v_peak)?,
            need("half_duration", config.half_duration)?,
        )?,
        "file" => {
            let path = config
                .file
                .as_ref()
                .ok_or_else(|| anyhow!("builder 'file' needs trajectory.file"))?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading trajectory {}", path.display()))?;
            let doc: TrajectoryDoc = serde_json::from_str(&text)?;
            Trajectory::from_doc(&doc)?
        }
        other => {
            return Err(anyhow!(
                "unknown builder '{other}' (expected smooth-stop-start, kick, boost, constant, accel-jump or file)"
            ))
        }
    };
    Ok(traj)
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Default)]
pub struct AlgebraReport {
    pub alpha: Option<f64>,
    pub alpha_refused: Option<String>,
    pub weyl_relation_defect: f64,
    pub vacuum_expectation_gap: f64,
    pub coherent_eigen_residual: f64,
    pub displacement_distance: f64,
    pub scattering_rewriting_ok: bool,
    pub min_positivity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub trajectory_hash: String,
    pub cross_checks_samples: usize,
    pub cross_checks_max_rel_gap: f64,
    pub classification: Option<DivergenceReportDoc>,
    pub spectrum_total: Option<f64>,
    pub spectrum_reference_omega: Option<f64>,
    pub algebra: Option<AlgebraReport>,
    pub compare: Option<CompareTable>,
    /// Full resolved configuration, defaults included.
    pub config: RunConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareTable {
    /// `(decade lower edge, decade upper edge, max relative gap)` rows.
    pub rows: Vec<[f64; 3]>,
    pub tolerance: f64,
    pub representations: Vec<String>,
}

pub struct RunOutcome {
    pub report: Report,
    pub exit_code: i32,
}

fn map_error(e: &bremweyl::Error) -> i32 {
    match e {
        bremweyl::Error::Accuracy { .. } => EXIT_ACCURACY,
        bremweyl::Error::Inconclusive { .. } => EXIT_INCONCLUSIVE,
        _ => EXIT_VALIDATION,
    }
}

/// Execute the pipeline. Writes `report.toml`, `trajectory.json`,
/// `amplitude.csv` and (when enabled) `spectrum.csv` / `angular.csv` /
/// `compare.csv` under the output directory.
pub fn run(config: &RunConfig, serial: bool) -> anyhow::Result<RunOutcome> {
    let traj = build_trajectory(&config.trajectory)?;
    let out_dir = &config.output.directory;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    // resolved inputs are persisted next to the results
    std::fs::write(
        out_dir.join("trajectory.json"),
        serde_json::to_string_pretty(&traj.to_doc())?,
    )?;

    let grid = Arc::new(SphericalGrid::<f64>::new(config.grid.clone())?);
    let opts = ComputeOptions {
        strategy: config.analysis.strategy,
        parallel: !serial,
        omega_switch: config.tolerances.omega_switch,
        cross_check_rtol: config.tolerances.cross_check_rel,
        seed: config.analysis.seed,
        ..Default::default()
    };
    let mut report = Report {
        tool: format!("bremweyl {}", env!("CARGO_PKG_VERSION")),
        trajectory_hash: String::new(),
        cross_checks_samples: 0,
        cross_checks_max_rel_gap: 0.0,
        classification: None,
        spectrum_total: None,
        spectrum_reference_omega: None,
        algebra: None,
        compare: None,
        config: config.clone(),
    };
    let amp = match compute_amplitude(&traj, &grid, &opts) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            write_report(out_dir, &report)?;
            return Ok(RunOutcome {
                report,
                exit_code: map_error(&e),
            });
        }
    };
    report.trajectory_hash = format!("{:016x}", amp.trajectory_hash());
    report.cross_checks_samples = amp.cross_checks().checked;
    report.cross_checks_max_rel_gap = amp.cross_checks().max_rel_gap;

    if config.analysis.amplitude_csv {
        let file = std::fs::File::create(out_dir.join("amplitude.csv"))?;
        amp.write_csv(std::io::BufWriter::new(file))?;
    }

    let windows = FitWindows {
        uv: config.tolerances.uv_window,
        ir: config.tolerances.ir_window,
    };
    let thresholds = ClassifyThresholds {
        theta_rel: config.tolerances.theta_rel,
        residual_factor: config.tolerances.residual_factor,
    };

    let mut exit_code = EXIT_OK;
    if config.analysis.classify {
        match classify(&amp, windows, thresholds) {
            Ok(r) => report.classification = Some(r.to_doc()),
            Err(e) => {
                eprintln!("error: {e}");
                write_report(out_dir, &report)?;
                return Ok(RunOutcome {
                    report,
                    exit_code: map_error(&e),
                });
            }
        }
    }

    if config.analysis.spectrum {
        let sp = spectrum(&amp, config.analysis.spectrum_reference_omega);
        report.spectrum_total = Some(sp.total);
        report.spectrum_reference_omega = Some(sp.angular_reference_omega);
        let file = std::fs::File::create(out_dir.join("spectrum.csv"))?;
        sp.write_csv(std::io::BufWriter::new(file))?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(out_dir.join("angular.csv"))?);
        writeln!(w, "cos_theta,phi,intensity")?;
        for (node, v) in grid.angular_nodes().iter().zip(&sp.angular_distribution) {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", node.cos_theta, node.phi, v)?;
        }
    }

    if config.analysis.algebra_check {
        report.algebra = Some(algebra_check(config, &amp, windows, thresholds)?);
    }

    if config.analysis.compare_representations {
        match compare_representations(config, &traj) {
            Ok(table) => {
                let worst = table.rows.iter().map(|r| r[2]).fold(0.0f64, f64::max);
                if worst > table.tolerance {
                    exit_code = EXIT_ACCURACY;
                }
                let mut w =
                    std::io::BufWriter::new(std::fs::File::create(out_dir.join("compare.csv"))?);
                writeln!(w, "decade_lo,decade_hi,max_rel_gap")?;
                for row in &table.rows {
                    writeln!(w, "{:.8e},{:.8e},{:.8e}", row[0], row[1], row[2])?;
                }
                report.compare = Some(table);
            }
            Err(RefusalOrError::Refusal(msg)) => {
                write_report(out_dir, &report)?;
                eprintln!("compare-representations refused: {msg}");
                return Ok(RunOutcome {
                    report,
                    exit_code: EXIT_VALIDATION,
                });
            }
            Err(RefusalOrError::Other(e)) => return Err(e),
        }
    }

    write_report(out_dir, &report)?;
    Ok(RunOutcome { report, exit_code })
}

fn write_report(out_dir: &Path, report: &Report) -> anyhow::Result<()> {
    let text = toml::to_string_pretty(report).context("serializing report")?;
    std::fs::write(out_dir.join("report.toml"), text)?;
    Ok(())
}

fn algebra_check(
    config: &RunConfig,
    amp: &EmissionAmplitude<f64>,
    windows: FitWindows,
    thresholds: ClassifyThresholds,
) -> anyhow::Result<AlgebraReport> {
    use num_complex::Complex64;
    let n = config.analysis.fock_cutoff;
    let mut out = AlgebraReport::default();
    match weyl_fock::mode_reduce(amp, windows, thresholds) {
        Ok(alpha) => out.alpha = Some(alpha),
        Err(e) => out.alpha_refused = Some(e.to_string()),
    }
    let alpha = Complex64::new(out.alpha.unwrap_or(1.0).min(2.0), 0.0);

    let h1 = Complex64::new(0.5, 0.3);
    let h2 = Complex64::new(-0.4, 0.6);
    let lhs = weyl_fock::weyl_matrix(h1, n)
        .matrix
        .mul(&weyl_fock::weyl_matrix(h2, n).matrix);
    let phase = Complex64::from_polar(1.0, -0.5 * (h1.conj() * h2).im);
    let rhs = weyl_fock::weyl_matrix(h1 + h2, n).matrix.scaled(phase);
    out.weyl_relation_defect = lhs
        .sub(&rhs)
        .frobenius_norm_block(weyl_fock::bulk_block(n, 1.2));

    let vac = weyl_fock::TruncatedFockState::<f64>::vacuum(n);
    let w = weyl_fock::weyl_matrix(h1, n);
    let got = vac.inner(&w.apply(&vac));
    out.vacuum_expectation_gap = (got - Complex64::new((-h1.norm_sqr() / 4.0).exp(), 0.0)).norm();

    let coh = weyl_fock::coherent_state(alpha, n)?;
    let mut shifted = weyl_fock::annihilation::<f64>(n).apply(&coh);
    for (s, c) in shifted.amplitudes.iter_mut().zip(&coh.amplitudes) {
        *s -= alpha * c;
    }
    out.coherent_eigen_residual = shifted.norm();

    let s_op = weyl_fock::s_operator(alpha, n);
    let displaced = weyl_fock::TruncatedFockState {
        cutoff: n,
        amplitudes: s_op.matrix.adjoint().matvec(&vac.amplitudes),
    };
    out.displacement_distance = displaced.distance(&coh);

    out.scattering_rewriting_ok = [(0usize, 0usize), (1, 0), (1, 1), (2, 2)]
        .iter()
        .all(|&(m, k)| weyl_fock::scattering_amplitude(m, k, alpha, n).is_ok());

    // small randomized positivity sweep
    let mut state = config.analysis.seed ^ 0x5eed;
    let mut min_pos = f64::INFINITY;
    for _ in 0..20 {
        let k = 1 + (next_u64(&mut state) % 3) as usize;
        let mut vecs = Vec::new();
        for _ in 0..k {
            vecs.push([
                Complex64::new(unit(&mut state), unit(&mut state)),
                Complex64::new(unit(&mut state), unit(&mut state)),
                Complex64::new(unit(&mut state), unit(&mut state)),
            ]);
        }
        let grams: Vec<Vec<Complex64>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| (0..3).map(|c| vecs[i][c].conj() * vecs[j][c]).sum())
                    .collect()
            })
            .collect();
        let l = vec![Complex64::new(0.0, 0.0); k];
        let c: Vec<Complex64> = (0..k)
            .map(|_| Complex64::new(unit(&mut state), unit(&mut state)))
            .collect();
        let scale: f64 = c.iter().map(|v| v.norm_sqr()).sum();
        let val = bremweyl::fields::coherent_positivity_check(&l, &c, &grams)?;
        min_pos = min_pos.min(val / scale.max(1e-300));
    }
    out.min_positivity = min_pos;
    Ok(out)
}

// splitmix64: deterministic, dependency-free randomness for the CLI
fn next_u64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn unit(state: &mut u64) -> f64 {
    (next_u64(state) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

enum RefusalOrError {
    Refusal(String),
    Other(anyhow::Error),
}

/// Max relative discrepancy between applicable representations, per
/// frequency decade.
fn compare_representations(
    config: &RunConfig,
    traj: &Trajectory<f64>,
) -> Result<CompareTable, RefusalOrError> {
    let compact = traj.velocity_compact();
    let has_jump = traj.has_velocity_jump();
    let mut reps: Vec<&str> = Vec::new();
    if compact {
        reps.push("direct");
    }
    reps.push("ibp1");
    if !has_jump {
        reps.push("ibp2");
    }
    if reps.len() < 2 {
        return Err(RefusalOrError::Refusal(
            "trajectory admits a single representation; nothing to compare".into(),
        ));
    }
    let settings = OscSettings {
        rel_tol: config.tolerances.osc_rel,
        ..Default::default()
    };
    let [lo, hi] = config.analysis.compare_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(RefusalOrError::Other(anyhow!(
            "analysis.compare_range must be an increasing positive pair"
        )));
    }
    let decades = (hi / lo).log10().ceil() as usize;
    let mut state = config.analysis.seed;
    let mut rows = Vec::new();
    for d in 0..decades.max(1) {
        let a = lo * 10f64.powi(d as i32);
        let b = (a * 10.0).min(hi);
        let mut worst = 0.0f64;
        for _ in 0..config.analysis.momenta_per_decade.max(1) {
            let omega = a * (b / a).powf((next_u64(&mut state) >> 11) as f64 / (1u64 << 53) as f64);
            let dir = loop {
                let v = [unit(&mut state), unit(&mut state), unit(&mut state)];
                let n = bremweyl::vec3::norm(&v);
                if n > 0.1 && n <= 1.0 {
                    break bremweyl::vec3::scale(&v, 1.0 / n);
                }
            };
            let p = bremweyl::vec3::scale(&dir, omega);
            let mut values = Vec::new();
            for rep in &reps {
                let v = match *rep {
                    "direct" => amplitude_direct(traj, &p, &settings),
                    "ibp1" => amplitude_ibp1(traj, &p, &settings),
                    _ => amplitude_ibp2(traj, &p, &settings),
                }
                .map_err(|e| RefusalOrError::Other(anyhow!("{e}")))?;
                values.push(v);
            }
            for i in 0..values.len() {
                for j in (i + 1)..values.len() {
                    let diff =
                        bremweyl::vec3::cnorm(&bremweyl::vec3::csub(&values[i], &values[j]));
                    let mag =
                        bremweyl::vec3::cnorm(&values[i]).max(bremweyl::vec3::cnorm(&values[j]));
                    if diff > 0.0 && mag > 0.0 {
                        worst = worst.max(diff / mag);
                    }
                }
            }
        }
        rows.push([a, b, worst]);
        if b >= hi {
            break;
        }
    }
    Ok(CompareTable {
        rows,
        tolerance: config.tolerances.compare_rel,
        representations: reps.iter().map(|s| s.to_string()).collect(),
    })
}

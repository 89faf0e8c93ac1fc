use bremweyl_cli::{load_config, run, RunConfig, EXIT_VALIDATION};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "bremweyl",
    version,
    about = "Radiation of a quantized photon field by a classical point charge: emission, divergence classification, spectra and algebra checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides output.directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Bit-reproducible single-threaded mode.
    #[arg(long, global = true)]
    serial: bool,

    /// Override a configuration key, e.g. --set grid.n_theta=48.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the emission amplitude and classify the out-state.
    Classify,
    /// Compute the amplitude and emit spectrum/angular CSVs.
    EmitSpectrum,
    /// Run the truncated Fock-space algebra verification.
    AlgebraCheck,
    /// Tabulate per-decade gaps between amplitude representations.
    CompareRepresentations,
}

fn main() {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_VALIDATION
        }
    };
    std::process::exit(code);
}

fn execute(cli: &Cli) -> anyhow::Result<i32> {
    let config_path = cli
        .config
        .clone()
        .ok_or_else(|| anyhow::anyhow!("--config PATH is required"))?;
    let mut config: RunConfig = load_config(&config_path, &cli.set)?;
    if let Some(out) = &cli.out {
        config.output.directory = out.clone();
    }
    // each subcommand forces its analysis stage on
    match cli.command {
        Command::Classify => config.analysis.classify = true,
        Command::EmitSpectrum => config.analysis.spectrum = true,
        Command::AlgebraCheck => {
            config.analysis.algebra_check = true;
            config.analysis.classify = true;
        }
        Command::CompareRepresentations => config.analysis.compare_representations = true,
    }
    let outcome = run(&config, cli.serial)?;
    summarize(&outcome.report);
    Ok(outcome.exit_code)
}

fn summarize(report: &bremweyl_cli::Report) {
    if let Some(c) = &report.classification {
        println!(
            "classification: {} (b_uv = {:.4e}, b_ir = {:.4e}, amplitude exponent {:.3})",
            c.classification, c.b_uv, c.b_ir, c.uv_amplitude_exponent
        );
        match c.photon_number {
            Some(n) => println!("photon number: {n:.6e}"),
            None => println!("photon number: withheld (non-Fock out-state)"),
        }
    }
    if let Some(total) = report.spectrum_total {
        println!("spectrum total: {total:.6e}");
    }
    if let Some(a) = &report.algebra {
        match (a.alpha, &a.alpha_refused) {
            (Some(alpha), _) => println!("coherent occupation alpha = {alpha:.6e}"),
            (None, Some(reason)) => println!("alpha: {reason}"),
            _ => {}
        }
        println!(
            "algebra: weyl defect {:.2e}, vacuum gap {:.2e}, eigen residual {:.2e}, displacement {:.2e}, scattering ok = {}, min positivity {:.2e}",
            a.weyl_relation_defect,
            a.vacuum_expectation_gap,
            a.coherent_eigen_residual,
            a.displacement_distance,
            a.scattering_rewriting_ok,
            a.min_positivity
        );
    }
    if let Some(t) = &report.compare {
        println!("representations compared: {}", t.representations.join(", "));
        for row in &t.rows {
            let status = if row[2] <= t.tolerance { "ok" } else { "EXCEEDS" };
            println!(
                "  omega in [{:.3e}, {:.3e}]: max relative gap {:.3e} ({status})",
                row[0], row[1], row[2]
            );
        }
    }
    println!(
        "cross-checks: {} samples, max relative gap {:.3e}",
        report.cross_checks_samples, report.cross_checks_max_rel_gap
    );
}

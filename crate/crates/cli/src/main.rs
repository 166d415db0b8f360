//! `risim` — config-driven outage sweeps for the multi-RIS uplink simulator.
//!
//! Subcommands: `sweep` (Monte-Carlo curves + analytical overlays),
//! `analyze` (analytical curves only), `validate` (parse and print derived
//! quantities), `bench` (relative per-realization scheme timing).
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime/I-O error.
//! `RISIM_THREADS` caps the worker-thread count; results are identical for
//! any value.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use risim_core::analysis::{fit_user, moments_ak};
use risim_core::config::SystemConfig;
use risim_core::schemes::Scheme;
use risim_core::simkit::{
    analysis_positions, analytic_curve, build_fading, run_sweep, timing_bench, OutageCurve,
};

#[derive(Parser)]
#[command(name = "risim", version, about = "Multi-RIS uplink outage simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo power sweep and write one CSV per scheme.
    Sweep {
        /// Experiment config (TOML).
        config: PathBuf,
        /// Output directory for CSVs and the run manifest.
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Write the analytical curves (no simulation).
    Analyze {
        config: PathBuf,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Parse, validate, and print derived quantities.
    Validate { config: PathBuf },
    /// Mean per-realization evaluation time of each configured scheme.
    Bench { config: PathBuf },
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<risim_core::Error> for CliError {
    fn from(e: risim_core::Error) -> Self {
        match e {
            risim_core::Error::Config(m) | risim_core::Error::Domain(m) => CliError::Config(m),
            risim_core::Error::Convergence(m) => CliError::Runtime(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("RISIM_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { config, out_dir } => cmd_sweep(&config, &out_dir),
        Command::Analyze { config, out_dir } => cmd_analyze(&config, &out_dir),
        Command::Validate { config } => cmd_validate(&config),
        Command::Bench { config } => cmd_bench(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Config(m) => eprintln!("configuration error:\n{m}"),
                CliError::Runtime(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(path: &Path) -> Result<SystemConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let cfg = SystemConfig::from_toml_str(&text).map_err(CliError::from)?;
    cfg.validate().map_err(|issues| CliError::Config(issues.join("\n")))?;
    Ok(cfg)
}

#[derive(Serialize)]
struct MomentRecord {
    user: usize,
    mu1: f64,
    mu2: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Serialize)]
struct RunManifest {
    /// SHA-256 of the canonicalized config, hex; recomputable from the
    /// config copy stored next to the outputs.
    config_hash: String,
    seed: u64,
    tool_version: String,
    started: String,
    finished: String,
    output_files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_user_moments: Option<Vec<MomentRecord>>,
}

fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

fn format_cell(v: f64) -> String {
    format!("{v}")
}

/// Run `body`, then write the manifest regardless of the outcome so partial
/// runs still leave a record.
fn with_manifest<F>(
    cfg: &SystemConfig,
    out_dir: &Path,
    moments: Option<Vec<MomentRecord>>,
    body: F,
) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<String>) -> Result<(), CliError>,
{
    fs::create_dir_all(out_dir)?;
    let canonical = cfg.to_canonical_toml();
    let config_copy = out_dir.join("config.canonical.toml");
    fs::write(&config_copy, &canonical)?;
    let mut output_files = vec![config_copy.display().to_string()];
    let started = chrono::Utc::now().to_rfc3339();

    let outcome = body(&mut output_files);

    let manifest = RunManifest {
        config_hash: sha256_hex(&canonical),
        seed: cfg.run.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        output_files,
        per_user_moments: moments,
    };
    let manifest_path = out_dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap() + "\n")?;
    outcome
}

fn write_sweep_csv(path: &Path, curve: &OutageCurve) -> Result<(), CliError> {
    let mut text = String::from("power_gain_db,op_estimate,ci_halfwidth,op_analytical\n");
    for (i, p) in curve.points.iter().enumerate() {
        let analytic = curve
            .analytical
            .as_ref()
            .map(|a| format_cell(a[i].op))
            .unwrap_or_default();
        if p.censored {
            // censored: no claimed estimate, only the grid point and overlay
            let _ = writeln!(text, "{},,,{analytic}", format_cell(p.power_gain_db));
        } else {
            let _ = writeln!(
                text,
                "{},{},{},{analytic}",
                format_cell(p.power_gain_db),
                format_cell(p.op_estimate),
                format_cell(p.ci_halfwidth)
            );
        }
    }
    fs::write(path, text)?;
    Ok(())
}

fn cmd_sweep(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    with_manifest(&cfg, out_dir, None, |output_files| {
        let curves = run_sweep(&cfg)?;
        for curve in &curves {
            for idx in curve.inversion_flags() {
                eprintln!(
                    "warning: {} estimate rises beyond CI overlap at grid point {idx}",
                    curve.scheme
                );
            }
            let path = out_dir.join(format!("sweep_{}.csv", curve.scheme));
            write_sweep_csv(&path, curve)?;
            output_files.push(path.display().to_string());
        }
        Ok(())
    })
}

fn cmd_analyze(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let positions = analysis_positions(&cfg);
    let topo = cfg.topology();
    let fading =
        build_fading(&topo, &positions, cfg.fading.m, cfg.fading.ris_bs_l0_db, cfg.fading.ris_bs_alpha)
            .map_err(CliError::from)?;
    let mut fits = Vec::new();
    let mut moments = Vec::new();
    for user in 0..topo.num_users {
        let (mu1, mu2) = moments_ak(&fading, user);
        let fit = fit_user(&fading, user).map_err(CliError::from)?;
        moments.push(MomentRecord { user, mu1, mu2, alpha: fit.alpha(), beta: fit.beta() });
        fits.push(fit);
    }
    let grid = cfg.power.gain_sweep_db.resolve().map_err(CliError::from)?;

    with_manifest(&cfg, out_dir, Some(moments), |output_files| {
        for scheme in [Scheme::Su, Scheme::Or, Scheme::Ir] {
            let points = analytic_curve(&cfg, scheme, &fits, &grid)?
                .expect("su/or/ir overlays are always defined");
            let with_se = scheme == Scheme::Ir;
            let mut text = String::from(if with_se {
                "power_gain_db,op_analytical,oracle_se\n"
            } else {
                "power_gain_db,op_analytical\n"
            });
            for p in &points {
                if with_se {
                    let _ = writeln!(
                        text,
                        "{},{},{}",
                        format_cell(p.power_gain_db),
                        format_cell(p.op),
                        format_cell(p.oracle_se.unwrap_or(0.0))
                    );
                } else {
                    let _ =
                        writeln!(text, "{},{}", format_cell(p.power_gain_db), format_cell(p.op));
                }
            }
            let name = match scheme {
                Scheme::Ir => "analytic_ir_bound.csv".to_string(),
                s => format!("analytic_{s}.csv"),
            };
            let path = out_dir.join(name);
            fs::write(&path, text)?;
            output_files.push(path.display().to_string());
        }
        Ok(())
    })
}

fn cmd_validate(config_path: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let topo = cfg.topology();
    let noise_w = cfg.noise_power_watts();
    let grid = cfg.power.gain_sweep_db.resolve().map_err(CliError::from)?;
    println!("valid: {}", config_path.display());
    println!(
        "M = {} elements across {} surfaces",
        topo.total_elements(),
        topo.num_surfaces()
    );
    println!("noise power = {:.1} dBm ({noise_w:.4e} W)", 10.0 * noise_w.log10() + 30.0);
    println!(
        "sweep: {} points, {:.1} dB to {:.1} dB on top of {} W",
        grid.len(),
        grid.first().unwrap(),
        grid.last().unwrap(),
        cfg.power.pu_min_w
    );
    println!(
        "schemes: {}",
        cfg.run.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
    );
    let positions = analysis_positions(&cfg);
    let fading =
        build_fading(&topo, &positions, cfg.fading.m, cfg.fading.ris_bs_l0_db, cfg.fading.ris_bs_alpha)
            .map_err(CliError::from)?;
    for s in 0..topo.num_surfaces() {
        println!(
            "surface {s}: N = {}, omega_f = {:.2} dB",
            topo.elements_per_surface[s],
            10.0 * fading.ris_bs(s).omega().log10()
        );
    }
    let positions_note = if cfg.topology.user_positions.is_some() {
        "fixed"
    } else {
        "seed-derived"
    };
    for (k, p) in positions.iter().enumerate() {
        let dist = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let omega_g: Vec<String> = (0..topo.num_surfaces())
            .map(|s| format!("{:.2}", 10.0 * fading.ris_user(s, k).omega().log10()))
            .collect();
        println!(
            "user {k} ({positions_note}): d_bs = {dist:.1} m, omega_d = {:.2} dB, omega_g dB = [{}]",
            10.0 * fading.direct(k).omega().log10(),
            omega_g.join(", ")
        );
    }
    Ok(())
}

fn cmd_bench(config_path: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let rows = timing_bench(&cfg, &cfg.run.schemes).map_err(CliError::from)?;
    println!("scheme    mean_ms_per_realization");
    for (scheme, ms) in rows {
        println!("{:<9} {ms:.6}", scheme.name());
    }
    println!("(absolute values are hardware-dependent; only the ordering is meaningful)");
    Ok(())
}

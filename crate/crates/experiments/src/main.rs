use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use vcpsense::detector::cfar_detect;
use vcpsense_experiments::config::{load_config, ExperimentConfig};
use vcpsense_experiments::output::{read_rdm, write_rdm, write_table};
use vcpsense_experiments::presets::{prepare, Overrides};
use vcpsense_experiments::simulate::simulate;

#[derive(Parser)]
#[command(name = "vcpsense", version, about = "Sub-block VCP sensing simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// TOML experiment configuration; desk defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Block length relative to the full system (N = round(143 * scale)).
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Lemmas,
    Propositions,
    All,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one trial of a configuration and dump its RDMs as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trial index to simulate.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Run a figure preset.
    Sweep {
        #[arg(long)]
        preset: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run the lemma and/or proposition validation suites.
    Validate {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// CA-CFAR detection on a dumped RDM.
    Cfar {
        /// RDM CSV written by `simulate`.
        #[arg(long)]
        rdm: PathBuf,
        /// Config supplying the CFAR parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the false-alarm probability.
        #[arg(long)]
        pf: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn base_config(path: &Option<PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None => Ok(ExperimentConfig::desk_default()),
    }
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        seed: c.seed,
        trials: c.trials,
        scale: c.scale,
    }
}

fn run_preset(name: &str, base: &ExperimentConfig, c: &Common) -> Result<()> {
    let prepared = prepare(name, base, &overrides(c))?;
    let r = &prepared.resolved;
    log::info!("{name}: N = {}, trials = {}, seed = {}", r.params.n, r.trials, r.seed);
    let table = prepared.run()?;
    let mut resolved_cfg = base.clone();
    resolved_cfg.system = r.params;
    resolved_cfg.trials = r.trials;
    resolved_cfg.seed = r.seed;
    resolved_cfg.scale = r.scale;
    resolved_cfg.preset = Some(name.into());
    let files = write_table(&table, &c.out, r.trials, r.seed, serde_json::to_value(&resolved_cfg)?)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn simulate_cmd(c: &Common, trial: u64) -> Result<()> {
    let mut cfg = base_config(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(s) = c.scale {
        cfg.system.n = ((vcpsense_experiments::presets::FULL_N as f64 * s).round() as usize).max(1);
    }
    std::fs::create_dir_all(&c.out).with_context(|| format!("cannot create {}", c.out.display()))?;
    for snap in simulate(&cfg, trial)? {
        let path = c.out.join(format!("{}.csv", snap.stem()));
        write_rdm(&snap.rdm, &path)?;
        println!("{}\tsinr_db={:.2}", path.display(), 10.0 * snap.sinr.sinr.log10());
    }
    Ok(())
}

fn cfar_cmd(rdm_path: &Path, config: &Option<PathBuf>, pf: Option<f64>, out: &Path) -> Result<()> {
    let mut params = base_config(config)?.cfar;
    if let Some(pf) = pf {
        params.pf = pf;
    }
    let rdm = read_rdm(rdm_path)?;
    let dets = cfar_detect(&rdm, &params)?;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let stem = rdm_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "rdm".into());
    let path = out.join(format!("{stem}__detections.csv"));
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["k", "l", "power", "threshold", "tau_s", "nu_hz"])?;
    for d in &dets {
        w.write_record([
            d.k_star.to_string(),
            d.l_star.to_string(),
            format!("{:e}", d.power),
            format!("{:e}", d.threshold),
            format!("{:e}", d.tau_hat),
            format!("{:e}", d.nu_hat),
        ])?;
    }
    w.flush()?;
    println!("{}\t{} detections", path.display(), dets.len());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate { common, trial } => simulate_cmd(&common, trial),
        Cmd::Sweep { preset, common } => run_preset(&preset, &base_config(&common.config)?, &common),
        Cmd::Validate { suite, common } => {
            let base = base_config(&common.config)?;
            let names: &[&str] = match suite {
                Suite::Lemmas => &["lemma_validation"],
                Suite::Propositions => &["proposition_validation"],
                Suite::All => &["lemma_validation", "proposition_validation"],
            };
            for n in names {
                run_preset(n, &base, &common)?;
            }
            Ok(())
        }
        Cmd::Cfar { rdm, config, pf, out } => {
            if let Some(pf) = pf {
                if !(pf > 0.0 && pf < 1.0) {
                    bail!("--pf {pf} outside (0, 1)");
                }
            }
            cfar_cmd(&rdm, &config, pf, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

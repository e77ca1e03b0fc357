//! CSV and manifest emission.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use vcpsense::rdm::{Rdm, RdmKind, RdmOrigin};

/// Canonical result row. Column order is part of the interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub preset: String,
    pub sweep_name: String,
    pub curves: Vec<Curve>,
}

impl ResultTable {
    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    /// Mean of `metric` at `sweep_value` on curve `name`.
    pub fn value(&self, name: &str, sweep_value: f64, metric: &str) -> Option<f64> {
        self.curve(name)?
            .rows
            .iter()
            .find(|r| r.metric == metric && (r.sweep_value - sweep_value).abs() < 1e-9)
            .map(|r| r.mean)
    }
}

pub const COLUMNS: [&str; 7] = ["sweep_name", "sweep_value", "metric", "mean", "stderr", "trials", "seed"];

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != COLUMNS {
        anyhow::bail!("{}: unexpected columns {:?}", path.display(), header);
    }
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub preset: &'a str,
    pub sweep_name: &'a str,
    pub seed: u64,
    pub trials: usize,
    pub doppler_sign: &'static str,
    pub files: Vec<String>,
    pub config: serde_json::Value,
}

pub const DOPPLER_SIGN: &str = "nu > 0 for approaching targets";

/// One CSV per curve plus `manifest.json`. Returns the CSV paths.
pub fn write_table(table: &ResultTable, out_dir: &Path, trials: usize, seed: u64, config: serde_json::Value) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut files = Vec::new();
    for c in &table.curves {
        let path = out_dir.join(format!("{}__{}.csv", table.preset, c.name));
        emit_csv(&c.rows, &path)?;
        files.push(path);
    }
    let manifest = Manifest {
        preset: &table.preset,
        sweep_name: &table.sweep_name,
        seed,
        trials,
        doppler_sign: DOPPLER_SIGN,
        files: files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
        config,
    };
    let path = out_dir.join(format!("{}__manifest.json", table.preset));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(files)
}

/// RDM dump: `#`-prefixed metadata lines, then `k,l,re,im` rows.
pub fn write_rdm(rdm: &Rdm, path: &Path) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!("# kind: {}\n", rdm.kind.as_str()));
    text.push_str(&format!("# origin: {}\n", rdm.origin.as_str()));
    text.push_str(&format!("# ndopp: {}\n", rdm.ndopp()));
    text.push_str(&format!("# ndelay: {}\n", rdm.ndelay()));
    text.push_str(&format!("# delay_bin_s: {:e}\n", rdm.delay_bin_s));
    text.push_str(&format!("# doppler_bin_hz: {:e}\n", rdm.doppler_bin_hz));
    text.push_str(&format!("# doppler_sign: {DOPPLER_SIGN}\n"));
    text.push_str("k,l,re,im\n");
    for ((k, l), v) in rdm.values.indexed_iter() {
        text.push_str(&format!("{k},{l},{:e},{:e}\n", v.re, v.im));
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_rdm(path: &Path) -> Result<Rdm> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut meta = std::collections::HashMap::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(m) = line.strip_prefix('#') {
            if let Some((k, v)) = m.split_once(':') {
                meta.insert(k.trim().to_owned(), v.trim().to_owned());
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let get = |k: &str| meta.get(k).with_context(|| format!("{}: missing `# {k}:` line", path.display()));
    let nk: usize = get("ndopp")?.parse()?;
    let nl: usize = get("ndelay")?.parse()?;
    let kind = match get("kind")?.as_str() {
        "ratio" => RdmKind::Ratio,
        "ccc" => RdmKind::Ccc,
        other => anyhow::bail!("unknown RDM kind `{other}`"),
    };
    let origin = match get("origin")?.as_str() {
        "cos" => RdmOrigin::Cos,
        "vcp" => RdmOrigin::Vcp,
        other => anyhow::bail!("unknown RDM origin `{other}`"),
    };
    let mut values = Array2::zeros((nk, nl));
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    for (i, rec) in rdr.deserialize::<(usize, usize, f64, f64)>().enumerate() {
        let (k, l, re, im) = rec.with_context(|| format!("{}: bad row {}", path.display(), i + 1))?;
        if k >= nk || l >= nl {
            anyhow::bail!("{}: bin ({k}, {l}) outside {nk}x{nl}", path.display());
        }
        values[[k, l]] = Complex64::new(re, im);
    }
    Ok(Rdm {
        values,
        delay_bin_s: get("delay_bin_s")?.parse()?,
        doppler_bin_hz: get("doppler_bin_hz")?.parse()?,
        kind,
        origin,
    })
}

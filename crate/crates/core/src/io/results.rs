//! Output directory layout: one CSV per statistic plus a run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::SummaryCurve;
use crate::inference::EnvelopeBand;

use super::tables::{create, io_err, write_curve_csv, CurveTable};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "run.conf";

/// One result file.
#[derive(Clone, Debug)]
pub enum Output {
    Curve { name: String, curve: SummaryCurve },
    Band { name: String, band: EnvelopeBand },
    /// Free-form numeric table; values use the curve number format.
    Table { name: String, header: Vec<String>, rows: Vec<Vec<f64>> },
}

impl Output {
    fn name(&self) -> &str {
        match self {
            Output::Curve { name, .. } | Output::Band { name, .. } | Output::Table { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub file: String,
    pub statistic: String,
    /// "curve", "envelope" or "table".
    pub kind: String,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub library: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    /// Values derived during the run (bandwidth, point count, ...).
    pub derived: BTreeMap<String, String>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>) -> Self {
        Self {
            library: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            derived: BTreeMap::new(),
            files: vec![],
        }
    }
}

/// File-system safe stem for a statistic name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes every output, then `run.conf` and `manifest.json` listing them.
pub fn write_results(out_dir: &Path, outputs: &[Output], manifest: &Manifest) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut manifest = manifest.clone();
    manifest.files.clear();
    let mut written = Vec::new();
    let mut used = std::collections::HashSet::new();
    for out in outputs {
        let file = format!("{}.csv", file_stem(out.name()));
        if !used.insert(file.clone()) {
            return Err(Error::domain(format!("two outputs map to the same file {file}")));
        }
        let path = out_dir.join(&file);
        let kind = match out {
            Output::Curve { curve, .. } => {
                write_curve_csv(&path, &CurveTable::from(curve))?;
                "curve"
            }
            Output::Band { band, .. } => {
                write_curve_csv(&path, &CurveTable::from(band))?;
                "envelope"
            }
            Output::Table { header, rows, .. } => {
                let mut text = header.join(",");
                text.push('\n');
                for row in rows {
                    let cells: Vec<String> = row.iter().map(|v| super::tables::format_number(*v)).collect();
                    text.push_str(&cells.join(","));
                    text.push('\n');
                }
                write_text(&path, &text)?;
                "table"
            }
        };
        manifest.files.push(FileEntry {
            file,
            statistic: out.name().to_string(),
            kind: kind.into(),
        });
        written.push(path);
    }
    let conf = out_dir.join(CONFIG_FILE);
    write_text(&conf, &super::config::render_key_values(&manifest.config))?;
    written.push(conf);
    let path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::domain(format!("cannot serialise manifest: {e}")))?;
    write_text(&path, &(json + "\n"))?;
    written.push(path);
    Ok(written)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::schema(format!("{}: {e}", path.display())))
}

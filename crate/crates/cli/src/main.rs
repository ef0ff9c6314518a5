use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fmark::io::{
    read_config_file, read_curve_csv, read_manifest, write_results, AnalysisConfig, Manifest, KEYS,
};
use fmark::pipeline::{load_data, run_envelope, run_estimate, write_data};
use fmark::Error;

#[derive(Parser)]
#[command(name = "fmark", version, about = "Point patterns with function-valued marks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a pattern and growth marks and write them as CSV.
    Simulate(RunArgs),
    /// Estimate the configured statistics and write one curve CSV each.
    Estimate(RunArgs),
    /// Compute Monte-Carlo envelopes for the configured statistics.
    Envelope(RunArgs),
    /// Summarise an output directory.
    Report {
        /// Directory written by estimate, envelope or simulate.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file with `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(short, long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated statistic names.
    #[arg(long)]
    statistics: Option<String>,
    #[arg(long)]
    pattern: Option<String>,
    /// Comma-separated marks files, one per channel.
    #[arg(long)]
    marks: Option<String>,
    #[arg(long)]
    process: Option<String>,
    /// 1-based channels h,l.
    #[arg(long)]
    channels: Option<String>,
    #[arg(long)]
    nsim: Option<String>,
    #[arg(long)]
    k_env: Option<String>,
    /// random_labeling or csr.
    #[arg(long)]
    null: Option<String>,
}

impl RunArgs {
    fn key_map(&self) -> Result<BTreeMap<String, String>, Error> {
        let mut map = match &self.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("out", &self.out),
            ("seed", &self.seed),
            ("statistics", &self.statistics),
            ("pattern", &self.pattern),
            ("marks", &self.marks),
            ("process", &self.process),
            ("channels", &self.channels),
            ("nsim", &self.nsim),
            ("k_env", &self.k_env),
            ("null", &self.null),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Schema(format!("unknown key {k:?}")));
            }
            map.insert(k.to_string(), v.trim().to_string());
        }
        Ok(map)
    }
}

fn init_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("FMARK_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Domain(format!("FMARK_THREADS must be a positive integer, got {v:?}")))?;
        // fails only if a pool exists already, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    init_threads()?;
    let (name, args) = match &cli.command {
        Command::Report { dir } => return report(dir),
        Command::Simulate(a) => ("simulate", a),
        Command::Estimate(a) => ("estimate", a),
        Command::Envelope(a) => ("envelope", a),
    };
    let map = args.key_map()?;
    let cfg = AnalysisConfig::from_map(&map)?;
    let data = load_data(&cfg)?;
    let mut manifest = Manifest::new(name, cfg.seed, cfg.resolved.clone());
    let outputs = match name {
        "simulate" => {
            if !matches!(cfg.source, fmark::io::DataSource::Simulation { .. }) {
                return Err(Error::Domain("simulate needs a process".into()));
            }
            write_data(&cfg.out_dir, &data)?;
            manifest
                .derived
                .insert("n_points".into(), data.pattern.len().to_string());
            vec![]
        }
        "estimate" => {
            let (outputs, derived) = run_estimate(&cfg, &data)?;
            manifest.derived = derived;
            outputs
        }
        _ => {
            let (outputs, derived) = run_envelope(&cfg, &data)?;
            manifest.derived = derived;
            outputs
        }
    };
    let files = write_results(&cfg.out_dir, &outputs, &manifest)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn report(dir: &Path) -> Result<(), Error> {
    let m = read_manifest(dir)?;
    println!("{} {} {} seed={}", m.library, m.version, m.command, m.seed);
    for (k, v) in &m.derived {
        println!("  {k} = {v}");
    }
    if m.files.is_empty() {
        return Ok(());
    }
    println!(
        "{:<36} {:<9} {:>6} {:>8} {:>13} {:>13} {:>8}",
        "statistic", "kind", "rows", "defined", "min", "max", "outside"
    );
    for f in &m.files {
        let path = dir.join(&f.file);
        if f.kind == "table" {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            println!("{:<36} {:<9} {:>6}", f.statistic, f.kind, text.lines().count().saturating_sub(1));
            continue;
        }
        let t = read_curve_csv(&path)?;
        let defined: Vec<f64> = t.observed.iter().copied().filter(|v| v.is_finite()).collect();
        let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
        let max = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let outside = match (&t.lower, &t.upper) {
            (Some(lo), Some(hi)) => {
                let mut n = 0;
                let mut out = 0;
                for k in 0..t.r.len() {
                    let (o, a, b) = (t.observed[k], lo[k], hi[k]);
                    if o.is_finite() && a.is_finite() && b.is_finite() {
                        n += 1;
                        if o < a || o > b {
                            out += 1;
                        }
                    }
                }
                format!("{out}/{n}")
            }
            _ => "-".into(),
        };
        println!(
            "{:<36} {:<9} {:>6} {:>8} {:>13.6e} {:>13.6e} {:>8}",
            f.statistic,
            f.kind,
            t.r.len(),
            defined.len(),
            min,
            max,
            outside
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

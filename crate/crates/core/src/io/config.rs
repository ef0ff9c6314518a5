//! Flat `key = value` analysis configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::{
    ChatRule, Characteristic, EdgeRule, EstimationConfig, Kernel, MeanNormalization, Normalization,
    PairSelection, UBase, Weight,
};
use crate::geometry::{DistanceGrid, Topology, Window};
use crate::inference::{EnvelopeOptions, NullModel};
use crate::simulate::{stream_rng, GrowthMode, GrowthParams, InitialValues, Process, SimulationSpec, StraussSize};
use crate::testfn::TestFunction;

use super::tables::io_err;

/// A requested output: a curve-valued characteristic or the neighbour index table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatisticSpec {
    Curve(Characteristic),
    Indices,
}

fn weight_name(w: Weight) -> &'static str {
    match w {
        Weight::Unit => "unit",
        Weight::Test(f) => f.short_name(),
    }
}

fn parse_weight(s: &str) -> Option<Weight> {
    if s == "unit" {
        Some(Weight::Unit)
    } else {
        TestFunction::from_short_name(s).map(Weight::Test)
    }
}

fn ubase_name(b: UBase) -> &'static str {
    match b {
        UBase::KappaHl => "kappa_hl",
        UBase::KappaHDot => "kappa_hdot",
        UBase::KappaDotL => "kappa_dotl",
        UBase::GammaHl => "gamma_hl",
        UBase::TauHl => "tau_hl",
    }
}

fn normalization_name(n: Normalization) -> &'static str {
    match n {
        Normalization::CHat => "chat",
        Normalization::Unit => "unit",
        Normalization::MeanProduct => "mean_product",
        Normalization::MeanH => "mean_h",
        Normalization::MeanL => "mean_l",
    }
}

impl StatisticSpec {
    /// Parses names such as `gamma_hl`, `K_tf:t3`, `U:gamma_hl`, `kappa_tf:t1:chat` or `indices`.
    pub fn parse(s: &str) -> Result<Self> {
        use Characteristic as C;
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::domain(format!("unknown statistic {s:?}"));
        let arg = |k: usize| parts.get(k).copied();
        let ch = match parts[0] {
            "indices" => return Ok(StatisticSpec::Indices),
            "gamma_hl" => C::MarkVariogram,
            "gamma_hl_raw" => C::MarkVariogramRaw,
            "kappa_hl" => C::MarkCorrelation,
            "tau_hl" => C::Differentiation,
            "c_hl" => C::MeanProduct,
            "cov_sto" => C::CovStoyan,
            "cov_cre" => C::CovCressie,
            "corr_ish" => C::Isham,
            "corr_ish_cond" => C::IshamConditional,
            "kappa_bei" => C::Beisbart,
            "kappa_hdot" => C::RMarkH,
            "kappa_dotl" => C::RMarkL,
            "rho_ground" => C::GroundProductDensity,
            "g_ground" => C::GroundPcf,
            "K_ground" => C::GroundK,
            "K_ground_centered" => C::GroundKCentered,
            "U" => C::U(match arg(1).unwrap_or("kappa_hl") {
                "kappa_hl" => UBase::KappaHl,
                "kappa_hdot" => UBase::KappaHDot,
                "kappa_dotl" => UBase::KappaDotL,
                "gamma_hl" => UBase::GammaHl,
                "tau_hl" => UBase::TauHl,
                _ => return Err(bad()),
            }),
            "g_tf" | "K_tf" | "L_tf" => {
                let w = parse_weight(arg(1).unwrap_or("t3")).ok_or_else(bad)?;
                match parts[0] {
                    "g_tf" => C::MarkWeightedPcf(w),
                    "K_tf" => C::MarkWeightedK(w),
                    _ => C::MarkWeightedL(w),
                }
            }
            "rho_tf" => C::TfProductDensity(TestFunction::from_short_name(arg(1).ok_or_else(bad)?).ok_or_else(bad)?),
            "kappa_tf" => {
                let func = TestFunction::from_short_name(arg(1).ok_or_else(bad)?).ok_or_else(bad)?;
                let normalization = match arg(2).unwrap_or("chat") {
                    "chat" => Normalization::CHat,
                    "unit" => Normalization::Unit,
                    "mean_product" => Normalization::MeanProduct,
                    "mean_h" => Normalization::MeanH,
                    "mean_l" => Normalization::MeanL,
                    _ => return Err(bad()),
                };
                C::Kappa { func, normalization }
            }
            _ => return Err(bad()),
        };
        let max_parts = match parts[0] {
            "kappa_tf" => 3,
            "U" | "g_tf" | "K_tf" | "L_tf" | "rho_tf" => 2,
            _ => 1,
        };
        if parts.len() > max_parts {
            return Err(bad());
        }
        Ok(StatisticSpec::Curve(ch))
    }

    /// Canonical name; `parse(name())` returns the same spec.
    pub fn name(&self) -> String {
        use Characteristic as C;
        let ch = match self {
            StatisticSpec::Indices => return "indices".into(),
            StatisticSpec::Curve(c) => *c,
        };
        match ch {
            C::U(b) => format!("U:{}", ubase_name(b)),
            C::MarkWeightedPcf(w) => format!("g_tf:{}", weight_name(w)),
            C::MarkWeightedK(w) => format!("K_tf:{}", weight_name(w)),
            C::MarkWeightedL(w) => format!("L_tf:{}", weight_name(w)),
            C::TfProductDensity(f) => format!("rho_tf:{}", f.short_name()),
            C::Kappa { func, normalization } => {
                format!("kappa_tf:{}:{}", func.short_name(), normalization_name(normalization))
            }
            other => other.kind().id().to_string(),
        }
    }
}

/// Where the analysed data comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Files { pattern: PathBuf, marks: Vec<PathBuf> },
    /// Simulated points, and growth marks unless `growth` is `None`.
    Simulation {
        spec: SimulationSpec,
        growth: Option<GrowthParams>,
    },
}

/// Everything a run needs; channels are 0-based here and 1-based in files.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub source: DataSource,
    pub estimation: EstimationConfig,
    pub statistics: Vec<StatisticSpec>,
    pub channels: (usize, usize),
    pub selection: PairSelection,
    pub k_max: usize,
    pub envelope: EnvelopeOptions,
    pub null: NullModel,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Every key with its effective value, defaults included.
    pub resolved: BTreeMap<String, String>,
}

/// Keys accepted in config files and `--set` overrides.
pub const KEYS: &[&str] = &[
    "pattern", "marks", "window", "topology", "process", "intensity", "parent_intensity", "mean_offspring",
    "sigma", "strauss_beta", "strauss_target", "strauss_q", "strauss_r", "strauss_steps", "growth_mode",
    "growth_c", "growth_s_h", "growth_s_l", "growth_beta_h", "growth_beta_l", "growth_d", "growth_dt",
    "growth_steps", "growth_init", "kernel", "bandwidth", "edge", "r_max", "r_count", "lag", "chat",
    "normalization", "keep_pointwise", "statistics", "channels", "types", "local", "k_max", "nsim", "k_env",
    "null", "out", "seed",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::schema(format!("{origin}:{}: expected key = value, found {line:?}", k + 1))
        })?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::schema(format!("{origin}:{}: unknown key {key:?}", k + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_key_values(&text, &path.display().to_string())
}

/// Renders a key map in the config-file format.
pub fn render_key_values(map: &BTreeMap<String, String>) -> String {
    map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

struct Keys<'a> {
    map: &'a BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Keys<'_> {
    fn raw(&mut self, key: &str) -> Option<String> {
        let v = self.map.get(key).cloned();
        if let Some(v) = &v {
            self.resolved.insert(key.into(), v.clone());
        }
        v
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::domain(format!("invalid value for {key}: {v:?}"))),
        }
    }

    fn or<T: std::str::FromStr + ToString>(&mut self, key: &str, default: T) -> Result<T> {
        let v = self.get(key)?.unwrap_or(default);
        self.resolved.insert(key.into(), v.to_string());
        Ok(v)
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::domain(format!("invalid value for {key}: {v:?}")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn set(&mut self, key: &str, value: String) {
        self.resolved.insert(key.into(), value);
    }
}

/// Seeds of the independent random parts of a run, split from the master seed.
pub fn derived_seed(master: u64, part: u64) -> u64 {
    stream_rng(master, part).random()
}

const SEED_POINTS: u64 = 1;
const SEED_MARKS: u64 = 2;
const SEED_ENVELOPE: u64 = 3;

impl AnalysisConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::schema(format!("unknown key {k:?}")));
        }
        let mut keys = Keys {
            map,
            resolved: BTreeMap::new(),
        };
        let seed: u64 = keys.or("seed", 1)?;
        let simulated = map.contains_key("process");
        let has_files = map.contains_key("pattern") || map.contains_key("marks");
        if simulated == has_files {
            return Err(Error::domain(
                "exactly one of input files (pattern, marks) or a simulation (process) must be given",
            ));
        }

        let ext = keys.list::<f64>("window")?.unwrap_or(vec![0.0, 1.0, 0.0, 1.0]);
        if ext.len() != 4 {
            return Err(Error::domain("window takes x_min,x_max,y_min,y_max"));
        }
        keys.set("window", ext.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        let topology = match keys.raw("topology").as_deref() {
            Some("torus") => Topology::Torus,
            Some("plane") => Topology::Plane,
            None if simulated => Topology::Torus,
            None => Topology::Plane,
            Some(t) => return Err(Error::domain(format!("topology must be torus or plane, got {t:?}"))),
        };
        keys.set("topology", if topology == Topology::Torus { "torus" } else { "plane" }.into());
        let window = Window::new(ext[0], ext[1], ext[2], ext[3], topology)?;

        let source = if simulated {
            let process = match keys.raw("process").as_deref() {
                Some("poisson") => Process::Poisson {
                    intensity: keys.or("intensity", 200.0)?,
                },
                Some("thomas") => Process::Thomas {
                    parent_intensity: keys.or("parent_intensity", 40.0)?,
                    mean_offspring: keys.or("mean_offspring", 5.0)?,
                    sigma: keys.or("sigma", 0.04)?,
                },
                Some("strauss") => {
                    let size = match keys.get::<f64>("strauss_beta")? {
                        Some(b) => StraussSize::Beta(b),
                        None => StraussSize::TargetCount(keys.or("strauss_target", 200.0)?),
                    };
                    Process::Strauss {
                        size,
                        q: keys.or("strauss_q", 0.05)?,
                        r_int: keys.or("strauss_r", 0.025)?,
                        steps: keys.or("strauss_steps", crate::simulate::STRAUSS_STEPS)?,
                    }
                }
                other => {
                    return Err(Error::domain(format!(
                        "process must be poisson, thomas or strauss, got {other:?}"
                    )))
                }
            };
            let spec = SimulationSpec {
                process,
                window,
                seed: derived_seed(seed, SEED_POINTS),
            };
            let mode = keys.or("growth_mode", "independent".to_string())?;
            let growth = if mode == "none" {
                None
            } else {
                let mode = GrowthMode::from_name(&mode).ok_or_else(|| {
                    Error::domain(format!("growth_mode must be none, independent, positive or negative, got {mode:?}"))
                })?;
                let base = GrowthParams::scenario(mode);
                let initial = match keys.raw("growth_init") {
                    None => base.initial,
                    Some(v) => parse_initial(&v, derived_seed(seed, SEED_MARKS))?,
                };
                let g = GrowthParams {
                    s_h: keys.or("growth_s_h", base.s_h)?,
                    s_l: keys.or("growth_s_l", base.s_l)?,
                    beta_h: keys.or("growth_beta_h", base.beta_h)?,
                    beta_l: keys.or("growth_beta_l", base.beta_l)?,
                    d: keys.or("growth_d", base.d)?,
                    c: keys.or("growth_c", base.c)?,
                    mode,
                    dt: keys.or("growth_dt", base.dt)?,
                    steps: keys.or("growth_steps", base.steps)?,
                    initial,
                };
                if keys.resolved.get("growth_init").is_none() {
                    if let InitialValues::Constant { h, l } = initial {
                        keys.set("growth_init", format!("{h},{l}"));
                    }
                }
                g.validate()?;
                Some(g)
            };
            DataSource::Simulation { spec, growth }
        } else {
            let pattern = keys
                .raw("pattern")
                .ok_or_else(|| Error::domain("pattern file is required with marks"))?;
            let marks = keys
                .raw("marks")
                .map(|m| m.split(',').map(|s| PathBuf::from(s.trim())).collect())
                .unwrap_or_default();
            DataSource::Files {
                pattern: pattern.into(),
                marks,
            }
        };

        let kernel_name = keys.or("kernel", "epanechnikov".to_string())?;
        let kernel = Kernel::from_name(&kernel_name)
            .ok_or_else(|| Error::domain(format!("unknown kernel {kernel_name:?}")))?;
        let edge = match keys.raw("edge") {
            None => None,
            Some(e) => Some(EdgeRule::from_name(&e).ok_or_else(|| Error::domain(format!("unknown edge rule {e:?}")))?),
        };
        let grid = match keys.get::<f64>("r_max")? {
            None => {
                if map.contains_key("r_count") {
                    return Err(Error::domain("r_count requires r_max"));
                }
                None
            }
            Some(r_max) => Some(DistanceGrid::regular(r_max, keys.or("r_count", 100usize)?)?),
        };
        let chat = match keys.or("chat", "all_pairs".to_string())?.as_str() {
            "all_pairs" => ChatRule::AllPairs,
            "distinct_pairs" => ChatRule::DistinctPairs,
            other => return Err(Error::domain(format!("chat must be all_pairs or distinct_pairs, got {other:?}"))),
        };
        let normalization = match keys.or("normalization", "scalar".to_string())?.as_str() {
            "scalar" => MeanNormalization::Scalar,
            "pointwise" => MeanNormalization::Pointwise,
            other => return Err(Error::domain(format!("normalization must be scalar or pointwise, got {other:?}"))),
        };
        let estimation = EstimationConfig {
            kernel,
            bandwidth: keys.get("bandwidth")?,
            edge,
            grid,
            lag: keys.or("lag", 0usize)?,
            chat,
            normalization,
            keep_pointwise: keys.or("keep_pointwise", false)?,
        };

        let statistics = match keys.raw("statistics") {
            None => vec![],
            Some(s) => s
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(StatisticSpec::parse)
                .collect::<Result<Vec<_>>>()?,
        };
        keys.set(
            "statistics",
            statistics.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
        );
        let ch = keys.list::<usize>("channels")?.unwrap_or(vec![1, 2]);
        if ch.len() != 2 || ch.contains(&0) {
            return Err(Error::domain("channels takes two 1-based channel numbers h,l"));
        }
        keys.set("channels", format!("{},{}", ch[0], ch[1]));
        let selection = parse_selection(&mut keys)?;
        let null_name = keys.or("null", "random_labeling".to_string())?;
        let null = NullModel::from_name(&null_name)
            .ok_or_else(|| Error::domain(format!("null must be random_labeling or csr, got {null_name:?}")))?;
        let envelope = EnvelopeOptions {
            nsim: keys.or("nsim", 199usize)?,
            k_env: keys.or("k_env", 5usize)?,
            seed: derived_seed(seed, SEED_ENVELOPE),
        };
        let k_max = keys.or("k_max", 3usize)?;
        let out_dir = PathBuf::from(keys.or("out", "fmark-out".to_string())?);
        Ok(Self {
            source,
            estimation,
            statistics,
            channels: (ch[0] - 1, ch[1] - 1),
            selection,
            k_max,
            envelope,
            null,
            out_dir,
            seed,
            resolved: keys.resolved,
        })
    }
}

fn parse_initial(v: &str, seed: u64) -> Result<InitialValues> {
    let bad = || Error::domain(format!("growth_init must be a value, h,l or uniform:lo:hi, got {v:?}"));
    if let Some(rest) = v.strip_prefix("uniform:") {
        let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
        return Ok(InitialValues::Uniform {
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
            seed,
        });
    }
    let vals: Vec<f64> = v
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match vals.as_slice() {
        [a] => Ok(InitialValues::Constant { h: *a, l: *a }),
        [a, b] => Ok(InitialValues::Constant { h: *a, l: *b }),
        _ => Err(bad()),
    }
}

fn parse_selection(keys: &mut Keys) -> Result<PairSelection> {
    let types = keys.raw("types");
    let local = keys.get::<usize>("local")?;
    match (types, local) {
        (Some(_), Some(_)) => Err(Error::domain("types and local cannot be combined")),
        (None, None) => Ok(PairSelection::ALL),
        (None, Some(u)) => {
            if u == 0 {
                return Err(Error::domain("local takes a 1-based point number"));
            }
            Ok(PairSelection::local(u - 1))
        }
        (Some(t), None) => {
            let bad = || Error::domain(format!("types must be i,j or i,dot, got {t:?}"));
            let (a, b) = t.split_once(',').ok_or_else(bad)?;
            let i: u32 = a.trim().parse().map_err(|_| bad())?;
            match b.trim() {
                "dot" => Ok(PairSelection::dot(i)),
                j => Ok(PairSelection::cross(i, j.parse().map_err(|_| bad())?)),
            }
        }
    }
}

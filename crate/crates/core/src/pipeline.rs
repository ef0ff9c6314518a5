//! Runs driven by an [`AnalysisConfig`]: data loading, estimation and envelopes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::estimators::{estimate_indices, Estimator, PairSelection, StatisticRequest, Subset};
use crate::geometry::PointPattern;
use crate::io::{load_pattern, write_marks_csv, write_pattern_csv, AnalysisConfig, DataSource, Output, StatisticSpec};
use crate::marks::FunctionalMarkSet;
use crate::simulate::{simulate_growth_marks, simulate_pattern};

/// Loaded or simulated data with point ids.
#[derive(Clone, Debug)]
pub struct RunData {
    pub ids: Vec<String>,
    pub pattern: PointPattern,
    pub marks: Option<FunctionalMarkSet>,
}

pub fn load_data(cfg: &AnalysisConfig) -> Result<RunData> {
    match &cfg.source {
        DataSource::Files { pattern, marks } => {
            let window = window_of(cfg);
            if marks.is_empty() {
                let (ids, pattern) = crate::io::read_pattern_csv(pattern, window)?;
                return Ok(RunData { ids, pattern, marks: None });
            }
            let (ids, pattern, marks) = load_pattern(pattern, marks, window)?;
            Ok(RunData {
                ids,
                pattern,
                marks: Some(marks),
            })
        }
        DataSource::Simulation { spec, growth } => {
            let pattern = simulate_pattern(spec)?;
            let marks = match growth {
                Some(g) if !pattern.is_empty() => Some(simulate_growth_marks(&pattern, g)?),
                _ => None,
            };
            Ok(RunData {
                ids: (1..=pattern.len()).map(|i| i.to_string()).collect(),
                pattern,
                marks,
            })
        }
    }
}

fn window_of(cfg: &AnalysisConfig) -> crate::geometry::Window {
    let ext: Vec<f64> = cfg.resolved["window"].split(',').map(|v| v.parse().unwrap()).collect();
    let topology = if cfg.resolved["topology"] == "torus" {
        crate::geometry::Topology::Torus
    } else {
        crate::geometry::Topology::Plane
    };
    crate::geometry::Window::new(ext[0], ext[1], ext[2], ext[3], topology).expect("window validated with the config")
}

/// Writes the pattern and one marks file per channel; returns the file names.
pub fn write_data(dir: &std::path::Path, data: &RunData) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut files = vec![dir.join("pattern.csv")];
    write_pattern_csv(&files[0], &data.ids, &data.pattern)?;
    if let Some(m) = &data.marks {
        for h in 0..m.n_channels() {
            let path = dir.join(format!("marks_{}.csv", h + 1));
            write_marks_csv(&path, &data.ids, m, h)?;
            files.push(path);
        }
    }
    Ok(files)
}

fn output_name(spec: &StatisticSpec, cfg: &AnalysisConfig) -> String {
    let mut name = spec.name();
    let points_only = matches!(spec, StatisticSpec::Curve(c) if c.is_points_only());
    if !points_only {
        name.push_str(&format!("_{}_{}", cfg.channels.0 + 1, cfg.channels.1 + 1));
    }
    if selection_applies(spec) && !cfg.selection.is_all() {
        name.push_str(&selection_suffix(&cfg.selection));
    }
    name
}

fn selection_applies(spec: &StatisticSpec) -> bool {
    use crate::estimators::Characteristic as C;
    matches!(
        spec,
        StatisticSpec::Curve(C::MarkWeightedPcf(_) | C::MarkWeightedK(_) | C::MarkWeightedL(_))
    )
}

fn selection_suffix(sel: &PairSelection) -> String {
    let part = |s: Subset| match s {
        Subset::All => "all".to_string(),
        Subset::Type(t) => t.to_string(),
        Subset::Point(u) => format!("p{}", u + 1),
    };
    match (sel.first, sel.second) {
        (Subset::Point(u), _) => format!("_local_{}", u + 1),
        (a, Subset::All) => format!("_types_{}_dot", part(a)),
        (a, b) => format!("_types_{}_{}", part(a), part(b)),
    }
}

fn request(spec: &StatisticSpec, cfg: &AnalysisConfig) -> Option<StatisticRequest> {
    match spec {
        StatisticSpec::Indices => None,
        StatisticSpec::Curve(c) => {
            let mut req = StatisticRequest::new(*c, cfg.channels.0, cfg.channels.1);
            if selection_applies(spec) {
                req = req.with_selection(cfg.selection);
            }
            Some(req)
        }
    }
}

fn need_marks<'a>(data: &'a RunData, spec: &StatisticSpec) -> Result<&'a FunctionalMarkSet> {
    data.marks
        .as_ref()
        .ok_or_else(|| Error::domain(format!("statistic {} needs marks", spec.name())))
}

fn placeholder_marks() -> FunctionalMarkSet {
    FunctionalMarkSet::from_scalars(&[vec![]]).expect("empty scalar mark set")
}

/// Values worth recording next to the outputs.
pub fn derived_values(est: &Estimator) -> BTreeMap<String, String> {
    let c = est.config();
    let mut m = BTreeMap::new();
    m.insert("n_points".into(), est.n().to_string());
    m.insert("bandwidth".into(), format!("{:?}", c.bandwidth));
    m.insert("edge".into(), c.edge.name().into());
    m.insert("r_max".into(), format!("{:?}", c.grid.max()));
    m.insert("r_count".into(), c.grid.len().to_string());
    m
}

fn check_statistics(cfg: &AnalysisConfig) -> Result<()> {
    if cfg.statistics.is_empty() {
        return Err(Error::domain("statistics list is empty"));
    }
    Ok(())
}

/// Point estimates of every configured statistic.
pub fn run_estimate(cfg: &AnalysisConfig, data: &RunData) -> Result<(Vec<Output>, BTreeMap<String, String>)> {
    check_statistics(cfg)?;
    let est = Estimator::new(&data.pattern, &cfg.estimation)?;
    let empty = placeholder_marks();
    let mut outputs = Vec::new();
    for spec in &cfg.statistics {
        let name = output_name(spec, cfg);
        match request(spec, cfg) {
            None => {
                let marks = need_marks(data, spec)?;
                let rep = estimate_indices(
                    &data.pattern,
                    marks,
                    cfg.channels.0,
                    cfg.channels.1,
                    Some(cfg.k_max),
                    &cfg.estimation,
                )?;
                let nn = &rep.nn;
                outputs.push(Output::Table {
                    name: format!("nn_{name}"),
                    header: vec!["gamma_nn".into(), "kappa_nn".into(), "c_nn".into(), "tau_nn".into()],
                    rows: vec![vec![nn.gamma_nn, nn.kappa_nn, nn.c_nn, nn.tau_nn.unwrap_or(f64::NAN)]],
                });
                let knn = rep.knn.expect("k_max given");
                outputs.push(Output::Table {
                    name: format!("knn_{name}"),
                    header: vec!["k".into(), "K_k".into(), "Gamma_k".into(), "D_k".into()],
                    rows: (0..knn.d_k.len())
                        .map(|k| vec![(k + 1) as f64, knn.kappa_k[k], knn.gamma_k[k], knn.d_k[k]])
                        .collect(),
                });
            }
            Some(req) => {
                let marks = if req.characteristic.is_points_only() {
                    &empty
                } else {
                    need_marks(data, spec)?
                };
                let curve = est.estimate(marks, &req)?;
                outputs.push(Output::Curve { name, curve });
            }
        }
    }
    Ok((outputs, derived_values(&est)))
}

/// Envelope bands of every configured statistic under the configured null.
pub fn run_envelope(cfg: &AnalysisConfig, data: &RunData) -> Result<(Vec<Output>, BTreeMap<String, String>)> {
    check_statistics(cfg)?;
    let est = Estimator::new(&data.pattern, &cfg.estimation)?;
    let mut outputs = Vec::new();
    for spec in &cfg.statistics {
        let req = request(spec, cfg)
            .ok_or_else(|| Error::domain("neighbour indices are scalars and have no envelope"))?;
        let band = match cfg.null {
            crate::inference::NullModel::RandomLabeling => {
                est.random_label_envelope(need_marks(data, spec)?, &req, &cfg.envelope)?
            }
            crate::inference::NullModel::Csr => est.csr_envelope(&req, &cfg.envelope)?,
        };
        outputs.push(Output::Band {
            name: output_name(spec, cfg),
            band,
        });
    }
    Ok((outputs, derived_values(&est)))
}

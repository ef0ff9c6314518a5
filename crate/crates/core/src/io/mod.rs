//! CSV ingestion, curve serialisation, configuration and run manifests.

mod config;
mod results;
mod tables;

pub use config::{
    derived_seed, parse_key_values, read_config_file, render_key_values, AnalysisConfig, DataSource, StatisticSpec,
    KEYS,
};
pub use results::{file_stem, read_manifest, write_results, FileEntry, Manifest, Output, CONFIG_FILE, MANIFEST_FILE};
pub use tables::{
    format_number, load_pattern, read_curve_csv, read_marks_csv, read_pattern_csv, write_curve_csv, write_marks_csv,
    write_pattern_csv, ChannelTable, CurveTable, NA,
};

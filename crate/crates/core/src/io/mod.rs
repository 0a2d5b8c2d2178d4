//! Configuration files and result serialisation.

mod config;
mod output;

pub use config::{
    parse_config, parse_config_file, read_config, render_config, ConfigError, ConfigFile,
    Diagnostic, DEFAULT_CFL, DEFAULT_DZ, DEFAULT_SNAPSHOT_INTERVAL,
};
pub use output::{
    intensity_csv, peaks_csv, strength_csv, trajectory_files, write_files, write_trajectory,
    Heatmap,
};

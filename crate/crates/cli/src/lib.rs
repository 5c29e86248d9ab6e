//! Batch driver for limpet experiments: TOML configs in, CSV/JSON/SVG and a
//! hashed manifest out.

pub mod config;
pub mod plot;
pub mod run;

pub use config::{apply_override, validate_config, validate_config_in, Kind, RunConfig, Violation};
pub use plot::{emit_plot, Labels, Series};
pub use run::{run, verify_manifest, RunError, RunManifest, MANIFEST_NAME};

/// Exit status for configuration and usage errors.
pub const EXIT_CONFIG: i32 = 2;

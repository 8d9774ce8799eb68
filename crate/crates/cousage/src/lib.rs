//! File formats, reports and the `cousage` command line around
//! [`cousage_core`].

pub mod cli;
pub mod clock;
pub mod error;
pub mod manifest;
pub mod matrix_io;
pub mod reports;
pub mod result_json;
pub mod viz;

pub use clock::InstantClock;
pub use error::{Error, Result};
pub use manifest::{parse_manifest, Manifest, ManifestError};
pub use matrix_io::{load_matrix, write_matrix, MatrixFormat};
pub use reports::write_reports;
pub use result_json::{result_from_json, result_to_json};
pub use viz::{to_viz_json, VizDocument, VizNode, VIZ_SCHEMA};

//! File formats: trajectory records, cluster exports and manifests.

pub mod export;
pub mod fmt;
pub mod manifest;
pub mod records;

pub use export::{assignments_csv, export_clusters, ExportError};
pub use manifest::{read_manifest, write_manifest, ManifestDocument, ManifestError};
pub use records::{load_trajectories, read_id_list, write_trajectories, LoadError, LoadedPool, RecordFormat};

//! Datasets on disk, splitting, synthetic generation and model persistence.

mod csv_io;
mod generate;
mod model_file;
mod split;

use std::io::Write;
use std::path::Path;

pub use csv_io::{
    load_csv, load_csv_from_reader, read_samples, read_samples_from_reader, write_csv,
    write_csv_to, CSV_HEADER,
};
pub use generate::{generate, GeneratorSpec, DEFAULT_SIGMA, REFERENCE_MEANS};
pub use model_file::{load_model, parse_model, render_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use split::{split, SplitSpec};

use crate::error::{Error, Result};
use crate::features::{CarcinomaClass, MultifractalSample};

/// Labelled samples plus a free-text note on where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<MultifractalSample>,
    pub provenance: String,
}

impl Dataset {
    /// Fails if any sample lacks a label.
    pub fn new(samples: Vec<MultifractalSample>, provenance: impl Into<String>) -> Result<Self> {
        if let Some(i) = samples.iter().position(|s| s.label.is_none()) {
            return Err(Error::InvalidInput(format!("dataset sample {i} has no label")));
        }
        Ok(Self {
            samples,
            provenance: provenance.into(),
        })
    }

    pub fn samples(&self) -> &[MultifractalSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<CarcinomaClass> {
        self.samples.iter().filter_map(|s| s.label).collect()
    }

    pub fn count_of(&self, class: CarcinomaClass) -> usize {
        self.samples.iter().filter(|s| s.label == Some(class)).count()
    }
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

//! Readers and writers for datasets and models.
//!
//! Every loader has a path-based form and a reader-based form; the path is
//! only used to label error messages in the latter.

mod bagfile;
mod modelfile;
mod musk;
mod sequence;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::error::{MilError, Result};

pub use bagfile::{load_bag_list, load_bags, read_bags, save_bags, write_bags};
pub use modelfile::{
    load_linear_model, load_local_model, load_model, read_model, save_model, write_model, MODEL_HEADER,
};
pub use musk::{load_musk, read_musk, MUSK_FEATURES};
pub use sequence::{
    aac_features, bags_from_sequences, load_annotations, load_fasta, read_annotations, read_fasta, window_starts,
    windows_to_bags, FastaRecord, SequenceAnnotation, WindowPartition, AMINO_ACIDS,
};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| MilError::io(path, e))
}

/// Writes `contents` to `path` in one call.
pub(crate) fn write_all(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| MilError::io(path, e))
}

/// 17 significant digits in scientific notation, enough to parse back to the
/// identical `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn format_row(row: &[f64]) -> String {
    let mut s = String::with_capacity(row.len() * 24);
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&format_f64(*v));
    }
    s
}

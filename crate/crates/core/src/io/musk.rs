//! UCI MUSK layout: `molecule,conformation,f1..f166,class`.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::bag::{Bag, Dataset, Task};
use crate::error::{MilError, Result};

pub const MUSK_FEATURES: usize = 166;

pub fn load_musk(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    read_musk(super::open(path)?, path)
}

/// Groups rows into bags by molecule name, in order of first appearance.
/// Class `0` maps to label -1 and `1` to +1. Error line numbers are 1-based.
pub fn read_musk(reader: impl BufRead, path: &Path) -> Result<Dataset> {
    let err = |line: usize, msg: String| MilError::parse(path, line, msg);
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<i64> = Vec::new();
    let mut data: Vec<Vec<f64>> = Vec::new();

    for (no, line) in reader.lines().enumerate() {
        let no = no + 1;
        let line = line.map_err(|e| MilError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != MUSK_FEATURES + 3 {
            return Err(err(
                no,
                format!("expected {} columns, found {}", MUSK_FEATURES + 3, fields.len()),
            ));
        }
        let mut x = Vec::with_capacity(MUSK_FEATURES);
        for (j, f) in fields[2..2 + MUSK_FEATURES].iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| err(no, format!("feature {} is not numeric: {f:?}", j + 1)))?;
            if !v.is_finite() {
                return Err(err(no, format!("feature {} is not finite", j + 1)));
            }
            x.push(v);
        }
        let class = fields[MUSK_FEATURES + 2];
        let label = match class.parse::<f64>() {
            Ok(0.0) => -1,
            Ok(1.0) => 1,
            _ => return Err(err(no, format!("class must be 0 or 1, found {class:?}"))),
        };
        let name = fields[0];
        let bag = *index.entry(name.to_string()).or_insert_with(|| {
            order.push(name.to_string());
            labels.push(label);
            data.push(Vec::new());
            order.len() - 1
        });
        if labels[bag] != label {
            return Err(err(no, format!("molecule {name:?} has rows of both classes")));
        }
        data[bag].extend(x);
    }
    if order.is_empty() {
        return Err(MilError::InvalidDataset(format!("{}: no MUSK rows", path.display())));
    }

    let bags = order
        .into_iter()
        .zip(labels)
        .zip(data)
        .map(|((id, label), flat)| Bag::from_flat(id, label, MUSK_FEATURES, flat))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(bags, Task::Classification)
}

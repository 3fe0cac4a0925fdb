//! Generic bag file: one instance per line, `bag_id<TAB>label<TAB>f1,f2,...`.
//!
//! `#` starts a comment line and blank lines are skipped. Lines sharing a bag
//! id form one bag, placed where the id first appears, even when the lines
//! are not adjacent. If every label is -1 or +1 the dataset is a
//! classification set, otherwise a ranking set.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::bag::{Bag, Dataset, Task};
use crate::error::{MilError, Result};

use super::format_row;

pub fn load_bags(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    read_bags(super::open(path)?, path)
}

/// As [`load_bags`] but an empty file gives an empty list instead of an error.
pub fn load_bag_list(path: impl AsRef<Path>) -> Result<Vec<Bag>> {
    let path = path.as_ref();
    read_bag_list(super::open(path)?, path)
}

pub fn read_bags(reader: impl BufRead, path: &Path) -> Result<Dataset> {
    let bags = read_bag_list(reader, path)?;
    if bags.is_empty() {
        return Err(MilError::InvalidDataset(format!("{}: no bags", path.display())));
    }
    let task = if bags.iter().all(|b| b.label() == 1 || b.label() == -1) {
        Task::Classification
    } else {
        Task::Ranking
    };
    Dataset::new(bags, task)
}

fn read_bag_list(reader: impl BufRead, path: &Path) -> Result<Vec<Bag>> {
    let err = |line: usize, msg: String| MilError::parse(path, line, msg);
    let mut ids: Vec<String> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    let mut data: Vec<Vec<f64>> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut dim: Option<usize> = None;

    for (no, line) in reader.lines().enumerate() {
        let no = no + 1;
        let line = line.map_err(|e| MilError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split('\t');
        let (Some(id), Some(label), Some(feats), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(err(
                no,
                "expected 3 tab-separated fields: bag_id, label, features".into(),
            ));
        };
        let id = id.trim();
        if id.is_empty() {
            return Err(err(no, "empty bag id".into()));
        }
        let label: i64 = label
            .trim()
            .parse()
            .map_err(|_| err(no, format!("label is not an integer: {label:?}")))?;
        let x = feats
            .split(',')
            .enumerate()
            .map(|(j, f)| match f.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(err(no, format!("feature {} is not a finite number: {f:?}", j + 1))),
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(x.len()),
            Some(d) if d != x.len() => {
                return Err(err(no, format!("expected {d} features, found {}", x.len())));
            }
            Some(_) => {}
        }
        match index.get(id) {
            Some(&b) => {
                if labels[b] != label {
                    return Err(err(
                        no,
                        format!("bag {id:?} has label {label} here but {} earlier", labels[b]),
                    ));
                }
                data[b].extend(x);
            }
            None => {
                index.insert(id.to_string(), ids.len());
                ids.push(id.to_string());
                labels.push(label);
                data.push(x);
            }
        }
    }
    let Some(dim) = dim else {
        return Ok(Vec::new());
    };
    ids.into_iter()
        .zip(labels)
        .zip(data)
        .map(|((id, label), flat)| Bag::from_flat(id, label, dim, flat))
        .collect()
}

pub fn save_bags(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    super::write_all(path, write_bags(dataset).as_bytes())
}

/// Serializes `dataset` in the bag file format.
pub fn write_bags(dataset: &Dataset) -> String {
    let mut out = String::new();
    for bag in dataset.bags() {
        for x in bag.instances() {
            out.push_str(bag.id());
            out.push('\t');
            out.push_str(&bag.label().to_string());
            out.push('\t');
            out.push_str(&format_row(x));
            out.push('\n');
        }
    }
    out
}

//! Bags, datasets and the task they are labelled for.
//!
//! Instances of a bag are stored row-major in one contiguous buffer so the
//! witness scan in the solvers walks memory linearly.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MilError, Result};

/// A single feature vector.
pub type Instance = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Ranking,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Classification => f.write_str("classification"),
            Task::Ranking => f.write_str("ranking"),
        }
    }
}

/// A labelled, non-empty group of instances.
///
/// For classification the label is -1 or +1; for ranking it is an integer
/// rank where larger means "should score higher".
#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    id: String,
    label: i64,
    dim: usize,
    data: Vec<f64>,
}

impl Bag {
    pub fn new(id: impl Into<String>, label: i64, instances: Vec<Instance>) -> Result<Self> {
        let id = id.into();
        let dim = instances
            .first()
            .map(Vec::len)
            .ok_or_else(|| MilError::InvalidDataset(format!("bag {id:?} has no instances")))?;
        let mut data = Vec::with_capacity(dim * instances.len());
        for inst in &instances {
            if inst.len() != dim {
                return Err(MilError::DimensionMismatch {
                    expected: dim,
                    found: inst.len(),
                });
            }
            data.extend_from_slice(inst);
        }
        Self::from_flat(id, label, dim, data)
    }

    /// Builds a bag from a row-major buffer of `len * dim` values.
    pub fn from_flat(id: impl Into<String>, label: i64, dim: usize, data: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if dim == 0 {
            return Err(MilError::InvalidDataset(format!(
                "bag {id:?} has zero-dimensional instances"
            )));
        }
        if data.is_empty() {
            return Err(MilError::InvalidDataset(format!("bag {id:?} has no instances")));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(MilError::InvalidDataset(format!(
                "bag {id:?}: buffer of {} values is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MilError::NonFinite(format!(
                "bag {id:?}, instance {}, feature {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Bag { id, label, dim, data })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> i64 {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of instances.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn instance(&self, index: usize) -> &[f64] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn instances(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn with_label(&self, label: i64) -> Bag {
        Bag { label, ..self.clone() }
    }

    /// Applies `f` to every instance, producing a bag of the new dimension.
    pub fn map_instances(&self, new_dim: usize, mut f: impl FnMut(&[f64], &mut Vec<f64>)) -> Result<Bag> {
        let mut data = Vec::with_capacity(self.len() * new_dim);
        for inst in self.instances() {
            let before = data.len();
            f(inst, &mut data);
            if data.len() - before != new_dim {
                return Err(MilError::DimensionMismatch {
                    expected: new_dim,
                    found: data.len() - before,
                });
            }
        }
        Bag::from_flat(self.id.clone(), self.label, new_dim, data)
    }
}

/// Bags sharing one dimensionality, tagged with the task their labels encode.
///
/// Instances are owned by exactly one bag, so bags never overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    bags: Vec<Bag>,
    dim: usize,
    task: Task,
}

impl Dataset {
    /// Validates dimensions and the label domain of `task`.
    ///
    /// Class balance is not checked here because held-out folds legitimately
    /// contain a single class; see [`Dataset::check_trainable`].
    pub fn new(bags: Vec<Bag>, task: Task) -> Result<Self> {
        let dim = bags
            .first()
            .map(Bag::dim)
            .ok_or_else(|| MilError::InvalidDataset("dataset has no bags".into()))?;
        Self::with_dim(bags, dim, task)
    }

    /// Like [`Dataset::new`] but allows an empty bag list of a known dimension.
    pub fn with_dim(bags: Vec<Bag>, dim: usize, task: Task) -> Result<Self> {
        if dim == 0 {
            return Err(MilError::InvalidDataset("dimension must be at least 1".into()));
        }
        for bag in &bags {
            if bag.dim() != dim {
                return Err(MilError::DimensionMismatch {
                    expected: dim,
                    found: bag.dim(),
                }
                .context(format!("bag {:?}", bag.id())));
            }
            if task == Task::Classification && bag.label() != 1 && bag.label() != -1 {
                return Err(MilError::InvalidDataset(format!(
                    "bag {:?} has label {} but classification labels must be -1 or +1",
                    bag.id(),
                    bag.label()
                )));
            }
        }
        Ok(Dataset { bags, dim, task })
    }

    pub fn bags(&self) -> &[Bag] {
        &self.bags
    }

    pub fn into_bags(self) -> Vec<Bag> {
        self.bags
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn n_instances(&self) -> usize {
        self.bags.iter().map(Bag::len).sum()
    }

    pub fn all_instances(&self) -> impl Iterator<Item = &[f64]> {
        self.bags.iter().flat_map(Bag::instances)
    }

    pub fn labels(&self) -> Vec<i64> {
        self.bags.iter().map(Bag::label).collect()
    }

    /// Labels as ranks. Classification labels map -1 to rank 1 and +1 to
    /// rank 2, so every positive/negative pair has unit weight.
    pub fn ranks(&self) -> Vec<i64> {
        match self.task {
            Task::Ranking => self.labels(),
            Task::Classification => self.bags.iter().map(|b| if b.label() > 0 { 2 } else { 1 }).collect(),
        }
    }

    /// True when every label is -1 or +1, whatever the declared task.
    pub fn has_binary_labels(&self) -> bool {
        self.bags.iter().all(|b| b.label() == 1 || b.label() == -1)
    }

    /// Checks the conditions a solver needs: both classes present for
    /// classification, at least two distinct ranks for ranking.
    pub fn check_trainable(&self, task: Task) -> Result<()> {
        if self.bags.is_empty() {
            return Err(MilError::InvalidDataset("dataset has no bags".into()));
        }
        match task {
            Task::Classification => {
                if self.task != Task::Classification {
                    return Err(MilError::InvalidDataset(
                        "classification solver needs -1/+1 labelled bags".into(),
                    ));
                }
                let pos = self.bags.iter().filter(|b| b.label() > 0).count();
                if pos == 0 || pos == self.bags.len() {
                    return Err(MilError::InvalidDataset(
                        "classification needs at least one positive and one negative bag".into(),
                    ));
                }
            }
            Task::Ranking => {
                let distinct: BTreeSet<i64> = self.ranks().into_iter().collect();
                if distinct.len() < 2 {
                    return Err(MilError::InvalidDataset(
                        "ranking needs at least two distinct rank values".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Bags at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            bags: indices.iter().map(|&i| self.bags[i].clone()).collect(),
            dim: self.dim,
            task: self.task,
        }
    }

    /// Applies a per-instance transform to every bag.
    pub fn map_instances(&self, new_dim: usize, mut f: impl FnMut(&[f64], &mut Vec<f64>)) -> Result<Dataset> {
        let bags = self
            .bags
            .iter()
            .map(|b| b.map_instances(new_dim, &mut f))
            .collect::<Result<Vec<_>>>()?;
        Dataset::with_dim(bags, new_dim, self.task)
    }

    /// Appends a constant 1.0 feature to every instance, emulating a bias term.
    pub fn with_bias_feature(&self) -> Result<Dataset> {
        self.map_instances(self.dim + 1, |x, out| {
            out.extend_from_slice(x);
            out.push(1.0);
        })
    }
}

//! Protein sequences to bags: sliding windows with amino-acid composition
//! features, plus FASTA and annotation-sidecar readers.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use crate::bag::{Bag, Dataset, Task};
use crate::error::{MilError, Result};

/// Feature order of [`aac_features`].
pub const AMINO_ACIDS: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

fn residue_index(c: u8) -> Option<usize> {
    AMINO_ACIDS.iter().position(|&a| a == c.to_ascii_uppercase())
}

/// Residue frequencies of `window` in [`AMINO_ACIDS`] order. With
/// `skip_unknown`, letters outside the alphabet are ignored rather than
/// rejected, and frequencies are taken over the known residues.
pub fn aac_features(window: &str, skip_unknown: bool) -> Result<Vec<f64>> {
    let mut counts = [0usize; 20];
    let mut total = 0usize;
    for c in window.bytes() {
        match residue_index(c) {
            Some(i) => {
                counts[i] += 1;
                total += 1;
            }
            None if skip_unknown => {}
            None => {
                return Err(MilError::InvalidParameter(format!(
                    "unknown residue {:?} in window {window:?}",
                    c as char
                )))
            }
        }
    }
    if total == 0 {
        return Err(MilError::InvalidParameter(format!(
            "window {window:?} has no standard residues"
        )));
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// A sequence with sorted, non-overlapping 1-based inclusive regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceAnnotation {
    id: String,
    sequence: String,
    regions: Vec<(usize, usize)>,
}

impl SequenceAnnotation {
    /// Sorts `regions` and rejects empty, out-of-range or overlapping ones.
    pub fn new(id: impl Into<String>, sequence: impl Into<String>, mut regions: Vec<(usize, usize)>) -> Result<Self> {
        let id = id.into();
        let sequence: String = sequence.into();
        if sequence.is_empty() {
            return Err(MilError::InvalidDataset(format!("sequence {id:?} is empty")));
        }
        if !sequence.is_ascii() {
            return Err(MilError::InvalidDataset(format!("sequence {id:?} is not ASCII")));
        }
        regions.sort_unstable();
        let n = sequence.len();
        for &(s, e) in &regions {
            if s < 1 || s > e || e > n {
                return Err(MilError::InvalidDataset(format!(
                    "region {s}-{e} of {id:?} is outside 1..={n} or reversed"
                )));
            }
        }
        for w in regions.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(MilError::InvalidDataset(format!(
                    "regions {}-{} and {}-{} of {id:?} overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(SequenceAnnotation { id, sequence, regions })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sequence(&self) -> &str {
        &self.sequence
    }

    pub fn regions(&self) -> &[(usize, usize)] {
        &self.regions
    }
}

/// 1-based window start positions, split by overlap with the regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPartition {
    /// One entry per region: windows lying entirely inside it.
    pub positive: Vec<Vec<usize>>,
    /// Windows touching no region.
    pub negative: Vec<usize>,
    /// Windows partly overlapping a region; they are dropped.
    pub discarded: Vec<usize>,
}

/// Windows of length `window_len` start at 1, 1 + stride, ... while they fit.
pub fn window_starts(ann: &SequenceAnnotation, window_len: usize, stride: usize) -> Result<WindowPartition> {
    let n = ann.sequence.len();
    if window_len == 0 || stride == 0 {
        return Err(MilError::InvalidParameter(
            "window length and stride must be positive".into(),
        ));
    }
    if window_len > n {
        return Err(MilError::InvalidParameter(format!(
            "window length {window_len} exceeds length {n} of sequence {:?}",
            ann.id
        )));
    }
    let mut part = WindowPartition {
        positive: vec![Vec::new(); ann.regions.len()],
        negative: Vec::new(),
        discarded: Vec::new(),
    };
    for start in (1..=n + 1 - window_len).step_by(stride) {
        let end = start + window_len - 1;
        let inside = ann.regions.iter().position(|&(s, e)| s <= start && end <= e);
        let touches = ann.regions.iter().any(|&(s, e)| start <= e && s <= end);
        match (inside, touches) {
            (Some(r), _) => part.positive[r].push(start),
            (None, false) => part.negative.push(start),
            (None, true) => part.discarded.push(start),
        }
    }
    for (r, starts) in part.positive.iter().enumerate() {
        if starts.is_empty() {
            let (s, e) = ann.regions[r];
            return Err(MilError::InvalidDataset(format!(
                "region {s}-{e} of sequence {:?} holds no complete window of length {window_len} at stride {stride}",
                ann.id
            )));
        }
    }
    Ok(part)
}

/// One positive bag per region (`<id>/<start>-<end>`, label +1) and one
/// negative bag of the non-overlapping windows (`<id>/neg`, label -1), which
/// is `None` when no window avoids every region.
pub fn windows_to_bags(
    ann: &SequenceAnnotation,
    window_len: usize,
    stride: usize,
    skip_unknown: bool,
) -> Result<(Vec<Bag>, Option<Bag>)> {
    let part = window_starts(ann, window_len, stride)?;
    let features = |starts: &[usize]| -> Result<Vec<Vec<f64>>> {
        starts
            .iter()
            .map(|&s| aac_features(&ann.sequence[s - 1..s - 1 + window_len], skip_unknown))
            .collect::<Result<_>>()
            .map_err(|e| e.context(format!("sequence {:?}", ann.id)))
    };
    let mut positive = Vec::with_capacity(part.positive.len());
    for (&(s, e), starts) in ann.regions.iter().zip(&part.positive) {
        positive.push(Bag::new(format!("{}/{s}-{e}", ann.id), 1, features(starts)?)?);
    }
    let negative = if part.negative.is_empty() {
        None
    } else {
        Some(Bag::new(format!("{}/neg", ann.id), -1, features(&part.negative)?)?)
    };
    Ok((positive, negative))
}

/// Builds a classification dataset from all sequences, in input order.
/// Fails if no sequence contributes a negative bag.
pub fn bags_from_sequences(
    annotations: &[SequenceAnnotation],
    window_len: usize,
    stride: usize,
    skip_unknown: bool,
) -> Result<Dataset> {
    let mut bags = Vec::new();
    let mut any_negative = false;
    for ann in annotations {
        let (pos, neg) = windows_to_bags(ann, window_len, stride, skip_unknown)?;
        bags.extend(pos);
        if let Some(neg) = neg {
            any_negative = true;
            bags.push(neg);
        }
    }
    if !any_negative {
        return Err(MilError::InvalidDataset(
            "no sequence has a window outside its annotated regions, so there is no negative bag".into(),
        ));
    }
    Dataset::new(bags, Task::Classification)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    pub id: String,
    pub sequence: String,
}

pub fn load_fasta(path: impl AsRef<Path>) -> Result<Vec<FastaRecord>> {
    let path = path.as_ref();
    read_fasta(super::open(path)?, path)
}

/// The id is the first word of the header line. Sequence lines are joined
/// with whitespace removed and upper-cased.
pub fn read_fasta(reader: impl BufRead, path: &Path) -> Result<Vec<FastaRecord>> {
    let mut records: Vec<FastaRecord> = Vec::new();
    let mut header_line: HashMap<String, usize> = HashMap::new();
    let mut last_header = 0;
    for (no, line) in reader.lines().enumerate() {
        let no = no + 1;
        let line = line.map_err(|e| MilError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            if let Some(prev) = records.last() {
                if prev.sequence.is_empty() {
                    return Err(MilError::parse(
                        path,
                        last_header,
                        format!("sequence {:?} is empty", prev.id),
                    ));
                }
            }
            let id = header.split_whitespace().next().unwrap_or("");
            if id.is_empty() {
                return Err(MilError::parse(path, no, "header without an id"));
            }
            if let Some(first) = header_line.insert(id.to_string(), no) {
                return Err(MilError::parse(
                    path,
                    no,
                    format!("duplicate id {id:?} (first on line {first})"),
                ));
            }
            last_header = no;
            records.push(FastaRecord {
                id: id.to_string(),
                sequence: String::new(),
            });
        } else {
            let rec = records
                .last_mut()
                .ok_or_else(|| MilError::parse(path, no, "sequence data before the first header"))?;
            if !line.is_ascii() {
                return Err(MilError::parse(path, no, "non-ASCII sequence data"));
            }
            rec.sequence.extend(
                line.chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| c.to_ascii_uppercase()),
            );
        }
    }
    if let Some(prev) = records.last() {
        if prev.sequence.is_empty() {
            return Err(MilError::parse(
                path,
                last_header,
                format!("sequence {:?} is empty", prev.id),
            ));
        }
    }
    Ok(records)
}

/// Reads `seq_id<TAB>start<TAB>end` lines and attaches them to `records`.
/// Sequences without annotation lines get no regions.
pub fn load_annotations(path: impl AsRef<Path>, records: &[FastaRecord]) -> Result<Vec<SequenceAnnotation>> {
    let path = path.as_ref();
    read_annotations(super::open(path)?, path, records)
}

pub fn read_annotations(reader: impl BufRead, path: &Path, records: &[FastaRecord]) -> Result<Vec<SequenceAnnotation>> {
    let known: HashMap<&str, usize> = records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let mut regions: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (no, line) in reader.lines().enumerate() {
        let no = no + 1;
        let line = line.map_err(|e| MilError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [id, start, end] = fields[..] else {
            return Err(MilError::parse(
                path,
                no,
                "expected seq_id, start, end separated by tabs",
            ));
        };
        let &rec = known
            .get(id)
            .ok_or_else(|| MilError::parse(path, no, format!("unknown sequence id {id:?}")))?;
        let pos = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| MilError::parse(path, no, format!("position is not a positive integer: {s:?}")))
        };
        regions.entry(rec).or_default().push((pos(start)?, pos(end)?));
    }
    records
        .iter()
        .enumerate()
        .map(|(i, r)| SequenceAnnotation::new(r.id.clone(), r.sequence.clone(), regions.remove(&i).unwrap_or_default()))
        .collect()
}

//! Plain-text model files.
//!
//! ```text
//! LEMMINGS-MODEL v1
//! kind=local-class d=3 K=2 lambda=... sigma=... T=400 seed=7 anchor_method=kmeans anchor_seed=11 bias=false scaled=true
//! W:
//! <K rows of d values; a linear model has one row>
//! ANCHORS:
//! <K rows of d values>
//! SCALER:
//! <mean row>
//! <std row>
//! END checksum=<sha256 of every preceding byte, hex>
//! ```
//!
//! Sections are always present; `ANCHORS:` is empty for linear models and
//! `SCALER:` is empty when `scaled=false`. Scaler rows have `d - bias`
//! entries since they apply before the bias feature is appended.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{MilError, Result};
use crate::local::{AnchorMethod, AnchorSet, LocalModel};
use crate::model::{BagScorer, LinearModel, ModelMeta, Preprocess};
use crate::scaling::FeatureScaler;
use crate::solver::{SolverKind, TrainedModel};

use super::{format_f64, format_row};

pub const MODEL_HEADER: &str = "LEMMINGS-MODEL v1";

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    super::write_all(path, write_model(model).as_bytes())
}

pub fn write_model(model: &TrainedModel) -> String {
    let meta = match model {
        TrainedModel::Linear(m) => m.meta(),
        TrainedModel::Local(m) => m.meta(),
    };
    let pre = model.preprocess();
    let mut header = vec![format!("kind={}", model.kind()), format!("d={}", model.dim())];
    let mut body = String::from("W:\n");
    match model {
        TrainedModel::Linear(m) => {
            header.push("K=0".into());
            header.push(format!("lambda={}", format_f64(meta.lambda)));
            body.push_str(&format_row(m.weights()));
            body.push('\n');
            body.push_str("ANCHORS:\n");
        }
        TrainedModel::Local(m) => {
            let a = m.anchors();
            header.push(format!("K={}", a.k()));
            header.push(format!("lambda={}", format_f64(meta.lambda)));
            header.push(format!("sigma={}", format_f64(a.sigma())));
            for k in 0..a.k() {
                body.push_str(&format_row(m.anchor_weights(k)));
                body.push('\n');
            }
            body.push_str("ANCHORS:\n");
            for row in a.anchors() {
                body.push_str(&format_row(row));
                body.push('\n');
            }
        }
    }
    header.push(format!("T={}", meta.iterations));
    header.push(format!("seed={}", meta.seed));
    if let TrainedModel::Local(m) = model {
        header.push(format!("anchor_method={}", m.anchors().method()));
        header.push(format!("anchor_seed={}", m.anchors().seed()));
    }
    header.push(format!("bias={}", pre.bias));
    header.push(format!("scaled={}", pre.scaler.is_some()));
    body.push_str("SCALER:\n");
    if let Some(s) = &pre.scaler {
        body.push_str(&format_row(s.mean()));
        body.push('\n');
        body.push_str(&format_row(s.std()));
        body.push('\n');
    }
    let mut out = format!("{MODEL_HEADER}\n{}\n{body}", header.join(" "));
    let sum = hex::encode(Sha256::digest(out.as_bytes()));
    out.push_str(&format!("END checksum={sum}\n"));
    out
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let mut text = String::new();
    super::open(path)?
        .read_to_string(&mut text)
        .map_err(|e| MilError::io(path, e))?;
    read_model(&text).map_err(|e| e.context(path.display().to_string()))
}

/// Loads a model that must be linear.
pub fn load_linear_model(path: impl AsRef<Path>) -> Result<LinearModel> {
    match load_model(path)? {
        TrainedModel::Linear(m) => Ok(m),
        other => Err(MilError::KindMismatch {
            expected: "linear-class or linear-rank",
            found: other.kind().to_string(),
        }),
    }
}

/// Loads a model that must be locally linear.
pub fn load_local_model(path: impl AsRef<Path>) -> Result<LocalModel> {
    match load_model(path)? {
        TrainedModel::Local(m) => Ok(m),
        other => Err(MilError::KindMismatch {
            expected: "local-class or local-rank",
            found: other.kind().to_string(),
        }),
    }
}

fn fmt_err(msg: impl Into<String>) -> MilError {
    MilError::ModelFormat(msg.into())
}

fn parse_row(line: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let row = line
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| fmt_err(format!("{what}: bad number {v:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if row.len() != expected {
        return Err(fmt_err(format!(
            "{what}: expected {expected} values, found {}",
            row.len()
        )));
    }
    Ok(row)
}

pub fn read_model(text: &str) -> Result<TrainedModel> {
    let first = text.lines().next().unwrap_or("");
    if first != MODEL_HEADER {
        return Err(fmt_err(format!(
            "unsupported header {first:?}, expected {MODEL_HEADER:?}"
        )));
    }
    let end_at = text
        .rfind("END checksum=")
        .filter(|&i| i == 0 || text.as_bytes()[i - 1] == b'\n')
        .ok_or_else(|| fmt_err("truncated: missing END line"))?;
    let stored = text[end_at + "END checksum=".len()..].trim_end_matches('\n');
    let actual = hex::encode(Sha256::digest(&text.as_bytes()[..end_at]));
    if stored != actual {
        return Err(fmt_err(format!(
            "checksum mismatch: file says {stored}, contents hash to {actual}"
        )));
    }

    let mut lines = text[..end_at].lines().skip(1);
    let header = lines
        .next()
        .ok_or_else(|| fmt_err("truncated: missing parameter line"))?;
    let mut kv = BTreeMap::new();
    for pair in header.split_whitespace() {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| fmt_err(format!("bad parameter {pair:?}")))?;
        kv.insert(k, v);
    }
    let get = |k: &str| {
        kv.get(k)
            .copied()
            .ok_or_else(|| fmt_err(format!("missing parameter {k}")))
    };
    fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| fmt_err(format!("parameter {k} has bad value {v:?}")))
    }
    let kind: SolverKind = get("kind")?.parse().map_err(|_| fmt_err("unknown kind"))?;
    let d: usize = num("d", get("d")?)?;
    let k: usize = num("K", get("K")?)?;
    let bias: bool = num("bias", get("bias")?)?;
    let scaled: bool = num("scaled", get("scaled")?)?;
    let meta = ModelMeta {
        lambda: num("lambda", get("lambda")?)?,
        iterations: num("T", get("T")?)?,
        seed: num("seed", get("seed")?)?,
        task: kind.task(),
    };
    if d == 0 || (bias && d < 2) {
        return Err(fmt_err(format!("invalid dimension d={d}")));
    }

    let rest: Vec<&str> = lines.collect();
    let section = |name: &str| -> Result<usize> {
        rest.iter()
            .position(|l| *l == name)
            .ok_or_else(|| fmt_err(format!("missing section {name}")))
    };
    let (w_at, a_at, s_at) = (section("W:")?, section("ANCHORS:")?, section("SCALER:")?);
    if !(w_at == 0 && w_at < a_at && a_at < s_at) {
        return Err(fmt_err("sections out of order"));
    }
    let rows = |from: usize, to: usize, n: usize, what: &str| -> Result<Vec<Vec<f64>>> {
        let body = &rest[from + 1..to];
        if body.len() != n {
            return Err(fmt_err(format!("{what}: expected {n} rows, found {}", body.len())));
        }
        body.iter()
            .map(|l| parse_row(l, body_width(what, d, bias), what))
            .collect()
    };
    fn body_width(what: &str, d: usize, bias: bool) -> usize {
        if what == "SCALER" {
            d - usize::from(bias)
        } else {
            d
        }
    }

    let scaler = if scaled {
        let s = rows(s_at, rest.len(), 2, "SCALER")?;
        Some(FeatureScaler::from_parts(s[0].clone(), s[1].clone()).map_err(|e| e.context("SCALER"))?)
    } else {
        rows(s_at, rest.len(), 0, "SCALER")?;
        None
    };
    let preprocess = Preprocess { scaler, bias };

    let model = if kind.is_local() {
        if k == 0 {
            return Err(fmt_err("local model with K=0"));
        }
        let w = rows(w_at, a_at, k, "W")?;
        let anchors = rows(a_at, s_at, k, "ANCHORS")?;
        let method: AnchorMethod = get("anchor_method")?
            .parse()
            .map_err(|_| fmt_err("bad anchor_method"))?;
        let set = AnchorSet::new(
            anchors,
            num("sigma", get("sigma")?)?,
            method,
            num("anchor_seed", get("anchor_seed")?)?,
        )?;
        TrainedModel::Local(LocalModel::new(w.concat(), set, meta)?.with_preprocess(preprocess)?)
    } else {
        if k != 0 {
            return Err(fmt_err(format!("linear model with K={k}")));
        }
        let w = rows(w_at, a_at, 1, "W")?;
        rows(a_at, s_at, 0, "ANCHORS")?;
        TrainedModel::Linear(LinearModel::new(w.concat(), meta)?.with_preprocess(preprocess)?)
    };
    debug_assert_eq!(model.kind(), kind);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bag::{Bag, Dataset, Task};
    use crate::solver::{fit, Hyper, SolverSpec};

    fn toy() -> Dataset {
        Dataset::new(
            vec![
                Bag::new("a", 1, vec![vec![1.0, 0.3], vec![2.0, 1.0]]).unwrap(),
                Bag::new("b", -1, vec![vec![-1.0, 0.5], vec![-0.2, -0.7]]).unwrap(),
                Bag::new("c", 1, vec![vec![1.5, -0.4]]).unwrap(),
                Bag::new("d", -1, vec![vec![-2.0, 0.1]]).unwrap(),
            ],
            Task::Classification,
        )
        .unwrap()
    }

    fn models() -> Vec<TrainedModel> {
        let ds = toy();
        let mut out = Vec::new();
        for kind in SolverKind::ALL {
            let hyper = if kind.is_local() {
                Hyper::local(0.1, 3, 0.5, AnchorMethod::KMeans)
            } else {
                Hyper::linear(0.1)
            };
            let mut spec = SolverSpec::new(kind, hyper);
            spec.bias = kind == SolverKind::LinearRanker || kind == SolverKind::LocalClassifier;
            spec.scale = kind != SolverKind::LocalRanker;
            out.push(fit(&ds, &spec, 5).unwrap().0);
        }
        out
    }

    #[test]
    fn write_read_write_is_identical() {
        for m in models() {
            let text = write_model(&m);
            let back = read_model(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(write_model(&back), text);
            let a = m.score_raw(&toy()).unwrap();
            let b = back.score_raw(&toy()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_damage() {
        let text = write_model(&models()[2]);
        let e = read_model(&text.replacen("v1", "v2", 1)).unwrap_err().to_string();
        assert!(e.contains(MODEL_HEADER), "{e}");
        let cut = &text[..text.len() / 2];
        assert!(read_model(cut).unwrap_err().to_string().contains("truncated"));
        let flipped = text.replacen("W:\n", "W:\n-", 1);
        assert!(read_model(&flipped).unwrap_err().to_string().contains("checksum"));
    }

    #[test]
    fn kind_mismatch_on_typed_load() {
        let dir = tempfile::tempdir().unwrap();
        let ms = models();
        let lin = dir.path().join("lin.model");
        let loc = dir.path().join("loc.model");
        save_model(&ms[0], &lin).unwrap();
        save_model(&ms[2], &loc).unwrap();
        assert!(matches!(load_local_model(&lin), Err(MilError::KindMismatch { .. })));
        assert!(matches!(load_linear_model(&loc), Err(MilError::KindMismatch { .. })));
        assert!(load_linear_model(&lin).is_ok());
    }
}

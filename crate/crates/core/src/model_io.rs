//! Versioned JSON model files.
//!
//! ```text
//! { "format": "prgbm-model/1", "model_kind": "gbm", "n_features": 10,
//!   "config": {...}, "init": 14.2,
//!   "stages": [ { "coefficient": 0.1, "tree": { "max_depth": 3, "n_leaves": 8,
//!                 "n_features": 10, "root": { "feature": 3, "threshold": 0.41,
//!                 "left": { "value": -1.7 }, "right": {...} } } }, ... ] }
//! ```
//!
//! Forests use `"model_kind": "random_forest"` or `"extra_trees"` and carry
//! `"trees": [...]` instead of `init`/`stages`. Reals are written with
//! shortest round-trip formatting.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::boosting::{GbmConfig, GbmModel, Stage};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{ForestConfig, ForestModel};
use crate::tree::{SplitterKind, Tree};

pub const FORMAT_TAG: &str = "prgbm-model/1";

/// Any model this crate can fit.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gbm(GbmModel),
    Forest(ForestModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Gbm(_) => "gbm",
            Model::Forest(f) if f.config.splitter == SplitterKind::Deterministic => "random_forest",
            Model::Forest(_) => "extra_trees",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Gbm(m) => m.n_features,
            Model::Forest(f) => f.n_features,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Gbm(m) => m.predict(x),
            Model::Forest(f) => f.predict(x),
        }
    }

    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        match self {
            Model::Gbm(m) => m.predict_dataset(d),
            Model::Forest(f) => f.predict_dataset(d),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GbmFile {
    format: String,
    model_kind: String,
    n_features: usize,
    config: GbmConfig,
    init: f64,
    stages: Vec<Stage>,
}

#[derive(Serialize, Deserialize)]
struct ForestFile {
    format: String,
    model_kind: String,
    n_features: usize,
    config: ForestConfig,
    trees: Vec<Tree>,
}

pub fn to_json(model: &Model) -> Result<String> {
    let s = match model {
        Model::Gbm(m) => serde_json::to_string(&GbmFile {
            format: FORMAT_TAG.into(),
            model_kind: model.kind().into(),
            n_features: m.n_features,
            config: m.config,
            init: m.init,
            stages: m.stages.clone(),
        })?,
        Model::Forest(f) => serde_json::to_string(&ForestFile {
            format: FORMAT_TAG.into(),
            model_kind: model.kind().into(),
            n_features: f.n_features,
            config: f.config,
            trees: f.trees.clone(),
        })?,
    };
    Ok(s)
}

fn check_trees<'a>(trees: impl Iterator<Item = &'a Tree>, n_features: usize) -> Result<()> {
    for t in trees {
        if t.n_features != n_features {
            return Err(Error::Format(format!(
                "tree expects {} features, model has {n_features}",
                t.n_features
            )));
        }
        t.validate()?;
    }
    Ok(())
}

pub fn from_json(text: &str) -> Result<Model> {
    let value: Value = serde_json::from_str(text)?;
    let format = value.get("format").and_then(Value::as_str);
    if format != Some(FORMAT_TAG) {
        return Err(Error::Format(format!(
            "unsupported model format {format:?}, expected {FORMAT_TAG:?}"
        )));
    }
    let kind = value
        .get("model_kind")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    match kind.as_str() {
        "gbm" => {
            let f: GbmFile = serde_json::from_value(value)?;
            if !f.init.is_finite() || f.stages.iter().any(|s| !s.coefficient.is_finite()) {
                return Err(Error::Format("non-finite model coefficient".into()));
            }
            check_trees(f.stages.iter().map(|s| &s.tree), f.n_features)?;
            Ok(Model::Gbm(GbmModel {
                init: f.init,
                stages: f.stages,
                config: f.config,
                n_features: f.n_features,
            }))
        }
        "random_forest" | "extra_trees" => {
            let f: ForestFile = serde_json::from_value(value)?;
            if f.trees.is_empty() {
                return Err(Error::Format("forest without trees".into()));
            }
            check_trees(f.trees.iter(), f.n_features)?;
            Ok(Model::Forest(ForestModel {
                trees: f.trees,
                config: f.config,
                n_features: f.n_features,
            }))
        }
        other => Err(Error::Format(format!("unknown model_kind {other:?}"))),
    }
}

pub fn write_model<W: Write>(model: &Model, mut writer: W) -> Result<()> {
    let text = to_json(model)?;
    writer
        .write_all(text.as_bytes())
        .and_then(|_| writer.write_all(b"\n"))
        .and_then(|_| writer.flush())
        .map_err(|e| Error::io("<model writer>", e))
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_model(model, BufWriter::new(file))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let mut text = String::new();
    BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?)
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

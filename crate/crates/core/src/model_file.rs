//! JSON model files.
//!
//! ```json
//! {
//!   "alphabets": [["-1", "+1"], ["-1", "+1"]],
//!   "mu": [0.25, 0.25, 0.25, 0.25],
//!   "nu": [[1, 0], [1, 0], [0, 1], [0, 1]],
//!   "output": ["-1", "+1"],
//!   "gamma": [["-1"], ["+1"]],
//!   "tol": 1e-9,
//!   "names": ["X", "Y"]
//! }
//! ```
//!
//! States are indexed mixed-radix with the first factor fastest. Labels may be
//! strings, numbers or booleans. `gamma`, `tol` and `names` are optional.
//! Distributions off by more than `1e-6` are rejected; smaller deviations are
//! renormalized, with a warning above `1e-9`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{Channel, InputDistribution, Model};
use crate::error::{Error, Result};
use crate::partition::{FiniteSet, Partition, ProductSpace};

pub const REJECT_TOL: f64 = 1e-6;
pub const WARN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Text(String),
    Number(serde_json::Number),
    Bool(bool),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Text(s) => f.write_str(s),
            Label::Number(n) => write!(f, "{n}"),
            Label::Bool(b) => write!(f, "{b}"),
        }
    }
}

fn strings(labels: &[Label]) -> Vec<String> {
    labels.iter().map(ToString::to_string).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub alphabets: Vec<Vec<Label>>,
    pub mu: Vec<f64>,
    pub nu: Vec<Vec<f64>>,
    pub output: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<Vec<Label>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

fn normalized(what: &str, values: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entry {v} is not a probability"
        )));
    }
    let sum: f64 = values.iter().sum();
    let dev = (sum - 1.0).abs();
    if dev > REJECT_TOL {
        return Err(Error::NotNormalized(sum));
    }
    if dev > WARN_TOL {
        log::warn!("{what} sums to {sum}; renormalizing");
    }
    Ok(values.iter().map(|v| v / sum).collect())
}

/// Partition of `out` from lists of labels.
pub fn gamma_from_labels(out: &FiniteSet, blocks: &[Vec<String>]) -> Result<Partition> {
    let idx = blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|l| {
                    out.position(l).ok_or_else(|| {
                        Error::InvalidModel(format!("gamma names unknown output '{l}'"))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Partition::from_blocks(out.size(), &idx)
}

impl ModelFile {
    pub fn into_model(self) -> Result<Model> {
        let factors = self
            .alphabets
            .iter()
            .map(|a| FiniteSet::new(strings(a)))
            .collect::<Result<Vec<_>>>()?;
        let space = ProductSpace::new(factors)?;
        let out = FiniteSet::new(strings(&self.output))?;
        let mu = InputDistribution::new(space.clone(), normalized("mu", &self.mu)?)?;
        let rows = self
            .nu
            .iter()
            .enumerate()
            .map(|(x, r)| normalized(&format!("nu row {x}"), r))
            .collect::<Result<Vec<_>>>()?;
        let nu = Channel::new(space, out.clone(), rows)?;
        let mut model = Model::new(mu, nu)?;
        if let Some(g) = &self.gamma {
            let blocks: Vec<Vec<String>> = g.iter().map(|b| strings(b)).collect();
            model = model.with_gamma(gamma_from_labels(&out, &blocks)?)?;
        }
        if let Some(t) = self.tol {
            model = model.with_tol(t)?;
        }
        if let Some(names) = self.names {
            model = model.with_names(names)?;
        }
        Ok(model)
    }

    pub fn from_model(model: &Model) -> ModelFile {
        let text = |v: &[String]| v.iter().cloned().map(Label::Text).collect::<Vec<_>>();
        let out = model.nu().out();
        let gamma = (!model.gamma().is_discrete()).then(|| {
            model
                .gamma()
                .blocks()
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|&c| Label::Text(out.label(c).to_string()))
                        .collect()
                })
                .collect()
        });
        ModelFile {
            alphabets: model
                .space()
                .factors()
                .iter()
                .map(|f| text(f.labels()))
                .collect(),
            mu: model.mu().prob().to_vec(),
            nu: (0..model.num_inputs())
                .map(|x| model.nu().row(x).to_vec())
                .collect(),
            output: text(out.labels()),
            gamma,
            tol: Some(model.tol()),
            names: Some(model.names().to_vec()),
        }
    }
}

pub fn parse_model(json: &str) -> Result<Model> {
    serde_json::from_str::<ModelFile>(json)?.into_model()
}

pub fn load_model(path: &Path) -> Result<Model> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn model_to_json(model: &Model) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_model(model))?;
    s.push('\n');
    Ok(s)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(model)?)?;
    Ok(())
}

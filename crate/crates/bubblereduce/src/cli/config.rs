//! JSON model files.

use crate::error::{Error, Result};
use crate::model::{MaxPointModel, PerturbativeLandscape, PerturbativeModel, SpaceDims};
use crate::reduction::{BracketForm, PerturbativeOptions, SeparatedOptions};
use serde::Deserialize;
use std::path::Path;

/// A model file; `"kind"` selects the variant.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    FlatPoints(PerturbativeConfig),
    MaxPoints(MaxPointConfig),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatPoint {
    pub eta: Vec<f64>,
    #[serde(default)]
    pub base: f64,
    pub gamma: f64,
    pub xi: Vec<f64>,
    pub a: Vec<f64>,
    pub sigma: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbativeConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub points: Vec<FlatPoint>,
    pub epsilon: Option<f64>,
    /// "averaged" (default) or "exact".
    #[serde(default)]
    pub bracket: Option<String>,
    pub mu: Option<f64>,
    /// [m1, m2] box of the reduced map.
    #[serde(rename = "box")]
    pub bounds: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxPoint {
    pub eta: Vec<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    pub gamma: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxPointConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub points: Vec<MaxPoint>,
    pub a0: f64,
    pub a1: f64,
    pub sigma: f64,
    pub nu: f64,
    /// [β₁, β₂] of the λ-box.
    pub beta: Option<[f64; 2]>,
    pub mu: Option<f64>,
    pub starts: Option<usize>,
    pub seed: Option<u64>,
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

impl PerturbativeConfig {
    pub fn dims(&self) -> Result<SpaceDims> {
        SpaceDims::new(self.n, self.k, self.h)
    }

    pub fn landscape(&self, epsilon: f64) -> Result<PerturbativeLandscape> {
        let dims = self.dims()?;
        let patches = self
            .points
            .iter()
            .map(|p| {
                PerturbativeModel::new(dims, p.eta.clone(), p.base, p.gamma, p.xi.clone(), p.a.clone(), p.sigma, p.delta, epsilon)
            })
            .collect::<Result<Vec<_>>>()?;
        PerturbativeLandscape::new(patches, epsilon)
    }

    pub fn options(&self) -> PerturbativeOptions {
        let mut o = PerturbativeOptions::default();
        if self.bracket.as_deref() == Some("exact") {
            o.bracket = BracketForm::Exact;
        }
        if let Some(mu) = self.mu {
            o.mu = mu;
        }
        o.bounds = self.bounds.map(|[a, b]| (a, b));
        o
    }
}

impl MaxPointConfig {
    pub fn model(&self) -> Result<MaxPointModel> {
        let dims = SpaceDims::new(self.n, self.k, self.h)?;
        let pick = |f: fn(&MaxPoint) -> f64| self.points.iter().map(f).collect::<Vec<f64>>();
        MaxPointModel::new(
            dims,
            self.points.iter().map(|p| p.eta.clone()).collect(),
            pick(|p| p.k),
            pick(|p| p.gamma),
            self.a0,
            self.a1,
            pick(|p| p.q),
            self.sigma,
            self.nu,
        )
    }

    pub fn options(&self) -> SeparatedOptions {
        let mut o = SeparatedOptions::default();
        if let Some([b1, b2]) = self.beta {
            o.beta1 = b1;
            o.beta2 = b2;
        }
        if let Some(mu) = self.mu {
            o.mu = mu;
        }
        if let Some(s) = self.starts {
            o.starts = s;
        }
        if let Some(s) = self.seed {
            o.seed = s;
        }
        o
    }
}

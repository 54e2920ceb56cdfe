//! Group definitions in TOML.
//!
//! ```toml
//! version = 1
//! name = "heisenberg"
//! layer_dims = [2, 1]
//! labels = ["X", "Y", "Z"]        # optional
//!
//! [[brackets]]
//! i = 0
//! j = 1
//! coeffs = { "2" = 1.0 }          # [e_0, e_1] = e_2; keys are indices or labels
//!
//! [metric]                         # optional, defaults to the identity
//! gram = [[1.0, 0.0], [0.0, 1.0]]
//! ```
//!
//! Only one of `[e_i, e_j]` and `[e_j, e_i]` may be given; the other is
//! filled in by antisymmetry. The result must pass
//! [`GradedAlgebra::verify_graded`]; gradings are never inferred.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::GradedAlgebra;
use crate::error::{Error, Result};
use crate::metric::HorizontalMetric;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub coeffs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricEntry {
    pub gram: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub version: u32,
    pub name: String,
    pub layer_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default)]
    pub brackets: Vec<BracketEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricEntry>,
}

/// A loaded and verified definition.
#[derive(Debug, Clone)]
pub struct GroupDefinition {
    pub algebra: GradedAlgebra,
    pub metric: HorizontalMetric,
}

impl GroupFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Definition(e.message().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<GroupDefinition> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Definition(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)?.build()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("group file serializes")
    }

    /// Builds the algebra, checks the grading and the metric.
    pub fn build(&self) -> Result<GroupDefinition> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Definition(format!("unsupported version {} (expected {FORMAT_VERSION})", self.version)));
        }
        if self.layer_dims.is_empty() || self.layer_dims.contains(&0) {
            return Err(Error::Definition("layer_dims must be a non-empty list of positive integers".into()));
        }
        let dim: usize = self.layer_dims.iter().sum();
        if let Some(labels) = &self.labels {
            if labels.len() != dim {
                return Err(Error::Definition(format!("{} labels given for dimension {dim}", labels.len())));
            }
        }
        let index = |key: &str| -> Result<usize> {
            if let Ok(l) = key.trim().parse::<usize>() {
                return Ok(l);
            }
            self.labels
                .as_ref()
                .and_then(|ls| ls.iter().position(|l| l == key))
                .ok_or_else(|| Error::Definition(format!("unknown basis element '{key}'")))
        };
        let mut brackets = Vec::with_capacity(self.brackets.len());
        for b in &self.brackets {
            let coeffs = b.coeffs.iter().map(|(k, &v)| Ok((index(k)?, v))).collect::<Result<Vec<_>>>()?;
            brackets.push((b.i, b.j, coeffs));
        }
        let mut algebra = GradedAlgebra::from_brackets(self.name.clone(), self.layer_dims.clone(), &brackets)?;
        if let Some(labels) = &self.labels {
            algebra = algebra.with_labels(labels.clone())?;
        }
        let report = algebra.verify_graded();
        if !report.is_valid() {
            return Err(Error::Definition(report.summary()));
        }
        let d1 = self.layer_dims[0];
        let metric = match &self.metric {
            None => HorizontalMetric::euclidean(d1),
            Some(m) => {
                if m.gram.len() != d1 || m.gram.iter().any(|row| row.len() != d1) {
                    return Err(Error::Definition(format!("metric gram must be {d1}×{d1}")));
                }
                HorizontalMetric::new(m.gram.concat(), d1).map_err(|e| Error::Definition(e.to_string()))?
            }
        };
        Ok(GroupDefinition { algebra, metric })
    }

    /// The definition file describing an existing algebra.
    pub fn from_algebra(alg: &GradedAlgebra, metric: Option<&HorizontalMetric>) -> Self {
        let n = alg.dim();
        let mut brackets = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let coeffs: BTreeMap<String, f64> =
                    (0..n).filter(|&l| alg.constant(i, j, l) != 0.0).map(|l| (l.to_string(), alg.constant(i, j, l))).collect();
                if !coeffs.is_empty() {
                    brackets.push(BracketEntry { i, j, coeffs });
                }
            }
        }
        let metric = metric.map(|m| MetricEntry { gram: m.gram().chunks(m.dim()).map(|r| r.to_vec()).collect() });
        Self {
            version: FORMAT_VERSION,
            name: alg.name().to_string(),
            layer_dims: alg.layer_dims().to_vec(),
            labels: Some(alg.labels().to_vec()),
            brackets,
            metric,
        }
    }
}

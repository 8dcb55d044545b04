//! JSON system descriptions.
//!
//! ```json
//! {"d": 1, "m": 1,
//!  "monomials": [{"row": 1, "col": 1, "re": -1.0, "im": 0.0, "conj": [0], "unconj": [0]}],
//!  "initial": [[0.5, 0.0]], "dt": 0.001, "steps": 1000,
//!  "driving": [[[0.0, 0.0]], ...],
//!  "norm_closure": {"enabled": false, "eps": 1e-6}}
//! ```

use super::{augment_constant, norm_closure, AugmentedSystem, Monomial, OdeSystemSpec};
use crate::error::{Error, Result};
use crate::linalg::C64;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialEntry {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
    pub conj: Vec<usize>,
    pub unconj: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormClosureEntry {
    pub enabled: bool,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub d: usize,
    pub m: usize,
    pub monomials: Vec<MonomialEntry>,
    pub initial: Vec<[f64; 2]>,
    pub dt: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driving: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_closure: Option<NormClosureEntry>,
}

fn complex(pair: &[f64; 2]) -> C64 {
    C64::new(pair[0], pair[1])
}

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

impl SystemDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_spec(&self) -> OdeSystemSpec {
        OdeSystemSpec {
            d: self.d,
            m: self.m,
            monomials: self
                .monomials
                .iter()
                .map(|e| Monomial::new(e.row, e.col, C64::new(e.re, e.im), e.conj.clone(), e.unconj.clone()))
                .collect(),
            initial_state: self.initial.iter().map(complex).collect(),
            driving: self
                .driving
                .as_ref()
                .map(|bs| bs.iter().map(|b| b.iter().map(complex).collect()).collect())
                .unwrap_or_default(),
            dt: self.dt,
            steps: self.steps,
        }
    }

    pub fn from_spec(spec: &OdeSystemSpec) -> Self {
        SystemDocument {
            d: spec.d,
            m: spec.m,
            monomials: spec
                .monomials
                .iter()
                .map(|m| MonomialEntry {
                    row: m.row,
                    col: m.col,
                    re: m.coeff.re,
                    im: m.coeff.im,
                    conj: m.conj_idx.clone(),
                    unconj: m.unconj_idx.clone(),
                })
                .collect(),
            initial: spec.initial_state.iter().map(pair).collect(),
            dt: spec.dt,
            steps: spec.steps,
            driving: if spec.driving.is_empty() {
                None
            } else {
                Some(spec.driving.iter().map(|b| b.iter().map(pair).collect()).collect())
            },
            norm_closure: None,
        }
    }

    /// Augment, then apply norm closure when enabled.
    pub fn encode(&self) -> Result<AugmentedSystem> {
        let aug = augment_constant(&self.to_spec())?;
        match &self.norm_closure {
            Some(nc) if nc.enabled => norm_closure(&aug, nc.eps).map_err(|e| match e {
                Error::Domain { what, value } => Error::field(
                    "norm_closure.eps",
                    format!("{value} outside the domain of {what}"),
                ),
                other => other,
            }),
            _ => Ok(aug),
        }
    }
}

/// Canonical JSON form of an encoded system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AugmentedDocument {
    pub original_dim: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    pub m: usize,
    pub m_eff: usize,
    pub norm_coord: Option<usize>,
    pub taylor_order: usize,
    pub scale: f64,
    pub dt: f64,
    pub steps: usize,
    pub monomials: Vec<MonomialEntry>,
    pub initial: Vec<[f64; 2]>,
    pub driving: Vec<Vec<[f64; 2]>>,
}

impl From<&AugmentedSystem> for AugmentedDocument {
    fn from(aug: &AugmentedSystem) -> Self {
        AugmentedDocument {
            original_dim: aug.original_dim,
            dim: aug.dim,
            m: aug.base_degree,
            m_eff: aug.degree,
            norm_coord: aug.norm_coord,
            taylor_order: aug.taylor_order,
            scale: aug.scale,
            dt: aug.dt,
            steps: aug.steps,
            monomials: aug
                .monomials
                .iter()
                .map(|m| MonomialEntry {
                    row: m.row,
                    col: m.col,
                    re: m.coeff.re,
                    im: m.coeff.im,
                    conj: m.conj_idx.clone(),
                    unconj: m.unconj_idx.clone(),
                })
                .collect(),
            initial: aug.initial_state.iter().map(pair).collect(),
            driving: aug.driving.iter().map(|b| b.iter().map(pair).collect()).collect(),
        }
    }
}

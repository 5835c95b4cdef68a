//! On-disk representation of measures.
//!
//! ```json
//! {
//!   "dim": 1,
//!   "atoms": [{"x": [0.5], "w": 1.0}],
//!   "density": {"origin": [0.0], "spacing": 0.125, "shape": [8], "cells": [0.125, ...]}
//! }
//! ```
//!
//! `atoms` and `density` are both optional. For one-dimensional densities
//! `shape` may be omitted and defaults to `[cells.len()]`.

use serde::{Deserialize, Serialize};

use super::{AtomicMeasure, GridDensity, MixedMeasure};
use crate::error::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomJson {
    pub x: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityJson {
    pub origin: Vec<f64>,
    pub spacing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
    pub cells: Vec<f64>,
}

impl TryFrom<MeasureJson> for MixedMeasure {
    type Error = Error;

    fn try_from(json: MeasureJson) -> Result<Self, Error> {
        let dim = json.dim;
        let atomic =
            AtomicMeasure::from_pairs(dim, json.atoms.iter().map(|a| (a.x.as_slice(), a.w)))?;
        let density = match json.density {
            None => None,
            Some(d) => {
                let shape = d.shape.unwrap_or_else(|| vec![d.cells.len()]);
                Some(GridDensity::new(dim, d.origin, d.spacing, shape, d.cells)?)
            }
        };
        MixedMeasure::new(dim, atomic, density)
    }
}

impl From<MixedMeasure> for MeasureJson {
    fn from(m: MixedMeasure) -> Self {
        let atoms = m
            .atomic()
            .iter()
            .map(|(x, w)| AtomJson { x: x.to_vec(), w })
            .collect();
        let density = m.density().map(|g| DensityJson {
            origin: g.origin().to_vec(),
            spacing: g.spacing(),
            shape: Some(g.shape().to_vec()),
            cells: g.cells().to_vec(),
        });
        MeasureJson {
            dim: m.dim(),
            atoms,
            density,
        }
    }
}

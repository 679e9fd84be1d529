//! Grid sweeps over embedding kind, feature dimension, gamma and state.

use serde::{Deserialize, Serialize};

use super::data::LabeledDataset;
use super::experiment::{run_states, EmbeddingKind, ExperimentConfig, MetricSummary, StateKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub embeddings: Vec<EmbeddingKind>,
    pub dims: Vec<usize>,
    pub gammas: Vec<f64>,
    pub states: Vec<StateKind>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            embeddings: vec![EmbeddingKind::Rff],
            dims: vec![4],
            gammas: (-10..=0).map(|k| 2f64.powi(k)).collect(),
            states: vec![StateKind::Mixed],
        }
    }
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.embeddings.len() * self.dims.len() * self.gammas.len() * self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub embedding: EmbeddingKind,
    pub dim_features: usize,
    pub gamma: f64,
    pub state: StateKind,
    /// `None` on success, otherwise the error message.
    pub error: Option<String>,
    pub summary: Option<MetricSummary>,
}

/// Runs every grid point. Rows are ordered by embedding, dimension, gamma,
/// then state; a failing configuration yields a row with its error and the
/// sweep continues.
pub fn run_sweep(dataset: &LabeledDataset, base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &embedding in &grid.embeddings {
        for &dim_features in &grid.dims {
            for &gamma in &grid.gammas {
                let config = ExperimentConfig {
                    embedding,
                    dim_features,
                    gamma,
                    ..base.clone()
                };
                match run_states(dataset, &config, &grid.states) {
                    Ok(outcomes) => rows.extend(outcomes.into_iter().map(|o| SweepRow {
                        embedding,
                        dim_features,
                        gamma,
                        state: o.state,
                        error: None,
                        summary: Some(o.summary),
                    })),
                    Err(e) => rows.extend(grid.states.iter().map(|&state| SweepRow {
                        embedding,
                        dim_features,
                        gamma,
                        state,
                        error: Some(e.to_string()),
                        summary: None,
                    })),
                }
            }
        }
    }
    Ok(rows)
}

use serde::{Deserialize, Serialize};

use super::table::PredictiveTable;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub observed: Vec<u32>,
    pub observed_mass: f64,
    /// Prior predictive probability of an outcome no more probable than
    /// the observed one. Small values signal prior-data conflict.
    pub tail_probability: f64,
}

impl ConflictReport {
    pub fn is_conflict(&self, level: f64) -> bool {
        self.tail_probability <= level
    }
}

/// Total mass of the cells whose mass does not exceed the observed cell's.
pub fn prior_data_conflict(table: &PredictiveTable, observed: &[u32]) -> Result<ConflictReport> {
    let observed_mass = table.mass(observed)?;
    let tail_probability = table.masses.iter().filter(|&&m| m <= observed_mass).sum();
    Ok(ConflictReport {
        observed: observed.to_vec(),
        observed_mass,
        tail_probability,
    })
}

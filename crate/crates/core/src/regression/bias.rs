//! Bias against and in favor of a point hypothesis `beta_i = psi0`.
//!
//! Everything is computed from prior predictive tables: the unconditional
//! table and tables conditional on `beta_i` taking a fixed value. The
//! relative belief ratio of `psi` at an outcome is the ratio of the
//! conditional mass to the unconditional mass.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::cache::TableCache;
use super::data::Experiment;
use super::table::{build_predictive_table, PredictiveTable};
use crate::normal::NormalPrior;
use crate::seeding::MonteCarlo;
use crate::{Error, Result};

/// Per-cell ratios `conditional / unconditional`.
///
/// A cell with zero unconditional but positive conditional mass gets `+inf`;
/// a cell with both masses zero gets `NaN` and is ignored by every sum.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRatios {
    pub ratios: Vec<f64>,
    pub infinite_cells: usize,
    pub undefined_cells: usize,
}

pub fn cell_ratios(
    conditional: &PredictiveTable,
    unconditional: &PredictiveTable,
) -> Result<CellRatios> {
    conditional.same_shape(unconditional)?;
    let mut infinite_cells = 0;
    let mut undefined_cells = 0;
    let ratios = conditional
        .masses
        .iter()
        .zip(&unconditional.masses)
        .map(|(&c, &u)| {
            if u > 0.0 {
                c / u
            } else if c > 0.0 {
                infinite_cells += 1;
                f64::INFINITY
            } else {
                undefined_cells += 1;
                f64::NAN
            }
        })
        .collect();
    Ok(CellRatios {
        ratios,
        infinite_cells,
        undefined_cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasAgainst {
    pub value: f64,
    /// Cells with zero unconditional mass (skipped in the sum).
    pub zero_mass_cells: usize,
}

/// Conditional mass of the cells where the hypothesis ratio is at most 1.
pub fn bias_against_from_tables(
    unconditional: &PredictiveTable,
    at_hypothesis: &PredictiveTable,
) -> Result<BiasAgainst> {
    let r = cell_ratios(at_hypothesis, unconditional)?;
    let value = r
        .ratios
        .iter()
        .zip(&at_hypothesis.masses)
        .filter(|(rb, _)| **rb <= 1.0)
        .map(|(_, m)| m)
        .sum();
    Ok(BiasAgainst {
        value,
        zero_mass_cells: r.infinite_cells + r.undefined_cells,
    })
}

/// Bias in favor evaluated at one alternative `psi_star`.
///
/// `formula` is the probability, when `beta_i = psi_star`, of data giving
/// evidence for `psi0`. `tabulated` sums the `psi0`-conditional masses over
/// the cells where the ratio at `psi_star` is at least 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasInFavorPoint {
    pub psi_star: f64,
    pub formula: f64,
    pub tabulated: f64,
    pub zero_mass_cells: usize,
}

pub fn bias_in_favor_from_tables(
    unconditional: &PredictiveTable,
    at_hypothesis: &PredictiveTable,
    at_alternative: &PredictiveTable,
    psi_star: f64,
) -> Result<BiasInFavorPoint> {
    let r0 = cell_ratios(at_hypothesis, unconditional)?;
    let rs = cell_ratios(at_alternative, unconditional)?;
    let formula = r0
        .ratios
        .iter()
        .zip(&at_alternative.masses)
        .filter(|(rb, _)| **rb >= 1.0)
        .map(|(_, m)| m)
        .sum();
    let tabulated = rs
        .ratios
        .iter()
        .zip(&at_hypothesis.masses)
        .filter(|(rb, _)| **rb >= 1.0)
        .map(|(_, m)| m)
        .sum();
    Ok(BiasInFavorPoint {
        psi_star,
        formula,
        tabulated,
        zero_mass_cells: r0.infinite_cells
            + r0.undefined_cells
            + rs.infinite_cells
            + rs.undefined_cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasInFavor {
    pub delta: f64,
    pub points: Vec<BiasInFavorPoint>,
    /// Largest `formula` value over `points`.
    pub formula_sup: f64,
    /// Largest `tabulated` value over `points`.
    pub tabulated_sup: f64,
}

impl BiasInFavor {
    fn from_points(delta: f64, points: Vec<BiasInFavorPoint>) -> Self {
        let formula_sup = points
            .iter()
            .map(|p| p.formula)
            .fold(f64::NEG_INFINITY, f64::max);
        let tabulated_sup = points
            .iter()
            .map(|p| p.tabulated)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            delta,
            points,
            formula_sup,
            tabulated_sup,
        }
    }
}

/// Bias computations for `beta_i = psi0` under a normal prior, sharing the
/// unconditional table and caching conditional tables by value.
pub struct BiasStudy<'a> {
    prior: &'a NormalPrior,
    experiment: &'a Experiment,
    coordinate: usize,
    psi0: f64,
    mc: MonteCarlo,
    cache: Option<&'a TableCache>,
    tables: Mutex<HashMap<u64, PredictiveTable>>,
    unconditional: Mutex<Option<PredictiveTable>>,
}

impl<'a> BiasStudy<'a> {
    pub fn new(
        prior: &'a NormalPrior,
        experiment: &'a Experiment,
        coordinate: usize,
        psi0: f64,
        mc: MonteCarlo,
    ) -> Result<Self> {
        prior.validate()?;
        experiment.validate()?;
        if prior.dim() != experiment.columns {
            return Err(Error::Domain(format!(
                "prior has dimension {} but the design has {} columns",
                prior.dim(),
                experiment.columns
            )));
        }
        if coordinate >= prior.dim() {
            return Err(Error::Domain(format!(
                "coordinate {coordinate} out of range for a {}-dimensional prior",
                prior.dim()
            )));
        }
        if !psi0.is_finite() {
            return Err(Error::Domain("hypothesized value must be finite".into()));
        }
        Ok(Self {
            prior,
            experiment,
            coordinate,
            psi0,
            mc,
            cache: None,
            tables: Mutex::new(HashMap::new()),
            unconditional: Mutex::new(None),
        })
    }

    pub fn with_cache(mut self, cache: &'a TableCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn psi0(&self) -> f64 {
        self.psi0
    }

    fn build(
        &self,
        sampler: &crate::normal::MultivariateNormal,
        stage: &str,
    ) -> Result<PredictiveTable> {
        let mc = self.mc.stage(stage);
        match self.cache {
            Some(cache) => cache.get_or_build(sampler, self.experiment, mc, || {
                build_predictive_table(sampler, self.experiment, mc)
            }),
            None => build_predictive_table(sampler, self.experiment, mc),
        }
    }

    pub fn unconditional_table(&self) -> Result<PredictiveTable> {
        let mut slot = self.unconditional.lock().expect("table lock poisoned");
        if let Some(t) = slot.as_ref() {
            return Ok(t.clone());
        }
        let t = self.build(&self.prior.sampler()?, "table/unconditional")?;
        *slot = Some(t.clone());
        Ok(t)
    }

    /// Table conditional on `beta_i = value`.
    pub fn conditional_table(&self, value: f64) -> Result<PredictiveTable> {
        if !value.is_finite() {
            return Err(Error::Domain("conditioning value must be finite".into()));
        }
        let bits = value.to_bits();
        if let Some(t) = self.tables.lock().expect("table lock poisoned").get(&bits) {
            return Ok(t.clone());
        }
        let sampler = self.prior.condition(self.coordinate, value)?.sampler()?;
        let stage = format!("table/conditional/{}/{bits:016x}", self.coordinate);
        let t = self.build(&sampler, &stage)?;
        self.tables
            .lock()
            .expect("table lock poisoned")
            .insert(bits, t.clone());
        Ok(t)
    }

    pub fn bias_against(&self) -> Result<BiasAgainst> {
        bias_against_from_tables(
            &self.unconditional_table()?,
            &self.conditional_table(self.psi0)?,
        )
    }

    pub fn bias_in_favor_at(&self, psi_star: f64) -> Result<BiasInFavorPoint> {
        bias_in_favor_from_tables(
            &self.unconditional_table()?,
            &self.conditional_table(self.psi0)?,
            &self.conditional_table(psi_star)?,
            psi_star,
        )
    }

    /// Bias in favor at `psi0 - delta` and `psi0 + delta`.
    pub fn bias_in_favor(&self, delta: f64) -> Result<BiasInFavor> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let points = [self.psi0 - delta, self.psi0 + delta]
            .into_iter()
            .map(|v| self.bias_in_favor_at(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(BiasInFavor::from_points(delta, points))
    }
}

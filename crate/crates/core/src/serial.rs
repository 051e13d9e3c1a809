//! Lag-indexed association measures computed from [`LagTables`].
//!
//! Every measure returns a [`SerialMeasureResult`] carrying the scalar
//! estimate and, where the measure decomposes, its per-cell or
//! per-category components. Cell components are laid out row-major over
//! `(current i, past j)`, i.e. entry `i * r + j`.
//!
//! Aggregation of the components back to the value:
//!
//! | measure | components | value |
//! |---|---|---|
//! | `gk_tau` | `Σ_i p_ij²/p_j` per column `j` | `(Σ c - Σ p_i²)/(1 - Σ p_i²)` |
//! | `gk_lambda` | `max_i p_ij` per column `j` | `(Σ c - max p_i)/(1 - max p_i)` |
//! | `uncertainty` | `p_ij ln(p_ij/(p_i p_j))` per cell | `-Σ c / Σ p_i ln p_i` |
//! | `pearson` | `(p_ij - p_i p_j)²/(p_i p_j)` per cell | `n Σ c`, `n = T - l` |
//! | `phi2` | as `pearson` | `Σ c` |
//! | `cramers_v` | as `pearson` | `sqrt(Σ c/(r-1))` |
//! | `cohens_kappa` | `(p_jj - p_j²)/(1 - Σ p_i²)` per `j` | `Σ c` |
//! | `total_correlation` | `ψ_ij` per cell | `Σ c² / r²` |
//!
//! Sample estimates are reported raw; they are not clamped into the
//! population ranges.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::CategoricalSeries;
use crate::tables::LagTables;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SerialMeasure {
    GkTau,
    GkLambda,
    Uncertainty,
    Pearson,
    Phi2,
    Sakoda,
    CramersV,
    CohensKappa,
    TotalCorrelation,
}

impl SerialMeasure {
    pub const ALL: [SerialMeasure; 9] = [
        SerialMeasure::GkTau,
        SerialMeasure::GkLambda,
        SerialMeasure::Uncertainty,
        SerialMeasure::Pearson,
        SerialMeasure::Phi2,
        SerialMeasure::Sakoda,
        SerialMeasure::CramersV,
        SerialMeasure::CohensKappa,
        SerialMeasure::TotalCorrelation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SerialMeasure::GkTau => "gk_tau",
            SerialMeasure::GkLambda => "gk_lambda",
            SerialMeasure::Uncertainty => "uncertainty",
            SerialMeasure::Pearson => "pearson",
            SerialMeasure::Phi2 => "phi2",
            SerialMeasure::Sakoda => "sakoda",
            SerialMeasure::CramersV => "cramers_v",
            SerialMeasure::CohensKappa => "cohens_kappa",
            SerialMeasure::TotalCorrelation => "total_correlation",
        }
    }

    /// Number of components for an alphabet of size `r`, if the measure has any.
    pub fn component_count(self, r: usize) -> Option<usize> {
        match self {
            SerialMeasure::GkTau | SerialMeasure::GkLambda | SerialMeasure::CohensKappa => Some(r),
            SerialMeasure::Sakoda => None,
            _ => Some(r * r),
        }
    }

    pub fn evaluate(self, tables: &LagTables) -> Result<SerialMeasureResult> {
        match self {
            SerialMeasure::GkTau => gk_tau(tables),
            SerialMeasure::GkLambda => gk_lambda(tables),
            SerialMeasure::Uncertainty => uncertainty_coefficient(tables),
            SerialMeasure::Pearson => pearson_measure(tables),
            SerialMeasure::Phi2 => phi2_measure(tables),
            SerialMeasure::Sakoda => sakoda_measure(tables),
            SerialMeasure::CramersV => cramers_v(tables),
            SerialMeasure::CohensKappa => cohens_kappa(tables),
            SerialMeasure::TotalCorrelation => total_correlation(tables),
        }
    }
}

impl fmt::Display for SerialMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SerialMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SerialMeasure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown serial measure {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialMeasureResult {
    pub measure: SerialMeasure,
    pub lag: usize,
    pub value: f64,
    pub components: Option<Vec<f64>>,
}

impl SerialMeasureResult {
    fn new(measure: SerialMeasure, tables: &LagTables, value: f64, components: Option<Vec<f64>>) -> Self {
        Self {
            measure,
            lag: tables.lag(),
            value,
            components,
        }
    }
}

/// Evaluates `measure` on `series` at a positive lag.
pub fn serial_measure(
    series: &CategoricalSeries,
    lag: usize,
    measure: SerialMeasure,
) -> Result<SerialMeasureResult> {
    if lag == 0 {
        return Err(invalid("serial measures require a positive lag"));
    }
    measure.evaluate(&LagTables::new(series, lag)?)
}

fn require_dispersed(tables: &LagTables) -> Result<()> {
    if tables.max_marginal() >= 1.0 {
        Err(Error::OnePointMarginal)
    } else {
        Ok(())
    }
}

/// Squared standardized deviations from independence, one per cell.
/// Cells with `p_i p_j = 0` contribute zero.
fn chi_cells(tables: &LagTables) -> Vec<f64> {
    let p = tables.marginals();
    let joint = tables.joint();
    let r = p.len();
    let mut cells = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            let e = p[i] * p[j];
            cells.push(if e > 0.0 {
                let d = joint[(i, j)] - e;
                d * d / e
            } else {
                0.0
            });
        }
    }
    cells
}

pub fn gk_tau(tables: &LagTables) -> Result<SerialMeasureResult> {
    require_dispersed(tables)?;
    let p = tables.marginals();
    let joint = tables.joint();
    let components: Vec<f64> = (0..p.len())
        .map(|j| {
            if p[j] > 0.0 {
                joint.column(j).iter().map(|x| x * x).sum::<f64>() / p[j]
            } else {
                0.0
            }
        })
        .collect();
    let sum_sq = tables.sum_sq_marginals();
    let value = (components.iter().sum::<f64>() - sum_sq) / (1.0 - sum_sq);
    Ok(SerialMeasureResult::new(SerialMeasure::GkTau, tables, value, Some(components)))
}

pub fn gk_lambda(tables: &LagTables) -> Result<SerialMeasureResult> {
    require_dispersed(tables)?;
    let joint = tables.joint();
    let components: Vec<f64> = joint
        .column_iter()
        .map(|c| c.iter().copied().fold(0.0, f64::max))
        .collect();
    let max_p = tables.max_marginal();
    let value = (components.iter().sum::<f64>() - max_p) / (1.0 - max_p);
    Ok(SerialMeasureResult::new(SerialMeasure::GkLambda, tables, value, Some(components)))
}

pub fn uncertainty_coefficient(tables: &LagTables) -> Result<SerialMeasureResult> {
    require_dispersed(tables)?;
    let p = tables.marginals();
    let joint = tables.joint();
    let r = p.len();
    let mut components = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            let pij = joint[(i, j)];
            components.push(if pij > 0.0 {
                pij * (pij / (p[i] * p[j])).ln()
            } else {
                0.0
            });
        }
    }
    let denom: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
    let value = -components.iter().sum::<f64>() / denom;
    Ok(SerialMeasureResult::new(SerialMeasure::Uncertainty, tables, value, Some(components)))
}

pub fn phi2_measure(tables: &LagTables) -> Result<SerialMeasureResult> {
    let cells = chi_cells(tables);
    let value = cells.iter().sum();
    Ok(SerialMeasureResult::new(SerialMeasure::Phi2, tables, value, Some(cells)))
}

/// Pearson's statistic with `n = T - l` lagged pairs.
pub fn pearson_measure(tables: &LagTables) -> Result<SerialMeasureResult> {
    let cells = chi_cells(tables);
    let value = tables.pairs() as f64 * cells.iter().sum::<f64>();
    Ok(SerialMeasureResult::new(SerialMeasure::Pearson, tables, value, Some(cells)))
}

pub fn sakoda_measure(tables: &LagTables) -> Result<SerialMeasureResult> {
    let phi2: f64 = chi_cells(tables).iter().sum();
    let r = tables.categories() as f64;
    let value = (r * phi2 / ((r - 1.0) * (1.0 + phi2))).sqrt();
    Ok(SerialMeasureResult::new(SerialMeasure::Sakoda, tables, value, None))
}

pub fn cramers_v(tables: &LagTables) -> Result<SerialMeasureResult> {
    let cells = chi_cells(tables);
    let r = tables.categories() as f64;
    let value = (cells.iter().sum::<f64>() / (r - 1.0)).sqrt();
    Ok(SerialMeasureResult::new(SerialMeasure::CramersV, tables, value, Some(cells)))
}

pub fn cohens_kappa(tables: &LagTables) -> Result<SerialMeasureResult> {
    require_dispersed(tables)?;
    let p = tables.marginals();
    let joint = tables.joint();
    let denom = 1.0 - tables.sum_sq_marginals();
    let components: Vec<f64> = (0..p.len())
        .map(|j| (joint[(j, j)] - p[j] * p[j]) / denom)
        .collect();
    let value = components.iter().sum();
    Ok(SerialMeasureResult::new(SerialMeasure::CohensKappa, tables, value, Some(components)))
}

/// Lagged correlations between binarized components, `None` where a
/// marginal is 0 or 1.
pub fn psi_matrix(tables: &LagTables) -> DMatrix<Option<f64>> {
    let p = tables.marginals();
    let joint = tables.joint();
    let r = p.len();
    let degenerate = |x: f64| x <= 0.0 || x >= 1.0;
    DMatrix::from_fn(r, r, |i, j| {
        if degenerate(p[i]) || degenerate(p[j]) {
            None
        } else {
            let sd = (p[i] * (1.0 - p[i]) * p[j] * (1.0 - p[j])).sqrt();
            Some((joint[(i, j)] - p[i] * p[j]) / sd)
        }
    })
}

pub fn total_correlation(tables: &LagTables) -> Result<SerialMeasureResult> {
    if let Some(k) = tables.marginals().iter().position(|&p| p <= 0.0 || p >= 1.0) {
        return Err(Error::TotalCorrelationUndefined(k + 1));
    }
    let r = tables.categories();
    let psi = psi_matrix(tables);
    let mut components = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            components.push(psi[(i, j)].expect("marginals checked above"));
        }
    }
    let value = components.iter().map(|x| x * x).sum::<f64>() / (r * r) as f64;
    Ok(SerialMeasureResult::new(SerialMeasure::TotalCorrelation, tables, value, Some(components)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn s1_tables() -> LagTables {
        let s = CategoricalSeries::from_one_based(&[1, 2, 1, 1, 2], 2).unwrap();
        LagTables::new(&s, 1).unwrap()
    }

    fn periodic_tables() -> LagTables {
        let codes: Vec<usize> = (0..600).map(|t| t % 3 + 1).collect();
        let s = CategoricalSeries::from_one_based(&codes, 3).unwrap();
        LagTables::new(&s, 3).unwrap()
    }

    fn independent_tables() -> LagTables {
        LagTables::independent(vec![0.5, 0.3, 0.2], 1, 200).unwrap()
    }

    #[test]
    fn s1_values() {
        let t = s1_tables();
        let v = |m: SerialMeasure| m.evaluate(&t).unwrap().value;
        assert_abs_diff_eq!(v(SerialMeasure::GkTau), 0.3273, epsilon = 1e-4);
        assert_abs_diff_eq!(v(SerialMeasure::GkLambda), 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(v(SerialMeasure::Uncertainty), 0.4250, epsilon = 1e-3);
        assert_abs_diff_eq!(v(SerialMeasure::Pearson), 1.9028, epsilon = 1e-3);
        assert_abs_diff_eq!(v(SerialMeasure::Phi2), 0.4757, epsilon = 1e-3);
        assert_abs_diff_eq!(v(SerialMeasure::Sakoda), 0.8029, epsilon = 1e-3);
        assert_abs_diff_eq!(v(SerialMeasure::CramersV), 0.6897, epsilon = 1e-3);
        assert_abs_diff_eq!(v(SerialMeasure::CohensKappa), -0.5625, epsilon = 1e-12);
        assert_abs_diff_eq!(v(SerialMeasure::TotalCorrelation), 0.4575, epsilon = 1e-3);
    }

    #[test]
    fn s1_psi_entries() {
        let psi = psi_matrix(&s1_tables());
        assert_abs_diff_eq!(psi[(0, 0)].unwrap(), -0.4583, epsilon = 1e-3);
        assert_abs_diff_eq!(psi[(1, 0)].unwrap(), 1.0833, epsilon = 1e-3);
    }

    #[test]
    fn independence_null() {
        let t = independent_tables();
        for m in SerialMeasure::ALL {
            let v = m.evaluate(&t).unwrap().value;
            assert!(v.abs() < 1e-12, "{m}: {v}");
        }
        assert!(psi_matrix(&t).iter().all(|x| x.unwrap().abs() < 1e-12));
    }

    #[test]
    fn perfect_dependence_ceiling() {
        let t = periodic_tables();
        for m in [
            SerialMeasure::GkTau,
            SerialMeasure::GkLambda,
            SerialMeasure::Uncertainty,
            SerialMeasure::CramersV,
            SerialMeasure::CohensKappa,
            SerialMeasure::Sakoda,
        ] {
            let v = m.evaluate(&t).unwrap().value;
            assert!((v - 1.0).abs() < 1e-12, "{m}: {v}");
        }
        assert_abs_diff_eq!(phi2_measure(&t).unwrap().value, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn one_point_marginal_errors() {
        let s = CategoricalSeries::from_one_based(&[2, 2, 2, 2], 3).unwrap();
        let t = LagTables::new(&s, 1).unwrap();
        for m in [
            SerialMeasure::GkTau,
            SerialMeasure::GkLambda,
            SerialMeasure::Uncertainty,
            SerialMeasure::CohensKappa,
        ] {
            assert_eq!(m.evaluate(&t).unwrap_err(), Error::OnePointMarginal);
        }
        assert!(matches!(
            total_correlation(&t),
            Err(Error::TotalCorrelationUndefined(_))
        ));
    }

    #[test]
    fn unseen_category_contributes_nothing_to_chi_cells() {
        let a = Arc::new(crate::Alphabet::numbered(3).unwrap());
        let s = CategoricalSeries::from_one_based_with(&[1, 2, 1, 1, 2], a).unwrap();
        let t = LagTables::new(&s, 1).unwrap();
        assert_abs_diff_eq!(phi2_measure(&t).unwrap().value, 0.47569, epsilon = 1e-4);
        assert!(psi_matrix(&t).row(2).iter().all(Option::is_none));
    }

    #[test]
    fn lag_zero_rejected_by_series_entry_point() {
        let s = CategoricalSeries::from_one_based(&[1, 2, 1], 2).unwrap();
        assert!(serial_measure(&s, 0, SerialMeasure::CramersV).is_err());
    }

    #[test]
    fn names_round_trip() {
        for m in SerialMeasure::ALL {
            assert_eq!(m.name().parse::<SerialMeasure>().unwrap(), m);
        }
    }
}

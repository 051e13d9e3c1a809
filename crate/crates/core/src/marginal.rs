//! Dispersion of the marginal distribution.
//!
//! All three measures are normalized to `[0, 1]`: zero for a one-point
//! distribution, one for the uniform distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionMeasure {
    Gini,
    Entropy,
    Chebycheff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionValue {
    pub measure: DispersionMeasure,
    pub value: f64,
}

fn categories(p: &[f64]) -> Result<f64> {
    if p.len() < 2 {
        return Err(Error::TooFewCategories);
    }
    Ok(p.len() as f64)
}

/// `g = r/(r-1) (1 - Σ p_i²)`.
pub fn gini_index(p: &[f64]) -> Result<f64> {
    let r = categories(p)?;
    let sum_sq: f64 = p.iter().map(|x| x * x).sum();
    Ok(r / (r - 1.0) * (1.0 - sum_sq))
}

/// Normalized Shannon entropy, with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    let r = categories(p)?;
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
    Ok(-h / r.ln())
}

/// `c = r/(r-1) (1 - max_i p_i)`.
pub fn chebycheff_dispersion(p: &[f64]) -> Result<f64> {
    let r = categories(p)?;
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(r / (r - 1.0) * (1.0 - max))
}

pub fn dispersion(measure: DispersionMeasure, p: &[f64]) -> Result<DispersionValue> {
    let value = match measure {
        DispersionMeasure::Gini => gini_index(p)?,
        DispersionMeasure::Entropy => entropy(p)?,
        DispersionMeasure::Chebycheff => chebycheff_dispersion(p)?,
    };
    Ok(DispersionValue { measure, value })
}

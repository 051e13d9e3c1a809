//! Cross-dependence between a categorical series and an aligned numeric series.
//!
//! For lag `l >= 0` the pairs are `(Y_t, Z_{t-l})`; for `l < 0` they are
//! `(Y_t, Z_{t+|l|})`. Covariances use the overlapping window of
//! `T - |l|` pairs with that window length as divisor. Category
//! probabilities and the numeric variance come from the full series.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::CategoricalSeries;

/// Real-valued series aligned index-by-index with a categorical series.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericSeries(Vec<f64>);

impl NumericSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("numeric series contains non-finite values"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Variance with divisor `T`.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.0.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.0.len() as f64
    }

    /// Sample quantile by linear interpolation between order statistics.
    pub fn quantile(&self, level: f64) -> f64 {
        let mut sorted = self.0.clone();
        sorted.sort_by(f64::total_cmp);
        quantile_sorted(&sorted, level)
    }
}

pub(crate) fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&hi) if frac > 0.0 => sorted[lo] + frac * (hi - sorted[lo]),
        _ => sorted[lo],
    }
}

/// Levels `0.05, 0.10, ..., 0.95`.
pub fn default_rho_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedCorrelationResult {
    pub lag: isize,
    /// `ψ*_i(l)` per category; `None` for categories with marginal 0 or 1.
    pub correlations: Vec<Option<f64>>,
    /// `ψ^ρ_i(l)`, one row per category and one column per grid level.
    pub quantile_correlations: Vec<Vec<Option<f64>>>,
    pub rho_grid: Vec<f64>,
    pub total_mixed_cor: f64,
    pub total_mixed_qcor: f64,
}

fn check_pair(cat: &CategoricalSeries, num: &NumericSeries, lag: isize) -> Result<()> {
    if num.len() != cat.len() {
        return Err(Error::LengthMismatch {
            expected: cat.len(),
            got: num.len(),
        });
    }
    if lag.unsigned_abs() >= cat.len() {
        return Err(Error::LagTooLarge {
            lag: lag.unsigned_abs(),
            len: cat.len(),
        });
    }
    Ok(())
}

/// Index pairs `(t, s)` of `(Y_t, Z_s)` in the overlap window.
fn window(len: usize, lag: isize) -> impl Iterator<Item = (usize, usize)> {
    let shift = lag.unsigned_abs();
    (0..len - shift).map(move |k| if lag >= 0 { (k + shift, k) } else { (k, k + shift) })
}

/// Windowed covariance between the indicator of `category` and `z`.
fn indicator_cov(codes: &[usize], category: usize, z: &[f64], lag: isize) -> f64 {
    let n = (codes.len() - lag.unsigned_abs()) as f64;
    let (mut sy, mut sz, mut syz) = (0.0, 0.0, 0.0);
    for (t, s) in window(codes.len(), lag) {
        let y = if codes[t] == category { 1.0 } else { 0.0 };
        sy += y;
        sz += z[s];
        syz += y * z[s];
    }
    syz / n - (sy / n) * (sz / n)
}

pub fn mixed_cross_correlation(
    cat: &CategoricalSeries,
    num: &NumericSeries,
    lag: isize,
) -> Result<Vec<Option<f64>>> {
    check_pair(cat, num, lag)?;
    let var = num.variance();
    if var <= 0.0 {
        return Err(Error::DegenerateNumeric);
    }
    let p = cat.marginal_probabilities();
    Ok((0..cat.categories())
        .map(|i| {
            let spread = p[i] * (1.0 - p[i]);
            (spread > 0.0)
                .then(|| indicator_cov(cat.codes(), i, num.values(), lag) / (spread * var).sqrt())
        })
        .collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|&rho| !(rho > 0.0 && rho < 1.0)) {
        return Err(invalid("quantile levels must lie strictly inside (0, 1)"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("quantile levels must be strictly increasing"));
    }
    Ok(())
}

/// `ψ^ρ_i(l)` for every category (rows) and grid level (columns).
pub fn mixed_quantile_cross_correlation(
    cat: &CategoricalSeries,
    num: &NumericSeries,
    lag: isize,
    rho_grid: &[f64],
) -> Result<DMatrix<Option<f64>>> {
    check_pair(cat, num, lag)?;
    check_grid(rho_grid)?;
    if num.variance() <= 0.0 {
        return Err(Error::DegenerateNumeric);
    }
    let mut sorted = num.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let p = cat.marginal_probabilities();
    let r = cat.categories();
    let mut out = DMatrix::from_element(r, rho_grid.len(), None);
    for (k, &rho) in rho_grid.iter().enumerate() {
        let q = quantile_sorted(&sorted, rho);
        let below: Vec<f64> = num
            .values()
            .iter()
            .map(|&z| if z <= q { 1.0 } else { 0.0 })
            .collect();
        for i in 0..r {
            let spread = p[i] * (1.0 - p[i]);
            if spread > 0.0 {
                let cov = indicator_cov(cat.codes(), i, &below, lag);
                out[(i, k)] = Some(cov / (spread * rho * (1.0 - rho)).sqrt());
            }
        }
    }
    Ok(out)
}

fn mean_square(values: impl Iterator<Item = Option<f64>>, r: usize) -> Result<f64> {
    let mut sum = 0.0;
    for (i, v) in values.enumerate() {
        let v = v.ok_or_else(|| {
            invalid(format!("category {} has a degenerate marginal", i % r + 1))
        })?;
        sum += v * v;
    }
    Ok(sum / r as f64)
}

/// `Ψ*_1(l)`: mean over categories of squared cross-correlations.
pub fn total_mixed_cor(cat: &CategoricalSeries, num: &NumericSeries, lag: isize) -> Result<f64> {
    let psi = mixed_cross_correlation(cat, num, lag)?;
    mean_square(psi.into_iter(), cat.categories())
}

/// Integral over `(0, 1)` of `f` sampled on `grid`, by the trapezoid rule
/// with `f` held constant below the first and above the last level.
pub fn integrate_levels(grid: &[f64], values: &[f64]) -> f64 {
    let n = grid.len();
    let mut area = values[0] * grid[0] + values[n - 1] * (1.0 - grid[n - 1]);
    for k in 1..n {
        area += 0.5 * (values[k] + values[k - 1]) * (grid[k] - grid[k - 1]);
    }
    area
}

/// `Ψ*_2(l)`: mean over categories of the integrated squared quantile
/// cross-correlations.
pub fn total_mixed_qcor(
    cat: &CategoricalSeries,
    num: &NumericSeries,
    lag: isize,
    rho_grid: &[f64],
) -> Result<f64> {
    if rho_grid.len() < 2 {
        return Err(invalid("quantile grid needs at least two levels"));
    }
    let psi = mixed_quantile_cross_correlation(cat, num, lag, rho_grid)?;
    let r = cat.categories();
    let mut total = 0.0;
    for i in 0..r {
        let squares = psi
            .row(i)
            .iter()
            .map(|v| v.map(|x| x * x))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| invalid(format!("category {} has a degenerate marginal", i + 1)))?;
        total += integrate_levels(rho_grid, &squares);
    }
    Ok(total / r as f64)
}

/// All mixed features at one lag.
pub fn mixed_correlations(
    cat: &CategoricalSeries,
    num: &NumericSeries,
    lag: isize,
    rho_grid: &[f64],
) -> Result<MixedCorrelationResult> {
    let correlations = mixed_cross_correlation(cat, num, lag)?;
    let quantile = mixed_quantile_cross_correlation(cat, num, lag, rho_grid)?;
    Ok(MixedCorrelationResult {
        lag,
        total_mixed_cor: total_mixed_cor(cat, num, lag)?,
        total_mixed_qcor: total_mixed_qcor(cat, num, lag, rho_grid)?,
        quantile_correlations: quantile
            .row_iter()
            .map(|row| row.iter().copied().collect())
            .collect(),
        correlations,
        rho_grid: rho_grid.to_vec(),
    })
}

//! Marginal and lagged joint frequency tables.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::CategoricalSeries;

/// Counts and relative frequencies of a series at one lag.
///
/// Row index is the current value `X_t`, column index the past value
/// `X_{t-l}`. Marginals divide by `T`, joint frequencies by `T - l`, so
/// row sums of the joint table need not equal the marginals in finite
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LagTables {
    lag: usize,
    len: usize,
    counts: Vec<usize>,
    joint_counts: DMatrix<usize>,
    marginals: Vec<f64>,
    joint: DMatrix<f64>,
}

impl LagTables {
    pub fn new(series: &CategoricalSeries, lag: usize) -> Result<Self> {
        let len = series.len();
        if len == 0 {
            return Err(Error::EmptySeries);
        }
        if lag >= len {
            return Err(Error::LagTooLarge { lag, len });
        }
        let r = series.categories();
        let codes = series.codes();
        let counts = series.counts();
        let mut joint_counts = DMatrix::<usize>::zeros(r, r);
        for t in lag..len {
            joint_counts[(codes[t], codes[t - lag])] += 1;
        }
        let pairs = (len - lag) as f64;
        let joint = joint_counts.map(|n| n as f64 / pairs);
        let marginals = counts.iter().map(|&n| n as f64 / len as f64).collect();
        Ok(Self {
            lag,
            len,
            counts,
            joint_counts,
            marginals,
            joint,
        })
    }

    /// Builds tables directly from probabilities, for population-level
    /// evaluation of the measures. Counts are left empty.
    pub fn from_probabilities(
        marginals: Vec<f64>,
        joint: DMatrix<f64>,
        lag: usize,
        len: usize,
    ) -> Result<Self> {
        let r = marginals.len();
        if r < 2 {
            return Err(Error::TooFewCategories);
        }
        if joint.nrows() != r || joint.ncols() != r {
            return Err(Error::LengthMismatch {
                expected: r,
                got: joint.nrows(),
            });
        }
        if lag >= len {
            return Err(Error::LagTooLarge { lag, len });
        }
        Ok(Self {
            lag,
            len,
            counts: Vec::new(),
            joint_counts: DMatrix::zeros(0, 0),
            marginals,
            joint,
        })
    }

    /// Tables of a serially independent process: `p_ij = p_i p_j`.
    pub fn independent(marginals: Vec<f64>, lag: usize, len: usize) -> Result<Self> {
        let r = marginals.len();
        let joint = DMatrix::from_fn(r, r, |i, j| marginals[i] * marginals[j]);
        Self::from_probabilities(marginals, joint, lag, len)
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Series length `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of lagged pairs `T - l`.
    pub fn pairs(&self) -> usize {
        self.len - self.lag
    }

    pub fn categories(&self) -> usize {
        self.marginals.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn joint_counts(&self) -> &DMatrix<usize> {
        &self.joint_counts
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    pub fn joint(&self) -> &DMatrix<f64> {
        &self.joint
    }

    /// `p_{i|j}(l) = p_ij(l) / p_j`; columns of unseen categories are `None`.
    pub fn conditional(&self) -> DMatrix<Option<f64>> {
        let r = self.categories();
        DMatrix::from_fn(r, r, |i, j| {
            let pj = self.marginals[j];
            (pj > 0.0).then(|| self.joint[(i, j)] / pj)
        })
    }

    pub(crate) fn sum_sq_marginals(&self) -> f64 {
        self.marginals.iter().map(|p| p * p).sum()
    }

    pub(crate) fn max_marginal(&self) -> f64 {
        self.marginals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn lag_tables(series: &CategoricalSeries, lag: usize) -> Result<LagTables> {
    LagTables::new(series, lag)
}

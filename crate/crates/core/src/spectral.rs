//! Spectral envelope and optimal scalings of a categorical series.
//!
//! The series is binarized and the last category's indicator is dropped
//! (the indicators sum to one, so only `r - 1` of them are linearly
//! independent); that category implicitly receives scaling 0. The
//! spectral matrix of the retained indicators is estimated by a smoothed
//! periodogram and the envelope at each Fourier frequency is the largest
//! eigenvalue of its real part relative to the sample covariance.
//!
//! Smoothing applies a Daniell (flat) window of odd length `w` twice,
//! i.e. triangular weights `(w - |h|)/w²` for `|h| < w`. A single flat
//! pass would spread a line spectrum into a plateau of width `w` with no
//! unique maximum.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlannerScalar;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mixed::NumericSeries;
use crate::series::CategoricalSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEnvelopeResult {
    /// Fourier frequencies `j/T`, `j = 1..=T/2`.
    pub frequencies: Vec<f64>,
    pub envelope: Vec<f64>,
    /// Optimal scaling of the first `r - 1` categories at each frequency,
    /// normalized so that the scaled series has unit variance.
    pub scalings: Vec<Vec<f64>>,
    pub window: usize,
}

impl SpectralEnvelopeResult {
    /// Frequency with the largest envelope value.
    pub fn peak(&self) -> (f64, f64) {
        let (k, v) = self
            .envelope
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        (self.frequencies[k], v)
    }

    /// Full-length scaling vector with 0 for the dropped category.
    pub fn full_scaling(&self, k: usize) -> Vec<f64> {
        let mut g = self.scalings[k].clone();
        g.push(0.0);
        g
    }
}

/// Covariance and smoothed real cross-spectra of a multivariate series.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedSpectra {
    pub frequencies: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub spectra: Vec<DMatrix<f64>>,
    pub window: usize,
}

/// Daniell window length `2⌊√T/2⌋ + 1`.
pub fn default_window(len: usize) -> usize {
    2 * ((len as f64).sqrt() / 2.0).floor() as usize + 1
}

fn check_window(len: usize, window: usize) -> Result<()> {
    if len < 8 {
        return Err(invalid("spectral envelope needs at least 8 observations"));
    }
    if window.is_multiple_of(2) {
        return Err(invalid("smoothing window length must be odd"));
    }
    if 2 * window >= len {
        return Err(invalid("smoothing window must be shorter than half the series"));
    }
    if window == 0 {
        return Err(invalid("smoothing window must be positive"));
    }
    Ok(())
}

/// Smoothed spectra of the columns of `data` (rows are time points).
pub fn smoothed_spectra(data: &DMatrix<f64>, window: usize) -> Result<SmoothedSpectra> {
    let len = data.nrows();
    let dim = data.ncols();
    check_window(len, window)?;
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let covariance = centered.transpose() * &centered / len as f64;

    let fft = FftPlannerScalar::<f64>::new().plan_fft_forward(len);
    let norm = (len as f64).sqrt().recip();
    let transforms: Vec<Vec<Complex<f64>>> = centered
        .column_iter()
        .map(|col| {
            let mut buf: Vec<Complex<f64>> = col.iter().map(|&x| Complex::new(x * norm, 0.0)).collect();
            fft.process(&mut buf);
            buf
        })
        .collect();

    let raw = |m: usize| {
        DMatrix::from_fn(dim, dim, |a, b| (transforms[a][m] * transforms[b][m].conj()).re)
    };
    let weights = smoothing_weights(window);
    let reach = window - 1;
    let raws: Vec<DMatrix<f64>> = (0..len).map(raw).collect();
    let frequencies: Vec<f64> = (1..=len / 2).map(|m| m as f64 / len as f64).collect();
    let spectra = (1..=len / 2)
        .map(|m| {
            let mut acc = DMatrix::zeros(dim, dim);
            for (h, w) in weights.iter().enumerate() {
                let idx = (m + len + h - reach) % len;
                acc += &raws[idx] * *w;
            }
            acc
        })
        .collect();
    Ok(SmoothedSpectra {
        frequencies,
        covariance,
        spectra,
        window,
    })
}

/// Weights of the twice-applied Daniell window, offsets `-(w-1)..=(w-1)`.
pub fn smoothing_weights(window: usize) -> Vec<f64> {
    let w = window as f64;
    (0..2 * window - 1)
        .map(|k| (w - (k as f64 - (window - 1) as f64).abs()) / (w * w))
        .collect()
}

/// Indicator matrix (`T × (r-1)`) with the last category dropped.
pub fn reduced_indicators(series: &CategoricalSeries) -> DMatrix<f64> {
    let b = series.binarize();
    DMatrix::from_fn(series.len(), series.categories() - 1, |t, i| b.get(t, i))
}

pub fn spectral_envelope(series: &CategoricalSeries, window: usize) -> Result<SpectralEnvelopeResult> {
    envelope_of(&reduced_indicators(series), window)
}

pub(crate) fn envelope_of(data: &DMatrix<f64>, window: usize) -> Result<SpectralEnvelopeResult> {
    let SmoothedSpectra {
        frequencies,
        covariance,
        spectra,
        window,
    } = smoothed_spectra(data, window)?;
    let scale = covariance.diagonal().max();
    let chol = Cholesky::new(covariance.clone())
        .filter(|c| c.l().diagonal().iter().all(|&d| d * d > 1e-12 * scale))
        .ok_or_else(|| {
            Error::Singular(
                "indicator covariance is singular; drop categories that are constant or absent \
                 (including the last one) from the alphabet"
                    .into(),
            )
        })?;
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(data.ncols(), data.ncols()))
        .expect("cholesky factor is invertible");
    let l_inv_t = l_inv.transpose();

    let pairs: Vec<(f64, Vec<f64>)> = spectra
        .par_iter()
        .map(|f| {
            let whitened = &l_inv * f * &l_inv_t;
            let sym = (&whitened + whitened.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            let k = eig.eigenvalues.imax();
            let u: DVector<f64> = eig.eigenvectors.column(k).into_owned();
            let mut gamma = &l_inv_t * u;
            // Sign convention: largest-magnitude component positive.
            if gamma[gamma.iamax()] < 0.0 {
                gamma.neg_mut();
            }
            (eig.eigenvalues[k].max(0.0), gamma.iter().copied().collect())
        })
        .collect();
    let (envelope, scalings) = pairs.into_iter().unzip();
    Ok(SpectralEnvelopeResult {
        frequencies,
        envelope,
        scalings,
        window,
    })
}

/// Smoothed periodogram of a numeric series at the Fourier frequencies.
pub fn smoothed_periodogram(values: &[f64], window: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let data = DMatrix::from_column_slice(values.len(), 1, values);
    let s = smoothed_spectra(&data, window)?;
    Ok((s.frequencies, s.spectra.iter().map(|m| m[(0, 0)]).collect()))
}

/// Numeric series `γ_{X_t}`.
pub fn scaled_series(series: &CategoricalSeries, gamma: &[f64]) -> Result<NumericSeries> {
    if gamma.len() != series.categories() {
        return Err(Error::LengthMismatch {
            expected: series.categories(),
            got: gamma.len(),
        });
    }
    NumericSeries::new(series.codes().iter().map(|&c| gamma[c]).collect())
}

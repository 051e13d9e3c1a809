//! Feature vectors, dissimilarities between series, classical
//! two-dimensional scaling and distance-sum outlier ranking.
//!
//! `d_CC` and `d_B` are squared Euclidean distances between the vectors
//! returned by [`dcc_features`] and [`db_features`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::format::{Cell, Table};
use crate::marginal::{dispersion, DispersionMeasure};
use crate::mixed::quantile_sorted;
use crate::serial::{cohens_kappa, cramers_v, total_correlation, SerialMeasure};
use crate::series::{Alphabet, CategoricalSeries};
use crate::tables::LagTables;

pub const DEFAULT_MAX_LAG: usize = 1;
pub const DEFAULT_RANGE_FACTOR: f64 = 1.0;

/// One extractable feature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Dispersion(DispersionMeasure),
    /// The `r` marginal probabilities.
    Marginal,
    Serial(SerialMeasure),
}

impl Feature {
    pub fn name(self) -> &'static str {
        match self {
            Feature::Dispersion(DispersionMeasure::Gini) => "gini",
            Feature::Dispersion(DispersionMeasure::Entropy) => "entropy",
            Feature::Dispersion(DispersionMeasure::Chebycheff) => "chebycheff",
            Feature::Marginal => "marginal",
            Feature::Serial(m) => m.name(),
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gini" => Feature::Dispersion(DispersionMeasure::Gini),
            "entropy" => Feature::Dispersion(DispersionMeasure::Entropy),
            "chebycheff" => Feature::Dispersion(DispersionMeasure::Chebycheff),
            "marginal" => Feature::Marginal,
            other => Feature::Serial(other.parse().map_err(|_| invalid(format!("unknown feature {other:?}")))?),
        })
    }
}

/// Which estimator (and lag and component, where applicable) a feature
/// value comes from. Components are zero-based; cell components are
/// row-major over `(current i, past j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub measure: String,
    pub lag: Option<usize>,
    pub component: Option<usize>,
}

impl FeatureDescriptor {
    /// Column name such as `gini`, `cohens_kappa.lag2`, `cramers_v.lag1.2_3`
    /// or `marginal.4`, with one-based category indices.
    pub fn column_name(&self, r: usize, cells: bool) -> String {
        let mut s = self.measure.clone();
        if let Some(l) = self.lag {
            s.push_str(&format!(".lag{l}"));
        }
        if let Some(c) = self.component {
            if cells {
                s.push_str(&format!(".{}_{}", c / r + 1, c % r + 1));
            } else {
                s.push_str(&format!(".{}", c + 1));
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema: Vec<FeatureDescriptor>,
    pub categories: usize,
}

impl FeatureVector {
    fn new(categories: usize) -> Self {
        Self {
            values: Vec::new(),
            schema: Vec::new(),
            categories,
        }
    }

    fn push(&mut self, measure: &str, lag: Option<usize>, component: Option<usize>, value: f64) {
        self.values.push(value);
        self.schema.push(FeatureDescriptor {
            measure: measure.to_string(),
            lag,
            component,
        });
    }

    fn push_all(&mut self, measure: &str, lag: Option<usize>, values: &[f64]) {
        for (k, &v) in values.iter().enumerate() {
            self.push(measure, lag, Some(k), v);
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn column_names(&self) -> Vec<String> {
        let r = self.categories;
        self.schema
            .iter()
            .map(|d| {
                let cells = d.measure.parse::<SerialMeasure>().is_ok_and(|m| m.component_count(r) == Some(r * r));
                d.column_name(r, cells)
            })
            .collect()
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).powi(2))
            .sum()
    }
}

/// A list of features evaluated at the given lags. With `expand`, serial
/// measures contribute their components instead of the scalar value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureExtraction {
    pub features: Vec<Feature>,
    pub lags: Vec<usize>,
    pub expand: bool,
}

impl FeatureExtraction {
    pub fn extract(&self, series: &CategoricalSeries) -> Result<FeatureVector> {
        if self.features.is_empty() {
            return Err(invalid("no features requested"));
        }
        let p = series.marginal_probabilities();
        let mut out = FeatureVector::new(series.categories());
        let mut tables = Vec::with_capacity(self.lags.len());
        if self.features.iter().any(|f| matches!(f, Feature::Serial(_))) {
            if self.lags.is_empty() {
                return Err(invalid("serial features need at least one lag"));
            }
            for &l in &self.lags {
                if l == 0 {
                    return Err(invalid("serial measures require a positive lag"));
                }
                tables.push(LagTables::new(series, l)?);
            }
        }
        for &f in &self.features {
            match f {
                Feature::Dispersion(m) => out.push(f.name(), None, None, dispersion(m, &p)?.value),
                Feature::Marginal => out.push_all(f.name(), None, &p),
                Feature::Serial(m) => {
                    for t in &tables {
                        let res = m.evaluate(t)?;
                        match (&res.components, self.expand) {
                            (Some(c), true) => out.push_all(m.name(), Some(t.lag()), c),
                            _ => out.push(m.name(), Some(t.lag()), None, res.value),
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn extract_corpus(&self, corpus: &[CategoricalSeries]) -> Result<Vec<FeatureVector>> {
        check_alphabets(corpus)?;
        corpus.par_iter().map(|s| self.extract(s)).collect()
    }
}

/// Feature rows for a corpus as CSV: an `id` column, then one column per
/// feature.
pub fn feature_table(ids: &[String], vectors: &[FeatureVector]) -> Table {
    let header = vectors.first().map(FeatureVector::column_names).unwrap_or_default();
    let mut t = Table::new(std::iter::once("id".to_string()).chain(header));
    for (id, v) in ids.iter().zip(vectors) {
        t.push(
            std::iter::once(Cell::from(id.as_str()))
                .chain(v.values.iter().map(|&x| Cell::from(x)))
                .collect(),
        );
    }
    t
}

fn check_lag(max_lag: usize) -> Result<()> {
    if max_lag == 0 {
        Err(invalid("maximum lag must be positive"))
    } else {
        Ok(())
    }
}

/// Cramér cell terms and Cohen terms for lags `1..=max_lag`, then the
/// marginals: `L (r² + r) + r` values.
pub fn dcc_features(series: &CategoricalSeries, max_lag: usize) -> Result<FeatureVector> {
    check_lag(max_lag)?;
    let mut out = FeatureVector::new(series.categories());
    for l in 1..=max_lag {
        let t = LagTables::new(series, l)?;
        let cells = cramers_v(&t)?.components.unwrap_or_default();
        let kappa = cohens_kappa(&t)?.components.unwrap_or_default();
        out.push_all("cramers_v", Some(l), &cells);
        out.push_all("cohens_kappa", Some(l), &kappa);
    }
    out.push_all("marginal", None, &series.marginal_probabilities());
    Ok(out)
}

/// `ψ_ij(l)` for lags `1..=max_lag`, then the marginals: `L r² + r` values.
pub fn db_features(series: &CategoricalSeries, max_lag: usize) -> Result<FeatureVector> {
    check_lag(max_lag)?;
    let mut out = FeatureVector::new(series.categories());
    for l in 1..=max_lag {
        let t = LagTables::new(series, l)?;
        let psi = total_correlation(&t)?.components.unwrap_or_default();
        out.push_all("total_correlation", Some(l), &psi);
    }
    out.push_all("marginal", None, &series.marginal_probabilities());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Squared Euclidean distance of [`dcc_features`].
    Dcc,
    /// Squared Euclidean distance of [`db_features`].
    Db,
    /// Plain Euclidean distance of [`db_features`].
    Euclidean,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Dcc => "dcc",
            Metric::Db => "db",
            Metric::Euclidean => "euclidean",
        }
    }

    pub fn features(self, series: &CategoricalSeries, max_lag: usize) -> Result<FeatureVector> {
        match self {
            Metric::Dcc => dcc_features(series, max_lag),
            Metric::Db | Metric::Euclidean => db_features(series, max_lag),
        }
    }

    fn between(self, a: &FeatureVector, b: &FeatureVector) -> f64 {
        let d = a.squared_distance(b);
        if self == Metric::Euclidean {
            d.sqrt()
        } else {
            d
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dcc" => Ok(Metric::Dcc),
            "db" => Ok(Metric::Db),
            "euclidean" => Ok(Metric::Euclidean),
            _ => Err(invalid(format!("unknown metric {s:?}; expected dcc, db or euclidean"))),
        }
    }
}

/// Direct metric evaluation between two series.
pub fn distance(a: &CategoricalSeries, b: &CategoricalSeries, metric: Metric, max_lag: usize) -> Result<f64> {
    check_alphabets(&[a.clone(), b.clone()])?;
    Ok(metric.between(&metric.features(a, max_lag)?, &metric.features(b, max_lag)?))
}

fn same_alphabet(a: &Arc<Alphabet>, b: &Arc<Alphabet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn check_alphabets(corpus: &[CategoricalSeries]) -> Result<()> {
    if let Some(first) = corpus.first() {
        if let Some(k) = corpus.iter().position(|s| !same_alphabet(s.alphabet(), first.alphabet())) {
            return Err(Error::AlphabetMismatch(k));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub metric: Option<Metric>,
    pub max_lag: usize,
    pub ids: Vec<String>,
    pub values: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[(a, b)]
    }

    /// Wraps a precomputed symmetric matrix with a zero diagonal.
    pub fn from_matrix(values: DMatrix<f64>, ids: Vec<String>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n || ids.len() != n {
            return Err(invalid("distance matrix must be square with one id per row"));
        }
        for a in 0..n {
            if values[(a, a)] != 0.0 {
                return Err(invalid("distance matrix must have a zero diagonal"));
            }
            for b in 0..a {
                let (x, y) = (values[(a, b)], values[(b, a)]);
                if x.is_nan() || x < 0.0 || (x - y).abs() > 1e-12 * x.abs().max(1.0) {
                    return Err(invalid("distance matrix must be symmetric and non-negative"));
                }
            }
        }
        Ok(Self {
            metric: None,
            max_lag: 0,
            ids,
            values,
        })
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.len() {
            return Err(invalid(format!("expected {} ids, got {}", self.len(), ids.len())));
        }
        self.ids = ids;
        Ok(self)
    }

    /// Square CSV with an `id` column and a header of series ids.
    pub fn table(&self) -> Table {
        let mut t = Table::new(std::iter::once("id".to_string()).chain(self.ids.iter().cloned()));
        for (a, id) in self.ids.iter().enumerate() {
            t.push(
                std::iter::once(Cell::from(id.as_str()))
                    .chain((0..self.len()).map(|b| Cell::from(self.values[(a, b)])))
                    .collect(),
            );
        }
        t
    }
}

fn default_ids(n: usize) -> Vec<String> {
    (1..=n).map(|k| k.to_string()).collect()
}

/// Pairwise squared (or plain, for `euclidean`) distances between feature
/// vectors, each unordered pair computed once.
pub fn feature_distance_matrix(vectors: &[FeatureVector], squared: bool) -> Result<DMatrix<f64>> {
    let n = vectors.len();
    if let Some(k) = vectors.iter().position(|v| v.len() != vectors[0].len()) {
        return Err(Error::LengthMismatch {
            expected: vectors[0].len(),
            got: vectors[k].len(),
        });
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            ((a + 1)..n)
                .map(|b| {
                    let d = vectors[a].squared_distance(&vectors[b]);
                    if squared {
                        d
                    } else {
                        d.sqrt()
                    }
                })
                .collect()
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (a, row) in upper.iter().enumerate() {
        for (k, &d) in row.iter().enumerate() {
            m[(a, a + 1 + k)] = d;
            m[(a + 1 + k, a)] = d;
        }
    }
    Ok(m)
}

pub fn distance_matrix(corpus: &[CategoricalSeries], metric: Metric, max_lag: usize) -> Result<DistanceMatrix> {
    check_lag(max_lag)?;
    check_alphabets(corpus)?;
    let vectors = corpus
        .par_iter()
        .map(|s| metric.features(s, max_lag))
        .collect::<Result<Vec<_>>>()?;
    Ok(DistanceMatrix {
        metric: Some(metric),
        max_lag,
        ids: default_ids(corpus.len()),
        values: feature_distance_matrix(&vectors, metric != Metric::Euclidean)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub ids: Vec<String>,
    pub coordinates: Vec<[f64; 2]>,
    /// The two leading eigenvalues of the doubly centred matrix, before clamping.
    pub eigenvalues: [f64; 2],
    /// Share of the absolute eigenvalue mass that is negative and was discarded.
    pub clamped_mass: f64,
}

impl Scaling {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["id", "x", "y"]);
        for (id, c) in self.ids.iter().zip(&self.coordinates) {
            t.push(vec![Cell::from(id.as_str()), c[0].into(), c[1].into()]);
        }
        t
    }
}

/// Classical metric scaling into the plane.
pub fn two_dimensional_scaling(dm: &DistanceMatrix) -> Result<Scaling> {
    let n = dm.len();
    if n < 3 {
        return Err(invalid("two-dimensional scaling needs at least three series"));
    }
    let sq = dm.values.map(|d| -0.5 * d * d);
    let row_means: Vec<f64> = (0..n).map(|a| sq.row(a).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| sq[(i, j)] - row_means[i] - row_means[j] + grand);
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.abs()).sum();
    let negative: f64 = eig.eigenvalues.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    let tolerance = 1e-12 * eig.eigenvalues.amax();
    let mut coordinates = vec![[0.0; 2]; n];
    let mut eigenvalues = [0.0; 2];
    for (axis, &k) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[k];
        eigenvalues[axis] = lambda;
        let scale = if lambda > tolerance { lambda.sqrt() } else { 0.0 };
        let v = eig.eigenvectors.column(k);
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (a, c) in coordinates.iter_mut().enumerate() {
            c[axis] = sign * scale * v[a];
        }
    }
    Ok(Scaling {
        ids: dm.ids.clone(),
        coordinates,
        eigenvalues,
        clamped_mass: if total > 0.0 { negative / total } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRanking {
    /// Row sums of the distance matrix.
    pub scores: Vec<f64>,
    /// Indices by decreasing score, ties by ascending index.
    pub order: Vec<usize>,
}

pub fn outlier_scores(dm: &DistanceMatrix) -> OutlierRanking {
    let scores: Vec<f64> = (0..dm.len()).map(|a| dm.values.row(a).sum()).collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    OutlierRanking { scores, order }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotOutliers {
    pub q1: f64,
    pub q3: f64,
    pub range_factor: f64,
    pub threshold: f64,
    /// Indices with scores strictly above the threshold, ascending.
    pub flagged: Vec<usize>,
}

impl BoxplotOutliers {
    pub fn count(&self) -> usize {
        self.flagged.len()
    }
}

/// Upper-whisker rule: flags scores above `Q3 + range_factor · IQR`.
pub fn boxplot_outlier_count(scores: &[f64], range_factor: f64) -> Result<BoxplotOutliers> {
    if scores.len() < 4 {
        return Err(invalid("boxplot rule needs at least four scores"));
    }
    if !(range_factor >= 0.0 && range_factor.is_finite()) {
        return Err(invalid("range factor must be non-negative"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(invalid("scores must be finite"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let threshold = q3 + range_factor * (q3 - q1);
    Ok(BoxplotOutliers {
        q1,
        q3,
        range_factor,
        threshold,
        flagged: (0..scores.len()).filter(|&k| scores[k] > threshold).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_codes, Model};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn series(codes: &[usize], r: usize) -> CategoricalSeries {
        CategoricalSeries::from_one_based(codes, r).unwrap()
    }

    fn random(seed: u64, r: usize, len: usize) -> CategoricalSeries {
        let model = Model::Mc {
            transition: (0..r)
                .map(|i| (0..r).map(|j| if i == j { 0.5 } else { 0.5 / (r - 1) as f64 }).collect())
                .collect(),
            initial: vec![1.0 / r as f64; r],
        };
        let codes = simulate_codes(&model, len, seed).unwrap();
        CategoricalSeries::new(codes, Arc::new(Alphabet::numbered(r).unwrap())).unwrap()
    }

    /// Explicit double sum over lags and cells, straight from counts.
    fn db_direct(x: &CategoricalSeries, y: &CategoricalSeries, max_lag: usize) -> f64 {
        let r = x.categories();
        let probs = |s: &CategoricalSeries| -> (Vec<f64>, Vec<Vec<Vec<f64>>>) {
            let n = s.len() as f64;
            let mut p = vec![0.0; r];
            for &c in s.codes() {
                p[c] += 1.0 / n;
            }
            let mut psi = Vec::new();
            for l in 1..=max_lag {
                let mut joint = vec![vec![0.0; r]; r];
                for t in l..s.len() {
                    joint[s.codes()[t]][s.codes()[t - l]] += 1.0;
                }
                let m = (s.len() - l) as f64;
                psi.push(
                    (0..r)
                        .map(|i| {
                            (0..r)
                                .map(|j| {
                                    (joint[i][j] / m - p[i] * p[j])
                                        / (p[i] * (1.0 - p[i]) * p[j] * (1.0 - p[j])).sqrt()
                                })
                                .collect()
                        })
                        .collect(),
                );
            }
            (p, psi)
        };
        let (px, sx) = probs(x);
        let (py, sy) = probs(y);
        let mut d = 0.0;
        for l in 0..max_lag {
            for i in 0..r {
                for j in 0..r {
                    d += (sx[l][i][j] - sy[l][i][j]).powi(2);
                }
            }
        }
        d + (0..r).map(|i| (px[i] - py[i]).powi(2)).sum::<f64>()
    }

    #[test]
    fn feature_lengths() {
        let s = random(1, 3, 100);
        assert_eq!(dcc_features(&s, 1).unwrap().len(), 15);
        assert_eq!(db_features(&s, 1).unwrap().len(), 12);
        assert_eq!(dcc_features(&s, 3).unwrap().len(), 3 * 12 + 3);
        assert_eq!(db_features(&s, 2).unwrap().len(), 2 * 9 + 3);
        assert!(dcc_features(&s, 0).is_err());
    }

    #[test]
    fn expanded_extraction_matches_classification_layout() {
        let s = random(2, 4, 200);
        let spec = FeatureExtraction {
            features: vec!["gini".parse().unwrap(), "cramers_v".parse().unwrap()],
            lags: vec![1],
            expand: true,
        };
        let v = spec.extract(&s).unwrap();
        assert_eq!(v.len(), 17);
        let names = v.column_names();
        assert_eq!(names[0], "gini");
        assert_eq!(names[1], "cramers_v.lag1.1_1");
        assert_eq!(names[16], "cramers_v.lag1.4_4");
        let scalar = FeatureExtraction { expand: false, ..spec };
        assert_eq!(scalar.extract(&s).unwrap().column_names(), vec!["gini", "cramers_v.lag1"]);
    }

    #[test]
    fn extraction_names_and_errors() {
        let s = random(3, 3, 50);
        let spec = FeatureExtraction {
            features: vec![Feature::Marginal, "cohens_kappa".parse().unwrap(), "sakoda".parse().unwrap()],
            lags: vec![1, 2],
            expand: true,
        };
        let names = spec.extract(&s).unwrap().column_names();
        assert_eq!(&names[..3], &["marginal.1", "marginal.2", "marginal.3"]);
        assert_eq!(names[3], "cohens_kappa.lag1.1");
        assert_eq!(names.last().unwrap(), "sakoda.lag2");
        assert!("nope".parse::<Feature>().is_err());
        let bad = FeatureExtraction { lags: vec![], ..spec.clone() };
        assert!(bad.extract(&s).is_err());
    }

    #[test]
    fn db_matches_direct_sum() {
        for seed in 0..20 {
            let x = random(seed, 3, 150);
            let y = random(seed + 100, 3, 170);
            for l in 1..=2 {
                let via = distance(&x, &y, Metric::Db, l).unwrap();
                assert_abs_diff_eq!(via, db_direct(&x, &y, l), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn identical_series_have_zero_distance() {
        let s = random(4, 3, 80);
        for m in [Metric::Dcc, Metric::Db, Metric::Euclidean] {
            assert_eq!(distance(&s, &s.clone(), m, 2).unwrap(), 0.0);
        }
        let dm = distance_matrix(&[s.clone(), s.clone(), s], Metric::Dcc, 1).unwrap();
        assert!(dm.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_series_matrix_matches_direct_call() {
        let x = random(5, 3, 90);
        let y = random(6, 3, 90);
        let dm = distance_matrix(&[x.clone(), y.clone()], Metric::Dcc, 2).unwrap();
        assert_eq!(dm.get(0, 1), distance(&x, &y, Metric::Dcc, 2).unwrap());
        assert_eq!(dm.get(1, 0), dm.get(0, 1));
        let e = distance_matrix(&[x.clone(), y.clone()], Metric::Euclidean, 1).unwrap();
        let b = distance_matrix(&[x, y], Metric::Db, 1).unwrap();
        assert_abs_diff_eq!(e.get(0, 1).powi(2), b.get(0, 1), epsilon = 1e-14);
    }

    #[test]
    fn alphabet_mismatch_names_series() {
        let a = random(7, 3, 40);
        let b = random(8, 4, 40);
        match distance_matrix(&[a.clone(), a, b], Metric::Db, 1) {
            Err(Error::AlphabetMismatch(2)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_marginals_fail() {
        let s = series(&[1, 1, 1, 1], 2);
        assert!(dcc_features(&s, 1).is_err());
        assert!(db_features(&s, 1).is_err());
    }

    #[test]
    fn triangle_is_recovered() {
        let d = DMatrix::from_row_slice(3, 3, &[0.0, 3.0, 4.0, 3.0, 0.0, 5.0, 4.0, 5.0, 0.0]);
        let dm = DistanceMatrix::from_matrix(d.clone(), default_ids(3)).unwrap();
        let sc = two_dimensional_scaling(&dm).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let [xa, ya] = sc.coordinates[a];
                let [xb, yb] = sc.coordinates[b];
                assert_abs_diff_eq!(((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt(), d[(a, b)], epsilon = 1e-8);
            }
        }
        let cx: f64 = sc.coordinates.iter().map(|c| c[0]).sum();
        assert_abs_diff_eq!(cx, 0.0, epsilon = 1e-10);
        assert!(sc.clamped_mass < 1e-10);
    }

    #[test]
    fn planar_points_recovered_up_to_rigid_motion() {
        let pts: [[f64; 2]; 5] = [[0.0, 0.0], [1.0, 2.0], [3.0, -1.0], [-2.0, 0.5], [0.5, 0.5]];
        let n = pts.len();
        let d = DMatrix::from_fn(n, n, |a, b| {
            ((pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2)).sqrt()
        });
        let sc = two_dimensional_scaling(&DistanceMatrix::from_matrix(d.clone(), default_ids(n)).unwrap()).unwrap();
        for a in 0..n {
            for b in 0..n {
                let [xa, ya] = sc.coordinates[a];
                let [xb, yb] = sc.coordinates[b];
                assert_abs_diff_eq!(((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt(), d[(a, b)], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn duplicates_coincide_and_small_inputs_fail() {
        let d = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0, 0.0]);
        let sc = two_dimensional_scaling(&DistanceMatrix::from_matrix(d, default_ids(3)).unwrap()).unwrap();
        assert_abs_diff_eq!(sc.coordinates[0][0], sc.coordinates[1][0], epsilon = 1e-12);
        assert_abs_diff_eq!(sc.coordinates[0][1], sc.coordinates[1][1], epsilon = 1e-12);
        let two = DistanceMatrix::from_matrix(DMatrix::zeros(2, 2), default_ids(2)).unwrap();
        assert!(two_dimensional_scaling(&two).is_err());
    }

    #[test]
    fn non_euclidean_input_reports_clamped_mass() {
        let d = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 1.0, 1.0, 5.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 5.0, 1.0, 1.0, 0.0],
        );
        let sc = two_dimensional_scaling(&DistanceMatrix::from_matrix(d, default_ids(4)).unwrap()).unwrap();
        assert!(sc.clamped_mass > 0.0);
    }

    #[test]
    fn collinear_scores() {
        let pts: [f64; 3] = [0.0, 1.0, 10.0];
        let d = DMatrix::from_fn(3, 3, |a, b| (pts[a] - pts[b]).abs());
        let ranking = outlier_scores(&DistanceMatrix::from_matrix(d, default_ids(3)).unwrap());
        assert_eq!(ranking.scores, vec![11.0, 10.0, 19.0]);
        assert_eq!(ranking.order, vec![2, 0, 1]);
        let flat = outlier_scores(&DistanceMatrix::from_matrix(DMatrix::zeros(4, 4), default_ids(4)).unwrap());
        assert_eq!(flat.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn boxplot_rule() {
        let b = boxplot_outlier_count(&[1.0, 1.0, 1.0, 1.0, 10.0], 1.5).unwrap();
        assert_eq!(b.flagged, vec![4]);
        assert_eq!(boxplot_outlier_count(&[2.0; 6], 1.0).unwrap().count(), 0);
        assert!(boxplot_outlier_count(&[1.0, 2.0, 3.0], 1.0).is_err());
    }

    #[test]
    fn csv_tables() {
        let dm = DistanceMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]), vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(dm.table().to_csv(Default::default()), "id,a,b\na,0,0.5\nb,0.5,0\n");
    }

    #[test]
    fn clusters_are_recovered() {
        let groups: Vec<Model> = [0.1, 0.4, 0.7, 0.95]
            .iter()
            .map(|&stay| Model::Mc {
                transition: (0..3)
                    .map(|i| (0..3).map(|j| if i == j { stay } else { (1.0 - stay) / 2.0 }).collect())
                    .collect(),
                initial: vec![1.0 / 3.0; 3],
            })
            .collect();
        let alphabet = Arc::new(Alphabet::numbered(3).unwrap());
        let mut corpus = Vec::new();
        for (g, m) in groups.iter().enumerate() {
            for k in 0..10 {
                let codes = simulate_codes(m, 600, (g * 100 + k) as u64).unwrap();
                corpus.push(CategoricalSeries::new(codes, alphabet.clone()).unwrap());
            }
        }
        let dm = distance_matrix(&corpus, Metric::Db, 1).unwrap();
        let (mut within, mut nw, mut between, mut nb) = (0.0, 0, 0.0, 0);
        for a in 0..40 {
            for b in (a + 1)..40 {
                if a / 10 == b / 10 {
                    within += dm.get(a, b);
                    nw += 1;
                } else {
                    between += dm.get(a, b);
                    nb += 1;
                }
            }
        }
        assert!(within / (nw as f64) < between / (nb as f64));
    }

    proptest! {
        #[test]
        fn matrix_contract(seed in 0u64..1000, n in 2usize..6) {
            let corpus: Vec<_> = (0..n).map(|k| random(seed * 10 + k as u64, 3, 60)).collect();
            for m in [Metric::Dcc, Metric::Db] {
                let dm = distance_matrix(&corpus, m, 2).unwrap();
                for a in 0..n {
                    prop_assert_eq!(dm.get(a, a), 0.0);
                    for b in 0..n {
                        prop_assert!(dm.get(a, b) >= 0.0);
                        prop_assert!((dm.get(a, b) - dm.get(b, a)).abs() <= 1e-12);
                    }
                }
            }
        }

        #[test]
        fn relaxed_triangle_inequality(seed in 0u64..1000) {
            let x = random(seed, 3, 80);
            let y = random(seed + 5000, 3, 80);
            let z = random(seed + 9000, 3, 80);
            let d = |a: &CategoricalSeries, b: &CategoricalSeries| distance(a, b, Metric::Db, 1).unwrap();
            prop_assert!(d(&x, &z) <= 2.0 * (d(&x, &y) + d(&y, &z)) + 1e-12);
        }

        #[test]
        fn boxplot_factor_monotone(scores in prop::collection::vec(0.0f64..100.0, 4..30), f in 0.0f64..3.0, g in 0.0f64..3.0) {
            let (lo, hi) = if f <= g { (f, g) } else { (g, f) };
            prop_assert!(boxplot_outlier_count(&scores, hi).unwrap().count() <= boxplot_outlier_count(&scores, lo).unwrap().count());
        }

        #[test]
        fn scaling_permutation_invariant(seed in 0u64..200) {
            let corpus: Vec<_> = (0..5).map(|k| random(seed * 7 + k, 3, 100)).collect();
            let dm = distance_matrix(&corpus, Metric::Db, 1).unwrap();
            let perm = [3usize, 0, 4, 1, 2];
            let permuted = DMatrix::from_fn(5, 5, |a, b| dm.get(perm[a], perm[b]));
            let sa = two_dimensional_scaling(&dm).unwrap();
            let sb = two_dimensional_scaling(&DistanceMatrix::from_matrix(permuted, default_ids(5)).unwrap()).unwrap();
            prop_assume!((sa.eigenvalues[0] - sa.eigenvalues[1]).abs() > 1e-6 * sa.eigenvalues[0].abs());
            for (k, &p) in perm.iter().enumerate() {
                for axis in 0..2 {
                    prop_assert!((sa.coordinates[p][axis].abs() - sb.coordinates[k][axis].abs()).abs() < 1e-8);
                }
            }
        }
    }
}

//! Asymptotic serial-independence tests based on Cramér's v and Cohen's κ,
//! and Holm's step-down p-value adjustment.
//!
//! Under an i.i.d. null, `T (r-1) v̂(l)²` is asymptotically χ² with
//! `(r-1)²` degrees of freedom, and `sqrt(T/V̂) (κ̂(l) + 1/T)` is
//! asymptotically standard normal with
//! `V̂ = 1 - (1 + 2 Σ p̂_i³ - 3 Σ p̂_i²) / (1 - Σ p̂_i²)²`.
//! The v test is one-sided, the κ test two-sided.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::series::CategoricalSeries;
use crate::serial::{cohens_kappa, cramers_v};
use crate::tables::LagTables;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    CramersV,
    CohensKappa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagTest {
    pub lag: usize,
    /// The estimate `v̂(l)` or `κ̂(l)`.
    pub estimate: f64,
    /// Test statistic on its reference scale (χ² or z).
    pub statistic: f64,
    /// Lower critical value for the estimate, present for κ only.
    pub critical_lower: Option<f64>,
    pub critical_upper: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub family: TestFamily,
    pub alpha: f64,
    pub max_lag: usize,
    pub len: usize,
    pub rows: Vec<LagTest>,
}

impl TestReport {
    pub fn p_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.p_value).collect()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.estimate).collect()
    }
}

/// Upper `tau`-quantile of χ² with `df` degrees of freedom.
pub fn chi_squared_quantile(df: f64, tau: f64) -> f64 {
    ChiSquared::new(df).expect("positive degrees of freedom").inverse_cdf(tau)
}

pub fn chi_squared_sf(df: f64, x: f64) -> f64 {
    ChiSquared::new(df).expect("positive degrees of freedom").sf(x)
}

pub fn normal_quantile(tau: f64) -> f64 {
    Normal::standard().inverse_cdf(tau)
}

pub fn normal_sf(z: f64) -> f64 {
    Normal::standard().sf(z)
}

fn check_args(series: &CategoricalSeries, max_lag: usize, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha must lie in (0, 1)"));
    }
    if max_lag == 0 || max_lag >= series.len() {
        return Err(Error::LagTooLarge {
            lag: max_lag,
            len: series.len(),
        });
    }
    let p = series.marginal_probabilities();
    if p.iter().any(|&x| x >= 1.0) {
        return Err(Error::OnePointMarginal);
    }
    Ok(())
}

/// Critical value of `v̂` at level `alpha`.
pub fn cramers_v_critical(r: usize, len: usize, alpha: f64) -> f64 {
    let df = ((r - 1) * (r - 1)) as f64;
    (chi_squared_quantile(df, 1.0 - alpha) / (len as f64 * (r - 1) as f64)).sqrt()
}

/// Plug-in asymptotic variance factor `V̂(p)` of `κ̂`.
pub fn kappa_variance(p: &[f64]) -> f64 {
    let s2: f64 = p.iter().map(|x| x * x).sum();
    let s3: f64 = p.iter().map(|x| x * x * x).sum();
    1.0 - (1.0 + 2.0 * s3 - 3.0 * s2) / ((1.0 - s2) * (1.0 - s2))
}

/// Lower and upper critical values of `κ̂` at level `alpha`.
pub fn cohens_kappa_critical(p: &[f64], len: usize, alpha: f64) -> (f64, f64) {
    let t = len as f64;
    let half_width = normal_quantile(1.0 - alpha / 2.0) / (t / kappa_variance(p)).sqrt();
    (-half_width - 1.0 / t, half_width - 1.0 / t)
}

pub fn cramers_v_test(series: &CategoricalSeries, max_lag: usize, alpha: f64) -> Result<TestReport> {
    check_args(series, max_lag, alpha)?;
    let r = series.categories();
    let len = series.len();
    let df = ((r - 1) * (r - 1)) as f64;
    let critical = cramers_v_critical(r, len, alpha);
    let rows = (1..=max_lag)
        .map(|lag| {
            let v = cramers_v(&LagTables::new(series, lag)?)?.value;
            let statistic = len as f64 * (r - 1) as f64 * v * v;
            Ok(LagTest {
                lag,
                estimate: v,
                statistic,
                critical_lower: None,
                critical_upper: critical,
                p_value: chi_squared_sf(df, statistic),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TestReport {
        family: TestFamily::CramersV,
        alpha,
        max_lag,
        len,
        rows,
    })
}

pub fn cohens_kappa_test(series: &CategoricalSeries, max_lag: usize, alpha: f64) -> Result<TestReport> {
    check_args(series, max_lag, alpha)?;
    let len = series.len();
    let t = len as f64;
    let p = series.marginal_probabilities();
    let var = kappa_variance(&p);
    if var <= 0.0 {
        return Err(invalid("non-positive asymptotic variance for kappa"));
    }
    let (lower, upper) = cohens_kappa_critical(&p, len, alpha);
    let rows = (1..=max_lag)
        .map(|lag| {
            let kappa = cohens_kappa(&LagTables::new(series, lag)?)?.value;
            let z = (t / var).sqrt() * (kappa + 1.0 / t);
            Ok(LagTest {
                lag,
                estimate: kappa,
                statistic: z,
                critical_lower: Some(lower),
                critical_upper: upper,
                p_value: (2.0 * normal_sf(z.abs())).min(1.0),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TestReport {
        family: TestFamily::CohensKappa,
        alpha,
        max_lag,
        len,
        rows,
    })
}

pub fn dependence_test(
    series: &CategoricalSeries,
    family: TestFamily,
    max_lag: usize,
    alpha: f64,
) -> Result<TestReport> {
    match family {
        TestFamily::CramersV => cramers_v_test(series, max_lag, alpha),
        TestFamily::CohensKappa => cohens_kappa_test(series, max_lag, alpha),
    }
}

/// Holm's step-down adjustment; output is in the input order.
pub fn holm_adjust(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(invalid(format!("p-value {bad} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &idx) in order.iter().enumerate() {
        running = running.max((m - rank) as f64 * p_values[idx]);
        adjusted[idx] = running.min(1.0);
    }
    Ok(adjusted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_quantiles() {
        assert_abs_diff_eq!(chi_squared_quantile(4.0, 0.95), 9.4877, epsilon = 1e-4);
        assert_abs_diff_eq!(chi_squared_quantile(1.0, 0.95), 3.8415, epsilon = 1e-4);
        assert_abs_diff_eq!(chi_squared_quantile(9.0, 0.99), 21.6660, epsilon = 1e-4);
        assert_abs_diff_eq!(normal_quantile(0.975), 1.959964, epsilon = 1e-4);
        assert_abs_diff_eq!(normal_quantile(0.95), 1.644854, epsilon = 1e-4);
        assert_abs_diff_eq!(normal_quantile(0.995), 2.575829, epsilon = 1e-4);
    }

    #[test]
    fn critical_values() {
        assert_abs_diff_eq!(cramers_v_critical(3, 600, 0.05), 0.0889, epsilon = 5e-4);
        let p = [1.0 / 3.0; 3];
        assert_abs_diff_eq!(kappa_variance(&p), 0.5, epsilon = 1e-12);
        let (lo, hi) = cohens_kappa_critical(&p, 600, 0.05);
        assert_abs_diff_eq!(lo, -0.0582, epsilon = 5e-4);
        assert_abs_diff_eq!(hi, 0.0549, epsilon = 5e-4);
    }

    #[test]
    fn null_statistics_give_unit_p_values() {
        assert_eq!(chi_squared_sf(4.0, 0.0), 1.0);
        assert_abs_diff_eq!(2.0 * normal_sf(0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn holm_examples() {
        let adj = holm_adjust(&[0.01, 0.04, 0.03]).unwrap();
        for (a, e) in adj.iter().zip([0.03, 0.06, 0.06]) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-15);
        }
        assert_eq!(holm_adjust(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0; 3]);
        assert_eq!(holm_adjust(&[0.2]).unwrap(), vec![0.2]);
        assert!(holm_adjust(&[0.2, 1.5]).is_err());
    }

    #[test]
    fn report_shape() {
        let codes: Vec<usize> = (0..120).map(|t| (t * 7 + t / 5) % 3 + 1).collect();
        let s = CategoricalSeries::from_one_based(&codes, 3).unwrap();
        for family in [TestFamily::CramersV, TestFamily::CohensKappa] {
            let rep = dependence_test(&s, family, 10, 0.05).unwrap();
            assert_eq!(rep.rows.len(), 10);
            assert_eq!(rep.rows.iter().map(|r| r.lag).collect::<Vec<_>>(), (1..=10).collect::<Vec<_>>());
            assert!(rep.p_values().iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let s = CategoricalSeries::from_one_based(&[1, 1, 1, 1], 2).unwrap();
        assert_eq!(cramers_v_test(&s, 1, 0.05), Err(Error::OnePointMarginal));
        let s = CategoricalSeries::from_one_based(&[1, 2, 1, 2], 2).unwrap();
        assert!(cohens_kappa_test(&s, 4, 0.05).is_err());
        assert!(cohens_kappa_test(&s, 1, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn holm_dominates_and_is_equivariant(p in prop::collection::vec(0.0f64..=1.0, 1..12), rot in 0usize..12) {
            let adj = holm_adjust(&p).unwrap();
            for (a, x) in adj.iter().zip(&p) {
                prop_assert!(a >= x);
                prop_assert!(*a <= 1.0);
            }
            let k = rot % p.len();
            let mut q = p.clone();
            q.rotate_left(k);
            let mut expect = adj.clone();
            expect.rotate_left(k);
            prop_assert_eq!(holm_adjust(&q).unwrap(), expect);
        }

        #[test]
        fn test_duality(seed in 0u64..500, r in 2usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let codes: Vec<usize> = (0..150).map(|_| rng.random_range(0..r)).collect();
            let s = CategoricalSeries::new(codes, std::sync::Arc::new(crate::Alphabet::numbered(r).unwrap())).unwrap();
            let alpha = 0.05;
            if s.marginal_probabilities().iter().all(|&p| p < 1.0) {
                let v = cramers_v_test(&s, 5, alpha).unwrap();
                for row in &v.rows {
                    if (row.p_value - alpha).abs() > 1e-10 {
                        prop_assert_eq!(row.estimate > row.critical_upper, row.p_value < alpha);
                    }
                }
                let k = cohens_kappa_test(&s, 5, alpha).unwrap();
                for row in &k.rows {
                    if (row.p_value - alpha).abs() > 1e-10 {
                        let outside = row.estimate > row.critical_upper || row.estimate < row.critical_lower.unwrap();
                        prop_assert_eq!(outside, row.p_value < alpha);
                    }
                }
            }
        }
    }
}

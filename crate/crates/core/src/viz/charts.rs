//! Serial dependence plot data and control charts.
//!
//! Control statistics are standardized so that the limits sit at ±1; a
//! point raises an alarm iff its statistic is strictly outside `[-1, 1]`.
//!
//! The in-control model is an i.i.d. process. Under it the cycle length
//! of category `j` is geometric on `{1, 2, ...}` with success probability
//! `p_j`, and the EWMA estimator has component variance
//! `p_i (1 - p_i) (1 - λ) (1 - λ^{2t}) / (1 + λ)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::format::{Cell, Table};
use crate::inference::{dependence_test, TestFamily, TestReport};
use crate::series::CategoricalSeries;
use crate::viz::patterns::cycle_lengths;

pub const DEFAULT_MAX_LAG: usize = 10;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_CHART_ALPHA: f64 = 0.01;
pub const DEFAULT_LAMBDA: f64 = 0.9;
pub const DEFAULT_K: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencePlot {
    pub family: TestFamily,
    pub alpha: f64,
    pub lags: Vec<usize>,
    pub estimates: Vec<f64>,
    pub critical_lower: Option<f64>,
    pub critical_upper: f64,
}

impl DependencePlot {
    pub fn from_report(report: &TestReport) -> Self {
        Self {
            family: report.family,
            alpha: report.alpha,
            lags: report.rows.iter().map(|r| r.lag).collect(),
            estimates: report.estimates(),
            critical_lower: report.rows.first().and_then(|r| r.critical_lower),
            critical_upper: report.rows.first().map_or(f64::NAN, |r| r.critical_upper),
        }
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(["lag", "estimate", "critical_lower", "critical_upper"]);
        for (&lag, &est) in self.lags.iter().zip(&self.estimates) {
            t.push(vec![
                lag.into(),
                est.into(),
                self.critical_lower.into(),
                self.critical_upper.into(),
            ]);
        }
        t
    }
}

pub fn dependence_plot_data(
    series: &CategoricalSeries,
    family: TestFamily,
    max_lag: usize,
    alpha: f64,
) -> Result<DependencePlot> {
    Ok(DependencePlot::from_report(&dependence_test(series, family, max_lag, alpha)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    CycleLength,
    EwmaMarginal,
    EwmaMinMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartLine {
    pub label: String,
    pub values: Vec<f64>,
    pub alarms: Vec<bool>,
}

/// Standardized control statistics over time, one line per monitored
/// quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlChart {
    pub kind: ChartKind,
    /// One-based time index of each plotted point.
    pub times: Vec<usize>,
    pub lines: Vec<ChartLine>,
}

impl ControlChart {
    pub fn alarm_count(&self) -> usize {
        self.lines.iter().map(|l| l.alarms.iter().filter(|&&a| a).count()).sum()
    }

    /// Number of time points at which any line alarms.
    pub fn alarmed_times(&self) -> usize {
        (0..self.times.len())
            .filter(|&k| self.lines.iter().any(|l| l.alarms[k]))
            .count()
    }

    pub fn table(&self) -> Table {
        let mut header = vec!["t".to_string()];
        for l in &self.lines {
            header.push(l.label.clone());
            header.push(format!("{}_alarm", l.label));
        }
        let mut t = Table::new(header);
        for (k, &time) in self.times.iter().enumerate() {
            let mut row = vec![Cell::from(time)];
            for l in &self.lines {
                row.push(l.values[k].into());
                row.push(l.alarms[k].into());
            }
            t.push(row);
        }
        t
    }
}

pub fn is_alarm(statistic: f64) -> bool {
    statistic.abs() > 1.0
}

/// `(C - μ) / |limit - μ|`, with `0/0 = 0`.
fn scaled(deviation: f64, spread: f64) -> f64 {
    if spread == 0.0 {
        if deviation == 0.0 {
            0.0
        } else {
            deviation.signum() * f64::INFINITY
        }
    } else {
        deviation / spread
    }
}

/// Two-sided standardized statistic `T = T^(L) + T^(U)`.
pub fn standardized(value: f64, mean: f64, lcl: f64, ucl: f64) -> f64 {
    let d = value - mean;
    scaled(d, (lcl - mean).abs()).min(0.0) + scaled(d, (ucl - mean).abs()).max(0.0)
}

/// Smallest `k >= 1` with `P(C <= k) >= tau` for `C ~ Geometric(p)` on `{1, 2, ...}`.
pub fn geometric_quantile(p: f64, tau: f64) -> usize {
    if p >= 1.0 || tau <= 0.0 {
        return 1;
    }
    let cdf = |k: usize| 1.0 - (1.0 - p).powi(k as i32);
    let mut k = ((1.0 - tau).ln() / (1.0 - p).ln()).ceil().max(1.0) as usize;
    while k > 1 && cdf(k - 1) >= tau {
        k -= 1;
    }
    while cdf(k) < tau {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleChart {
    pub category: usize,
    /// In-control probability of the category.
    pub probability: f64,
    pub alpha: f64,
    pub mean: f64,
    pub lcl: f64,
    pub ucl: f64,
    /// Closing time (one-based) and length of each cycle.
    pub times: Vec<usize>,
    pub lengths: Vec<usize>,
    pub statistics: Vec<f64>,
}

impl CycleChart {
    pub fn to_control_chart(&self, label: &str) -> ControlChart {
        ControlChart {
            kind: ChartKind::CycleLength,
            times: self.times.clone(),
            lines: vec![ChartLine {
                label: label.to_string(),
                values: self.statistics.clone(),
                alarms: self.statistics.iter().map(|&s| is_alarm(s)).collect(),
            }],
        }
    }

    /// Probability of an alarm per cycle under the in-control model.
    pub fn nominal_alarm_rate(&self) -> f64 {
        let q = 1.0 - self.probability;
        let below = if self.lcl > 1.0 { 1.0 - q.powi(self.lcl as i32 - 1) } else { 0.0 };
        below + q.powi(self.ucl as i32)
    }
}

/// Cycle-length chart for one category (zero-based). The in-control
/// probability defaults to the sample frequency of the category.
pub fn cycle_length_chart(
    series: &CategoricalSeries,
    category: usize,
    alpha: f64,
    probability: Option<f64>,
) -> Result<CycleChart> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha must lie in (0, 1)"));
    }
    let hist = cycle_lengths(series, category)?;
    if hist.cycles.is_empty() {
        return Err(invalid(format!(
            "category {} occurs fewer than twice; no cycles to chart",
            category + 1
        )));
    }
    let p = probability.unwrap_or_else(|| series.marginal_probabilities()[category]);
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid("in-control probability must lie in (0, 1]"));
    }
    let mean = 1.0 / p;
    let lcl = geometric_quantile(p, alpha / 2.0) as f64;
    let ucl = geometric_quantile(p, 1.0 - alpha / 2.0) as f64;
    let lengths: Vec<usize> = hist.cycles.iter().map(|c| c.length).collect();
    Ok(CycleChart {
        category,
        probability: p,
        alpha,
        mean,
        lcl,
        ucl,
        times: hist.cycles.iter().map(|c| c.end() + 1).collect(),
        statistics: lengths
            .iter()
            .map(|&c| standardized(c as f64, mean, lcl, ucl))
            .collect(),
        lengths,
    })
}

/// All per-category cycle charts merged on one time axis. Every time point
/// closes at most one cycle, so the merged statistic is a single line.
/// Categories occurring fewer than twice are skipped.
pub fn combined_cycle_chart(
    series: &CategoricalSeries,
    alpha: f64,
    probabilities: Option<&[f64]>,
) -> Result<ControlChart> {
    let r = series.categories();
    if let Some(p) = probabilities {
        if p.len() != r {
            return Err(invalid(format!("expected {r} in-control probabilities, got {}", p.len())));
        }
    }
    let mut points = Vec::new();
    for j in 0..r {
        match cycle_length_chart(series, j, alpha, probabilities.map(|p| p[j])) {
            Ok(chart) => points.extend(chart.times.into_iter().zip(chart.statistics)),
            Err(crate::Error::InvalidParameter(msg)) if msg.contains("fewer than twice") => {}
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        return Err(invalid("no category occurs twice; no cycles to chart"));
    }
    points.sort_by_key(|&(t, _)| t);
    let (times, values): (Vec<usize>, Vec<f64>) = points.into_iter().unzip();
    Ok(ControlChart {
        kind: ChartKind::CycleLength,
        times,
        lines: vec![ChartLine {
            label: "all".into(),
            alarms: values.iter().map(|&v| is_alarm(v)).collect(),
            values,
        }],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwmaChart {
    pub lambda: f64,
    pub k: f64,
    /// Starting value and in-control marginal.
    pub reference: Vec<f64>,
    /// `π̂_t` for `t = 1..=T`.
    pub estimates: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    /// `T_{t,i}`.
    pub statistics: Vec<Vec<f64>>,
}

impl EwmaChart {
    pub fn to_control_chart(&self, symbols: &[String], collapse: bool) -> ControlChart {
        let times = (1..=self.statistics.len()).collect();
        let line = |label: String, values: Vec<f64>| ChartLine {
            alarms: values.iter().map(|&v| is_alarm(v)).collect(),
            label,
            values,
        };
        if collapse {
            let min = self
                .statistics
                .iter()
                .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
                .collect();
            let max = self
                .statistics
                .iter()
                .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect();
            ControlChart {
                kind: ChartKind::EwmaMinMax,
                times,
                lines: vec![line("min".into(), min), line("max".into(), max)],
            }
        } else {
            ControlChart {
                kind: ChartKind::EwmaMarginal,
                times,
                lines: symbols
                    .iter()
                    .enumerate()
                    .map(|(i, s)| line(s.clone(), self.statistics.iter().map(|row| row[i]).collect()))
                    .collect(),
            }
        }
    }
}

/// EWMA estimator of the marginal distribution started at `reference`,
/// monitored with `k`-sigma limits around `reference`.
pub fn ewma_estimates(series: &CategoricalSeries, lambda: f64, reference: &[f64], k: f64) -> Result<EwmaChart> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid("lambda must lie in (0, 1)"));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(invalid("k must be positive"));
    }
    let r = series.categories();
    if reference.len() != r {
        return Err(invalid(format!(
            "reference distribution has {} entries, alphabet has {r}",
            reference.len()
        )));
    }
    if reference.iter().any(|&c| !(c > 0.0 && c < 1.0)) || (reference.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid(
            "reference distribution must have entries in (0, 1) summing to 1",
        ));
    }
    let mut pi = reference.to_vec();
    let mut lambda_2t = 1.0;
    let (mut estimates, mut sigma, mut statistics) = (Vec::new(), Vec::new(), Vec::new());
    for &code in series.codes() {
        lambda_2t *= lambda * lambda;
        for (i, v) in pi.iter_mut().enumerate() {
            *v = lambda * *v + if i == code { 1.0 - lambda } else { 0.0 };
        }
        let sd: Vec<f64> = reference
            .iter()
            .map(|&p| (p * (1.0 - p) * (1.0 - lambda) * (1.0 - lambda_2t) / (1.0 + lambda)).sqrt())
            .collect();
        statistics.push(
            pi.iter()
                .zip(reference)
                .zip(&sd)
                .map(|((v, p), s)| (v - p) / (k * s))
                .collect(),
        );
        estimates.push(pi.clone());
        sigma.push(sd);
    }
    Ok(EwmaChart {
        lambda,
        k,
        reference: reference.to_vec(),
        estimates,
        sigma,
        statistics,
    })
}

pub fn ewma_marginal_chart(
    series: &CategoricalSeries,
    lambda: f64,
    reference: &[f64],
    k: f64,
    collapse: bool,
) -> Result<ControlChart> {
    Ok(ewma_estimates(series, lambda, reference, k)?.to_control_chart(series.alphabet().symbols(), collapse))
}

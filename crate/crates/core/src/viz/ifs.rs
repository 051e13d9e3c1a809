//! IFS circle transformation: categories are placed on the unit circle and
//! the series is folded into the plane by the affine recursion
//! `F_k = α F_{k-1} + β φ(X_k)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::format::{Cell, Table};
use crate::series::CategoricalSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractalSeries {
    pub alpha: f64,
    pub beta: f64,
    pub origin: [f64; 2],
    /// `F_1, ..., F_T`.
    pub points: Vec<[f64; 2]>,
    /// Zero-based category of each point.
    pub codes: Vec<usize>,
}

/// Axis-aligned zoom region `x0 <= x <= x1`, `y0 <= y <= y1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (self.x0..=self.x1).contains(&p[0]) && (self.y0..=self.y1).contains(&p[1])
    }
}

impl FractalSeries {
    pub fn count_in(&self, window: &Window) -> usize {
        self.points.iter().filter(|p| window.contains(**p)).count()
    }

    pub fn table(&self, symbols: &[String]) -> Table {
        let mut t = Table::new(["t", "x", "y", "category"]);
        for (k, (p, &c)) in self.points.iter().zip(&self.codes).enumerate() {
            t.push(vec![
                (k + 1).into(),
                p[0].into(),
                p[1].into(),
                Cell::from(symbols[c].as_str()),
            ]);
        }
        t
    }
}

/// Point of category `code` (zero-based) on the unit circle.
pub fn circle_point(code: usize, r: usize) -> [f64; 2] {
    let angle = 2.0 * std::f64::consts::PI * code as f64 / r as f64;
    [angle.cos(), angle.sin()]
}

pub fn ifs_circle_transform(
    series: &CategoricalSeries,
    alpha: f64,
    beta: f64,
    origin: [f64; 2],
) -> Result<FractalSeries> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha must lie in (0, 1)"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("beta must be positive"));
    }
    let r = series.categories();
    let circle: Vec<[f64; 2]> = (0..r).map(|c| circle_point(c, r)).collect();
    let mut f = origin;
    let points = series
        .codes()
        .iter()
        .map(|&c| {
            let p = circle[c];
            f = [alpha * f[0] + beta * p[0], alpha * f[1] + beta * p[1]];
            f
        })
        .collect();
    Ok(FractalSeries {
        alpha,
        beta,
        origin,
        points,
        codes: series.codes().to_vec(),
    })
}

//! Rate evolution (cumulated one-hot sums) and cycle-length patterns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::format::{Cell, Table};
use crate::series::CategoricalSeries;

/// Row `t` holds the category counts over the first `t + 1` observations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateEvolution {
    pub symbols: Vec<String>,
    pub cumulative: Vec<Vec<usize>>,
}

impl RateEvolution {
    pub fn column(&self, i: usize) -> Vec<usize> {
        self.cumulative.iter().map(|row| row[i]).collect()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(std::iter::once("t".to_string()).chain(self.symbols.iter().cloned()));
        for (k, row) in self.cumulative.iter().enumerate() {
            t.push(
                std::iter::once(Cell::from(k + 1))
                    .chain(row.iter().map(|&c| Cell::from(c)))
                    .collect(),
            );
        }
        t
    }
}

pub fn rate_evolution(series: &CategoricalSeries) -> RateEvolution {
    let r = series.categories();
    let mut acc = vec![0usize; r];
    let cumulative = series
        .codes()
        .iter()
        .map(|&c| {
            acc[c] += 1;
            acc.clone()
        })
        .collect();
    RateEvolution {
        symbols: series.alphabet().symbols().to_vec(),
        cumulative,
    }
}

/// A return of category `category` after `length` steps, starting at
/// zero-based time index `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub category: usize,
    pub start: usize,
    pub length: usize,
}

impl CycleRecord {
    /// Zero-based time index at which the cycle closes.
    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternHistogram {
    pub category: usize,
    pub symbol: String,
    pub cycles: Vec<CycleRecord>,
    /// Cycle length to number of cycles of that length.
    pub counts: BTreeMap<usize, usize>,
}

impl PatternHistogram {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["length", "count"]);
        for (&len, &n) in &self.counts {
            t.push(vec![len.into(), n.into()]);
        }
        t
    }
}

/// Cycles of one category (zero-based code). A category that occurs fewer
/// than twice yields no cycles.
pub fn cycle_lengths(series: &CategoricalSeries, category: usize) -> Result<PatternHistogram> {
    if category >= series.categories() {
        return Err(invalid(format!(
            "category {} not in alphabet of size {}",
            category + 1,
            series.categories()
        )));
    }
    let mut cycles = Vec::new();
    let mut last = None;
    for (t, &c) in series.codes().iter().enumerate() {
        if c == category {
            if let Some(start) = last {
                cycles.push(CycleRecord {
                    category,
                    start,
                    length: t - start,
                });
            }
            last = Some(t);
        }
    }
    let mut counts = BTreeMap::new();
    for c in &cycles {
        *counts.entry(c.length).or_insert(0) += 1;
    }
    Ok(PatternHistogram {
        category,
        symbol: series.alphabet().symbols()[category].clone(),
        cycles,
        counts,
    })
}

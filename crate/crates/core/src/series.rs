//! Alphabets, integer-coded categorical series and their binarization.
//!
//! Codes are stored zero-based: category `i` of an alphabet of size `r`
//! is the code `i - 1`. Constructors taking one-based codes exist for
//! callers that work with the conventional `1..=r` numbering.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of category labels. Label order fixes the code of each label.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    symbols: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.len() < 2 {
            return Err(Error::TooFewCategories);
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(s.clone()));
            }
        }
        Ok(Self { symbols, index })
    }

    /// Alphabet labelled `"1"`, `"2"`, ..., `"r"`.
    pub fn numbered(r: usize) -> Result<Self> {
        Self::new((1..=r).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, code: usize) -> Option<&str> {
        self.symbols.get(code).map(String::as_str)
    }

    pub fn code_of(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Alphabet").field(&self.symbols).finish()
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;

    fn try_from(symbols: Vec<String>) -> Result<Self> {
        Self::new(symbols)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.symbols
    }
}

/// A categorical time series over a declared alphabet.
///
/// A series need not contain every symbol of its alphabet; unseen
/// categories keep a zero marginal probability.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalSeries {
    codes: Vec<usize>,
    alphabet: Arc<Alphabet>,
}

impl CategoricalSeries {
    /// Builds a series from zero-based codes.
    pub fn new(codes: Vec<usize>, alphabet: Arc<Alphabet>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptySeries);
        }
        let size = alphabet.len();
        if let Some((position, &code)) = codes.iter().enumerate().find(|(_, &c)| c >= size) {
            return Err(Error::InvalidCode {
                position,
                code,
                size,
            });
        }
        Ok(Self { codes, alphabet })
    }

    /// Builds a series from one-based codes over the numbered alphabet of size `r`.
    pub fn from_one_based(codes: &[usize], r: usize) -> Result<Self> {
        let alphabet = Arc::new(Alphabet::numbered(r)?);
        Self::from_one_based_with(codes, alphabet)
    }

    pub fn from_one_based_with(codes: &[usize], alphabet: Arc<Alphabet>) -> Result<Self> {
        let size = alphabet.len();
        let zero_based = codes
            .iter()
            .enumerate()
            .map(|(position, &c)| {
                if c == 0 || c > size {
                    Err(Error::InvalidCode {
                        position,
                        code: c,
                        size,
                    })
                } else {
                    Ok(c - 1)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(zero_based, alphabet)
    }

    /// Interns a sequence of labels against `alphabet`.
    pub fn from_symbols<S: AsRef<str>>(symbols: &[S], alphabet: Arc<Alphabet>) -> Result<Self> {
        let codes = symbols
            .iter()
            .enumerate()
            .map(|(position, s)| {
                alphabet
                    .code_of(s.as_ref())
                    .ok_or_else(|| Error::UnknownSymbol {
                        symbol: s.as_ref().to_string(),
                        position,
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(codes, alphabet)
    }

    pub fn codes(&self) -> &[usize] {
        &self.codes
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    /// Number of categories `r` in the declared alphabet.
    pub fn categories(&self) -> usize {
        self.alphabet.len()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> + '_ {
        self.codes
            .iter()
            .map(move |&c| self.alphabet.symbols[c].as_str())
    }

    /// One-hot representation of the series.
    pub fn binarize(&self) -> BinarizedSeries {
        BinarizedSeries {
            categories: self.categories(),
            hot: self.codes.clone(),
        }
    }

    /// Occurrence counts of each category.
    pub fn counts(&self) -> Vec<usize> {
        let mut n = vec![0; self.categories()];
        for &c in &self.codes {
            n[c] += 1;
        }
        n
    }

    /// Sample marginal distribution `N_i / T`.
    pub fn marginal_probabilities(&self) -> Vec<f64> {
        let t = self.len() as f64;
        self.counts().into_iter().map(|n| n as f64 / t).collect()
    }
}

/// One-hot rows `e_{X_t}`. Stored sparsely as the hot position per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarizedSeries {
    categories: usize,
    hot: Vec<usize>,
}

impl BinarizedSeries {
    pub fn len(&self) -> usize {
        self.hot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hot.is_empty()
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    /// Value of component `i` at time index `t` (both zero-based).
    pub fn get(&self, t: usize, i: usize) -> f64 {
        if self.hot[t] == i {
            1.0
        } else {
            0.0
        }
    }

    pub fn row(&self, t: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.categories];
        row[self.hot[t]] = 1.0;
        row
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|t| self.row(t))
    }

    /// Indicator series of one category.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.hot
            .iter()
            .map(|&h| if h == i { 1.0 } else { 0.0 })
            .collect()
    }

    /// Recovers the zero-based codes (argmax of each row).
    pub fn argmax(&self) -> Vec<usize> {
        self.hot.clone()
    }
}

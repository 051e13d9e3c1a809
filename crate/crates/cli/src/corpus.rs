//! Corpus files.
//!
//! `symbol-csv`: one series per line, comma-separated symbols, with an
//! optional trailing `|label`. Blank lines and lines starting with `#`
//! are skipped.
//!
//! `fasta`: `>id` header lines, each followed by one or more lines of
//! single-character symbols.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::sync::Arc;

use ctsfeat::{Alphabet, CategoricalSeries};

use crate::error::{usage, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    SymbolCsv,
    Fasta,
}

impl FromStr for CorpusFormat {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "csv" | "symbol-csv" => Ok(CorpusFormat::SymbolCsv),
            "fasta" => Ok(CorpusFormat::Fasta),
            _ => Err(usage(format!("unknown corpus format {s:?}; expected csv or fasta"))),
        }
    }
}

impl CorpusFormat {
    pub fn detect(text: &str) -> Self {
        match text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')) {
            Some(l) if l.starts_with('>') => CorpusFormat::Fasta,
            _ => CorpusFormat::SymbolCsv,
        }
    }
}

#[derive(Debug, Clone)]
pub enum AlphabetSource {
    Declared(Alphabet),
    Infer,
}

#[derive(Debug, Clone)]
pub struct CorpusFile {
    pub ids: Vec<String>,
    pub labels: Vec<Option<String>>,
    pub series: Vec<CategoricalSeries>,
}

impl CorpusFile {
    pub fn alphabet(&self) -> &Arc<Alphabet> {
        self.series[0].alphabet()
    }

    pub fn has_labels(&self) -> bool {
        self.labels.iter().any(Option::is_some)
    }
}

struct RawSeries {
    id: String,
    label: Option<String>,
    /// Symbol, line and column of each observation.
    symbols: Vec<(String, usize, usize)>,
}

fn read_csv(text: &str, path: &str) -> CliResult<Vec<RawSeries>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (body, label) = match line.rsplit_once('|') {
            Some((b, l)) => (b, Some(l.trim().to_string())),
            None => (line, None),
        };
        let mut symbols = Vec::new();
        for (k, field) in body.split(',').enumerate() {
            let s = field.trim();
            if s.is_empty() {
                return Err(CliError::Parse {
                    path: path.into(),
                    line: n + 1,
                    column: k + 1,
                    message: "empty symbol".into(),
                });
            }
            symbols.push((s.to_string(), n + 1, k + 1));
        }
        out.push(RawSeries {
            id: (out.len() + 1).to_string(),
            label,
            symbols,
        });
    }
    Ok(out)
}

fn read_fasta(text: &str, path: &str) -> CliResult<Vec<RawSeries>> {
    let mut out: Vec<RawSeries> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            let mut parts = header.split_whitespace();
            let id = parts.next().map_or_else(|| (out.len() + 1).to_string(), str::to_string);
            let label = parts.next().map(str::to_string);
            out.push(RawSeries {
                id,
                label,
                symbols: Vec::new(),
            });
            continue;
        }
        let current = out.last_mut().ok_or_else(|| CliError::Parse {
            path: path.into(),
            line: n + 1,
            column: 1,
            message: "sequence data before the first '>' header".into(),
        })?;
        for (k, c) in line.chars().enumerate() {
            if !c.is_whitespace() {
                current.symbols.push((c.to_string(), n + 1, k + 1));
            }
        }
    }
    Ok(out)
}

/// Parses a corpus. The alphabet is either declared (order significant) or
/// inferred as the sorted set of distinct symbols.
pub fn parse_corpus(
    text: &str,
    path: &str,
    format: Option<CorpusFormat>,
    alphabet: &AlphabetSource,
) -> CliResult<CorpusFile> {
    let format = format.unwrap_or_else(|| CorpusFormat::detect(text));
    let raw = match format {
        CorpusFormat::SymbolCsv => read_csv(text, path)?,
        CorpusFormat::Fasta => read_fasta(text, path)?,
    };
    if raw.is_empty() {
        return Err(usage(format!("{path}: no series found")));
    }
    if let Some(empty) = raw.iter().find(|s| s.symbols.is_empty()) {
        return Err(usage(format!("{path}: series {} is empty", empty.id)));
    }
    let alphabet = Arc::new(match alphabet {
        AlphabetSource::Declared(a) => a.clone(),
        AlphabetSource::Infer => {
            let set: BTreeSet<&str> = raw.iter().flat_map(|s| s.symbols.iter().map(|x| x.0.as_str())).collect();
            Alphabet::new(set)?
        }
    });
    let mut file = CorpusFile {
        ids: Vec::with_capacity(raw.len()),
        labels: Vec::with_capacity(raw.len()),
        series: Vec::with_capacity(raw.len()),
    };
    for s in raw {
        let codes = s
            .symbols
            .iter()
            .map(|(sym, line, column)| {
                alphabet.code_of(sym).ok_or_else(|| CliError::Parse {
                    path: path.into(),
                    line: *line,
                    column: *column,
                    message: format!("symbol {sym:?} is not in the alphabet"),
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        file.series.push(CategoricalSeries::new(codes, alphabet.clone())?);
        file.ids.push(s.id);
        file.labels.push(s.label);
    }
    Ok(file)
}

pub fn write_csv(series: &[CategoricalSeries], labels: &[Option<String>]) -> String {
    let mut out = String::new();
    for (k, s) in series.iter().enumerate() {
        out.push_str(&s.symbols().collect::<Vec<_>>().join(","));
        if let Some(Some(label)) = labels.get(k) {
            out.push('|');
            out.push_str(label);
        }
        out.push('\n');
    }
    out
}

pub fn write_fasta(series: &[CategoricalSeries], ids: &[String], labels: &[Option<String>]) -> CliResult<String> {
    if series.iter().any(|s| s.alphabet().symbols().iter().any(|x| x.chars().count() != 1)) {
        return Err(usage("fasta output needs single-character symbols"));
    }
    let mut out = String::new();
    for (k, s) in series.iter().enumerate() {
        out.push('>');
        out.push_str(&ids[k]);
        if let Some(Some(label)) = labels.get(k) {
            out.push(' ');
            out.push_str(label);
        }
        out.push('\n');
        let text: String = s.symbols().collect();
        for chunk in text.as_bytes().chunks(60) {
            out.push_str(std::str::from_utf8(chunk).unwrap_or_default());
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acgt() -> AlphabetSource {
        AlphabetSource::Declared(Alphabet::new(["a", "c", "g", "t"]).unwrap())
    }

    #[test]
    fn csv_line_lookup() {
        let f = parse_corpus("a,t,g,g,c\n", "x", None, &acgt()).unwrap();
        assert_eq!(f.series[0].codes(), &[0, 3, 2, 2, 1]);
        assert_eq!(f.ids, vec!["1"]);
    }

    #[test]
    fn csv_labels_and_comments() {
        let f = parse_corpus("# header\na,c|1\n\nt,t , g|2\n", "x", None, &acgt()).unwrap();
        assert_eq!(f.series.len(), 2);
        assert_eq!(f.labels, vec![Some("1".into()), Some("2".into())]);
        assert_eq!(f.series[1].codes(), &[3, 3, 2]);
    }

    #[test]
    fn unknown_symbol_position() {
        match parse_corpus("a,c\na,x,g\n", "f.csv", None, &acgt()) {
            Err(CliError::Parse { line: 2, column: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_corpus(">s1\nacg\nacxt\n", "f.fa", None, &acgt()) {
            Err(CliError::Parse { line: 3, column: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fasta_records() {
        let f = parse_corpus(">one grp\nacgtacgtac\ngtacgtacgt\n>two\nAAA\n", "f", None, &AlphabetSource::Infer);
        let f = f.unwrap();
        assert_eq!(f.series[0].len(), 20);
        assert_eq!(f.ids, vec!["one", "two"]);
        assert_eq!(f.labels[0].as_deref(), Some("grp"));
        assert_eq!(f.alphabet().symbols(), &["A", "a", "c", "g", "t"]);
    }

    #[test]
    fn empty_inputs_fail() {
        assert!(parse_corpus("", "f", None, &acgt()).is_err());
        assert!(parse_corpus("\n# only\n", "f", None, &acgt()).is_err());
        assert!(parse_corpus(">a\n>b\nac\n", "f", None, &acgt()).is_err());
    }

    #[test]
    fn round_trips() {
        let f = parse_corpus("a,c,g|x\nt,t\n", "f", None, &acgt()).unwrap();
        let again = parse_corpus(&write_csv(&f.series, &f.labels), "g", None, &acgt()).unwrap();
        assert_eq!(again.series, f.series);
        assert_eq!(again.labels, f.labels);
        let fa = write_fasta(&f.series, &f.ids, &f.labels).unwrap();
        let back = parse_corpus(&fa, "h", None, &acgt()).unwrap();
        assert_eq!(back.series, f.series);
    }
}

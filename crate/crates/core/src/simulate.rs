//! Seeded generators for Markov chains, hidden Markov models and NDARMA
//! processes, and corpus assembly from groups of generators.
//!
//! Every generator draws from a ChaCha8 stream seeded with
//! `seed_from_u64(seed)`; corpus members use `corpus_seed + index` so any
//! single series can be regenerated alone. Categories are drawn by
//! inverse CDF on left-to-right cumulative sums, which keeps the output
//! identical across platforms.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::{Alphabet, CategoricalSeries};

pub const DEFAULT_BURN_IN: usize = 500;

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    Mc {
        transition: Vec<Vec<f64>>,
        initial: Vec<f64>,
    },
    Hmm {
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
        initial: Vec<f64>,
    },
    /// `X_t` copies one of `X_{t-1..t-p}`, `ε_t`, `ε_{t-1..t-q}`, chosen with
    /// the probabilities in `selection` (in that order).
    Ndarma {
        p: usize,
        q: usize,
        selection: Vec<f64>,
        innovation: Vec<f64>,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
    },
}

impl Model {
    /// Size of the observed alphabet.
    pub fn categories(&self) -> usize {
        match self {
            Model::Mc { initial, .. } => initial.len(),
            Model::Hmm { emission, .. } => emission.first().map_or(0, Vec::len),
            Model::Ndarma { innovation, .. } => innovation.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Mc { transition, initial } => {
                check_distribution("initial", initial)?;
                check_stochastic("transition", transition, initial.len(), initial.len())
            }
            Model::Hmm {
                transition,
                emission,
                initial,
            } => {
                check_distribution("initial", initial)?;
                check_stochastic("transition", transition, initial.len(), initial.len())?;
                let r = emission.first().map_or(0, Vec::len);
                check_stochastic("emission", emission, initial.len(), r)
            }
            Model::Ndarma {
                p,
                q,
                selection,
                innovation,
                ..
            } => {
                if selection.len() != p + q + 1 {
                    return Err(invalid(format!(
                        "selection vector has length {}, expected p + q + 1 = {}",
                        selection.len(),
                        p + q + 1
                    )));
                }
                check_distribution("selection", selection)?;
                check_distribution("innovation", innovation)
            }
        }?;
        if self.categories() < 2 {
            return Err(Error::TooFewCategories);
        }
        Ok(())
    }
}

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(invalid(format!("{name}: empty probability vector")));
    }
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(invalid(format!("{name}: negative or non-finite probability")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("{name}: probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn check_stochastic(name: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows {
        return Err(invalid(format!("{name}: expected {rows} rows, got {}", m.len())));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(invalid(format!(
                "{name}: row {} has {} entries, expected {cols}",
                i + 1,
                row.len()
            )));
        }
        check_distribution(&format!("{name} row {}", i + 1), row)?;
    }
    Ok(())
}

/// Cumulative distribution used for inverse-CDF draws.
#[derive(Debug, Clone)]
struct Sampler {
    cumulative: Vec<f64>,
    last: usize,
}

impl Sampler {
    fn new(p: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = p
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        let last = p.iter().rposition(|&x| x > 0.0).unwrap_or(0);
        Self { cumulative, last }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .map_or(self.last, |k| k.min(self.last))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub model: Model,
    pub length: usize,
    #[serde(default)]
    pub seed: u64,
}

fn markov_path<R: Rng>(rng: &mut R, transition: &[Vec<f64>], initial: &[f64], len: usize) -> Vec<usize> {
    let rows: Vec<Sampler> = transition.iter().map(|r| Sampler::new(r)).collect();
    let mut state = Sampler::new(initial).draw(rng);
    let mut path = Vec::with_capacity(len);
    path.push(state);
    for _ in 1..len {
        state = rows[state].draw(rng);
        path.push(state);
    }
    path
}

/// Raw zero-based codes for a model.
pub fn simulate_codes(model: &Model, len: usize, seed: u64) -> Result<Vec<usize>> {
    model.validate()?;
    if len == 0 {
        return Err(Error::EmptySeries);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match model {
        Model::Mc { transition, initial } => markov_path(&mut rng, transition, initial, len),
        Model::Hmm {
            transition,
            emission,
            initial,
        } => {
            let emit: Vec<Sampler> = emission.iter().map(|r| Sampler::new(r)).collect();
            let hidden = markov_path(&mut rng, transition, initial, len);
            hidden.into_iter().map(|h| emit[h].draw(&mut rng)).collect()
        }
        Model::Ndarma {
            p,
            q,
            selection,
            innovation,
            burn_in,
        } => ndarma(&mut rng, *p, *q, selection, innovation, *burn_in, len),
    })
}

fn ndarma<R: Rng>(
    rng: &mut R,
    p: usize,
    q: usize,
    selection: &[f64],
    innovation: &[f64],
    burn_in: usize,
    len: usize,
) -> Vec<usize> {
    let select = Sampler::new(selection);
    let innov = Sampler::new(innovation);
    let warm = p.max(q);
    // Histories hold the most recent value last.
    let mut xs: Vec<usize> = (0..warm).map(|_| innov.draw(rng)).collect();
    let mut eps: Vec<usize> = xs.clone();
    let mut out = Vec::with_capacity(len);
    for step in 0..burn_in + len {
        let e = innov.draw(rng);
        eps.push(e);
        let k = select.draw(rng);
        let x = if k < p {
            xs[xs.len() - 1 - k]
        } else {
            eps[eps.len() - 1 - (k - p)]
        };
        xs.push(x);
        if step >= burn_in {
            out.push(x);
        }
        // Only the last max(p, q) + 1 values are ever read.
        if xs.len() > 4 * (warm + 1) + 64 {
            xs.drain(..xs.len() - (warm + 1));
            eps.drain(..eps.len() - (warm + 1));
        }
    }
    out
}

fn generate(spec: &GeneratorSpec, alphabet: Arc<Alphabet>) -> Result<CategoricalSeries> {
    if alphabet.len() != spec.model.categories() {
        return Err(invalid(format!(
            "alphabet has {} symbols but the model emits {} categories",
            alphabet.len(),
            spec.model.categories()
        )));
    }
    CategoricalSeries::new(simulate_codes(&spec.model, spec.length, spec.seed)?, alphabet)
}

fn numbered(spec: &GeneratorSpec) -> Result<Arc<Alphabet>> {
    Ok(Arc::new(Alphabet::numbered(spec.model.categories())?))
}

pub fn generate_mc(spec: &GeneratorSpec) -> Result<CategoricalSeries> {
    match spec.model {
        Model::Mc { .. } => generate(spec, numbered(spec)?),
        _ => Err(invalid("expected a Markov chain specification")),
    }
}

pub fn generate_hmm(spec: &GeneratorSpec) -> Result<CategoricalSeries> {
    match spec.model {
        Model::Hmm { .. } => generate(spec, numbered(spec)?),
        _ => Err(invalid("expected a hidden Markov model specification")),
    }
}

pub fn generate_ndarma(spec: &GeneratorSpec) -> Result<CategoricalSeries> {
    match spec.model {
        Model::Ndarma { .. } => generate(spec, numbered(spec)?),
        _ => Err(invalid("expected an NDARMA specification")),
    }
}

pub fn generate_series(spec: &GeneratorSpec, alphabet: Arc<Alphabet>) -> Result<CategoricalSeries> {
    generate(spec, alphabet)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusGroup {
    pub count: usize,
    pub length: usize,
    #[serde(flatten)]
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    /// Free-form description carried through unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Shared alphabet; defaults to `"1".."r"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Alphabet>,
    pub seed: u64,
    pub groups: Vec<CorpusGroup>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub series: Vec<CategoricalSeries>,
    /// One-based group label of each series.
    pub labels: Vec<usize>,
}

pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus> {
    let first = spec
        .groups
        .first()
        .ok_or_else(|| invalid("corpus needs at least one group"))?;
    let r = first.model.categories();
    let alphabet = Arc::new(match &spec.alphabet {
        Some(a) => a.clone(),
        None => Alphabet::numbered(r)?,
    });
    let mut jobs = Vec::new();
    for (g, group) in spec.groups.iter().enumerate() {
        if group.count == 0 {
            return Err(invalid(format!("group {} has count 0", g + 1)));
        }
        if group.model.categories() != alphabet.len() {
            return Err(invalid(format!(
                "group {} emits {} categories, corpus alphabet has {}",
                g + 1,
                group.model.categories(),
                alphabet.len()
            )));
        }
        group.model.validate()?;
        for _ in 0..group.count {
            let seed = spec.seed.wrapping_add(jobs.len() as u64);
            jobs.push((g + 1, group, seed));
        }
    }
    let series = jobs
        .par_iter()
        .map(|(_, group, seed)| {
            let codes = simulate_codes(&group.model, group.length, *seed)?;
            CategoricalSeries::new(codes, alphabet.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus {
        series,
        labels: jobs.iter().map(|(g, _, _)| *g).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serial::cohens_kappa;
    use crate::tables::LagTables;

    fn mc(transition: Vec<Vec<f64>>, initial: Vec<f64>, length: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            model: Model::Mc { transition, initial },
            length,
            seed,
        }
    }

    #[test]
    fn identity_chain_is_constant() {
        let eye = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let s = generate_mc(&mc(eye, vec![0.2, 0.5, 0.3], 100, 4)).unwrap();
        assert!(s.codes().iter().all(|&c| c == s.codes()[0]));
    }

    #[test]
    fn cyclic_permutation_is_periodic() {
        let cyc = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]];
        let s = generate_mc(&mc(cyc, vec![1.0, 0.0, 0.0], 30, 1)).unwrap();
        let expect: Vec<usize> = (0..30).map(|t| t % 3).collect();
        assert_eq!(s.codes(), &expect[..]);
    }

    #[test]
    fn transition_frequencies_converge() {
        let p = vec![vec![0.7, 0.2, 0.1], vec![0.3, 0.4, 0.3], vec![0.1, 0.3, 0.6]];
        let s = generate_mc(&mc(p.clone(), vec![1.0 / 3.0; 3], 100_000, 7)).unwrap();
        let t = LagTables::new(&s, 1).unwrap();
        let n = t.joint_counts();
        for j in 0..3 {
            let col: usize = n.column(j).iter().sum();
            for i in 0..3 {
                // Row j of the spec is the law of X_t given X_{t-1} = j.
                let freq = n[(i, j)] as f64 / col as f64;
                assert!((freq - p[j][i]).abs() < 0.01, "{i}|{j}: {freq}");
            }
        }
    }

    #[test]
    fn identity_emission_reproduces_hidden_chain() {
        let tr = vec![vec![0.8, 0.2], vec![0.4, 0.6]];
        let hmm = GeneratorSpec {
            model: Model::Hmm {
                transition: tr.clone(),
                emission: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                initial: vec![0.5, 0.5],
            },
            length: 500,
            seed: 3,
        };
        let obs = generate_hmm(&hmm).unwrap();
        // The emission draws consume randomness after the hidden path is built.
        let hidden = generate_mc(&mc(tr, vec![0.5, 0.5], 500, 3)).unwrap();
        assert_eq!(obs.codes(), hidden.codes());
    }

    #[test]
    fn single_state_hmm_is_iid_with_emission_marginal() {
        let emission = vec![0.5, 0.3, 0.2];
        let spec = GeneratorSpec {
            model: Model::Hmm {
                transition: vec![vec![1.0]],
                emission: vec![emission.clone()],
                initial: vec![1.0],
            },
            length: 100_000,
            seed: 5,
        };
        let s = generate_hmm(&spec).unwrap();
        let n = s.counts();
        let chi2: f64 = n
            .iter()
            .zip(&emission)
            .map(|(&o, &p)| {
                let e = p * s.len() as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < crate::inference::chi_squared_quantile(2.0, 0.99));
    }

    fn ndarma_spec(p: usize, q: usize, selection: Vec<f64>, length: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            model: Model::Ndarma {
                p,
                q,
                selection,
                innovation: vec![0.5, 0.3, 0.2],
                burn_in: DEFAULT_BURN_IN,
            },
            length,
            seed,
        }
    }

    #[test]
    fn ndarma_pure_innovation_is_iid() {
        let s = generate_ndarma(&ndarma_spec(0, 0, vec![1.0], 50_000, 2)).unwrap();
        let p = s.marginal_probabilities();
        for (a, b) in p.iter().zip([0.5, 0.3, 0.2]) {
            assert!((a - b).abs() < 0.01);
        }
        let k = cohens_kappa(&LagTables::new(&s, 1).unwrap()).unwrap().value;
        assert!(k.abs() < 0.02);
    }

    #[test]
    fn ndarma_pure_copy_is_constant() {
        let s = generate_ndarma(&ndarma_spec(1, 0, vec![1.0, 0.0], 200, 9)).unwrap();
        assert!(s.codes().iter().all(|&c| c == s.codes()[0]));
    }

    #[test]
    fn ndarma_kappa_matches_copy_probability() {
        let phi = 0.6;
        let s = generate_ndarma(&ndarma_spec(1, 0, vec![phi, 1.0 - phi], 100_000, 13)).unwrap();
        let k = cohens_kappa(&LagTables::new(&s, 1).unwrap()).unwrap().value;
        assert!((k - phi).abs() < 0.02, "{k}");
    }

    #[test]
    fn ndarma_selection_length_checked() {
        assert!(generate_ndarma(&ndarma_spec(1, 1, vec![0.5, 0.5], 10, 0)).is_err());
    }

    #[test]
    fn invalid_matrices_rejected() {
        assert!(generate_mc(&mc(vec![vec![0.5, 0.6], vec![0.5, 0.5]], vec![0.5, 0.5], 10, 0)).is_err());
        assert!(generate_mc(&mc(vec![vec![1.5, -0.5], vec![0.5, 0.5]], vec![0.5, 0.5], 10, 0)).is_err());
        let bad_hmm = GeneratorSpec {
            model: Model::Hmm {
                transition: vec![vec![1.0]],
                emission: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
                initial: vec![1.0],
            },
            length: 10,
            seed: 0,
        };
        assert!(generate_hmm(&bad_hmm).is_err());
    }

    fn four_groups() -> CorpusSpec {
        let group = |stay: f64| CorpusGroup {
            count: 20,
            length: 600,
            model: Model::Mc {
                transition: (0..3)
                    .map(|i| (0..3).map(|j| if i == j { stay } else { (1.0 - stay) / 2.0 }).collect())
                    .collect(),
                initial: vec![1.0 / 3.0; 3],
            },
        };
        CorpusSpec {
            note: None,
            alphabet: None,
            seed: 100,
            groups: vec![group(0.1), group(0.3), group(0.6), group(0.9)],
        }
    }

    #[test]
    fn corpus_layout_and_determinism() {
        let spec = four_groups();
        let a = generate_corpus(&spec).unwrap();
        assert_eq!(a.series.len(), 80);
        let expect: Vec<usize> = (1..=4).flat_map(|g| std::iter::repeat_n(g, 20)).collect();
        assert_eq!(a.labels, expect);
        assert!(a.series.iter().all(|s| s.len() == 600));
        assert_eq!(a, generate_corpus(&spec).unwrap());
        // Member k is reproducible from seed + k alone.
        let solo = simulate_codes(&spec.groups[2].model, 600, 100 + 45).unwrap();
        assert_eq!(a.series[45].codes(), &solo[..]);
    }

    #[test]
    fn corpus_spec_json_round_trip() {
        let spec = four_groups();
        let json = serde_json::to_string(&spec).unwrap();
        let back: CorpusSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        let ndarma: GeneratorSpec = serde_json::from_str(
            r#"{"family":"ndarma","p":1,"q":0,"selection":[0.4,0.6],"innovation":[0.2,0.8],"length":50}"#,
        )
        .unwrap();
        assert!(matches!(ndarma.model, Model::Ndarma { burn_in: 500, .. }));
    }
}

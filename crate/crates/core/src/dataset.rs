//! Data ingestion and synthetic instances.
//!
//! CSV files are UTF-8 with a header row:
//!
//! * scores: `user_id,item_id,score`
//! * provider map: `item_id,provider_id`
//! * arrivals: `user_id`, one row per request in chronological order
//!
//! External ids are arbitrary strings. Dense indices are assigned in
//! first-seen order.

use std::collections::HashMap;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    build_instance, default_weights, ArrivalStream, Catalog, HorizonConfig, Instance,
    PreferenceScores,
};

/// Bidirectional map between external string ids and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn get_or_insert(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegeneratePolicy {
    /// Refuse to normalize when every score is equal.
    #[default]
    Error,
    /// Map every score to 0.5.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub normalize: bool,
    pub degenerate: DegeneratePolicy,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            normalize: true,
            degenerate: DegeneratePolicy::Error,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScoreTable {
    pub scores: PreferenceScores,
    pub users: IdMap,
    pub items: IdMap,
}

#[derive(Debug, Clone)]
pub struct ProviderTable {
    pub catalog: Catalog,
    pub items: IdMap,
    pub providers: IdMap,
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

/// Opens a CSV file and checks its header. Yields `(line, record)` pairs.
fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let found = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let found: Vec<&str> = found.iter().collect();
    if found.iter().all(|h| h.is_empty()) {
        return Err(parse_err(path, 1, "file is empty"));
    }
    if found != header {
        return Err(parse_err(
            path,
            1,
            format!("expected header {:?}, found {:?}", header.join(","), found.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        rows.push((line, record));
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "file has no data rows"));
    }
    Ok(rows)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

pub fn load_scores(path: impl AsRef<Path>, opts: ScoreOptions) -> Result<ScoreTable> {
    let path = path.as_ref();
    let rows = read_csv(path, &["user_id", "item_id", "score"])?;
    let mut users = IdMap::default();
    let mut items = IdMap::default();
    let mut seen: HashMap<(usize, usize), u64> = HashMap::new();
    let mut entries = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let u = users.get_or_insert(&rec[0]);
        let i = items.get_or_insert(&rec[1]);
        let s: f64 = rec[2]
            .parse()
            .map_err(|_| parse_err(path, *line, format!("invalid score {:?}", &rec[2])))?;
        if !s.is_finite() {
            return Err(parse_err(path, *line, format!("non-finite score {s}")));
        }
        if let Some(first) = seen.insert((u, i), *line) {
            return Err(parse_err(
                path,
                *line,
                format!(
                    "duplicate pair ({}, {}), first seen on line {first}",
                    &rec[0], &rec[1]
                ),
            ));
        }
        entries.push((u, i, s));
    }

    if opts.normalize {
        let (lo, hi) = entries
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                (lo.min(e.2), hi.max(e.2))
            });
        if hi > lo {
            let span = hi - lo;
            for e in &mut entries {
                e.2 = ((e.2 - lo) / span).clamp(0.0, 1.0);
            }
        } else {
            match opts.degenerate {
                DegeneratePolicy::Error => return Err(Error::DegenerateNormalization(lo)),
                DegeneratePolicy::Midpoint => entries.iter_mut().for_each(|e| e.2 = 0.5),
            }
        }
    }
    let scores = PreferenceScores::from_entries(users.len(), items.len(), entries)?;
    Ok(ScoreTable {
        scores,
        users,
        items,
    })
}

pub fn load_provider_map(path: impl AsRef<Path>) -> Result<ProviderTable> {
    let path = path.as_ref();
    let rows = read_csv(path, &["item_id", "provider_id"])?;
    let mut items = IdMap::default();
    let mut providers = IdMap::default();
    let mut provider_of: Vec<usize> = Vec::new();
    for (line, rec) in &rows {
        let before = items.len();
        let i = items.get_or_insert(&rec[0]);
        let p = providers.get_or_insert(&rec[1]);
        if i < before {
            let other = providers.id(provider_of[i]);
            return Err(parse_err(
                path,
                *line,
                if provider_of[i] == p {
                    format!("item {:?} listed twice", &rec[0])
                } else {
                    format!(
                        "item {:?} listed under providers {other:?} and {:?}",
                        &rec[0], &rec[1]
                    )
                },
            ));
        }
        provider_of.push(p);
    }
    let catalog = Catalog::new(provider_of, providers.len())?;
    Ok(ProviderTable {
        catalog,
        items,
        providers,
    })
}

/// Writes the provider map in dense item order.
pub fn write_provider_map(table: &ProviderTable, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| csv_err(path.as_ref(), e))?;
    let io = |e: csv::Error| csv_err(path.as_ref(), e);
    w.write_record(["item_id", "provider_id"]).map_err(io)?;
    for i in 0..table.catalog.item_count() {
        w.write_record([table.items.id(i), table.providers.id(table.catalog.provider_of(i))])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_arrivals(path: impl AsRef<Path>, users: &IdMap) -> Result<ArrivalStream> {
    let path = path.as_ref();
    let rows = read_csv(path, &["user_id"])?;
    rows.iter()
        .map(|(line, rec)| {
            users
                .index_of(&rec[0])
                .ok_or_else(|| parse_err(path, *line, format!("unknown user {:?}", &rec[0])))
        })
        .collect::<Result<Vec<_>>>()
        .map(ArrivalStream::new)
}

/// Cuts arrivals into consecutive horizons of exactly `t`; the remainder is
/// dropped.
pub fn split_horizons(arrivals: &ArrivalStream, t: usize) -> Result<Vec<ArrivalStream>> {
    if t == 0 {
        return Err(Error::InvalidInput("horizon length must be positive".into()));
    }
    if arrivals.len() < t {
        return Err(Error::InvalidInput(format!(
            "{} arrivals cannot fill a horizon of length {t}",
            arrivals.len()
        )));
    }
    Ok(arrivals
        .arrivals
        .chunks_exact(t)
        .map(|c| ArrivalStream::new(c.to_vec()))
        .collect())
}

/// Scores, catalog and arrivals loaded from files, with items aligned to the
/// order of the scores file.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub catalog: Catalog,
    pub scores: PreferenceScores,
    pub arrivals: ArrivalStream,
    pub users: IdMap,
    pub items: IdMap,
    pub providers: IdMap,
}

pub fn load_dataset(
    scores_path: impl AsRef<Path>,
    providers_path: impl AsRef<Path>,
    arrivals_path: impl AsRef<Path>,
    opts: ScoreOptions,
) -> Result<Dataset> {
    let scores = load_scores(scores_path.as_ref(), opts)?;
    let providers = load_provider_map(providers_path.as_ref())?;
    let mut provider_of = Vec::with_capacity(scores.items.len());
    for id in scores.items.ids() {
        let i = providers.items.index_of(id).ok_or_else(|| {
            Error::InvalidInput(format!("scored item {id:?} has no provider"))
        })?;
        provider_of.push(providers.catalog.provider_of(i));
    }
    if providers.items.len() != scores.items.len() {
        let unscored = providers
            .items
            .ids()
            .iter()
            .find(|id| scores.items.index_of(id).is_none())
            .cloned()
            .unwrap_or_default();
        return Err(Error::InvalidInput(format!(
            "item {unscored:?} has a provider but no scores"
        )));
    }
    let catalog = Catalog::new(provider_of, providers.providers.len())?;
    let arrivals = load_arrivals(arrivals_path, &scores.users)?;
    Ok(Dataset {
        catalog,
        scores: scores.scores,
        arrivals,
        users: scores.users,
        items: scores.items,
        providers: providers.providers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScoreDistribution {
    Uniform,
    /// Item popularity decays as `rank^-exponent`; a user's score is the
    /// popularity times a uniform draw.
    PowerLaw { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SizeDistribution {
    Even,
    /// Every provider owns one item; the rest go to provider `p` with
    /// probability proportional to `(p + 1)^-exponent`.
    PowerLaw { exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub user_count: usize,
    pub item_count: usize,
    pub provider_count: usize,
    pub score_distribution: ScoreDistribution,
    pub provider_size_distribution: SizeDistribution,
    pub seed: u64,
    /// Number of arrivals to draw; defaults to one horizon.
    #[serde(default)]
    pub arrival_count: Option<usize>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.user_count == 0 || self.item_count == 0 || self.provider_count == 0 {
            return Err(Error::InvalidInput(
                "synthetic counts must all be positive".into(),
            ));
        }
        if self.provider_count > self.item_count {
            return Err(Error::InvalidInput(format!(
                "{} providers cannot each own an item out of {}",
                self.provider_count, self.item_count
            )));
        }
        for exp in [
            match self.score_distribution {
                ScoreDistribution::PowerLaw { exponent } => Some(exponent),
                _ => None,
            },
            match self.provider_size_distribution {
                SizeDistribution::PowerLaw { exponent } => Some(exponent),
                _ => None,
            },
        ]
        .into_iter()
        .flatten()
        {
            if !(exp > 0.0 && exp.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "power-law exponent must be positive, got {exp}"
                )));
            }
        }
        Ok(())
    }
}

/// Provider sizes drawn for a spec. Consumes randomness only for power laws.
pub fn provider_sizes(spec: &SyntheticSpec, rng: &mut impl Rng) -> Vec<usize> {
    let (n, p) = (spec.item_count, spec.provider_count);
    match spec.provider_size_distribution {
        SizeDistribution::Even => (0..p).map(|j| n / p + usize::from(j < n % p)).collect(),
        SizeDistribution::PowerLaw { exponent } => {
            let mut sizes = vec![1usize; p];
            let weights: Vec<f64> = (0..p).map(|j| ((j + 1) as f64).powf(-exponent)).collect();
            let dist = WeightedIndex::new(&weights).expect("positive weights");
            for _ in p..n {
                sizes[dist.sample(rng)] += 1;
            }
            sizes
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec, horizon: HorizonConfig) -> Result<Instance> {
    spec.validate()?;
    horizon.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sizes = provider_sizes(spec, &mut rng);
    let mut provider_of: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(p, &s)| std::iter::repeat(p).take(s))
        .collect();
    provider_of.shuffle(&mut rng);
    let catalog = Catalog::new(provider_of, spec.provider_count)?;

    let (users, items) = (spec.user_count, spec.item_count);
    let values: Vec<f64> = match spec.score_distribution {
        ScoreDistribution::Uniform => (0..users * items).map(|_| rng.gen::<f64>()).collect(),
        ScoreDistribution::PowerLaw { exponent } => {
            let mut rank: Vec<usize> = (0..items).collect();
            rank.shuffle(&mut rng);
            let popularity: Vec<f64> = rank
                .iter()
                .map(|&r| ((r + 1) as f64).powf(-exponent))
                .collect();
            (0..users * items)
                .map(|idx| popularity[idx % items] * rng.gen::<f64>())
                .collect()
        }
    };
    let scores = PreferenceScores::from_dense(users, items, values)?;
    let arrival_count = spec.arrival_count.unwrap_or(horizon.t);
    let arrivals: Vec<usize> = (0..arrival_count).map(|_| rng.gen_range(0..users)).collect();
    let weights = default_weights(&catalog, &horizon)?;
    build_instance(catalog, scores, horizon, weights, ArrivalStream::new(arrivals))
}

//! Shared domain types: the catalog, preference scores, horizon settings,
//! provider weights, and the per-horizon exposure and dual state.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Item-to-provider ownership. Every item belongs to exactly one provider and
/// every provider owns at least one item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    provider_of: Vec<usize>,
    items_of: Vec<Vec<usize>>,
}

impl Catalog {
    pub fn new(provider_of: Vec<usize>, provider_count: usize) -> Result<Self> {
        if provider_of.is_empty() {
            return Err(Error::InvalidInput("catalog has no items".into()));
        }
        if provider_count == 0 {
            return Err(Error::InvalidInput("catalog has no providers".into()));
        }
        if provider_count > provider_of.len() {
            return Err(Error::InvalidInput(format!(
                "{provider_count} providers but only {} items",
                provider_of.len()
            )));
        }
        let mut items_of = vec![Vec::new(); provider_count];
        for (item, &p) in provider_of.iter().enumerate() {
            if p >= provider_count {
                return Err(Error::InvalidInput(format!(
                    "item {item} maps to provider {p}, but only {provider_count} providers exist"
                )));
            }
            items_of[p].push(item);
        }
        if let Some(p) = items_of.iter().position(Vec::is_empty) {
            return Err(Error::EmptyProvider(p));
        }
        Ok(Self {
            provider_of,
            items_of,
        })
    }

    pub fn item_count(&self) -> usize {
        self.provider_of.len()
    }

    pub fn provider_count(&self) -> usize {
        self.items_of.len()
    }

    #[inline]
    pub fn provider_of(&self, item: usize) -> usize {
        self.provider_of[item]
    }

    pub fn provider_map(&self) -> &[usize] {
        &self.provider_of
    }

    pub fn items_of(&self, provider: usize) -> &[usize] {
        &self.items_of[provider]
    }

    pub fn provider_sizes(&self) -> Vec<usize> {
        self.items_of.iter().map(Vec::len).collect()
    }
}

/// User-item preference scores in `[0, 1]`, stored densely. Pairs that were
/// never scored are remembered as absent and looking them up is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceScores {
    user_count: usize,
    item_count: usize,
    // NaN marks an absent pair.
    values: Vec<f64>,
}

impl PreferenceScores {
    /// Builds a complete score matrix from row-major values.
    pub fn from_dense(user_count: usize, item_count: usize, values: Vec<f64>) -> Result<Self> {
        if user_count == 0 || item_count == 0 {
            return Err(Error::InvalidInput(
                "score matrix needs at least one user and one item".into(),
            ));
        }
        check_len("score matrix", user_count * item_count, values.len())?;
        for (idx, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ScoreOutOfRange {
                    user: idx / item_count,
                    item: idx % item_count,
                    value: v,
                });
            }
        }
        Ok(Self {
            user_count,
            item_count,
            values,
        })
    }

    /// Builds a possibly sparse score table from `(user, item, score)` entries.
    pub fn from_entries(
        user_count: usize,
        item_count: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        if user_count == 0 || item_count == 0 {
            return Err(Error::InvalidInput(
                "score table needs at least one user and one item".into(),
            ));
        }
        let mut values = vec![f64::NAN; user_count * item_count];
        for (user, item, value) in entries {
            if user >= user_count || item >= item_count {
                return Err(Error::InvalidInput(format!(
                    "score entry (user {user}, item {item}) out of range"
                )));
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ScoreOutOfRange { user, item, value });
            }
            let slot = &mut values[user * item_count + item];
            if !slot.is_nan() {
                return Err(Error::InvalidInput(format!(
                    "duplicate score for (user {user}, item {item})"
                )));
            }
            *slot = value;
        }
        Ok(Self {
            user_count,
            item_count,
            values,
        })
    }

    pub fn user_count(&self) -> usize {
        self.user_count
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn get(&self, user: usize, item: usize) -> Result<f64> {
        if user >= self.user_count || item >= self.item_count {
            return Err(Error::MissingScore { user, item });
        }
        let v = self.values[user * self.item_count + item];
        if v.is_nan() {
            Err(Error::MissingScore { user, item })
        } else {
            Ok(v)
        }
    }

    /// The full score row of a user. Fails if any item is unscored for them.
    pub fn row(&self, user: usize) -> Result<&[f64]> {
        if user >= self.user_count {
            return Err(Error::MissingScore { user, item: 0 });
        }
        let row = &self.values[user * self.item_count..(user + 1) * self.item_count];
        match row.iter().position(|v| v.is_nan()) {
            Some(item) => Err(Error::MissingScore { user, item }),
            None => Ok(row),
        }
    }

    /// Scaled copy, used by invariance checks. Values are clamped to `[0, 1]`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            user_count: self.user_count,
            item_count: self.item_count,
            values: self.values.iter().map(|v| (v * factor).min(1.0)).collect(),
        }
    }
}

/// Ranking size `K`, horizon length `T` and the fairness trade-off `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonConfig {
    pub k: usize,
    pub t: usize,
    pub lambda: f64,
}

impl HorizonConfig {
    pub fn new(k: usize, t: usize, lambda: f64) -> Result<Self> {
        let cfg = Self { k, t, lambda };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("ranking size K must be at least 1".into()));
        }
        if self.t == 0 {
            return Err(Error::InvalidInput("horizon length T must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "trade-off lambda must be a finite non-negative number, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Total number of exposure slots in one horizon.
    pub fn slots(&self) -> usize {
        self.k * self.t
    }
}

/// Per-provider resource caps `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderWeights {
    pub gamma: Vec<f64>,
    /// Set when the caps come from the item-share formula; `None` for
    /// explicitly supplied caps.
    pub richness_factor: Option<f64>,
}

impl ProviderWeights {
    pub fn explicit(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidInput("provider weights are empty".into()));
        }
        if let Some(g) = gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "provider weights must be positive and finite, got {g}"
            )));
        }
        Ok(Self {
            gamma,
            richness_factor: None,
        })
    }

    /// Every provider gets the same cap `K * T`, so no trajectory can exceed it.
    pub fn uniform(provider_count: usize, horizon: &HorizonConfig) -> Result<Self> {
        Self::explicit(vec![horizon.slots() as f64; provider_count])
    }

    /// `gamma_p = K * T * richness * |I_p| / |I|`.
    pub fn from_item_share(
        catalog: &Catalog,
        horizon: &HorizonConfig,
        richness_factor: f64,
    ) -> Result<Self> {
        horizon.validate()?;
        if !(richness_factor > 1.0 && richness_factor.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "richness factor must exceed 1, got {richness_factor}"
            )));
        }
        let scale = horizon.slots() as f64 * richness_factor / catalog.item_count() as f64;
        let gamma = catalog
            .provider_sizes()
            .into_iter()
            .map(|n| scale * n as f64)
            .collect();
        Ok(Self {
            gamma,
            richness_factor: Some(richness_factor),
        })
    }

    pub fn provider_count(&self) -> usize {
        self.gamma.len()
    }
}

/// Item-share weights with richness `1 + 1/|P|`.
pub fn default_weights(catalog: &Catalog, horizon: &HorizonConfig) -> Result<ProviderWeights> {
    let richness = 1.0 + 1.0 / catalog.provider_count() as f64;
    ProviderWeights::from_item_share(catalog, horizon, richness)
}

/// One step's outcome: the re-ranked list (best first) and the exposure it
/// grants each provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub selected: Vec<usize>,
    pub exposure_delta: Vec<u32>,
}

impl Decision {
    pub fn new(selected: Vec<usize>, catalog: &Catalog) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::InvalidInput("decision selects no items".into()));
        }
        let mut seen = vec![false; catalog.item_count()];
        let mut exposure_delta = vec![0u32; catalog.provider_count()];
        for &item in &selected {
            if item >= catalog.item_count() {
                return Err(Error::InvalidInput(format!("item {item} out of range")));
            }
            if std::mem::replace(&mut seen[item], true) {
                return Err(Error::InvalidInput(format!("item {item} selected twice")));
            }
            exposure_delta[catalog.provider_of(item)] += 1;
        }
        Ok(Self {
            selected,
            exposure_delta,
        })
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

/// Cumulative exposures `e` and remaining resources `beta = gamma - e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureState {
    pub exposures: Vec<u64>,
    pub remaining: Vec<f64>,
}

impl ExposureState {
    pub fn new(gamma: &[f64]) -> Self {
        Self {
            exposures: vec![0; gamma.len()],
            remaining: gamma.to_vec(),
        }
    }

    /// Whether provider `p` has no resources left (`beta_p <= 0`).
    #[inline]
    pub fn exhausted(&self, p: usize) -> bool {
        self.remaining[p] <= 0.0
    }

    pub fn exhausted_mask(&self) -> Vec<bool> {
        self.remaining.iter().map(|&r| r <= 0.0).collect()
    }

    /// Applies a decision and returns the number of slots that landed on a
    /// provider whose remaining resources had already run out.
    pub fn apply(&mut self, decision: &Decision, gamma: &[f64]) -> Result<u64> {
        check_len("exposure delta", self.exposures.len(), decision.exposure_delta.len())?;
        check_len("gamma", self.exposures.len(), gamma.len())?;
        let mut overshoot = 0u64;
        for (p, &delta) in decision.exposure_delta.iter().enumerate() {
            if delta == 0 {
                continue;
            }
            let before = self.remaining[p];
            let covered = if before > 0.0 { before.ceil() as u64 } else { 0 };
            overshoot += (delta as u64).saturating_sub(covered);
            self.exposures[p] += delta as u64;
            self.remaining[p] = gamma[p] - self.exposures[p] as f64;
        }
        Ok(overshoot)
    }

    pub fn exposures_f64(&self) -> Vec<f64> {
        self.exposures.iter().map(|&e| e as f64).collect()
    }
}

/// Dual iterate, momentum and step settings of the online dual descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub mu: Vec<f64>,
    pub momentum_grad: Vec<f64>,
    pub raw_grad: Vec<f64>,
    pub step_size: f64,
    pub alpha: f64,
}

impl DualState {
    pub fn new(provider_count: usize, step_size: f64, alpha: f64) -> Result<Self> {
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "step size must be positive, got {step_size}"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "momentum coefficient must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(Self {
            mu: vec![0.0; provider_count],
            momentum_grad: vec![0.0; provider_count],
            raw_grad: vec![0.0; provider_count],
            step_size,
            alpha,
        })
    }
}

/// Chronological user arrivals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalStream {
    pub arrivals: Vec<usize>,
}

impl ArrivalStream {
    pub fn new(arrivals: Vec<usize>) -> Self {
        Self { arrivals }
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }
}

impl From<Vec<usize>> for ArrivalStream {
    fn from(arrivals: Vec<usize>) -> Self {
        Self { arrivals }
    }
}

/// Immutable problem data shared by every horizon run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub catalog: Catalog,
    pub scores: PreferenceScores,
    pub horizon: HorizonConfig,
    pub weights: ProviderWeights,
    pub arrivals: ArrivalStream,
}

impl Instance {
    pub fn gamma(&self) -> &[f64] {
        &self.weights.gamma
    }

    pub fn k(&self) -> usize {
        self.horizon.k
    }

    pub fn t(&self) -> usize {
        self.horizon.t
    }

    pub fn lambda(&self) -> f64 {
        self.horizon.lambda
    }

    /// Same data under different horizon settings and weights.
    pub fn with_horizon(&self, horizon: HorizonConfig, weights: ProviderWeights) -> Result<Self> {
        build_instance(
            self.catalog.clone(),
            self.scores.clone(),
            horizon,
            weights,
            self.arrivals.clone(),
        )
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let horizon = HorizonConfig::new(self.horizon.k, self.horizon.t, lambda)?;
        self.with_horizon(horizon, self.weights.clone())
    }
}

pub fn build_instance(
    catalog: Catalog,
    scores: PreferenceScores,
    horizon: HorizonConfig,
    weights: ProviderWeights,
    arrivals: ArrivalStream,
) -> Result<Instance> {
    horizon.validate()?;
    check_len("scores vs catalog items", catalog.item_count(), scores.item_count())?;
    check_len("weights vs providers", catalog.provider_count(), weights.provider_count())?;
    if let Some(p) = (0..catalog.provider_count()).find(|&p| catalog.items_of(p).is_empty()) {
        return Err(Error::EmptyProvider(p));
    }
    if let Some(g) = weights.gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidInput(format!("non-positive provider weight {g}")));
    }
    if horizon.k > catalog.item_count() {
        return Err(Error::InvalidInput(format!(
            "ranking size {} exceeds the item count {}",
            horizon.k,
            catalog.item_count()
        )));
    }
    if arrivals.is_empty() {
        return Err(Error::InvalidInput("arrival stream is empty".into()));
    }
    for &u in &arrivals.arrivals {
        if u >= scores.user_count() {
            return Err(Error::InvalidInput(format!(
                "arrival references user {u}, but only {} users are scored",
                scores.user_count()
            )));
        }
        scores.row(u)?;
    }
    Ok(Instance {
        catalog,
        scores,
        horizon,
        weights,
        arrivals,
    })
}

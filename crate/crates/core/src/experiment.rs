//! Config-driven experiments.
//!
//! A single TOML file describes the data, the horizon, the weights and the
//! policies. Every command resolves defaults first, so the configuration
//! echoed next to each output is enough to rerun it exactly.
//!
//! ```toml
//! seed = 7
//! out_dir = "out/tiny"
//!
//! [horizon]
//! k = 2
//! t = 8
//! lambda = 1.0
//!
//! [data]
//! kind = "files"
//! scores = "../data/tiny_scores.csv"
//! providers = "../data/tiny_providers.csv"
//! arrivals = "../data/tiny_arrivals.csv"
//!
//! [[policies]]
//! kind = "pmmf"
//!
//! [[policies]]
//! kind = "greedy"
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    generate_synthetic, load_dataset, split_horizons, DegeneratePolicy, ScoreDistribution,
    ScoreOptions, SizeDistribution, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::metrics::{lorenz_and_gini, RunReport};
use crate::oracle::{online_objective, solve_offline, DEFAULT_BUDGET};
use crate::policy::{FillMode, PmmfParams, PmmfStepper, Policy};
use crate::regularizer::Regularizer;
use crate::types::{
    build_instance, Catalog, HorizonConfig, Instance, ProviderWeights,
};

const DEFAULT_K: usize = 10;
const DEFAULT_T: usize = 256;

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_t() -> usize {
    DEFAULT_T
}

fn yes() -> bool {
    true
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_budget")]
    pub oracle_budget: u64,
    /// Never fill a list from exhausted providers; fail instead.
    #[serde(default)]
    pub strict: bool,
    /// Attach the oracle regret to every `run` record.
    #[serde(default, skip_serializing_if = "is_false")]
    pub compute_regret: bool,
    pub horizon: HorizonSection,
    #[serde(default)]
    pub weights: WeightsSection,
    pub data: DataSection,
    pub policies: Vec<PolicyEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret: Option<RegretSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lorenz: Option<LorenzSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchSection>,
    /// Directory that relative data paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_t")]
    pub t: usize,
    pub lambda: f64,
}

impl HorizonSection {
    pub fn config(&self) -> HorizonConfig {
        HorizonConfig {
            k: self.k,
            t: self.t,
            lambda: self.lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightsMode {
    /// `K * T * richness * |I_p| / |I|`.
    #[default]
    Default,
    /// `K * T` for every provider.
    Uniform,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    #[serde(default)]
    pub mode: WeightsMode,
    /// Defaults to `1 + 1/|P|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub richness_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSection {
    Files {
        scores: PathBuf,
        providers: PathBuf,
        arrivals: PathBuf,
        #[serde(default = "yes")]
        normalize: bool,
        #[serde(default)]
        degenerate: DegeneratePolicy,
    },
    Synthetic {
        user_count: usize,
        item_count: usize,
        provider_count: usize,
        score_distribution: ScoreDistribution,
        provider_size_distribution: SizeDistribution,
        /// Defaults to the top-level seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        /// Defaults to one horizon.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arrival_count: Option<usize>,
    },
}

/// A policy as written in the config; missing parameters take defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyEntry {
    Pmmf {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step_coefficient: Option<f64>,
    },
    Greedy,
    KNeighbor,
    MinRegularizer {
        /// Defaults to the horizon's `lambda`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda_penalty: Option<f64>,
    },
    DualNoMomentum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step_coefficient: Option<f64>,
    },
}

impl PolicyEntry {
    pub fn policy(&self, lambda: f64) -> Policy {
        let d = PmmfParams::default();
        match *self {
            PolicyEntry::Pmmf {
                alpha,
                step_coefficient,
            } => Policy::Pmmf {
                alpha: alpha.unwrap_or(d.alpha),
                step_coefficient: step_coefficient.unwrap_or(d.step_coefficient),
            },
            PolicyEntry::Greedy => Policy::Greedy,
            PolicyEntry::KNeighbor => Policy::KNeighbor,
            PolicyEntry::MinRegularizer { lambda_penalty } => Policy::MinRegularizer {
                lambda_penalty: lambda_penalty.unwrap_or(lambda),
            },
            PolicyEntry::DualNoMomentum { step_coefficient } => Policy::DualNoMomentum {
                step_coefficient: step_coefficient.unwrap_or(d.step_coefficient),
            },
        }
    }

    fn resolved(&self, lambda: f64) -> Self {
        match self.policy(lambda) {
            Policy::Pmmf {
                alpha,
                step_coefficient,
            } => PolicyEntry::Pmmf {
                alpha: Some(alpha),
                step_coefficient: Some(step_coefficient),
            },
            Policy::Greedy => PolicyEntry::Greedy,
            Policy::KNeighbor => PolicyEntry::KNeighbor,
            Policy::MinRegularizer { lambda_penalty } => PolicyEntry::MinRegularizer {
                lambda_penalty: Some(lambda_penalty),
            },
            Policy::DualNoMomentum { step_coefficient } => PolicyEntry::DualNoMomentum {
                step_coefficient: Some(step_coefficient),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegretSection {
    pub t_list: Vec<usize>,
    #[serde(default)]
    pub regularizer: Regularizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LorenzMode {
    /// Exposures of the exhaustive offline optimum.
    #[default]
    Offline,
    /// Exposures of the dual policy.
    Online,
}

fn default_regularizers() -> Vec<Regularizer> {
    vec![Regularizer::Mmf, Regularizer::Pf]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorenzSection {
    pub lambdas: Vec<f64>,
    #[serde(default = "default_regularizers")]
    pub regularizers: Vec<Regularizer>,
    #[serde(default)]
    pub mode: LorenzMode,
}

fn default_bench_providers() -> usize {
    100
}

fn default_bench_users() -> usize {
    20
}

fn default_repetitions() -> usize {
    2000
}

fn default_warmup() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub item_counts: Vec<usize>,
    #[serde(default = "default_bench_providers")]
    pub provider_count: usize,
    #[serde(default = "default_bench_users")]
    pub user_count: usize,
    /// Timed arrivals per item count.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Untimed arrivals run first.
    #[serde(default = "default_warmup")]
    pub warmup: usize,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses and validates, without touching the file system.
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.resolve_static();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses and validates a config file, including the existence
    /// of every referenced data file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let cfg = Self::from_toml_str(&text, base)?;
        cfg.check_files()?;
        Ok(cfg)
    }

    /// Fills defaults that do not depend on the data.
    fn resolve_static(&mut self) {
        let lambda = self.horizon.lambda;
        for p in &mut self.policies {
            *p = p.resolved(lambda);
        }
        if let DataSection::Synthetic { seed, .. } = &mut self.data {
            seed.get_or_insert(self.seed);
        }
    }

    /// Applies command-line overrides and re-resolves.
    pub fn with_overrides(
        mut self,
        out_dir: Option<PathBuf>,
        seed: Option<u64>,
        strict: bool,
    ) -> Result<Self> {
        if let Some(dir) = out_dir {
            self.out_dir = dir;
        }
        if let Some(seed) = seed {
            self.seed = seed;
            if let DataSection::Synthetic { seed: s, .. } = &mut self.data {
                *s = Some(seed);
            }
        }
        self.strict |= strict;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(config_err("at least one policy is required"));
        }
        if self.oracle_budget == 0 {
            return Err(config_err("oracle_budget must be positive"));
        }
        self.horizon
            .config()
            .validate()
            .map_err(|e| config_err(format!("horizon: {e}")))?;
        for (i, p) in self.policies.iter().enumerate() {
            p.policy(self.horizon.lambda)
                .validate()
                .map_err(|e| config_err(format!("policies[{i}]: {e}")))?;
        }
        let w = &self.weights;
        match (w.mode, &w.gamma) {
            (WeightsMode::Explicit, None) => {
                return Err(config_err("weights.mode = \"explicit\" needs weights.gamma"))
            }
            (WeightsMode::Explicit, Some(g)) => {
                ProviderWeights::explicit(g.clone()).map_err(|e| config_err(e.to_string()))?;
            }
            (_, Some(_)) => {
                return Err(config_err("weights.gamma is only allowed with mode = \"explicit\""))
            }
            _ => {}
        }
        if let Some(r) = w.richness_factor {
            if w.mode != WeightsMode::Default {
                return Err(config_err("weights.richness_factor only applies to mode = \"default\""));
            }
            if !(r > 1.0 && r.is_finite()) {
                return Err(config_err(format!("weights.richness_factor must exceed 1, got {r}")));
            }
        }
        if let DataSection::Synthetic { .. } = &self.data {
            self.synthetic_spec()?
                .validate()
                .map_err(|e| config_err(format!("data: {e}")))?;
        }
        if let Some(r) = &self.regret {
            if r.t_list.is_empty() || r.t_list.contains(&0) {
                return Err(config_err("regret.t_list must be non-empty and positive"));
            }
        }
        if let Some(l) = &self.lorenz {
            if l.lambdas.is_empty() || l.lambdas.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(config_err("lorenz.lambdas must be non-empty, finite and >= 0"));
            }
            if l.regularizers.is_empty() {
                return Err(config_err("lorenz.regularizers must be non-empty"));
            }
            if l.mode == LorenzMode::Online && l.regularizers != [Regularizer::Mmf] {
                return Err(config_err(
                    "online Lorenz curves come from the max-min dual policy; set regularizers = [\"mmf\"]",
                ));
            }
        }
        if let Some(b) = &self.bench {
            if b.item_counts.is_empty() || b.repetitions == 0 || b.user_count == 0 {
                return Err(config_err("bench needs item_counts, repetitions and user_count"));
            }
            if let Some(&n) = b.item_counts.iter().find(|&&n| n < b.provider_count.max(self.horizon.k)) {
                return Err(config_err(format!(
                    "bench item count {n} is below the provider count or K"
                )));
            }
        }
        Ok(())
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn check_files(&self) -> Result<()> {
        if let DataSection::Files {
            scores,
            providers,
            arrivals,
            ..
        } = &self.data
        {
            for p in [scores, providers, arrivals] {
                let full = self.resolve_path(p);
                if !full.is_file() {
                    return Err(config_err(format!("data file {} not found", full.display())));
                }
            }
        }
        Ok(())
    }

    fn synthetic_spec(&self) -> Result<SyntheticSpec> {
        match &self.data {
            DataSection::Synthetic {
                user_count,
                item_count,
                provider_count,
                score_distribution,
                provider_size_distribution,
                seed,
                arrival_count,
            } => Ok(SyntheticSpec {
                user_count: *user_count,
                item_count: *item_count,
                provider_count: *provider_count,
                score_distribution: *score_distribution,
                provider_size_distribution: *provider_size_distribution,
                seed: seed.unwrap_or(self.seed),
                arrival_count: Some(arrival_count.unwrap_or(self.horizon.t)),
            }),
            DataSection::Files { .. } => Err(config_err("data is not synthetic")),
        }
    }

    pub fn fill_mode(&self) -> FillMode {
        if self.strict {
            FillMode::Strict
        } else {
            FillMode::Fill
        }
    }

    pub fn resolved_policies(&self) -> Vec<Policy> {
        self.policies
            .iter()
            .map(|p| p.policy(self.horizon.lambda))
            .collect()
    }

    /// Provider caps for `horizon` under the configured mode.
    pub fn weights_for(&self, catalog: &Catalog, horizon: &HorizonConfig) -> Result<ProviderWeights> {
        match self.weights.mode {
            WeightsMode::Default => {
                let r = self
                    .weights
                    .richness_factor
                    .unwrap_or(1.0 + 1.0 / catalog.provider_count() as f64);
                ProviderWeights::from_item_share(catalog, horizon, r)
            }
            WeightsMode::Uniform => ProviderWeights::uniform(catalog.provider_count(), horizon),
            WeightsMode::Explicit => {
                ProviderWeights::explicit(self.weights.gamma.clone().unwrap_or_default())
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    /// Loads or generates the data and fills the data-dependent defaults.
    pub fn prepare(&self) -> Result<Prepared> {
        let horizon = self.horizon.config();
        let base = match &self.data {
            DataSection::Files {
                scores,
                providers,
                arrivals,
                normalize,
                degenerate,
            } => {
                let ds = load_dataset(
                    self.resolve_path(scores),
                    self.resolve_path(providers),
                    self.resolve_path(arrivals),
                    ScoreOptions {
                        normalize: *normalize,
                        degenerate: *degenerate,
                    },
                )?;
                let weights = self.weights_for(&ds.catalog, &horizon)?;
                build_instance(ds.catalog, ds.scores, horizon, weights, ds.arrivals)?
            }
            DataSection::Synthetic { .. } => {
                let inst = generate_synthetic(&self.synthetic_spec()?, horizon)?;
                let weights = self.weights_for(&inst.catalog, &horizon)?;
                inst.with_horizon(horizon, weights)?
            }
        };
        let mut config = self.clone();
        if config.weights.mode == WeightsMode::Default {
            config
                .weights
                .richness_factor
                .get_or_insert(1.0 + 1.0 / base.catalog.provider_count() as f64);
        }
        Ok(Prepared {
            config,
            instance: base,
        })
    }
}

/// A config with every default filled, and its instance.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub instance: Instance,
}

impl Prepared {
    /// The instance re-targeted to horizon length `t`, weights recomputed.
    pub fn instance_for_t(&self, t: usize) -> Result<Instance> {
        let h = HorizonConfig::new(self.instance.k(), t, self.instance.lambda())?;
        let w = self.config.weights_for(&self.instance.catalog, &h)?;
        self.instance.with_horizon(h, w)
    }

    fn write_config(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("resolved_config.toml"), self.config.to_toml()?)?;
        Ok(())
    }
}

/// One JSON line per (policy, horizon).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy: String,
    pub policy_index: usize,
    pub horizon_index: usize,
    pub ndcg_at_k: f64,
    pub ndcg_paper_form: Option<f64>,
    pub mmf_at_k: f64,
    pub w_lambda_at_k: f64,
    pub gini: f64,
    pub overshoot_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret: Option<f64>,
    pub mean_utility: f64,
    pub exposures: Vec<u64>,
    pub config: ExperimentConfig,
}

/// Horizon means for one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub policy_index: usize,
    pub ndcg_at_k: f64,
    /// `None` when any horizon lacks the reciprocal form.
    pub ndcg_paper_form: Option<f64>,
    pub mmf_at_k: f64,
    pub w_lambda_at_k: f64,
    pub gini: f64,
    pub overshoot_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret: Option<f64>,
    pub mean_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub horizons: usize,
    pub dropped_arrivals: usize,
    pub policies: Vec<PolicySummary>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub summary: RunSummary,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Runs every policy on every full horizon. Horizons run in parallel;
/// records come back in (horizon, policy) order.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let prepared = cfg.prepare()?;
    let inst = &prepared.instance;
    let horizons = split_horizons(&inst.arrivals, inst.t())?;
    let dropped = inst.arrivals.len() - horizons.len() * inst.t();
    let policies = cfg.resolved_policies();
    let mode = cfg.fill_mode();

    let per_horizon: Vec<Vec<RunRecord>> = horizons
        .par_iter()
        .enumerate()
        .map(|(h, arrivals)| {
            let w_opt = if cfg.compute_regret {
                Some(
                    solve_offline(inst, arrivals, Regularizer::Mmf, cfg.oracle_budget)
                        .map_err(|e| e.context(format!("oracle on horizon {h}")))?
                        .w_opt,
                )
            } else {
                None
            };
            policies
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let ctx = |e: Error| e.context(format!("policy {} on horizon {h}", p.name()));
                    let trace = p.run(inst, arrivals, mode).map_err(ctx)?;
                    let report = RunReport::from_trace(inst, &trace).map_err(ctx)?;
                    Ok(RunRecord {
                        policy: p.name().to_owned(),
                        policy_index: j,
                        horizon_index: h,
                        ndcg_at_k: report.ndcg_at_k,
                        ndcg_paper_form: report.ndcg_paper_form,
                        mmf_at_k: report.mmf_at_k,
                        w_lambda_at_k: report.w_lambda_at_k,
                        gini: report.gini,
                        overshoot_count: report.overshoot_count,
                        regret: w_opt.map(|w| w - report.w_lambda_at_k),
                        mean_utility: report.mean_utility,
                        exposures: report.exposures,
                        config: prepared.config.clone(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let records: Vec<RunRecord> = per_horizon.into_iter().flatten().collect();

    let summaries = policies
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let rs: Vec<&RunRecord> = records.iter().filter(|r| r.policy_index == j).collect();
            let paper: Option<Vec<f64>> = rs.iter().map(|r| r.ndcg_paper_form).collect();
            let regret: Option<Vec<f64>> = rs.iter().map(|r| r.regret).collect();
            PolicySummary {
                policy: p.name().to_owned(),
                policy_index: j,
                ndcg_at_k: mean(rs.iter().map(|r| r.ndcg_at_k)),
                ndcg_paper_form: paper.map(|v| mean(v.into_iter())),
                mmf_at_k: mean(rs.iter().map(|r| r.mmf_at_k)),
                w_lambda_at_k: mean(rs.iter().map(|r| r.w_lambda_at_k)),
                gini: mean(rs.iter().map(|r| r.gini)),
                overshoot_count: rs.iter().map(|r| r.overshoot_count).sum(),
                regret: regret.map(|v| mean(v.into_iter())),
                mean_utility: mean(rs.iter().map(|r| r.mean_utility)),
            }
        })
        .collect();
    Ok(RunOutcome {
        records,
        summary: RunSummary {
            horizons: horizons.len(),
            dropped_arrivals: dropped,
            policies: summaries,
            config: prepared.config,
        },
    })
}

/// Writes `run.jsonl` and `summary.json` into `dir`.
pub fn write_run(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut out = std::io::BufWriter::new(fs::File::create(dir.join("run.jsonl"))?);
    for r in &outcome.records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    let mut summary = serde_json::to_vec_pretty(&outcome.summary)?;
    summary.push(b'\n');
    fs::write(dir.join("summary.json"), summary)?;
    Ok(())
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let outcome = run(cfg)?;
    write_run(&outcome, &cfg.out_dir)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub t: usize,
    pub policy: String,
    /// Empty for the oracle row.
    pub policy_index: Option<usize>,
    pub horizons: usize,
    pub summed_regret: f64,
}

/// Summed empirical regret over the `N / T` horizons for each `T`.
pub fn regret_rows(cfg: &ExperimentConfig) -> Result<(Prepared, Vec<RegretRow>)> {
    let section = cfg
        .regret
        .as_ref()
        .ok_or_else(|| config_err("the regret command needs a [regret] section"))?;
    let prepared = cfg.prepare()?;
    let policies = cfg.resolved_policies();
    let mode = cfg.fill_mode();
    let mut rows = Vec::new();
    for &t in &section.t_list {
        let inst = prepared.instance_for_t(t)?;
        let horizons = split_horizons(&inst.arrivals, t)?;
        let per_horizon: Vec<Vec<f64>> = horizons
            .par_iter()
            .enumerate()
            .map(|(h, arrivals)| {
                let opt = solve_offline(&inst, arrivals, section.regularizer, cfg.oracle_budget)
                    .map_err(|e| e.context(format!("oracle at T = {t}, horizon {h}")))?;
                policies
                    .iter()
                    .map(|p| {
                        let trace = p.run(&inst, arrivals, mode)?;
                        Ok(opt.w_opt - online_objective(&inst, &trace, section.regularizer)?)
                    })
                    .collect::<Result<Vec<f64>>>()
                    .map_err(|e| e.context(format!("T = {t}, horizon {h}")))
            })
            .collect::<Result<_>>()?;
        rows.push(RegretRow {
            t,
            policy: "oracle".into(),
            policy_index: None,
            horizons: horizons.len(),
            summed_regret: 0.0,
        });
        for (j, p) in policies.iter().enumerate() {
            rows.push(RegretRow {
                t,
                policy: p.name().to_owned(),
                policy_index: Some(j),
                horizons: horizons.len(),
                summed_regret: per_horizon.iter().map(|r| r[j]).sum(),
            });
        }
    }
    Ok((prepared, rows))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let io = |e: csv::Error| Error::Parse {
        path: path.to_owned(),
        line: 0,
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_regret(cfg: &ExperimentConfig) -> Result<Vec<RegretRow>> {
    let (prepared, rows) = regret_rows(cfg)?;
    prepared.write_config(&cfg.out_dir)?;
    write_csv(&cfg.out_dir.join("regret.csv"), &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzRow {
    pub mode: LorenzMode,
    pub lambda: f64,
    pub regularizer: Regularizer,
    pub horizon_index: usize,
    pub rank: usize,
    pub provider_fraction: f64,
    pub exposure_share: f64,
    pub gini: f64,
}

/// Lorenz points per (lambda, regularizer, horizon).
pub fn lorenz_rows(cfg: &ExperimentConfig) -> Result<(Prepared, Vec<LorenzRow>)> {
    let section = cfg
        .lorenz
        .as_ref()
        .ok_or_else(|| config_err("the lorenz command needs a [lorenz] section"))?;
    let prepared = cfg.prepare()?;
    let horizons = split_horizons(&prepared.instance.arrivals, prepared.instance.t())?;
    let params = cfg
        .resolved_policies()
        .into_iter()
        .find_map(|p| match p {
            Policy::Pmmf {
                alpha,
                step_coefficient,
            } => Some(PmmfParams {
                alpha,
                step_coefficient,
            }),
            _ => None,
        })
        .unwrap_or_default();
    let mut rows = Vec::new();
    for &lambda in &section.lambdas {
        let inst = prepared.instance.with_lambda(lambda)?;
        for &reg in &section.regularizers {
            for (h, arrivals) in horizons.iter().enumerate() {
                let exposures = match section.mode {
                    LorenzMode::Offline => {
                        solve_offline(&inst, arrivals, reg, cfg.oracle_budget)
                            .map_err(|e| e.context(format!("oracle at lambda = {lambda}, horizon {h}")))?
                            .best_exposures
                    }
                    LorenzMode::Online => {
                        crate::policy::run_pmmf(&inst, arrivals, params, cfg.fill_mode())?
                            .exposures_final
                    }
                };
                let e: Vec<f64> = exposures.iter().map(|&x| x as f64).collect();
                let lorenz = lorenz_and_gini(&e)?;
                for (rank, &(x, y)) in lorenz.points.iter().enumerate() {
                    rows.push(LorenzRow {
                        mode: section.mode,
                        lambda,
                        regularizer: reg,
                        horizon_index: h,
                        rank,
                        provider_fraction: x,
                        exposure_share: y,
                        gini: lorenz.gini,
                    });
                }
            }
        }
    }
    Ok((prepared, rows))
}

pub fn cmd_lorenz(cfg: &ExperimentConfig) -> Result<Vec<LorenzRow>> {
    let (prepared, rows) = lorenz_rows(cfg)?;
    prepared.write_config(&cfg.out_dir)?;
    write_csv(&cfg.out_dir.join("lorenz.csv"), &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub item_count: usize,
    pub provider_count: usize,
    pub repetitions: usize,
    pub select_mean_us: f64,
    pub select_p95_us: f64,
    pub dual_mean_us: f64,
    pub dual_p95_us: f64,
    pub total_mean_us: f64,
    pub total_p95_us: f64,
}

fn mean_p95(mut xs: Vec<f64>) -> (f64, f64) {
    let m = mean(xs.iter().copied());
    xs.sort_by(f64::total_cmp);
    let idx = ((xs.len() as f64 * 0.95).ceil() as usize).clamp(1, xs.len()) - 1;
    (m, xs[idx])
}

/// Times selection and the dual step per arrival on a synthetic instance
/// with `item_count` items.
pub fn bench_item_count(
    item_count: usize,
    section: &BenchSection,
    horizon: HorizonConfig,
    params: PmmfParams,
    seed: u64,
) -> Result<BenchRow> {
    let spec = SyntheticSpec {
        user_count: section.user_count,
        item_count,
        provider_count: section.provider_count,
        score_distribution: ScoreDistribution::Uniform,
        provider_size_distribution: SizeDistribution::Even,
        seed,
        arrival_count: Some(horizon.t),
    };
    let inst = generate_synthetic(&spec, horizon)?;
    let mut stepper = PmmfStepper::new(&inst, params, FillMode::Fill)?;
    let (mut select, mut dual, mut total) = (
        Vec::with_capacity(section.repetitions),
        Vec::with_capacity(section.repetitions),
        Vec::with_capacity(section.repetitions),
    );
    let t = inst.t();
    for r in 0..section.warmup + section.repetitions {
        let step = r % t;
        if step == 0 && r > 0 {
            stepper = PmmfStepper::new(&inst, params, FillMode::Fill)?;
        }
        let user = inst.arrivals.arrivals[step];
        let t0 = Instant::now();
        let d = stepper.select(user)?;
        let t1 = Instant::now();
        stepper.update_dual(&d)?;
        let t2 = Instant::now();
        stepper.consume(&d)?;
        if r >= section.warmup {
            let s = (t1 - t0).as_secs_f64() * 1e6;
            let u = (t2 - t1).as_secs_f64() * 1e6;
            select.push(s);
            dual.push(u);
            total.push(s + u);
        }
    }
    let (select_mean_us, select_p95_us) = mean_p95(select);
    let (dual_mean_us, dual_p95_us) = mean_p95(dual);
    let (total_mean_us, total_p95_us) = mean_p95(total);
    Ok(BenchRow {
        item_count,
        provider_count: section.provider_count,
        repetitions: section.repetitions,
        select_mean_us,
        select_p95_us,
        dual_mean_us,
        dual_p95_us,
        total_mean_us,
        total_p95_us,
    })
}

pub fn bench_rows(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    let section = cfg
        .bench
        .as_ref()
        .ok_or_else(|| config_err("the bench command needs a [bench] section"))?;
    let params = cfg
        .resolved_policies()
        .into_iter()
        .find_map(|p| match p {
            Policy::Pmmf {
                alpha,
                step_coefficient,
            } => Some(PmmfParams {
                alpha,
                step_coefficient,
            }),
            _ => None,
        })
        .unwrap_or_default();
    section
        .item_counts
        .iter()
        .map(|&n| bench_item_count(n, section, cfg.horizon.config(), params, cfg.seed))
        .collect()
}

pub fn cmd_bench(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    let rows = bench_rows(cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("resolved_config.toml"), cfg.to_toml()?)?;
    write_csv(&cfg.out_dir.join("bench.csv"), &rows)?;
    Ok(rows)
}

/// Validates a config together with its data; returns the resolved TOML.
pub fn validate_config(cfg: &ExperimentConfig) -> Result<String> {
    cfg.check_files()?;
    let prepared = cfg.prepare()?;
    if prepared.instance.arrivals.len() < prepared.instance.t() {
        return Err(config_err(format!(
            "{} arrivals cannot fill one horizon of length {}",
            prepared.instance.arrivals.len(),
            prepared.instance.t()
        )));
    }
    prepared.config.to_toml()
}

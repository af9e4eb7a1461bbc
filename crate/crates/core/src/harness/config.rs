//! Experiment configuration: a single JSON document with a `version` field.
//! Unknown fields are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::utility::Utility;
use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

/// Any of the supported config documents, dispatched on `kind`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Config {
    Decode(DecodeConfig),
    Rerank(RerankConfig),
    Analyze(AnalyzeConfig),
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: Config = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Config::Decode(c) => c.validate(),
            Config::Rerank(c) => c.validate(),
            Config::Analyze(c) => c.validate(),
        }
    }

    pub fn set_master_seed(&mut self, seed: u64) {
        match self {
            Config::Decode(c) => c.master_seed = seed,
            Config::Rerank(c) => c.master_seed = seed,
            Config::Analyze(c) => c.master_seed = seed,
        }
    }
}

fn check_version(version: u32) -> Result<()> {
    if version != CONFIG_VERSION {
        return Err(Error::Config(format!(
            "unsupported config version {version}, expected {CONFIG_VERSION}"
        )));
    }
    Ok(())
}

fn parse_utility(field: &str, id: &str) -> Result<Utility> {
    Utility::parse(id).map_err(|e| Error::Config(format!("{field}: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Map,
    Nbyn,
    Nbys,
    C2f,
}

/// One hypothesis-generation strategy in a config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyEntry {
    pub tag: String,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfig {
    pub version: u32,
    pub decoder: DecoderKind,
    pub model: PathBuf,
    pub corpus: PathBuf,
    /// Candidate count for N-by-N.
    #[serde(default)]
    pub n: Option<usize>,
    /// Estimation sample count for N-by-S and the C2F coarse step.
    #[serde(default)]
    pub s: Option<usize>,
    /// C2F filter size.
    #[serde(default)]
    pub t: Option<usize>,
    /// C2F fine sample count.
    #[serde(default)]
    pub l: Option<usize>,
    #[serde(default)]
    pub proxy_utility: Option<String>,
    pub target_utility: String,
    #[serde(default = "default_nucleus_p")]
    pub nucleus_p: f64,
    #[serde(default = "default_beam_size")]
    pub beam_size: usize,
    #[serde(default)]
    pub length_penalty_alpha: f64,
    pub master_seed: u64,
    /// Hypothesis-space strategy mix for N-by-S and C2F.
    #[serde(default)]
    pub strategies: Vec<StrategyEntry>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Multi-reference corpus scoring: best reference per source (`max`) or
    /// all pairs pooled (`pool`).
    #[serde(default)]
    pub reference_aggregation: ReferenceAggregation,
}

fn default_nucleus_p() -> f64 {
    0.7
}

fn default_beam_size() -> usize {
    4
}

fn default_replicates() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceAggregation {
    #[default]
    Max,
    Pool,
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        check_version(self.version)?;
        parse_utility("target_utility", &self.target_utility)?;
        if let Some(proxy) = &self.proxy_utility {
            parse_utility("proxy_utility", proxy)?;
        }
        if !(self.nucleus_p > 0.0 && self.nucleus_p <= 1.0) {
            return Err(Error::Config(format!(
                "nucleus_p must lie in (0, 1], got {}",
                self.nucleus_p
            )));
        }
        if self.length_penalty_alpha < 0.0 {
            return Err(Error::Config("length_penalty_alpha must be >= 0".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        for entry in &self.strategies {
            if !matches!(entry.tag.as_str(), "ancestral" | "nucleus" | "beam") {
                return Err(Error::Config(format!(
                    "strategies: unknown tag {:?} (expected ancestral, nucleus or beam)",
                    entry.tag
                )));
            }
            if entry.count == 0 {
                return Err(Error::Config(format!(
                    "strategies: {} count must be >= 1",
                    entry.tag
                )));
            }
        }
        match self.decoder {
            DecoderKind::Map => Ok(()),
            DecoderKind::Nbyn => {
                require(self.n, "n", "nbyn")?;
                Ok(())
            }
            DecoderKind::Nbys => {
                require(self.s, "s", "nbys")?;
                self.require_strategies()
            }
            DecoderKind::C2f => {
                require(self.s, "s", "c2f")?;
                require(self.t, "t", "c2f")?;
                require(self.l, "l", "c2f")?;
                if self.proxy_utility.is_none() {
                    return Err(Error::Config("c2f decoder needs proxy_utility".into()));
                }
                self.require_strategies()
            }
        }
    }

    fn require_strategies(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config(format!(
                "decoder {:?} needs a nonempty strategies list",
                self.decoder
            )));
        }
        Ok(())
    }

    pub fn target(&self) -> Utility {
        Utility::parse(&self.target_utility).expect("validated")
    }

    pub fn proxy(&self) -> Option<Utility> {
        self.proxy_utility
            .as_deref()
            .map(|id| Utility::parse(id).expect("validated"))
    }
}

fn require(field: Option<usize>, name: &str, decoder: &str) -> Result<usize> {
    match field {
        Some(v) if v >= 1 => Ok(v),
        Some(v) => Err(Error::Config(format!(
            "{decoder} decoder needs {name} >= 1, got {v}"
        ))),
        None => Err(Error::Config(format!("{decoder} decoder needs {name}"))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RerankConfig {
    pub version: u32,
    /// `nbys` or `c2f`; MAP and N-by-N make no sense over external files.
    pub decoder: DecoderKind,
    pub corpus: PathBuf,
    pub candidates: PathBuf,
    pub samples: PathBuf,
    pub target_utility: String,
    #[serde(default)]
    pub proxy_utility: Option<String>,
    /// C2F filter size.
    #[serde(default)]
    pub t: Option<usize>,
    pub master_seed: u64,
    #[serde(default)]
    pub reference_aggregation: ReferenceAggregation,
}

impl RerankConfig {
    pub fn validate(&self) -> Result<()> {
        check_version(self.version)?;
        parse_utility("target_utility", &self.target_utility)?;
        if let Some(proxy) = &self.proxy_utility {
            parse_utility("proxy_utility", proxy)?;
        }
        match self.decoder {
            DecoderKind::Nbys => Ok(()),
            DecoderKind::C2f => {
                if self.proxy_utility.is_none() || self.t.is_none() {
                    return Err(Error::Config(
                        "c2f reranking needs proxy_utility and t".into(),
                    ));
                }
                Ok(())
            }
            _ => Err(Error::Config(
                "rerank supports only the nbys and c2f decoders".into(),
            )),
        }
    }

    pub fn target(&self) -> Utility {
        Utility::parse(&self.target_utility).expect("validated")
    }

    pub fn proxy(&self) -> Option<Utility> {
        self.proxy_utility
            .as_deref()
            .map(|id| Utility::parse(id).expect("validated"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Bias,
    Filter,
    Proportions,
    Scaling,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyEntry {
    pub utility: String,
    pub samples: usize,
}

/// Configuration of one analyze experiment. Fields not used by the chosen
/// experiment are ignored after validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub version: u32,
    pub experiment: ExperimentKind,
    pub model: PathBuf,
    pub source: String,
    pub utility: String,
    pub master_seed: u64,

    /// Bias: probe hypotheses as whitespace-joined symbol strings; when
    /// empty, the `probe_count` most probable support sequences are used.
    #[serde(default)]
    pub probes: Vec<String>,
    #[serde(default = "default_probe_count")]
    pub probe_count: usize,
    /// Bias: estimation sample size S.
    #[serde(default)]
    pub sample_size: Option<usize>,
    /// Bias / filter / scaling: replicate count.
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default = "default_nucleus_p")]
    pub nucleus_p: f64,
    #[serde(default = "default_beam_size")]
    pub beam_size: usize,

    /// Filter: initial candidate count and filter size.
    #[serde(default)]
    pub candidate_count: Option<usize>,
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default)]
    pub proxies: Vec<ProxyEntry>,

    /// Proportions: candidates per strategy.
    #[serde(default)]
    pub per_strategy_count: Option<usize>,

    /// Scaling: extra model sources swept alongside `source`.
    #[serde(default)]
    pub extra_sources: Vec<String>,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub s_values: Vec<usize>,
}

fn default_probe_count() -> usize {
    10
}

impl AnalyzeConfig {
    fn required(&self, field: Option<usize>, name: &str) -> Result<usize> {
        match field {
            Some(v) if v >= 1 => Ok(v),
            Some(_) => Err(Error::Config(format!("{name} must be >= 1"))),
            None => Err(Error::Config(format!(
                "experiment {:?} needs {name}",
                self.experiment
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_version(self.version)?;
        parse_utility("utility", &self.utility)?;
        if !(self.nucleus_p > 0.0 && self.nucleus_p <= 1.0) {
            return Err(Error::Config("nucleus_p must lie in (0, 1]".into()));
        }
        match self.experiment {
            ExperimentKind::Bias => {
                self.required(self.sample_size, "sample_size")?;
                self.required(self.replicates, "replicates")?;
                if self.probes.is_empty() && self.probe_count == 0 {
                    return Err(Error::Config("probe_count must be >= 1".into()));
                }
                Ok(())
            }
            ExperimentKind::Filter => {
                self.required(self.candidate_count, "candidate_count")?;
                self.required(self.t, "t")?;
                self.required(self.replicates, "replicates")?;
                if self.proxies.is_empty() {
                    return Err(Error::Config("filter needs at least one proxy".into()));
                }
                for p in &self.proxies {
                    parse_utility("proxies.utility", &p.utility)?;
                    if p.samples == 0 {
                        return Err(Error::Config("proxy samples must be >= 1".into()));
                    }
                }
                Ok(())
            }
            ExperimentKind::Proportions => {
                self.required(self.per_strategy_count, "per_strategy_count")?;
                Ok(())
            }
            ExperimentKind::Scaling => {
                self.required(self.replicates, "replicates")?;
                if self.n_values.is_empty() || self.s_values.is_empty() {
                    return Err(Error::Config(
                        "scaling needs nonempty n_values and s_values".into(),
                    ));
                }
                if self.n_values.iter().chain(&self.s_values).any(|&v| v == 0) {
                    return Err(Error::Config("n and s values must be >= 1".into()));
                }
                Ok(())
            }
        }
    }
}

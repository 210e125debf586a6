//! Experiment configuration: one TOML document per run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::coop::HardRule;
use crate::error::{invalid, Result};
use crate::perf::power::WaterfillMode;
use crate::perf::throughput::{AccessMode, ThroughputModel};
use crate::perf::tradeoff::SensingTradeoff;
use crate::sbdetect::{DetectorSpec, StatisticSpec};
use crate::scenario::{FrameSpec, PuSignalModel, SampleDomain, WidebandScenario};
use crate::widebandest::cs::MeasurementKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Roc,
    CoopRoc,
    MbMetrics,
    Edges,
    Cs,
    Throughput,
    TradeoffTau,
    TradeoffTauK,
    SamplingCost,
    Waterfill,
    BandwidthSweep,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Roc => "roc",
            ExperimentKind::CoopRoc => "coop-roc",
            ExperimentKind::MbMetrics => "mb-metrics",
            ExperimentKind::Edges => "edges",
            ExperimentKind::Cs => "cs",
            ExperimentKind::Throughput => "throughput",
            ExperimentKind::TradeoffTau => "tradeoff-tau",
            ExperimentKind::TradeoffTauK => "tradeoff-tau-k",
            ExperimentKind::SamplingCost => "sampling-cost",
            ExperimentKind::Waterfill => "waterfill",
            ExperimentKind::BandwidthSweep => "bandwidth-sweep",
        }
    }
}

fn default_trials() -> u64 {
    10_000
}

fn one() -> f64 {
    1.0
}

fn gaussian() -> PuSignalModel {
    PuSignalModel::Gaussian
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// One detector curve of a ROC experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocDetector {
    pub label: String,
    pub signal: PuSignalModel,
    pub statistic: StatisticSpec,
    /// Samples drawn per frame.
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observe: Option<usize>,
    #[serde(default)]
    pub domain: SampleDomain,
    /// Also emit the closed-form curve (energy and coherent only).
    #[serde(default, skip_serializing_if = "is_false")]
    pub analytic: bool,
    /// Overrides the top-level trial count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
}

impl RocDetector {
    pub fn frame(&self, gamma: f64, noise_var: f64) -> FrameSpec {
        FrameSpec::new(self.signal, gamma, noise_var, self.n).with_domain(self.domain)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocBlock {
    pub gamma: f64,
    #[serde(default = "one")]
    pub noise_var: f64,
    pub pfa_grid: Vec<f64>,
    pub detectors: Vec<RocDetector>,
}

/// Cooperative hard-fusion ROC over user counts and voting rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionBlock {
    pub users: Vec<usize>,
    pub rules: Vec<HardRule>,
    pub n: usize,
    pub gamma: f64,
    /// Fused false-alarm targets.
    pub qfa_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub monte_carlo: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MbBlock {
    pub n_per_band: usize,
    #[serde(default = "gaussian")]
    pub signal: PuSignalModel,
    #[serde(default = "one")]
    pub noise_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgesBlock {
    pub nfft: usize,
    pub scenes: u64,
    /// Values of `J`.
    pub levels: Vec<u32>,
    /// Explicit thresholds; the data-driven default is added when
    /// `default_delta` is set.
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default = "yes")]
    pub default_delta: bool,
    #[serde(default)]
    pub noise_floor: f64,
    #[serde(default = "min_width")]
    pub min_width: usize,
    #[serde(default = "max_width")]
    pub max_width: usize,
    /// Impulsive spikes added per scene.
    #[serde(default)]
    pub impulses: usize,
}

fn yes() -> bool {
    true
}

fn min_width() -> usize {
    16
}

fn max_width() -> usize {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsBlock {
    pub n: usize,
    pub sparsity: Vec<usize>,
    pub measurements: Vec<usize>,
    #[serde(default)]
    pub matrix: MeasurementKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThroughputBlock {
    pub model: ThroughputModel,
    /// Accessed band counts; empty means `1..=M`.
    #[serde(default)]
    pub accessed: Vec<usize>,
    /// False-alarm levels applied to every band, one output file each; empty
    /// keeps the model's own.
    #[serde(default)]
    pub pfa: Vec<f64>,
    #[serde(default)]
    pub modes: Vec<AccessMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffBlock {
    pub setup: SensingTradeoff,
    /// Cooperating users for the joint `(tau, k)` search.
    #[serde(default = "one_user")]
    pub users: usize,
}

fn one_user() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingBlock {
    pub bandwidth_hz: u64,
    pub users: Vec<usize>,
    pub bands: Vec<usize>,
    pub diversity: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaterfillBlock {
    pub gains: Vec<f64>,
    #[serde(default = "one")]
    pub noise_var: f64,
    pub budget: f64,
    #[serde(default)]
    pub mode: WaterfillMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idle: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<WidebandScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roc: Option<RocBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiband: Option<MbBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<EdgesBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs: Option<CsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput: Option<ThroughputBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tradeoff: Option<TradeoffBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waterfill: Option<WaterfillBlock>,
}

fn require<'a, T>(block: &'a Option<T>, name: &str, kind: ExperimentKind) -> Result<&'a T> {
    match block {
        Some(b) => Ok(b),
        None => invalid(format!("experiment {} requires a [{name}] block", kind.name())),
    }
}

fn non_empty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return invalid(format!("{what} must not be empty"));
    }
    Ok(())
}

fn unit_grid(v: &[f64], what: &str) -> Result<()> {
    non_empty(v, what)?;
    if v.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return invalid(format!("{what} must lie inside (0, 1)"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Presence and range checks done before any computation or output.
    pub fn validate(&self) -> Result<()> {
        let kind = self.experiment;
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        match kind {
            ExperimentKind::Roc => {
                let b = require(&self.roc, "roc", kind)?;
                unit_grid(&b.pfa_grid, "pfa_grid")?;
                non_empty(&b.detectors, "roc.detectors")?;
                for d in &b.detectors {
                    d.frame(b.gamma, b.noise_var).validate()?;
                    if d.trials == Some(0) {
                        return invalid("detector trials must be at least 1");
                    }
                }
            }
            ExperimentKind::CoopRoc => {
                let b = require(&self.fusion, "fusion", kind)?;
                non_empty(&b.users, "fusion.users")?;
                non_empty(&b.rules, "fusion.rules")?;
                unit_grid(&b.qfa_grid, "qfa_grid")?;
                if b.users.contains(&0) || b.n == 0 || !(b.gamma >= 0.0) {
                    return invalid("fusion needs users >= 1, n >= 1 and gamma >= 0");
                }
                for &k in &b.users {
                    for r in &b.rules {
                        if r.k(k) < 1 || r.k(k) > k {
                            return invalid(format!("rule {} is undefined for K={k}", r.name()));
                        }
                    }
                }
            }
            ExperimentKind::MbMetrics => {
                require(&self.scenario, "scenario", kind)?.validate()?;
                require(&self.detector, "detector", kind)?.threshold.validate()?;
                let b = require(&self.multiband, "multiband", kind)?;
                if b.n_per_band == 0 {
                    return invalid("n_per_band must be positive");
                }
            }
            ExperimentKind::Edges => {
                let b = require(&self.edges, "edges", kind)?;
                non_empty(&b.levels, "edges.levels")?;
                if !b.nfft.is_power_of_two() || b.nfft < 256 {
                    return invalid("edges.nfft must be a power of two >= 256");
                }
                if b.min_width < 1 || b.max_width <= b.min_width {
                    return invalid("need 1 <= min_width < max_width");
                }
                if b.deltas.iter().any(|d| !(*d >= 0.0)) || (b.deltas.is_empty() && !b.default_delta) {
                    return invalid("need non-negative deltas or the default threshold");
                }
                if !(b.noise_floor >= 0.0) {
                    return invalid("noise floor must be non-negative");
                }
            }
            ExperimentKind::Cs => {
                let b = require(&self.cs, "cs", kind)?;
                non_empty(&b.sparsity, "cs.sparsity")?;
                non_empty(&b.measurements, "cs.measurements")?;
                if b.measurements.iter().any(|&o| o == 0 || o > b.n) {
                    return invalid("measurement counts must lie in 1..=n");
                }
                if b.sparsity.iter().any(|&l| l > b.n) {
                    return invalid("sparsity must not exceed n");
                }
            }
            ExperimentKind::Throughput | ExperimentKind::BandwidthSweep => {
                let b = require(&self.throughput, "throughput", kind)?;
                b.model.validate()?;
                let m = b.model.num_bands();
                if b.accessed.iter().any(|&l| l == 0 || l > m) {
                    return invalid(format!("accessed counts must lie in 1..={m}"));
                }
                if b.pfa.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return invalid("pfa levels must lie in [0, 1]");
                }
            }
            ExperimentKind::TradeoffTau | ExperimentKind::TradeoffTauK => {
                let b = require(&self.tradeoff, "tradeoff", kind)?;
                b.setup.validate()?;
                if b.users == 0 {
                    return invalid("tradeoff.users must be positive");
                }
            }
            ExperimentKind::SamplingCost => {
                let b = require(&self.sampling, "sampling", kind)?;
                non_empty(&b.users, "sampling.users")?;
                non_empty(&b.bands, "sampling.bands")?;
                non_empty(&b.diversity, "sampling.diversity")?;
                if b.users.contains(&0) || b.bands.contains(&0) || b.diversity.contains(&0) || b.bandwidth_hz == 0 {
                    return invalid("sampling sweep values must be positive");
                }
            }
            ExperimentKind::Waterfill => {
                let b = require(&self.waterfill, "waterfill", kind)?;
                non_empty(&b.gains, "waterfill.gains")?;
            }
        }
        Ok(())
    }
}

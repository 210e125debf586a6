//! Ready-made configurations for the standard figure reproductions.

use super::config::*;
use crate::coop::HardRule;
use crate::error::{invalid, Result};
use crate::perf::throughput::{AccessMode, ThroughputModel};
use crate::perf::tradeoff::SensingTradeoff;
use crate::sbdetect::{StatisticSpec, ThresholdPolicy};
use crate::scenario::{PuSignalModel, SampleDomain};
use crate::special::db_to_linear;

pub const PRESETS: [&str; 6] = ["fig8", "fig9", "fig10", "fig12", "fig13", "fig14"];

const SEED: u64 = 20_240_601;

fn base(experiment: ExperimentKind, trials: u64) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        seed: SEED,
        trials,
        output: None,
        scenario: None,
        detector: None,
        roc: None,
        fusion: None,
        multiband: None,
        edges: None,
        cs: None,
        throughput: None,
        tradeoff: None,
        sampling: None,
        waterfill: None,
    }
}

fn pfa_grid() -> Vec<f64> {
    vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9]
}

/// Band model shared by the throughput and sensing-time presets: `P1 = 0.4 P0`,
/// unit noise, -20 dBW interference, idle prior 0.7.
fn band_model(m: usize) -> ThroughputModel {
    let mut model = ThroughputModel::identical(m, 0.7, 0.1, 0.9);
    model.interference_w = db_to_linear(-20.0);
    model
}

fn fig8() -> ExperimentConfig {
    let detector = |label: &str, signal, statistic, n, domain, analytic, trials| RocDetector {
        label: label.into(),
        signal,
        statistic,
        n,
        observe: None,
        domain,
        analytic,
        trials,
    };
    let mut cfg = base(ExperimentKind::Roc, 100_000);
    cfg.roc = Some(RocBlock {
        gamma: 10f64.powf(-1.5),
        noise_var: 1.0,
        pfa_grid: pfa_grid(),
        detectors: vec![
            detector(
                "energy",
                PuSignalModel::Gaussian,
                StatisticSpec::Energy,
                500,
                SampleDomain::Complex,
                true,
                None,
            ),
            detector(
                "coherent",
                PuSignalModel::KnownWaveform { template_seed: 8 },
                StatisticSpec::Coherent,
                500,
                SampleDomain::Real,
                true,
                None,
            ),
            // 500 OFDM blocks of 64 + 16 samples.
            detector(
                "cp-autocorr",
                PuSignalModel::OfdmCp {
                    useful_len: 64,
                    cp_len: 16,
                },
                StatisticSpec::CpAutocorr {
                    useful_len: 64,
                    cp_len: 16,
                },
                40_000,
                SampleDomain::Complex,
                false,
                Some(2_000),
            ),
        ],
    });
    cfg
}

fn fig9() -> ExperimentConfig {
    let mut cfg = base(ExperimentKind::CoopRoc, 100_000);
    cfg.fusion = Some(FusionBlock {
        users: vec![1, 2, 4, 8],
        rules: vec![HardRule::Or, HardRule::And, HardRule::Majority],
        n: 125,
        gamma: 0.1,
        qfa_grid: pfa_grid(),
        monte_carlo: true,
    });
    cfg
}

fn fig10() -> ExperimentConfig {
    let mut cfg = base(ExperimentKind::Throughput, 1);
    cfg.throughput = Some(ThroughputBlock {
        model: band_model(10),
        accessed: (1..=10).collect(),
        pfa: vec![0.05, 0.1, 0.2],
        modes: vec![AccessMode::Interweave, AccessMode::Hybrid],
    });
    cfg
}

fn fig12() -> ExperimentConfig {
    let mut cfg = base(ExperimentKind::TradeoffTau, 1);
    cfg.tradeoff = Some(TradeoffBlock {
        setup: SensingTradeoff::new(band_model(10), 0.1, ThresholdPolicy::TargetPd(0.9)),
        users: 1,
    });
    cfg
}

fn fig13() -> ExperimentConfig {
    let mut cfg = base(ExperimentKind::SamplingCost, 1);
    cfg.sampling = Some(SamplingBlock {
        bandwidth_hz: 6_000_000,
        users: vec![10],
        bands: (1..=20).collect(),
        diversity: vec![1, 2, 5, 10],
    });
    cfg
}

fn fig14() -> ExperimentConfig {
    let mut cfg = base(ExperimentKind::SamplingCost, 1);
    cfg.sampling = Some(SamplingBlock {
        bandwidth_hz: 6_000_000,
        users: (1..=20).collect(),
        bands: vec![10],
        diversity: vec![1, 2, 4],
    });
    cfg
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    Ok(match name {
        "fig8" => fig8(),
        "fig9" => fig9(),
        "fig10" => fig10(),
        "fig12" => fig12(),
        "fig13" => fig13(),
        "fig14" => fig14(),
        _ => return invalid(format!("unknown preset {name}; expected one of {}", PRESETS.join(", "))),
    })
}

//! Executes a validated configuration and writes its CSV series and manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error as ThisError;

use super::config::*;
use super::table::Table;
use crate::coop::{assign_uniform, binomial_tail, invert_binomial_tail, sampling_cost};
use crate::error::{invalid, Error, Result};
use crate::perf::metrics::{edge_metrics, mb_aggregate, Aggregate};
use crate::perf::power::waterfill;
use crate::perf::roc::{roc_analytic, roc_from_statistics};
use crate::perf::throughput::{avg_throughput, bandwidth_sweep};
use crate::perf::tradeoff::{optimize_tau, optimize_tau_fused, optimize_tau_k};
use crate::rng::{tag, SeedTree};
use crate::row;
use crate::sbdetect::{
    empirical_threshold, resolve_threshold, simulate_statistics, AnalyticDetector, Detector, EnergyLaw,
    StatisticSpec,
};
use crate::scenario::{random_edge_layout, synthesize_wideband_psd, FrameSpec, Hypothesis, PuSignalModel};
use crate::widebandest::cs::recovery_rate;
use crate::widebandest::wavelet::{default_delta, wmp, wmp_edges, WaveletConfig};

/// Tables plus scalar results worth recording in the manifest.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub wall_clock_s: f64,
    /// Data rows per written CSV file.
    pub series: BTreeMap<String, usize>,
    pub summary: BTreeMap<String, f64>,
}

#[derive(Debug, ThisError)]
pub enum RunError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(Error),
    #[error("infeasible experiment: {0}")]
    Infeasible(Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Parse(_) | RunError::Invalid(_) => 2,
            RunError::Infeasible(_) => 3,
            RunError::Io { .. } => 4,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => RunError::Invalid(e),
            _ => RunError::Infeasible(e),
        }
    }
}

/// Parse, validate, compute, then write `<out>/<series>.csv` and
/// `<out>/manifest.json`. Nothing is written unless every step before the
/// write succeeds.
pub fn run(config_text: &str, seed: Option<u64>, out: Option<&Path>) -> std::result::Result<RunManifest, RunError> {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::parse(config_text).map_err(|e| RunError::Parse(e.to_string()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(RunError::Invalid)?;
    let result = execute(&cfg)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    fs::create_dir_all(&dir).map_err(io(&dir))?;
    let mut series = BTreeMap::new();
    for t in &result.tables {
        let path = dir.join(t.file_name());
        fs::write(&path, t.to_csv()).map_err(io(&path))?;
        series.insert(t.file_name(), t.rows.len());
    }
    let manifest = RunManifest {
        experiment: cfg.experiment.name().to_string(),
        config_sha256: hex::encode(Sha256::digest(cfg.to_toml().as_bytes())),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        series,
        summary: result.summary,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, json).map_err(io(&path))?;
    Ok(manifest)
}

fn pick<T>(block: &Option<T>) -> &T {
    block.as_ref().expect("validated")
}

/// Compute every series of the experiment in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let root = SeedTree::new(cfg.seed);
    match cfg.experiment {
        ExperimentKind::Roc => roc(pick(&cfg.roc), cfg.trials, &root),
        ExperimentKind::CoopRoc => coop_roc(pick(&cfg.fusion), cfg.trials, &root),
        ExperimentKind::MbMetrics => mb_metrics(cfg, &root),
        ExperimentKind::Edges => edges(pick(&cfg.edges), &root),
        ExperimentKind::Cs => cs(pick(&cfg.cs), cfg.trials, &root),
        ExperimentKind::Throughput => throughput(pick(&cfg.throughput)),
        ExperimentKind::BandwidthSweep => sweep(pick(&cfg.throughput)),
        ExperimentKind::TradeoffTau => tradeoff_tau(pick(&cfg.tradeoff)),
        ExperimentKind::TradeoffTauK => tradeoff_tau_k(pick(&cfg.tradeoff)),
        ExperimentKind::SamplingCost => sampling(pick(&cfg.sampling)),
        ExperimentKind::Waterfill => water(pick(&cfg.waterfill)),
    }
}

fn roc(b: &RocBlock, trials: u64, root: &SeedTree) -> Result<RunOutput> {
    let mut t = Table::new("roc", &["detector", "pfa", "pd", "ci_lo", "ci_hi"]);
    for (i, d) in b.detectors.iter().enumerate() {
        let frame = d.frame(b.gamma, b.noise_var);
        let det = Detector::prepare(&d.statistic, d.observe, &frame)?;
        let seeds = root.child(&[i as u64]);
        let n_trials = d.trials.unwrap_or(trials);
        let h0 = simulate_statistics(&det, &frame, Hypothesis::Idle, n_trials, &seeds)?;
        let h1 = simulate_statistics(&det, &frame, Hypothesis::Occupied, n_trials, &seeds)?;
        let thresholds = b
            .pfa_grid
            .iter()
            .map(|&p| empirical_threshold(&h0, p))
            .collect::<Result<Vec<_>>>()?;
        for p in roc_from_statistics(&h0, &h1, &thresholds)?.points {
            let (lo, hi) = p.pd_ci.unwrap_or((p.pd, p.pd));
            t.push(row![d.label.clone(), p.pfa, p.pd, lo, hi]);
        }
        if d.analytic {
            let n = d.observe.map_or(d.n, |o| o.min(d.n)) as f64;
            let law = match d.statistic {
                StatisticSpec::Energy => AnalyticDetector::energy(n, b.gamma),
                StatisticSpec::Coherent => AnalyticDetector::coherent(n, b.gamma),
                _ => return invalid(format!("detector {} has no closed-form curve", d.label)),
            };
            let law = law.with_domain(d.domain).with_noise_var(b.noise_var);
            for p in roc_analytic(&law, &b.pfa_grid)?.points {
                t.push(row![format!("{}-analytic", d.label), p.pfa, p.pd, p.pd, p.pd]);
            }
        }
    }
    Ok(RunOutput {
        tables: vec![t],
        ..Default::default()
    })
}

fn coop_roc(b: &FusionBlock, trials: u64, root: &SeedTree) -> Result<RunOutput> {
    let mut t = Table::new("coop-roc", &["rule", "k", "K", "qfa", "qd"]);
    let law = AnalyticDetector::energy(b.n as f64, b.gamma).with_law(EnergyLaw::Exact);
    let max_k = b.users.iter().copied().max().unwrap_or(1);
    let sims = if b.monte_carlo {
        let frame = FrameSpec::new(PuSignalModel::Gaussian, b.gamma, 1.0, b.n);
        let det = Detector::prepare(&StatisticSpec::Energy, None, &frame)?;
        let per_user = (0..max_k)
            .map(|u| {
                let seeds = root.child(&[u as u64]);
                Ok((
                    simulate_statistics(&det, &frame, Hypothesis::Idle, trials, &seeds)?,
                    simulate_statistics(&det, &frame, Hypothesis::Occupied, trials, &seeds)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(per_user)
    } else {
        None
    };
    for rule in &b.rules {
        for &users in &b.users {
            let k = rule.k(users);
            for &qfa in &b.qfa_grid {
                let lambda = law.threshold_for_pfa(invert_binomial_tail(qfa, users, k)?)?;
                let qf = binomial_tail(&law.pfa(lambda), users, k);
                let qd = binomial_tail(&law.pd(lambda), users, k);
                t.push(row![rule.name(), k, users, qf, qd]);
                if let Some(per_user) = &sims {
                    let rate = |h1: bool| {
                        let hits = (0..trials as usize)
                            .filter(|&i| {
                                let votes = per_user[..users]
                                    .iter()
                                    .filter(|(s0, s1)| if h1 { s1[i] } else { s0[i] } >= lambda)
                                    .count();
                                votes >= k
                            })
                            .count();
                        hits as f64 / trials as f64
                    };
                    t.push(row![format!("{}-mc", rule.name()), k, users, rate(false), rate(true)]);
                }
            }
        }
    }
    Ok(RunOutput {
        tables: vec![t],
        ..Default::default()
    })
}

fn mb_metrics(cfg: &ExperimentConfig, root: &SeedTree) -> Result<RunOutput> {
    let scenario = cfg.scenario.as_ref().expect("validated");
    let spec = cfg.detector.as_ref().expect("validated");
    let b = cfg.multiband.as_ref().expect("validated");
    let mut bands = Table::new("mb-bands", &["band", "gamma", "pfa", "pd"]);
    let (mut pfa, mut pd) = (Vec::new(), Vec::new());
    for (m, &gamma) in scenario.snr.iter().enumerate() {
        let frame = FrameSpec::new(b.signal, gamma, b.noise_var, b.n_per_band);
        let seeds = root.child(&[m as u64]);
        let lambda = resolve_threshold(spec, &frame, cfg.trials, &seeds)?;
        let det = Detector::from_detector_spec(spec, &frame)?;
        let rate = |h| -> Result<f64> {
            let s = simulate_statistics(&det, &frame, h, cfg.trials, &seeds)?;
            Ok(s.iter().filter(|&&v| v >= lambda).count() as f64 / s.len() as f64)
        };
        let (f, d) = (rate(Hypothesis::Idle)?, rate(Hypothesis::Occupied)?);
        bands.push(row![m, gamma, f, d]);
        pfa.push(f);
        pd.push(d);
    }
    let mut agg = Table::new("mb-aggregate", &["metric", "value"]);
    let mut summary = BTreeMap::new();
    let mut add = |name: &str, v: f64| {
        agg.push(row![name, v]);
        summary.insert(name.to_string(), v);
    };
    add("mean-pd", mb_aggregate(&pd, &Aggregate::Mean)?);
    add("mean-pfa", mb_aggregate(&pfa, &Aggregate::Mean)?);
    add("any-band-pd", mb_aggregate(&pd, &Aggregate::AnyBand)?);
    add(
        "modified-fa",
        mb_aggregate(
            &pd,
            &Aggregate::ModifiedFa {
                idle_prior: scenario.idle_prior.clone(),
                pfa: pfa.clone(),
            },
        )?,
    );
    Ok(RunOutput {
        tables: vec![bands, agg],
        summary,
    })
}

fn edges(b: &EdgesBlock, root: &SeedTree) -> Result<RunOutput> {
    use rand::Rng;
    let mut t = Table::new("edges", &["scene", "j", "delta", "p_me", "p_fe", "p_e"]);
    let max_j = b.levels.iter().copied().max().unwrap_or(1);
    let margin = 6 * (1usize << max_j) + 16;
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for scene in 0..b.scenes {
        let mut rng = root.stream(&[tag::SCENE, scene]);
        let (truth, levels) = random_edge_layout(b.nfft, margin, b.min_width, b.max_width, &mut rng)?;
        let mut psd = synthesize_wideband_psd(&truth, &levels, b.nfft, b.noise_floor, &mut rng)?.psd;
        let peak = levels.iter().copied().fold(0.0, f64::max);
        for _ in 0..b.impulses {
            let at = rng.gen_range(margin..b.nfft - margin);
            psd[at] += 2.0 * peak;
        }
        for &j in &b.levels {
            let mut cfg = WaveletConfig::new(j, b.nfft);
            let mut deltas = b.deltas.clone();
            if b.default_delta {
                deltas.push(default_delta(&wmp(&psd, &cfg)?, &psd));
            }
            for (i, &delta) in deltas.iter().enumerate() {
                cfg.delta = Some(delta);
                let found = wmp_edges(&psd, &cfg)?;
                let em = edge_metrics(&truth, &found, b.nfft)?;
                t.push(row![scene, j, delta, em.p_me, em.p_fe, em.p_e]);
                let label = if b.default_delta && i == deltas.len() - 1 {
                    format!("mean-p_e/j={j}/default")
                } else {
                    format!("mean-p_e/j={j}/delta={delta}")
                };
                let e = sums.entry(label).or_insert((0.0, 0));
                e.0 += em.p_e;
                e.1 += 1;
            }
        }
    }
    let summary = sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    Ok(RunOutput {
        tables: vec![t],
        summary,
    })
}

fn cs(b: &CsBlock, trials: u64, root: &SeedTree) -> Result<RunOutput> {
    let mut t = Table::new("cs", &["L", "O", "recovery_rate"]);
    for &l in &b.sparsity {
        for &o in &b.measurements {
            t.push(row![l, o, recovery_rate(b.n, l, o, &b.matrix, trials, root)?]);
        }
    }
    Ok(RunOutput {
        tables: vec![t],
        ..Default::default()
    })
}

const THROUGHPUT_HEADER: [&str; 5] = ["mode", "l", "tau_s", "R_bps", "C_bps"];

fn accessed(b: &ThroughputBlock) -> Vec<usize> {
    if b.accessed.is_empty() {
        (1..=b.model.num_bands()).collect()
    } else {
        b.accessed.clone()
    }
}

fn modes(b: &ThroughputBlock) -> Vec<crate::perf::throughput::AccessMode> {
    if b.modes.is_empty() {
        vec![b.model.mode]
    } else {
        b.modes.clone()
    }
}

fn throughput(b: &ThroughputBlock) -> Result<RunOutput> {
    let levels: Vec<Option<f64>> = if b.pfa.is_empty() {
        vec![None]
    } else {
        b.pfa.iter().copied().map(Some).collect()
    };
    let scale = (b.model.frame_s - b.model.sensing_s) / b.model.frame_s;
    let mut tables = Vec::new();
    for level in levels {
        let name = level.map_or("throughput".to_string(), |p| format!("throughput-pfa-{p}"));
        let mut t = Table::new(name, &THROUGHPUT_HEADER);
        for mode in modes(b) {
            let mut m = b.model.clone();
            m.mode = mode;
            if let Some(p) = level {
                m.pfa = vec![p; m.num_bands()];
            }
            for l in accessed(b) {
                let r = avg_throughput(&m, l)?;
                t.push(row![mode.name(), l, m.sensing_s, r, scale * r]);
            }
        }
        tables.push(t);
    }
    Ok(RunOutput {
        tables,
        ..Default::default()
    })
}

fn sweep(b: &ThroughputBlock) -> Result<RunOutput> {
    let mut t = Table::new("bandwidth-sweep", &THROUGHPUT_HEADER);
    let mut summary = BTreeMap::new();
    let ls = accessed(b);
    for mode in modes(b) {
        let mut m = b.model.clone();
        m.mode = mode;
        let (pts, best) = bandwidth_sweep(&m, &ls)?;
        for p in &pts {
            t.push(row![mode.name(), p.l, m.sensing_s, p.r, p.c]);
        }
        summary.insert(format!("best-l/{}", mode.name()), pts[best].l as f64);
    }
    Ok(RunOutput {
        tables: vec![t],
        summary,
    })
}

const TRADEOFF_HEADER: [&str; 4] = ["tau_s", "pd", "pfa", "C_bps"];

fn tradeoff_tau(b: &TradeoffBlock) -> Result<RunOutput> {
    let setup = &b.setup;
    let mut curve = Table::new("tradeoff", &TRADEOFF_HEADER);
    for tau in setup.grid() {
        if let Ok(p) = setup.evaluate_fused(tau, b.users, 1) {
            curve.push(row![p.tau, p.pd, p.pfa, p.c]);
        }
    }
    let opt = if b.users == 1 {
        optimize_tau(setup)?
    } else {
        optimize_tau_fused(setup, b.users, 1)?
    };
    let mut best = Table::new("tradeoff-optimum", &TRADEOFF_HEADER);
    best.push(row![opt.tau, opt.pd, opt.pfa, opt.c]);
    let summary = BTreeMap::from([("tau_opt_s".to_string(), opt.tau), ("C_opt_bps".to_string(), opt.c)]);
    Ok(RunOutput {
        tables: vec![curve, best],
        summary,
    })
}

fn tradeoff_tau_k(b: &TradeoffBlock) -> Result<RunOutput> {
    let setup = &b.setup;
    let mut per_k = Table::new("tau-k", &["k", "K", "tau_s", "pd", "pfa", "C_bps"]);
    for k in 1..=b.users {
        match optimize_tau_fused(setup, b.users, k) {
            Ok(p) => per_k.push(row![k, b.users, p.tau, p.pd, p.pfa, p.c]),
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let opt = optimize_tau_k(setup, b.users)?;
    let mut curve = Table::new("tradeoff", &TRADEOFF_HEADER);
    for tau in setup.grid() {
        if let Ok(p) = setup.evaluate_fused(tau, b.users, opt.k) {
            curve.push(row![p.tau, p.pd, p.pfa, p.c]);
        }
    }
    let summary = BTreeMap::from([
        ("k_opt".to_string(), opt.k as f64),
        ("tau_opt_s".to_string(), opt.tau),
        ("C_opt_bps".to_string(), opt.c),
    ]);
    Ok(RunOutput {
        tables: vec![curve, per_k],
        summary,
    })
}

fn sampling(b: &SamplingBlock) -> Result<RunOutput> {
    let mut t = Table::new("sampling-cost", &["K", "M", "diversity", "cost_hz"]);
    for &k in &b.users {
        for &m in &b.bands {
            for &d in b.diversity.iter().filter(|&&d| d <= k) {
                let cost = sampling_cost(&assign_uniform(k, m, d)?, b.bandwidth_hz)?;
                t.push(row![k, m, d, cost.max]);
            }
        }
    }
    Ok(RunOutput {
        tables: vec![t],
        ..Default::default()
    })
}

fn water(b: &WaterfillBlock) -> Result<RunOutput> {
    let a = waterfill(&b.gains, b.noise_var, b.budget, b.mode, b.idle.as_deref())?;
    let mut t = Table::new("waterfill", &["band", "gain", "power"]);
    for (m, (g, p)) in b.gains.iter().zip(&a.powers).enumerate() {
        t.push(row![m, *g, *p]);
    }
    Ok(RunOutput {
        tables: vec![t],
        summary: BTreeMap::from([("water_level".to_string(), a.level)]),
    })
}

//! Synthetic primary-user signals, noise, and multi-band scenarios with known
//! ground truth.
//!
//! All signals are complex baseband. Noise in the [`SampleDomain::Complex`]
//! domain is circular with `E|v|^2 = sigma2`; in the [`SampleDomain::Real`]
//! domain the imaginary parts are zero and `v ~ N(0, sigma2)`. Under H1 the
//! primary-user component has average power `gamma * sigma2` in either domain.

use std::f64::consts::{PI, SQRT_2};
use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{tag, SeedTree};

/// Band state: `Idle` is H0 (no primary user), `Occupied` is H1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    Idle,
    Occupied,
}

impl Hypothesis {
    pub fn is_occupied(self) -> bool {
        matches!(self, Hypothesis::Occupied)
    }

    pub fn from_occupied(occupied: bool) -> Self {
        if occupied {
            Hypothesis::Occupied
        } else {
            Hypothesis::Idle
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleDomain {
    #[default]
    Complex,
    Real,
}

/// Primary-user waveform family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PuSignalModel {
    /// i.i.d. Gaussian samples.
    Gaussian,
    /// A fixed constant-modulus sequence known to the receiver; the sequence is
    /// drawn once from `template_seed`.
    KnownWaveform { template_seed: u64 },
    /// OFDM with QPSK subcarriers and a cyclic prefix.
    OfdmCp { useful_len: usize, cp_len: usize },
    /// Rectangular-pulse BPSK on a (normalized) carrier offset.
    Bpsk {
        symbol_period: usize,
        carrier_offset: f64,
    },
}

impl PuSignalModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PuSignalModel::OfdmCp {
                useful_len,
                cp_len,
            } => {
                if cp_len < 1 || useful_len < cp_len {
                    return invalid(format!(
                        "ofdm-cp needs 1 <= cp_len <= useful_len (got Nd={useful_len}, Ncp={cp_len})"
                    ));
                }
            }
            PuSignalModel::Bpsk {
                symbol_period,
                carrier_offset,
            } => {
                if symbol_period < 2 {
                    return invalid("bpsk symbol period must be at least 2 samples");
                }
                if !carrier_offset.is_finite() || carrier_offset.abs() > 0.5 {
                    return invalid("bpsk carrier offset must lie in [-0.5, 0.5]");
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Everything needed to draw one single-band frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub model: PuSignalModel,
    #[serde(default)]
    pub domain: SampleDomain,
    /// Linear SNR `gamma`.
    pub gamma: f64,
    pub noise_var: f64,
    pub n: usize,
}

impl FrameSpec {
    pub fn new(model: PuSignalModel, gamma: f64, noise_var: f64, n: usize) -> Self {
        Self {
            model,
            domain: SampleDomain::Complex,
            gamma,
            noise_var,
            n,
        }
    }

    pub fn with_domain(mut self, domain: SampleDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n < 1 {
            return invalid("frame length must be at least 1");
        }
        if !(self.noise_var > 0.0) || !self.noise_var.is_finite() {
            return invalid("noise variance must be positive");
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return invalid("snr must be non-negative");
        }
        Ok(())
    }
}

/// `y = x + v` for one band.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub samples: Vec<Complex64>,
    pub truth: Hypothesis,
    pub noise_var: f64,
    pub domain: SampleDomain,
    /// The primary-user component actually added (absent under H0).
    pub pu_waveform: Option<Vec<Complex64>>,
}

impl ReceivedFrame {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Frame built from caller-supplied samples.
    pub fn from_samples(samples: Vec<Complex64>, noise_var: f64) -> Self {
        Self {
            samples,
            truth: Hypothesis::Idle,
            noise_var,
            domain: SampleDomain::Complex,
            pu_waveform: None,
        }
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn noise_sample(domain: SampleDomain, sigma2: f64, rng: &mut impl Rng) -> Complex64 {
    match domain {
        SampleDomain::Complex => {
            let s = (sigma2 / 2.0).sqrt();
            Complex64::new(s * gaussian(rng), s * gaussian(rng))
        }
        SampleDomain::Real => Complex64::new(sigma2.sqrt() * gaussian(rng), 0.0),
    }
}

/// The receiver's copy of a [`PuSignalModel::KnownWaveform`] signal.
///
/// Unit-modulus QPSK in the complex domain, `+-1` in the real domain, scaled so
/// that `|x|^2 = n * gamma * sigma2` exactly.
pub fn known_template(spec: &FrameSpec) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let PuSignalModel::KnownWaveform { template_seed } = spec.model else {
        return invalid("known_template requires the known-waveform model");
    };
    let mut rng = SeedTree::new(template_seed).stream(&[tag::TEMPLATE]);
    let amp = (spec.gamma * spec.noise_var).sqrt();
    Ok((0..spec.n)
        .map(|_| match spec.domain {
            SampleDomain::Complex => {
                let re = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let im = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(re, im) * (amp / SQRT_2)
            }
            SampleDomain::Real => {
                Complex64::new(if rng.gen::<bool>() { amp } else { -amp }, 0.0)
            }
        })
        .collect())
}

fn qpsk(rng: &mut impl Rng) -> Complex64 {
    let re = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let im = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    Complex64::new(re, im) / SQRT_2
}

fn ofdm_signal(
    useful_len: usize,
    cp_len: usize,
    n: usize,
    planner: &mut FftPlanner<f64>,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    let ifft = planner.plan_fft_inverse(useful_len);
    let norm = 1.0 / (useful_len as f64).sqrt();
    let mut out = Vec::with_capacity(n + useful_len + cp_len);
    let mut block = vec![Complex64::default(); useful_len];
    while out.len() < n {
        block.iter_mut().for_each(|b| *b = qpsk(rng));
        ifft.process(&mut block);
        out.extend(block[useful_len - cp_len..].iter().map(|v| v * norm));
        out.extend(block.iter().map(|v| v * norm));
    }
    out.truncate(n);
    out
}

/// Unit-power primary-user samples (before SNR scaling) in the complex domain.
fn unit_pu_signal(
    model: &PuSignalModel,
    n: usize,
    planner: &mut FftPlanner<f64>,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    match *model {
        PuSignalModel::Gaussian => (0..n)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)) / SQRT_2)
            .collect(),
        PuSignalModel::KnownWaveform { .. } => unreachable!("handled by known_template"),
        PuSignalModel::OfdmCp {
            useful_len,
            cp_len,
        } => ofdm_signal(useful_len, cp_len, n, planner, rng),
        PuSignalModel::Bpsk {
            symbol_period,
            carrier_offset,
        } => {
            let mut symbol = 1.0;
            (0..n)
                .map(|i| {
                    if i % symbol_period == 0 {
                        symbol = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    }
                    Complex64::from_polar(symbol, 2.0 * PI * carrier_offset * i as f64)
                })
                .collect()
        }
    }
}

fn pu_signal(
    spec: &FrameSpec,
    planner: &mut FftPlanner<f64>,
    rng: &mut impl Rng,
) -> Result<Vec<Complex64>> {
    if let PuSignalModel::KnownWaveform { .. } = spec.model {
        return known_template(spec);
    }
    let amp = (spec.gamma * spec.noise_var).sqrt();
    let unit = unit_pu_signal(&spec.model, spec.n, planner, rng);
    Ok(match spec.domain {
        SampleDomain::Complex => unit.into_iter().map(|v| v * amp).collect(),
        SampleDomain::Real => {
            // Gaussian and OFDM put half their power on each rail; BPSK without
            // an offset is already real.
            let bpsk_baseband = matches!(
                spec.model,
                PuSignalModel::Bpsk { carrier_offset, .. } if carrier_offset == 0.0
            );
            let rail = if bpsk_baseband { amp } else { amp * SQRT_2 };
            unit.into_iter()
                .map(|v| Complex64::new(v.re * rail, 0.0))
                .collect()
        }
    })
}

/// Draw one frame `y = x + v` (or `y = v` under H0).
pub fn generate_band_frame(
    spec: &FrameSpec,
    hypothesis: Hypothesis,
    rng: &mut impl Rng,
) -> Result<ReceivedFrame> {
    let mut planner = FftPlanner::new();
    generate_band_frame_with(spec, hypothesis, rng, &mut planner)
}

/// As [`generate_band_frame`], reusing an FFT planner across calls.
pub fn generate_band_frame_with(
    spec: &FrameSpec,
    hypothesis: Hypothesis,
    rng: &mut impl Rng,
    planner: &mut FftPlanner<f64>,
) -> Result<ReceivedFrame> {
    spec.validate()?;
    let mut samples: Vec<Complex64> = (0..spec.n)
        .map(|_| noise_sample(spec.domain, spec.noise_var, rng))
        .collect();
    let pu_waveform = match hypothesis {
        Hypothesis::Idle => None,
        Hypothesis::Occupied => {
            let x = pu_signal(spec, planner, rng)?;
            samples.iter_mut().zip(&x).for_each(|(y, x)| *y += x);
            Some(x)
        }
    };
    Ok(ReceivedFrame {
        samples,
        truth: hypothesis,
        noise_var: spec.noise_var,
        domain: spec.domain,
        pu_waveform,
    })
}

/// Frame for Monte-Carlo trial `trial`, drawn from its own substream.
pub fn trial_frame(
    spec: &FrameSpec,
    hypothesis: Hypothesis,
    seeds: &SeedTree,
    trial: u64,
    planner: &mut FftPlanner<f64>,
) -> Result<ReceivedFrame> {
    let h = match hypothesis {
        Hypothesis::Idle => tag::TRIAL_H0,
        Hypothesis::Occupied => tag::TRIAL_H1,
    };
    let mut rng = seeds.stream(&[h, trial]);
    generate_band_frame_with(spec, hypothesis, &mut rng, planner)
}

/// `M` equal-width subchannels with per-band priors and SNRs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidebandScenario {
    pub num_bands: usize,
    pub band_bandwidth_hz: f64,
    /// `p(H0,m)` per band.
    pub idle_prior: Vec<f64>,
    /// Linear SNR per band.
    pub snr: Vec<f64>,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl WidebandScenario {
    /// Scenario where every band shares the same prior and SNR.
    pub fn uniform(num_bands: usize, idle_prior: f64, snr: f64, seed: u64) -> Self {
        Self {
            num_bands,
            band_bandwidth_hz: 6e6,
            idle_prior: vec![idle_prior; num_bands],
            snr: vec![snr; num_bands],
            sample_rate_hz: 12e6,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_bands < 1 {
            return invalid("scenario needs at least one band");
        }
        if self.idle_prior.len() != self.num_bands || self.snr.len() != self.num_bands {
            return invalid("idle_prior and snr must have one entry per band");
        }
        if self
            .idle_prior
            .iter()
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return invalid("idle priors must lie in [0, 1]");
        }
        if self.snr.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return invalid("band snr must be non-negative");
        }
        if !(self.sample_rate_hz > 0.0) || !(self.band_bandwidth_hz > 0.0) {
            return invalid("sample rate and bandwidth must be positive");
        }
        Ok(())
    }
}

/// Per-band truth of one wideband draw.
pub type OccupancyTruth = Vec<Hypothesis>;

#[derive(Debug, Clone)]
pub struct WidebandRealization {
    pub frames: Vec<ReceivedFrame>,
    pub truth: OccupancyTruth,
}

/// Draw band occupancy for trial `trial` as independent Bernoulli(1 - p(H0,m)).
pub fn draw_occupancy(scenario: &WidebandScenario, trial: u64) -> Result<OccupancyTruth> {
    scenario.validate()?;
    let seeds = SeedTree::new(scenario.seed);
    Ok(scenario
        .idle_prior
        .iter()
        .enumerate()
        .map(|(m, &p0)| {
            let u: f64 = seeds.stream(&[tag::OCCUPANCY, trial, m as u64]).gen();
            Hypothesis::from_occupied(u >= p0)
        })
        .collect())
}

/// One wideband draw: independent occupancy and one frame per band.
///
/// `band` supplies the waveform family, domain and noise variance; its `gamma`
/// is replaced by the scenario's per-band SNR.
pub fn generate_wideband(
    scenario: &WidebandScenario,
    band: &FrameSpec,
    n_per_band: usize,
    trial: u64,
) -> Result<WidebandRealization> {
    let truth = draw_occupancy(scenario, trial)?;
    let seeds = SeedTree::new(scenario.seed);
    let mut planner = FftPlanner::new();
    let frames = truth
        .iter()
        .enumerate()
        .map(|(m, &h)| {
            let spec = FrameSpec {
                gamma: scenario.snr[m],
                n: n_per_band,
                ..*band
            };
            let mut rng = seeds.stream(&[tag::NOISE, trial, m as u64]);
            generate_band_frame_with(&spec, h, &mut rng, &mut planner)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WidebandRealization { frames, truth })
}

/// Piecewise-constant PSD with its ground-truth edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPsd {
    pub psd: Vec<f64>,
    pub edges: Vec<usize>,
}

/// Build a piecewise-constant PSD over `nfft` bins.
///
/// `levels` holds either one value per segment (`edges.len() + 1` entries,
/// covering `[0, e1), [e1, e2), ...`) or one value per edge, in which case the
/// region before the first edge is empty spectrum (level 0). A positive
/// `noise_floor` adds `noise_floor * Exp(1)` to every bin, mimicking a
/// periodogram of white noise.
pub fn synthesize_wideband_psd(
    edges: &[usize],
    levels: &[f64],
    nfft: usize,
    noise_floor: f64,
    rng: &mut impl Rng,
) -> Result<SyntheticPsd> {
    if nfft == 0 {
        return invalid("nfft must be positive");
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("edges must be strictly increasing");
    }
    if edges.iter().any(|&e| e == 0 || e >= nfft) {
        return invalid("edges must lie inside (0, nfft)");
    }
    if levels.iter().any(|l| !(*l >= 0.0)) || !(noise_floor >= 0.0) {
        return invalid("levels and noise floor must be non-negative");
    }
    let segment_levels: Vec<f64> = if levels.len() == edges.len() + 1 {
        levels.to_vec()
    } else if levels.len() == edges.len() && !edges.is_empty() {
        std::iter::once(0.0).chain(levels.iter().copied()).collect()
    } else {
        return invalid(format!(
            "expected {} or {} levels for {} edges, got {}",
            edges.len() + 1,
            edges.len(),
            edges.len(),
            levels.len()
        ));
    };
    let mut psd = vec![0.0; nfft];
    let bounds: Vec<usize> = std::iter::once(0)
        .chain(edges.iter().copied())
        .chain(std::iter::once(nfft))
        .collect();
    for (seg, w) in bounds.windows(2).enumerate() {
        psd[w[0]..w[1]].fill(segment_levels[seg]);
    }
    if noise_floor > 0.0 {
        for v in psd.iter_mut() {
            let e: f64 = Exp1.sample(rng);
            *v += noise_floor * e;
        }
    }
    Ok(SyntheticPsd {
        psd,
        edges: edges.to_vec(),
    })
}

/// Random layout for edge-detection studies: edges at least `margin` bins
/// from either end, spaced `min_width..max_width` bins apart, with segment
/// levels in `[0.5, 20]` and neighbouring levels at least 3 dB apart.
pub fn random_edge_layout(
    nfft: usize,
    margin: usize,
    min_width: usize,
    max_width: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if min_width < 1 || max_width <= min_width || 2 * margin + 1 >= nfft {
        return invalid("need 1 <= min_width < max_width and margins inside nfft");
    }
    let mut edges = Vec::new();
    let mut at = margin + rng.gen_range(0..min_width);
    while at < nfft - margin {
        edges.push(at);
        at += rng.gen_range(min_width..max_width);
    }
    let mut levels = vec![rng.gen_range(0.5..20.0)];
    for _ in 0..edges.len() {
        let prev: f64 = *levels.last().expect("non-empty");
        let next = loop {
            let v: f64 = rng.gen_range(0.5..20.0);
            if (10.0 * (v / prev).log10()).abs() >= 3.0 {
                break v;
            }
        };
        levels.push(next);
    }
    Ok((edges, levels))
}

/// Wideband time samples of length `nfft` whose spectrum is white noise plus
/// flat Gaussian signal on the occupied bands.
///
/// Built in the frequency domain: bin `k` of an occupied band receives signal
/// with `E|Y_k|^2 = nfft * gamma * noise_var`, every bin receives noise with
/// `E|Y_k|^2 = nfft * noise_var`, and the result is inverse transformed.
pub fn wideband_time_samples(
    nfft: usize,
    bands: &[Range<usize>],
    occupied: &[bool],
    gamma: f64,
    noise_var: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Complex64>> {
    if bands.len() != occupied.len() {
        return invalid("one occupancy flag per band required");
    }
    if bands.iter().any(|b| b.end > nfft || b.start >= b.end) {
        return invalid("band ranges must be non-empty and inside [0, nfft)");
    }
    let scale = (nfft as f64).sqrt();
    let mut spectrum: Vec<Complex64> = (0..nfft)
        .map(|_| noise_sample(SampleDomain::Complex, noise_var, rng) * scale)
        .collect();
    let amp = (gamma * noise_var).sqrt() * scale;
    for (band, _) in bands.iter().zip(occupied).filter(|(_, o)| **o) {
        for k in band.clone() {
            spectrum[k] += Complex64::new(gaussian(rng), gaussian(rng)) / SQRT_2 * amp;
        }
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(nfft).process(&mut spectrum);
    let inv = 1.0 / nfft as f64;
    Ok(spectrum.into_iter().map(|v| v * inv).collect())
}

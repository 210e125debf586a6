//! Single-band test statistics, threshold calibration and the closed-form
//! detection laws of the energy and coherent detectors.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, invalid, Error, Result};
use crate::rng::{tag, SeedTree};
use crate::scenario::{known_template, trial_frame, FrameSpec, Hypothesis, ReceivedFrame, SampleDomain};
use crate::special::{gamma_isf, gamma_sf, q, q_inv_checked};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Energy,
    Coherent,
    CovarianceEig,
    CyclicCsd,
    CpAutocorr,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Energy => "energy",
            DetectorKind::Coherent => "coherent",
            DetectorKind::CovarianceEig => "covariance-eig",
            DetectorKind::CyclicCsd => "cyclic-csd",
            DetectorKind::CpAutocorr => "cp-autocorr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestStatistic {
    pub value: f64,
    pub kind: DetectorKind,
    pub n_used: usize,
}

/// How the threshold `lambda` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "level", rename_all = "kebab-case")]
pub enum ThresholdPolicy {
    Fixed(f64),
    TargetPfa(f64),
    TargetPd(f64),
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdPolicy::Fixed(l) if l.is_nan() => invalid("fixed threshold is NaN"),
            ThresholdPolicy::TargetPfa(p) | ThresholdPolicy::TargetPd(p) if !(p > 0.0 && p < 1.0) => {
                Err(Error::UnattainableTarget(p))
            }
            _ => Ok(()),
        }
    }
}

/// Lag window of the cyclic spectral estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagWindow {
    #[default]
    Bartlett,
    Rectangular,
}

fn default_smoothing() -> usize {
    8
}

fn default_max_lag() -> usize {
    4
}

/// Test statistic and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StatisticSpec {
    Energy,
    Coherent,
    CovarianceEig {
        #[serde(default = "default_smoothing")]
        smoothing: usize,
    },
    CyclicCsd {
        alpha: f64,
        freq: f64,
        #[serde(default = "default_max_lag")]
        max_lag: usize,
        #[serde(default)]
        window: LagWindow,
    },
    CpAutocorr { useful_len: usize, cp_len: usize },
}

impl StatisticSpec {
    pub fn kind(&self) -> DetectorKind {
        match self {
            StatisticSpec::Energy => DetectorKind::Energy,
            StatisticSpec::Coherent => DetectorKind::Coherent,
            StatisticSpec::CovarianceEig { .. } => DetectorKind::CovarianceEig,
            StatisticSpec::CyclicCsd { .. } => DetectorKind::CyclicCsd,
            StatisticSpec::CpAutocorr { .. } => DetectorKind::CpAutocorr,
        }
    }
}

/// Statistic plus threshold policy. `observe` limits the statistic to the
/// first `observe` samples of each frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub statistic: StatisticSpec,
    pub threshold: ThresholdPolicy,
    #[serde(default)]
    pub observe: Option<usize>,
}

impl DetectorSpec {
    pub fn new(statistic: StatisticSpec, threshold: ThresholdPolicy) -> Self {
        Self {
            statistic,
            threshold,
            observe: None,
        }
    }
}

fn check_noise_var(frame: &ReceivedFrame) -> Result<()> {
    if frame.noise_var > 0.0 && frame.noise_var.is_finite() {
        Ok(())
    } else {
        invalid("noise variance must be positive")
    }
}

/// `||y||^2 / sigma2`.
pub fn energy_stat(frame: &ReceivedFrame) -> Result<TestStatistic> {
    check_noise_var(frame)?;
    let e: f64 = frame.samples.iter().map(|v| v.norm_sqr()).sum();
    Ok(TestStatistic {
        value: e / frame.noise_var,
        kind: DetectorKind::Energy,
        n_used: frame.len(),
    })
}

/// `Re(x^H y)` against the known template `x`.
pub fn coherent_stat(frame: &ReceivedFrame, template: &[Complex64]) -> Result<TestStatistic> {
    ensure_len(frame.len(), template.len())?;
    let value = template
        .iter()
        .zip(&frame.samples)
        .map(|(x, y)| (x.conj() * y).re)
        .sum();
    Ok(TestStatistic {
        value,
        kind: DetectorKind::Coherent,
        n_used: frame.len(),
    })
}

/// `dim x dim` sample covariance from overlapping windows of the frame.
pub fn second_moment_stat(frame: &ReceivedFrame, dim: usize) -> Result<DMatrix<Complex64>> {
    if dim < 1 {
        return invalid("covariance dimension must be at least 1");
    }
    if frame.len() < dim.max(2) {
        return invalid("frame too short for the requested covariance dimension");
    }
    let y = &frame.samples;
    let windows = y.len() - dim + 1;
    let mut r = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let acc: Complex64 = (0..windows).map(|n| y[n + i] * y[n + j].conj()).sum();
            let v = acc / windows as f64;
            r[(i, j)] = v;
            r[(j, i)] = v.conj();
        }
    }
    Ok(r)
}

/// Ratio of the largest to the smallest eigenvalue of the sample covariance.
pub fn covariance_eig_stat(frame: &ReceivedFrame, smoothing: usize) -> Result<TestStatistic> {
    if smoothing < 1 {
        return invalid("smoothing dimension must be at least 1");
    }
    if frame.len() < 10 * smoothing {
        return invalid(format!(
            "covariance detector needs N >= 10 L (N={}, L={smoothing})",
            frame.len()
        ));
    }
    let r = second_moment_stat(frame, smoothing)?;
    let eig = r.symmetric_eigen().eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= 1e-14 * max {
        return Err(Error::SingularCovariance { min, max });
    }
    let value = if smoothing == 1 { 1.0 } else { (max / min).max(1.0) };
    Ok(TestStatistic {
        value,
        kind: DetectorKind::CovarianceEig,
        n_used: frame.len(),
    })
}

/// Cyclic autocorrelation `(1/N) sum_n y[n+tau] y*[n] e^{-j 2 pi alpha n}`.
pub fn cyclic_autocorrelation(y: &[Complex64], alpha: f64, tau: isize) -> Complex64 {
    let n = y.len();
    let shift = tau.unsigned_abs();
    if shift >= n {
        return Complex64::default();
    }
    let (start, end) = if tau >= 0 { (0, n - shift) } else { (shift, n) };
    let acc: Complex64 = (start..end)
        .map(|i| {
            let j = (i as isize + tau) as usize;
            y[j] * y[i].conj() * Complex64::from_polar(1.0, -2.0 * PI * alpha * i as f64)
        })
        .sum();
    acc / n as f64
}

/// Magnitude of the lag-windowed cyclic spectral density at `(alpha, freq)`.
///
/// With a rectangular window spanning every lag and `alpha = 0` this is the
/// periodogram `|Y(f)|^2 / N`.
pub fn cyclic_csd_stat(
    frame: &ReceivedFrame,
    alpha: f64,
    freq: f64,
    max_lag: usize,
    window: LagWindow,
) -> Result<TestStatistic> {
    if !(alpha.abs() < 1.0) || !(freq.abs() <= 0.5) {
        return invalid("cyclic detector needs |alpha| < 1 and |f| <= 0.5");
    }
    let y = &frame.samples;
    let l = max_lag.min(y.len().saturating_sub(1)) as isize;
    let mut s = Complex64::default();
    for tau in -l..=l {
        let w = match window {
            LagWindow::Rectangular => 1.0,
            LagWindow::Bartlett => 1.0 - tau.unsigned_abs() as f64 / (l + 1) as f64,
        };
        s += cyclic_autocorrelation(y, alpha, tau)
            * w
            * Complex64::from_polar(1.0, -2.0 * PI * freq * tau as f64);
    }
    Ok(TestStatistic {
        value: s.norm(),
        kind: DetectorKind::CyclicCsd,
        n_used: y.len(),
    })
}

/// Normalized lag-`nd` correlation accumulated over cyclic-prefix positions.
///
/// Frames are assumed block-aligned: block `b` starts at `b (nd + ncp)` and its
/// prefix occupies the first `ncp` samples.
pub fn cp_autocorr_stat(frame: &ReceivedFrame, nd: usize, ncp: usize) -> Result<TestStatistic> {
    if ncp < 1 || nd < ncp {
        return invalid("cp detector needs 1 <= ncp <= nd");
    }
    let block = nd + ncp;
    let y = &frame.samples;
    if y.len() < 2 * block {
        return invalid("cp detector needs N >= 2 (nd + ncp)");
    }
    let mut corr = Complex64::default();
    let mut power = 0.0;
    let mut used = 0;
    for start in (0..y.len()).step_by(block) {
        for n in start..start + ncp {
            if n + nd >= y.len() {
                break;
            }
            corr += y[n] * y[n + nd].conj();
            power += 0.5 * (y[n].norm_sqr() + y[n + nd].norm_sqr());
            used += 1;
        }
    }
    let value = if power > 0.0 { corr.norm() / power } else { 0.0 };
    Ok(TestStatistic {
        value,
        kind: DetectorKind::CpAutocorr,
        n_used: used,
    })
}

/// H1 iff `stat >= lambda`.
pub fn decide(stat: f64, lambda: f64) -> Hypothesis {
    Hypothesis::from_occupied(stat >= lambda)
}

/// A statistic bound to the receiver knowledge it needs (the coherent template).
#[derive(Debug, Clone)]
pub struct Detector {
    pub spec: StatisticSpec,
    pub observe: Option<usize>,
    template: Option<Vec<Complex64>>,
}

impl Detector {
    /// Prepare `spec` for frames drawn from `frame`.
    pub fn prepare(spec: &StatisticSpec, observe: Option<usize>, frame: &FrameSpec) -> Result<Self> {
        let n = observe.map_or(frame.n, |o| o.min(frame.n));
        if n == 0 {
            return invalid("observation window must be positive");
        }
        let template = match spec {
            StatisticSpec::Coherent => {
                let full = known_template(frame).map_err(|_| {
                    Error::InvalidParameter("coherent detector requires a known-waveform signal".into())
                })?;
                Some(full[..n].to_vec())
            }
            _ => None,
        };
        Ok(Self {
            spec: *spec,
            observe,
            template,
        })
    }

    pub fn from_detector_spec(spec: &DetectorSpec, frame: &FrameSpec) -> Result<Self> {
        Self::prepare(&spec.statistic, spec.observe, frame)
    }

    pub fn statistic(&self, frame: &ReceivedFrame) -> Result<TestStatistic> {
        match self.observe {
            Some(o) if o < frame.len() => {
                let head = ReceivedFrame {
                    samples: frame.samples[..o].to_vec(),
                    truth: frame.truth,
                    noise_var: frame.noise_var,
                    domain: frame.domain,
                    pu_waveform: None,
                };
                self.evaluate(&head)
            }
            _ => self.evaluate(frame),
        }
    }

    fn evaluate(&self, frame: &ReceivedFrame) -> Result<TestStatistic> {
        match self.spec {
            StatisticSpec::Energy => energy_stat(frame),
            StatisticSpec::Coherent => coherent_stat(frame, self.template.as_deref().unwrap_or(&[])),
            StatisticSpec::CovarianceEig { smoothing } => covariance_eig_stat(frame, smoothing),
            StatisticSpec::CyclicCsd {
                alpha,
                freq,
                max_lag,
                window,
            } => cyclic_csd_stat(frame, alpha, freq, max_lag, window),
            StatisticSpec::CpAutocorr { useful_len, cp_len } => cp_autocorr_stat(frame, useful_len, cp_len),
        }
    }
}

/// Statistics of `trials` independent frames under `hypothesis`, in trial order.
pub fn simulate_statistics(
    detector: &Detector,
    frame: &FrameSpec,
    hypothesis: Hypothesis,
    trials: u64,
    seeds: &SeedTree,
) -> Result<Vec<f64>> {
    frame.validate()?;
    (0..trials)
        .into_par_iter()
        .map_init(FftPlanner::new, |planner, t| {
            let f = trial_frame(frame, hypothesis, seeds, t, planner)?;
            detector.statistic(&f).map(|s| s.value)
        })
        .collect()
}

/// Large-sample law of the energy statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyLaw {
    /// Gaussian approximation with H1 variance `N (1 + 2 gamma)`; this is the
    /// law behind the textbook closed-form ROC.
    #[default]
    Clt,
    /// Scaled chi-square for a Gaussian primary signal.
    Exact,
}

/// Closed-form H0/H1 laws of the energy and coherent statistics.
///
/// `n` is real-valued so sensing time can be swept continuously.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticDetector {
    pub kind: DetectorKind,
    pub n: f64,
    pub gamma: f64,
    pub noise_var: f64,
    pub domain: SampleDomain,
    pub law: EnergyLaw,
}

impl AnalyticDetector {
    pub fn energy(n: f64, gamma: f64) -> Self {
        Self {
            kind: DetectorKind::Energy,
            n,
            gamma,
            noise_var: 1.0,
            domain: SampleDomain::Complex,
            law: EnergyLaw::Clt,
        }
    }

    /// Coherent detector on real samples.
    pub fn coherent(n: f64, gamma: f64) -> Self {
        Self {
            kind: DetectorKind::Coherent,
            n,
            gamma,
            noise_var: 1.0,
            domain: SampleDomain::Real,
            law: EnergyLaw::Clt,
        }
    }

    pub fn with_law(mut self, law: EnergyLaw) -> Self {
        self.law = law;
        self
    }

    pub fn with_domain(mut self, domain: SampleDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_noise_var(mut self, noise_var: f64) -> Self {
        self.noise_var = noise_var;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.kind, DetectorKind::Energy | DetectorKind::Coherent) {
            return invalid(format!(
                "{} detector has no closed-form law; use empirical calibration",
                self.kind.name()
            ));
        }
        if !(self.n > 0.0) || !self.n.is_finite() {
            return invalid("sample count must be positive");
        }
        if !(self.gamma >= 0.0) || !(self.noise_var > 0.0) {
            return invalid("snr must be non-negative and noise variance positive");
        }
        Ok(())
    }

    /// Degrees-of-freedom factor: complex samples carry two real dimensions.
    fn energy_var_scale(&self) -> f64 {
        match self.domain {
            SampleDomain::Complex => 1.0,
            SampleDomain::Real => 2.0,
        }
    }

    fn gamma_shape_scale(&self) -> (f64, f64) {
        match self.domain {
            SampleDomain::Complex => (self.n, 1.0),
            SampleDomain::Real => (self.n / 2.0, 2.0),
        }
    }

    /// Mean and standard deviation of the coherent statistic (H1 mean, common sd).
    fn coherent_moments(&self) -> (f64, f64) {
        let energy = self.n * self.gamma * self.noise_var;
        let var = match self.domain {
            SampleDomain::Real => energy * self.noise_var,
            SampleDomain::Complex => energy * self.noise_var / 2.0,
        };
        (energy, var.sqrt())
    }

    fn tail(&self, lambda: f64, occupied: bool) -> f64 {
        match self.kind {
            DetectorKind::Coherent => {
                let (mean, sd) = self.coherent_moments();
                let mu = if occupied { mean } else { 0.0 };
                if sd == 0.0 {
                    return if lambda <= mu { 1.0 } else { 0.0 };
                }
                q((lambda - mu) / sd)
            }
            _ => {
                let g = if occupied { self.gamma } else { 0.0 };
                match self.law {
                    EnergyLaw::Clt => {
                        let mean = self.n * (1.0 + g);
                        let sd = (self.energy_var_scale() * self.n * (1.0 + 2.0 * g)).sqrt();
                        q((lambda - mean) / sd)
                    }
                    EnergyLaw::Exact => {
                        let (shape, scale) = self.gamma_shape_scale();
                        gamma_sf(shape, scale * (1.0 + g), lambda)
                    }
                }
            }
        }
    }

    pub fn pfa(&self, lambda: f64) -> f64 {
        self.tail(lambda, false)
    }

    pub fn pd(&self, lambda: f64) -> f64 {
        self.tail(lambda, true)
    }

    fn inverse(&self, p: f64, occupied: bool) -> Result<f64> {
        self.validate()?;
        let z = q_inv_checked(p)?;
        let g = if occupied { self.gamma } else { 0.0 };
        Ok(match self.kind {
            DetectorKind::Coherent => {
                let (mean, sd) = self.coherent_moments();
                (if occupied { mean } else { 0.0 }) + sd * z
            }
            _ => match self.law {
                EnergyLaw::Clt => {
                    self.n * (1.0 + g) + (self.energy_var_scale() * self.n * (1.0 + 2.0 * g)).sqrt() * z
                }
                EnergyLaw::Exact => {
                    let (shape, scale) = self.gamma_shape_scale();
                    gamma_isf(shape, scale * (1.0 + g), p)?
                }
            },
        })
    }

    pub fn threshold_for_pfa(&self, pfa: f64) -> Result<f64> {
        self.inverse(pfa, false)
    }

    pub fn threshold_for_pd(&self, pd: f64) -> Result<f64> {
        self.inverse(pd, true)
    }

    pub fn threshold(&self, policy: ThresholdPolicy) -> Result<f64> {
        policy.validate()?;
        match policy {
            ThresholdPolicy::Fixed(l) => Ok(l),
            ThresholdPolicy::TargetPfa(p) => self.threshold_for_pfa(p),
            ThresholdPolicy::TargetPd(b) => self.threshold_for_pd(b),
        }
    }

    /// `(P_FA, P_D)` at the threshold chosen by `policy`.
    pub fn operating_point(&self, policy: ThresholdPolicy) -> Result<(f64, f64)> {
        let l = self.threshold(policy)?;
        Ok((self.pfa(l), self.pd(l)))
    }
}

/// Closed-form energy-detector ROC: `Q((Q^-1(pfa) - sqrt(N) gamma) / sqrt(1 + 2 gamma))`.
pub fn energy_pd_clt(n: f64, gamma: f64, pfa: f64) -> Result<f64> {
    let z = q_inv_checked(pfa)?;
    Ok(q((z - n.sqrt() * gamma) / (1.0 + 2.0 * gamma).sqrt()))
}

/// Closed-form coherent-detector ROC: `Q(Q^-1(pfa) - sqrt(N gamma))`.
pub fn coherent_pd(n: f64, gamma: f64, pfa: f64) -> Result<f64> {
    let z = q_inv_checked(pfa)?;
    Ok(q(z - (n * gamma).sqrt()))
}

/// Threshold for `kind` under `policy` with the default (complex-domain energy,
/// real-domain coherent) closed-form law.
pub fn calibrate_threshold(
    kind: DetectorKind,
    policy: ThresholdPolicy,
    n: usize,
    gamma: f64,
    sigma2: f64,
) -> Result<f64> {
    let a = match kind {
        DetectorKind::Energy => AnalyticDetector::energy(n as f64, gamma),
        DetectorKind::Coherent => AnalyticDetector::coherent(n as f64, gamma),
        other => {
            return invalid(format!(
                "{} detector needs empirical calibration",
                other.name()
            ))
        }
    };
    a.with_noise_var(sigma2).threshold(policy)
}

/// Threshold giving the requested empirical exceedance fraction of `stats`.
///
/// Exactly `round(p * len)` (at least one) of the statistics satisfy
/// `stat >= lambda` when the values are distinct.
pub fn empirical_threshold(stats: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::UnattainableTarget(p));
    }
    if stats.is_empty() {
        return invalid("empirical calibration needs at least one trial");
    }
    let mut sorted = stats.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let k = ((p * sorted.len() as f64).round() as usize).clamp(1, sorted.len());
    Ok(sorted[sorted.len() - k])
}

/// Monte-Carlo calibration: the H0 (target-P_FA) or H1 (target-P_D) quantile.
pub fn calibrate_empirical(
    detector: &Detector,
    frame: &FrameSpec,
    policy: ThresholdPolicy,
    trials: u64,
    seeds: &SeedTree,
) -> Result<f64> {
    policy.validate()?;
    let calib = seeds.child(&[tag::CALIBRATION]);
    match policy {
        ThresholdPolicy::Fixed(l) => Ok(l),
        ThresholdPolicy::TargetPfa(p) => {
            let s = simulate_statistics(detector, frame, Hypothesis::Idle, trials, &calib)?;
            empirical_threshold(&s, p)
        }
        ThresholdPolicy::TargetPd(b) => {
            let s = simulate_statistics(detector, frame, Hypothesis::Occupied, trials, &calib)?;
            empirical_threshold(&s, b)
        }
    }
}

/// Threshold for a full detector spec: closed form for energy and coherent,
/// Monte-Carlo quantile (with `trials` frames) otherwise.
pub fn resolve_threshold(
    spec: &DetectorSpec,
    frame: &FrameSpec,
    trials: u64,
    seeds: &SeedTree,
) -> Result<f64> {
    let n = spec.observe.map_or(frame.n, |o| o.min(frame.n)) as f64;
    let analytic = match spec.statistic {
        StatisticSpec::Energy => Some(AnalyticDetector::energy(n, frame.gamma).with_domain(frame.domain)),
        StatisticSpec::Coherent => Some(
            AnalyticDetector::coherent(n, frame.gamma)
                .with_domain(frame.domain)
                .with_noise_var(frame.noise_var),
        ),
        _ => None,
    };
    match analytic {
        Some(a) => a.threshold(spec.threshold),
        None => {
            let det = Detector::from_detector_spec(spec, frame)?;
            calibrate_empirical(&det, frame, spec.threshold, trials, seeds)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_band_frame, PuSignalModel};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(samples: Vec<Complex64>, noise_var: f64) -> ReceivedFrame {
        ReceivedFrame::from_samples(samples, noise_var)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn energy_trivial_values() {
        assert_eq!(energy_stat(&frame(vec![c(0.0); 8], 1.0)).unwrap().value, 0.0);
        assert_eq!(energy_stat(&frame(vec![c(1.0); 4], 2.0)).unwrap().value, 2.0);
        assert!(energy_stat(&frame(vec![c(1.0); 4], 0.0)).is_err());
    }

    #[test]
    fn energy_h0_mean_is_n() {
        let spec = FrameSpec::new(PuSignalModel::Gaussian, 0.1, 1.0, 125);
        let det = Detector::prepare(&StatisticSpec::Energy, None, &spec).unwrap();
        let s = simulate_statistics(&det, &spec, Hypothesis::Idle, 100_000, &SeedTree::new(1)).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!((124.5..=125.5).contains(&mean), "{mean}");
    }

    #[test]
    fn coherent_trivial_values() {
        let x: Vec<Complex64> = (0..10).map(|_| c(1.0)).collect();
        assert!((coherent_stat(&frame(x.clone(), 1.0), &x).unwrap().value - 10.0).abs() < 1e-12);
        let y = vec![Complex64::new(0.0, 1.0); 10];
        assert_eq!(coherent_stat(&frame(y, 1.0), &x).unwrap().value, 0.0);
        assert!(coherent_stat(&frame(vec![c(1.0); 3], 1.0), &x).is_err());
    }

    #[test]
    fn coherent_h1_mean_is_template_energy() {
        let spec = FrameSpec::new(PuSignalModel::KnownWaveform { template_seed: 9 }, 0.1, 1.0, 200)
            .with_domain(SampleDomain::Real);
        let det = Detector::prepare(&StatisticSpec::Coherent, None, &spec).unwrap();
        let trials = 10_000;
        let s = simulate_statistics(&det, &spec, Hypothesis::Occupied, trials, &SeedTree::new(2)).unwrap();
        let mean = s.iter().sum::<f64>() / trials as f64;
        let energy = 200.0 * 0.1;
        let se = (energy / trials as f64).sqrt();
        assert!((mean - energy).abs() < 3.0 * se, "{mean} vs {energy}");
    }

    #[test]
    fn covariance_ratio_white_noise() {
        let spec = FrameSpec::new(PuSignalModel::Gaussian, 0.0, 1.0, 100_000);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = generate_band_frame(&spec, Hypothesis::Idle, &mut rng).unwrap();
        let r = covariance_eig_stat(&f, 8).unwrap().value;
        assert!((1.0..=1.15).contains(&r), "{r}");
        assert_eq!(covariance_eig_stat(&f, 1).unwrap().value, 1.0);
    }

    #[test]
    fn covariance_ratio_correlated_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = FrameSpec::new(PuSignalModel::Gaussian, 0.0, 1e-6, 1000);
        let dither = generate_band_frame(&spec, Hypothesis::Idle, &mut rng).unwrap();
        let y: Vec<Complex64> = dither.samples.iter().map(|d| Complex64::new(1.0, 0.5) + d).collect();
        let r = covariance_eig_stat(&frame(y, 1.0), 8).unwrap().value;
        assert!(r > 1e3, "{r}");
    }

    #[test]
    fn covariance_singular_is_reported() {
        let y = vec![Complex64::new(1.0, 0.0); 200];
        assert!(matches!(
            covariance_eig_stat(&frame(y, 1.0), 4),
            Err(Error::SingularCovariance { .. })
        ));
        assert!(covariance_eig_stat(&frame(vec![c(1.0); 50], 1.0), 8).is_err());
    }

    #[test]
    fn second_moment_law_of_large_numbers() {
        let spec = FrameSpec::new(PuSignalModel::Gaussian, 0.0, 2.0, 1_000_000);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = generate_band_frame(&spec, Hypothesis::Idle, &mut rng).unwrap();
        let r = second_moment_stat(&f, 2).unwrap();
        assert!(r[(0, 1)].norm() <= 0.01 * 2.0);
        for i in 0..2 {
            assert!((r[(i, i)].re / 2.0 - 1.0).abs() < 0.01);
        }
        let r1 = second_moment_stat(&f, 1).unwrap()[(0, 0)].re;
        let e = energy_stat(&f).unwrap().value * f.noise_var / f.len() as f64;
        assert!((r1 - e).abs() < 1e-12 * e);
    }

    #[test]
    fn second_moment_of_repeated_vector_is_gram() {
        let x = [Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25)];
        let y: Vec<Complex64> = (0..40).map(|i| x[i % 2]).collect();
        let r = second_moment_stat(&frame(y, 1.0), 2).unwrap();
        // Windows alternate between (x0, x1) and (x1, x0).
        let windows = 39.0;
        let w0 = 20.0 / windows;
        let w1 = 19.0 / windows;
        let want01 = x[0] * x[1].conj() * w0 + x[1] * x[0].conj() * w1;
        assert!((r[(0, 1)] - want01).norm() < 1e-12);
        let want00 = x[0].norm_sqr() * w0 + x[1].norm_sqr() * w1;
        assert!((r[(0, 0)].re - want00).abs() < 1e-12);
    }

    #[test]
    fn cyclic_noise_is_small() {
        let n = 100_000;
        let spec = FrameSpec::new(PuSignalModel::Gaussian, 0.0, 1.0, n);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = generate_band_frame(&spec, Hypothesis::Idle, &mut rng).unwrap();
        let v = cyclic_csd_stat(&f, 0.25, 0.0, 4, LagWindow::Bartlett).unwrap().value;
        assert!(v <= 5.0 / (n as f64).sqrt(), "{v}");
    }

    #[test]
    fn cyclic_alpha_zero_is_periodogram() {
        let n = 64;
        let spec = FrameSpec::new(PuSignalModel::Gaussian, 1.0, 1.0, n);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = generate_band_frame(&spec, Hypothesis::Occupied, &mut rng).unwrap();
        for &freq in &[0.0, 0.125, -0.3, 0.5] {
            let s = cyclic_csd_stat(&f, 0.0, freq, n - 1, LagWindow::Rectangular).unwrap().value;
            let yf: Complex64 = f
                .samples
                .iter()
                .enumerate()
                .map(|(i, v)| v * Complex64::from_polar(1.0, -2.0 * PI * freq * i as f64))
                .sum();
            let p = yf.norm_sqr() / n as f64;
            assert!((s - p).abs() < 1e-9 * p.max(1.0), "f={freq}: {s} vs {p}");
        }
    }

    #[test]
    fn cyclic_feature_at_symbol_rate() {
        let spec = FrameSpec::new(
            PuSignalModel::Bpsk {
                symbol_period: 8,
                carrier_offset: 0.0,
            },
            1.0,
            1.0,
            16384,
        );
        let seeds = SeedTree::new(8);
        let mut planner = FftPlanner::new();
        let (mut at_rate, mut off_rate) = (0.0, 0.0);
        for t in 0..100 {
            let f = trial_frame(&spec, Hypothesis::Occupied, &seeds, t, &mut planner).unwrap();
            at_rate += cyclic_csd_stat(&f, 0.125, 0.0, 4, LagWindow::Bartlett).unwrap().value;
            off_rate += cyclic_csd_stat(&f, 0.2, 0.0, 4, LagWindow::Bartlett).unwrap().value;
        }
        assert!(at_rate >= 10.0 * off_rate, "{at_rate} vs {off_rate}");
    }

    #[test]
    fn cp_noise_only_bound() {
        let spec = FrameSpec::new(PuSignalModel::Gaussian, 0.0, 1.0, 80 * 20);
        let det = Detector::prepare(
            &StatisticSpec::CpAutocorr {
                useful_len: 64,
                cp_len: 16,
            },
            None,
            &spec,
        )
        .unwrap();
        let s = simulate_statistics(&det, &spec, Hypothesis::Idle, 1000, &SeedTree::new(9)).unwrap();
        let bound = 3.0 / ((16 * 20) as f64).sqrt();
        let frac = s.iter().filter(|&&v| v <= bound).count() as f64 / 1000.0;
        assert!(frac >= 0.95, "{frac}");
    }

    #[test]
    fn cp_clean_signal_is_one() {
        let spec = FrameSpec::new(
            PuSignalModel::OfdmCp {
                useful_len: 64,
                cp_len: 16,
            },
            1e12,
            1.0,
            80 * 10,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = generate_band_frame(&spec, Hypothesis::Occupied, &mut rng).unwrap();
        let v = cp_autocorr_stat(&f, 64, 16).unwrap().value;
        assert!((v - 1.0).abs() < 1e-5, "{v}");
        assert!(cp_autocorr_stat(&f, 16, 64).is_err());
        let short = frame(f.samples[..100].to_vec(), 1.0);
        assert!(cp_autocorr_stat(&short, 64, 16).is_err());
    }

    #[test]
    fn decide_tie_goes_to_occupied() {
        assert_eq!(decide(5.0, 5.0), Hypothesis::Occupied);
        assert_eq!(decide(0.0, 1.0), Hypothesis::Idle);
        assert_eq!(decide(125.1, 125.0), Hypothesis::Occupied);
    }

    #[test]
    fn energy_median_threshold_near_n() {
        let n = 100_000;
        let l = calibrate_threshold(DetectorKind::Energy, ThresholdPolicy::TargetPfa(0.5), n, 0.1, 1.0).unwrap();
        assert!((l / n as f64 - 1.0).abs() < 0.01);
        let exact = AnalyticDetector::energy(n as f64, 0.1)
            .with_law(EnergyLaw::Exact)
            .threshold_for_pfa(0.5)
            .unwrap();
        assert!((exact / n as f64 - 1.0).abs() < 0.01);
    }

    #[test]
    fn closed_form_operating_points() {
        let e = AnalyticDetector::energy(125.0, 0.1);
        let (pfa, pd) = e.operating_point(ThresholdPolicy::TargetPfa(0.1)).unwrap();
        assert!((pfa - 0.1).abs() < 1e-12, "{pfa}");
        assert!((pd - 0.4407).abs() < 0.001, "{pd}");
        assert!((energy_pd_clt(125.0, 0.1, 0.1).unwrap() - pd).abs() < 1e-12);

        let g = 10f64.powf(-1.5);
        let c = AnalyticDetector::coherent(500.0, g);
        let (_, pd) = c.operating_point(ThresholdPolicy::TargetPfa(0.1)).unwrap();
        assert!((pd - 0.9965).abs() < 0.0005, "{pd}");
        assert!((coherent_pd(500.0, g, 0.1).unwrap() - pd).abs() < 1e-12);
    }

    #[test]
    fn unattainable_targets_rejected() {
        for p in [0.0, 1.0, -0.1, 1.5] {
            assert!(calibrate_threshold(DetectorKind::Energy, ThresholdPolicy::TargetPd(p), 10, 0.1, 1.0).is_err());
            assert!(calibrate_threshold(DetectorKind::Energy, ThresholdPolicy::TargetPfa(p), 10, 0.1, 1.0).is_err());
        }
        assert!(calibrate_threshold(DetectorKind::CpAutocorr, ThresholdPolicy::TargetPfa(0.1), 10, 0.1, 1.0).is_err());
    }

    #[test]
    fn target_pd_inverts_h1_law() {
        for law in [EnergyLaw::Clt, EnergyLaw::Exact] {
            let a = AnalyticDetector::energy(125.0, 0.1).with_law(law);
            let l = a.threshold_for_pd(0.9).unwrap();
            assert!((a.pd(l) - 0.9).abs() < 1e-9);
        }
        let a = AnalyticDetector::coherent(50.0, 0.2).with_noise_var(3.0);
        let l = a.threshold_for_pd(0.75).unwrap();
        assert!((a.pd(l) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empirical_threshold_counts() {
        let s: Vec<f64> = (0..100).map(f64::from).collect();
        let l = empirical_threshold(&s, 0.1).unwrap();
        assert_eq!(s.iter().filter(|&&v| v >= l).count(), 10);
        assert!(empirical_threshold(&s, 1.0).is_err());
        assert!(empirical_threshold(&[], 0.5).is_err());
    }

    #[test]
    fn empirical_calibration_hits_target() {
        let spec = FrameSpec::new(PuSignalModel::Gaussian, 0.0, 1.0, 400);
        let stat = StatisticSpec::CovarianceEig { smoothing: 4 };
        let det = Detector::prepare(&stat, None, &spec).unwrap();
        let l = calibrate_empirical(&det, &spec, ThresholdPolicy::TargetPfa(0.1), 4000, &SeedTree::new(1)).unwrap();
        let fresh = simulate_statistics(&det, &spec, Hypothesis::Idle, 4000, &SeedTree::new(2)).unwrap();
        let pfa = fresh.iter().filter(|&&v| v >= l).count() as f64 / 4000.0;
        assert!((pfa - 0.1).abs() < 0.02, "{pfa}");
    }

    #[test]
    fn coherent_requires_known_waveform() {
        let spec = FrameSpec::new(PuSignalModel::Gaussian, 0.1, 1.0, 10);
        assert!(Detector::prepare(&StatisticSpec::Coherent, None, &spec).is_err());
    }

    fn mc_rates(det: &Detector, spec: &FrameSpec, lambda: f64, seed: u64) -> (f64, f64) {
        let trials = 100_000;
        let seeds = SeedTree::new(seed);
        let h0 = simulate_statistics(det, spec, Hypothesis::Idle, trials, &seeds).unwrap();
        let h1 = simulate_statistics(det, spec, Hypothesis::Occupied, trials, &seeds).unwrap();
        let rate = |s: &[f64]| s.iter().filter(|&&v| v >= lambda).count() as f64 / trials as f64;
        (rate(&h0), rate(&h1))
    }

    const GRID: [(usize, f64); 4] = [(125, 0.0316), (125, 0.1), (500, 0.0316), (500, 0.1)];

    #[test]
    fn coherent_monte_carlo_matches_closed_form() {
        for (i, &(n, g)) in GRID.iter().enumerate() {
            let spec = FrameSpec::new(PuSignalModel::KnownWaveform { template_seed: 1 }, g, 1.0, n)
                .with_domain(SampleDomain::Real);
            let det = Detector::prepare(&StatisticSpec::Coherent, None, &spec).unwrap();
            let a = AnalyticDetector::coherent(n as f64, g).with_domain(SampleDomain::Real);
            let l = a.threshold_for_pfa(0.1).unwrap();
            let (pfa, pd) = mc_rates(&det, &spec, l, 100 + i as u64);
            assert!((pfa - 0.1).abs() <= 0.01, "N={n} g={g}: pfa {pfa}");
            let want = coherent_pd(n as f64, g, 0.1).unwrap();
            assert!((pd - want).abs() <= 0.01, "N={n} g={g}: pd {pd} vs {want}");
        }
    }

    #[test]
    fn energy_monte_carlo_matches_exact_law() {
        for (i, &(n, g)) in GRID.iter().enumerate() {
            let spec = FrameSpec::new(PuSignalModel::Gaussian, g, 1.0, n);
            let det = Detector::prepare(&StatisticSpec::Energy, None, &spec).unwrap();
            let a = AnalyticDetector::energy(n as f64, g).with_law(EnergyLaw::Exact);
            let l = a.threshold_for_pfa(0.1).unwrap();
            let (pfa, pd) = mc_rates(&det, &spec, l, 200 + i as u64);
            assert!((pfa - 0.1).abs() <= 0.01, "N={n} g={g}: pfa {pfa}");
            assert!((pd - a.pd(l)).abs() <= 0.01, "N={n} g={g}: pd {pd} vs {}", a.pd(l));
        }
    }

    #[test]
    fn energy_monte_carlo_matches_clt_at_n500() {
        for (i, &(n, g)) in GRID.iter().filter(|(n, _)| *n == 500).enumerate() {
            let spec = FrameSpec::new(PuSignalModel::Gaussian, g, 1.0, n);
            let det = Detector::prepare(&StatisticSpec::Energy, None, &spec).unwrap();
            let l = calibrate_threshold(DetectorKind::Energy, ThresholdPolicy::TargetPfa(0.1), n, g, 1.0).unwrap();
            let (pfa, pd) = mc_rates(&det, &spec, l, 300 + i as u64);
            assert!((pfa - 0.1).abs() <= 0.01, "N={n} g={g}: pfa {pfa}");
            let want = energy_pd_clt(n as f64, g, 0.1).unwrap();
            assert!((pd - want).abs() <= 0.01, "N={n} g={g}: pd {pd} vs {want}");
        }
    }

    /// At N = 125 the chi-square skew moves the true detection probability
    /// about 0.011 below the Gaussian approximation, just outside 0.01.
    #[test]
    #[ignore = "Gaussian approximation is 0.011 off the exact chi-square law at N=125"]
    fn energy_monte_carlo_matches_clt_at_n125() {
        for (i, &(n, g)) in GRID.iter().filter(|(n, _)| *n == 125).enumerate() {
            let spec = FrameSpec::new(PuSignalModel::Gaussian, g, 1.0, n);
            let det = Detector::prepare(&StatisticSpec::Energy, None, &spec).unwrap();
            let l = calibrate_threshold(DetectorKind::Energy, ThresholdPolicy::TargetPfa(0.1), n, g, 1.0).unwrap();
            let (_, pd) = mc_rates(&det, &spec, l, 400 + i as u64);
            let want = energy_pd_clt(n as f64, g, 0.1).unwrap();
            assert!((pd - want).abs() <= 0.01, "N={n} g={g}: pd {pd} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn eigen_ratio_is_scale_invariant(seed in 0u64..1000, scale in 0.01f64..100.0) {
            let spec = FrameSpec::new(PuSignalModel::Gaussian, 0.0, 1.0, 400);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = generate_band_frame(&spec, Hypothesis::Idle, &mut rng).unwrap();
            let scaled = frame(f.samples.iter().map(|v| v * scale).collect(), 1.0);
            let a = covariance_eig_stat(&f, 4).unwrap().value;
            let b = covariance_eig_stat(&scaled, 4).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-9 * a);
        }

        #[test]
        fn halving_noise_var_doubles_energy(seed in 0u64..1000, sigma2 in 0.01f64..10.0) {
            let spec = FrameSpec::new(PuSignalModel::Gaussian, 0.5, 1.0, 64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = generate_band_frame(&spec, Hypothesis::Occupied, &mut rng).unwrap();
            let a = energy_stat(&ReceivedFrame { noise_var: sigma2, ..f.clone() }).unwrap().value;
            let b = energy_stat(&ReceivedFrame { noise_var: sigma2 / 2.0, ..f }).unwrap().value;
            prop_assert_eq!(b, 2.0 * a);
        }

        #[test]
        fn closed_form_pd_never_below_pfa(n in 1.0f64..2000.0, g in 0.0f64..2.0, pfa in 0.001f64..0.999) {
            prop_assert!(coherent_pd(n, g, pfa).unwrap() >= pfa - 1e-12);
            let e = AnalyticDetector::energy(n, g).with_law(EnergyLaw::Exact);
            let l = e.threshold_for_pfa(pfa).unwrap();
            prop_assert!(e.pd(l) >= pfa - 1e-9);
        }
    }
}

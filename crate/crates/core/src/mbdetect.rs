//! Multiband sensing strategies over `M` subchannels.

use std::ops::Range;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, invalid, Error, Result};
use crate::perf::throughput::{band_throughput, AccessMode, BandRates};
use crate::sbdetect::{decide, energy_stat, AnalyticDetector, Detector};
use crate::scenario::{Hypothesis, ReceivedFrame};

/// Disjoint FFT-bin ranges, one per band.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandMap {
    pub nfft: usize,
    pub bands: Vec<Range<usize>>,
}

impl BandMap {
    pub fn new(nfft: usize, bands: Vec<Range<usize>>) -> Result<Self> {
        if nfft == 0 {
            return invalid("nfft must be positive");
        }
        if bands.iter().any(|b| b.start >= b.end || b.end > nfft) {
            return invalid("band ranges must be non-empty and inside [0, nfft)");
        }
        let mut sorted: Vec<&Range<usize>> = bands.iter().collect();
        sorted.sort_by_key(|b| b.start);
        if sorted.windows(2).any(|w| w[0].end > w[1].start) {
            return invalid("band ranges overlap");
        }
        Ok(Self { nfft, bands })
    }

    /// `m` equal contiguous bands covering all `nfft` bins (the last one takes
    /// any remainder).
    pub fn uniform(nfft: usize, m: usize) -> Result<Self> {
        if m == 0 || m > nfft {
            return invalid("need 1 <= M <= nfft bands");
        }
        let w = nfft / m;
        let bands = (0..m)
            .map(|i| i * w..if i + 1 == m { nfft } else { (i + 1) * w })
            .collect();
        Self::new(nfft, bands)
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.bands.iter().map(|b| b.len()).collect()
    }
}

/// `|Y_k|^2` of the unnormalized `nfft`-point transform (zero padded).
pub fn bin_energies(samples: &[Complex64], nfft: usize) -> Result<Vec<f64>> {
    if samples.len() > nfft {
        return invalid(format!(
            "{} samples do not fit an {nfft}-point transform",
            samples.len()
        ));
    }
    let mut buf = samples.to_vec();
    buf.resize(nfft, Complex64::default());
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    Ok(buf.into_iter().map(|v| v.norm_sqr()).collect())
}

/// Per-band frequency-domain energy `sum_{k in band} |Y_k|^2`.
pub fn psd_band_energies(samples: &[Complex64], band_map: &BandMap) -> Result<Vec<f64>> {
    let bins = bin_energies(samples, band_map.nfft)?;
    Ok(band_map
        .bands
        .iter()
        .map(|b| bins[b.clone()].iter().sum())
        .collect())
}

/// Divide band energies by `nfft * sigma2`, giving statistics that are
/// Gamma(width, 1) under H0 for white complex noise.
pub fn normalize_band_energies(energies: &[f64], nfft: usize, noise_var: f64) -> Vec<f64> {
    let s = nfft as f64 * noise_var;
    energies.iter().map(|e| e / s).collect()
}

/// `sum_n w_n |Y_m(n)|^2` for one band.
pub fn weighted_energy(bin_energies: &[f64], weights: &[f64]) -> Result<f64> {
    ensure_len(bin_energies.len(), weights.len())?;
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return invalid("weights must be non-negative");
    }
    if weights.iter().all(|w| *w == 0.0) {
        return invalid("weights must not all be zero");
    }
    Ok(bin_energies.iter().zip(weights).map(|(e, w)| e * w).sum())
}

/// Weighted energies for every band of `band_map`, given per-band weights.
pub fn weighted_band_energies(bins: &[f64], band_map: &BandMap, weights: &[Vec<f64>]) -> Result<Vec<f64>> {
    ensure_len(band_map.nfft, bins.len())?;
    ensure_len(band_map.len(), weights.len())?;
    band_map
        .bands
        .iter()
        .zip(weights)
        .map(|(b, w)| weighted_energy(&bins[b.clone()], w))
        .collect()
}

/// Per-band decisions with the statistics and thresholds behind them.
/// `None` marks a band that was not sensed.
#[derive(Debug, Clone, PartialEq)]
pub struct MultibandDecision {
    pub decisions: Vec<Option<Hypothesis>>,
    pub thresholds: Vec<f64>,
    pub stats: Vec<f64>,
}

impl MultibandDecision {
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn undecided(&self) -> usize {
        self.decisions.iter().filter(|d| d.is_none()).count()
    }

    /// Decisions for access logic: unsensed bands count as occupied.
    pub fn resolved(&self) -> Vec<Hypothesis> {
        self.decisions
            .iter()
            .map(|d| d.unwrap_or(Hypothesis::Occupied))
            .collect()
    }
}

/// Element-wise `decide` over all bands.
pub fn parallel_decide(stats: &[f64], thresholds: &[f64]) -> Result<MultibandDecision> {
    ensure_len(stats.len(), thresholds.len())?;
    Ok(MultibandDecision {
        decisions: stats
            .iter()
            .zip(thresholds)
            .map(|(&s, &l)| Some(decide(s, l)))
            .collect(),
        thresholds: thresholds.to_vec(),
        stats: stats.to_vec(),
    })
}

/// Apply `detector` to every band frame and threshold the results.
pub fn detect_bands(frames: &[ReceivedFrame], detector: &Detector, thresholds: &[f64]) -> Result<MultibandDecision> {
    ensure_len(frames.len(), thresholds.len())?;
    let stats = frames
        .iter()
        .map(|f| detector.statistic(f).map(|s| s.value))
        .collect::<Result<Vec<_>>>()?;
    parallel_decide(&stats, thresholds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialSchedule {
    pub visit_order: Vec<usize>,
    /// Seconds spent sensing each visited band.
    pub per_band_time: f64,
    /// Seconds per retune.
    pub tuning_delay: f64,
}

impl SerialSchedule {
    pub fn sweep(m: usize, per_band_time: f64, tuning_delay: f64) -> Self {
        Self {
            visit_order: (0..m).collect(),
            per_band_time,
            tuning_delay,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.per_band_time > 0.0) || !(self.tuning_delay >= 0.0) {
            return invalid("per-band time must be positive and tuning delay non-negative");
        }
        let mut seen = vec![false; m];
        for &b in &self.visit_order {
            if b >= m {
                return invalid(format!("band {b} out of range for M={m}"));
            }
            if std::mem::replace(&mut seen[b], true) {
                return invalid(format!("band {b} visited twice"));
            }
        }
        Ok(())
    }

    pub fn elapsed(&self) -> f64 {
        self.visit_order.len() as f64 * (self.per_band_time + self.tuning_delay)
    }
}

/// Sense bands one at a time in `schedule` order.
pub fn serial_scan(
    frames: &[ReceivedFrame],
    schedule: &SerialSchedule,
    detector: &Detector,
    thresholds: &[f64],
) -> Result<(MultibandDecision, f64)> {
    let m = frames.len();
    ensure_len(m, thresholds.len())?;
    schedule.validate(m)?;
    let mut decisions = vec![None; m];
    let mut stats = vec![f64::NAN; m];
    for &b in &schedule.visit_order {
        let s = detector.statistic(&frames[b])?.value;
        stats[b] = s;
        decisions[b] = Some(decide(s, thresholds[b]));
    }
    Ok((
        MultibandDecision {
            decisions,
            thresholds: thresholds.to_vec(),
            stats,
        },
        schedule.elapsed(),
    ))
}

/// Coarse energy pass, then `fine` only on bands the coarse pass left open.
///
/// Bands whose normalized energy reaches `coarse_threshold` are declared
/// occupied at once. Returns the decisions and the number of fine invocations.
pub fn two_stage_scan(
    frames: &[ReceivedFrame],
    fine: &Detector,
    coarse_threshold: f64,
    fine_thresholds: &[f64],
) -> Result<(MultibandDecision, usize)> {
    ensure_len(frames.len(), fine_thresholds.len())?;
    let mut decisions = Vec::with_capacity(frames.len());
    let mut stats = Vec::with_capacity(frames.len());
    let mut fine_calls = 0;
    for (f, &l) in frames.iter().zip(fine_thresholds) {
        let coarse = energy_stat(f)?.value;
        if coarse >= coarse_threshold {
            decisions.push(Some(Hypothesis::Occupied));
            stats.push(coarse);
        } else {
            fine_calls += 1;
            let s = fine.statistic(f)?.value;
            decisions.push(Some(decide(s, l)));
            stats.push(s);
        }
    }
    Ok((
        MultibandDecision {
            decisions,
            thresholds: fine_thresholds.to_vec(),
            stats,
        },
        fine_calls,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtOutcome {
    pub decision: Hypothesis,
    pub samples_used: usize,
    pub llr: f64,
    pub truncated: bool,
}

/// Sequential probability ratio test for a known signal `template` in white
/// Gaussian noise, consuming `frame` sample by sample.
///
/// Stops with H0 when the log-likelihood ratio falls below `a`, with H1 when
/// it exceeds `b`, and otherwise at `max_n`, where it compares against
/// `(a + b) / 2`.
pub fn sprt_scan(
    frame: &ReceivedFrame,
    template: &[Complex64],
    a: f64,
    b: f64,
    max_n: usize,
) -> Result<SprtOutcome> {
    if !(a < b) {
        return invalid("sprt needs a < b");
    }
    if max_n < 1 {
        return invalid("sprt needs max_n >= 1");
    }
    let limit = max_n.min(frame.len()).min(template.len());
    if limit < max_n {
        return invalid(format!("only {limit} samples available for max_n={max_n}"));
    }
    let s2 = frame.noise_var;
    if !(s2 > 0.0) {
        return invalid("noise variance must be positive");
    }
    let real = matches!(frame.domain, crate::scenario::SampleDomain::Real);
    let mut llr = 0.0;
    for (i, (y, x)) in frame.samples.iter().zip(template).take(max_n).enumerate() {
        llr += if real {
            (2.0 * x.re * y.re - x.re * x.re) / (2.0 * s2)
        } else {
            (2.0 * (x.conj() * y).re - x.norm_sqr()) / s2
        };
        let decision = if llr < a {
            Some(Hypothesis::Idle)
        } else if llr > b {
            Some(Hypothesis::Occupied)
        } else {
            None
        };
        if let Some(decision) = decision {
            return Ok(SprtOutcome {
                decision,
                samples_used: i + 1,
                llr,
                truncated: false,
            });
        }
    }
    Ok(SprtOutcome {
        decision: decide(llr, 0.5 * (a + b)),
        samples_used: max_n,
        llr,
        truncated: true,
    })
}

/// One band of a joint threshold design problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MjdBand {
    pub gamma: f64,
    pub idle_prior: f64,
    pub rates: BandRates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MjdSolution {
    /// Thresholds on the normalized energy statistic.
    pub thresholds: Vec<f64>,
    pub pfa: Vec<f64>,
    pub pd: Vec<f64>,
    /// False where the band cannot meet the constraints.
    pub feasible: Vec<bool>,
    pub throughput: f64,
}

/// Per-band energy thresholds maximizing expected throughput subject to
/// `P_D,m >= beta`.
///
/// Bands are independent, so each threshold is optimized alone. When sensing
/// errors cost rate (`r00 >= r10` and `r01 >= r11`) the constraint binds and
/// the threshold is the `beta` quantile of the H1 law; otherwise a dense scan
/// of the feasible thresholds is used. `max_pfa`, if given, flags bands whose
/// resulting false-alarm probability exceeds it.
pub fn mjd_optimize_thresholds(
    bands: &[MjdBand],
    n: f64,
    beta: f64,
    mode: AccessMode,
    max_pfa: Option<f64>,
) -> Result<MjdSolution> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::UnattainableTarget(beta));
    }
    let mut sol = MjdSolution {
        thresholds: vec![],
        pfa: vec![],
        pd: vec![],
        feasible: vec![],
        throughput: 0.0,
    };
    for band in bands {
        if !(0.0..=1.0).contains(&band.idle_prior) {
            return invalid("idle prior must lie in [0, 1]");
        }
        let law = AnalyticDetector::energy(n, band.gamma);
        let binding = law.threshold_for_pd(beta)?;
        let objective = |l: f64| band_throughput(band.idle_prior, &band.rates, law.pfa(l), law.pd(l), mode);
        let r = band.rates;
        let lambda = if r.r00 >= r.r10 && (r.r01 >= r.r11 || mode == AccessMode::Interweave) {
            binding
        } else {
            let lo = law.threshold_for_pd(1.0 - 1e-12)?.min(law.threshold_for_pfa(1.0 - 1e-12)?);
            let steps = 4000;
            (0..=steps)
                .map(|i| lo + (binding - lo) * i as f64 / steps as f64)
                .fold((binding, objective(binding)), |best, l| {
                    let v = objective(l);
                    if v > best.1 {
                        (l, v)
                    } else {
                        best
                    }
                })
                .0
        };
        let (pfa, pd) = (law.pfa(lambda), law.pd(lambda));
        sol.feasible.push(max_pfa.is_none_or(|cap| pfa <= cap));
        sol.throughput += objective(lambda);
        sol.thresholds.push(lambda);
        sol.pfa.push(pfa);
        sol.pd.push(pd);
    }
    Ok(sol)
}

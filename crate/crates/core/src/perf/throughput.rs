//! Secondary-user rates and average throughput under sensing errors.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccessMode {
    /// Transmit only on bands judged idle.
    Interweave,
    /// Sensing-based spectrum sharing: full power when judged idle, reduced
    /// power when judged busy.
    #[default]
    Hybrid,
}

impl AccessMode {
    pub fn name(self) -> &'static str {
        match self {
            AccessMode::Interweave => "interweave",
            AccessMode::Hybrid => "hybrid",
        }
    }
}

/// `r_ij`: rate when deciding `H_i` while `H_j` holds (bit/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRates {
    pub r00: f64,
    pub r01: f64,
    pub r11: f64,
    pub r10: f64,
}

impl BandRates {
    /// Shannon rates for transmit powers `p0` (judged idle) and `p1` (judged
    /// busy), noise `noise_var` and primary-user interference `interference`.
    pub fn from_powers(bandwidth_hz: f64, p0: f64, p1: f64, noise_var: f64, interference: f64) -> Self {
        let c = |p: f64, n: f64| bandwidth_hz * (1.0 + p / n).log2();
        Self {
            r00: c(p0, noise_var),
            r01: c(p0, interference + noise_var),
            r11: c(p1, interference + noise_var),
            r10: c(p1, noise_var),
        }
    }
}

/// Expected rate on one band:
/// `p0 [r00 (1 - pfa) + r10 pfa] + p1 [r01 (1 - pd) + r11 pd]`.
/// Interweave access drops the `r10` and `r11` terms.
pub fn band_throughput(idle_prior: f64, rates: &BandRates, pfa: f64, pd: f64, mode: AccessMode) -> f64 {
    let (r10, r11) = match mode {
        AccessMode::Hybrid => (rates.r10, rates.r11),
        AccessMode::Interweave => (0.0, 0.0),
    };
    idle_prior * (rates.r00 * (1.0 - pfa) + r10 * pfa) + (1.0 - idle_prior) * (rates.r01 * (1.0 - pd) + r11 * pd)
}

/// Network throughput model over `M` bands of equal bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThroughputModel {
    pub bandwidth_hz: f64,
    /// Transmit power when a band is judged idle (W); the total budget when
    /// `split_power` is set.
    pub power_idle: f64,
    /// Transmit power when a band is judged busy (W).
    pub power_busy: f64,
    pub noise_var: f64,
    /// Primary-user interference power at the secondary receiver (W).
    pub interference_w: f64,
    /// `p(H0,m)` per band.
    pub idle_prior: Vec<f64>,
    pub pfa: Vec<f64>,
    pub pd: Vec<f64>,
    /// Number of accessed bands `l`.
    pub accessed: usize,
    pub frame_s: f64,
    pub sensing_s: f64,
    pub sample_rate_hz: f64,
    pub mode: AccessMode,
    /// Divide both powers evenly over the `l` accessed bands.
    pub split_power: bool,
}

impl ThroughputModel {
    /// `m` identical bands.
    pub fn identical(m: usize, idle_prior: f64, pfa: f64, pd: f64) -> Self {
        Self {
            bandwidth_hz: 6e6,
            power_idle: 1.0,
            power_busy: 0.4,
            noise_var: 1.0,
            interference_w: 0.01,
            idle_prior: vec![idle_prior; m],
            pfa: vec![pfa; m],
            pd: vec![pd; m],
            accessed: m,
            frame_s: 0.1,
            sensing_s: 0.01,
            sample_rate_hz: 1e4,
            mode: AccessMode::Hybrid,
            split_power: true,
        }
    }

    pub fn num_bands(&self) -> usize {
        self.idle_prior.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.num_bands();
        if m == 0 {
            return invalid("throughput model needs at least one band");
        }
        ensure_len(m, self.pfa.len())?;
        ensure_len(m, self.pd.len())?;
        if self.accessed < 1 || self.accessed > m {
            return invalid(format!("accessed band count must be in 1..={m}"));
        }
        if !(self.bandwidth_hz > 0.0) || !(self.noise_var > 0.0) || !(self.interference_w >= 0.0) {
            return invalid("bandwidth and noise must be positive, interference non-negative");
        }
        if !(self.power_busy >= 0.0) || !(self.power_busy <= self.power_idle) {
            return invalid("powers must satisfy 0 <= P1 <= P0");
        }
        if !(self.frame_s > 0.0) || !(self.sensing_s > 0.0 && self.sensing_s < self.frame_s) {
            return invalid("sensing time must satisfy 0 < tau < T");
        }
        if !(self.sample_rate_hz > 0.0) {
            return invalid("sample rate must be positive");
        }
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        if !self.idle_prior.iter().all(unit) || !self.pfa.iter().all(unit) || !self.pd.iter().all(unit) {
            return invalid("probabilities must lie in [0, 1]");
        }
        Ok(())
    }

    /// Per-band rates when `l` bands are accessed.
    pub fn rates_for(&self, l: usize) -> BandRates {
        let share = if self.split_power { l.max(1) as f64 } else { 1.0 };
        BandRates::from_powers(
            self.bandwidth_hz,
            self.power_idle / share,
            self.power_busy / share,
            self.noise_var,
            self.interference_w,
        )
    }

    pub fn rates(&self) -> BandRates {
        self.rates_for(self.accessed)
    }
}

/// `R` over the first `l` bands.
pub fn avg_throughput(model: &ThroughputModel, l: usize) -> Result<f64> {
    let mut m = model.clone();
    m.accessed = l;
    m.validate()?;
    let rates = m.rates();
    Ok((0..l)
        .map(|i| band_throughput(m.idle_prior[i], &rates, m.pfa[i], m.pd[i], m.mode))
        .sum())
}

/// `C = (T - tau) / T * R` with the model's own probabilities.
pub fn frame_throughput(model: &ThroughputModel) -> Result<f64> {
    let r = avg_throughput(model, model.accessed)?;
    Ok((model.frame_s - model.sensing_s) / model.frame_s * r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub l: usize,
    pub r: f64,
    pub c: f64,
}

/// `R(l)` and `C(l)` for every `l` in `ls`, with the index of the best `R`.
pub fn bandwidth_sweep(model: &ThroughputModel, ls: &[usize]) -> Result<(Vec<SweepPoint>, usize)> {
    if ls.is_empty() {
        return invalid("bandwidth sweep needs at least one l");
    }
    let scale = (model.frame_s - model.sensing_s) / model.frame_s;
    let pts = ls
        .iter()
        .map(|&l| {
            let r = avg_throughput(model, l)?;
            Ok(SweepPoint { l, r, c: scale * r })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = pts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.r.total_cmp(&b.1.r))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok((pts, best))
}

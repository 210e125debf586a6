//! Edge detection on a wideband PSD with a dilated Gaussian smoothing kernel.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, invalid, Result};

/// Kernel support in units of the scale.
const SUPPORT: f64 = 6.0;
/// Normalized magnitudes at or below this are treated as flat spectrum.
const FLOOR: f64 = 1e-12;
/// Finest-scale maxima below this multiple of the median magnitude are noise.
const NOISE_GATE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletConfig {
    /// `J`: scales `2^j` for `j = 1..=J`.
    pub levels: u32,
    /// Edge threshold after mean-PSD normalization; `None` picks it from data.
    #[serde(default)]
    pub delta: Option<f64>,
    pub nfft: usize,
}

impl WaveletConfig {
    pub fn new(levels: u32, nfft: usize) -> Self {
        Self {
            levels,
            delta: None,
            nfft,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 || self.levels > 16 {
            return invalid("wavelet levels must be in 1..=16");
        }
        if !self.nfft.is_power_of_two() || self.nfft < 2 {
            return invalid("nfft must be a power of two");
        }
        if let Some(d) = self.delta {
            if !(d >= 0.0) {
                return invalid("edge threshold must be non-negative");
            }
        }
        Ok(())
    }

    pub fn scales(&self) -> Vec<f64> {
        (1..=self.levels).map(|j| 2f64.powi(j as i32)).collect()
    }

    pub fn largest_scale(&self) -> f64 {
        2f64.powi(self.levels as i32)
    }
}

/// Taps of `psi_s(k) = (1/s) psi(k/s)` for `k` in `-6s..=6s`.
pub fn gaussian_kernel(scale: f64) -> Vec<f64> {
    let half = (SUPPORT * scale).ceil() as isize;
    let norm = 1.0 / (scale * (2.0 * std::f64::consts::PI).sqrt());
    (-half..=half)
        .map(|k| {
            let x = k as f64 / scale;
            norm * (-0.5 * x * x).exp()
        })
        .collect()
}

/// Circular convolution of the PSD with the kernel at `scale`.
pub fn cwt(psd: &[f64], scale: f64) -> Vec<f64> {
    let n = psd.len() as isize;
    let taps = gaussian_kernel(scale);
    let half = (taps.len() / 2) as isize;
    (0..n)
        .map(|i| {
            taps.iter()
                .enumerate()
                .map(|(t, w)| w * psd[(i - (t as isize - half)).rem_euclid(n) as usize])
                .sum()
        })
        .collect()
}

/// Centered circular difference `(w[i+1] - w[i-1]) / 2`.
pub fn derivative(w: &[f64]) -> Vec<f64> {
    let n = w.len();
    (0..n).map(|i| 0.5 * (w[(i + 1) % n] - w[(i + n - 1) % n])).collect()
}

/// `W'_s(f)`.
pub fn scale_derivative(psd: &[f64], scale: f64) -> Vec<f64> {
    derivative(&cwt(psd, scale))
}

/// A multiscale edge indicator together with what its normalization needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiscale {
    pub values: Vec<f64>,
    /// Power of `mean(psd)` the values scale with.
    pub order: i32,
    /// Bins this close to either end are never reported.
    pub guard: usize,
}

impl Multiscale {
    pub fn searchable(&self) -> Range<usize> {
        let n = self.values.len();
        self.guard.min(n)..n.saturating_sub(self.guard)
    }

    /// `|values| / mean(psd)^order`.
    pub fn normalized(&self, psd: &[f64]) -> Vec<f64> {
        let mean = psd.iter().sum::<f64>() / psd.len().max(1) as f64;
        let scale = if mean > 0.0 { mean.powi(self.order) } else { 1.0 };
        self.values.iter().map(|v| v.abs() / scale).collect()
    }
}

fn guard_for(scale: f64) -> usize {
    (SUPPORT * scale).ceil() as usize
}

fn check(psd: &[f64], config: &WaveletConfig) -> Result<()> {
    config.validate()?;
    ensure_len(config.nfft, psd.len())?;
    if psd.iter().any(|v| !v.is_finite()) {
        return invalid("psd must be finite");
    }
    Ok(())
}

/// Single-scale derivative at the largest scale.
pub fn wmm(psd: &[f64], config: &WaveletConfig) -> Result<Multiscale> {
    check(psd, config)?;
    let s = config.largest_scale();
    Ok(Multiscale {
        values: scale_derivative(psd, s),
        order: 1,
        guard: guard_for(s),
    })
}

fn combine(psd: &[f64], config: &WaveletConfig, product: bool) -> Result<Multiscale> {
    check(psd, config)?;
    let n = psd.len();
    let init = if product { 1.0 } else { 0.0 };
    let mut values = vec![init; n];
    for s in config.scales() {
        for (v, d) in values.iter_mut().zip(scale_derivative(psd, s)) {
            if product {
                *v *= d;
            } else {
                *v += d;
            }
        }
    }
    Ok(Multiscale {
        values,
        order: if product { config.levels as i32 } else { 1 },
        guard: guard_for(config.largest_scale()),
    })
}

/// Multiscale product `prod_j W'_{2^j}`.
pub fn wmp(psd: &[f64], config: &WaveletConfig) -> Result<Multiscale> {
    combine(psd, config, true)
}

/// Multiscale sum `sum_j W'_{2^j}`.
pub fn wms(psd: &[f64], config: &WaveletConfig) -> Result<Multiscale> {
    combine(psd, config, false)
}

/// Local maxima of `v` inside `range`: `v[i] >= v[i-1]` and `v[i] > v[i+1]`.
pub fn local_maxima(v: &[f64], range: Range<usize>) -> Vec<usize> {
    let n = v.len();
    range
        .filter(|&i| {
            let prev = v[(i + n - 1) % n];
            let next = v[(i + 1) % n];
            v[i] > FLOOR && v[i] >= prev && v[i] > next
        })
        .collect()
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut vals = v.to_vec();
    vals.sort_by(f64::total_cmp);
    vals[vals.len() / 2]
}

/// Data-driven threshold: three times the median normalized magnitude over
/// the searchable bins.
pub fn default_delta(m: &Multiscale, psd: &[f64]) -> f64 {
    3.0 * median(&m.normalized(psd)[m.searchable()])
}

/// Local maxima of the normalized magnitude that reach `delta`, sorted.
pub fn threshold_edges(m: &Multiscale, delta: f64, psd: &[f64]) -> Result<Vec<usize>> {
    if delta.is_nan() || delta < 0.0 {
        return invalid("edge threshold must be non-negative");
    }
    ensure_len(m.values.len(), psd.len())?;
    let norm = m.normalized(psd);
    Ok(local_maxima(&norm, m.searchable())
        .into_iter()
        .filter(|&i| norm[i] >= delta)
        .collect())
}

/// Unthresholded modulus maxima at the largest scale.
pub fn wmm_edges(psd: &[f64], config: &WaveletConfig) -> Result<Vec<usize>> {
    let m = wmm(psd, config)?;
    threshold_edges(&m, 0.0, psd)
}

/// Multiscale-product edges, thresholded by `config.delta` or the default rule.
///
/// Edges are located at finest-scale modulus maxima and kept when the
/// normalized product reaches the threshold within one bin and the maximum
/// stands clear of the finest-scale noise level. Coarse scales
/// pull neighbouring product peaks together, so the product alone misplaces
/// edges of narrow bands.
pub fn wmp_edges(psd: &[f64], config: &WaveletConfig) -> Result<Vec<usize>> {
    let m = wmp(psd, config)?;
    let delta = config.delta.unwrap_or_else(|| default_delta(&m, psd));
    let norm = m.normalized(psd);
    let fine: Vec<f64> = scale_derivative(psd, 2.0).iter().map(|v| v.abs()).collect();
    let n = norm.len();
    let noise = NOISE_GATE * median(&fine[m.searchable()]);
    Ok(local_maxima(&fine, m.searchable())
        .into_iter()
        .filter(|&p| fine[p] > noise)
        .filter(|&p| {
            let best = (p + n - 1..=p + n + 1).map(|i| norm[i % n]).fold(0.0, f64::max);
            best > FLOOR && best >= delta
        })
        .collect())
}

/// Partition `[0, nfft)` at the detected edges.
pub fn estimate_bands(edges: &[usize], nfft: usize) -> Result<Vec<Range<usize>>> {
    if edges.first() == Some(&0) {
        return invalid("an edge at bin 0 is not a boundary");
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("edges must be sorted and unique");
    }
    if edges.last().is_some_and(|&e| e >= nfft) {
        return invalid("edges must lie inside (0, nfft)");
    }
    let bounds: Vec<usize> = std::iter::once(0)
        .chain(edges.iter().copied())
        .chain(std::iter::once(nfft))
        .collect();
    Ok(bounds.windows(2).map(|w| w[0]..w[1]).collect())
}

//! Multiband aggregates, edge-detection metrics and band occupancy error.

use num_traits::Num;

use crate::error::{ensure_len, invalid, Error, Result};

/// How per-band detection probabilities are combined into one figure.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregate {
    /// Plain average over bands.
    Mean,
    /// Weighted average; weights must sum to 1.
    Weighted(Vec<f64>),
    /// Probability that at least one band is flagged occupied.
    AnyBand,
    /// Probability of declaring every band busy given at least one is
    /// vacant, from independent bands with these idle priors and false-alarm
    /// probabilities (the input values are the detection probabilities).
    ModifiedFa { idle_prior: Vec<f64>, pfa: Vec<f64> },
}

/// Largest band count accepted by the exact modified false-alarm enumeration.
pub const MAX_ENUMERATED_BANDS: usize = 20;

/// `(1/M) sum P_D,m`, in any numeric type.
pub fn mean_of<T: Num + Copy>(pd: &[T]) -> T {
    let m = pd.iter().fold(T::zero(), |acc, _| acc + T::one());
    pd.iter().fold(T::zero(), |acc, &p| acc + p) / m
}

/// `sum a_m P_D,m`, in any numeric type.
pub fn weighted_of<T: Num + Copy>(pd: &[T], weights: &[T]) -> T {
    pd.iter().zip(weights).fold(T::zero(), |acc, (&p, &w)| acc + p * w)
}

/// `1 - prod (1 - P_D,m)`, in any numeric type.
pub fn any_band_of<T: Num + Copy>(pd: &[T]) -> T {
    T::one() - pd.iter().fold(T::one(), |acc, &p| acc * (T::one() - p))
}

pub fn mb_aggregate(pd: &[f64], mode: &Aggregate) -> Result<f64> {
    if pd.is_empty() {
        return invalid("aggregate needs at least one band");
    }
    if pd.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return invalid("per-band probabilities must lie in [0, 1]");
    }
    match mode {
        Aggregate::Mean => Ok(mean_of(pd)),
        Aggregate::Weighted(a) => {
            ensure_len(pd.len(), a.len())?;
            if a.iter().any(|w| *w < 0.0) || (a.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return invalid("weights must be non-negative and sum to 1");
            }
            Ok(weighted_of(pd, a))
        }
        Aggregate::AnyBand => Ok(any_band_of(pd)),
        Aggregate::ModifiedFa { idle_prior, pfa } => modified_fa(pd, idle_prior, pfa),
    }
}

fn modified_fa(pd: &[f64], idle_prior: &[f64], pfa: &[f64]) -> Result<f64> {
    let m = pd.len();
    ensure_len(m, idle_prior.len())?;
    ensure_len(m, pfa.len())?;
    if m > MAX_ENUMERATED_BANDS {
        return invalid(format!(
            "modified false alarm enumerates 2^M states; M={m} exceeds {MAX_ENUMERATED_BANDS}, estimate it by Monte Carlo instead"
        ));
    }
    let mut joint = 0.0;
    let mut vacant = 0.0;
    // Bit m set means band m is busy.
    for state in 0u32..(1u32 << m) {
        if state.count_ones() as usize == m {
            continue;
        }
        let mut prob = 1.0;
        let mut all_busy = 1.0;
        for b in 0..m {
            if state >> b & 1 == 1 {
                prob *= 1.0 - idle_prior[b];
                all_busy *= pd[b];
            } else {
                prob *= idle_prior[b];
                all_busy *= pfa[b];
            }
        }
        vacant += prob;
        joint += prob * all_busy;
    }
    if vacant <= 0.0 {
        return Err(Error::InvalidParameter(
            "no band can be vacant; conditional false alarm undefined".into(),
        ));
    }
    Ok(joint / vacant)
}

/// Miss, false-edge and average error probabilities of an edge detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMetrics {
    pub n_true: usize,
    pub n_correct: usize,
    pub n_detected: usize,
    pub p_me: f64,
    pub p_fe: f64,
    pub p_e: f64,
}

/// Metrics from the three counts. With no true edges the miss probability is 0.
pub fn edge_metrics_from_counts(n_true: usize, n_correct: usize, n_detected: usize, nfft: usize) -> Result<EdgeMetrics> {
    if n_correct > n_true.min(n_detected) || n_true >= nfft {
        return invalid("inconsistent edge counts");
    }
    let p_me = if n_true == 0 {
        0.0
    } else {
        (n_true - n_correct) as f64 / n_true as f64
    };
    let p_fe = (n_detected - n_correct) as f64 / (nfft - n_true) as f64;
    Ok(EdgeMetrics {
        n_true,
        n_correct,
        n_detected,
        p_me,
        p_fe,
        p_e: 0.5 * (p_me + p_fe),
    })
}

/// One-to-one matching of detected to true edges within `tol` bins, closest
/// pairs first. Returns the number of matches.
pub fn match_edges(truth: &[usize], detected: &[usize], tol: usize) -> usize {
    let mut pairs: Vec<(usize, usize, usize)> = truth
        .iter()
        .enumerate()
        .flat_map(|(i, &t)| {
            detected
                .iter()
                .enumerate()
                .map(move |(j, &d)| (t.abs_diff(d), i, j))
        })
        .filter(|p| p.0 <= tol)
        .collect();
    pairs.sort();
    let mut used_t = vec![false; truth.len()];
    let mut used_d = vec![false; detected.len()];
    let mut matched = 0;
    for (_, i, j) in pairs {
        if !used_t[i] && !used_d[j] {
            used_t[i] = true;
            used_d[j] = true;
            matched += 1;
        }
    }
    matched
}

/// Edge metrics for `detected` against `truth`, matching within ±2 bins.
pub fn edge_metrics(truth: &[usize], detected: &[usize], nfft: usize) -> Result<EdgeMetrics> {
    let n_correct = match_edges(truth, detected, 2);
    edge_metrics_from_counts(truth.len(), n_correct, detected.len(), nfft)
}

/// Band occupancy degree: the band's SNR when occupied, else zero.
pub fn bod<T: Num + Copy>(occupied: &[bool], snr: &[T]) -> Result<Vec<T>> {
    ensure_len(occupied.len(), snr.len())?;
    Ok(occupied
        .iter()
        .zip(snr)
        .map(|(&o, &g)| if o { g } else { T::zero() })
        .collect())
}

/// `sum |BOD_a - BOD_e|^2 / sum |BOD_a|^2`.
pub fn boe<T: Num + Copy>(actual: &[T], estimated: &[T]) -> Result<T> {
    ensure_len(actual.len(), estimated.len())?;
    let den = actual.iter().fold(T::zero(), |acc, &a| acc + a * a);
    if den == T::zero() {
        return invalid("band occupancy error undefined when every band is idle");
    }
    let num = actual
        .iter()
        .zip(estimated)
        .fold(T::zero(), |acc, (&a, &e)| acc + (a - e) * (a - e));
    Ok(num / den)
}

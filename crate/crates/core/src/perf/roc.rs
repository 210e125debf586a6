//! Receiver operating characteristics, closed-form and simulated.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::SeedTree;
use crate::sbdetect::{simulate_statistics, AnalyticDetector, Detector};
use crate::scenario::{FrameSpec, Hypothesis};
use crate::special::wilson_interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RocSource {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub pfa: f64,
    pub pd: f64,
    /// 95% Wilson interval on `pd` (empirical curves only).
    pub pd_ci: Option<(f64, f64)>,
    pub pfa_ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Sorted by `pfa`.
    pub points: Vec<RocPoint>,
    pub source: RocSource,
    pub trials: Option<u64>,
}

impl RocCurve {
    fn sorted(mut points: Vec<RocPoint>, source: RocSource, trials: Option<u64>) -> Self {
        points.sort_by(|a, b| a.pfa.total_cmp(&b.pfa).then(a.pd.total_cmp(&b.pd)));
        Self { points, source, trials }
    }

    /// Largest `|pd - other.pd|` over points paired by index.
    pub fn sup_gap(&self, other: &RocCurve) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| (a.pd - b.pd).abs())
            .fold(0.0, f64::max)
    }
}

/// Closed-form curve evaluated at each false-alarm level of `grid`.
pub fn roc_analytic(detector: &AnalyticDetector, grid: &[f64]) -> Result<RocCurve> {
    detector.validate()?;
    if grid.is_empty() || grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return invalid("false-alarm grid must be non-empty and inside (0, 1)");
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    let points = g
        .into_iter()
        .map(|pfa| {
            let threshold = detector.threshold_for_pfa(pfa)?;
            Ok(RocPoint {
                threshold,
                pfa,
                pd: detector.pd(threshold),
                pd_ci: None,
                pfa_ci: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RocCurve::sorted(points, RocSource::Analytic, None))
}

/// Empirical curve from pre-computed statistics under each hypothesis.
pub fn roc_from_statistics(h0: &[f64], h1: &[f64], thresholds: &[f64]) -> Result<RocCurve> {
    if h0.is_empty() || h1.is_empty() {
        return invalid("need at least one statistic under each hypothesis");
    }
    if thresholds.is_empty() {
        return invalid("threshold grid is empty");
    }
    let count = |s: &[f64], l: f64| s.iter().filter(|&&v| v >= l).count() as u64;
    let (n0, n1) = (h0.len() as u64, h1.len() as u64);
    let points = thresholds
        .iter()
        .map(|&l| {
            let (a, d) = (count(h0, l), count(h1, l));
            RocPoint {
                threshold: l,
                pfa: a as f64 / n0 as f64,
                pd: d as f64 / n1 as f64,
                pd_ci: Some(wilson_interval(d, n1)),
                pfa_ci: Some(wilson_interval(a, n0)),
            }
        })
        .collect();
    Ok(RocCurve::sorted(points, RocSource::MonteCarlo, Some(n0.min(n1))))
}

/// Simulate `trials` frames per hypothesis and sweep the thresholds.
pub fn roc_monte_carlo(
    detector: &Detector,
    frame: &FrameSpec,
    thresholds: &[f64],
    trials: u64,
    seeds: &SeedTree,
) -> Result<RocCurve> {
    if trials < 1 {
        return invalid("need at least one trial");
    }
    let h0 = simulate_statistics(detector, frame, Hypothesis::Idle, trials, seeds)?;
    let h1 = simulate_statistics(detector, frame, Hypothesis::Occupied, trials, seeds)?;
    roc_from_statistics(&h0, &h1, thresholds)
}

//! Sensing-time and cooperating-user optimization of frame throughput.

use serde::{Deserialize, Serialize};

use crate::coop::{binomial_tail, invert_binomial_tail};
use crate::error::{invalid, Error, Result};
use crate::perf::throughput::{frame_throughput, ThroughputModel};
use crate::sbdetect::{AnalyticDetector, DetectorKind, EnergyLaw, ThresholdPolicy};

const GRID: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Throughput as a function of sensing time `tau`, with the detector
/// probabilities recomputed from `N = tau f_s` under `policy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingTradeoff {
    /// Frame length, sample rate, priors, rates and `l` come from here; its
    /// own `pfa`, `pd` and `sensing_s` are overwritten.
    pub model: ThroughputModel,
    pub gamma: f64,
    pub policy: ThresholdPolicy,
    #[serde(default = "energy")]
    pub detector: DetectorKind,
    #[serde(default)]
    pub law: EnergyLaw,
    /// Reject sensing times whose (fused) false-alarm rate exceeds this.
    #[serde(default)]
    pub pfa_cap: Option<f64>,
}

fn energy() -> DetectorKind {
    DetectorKind::Energy
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauOptimum {
    pub tau: f64,
    pub c: f64,
    pub pd: f64,
    pub pfa: f64,
    /// Fusion vote threshold (1 for a single user).
    pub k: usize,
}

impl SensingTradeoff {
    pub fn new(model: ThroughputModel, gamma: f64, policy: ThresholdPolicy) -> Self {
        Self {
            model,
            gamma,
            policy,
            detector: DetectorKind::Energy,
            law: EnergyLaw::Clt,
            pfa_cap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if !matches!(self.detector, DetectorKind::Energy | DetectorKind::Coherent) {
            return invalid("sensing-time tradeoff needs the energy or coherent detector");
        }
        if !(self.gamma >= 0.0) {
            return invalid("snr must be non-negative");
        }
        let mut m = self.model.clone();
        m.sensing_s = 0.5 * m.frame_s;
        m.validate()
    }

    fn analytic(&self, n: f64) -> AnalyticDetector {
        let base = match self.detector {
            DetectorKind::Coherent => AnalyticDetector::coherent(n, self.gamma),
            _ => AnalyticDetector::energy(n, self.gamma),
        };
        base.with_law(self.law).with_noise_var(self.model.noise_var)
    }

    /// Per-user `(P_FA, P_D)` at sensing time `tau`.
    pub fn operating_point(&self, tau: f64) -> Result<(f64, f64)> {
        self.analytic(tau * self.model.sample_rate_hz).operating_point(self.policy)
    }

    /// Fused `(Q_FA, Q_D)` for `total` users and a `k`-of-`total` rule; the
    /// target levels of the policy apply to the fused probabilities.
    pub fn fused_point(&self, tau: f64, total: usize, k: usize) -> Result<(f64, f64)> {
        if total == 1 && k == 1 {
            return self.operating_point(tau);
        }
        let det = self.analytic(tau * self.model.sample_rate_hz);
        let lambda = match self.policy {
            ThresholdPolicy::Fixed(l) => l,
            ThresholdPolicy::TargetPfa(a) => det.threshold_for_pfa(invert_binomial_tail(a, total, k)?)?,
            ThresholdPolicy::TargetPd(b) => det.threshold_for_pd(invert_binomial_tail(b, total, k)?)?,
        };
        Ok((
            binomial_tail(&det.pfa(lambda), total, k),
            binomial_tail(&det.pd(lambda), total, k),
        ))
    }

    fn throughput_at(&self, tau: f64, pfa: f64, pd: f64) -> Result<f64> {
        let mut m = self.model.clone();
        m.sensing_s = tau;
        let bands = m.num_bands();
        m.pfa = vec![pfa; bands];
        m.pd = vec![pd; bands];
        frame_throughput(&m)
    }

    /// `C(tau)` for a single user, with `(pd, pfa)`.
    pub fn evaluate(&self, tau: f64) -> Result<TauOptimum> {
        self.evaluate_fused(tau, 1, 1)
    }

    pub fn evaluate_fused(&self, tau: f64, total: usize, k: usize) -> Result<TauOptimum> {
        if !(tau > 0.0 && tau < self.model.frame_s) {
            return invalid("sensing time must satisfy 0 < tau < T");
        }
        let (pfa, pd) = self.fused_point(tau, total, k)?;
        Ok(TauOptimum {
            tau,
            c: self.throughput_at(tau, pfa, pd)?,
            pd,
            pfa,
            k,
        })
    }

    /// The coarse search grid `tau_i = T i / 201`, `i = 1..=200`.
    pub fn grid(&self) -> Vec<f64> {
        let t = self.model.frame_s;
        (1..=GRID).map(|i| t * i as f64 / (GRID + 1) as f64).collect()
    }

    fn feasible(&self, p: &TauOptimum) -> bool {
        self.pfa_cap.is_none_or(|cap| p.pfa <= cap)
    }

    fn score(&self, tau: f64, total: usize, k: usize) -> Option<TauOptimum> {
        self.evaluate_fused(tau, total, k).ok().filter(|p| self.feasible(p))
    }
}

/// Grid search followed by golden-section refinement around the best grid point.
fn optimize(t: &SensingTradeoff, total: usize, k: usize) -> Result<TauOptimum> {
    t.validate()?;
    let grid = t.grid();
    let scored: Vec<Option<TauOptimum>> = grid.iter().map(|&tau| t.score(tau, total, k)).collect();
    let (best_i, best) = scored
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|p| (i, p)))
        .max_by(|a, b| a.1.c.total_cmp(&b.1.c))
        .ok_or_else(|| Error::Infeasible("no sensing time satisfies the constraints".into()))?;
    let mut lo = grid[best_i.saturating_sub(1)];
    let mut hi = grid[(best_i + 1).min(grid.len() - 1)];
    let value = |tau: f64| t.score(tau, total, k).map_or(f64::NEG_INFINITY, |p| p.c);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (value(x1), value(x2));
    for _ in 0..100 {
        if hi - lo <= 1e-12 * t.model.frame_s {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = value(x1);
        }
    }
    let refined = t.score(0.5 * (lo + hi), total, k);
    Ok(match refined {
        Some(p) if p.c >= best.c => p,
        _ => best,
    })
}

/// Best sensing time for one user.
pub fn optimize_tau(t: &SensingTradeoff) -> Result<TauOptimum> {
    optimize(t, 1, 1)
}

/// Best sensing time for `total` users under a `k`-of-`total` rule.
pub fn optimize_tau_fused(t: &SensingTradeoff, total: usize, k: usize) -> Result<TauOptimum> {
    if k < 1 || k > total {
        return invalid(format!("need 1 <= k <= K (k={k}, K={total})"));
    }
    optimize(t, total, k)
}

/// Jointly best `(tau, k)` over every `k`-of-`total` rule.
pub fn optimize_tau_k(t: &SensingTradeoff, total: usize) -> Result<TauOptimum> {
    if total < 1 {
        return invalid("need at least one user");
    }
    let mut best: Option<TauOptimum> = None;
    let mut last_err = None;
    for k in 1..=total {
        match optimize(t, total, k) {
            Ok(p) if best.is_none_or(|b| p.c > b.c) => best = Some(p),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Infeasible("no feasible (tau, k)".into())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig12(gamma: f64, beta: f64) -> SensingTradeoff {
        SensingTradeoff::new(
            ThroughputModel::identical(10, 0.7, 0.1, 0.9),
            gamma,
            ThresholdPolicy::TargetPd(beta),
        )
    }

    fn grid_best(t: &SensingTradeoff, total: usize, k: usize) -> TauOptimum {
        t.grid()
            .iter()
            .filter_map(|&tau| t.score(tau, total, k))
            .max_by(|a, b| a.c.total_cmp(&b.c))
            .unwrap()
    }

    #[test]
    fn throughput_has_interior_maximum() {
        let t = fig12(0.1, 0.9);
        let grid = t.grid();
        let c: Vec<f64> = grid.iter().map(|&tau| t.evaluate(tau).unwrap().c).collect();
        let i = (0..c.len()).max_by(|&a, &b| c[a].total_cmp(&c[b])).unwrap();
        assert!(i > 0 && i < c.len() - 1, "argmax at {i}");
        assert!(c[..=i].windows(2).all(|w| w[1] >= w[0]));
        assert!(c[i..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn detection_grows_with_sensing_time_at_fixed_false_alarm() {
        let t = SensingTradeoff {
            policy: ThresholdPolicy::TargetPfa(0.1),
            ..fig12(0.1, 0.9)
        };
        let pd: Vec<f64> = t.grid().iter().map(|&tau| t.evaluate(tau).unwrap().pd).collect();
        assert!(pd.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn optimum_beats_grid() {
        for gamma in [0.05, 0.1, 0.3] {
            let t = fig12(gamma, 0.9);
            let opt = optimize_tau(&t).unwrap();
            let g = grid_best(&t, 1, 1);
            assert!(opt.c >= g.c - 1e-6 * g.c);
            assert!((opt.tau - g.tau).abs() <= t.model.frame_s / 201.0 + 1e-15);
            assert!((opt.pd - 0.9).abs() < 1e-9);
        }
    }

    #[test]
    fn higher_snr_needs_less_time() {
        let weak = optimize_tau(&fig12(0.1, 0.9)).unwrap();
        let strong = optimize_tau(&fig12(10f64.powf(-0.5), 0.9)).unwrap();
        assert!(strong.tau <= weak.tau, "{} > {}", strong.tau, weak.tau);
    }

    #[test]
    fn vanishing_target_pushes_to_grid_minimum() {
        let t = fig12(0.1, 1e-9);
        let opt = optimize_tau(&t).unwrap();
        assert!(opt.tau <= t.grid()[1], "{}", opt.tau);
    }

    #[test]
    fn single_user_joint_search_reduces() {
        let t = fig12(0.1, 0.9);
        assert_eq!(optimize_tau_k(&t, 1).unwrap(), optimize_tau(&t).unwrap());
    }

    #[test]
    fn more_users_shorten_sensing() {
        let t = fig12(0.1, 0.9);
        let two = optimize_tau_fused(&t, 2, 1).unwrap();
        let eight = optimize_tau_fused(&t, 8, 1).unwrap();
        assert!(eight.tau <= two.tau, "{} > {}", eight.tau, two.tau);
    }

    #[test]
    fn joint_optimum_matches_grid_oracle() {
        let total = 20;
        let t = fig12(0.1, 0.9);
        let opt = optimize_tau_k(&t, total).unwrap();
        let oracle = (1..=total)
            .map(|k| grid_best(&t, total, k))
            .max_by(|a, b| a.c.total_cmp(&b.c))
            .unwrap();
        assert_eq!(opt.k, oracle.k);
        assert!(opt.c >= oracle.c - 1e-6 * oracle.c);
        assert!((opt.tau - oracle.tau).abs() <= t.model.frame_s / 201.0 + 1e-15);
    }

    #[test]
    fn false_alarm_cap_can_make_it_infeasible() {
        let t = SensingTradeoff {
            pfa_cap: Some(1e-12),
            ..fig12(0.001, 0.9)
        };
        assert!(matches!(optimize_tau(&t), Err(Error::Infeasible(_))));
    }
}

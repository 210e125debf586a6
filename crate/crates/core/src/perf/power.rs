//! Water-filling power allocation and power/interference constraint checks.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaterfillMode {
    /// Allocate over every candidate band.
    #[default]
    AvgPower,
    /// Allocate only over bands the latest sensing round judged idle.
    PeakPower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub powers: Vec<f64>,
    /// Water level `mu`.
    pub level: f64,
}

/// `P_m = (mu - sigma^2 / g_m)^+` with `sum P_m = budget`.
///
/// `idle` is required in peak-power mode and marks the bands open to the
/// secondary user.
pub fn waterfill(
    gains: &[f64],
    noise_var: f64,
    budget: f64,
    mode: WaterfillMode,
    idle: Option<&[bool]>,
) -> Result<Allocation> {
    if gains.is_empty() {
        return invalid("water-filling needs at least one band");
    }
    if gains.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
        return invalid("gains must be positive and finite");
    }
    if !(noise_var > 0.0) || !(budget > 0.0) || !budget.is_finite() {
        return invalid("noise variance and budget must be positive");
    }
    let open: Vec<bool> = match (mode, idle) {
        (WaterfillMode::AvgPower, _) => vec![true; gains.len()],
        (WaterfillMode::PeakPower, Some(d)) => {
            ensure_len(gains.len(), d.len())?;
            d.to_vec()
        }
        (WaterfillMode::PeakPower, None) => return invalid("peak-power mode needs the sensing decision map"),
    };
    let mut floors: Vec<(usize, f64)> = (0..gains.len())
        .filter(|&m| open[m])
        .map(|m| (m, noise_var / gains[m]))
        .collect();
    if floors.is_empty() {
        return Err(Error::Infeasible("no band is open for allocation".into()));
    }
    floors.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut level = budget + floors[0].1;
    let mut acc = 0.0;
    for (k, &(_, f)) in floors.iter().enumerate() {
        acc += f;
        let mu = (budget + acc) / (k + 1) as f64;
        if mu <= f {
            break;
        }
        level = mu;
    }
    let mut powers = vec![0.0; gains.len()];
    for &(m, f) in &floors {
        powers[m] = (level - f).max(0.0);
    }
    Ok(Allocation { powers, level })
}

/// Bounds on transmit power and on the interference reaching each band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConstraintSet {
    pub avg_power: f64,
    pub peak_power: f64,
    pub avg_interference: f64,
    pub peak_interference: f64,
    /// `K^(m)`: band `m` is shared by the next `K^(m)` users in index order.
    #[serde(default)]
    pub users_per_band: Vec<usize>,
}

impl PowerConstraintSet {
    pub fn validate(&self) -> Result<()> {
        let b = [self.avg_power, self.peak_power, self.avg_interference, self.peak_interference];
        if b.iter().any(|v| !(*v >= 0.0)) {
            return invalid("constraint bounds must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    /// Worst observed value of the constrained quantity.
    pub value: f64,
    pub bound: f64,
    /// Failing realizations (0 or 1 for average constraints).
    pub violations: usize,
    /// `bound - value`; negative when violated.
    pub margin: f64,
}

impl ConstraintCheck {
    fn new(values: &[f64], bound: f64) -> Self {
        let tol = 1e-12 * bound.abs().max(1.0);
        let value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
        Self {
            value,
            bound,
            violations: values.iter().filter(|&&v| v > bound + tol).count(),
            margin: bound - value,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub avg_power: ConstraintCheck,
    pub peak_power: ConstraintCheck,
    pub avg_interference: Vec<ConstraintCheck>,
    pub peak_interference: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn all_passed(&self) -> bool {
        self.avg_power.passed()
            && self.peak_power.passed()
            && self.avg_interference.iter().all(ConstraintCheck::passed)
            && self.peak_interference.iter().all(ConstraintCheck::passed)
    }
}

/// Evaluate `draws[t][i]`, the power of user `i` in realization `t`, against
/// the average (sample mean) and peak (per realization) bounds.
pub fn check_constraints(draws: &[Vec<f64>], set: &PowerConstraintSet) -> Result<ConstraintReport> {
    set.validate()?;
    if draws.is_empty() {
        return invalid("no power realizations supplied");
    }
    let users = draws[0].len();
    for d in draws {
        ensure_len(users, d.len())?;
    }
    let grouped: usize = set.users_per_band.iter().sum();
    if grouped > users {
        return Err(Error::DimensionMismatch {
            expected: users,
            got: grouped,
        });
    }
    let t = draws.len() as f64;
    let sum = |d: &Vec<f64>, r: std::ops::Range<usize>| d[r].iter().sum::<f64>();
    let mean_sum = |r: std::ops::Range<usize>| draws.iter().map(|d| sum(d, r.clone())).sum::<f64>() / t;

    let totals: Vec<f64> = draws.iter().map(|d| sum(d, 0..users)).collect();
    let avg_power = ConstraintCheck::new(&[mean_sum(0..users)], set.avg_power);
    let peak_power = ConstraintCheck::new(&totals, set.peak_power);

    let mut avg_interference = Vec::new();
    let mut peak_interference = Vec::new();
    let mut start = 0;
    for &k in &set.users_per_band {
        let r = start..start + k;
        avg_interference.push(ConstraintCheck::new(&[mean_sum(r.clone())], set.avg_interference));
        let per: Vec<f64> = draws.iter().map(|d| sum(d, r.clone())).collect();
        peak_interference.push(ConstraintCheck::new(&per, set.peak_interference));
        start += k;
    }
    Ok(ConstraintReport {
        avg_power,
        peak_power,
        avg_interference,
        peak_interference,
    })
}

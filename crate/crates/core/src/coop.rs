//! Cooperative fusion of several secondary users and band assignment.

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, invalid, Error, Result};
use crate::mbdetect::MultibandDecision;
use crate::sbdetect::{decide, Detector};
use crate::scenario::{Hypothesis, ReceivedFrame};

/// Named `k`-out-of-`K` voting rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HardRule {
    Or,
    And,
    Majority,
    KOfK(usize),
}

impl HardRule {
    /// Vote threshold for `total` reporting users.
    pub fn k(self, total: usize) -> usize {
        match self {
            HardRule::Or => 1,
            HardRule::And => total,
            HardRule::Majority => total.div_ceil(2),
            HardRule::KOfK(k) => k,
        }
    }

    pub fn name(self) -> String {
        match self {
            HardRule::Or => "or".into(),
            HardRule::And => "and".into(),
            HardRule::Majority => "majority".into(),
            HardRule::KOfK(k) => format!("{k}-of-k"),
        }
    }
}

/// Soft-combining weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SoftWeights {
    /// Equal gain: every weight 1.
    Egc,
    /// Maximal ratio: weights proportional to per-user SNR, summing to 1.
    Mrc { snr: Vec<f64> },
    Custom { weights: Vec<f64> },
}

impl SoftWeights {
    pub fn resolve(&self, k: usize) -> Result<Vec<f64>> {
        let w = match self {
            SoftWeights::Egc => vec![1.0; k],
            SoftWeights::Mrc { snr } => {
                let total: f64 = snr.iter().sum();
                if !(total > 0.0) {
                    return invalid("mrc weights need a positive total snr");
                }
                snr.iter().map(|g| g / total).collect()
            }
            SoftWeights::Custom { weights } => weights.clone(),
        };
        ensure_len(k, w.len())?;
        if w.iter().any(|v| !(*v >= 0.0)) || w.iter().all(|v| *v == 0.0) {
            return invalid("weights must be non-negative and not all zero");
        }
        Ok(w)
    }
}

/// Fusion applied to the users covering one band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FusionRule {
    Hard { rule: HardRule },
    Soft { weights: SoftWeights, threshold: f64 },
    SoftenedHard { spread: f64 },
}

/// H1 iff at least `k` users report 1.
pub fn hard_combine(decisions: &[bool], k: usize) -> Result<Hypothesis> {
    if k < 1 || k > decisions.len() {
        return invalid(format!("need 1 <= k <= K (k={k}, K={})", decisions.len()));
    }
    Ok(Hypothesis::from_occupied(decisions.iter().filter(|d| **d).count() >= k))
}

fn binomial_row<T: Num + Clone>(n: usize) -> Vec<T> {
    let mut row = vec![T::one()];
    for _ in 0..n {
        let mut next = vec![T::one(); row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1].clone() + row[i].clone();
        }
        row = next;
    }
    row
}

fn pow<T: Num + Clone>(x: &T, e: usize) -> T {
    (0..e).fold(T::one(), |acc, _| acc * x.clone())
}

/// `sum_{q=k}^{K} C(K, q) p^q (1 - p)^(K - q)` in any numeric type.
pub fn binomial_tail<T: Num + Clone>(p: &T, total: usize, k: usize) -> T {
    let c = binomial_row::<T>(total);
    let not_p = T::one() - p.clone();
    let term = |q: usize| c[q].clone() * pow(p, q) * pow(&not_p, total - q);
    // Sum the shorter side so that floating tails near 1 keep their precision.
    if 2 * k > total {
        (k..=total).fold(T::zero(), |acc, q| acc + term(q))
    } else {
        (0..k).fold(T::one(), |acc, q| acc - term(q))
    }
}

/// Probability that at least `k` of independent users with individual
/// probabilities `p` report 1, by exhaustive enumeration of all `2^K` vectors.
pub fn enumerate_tail<T: Num + Clone>(p: &[T], k: usize) -> T {
    let n = p.len();
    assert!(n < 32, "enumeration limited to fewer than 32 users");
    let mut total = T::zero();
    for state in 0u32..(1u32 << n) {
        if (state.count_ones() as usize) < k {
            continue;
        }
        let prob = (0..n).fold(T::one(), |acc, i| {
            if state >> i & 1 == 1 {
                acc * p[i].clone()
            } else {
                acc * (T::one() - p[i].clone())
            }
        });
        total = total + prob;
    }
    total
}

/// Same tail as [`enumerate_tail`] for heterogeneous users by the
/// Poisson-binomial recursion.
pub fn poisson_binomial_tail(p: &[f64], k: usize) -> f64 {
    let mut dist = vec![1.0];
    for &pi in p {
        let mut next = vec![0.0; dist.len() + 1];
        for (j, &d) in dist.iter().enumerate() {
            next[j] += d * (1.0 - pi);
            next[j + 1] += d * pi;
        }
        dist = next;
    }
    dist.iter().skip(k).sum()
}

/// Fused `(Q_D, Q_FA)` for `total` identical users under a `k`-of-`total` rule.
pub fn fused_probabilities(p_d: f64, p_fa: f64, total: usize, k: usize) -> Result<(f64, f64)> {
    if k < 1 || k > total {
        return invalid(format!("need 1 <= k <= K (k={k}, K={total})"));
    }
    if !(0.0..=1.0).contains(&p_d) || !(0.0..=1.0).contains(&p_fa) {
        return invalid("per-user probabilities must lie in [0, 1]");
    }
    Ok((binomial_tail(&p_d, total, k), binomial_tail(&p_fa, total, k)))
}

/// Per-user probability `p` with `binomial_tail(p, total, k) = target`.
pub fn invert_binomial_tail(target: f64, total: usize, k: usize) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::UnattainableTarget(target));
    }
    if k < 1 || k > total {
        return invalid(format!("need 1 <= k <= K (k={k}, K={total})"));
    }
    if total == 1 {
        return Ok(target);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binomial_tail(&mid, total, k) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `sum c_k T_k`.
pub fn soft_combine(stats: &[f64], weights: &SoftWeights) -> Result<f64> {
    let w = weights.resolve(stats.len())?;
    Ok(stats.iter().zip(&w).map(|(t, c)| t * c).sum())
}

/// 2-bit region index: 0 strong-0, 1 weak-0, 2 weak-1, 3 strong-1, with cut
/// points `lambda - spread`, `lambda`, `lambda + spread`.
pub fn softened_hard_quantize(stat: f64, lambda: f64, spread: f64) -> Result<u8> {
    if !(spread > 0.0) {
        return invalid("spread must be positive");
    }
    Ok(if stat < lambda - spread {
        0
    } else if stat < lambda {
        1
    } else if stat < lambda + spread {
        2
    } else {
        3
    })
}

/// H1 iff the summed region scores reach `1.5 K`.
pub fn softened_hard_combine(symbols: &[u8]) -> Result<Hypothesis> {
    if symbols.is_empty() {
        return invalid("no symbols to combine");
    }
    if symbols.iter().any(|&s| s > 3) {
        return invalid("2-bit symbols must lie in 0..=3");
    }
    let sum: u32 = symbols.iter().map(|&s| s as u32).sum();
    Ok(Hypothesis::from_occupied(2 * sum >= 3 * symbols.len() as u32))
}

/// Fused probability of the 2-bit rule for `total` identical users whose
/// symbol probabilities are `levels[0..4]`.
pub fn softened_hard_probability(levels: [f64; 4], total: usize) -> f64 {
    let mut dist = vec![1.0];
    for _ in 0..total {
        let mut next = vec![0.0; dist.len() + 3];
        for (s, &d) in dist.iter().enumerate() {
            for (j, &p) in levels.iter().enumerate() {
                next[s + j] += d * p;
            }
        }
        dist = next;
    }
    dist.iter()
        .enumerate()
        .filter(|(s, _)| 2 * s >= 3 * total)
        .map(|(_, d)| d)
        .sum()
}

/// `K x M` sensing assignment: `cells[i][m]` is true iff user `i` senses band `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMatrix {
    pub cells: Vec<Vec<bool>>,
}

impl AssignmentMatrix {
    pub fn num_users(&self) -> usize {
        self.cells.len()
    }

    pub fn num_bands(&self) -> usize {
        self.cells.first().map_or(0, |r| r.len())
    }

    /// Column sum `d_m`.
    pub fn diversity(&self, band: usize) -> usize {
        self.cells.iter().filter(|r| r[band]).count()
    }

    /// Row sum: bands sensed by `user`.
    pub fn load(&self, user: usize) -> usize {
        self.cells[user].iter().filter(|c| **c).count()
    }

    pub fn users_of(&self, band: usize) -> Vec<usize> {
        (0..self.num_users()).filter(|&i| self.cells[i][band]).collect()
    }

    /// Every band is sensed by at least one user.
    pub fn validate(&self) -> Result<()> {
        let m = self.num_bands();
        if m == 0 || self.cells.iter().any(|r| r.len() != m) {
            return invalid("assignment must be a non-empty rectangular matrix");
        }
        if let Some(b) = (0..m).find(|&b| self.diversity(b) == 0) {
            return Err(Error::Infeasible(format!("band {b} is not sensed by any user")));
        }
        Ok(())
    }

    fn from_diversities(users: usize, diversity: &[usize]) -> Self {
        let mut cells = vec![vec![false; diversity.len()]; users];
        let mut cursor = 0;
        for (m, &d) in diversity.iter().enumerate() {
            for r in 0..d {
                cells[(cursor + r) % users][m] = true;
            }
            cursor = (cursor + d) % users;
        }
        Self { cells }
    }
}

/// Round-robin assignment giving every band diversity `d`: band `m` goes to
/// users `(m d + r) mod K` for `r < d`.
pub fn assign_uniform(users: usize, bands: usize, d: usize) -> Result<AssignmentMatrix> {
    if users < 1 || bands < 1 {
        return invalid("need at least one user and one band");
    }
    if d < 1 || d > users {
        return Err(Error::Infeasible(format!("diversity {d} outside 1..={users}")));
    }
    Ok(AssignmentMatrix::from_diversities(users, &vec![d; bands]))
}

/// Per-band diversities proportional to `priorities` with largest-remainder
/// rounding, each in `1..=K`, summing to `budget`.
pub fn priority_diversities(users: usize, priorities: &[f64], budget: usize) -> Result<Vec<usize>> {
    let m = priorities.len();
    if m == 0 || users == 0 {
        return invalid("need at least one user and one band");
    }
    if priorities.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return invalid("priorities must be positive");
    }
    if budget < m {
        return Err(Error::Infeasible(format!("budget {budget} cannot cover {m} bands")));
    }
    if budget > users * m {
        return Err(Error::Infeasible(format!(
            "budget {budget} exceeds K M = {}",
            users * m
        )));
    }
    let total: f64 = priorities.iter().sum();
    let quota: Vec<f64> = priorities.iter().map(|w| budget as f64 * w / total).collect();
    let mut d: Vec<usize> = quota.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let ra = quota[a] - quota[a].floor();
        let rb = quota[b] - quota[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = d.iter().sum();
    for &i in order.iter().take(budget - assigned) {
        d[i] += 1;
    }
    // Coverage floor and user ceiling, then restore the budget.
    for v in d.iter_mut() {
        *v = (*v).clamp(1, users);
    }
    let mut sum: usize = d.iter().sum();
    while sum > budget {
        let i = (0..m)
            .filter(|&i| d[i] > 1)
            .max_by(|&a, &b| {
                (d[a] as f64 - quota[a])
                    .total_cmp(&(d[b] as f64 - quota[b]))
                    .then(b.cmp(&a))
            })
            .expect("budget >= M leaves a reducible band");
        d[i] -= 1;
        sum -= 1;
    }
    while sum < budget {
        let i = (0..m)
            .filter(|&i| d[i] < users)
            .max_by(|&a, &b| {
                (quota[a] - d[a] as f64)
                    .total_cmp(&(quota[b] - d[b] as f64))
                    .then(b.cmp(&a))
            })
            .expect("budget <= K M leaves a growable band");
        d[i] += 1;
        sum += 1;
    }
    Ok(d)
}

/// Assignment whose per-band diversity follows `priorities`.
pub fn assign_priority(users: usize, priorities: &[f64], budget: usize) -> Result<AssignmentMatrix> {
    let d = priority_diversities(users, priorities, budget)?;
    Ok(AssignmentMatrix::from_diversities(users, &d))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingCost {
    /// Nyquist rate per user (Hz).
    pub per_user: Vec<u64>,
    /// Largest per-user rate: the design cost.
    pub max: u64,
}

/// Nyquist sampling rate `2 B (bands sensed)` per user.
pub fn sampling_cost(a: &AssignmentMatrix, bandwidth_hz: u64) -> Result<SamplingCost> {
    a.validate()?;
    let per_user: Vec<u64> = (0..a.num_users())
        .map(|i| 2 * bandwidth_hz * a.load(i) as u64)
        .collect();
    let max = per_user.iter().copied().max().unwrap_or(0);
    Ok(SamplingCost { per_user, max })
}

/// One cooperating user: its detector and threshold.
#[derive(Debug, Clone)]
pub struct UserSensor {
    pub detector: Detector,
    pub threshold: f64,
}

/// Each user senses its assigned bands; each band fuses only its covering users.
///
/// `frames[i][m]` is what user `i` receives on band `m` (entries for unassigned
/// bands are ignored). Hard rules have `k` clipped to the band's diversity.
/// The returned `stats` hold the vote count or fused statistic per band.
pub fn cooperative_multiband_sense(
    frames: &[Vec<ReceivedFrame>],
    a: &AssignmentMatrix,
    sensors: &[UserSensor],
    fusion: &[FusionRule],
) -> Result<MultibandDecision> {
    a.validate()?;
    let (k_users, m) = (a.num_users(), a.num_bands());
    ensure_len(k_users, frames.len())?;
    ensure_len(k_users, sensors.len())?;
    ensure_len(m, fusion.len())?;
    for row in frames {
        ensure_len(m, row.len())?;
    }
    let mut decisions = Vec::with_capacity(m);
    let mut stats = Vec::with_capacity(m);
    let mut thresholds = Vec::with_capacity(m);
    for (band, rule) in fusion.iter().enumerate() {
        let users = a.users_of(band);
        let local = users
            .iter()
            .map(|&i| sensors[i].detector.statistic(&frames[i][band]).map(|s| s.value))
            .collect::<Result<Vec<_>>>()?;
        let (decision, stat, threshold) = match rule {
            FusionRule::Hard { rule } => {
                let votes: Vec<bool> = users
                    .iter()
                    .zip(&local)
                    .map(|(&i, &s)| decide(s, sensors[i].threshold).is_occupied())
                    .collect();
                let k = rule.k(users.len()).clamp(1, users.len());
                let count = votes.iter().filter(|v| **v).count();
                (hard_combine(&votes, k)?, count as f64, k as f64)
            }
            FusionRule::Soft { weights, threshold } => {
                let fused = soft_combine(&local, weights)?;
                (decide(fused, *threshold), fused, *threshold)
            }
            FusionRule::SoftenedHard { spread } => {
                let symbols = users
                    .iter()
                    .zip(&local)
                    .map(|(&i, &s)| softened_hard_quantize(s, sensors[i].threshold, *spread))
                    .collect::<Result<Vec<_>>>()?;
                let score: u32 = symbols.iter().map(|&s| s as u32).sum();
                (softened_hard_combine(&symbols)?, score as f64, 1.5 * users.len() as f64)
            }
        };
        decisions.push(Some(decision));
        stats.push(stat);
        thresholds.push(threshold);
    }
    Ok(MultibandDecision {
        decisions,
        thresholds,
        stats,
    })
}

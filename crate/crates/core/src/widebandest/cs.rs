//! Compressive wideband sensing: sub-Nyquist measurements and OMP recovery.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, invalid, Error, Result};
use crate::mbdetect::BandMap;
use crate::rng::{tag, SeedTree};
use crate::scenario::Hypothesis;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// How the `O x N` measurement matrix is built.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasurementKind {
    /// i.i.d. `N(0, 1/O)` entries.
    #[default]
    Gaussian,
    /// i.i.d. `+-1/sqrt(O)` entries.
    Bernoulli,
    /// Random chipping by a +-1 sequence, then integrate-and-dump over
    /// `N/O`-sample blocks.
    Aic,
    /// Union of sub-Nyquist uniform samplers at the given decimation rates,
    /// each with a random offset.
    Mass { rates: Vec<usize> },
    /// The first `O` time samples.
    Selector,
}

/// `Psi[n, k] = exp(j 2 pi n k / N) / sqrt(N)`.
pub fn dft_basis(n: usize) -> CMatrix {
    let norm = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |r, c| {
        let ph = 2.0 * PI * ((r * c) % n) as f64 / n as f64;
        Complex64::from_polar(norm, ph)
    })
}

/// Draw a measurement matrix. Rows are generated in order, so the first `O`
/// rows of a larger draw from the same stream coincide up to scaling.
pub fn measurement_matrix(kind: &MeasurementKind, o: usize, n: usize, rng: &mut impl Rng) -> Result<CMatrix> {
    if o == 0 || o > n {
        return invalid(format!("need 0 < O <= N (O={o}, N={n})"));
    }
    let inv = 1.0 / (o as f64).sqrt();
    let real = |v: f64| Complex64::new(v, 0.0);
    Ok(match kind {
        MeasurementKind::Gaussian => {
            let mut m = CMatrix::zeros(o, n);
            for r in 0..o {
                for c in 0..n {
                    let g: f64 = rng.sample(StandardNormal);
                    m[(r, c)] = real(g * inv);
                }
            }
            m
        }
        MeasurementKind::Bernoulli => {
            let mut m = CMatrix::zeros(o, n);
            for r in 0..o {
                for c in 0..n {
                    m[(r, c)] = real(if rng.gen::<bool>() { inv } else { -inv });
                }
            }
            m
        }
        MeasurementKind::Aic => {
            if !n.is_multiple_of(o) {
                return invalid("integrate-and-dump needs O to divide N");
            }
            let block = n / o;
            let w = 1.0 / (block as f64).sqrt();
            let mut m = CMatrix::zeros(o, n);
            for c in 0..n {
                let chip = if rng.gen::<bool>() { w } else { -w };
                m[(c / block, c)] = real(chip);
            }
            m
        }
        MeasurementKind::Mass { rates } => {
            if rates.is_empty() || rates.contains(&0) {
                return invalid("sampler rates must be positive");
            }
            let branches: Vec<Vec<usize>> = rates
                .iter()
                .map(|&d| {
                    let off = rng.gen_range(0..d);
                    (off..n).step_by(d).collect()
                })
                .collect();
            let mut picked = Vec::with_capacity(o);
            let mut seen = vec![false; n];
            let longest = branches.iter().map(Vec::len).max().unwrap_or(0);
            'outer: for r in 0..longest {
                for b in &branches {
                    if let Some(&i) = b.get(r) {
                        if !seen[i] {
                            seen[i] = true;
                            picked.push(i);
                            if picked.len() == o {
                                break 'outer;
                            }
                        }
                    }
                }
            }
            if picked.len() < o {
                return Err(Error::Infeasible(format!(
                    "samplers provide only {} distinct samples, {o} requested",
                    picked.len()
                )));
            }
            let mut m = CMatrix::zeros(o, n);
            for (r, &i) in picked.iter().enumerate() {
                m[(r, i)] = real(1.0);
            }
            m
        }
        MeasurementKind::Selector => CMatrix::from_fn(o, n, |r, c| real(if r == c { 1.0 } else { 0.0 })),
    })
}

/// `z = Phi y`.
pub fn cs_measure(y: &CVector, phi: &CMatrix) -> Result<CVector> {
    ensure_len(phi.ncols(), y.len())?;
    Ok(phi * y)
}

/// Measurement setup `z = Phi Psi s` with its sparsity level.
#[derive(Debug, Clone, PartialEq)]
pub struct CsProblem {
    pub psi: CMatrix,
    pub phi: CMatrix,
    pub sparsity: usize,
    pub z: CVector,
}

impl CsProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.psi.nrows();
        if self.psi.ncols() != n {
            return invalid("sparsity basis must be square");
        }
        ensure_len(n, self.phi.ncols())?;
        ensure_len(self.phi.nrows(), self.z.len())?;
        if self.phi.nrows() >= n {
            return invalid("compressive measurements need O < N");
        }
        let gram = self.psi.adjoint() * &self.psi;
        let off = (&gram - CMatrix::identity(n, n)).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if off > 1e-10 {
            return invalid("sparsity basis is not orthonormal");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    /// Length-`N` coefficient estimate, zero off the support.
    pub coefficients: CVector,
    /// Selected atoms in selection order.
    pub support: Vec<usize>,
    pub residual: CVector,
    pub iterations: usize,
}

fn least_squares(a: &CMatrix, support: &[usize], z: &CVector) -> Result<CVector> {
    let sub = a.select_columns(support);
    let gram = sub.adjoint() * &sub;
    let rhs = sub.adjoint() * z;
    let chol = gram
        .cholesky()
        .ok_or(Error::RankDeficient { atoms: support.len() })?;
    let diag: Vec<f64> = (0..support.len()).map(|i| chol.l_dirty()[(i, i)].re).collect();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(l, h), d| (l.min(*d), h.max(*d)));
    if !(lo > 1e-7 * hi) {
        return Err(Error::RankDeficient { atoms: support.len() });
    }
    Ok(chol.solve(&rhs))
}

/// Orthogonal matching pursuit on the dictionary `Phi Psi`.
///
/// Stops after `l_max` atoms or once `||r|| <= residual_tol ||z||`.
pub fn omp_recover(z: &CVector, phi: &CMatrix, psi: &CMatrix, l_max: usize, residual_tol: f64) -> Result<OmpResult> {
    ensure_len(phi.ncols(), psi.nrows())?;
    ensure_len(phi.nrows(), z.len())?;
    if l_max > phi.nrows() {
        return invalid(format!("L_max {l_max} exceeds O = {}", phi.nrows()));
    }
    if !(residual_tol >= 0.0) {
        return invalid("residual tolerance must be non-negative");
    }
    let a = phi * psi;
    let n = a.ncols();
    let norms: Vec<f64> = (0..n).map(|k| a.column(k).norm()).collect();
    let z_norm = z.norm();
    let mut support: Vec<usize> = Vec::new();
    let mut residual = z.clone();
    let mut coef = CVector::zeros(0);
    while support.len() < l_max && residual.norm() > residual_tol * z_norm {
        let corr = a.adjoint() * &residual;
        let pick = (0..n)
            .filter(|k| norms[*k] > 0.0 && !support.contains(k))
            .max_by(|&i, &j| (corr[i].norm() / norms[i]).total_cmp(&(corr[j].norm() / norms[j])));
        let Some(k) = pick else { break };
        support.push(k);
        coef = least_squares(&a, &support, z)?;
        residual = z - a.select_columns(&support) * &coef;
    }
    let mut coefficients = CVector::zeros(n);
    for (i, &k) in support.iter().enumerate() {
        coefficients[k] = coef[i];
    }
    Ok(OmpResult {
        coefficients,
        iterations: support.len(),
        support,
        residual,
    })
}

/// Band `m` is occupied iff `sum_{k in band m} |s_k|^2 >= power_threshold`.
pub fn cs_occupancy(s_hat: &CVector, band_map: &BandMap, power_threshold: f64) -> Result<Vec<Hypothesis>> {
    ensure_len(band_map.nfft, s_hat.len())?;
    Ok(band_map
        .bands
        .iter()
        .map(|b| {
            let p: f64 = b.clone().map(|k| s_hat[k].norm_sqr()).sum();
            Hypothesis::from_occupied(p >= power_threshold)
        })
        .collect())
}

/// `L`-sparse coefficient vector: support from a random permutation,
/// unit-to-double magnitudes with uniform phases. Smaller `L` from the same
/// stream gives a prefix of the same support and values.
pub fn sparse_coefficients(n: usize, l: usize, rng: &mut impl Rng) -> Result<(Vec<usize>, CVector)> {
    if l > n {
        return invalid("sparsity exceeds dimension");
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let values: Vec<Complex64> = (0..n)
        .map(|_| Complex64::from_polar(rng.gen_range(1.0..2.0), rng.gen_range(0.0..2.0 * PI)))
        .collect();
    let mut s = CVector::zeros(n);
    let mut support: Vec<usize> = order[..l].to_vec();
    for (i, &k) in support.iter().enumerate() {
        s[k] = values[i];
    }
    support.sort_unstable();
    Ok((support, s))
}

/// Exact support and relative coefficient error at most `1e-6`.
pub fn exact_recovery(truth: &CVector, support: &[usize], result: &OmpResult) -> bool {
    let mut got = result.support.clone();
    got.sort_unstable();
    got == support && (&result.coefficients - truth).norm() <= 1e-6 * truth.norm().max(f64::MIN_POSITIVE)
}

/// Fraction of `trials` noiseless `L`-sparse DFT-domain signals recovered
/// exactly from `O` measurements. Trial `t` reuses its matrix and signal
/// streams across `(L, O)`, so neighbouring grid points are compared on the
/// same draws.
pub fn recovery_rate(
    n: usize,
    l: usize,
    o: usize,
    kind: &MeasurementKind,
    trials: u64,
    seeds: &SeedTree,
) -> Result<f64> {
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let psi = dft_basis(n);
    let mut hits = 0u64;
    for t in 0..trials {
        let phi = measurement_matrix(kind, o, n, &mut seeds.stream(&[tag::MEASUREMENT, t]))?;
        let (support, s) = sparse_coefficients(n, l, &mut seeds.stream(&[tag::SIGNAL, t]))?;
        let z = cs_measure(&(&psi * &s), &phi)?;
        match omp_recover(&z, &phi, &psi, l.min(o), 1e-10) {
            Ok(r) if exact_recovery(&s, &support, &r) => hits += 1,
            Ok(_) | Err(Error::RankDeficient { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(hits as f64 / trials as f64)
}

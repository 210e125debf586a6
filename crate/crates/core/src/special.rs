//! Gaussian tail function, its inverse, and a few distribution helpers.

use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};

/// Gaussian tail probability `Q(t) = P(Z > t)` for a standard normal `Z`.
pub fn q(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// Inverse of [`q`]. `p` must lie strictly inside (0, 1).
pub fn q_inv(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "q_inv outside (0,1): {p}");
    let mut t = std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // Newton polish on Q(t) = p; the library inverse is good to about 1e-10.
    for _ in 0..2 {
        let density = (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density < 1e-300 {
            break;
        }
        t += (q(t) - p) / density;
    }
    t
}

/// Checked inverse used where the level comes from user input.
pub fn q_inv_checked(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(q_inv(p))
    } else {
        Err(Error::UnattainableTarget(p))
    }
}

/// Upper tail `P(G > x)` of a Gamma(shape, scale) variable.
pub fn gamma_sf(shape: f64, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(shape, x / scale)
}

/// Lower tail `P(G <= x)` of a Gamma(shape, scale) variable.
pub fn gamma_cdf(shape: f64, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(shape, x / scale)
}

/// Value `x` with `P(G > x) = p` for a Gamma(shape, scale) variable.
pub fn gamma_isf(shape: f64, scale: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::UnattainableTarget(p));
    }
    // Bracket above the mean, then bisect on the monotone tail.
    let mean = shape * scale;
    let sd = shape.sqrt() * scale;
    let mut lo = 0.0_f64;
    let mut hi = (mean + sd * (q_inv(p).max(0.0) + 10.0)).max(1.0);
    while gamma_sf(shape, scale, hi) > p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_sf(shape, scale, mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Wilson score interval at 95% confidence for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// Convert a dBW (or dB) figure to linear units.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

//! Closed-form bounds on what an eavesdropper can learn.
//!
//! "Information" here is the mean fidelity of the best polarization estimate,
//! not an entropy. Three ingredients combine:
//!
//! * [`equatorial_fidelity`]: optimal estimation fidelity from `n` identical
//!   copies of an unknown equatorial polarization,
//! * [`poisson_pmf`]: photon-number statistics of a coherent pulse,
//! * [`expected_fidelity`]: the Poisson-weighted average of the two.
//!
//! The per-pass bounds for the two photon-number-splitting strategies are
//! built from these in [`attack1_bound`] and [`attack2_bound`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::special::{ln_binomial_from, ln_factorial, ln_factorial_table};

/// Photon numbers up to this value use the shared precomputed fidelity table.
const TABLE_MAX: usize = 2048;

/// Maximal mean fidelity for estimating an equatorial polarization from `n`
/// identically prepared photons:
///
/// `1/2 + 2^-(n+1) Σ_{l=0}^{n-1} √(C(n,l) C(n,l+1))`.
///
/// Binomials are handled in log space so the series stays finite for large
/// `n` (tested to `n = 10⁴`).
pub fn equatorial_fidelity(n: u64) -> f64 {
    let n = n as usize;
    let table = ln_factorial_table(n);
    equatorial_fidelity_with(&table, n)
}

fn equatorial_fidelity_with(ln_fact: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.5;
    }
    let ln_norm = (n as f64 + 1.0) * std::f64::consts::LN_2;
    let sum: f64 = (0..n)
        .map(|l| {
            let ln_pair = ln_binomial_from(ln_fact, n, l) + ln_binomial_from(ln_fact, n, l + 1);
            (0.5 * ln_pair - ln_norm).exp()
        })
        .sum();
    0.5 + sum
}

fn fidelity_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let ln_fact = ln_factorial_table(TABLE_MAX);
        (0..=TABLE_MAX)
            .map(|n| equatorial_fidelity_with(&ln_fact, n))
            .collect()
    })
}

/// [`equatorial_fidelity`] served from a shared table for small `n`.
pub fn equatorial_fidelity_cached(n: u64) -> f64 {
    match fidelity_table().get(n as usize) {
        Some(&f) => f,
        None => equatorial_fidelity(n),
    }
}

/// `(n+1)/(n+2)`: optimal estimation fidelity when the unknown state may lie
/// anywhere on the sphere.
pub fn full_sphere_fidelity(n: u64) -> f64 {
    (n as f64 + 1.0) / (n as f64 + 2.0)
}

/// `exp(-mean) mean^n / n!`, evaluated in log space.
pub fn poisson_pmf(mean: f64, n: u64) -> f64 {
    debug_assert!(
        mean.is_finite() && mean >= 0.0,
        "poisson mean must be finite and >= 0"
    );
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-mean + n as f64 * mean.ln() - ln_factorial(n)).exp()
}

/// Last photon number kept when summing a Poisson series of the given mean.
/// The discarded tail is below 10⁻¹² for every mean of interest.
pub fn poisson_truncation(mean: f64) -> u64 {
    (mean + 20.0 * (mean + 1.0).sqrt() + 50.0).ceil() as u64
}

/// Poisson-weighted estimation fidelity `Σ_n P(n) I(n)` for a coherent pulse
/// with `mean_photons` expected photons.
pub fn expected_fidelity(mean_photons: f64) -> f64 {
    debug_assert!(mean_photons.is_finite() && mean_photons >= 0.0);
    if mean_photons == 0.0 {
        return 0.5;
    }
    (0..=poisson_truncation(mean_photons))
        .map(|n| poisson_pmf(mean_photons, n) * equatorial_fidelity_cached(n))
        .sum()
}

/// Eavesdropper information bounds at one `(η², α)` point.
///
/// `i_a2`, `i_a3` and `i_a4` are the bounds for the three transmissions (the
/// first Alice→Bob pass, the Bob→Alice return, and the final Alice→Bob pass
/// carrying the key); `i_e` is the aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoBound {
    pub eta2: f64,
    pub alpha: f64,
    pub i_a2: f64,
    pub i_a3: f64,
    pub i_a4: f64,
    pub i_e: f64,
}

fn check_point(eta2: f64, alpha: f64) -> Result<()> {
    if !(eta2.is_finite() && eta2 > 0.0 && eta2 <= 1.0) {
        return Err(invalid(format!("eta2 must lie in (0, 1], got {eta2}")));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(invalid(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }
    Ok(())
}

/// Mean photon numbers Eve collects on the three passes when she taps the
/// loss of an honest-looking channel with a beam splitter:
/// `(1−η²)α²`, `η²(1−η²)α²`, `η⁴(1−η²)α²`.
pub fn attack1_eve_means(eta2: f64, alpha: f64) -> [f64; 3] {
    let first = (1.0 - eta2) * alpha * alpha;
    [first, eta2 * first, eta2 * eta2 * first]
}

/// Mean photon number Eve collects on each pass when she takes equal shares:
/// `(1−η⁶)α²/3`.
pub fn attack2_eve_mean(eta2: f64, alpha: f64) -> f64 {
    (1.0 - eta2 * eta2 * eta2) * alpha * alpha / 3.0
}

/// Intensity tapped on the final pass under the beam-splitter attack,
/// `(1−η²)η⁴α²`; maximal at `η² = 2/3` for fixed `α`.
pub fn final_pass_tap_intensity(eta2: f64, alpha: f64) -> f64 {
    attack1_eve_means(eta2, alpha)[2]
}

/// Bound for the beam-splitter attack: each pass is scored separately and the
/// aggregate is the minimum over passes.
pub fn attack1_bound(eta2: f64, alpha: f64) -> Result<InfoBound> {
    check_point(eta2, alpha)?;
    let [m2, m3, m4] = attack1_eve_means(eta2, alpha);
    let (i_a2, i_a3, i_a4) = (
        expected_fidelity(m2),
        expected_fidelity(m3),
        expected_fidelity(m4),
    );
    Ok(InfoBound {
        eta2,
        alpha,
        i_a2,
        i_a3,
        i_a4,
        i_e: i_a2.min(i_a3).min(i_a4),
    })
}

/// Bound for the equal-extraction attack: all three passes share the same
/// value.
pub fn attack2_bound(eta2: f64, alpha: f64) -> Result<InfoBound> {
    check_point(eta2, alpha)?;
    let i = expected_fidelity(attack2_eve_mean(eta2, alpha));
    Ok(InfoBound {
        eta2,
        alpha,
        i_a2: i,
        i_a3: i,
        i_a4: i,
        i_e: i,
    })
}

//! Log-gamma and log-factorial helpers used by the fidelity series and the
//! Poisson weights.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma defined here for positive x only");
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln C(n, k)` given a precomputed table of `ln(j!)` for `j ≤ n`.
#[inline]
pub(crate) fn ln_binomial_from(table: &[f64], n: usize, k: usize) -> f64 {
    table[n] - table[k] - table[n - k]
}

/// Table of `ln(j!)` for `j = 0..=n`.
pub(crate) fn ln_factorial_table(n: usize) -> Vec<f64> {
    (0..=n as u64).map(ln_factorial).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_factorial_by_sum(n: u64) -> f64 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    }

    #[test]
    fn small_factorials_are_exact() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(2) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn matches_log_sum_oracle() {
        for n in 0..=400u64 {
            let want = ln_factorial_by_sum(n);
            let got = ln_factorial(n);
            let tol = 1e-13 * want.abs().max(1.0);
            assert!((got - want).abs() < tol, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn half_integer_gamma() {
        // Γ(1/2) = √π
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(0.25) - 3.625_609_908_221_908_f64.ln()).abs() < 1e-13);
    }
}

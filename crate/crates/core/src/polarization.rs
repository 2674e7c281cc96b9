//! Linear polarization states on the equator of the Poincaré sphere.
//!
//! Every state the protocol produces is real and equatorial, so a state is
//! carried as a single angle: `angle ↦ cos(angle)|0⟩ − sin(angle)|1⟩`.
//! Rotations add angles; overlaps depend only on angle differences.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tolerance used for angle equality and for deciding that a measurement
/// outcome is certain.
pub const ANGLE_TOLERANCE: f64 = 1e-12;

/// A polarization direction in radians, kept in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolarizationAngle(f64);

impl PolarizationAngle {
    pub const ZERO: Self = Self(0.0);
    /// The `+π/4` encoding offset (key bit 0).
    pub const PLUS_QUARTER: Self = Self(FRAC_PI_4);
    /// The `−π/4` encoding offset (key bit 1), stored canonically as `7π/4`.
    pub const MINUS_QUARTER: Self = Self(TAU - FRAC_PI_4);

    /// Canonicalizes `radians` into `[0, 2π)`.
    ///
    /// Non-finite input is a contract violation and panics in debug builds.
    pub fn new(radians: f64) -> Self {
        debug_assert!(radians.is_finite(), "non-finite polarization angle");
        Self(canonical(radians))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Encoding offset for a key bit: `+π/4` for 0, `−π/4` for 1.
    pub fn key_offset(bit: bool) -> Self {
        if bit {
            Self::MINUS_QUARTER
        } else {
            Self::PLUS_QUARTER
        }
    }

    /// Shortest distance around the circle, in `[0, π]`.
    pub fn circular_distance(self, other: Self) -> f64 {
        let d = (self.0 - other.0).abs();
        d.min(TAU - d)
    }

    pub fn approx_eq(self, other: Self) -> bool {
        self.circular_distance(other) <= ANGLE_TOLERANCE
    }

    /// Draws an angle uniformly on `[0, 2π)`.
    pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new(rng.random::<f64>() * TAU)
    }
}

impl std::ops::Add for PolarizationAngle {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.0 + rhs.0)
    }
}

impl std::ops::Sub for PolarizationAngle {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.0 - rhs.0)
    }
}

impl std::ops::Neg for PolarizationAngle {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.0)
    }
}

impl From<f64> for PolarizationAngle {
    fn from(radians: f64) -> Self {
        Self::new(radians)
    }
}

impl fmt::Display for PolarizationAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} rad", self.0)
    }
}

fn canonical(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly 2π
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// A pure single-photon polarization state on the equator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub angle: PolarizationAngle,
}

impl QubitState {
    /// `|0⟩`
    pub const ZERO: Self = Self {
        angle: PolarizationAngle::ZERO,
    };
    /// `|1⟩`
    pub const ONE: Self = Self {
        angle: PolarizationAngle(FRAC_PI_2),
    };

    pub fn new(angle: impl Into<PolarizationAngle>) -> Self {
        Self {
            angle: angle.into(),
        }
    }

    /// Rotates the polarization by `by`; rotations compose additively.
    pub fn rotate(self, by: PolarizationAngle) -> Self {
        rotate(self, by)
    }

    /// `|⟨a|b⟩|` for the two equatorial states.
    pub fn overlap(self, other: Self) -> f64 {
        (self.angle.radians() - other.angle.radians()).cos().abs()
    }
}

/// Applies the polarization rotation `Û_y(by)`.
pub fn rotate(state: QubitState, by: PolarizationAngle) -> QubitState {
    QubitState {
        angle: state.angle + by,
    }
}

/// `|⟨a|b⟩|² = cos²(a − b)`.
pub fn overlap_fidelity(a: QubitState, b: QubitState) -> f64 {
    let c = (a.angle.radians() - b.angle.radians()).cos();
    (c * c).clamp(0.0, 1.0)
}

/// Probability of outcome 0 when `state` is measured in the basis
/// `{|basis⟩, |basis + π/2⟩}`.
pub fn outcome_zero_probability(state: QubitState, basis: PolarizationAngle) -> f64 {
    overlap_fidelity(state, QubitState { angle: basis })
}

/// Projective measurement in the basis `{|basis⟩, |basis + π/2⟩}`.
///
/// Returns `false` for outcome 0 (`|basis⟩`) and `true` for outcome 1. No
/// random number is drawn when the outcome is certain to within
/// [`ANGLE_TOLERANCE`].
pub fn measure<R: Rng + ?Sized>(state: QubitState, basis: PolarizationAngle, rng: &mut R) -> bool {
    let p0 = outcome_zero_probability(state, basis);
    if p0 >= 1.0 - ANGLE_TOLERANCE {
        false
    } else if p0 <= ANGLE_TOLERANCE {
        true
    } else {
        rng.random::<f64>() >= p0
    }
}

//! Coherent-pulse model of the quantum channel.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::polarization::{
    outcome_zero_probability, PolarizationAngle, QubitState, ANGLE_TOLERANCE,
};

/// A linearly polarized pulse. All photons in it share one polarization.
///
/// For a coherent pulse `amplitude` is the real coherent amplitude α and the
/// mean photon number is α². A single-photon source starts at amplitude 1 and
/// `amplitude²` is then the probability that the photon is still present.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub amplitude: f64,
    pub angle: PolarizationAngle,
}

impl Pulse {
    pub fn new(amplitude: f64, angle: PolarizationAngle) -> Self {
        debug_assert!(amplitude.is_finite() && amplitude >= 0.0);
        Self { amplitude, angle }
    }

    pub fn mean_photons(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    pub fn state(&self) -> QubitState {
        QubitState { angle: self.angle }
    }

    pub fn rotated(self, by: PolarizationAngle) -> Self {
        Self {
            angle: self.angle + by,
            ..self
        }
    }
}

/// The three transmissions of one protocol round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pass {
    /// Alice → Bob, carrying Alice's random rotation.
    Prepare,
    /// Bob → Alice, carrying both random rotations.
    Return,
    /// Alice → Bob, carrying the encoded key bit under Bob's rotation.
    Deliver,
}

impl Pass {
    pub const ALL: [Pass; 3] = [Pass::Prepare, Pass::Return, Pass::Deliver];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Light source used by Alice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Source {
    SinglePhoton,
    Coherent { alpha: f64 },
}

impl Source {
    pub fn initial_amplitude(&self) -> f64 {
        match *self {
            Source::SinglePhoton => 1.0,
            Source::Coherent { alpha } => alpha,
        }
    }

    pub fn is_coherent(&self) -> bool {
        matches!(self, Source::Coherent { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Source::Coherent { alpha } if !(alpha.is_finite() && alpha >= 0.0) => Err(invalid(
                format!("coherent amplitude must be finite and >= 0, got {alpha}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Eavesdropping strategy attached to the channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Attack {
    #[default]
    None,
    /// Measure-and-resend on one pass, single-photon source only.
    InterceptResend { pass: Pass },
    /// Lossless channel plus a beam splitter of amplitude transmittivity η on
    /// every pass.
    PnsAttack1,
    /// Equal-share tapping that only preserves Bob's final amplitude η³α.
    PnsAttack2,
    /// Eve1 plays Bob towards Alice and Eve2 plays Alice towards Bob.
    /// `knows_s` hands the pair Bob's shuffling bit (diagnostic only).
    Impersonation { knows_s: bool },
}

impl Attack {
    /// Intercept-and-resend on the pass that carries the key.
    pub fn intercept_resend() -> Self {
        Attack::InterceptResend {
            pass: Pass::Deliver,
        }
    }

    pub fn impersonation() -> Self {
        Attack::Impersonation { knows_s: false }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Attack::None => "none",
            Attack::InterceptResend { .. } => "intercept-resend",
            Attack::PnsAttack1 => "pns1",
            Attack::PnsAttack2 => "pns2",
            Attack::Impersonation { .. } => "impersonation",
        }
    }
}

/// Per-trip amplitude efficiency, attack selection and master seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub eta: f64,
    pub attack: Attack,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(eta: f64, attack: Attack, seed: u64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self { eta, attack, seed })
    }

    /// Builds the config from the intensity efficiency η².
    pub fn from_eta2(eta2: f64, attack: Attack, seed: u64) -> Result<Self> {
        if !(eta2.is_finite() && eta2 > 0.0 && eta2 <= 1.0) {
            return Err(invalid(format!("eta2 must lie in (0, 1], got {eta2}")));
        }
        Self::new(eta2.sqrt(), attack, seed)
    }

    pub fn lossless(attack: Attack, seed: u64) -> Self {
        Self {
            eta: 1.0,
            attack,
            seed,
        }
    }

    pub fn eta2(&self) -> f64 {
        self.eta * self.eta
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "channel efficiency must lie in (0, 1], got {eta}"
        )))
    }
}

/// One lossy trip: amplitude scales by `eta`, polarization is untouched.
pub fn attenuate(p: Pulse, eta: f64) -> Result<Pulse> {
    check_eta(eta)?;
    Ok(Pulse {
        amplitude: eta * p.amplitude,
        angle: p.angle,
    })
}

/// Splits a pulse on a beam splitter of amplitude transmittivity `t`.
/// Returns `(transmitted, reflected)` with amplitudes `tα` and `√(1−t²)α`.
pub fn beam_split(p: Pulse, transmittivity: f64) -> Result<(Pulse, Pulse)> {
    if !(0.0..=1.0).contains(&transmittivity) {
        return Err(invalid(format!(
            "beam splitter transmittivity must lie in [0, 1], got {transmittivity}"
        )));
    }
    let t = transmittivity;
    let r = (1.0 - t * t).max(0.0).sqrt();
    Ok((
        Pulse::new(t * p.amplitude, p.angle),
        Pulse::new(r * p.amplitude, p.angle),
    ))
}

/// Draws the photon number of a coherent pulse, `n ~ Poisson(α²)`.
pub fn sample_photon_count<R: Rng + ?Sized>(p: &Pulse, rng: &mut R) -> u64 {
    let mean = p.mean_photons();
    if mean <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(mean).expect("finite positive Poisson mean");
    poisson.sample(rng) as u64
}

/// Number of photons that reach a detector for the given source model.
pub fn detected_photons<R: Rng + ?Sized>(source: &Source, p: &Pulse, rng: &mut R) -> u64 {
    match source {
        Source::Coherent { .. } => sample_photon_count(p, rng),
        Source::SinglePhoton => {
            let survival = p.mean_photons().min(1.0);
            if survival >= 1.0 || rng.random::<f64>() < survival {
                1
            } else {
                0
            }
        }
    }
}

/// Polarization measurement of a pulse carrying `photons` photons.
///
/// A pulse aligned with (or orthogonal to) the basis gives a certain outcome.
/// Otherwise every photon is measured on its own and the majority outcome
/// wins; ties are settled by one fair coin. Returns `true` for outcome 1.
pub fn detect<R: Rng + ?Sized>(
    state: QubitState,
    basis: PolarizationAngle,
    photons: u64,
    rng: &mut R,
) -> bool {
    debug_assert!(photons > 0, "cannot measure an empty pulse");
    let p0 = outcome_zero_probability(state, basis);
    if p0 >= 1.0 - ANGLE_TOLERANCE {
        return false;
    }
    if p0 <= ANGLE_TOLERANCE {
        return true;
    }
    let zeros = (0..photons).filter(|_| rng.random::<f64>() < p0).count() as u64;
    let ones = photons - zeros;
    match zeros.cmp(&ones) {
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Equal => rng.random_bool(0.5),
    }
}

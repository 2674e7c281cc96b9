//! Alice's and Bob's operations for the three-pass exchange.
//!
//! Basic round, for secret angles θ (Alice) and φ (Bob) and key bit k:
//!
//! 1. Alice sends `|θ⟩`.
//! 2. Bob rotates by φ and returns `|θ+φ⟩`.
//! 3. Alice undoes θ, adds `±π/4` for k and sends `|φ ± π/4⟩`.
//! 4. Bob undoes φ and measures in the `{|π/4⟩, |−π/4⟩}` basis.
//!
//! The two-pulse variant adds Bob's private shuffling bit `s` and Alice's
//! blocking factor `b`, which defeats a relay that does not know `s`.
//! Key bits are `bool`: `false` is 0 (`+π/4`), `true` is 1 (`−π/4`).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::{self, EveRecord, Link};
use crate::channel::{self, Attack, ChannelConfig, Pass, Pulse, Source};
use crate::error::{invalid, Result};
use crate::polarization::{PolarizationAngle, QubitState};
use crate::rng::PartyStreams;

/// Bob's measurement result for one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Bit(bool),
    /// Nothing reached Bob's detector; the round is thrown away.
    Discarded,
}

impl Outcome {
    pub fn bit(self) -> Option<bool> {
        match self {
            Outcome::Bit(b) => Some(b),
            Outcome::Discarded => None,
        }
    }
}

// --- party operations --------------------------------------------------------

/// Alice's first pass: `|0⟩` rotated by θ.
pub fn alice_prepare(theta: PolarizationAngle) -> QubitState {
    QubitState::ZERO.rotate(theta)
}

/// Bob's scrambling rotation on the first pass.
pub fn bob_scramble(state: QubitState, phi: PolarizationAngle) -> QubitState {
    state.rotate(phi)
}

/// Alice removes her rotation and writes the key bit.
pub fn alice_encode(state: QubitState, theta: PolarizationAngle, key_bit: bool) -> QubitState {
    state
        .rotate(-theta)
        .rotate(PolarizationAngle::key_offset(key_bit))
}

/// Bob removes his rotation before measuring.
pub fn bob_unscramble(state: QubitState, phi: PolarizationAngle) -> QubitState {
    state.rotate(-phi)
}

/// Measurement basis Bob uses in the basic protocol.
pub const BASIC_BASIS: PolarizationAngle = PolarizationAngle::PLUS_QUARTER;

/// Measurement basis Bob uses in the two-pulse protocol.
pub const TWO_PULSE_BASIS: PolarizationAngle = PolarizationAngle::ZERO;

/// Which of Alice's two pulses she lets through to Bob.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockIndex {
    First,
    Second,
}

impl BlockIndex {
    /// `b mod 2` for `b ∈ {1, 2}`.
    pub fn parity(self) -> bool {
        matches!(self, BlockIndex::First)
    }

    pub fn number(self) -> u8 {
        match self {
            BlockIndex::First => 1,
            BlockIndex::Second => 2,
        }
    }

    pub fn slot(self) -> usize {
        self.number() as usize - 1
    }

    pub fn from_number(b: u8) -> Option<Self> {
        match b {
            1 => Some(BlockIndex::First),
            2 => Some(BlockIndex::Second),
            _ => None,
        }
    }
}

/// Bob's rotation on pulse `slot` (0-based) in the two-pulse protocol:
/// `φ + (−1)^(s ⊕ slot) π/4`.
pub fn shuffle_rotation(phi: PolarizationAngle, s: bool, slot: usize) -> PolarizationAngle {
    let flip = s ^ (slot == 1);
    phi + PolarizationAngle::new(if flip { -FRAC_PI_4 } else { FRAC_PI_4 })
}

/// Alice's rotation on pulse `slot` in the two-pulse protocol:
/// `−θ_slot + (−1)^k π/4`.
pub fn two_pulse_encoding(theta: PolarizationAngle, key_bit: bool) -> PolarizationAngle {
    -theta + PolarizationAngle::key_offset(key_bit)
}

/// Pre-key outcome Bob obtains in a noiseless two-pulse round: `s ⊕ k ⊕ (b mod 2)`.
pub fn two_pulse_prekey(s: bool, key_bit: bool, b: BlockIndex) -> bool {
    s ^ key_bit ^ b.parity()
}

/// Recovers the key bit from Bob's outcome: `k = s ⊕ (b mod 2) ⊕ l`.
pub fn decode_two_pulse(s: bool, b: BlockIndex, l: bool) -> bool {
    s ^ b.parity() ^ l
}

/// The state that carries pre-key value `l` under Bob's rotation φ.
pub fn prekey_state(phi: PolarizationAngle, l: bool) -> QubitState {
    QubitState::new(phi.radians() + if l { FRAC_PI_2 } else { 0.0 })
}

// --- rounds ------------------------------------------------------------------

/// Record of one basic round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasicRound {
    pub theta: PolarizationAngle,
    pub phi: PolarizationAngle,
    pub key_bit: bool,
    /// Angles on the wire for the three passes.
    pub pass_angles: [PolarizationAngle; 3],
    /// Bob's state after undoing φ, just before measurement.
    pub bob_final: PolarizationAngle,
    /// Mean photon number arriving at the receiver of each pass.
    pub intensities: [f64; 3],
    pub photons: u64,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eve: Vec<EveRecord>,
}

/// Record of one two-pulse round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPulseRound {
    pub theta1: PolarizationAngle,
    pub theta2: PolarizationAngle,
    pub phi: PolarizationAngle,
    pub s: bool,
    pub k: bool,
    pub b: BlockIndex,
    pub pass1: [PolarizationAngle; 2],
    pub pass2: [PolarizationAngle; 2],
    pub pass3: PolarizationAngle,
    pub bob_final: PolarizationAngle,
    pub intensities: [f64; 3],
    pub photons: u64,
    /// Bob's raw measurement `l`.
    pub l: Outcome,
    /// Key bit after `k = s ⊕ b ⊕ l`.
    pub decoded: Outcome,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eve: Vec<EveRecord>,
}

/// Rejects attack/source combinations the simulator does not model.
pub(crate) fn check_setup(two_pulse: bool, source: &Source, channel: &ChannelConfig) -> Result<()> {
    source.validate()?;
    ChannelConfig::new(channel.eta, channel.attack, channel.seed)?;
    match channel.attack {
        Attack::InterceptResend { .. } if source.is_coherent() => Err(invalid(
            "intercept-resend is modeled for a single-photon source only",
        )),
        Attack::PnsAttack1 | Attack::PnsAttack2 if !source.is_coherent() => Err(invalid(
            "photon-number-splitting attacks need a coherent source",
        )),
        Attack::PnsAttack1 | Attack::PnsAttack2 if two_pulse => Err(invalid(
            "photon-number-splitting attacks are modeled for the basic protocol only",
        )),
        _ => Ok(()),
    }
}

/// Runs one basic round with explicit secrets.
pub fn run_basic_round(
    theta: PolarizationAngle,
    phi: PolarizationAngle,
    key_bit: bool,
    source: &Source,
    channel: &ChannelConfig,
    streams: &mut PartyStreams,
) -> Result<BasicRound> {
    check_setup(false, source, channel)?;
    if let Attack::Impersonation { .. } = channel.attack {
        return Ok(adversary::impersonate_basic(
            theta, phi, key_bit, source, channel, streams,
        ));
    }

    let mut link = Link::new(source, channel);
    let a0 = source.initial_amplitude();

    let psi1 = alice_prepare(theta);
    let rx1 = link.transport(Pass::Prepare, Pulse::new(a0, psi1.angle), &mut streams.eve);

    let psi2 = bob_scramble(rx1.state(), phi);
    let rx2 = link.transport(
        Pass::Return,
        Pulse::new(rx1.amplitude, psi2.angle),
        &mut streams.eve,
    );

    let psi3 = alice_encode(rx2.state(), theta, key_bit);
    let rx3 = link.transport(
        Pass::Deliver,
        Pulse::new(rx2.amplitude, psi3.angle),
        &mut streams.eve,
    );

    let psi4 = bob_unscramble(rx3.state(), phi);
    let photons = channel::detected_photons(source, &rx3, &mut streams.channel);
    let outcome = if photons == 0 {
        Outcome::Discarded
    } else {
        Outcome::Bit(channel::detect(
            psi4,
            BASIC_BASIS,
            photons,
            &mut streams.bob,
        ))
    };

    Ok(BasicRound {
        theta,
        phi,
        key_bit,
        pass_angles: [psi1.angle, psi2.angle, psi3.angle],
        bob_final: psi4.angle,
        intensities: [rx1.mean_photons(), rx2.mean_photons(), rx3.mean_photons()],
        photons,
        outcome,
        eve: link.finish(),
    })
}

/// Secrets of one two-pulse round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPulseSecrets {
    pub theta1: PolarizationAngle,
    pub theta2: PolarizationAngle,
    pub phi: PolarizationAngle,
    pub s: bool,
    pub k: bool,
    pub b: BlockIndex,
}

/// Runs one two-pulse round with explicit secrets.
pub fn run_two_pulse_round(
    secrets: TwoPulseSecrets,
    source: &Source,
    channel: &ChannelConfig,
    streams: &mut PartyStreams,
) -> Result<TwoPulseRound> {
    check_setup(true, source, channel)?;
    if let Attack::Impersonation { knows_s } = channel.attack {
        return Ok(adversary::impersonate_two_pulse(
            secrets, knows_s, source, channel, streams,
        ));
    }
    let TwoPulseSecrets {
        theta1,
        theta2,
        phi,
        s,
        k,
        b,
    } = secrets;
    let thetas = [theta1, theta2];

    let mut link = Link::new(source, channel);
    let a0 = source.initial_amplitude();

    let pass1 = thetas.map(|t| alice_prepare(t).angle);
    let rx1 =
        pass1.map(|angle| link.transport(Pass::Prepare, Pulse::new(a0, angle), &mut streams.eve));

    let pass2 = [0, 1].map(|i| rx1[i].rotated(shuffle_rotation(phi, s, i)).angle);
    let rx2 = [0, 1].map(|i| {
        link.transport(
            Pass::Return,
            Pulse::new(rx1[i].amplitude, pass2[i]),
            &mut streams.eve,
        )
    });

    // Alice encodes both pulses and lets only pulse b through.
    let slot = b.slot();
    let pass3 = rx2[slot].rotated(two_pulse_encoding(thetas[slot], k)).angle;
    let rx3 = link.transport(
        Pass::Deliver,
        Pulse::new(rx2[slot].amplitude, pass3),
        &mut streams.eve,
    );

    let bob_final = bob_unscramble(rx3.state(), phi);
    let photons = channel::detected_photons(source, &rx3, &mut streams.channel);
    let l = if photons == 0 {
        Outcome::Discarded
    } else {
        Outcome::Bit(channel::detect(
            bob_final,
            TWO_PULSE_BASIS,
            photons,
            &mut streams.bob,
        ))
    };
    let decoded = match l {
        Outcome::Bit(l) => Outcome::Bit(decode_two_pulse(s, b, l)),
        Outcome::Discarded => Outcome::Discarded,
    };

    Ok(TwoPulseRound {
        theta1,
        theta2,
        phi,
        s,
        k,
        b,
        pass1,
        pass2,
        pass3,
        bob_final: bob_final.angle,
        intensities: [
            rx1[slot].mean_photons(),
            rx2[slot].mean_photons(),
            rx3.mean_photons(),
        ],
        photons,
        l,
        decoded,
        eve: link.finish(),
    })
}

// --- key verification --------------------------------------------------------

/// One-way hash applied to packed key bits.
pub trait KeyHash {
    fn name(&self) -> &'static str;
    fn digest(&self, packed: &[u8]) -> Vec<u8>;
}

/// SHA-256, the default key hash.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sha256Hash;

impl KeyHash for Sha256Hash {
    fn name(&self) -> &'static str {
        "sha256"
    }

    fn digest(&self, packed: &[u8]) -> Vec<u8> {
        Sha256::digest(packed).to_vec()
    }
}

/// Packs bits most-significant-bit first, zero-padding the last octet.
pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &bit)| acc | ((bit as u8) << (7 - i)))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyCheck {
    pub hash_a: Vec<u8>,
    pub hash_b: Vec<u8>,
    pub verified: bool,
}

/// Hashes both keys and compares the digests.
pub fn verify_keys(k_a: &[bool], k_b: &[bool]) -> KeyCheck {
    verify_keys_with(&Sha256Hash, k_a, k_b)
}

pub fn verify_keys_with<H: KeyHash + ?Sized>(hasher: &H, k_a: &[bool], k_b: &[bool]) -> KeyCheck {
    let hash_a = hasher.digest(&pack_bits(k_a));
    let hash_b = hasher.digest(&pack_bits(k_b));
    let verified = hash_a == hash_b;
    KeyCheck {
        hash_a,
        hash_b,
        verified,
    }
}

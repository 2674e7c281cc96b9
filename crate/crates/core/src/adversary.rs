//! Eavesdropping strategies.
//!
//! * Intercept-and-resend: Eve measures one pass in a random equatorial basis
//!   and forwards the basis state she found.
//! * Photon-number splitting: Eve taps part of every pass and scores each tap
//!   by the optimal estimation fidelity for the photons she caught. Two tap
//!   schedules are modeled, see [`PnsStrategy`].
//! * Impersonation: Eve1 runs Bob's side of the protocol with Alice, Eve2 runs
//!   Alice's side with Bob, and the key is relayed between them.
//!
//! Eve's "information" is always a fidelity. No collective measurement over
//! the three taps of a round is simulated; each tap is scored on its own.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, Attack, ChannelConfig, Pass, Pulse, Source};
use crate::error::Result;
use crate::estimation::{attack1_bound, attack2_bound, equatorial_fidelity_cached, InfoBound};
use crate::polarization::{self, overlap_fidelity, PolarizationAngle, QubitState};
use crate::protocol::{
    self, BasicRound, Outcome, TwoPulseRound, TwoPulseSecrets, BASIC_BASIS, TWO_PULSE_BASIS,
};
use crate::rng::{self, PartyStreams};

/// Tap schedule for photon-number splitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PnsStrategy {
    /// Lossless line with a beam splitter of amplitude transmittivity η on
    /// every pass. Every receiver sees exactly the honest lossy intensity.
    BeamSplitter,
    /// Equal amplitude `√((1−η⁶)/3)·α` taken on every pass; only Bob's final
    /// amplitude `η³α` matches the honest channel.
    EqualShare,
}

impl PnsStrategy {
    pub fn from_attack(attack: &Attack) -> Option<Self> {
        match attack {
            Attack::PnsAttack1 => Some(PnsStrategy::BeamSplitter),
            Attack::PnsAttack2 => Some(PnsStrategy::EqualShare),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PnsStrategy::BeamSplitter => "attack1",
            PnsStrategy::EqualShare => "attack2",
        }
    }

    /// Analytic bound for this strategy at `(η², α)`.
    pub fn bound(self, eta2: f64, alpha: f64) -> Result<InfoBound> {
        match self {
            PnsStrategy::BeamSplitter => attack1_bound(eta2, alpha),
            PnsStrategy::EqualShare => attack2_bound(eta2, alpha),
        }
    }

    /// Combines the per-pass scores of one round.
    fn aggregate(self, taps: &[PassTap]) -> f64 {
        if taps.is_empty() {
            return 0.5;
        }
        match self {
            PnsStrategy::BeamSplitter => taps.iter().map(|t| t.score).fold(f64::INFINITY, f64::min),
            PnsStrategy::EqualShare => {
                taps.iter().map(|t| t.score).sum::<f64>() / taps.len() as f64
            }
        }
    }
}

/// What Eve collected on one pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassTap {
    pub pass: Pass,
    pub tapped_amplitude: f64,
    pub photons: u64,
    /// Optimal estimation fidelity for `photons` copies.
    pub score: f64,
}

/// Eve's log for one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EveRecord {
    Intercept {
        pass: Pass,
        true_angle: PolarizationAngle,
        basis: PolarizationAngle,
        estimate: PolarizationAngle,
        fidelity: f64,
    },
    Pns {
        strategy: PnsStrategy,
        taps: Vec<PassTap>,
        /// Minimum over passes for the beam-splitter schedule, mean over
        /// passes for equal shares.
        aggregate: f64,
    },
    /// Round records describe Bob's side of the wire; Alice's side is kept
    /// here.
    Impersonation {
        alice_leg: Vec<PolarizationAngle>,
        /// Key bit Eve1 read from Alice.
        eve1_key: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eve1_prekey: Option<bool>,
        /// Eve2's value for Bob's shuffling bit.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shuffle_guess: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi_estimate: Option<PolarizationAngle>,
    },
}

// --- intercept and resend ----------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterceptOutcome {
    pub forwarded: Pulse,
    pub basis: PolarizationAngle,
    pub estimate: PolarizationAngle,
    /// `cos²(estimate − true angle)`.
    pub fidelity: f64,
}

/// Measures a single-photon pulse in a uniformly random equatorial basis and
/// resends the basis state that clicked, at the same amplitude.
pub fn intercept_resend<R: Rng + ?Sized>(pulse: &Pulse, rng: &mut R) -> InterceptOutcome {
    let basis = PolarizationAngle::uniform(rng);
    intercept_resend_in_basis(pulse, basis, rng)
}

/// Intercept-and-resend with a fixed measurement basis.
pub fn intercept_resend_in_basis<R: Rng + ?Sized>(
    pulse: &Pulse,
    basis: PolarizationAngle,
    rng: &mut R,
) -> InterceptOutcome {
    let one = polarization::measure(pulse.state(), basis, rng);
    let estimate = if one {
        basis + PolarizationAngle::new(PI / 2.0)
    } else {
        basis
    };
    InterceptOutcome {
        forwarded: Pulse::new(pulse.amplitude, estimate),
        basis,
        estimate,
        fidelity: overlap_fidelity(QubitState { angle: estimate }, pulse.state()),
    }
}

// --- photon-number splitting -------------------------------------------------

/// Eve's tap on one pass. Returns the pulse that continues to the receiver.
pub fn pns_tap<R: Rng + ?Sized>(
    strategy: PnsStrategy,
    eta: f64,
    alpha: f64,
    pass: Pass,
    pulse: Pulse,
    rng: &mut R,
) -> (Pulse, PassTap) {
    let transmittivity = match strategy {
        PnsStrategy::BeamSplitter => eta,
        PnsStrategy::EqualShare => {
            let eta6 = eta.powi(6);
            let share = (1.0 - eta6) * alpha * alpha / 3.0;
            let incoming = pulse.mean_photons();
            if incoming > 0.0 {
                (1.0 - share / incoming).max(0.0).sqrt()
            } else {
                1.0
            }
        }
    };
    let (forward, reflected) =
        channel::beam_split(pulse, transmittivity.clamp(0.0, 1.0)).expect("transmittivity clamped");
    let photons = channel::sample_photon_count(&reflected, rng);
    let tap = PassTap {
        pass,
        tapped_amplitude: reflected.amplitude,
        photons,
        score: equatorial_fidelity_cached(photons),
    };
    (forward, tap)
}

/// One round of amplitude bookkeeping for a PNS attack. Returns Eve's record
/// and the amplitude that reaches Bob's detector.
pub fn pns_round<R: Rng + ?Sized>(
    strategy: PnsStrategy,
    eta: f64,
    alpha: f64,
    rng: &mut R,
) -> (EveRecord, f64) {
    let mut pulse = Pulse::new(alpha, PolarizationAngle::ZERO);
    let mut taps = Vec::with_capacity(3);
    for pass in Pass::ALL {
        let (fwd, tap) = pns_tap(strategy, eta, alpha, pass, pulse, rng);
        taps.push(tap);
        pulse = fwd;
    }
    let aggregate = strategy.aggregate(&taps);
    (
        EveRecord::Pns {
            strategy,
            taps,
            aggregate,
        },
        pulse.amplitude,
    )
}

/// Beam-splitter PNS attack over `rounds` rounds.
pub fn pns_attack1<R: Rng>(
    eta: f64,
    alpha: f64,
    rounds: u64,
    rng: &mut R,
) -> impl Iterator<Item = EveRecord> + '_ {
    (0..rounds).map(move |_| pns_round(PnsStrategy::BeamSplitter, eta, alpha, rng).0)
}

/// Equal-share PNS attack over `rounds` rounds.
pub fn pns_attack2<R: Rng>(
    eta: f64,
    alpha: f64,
    rounds: u64,
    rng: &mut R,
) -> impl Iterator<Item = EveRecord> + '_ {
    (0..rounds).map(move |_| pns_round(PnsStrategy::EqualShare, eta, alpha, rng).0)
}

/// Monte Carlo estimate of Eve's information next to the analytic bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PnsEstimate {
    pub strategy: PnsStrategy,
    pub rounds: u64,
    /// Ensemble mean of the per-pass scores.
    pub pass_means: [f64; 3],
    /// Ensemble mean of the per-round aggregates. For the beam-splitter
    /// schedule this sits below the bound, since a mean of minima is not
    /// a minimum of means.
    pub mean_round_aggregate: f64,
    /// Estimator of the aggregate bound: minimum of the pass means for the
    /// beam splitter, overall mean for equal shares.
    pub empirical: f64,
    pub analytic: InfoBound,
    pub gap: f64,
}

/// Runs `rounds` seeded PNS rounds and compares them with the analytic bound.
pub fn pns_monte_carlo(
    strategy: PnsStrategy,
    eta2: f64,
    alpha: f64,
    rounds: u64,
    seed: u64,
) -> Result<PnsEstimate> {
    let analytic = strategy.bound(eta2, alpha)?;
    let eta = eta2.sqrt();
    let mut rng = rng::stream(seed, 3);
    let mut sums = [0.0f64; 3];
    let mut aggregate_sum = 0.0;
    for _ in 0..rounds {
        if let (
            EveRecord::Pns {
                taps, aggregate, ..
            },
            _,
        ) = pns_round(strategy, eta, alpha, &mut rng)
        {
            for tap in &taps {
                sums[tap.pass.index()] += tap.score;
            }
            aggregate_sum += aggregate;
        }
    }
    let n = rounds.max(1) as f64;
    let pass_means = sums.map(|s| s / n);
    let empirical = match strategy {
        PnsStrategy::BeamSplitter => pass_means.iter().copied().fold(f64::INFINITY, f64::min),
        PnsStrategy::EqualShare => pass_means.iter().sum::<f64>() / 3.0,
    };
    Ok(PnsEstimate {
        strategy,
        rounds,
        pass_means,
        mean_round_aggregate: aggregate_sum / n,
        empirical,
        analytic,
        gap: (empirical - analytic.i_e).abs(),
    })
}

// --- channel with an eavesdropper attached ---------------------------------

/// Carries pulses across the channel for one round, applying loss and the
/// configured attack, and collects Eve's records.
pub(crate) struct Link<'a> {
    source: &'a Source,
    channel: &'a ChannelConfig,
    taps: Vec<PassTap>,
    records: Vec<EveRecord>,
}

impl<'a> Link<'a> {
    pub(crate) fn new(source: &'a Source, channel: &'a ChannelConfig) -> Self {
        Self {
            source,
            channel,
            taps: Vec::new(),
            records: Vec::new(),
        }
    }

    pub(crate) fn transport<R: Rng + ?Sized>(
        &mut self,
        pass: Pass,
        pulse: Pulse,
        eve: &mut R,
    ) -> Pulse {
        let eta = self.channel.eta;
        match self.channel.attack {
            Attack::PnsAttack1 | Attack::PnsAttack2 => {
                let strategy = PnsStrategy::from_attack(&self.channel.attack).expect("pns attack");
                let alpha = self.source.initial_amplitude();
                let (fwd, tap) = pns_tap(strategy, eta, alpha, pass, pulse, eve);
                self.taps.push(tap);
                fwd
            }
            Attack::InterceptResend { pass: target } => {
                let p = channel::attenuate(pulse, eta).expect("eta validated");
                if pass != target {
                    return p;
                }
                let out = intercept_resend(&p, eve);
                self.records.push(EveRecord::Intercept {
                    pass,
                    true_angle: p.angle,
                    basis: out.basis,
                    estimate: out.estimate,
                    fidelity: out.fidelity,
                });
                out.forwarded
            }
            Attack::None | Attack::Impersonation { .. } => {
                channel::attenuate(pulse, eta).expect("eta validated")
            }
        }
    }

    pub(crate) fn finish(mut self) -> Vec<EveRecord> {
        if let Some(strategy) = PnsStrategy::from_attack(&self.channel.attack) {
            let aggregate = strategy.aggregate(&self.taps);
            self.records.push(EveRecord::Pns {
                strategy,
                taps: self.taps,
                aggregate,
            });
        }
        self.records
    }
}

// --- impersonation -----------------------------------------------------------

/// Amplitudes the honest lossy channel would deliver on each pass.
fn honest_amplitudes(source: &Source, eta: f64) -> [f64; 3] {
    let a0 = source.initial_amplitude();
    [eta * a0, eta * eta * a0, eta * eta * eta * a0]
}

/// Measurement by an impersonator holding the pulse at full amplitude. An
/// empty pulse leaves her guessing.
fn eve_detect<R: Rng + ?Sized>(
    source: &Source,
    pulse: &Pulse,
    basis: PolarizationAngle,
    rng: &mut R,
) -> bool {
    match channel::detected_photons(source, pulse, rng) {
        0 => rng.random_bool(0.5),
        n => channel::detect(pulse.state(), basis, n, rng),
    }
}

fn bob_detect(
    source: &Source,
    pulse: &Pulse,
    phi: PolarizationAngle,
    basis: PolarizationAngle,
    streams: &mut PartyStreams,
) -> (QubitState, u64, Outcome) {
    let state = protocol::bob_unscramble(pulse.state(), phi);
    let photons = channel::detected_photons(source, pulse, &mut streams.channel);
    let outcome = if photons == 0 {
        Outcome::Discarded
    } else {
        Outcome::Bit(channel::detect(state, basis, photons, &mut streams.bob))
    };
    (state, photons, outcome)
}

/// Impersonation of both parties in the basic protocol. Eve1 picks her own
/// scrambling angle, so she reads Alice's bit exactly; Eve2 then runs the
/// honest Alice procedure with Bob using that bit.
pub(crate) fn impersonate_basic(
    theta: PolarizationAngle,
    phi: PolarizationAngle,
    key_bit: bool,
    source: &Source,
    channel: &ChannelConfig,
    streams: &mut PartyStreams,
) -> BasicRound {
    let a0 = source.initial_amplitude();
    let amps = honest_amplitudes(source, channel.eta);

    // Eve1 ↔ Alice
    let eve_phi = PolarizationAngle::uniform(&mut streams.eve);
    let a1 = protocol::alice_prepare(theta);
    let a2 = protocol::bob_scramble(a1, eve_phi);
    let a3 = protocol::alice_encode(a2, theta, key_bit);
    let at_eve1 = Pulse::new(a0, protocol::bob_unscramble(a3, eve_phi).angle);
    let eve1_key = eve_detect(source, &at_eve1, BASIC_BASIS, &mut streams.eve);

    // Eve2 ↔ Bob
    let eve_theta = PolarizationAngle::uniform(&mut streams.eve);
    let b1 = protocol::alice_prepare(eve_theta);
    let b2 = protocol::bob_scramble(b1, phi);
    let b3 = protocol::alice_encode(b2, eve_theta, eve1_key);
    let (bob_final, photons, outcome) = bob_detect(
        source,
        &Pulse::new(amps[2], b3.angle),
        phi,
        BASIC_BASIS,
        streams,
    );

    BasicRound {
        theta,
        phi,
        key_bit,
        pass_angles: [b1.angle, b2.angle, b3.angle],
        bob_final: bob_final.angle,
        intensities: amps.map(|a| a * a),
        photons,
        outcome,
        eve: vec![EveRecord::Impersonation {
            alice_leg: vec![a1.angle, a2.angle, a3.angle],
            eve1_key,
            eve1_prekey: None,
            shuffle_guess: None,
            phi_estimate: None,
        }],
    }
}

/// Signed difference `a − b` wrapped into `(−π, π]`.
fn wrapped_difference(a: PolarizationAngle, b: PolarizationAngle) -> f64 {
    let d = (a - b).radians();
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// Impersonation of both parties in the two-pulse protocol.
///
/// Eve1 runs Bob's role with Alice using her own `(φ', s')` and reads the key
/// once Alice announces `b`. Eve2 sends Bob two pulses of her own. The two
/// pulses Bob returns sit at `φ ± π/4` after Eve2 removes her angles, so
/// their midpoint gives her φ without revealing `s`. She then injects the
/// state for pre-key `l = ŝ ⊕ k ⊕ b`, where `ŝ` is her value for Bob's
/// shuffling bit: the true `s` when `knows_s`, a coin flip otherwise. A
/// wrong `ŝ` flips Bob's decoded bit.
pub(crate) fn impersonate_two_pulse(
    secrets: TwoPulseSecrets,
    knows_s: bool,
    source: &Source,
    channel: &ChannelConfig,
    streams: &mut PartyStreams,
) -> TwoPulseRound {
    let TwoPulseSecrets {
        theta1,
        theta2,
        phi,
        s,
        k,
        b,
    } = secrets;
    let a0 = source.initial_amplitude();
    let amps = honest_amplitudes(source, channel.eta);
    let slot = b.slot();

    // Eve1 ↔ Alice
    let eve_phi = PolarizationAngle::uniform(&mut streams.eve);
    let eve_s: bool = streams.eve.random();
    let alice_thetas = [theta1, theta2];
    let a1 = alice_thetas.map(|t| protocol::alice_prepare(t).angle);
    let a2 = [0, 1].map(|i| a1[i] + protocol::shuffle_rotation(eve_phi, eve_s, i));
    let a3 = a2[slot] + protocol::two_pulse_encoding(alice_thetas[slot], k);
    let at_eve1 = Pulse::new(a0, a3 - eve_phi);
    let eve1_prekey = eve_detect(source, &at_eve1, TWO_PULSE_BASIS, &mut streams.eve);
    let eve1_key = protocol::decode_two_pulse(eve_s, b, eve1_prekey);

    // Eve2 ↔ Bob
    let eve_thetas = [
        PolarizationAngle::uniform(&mut streams.eve),
        PolarizationAngle::uniform(&mut streams.eve),
    ];
    let pass1 = eve_thetas.map(|t| protocol::alice_prepare(t).angle);
    let pass2 = [0, 1].map(|i| pass1[i] + protocol::shuffle_rotation(phi, s, i));
    let x1 = pass2[0] - eve_thetas[0];
    let x2 = pass2[1] - eve_thetas[1];
    let phi_estimate = x1 - PolarizationAngle::new(wrapped_difference(x1, x2) / 2.0);
    let shuffle_guess = if knows_s { s } else { streams.eve.random() };
    let target = protocol::two_pulse_prekey(shuffle_guess, eve1_key, b);
    let pass3 = protocol::prekey_state(phi_estimate, target).angle;

    let (bob_final, photons, l) = bob_detect(
        source,
        &Pulse::new(amps[2], pass3),
        phi,
        TWO_PULSE_BASIS,
        streams,
    );
    let decoded = match l {
        Outcome::Bit(l) => Outcome::Bit(protocol::decode_two_pulse(s, b, l)),
        Outcome::Discarded => Outcome::Discarded,
    };

    let mut alice_leg = a1.to_vec();
    alice_leg.extend_from_slice(&a2);
    alice_leg.push(a3);

    TwoPulseRound {
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
        intensities: amps.map(|a| a * a),
        photons,
        l,
        decoded,
        eve: vec![EveRecord::Impersonation {
            alice_leg,
            eve1_key,
            eve1_prekey: Some(eve1_prekey),
            shuffle_guess: Some(shuffle_guess),
            phi_estimate: Some(phi_estimate),
        }],
    }
}

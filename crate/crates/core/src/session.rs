//! Full key-agreement sessions and their transcripts.
//!
//! A session repeats rounds with fresh secrets until the requested number of
//! key bits has been delivered, then compares hashes of both keys. Empty
//! rounds are retried, not skipped.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::EveRecord;
use crate::channel::{ChannelConfig, Source};
use crate::error::{invalid, Error, Result};
use crate::polarization::PolarizationAngle;
use crate::protocol::{
    self, BasicRound, BlockIndex, KeyHash, Outcome, Sha256Hash, TwoPulseRound, TwoPulseSecrets,
};
use crate::rng::PartyStreams;

/// Rounds attempted before the discard-rate ceiling is enforced.
const MIN_ATTEMPTS_BEFORE_ABORT: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Basic,
    TwoPulse,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n_bits: usize,
    pub mode: Mode,
    pub source: Source,
    pub channel: ChannelConfig,
    /// Highest tolerated fraction of discarded rounds.
    pub discard_ceiling: f64,
}

impl SessionConfig {
    pub fn new(n_bits: usize, mode: Mode, source: Source, channel: ChannelConfig) -> Self {
        Self {
            n_bits,
            mode,
            source,
            channel,
            discard_ceiling: 0.999,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Round {
    Basic(BasicRound),
    TwoPulse(TwoPulseRound),
}

impl Round {
    /// Alice's key bit.
    pub fn alice_bit(&self) -> bool {
        match self {
            Round::Basic(r) => r.key_bit,
            Round::TwoPulse(r) => r.k,
        }
    }

    /// Bob's key bit, or `None` for a discarded round.
    pub fn bob_bit(&self) -> Option<bool> {
        match self {
            Round::Basic(r) => r.outcome.bit(),
            Round::TwoPulse(r) => r.decoded.bit(),
        }
    }

    pub fn is_discarded(&self) -> bool {
        self.bob_bit().is_none()
    }

    pub fn eve(&self) -> &[EveRecord] {
        match self {
            Round::Basic(r) => &r.eve,
            Round::TwoPulse(r) => &r.eve,
        }
    }

    pub fn intensities(&self) -> [f64; 3] {
        match self {
            Round::Basic(r) => r.intensities,
            Round::TwoPulse(r) => r.intensities,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub config: SessionConfig,
    pub hash: String,
    pub rounds: Vec<Round>,
    pub alice_key: Vec<bool>,
    pub bob_key: Vec<bool>,
    pub hash_a: Vec<u8>,
    pub hash_b: Vec<u8>,
    pub verified: bool,
    pub discard_count: u64,
}

impl SessionTranscript {
    /// Fraction of key positions where Alice and Bob disagree.
    pub fn qber(&self) -> f64 {
        if self.alice_key.is_empty() {
            return 0.0;
        }
        let errors = self
            .alice_key
            .iter()
            .zip(&self.bob_key)
            .filter(|(a, b)| a != b)
            .count();
        errors as f64 / self.alice_key.len() as f64
    }

    /// Receiver-side mean photon numbers, three entries per round.
    pub fn intensity_log(&self) -> Vec<f64> {
        self.rounds.iter().flat_map(|r| r.intensities()).collect()
    }

    pub fn eve_records(&self) -> impl Iterator<Item = &EveRecord> {
        self.rounds.iter().flat_map(|r| r.eve().iter())
    }

    /// Writes the transcript as JSON lines: a session header, one line per
    /// round, and a summary.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(
            &mut w,
            &Line::Session {
                config: &self.config,
                hash: &self.hash,
            },
        )?;
        w.write_all(b"\n")?;
        for (index, round) in self.rounds.iter().enumerate() {
            serde_json::to_writer(
                &mut w,
                &Line::Round {
                    index,
                    discarded: round.is_discarded(),
                    round,
                },
            )?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(
            &mut w,
            &Line::Summary {
                key_length: self.alice_key.len(),
                discard_count: self.discard_count,
                qber: self.qber(),
                alice_key: bit_string(&self.alice_key),
                bob_key: bit_string(&self.bob_key),
                hash_a: to_hex(&self.hash_a),
                hash_b: to_hex(&self.hash_b),
                verified: self.verified,
            },
        )?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum Line<'a> {
    Session {
        config: &'a SessionConfig,
        hash: &'a str,
    },
    Round {
        index: usize,
        discarded: bool,
        #[serde(flatten)]
        round: &'a Round,
    },
    Summary {
        key_length: usize,
        discard_count: u64,
        qber: f64,
        alice_key: String,
        bob_key: String,
        hash_a: String,
        hash_b: String,
        verified: bool,
    },
}

pub fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs a session with SHA-256 key verification.
pub fn run_session(config: &SessionConfig) -> Result<SessionTranscript> {
    run_session_with_hasher(config, &Sha256Hash)
}

pub fn run_session_with_hasher<H: KeyHash + ?Sized>(
    config: &SessionConfig,
    hasher: &H,
) -> Result<SessionTranscript> {
    if config.n_bits == 0 {
        return Err(invalid("a session needs at least one key bit"));
    }
    if !(0.0..=1.0).contains(&config.discard_ceiling) {
        return Err(invalid("discard ceiling must lie in [0, 1]"));
    }
    protocol::check_setup(
        config.mode == Mode::TwoPulse,
        &config.source,
        &config.channel,
    )?;

    let mut streams = PartyStreams::new(config.channel.seed);
    let mut rounds = Vec::with_capacity(config.n_bits);
    let mut alice_key = Vec::with_capacity(config.n_bits);
    let mut bob_key = Vec::with_capacity(config.n_bits);
    let mut attempts = 0u64;
    let mut discards = 0u64;

    while alice_key.len() < config.n_bits {
        let round = next_round(config, &mut streams)?;
        attempts += 1;
        match round.bob_bit() {
            Some(bit) => {
                alice_key.push(round.alice_bit());
                bob_key.push(bit);
            }
            None => {
                discards += 1;
                if attempts >= MIN_ATTEMPTS_BEFORE_ABORT
                    && discards as f64 > config.discard_ceiling * attempts as f64
                {
                    return Err(Error::AbortedSession { attempts, discards });
                }
            }
        }
        rounds.push(round);
    }

    let check = protocol::verify_keys_with(hasher, &alice_key, &bob_key);
    Ok(SessionTranscript {
        config: *config,
        hash: hasher.name().to_string(),
        rounds,
        alice_key,
        bob_key,
        hash_a: check.hash_a,
        hash_b: check.hash_b,
        verified: check.verified,
        discard_count: discards,
    })
}

/// Draws fresh secrets from each party's own stream and runs one round.
fn next_round(config: &SessionConfig, streams: &mut PartyStreams) -> Result<Round> {
    match config.mode {
        Mode::Basic => {
            let theta = PolarizationAngle::uniform(&mut streams.alice);
            let key_bit: bool = streams.alice.random();
            let phi = PolarizationAngle::uniform(&mut streams.bob);
            protocol::run_basic_round(
                theta,
                phi,
                key_bit,
                &config.source,
                &config.channel,
                streams,
            )
            .map(Round::Basic)
        }
        Mode::TwoPulse => {
            let theta1 = PolarizationAngle::uniform(&mut streams.alice);
            let theta2 = PolarizationAngle::uniform(&mut streams.alice);
            let k: bool = streams.alice.random();
            let b = if streams.alice.random() {
                BlockIndex::First
            } else {
                BlockIndex::Second
            };
            let phi = PolarizationAngle::uniform(&mut streams.bob);
            let s: bool = streams.bob.random();
            let secrets = TwoPulseSecrets {
                theta1,
                theta2,
                phi,
                s,
                k,
                b,
            };
            protocol::run_two_pulse_round(secrets, &config.source, &config.channel, streams)
                .map(Round::TwoPulse)
        }
    }
}

/// Fraction of discarded rounds in a transcript.
pub fn discard_rate(t: &SessionTranscript) -> f64 {
    if t.rounds.is_empty() {
        0.0
    } else {
        t.discard_count as f64 / t.rounds.len() as f64
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Bit(b) => write!(f, "{}", *b as u8),
            Outcome::Discarded => f.write_str("discarded"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Attack;

    fn config(
        n: usize,
        mode: Mode,
        source: Source,
        attack: Attack,
        eta2: f64,
        seed: u64,
    ) -> SessionConfig {
        SessionConfig::new(
            n,
            mode,
            source,
            ChannelConfig::from_eta2(eta2, attack, seed).unwrap(),
        )
    }

    #[test]
    fn lossless_basic_session_verifies() {
        let t = run_session(&config(
            128,
            Mode::Basic,
            Source::SinglePhoton,
            Attack::None,
            1.0,
            1,
        ))
        .unwrap();
        assert!(t.verified);
        assert_eq!(t.alice_key, t.bob_key);
        assert_eq!(t.alice_key.len(), 128);
        assert_eq!(t.discard_count, 0);
        assert_eq!(t.hash_a, t.hash_b);
    }

    #[test]
    fn lossless_two_pulse_session_verifies() {
        let t = run_session(&config(
            256,
            Mode::TwoPulse,
            Source::SinglePhoton,
            Attack::None,
            1.0,
            2,
        ))
        .unwrap();
        assert!(t.verified);
        assert_eq!(t.qber(), 0.0);
    }

    #[test]
    fn lossy_coherent_session_retries_empty_rounds() {
        let t = run_session(&config(
            200,
            Mode::Basic,
            Source::Coherent { alpha: 1.0 },
            Attack::None,
            0.5,
            3,
        ))
        .unwrap();
        assert_eq!(t.alice_key.len(), 200);
        assert!(t.discard_count > 0);
        assert_eq!(t.rounds.len() as u64, 200 + t.discard_count);
        assert!(t.verified);
        assert_eq!(t.intensity_log().len(), 3 * t.rounds.len());
        // η³α with α = 1: Bob's final mean photon number is η⁶ = 1/8
        assert!((t.rounds[0].intensities()[2] - 0.125).abs() < 1e-12);
        // P(empty) = e^{-1/8}
        let rate = discard_rate(&t);
        assert!((rate - (-0.125f64).exp()).abs() < 0.05, "{rate}");
    }

    #[test]
    fn dead_channel_aborts() {
        let err = run_session(&config(
            8,
            Mode::Basic,
            Source::Coherent { alpha: 0.0 },
            Attack::None,
            1.0,
            4,
        ))
        .unwrap_err();
        assert!(matches!(
            err,
            Error::AbortedSession {
                attempts: 1000,
                discards: 1000
            }
        ));
    }

    #[test]
    fn zero_bits_rejected() {
        assert!(run_session(&config(
            0,
            Mode::Basic,
            Source::SinglePhoton,
            Attack::None,
            1.0,
            0
        ))
        .is_err());
    }

    #[test]
    fn seeds_reproduce_transcripts() {
        let c = config(
            64,
            Mode::TwoPulse,
            Source::Coherent { alpha: 1.5 },
            Attack::None,
            0.6,
            77,
        );
        let (a, b) = (run_session(&c).unwrap(), run_session(&c).unwrap());
        assert_eq!(a, b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_jsonl(&mut x).unwrap();
        b.write_jsonl(&mut y).unwrap();
        assert_eq!(x, y);
        let other = run_session(&SessionConfig {
            channel: ChannelConfig {
                seed: 78,
                ..c.channel
            },
            ..c
        })
        .unwrap();
        assert_ne!(a.alice_key, other.alice_key);
    }

    #[test]
    fn jsonl_layout() {
        let c = config(
            3,
            Mode::Basic,
            Source::SinglePhoton,
            Attack::intercept_resend(),
            1.0,
            5,
        );
        let t = run_session(&c).unwrap();
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<serde_json::Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0]["record"], "session");
        assert_eq!(lines[1]["record"], "round");
        assert_eq!(lines[1]["index"], 0);
        assert_eq!(lines[1]["mode"], "basic");
        assert_eq!(lines[1]["discarded"], false);
        assert!(lines[1]["pass_angles"].as_array().unwrap().len() == 3);
        assert_eq!(lines[1]["eve"][0]["kind"], "intercept");
        assert_eq!(lines[4]["record"], "summary");
        assert_eq!(lines[4]["key_length"], 3);
        assert_eq!(lines[4]["hash_a"].as_str().unwrap().len(), 64);
    }
}

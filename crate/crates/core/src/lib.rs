//! Simulator and numerical toolkit for three-pass quantum key distribution
//! with blind polarization bases.
//!
//! Alice and Bob each rotate a polarization qubit by a private random angle,
//! so no basis reconciliation is needed. The crate models the honest
//! protocol, a coherent-pulse channel, several eavesdropping strategies and
//! the closed-form bounds on what an eavesdropper can learn.

pub mod adversary;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod polarization;
pub mod protocol;
pub mod rng;
pub mod session;
pub mod special;

pub use adversary::{EveRecord, PassTap, PnsEstimate, PnsStrategy};
pub use channel::{Attack, ChannelConfig, Pass, Pulse, Source};
pub use error::{Error, Result};
pub use estimation::{
    attack1_bound, attack2_bound, equatorial_fidelity, expected_fidelity, InfoBound,
};
pub use polarization::{overlap_fidelity, PolarizationAngle, QubitState};
pub use protocol::{BasicRound, BlockIndex, Outcome, TwoPulseRound};
pub use rng::PartyStreams;
pub use session::{run_session, Mode, Round, SessionConfig, SessionTranscript};

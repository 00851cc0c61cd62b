//! Reliability-output decoding of tail-biting convolutional codes.
//!
//! The decoders return the decoded codeword together with the posterior
//! probability that it is correct and the posterior distribution over the
//! tail-biting starting state:
//!
//! ```
//! use tbrova::{channel, tailbiting, CodeSpec, InfoWord, Trellis};
//!
//! let trellis = Trellis::new(CodeSpec::rate_half_nu2(), 16).unwrap();
//! let cw = trellis.encode(&InfoWord::from_index(0xbeef, 16)).unwrap();
//! let params = channel::ChannelParams::awgn_ebn0(trellis.code(), 4.0).unwrap();
//! let y = channel::transmit(&cw, 2, &params, 7);
//! let result = tailbiting::tb_rova(&trellis, &y).unwrap();
//! assert!(result.word_correct_prob <= result.state_posterior.probs[result.start_state] + 1e-12);
//! ```

pub mod channel;
pub mod code;
pub mod counters;
pub mod error;
pub mod oracle;
pub mod sim;
pub mod tailbiting;
pub mod terminated;
pub mod trellis;

pub use channel::{BranchDensities, ChannelKind, ChannelParams, ReceivedSequence};
pub use code::{build_code, CodeSpec};
pub use counters::{Algorithm, OpCounters};
pub use error::{Error, Result};
pub use tailbiting::{DecodeResult, DecoderKind, StatePosterior};
pub use trellis::{Branch, Codeword, InfoWord, Trellis};

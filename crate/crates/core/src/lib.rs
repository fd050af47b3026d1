//! Privacy-preserving treatment recommendation and DNA matching over
//! threshold Paillier with a two-server (CP/CSP) protocol suite.

pub mod bench;
pub mod deploy;
pub mod error;
pub mod model;
pub mod net;
#[doc(hidden)]
pub mod oracle;
pub mod par;
pub mod pctd;
pub mod pgene;
pub mod pipeline;
pub mod protocols;

pub use error::{Error, Result};

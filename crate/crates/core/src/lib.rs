//! Transmit design for fading MIMO broadcast channels with statistical channel
//! knowledge at the transmitter.

pub mod baselines;
pub mod chanmodels;
pub mod error;
pub mod gradients;
pub mod harness;
pub mod linalg;
pub mod optim;
pub mod par;
pub mod rates;
pub mod verify;

pub use chanmodels::{ChannelModel, GramEnsemble, Scenario};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianPsd, C64};
pub use rates::{Design, RateReport};

pub mod analysis;
pub mod channel;
pub mod detection;
pub mod error;
pub mod modem;
pub mod nft;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};

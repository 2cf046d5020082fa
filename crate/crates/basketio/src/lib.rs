pub mod basket;
pub mod bench;
pub mod blockstore;
pub mod cli;
pub mod clock;
pub mod codec;
pub mod container;
pub mod error;
pub mod rac;
pub mod source;
pub mod synthgen;

pub use codec::{Algorithm, Codec, CodecSpec};
pub use error::{Error, Result};

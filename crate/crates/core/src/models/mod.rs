//! Built-in models.

pub mod akv;
pub mod kv;

pub use akv::{default_interference, transport_sweep, AkvModel, AkvParams, AkvRates, ChannelGammas, RandomWalk, TransportPoint};
pub use kv::{DarkDecomposition, KvModel, KvParams, KvRates};

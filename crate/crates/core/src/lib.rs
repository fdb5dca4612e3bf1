pub mod adversary;
pub mod analysis;
pub mod crypto;
pub mod protocol;
pub mod sim;
pub mod stats;

pub mod adversary;
pub mod covering;
pub mod ecc;
pub mod harness;
pub mod net;
pub mod sim;
pub mod store;
pub mod task;

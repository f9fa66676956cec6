pub mod codec;
pub mod evaltok;
pub mod metrics;
pub mod train;

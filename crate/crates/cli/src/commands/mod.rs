pub mod bench;
pub mod corpus;
pub mod enc;
pub mod mask;
pub mod sched;
pub mod tok;
pub mod train;

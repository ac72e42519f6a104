pub mod graph;
pub mod instance;
pub mod optimizer;
pub mod protocol;
pub mod quantum;
pub mod rates;
pub mod registry;

pub use instance::Instance;

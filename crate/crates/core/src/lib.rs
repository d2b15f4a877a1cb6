//! Multi-species symmetric exclusion and independent-walker processes on
//! finite graphs, their orthogonal-polynomial self-duality kernels, and the
//! machinery to verify every identity both exactly (enumeration plus sparse
//! linear algebra) and statistically (continuous-time Monte Carlo).

pub mod charlier;
pub mod error;
pub mod expm;
pub mod generators;
pub mod krawtchouk;
pub mod liealg;
pub mod poly;
pub mod report;
pub mod simulate;
pub mod sparse;
pub mod statespace;
pub mod suites;
pub mod verify;

pub use error::{Error, Result};
pub use krawtchouk::Kappa;
pub use report::CheckRecord;
pub use sparse::SparseOperator;
pub use statespace::{Config, ConfigSpace, Graph, SiteConfig};

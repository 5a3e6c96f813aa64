//! Concentration bounds for Lipschitz functions of graph-dependent random
//! variables, with exact and Monte Carlo verification.

pub mod bounds;
pub mod cli;
pub mod coupling;
pub mod covers;
pub mod error;
pub mod graph;
pub mod lp;
pub mod montecarlo;
pub mod profile;
pub mod rational;

pub use error::{Error, Result};
pub use graph::Graph;
pub use profile::LipschitzProfile;

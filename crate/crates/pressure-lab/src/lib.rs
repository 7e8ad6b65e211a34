//! Certified numerics for topological pressure on countable Markov shifts
//! and their suspension flows.

pub mod error;
pub mod inducing;
pub mod instances;
pub mod interval;
pub mod potential;
pub mod pressure;
pub mod series;
pub mod shift;
pub mod suspension;

pub use error::{Error, Result};
pub use interval::{ExtendedReal, Interval};
pub use potential::{Tail, TailForm, TailPotential};
pub use series::{Convergence, SeriesSpec, SumSign};
pub use shift::{Rule, SymbolicShift};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Extreme value laws for dynamically generated processes.
//!
//! The crate simulates stationary processes exactly (interval maps through
//! their digit codings, AR(1) and moving-maximum models), measures clustering
//! of exceedances, and estimates the extremal index in four independent ways.

pub mod ensemble;
pub mod error;
pub mod escapes;
pub mod estimators;
pub mod hts;
pub mod observables;
pub mod process;
pub mod rng;
pub mod stats;
pub mod symbolic;
pub mod theory;

pub use error::{EvlError, Result};
pub use escapes::EscapeOffsets;
pub use estimators::{EIEstimate, Method};
pub use observables::{Anchor, GForm, Level, ObservableForm, ObservableSpec, Observer};
pub use process::{ProcessKind, ProcessSpec, ProcessState};
pub use symbolic::SymbolicWord;

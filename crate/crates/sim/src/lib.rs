//! Scenario files, runs, output formats and oracle comparison on top of
//! `hydrate-core`.

pub mod compare;
pub mod error;
pub mod output;
pub mod run;
pub mod scenario;

pub use error::{Result, SimError};
pub use scenario::{Problem, Scenario, Transport};

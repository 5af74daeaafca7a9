//! Agent-based commuter mode choice under social norms, habit, weather and
//! neighbourhood infrastructure, with car-free-day interventions.

pub mod config;
pub mod engine;
pub mod error;
pub mod io;
pub mod mode;
pub mod netgen;
pub mod popgen;
pub mod rng;
pub mod stats;
pub mod weather;

pub use config::{ScenarioConfig, ValidationReport};
pub use error::{Error, Result};
pub use mode::{CommuteCategory, ModeVector, TransportMode, Weather};
pub use rng::derive_rng_stream;

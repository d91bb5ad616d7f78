//! Simulation of an automatic synchronizing and protection relay.
//!
//! A small synchronous generator is black-started by a PID speed governor and
//! a pulse-driven excitation module, brought into frequency, voltage and phase
//! agreement with an infinite bus, connected through a breaker, and guarded by
//! five definite-time protection elements.
//!
//! The crate is organized bottom-up:
//!
//! * [`waveform`] three-phase signal synthesis and measurement
//! * [`plant`] generator, exciter, grid source and breaker models
//! * [`control`] governor PID, pulse AVR and post-close P/Q regulation
//! * [`synchronizer`] the sync-check state machine
//! * [`protection`] OC / OV / UV / OF / UF elements
//! * [`harness`] scenario files, the fixed-step loop, CSV output

pub mod control;
pub mod error;
pub mod harness;
pub mod plant;
pub mod protection;
pub mod synchronizer;
pub mod waveform;

pub use error::{Error, Result};
pub use harness::{
    load_scenario, run_scenario, summarize, write_csv, write_events_csv, EventKind, EventRecord,
    LogRow, RunError, ScenarioConfig, SimulationLog, Simulator, Summary,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Scenario files, the fixed-step simulation loop and CSV output.

mod log;
mod scenario;
mod sim;
mod summary;

pub use log::{
    fmt_fixed, parse_csv, parse_events_csv, write_csv, write_events_csv, EventKind, EventRecord,
    LogRow, SimulationLog, TripFlags, CSV_HEADER, EVENTS_HEADER,
};
pub use scenario::{load_scenario, scenario_keys, ScenarioConfig};
pub use sim::{run_scenario, RunError, Simulator};
pub use summary::{summarize, Summary};

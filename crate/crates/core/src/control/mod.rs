//! Governor speed loop, pulse AVR and post-close P/Q regulation.

mod avr;
mod governor;
mod pid;
mod power;

pub use avr::{avr_step, pulse_decision, AvrConfig, AvrState};
pub use governor::{governor_step, GovernorConfig, GovernorOutput};
pub use pid::{pid_step, PidParams, PidState};
pub use power::{power_control_step, PowerControlConfig, PowerControlOutput, PowerSetpoint};

//! Plant models: synchronous generator, pulse-driven exciter, infinite-bus
//! grid source and breaker.

mod breaker;
mod exciter;
mod generator;
mod grid;

pub use breaker::{breaker_step, BreakerPosition, BreakerState, DEFAULT_CLOSE_DELAY};
pub use exciter::{
    step_exciter, ActivePulse, ExciterCommand, ExciterParams, ExciterState, PulseDirection,
    PULSE_DURATION,
};
pub use generator::{
    connected_power, frequency_from_rpm, open_circuit_emf, power_angle, rpm_from_frequency,
    step_rotor, step_rotor_with_sync, BusCoupling, GeneratorParams, GeneratorState, PowerFlow, TorqueLoad,
};
pub use grid::{GridBus, GridPoint, GridSource, GridStep};

use std::f64::consts::PI;

use crate::error::{ensure_finite, Error, Result};
use crate::waveform::{wrap_deg_180, wrap_deg_360};

const RPM_TO_RAD_S: f64 = PI / 30.0;
const RAD_S_TO_RPM: f64 = 30.0 / PI;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub rated_power: f64,
    pub v_ll_nominal: f64,
    pub v_ln_nominal: f64,
    pub i_rated: f64,
    pub f_nominal: f64,
    pub poles: u32,
    pub exciter_i_rated: f64,
    /// Rotor inertia, kg·m².
    pub inertia: f64,
    /// Lumped damping about synchronous speed, N·m·s/rad.
    pub damping: f64,
    /// Viscous friction and windage, N·m·s/rad; loss torque friction·ω.
    pub friction: f64,
    /// L-L volts per field volt at nominal speed.
    pub k_emf: f64,
    /// Per-phase synchronous reactance, Ω.
    pub x_sync: f64,
}

impl Default for GeneratorParams {
    /// 1 kW, 400 V, 4-pole, 50 Hz laboratory machine; 45 V field gives
    /// 400 V L-L at 1500 rpm; H = 0.5 s on the 1 kW base; 10 W of
    /// friction and windage at rated speed.
    fn default() -> Self {
        let omega = 1500.0 * RPM_TO_RAD_S;
        Self {
            rated_power: 1000.0,
            v_ll_nominal: 400.0,
            v_ln_nominal: 230.0,
            i_rated: 2.6,
            f_nominal: 50.0,
            poles: 4,
            exciter_i_rated: 1.6,
            inertia: 2.0 * 0.5 * 1000.0 / (omega * omega),
            damping: 0.05,
            friction: 10.0 / (omega * omega),
            k_emf: 400.0 / 45.0,
            x_sync: 63.5,
        }
    }
}

impl GeneratorParams {
    pub fn rpm_nominal(&self) -> f64 {
        120.0 * self.f_nominal / f64::from(self.poles)
    }

    pub fn omega_nominal(&self) -> f64 {
        self.rpm_nominal() * RPM_TO_RAD_S
    }

    pub fn rated_torque(&self) -> f64 {
        self.rated_power / self.omega_nominal()
    }

    /// Electrical degrees per second at `rpm`.
    pub fn electrical_deg_per_s(&self, rpm: f64) -> f64 {
        rpm / 60.0 * 360.0 * f64::from(self.poles) / 2.0
    }

    /// Returns the name of the first offending field.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.poles < 2 || self.poles % 2 != 0 {
            return Err(("poles", format!("must be even and >= 2, got {}", self.poles)));
        }
        for (name, v) in [
            ("rated_power", self.rated_power),
            ("v_ll_nominal", self.v_ll_nominal),
            ("v_ln_nominal", self.v_ln_nominal),
            ("i_rated", self.i_rated),
            ("f_nominal", self.f_nominal),
            ("exciter_i_rated", self.exciter_i_rated),
            ("inertia", self.inertia),
            ("damping", self.damping),
            ("k_emf", self.k_emf),
            ("x_sync", self.x_sync),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err((name, format!("must be positive, got {v}")));
            }
        }
        if !(self.friction.is_finite() && self.friction >= 0.0) {
            return Err(("friction", format!("must be >= 0, got {}", self.friction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorState {
    pub rotor_speed: f64,
    /// Electrical degrees in [0, 360).
    pub rotor_angle_deg: f64,
    pub field_voltage: f64,
    pub t: f64,
}

impl GeneratorState {
    pub fn at_rest() -> Self {
        Self { rotor_speed: 0.0, rotor_angle_deg: 0.0, field_voltage: 0.0, t: 0.0 }
    }
}

fn check_poles(poles: u32) -> Result<f64> {
    if poles < 2 || poles % 2 != 0 {
        Err(Error::InvalidArgument(format!("poles must be even and >= 2, got {poles}")))
    } else {
        Ok(f64::from(poles))
    }
}

/// v = 120·f / P.
pub fn rpm_from_frequency(f: f64, poles: u32) -> Result<f64> {
    let p = check_poles(poles)?;
    ensure_finite("frequency", f)?;
    if f < 0.0 {
        return Err(Error::InvalidArgument(format!("frequency must be >= 0, got {f}")));
    }
    Ok(120.0 * f / p)
}

/// f = v·P / 120.
pub fn frequency_from_rpm(rpm: f64, poles: u32) -> Result<f64> {
    let p = check_poles(poles)?;
    ensure_finite("speed", rpm)?;
    if rpm < 0.0 {
        return Err(Error::InvalidArgument(format!("speed must be >= 0, got {rpm}")));
    }
    Ok(rpm * p / 120.0)
}

/// Open-circuit L-L EMF, linear in field voltage and speed.
pub fn open_circuit_emf(field_voltage: f64, rotor_speed: f64, params: &GeneratorParams) -> f64 {
    params.k_emf * field_voltage.max(0.0) * (rotor_speed.max(0.0) / params.rpm_nominal())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFlow {
    pub p: f64,
    pub q: f64,
    pub elec_torque: f64,
    pub i_rms: f64,
}

/// Three-phase power-angle model of a machine behind `x_sync` against a bus.
/// `delta_deg` is the EMF angle relative to the bus voltage. Torque is left 0.
pub fn power_angle(emf_ll: f64, bus_v_ll: f64, delta_deg: f64, x_sync: f64) -> PowerFlow {
    let e = emf_ll / 3f64.sqrt();
    let v = bus_v_ll / 3f64.sqrt();
    let (s, c) = libm::sincos(delta_deg.to_radians());
    let p = 3.0 * e * v * s / x_sync;
    let q = 3.0 * (e * v * c - v * v) / x_sync;
    // |E∠δ − V| / X
    let i_rms = (e * c - v).hypot(e * s) / x_sync;
    PowerFlow { p, q, elec_torque: 0.0, i_rms }
}

/// Power exchanged with the grid while the breaker is closed.
pub fn connected_power(
    gen: &GeneratorState,
    grid: &super::GridPoint,
    params: &GeneratorParams,
) -> Result<PowerFlow> {
    if gen.rotor_speed <= 0.0 {
        return Err(Error::InvalidState("rotor at standstill with breaker closed".into()));
    }
    let emf = open_circuit_emf(gen.field_voltage, gen.rotor_speed, params);
    let delta = wrap_deg_180(gen.rotor_angle_deg - grid.phase_deg);
    let mut flow = power_angle(emf, grid.v_ll, delta, params.x_sync);
    flow.elec_torque = flow.p / (gen.rotor_speed * RPM_TO_RAD_S);
    Ok(flow)
}

/// Electrical torque opposing the rotor, evaluated inside each integration
/// stage. `tau` is the time since the start of the step.
pub trait TorqueLoad {
    fn torque(&self, tau: f64, angle_deg: f64, speed_rpm: f64) -> f64;
}

impl TorqueLoad for f64 {
    fn torque(&self, _tau: f64, _angle_deg: f64, _speed_rpm: f64) -> f64 {
        *self
    }
}

/// Infinite-bus coupling: the bus angle advances at its own frequency during
/// the step, so the load angle seen by each stage is current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusCoupling {
    pub emf_ll: f64,
    pub bus_v_ll: f64,
    pub bus_phase_deg: f64,
    pub bus_frequency: f64,
    pub x_sync: f64,
}

impl TorqueLoad for BusCoupling {
    fn torque(&self, tau: f64, angle_deg: f64, speed_rpm: f64) -> f64 {
        let bus = self.bus_phase_deg + 360.0 * self.bus_frequency * tau;
        let flow = power_angle(self.emf_ll, self.bus_v_ll, angle_deg - bus, self.x_sync);
        // below 1 rpm the machine cannot be connected in any meaningful sense
        flow.p / (speed_rpm.max(1.0) * RPM_TO_RAD_S)
    }
}

/// One fourth-order Runge-Kutta step of
/// J·dω/dt = T_mech − T_elec − D·(ω − ω_sync) − B·ω, B being friction,
/// with the rotor angle advanced at electrical speed. ω_sync is the nominal
/// synchronous speed; see [`step_rotor_with_sync`] for an explicit reference.
pub fn step_rotor<L: TorqueLoad + ?Sized>(
    state: &GeneratorState,
    mech_torque: f64,
    load: &L,
    params: &GeneratorParams,
    dt: f64,
) -> Result<GeneratorState> {
    step_rotor_with_sync(state, mech_torque, load, params, params.rpm_nominal(), dt)
}

/// [`step_rotor`] with the damping referenced to `sync_rpm`, the synchronous
/// speed of the system frequency.
pub fn step_rotor_with_sync<L: TorqueLoad + ?Sized>(
    state: &GeneratorState,
    mech_torque: f64,
    load: &L,
    params: &GeneratorParams,
    sync_rpm: f64,
    dt: f64,
) -> Result<GeneratorState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    ensure_finite("mech_torque", mech_torque)?;
    ensure_finite("sync_rpm", sync_rpm)?;

    let j = params.inertia;
    let d = params.damping;
    let b = params.friction;
    let w_sync = sync_rpm * RPM_TO_RAD_S;
    let elec_per_rad = f64::from(params.poles) / 2.0 * (180.0 / PI);
    let w0 = state.rotor_speed * RPM_TO_RAD_S;
    let th0 = state.rotor_angle_deg;

    // (dω/dt, dθ/dt) at offset tau from (ω, θ)
    let deriv = |tau: f64, w: f64, th: f64| {
        let te = load.torque(tau, th, w * RAD_S_TO_RPM);
        ((mech_torque - te - d * (w - w_sync) - b * w) / j, w * elec_per_rad)
    };

    let (a1, b1) = deriv(0.0, w0, th0);
    let (a2, b2) = deriv(0.5 * dt, w0 + 0.5 * dt * a1, th0 + 0.5 * dt * b1);
    let (a3, b3) = deriv(0.5 * dt, w0 + 0.5 * dt * a2, th0 + 0.5 * dt * b2);
    let (a4, b4) = deriv(dt, w0 + dt * a3, th0 + dt * b3);
    let dw = dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    let dth = dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);

    // update in rpm directly so a zero increment leaves the speed bit-identical
    let rpm = state.rotor_speed + dw * RAD_S_TO_RPM;
    let angle = th0 + dth;
    if !rpm.is_finite() || !angle.is_finite() {
        return Err(Error::NumericalDivergence { last_good: *state });
    }
    Ok(GeneratorState {
        rotor_speed: rpm.max(0.0),
        rotor_angle_deg: wrap_deg_360(angle),
        field_voltage: state.field_voltage,
        t: state.t + dt,
    })
}

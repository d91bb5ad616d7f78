use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidParams {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub out_min: f64,
    pub out_max: f64,
}

impl PidParams {
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err((name, format!("gain must be finite and >= 0, got {v}")));
            }
        }
        if !(self.out_min.is_finite() && self.out_max.is_finite() && self.out_min < self.out_max) {
            return Err(("out_max", format!("need out_min < out_max, got [{}, {}]", self.out_min, self.out_max)));
        }
        Ok(())
    }

    fn clamp_integral(&self, integral: f64) -> f64 {
        if self.ki > 0.0 {
            integral.clamp(self.out_min / self.ki, self.out_max / self.ki)
        } else {
            integral
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    /// Accumulated error·s. `ki·integral` stays within the output clamp.
    pub integral: f64,
    pub prev_error: f64,
    pub initialized: bool,
}

impl PidState {
    /// State whose integral term alone produces `output` (bumpless hand-over).
    pub fn seeded(params: &PidParams, output: f64) -> Self {
        let integral = if params.ki > 0.0 { params.clamp_integral(output / params.ki) } else { 0.0 };
        Self { integral, prev_error: 0.0, initialized: false }
    }
}

/// Parallel-form PID on error `setpoint − measured`.
///
/// The integrator is frozen while the output is saturated in the direction
/// the error would push it further. The derivative term is zero on the first
/// call after construction.
pub fn pid_step(
    params: &PidParams,
    state: &PidState,
    setpoint: f64,
    measured: f64,
    dt: f64,
) -> Result<(f64, PidState)> {
    ensure_finite("setpoint", setpoint)?;
    ensure_finite("measured", measured)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let e = setpoint - measured;
    let derivative = if state.initialized { (e - state.prev_error) / dt } else { 0.0 };

    let candidate = params.clamp_integral(state.integral + e * dt);
    let raw = params.kp * e + params.ki * candidate + params.kd * derivative;
    let winding_up = (raw > params.out_max && e > 0.0) || (raw < params.out_min && e < 0.0);
    let integral = if winding_up { state.integral } else { candidate };
    let output = (params.kp * e + params.ki * integral + params.kd * derivative)
        .clamp(params.out_min, params.out_max);

    Ok((output, PidState { integral, prev_error: e, initialized: true }))
}

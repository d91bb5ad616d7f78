use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::log::{fmt_fixed, EventKind, EventRecord, LogRow, SimulationLog, TripFlags};
use super::scenario::ScenarioConfig;
use crate::control::{avr_step, governor_step, power_control_step, AvrState, PidState};
use crate::error::{Error, Result};
use crate::plant::{
    breaker_step, connected_power, frequency_from_rpm, open_circuit_emf, rpm_from_frequency,
    step_exciter, step_rotor_with_sync, BreakerState, BusCoupling, ExciterCommand, ExciterState,
    GeneratorState, GridBus, PowerFlow,
};
use crate::protection::{protection_step, ProtectionOutput, ProtectionState};
use crate::synchronizer::{evaluate_conditions, slip_bias, sync_step, SyncConfig, SyncInputs, SyncPhase, SyncState};
use crate::waveform::{
    check_phase_sequence, measure, rms, three_phase_at, wrap_deg_180,
    MeasurementSnapshot, PhaseSequence, ThreePhaseWaveform, DEFAULT_AMPLITUDE_FLOOR,
};

/// Largest change of the governor frequency target per second, Hz/s.
const TARGET_SLEW: f64 = 0.1;

/// Sliding window of the most recent three-phase samples.
#[derive(Debug, Clone)]
struct SampleRing {
    cap: usize,
    a: VecDeque<f64>,
    b: VecDeque<f64>,
    c: VecDeque<f64>,
}

impl SampleRing {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            a: VecDeque::with_capacity(cap + 1),
            b: VecDeque::with_capacity(cap + 1),
            c: VecDeque::with_capacity(cap + 1),
        }
    }

    fn push(&mut self, [a, b, c]: [f64; 3]) {
        if self.a.len() == self.cap {
            self.a.pop_front();
            self.b.pop_front();
            self.c.pop_front();
        }
        self.a.push_back(a);
        self.b.push_back(b);
        self.c.push_back(c);
    }

    fn waveform(&self, sample_rate: f64, t_end: f64) -> Result<ThreePhaseWaveform> {
        let n = self.a.len();
        let t0 = t_end - (n as f64 - 1.0) / sample_rate;
        ThreePhaseWaveform::new(
            sample_rate,
            t0,
            self.a.iter().copied().collect(),
            self.b.iter().copied().collect(),
            self.c.iter().copied().collect(),
        )
    }
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// The configuration failed validation; nothing was simulated.
    Invalid(Error),
    /// The run aborted part-way; `log` holds every row up to the failure and
    /// ends with a `Diverged` event.
    Diverged { log: SimulationLog, error: Error },
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Invalid(e) => write!(f, "{e}"),
            RunError::Diverged { error, .. } => write!(f, "simulation aborted: {error}"),
        }
    }
}

impl std::error::Error for RunError {}

/// Fixed-step closed-loop simulation of one scenario.
///
/// Each call to [`Simulator::step`] handles one plant step `k` at
/// `t = k·dt`: breaker completion, then (every control period) measurement,
/// protection, synchronizer and controllers, then a log row, then the plant
/// integration to `t + dt`.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: ScenarioConfig,
    sync_cfg: SyncConfig,
    k: u64,
    n_steps: u64,
    ctrl_every: u64,
    samples_per_step: usize,

    gen: GeneratorState,
    exciter: ExciterState,
    grid: GridBus,
    breaker: BreakerState,

    gov_pid: PidState,
    power_pid: PidState,
    power_mode: bool,
    avr: AvrState,
    sync: SyncState,
    prot: ProtectionState,

    gen_ring: SampleRing,
    grid_ring: SampleRing,
    rng: Option<ChaCha8Rng>,
    noise_amp: f64,

    torque_cmd: f64,
    gov_target: Option<f64>,
    bias_sign: Option<f64>,
    pending_exciter: ExciterCommand,
    seq: PhaseSequence,
    gen_meter: MeasurementSnapshot,
    grid_meter: MeasurementSnapshot,
    dphi: f64,

    log: SimulationLog,
    failed: bool,
}

impl Simulator {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let n_steps = (cfg.duration / cfg.dt).round() as u64;
        let ctrl_every = (cfg.control_period / cfg.dt).round().max(1.0) as u64;
        let samples_per_step = (cfg.sample_rate * cfg.dt).round().max(1.0) as usize;
        let window = (cfg.window * cfg.sample_rate).round() as usize;

        let gen = GeneratorState {
            rotor_speed: cfg.initial_rpm,
            rotor_angle_deg: crate::waveform::wrap_deg_360(cfg.initial_angle),
            field_voltage: cfg.initial_field,
            t: 0.0,
        };
        let exciter = ExciterState {
            enabled: cfg.initial_field > 0.0,
            field_voltage: cfg.initial_field,
            active_pulse: None,
        };
        let grid = GridBus::new(cfg.grid.clone())?;
        let rng = (cfg.rng_seed != 0).then(|| ChaCha8Rng::seed_from_u64(cfg.rng_seed));
        let noise_amp = cfg.noise_level * std::f64::consts::SQRT_2 * cfg.generator.v_ln_nominal;
        let empty = MeasurementSnapshot { v_rms_ll: 0.0, frequency: 0.0, phase_deg: 0.0, i_rms: 0.0, t: 0.0 };

        let mut sim = Self {
            sync_cfg: cfg.sync_config(),
            k: 0,
            n_steps,
            ctrl_every,
            samples_per_step,
            gen,
            exciter,
            grid,
            breaker: BreakerState::open(cfg.breaker_close_delay),
            gov_pid: PidState::default(),
            power_pid: PidState::default(),
            power_mode: false,
            avr: AvrState::default(),
            sync: SyncState::default(),
            prot: ProtectionState::default(),
            gen_ring: SampleRing::new(window),
            grid_ring: SampleRing::new(window),
            rng,
            noise_amp,
            torque_cmd: 0.0,
            gov_target: None,
            bias_sign: None,
            pending_exciter: ExciterCommand::None,
            seq: PhaseSequence::Indeterminate,
            gen_meter: empty,
            grid_meter: empty,
            dphi: 0.0,
            log: SimulationLog::default(),
            failed: false,
            cfg: cfg.clone(),
        };
        sim.prefill(window);
        Ok(sim)
    }

    /// History before t = 0: both sources as if they had always run at their
    /// initial state.
    fn prefill(&mut self, window: usize) {
        let fs = self.cfg.sample_rate;
        let gp = self.grid.point();
        let grid_peak = gp.v_ll / 3f64.sqrt() * std::f64::consts::SQRT_2;
        let gen_peak = self.emf_peak(&self.gen);
        let gen_rate = self.cfg.generator.electrical_deg_per_s(self.gen.rotor_speed);
        for j in (0..window).rev() {
            let t = -(j as f64) / fs;
            let g = three_phase_at(grid_peak, (gp.phase_deg + 360.0 * gp.frequency * t).to_radians());
            let m = self.gen_sample(gen_peak, self.gen.rotor_angle_deg + gen_rate * t);
            self.push_samples(m, g);
        }
    }

    fn emf_peak(&self, g: &GeneratorState) -> f64 {
        open_circuit_emf(g.field_voltage, g.rotor_speed, &self.cfg.generator) / 3f64.sqrt()
            * std::f64::consts::SQRT_2
    }

    fn gen_sample(&self, peak: f64, angle_deg: f64) -> [f64; 3] {
        let [a, b, c] = three_phase_at(peak, angle_deg.to_radians());
        match self.cfg.generator_sequence {
            PhaseSequence::Negative => [a, c, b],
            _ => [a, b, c],
        }
    }

    fn push_samples(&mut self, mut gen: [f64; 3], mut grid: [f64; 3]) {
        if let Some(rng) = self.rng.as_mut() {
            let a = self.noise_amp;
            for x in gen.iter_mut().chain(grid.iter_mut()) {
                *x += rng.gen_range(-a..=a);
            }
        }
        self.gen_ring.push(gen);
        self.grid_ring.push(grid);
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.cfg.dt
    }

    pub fn is_finished(&self) -> bool {
        self.failed || self.k > self.n_steps
    }

    pub fn generator(&self) -> &GeneratorState {
        &self.gen
    }

    pub fn sync_phase(&self) -> SyncPhase {
        self.sync.phase
    }

    pub fn breaker_closed(&self) -> bool {
        self.breaker.is_closed()
    }

    pub fn tripped(&self) -> bool {
        self.prot.tripped()
    }

    pub fn log(&self) -> &SimulationLog {
        &self.log
    }

    pub fn into_log(self) -> SimulationLog {
        self.log
    }

    fn event(&mut self, t: f64, kind: EventKind, detail: String) {
        log::debug!("t={t:.3} {} {detail}", kind.name());
        self.log.events.push(EventRecord { t, kind, detail });
    }

    fn num(&self, x: f64) -> String {
        fmt_fixed(x, self.cfg.precision)
    }

    fn power_flow(&self) -> Result<Option<PowerFlow>> {
        if !self.breaker.is_closed() {
            return Ok(None);
        }
        connected_power(&self.gen, &self.grid.point(), &self.cfg.generator).map(Some)
    }

    /// Advance one plant step. Returns `Ok(false)` once the last row has been
    /// written.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_finished() {
            return Ok(false);
        }
        let t = self.time();
        match self.step_inner(t) {
            Ok(()) => {
                self.k += 1;
                Ok(!self.is_finished())
            }
            Err(e) => {
                self.failed = true;
                self.event(t, EventKind::Diverged, format!("error={}", e.to_string().replace([' ', ','], "_")));
                Err(e)
            }
        }
    }

    fn step_inner(&mut self, t: f64) -> Result<()> {
        let was_closed = self.breaker.is_closed();
        self.breaker = breaker_step(&self.breaker, false, false, t);
        if self.breaker.is_closed() && !was_closed {
            self.log_breaker_closed(t);
        }

        if self.k % self.ctrl_every == 0 {
            self.control_tick(t)?;
        }

        let flow = self.power_flow()?;
        self.log.rows.push(LogRow {
            t,
            gen_rpm: self.gen.rotor_speed,
            gen_freq: self.gen_meter.frequency,
            grid_freq: self.grid_meter.frequency,
            gen_v_ll: self.gen_meter.v_rms_ll,
            grid_v_ll: self.grid_meter.v_rms_ll,
            dphi_deg: self.dphi,
            field_v: self.exciter.field_voltage,
            torque_cmd: self.torque_cmd,
            breaker: self.breaker.is_closed(),
            sync_phase: self.sync.phase,
            p_w: flow.map_or(0.0, |f| f.p),
            q_var: flow.map_or(0.0, |f| f.q),
            trip_flags: self.prot.latched().collect::<TripFlags>(),
        });

        if self.k < self.n_steps {
            self.plant_step()?;
        }
        Ok(())
    }

    fn log_breaker_closed(&mut self, t: f64) {
        let gp = self.grid.point();
        let emf = open_circuit_emf(self.gen.field_voltage, self.gen.rotor_speed, &self.cfg.generator);
        let gen_f = frequency_from_rpm(self.gen.rotor_speed, self.cfg.generator.poles).unwrap_or(0.0);
        let detail = format!(
            "dphi={} slip={} dv={}",
            self.num(wrap_deg_180(self.gen.rotor_angle_deg - gp.phase_deg)),
            self.num(gen_f - gp.frequency),
            self.num(emf - gp.v_ll),
        );
        self.event(t, EventKind::BreakerClosed, detail);
    }

    fn control_tick(&mut self, t: f64) -> Result<()> {
        let period = self.ctrl_every as f64 * self.cfg.dt;
        let fs = self.cfg.sample_rate;

        let grid_w = self.grid_ring.waveform(fs, t)?;
        let grid_snap = measure(&grid_w, 0.0).ok();
        if let Some(g) = grid_snap {
            self.grid_meter = g;
        } else {
            self.grid_meter = MeasurementSnapshot { v_rms_ll: rms(&grid_w)? * 3f64.sqrt(), frequency: 0.0, phase_deg: 0.0, i_rms: 0.0, t };
        }

        let flow = self.power_flow()?;
        let i_rms = flow.map_or(0.0, |f| f.i_rms);
        let gen_w = self.gen_ring.waveform(fs, t)?;
        let gen_v_ln = rms(&gen_w)?;
        let gen_snap = if gen_v_ln >= DEFAULT_AMPLITUDE_FLOOR { measure(&gen_w, i_rms).ok() } else { None };
        self.gen_meter = gen_snap.unwrap_or(MeasurementSnapshot {
            v_rms_ll: gen_v_ln * 3f64.sqrt(),
            frequency: 0.0,
            phase_deg: 0.0,
            i_rms,
            t,
        });
        if gen_snap.is_some() && matches!(self.sync.phase, SyncPhase::ExciterOn | SyncPhase::Matching) {
            self.seq = check_phase_sequence(&gen_w);
        }

        // protection
        // lockout: after the first trip the latches hold and nothing new is evaluated
        let out = if self.prot.tripped() {
            ProtectionOutput { state: self.prot, trips: Vec::new(), trip: true }
        } else {
            protection_step(&self.cfg.protection, &self.prot, &self.gen_meter, period)
        };
        self.prot = out.state;
        for tr in &out.trips {
            let detail = format!(
                "element={} measured={} threshold={}",
                tr.element.name(),
                self.num(tr.measured_value),
                self.num(tr.threshold)
            );
            self.event(t, EventKind::Trip, detail);
        }
        if out.trip && (self.breaker.is_closed() || self.breaker.pending_close_at.is_some()) {
            self.breaker = breaker_step(&self.breaker, false, true, t);
        }

        // synchronizer
        let status = match (gen_snap, grid_snap) {
            (Some(g), Some(r)) => Some(evaluate_conditions(&g, &r, self.seq, &self.sync_cfg)?),
            _ => None,
        };
        self.dphi = status.map_or(0.0, |s| s.dphi_deg);
        let grid_f = grid_snap.map_or(self.cfg.grid.frequency, |g| g.frequency);
        let target_rpm = rpm_from_frequency(grid_f, self.cfg.generator.poles)?;
        let inputs = SyncInputs {
            status,
            speed_ready: self.gen.rotor_speed >= self.sync_cfg.excite_at_speed * target_rpm,
            breaker_closed: self.breaker.is_closed(),
            trip: out.trip,
        };
        let before = self.sync.phase;
        let (next, close) = sync_step(&self.sync, &inputs, &self.sync_cfg, period);
        self.sync = next;
        if next.phase != before {
            self.on_transition(t, before, next.phase, status);
        }
        if close {
            let s = status.expect("close requires a status");
            let detail = format!(
                "dphi={} dphi_pred={} slip={} dv={} hold={}",
                self.num(s.dphi_deg),
                self.num(s.dphi_predicted_deg),
                self.num(s.slip),
                self.num(s.dv),
                self.num(next.hold_elapsed)
            );
            self.event(t, EventKind::CloseCommand, detail);
            self.breaker = breaker_step(&self.breaker, true, false, t);
        }

        // controllers
        if out.trip || self.sync.phase == SyncPhase::Aborted {
            self.torque_cmd = 0.0;
            if self.exciter.enabled {
                self.pending_exciter = ExciterCommand::Off;
            }
            return Ok(());
        }
        if self.sync.phase == SyncPhase::Synchronized && self.cfg.setpoint.enabled && self.breaker.is_closed() {
            if !self.power_mode {
                self.power_mode = true;
                self.power_pid = PidState::seeded(&self.cfg.power.pid, self.torque_cmd);
            }
            let f = flow.unwrap_or(PowerFlow { p: 0.0, q: 0.0, elec_torque: 0.0, i_rms: 0.0 });
            let o = power_control_step(
                &self.cfg.setpoint,
                f.p,
                f.q,
                &self.cfg.power,
                &self.power_pid,
                &self.cfg.avr,
                &self.avr,
                &self.exciter,
                true,
                t,
                period,
            )?;
            self.torque_cmd = o.torque_command;
            self.power_pid = o.pid_state;
            self.avr = o.avr_state;
            self.queue_pulse(t, o.exciter_command);
            return Ok(());
        }

        let bias = slip_bias(&self.sync, grid_f, self.cfg.generator.f_nominal, &self.sync_cfg);
        // the sign is taken once per hunt so measurement noise near nominal cannot flip it
        let bias = if bias == 0.0 {
            self.bias_sign = None;
            0.0
        } else {
            *self.bias_sign.get_or_insert(bias.signum()) * bias.abs()
        };
        let wanted = grid_f + bias + self.cfg.freq_offset;
        let target = match self.gov_target {
            None => wanted,
            Some(prev) => {
                let max = TARGET_SLEW * period;
                prev + (wanted - prev).clamp(-max, max)
            }
        };
        self.gov_target = Some(target);
        let g = governor_step(
            &self.cfg.governor,
            &self.gov_pid,
            target,
            self.gen.rotor_speed,
            self.cfg.generator.poles,
            period,
        )?;
        self.torque_cmd = g.torque_command;
        self.gov_pid = g.state;
        if self.exciter.enabled {
            let (cmd, avr) =
                avr_step(&self.cfg.avr, &self.avr, self.gen_meter.v_rms_ll, self.grid_meter.v_rms_ll, &self.exciter, t);
            self.avr = avr;
            self.queue_pulse(t, cmd);
        }
        Ok(())
    }

    fn queue_pulse(&mut self, t: f64, cmd: ExciterCommand) {
        let kind = match cmd {
            ExciterCommand::PulseUp => EventKind::PulseUp,
            ExciterCommand::PulseDown => EventKind::PulseDown,
            _ => return,
        };
        self.pending_exciter = cmd;
        let detail = format!("field={}", self.num(self.exciter.field_voltage));
        self.event(t, kind, detail);
    }

    fn on_transition(&mut self, t: f64, from: SyncPhase, to: SyncPhase, status: Option<crate::synchronizer::SyncStatus>) {
        let describe = |s: &Self| {
            status.map_or(String::new(), |st| {
                format!(
                    "dphi_pred={} slip={} dv={}",
                    s.num(st.dphi_predicted_deg),
                    s.num(st.slip),
                    s.num(st.dv)
                )
            })
        };
        match to {
            SyncPhase::ExciterOn => {
                self.pending_exciter = ExciterCommand::On;
                let d = format!("rpm={}", self.num(self.gen.rotor_speed));
                self.event(t, EventKind::ExciterOn, d);
            }
            SyncPhase::HoldWindow => {
                let d = describe(self);
                self.event(t, EventKind::HoldStart, d);
            }
            SyncPhase::Matching if from == SyncPhase::HoldWindow => {
                let d = describe(self);
                self.event(t, EventKind::HoldReset, d);
            }
            SyncPhase::Aborted => {
                let d = format!("from={}", from.name());
                self.event(t, EventKind::Aborted, d);
            }
            _ => {}
        }
    }

    fn plant_step(&mut self) -> Result<()> {
        let dt = self.cfg.dt;
        let cmd = std::mem::replace(&mut self.pending_exciter, ExciterCommand::None);
        let before = self.gen;
        let gp = self.grid.point();

        self.exciter = step_exciter(&self.exciter, cmd, &self.cfg.exciter, dt);
        let mut g = before;
        g.field_voltage = self.exciter.field_voltage;
        let sync_rpm = rpm_from_frequency(gp.frequency, self.cfg.generator.poles)?;
        let next = if self.breaker.is_closed() {
            let load = BusCoupling {
                emf_ll: open_circuit_emf(g.field_voltage, g.rotor_speed, &self.cfg.generator),
                bus_v_ll: gp.v_ll,
                bus_phase_deg: gp.phase_deg,
                bus_frequency: gp.frequency,
                x_sync: self.cfg.generator.x_sync,
            };
            step_rotor_with_sync(&g, self.torque_cmd, &load, &self.cfg.generator, sync_rpm, dt)?
        } else {
            step_rotor_with_sync(&g, self.torque_cmd, &0.0, &self.cfg.generator, sync_rpm, dt)?
        };
        let next = GeneratorState { t: (self.k + 1) as f64 * dt, ..next };

        // samples over (t, t + dt], linearly interpolated
        let n = self.samples_per_step;
        let p0 = self.emf_peak(&g);
        let p1 = self.emf_peak(&next);
        let mean_rpm = 0.5 * (g.rotor_speed + next.rotor_speed);
        let expected = self.cfg.generator.electrical_deg_per_s(mean_rpm) * dt;
        let raw = next.rotor_angle_deg - g.rotor_angle_deg;
        let sweep = raw + 360.0 * ((expected - raw) / 360.0).round();
        let grid_peak = gp.v_ll / 3f64.sqrt() * std::f64::consts::SQRT_2;
        let grid_sweep = 360.0 * gp.frequency * dt;
        for j in 1..=n {
            let tau = j as f64 / n as f64;
            let m = self.gen_sample(p0 + (p1 - p0) * tau, g.rotor_angle_deg + sweep * tau);
            let r = three_phase_at(grid_peak, (gp.phase_deg + grid_sweep * tau).to_radians());
            self.push_samples(m, r);
        }

        self.gen = next;
        self.grid.advance(dt);
        self.grid.set_time((self.k + 1) as f64 * dt);
        Ok(())
    }

    /// Run to the end of the scenario.
    pub fn run(mut self) -> std::result::Result<SimulationLog, RunError> {
        loop {
            match self.step() {
                Ok(true) => {}
                Ok(false) => return Ok(self.log),
                Err(error) => return Err(RunError::Diverged { log: self.log, error }),
            }
        }
    }
}

/// Validate `cfg` and run it to completion.
pub fn run_scenario(cfg: &ScenarioConfig) -> std::result::Result<SimulationLog, RunError> {
    Simulator::new(cfg).map_err(RunError::Invalid)?.run()
}

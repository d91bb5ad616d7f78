//! C ABI for the sync-relay simulator.
//!
//! All objects are opaque handles created and destroyed through this API.
//! Every fallible call returns an [`SrStatus`]; on failure a human-readable
//! message is available from [`sr_last_error`] on the same thread. Strings
//! returned through `char **` out-parameters are owned by the caller and must
//! be released with [`sr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sync_relay::harness::{summarize, write_csv, write_events_csv, LogRow, SimulationLog};
use sync_relay::synchronizer::SyncPhase;
use sync_relay::{load_scenario, Error, RunError, ScenarioConfig, Simulator};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InsufficientSignal = 4,
    InvalidState = 5,
    StaleMeasurement = 6,
    NumericalDivergence = 7,
    Parse = 8,
    Config = 9,
    OutOfRange = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrSyncPhase {
    Idle = 0,
    ExciterOn = 1,
    Matching = 2,
    HoldWindow = 3,
    CloseIssued = 4,
    Synchronized = 5,
    Aborted = 6,
}

impl From<SyncPhase> for SrSyncPhase {
    fn from(p: SyncPhase) -> Self {
        match p {
            SyncPhase::Idle => SrSyncPhase::Idle,
            SyncPhase::ExciterOn => SrSyncPhase::ExciterOn,
            SyncPhase::Matching => SrSyncPhase::Matching,
            SyncPhase::HoldWindow => SrSyncPhase::HoldWindow,
            SyncPhase::CloseIssued => SrSyncPhase::CloseIssued,
            SyncPhase::Synchronized => SrSyncPhase::Synchronized,
            SyncPhase::Aborted => SrSyncPhase::Aborted,
        }
    }
}

/// Trip flag bits: OC = 1, OV = 2, UV = 4, OF = 8, UF = 16.
pub const SR_TRIP_OC: u32 = 1;
pub const SR_TRIP_OV: u32 = 2;
pub const SR_TRIP_UV: u32 = 4;
pub const SR_TRIP_OF: u32 = 8;
pub const SR_TRIP_UF: u32 = 16;

/// One logged plant step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrRow {
    pub t: f64,
    pub gen_rpm: f64,
    pub gen_freq: f64,
    pub grid_freq: f64,
    pub gen_v_ll: f64,
    pub grid_v_ll: f64,
    pub dphi_deg: f64,
    pub field_v: f64,
    pub torque_cmd: f64,
    pub breaker: bool,
    pub sync_phase: SrSyncPhase,
    pub p_w: f64,
    pub q_var: f64,
    pub trip_flags: u32,
}

impl From<&LogRow> for SrRow {
    fn from(r: &LogRow) -> Self {
        let mut flags = 0u32;
        for e in r.trip_flags.iter() {
            flags |= 1 << e.index();
        }
        SrRow {
            t: r.t,
            gen_rpm: r.gen_rpm,
            gen_freq: r.gen_freq,
            grid_freq: r.grid_freq,
            gen_v_ll: r.gen_v_ll,
            grid_v_ll: r.grid_v_ll,
            dphi_deg: r.dphi_deg,
            field_v: r.field_v,
            torque_cmd: r.torque_cmd,
            breaker: r.breaker,
            sync_phase: r.sync_phase.into(),
            p_w: r.p_w,
            q_var: r.q_var,
            trip_flags: flags,
        }
    }
}

/// Headline metrics. Quantities that do not exist for the run (no close,
/// empty log) are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrSummary {
    pub synced: bool,
    pub t_close: f64,
    pub close_dphi: f64,
    pub close_slip: f64,
    pub close_dv: f64,
    pub settle_time: f64,
    pub final_rpm: f64,
    pub final_v_ll: f64,
    pub final_field: f64,
    pub trip_count: u32,
    /// Union of tripped elements, same bits as [`SrRow::trip_flags`].
    pub trip_flags: u32,
    /// Time of the first trip, NaN without trips.
    pub first_trip_t: f64,
}

/// Opaque scenario configuration.
pub struct SrScenario(ScenarioConfig);

/// Opaque step-by-step simulation.
pub struct SrSimulator(Simulator);

/// Opaque finished simulation log.
pub struct SrLog(SimulationLog);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SrStatus {
    match e {
        Error::InvalidArgument(_) => SrStatus::InvalidArgument,
        Error::InsufficientSignal(_) => SrStatus::InsufficientSignal,
        Error::InvalidState(_) => SrStatus::InvalidState,
        Error::StaleMeasurement { .. } => SrStatus::StaleMeasurement,
        Error::NumericalDivergence { .. } => SrStatus::NumericalDivergence,
        Error::Parse { .. } => SrStatus::Parse,
        Error::Config { .. } => SrStatus::Config,
    }
}

type Outcome = Result<(), (SrStatus, String)>;

fn fail(status: SrStatus, msg: impl Into<String>) -> Outcome {
    Err((status, msg.into()))
}

fn core(e: Error) -> (SrStatus, String) {
    (status_of(&e), e.to_string())
}

/// Run `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Outcome) -> SrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SrStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SrStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SrStatus, String)> {
    if p.is_null() {
        return Err((SrStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SrStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SrStatus, String)> {
    p.as_ref().ok_or_else(|| (SrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn obj_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SrStatus, String)> {
    p.as_mut().ok_or_else(|| (SrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Outcome {
    if out.is_null() {
        return fail(SrStatus::NullPointer, "output pointer is null");
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Outcome {
    let c = CString::new(s).map_err(|_| (SrStatus::InvalidState, "string contains NUL".to_string()))?;
    put(out, c.into_raw())
}

fn check_out<T>(out: *mut T) -> Outcome {
    if out.is_null() {
        fail(SrStatus::NullPointer, "output pointer is null")
    } else {
        Ok(())
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sr_version() -> *const c_char {
    static V: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    V.as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn sr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn sr_status_name(status: SrStatus) -> *const c_char {
    let s: &'static str = match status {
        SrStatus::Ok => "ok\0",
        SrStatus::NullPointer => "null pointer\0",
        SrStatus::InvalidUtf8 => "invalid utf-8\0",
        SrStatus::InvalidArgument => "invalid argument\0",
        SrStatus::InsufficientSignal => "insufficient signal\0",
        SrStatus::InvalidState => "invalid state\0",
        SrStatus::StaleMeasurement => "stale measurement\0",
        SrStatus::NumericalDivergence => "numerical divergence\0",
        SrStatus::Parse => "parse error\0",
        SrStatus::Config => "config error\0",
        SrStatus::OutOfRange => "out of range\0",
        SrStatus::Panic => "panic\0",
    };
    s.as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer returned through a `char **` out-parameter
/// of this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// New scenario holding the default configuration.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sr_scenario_default(out: *mut *mut SrScenario) -> SrStatus {
    guard(|| put(out, Box::into_raw(Box::new(SrScenario(ScenarioConfig::default())))))
}

/// Parse and validate a scenario document.
///
/// # Safety
/// `text` must be null or a NUL-terminated string; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sr_scenario_parse(text_ptr: *const c_char, out: *mut *mut SrScenario) -> SrStatus {
    guard(|| {
        check_out(out)?;
        let cfg = load_scenario(text(text_ptr, "text")?).map_err(core)?;
        put(out, Box::into_raw(Box::new(SrScenario(cfg))))
    })
}

/// Set one key from its scenario-file text. The configuration is validated
/// when a simulation is created from it.
///
/// # Safety
/// `scenario` must be a live handle or null; strings NUL-terminated or null.
#[no_mangle]
pub unsafe extern "C" fn sr_scenario_set(
    scenario: *mut SrScenario,
    key: *const c_char,
    value: *const c_char,
) -> SrStatus {
    guard(|| {
        let s = obj_mut(scenario, "scenario")?;
        s.0.set(text(key, "key")?, text(value, "value")?).map_err(core)
    })
}

/// Current value of `key` in scenario-file syntax.
///
/// # Safety
/// As for [`sr_scenario_set`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_scenario_get(
    scenario: *const SrScenario,
    key: *const c_char,
    out: *mut *mut c_char,
) -> SrStatus {
    guard(|| {
        check_out(out)?;
        let s = obj(scenario, "scenario")?;
        let k = text(key, "key")?;
        let v = s.0.get(k).ok_or_else(|| (SrStatus::Config, format!("invalid value for `{k}`: unknown key")))?;
        put_string(out, v)
    })
}

/// Check the whole configuration.
///
/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sr_scenario_validate(scenario: *const SrScenario) -> SrStatus {
    guard(|| obj(scenario, "scenario")?.0.validate().map_err(core))
}

/// Every key with its value, one `key = value` per line.
///
/// # Safety
/// `scenario` must be a live handle or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_scenario_to_text(scenario: *const SrScenario, out: *mut *mut c_char) -> SrStatus {
    guard(|| {
        check_out(out)?;
        let s = obj(scenario, "scenario")?;
        put_string(out, s.0.to_text())
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sr_scenario_free(scenario: *mut SrScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run a scenario to completion. On numerical divergence the status is
/// `NumericalDivergence` and `*out` still receives the partial log.
///
/// # Safety
/// `scenario` must be a live handle or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_run(scenario: *const SrScenario, out: *mut *mut SrLog) -> SrStatus {
    guard(|| {
        check_out(out)?;
        let s = obj(scenario, "scenario")?;
        match Simulator::new(&s.0).map_err(core)?.run() {
            Ok(log) => put(out, Box::into_raw(Box::new(SrLog(log)))),
            Err(RunError::Diverged { log, error }) => {
                put(out, Box::into_raw(Box::new(SrLog(log))))?;
                Err(core(error))
            }
            Err(RunError::Invalid(e)) => Err(core(e)),
        }
    })
}

/// Create a simulation positioned before its first step.
///
/// # Safety
/// `scenario` must be a live handle or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_simulator_new(scenario: *const SrScenario, out: *mut *mut SrSimulator) -> SrStatus {
    guard(|| {
        check_out(out)?;
        let sim = Simulator::new(&obj(scenario, "scenario")?.0).map_err(core)?;
        put(out, Box::into_raw(Box::new(SrSimulator(sim))))
    })
}

/// Advance one plant step. `*running` is false once the last row is written.
///
/// # Safety
/// `sim` must be a live handle or null; `running` writable or null.
#[no_mangle]
pub unsafe extern "C" fn sr_simulator_step(sim: *mut SrSimulator, running: *mut bool) -> SrStatus {
    guard(|| {
        let s = obj_mut(sim, "simulator")?;
        let more = s.0.step().map_err(core)?;
        if !running.is_null() {
            running.write(more);
        }
        Ok(())
    })
}

/// Most recent log row. `OutOfRange` before the first step.
///
/// # Safety
/// `sim` must be a live handle or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_simulator_last_row(sim: *const SrSimulator, out: *mut SrRow) -> SrStatus {
    guard(|| {
        check_out(out)?;
        let s = obj(sim, "simulator")?;
        let row = s.0.log().rows.last().ok_or((SrStatus::OutOfRange, "no rows yet".to_string()))?;
        put(out, SrRow::from(row))
    })
}

/// Simulated time of the next step, s.
///
/// # Safety
/// `sim` must be a live handle or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_simulator_time(sim: *const SrSimulator, out: *mut f64) -> SrStatus {
    guard(|| {
        check_out(out)?;
        put(out, obj(sim, "simulator")?.0.time())
    })
}

/// Consume the simulation and hand over its log. `sim` is freed even on error.
///
/// # Safety
/// `sim` must be null or a handle not yet freed; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_simulator_into_log(sim: *mut SrSimulator, out: *mut *mut SrLog) -> SrStatus {
    guard(|| {
        if sim.is_null() {
            return fail(SrStatus::NullPointer, "simulator is null");
        }
        let s = Box::from_raw(sim);
        check_out(out)?;
        put(out, Box::into_raw(Box::new(SrLog(s.0.into_log()))))
    })
}

/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sr_simulator_free(sim: *mut SrSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `log` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sr_log_row_count(log: *const SrLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.rows.len())
}

/// Number of events; 0 for a null handle.
///
/// # Safety
/// `log` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sr_log_event_count(log: *const SrLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.events.len())
}

/// Row `index`.
///
/// # Safety
/// `log` must be a live handle or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_log_row(log: *const SrLog, index: usize, out: *mut SrRow) -> SrStatus {
    guard(|| {
        check_out(out)?;
        let l = obj(log, "log")?;
        let row = l.0.rows.get(index).ok_or_else(|| {
            (SrStatus::OutOfRange, format!("row {index} out of range ({} rows)", l.0.rows.len()))
        })?;
        put(out, SrRow::from(row))
    })
}

/// Per-step CSV with `precision` decimals.
///
/// # Safety
/// `log` must be a live handle or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_log_csv(log: *const SrLog, precision: u32, out: *mut *mut c_char) -> SrStatus {
    guard(|| {
        check_out(out)?;
        put_string(out, write_csv(&obj(log, "log")?.0, precision as usize))
    })
}

/// Event log CSV with `precision` decimals.
///
/// # Safety
/// `log` must be a live handle or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_log_events_csv(log: *const SrLog, precision: u32, out: *mut *mut c_char) -> SrStatus {
    guard(|| {
        check_out(out)?;
        put_string(out, write_events_csv(&obj(log, "log")?.0, precision as usize))
    })
}

/// Headline metrics of the run.
///
/// # Safety
/// `log` must be a live handle or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_log_summary(log: *const SrLog, out: *mut SrSummary) -> SrStatus {
    guard(|| {
        check_out(out)?;
        let s = summarize(&obj(log, "log")?.0);
        let nan = |x: Option<f64>| x.unwrap_or(f64::NAN);
        let trip_flags = s.trips.iter().fold(0u32, |acc, t| acc | 1 << t.element.index());
        put(
            out,
            SrSummary {
                synced: s.synced,
                t_close: nan(s.t_close),
                close_dphi: nan(s.close_dphi),
                close_slip: nan(s.close_slip),
                close_dv: nan(s.close_dv),
                settle_time: nan(s.settle_time),
                final_rpm: nan(s.final_rpm),
                final_v_ll: nan(s.final_v_ll),
                final_field: nan(s.final_field),
                trip_count: s.trips.len() as u32,
                trip_flags,
                first_trip_t: nan(s.trips.first().map(|t| t.t_trip)),
            },
        )
    })
}

/// # Safety
/// `log` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sr_log_free(log: *mut SrLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;
    use sync_relay::protection::Element;

    #[test]
    fn trip_bits_follow_element_order() {
        let bits = [SR_TRIP_OC, SR_TRIP_OV, SR_TRIP_UV, SR_TRIP_OF, SR_TRIP_UF];
        for (e, b) in Element::ALL.into_iter().zip(bits) {
            assert_eq!(1u32 << e.index(), b);
        }
    }

    #[test]
    fn phase_codes_cover_every_phase() {
        for (i, p) in SyncPhase::ALL.into_iter().enumerate() {
            assert_eq!(SrSyncPhase::from(p) as usize, i);
        }
    }

    #[test]
    fn status_names_are_terminated() {
        for s in [SrStatus::Ok, SrStatus::Panic, SrStatus::Config] {
            let name = unsafe { CStr::from_ptr(sr_status_name(s)) };
            assert!(!name.to_bytes().is_empty());
        }
    }

    #[test]
    fn null_arguments_are_reported() {
        unsafe {
            assert_eq!(sr_scenario_parse(ptr::null(), ptr::null_mut()), SrStatus::NullPointer);
            let mut sc = ptr::null_mut();
            assert_eq!(sr_scenario_parse(ptr::null(), &mut sc), SrStatus::NullPointer);
            assert!(sc.is_null());
            let msg = CStr::from_ptr(sr_last_error()).to_str().unwrap();
            assert!(msg.contains("null"), "{msg}");
        }
    }
}

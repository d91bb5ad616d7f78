//! Definite-time protection elements with latching trips.

use crate::waveform::MeasurementSnapshot;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Element {
    OC,
    OV,
    UV,
    OF,
    UF,
}

impl Element {
    pub const ALL: [Element; 5] = [Element::OC, Element::OV, Element::UV, Element::OF, Element::UF];

    pub fn name(self) -> &'static str {
        match self {
            Element::OC => "OC",
            Element::OV => "OV",
            Element::UV => "UV",
            Element::OF => "OF",
            Element::UF => "UF",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtectionSettings {
    /// A.
    pub i_pickup: f64,
    /// L-L volts.
    pub v_over: f64,
    pub v_under: f64,
    pub f_over: f64,
    pub f_under: f64,
    /// Definite-time delays indexed by [`Element::index`].
    pub delays: [f64; 5],
    /// UV stays blind until the voltage has once exceeded this level.
    pub uv_armed_above: f64,
    /// OF and UF are blocked below this voltage, where frequency is not
    /// meaningful.
    pub f_block_below_v: f64,
}

impl Default for ProtectionSettings {
    fn default() -> Self {
        Self {
            i_pickup: 3.25,
            v_over: 440.0,
            v_under: 360.0,
            f_over: 50.5,
            f_under: 49.5,
            delays: [0.1, 0.5, 0.5, 0.5, 0.5],
            uv_armed_above: 380.0,
            f_block_below_v: 80.0,
        }
    }
}

impl ProtectionSettings {
    pub fn delay(&self, e: Element) -> f64 {
        self.delays[e.index()]
    }

    pub fn threshold(&self, e: Element) -> f64 {
        match e {
            Element::OC => self.i_pickup,
            Element::OV => self.v_over,
            Element::UV => self.v_under,
            Element::OF => self.f_over,
            Element::UF => self.f_under,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        for (k, v) in [
            ("i_pickup", self.i_pickup),
            ("v_over", self.v_over),
            ("v_under", self.v_under),
            ("f_over", self.f_over),
            ("f_under", self.f_under),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err((k, format!("must be > 0, got {v}")));
            }
        }
        if self.v_under >= self.v_over {
            return Err(("v_under", "must be below v_over".into()));
        }
        if self.f_under >= self.f_over {
            return Err(("f_under", "must be below f_over".into()));
        }
        const DELAY_KEYS: [&str; 5] = ["delay_oc", "delay_ov", "delay_uv", "delay_of", "delay_uf"];
        for (k, d) in DELAY_KEYS.iter().zip(self.delays) {
            if !(d.is_finite() && d >= 0.0) {
                return Err((k, format!("must be >= 0, got {d}")));
            }
        }
        if !(self.uv_armed_above.is_finite() && self.uv_armed_above > self.v_under) {
            return Err(("uv_arm", "must be above v_under".into()));
        }
        if !(self.f_block_below_v.is_finite() && self.f_block_below_v >= 0.0) {
            return Err(("f_block_v", "must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementState {
    pub element: Element,
    /// Time since the excursion was first seen.
    pub timer: f64,
    pub picked_up: bool,
    pub latched: bool,
}

impl ElementState {
    fn new(element: Element) -> Self {
        Self { element, timer: 0.0, picked_up: false, latched: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtectionState {
    pub elements: [ElementState; 5],
    pub uv_armed: bool,
}

impl Default for ProtectionState {
    fn default() -> Self {
        Self { elements: Element::ALL.map(ElementState::new), uv_armed: false }
    }
}

impl ProtectionState {
    pub fn tripped(&self) -> bool {
        self.elements.iter().any(|e| e.latched)
    }

    pub fn latched(&self) -> impl Iterator<Item = Element> + '_ {
        self.elements.iter().filter(|e| e.latched).map(|e| e.element)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripRecord {
    pub element: Element,
    pub t_trip: f64,
    pub measured_value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtectionOutput {
    pub state: ProtectionState,
    /// Elements that latched on this step, in [`Element::ALL`] order.
    pub trips: Vec<TripRecord>,
    /// True while any element is latched.
    pub trip: bool,
}

fn measured(e: Element, s: &MeasurementSnapshot) -> f64 {
    match e {
        Element::OC => s.i_rms,
        Element::OV | Element::UV => s.v_rms_ll,
        Element::OF | Element::UF => s.frequency,
    }
}

/// Advance every element by one snapshot.
///
/// The timer starts at zero on the first snapshot that violates the setting
/// and grows by `dt` on each further one, so an excursion that begins at
/// `t_s` trips at `t_s + delay`.
pub fn protection_step(
    settings: &ProtectionSettings,
    state: &ProtectionState,
    snapshot: &MeasurementSnapshot,
    dt: f64,
) -> ProtectionOutput {
    let mut next = *state;
    let v = snapshot.v_rms_ll;
    if v > settings.uv_armed_above {
        next.uv_armed = true;
    }
    let f_ok = v >= settings.f_block_below_v;
    let mut trips = Vec::new();

    for el in next.elements.iter_mut() {
        if el.latched {
            continue;
        }
        let x = measured(el.element, snapshot);
        let violated = x.is_finite()
            && match el.element {
                Element::OC => x >= settings.i_pickup,
                Element::OV => x > settings.v_over,
                Element::UV => next.uv_armed && x <= settings.v_under,
                Element::OF => f_ok && x > settings.f_over,
                Element::UF => f_ok && x < settings.f_under,
            };
        if !violated {
            el.timer = 0.0;
            el.picked_up = false;
            continue;
        }
        if el.picked_up {
            el.timer += dt;
        } else {
            el.picked_up = true;
            el.timer = 0.0;
        }
        if el.timer + TIME_EPS >= settings.delay(el.element) {
            el.latched = true;
            trips.push(TripRecord {
                element: el.element,
                t_trip: snapshot.t,
                measured_value: x,
                threshold: settings.threshold(el.element),
            });
        }
    }
    let trip = next.tripped();
    ProtectionOutput { state: next, trips, trip }
}

/// Operator reset: clear latches and timers. UV arming is kept.
pub fn reset_protection(state: &ProtectionState) -> ProtectionState {
    ProtectionState { elements: Element::ALL.map(ElementState::new), uv_armed: state.uv_armed }
}

//! Three-phase waveform synthesis and measurement.
//!
//! Everything here is a pure function of its inputs. The harness feeds these
//! routines with a sliding 40 ms window of samples taken at 10 kHz.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{ensure_finite, Error, Result};

pub const DEFAULT_SAMPLE_RATE: f64 = 10_000.0;
pub const DEFAULT_WINDOW: f64 = 0.04;

/// Phase RMS below which a phase is treated as dead (5 % of 230 V).
pub const DEFAULT_AMPLITUDE_FLOOR: f64 = 11.5;

/// Comparator hysteresis for crossing detection, as a fraction of window peak.
const CROSSING_HYSTERESIS: f64 = 0.1;
/// Samples with |x| below this fraction of peak take part in the local fit
/// around each crossing.
const CROSSING_FIT_LEVEL: f64 = 0.85;

const SEQUENCE_TOLERANCE_DEG: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ThreePhaseWaveform {
    pub sample_rate: f64,
    /// Time of the first sample.
    pub t0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ThreePhaseWaveform {
    pub fn new(sample_rate: f64, t0: f64, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let w = Self { sample_rate, t0, a, b, c };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample_rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if self.a.len() != self.b.len() || self.a.len() != self.c.len() {
            return Err(Error::InvalidArgument("phase arrays differ in length".into()));
        }
        if self.a.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "waveform needs at least 2 samples, got {}",
                self.a.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Time of the last sample; measurements are referenced to this instant.
    pub fn t_end(&self) -> f64 {
        self.t0 + (self.len() - 1) as f64 / self.sample_rate
    }

    pub fn phases(&self) -> [&[f64]; 3] {
        [&self.a, &self.b, &self.c]
    }

    /// Same samples with phases b and c exchanged (reversed sequence).
    pub fn swap_bc(&self) -> Self {
        Self {
            sample_rate: self.sample_rate,
            t0: self.t0,
            a: self.a.clone(),
            b: self.c.clone(),
            c: self.b.clone(),
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| x * k).collect();
        Self {
            sample_rate: self.sample_rate,
            t0: self.t0,
            a: s(&self.a),
            b: s(&self.b),
            c: s(&self.c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSnapshot {
    pub v_rms_ll: f64,
    pub frequency: f64,
    /// Phase of the phase-a fundamental at `t`, degrees in [0, 360).
    pub phase_deg: f64,
    pub i_rms: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseSequence {
    Positive,
    Negative,
    Indeterminate,
}

impl PhaseSequence {
    pub fn name(self) -> &'static str {
        match self {
            PhaseSequence::Positive => "positive",
            PhaseSequence::Negative => "negative",
            PhaseSequence::Indeterminate => "indeterminate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "positive" => Some(PhaseSequence::Positive),
            "negative" => Some(PhaseSequence::Negative),
            "indeterminate" => Some(PhaseSequence::Indeterminate),
            _ => None,
        }
    }
}

/// Balanced positive-sequence set: b lags a by 120°, c lags b by 120°.
pub fn synthesize_three_phase(
    v_rms_ln: f64,
    frequency: f64,
    phase0_deg: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<ThreePhaseWaveform> {
    for (name, v) in [
        ("v_rms_ln", v_rms_ln),
        ("frequency", frequency),
        ("phase0_deg", phase0_deg),
        ("duration", duration),
        ("sample_rate", sample_rate),
    ] {
        ensure_finite(name, v)?;
    }
    if frequency < 0.0 || v_rms_ln < 0.0 || duration < 0.0 || sample_rate <= 0.0 {
        return Err(Error::InvalidArgument(
            "amplitude, frequency and duration must be non-negative, sample rate positive".into(),
        ));
    }
    let n = (duration * sample_rate).round() as usize;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "duration·sample_rate must be at least 2, got {n}"
        )));
    }
    let peak = SQRT_2 * v_rms_ln;
    let phase0 = phase0_deg.to_radians();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    for k in 0..n {
        let theta = 2.0 * PI * frequency * (k as f64 / sample_rate) + phase0;
        let [va, vb, vc] = three_phase_at(peak, theta);
        a.push(va);
        b.push(vb);
        c.push(vc);
    }
    ThreePhaseWaveform::new(sample_rate, 0.0, a, b, c)
}

/// Instantaneous positive-sequence values for phase-a angle `theta` (rad).
#[inline]
pub fn three_phase_at(peak: f64, theta: f64) -> [f64; 3] {
    const SHIFT: f64 = 2.0 * PI / 3.0;
    [
        peak * libm::sin(theta),
        peak * libm::sin(theta - SHIFT),
        peak * libm::sin(theta + SHIFT),
    ]
}

fn phase_rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Mean of the three per-phase RMS values (line-to-neutral).
pub fn rms(w: &ThreePhaseWaveform) -> Result<f64> {
    w.validate()?;
    Ok(w.phases().iter().map(|p| phase_rms(p)).sum::<f64>() / 3.0)
}

/// Zero crossings of `x` as fractional sample indices, alternating in
/// direction. Each crossing is first located by a least-squares line through
/// the samples around it; with two or more crossings the spacing gives a
/// period, and each crossing is refined by a least-squares sinusoid of that
/// period over the same samples. Crossings whose fit region is cut by the
/// window edge are dropped.
pub fn zero_crossings(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if n < 2 || peak == 0.0 || !peak.is_finite() {
        return Vec::new();
    }
    let hyst = CROSSING_HYSTERESIS * peak;
    let fit = CROSSING_FIT_LEVEL * peak;

    let mut segments: Vec<(usize, usize, f64)> = Vec::new();
    let mut high: Option<bool> = None;
    for k in 0..n {
        let side = if x[k] > hyst {
            true
        } else if x[k] < -hyst {
            false
        } else {
            continue;
        };
        if high.is_some_and(|h| h != side) {
            // last sign change before k
            let mut j = k;
            while j > 0 && (x[j - 1] > 0.0) == side {
                j -= 1;
            }
            if j > 0 {
                let mut lo = j - 1;
                while lo > 0 && x[lo - 1].abs() < fit {
                    lo -= 1;
                }
                let mut hi = j;
                while hi + 1 < n && x[hi + 1].abs() < fit {
                    hi += 1;
                }
                let cut = (lo == 0 && x[0].abs() < fit) || (hi == n - 1 && x[n - 1].abs() < fit);
                if !cut {
                    if let Some(root) = line_root(&x[lo..=hi]) {
                        segments.push((lo, hi, lo as f64 + root));
                    }
                }
            }
        }
        high = Some(side);
    }
    let rough: Vec<f64> = segments.iter().map(|s| s.2).collect();
    let Some(half_period) = half_period(&rough) else {
        return rough;
    };
    let omega = PI / half_period;
    segments
        .iter()
        .map(|&(lo, hi, guess)| sine_root(&x[lo..=hi], guess - lo as f64, omega).map_or(guess, |r| lo as f64 + r))
        .collect()
}

/// Least-squares spacing of consecutive crossings, in samples.
fn half_period(c: &[f64]) -> Option<f64> {
    if c.len() < 2 {
        return None;
    }
    let m = c.len() as f64;
    let mean_i = (m - 1.0) / 2.0;
    let mean_c = c.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, ci) in c.iter().enumerate() {
        let di = i as f64 - mean_i;
        sxy += di * (ci - mean_c);
        sxx += di * di;
    }
    let h = sxy / sxx;
    (h > 0.0 && h.is_finite()).then_some(h)
}

/// Root of the least-squares line through `(i, y[i])`.
fn line_root(y: &[f64]) -> Option<f64> {
    let m = y.len() as f64;
    if y.len() < 2 {
        return None;
    }
    let mean_i = (m - 1.0) / 2.0;
    let mean_y = y.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let di = i as f64 - mean_i;
        sxy += di * (v - mean_y);
        sxx += di * di;
    }
    let slope = sxy / sxx;
    if slope == 0.0 || !slope.is_finite() {
        return None;
    }
    Some(mean_i - mean_y / slope)
}

/// Root nearest `guess` of the least-squares fit p·sin(ω(i − guess)) +
/// q·cos(ω(i − guess)) through `(i, y[i])`, ω in radians per sample.
fn sine_root(y: &[f64], guess: f64, omega: f64) -> Option<f64> {
    if y.len() < 3 {
        return None;
    }
    let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let (s, c) = libm::sincos(omega * (i as f64 - guess));
        ss += s * s;
        sc += s * c;
        cc += c * c;
        ys += v * s;
        yc += v * c;
    }
    let det = ss * cc - sc * sc;
    if det.abs() < 1e-300 {
        return None;
    }
    let p = (ys * cc - yc * sc) / det;
    let q = (yc * ss - ys * sc) / det;
    if p == 0.0 {
        return None;
    }
    // p·sin(ωu) + q·cos(ωu) = 0 nearest u = 0
    let u = libm::atan(-q / p) / omega;
    (u.is_finite() && u.abs() < 2.0).then_some(guess + u)
}

/// Fundamental frequency from the zero crossings of every live phase.
///
/// Consecutive crossings are half a period apart; the period is taken from
/// the least-squares slope of crossing time against crossing index, common
/// to all phases with a per-phase offset. A phase whose peak is below half
/// the largest phase peak is left out.
pub fn estimate_frequency(w: &ThreePhaseWaveform) -> Result<f64> {
    w.validate()?;
    let peaks = w.phases().map(|p| p.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let top = peaks.iter().fold(0.0f64, |m, v| m.max(*v));
    let (mut sxy, mut sxx, mut used) = (0.0, 0.0, 0);
    for (p, peak) in w.phases().iter().zip(peaks) {
        if peak < 0.5 * top {
            continue;
        }
        let c = zero_crossings(p);
        if c.len() < 2 {
            continue;
        }
        used += c.len();
        let m = c.len() as f64;
        let mean_i = (m - 1.0) / 2.0;
        let mean_c = c.iter().sum::<f64>() / m;
        for (i, ci) in c.iter().enumerate() {
            let di = i as f64 - mean_i;
            sxy += di * (ci - mean_c);
            sxx += di * di;
        }
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientSignal(format!("{used} usable zero crossings in {} samples", w.len())));
    }
    let half_period_samples = sxy / sxx;
    if !(half_period_samples > 0.0 && half_period_samples.is_finite()) {
        return Err(Error::InsufficientSignal("degenerate crossing spacing".into()));
    }
    Ok(w.sample_rate / (2.0 * half_period_samples))
}

/// Amplitude (peak) and phase of the component of `x` at `frequency`,
/// fitted by least squares on a sin/cos pair. The phase is that of
/// `A·sin(2πf(t − t_ref) + φ)`, in degrees [0, 360).
pub fn fundamental(x: &[f64], sample_rate: f64, t0: f64, frequency: f64, t_ref: f64) -> (f64, f64) {
    let w = 2.0 * PI * frequency;
    let (mut ss, mut sc, mut cc, mut xs, mut xc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, v) in x.iter().enumerate() {
        let theta = w * (t0 + k as f64 / sample_rate - t_ref);
        let (s, c) = libm::sincos(theta);
        ss += s * s;
        sc += s * c;
        cc += c * c;
        xs += v * s;
        xc += v * c;
    }
    let det = ss * cc - sc * sc;
    if det.abs() < 1e-12 * (ss * cc).max(1e-300) {
        return (0.0, 0.0);
    }
    let alpha = (xs * cc - xc * sc) / det;
    let beta = (xc * ss - xs * sc) / det;
    (alpha.hypot(beta), wrap_deg_360(libm::atan2(beta, alpha).to_degrees()))
}

/// Line-to-line RMS, frequency and phase of the window, referenced to the
/// last sample. Fails with `InsufficientSignal` when the frequency cannot be
/// estimated.
pub fn measure(w: &ThreePhaseWaveform, i_rms: f64) -> Result<MeasurementSnapshot> {
    let v_ln = rms(w)?;
    let frequency = estimate_frequency(w)?;
    let t = w.t_end();
    let (_, phase_deg) = fundamental(&w.a, w.sample_rate, w.t0, frequency, t);
    Ok(MeasurementSnapshot {
        v_rms_ll: v_ln * 3f64.sqrt(),
        frequency,
        phase_deg,
        i_rms,
        t,
    })
}

pub fn wrap_deg_360(x: f64) -> f64 {
    let r = x.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// `a − b` wrapped into (−180, 180].
pub fn phase_difference(phase_a_deg: f64, phase_b_deg: f64) -> f64 {
    wrap_deg_180(phase_a_deg - phase_b_deg)
}

pub fn wrap_deg_180(x: f64) -> f64 {
    let r = 180.0 - wrap_deg_360(180.0 - x);
    if r <= -180.0 {
        180.0
    } else {
        r
    }
}

pub fn check_phase_sequence(w: &ThreePhaseWaveform) -> PhaseSequence {
    check_phase_sequence_with_floor(w, DEFAULT_AMPLITUDE_FLOOR)
}

/// Positive when phase b lags phase a by 120° ± 30°, Negative when it leads
/// by the same margin.
pub fn check_phase_sequence_with_floor(w: &ThreePhaseWaveform, floor_rms: f64) -> PhaseSequence {
    if w.validate().is_err() || w.phases().iter().any(|p| phase_rms(p) < floor_rms) {
        return PhaseSequence::Indeterminate;
    }
    let Ok(f) = estimate_frequency(w) else {
        return PhaseSequence::Indeterminate;
    };
    let t_ref = w.t_end();
    let (_, pa) = fundamental(&w.a, w.sample_rate, w.t0, f, t_ref);
    let (_, pb) = fundamental(&w.b, w.sample_rate, w.t0, f, t_ref);
    let lag = phase_difference(pa, pb);
    if (lag - 120.0).abs() <= SEQUENCE_TOLERANCE_DEG {
        PhaseSequence::Positive
    } else if (lag + 120.0).abs() <= SEQUENCE_TOLERANCE_DEG {
        PhaseSequence::Negative
    } else {
        PhaseSequence::Indeterminate
    }
}

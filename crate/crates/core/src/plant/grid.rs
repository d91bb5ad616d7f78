use crate::error::{Error, Result};
use crate::waveform::wrap_deg_360;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStep {
    pub t: f64,
    pub v_ll: f64,
    pub frequency: f64,
}

/// Infinite-bus source with an optional schedule of step changes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSource {
    pub v_ll: f64,
    pub frequency: f64,
    pub phase0_deg: f64,
    pub schedule: Vec<GridStep>,
}

impl Default for GridSource {
    fn default() -> Self {
        Self { v_ll: 400.0, frequency: 50.0, phase0_deg: 0.0, schedule: Vec::new() }
    }
}

impl GridSource {
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if !(self.v_ll.is_finite() && self.v_ll >= 0.0) {
            return Err(("v_ll", format!("must be >= 0, got {}", self.v_ll)));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(("frequency", format!("must be > 0, got {}", self.frequency)));
        }
        if !self.phase0_deg.is_finite() {
            return Err(("phase0", "must be finite".into()));
        }
        let mut last = f64::NEG_INFINITY;
        for s in &self.schedule {
            if !(s.t.is_finite() && s.t > last) {
                return Err(("schedule", "step times must be strictly increasing".into()));
            }
            if !(s.v_ll.is_finite() && s.v_ll >= 0.0 && s.frequency.is_finite() && s.frequency > 0.0) {
                return Err(("schedule", format!("invalid step at t={}", s.t)));
            }
            last = s.t;
        }
        Ok(())
    }

    /// Voltage and frequency in force at `t`.
    pub fn setting_at(&self, t: f64) -> (f64, f64) {
        self.schedule
            .iter()
            .take_while(|s| s.t <= t + 1e-12)
            .last()
            .map_or((self.v_ll, self.frequency), |s| (s.v_ll, s.frequency))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub v_ll: f64,
    pub frequency: f64,
    pub phase_deg: f64,
}

/// Running grid: accumulates phase-a angle as the schedule plays out.
#[derive(Debug, Clone)]
pub struct GridBus {
    source: GridSource,
    t: f64,
    phase_deg: f64,
}

impl GridBus {
    pub fn new(source: GridSource) -> Result<Self> {
        source
            .validate()
            .map_err(|(k, m)| Error::InvalidArgument(format!("grid {k}: {m}")))?;
        let phase_deg = wrap_deg_360(source.phase0_deg);
        Ok(Self { source, t: 0.0, phase_deg })
    }

    pub fn source(&self) -> &GridSource {
        &self.source
    }

    pub fn point(&self) -> GridPoint {
        let (v_ll, frequency) = self.source.setting_at(self.t);
        GridPoint { v_ll, frequency, phase_deg: self.phase_deg }
    }

    /// Frequency is held at its value from the start of the step.
    pub fn advance(&mut self, dt: f64) {
        let (_, f) = self.source.setting_at(self.t);
        self.phase_deg = wrap_deg_360(self.phase_deg + 360.0 * f * dt);
        self.t += dt;
    }

    /// Used by the harness to keep time as `k·dt` rather than a running sum.
    pub fn set_time(&mut self, t: f64) {
        self.t = t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_applies_in_order() {
        let src = GridSource {
            schedule: vec![
                GridStep { t: 1.0, v_ll: 390.0, frequency: 49.5 },
                GridStep { t: 2.0, v_ll: 410.0, frequency: 50.2 },
            ],
            ..GridSource::default()
        };
        assert!(src.validate().is_ok());
        assert_eq!(src.setting_at(0.5), (400.0, 50.0));
        assert_eq!(src.setting_at(1.0), (390.0, 49.5));
        assert_eq!(src.setting_at(5.0), (410.0, 50.2));
    }

    #[test]
    fn rejects_bad_sources() {
        let bad = GridSource { frequency: -1.0, ..GridSource::default() };
        assert_eq!(bad.validate().unwrap_err().0, "frequency");
        let bad = GridSource {
            schedule: vec![
                GridStep { t: 2.0, v_ll: 400.0, frequency: 50.0 },
                GridStep { t: 1.0, v_ll: 400.0, frequency: 50.0 },
            ],
            ..GridSource::default()
        };
        assert_eq!(bad.validate().unwrap_err().0, "schedule");
    }

    #[test]
    fn phase_advances_at_frequency() {
        let mut bus = GridBus::new(GridSource { phase0_deg: 10.0, ..GridSource::default() }).unwrap();
        for _ in 0..5 {
            bus.advance(1e-3);
        }
        // 50 Hz → 18°/ms
        assert!((bus.point().phase_deg - 100.0).abs() < 1e-9);
    }
}

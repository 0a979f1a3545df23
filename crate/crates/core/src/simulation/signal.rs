use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Sine,
    Square,
    Constant,
}

/// Parametric periodic input. A square wave alternates between
/// `bias + amplitude` (first `duty` fraction of each period) and
/// `bias - amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub kind: SignalKind,
    /// Hz
    #[serde(default)]
    pub freq: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub bias: f64,
    /// rad
    #[serde(default)]
    pub phase: f64,
    #[serde(default = "default_duty")]
    pub duty: f64,
}

fn default_duty() -> f64 {
    0.5
}

impl SignalSpec {
    pub fn sine(freq: f64, amplitude: f64, bias: f64, phase: f64) -> Self {
        Self {
            kind: SignalKind::Sine,
            freq,
            amplitude,
            bias,
            phase,
            duty: default_duty(),
        }
    }

    /// Square wave switching between `lo` and `hi`.
    pub fn square(freq: f64, lo: f64, hi: f64, duty: f64, phase: f64) -> Self {
        Self {
            kind: SignalKind::Square,
            freq,
            amplitude: (hi - lo) / 2.0,
            bias: (hi + lo) / 2.0,
            phase,
            duty,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            kind: SignalKind::Constant,
            freq: 0.0,
            amplitude: 0.0,
            bias: value,
            phase: 0.0,
            duty: default_duty(),
        }
    }

    pub fn with_phase_offset(mut self, offset: f64) -> Self {
        self.phase += offset;
        self
    }

    pub fn with_freq(mut self, freq: f64) -> Self {
        self.freq = freq;
        self
    }

    pub fn lo(&self) -> f64 {
        self.bias - self.amplitude.abs()
    }

    pub fn hi(&self) -> f64 {
        self.bias + self.amplitude.abs()
    }

    /// Closed range of values the signal can take.
    pub fn range(&self) -> (f64, f64) {
        match self.kind {
            SignalKind::Constant => (self.bias, self.bias),
            _ => (self.lo(), self.hi()),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.range() == (0.0, 0.0)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let fields = [
            ("freq", self.freq),
            ("amplitude", self.amplitude),
            ("bias", self.bias),
            ("phase", self.phase),
            ("duty", self.duty),
        ];
        for (f, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name}.{f}"), "must be finite"));
            }
        }
        if self.freq < 0.0 {
            return Err(Error::invalid(format!("{name}.freq"), "must be >= 0"));
        }
        if self.kind == SignalKind::Square && !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::invalid(format!("{name}.duty"), "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Value at sample `n` of a grid with period `dt`.
    pub fn sample(&self, n: usize, dt: f64) -> f64 {
        self.value_at(n as f64 * dt)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self.kind {
            SignalKind::Sine => self.bias + self.amplitude * (TAU * self.freq * t + self.phase).sin(),
            SignalKind::Square => {
                let cycle = (self.freq * t + self.phase / TAU).rem_euclid(1.0);
                if cycle < self.duty {
                    self.hi()
                } else {
                    self.lo()
                }
            }
            SignalKind::Constant => self.bias,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sine_samples() {
        let s = SignalSpec::sine(1.0, 1.0, 0.0, 0.0);
        assert_eq!(s.sample(0, 0.001), 0.0);
        let s = SignalSpec::sine(1.0, 2.0, 3.0, 0.0);
        assert_relative_eq!(s.sample(250, 0.001), 5.0, max_relative = 1e-15);
    }

    #[test]
    fn square_half_period_switching() {
        let s = SignalSpec::square(1.0, 0.1, 1.0, 0.5, 0.0);
        assert_relative_eq!(s.value_at(0.25), 1.0, max_relative = 1e-15);
        assert_relative_eq!(s.value_at(0.75), 0.1, max_relative = 1e-15);
        assert_relative_eq!(s.sample(250, 0.001), 1.0, max_relative = 1e-15);
        assert_relative_eq!(s.sample(750, 0.001), 0.1, max_relative = 1e-15);
    }

    #[test]
    fn square_phase_shifts_the_window() {
        // a quarter-period lead moves the high window to [0.75, 1.25)
        let s = SignalSpec::square(1.0, 0.0, 1.0, 0.5, std::f64::consts::FRAC_PI_2);
        assert_eq!(s.value_at(0.1), 1.0);
        assert_eq!(s.value_at(0.3), 0.0);
        assert_eq!(s.value_at(0.8), 1.0);
    }

    #[test]
    fn constant_signal() {
        let s = SignalSpec::constant(4.2);
        assert_eq!(s.sample(12345, 0.01), 4.2);
        assert!(SignalSpec::constant(0.0).is_identically_zero());
    }

    #[test]
    fn validation() {
        assert!(SignalSpec::square(1.0, 0.1, 1.0, 1.0, 0.0).validate("mu1").is_err());
        assert!(SignalSpec::sine(-1.0, 1.0, 0.0, 0.0).validate("fa").is_err());
        let err = SignalSpec::sine(f64::NAN, 1.0, 0.0, 0.0).validate("fa").unwrap_err();
        assert!(err.to_string().contains("fa.freq"));
    }
}

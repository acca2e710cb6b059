//! Periodic bias waveforms.
//!
//! A [`BiasSpec`] couples a waveform shape with its period `T`. Evaluation is
//! periodic by reduction of `t` modulo `T`, and at a discontinuity the left
//! limit is returned. The integrator never steps across a jump: it asks for
//! [`BiasSpec::jump_points`] and integrates each smooth piece separately.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of one period of the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    /// `f = level`.
    Constant { level: f64 },
    /// `f = offset + amplitude * cos(2π/T * (t - t0))`.
    Sinusoidal {
        offset: f64,
        amplitude: f64,
        #[serde(default)]
        t0: f64,
    },
    /// DC offset plus a zero-mean train of rectangular pulses. The plateau
    /// occupies `duty * T` centered on `T/2`; its height follows from the
    /// signed pulse area `pulse_integral`.
    RectPulseTrain {
        iota_dc: f64,
        pulse_integral: f64,
        duty: f64,
    },
    /// Piecewise constant table: `values[i]` holds on
    /// `(breakpoints[i], breakpoints[i+1]]`, the last entry wrapping around
    /// the period.
    PiecewiseTable {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

/// A validated periodic bias `f(t) = f(t + T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBiasSpec", into = "RawBiasSpec")]
pub struct BiasSpec {
    period: f64,
    waveform: Waveform,
}

#[derive(Serialize, Deserialize)]
struct RawBiasSpec {
    period: f64,
    #[serde(flatten)]
    waveform: Waveform,
}

impl TryFrom<RawBiasSpec> for BiasSpec {
    type Error = Error;

    fn try_from(raw: RawBiasSpec) -> Result<Self> {
        BiasSpec::new(raw.period, raw.waveform)
    }
}

impl From<BiasSpec> for RawBiasSpec {
    fn from(spec: BiasSpec) -> Self {
        RawBiasSpec {
            period: spec.period,
            waveform: spec.waveform,
        }
    }
}

impl BiasSpec {
    pub fn new(period: f64, waveform: Waveform) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidBias(format!(
                "period must be positive, got {period}"
            )));
        }
        match &waveform {
            Waveform::Constant { level } => check_finite("level", *level)?,
            Waveform::Sinusoidal {
                offset,
                amplitude,
                t0,
            } => {
                check_finite("offset", *offset)?;
                check_finite("amplitude", *amplitude)?;
                check_finite("t0", *t0)?;
            }
            Waveform::RectPulseTrain {
                iota_dc,
                pulse_integral,
                duty,
            } => {
                check_finite("iota_dc", *iota_dc)?;
                check_finite("pulse_integral", *pulse_integral)?;
                if !(*duty > 0.0 && *duty < 1.0) {
                    return Err(Error::InvalidBias(format!(
                        "duty must lie in (0, 1), got {duty}"
                    )));
                }
            }
            Waveform::PiecewiseTable {
                breakpoints,
                values,
            } => {
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return Err(Error::InvalidBias(
                        "piecewise table needs matching, non-empty breakpoints and values".into(),
                    ));
                }
                for v in values {
                    check_finite("value", *v)?;
                }
                if breakpoints.iter().any(|b| !(0.0..period).contains(b)) {
                    return Err(Error::InvalidBias("breakpoints must lie in [0, T)".into()));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidBias(
                        "breakpoints must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(BiasSpec { period, waveform })
    }

    pub fn constant(period: f64, level: f64) -> Result<Self> {
        Self::new(period, Waveform::Constant { level })
    }

    pub fn sinusoidal(period: f64, offset: f64, amplitude: f64, t0: f64) -> Result<Self> {
        Self::new(
            period,
            Waveform::Sinusoidal {
                offset,
                amplitude,
                t0,
            },
        )
    }

    pub fn rect_pulse_train(
        period: f64,
        iota_dc: f64,
        pulse_integral: f64,
        duty: f64,
    ) -> Result<Self> {
        Self::new(
            period,
            Waveform::RectPulseTrain {
                iota_dc,
                pulse_integral,
                duty,
            },
        )
    }

    pub fn piecewise_table(period: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(
            period,
            Waveform::PiecewiseTable {
                breakpoints,
                values,
            },
        )
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn waveform(&self) -> &Waveform {
        &self.waveform
    }

    /// Angular frequency `2π/T` of the drive.
    pub fn omega(&self) -> f64 {
        TAU / self.period
    }

    /// `f(t)`, left-continuous at jumps.
    pub fn evaluate(&self, t: f64) -> f64 {
        let s = self.reduce(t);
        match &self.waveform {
            Waveform::Constant { level } => *level,
            Waveform::Sinusoidal {
                offset,
                amplitude,
                t0,
            } => offset + amplitude * (self.omega() * (s - t0)).cos(),
            Waveform::RectPulseTrain { .. } => {
                let (lo, hi) = self.plateau();
                let (base, height) = self.pulse_levels();
                if s > lo && s <= hi {
                    base + height
                } else {
                    base
                }
            }
            Waveform::PiecewiseTable {
                breakpoints,
                values,
            } => {
                let idx = breakpoints.partition_point(|&b| b < s);
                if idx == 0 {
                    values[values.len() - 1]
                } else {
                    values[idx - 1]
                }
            }
        }
    }

    /// Discontinuities of `f` in `[0, T)`, sorted.
    pub fn jump_points(&self) -> Vec<f64> {
        match &self.waveform {
            Waveform::Constant { .. } | Waveform::Sinusoidal { .. } => Vec::new(),
            Waveform::RectPulseTrain { pulse_integral, .. } => {
                if *pulse_integral == 0.0 {
                    Vec::new()
                } else {
                    let (lo, hi) = self.plateau();
                    vec![lo, hi]
                }
            }
            Waveform::PiecewiseTable {
                breakpoints,
                values,
            } => {
                let n = values.len();
                (0..n)
                    .filter(|&i| values[(i + n - 1) % n] != values[i])
                    .map(|i| breakpoints[i])
                    .collect()
            }
        }
    }

    /// Periodic images of the jump points lying strictly inside `(lo, hi)`.
    pub fn jumps_between(&self, lo: f64, hi: f64) -> Vec<f64> {
        let jumps = self.jump_points();
        if jumps.is_empty() || hi <= lo {
            return Vec::new();
        }
        let t = self.period;
        let first = (lo / t).floor() as i64;
        let last = (hi / t).floor() as i64;
        let mut out = Vec::new();
        for n in first..=last {
            let shift = n as f64 * t;
            for &p in &jumps {
                let x = shift + p;
                if x > lo && x < hi {
                    // Points closer than rounding noise to an interval end are
                    // treated as the end itself.
                    let tol = 1e-12 * t.max(hi.abs());
                    if x - lo > tol && hi - x > tol {
                        out.push(x);
                    }
                }
            }
        }
        out
    }

    /// Mean of `f` over one period.
    pub fn dc_component(&self) -> f64 {
        match &self.waveform {
            Waveform::Constant { level } => *level,
            Waveform::Sinusoidal { .. } => {
                // The trapezoid rule is exact for a trigonometric polynomial
                // of this degree.
                let n = 64;
                let h = self.period / n as f64;
                (0..n).map(|i| self.evaluate(i as f64 * h)).sum::<f64>() / n as f64
            }
            Waveform::RectPulseTrain { duty, .. } => {
                let (base, height) = self.pulse_levels();
                base * (1.0 - duty) + (base + height) * duty
            }
            Waveform::PiecewiseTable {
                breakpoints,
                values,
            } => {
                let n = values.len();
                let mut acc = 0.0;
                for i in 0..n {
                    let start = breakpoints[i];
                    let end = if i + 1 < n {
                        breakpoints[i + 1]
                    } else {
                        breakpoints[0] + self.period
                    };
                    acc += (end - start) * values[i];
                }
                acc / self.period
            }
        }
    }

    /// The same waveform shape with its mean moved to `iota_dc`.
    pub fn with_dc(&self, iota_dc: f64) -> BiasSpec {
        let waveform = match &self.waveform {
            Waveform::Constant { .. } => Waveform::Constant { level: iota_dc },
            Waveform::Sinusoidal { amplitude, t0, .. } => Waveform::Sinusoidal {
                offset: iota_dc,
                amplitude: *amplitude,
                t0: *t0,
            },
            Waveform::RectPulseTrain {
                pulse_integral,
                duty,
                ..
            } => Waveform::RectPulseTrain {
                iota_dc,
                pulse_integral: *pulse_integral,
                duty: *duty,
            },
            Waveform::PiecewiseTable {
                breakpoints,
                values,
            } => {
                let shift = iota_dc - self.dc_component();
                Waveform::PiecewiseTable {
                    breakpoints: breakpoints.clone(),
                    values: values.iter().map(|v| v + shift).collect(),
                }
            }
        };
        BiasSpec {
            period: self.period,
            waveform,
        }
    }

    /// Evaluator for `f` restricted to a smooth piece `(lo, hi)` and extended
    /// continuously to its closure. Used by the integrator so that stage
    /// evaluations at a piece boundary see the value from inside the piece.
    pub(crate) fn piece(&self, lo: f64, hi: f64) -> Piece<'_> {
        match &self.waveform {
            Waveform::Sinusoidal { .. } | Waveform::Constant { .. } => Piece::Smooth(self),
            _ => Piece::Level(self.evaluate(0.5 * (lo + hi))),
        }
    }

    fn reduce(&self, t: f64) -> f64 {
        let s = t.rem_euclid(self.period);
        if s >= self.period {
            0.0
        } else {
            s
        }
    }

    fn plateau(&self) -> (f64, f64) {
        match &self.waveform {
            Waveform::RectPulseTrain { duty, .. } => {
                let half = 0.5 * duty * self.period;
                (0.5 * self.period - half, 0.5 * self.period + half)
            }
            _ => unreachable!("plateau of a non-pulse waveform"),
        }
    }

    /// Baseline level and plateau height above it.
    fn pulse_levels(&self) -> (f64, f64) {
        match &self.waveform {
            Waveform::RectPulseTrain {
                iota_dc,
                pulse_integral,
                duty,
            } => {
                let height = pulse_integral / (duty * self.period);
                (iota_dc - pulse_integral / self.period, height)
            }
            _ => unreachable!("pulse levels of a non-pulse waveform"),
        }
    }
}

pub(crate) enum Piece<'a> {
    Smooth(&'a BiasSpec),
    Level(f64),
}

impl Piece<'_> {
    #[inline]
    pub(crate) fn at(&self, t: f64) -> f64 {
        match self {
            Piece::Smooth(spec) => spec.evaluate(t),
            Piece::Level(v) => *v,
        }
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBias(format!("{name} must be finite")))
    }
}

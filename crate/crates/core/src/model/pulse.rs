use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Envelope amplitude below which the drive is treated as switched off,
/// relative to its peak. For a Gaussian this is reached at `8.5 tau_d`.
pub const DRIVE_CUTOFF: f64 = 2.3e-16;

/// Distance from the pulse center, in units of `tau_d`, where a Gaussian
/// envelope falls below [`DRIVE_CUTOFF`].
pub const GAUSSIAN_SUPPORT_WIDTHS: f64 = 8.5;

/// Default offset of the pulse center from the simulation origin, in units of
/// `tau_d`.
pub const DEFAULT_CENTER_WIDTHS: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PulseShape {
    Gaussian,
    /// Piecewise-linear envelope through `(t, Omega(t))` samples, zero outside.
    Tabulated(Vec<(f64, f64)>),
}

/// Time-dependent Rabi drive `Omega(t)`.
///
/// The Gaussian form is `theta / (sqrt(2 pi) tau_d) exp(-(t - t_center)^2 / (2 tau_d^2))`,
/// whose integral over the real line is exactly `theta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub theta: f64,
    pub tau_d: f64,
    pub t_center: f64,
    pub shape: PulseShape,
}

impl PulseEnvelope {
    /// Gaussian pulse of area `theta` (radians) centered at `5 tau_d`.
    pub fn gaussian(theta: f64, tau_d: f64) -> Result<Self> {
        if !(tau_d > 0.0) || !tau_d.is_finite() {
            return Err(Error::InvalidModel(format!("pulse duration must be > 0, got {tau_d}")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidModel("pulse area must be finite".into()));
        }
        Ok(Self { theta, tau_d, t_center: DEFAULT_CENTER_WIDTHS * tau_d, shape: PulseShape::Gaussian })
    }

    /// Gaussian pulse with the area given in multiples of pi.
    pub fn gaussian_pi(theta_over_pi: f64, tau_d: f64) -> Result<Self> {
        Self::gaussian(theta_over_pi * std::f64::consts::PI, tau_d)
    }

    /// No drive at all.
    pub fn off() -> Self {
        Self { theta: 0.0, tau_d: 1.0, t_center: 0.0, shape: PulseShape::Gaussian }
    }

    /// Tabulated envelope, linearly interpolated between strictly increasing sample times.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidModel("tabulated envelope needs at least two samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidModel("tabulated envelope times must increase".into()));
        }
        let area = samples.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
        let (t0, t1) = (samples[0].0, samples[samples.len() - 1].0);
        Ok(Self {
            theta: area,
            tau_d: (t1 - t0) / 2.0,
            t_center: 0.5 * (t0 + t1),
            shape: PulseShape::Tabulated(samples),
        })
    }

    pub fn with_center(mut self, t_center: f64) -> Self {
        if let PulseShape::Tabulated(samples) = &mut self.shape {
            let shift = t_center - self.t_center;
            samples.iter_mut().for_each(|s| s.0 += shift);
        }
        self.t_center = t_center;
        self
    }

    /// Envelope at a given offset from the pulse center. Even in `dt` bit for bit.
    pub fn at_offset(&self, dt: f64) -> f64 {
        match &self.shape {
            PulseShape::Gaussian => {
                if self.theta == 0.0 {
                    return 0.0;
                }
                let x = dt / self.tau_d;
                self.peak() * (-0.5 * x * x).exp()
            }
            PulseShape::Tabulated(_) => self.at(self.t_center + dt),
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match &self.shape {
            PulseShape::Gaussian => self.at_offset(t - self.t_center),
            PulseShape::Tabulated(samples) => {
                let i = samples.partition_point(|s| s.0 <= t);
                if i == 0 || i == samples.len() {
                    // exactly on the last sample still belongs to the table
                    return if i == samples.len() && t == samples[i - 1].0 { samples[i - 1].1 } else { 0.0 };
                }
                let (t0, v0) = samples[i - 1];
                let (t1, v1) = samples[i];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Integral of the envelope over the whole real line.
    pub fn area(&self) -> f64 {
        self.theta
    }

    /// Maximum of the envelope.
    pub fn peak(&self) -> f64 {
        match &self.shape {
            PulseShape::Gaussian => self.theta / ((2.0 * std::f64::consts::PI).sqrt() * self.tau_d),
            PulseShape::Tabulated(s) => s.iter().map(|p| p.1.abs()).fold(0.0, f64::max),
        }
    }

    /// Time window outside which the drive is negligible, or `None` when there is no drive.
    pub fn support(&self) -> Option<(f64, f64)> {
        if self.peak() == 0.0 {
            return None;
        }
        match &self.shape {
            PulseShape::Gaussian => {
                let w = GAUSSIAN_SUPPORT_WIDTHS * self.tau_d;
                Some((self.t_center - w, self.t_center + w))
            }
            PulseShape::Tabulated(s) => Some((s[0].0, s[s.len() - 1].0)),
        }
    }

    /// Longest step an integrator may take inside the support.
    pub fn max_step(&self) -> f64 {
        match &self.shape {
            PulseShape::Gaussian => 0.5 * self.tau_d,
            PulseShape::Tabulated(s) => s.windows(2).map(|w| w[1].0 - w[0].0).fold(f64::INFINITY, f64::min),
        }
    }
}

/// Rabi frequency of `pulse` at time `t`.
pub fn envelope_at(pulse: &PulseEnvelope, t: f64) -> f64 {
    pulse.at(t)
}

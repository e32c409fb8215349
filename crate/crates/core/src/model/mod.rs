//! Driven two-level emitter, optionally observed by weakly coupled sensor qubits.
//!
//! Master equation (rotating frame of the laser):
//!
//! ```text
//! d rho/dt = i[rho, H] + (gamma/2) L_sigma rho + sum_j (Gamma_j/2) L_zeta_j rho
//! H = w_s s†s + (Omega(t)/2)(s† + s) + sum_j w_j z_j†z_j + eps sum_j (s† z_j + z_j† s)
//! L_c rho = 2 c rho c† - c†c rho - rho c†c
//! ```
//!
//! Superoperators act on column-stacked density matrices:
//! `vec(X)[r + c*dim] = X[r, c]` and `vec(A X B) = (B^T ⊗ A) vec(X)`.

mod operators;
mod pulse;

pub use operators::{commutator, dagger, embed, identity, lowering, max_abs, product, ComplexMatrix, LocalOp};
pub use pulse::{envelope_at, PulseEnvelope, PulseShape, DEFAULT_CENTER_WIDTHS, DRIVE_CUTOFF};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Largest number of sensors supported.
pub const MAX_SENSORS: usize = 2;

/// Default sensor coupling, in units of the emitter decay rate.
pub const DEFAULT_COUPLING: f64 = 1e-3;

/// Coupling above this fraction of the smallest rate triggers a validation warning.
pub const COUPLING_WARNING_RATIO: f64 = 0.05;

/// A mode of the joint model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Emitter,
    Sensor(usize),
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::Emitter => 0,
            Mode::Sensor(j) => 1 + j,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Mode::Emitter
        } else {
            Mode::Sensor(i - 1)
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Emitter => write!(f, "emitter"),
            Mode::Sensor(j) => write!(f, "sensor{}", j + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelParams {
    /// Emitter frequency minus laser frequency.
    pub detuning: f64,
    /// Spontaneous decay rate.
    pub gamma: f64,
}

impl Default for TwoLevelParams {
    fn default() -> Self {
        Self { detuning: 0.0, gamma: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    /// Sensor frequency minus laser frequency.
    pub detuning: f64,
    /// Sensor linewidth (decay rate).
    pub linewidth: f64,
}

impl Sensor {
    pub fn new(detuning: f64, linewidth: f64) -> Self {
        Self { detuning, linewidth }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorBank {
    pub sensors: Vec<Sensor>,
    /// Emitter-sensor coupling, shared by all sensors.
    pub coupling: f64,
}

impl Default for SensorBank {
    fn default() -> Self {
        Self { sensors: Vec::new(), coupling: DEFAULT_COUPLING }
    }
}

impl SensorBank {
    pub fn new(sensors: Vec<Sensor>, coupling: f64) -> Self {
        Self { sensors, coupling }
    }

    /// Two identical-linewidth sensors at the given frequencies.
    pub fn pair(detuning_a: f64, detuning_b: f64, linewidth: f64, coupling: f64) -> Self {
        Self::new(vec![Sensor::new(detuning_a, linewidth), Sensor::new(detuning_b, linewidth)], coupling)
    }

    pub fn count(&self) -> usize {
        self.sensors.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// All modes in their ground state.
    Ground,
    /// Emitter excited, sensors in the ground state.
    Excited,
    Density(ComplexMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointModel {
    pub tls: TwoLevelParams,
    pub pulse: PulseEnvelope,
    pub sensors: SensorBank,
    pub initial: InitialState,
}

impl JointModel {
    pub fn new(tls: TwoLevelParams, pulse: PulseEnvelope, sensors: SensorBank) -> Result<Self> {
        let m = Self { tls, pulse, sensors, initial: InitialState::Ground };
        m.validate()?;
        Ok(m)
    }

    /// Emitter alone, resonant, unit decay rate.
    pub fn bare(pulse: PulseEnvelope) -> Self {
        Self { tls: TwoLevelParams::default(), pulse, sensors: SensorBank::default(), initial: InitialState::Ground }
    }

    pub fn with_sensors(mut self, sensors: SensorBank) -> Result<Self> {
        self.sensors = sensors;
        self.validate()?;
        Ok(self)
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.tls.detuning = detuning;
        self
    }

    pub fn with_initial(mut self, initial: InitialState) -> Result<Self> {
        self.initial = initial;
        self.validate()?;
        Ok(self)
    }

    /// The same emitter and pulse without sensors.
    pub fn without_sensors(&self) -> Self {
        let initial = match &self.initial {
            InitialState::Density(_) => {
                InitialState::Density(reduce_to_emitter(&self.initial_density(), self.n_modes()))
            }
            other => other.clone(),
        };
        Self {
            tls: self.tls.clone(),
            pulse: self.pulse.clone(),
            sensors: SensorBank { sensors: Vec::new(), coupling: self.sensors.coupling },
            initial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tls.gamma > 0.0) {
            return Err(Error::InvalidModel(format!("emitter decay rate must be > 0, got {}", self.tls.gamma)));
        }
        if !(self.pulse.tau_d > 0.0) {
            return Err(Error::InvalidModel("pulse duration must be > 0".into()));
        }
        if self.sensors.count() > MAX_SENSORS {
            return Err(Error::InvalidModel(format!("at most {MAX_SENSORS} sensors are supported")));
        }
        if self.sensors.count() > 0 && !(self.sensors.coupling > 0.0) {
            return Err(Error::InvalidModel("sensor coupling must be > 0".into()));
        }
        for (j, s) in self.sensors.sensors.iter().enumerate() {
            if !(s.linewidth > 0.0) || !s.detuning.is_finite() {
                return Err(Error::InvalidModel(format!("sensor {} has invalid parameters {s:?}", j + 1)));
            }
        }
        if let InitialState::Density(rho) = &self.initial {
            let d = self.hilbert_dim();
            if rho.shape() != (d, d) {
                return Err(Error::InvalidModel(format!("initial density must be {d}x{d}")));
            }
        }
        Ok(())
    }

    /// Non-fatal diagnostics, currently only the weak-coupling condition of the sensors.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.sensors.count() > 0 {
            let min_rate = self.sensors.sensors.iter().map(|s| s.linewidth).fold(self.tls.gamma, f64::min);
            if self.sensors.coupling > COUPLING_WARNING_RATIO * min_rate {
                out.push(format!(
                    "sensor coupling {} exceeds {} x smallest rate {}; sensors perturb the emitter",
                    self.sensors.coupling, COUPLING_WARNING_RATIO, min_rate
                ));
            }
        }
        out
    }

    pub fn n_modes(&self) -> usize {
        1 + self.sensors.count()
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.n_modes()
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> {
        (0..self.n_modes()).map(Mode::from_index)
    }

    /// Decay rate of a mode.
    pub fn rate(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Emitter => self.tls.gamma,
            Mode::Sensor(j) => self.sensors.sensors[j].linewidth,
        }
    }

    /// Smallest decay rate in the model.
    pub fn slowest_rate(&self) -> f64 {
        self.modes().map(|m| self.rate(m)).fold(f64::INFINITY, f64::min)
    }

    /// Lowering operator of `mode` in the joint space.
    pub fn lowering(&self, mode: Mode) -> ComplexMatrix {
        lowering(mode.index(), self.n_modes())
    }

    /// Static and drive parts of the Hamiltonian: `H(t) = H_static + Omega(t) H_drive`.
    pub fn hamiltonian_parts(&self) -> (ComplexMatrix, ComplexMatrix) {
        let n = self.n_modes();
        let s = self.lowering(Mode::Emitter);
        let sd = s.adjoint();
        let mut h_static = (&sd * &s) * C64::from(self.tls.detuning);
        for (j, sensor) in self.sensors.sensors.iter().enumerate() {
            let z = lowering(1 + j, n);
            let zd = z.adjoint();
            h_static += (&zd * &z) * C64::from(sensor.detuning);
            h_static += (&sd * &z + &zd * &s) * C64::from(self.sensors.coupling);
        }
        let h_drive = (&sd + &s) * C64::from(0.5);
        (h_static, h_drive)
    }

    /// Dissipation channels as `(rate, collapse operator, mode)`.
    pub fn collapse_ops(&self) -> Vec<(f64, ComplexMatrix, Mode)> {
        self.modes().map(|m| (self.rate(m), self.lowering(m), m)).collect()
    }

    pub fn initial_density(&self) -> ComplexMatrix {
        let d = self.hilbert_dim();
        match &self.initial {
            InitialState::Ground => {
                let mut rho = ComplexMatrix::zeros(d, d);
                rho[(0, 0)] = C64::new(1.0, 0.0);
                rho
            }
            InitialState::Excited => {
                // emitter is the most significant bit
                let k = d / 2;
                let mut rho = ComplexMatrix::zeros(d, d);
                rho[(k, k)] = C64::new(1.0, 0.0);
                rho
            }
            InitialState::Density(rho) => rho.clone(),
        }
    }
}

fn reduce_to_emitter(rho: &ComplexMatrix, n_modes: usize) -> ComplexMatrix {
    let rest = 1 << (n_modes - 1);
    let mut out = ComplexMatrix::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            out[(a, b)] = (0..rest).map(|k| rho[(a * rest + k, b * rest + k)]).sum();
        }
    }
    out
}

/// `H(t)` of the joint model.
pub fn build_hamiltonian(model: &JointModel, t: f64) -> ComplexMatrix {
    let (hs, hd) = model.hamiltonian_parts();
    hs + hd * C64::from(model.pulse.at(t))
}

/// Column-stacking superoperator of `rho -> i[rho, H]`.
fn hamiltonian_superop(h: &ComplexMatrix) -> ComplexMatrix {
    let id = identity(h.nrows());
    (h.transpose().kronecker(&id) - id.kronecker(h)) * C64::new(0.0, 1.0)
}

/// Static and drive parts of the Liouvillian superoperator (`dim^2 x dim^2`).
pub fn liouvillian_parts(model: &JointModel) -> (ComplexMatrix, ComplexMatrix) {
    let (hs, hd) = model.hamiltonian_parts();
    let id = identity(model.hilbert_dim());
    let mut l_static = hamiltonian_superop(&hs);
    for (rate, c, _) in model.collapse_ops() {
        let cdc = c.adjoint() * &c;
        let half = C64::from(0.5 * rate);
        l_static +=
            (c.conjugate().kronecker(&c) * C64::from(2.0) - id.kronecker(&cdc) - cdc.transpose().kronecker(&id)) * half;
    }
    (l_static, hamiltonian_superop(&hd))
}

/// Liouvillian superoperator at time `t`.
pub fn build_liouvillian(model: &JointModel, t: f64) -> ComplexMatrix {
    let (ls, ld) = liouvillian_parts(model);
    ls + ld * C64::from(model.pulse.at(t))
}

/// Column-stacks a square matrix.
pub fn vectorize(m: &ComplexMatrix) -> Vec<C64> {
    m.as_slice().to_vec()
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &[C64], dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(dim, dim, v)
}

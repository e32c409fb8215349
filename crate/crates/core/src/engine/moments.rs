//! Closed equations of motion `d<c>/dt = M(t) <c>` over the complete basis.

use super::basis::{build_basis, ObservableBasis};
use super::linear::{DenseTrajectory, LinearSystem, Propagation};
use super::ode::OdeOptions;
use crate::model::{commutator, ComplexMatrix, PulseEnvelope};
use crate::{Error, JointModel, Mode, Result, C64};

/// `M(t) = M_static + Omega(t) M_drive`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix {
    pub m_static: ComplexMatrix,
    pub m_drive: ComplexMatrix,
    pub pulse: PulseEnvelope,
}

impl MomentMatrix {
    pub fn at(&self, t: f64) -> ComplexMatrix {
        &self.m_static + &self.m_drive * C64::from(self.pulse.at(t))
    }

    pub fn dim(&self) -> usize {
        self.m_static.nrows()
    }
}

/// Constant matrix with `<a† c a> = C_a <c>`.
#[derive(Clone, Debug, PartialEq)]
pub struct SandwichMap(pub ComplexMatrix);

/// Rows of the matrix representing `x -> f(b_i)` in the basis.
pub(crate) fn represent(basis: &ObservableBasis, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let n = basis.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let row = basis.expand(&f(&basis.matrix(i)));
        for (j, v) in row.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// Heisenberg-picture generator: `L†(X) = i[H, X] + sum (r/2)(2 c† X c - c†c X - X c†c)`.
pub fn build_moment_matrix(model: &JointModel, basis: &ObservableBasis) -> MomentMatrix {
    let (hs, hd) = model.hamiltonian_parts();
    let ops = model.collapse_ops();
    let i = C64::new(0.0, 1.0);
    let m_static = represent(basis, |x| {
        let mut out = commutator(&hs, x) * i;
        for (rate, c, _) in &ops {
            let cd = c.adjoint();
            let cdc = &cd * c;
            out += (&cd * x * c * C64::from(2.0) - &cdc * x - x * &cdc) * C64::from(rate / 2.0);
        }
        out
    });
    let m_drive = represent(basis, |x| commutator(&hd, x) * i);
    MomentMatrix { m_static, m_drive, pulse: model.pulse.clone() }
}

pub fn build_sandwich_map(model: &JointModel, basis: &ObservableBasis, mode: Mode) -> SandwichMap {
    let a = model.lowering(mode);
    let ad = a.adjoint();
    SandwichMap(represent(basis, |x| &ad * x * &a))
}

/// Moments of a model together with the scales used to keep sensor quantities O(1).
#[derive(Clone, Debug)]
pub struct MomentSystem {
    pub basis: ObservableBasis,
    pub matrix: MomentMatrix,
    /// Effective coupling used for scaling, `min(eps, 1)`; 1 without sensors.
    pub eps_scale: f64,
    pub opts: OdeOptions,
    pub propagation: Propagation,
    slowest_rate: f64,
    sandwiches: Vec<SandwichMap>,
}

impl MomentSystem {
    pub fn new(model: &JointModel) -> Self {
        Self::with_options(model, OdeOptions::default())
    }

    pub fn with_options(model: &JointModel, opts: OdeOptions) -> Self {
        let basis = build_basis(model);
        let matrix = build_moment_matrix(model, &basis);
        let sandwiches = model.modes().map(|m| build_sandwich_map(model, &basis, m)).collect();
        let eps_scale = if model.sensors.count() > 0 { model.sensors.coupling.min(1.0) } else { 1.0 };
        Self {
            basis,
            matrix,
            eps_scale,
            opts,
            propagation: Propagation::Hybrid,
            slowest_rate: model.slowest_rate(),
            sandwiches,
        }
    }

    pub fn with_propagation(mut self, p: Propagation) -> Self {
        self.propagation = p;
        self
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn pulse(&self) -> &PulseEnvelope {
        &self.matrix.pulse
    }

    pub fn sandwich(&self, mode: Mode) -> &SandwichMap {
        &self.sandwiches[mode.index()]
    }

    /// Expected magnitude of each moment: `eps^(number of sensor factors)`.
    pub fn moment_scale(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.eps_scale.powi(self.basis.sensor_order(i) as i32)).collect()
    }

    /// Extra factor picked up by `a† c a` relative to `c`.
    pub fn mode_scale(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Emitter => 1.0,
            Mode::Sensor(_) => self.eps_scale * self.eps_scale,
        }
    }

    /// Integration span after the pulse for horizon-based limits.
    pub fn tail_span(&self) -> f64 {
        let tau = self.pulse().tau_d;
        (15.0 / self.slowest_rate).max(10.0 * tau)
    }

    /// Time by which the pulse is over and all transients have decayed.
    pub fn horizon(&self) -> f64 {
        self.pulse().support().map_or(0.0, |(_, w1)| w1.max(self.pulse().t_center)) + self.tail_span()
    }

    /// Linear system of the moments alone.
    pub fn linear_system(&self) -> LinearSystem {
        self.stacked_system(&self.matrix.m_static, &self.matrix.m_drive, self.moment_scale())
    }

    /// Linear system for a stacked generator built from blocks of this one.
    pub fn stacked_system(&self, a_static: &ComplexMatrix, a_drive: &ComplexMatrix, scale: Vec<f64>) -> LinearSystem {
        let mut sys = LinearSystem::new(a_static, a_drive, self.pulse(), Some(scale), self.opts)
            .with_propagation(self.propagation);
        sys.tail_span = self.tail_span();
        sys
    }

    /// Initial moments `Tr(rho0 c_i)` of the model's initial state.
    pub fn initial_moments(&self, model: &JointModel) -> Vec<C64> {
        self.basis.moments_of(&model.initial_density())
    }
}

/// Moments on a dense time axis.
#[derive(Clone, Debug)]
pub struct MomentTrajectory {
    pub trajectory: DenseTrajectory,
    pub rtol: f64,
    pub atol: f64,
}

impl MomentTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.trajectory.step_times()
    }

    pub fn at(&self, t: f64) -> Vec<C64> {
        self.trajectory.at(t)
    }

    /// Values at the accepted step times.
    pub fn values(&self) -> Vec<Vec<C64>> {
        self.times().into_iter().map(|t| self.at(t)).collect()
    }
}

/// Adaptive solution of the moment equations from `init` at `t0` to `t1`.
pub fn propagate_moments(system: &MomentSystem, init: &[C64], t0: f64, t1: f64) -> Result<MomentTrajectory> {
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!("propagation needs t1 > t0, got [{t0}, {t1}]")));
    }
    if init.len() != system.dim() {
        return Err(Error::InvalidArgument(format!(
            "initial vector has {} entries, basis has {}",
            init.len(),
            system.dim()
        )));
    }
    let trajectory = system.linear_system().trajectory(init, t0, t1)?;
    Ok(MomentTrajectory { trajectory, rtol: system.opts.rtol, atol: system.opts.atol })
}

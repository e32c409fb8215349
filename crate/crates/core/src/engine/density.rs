//! Direct propagation of the density matrix with the Liouvillian superoperator.

use super::linear::{LinearSystem, Propagation};
use super::ode::OdeOptions;
use crate::model::{liouvillian_parts, unvectorize, vectorize, ComplexMatrix};
use crate::{Error, JointModel, Result};

/// Density matrices on a time grid.
#[derive(Clone, Debug)]
pub struct DensityTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
}

impl DensityTrajectory {
    /// Largest `|Tr rho - 1|` over the grid.
    pub fn max_trace_error(&self) -> f64 {
        self.states.iter().map(|r| (r.trace() - crate::C64::new(1.0, 0.0)).norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part over the grid.
    pub fn min_eigenvalue(&self) -> f64 {
        self.states
            .iter()
            .map(|r| {
                let h = (r + r.adjoint()) * crate::C64::from(0.5);
                h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Superoperator system for the model's density matrix.
pub fn density_system(model: &JointModel, opts: OdeOptions) -> LinearSystem {
    let (ls, ld) = liouvillian_parts(model);
    LinearSystem::new(&ls, &ld, &model.pulse, None, opts).with_propagation(Propagation::RungeKutta)
}

/// Propagates `rho0` from `t0` and reports it at each time of an ascending grid.
pub fn propagate_density(
    model: &JointModel,
    rho0: &ComplexMatrix,
    t0: f64,
    times: &[f64],
    opts: OdeOptions,
) -> Result<DensityTrajectory> {
    let d = model.hilbert_dim();
    if rho0.shape() != (d, d) {
        return Err(Error::InvalidArgument(format!("density must be {d}x{d}")));
    }
    let sys = density_system(model, opts);
    let states = sys.propagate_grid(&vectorize(rho0), t0, times)?.into_iter().map(|v| unvectorize(&v, d)).collect();
    Ok(DensityTrajectory { times: times.to_vec(), states })
}

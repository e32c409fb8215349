//! Photon counting and time-bin probabilities from integrated correlators.
//!
//! Moments of the bin intensities feed Mandel's formula (totals) and its
//! early/late generalisation truncated at two photons.

mod moments;
mod probabilities;

pub use moments::{
    detection_rate, intensity_moments_filter, intensity_moments_one_mode, intensity_moments_totals,
    intensity_moments_two_mode, Bin, Factor, IntensityMoments,
};
pub use probabilities::{
    filtered_flux_fraction, pmn_one_mode_2pa, pn_from_moments, purities, two_mode_2pa, BinProbabilities, Purities,
    TwoModeProbabilities, CLAMP_WARNING, CONVERGENCE_THRESHOLD,
};

use crate::correlators::{integrated_gn_in, two_bin_on_grid};
use crate::engine::MomentSystem;
use crate::{Error, JointModel, Mode, Result, SensorBank};

/// Moments of the emitter with bins split at `t_split` and totals up to `n_max`.
pub fn emitter_moments(model: &JointModel, t_split: f64, n_max: usize) -> Result<IntensityMoments> {
    let bare = model.without_sensors();
    let sys = MomentSystem::new(&bare);
    let init = sys.initial_moments(&bare);
    let bins = two_bin_on_grid(&sys, &init, Mode::Emitter, Mode::Emitter, &[t_split])?.remove(0);
    let higher = integrated_gn_in(&sys, &init, Mode::Emitter, n_max, &[f64::INFINITY])?;
    intensity_moments_one_mode(&bins, Some(&higher), detection_rate(&bare, Mode::Emitter), 1.0)
}

/// `model` with its sensors replaced by two copies of sensor `sensor`, the
/// input of [`intensity_moments_filter`].
pub fn filter_copies(model: &JointModel, sensor: usize) -> Result<JointModel> {
    let s = *model
        .sensors
        .sensors
        .get(sensor)
        .ok_or_else(|| Error::InvalidArgument(format!("model has no sensor {}", sensor + 1)))?;
    model.without_sensors().with_sensors(SensorBank::new(vec![s, s], model.sensors.coupling))
}

/// Early/late moments behind filter `sensor` of `model`, split at `t_split`.
pub fn filter_moments(model: &JointModel, sensor: usize, t_split: f64) -> Result<IntensityMoments> {
    let copies = filter_copies(model, sensor)?;
    let sys = MomentSystem::new(&copies);
    let (a, b) = (Mode::Sensor(0), Mode::Sensor(1));
    let bins = two_bin_on_grid(&sys, &sys.initial_moments(&copies), a, b, &[t_split])?.remove(0);
    intensity_moments_filter(&bins, detection_rate(&copies, a), 1.0)
}

/// Moments of the two sensors of `model` with bins split at `t_split`.
pub fn sensor_pair_moments(model: &JointModel, t_split: f64) -> Result<IntensityMoments> {
    let sys = MomentSystem::new(model);
    let init = sys.initial_moments(model);
    let (a, b) = (Mode::Sensor(0), Mode::Sensor(1));
    let t = [t_split];
    let aa = two_bin_on_grid(&sys, &init, a, a, &t)?.remove(0);
    let bb = two_bin_on_grid(&sys, &init, b, b, &t)?.remove(0);
    let ab = two_bin_on_grid(&sys, &init, a, b, &t)?.remove(0);
    intensity_moments_two_mode(&aa, &bb, &ab, [detection_rate(model, a), detection_rate(model, b)], [1.0, 1.0])
}

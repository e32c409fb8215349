//! Fixtures shared by the benchmarks.

use dynrf::{JointModel, PulseEnvelope, Sensor, SensorBank};

pub const TAU_D: f64 = 0.1;

/// Bare emitter driven by a Gaussian pulse of area `theta_pi`·π.
pub fn bare(theta_pi: f64) -> JointModel {
    JointModel::bare(PulseEnvelope::gaussian_pi(theta_pi, TAU_D).expect("valid pulse"))
}

/// Emitter with two sensors at `wa`, `wb` of equal linewidth.
pub fn pair(theta_pi: f64, wa: f64, wb: f64, linewidth: f64) -> JointModel {
    bare(theta_pi).with_sensors(SensorBank::pair(wa, wb, linewidth, 1e-3)).expect("valid sensors")
}

/// Emitter behind one sensor at the laser frequency.
pub fn filtered(theta_pi: f64, linewidth: f64) -> JointModel {
    bare(theta_pi).with_sensors(SensorBank::new(vec![Sensor::new(0.0, linewidth)], 1e-3)).expect("valid sensor")
}

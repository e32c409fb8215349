//! Normalized integrated cross-correlations
//! `g2_ab[0, T] = G_ab[0, T] / (int_0^T <a†a> int_0^T <b†b>)`.

use super::integrated::integrated_g2_in;
use crate::engine::MomentSystem;
use crate::{Error, JointModel, Mode, Result, C64};

/// Populations below this (in units of the sensor scale `ε²`) count as never populated.
pub const DEGENERATE_POPULATION: f64 = 1e-14;

fn ratio(sys: &MomentSystem, a: Mode, b: Mode, g: f64, pa: f64, pb: f64) -> Result<f64> {
    let (sa, sb) = (pa / sys.mode_scale(a), pb / sys.mode_scale(b));
    if !(sa > DEGENERATE_POPULATION && sb > DEGENERATE_POPULATION) {
        return Err(Error::Degenerate(format!("integrated populations {pa:e} and {pb:e} are zero")));
    }
    Ok(g / (pa * pb))
}

/// `g2_ab[0; Γ]` of the two sensors of `model` over the whole emission.
pub fn normalized_g2_zero(model: &JointModel) -> Result<f64> {
    if model.sensors.count() != 2 {
        return Err(Error::InvalidArgument("normalized g2 needs a model with two sensors".into()));
    }
    normalized_integrated_g2(model, Mode::Sensor(0), Mode::Sensor(1), f64::INFINITY)
}

pub fn normalized_integrated_g2(model: &JointModel, a: Mode, b: Mode, t: f64) -> Result<f64> {
    let sys = MomentSystem::new(model);
    normalized_integrated_g2_in(&sys, &sys.initial_moments(model), a, b, &[t])?.remove(0)
}

/// Normalized correlator on a `T` grid; each entry fails independently when degenerate.
pub fn normalized_integrated_g2_in(
    sys: &MomentSystem,
    init: &[C64],
    a: Mode,
    b: Mode,
    t_grid: &[f64],
) -> Result<Vec<Result<f64>>> {
    let r = integrated_g2_in(sys, init, a, b, t_grid)?;
    Ok((0..t_grid.len()).map(|k| ratio(sys, a, b, r.symmetric[k], r.pop_a[k], r.pop_b[k])).collect())
}

/// [`normalized_integrated_g2_in`] with the degenerate entries turned into an error.
pub fn normalized_integrated_g2_grid(
    sys: &MomentSystem,
    init: &[C64],
    a: Mode,
    b: Mode,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    normalized_integrated_g2_in(sys, init, a, b, t_grid)?.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{PulseEnvelope, SensorBank};
    use std::f64::consts::PI;

    fn two_sensor(theta: f64, wa: f64, wb: f64, eps: f64) -> JointModel {
        JointModel::bare(PulseEnvelope::gaussian(theta, 0.1).unwrap())
            .with_sensors(SensorBank::pair(wa, wb, 0.5, eps))
            .unwrap()
    }

    #[test]
    fn empty_bin_is_degenerate() {
        let m = two_sensor(PI, 0.0, 0.0, 1e-3);
        assert!(matches!(
            normalized_integrated_g2(&m, Mode::Sensor(0), Mode::Sensor(1), 0.0),
            Err(Error::Degenerate(_))
        ));
        let dark = two_sensor(0.0, 0.0, 0.0, 1e-3);
        assert!(matches!(normalized_g2_zero(&dark), Err(Error::Degenerate(_))));
        assert!(normalized_g2_zero(&JointModel::bare(PulseEnvelope::gaussian(PI, 0.1).unwrap())).is_err());
    }

    #[test]
    fn infinite_bin_equals_zero_delay_value() {
        let m = two_sensor(3.0 * PI, 0.0, 1.0, 1e-3);
        let g0 = normalized_g2_zero(&m).unwrap();
        let sys = MomentSystem::new(&m);
        let h = sys.horizon();
        let gt = normalized_integrated_g2(&m, Mode::Sensor(0), Mode::Sensor(1), h).unwrap();
        assert!((g0 - gt).abs() < 1e-6 * g0);
    }

    #[test]
    fn independent_of_coupling() {
        for (wa, wb) in [(0.0, 0.0), (0.0, 3.0)] {
            let g1 = normalized_g2_zero(&two_sensor(3.0 * PI, wa, wb, 1e-3)).unwrap();
            let g2 = normalized_g2_zero(&two_sensor(3.0 * PI, wa, wb, 5e-4)).unwrap();
            assert!((g1 - g2).abs() < 1e-3 * g1, "{g1} {g2}");
        }
    }

    #[test]
    fn bare_emitter_pi_pulse_strongly_antibunched() {
        let m = JointModel::bare(PulseEnvelope::gaussian(PI, 0.1).unwrap());
        let g = normalized_integrated_g2(&m, Mode::Emitter, Mode::Emitter, f64::INFINITY).unwrap();
        assert!(g > 0.0 && g < 0.2, "{g}");
    }
}

//! End-to-end checks that cross module boundaries.

use std::f64::consts::PI;

use dynrf::correlators::spectrum;
use dynrf::counting::{
    emitter_moments, filter_moments, filtered_flux_fraction, pmn_one_mode_2pa, pn_from_moments, purities,
};
use dynrf::trajectories::{ensemble, estimate_probabilities, McOptions};
use dynrf::{JointModel, Mode, PulseEnvelope, Sensor, SensorBank};

fn bare(theta_pi: f64) -> JointModel {
    JointModel::bare(PulseEnvelope::gaussian_pi(theta_pi, 0.1).unwrap())
}

fn filtered(theta_pi: f64, linewidth: f64, eps: f64) -> JointModel {
    bare(theta_pi).with_sensors(SensorBank::new(vec![Sensor::new(0.0, linewidth)], eps)).unwrap()
}

/// Filtered flux from the bare spectrum: `∫ S(ω) L(ω) dω / ∫ S(ω) dω` with
/// `L` the unit-peak Lorentzian of FWHM `Γ`, and `∫ S dω = π ∫ <σ†σ> dt`.
fn flux_from_spectrum(theta_pi: f64, linewidth: f64) -> f64 {
    let h = 0.05;
    let omega: Vec<f64> = (-2400..=2400).map(|k| k as f64 * h).collect();
    let s = spectrum(&bare(theta_pi), &omega).unwrap();
    let hw2 = 0.25 * linewidth * linewidth;
    let weighted: f64 = omega.iter().zip(&s.values).map(|(w, v)| v * hw2 / (hw2 + w * w)).sum::<f64>() * h;
    weighted / (PI * s.emitter_population)
}

#[test]
fn filtered_flux_agrees_with_weighted_spectrum() {
    for theta in [1.0, 3.0] {
        let direct = filtered_flux_fraction(&filtered(theta, 2.0, 1e-3), 0).unwrap();
        let via_spectrum = flux_from_spectrum(theta, 2.0);
        assert!((direct - via_spectrum).abs() < 5e-3, "theta {theta}pi: {direct} vs {via_spectrum}");
    }
}

#[test]
fn wide_filter_passes_nearly_all_flux() {
    let f = filtered_flux_fraction(&filtered(3.0, 50.0, 1e-3), 0).unwrap();
    assert!((f - 1.0).abs() < 0.1, "{f}");
}

#[test]
fn filtered_purities_do_not_depend_on_coupling() {
    let p = |eps: f64| {
        let mom = filter_moments(&filtered(3.0, 2.0, eps), 0, 1.5).unwrap();
        purities(&pmn_one_mode_2pa(&mom, 0).unwrap().p_mn).unwrap()
    };
    let (a, b) = (p(1e-3), p(5e-4));
    for (k, v) in &a.pi {
        assert!((v - b.get(k.0, k.1)).abs() <= 1e-3 * v.abs() + 1e-12, "{k:?}");
    }
}

#[test]
fn bare_photon_numbers_match_trajectories() {
    let n = 6000;
    for theta in [1.0, 2.0, 3.0, 4.0] {
        let m = bare(theta);
        let p = pn_from_moments(&emitter_moments(&m, 1.0, 4).unwrap(), 0, 4).unwrap();
        let records = ensemble(&m, 17 + theta as u64, n, McOptions::default()).unwrap();
        let h = estimate_probabilities(&records, f64::INFINITY, &[Mode::Emitter]);
        for k in 0..=2 {
            let e = h.pn(k);
            let se = e.std_error.max(1.0 / n as f64);
            assert!((e.value - p.p(k)).abs() < 3.5 * se, "theta {theta}pi, P{k}: mc {} vs {}", e.value, p.p(k));
        }
    }
}

#[test]
fn early_late_split_moves_probability_between_bins() {
    let m = bare(1.0);
    let early = pmn_one_mode_2pa(&emitter_moments(&m, 0.2, 2).unwrap(), 0).unwrap();
    let late = pmn_one_mode_2pa(&emitter_moments(&m, 5.0, 2).unwrap(), 0).unwrap();
    assert!(early.pmn(0, 1) > early.pmn(1, 0));
    assert!(late.pmn(1, 0) > late.pmn(0, 1));
    // the one-photon total does not depend on where the bins are split
    let one = |p: &dynrf::counting::BinProbabilities| p.pmn(1, 0) + p.pmn(0, 1);
    assert!((one(&early) - one(&late)).abs() < 1e-6);
}

//! Time-integrated emission spectrum
//! `S(ω) = Re ∫_0^∞ dt ∫_0^∞ dτ <σ†(t) σ(t + τ)> e^{iωτ - Γτ/2}`
//! with an optional filter width `Γ` (0 for the bare spectrum).
//!
//! Rows `t` inside the drive window are sampled on a uniform grid and the `τ`
//! integral is done piecewise-linearly with the exponential factor exact. Once
//! the drive is off the generator is constant, so the remaining `τ` tail of
//! each row and the whole `t > t_w` region are closed with resolvents.

use nalgebra::DVector;
use rayon::prelude::*;

use super::integrated::integrated_population;
use crate::engine::moments::represent;
use crate::engine::MomentSystem;
use crate::model::ComplexMatrix;
use crate::{Error, JointModel, Mode, Result, Sensor, SensorBank, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Normalization {
    /// Raw double integral; `∫ S dω = π ∫ <σ†σ> dt` for the bare spectrum.
    Unnormalized,
    /// Sensor estimate `Γ/(2ε²) ∫ <ζ†ζ> dt`, equal to the filtered spectrum.
    SensorPopulation,
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    pub filter_width: f64,
    pub normalization: Normalization,
    /// `∫ <σ†σ> dt` of the emitter.
    pub emitter_population: f64,
}

impl Spectrum {
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Interior local maxima as `(ω, S)`.
    pub fn local_maxima(&self) -> Vec<(f64, f64)> {
        self.values
            .windows(3)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0] && w[1] >= w[2])
            .map(|(k, w)| (self.omega[k + 1], w[1]))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SpectrumOptions {
    /// Grid step for `t` and `τ` inside the drive window; chosen automatically when `None`.
    pub step: Option<f64>,
    /// Filter width `Γ`; 0 gives the bare spectrum.
    pub filter_width: f64,
}

pub fn spectrum(model: &JointModel, omega: &[f64]) -> Result<Spectrum> {
    spectrum_with(model, omega, SpectrumOptions::default())
}

/// `∫_0^1 (1 - u) e^{zu} du` and `∫_0^1 u e^{zu} du`.
fn linear_weights(z: C64) -> (C64, C64) {
    if z.norm() < 1e-3 {
        (0.5 + z / 6.0 + z * z / 24.0, 0.5 + z / 3.0 + z * z / 8.0)
    } else {
        let e = z.exp();
        let z2 = z * z;
        ((e - 1.0 - z) / z2, (e * (z - 1.0) + 1.0) / z2)
    }
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h }).collect()
}

/// `-(B + s)^{-1} y`.
fn resolvent(b: &ComplexMatrix, s: C64, y: &DVector<C64>) -> Result<DVector<C64>> {
    let shifted = b + ComplexMatrix::identity(b.nrows(), b.ncols()) * s;
    shifted
        .lu()
        .solve(y)
        .map(|x| -x)
        .ok_or_else(|| Error::UnconvergedTail("drive-free generator has an undamped mode at this frequency".into()))
}

pub fn spectrum_with(model: &JointModel, omega: &[f64], opts: SpectrumOptions) -> Result<Spectrum> {
    if omega.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument("frequencies must be finite".into()));
    }
    if !(opts.filter_width >= 0.0) {
        return Err(Error::InvalidArgument("filter width must be >= 0".into()));
    }
    let bare = model.without_sensors();
    let sys = MomentSystem::new(&bare);
    let lin = sys.linear_system();
    let n = sys.dim();
    let i_sigma = sys.basis.lowering_index(Mode::Emitter);
    let sd = bare.lowering(Mode::Emitter).adjoint();
    // v_i(t, 0) = <σ† b_i>(t) = sum_k K_ik <b_k>(t)
    let k_map = represent(&sys.basis, |x| &sd * x);
    // decaying block of the drive-free generator; the identity column vanishes
    let b = sys.matrix.m_static.view((1, 1), (n - 1, n - 1)).into_owned();

    let init = sys.initial_moments(&bare);
    let t_w = lin.drive_window().map_or(0.0, |(_, w1)| w1.max(0.0));
    let w_max = omega.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let mut h = (0.02 / bare.tls.gamma).min(bare.pulse.tau_d / 10.0);
    if w_max > 0.0 {
        h = h.min(2.0 * std::f64::consts::PI / (20.0 * w_max));
    }
    if let Some(step) = opts.step {
        h = step;
    }
    let rows = if t_w > 0.0 { (t_w / h).ceil() as usize + 1 } else { 0 };
    let h = if rows > 1 { t_w / (rows - 1) as f64 } else { 0.0 };
    let t_grid: Vec<f64> = (0..rows).map(|i| i as f64 * h).collect();

    // v_i(t_j) for j >= i, then only the σ component and the full state at t_w
    let (cs, c_end) = if rows > 0 {
        let cs = lin.propagate_grid(&init, 0.0, &t_grid)?;
        let end = cs[rows - 1].clone();
        (cs, end)
    } else {
        (Vec::new(), init.clone())
    };
    let row_data = (0..rows)
        .into_par_iter()
        .map(|i| {
            let v0 = (&k_map * DVector::from_column_slice(&cs[i])).as_slice().to_vec();
            let states = lin.propagate_grid(&v0, t_grid[i], &t_grid[i..])?;
            let sigma: Vec<C64> = states.iter().map(|v| v[i_sigma]).collect();
            let end = DVector::from_iterator(n - 1, states[states.len() - 1][1..].iter().copied());
            Ok((sigma, end))
        })
        .collect::<Result<Vec<_>>>()?;

    // t > t_w: ∫ (c - e_0) dt = -B^{-1} (c - e_0)(t_w), identity component 0
    let d_end = DVector::from_iterator(n - 1, c_end[1..].iter().copied());
    let d_int = resolvent(&b, C64::default(), &d_end)?;
    let mut d_full = DVector::zeros(n);
    d_full.rows_mut(1, n - 1).copy_from(&d_int);
    let post_seed = (&k_map * d_full).rows(1, n - 1).into_owned();

    let tw = trapezoid_weights(rows, h);
    let gamma_f = opts.filter_width;
    let values = omega
        .par_iter()
        .map(|&w| {
            let s = C64::new(-0.5 * gamma_f, w);
            let (p1, p2) = linear_weights(s * h);
            let step = (s * h).exp();
            let mut window = C64::default();
            let mut y = DVector::<C64>::zeros(n - 1);
            for (i, (sigma, end)) in row_data.iter().enumerate() {
                let mut acc = C64::default();
                let mut phase = C64::new(1.0, 0.0);
                for j in 0..sigma.len() - 1 {
                    acc += phase * (sigma[j] * p1 + sigma[j + 1] * p2);
                    phase *= step;
                }
                window += acc * h * tw[i];
                y += end * (phase * tw[i]);
            }
            let tail = resolvent(&b, s, &(y + &post_seed))?;
            Ok((window + tail[i_sigma - 1]).re)
        })
        .collect::<Result<Vec<f64>>>()?;
    let pop = integrated_population(&sys, &init, Mode::Emitter, &[f64::INFINITY])?[0];
    Ok(Spectrum {
        omega: omega.to_vec(),
        values,
        filter_width: gamma_f,
        normalization: Normalization::Unnormalized,
        emitter_population: pop,
    })
}

/// Spectrum estimated from the total population of a weakly coupled sensor
/// scanned over `omega`: `Γ/(2ε²) ∫ <ζ†ζ> dt`, which is the spectrum filtered
/// with width `Γ`.
pub fn sensor_population_spectrum(
    model: &JointModel,
    omega: &[f64],
    linewidth: f64,
    coupling: f64,
) -> Result<Spectrum> {
    let bare = model.without_sensors();
    let values = omega
        .par_iter()
        .map(|&w| {
            let m = bare.clone().with_sensors(SensorBank::new(vec![Sensor::new(w, linewidth)], coupling))?;
            let sys = MomentSystem::new(&m);
            let n = integrated_population(&sys, &sys.initial_moments(&m), Mode::Sensor(0), &[f64::INFINITY])?[0];
            Ok(n * linewidth / (2.0 * coupling * coupling))
        })
        .collect::<Result<Vec<f64>>>()?;
    let sys = MomentSystem::new(&bare);
    let pop = integrated_population(&sys, &sys.initial_moments(&bare), Mode::Emitter, &[f64::INFINITY])?[0];
    Ok(Spectrum {
        omega: omega.to_vec(),
        values,
        filter_width: linewidth,
        normalization: Normalization::SensorPopulation,
        emitter_population: pop,
    })
}

//! Quantum-jump (Monte Carlo wave-function) simulation of the joint model.
//!
//! Between jumps the unnormalized state follows `ψ' = -i H_eff(t) ψ` with
//! `H_eff = H(t) - (i/2) sum_c r_c c†c`. A jump fires when `|ψ|²` falls to a
//! uniform threshold drawn after the previous jump; the channel is picked with
//! weights `r_c |c ψ|²`.

mod histogram;

pub use histogram::{estimate_probabilities, CountingHistogram, Estimate};

use std::ops::ControlFlow;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::ode::{dopri5, OdeOptions, Outcome};
use crate::model::ComplexMatrix;
use crate::{Error, InitialState, JointModel, Mode, Result, C64};

/// Default cap on the number of jumps in one trajectory.
pub const MAX_JUMPS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub channel: Mode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub index: u64,
    pub jumps: Vec<Jump>,
    /// The jump cap was hit; the record stops at the last allowed jump.
    pub overflow: bool,
}

impl TrajectoryRecord {
    pub fn count(&self, channel: Mode) -> usize {
        self.jumps.iter().filter(|j| j.channel == channel).count()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct McOptions {
    pub ode: OdeOptions,
    /// Relative tolerance on jump times.
    pub root_tol: f64,
    pub max_jumps: usize,
    /// Fock levels kept per filter mode.
    pub filter_levels: usize,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::with_tolerances(1e-8, 1e-10), root_tol: 1e-10, max_jumps: MAX_JUMPS, filter_levels: 6 }
    }
}

/// Precomputed effective Hamiltonian and jump operators of a model.
///
/// Sensors are simulated as filters: bosonic modes fed by the emitter output
/// in cascade, each with half of its linewidth on the input side and half on
/// the detected side, so a filter transmits a Lorentzian of width `Γ_j` with
/// unit peak. The emitter output is split evenly between the filters.
/// Detections behind filter `j` are recorded as `Mode::Sensor(j)`; with
/// filters present, `Mode::Emitter` jumps are the photons that were not
/// transmitted.
#[derive(Clone, Debug)]
pub struct TrajectorySimulator {
    model: JointModel,
    dim: usize,
    /// `-i H_static - (1/2) sum r c†c`, row-major.
    a_static: Vec<C64>,
    /// `-i H_drive`, row-major.
    a_drive: Vec<C64>,
    channels: Vec<(f64, ComplexMatrix, Mode)>,
    window: Option<(f64, f64)>,
    opts: McOptions,
}

fn row_major(m: &ComplexMatrix) -> Vec<C64> {
    m.transpose().as_slice().to_vec()
}

fn matvec_acc(a: &[C64], x: &[C64], scale: C64, out: &mut [C64]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &a[i * n..(i + 1) * n];
        let s: C64 = row.iter().zip(x).map(|(p, q)| p * q).sum();
        *o += s * scale;
    }
}

fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// `local` acting on factor `k` of a product space with factor sizes `dims`
/// (first factor most significant).
fn embed_in(local: &ComplexMatrix, k: usize, dims: &[usize]) -> ComplexMatrix {
    dims.iter().enumerate().fold(ComplexMatrix::identity(1, 1), |acc, (i, &d)| {
        if i == k {
            acc.kronecker(local)
        } else {
            acc.kronecker(&ComplexMatrix::identity(d, d))
        }
    })
}

fn boson_lowering(levels: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(levels, levels);
    for k in 1..levels {
        a[(k - 1, k)] = C64::from((k as f64).sqrt());
    }
    a
}

/// Static Hamiltonian, drive Hamiltonian and channels of the cascaded
/// emitter-filter system.
fn cascaded_parts(
    model: &JointModel,
    levels: usize,
) -> (ComplexMatrix, ComplexMatrix, Vec<(f64, ComplexMatrix, Mode)>) {
    let n = model.sensors.count();
    let dims: Vec<usize> = std::iter::once(2).chain(std::iter::repeat_n(levels, n)).collect();
    let mut sm = ComplexMatrix::zeros(2, 2);
    sm[(0, 1)] = C64::new(1.0, 0.0);
    let s = embed_in(&sm, 0, &dims);
    let sd = s.adjoint();
    let gamma = model.tls.gamma;
    let mut h_static = (&sd * &s) * C64::from(model.tls.detuning);
    let mut channels = Vec::new();
    let share = gamma / n as f64;
    for (j, f) in model.sensors.sensors.iter().enumerate() {
        let a = embed_in(&boson_lowering(levels), 1 + j, &dims);
        let ad = a.adjoint();
        let kappa = 0.5 * f.linewidth;
        let c = (share * kappa).sqrt();
        h_static += (&ad * &a) * C64::from(f.detuning);
        h_static += (&sd * &a - &ad * &s) * C64::new(0.0, 0.5 * c);
        channels.push((1.0, &s * C64::from(share.sqrt()) + &a * C64::from(kappa.sqrt()), Mode::Emitter));
        channels.push((kappa, a, Mode::Sensor(j)));
    }
    let h_drive = (&sd + &s) * C64::from(0.5);
    (h_static, h_drive, channels)
}

impl TrajectorySimulator {
    pub fn new(model: &JointModel, opts: McOptions) -> Result<Self> {
        model.validate()?;
        let (hs, hd, channels) = if model.sensors.count() == 0 {
            let (hs, hd) = model.hamiltonian_parts();
            (hs, hd, model.collapse_ops())
        } else {
            if opts.filter_levels < 2 {
                return Err(Error::InvalidArgument("filters need at least two Fock levels".into()));
            }
            if matches!(model.initial, InitialState::Density(_)) {
                return Err(Error::InvalidArgument(
                    "filtered trajectories start from the ground or excited emitter state".into(),
                ));
            }
            cascaded_parts(model, opts.filter_levels)
        };
        let i = C64::new(0.0, 1.0);
        let mut a_s = &hs * (-i);
        for (r, c, _) in &channels {
            a_s -= c.adjoint() * c * C64::from(0.5 * r);
        }
        let a_d = &hd * (-i);
        let driven = model.pulse.support().is_some() && model.pulse.theta != 0.0;
        Ok(Self {
            model: model.clone(),
            dim: hs.nrows(),
            a_static: row_major(&a_s),
            a_drive: row_major(&a_d),
            channels,
            window: if driven { model.pulse.support() } else { None },
            opts,
        })
    }

    pub fn model(&self) -> &JointModel {
        &self.model
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        dy.iter_mut().for_each(|v| *v = C64::default());
        matvec_acc(&self.a_static, y, C64::new(1.0, 0.0), dy);
        if self.window.is_some() {
            let w = self.model.pulse.at(t);
            if w != 0.0 {
                matvec_acc(&self.a_drive, y, C64::from(w), dy);
            }
        }
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Vec<C64> {
        let mut psi = vec![C64::default(); self.dim];
        match &self.model.initial {
            InitialState::Ground => psi[0] = C64::new(1.0, 0.0),
            InitialState::Excited => psi[self.dim / 2] = C64::new(1.0, 0.0),
            InitialState::Density(rho) => {
                // sample an eigenvector with probability equal to its weight
                let eig = ((rho + rho.adjoint()) * C64::from(0.5)).symmetric_eigen();
                let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = eig.eigenvalues.len() - 1;
                for (k, v) in eig.eigenvalues.iter().enumerate() {
                    u -= v.max(0.0);
                    if u <= 0.0 {
                        pick = k;
                        break;
                    }
                }
                psi.copy_from_slice(eig.eigenvectors.column(pick).as_slice());
            }
        }
        psi
    }

    /// Integrates from `t` until `|ψ|²` reaches `threshold` or `t_end`.
    /// Returns the crossing time and state if a crossing occurred.
    fn evolve_until(
        &self,
        psi: &mut Vec<C64>,
        t: f64,
        t_end: f64,
        threshold: f64,
        h_max: f64,
    ) -> Result<Option<(f64, Vec<C64>)>> {
        let mut hit = None;
        let opts = self.opts.ode.with_max_step(h_max);
        let tol = self.opts.root_tol;
        let mut buf = vec![C64::default(); self.dim];
        let (outcome, _) = dopri5(
            |s, y, dy| self.rhs(s, y, dy),
            t,
            psi,
            t_end,
            &opts,
            |step| {
                if norm_sqr(step.y_new) > threshold {
                    return ControlFlow::Continue(());
                }
                // the norm decreases monotonically between jumps
                let (mut lo, mut hi) = (step.t_old, step.t_new);
                while hi - lo > tol * hi.abs().max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    step.interpolate(mid, &mut buf);
                    if norm_sqr(&buf) > threshold {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hit = Some((hi, step.interpolated(hi)));
                ControlFlow::Break(())
            },
        )?;
        match (outcome, hit) {
            (Outcome::Stopped { .. }, Some(h)) => Ok(Some(h)),
            _ => Ok(None),
        }
    }

    /// One trajectory; `(seed, index)` fixes the random stream.
    pub fn run(&self, seed: u64, index: u64) -> Result<TrajectoryRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut psi = self.initial_state(&mut rng);
        let mut t = 0.0;
        let mut jumps = Vec::new();
        let slowest = self.model.slowest_rate();
        loop {
            let threshold: f64 = rng.random::<f64>();
            let mut hit = None;
            if let Some((_, w1)) = self.window {
                if t < w1 {
                    hit = self.evolve_until(&mut psi, t, w1, threshold, self.model.pulse.max_step())?;
                    if hit.is_none() {
                        t = w1;
                    }
                }
            }
            if hit.is_none() {
                // drive off: the all-ground amplitude is frozen and everything else decays,
                // so |ψ|² tends to |ψ_0|²
                if psi[0].norm_sqr() >= threshold {
                    break;
                }
                let t_far = t + 200.0 / slowest;
                hit = self.evolve_until(&mut psi, t, t_far, threshold, f64::INFINITY)?;
                if hit.is_none() {
                    return Err(Error::RootFinding { t: t_far });
                }
            }
            let (tj, state) = hit.expect("crossing found");
            let weights: Vec<(f64, Vec<C64>)> = self
                .channels
                .iter()
                .map(|(r, c, _)| {
                    let v = (c * DVector::from_column_slice(&state)).as_slice().to_vec();
                    (r * norm_sqr(&v), v)
                })
                .collect();
            let total: f64 = weights.iter().map(|w| w.0).sum();
            if !(total > 0.0) {
                return Err(Error::RootFinding { t: tj });
            }
            let mut u = rng.random::<f64>() * total;
            let mut k = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                u -= w.0;
                if u <= 0.0 {
                    k = i;
                    break;
                }
            }
            let norm = weights[k].0.sqrt() / self.channels[k].0.sqrt();
            psi = weights[k].1.iter().map(|v| v / norm).collect();
            t = tj;
            jumps.push(Jump { t, channel: self.channels[k].2 });
            if jumps.len() >= self.opts.max_jumps {
                return Ok(TrajectoryRecord { seed, index, jumps, overflow: true });
            }
        }
        Ok(TrajectoryRecord { seed, index, jumps, overflow: false })
    }
}

pub fn run_trajectory(model: &JointModel, seed: u64) -> Result<TrajectoryRecord> {
    TrajectorySimulator::new(model, McOptions::default())?.run(seed, 0)
}

/// Trajectories `0..n` of one seed, in index order.
pub fn ensemble(model: &JointModel, seed: u64, n: u64, opts: McOptions) -> Result<Vec<TrajectoryRecord>> {
    let sim = TrajectorySimulator::new(model, opts)?;
    (0..n).into_par_iter().map(|i| sim.run(seed, i)).collect()
}

/// Histogram of an ensemble without keeping the records.
pub fn ensemble_histogram(
    model: &JointModel,
    seed: u64,
    n: u64,
    t_split: f64,
    channels: &[Mode],
    opts: McOptions,
) -> Result<CountingHistogram> {
    let sim = TrajectorySimulator::new(model, opts)?;
    let empty = || CountingHistogram::new(t_split, channels.to_vec());
    (0..n)
        .into_par_iter()
        .map(|i| sim.run(seed, i))
        .try_fold(empty, |mut h, r| {
            h.add(&r?);
            Ok(h)
        })
        .try_reduce(empty, |mut a, b| {
            a.merge(&b);
            Ok(a)
        })
}

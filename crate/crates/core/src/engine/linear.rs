//! Propagation of linear systems `y' = (A_s + Omega(t) A_d) y` driven by a pulse.
//!
//! Inside the pulse window the system is integrated with the adaptive
//! Dormand–Prince stepper. Outside it the generator is constant, so
//! [`Propagation::Hybrid`] uses matrix exponentials there and solves the
//! `t -> infinity` limit exactly.

use std::collections::HashMap;
use std::ops::ControlFlow;

use nalgebra::DVector;

use super::ode::{dopri5, DenseSegment, OdeOptions, OdeStats, Outcome};
use crate::model::{ComplexMatrix, PulseEnvelope};
use crate::{Error, Result, C64};

/// Largest dimension for which drive-free intervals use matrix exponentials.
pub const EXPM_MAX_DIM: usize = 96;

/// Relative residual allowed at the horizon when the limit is reached by integration.
pub const TAIL_RESIDUAL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Propagation {
    /// Exact exponentials and limits wherever the drive is off.
    #[default]
    Hybrid,
    /// Runge–Kutta everywhere; limits by integrating to a finite horizon.
    RungeKutta,
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != C64::default() {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = alpha * A x` when `accumulate` is false, `out += alpha * A x` otherwise.
    pub fn mul_into(&self, alpha: C64, x: &[C64], out: &mut [C64], accumulate: bool) {
        for r in 0..self.row_ptr.len() - 1 {
            let mut acc = C64::default();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            if accumulate {
                out[r] += alpha * acc;
            } else {
                out[r] = alpha * acc;
            }
        }
    }
}

/// Solution of a linear system on a dense time axis.
#[derive(Clone, Debug)]
pub struct DenseTrajectory {
    pub segments: Vec<DenseSegment>,
    pub t0: f64,
    pub y0: Vec<C64>,
    pub stats: OdeStats,
}

impl DenseTrajectory {
    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(self.t0, |s| s.t_new)
    }

    /// Accepted step end points, starting with `t0`.
    pub fn step_times(&self) -> Vec<f64> {
        std::iter::once(self.t0).chain(self.segments.iter().map(|s| s.t_new)).collect()
    }

    /// State at any `t` in `[t0, t_end]`.
    pub fn at(&self, t: f64) -> Vec<C64> {
        let mut out = self.y0.clone();
        if t <= self.t0 || self.segments.is_empty() {
            return out;
        }
        let i = self.segments.partition_point(|s| s.t_new < t).min(self.segments.len() - 1);
        self.segments[i].interpolate(t.min(self.segments[i].t_new), &mut out);
        out
    }
}

#[derive(Clone, Debug)]
pub struct LinearSystem {
    a_static: ComplexMatrix,
    sp_static: Csr,
    sp_drive: Csr,
    has_drive: bool,
    scale: Vec<f64>,
    pulse: PulseEnvelope,
    pub opts: OdeOptions,
    pub propagation: Propagation,
    /// Integration span after the pulse used by [`Propagation::RungeKutta`] limits.
    pub tail_span: f64,
}

impl LinearSystem {
    /// `scale` gives the typical magnitude of each component; the system is
    /// integrated in coordinates `y_i / scale_i` so error control sees O(1) values.
    pub fn new(
        a_static: &ComplexMatrix,
        a_drive: &ComplexMatrix,
        pulse: &PulseEnvelope,
        scale: Option<Vec<f64>>,
        opts: OdeOptions,
    ) -> Self {
        let n = a_static.nrows();
        assert_eq!(a_static.shape(), (n, n));
        assert_eq!(a_drive.shape(), (n, n));
        let scale = scale.unwrap_or_else(|| vec![1.0; n]);
        assert_eq!(scale.len(), n);
        let similar = |a: &ComplexMatrix| ComplexMatrix::from_fn(n, n, |i, j| a[(i, j)] * (scale[j] / scale[i]));
        let a_s = similar(a_static);
        let a_d = similar(a_drive);
        let has_drive = pulse.support().is_some() && a_d.iter().any(|v| *v != C64::default());
        Self {
            sp_static: Csr::from_dense(&a_s),
            sp_drive: Csr::from_dense(&a_d),
            a_static: a_s,
            has_drive,
            scale,
            pulse: pulse.clone(),
            opts,
            propagation: Propagation::Hybrid,
            tail_span: 15.0,
        }
    }

    pub fn with_propagation(mut self, p: Propagation) -> Self {
        self.propagation = p;
        self
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Window outside which the drive term vanishes.
    pub fn drive_window(&self) -> Option<(f64, f64)> {
        if self.has_drive {
            self.pulse.support()
        } else {
            None
        }
    }

    fn to_scaled(&self, y: &[C64]) -> Vec<C64> {
        y.iter().zip(&self.scale).map(|(v, s)| v / s).collect()
    }

    fn from_scaled(&self, mut y: Vec<C64>) -> Vec<C64> {
        y.iter_mut().zip(&self.scale).for_each(|(v, s)| *v *= s);
        y
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        self.sp_static.mul_into(C64::new(1.0, 0.0), y, dy, false);
        if self.has_drive {
            let w = self.pulse.at(t);
            if w != 0.0 {
                self.sp_drive.mul_into(C64::from(w), y, dy, true);
            }
        }
    }

    /// Splits `[t0, t1]` into pieces tagged with whether the drive is on.
    fn pieces(&self, t0: f64, t1: f64) -> Vec<(f64, f64, bool)> {
        let mut cuts = vec![(t0, false)];
        if let Some((w0, w1)) = self.drive_window() {
            // cuts within rounding distance of an endpoint would leave empty pieces
            let tol = 1e-12 * (1.0 + t0.abs().max(t1.abs()));
            let inside = |w: f64| w > t0 + tol && w < t1 - tol;
            if inside(w0) {
                cuts.push((w0, true));
            }
            if inside(w1) {
                cuts.push((w1, false));
            }
            cuts[0].1 = t0 + tol >= w0 && t0 + tol < w1;
        }
        let mut out = Vec::new();
        for (k, &(a, on)) in cuts.iter().enumerate() {
            let b = cuts.get(k + 1).map_or(t1, |c| c.0);
            if b > a {
                out.push((a, b, on));
            }
        }
        out
    }

    fn use_expm(&self, drive_on: bool) -> bool {
        !drive_on && self.propagation == Propagation::Hybrid && self.dim() <= EXPM_MAX_DIM
    }

    fn step_opts(&self, drive_on: bool) -> OdeOptions {
        let mut o = self.opts;
        if drive_on {
            o.h_max = o.h_max.min(self.pulse.max_step());
        }
        o
    }

    /// State at each time of an ascending grid, starting from `y0` at `t0`.
    /// Grid points at or before `t0` receive `y0`.
    pub fn propagate_grid(&self, y0: &[C64], t0: f64, times: &[f64]) -> Result<Vec<Vec<C64>>> {
        let mut y = self.to_scaled(y0);
        let mut out: Vec<Vec<C64>> = Vec::with_capacity(times.len());
        let mut idx = 0;
        while idx < times.len() && times[idx] <= t0 {
            out.push(y0.to_vec());
            idx += 1;
        }
        let Some(&t_last) = times.last() else { return Ok(out) };
        let mut cache = ExpmCache::default();
        for (a, b, on) in self.pieces(t0, t_last) {
            let end = idx + times[idx..].partition_point(|&t| t <= b);
            let targets = &times[idx..end];
            if self.use_expm(on) {
                let mut t = a;
                for &tk in targets {
                    y = cache.apply(&self.a_static, tk - t, &y);
                    t = tk;
                    out.push(self.from_scaled(y.clone()));
                }
                if t < b {
                    y = cache.apply(&self.a_static, b - t, &y);
                }
            } else {
                let mut next = 0;
                let (outcome, _) = dopri5(
                    |t, y, dy| self.rhs(t, y, dy),
                    a,
                    &mut y,
                    b,
                    &self.step_opts(on),
                    |step| {
                        while next < targets.len() && targets[next] <= step.t_new {
                            let v = if targets[next] == step.t_new {
                                step.y_new.to_vec()
                            } else {
                                step.interpolated(targets[next])
                            };
                            out.push(self.from_scaled(v));
                            next += 1;
                        }
                        ControlFlow::Continue(())
                    },
                )?;
                debug_assert_eq!(outcome, Outcome::Completed);
            }
            idx = end;
        }
        Ok(out)
    }

    /// State at `t1`.
    pub fn propagate(&self, y0: &[C64], t0: f64, t1: f64) -> Result<Vec<C64>> {
        if t1 <= t0 {
            return Ok(y0.to_vec());
        }
        Ok(self.propagate_grid(y0, t0, &[t1])?.pop().expect("one grid point"))
    }

    /// Dense Runge–Kutta solution over `[t0, t1]`, honouring the pulse step limit.
    pub fn trajectory(&self, y0: &[C64], t0: f64, t1: f64) -> Result<DenseTrajectory> {
        let mut y = self.to_scaled(y0);
        let mut segments = Vec::new();
        let mut stats = OdeStats::default();
        for (a, b, on) in self.pieces(t0, t1.max(t0)) {
            let (_, s) = dopri5(
                |t, y, dy| self.rhs(t, y, dy),
                a,
                &mut y,
                b,
                &self.step_opts(on),
                |step| {
                    let mut seg = step.to_segment();
                    seg.rescale(&self.scale);
                    segments.push(seg);
                    ControlFlow::Continue(())
                },
            )?;
            stats += s;
        }
        Ok(DenseTrajectory { segments, t0, y0: y0.to_vec(), stats })
    }

    /// Components whose column of the static generator vanishes: they never feed
    /// back, so they are pure accumulators once the drive is off.
    fn accumulator_mask(&self) -> Vec<bool> {
        let n = self.dim();
        (0..n).map(|j| (0..n).all(|i| self.a_static[(i, j)] == C64::default())).collect()
    }

    /// `lim_{t -> infinity} y(t)` given `y0` at `t0`.
    ///
    /// Requires every non-accumulator component to decay once the drive is off.
    pub fn limit(&self, y0: &[C64], t0: f64) -> Result<Vec<C64>> {
        let (mut y, t) = match self.drive_window() {
            Some((_, w1)) if t0 < w1 => (self.propagate(y0, t0, w1)?, w1),
            _ => (y0.to_vec(), t0),
        };
        let mask = self.accumulator_mask();
        match self.propagation {
            Propagation::Hybrid => {
                let ys = self.to_scaled(&y);
                Ok(self.from_scaled(self.exact_tail(&ys, &mask)?))
            }
            Propagation::RungeKutta => {
                let start: f64 = self
                    .to_scaled(&y)
                    .iter()
                    .zip(&mask)
                    .filter(|(_, z)| !**z)
                    .map(|(v, _)| v.norm())
                    .fold(0.0, f64::max);
                let mut t_cur = t;
                for attempt in 0..2 {
                    let span = self.tail_span * if attempt == 0 { 1.0 } else { 2.0 };
                    y = self.propagate(&y, t_cur, t_cur + span)?;
                    t_cur += span;
                    let residual: f64 = self
                        .to_scaled(&y)
                        .iter()
                        .zip(&mask)
                        .filter(|(_, z)| !**z)
                        .map(|(v, _)| v.norm())
                        .fold(0.0, f64::max);
                    if residual <= TAIL_RESIDUAL * start.max(f64::MIN_POSITIVE) {
                        return Ok(y);
                    }
                }
                Err(Error::UnconvergedTail(format!("residual above {TAIL_RESIDUAL} at t = {t_cur}")))
            }
        }
    }

    fn exact_tail(&self, y: &[C64], mask: &[bool]) -> Result<Vec<C64>> {
        let z: Vec<usize> = (0..y.len()).filter(|&i| mask[i]).collect();
        let nz: Vec<usize> = (0..y.len()).filter(|&i| !mask[i]).collect();
        if nz.is_empty() {
            return Ok(y.to_vec());
        }
        let b = ComplexMatrix::from_fn(nz.len(), nz.len(), |r, c| self.a_static[(nz[r], nz[c])]);
        let rhs = DVector::from_iterator(nz.len(), nz.iter().map(|&i| y[i]));
        let lu = b.lu();
        let x = lu
            .solve(&rhs)
            .filter(|x| x.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
            .ok_or_else(|| Error::UnconvergedTail("drive-free generator is singular on decaying components".into()))?;
        // integral of the decaying part over [t, inf) is -B^{-1} y_N
        let mut out = vec![C64::default(); y.len()];
        for &i in &z {
            let mut acc = y[i];
            for (c, &j) in nz.iter().enumerate() {
                acc -= self.a_static[(i, j)] * x[c];
            }
            out[i] = acc;
        }
        Ok(out)
    }
}

/// Matrix exponentials keyed by the (quantised) step length.
#[derive(Default)]
struct ExpmCache {
    map: HashMap<i64, ComplexMatrix>,
}

impl ExpmCache {
    fn apply(&mut self, a: &ComplexMatrix, dt: f64, y: &[C64]) -> Vec<C64> {
        if dt == 0.0 {
            return y.to_vec();
        }
        let key = (dt * 1e12).round() as i64;
        let e = self.map.entry(key).or_insert_with(|| (a * C64::from(dt)).exp());
        (&*e * DVector::from_column_slice(y)).as_slice().to_vec()
    }
}

//! Dormand–Prince 5(4) integrator with continuous extension, for complex
//! first-order systems `y' = f(t, y)`.

use std::ops::ControlFlow;

use crate::{Error, Result, C64};

/// Default relative tolerance.
pub const DEFAULT_RTOL: f64 = 1e-9;
/// Default absolute tolerance.
pub const DEFAULT_ATOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: DEFAULT_RTOL, atol: DEFAULT_ATOL, h_max: f64::INFINITY, h_init: None, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn with_max_step(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl std::ops::AddAssign for OdeStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
    }
}

/// How an integration ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Completed,
    /// The observer stopped the integration after the step ending at `t`.
    Stopped {
        t: f64,
    },
}

/// One accepted step, with the dense-output polynomial valid on `[t_old, t_new]`.
pub struct Step<'a> {
    pub t_old: f64,
    pub t_new: f64,
    pub y_new: &'a [C64],
    rcont: &'a [Vec<C64>; 5],
}

impl Step<'_> {
    /// Interpolated state at `t` in `[t_old, t_new]`.
    pub fn interpolate(&self, t: f64, out: &mut [C64]) {
        let h = self.t_new - self.t_old;
        let th = if h == 0.0 { 1.0 } else { (t - self.t_old) / h };
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * th1) * th) * th1) * th;
        }
    }

    pub fn interpolated(&self, t: f64) -> Vec<C64> {
        let mut out = vec![C64::default(); self.y_new.len()];
        self.interpolate(t, &mut out);
        out
    }

    /// Owned copy of the interpolant.
    pub fn to_segment(&self) -> DenseSegment {
        DenseSegment { t_old: self.t_old, t_new: self.t_new, rcont: self.rcont.clone() }
    }
}

/// Owned dense-output polynomial of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSegment {
    pub t_old: f64,
    pub t_new: f64,
    rcont: [Vec<C64>; 5],
}

impl DenseSegment {
    pub fn interpolate(&self, t: f64, out: &mut [C64]) {
        Step { t_old: self.t_old, t_new: self.t_new, y_new: &self.rcont[0], rcont: &self.rcont }.interpolate(t, out)
    }

    /// Applies a componentwise factor to the interpolant.
    pub fn rescale(&mut self, factors: &[f64]) {
        for r in self.rcont.iter_mut() {
            for (v, s) in r.iter_mut().zip(factors) {
                *v *= *s;
            }
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0` in place.
///
/// `observer` sees every accepted step and may stop the integration early, in
/// which case `y` holds the state at the end of that step.
pub fn dopri5<F, O>(
    mut f: F,
    t0: f64,
    y: &mut [C64],
    t1: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(Outcome, OdeStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(&Step<'_>) -> ControlFlow<()>,
{
    if !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!("integration interval [{t0}, {t1}] is reversed")));
    }
    let mut stats = OdeStats::default();
    if t1 == t0 {
        return Ok((Outcome::Completed, stats));
    }
    let n = y.len();
    let zero = C64::default();
    let mut k = [(); 7].map(|_| vec![zero; n]);
    let mut ytmp = vec![zero; n];
    let mut ynew = vec![zero; n];
    let mut rcont = [(); 5].map(|_| vec![zero; n]);

    let span = t1 - t0;
    let h_max = opts.h_max.min(span);
    let mut t = t0;
    f(t, y, &mut k[0]);
    stats.evaluations += 1;
    let mut h = match opts.h_init {
        Some(h) => h.min(h_max),
        None => initial_step(&mut f, t, y, &k[0], h_max, opts, &mut ytmp, &mut ynew, &mut stats),
    };
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Integrator { t, reason: format!("exceeded {} steps", opts.max_steps) });
        }
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(span) {
            return Err(Error::Integrator { t, reason: format!("step size underflow (h = {h:e})") });
        }

        stage(&mut ytmp, y, h, &[(A21, &k[0])]);
        f(t + C2 * h, &ytmp, &mut k[1]);
        stage(&mut ytmp, y, h, &[(A31, &k[0]), (A32, &k[1])]);
        f(t + C3 * h, &ytmp, &mut k[2]);
        stage(&mut ytmp, y, h, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])]);
        f(t + C4 * h, &ytmp, &mut k[3]);
        stage(&mut ytmp, y, h, &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])]);
        f(t + C5 * h, &ytmp, &mut k[4]);
        stage(&mut ytmp, y, h, &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])]);
        let t_new = if last { t1 } else { t + h };
        f(t_new, &ytmp, &mut k[5]);
        stage(&mut ynew, y, h, &[(A71, &k[0]), (A73, &k[2]), (A74, &k[3]), (A75, &k[4]), (A76, &k[5])]);
        f(t_new, &ynew, &mut k[6]);
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            let sk = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
            err += (e.norm() / sk).powi(2);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            h *= 0.1;
            stats.rejected += 1;
            last_rejected = true;
            continue;
        }

        // Lund stabilisation as in Hairer's DOPRI5
        let fac11 = err.powf(0.2 - 0.04 * 0.75);
        let fac = (fac11 / fac_old.powf(0.04)) / 0.9;
        if err <= 1.0 {
            fac_old = err.max(1e-4);
            stats.accepted += 1;
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = k[0][i] * h - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - k[6][i] * h - bspl;
                rcont[4][i] =
                    (k[0][i] * D1 + k[2][i] * D3 + k[3][i] * D4 + k[4][i] * D5 + k[5][i] * D6 + k[6][i] * D7) * h;
            }
            let t_old = t;
            t = t_new;
            y.copy_from_slice(&ynew);
            k.swap(0, 6);
            let step = Step { t_old, t_new: t, y_new: y, rcont: &rcont };
            if observer(&step).is_break() {
                return Ok((Outcome::Stopped { t }, stats));
            }
            if last {
                return Ok((Outcome::Completed, stats));
            }
            let mut h_new = h / fac.clamp(0.1, 5.0);
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new.min(h_max);
            last_rejected = false;
        } else {
            h /= (fac11 / 0.9).min(5.0);
            stats.rejected += 1;
            last_rejected = true;
        }
    }
}

/// Integrates without observing intermediate steps.
pub fn dopri5_simple<F>(f: F, t0: f64, y: &mut [C64], t1: f64, opts: &OdeOptions) -> Result<OdeStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    dopri5(f, t0, y, t1, opts, |_| ControlFlow::Continue(())).map(|(_, s)| s)
}

/// Integrates and records the state at each time of an ascending grid within `[t0, t1]`.
pub fn dopri5_grid<F>(
    f: F,
    t0: f64,
    y: &mut [C64],
    times: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<Vec<C64>>, OdeStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && times[next] <= t0 {
        out.push(y.to_vec());
        next += 1;
    }
    let Some(&t_end) = times.last() else {
        return Ok((out, OdeStats::default()));
    };
    if next == times.len() {
        return Ok((out, OdeStats::default()));
    }
    let (_, stats) = dopri5(f, t0, y, t_end, opts, |step| {
        while next < times.len() && times[next] <= step.t_new {
            out.push(if times[next] == step.t_new { step.y_new.to_vec() } else { step.interpolated(times[next]) });
            next += 1;
        }
        ControlFlow::Continue(())
    })?;
    Ok((out, stats))
}

fn stage(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &Vec<C64>)]) {
    for i in 0..out.len() {
        let mut acc = C64::default();
        for (a, k) in terms {
            acc += k[i] * *a;
        }
        out[i] = y[i] + acc * h;
    }
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[C64],
    f0: &[C64],
    h_max: f64,
    opts: &OdeOptions,
    y1: &mut [C64],
    f1: &mut [C64],
    stats: &mut OdeStats,
) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len().max(1) as f64;
    let sk = |i: usize| opts.atol + opts.rtol * y[i].norm();
    let dnf = (0..y.len()).map(|i| (f0[i].norm() / sk(i)).powi(2)).sum::<f64>() / n;
    let dny = (0..y.len()).map(|i| (y[i].norm() / sk(i)).powi(2)).sum::<f64>() / n;
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(h_max);
    for i in 0..y.len() {
        y1[i] = y[i] + f0[i] * h;
    }
    f(t + h, y1, f1);
    stats.evaluations += 1;
    let der2 = ((0..y.len()).map(|i| ((f1[i] - f0[i]).norm() / sk(i)).powi(2)).sum::<f64>() / n).sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    (100.0 * h).min(h1).min(h_max)
}

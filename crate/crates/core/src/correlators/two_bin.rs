//! Early/late split of the integrated two-photon correlators at a bin edge `T`.
//!
//! `U_a(T, τ)` starts from `V_a(T)` and evolves with `M(T + τ)`. Its `b†b`
//! component integrated over all `τ` is the weight with the `a` photon in
//! `[0, T]` and the `b` photon after `T`:
//! `EL_{a->b}(T) = ∫_0^∞ [U_a(T, τ)]_{i_b} dτ`.

use rayon::prelude::*;

use super::integrated::{integrated_g2_in, validate_t_grid};
use super::stack::StackBuilder;
use crate::engine::MomentSystem;
use crate::{Error, JointModel, Mode, Result, C64};

/// Bin integrals of an ordered mode pair for one bin edge.
///
/// `ee` counts both photons in `[0, T]`, `el` the `a` photon early and the `b`
/// photon late, `le` the reverse, `ll` both late. For `a == b`, `el == le`
/// and all four are the normally ordered second moments of the bin intensities
/// (without the detection efficiency).
#[derive(Clone, Debug)]
pub struct TwoBinCorrelators {
    pub a: Mode,
    pub b: Mode,
    pub t_split: f64,
    pub ee: f64,
    pub el: f64,
    pub le: f64,
    pub ll: f64,
    /// `G_{ab}[0, ∞]`.
    pub total: f64,
    /// `int_0^T <a†a>`.
    pub early_a: f64,
    pub early_b: f64,
    /// `int_0^∞ <a†a>`.
    pub total_a: f64,
    pub total_b: f64,
    /// `U_a(T, 0) = V_a(T)`.
    pub u_a: Vec<C64>,
    pub u_b: Vec<C64>,
}

impl TwoBinCorrelators {
    pub fn late_a(&self) -> f64 {
        self.total_a - self.early_a
    }

    pub fn late_b(&self) -> f64 {
        self.total_b - self.early_b
    }
}

/// `int_0^∞ [U(T, τ)]_{i_b} dτ` for `U(T, 0) = u0`, where `u0` carries the `a†...a` scale of `a`.
fn early_late(sys: &MomentSystem, a: Mode, b: Mode, u0: &[C64], t_split: f64) -> Result<f64> {
    let ib = sys.basis.number_index(b);
    let mut st = StackBuilder::new(sys);
    let u = st.moment_block(sys.mode_scale(a));
    let acc = st.scalar(st.magnitude(u, ib));
    st.read(acc, u, ib, 1.0);
    let lin = st.build();
    let y = lin.limit(&st.initial(u, u0), t_split).map_err(|e| e.with_context(format_args!("T = {t_split}")))?;
    Ok(st.slice(&y, acc)[0].re)
}

/// `U_a(T, τ)` sampled on an ascending `τ` grid.
pub fn u_trajectory(sys: &MomentSystem, a: Mode, u0: &[C64], t_split: f64, tau_grid: &[f64]) -> Result<Vec<Vec<C64>>> {
    let mut st = StackBuilder::new(sys);
    let u = st.moment_block(sys.mode_scale(a));
    let lin = st.build();
    let times: Vec<f64> = tau_grid.iter().map(|tau| t_split + tau).collect();
    lin.propagate_grid(&st.initial(u, u0), t_split, &times)
}

pub fn two_bin_extension(model: &JointModel, a: Mode, b: Mode, t_split: f64) -> Result<TwoBinCorrelators> {
    let sys = MomentSystem::new(model);
    Ok(two_bin_on_grid(&sys, &sys.initial_moments(model), a, b, &[t_split])?.remove(0))
}

/// Bin integrals for every bin edge of a finite grid, sharing one forward solve.
pub fn two_bin_on_grid(
    sys: &MomentSystem,
    init: &[C64],
    a: Mode,
    b: Mode,
    t_grid: &[f64],
) -> Result<Vec<TwoBinCorrelators>> {
    validate_t_grid(t_grid)?;
    if t_grid.iter().any(|t| t.is_infinite()) {
        return Err(Error::InvalidArgument("bin edges must be finite".into()));
    }
    let mut grid = t_grid.to_vec();
    grid.push(f64::INFINITY);
    let g = integrated_g2_in(sys, init, a, b, &grid)?;
    let n = t_grid.len();
    let total = g.symmetric[n];
    let same = a == b;
    (0..n)
        .into_par_iter()
        .map(|k| {
            let t = t_grid[k];
            let el = early_late(sys, a, b, &g.v_a[k], t)?;
            let le = if same { el } else { early_late(sys, b, a, &g.v_b[k], t)? };
            let ee = g.symmetric[k];
            Ok(TwoBinCorrelators {
                a,
                b,
                t_split: t,
                ee,
                el,
                le,
                ll: total - ee - el - le,
                total,
                early_a: g.pop_a[k],
                early_b: g.pop_b[k],
                total_a: g.pop_a[n],
                total_b: g.pop_b[n],
                u_a: g.v_a[k].clone(),
                u_b: g.v_b[k].clone(),
            })
        })
        .collect()
}

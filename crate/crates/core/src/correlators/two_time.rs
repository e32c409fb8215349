//! Two-time intensity correlations from the quantum regression theorem.
//!
//! Row `t` seeds `v(0) = C_a <c>(t)` and evolves `dv/dτ = M(t + τ) v`; the
//! `b†b` component of `v(τ)` is `G_{a->b}(t, τ) = <a†(t) b†b(t + τ) a(t)>`.

use rayon::prelude::*;

use super::stack::StackBuilder;
use crate::engine::{LinearSystem, MomentSystem};
use crate::{Error, JointModel, Mode, Result, C64};

/// `G_{a->b}(t_i, τ_j)` on a rectangular grid.
#[derive(Clone, Debug)]
pub struct TwoTimeGrid {
    pub a: Mode,
    pub b: Mode,
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    /// `values[i][j] = G_{a->b}(t[i], tau[j])`.
    pub values: Vec<Vec<f64>>,
}

impl TwoTimeGrid {
    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.iter().any(|v| !v.is_finite() || *v < 0.0) || g.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(format!("{name} grid must be finite, nonnegative and ascending")));
    }
    Ok(())
}

/// Propagator for a single seeded row `v`, which carries the extra `a†...a` scale.
fn row_system(sys: &MomentSystem, a: Mode) -> LinearSystem {
    let mut st = StackBuilder::new(sys);
    st.moment_block(sys.mode_scale(a));
    st.build()
}

fn seed(sys: &MomentSystem, a: Mode, c: &[C64]) -> Vec<C64> {
    let v = &sys.sandwich(a).0 * nalgebra::DVector::from_column_slice(c);
    v.as_slice().to_vec()
}

/// `b†b` component along one row; `taus` ascending from 0.
fn row(lin: &LinearSystem, sys: &MomentSystem, a: Mode, b: Mode, t: f64, c: &[C64], taus: &[f64]) -> Result<Vec<f64>> {
    let ib = sys.basis.number_index(b);
    let times: Vec<f64> = taus.iter().map(|tau| t + tau).collect();
    let states =
        lin.propagate_grid(&seed(sys, a, c), t, &times).map_err(|e| e.with_context(format_args!("row t = {t}")))?;
    Ok(states.iter().map(|v| v[ib].re).collect())
}

pub fn two_time_g2_grid(model: &JointModel, a: Mode, b: Mode, t_grid: &[f64], tau_grid: &[f64]) -> Result<TwoTimeGrid> {
    let sys = MomentSystem::new(model);
    two_time_g2_grid_in(&sys, &sys.initial_moments(model), a, b, t_grid, tau_grid)
}

/// Rows are independent and solved in parallel.
pub fn two_time_g2_grid_in(
    sys: &MomentSystem,
    init: &[C64],
    a: Mode,
    b: Mode,
    t_grid: &[f64],
    tau_grid: &[f64],
) -> Result<TwoTimeGrid> {
    check_grid("t", t_grid)?;
    check_grid("tau", tau_grid)?;
    for m in [a, b] {
        if m.index() >= sys.basis.n_modes() {
            return Err(Error::InvalidArgument(format!("{m} is not part of the model")));
        }
    }
    let cs = sys.linear_system().propagate_grid(init, 0.0, t_grid)?;
    let lin = row_system(sys, a);
    let values = t_grid
        .par_iter()
        .zip(cs.par_iter())
        .map(|(&t, c)| row(&lin, sys, a, b, t, c, tau_grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(TwoTimeGrid { a, b, t: t_grid.to_vec(), tau: tau_grid.to_vec(), values })
}

/// Time-ordered `𝒢_{ab}(t1, t2) = <a†(t1) b†(t2) b(t2) a(t1)>` on a square grid.
#[derive(Clone, Debug)]
pub struct SquareGrid {
    pub a: Mode,
    pub b: Mode,
    pub times: Vec<f64>,
    /// `values[i][j] = 𝒢_{ab}(times[i], times[j])`.
    pub values: Vec<Vec<f64>>,
}

impl SquareGrid {
    pub fn transpose(&self) -> Vec<Vec<f64>> {
        let n = self.times.len();
        (0..n).map(|j| (0..n).map(|i| self.values[i][j]).collect()).collect()
    }
}

/// Assembles the square grid from ordered rows: `t2 >= t1` uses `G_{a->b}`,
/// `t2 < t1` uses `G_{b->a}` with the roles of the times swapped.
pub fn two_time_square(sys: &MomentSystem, init: &[C64], a: Mode, b: Mode, times: &[f64]) -> Result<SquareGrid> {
    check_grid("time", times)?;
    let n = times.len();
    let cs = sys.linear_system().propagate_grid(init, 0.0, times)?;
    let (lin_a, lin_b) = (row_system(sys, a), row_system(sys, b));
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let taus: Vec<f64> = times[i..].iter().map(|t| t - times[i]).collect();
            let ab = row(&lin_a, sys, a, b, times[i], &cs[i], &taus)?;
            let ba = if a == b { ab.clone() } else { row(&lin_b, sys, b, a, times[i], &cs[i], &taus)? };
            Ok((ab, ba))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![vec![0.0; n]; n];
    for (i, (ab, ba)) in rows.iter().enumerate() {
        for k in 0..ab.len() {
            values[i][i + k] = ab[k];
            values[i + k][i] = ba[k];
        }
    }
    Ok(SquareGrid { a, b, times: times.to_vec(), values })
}

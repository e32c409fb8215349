//! Time-integrated correlators from forward equations of motion in the bin edge `T`.
//!
//! For `G_{a->b}[0,T]` the state is `(<c>, V_a, G)` with
//! `V_a' = M V_a + C_a <c>` and `G' = [V_a]_{i_b}`; `[V_a]_0` is the
//! integrated population of mode `a`. The chain for `G^(n)` of a single mode is
//! `V_k' = M V_k + k C_a V_{k-1}`, `G^(k) = [V_k]_0`.

use super::stack::StackBuilder;
use crate::engine::{LinearSystem, MomentSystem};
use crate::{Error, JointModel, Mode, Result, C64};

/// Checks that `grid` is ascending and nonnegative; only the last entry may be infinite.
/// Checks that a `T` grid is non-empty, ascending and non-negative; only the last entry may be infinite.
pub fn validate_t_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty T grid".into()));
    }
    for (k, &t) in grid.iter().enumerate() {
        if t.is_nan() || t < 0.0 || (t.is_infinite() && k + 1 != grid.len()) {
            return Err(Error::InvalidArgument(format!("invalid T grid entry {t}")));
        }
        if k > 0 && t < grid[k - 1] {
            return Err(Error::InvalidArgument("T grid must be ascending".into()));
        }
    }
    Ok(())
}

/// States on a grid that may end with `infinity`, starting from `y0` at `t = 0`.
pub(crate) fn solve_on_grid(sys: &LinearSystem, y0: &[C64], grid: &[f64]) -> Result<Vec<Vec<C64>>> {
    let finite: Vec<f64> = grid.iter().copied().filter(|t| t.is_finite()).collect();
    let mut out = sys.propagate_grid(y0, 0.0, &finite)?;
    if grid.last().is_some_and(|t| t.is_infinite()) {
        let (t_from, y_from) = match (finite.last(), out.last()) {
            (Some(&t), Some(y)) => (t, y.clone()),
            _ => (0.0, y0.to_vec()),
        };
        out.push(sys.limit(&y_from, t_from)?);
    }
    Ok(out)
}

fn check_mode(sys: &MomentSystem, mode: Mode) -> Result<()> {
    if mode.index() >= sys.basis.n_modes() {
        return Err(Error::InvalidArgument(format!("{mode} is not part of the model")));
    }
    Ok(())
}

/// Integrated two-photon correlators of an ordered mode pair on a `T` grid.
#[derive(Clone, Debug)]
pub struct IntegratedCorrelators {
    pub a: Mode,
    pub b: Mode,
    pub t_grid: Vec<f64>,
    /// `G_{a->b}[0,T]`.
    pub g_ab: Vec<f64>,
    /// `G_{b->a}[0,T]`.
    pub g_ba: Vec<f64>,
    /// `G_{ab}[0,T] = G_{a->b} + G_{b->a}`.
    pub symmetric: Vec<f64>,
    pub v_a: Vec<Vec<C64>>,
    pub v_b: Vec<Vec<C64>>,
    /// `int_0^T <a†a> dt`.
    pub pop_a: Vec<f64>,
    pub pop_b: Vec<f64>,
    /// `<c>(T)`.
    pub moments: Vec<Vec<C64>>,
}

/// [`integrated_g2_in`] for the model's initial state with default numerics.
pub fn integrated_g2(model: &JointModel, a: Mode, b: Mode, t_grid: &[f64]) -> Result<IntegratedCorrelators> {
    let sys = MomentSystem::new(model);
    integrated_g2_in(&sys, &sys.initial_moments(model), a, b, t_grid)
}

pub fn integrated_g2_in(
    sys: &MomentSystem,
    init: &[C64],
    a: Mode,
    b: Mode,
    t_grid: &[f64],
) -> Result<IntegratedCorrelators> {
    validate_t_grid(t_grid)?;
    check_mode(sys, a)?;
    check_mode(sys, b)?;
    let (ia, ib) = (sys.basis.number_index(a), sys.basis.number_index(b));
    let mut st = StackBuilder::new(sys);
    let c = st.moment_block(1.0);
    let va = st.moment_block(sys.mode_scale(a));
    st.couple(va, c, &sys.sandwich(a).0, 1.0);
    let same = a == b;
    let vb = if same {
        va
    } else {
        let vb = st.moment_block(sys.mode_scale(b));
        st.couple(vb, c, &sys.sandwich(b).0, 1.0);
        vb
    };
    let gab = st.scalar(st.magnitude(va, ib));
    st.read(gab, va, ib, 1.0);
    let gba = if same {
        gab
    } else {
        let g = st.scalar(st.magnitude(vb, ia));
        st.read(g, vb, ia, 1.0);
        g
    };
    let lin = st.build();
    let states = solve_on_grid(&lin, &st.initial(c, init), t_grid)?;

    let mut out = IntegratedCorrelators {
        a,
        b,
        t_grid: t_grid.to_vec(),
        g_ab: Vec::new(),
        g_ba: Vec::new(),
        symmetric: Vec::new(),
        v_a: Vec::new(),
        v_b: Vec::new(),
        pop_a: Vec::new(),
        pop_b: Vec::new(),
        moments: Vec::new(),
    };
    for y in &states {
        let g1 = st.slice(y, gab)[0].re;
        let g2 = st.slice(y, gba)[0].re;
        let vav = st.slice(y, va).to_vec();
        let vbv = st.slice(y, vb).to_vec();
        out.g_ab.push(g1);
        out.g_ba.push(g2);
        out.symmetric.push(g1 + g2);
        out.pop_a.push(vav[0].re);
        out.pop_b.push(vbv[0].re);
        out.v_a.push(vav);
        out.v_b.push(vbv);
        out.moments.push(st.slice(y, c).to_vec());
    }
    Ok(out)
}

/// `int_0^T <a†a> dt` on a `T` grid.
pub fn integrated_population(sys: &MomentSystem, init: &[C64], mode: Mode, t_grid: &[f64]) -> Result<Vec<f64>> {
    validate_t_grid(t_grid)?;
    check_mode(sys, mode)?;
    let i = sys.basis.number_index(mode);
    let mut st = StackBuilder::new(sys);
    let c = st.moment_block(1.0);
    let acc = st.scalar(st.magnitude(c, i));
    st.read(acc, c, i, 1.0);
    let lin = st.build();
    Ok(solve_on_grid(&lin, &st.initial(c, init), t_grid)?.iter().map(|y| st.slice(y, acc)[0].re).collect())
}

/// Same-mode integrated correlators `G^(k)[0,T]`, `k = 1..=n_max`.
#[derive(Clone, Debug)]
pub struct HigherCorrelators {
    pub mode: Mode,
    pub t_grid: Vec<f64>,
    /// `g[k - 1][j] = G^(k)[0, T_j]`.
    pub g: Vec<Vec<f64>>,
}

impl HigherCorrelators {
    pub fn order(&self, k: usize) -> &[f64] {
        &self.g[k - 1]
    }

    pub fn n_max(&self) -> usize {
        self.g.len()
    }
}

/// Largest supported chain order for a model with `n_modes` modes.
pub fn max_chain_order(n_modes: usize) -> usize {
    if n_modes == 1 {
        4
    } else {
        2
    }
}

pub fn integrated_gn(model: &JointModel, mode: Mode, n_max: usize, t_grid: &[f64]) -> Result<HigherCorrelators> {
    let sys = MomentSystem::new(model);
    integrated_gn_in(&sys, &sys.initial_moments(model), mode, n_max, t_grid)
}

pub fn integrated_gn_in(
    sys: &MomentSystem,
    init: &[C64],
    mode: Mode,
    n_max: usize,
    t_grid: &[f64],
) -> Result<HigherCorrelators> {
    validate_t_grid(t_grid)?;
    check_mode(sys, mode)?;
    let limit = max_chain_order(sys.basis.n_modes());
    if n_max == 0 || n_max > limit {
        return Err(Error::InvalidArgument(format!("n_max must be in 1..={limit} for this model, got {n_max}")));
    }
    let ia = sys.basis.number_index(mode);
    let ms = sys.mode_scale(mode);
    let cmap = &sys.sandwich(mode).0;
    let mut st = StackBuilder::new(sys);
    let c = st.moment_block(1.0);
    let mut chain = vec![c];
    for k in 1..n_max {
        let v = st.moment_block(ms.powi(k as i32));
        st.couple(v, chain[k - 1], cmap, k as f64);
        chain.push(v);
    }
    let top = chain[n_max - 1];
    let gn = st.scalar(st.magnitude(top, ia));
    st.read(gn, top, ia, n_max as f64);
    let lin = st.build();
    let states = solve_on_grid(&lin, &st.initial(c, init), t_grid)?;
    let mut g = vec![Vec::with_capacity(t_grid.len()); n_max];
    for y in &states {
        for k in 1..n_max {
            g[k - 1].push(st.slice(y, chain[k])[0].re);
        }
        g[n_max - 1].push(st.slice(y, gn)[0].re);
    }
    Ok(HigherCorrelators { mode, t_grid: t_grid.to_vec(), g })
}

use std::collections::BTreeMap;

use crate::correlators::{HigherCorrelators, TwoBinCorrelators};
use crate::{Error, JointModel, Mode, Result};

/// Time bin of an intensity operator `Ω_{mode,bin} = ξ γ ∫_bin a†a dt`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bin {
    Early,
    Late,
    Total,
}

/// One factor of a normally ordered moment: `(mode slot, bin)`.
pub type Factor = (usize, Bin);

/// Normally ordered moments of the bin intensities of one or two modes.
///
/// Keys are sorted lists of factors, so `<:Ω_{aE} Ω_{bL}:>` is
/// `[(0, Early), (1, Late)]`. Slot `i` refers to `modes[i]`.
#[derive(Clone, Debug)]
pub struct IntensityMoments {
    pub t_split: f64,
    pub modes: Vec<Mode>,
    /// Detection rate `γ_i` per slot.
    pub rates: Vec<f64>,
    /// Detector efficiency `ξ_i` per slot.
    pub efficiency: Vec<f64>,
    entries: BTreeMap<Vec<Factor>, f64>,
}

/// Rate at which the field of `mode` turns into detections: `γ_σ` for the
/// emitter and `γ_σ (Γ / 2ε)²` for a sensor.
pub fn detection_rate(model: &JointModel, mode: Mode) -> f64 {
    match mode {
        Mode::Emitter => model.tls.gamma,
        Mode::Sensor(j) => {
            let r = model.sensors.sensors[j].linewidth / (2.0 * model.sensors.coupling);
            model.tls.gamma * r * r
        }
    }
}

impl IntensityMoments {
    fn empty(t_split: f64, modes: Vec<Mode>, rates: Vec<f64>, efficiency: Vec<f64>) -> Self {
        Self { t_split, modes, rates, efficiency, entries: BTreeMap::new() }
    }

    fn weight(&self, key: &[Factor]) -> f64 {
        key.iter().map(|(s, _)| self.rates[*s] * self.efficiency[*s]).product()
    }

    /// Stores a moment given as the bare correlator value; rates are applied here.
    fn put(&mut self, mut key: Vec<Factor>, correlator: f64) {
        key.sort();
        let v = correlator * self.weight(&key);
        self.entries.insert(key, v);
    }

    pub fn get(&self, factors: &[Factor]) -> Result<f64> {
        let mut key = factors.to_vec();
        key.sort();
        self.entries.get(&key).copied().ok_or_else(|| Error::MissingInput(format!("moment {key:?} was not computed")))
    }

    /// `<:Ω_{slot,Total}^k:>`.
    pub fn total_power(&self, slot: usize, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        self.get(&vec![(slot, Bin::Total); k])
    }

    /// Highest `k` with `<:Ω_{slot,Total}^k:>` available.
    pub fn max_total_order(&self, slot: usize) -> usize {
        (1..).take_while(|&k| self.entries.contains_key(&vec![(slot, Bin::Total); k])).last().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[Factor], f64)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn min_value(&self) -> f64 {
        self.entries.values().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Early/late moments of one mode up to second order, plus `<:Ω^k:>` for all
/// orders in `higher` (whose last grid point must be `T = ∞`).
pub fn intensity_moments_one_mode(
    bins: &TwoBinCorrelators,
    higher: Option<&HigherCorrelators>,
    rate: f64,
    efficiency: f64,
) -> Result<IntensityMoments> {
    if bins.a != bins.b {
        return Err(Error::InvalidArgument("one-mode moments need same-mode bin correlators".into()));
    }
    let mut m = one_mode_from_bins(bins, bins.el, rate, efficiency);
    if let Some(h) = higher {
        if h.mode != bins.a {
            return Err(Error::InvalidArgument("higher correlators belong to another mode".into()));
        }
        put_totals(&mut m, h)?;
    }
    Ok(m)
}

/// Early/late moments of one filtered mode from the bin correlators of two
/// identical sensors `copies.a != copies.b`.
///
/// A two-level sensor holds at most one excitation, so its own two-time
/// correlation misses photon pairs closer than about `1/Γ`. The cross
/// correlation of two copies is the filtered-field correlation instead.
pub fn intensity_moments_filter(copies: &TwoBinCorrelators, rate: f64, efficiency: f64) -> Result<IntensityMoments> {
    if copies.a == copies.b || !matches!((copies.a, copies.b), (Mode::Sensor(_), Mode::Sensor(_))) {
        return Err(Error::InvalidArgument("filter moments need the cross correlators of two sensors".into()));
    }
    let mut m = one_mode_from_bins(copies, 0.5 * (copies.el + copies.le), rate, efficiency);
    m.modes = vec![copies.a];
    Ok(m)
}

fn one_mode_from_bins(bins: &TwoBinCorrelators, el: f64, rate: f64, efficiency: f64) -> IntensityMoments {
    let mut m = IntensityMoments::empty(bins.t_split, vec![bins.a], vec![rate], vec![efficiency]);
    let (e, l, t) = ((0, Bin::Early), (0, Bin::Late), (0, Bin::Total));
    m.put(vec![e], bins.early_a);
    m.put(vec![l], bins.late_a());
    m.put(vec![t], bins.total_a);
    m.put(vec![e, e], bins.ee);
    m.put(vec![e, l], el);
    m.put(vec![l, l], bins.ll);
    m.put(vec![t, t], bins.total);
    m
}

/// `<:Ω^k:>` of one mode for all orders in `higher`, without bins.
pub fn intensity_moments_totals(higher: &HigherCorrelators, rate: f64, efficiency: f64) -> Result<IntensityMoments> {
    let mut m = IntensityMoments::empty(f64::INFINITY, vec![higher.mode], vec![rate], vec![efficiency]);
    put_totals(&mut m, higher)?;
    Ok(m)
}

fn put_totals(m: &mut IntensityMoments, h: &HigherCorrelators) -> Result<()> {
    if !h.t_grid.last().is_some_and(|x| x.is_infinite()) {
        return Err(Error::MissingInput("higher correlators must include T = infinity".into()));
    }
    for k in 1..=h.n_max() {
        m.put(vec![(0, Bin::Total); k], *h.order(k).last().expect("nonempty grid"));
    }
    Ok(())
}

/// All first and second moments over `{a, b} x {E, L}` from the same-mode
/// bins of `a` and `b` and the cross bins of `(a, b)`.
pub fn intensity_moments_two_mode(
    aa: &TwoBinCorrelators,
    bb: &TwoBinCorrelators,
    ab: &TwoBinCorrelators,
    rates: [f64; 2],
    efficiency: [f64; 2],
) -> Result<IntensityMoments> {
    let consistent = aa.a == aa.b
        && bb.a == bb.b
        && ab.a == aa.a
        && ab.b == bb.a
        && aa.t_split == ab.t_split
        && bb.t_split == ab.t_split;
    if !consistent {
        return Err(Error::InvalidArgument("bin correlators do not describe one mode pair at one bin edge".into()));
    }
    let mut m = IntensityMoments::empty(ab.t_split, vec![ab.a, ab.b], rates.to_vec(), efficiency.to_vec());
    for (slot, s) in [(0, aa), (1, bb)] {
        let (e, l, t) = ((slot, Bin::Early), (slot, Bin::Late), (slot, Bin::Total));
        m.put(vec![e], s.early_a);
        m.put(vec![l], s.late_a());
        m.put(vec![t], s.total_a);
        m.put(vec![e, e], s.ee);
        m.put(vec![e, l], s.el);
        m.put(vec![l, l], s.ll);
        m.put(vec![t, t], s.total);
    }
    m.put(vec![(0, Bin::Early), (1, Bin::Early)], ab.ee);
    m.put(vec![(0, Bin::Early), (1, Bin::Late)], ab.el);
    m.put(vec![(0, Bin::Late), (1, Bin::Early)], ab.le);
    m.put(vec![(0, Bin::Late), (1, Bin::Late)], ab.ll);
    m.put(vec![(0, Bin::Total), (1, Bin::Total)], ab.total);
    Ok(m)
}

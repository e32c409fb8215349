use std::collections::BTreeMap;

use super::moments::{detection_rate, Bin, Factor, IntensityMoments};
use crate::correlators::integrated_population;
use crate::engine::MomentSystem;
use crate::{Error, JointModel, Mode, Result};

/// Clamping residuals above this are reported as warnings.
pub const CLAMP_WARNING: f64 = 1e-4;

/// Last Mandel term above this means the truncation has not converged.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-3;

/// Photon-number probabilities of one mode, either totals only or per `(early, late)` counts.
#[derive(Clone, Debug, Default)]
pub struct BinProbabilities {
    /// Truncation order.
    pub order: usize,
    /// `P_n`, `n = 0..=order`.
    pub p_n: Vec<f64>,
    /// `P_mn` for `m` early and `n` late photons; empty for totals-only results.
    pub p_mn: BTreeMap<(usize, usize), f64>,
    /// Sum of the magnitudes of the negative values set to zero.
    pub clamp_residual: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl BinProbabilities {
    pub fn p(&self, n: usize) -> f64 {
        self.p_n.get(n).copied().unwrap_or(0.0)
    }

    pub fn pmn(&self, m: usize, n: usize) -> f64 {
        self.p_mn.get(&(m, n)).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.p_n.iter().sum()
    }
}

/// Two-mode outcomes `(m_a, n_a, m_b, n_b)` in the two-photon approximation.
#[derive(Clone, Debug, Default)]
pub struct TwoModeProbabilities {
    pub entries: BTreeMap<[usize; 4], f64>,
    pub clamp_residual: f64,
    pub warnings: Vec<String>,
}

impl TwoModeProbabilities {
    pub fn get(&self, key: [usize; 4]) -> f64 {
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Probabilities of `m` early and `n` late detections summed over both modes.
    pub fn collapsed(&self) -> BTreeMap<(usize, usize), f64> {
        let mut out = BTreeMap::new();
        for (k, v) in &self.entries {
            *out.entry((k[0] + k[2], k[1] + k[3])).or_insert(0.0) += v;
        }
        out
    }
}

/// Sets negatives to zero; returns the removed magnitude.
fn clamp(values: &mut [f64]) -> f64 {
    let mut residual = 0.0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            residual += -*v;
            *v = 0.0;
        }
    }
    residual
}

fn clamp_warning(residual: f64) -> Option<String> {
    (residual > CLAMP_WARNING)
        .then(|| format!("negative probabilities of total size {residual:e} were clamped to zero"))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Mandel's formula truncated at `order`:
/// `P_n = (1/n!) sum_{k=0}^{order-n} (-1)^k/k! <:Ω^{n+k}:>`, with `P_0` by closure.
pub fn pn_from_moments(m: &IntensityMoments, slot: usize, order: usize) -> Result<BinProbabilities> {
    if order == 0 {
        return Err(Error::InvalidArgument("truncation order must be >= 1".into()));
    }
    if m.max_total_order(slot) < order {
        return Err(Error::MissingInput(format!(
            "moments up to order {order} needed, only {} available",
            m.max_total_order(slot)
        )));
    }
    let mut p = vec![0.0; order + 1];
    for n in 1..=order {
        let mut acc = 0.0;
        for k in 0..=order - n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign / factorial(k) * m.total_power(slot, n + k)?;
        }
        p[n] = acc / factorial(n);
    }
    let mut residual = clamp(&mut p[1..]);
    p[0] = 1.0 - p[1..].iter().sum::<f64>();
    residual += clamp(&mut p[..1]);
    let converged = p[order] <= CONVERGENCE_THRESHOLD;
    let mut warnings: Vec<String> = clamp_warning(residual).into_iter().collect();
    if !converged {
        warnings.push(format!("P_{order} = {:e} exceeds {CONVERGENCE_THRESHOLD}; truncation not converged", p[order]));
    }
    Ok(BinProbabilities { order, p_n: p, p_mn: BTreeMap::new(), clamp_residual: residual, converged, warnings })
}

/// Second-order Mandel terms over the intensities `xs`: counts per factor and probability.
/// Two photons in `X`: `½<:X²:>`; one each in `X != Y`: `<:XY:>`;
/// one in `X` only: `<X> - <:X²:> - sum_{Y != X} <:XY:>`.
fn two_photon_terms(m: &IntensityMoments, xs: &[Factor]) -> Result<Vec<(Vec<usize>, f64)>> {
    let n = xs.len();
    let mut out = Vec::new();
    for i in 0..n {
        let mut counts = vec![0; n];
        counts[i] = 1;
        let mut v = m.get(&[xs[i]])? - m.get(&[xs[i], xs[i]])?;
        for j in (0..n).filter(|&j| j != i) {
            v -= m.get(&[xs[i], xs[j]])?;
        }
        out.push((counts, v));
    }
    for i in 0..n {
        for j in i..n {
            let mut counts = vec![0; n];
            counts[i] += 1;
            counts[j] += 1;
            let v = m.get(&[xs[i], xs[j]])?;
            out.push((counts, if i == j { 0.5 * v } else { v }));
        }
    }
    Ok(out)
}

/// `(m, n)` early/late probabilities of one mode in the two-photon approximation.
pub fn pmn_one_mode_2pa(m: &IntensityMoments, slot: usize) -> Result<BinProbabilities> {
    let terms = two_photon_terms(m, &[(slot, Bin::Early), (slot, Bin::Late)])?;
    let mut values: Vec<f64> = terms.iter().map(|(_, v)| *v).collect();
    let mut residual = clamp(&mut values);
    let mut p00 = 1.0 - values.iter().sum::<f64>();
    if p00 < 0.0 {
        residual += -p00;
        p00 = 0.0;
    }
    let mut p_mn = BTreeMap::from([((0, 0), p00)]);
    let mut p_n = vec![p00, 0.0, 0.0];
    for ((c, _), v) in terms.iter().zip(&values) {
        p_mn.insert((c[0], c[1]), *v);
        p_n[c[0] + c[1]] += v;
    }
    Ok(BinProbabilities {
        order: 2,
        p_n,
        p_mn,
        clamp_residual: residual,
        converged: true,
        warnings: clamp_warning(residual).into_iter().collect(),
    })
}

/// Two-mode early/late probabilities in the two-photon approximation.
pub fn two_mode_2pa(m: &IntensityMoments) -> Result<TwoModeProbabilities> {
    if m.modes.len() != 2 {
        return Err(Error::InvalidArgument("two-mode probabilities need moments of two modes".into()));
    }
    let flux = m.get(&[(0, Bin::Total)])? + m.get(&[(1, Bin::Total)])?;
    if !(flux > 0.0) {
        return Err(Error::Degenerate("no detections in either mode".into()));
    }
    let xs = [(0, Bin::Early), (0, Bin::Late), (1, Bin::Early), (1, Bin::Late)];
    let terms = two_photon_terms(m, &xs)?;
    let mut values: Vec<f64> = terms.iter().map(|(_, v)| *v).collect();
    let mut residual = clamp(&mut values);
    let mut p0 = 1.0 - values.iter().sum::<f64>();
    if p0 < 0.0 {
        residual += -p0;
        p0 = 0.0;
    }
    let mut entries = BTreeMap::from([([0; 4], p0)]);
    for ((c, _), v) in terms.iter().zip(&values) {
        entries.insert([c[0], c[1], c[2], c[3]], *v);
    }
    Ok(TwoModeProbabilities {
        entries,
        clamp_residual: residual,
        warnings: clamp_warning(residual).into_iter().collect(),
    })
}

/// `π_mn = P_mn / sum_{m+n>0} P_mn`.
#[derive(Clone, Debug, Default)]
pub struct Purities {
    pub pi: BTreeMap<(usize, usize), f64>,
}

impl Purities {
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.pi.get(&(m, n)).copied().unwrap_or(0.0)
    }
}

pub fn purities(p_mn: &BTreeMap<(usize, usize), f64>) -> Result<Purities> {
    let norm: f64 = p_mn.iter().filter(|(k, _)| k.0 + k.1 > 0).map(|(_, v)| v).sum();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("all probability is in the vacuum outcome".into()));
    }
    Ok(Purities { pi: p_mn.iter().filter(|(k, _)| k.0 + k.1 > 0).map(|(k, v)| (*k, v / norm)).collect() })
}

/// Detections behind sensor `sensor` relative to the bare emission, both
/// weighted with their detection rates.
pub fn filtered_flux_fraction(model: &JointModel, sensor: usize) -> Result<f64> {
    if sensor >= model.sensors.count() {
        return Err(Error::InvalidArgument(format!("model has no sensor {}", sensor + 1)));
    }
    let total = |m: &JointModel, mode: Mode| -> Result<f64> {
        let sys = MomentSystem::new(m);
        Ok(integrated_population(&sys, &sys.initial_moments(m), mode, &[f64::INFINITY])?[0] * detection_rate(m, mode))
    };
    let bare = model.without_sensors();
    let emitted = total(&bare, Mode::Emitter)?;
    if !(emitted > 0.0) {
        return Err(Error::Degenerate("the emitter does not emit".into()));
    }
    Ok(total(model, Mode::Sensor(sensor))? / emitted)
}

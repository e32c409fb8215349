use std::collections::BTreeMap;

use super::TrajectoryRecord;
use crate::Mode;

/// Empirical probability or mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Binomial estimate from `k` successes out of `n`.
    pub fn binomial(k: u64, n: u64) -> Self {
        if n == 0 {
            return Self { value: 0.0, std_error: 0.0 };
        }
        let p = k as f64 / n as f64;
        Self { value: p, std_error: (p * (1.0 - p) / n as f64).sqrt() }
    }
}

/// Joint counts of early (`t < T`) and late clicks per channel.
///
/// Keys are `[E_0, L_0, E_1, L_1, ...]` in the order of `channels`; clicks in
/// other channels are ignored. Overflowed trajectories are counted separately
/// and left out of the frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct CountingHistogram {
    pub t_split: f64,
    pub channels: Vec<Mode>,
    pub counts: BTreeMap<Vec<u32>, u64>,
    pub trajectories: u64,
    pub overflowed: u64,
}

impl CountingHistogram {
    pub fn new(t_split: f64, channels: Vec<Mode>) -> Self {
        Self { t_split, channels, counts: BTreeMap::new(), trajectories: 0, overflowed: 0 }
    }

    pub fn add(&mut self, r: &TrajectoryRecord) {
        if r.overflow {
            self.overflowed += 1;
            return;
        }
        let mut key = vec![0u32; 2 * self.channels.len()];
        for j in &r.jumps {
            if let Some(c) = self.channels.iter().position(|m| *m == j.channel) {
                key[2 * c + usize::from(j.t >= self.t_split)] += 1;
            }
        }
        *self.counts.entry(key).or_insert(0) += 1;
        self.trajectories += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (k, v) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += v;
        }
        self.trajectories += other.trajectories;
        self.overflowed += other.overflowed;
    }

    /// Probability of the outcomes selected by `pred`.
    pub fn probability(&self, pred: impl Fn(&[u32]) -> bool) -> Estimate {
        let k = self.counts.iter().filter(|(key, _)| pred(key)).map(|(_, v)| v).sum();
        Estimate::binomial(k, self.trajectories)
    }

    pub fn outcome(&self, key: &[u32]) -> Estimate {
        self.probability(|k| k == key)
    }

    /// `m` early and `n` late clicks summed over all channels.
    pub fn pmn(&self, m: usize, n: usize) -> Estimate {
        let (m, n) = (m as u32, n as u32);
        self.probability(|k| k.iter().step_by(2).sum::<u32>() == m && k.iter().skip(1).step_by(2).sum::<u32>() == n)
    }

    /// `n` clicks in total.
    pub fn pn(&self, n: usize) -> Estimate {
        self.probability(|k| k.iter().sum::<u32>() as usize == n)
    }

    /// Mean number of clicks in channel slot `c`.
    pub fn mean_count(&self, c: usize) -> Estimate {
        let n = self.trajectories as f64;
        if n == 0.0 {
            return Estimate { value: 0.0, std_error: 0.0 };
        }
        let (mut s1, mut s2) = (0.0, 0.0);
        for (k, v) in &self.counts {
            let x = f64::from(k[2 * c] + k[2 * c + 1]);
            s1 += x * *v as f64;
            s2 += x * x * *v as f64;
        }
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0);
        Estimate { value: mean, std_error: (var / n).sqrt() }
    }
}

pub fn estimate_probabilities(records: &[TrajectoryRecord], t_split: f64, channels: &[Mode]) -> CountingHistogram {
    let mut h = CountingHistogram::new(t_split, channels.to_vec());
    for r in records {
        h.add(r);
    }
    h
}

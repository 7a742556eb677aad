//! Automatic minibatch sizing for the three stochastic gradient components.
//!
//! Each component keeps a decayed average of its single-sample variance and a
//! running mean of its single-sample cost. Sizes are chosen proportional to
//! `sqrt(η v̄ / c̄)`, scaled so that the objective minibatch has size 2.

use crate::error::{Error, Result};

/// Decay used for the variance averages.
pub const DEFAULT_DECAY: f64 = 0.999;
/// Iterations that run with fixed sizes while the estimates seed.
pub const WARMUP_ITERATIONS: usize = 10;
/// Smallest cost accepted for a single sample.
pub const MIN_COST: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinibatchSizes {
    pub k_f: usize,
    pub k_g: usize,
    pub k_p: usize,
}

/// Geometrically weighted average: `v̄ ∝ v + ν v̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct DecayedMean {
    numerator: f64,
    weight: f64,
}

impl DecayedMean {
    const fn new() -> Self {
        Self {
            numerator: 0.0,
            weight: 0.0,
        }
    }

    fn push(&mut self, x: f64, decay: f64) {
        self.numerator = x + decay * self.numerator;
        self.weight = 1.0 + decay * self.weight;
    }

    fn get(&self) -> f64 {
        if self.weight > 0.0 {
            self.numerator / self.weight
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    decay: f64,
    v_f: DecayedMean,
    v_g: DecayedMean,
    v_p: DecayedMean,
    c_f: DecayedMean,
    c_g: DecayedMean,
    c_p: DecayedMean,
    samples_seen: [u64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimates {
    pub v_f: f64,
    pub v_g: f64,
    pub v_p: f64,
    pub c_f: f64,
    pub c_g: f64,
    pub c_p: f64,
}

impl Default for EstimatorState {
    fn default() -> Self {
        Self::new(DEFAULT_DECAY).expect("default decay is valid")
    }
}

/// Trace of the sample covariance, `Σ_j ‖x_j - x̄‖² / (k - 1)`.
pub fn trace_variance(samples: &[Vec<f64>]) -> Result<f64> {
    let k = samples.len();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "variance needs at least two samples".into(),
        ));
    }
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    let ss: f64 = samples
        .iter()
        .map(|s| {
            s.iter()
                .zip(&mean)
                .map(|(x, m)| (x - m) * (x - m))
                .sum::<f64>()
        })
        .sum();
    Ok(ss / (k - 1) as f64)
}

impl EstimatorState {
    pub fn new(decay: f64) -> Result<Self> {
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::InvalidArgument("decay must lie in (0, 1]".into()));
        }
        Ok(Self {
            decay,
            v_f: DecayedMean::new(),
            v_g: DecayedMean::new(),
            v_p: DecayedMean::new(),
            c_f: DecayedMean::new(),
            c_g: DecayedMean::new(),
            c_p: DecayedMean::new(),
            samples_seen: [0; 3],
        })
    }

    /// Folds in a minibatch of objective subgradients that took `cost` units in total.
    pub fn observe_f(&mut self, samples: &[Vec<f64>], cost: f64) -> Result<()> {
        let v = trace_variance(samples)?;
        self.v_f.push(v, self.decay);
        self.c_f.push(per_sample(cost, samples.len()), 1.0);
        self.samples_seen[0] += samples.len() as u64;
        Ok(())
    }

    /// Folds in a minibatch of (γ-scaled) constraint subgradients.
    pub fn observe_g(&mut self, samples: &[Vec<f64>], cost: f64) -> Result<()> {
        let v = trace_variance(samples)?;
        self.v_g.push(v, self.decay);
        self.c_g.push(per_sample(cost, samples.len()), 1.0);
        self.samples_seen[1] += samples.len() as u64;
        Ok(())
    }

    /// Folds in `γ² m² (1/k_p) Σ_{i∈S} (μ_i - max(0, g_i(w)))²` for the
    /// differences observed on the sampled subset.
    pub fn observe_p(&mut self, diffs: &[f64], gamma: f64, m: usize, cost: f64) -> Result<()> {
        let k_p = diffs.len();
        if k_p == 0 {
            return Err(Error::InvalidArgument("observe_p needs k_p >= 1".into()));
        }
        let mean_sq = diffs.iter().map(|x| x * x).sum::<f64>() / k_p as f64;
        let m = m as f64;
        self.v_p.push(gamma * gamma * m * m * mean_sq, self.decay);
        self.c_p.push(per_sample(cost, k_p), 1.0);
        self.samples_seen[2] += k_p as u64;
        Ok(())
    }

    pub fn estimates(&self) -> Estimates {
        Estimates {
            v_f: self.v_f.get(),
            v_g: self.v_g.get(),
            v_p: self.v_p.get(),
            c_f: self.c_f.get(),
            c_g: self.c_g.get(),
            c_p: self.c_p.get(),
        }
    }

    pub fn samples_seen(&self) -> [u64; 3] {
        self.samples_seen
    }
}

fn per_sample(cost: f64, k: usize) -> f64 {
    (cost / k as f64).max(MIN_COST)
}

/// Minibatch sizes that minimize `Σ η v̄ / k` for the budget at which `k_f = 2`.
///
/// `k_g >= 2`, `1 <= k_p <= m`, and `k_g <= max(2, m)`.
pub fn allocate(est: &Estimates, eta_w: f64, eta_p: f64, m: usize) -> Result<MinibatchSizes> {
    for (name, c) in [("c_f", est.c_f), ("c_g", est.c_g), ("c_p", est.c_p)] {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cost {name} must be positive, got {c}"
            )));
        }
    }
    let variances = [est.v_f, est.v_g, est.v_p];
    if variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument(
            "variance estimates must be finite".into(),
        ));
    }
    let raw_f = (eta_w * est.v_f / est.c_f).sqrt();
    let raw_g = (eta_w * est.v_g / est.c_g).sqrt();
    let raw_p = (eta_p * est.v_p / est.c_p).sqrt();
    let cap_g = m.max(2);
    let size = |raw: f64, lo: usize, hi: usize| -> usize {
        if raw == 0.0 {
            lo
        } else if raw_f == 0.0 {
            hi
        } else {
            let scaled = (2.0 * raw / raw_f).round();
            if scaled >= hi as f64 {
                hi
            } else {
                (scaled as usize).max(lo)
            }
        }
    };
    Ok(MinibatchSizes {
        k_f: 2,
        k_g: size(raw_g, 2, cap_g),
        k_p: size(raw_p, 1, m.max(1)),
    })
}

/// Sizes used before the estimators have seen any data.
pub fn warmup_sizes(m: usize) -> MinibatchSizes {
    MinibatchSizes {
        k_f: 2,
        k_g: 2,
        k_p: m.clamp(1, 8),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(v: [f64; 3], c: [f64; 3]) -> Estimates {
        Estimates {
            v_f: v[0],
            v_g: v[1],
            v_p: v[2],
            c_f: c[0],
            c_g: c[1],
            c_p: c[2],
        }
    }

    #[test]
    fn variance_examples() {
        assert_eq!(
            trace_variance(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap(),
            0.0
        );
        assert_eq!(
            trace_variance(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap(),
            2.0
        );
        assert!(trace_variance(&[vec![0.0]]).is_err());
    }

    #[test]
    fn observe_p_formula() {
        let mut e = EstimatorState::new(1.0).unwrap();
        e.observe_p(&[1.0, 0.0], 1.0, 4, 2.0).unwrap();
        assert_eq!(e.estimates().v_p, 8.0);
        let mut e2 = EstimatorState::new(1.0).unwrap();
        e2.observe_p(&[1.0, 0.0], 2.0, 4, 2.0).unwrap();
        assert_eq!(e2.estimates().v_p, 32.0);
        let mut e3 = EstimatorState::new(1.0).unwrap();
        e3.observe_p(&[0.0, 0.0, 0.0], 3.0, 9, 2.0).unwrap();
        assert_eq!(e3.estimates().v_p, 0.0);
        assert!(e3.observe_p(&[], 1.0, 4, 1.0).is_err());
    }

    #[test]
    fn no_decay_is_cumulative_average() {
        let mut e = EstimatorState::new(1.0).unwrap();
        e.observe_f(&[vec![0.0], vec![2.0]], 10.0).unwrap();
        e.observe_f(&[vec![0.0], vec![4.0]], 30.0).unwrap();
        let s = e.estimates();
        assert_eq!(s.v_f, (2.0 + 8.0) / 2.0);
        assert_eq!(s.c_f, (5.0 + 15.0) / 2.0);
    }

    #[test]
    fn decay_weights_recent_samples() {
        let mut e = EstimatorState::new(0.5).unwrap();
        e.observe_f(&[vec![0.0], vec![2.0]], 1.0).unwrap();
        e.observe_f(&[vec![0.0], vec![4.0]], 1.0).unwrap();
        assert!((e.estimates().v_f - (8.0 + 0.5 * 2.0) / 1.5).abs() < 1e-15);
    }

    #[test]
    fn allocation_worked_example() {
        let e = est([4.0, 16.0, 10_000.0], [1.0, 1.0, 0.5]);
        let k = allocate(&e, 0.1, 0.01, 100).unwrap();
        assert_eq!(
            k,
            MinibatchSizes {
                k_f: 2,
                k_g: 4,
                k_p: 45
            }
        );
    }

    #[test]
    fn allocation_symmetric_and_floors() {
        let e = est([3.0, 3.0, 3.0], [2.0, 2.0, 2.0]);
        assert_eq!(
            allocate(&e, 1.0, 1.0, 10).unwrap(),
            MinibatchSizes {
                k_f: 2,
                k_g: 2,
                k_p: 2
            }
        );
        let e = est([3.0, 3.0, 0.0], [2.0, 2.0, 2.0]);
        assert_eq!(allocate(&e, 1.0, 1.0, 10).unwrap().k_p, 1);
        let e = est([1.0, 1e6, 1e6], [1.0, 1.0, 1.0]);
        assert_eq!(
            allocate(&e, 1.0, 1.0, 10).unwrap(),
            MinibatchSizes {
                k_f: 2,
                k_g: 10,
                k_p: 10
            }
        );
    }

    #[test]
    fn allocation_rejects_bad_costs() {
        let e = est([1.0, 1.0, 1.0], [0.0, 1.0, 1.0]);
        assert!(allocate(&e, 1.0, 1.0, 4).is_err());
        let e = est([1.0, 1.0, 1.0], [1.0, f64::NAN, 1.0]);
        assert!(allocate(&e, 1.0, 1.0, 4).is_err());
    }
}

//! The learned distribution over constraint indices.
//!
//! `p` is updated multiplicatively from a variance-reduced supergradient
//! `γμ + (γm/k) Σ_{j∈S} e_j (max(0, g_j(w)) - μ_j)`, where `μ` remembers the
//! last observed positive part of each constraint.

use rand::{Rng, RngCore};

use crate::constraints::{CheckCounter, ConstraintFamily};
use crate::error::{Error, Result};

/// `p` never drops below `P_FLOOR_NUMERATOR / m`.
pub const P_FLOOR_NUMERATOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingState {
    p: Vec<f64>,
    mu: Vec<f64>,
    last_update: Vec<u64>,
    max_staleness_seen: u64,
    p_floor: f64,
}

impl SamplingState {
    /// Uniform `p` with `μ_j = max(0, g_j(w))`, charging `m` checks.
    pub fn new<F: ConstraintFamily + ?Sized>(
        cs: &F,
        w: &[f64],
        counter: &mut CheckCounter,
    ) -> Self {
        let mu = (0..cs.count())
            .map(|j| cs.check(j, w, counter).0.max(0.0))
            .collect();
        Self::with_memory(mu)
    }

    /// Uniform `p` with the given remembered values.
    pub fn with_memory(mu: Vec<f64>) -> Self {
        let m = mu.len();
        assert!(m > 0, "sampling state needs at least one constraint");
        Self {
            p: vec![1.0 / m as f64; m],
            mu: mu.into_iter().map(|x| x.max(0.0)).collect(),
            last_update: vec![0; m],
            max_staleness_seen: 0,
            p_floor: P_FLOOR_NUMERATOR / m as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn memory(&self) -> &[f64] {
        &self.mu
    }

    pub fn p_floor(&self) -> f64 {
        self.p_floor
    }

    pub fn last_update(&self) -> &[u64] {
        &self.last_update
    }

    /// Largest `t - s_j` observed when refreshing `μ_j`.
    pub fn max_staleness_seen(&self) -> u64 {
        self.max_staleness_seen
    }

    /// Largest `t - s_j` over all indices at iteration `t`.
    pub fn current_max_staleness(&self, t: u64) -> u64 {
        self.last_update
            .iter()
            .map(|&s| t.saturating_sub(s))
            .max()
            .unwrap_or(0)
    }

    pub fn entropy(&self) -> f64 {
        -self
            .p
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|x| x * x.ln())
            .sum::<f64>()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, x) in self.p.iter().enumerate() {
            if *x > self.p[best] {
                best = i;
            }
        }
        best
    }
}

/// Draws `i` with probability `p_i` by inverse CDF. A single-constraint
/// state draws nothing from `rng`.
pub fn sample_constraint(state: &SamplingState, rng: &mut dyn RngCore) -> usize {
    if state.p.len() == 1 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, x) in state.p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the final partial sum
    state.p.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

/// Uniform `k`-subset of `0..m` by partial Fisher-Yates. `k == m` returns
/// `0..m` without touching `rng`.
pub fn sample_without_replacement(m: usize, k: usize, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "subset size {k} must be in 1..={m}"
        )));
    }
    let mut pool: Vec<usize> = (0..m).collect();
    if k == m {
        return Ok(pool);
    }
    for i in 0..k {
        let j = rng.random_range(i..m);
        pool.swap(i, j);
    }
    pool.truncate(k);
    Ok(pool)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correction {
    pub index: usize,
    /// `μ_j` before the refresh.
    pub previous: f64,
    /// `(γm/k)(max(0, g_j(w)) - μ_j)`.
    pub value: f64,
}

/// Dense-plus-sparse supergradient w.r.t. `p`. The dense part is `γμ` with
/// the memory as it was before the refresh of the sampled indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SupergradientDescriptor {
    pub gamma: f64,
    pub corrections: Vec<Correction>,
}

impl SupergradientDescriptor {
    /// Materializes the full vector, given the state after the refresh.
    pub fn to_dense(&self, state: &SamplingState) -> Vec<f64> {
        let mut out: Vec<f64> = state.mu.iter().map(|m| self.gamma * m).collect();
        for c in &self.corrections {
            out[c.index] = self.gamma * c.previous + c.value;
        }
        out
    }
}

/// Builds the centered supergradient on `subset` at iteration `t`, then
/// refreshes `μ_j` and `s_j` for `j ∈ subset`. Charges one check per member.
pub fn centered_supergradient<F: ConstraintFamily + ?Sized>(
    state: &mut SamplingState,
    cs: &F,
    w: &[f64],
    subset: &[usize],
    gamma: f64,
    t: u64,
    counter: &mut CheckCounter,
) -> SupergradientDescriptor {
    let m = state.len() as f64;
    let scale = gamma * m / subset.len() as f64;
    let mut corrections = Vec::with_capacity(subset.len());
    for &j in subset {
        let positive = cs.check(j, w, counter).0.max(0.0);
        let previous = state.mu[j];
        corrections.push(Correction {
            index: j,
            previous,
            value: scale * (positive - previous),
        });
        state.mu[j] = positive;
        let staleness = t.saturating_sub(state.last_update[j]);
        state.max_staleness_seen = state.max_staleness_seen.max(staleness);
        state.last_update[j] = t;
    }
    SupergradientDescriptor { gamma, corrections }
}

/// `p ← normalize(p ⊙ exp(η ĝ_p))`, computed in log space, then floored.
pub fn multiplicative_update(
    state: &mut SamplingState,
    descriptor: &SupergradientDescriptor,
    eta_p: f64,
) -> Result<()> {
    if !(eta_p > 0.0) {
        return Err(Error::InvalidArgument("eta_p must be positive".into()));
    }
    let mut logits: Vec<f64> = state
        .p
        .iter()
        .zip(&state.mu)
        .map(|(p, mu)| p.ln() + eta_p * descriptor.gamma * mu)
        .collect();
    for c in &descriptor.corrections {
        let entry = descriptor.gamma * c.previous + c.value;
        if !entry.is_finite() {
            return Err(Error::NonFiniteDescriptor { index: c.index });
        }
        logits[c.index] = state.p[c.index].ln() + eta_p * entry;
    }
    if let Some(i) = logits.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteDescriptor { index: i });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        total += *l;
    }
    for (p, e) in state.p.iter_mut().zip(&logits) {
        *p = e / total;
    }
    apply_floor(&mut state.p, state.p_floor);
    Ok(())
}

/// Raises entries to `floor`, taking the mass from the others.
fn apply_floor(p: &mut [f64], floor: f64) {
    let mut pinned = vec![false; p.len()];
    loop {
        let mut changed = false;
        for (x, pin) in p.iter_mut().zip(pinned.iter_mut()) {
            if !*pin && *x <= floor {
                *pin = true;
                changed = true;
            }
        }
        if !changed {
            return;
        }
        let pinned_count = pinned.iter().filter(|&&b| b).count();
        let free_mass = 1.0 - pinned_count as f64 * floor;
        let free_total: f64 = p
            .iter()
            .zip(&pinned)
            .filter(|(_, &b)| !b)
            .map(|(x, _)| x)
            .sum();
        for (x, &pin) in p.iter_mut().zip(&pinned) {
            if pin {
                *x = floor;
            } else {
                *x *= free_mass / free_total;
            }
        }
    }
}

/// High-probability bound `1 + (2m/k) ln(2mT/δ)` on the staleness of `μ`.
pub fn staleness_bound(m: usize, k: usize, iterations: usize, delta: f64) -> Result<f64> {
    if m == 0 || k == 0 || iterations == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(
            "staleness bound needs positive sizes, delta in (0,1)".into(),
        ));
    }
    let (m, k, t) = (m as f64, k as f64, iterations as f64);
    Ok(1.0 + (2.0 * m / k) * (2.0 * m * t / delta).ln())
}

/// Runs the refresh process for `iterations` steps with `k`-subsets and
/// returns `max_{t,j} (t - s_j^{(t)})`, where every `s_j` starts at 0.
pub fn simulate_max_staleness(
    m: usize,
    k: usize,
    iterations: usize,
    rng: &mut dyn RngCore,
) -> Result<u64> {
    let mut last = vec![0u64; m];
    let mut worst = 0u64;
    for t in 1..=iterations as u64 {
        for j in sample_without_replacement(m, k, rng)? {
            worst = worst.max(t - last[j]);
            last[j] = t;
        }
    }
    let end = iterations as u64;
    for s in last {
        worst = worst.max(end - s);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::ConstraintSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state_with_p(p: Vec<f64>) -> SamplingState {
        let mut s = SamplingState::with_memory(vec![0.0; p.len()]);
        s.p = p;
        s
    }

    #[test]
    fn single_constraint_always_zero() {
        let s = SamplingState::with_memory(vec![0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| sample_constraint(&s, &mut rng) == 0));
    }

    #[test]
    fn uniform_frequencies_within_five_sigma() {
        let m = 8;
        let s = SamplingState::with_memory(vec![0.0; m]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut counts = vec![0usize; m];
        for _ in 0..n {
            counts[sample_constraint(&s, &mut rng)] += 1;
        }
        let p = 1.0 / m as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn degenerate_distribution() {
        let m = 5;
        let floor = P_FLOOR_NUMERATOR / m as f64;
        let mut p = vec![floor; m];
        p[3] = 1.0 - 4.0 * floor;
        let s = state_with_p(p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..10_000).all(|_| sample_constraint(&s, &mut rng) == 3));
    }

    #[test]
    fn subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut full = sample_without_replacement(6, 6, &mut rng).unwrap();
        full.sort();
        assert_eq!(full, (0..6).collect::<Vec<_>>());
        assert_eq!(sample_without_replacement(6, 1, &mut rng).unwrap().len(), 1);
        assert!(sample_without_replacement(3, 4, &mut rng).is_err());
        let n = 60_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            for j in sample_without_replacement(5, 2, &mut rng).unwrap() {
                counts[j] += 1;
            }
        }
        let p = 0.4;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 5.0 * sigma);
        }
    }

    fn four_constraints() -> (ConstraintSet, Vec<f64>) {
        // box faces w_i <= 0 so that max(0, g_i(w)) = max(0, w_i)
        let cs = ConstraintSet::new(
            4,
            (0..4)
                .map(|i| crate::constraints::Constraint::BoxFace {
                    i,
                    sign: 1.0,
                    bound: 0.0,
                })
                .collect(),
        )
        .unwrap();
        (cs, vec![0.0, 2.0, 0.0, 2.0])
    }

    #[test]
    fn hand_evaluated_supergradient() {
        let (cs, w) = four_constraints();
        let mut s = SamplingState::with_memory(vec![0.0, 1.0, 0.0, 2.0]);
        let mut counter = CheckCounter::new();
        let desc = centered_supergradient(&mut s, &cs, &w, &[1, 3], 1.0, 1, &mut counter);
        assert_eq!(counter.total(), 2);
        assert_eq!(desc.corrections[0].value, 2.0);
        assert_eq!(desc.corrections[1].value, 0.0);
        assert_eq!(desc.to_dense(&s), vec![0.0, 3.0, 0.0, 2.0]);
        assert_eq!(s.memory(), &[0.0, 2.0, 0.0, 2.0]);
        assert_eq!(s.last_update(), &[0, 1, 0, 1]);
    }

    #[test]
    fn fresh_memory_gives_exact_gradient() {
        let (cs, w) = four_constraints();
        let mut s = SamplingState::with_memory(vec![0.0, 2.0, 0.0, 2.0]);
        let desc =
            centered_supergradient(&mut s, &cs, &w, &[0, 1], 3.0, 1, &mut CheckCounter::new());
        assert!(desc.corrections.iter().all(|c| c.value == 0.0));
        assert_eq!(desc.to_dense(&s), vec![0.0, 6.0, 0.0, 6.0]);
    }

    #[test]
    fn update_examples() {
        let mut s = state_with_p(vec![0.5, 0.5]);
        let d = SupergradientDescriptor {
            gamma: 1.0,
            corrections: vec![Correction {
                index: 0,
                previous: 0.0,
                value: 2f64.ln(),
            }],
        };
        multiplicative_update(&mut s, &d, 1.0).unwrap();
        assert!((s.p[0] - 2.0 / 3.0).abs() < 1e-15 && (s.p[1] - 1.0 / 3.0).abs() < 1e-15);

        let before = vec![0.2, 0.3, 0.5];
        let mut s = state_with_p(before.clone());
        let zero = SupergradientDescriptor {
            gamma: 1.0,
            corrections: vec![],
        };
        multiplicative_update(&mut s, &zero, 0.7).unwrap();
        for (a, b) in s.p.iter().zip(&before) {
            assert!((a - b).abs() < 1e-15);
        }
        // a constant descriptor cancels in the normalization
        let mut s = SamplingState::with_memory(vec![4.0, 4.0, 4.0]);
        s.p = before.clone();
        multiplicative_update(&mut s, &zero, 0.7).unwrap();
        for (a, b) in s.p.iter().zip(&before) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn update_rejects_bad_input() {
        let mut s = state_with_p(vec![0.5, 0.5]);
        let d = SupergradientDescriptor {
            gamma: 1.0,
            corrections: vec![Correction {
                index: 1,
                previous: 0.0,
                value: f64::NAN,
            }],
        };
        assert!(matches!(
            multiplicative_update(&mut s, &d, 1.0),
            Err(Error::NonFiniteDescriptor { index: 1 })
        ));
        let zero = SupergradientDescriptor {
            gamma: 1.0,
            corrections: vec![],
        };
        assert!(multiplicative_update(&mut s, &zero, 0.0).is_err());
    }

    #[test]
    fn huge_entries_stay_finite_and_floored() {
        let mut s = SamplingState::with_memory(vec![0.0; 4]);
        let d = SupergradientDescriptor {
            gamma: 1.0,
            corrections: vec![Correction {
                index: 2,
                previous: 0.0,
                value: 1e4,
            }],
        };
        for _ in 0..5 {
            multiplicative_update(&mut s, &d, 1.0).unwrap();
        }
        assert!(s.p.iter().all(|x| x.is_finite() && *x >= s.p_floor()));
        assert!((s.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(s.argmax(), 2);
    }

    #[test]
    fn staleness_bound_examples() {
        let b = staleness_bound(10, 10, 100, 0.5).unwrap();
        assert!((b - (1.0 + 2.0 * 4000f64.ln())).abs() < 1e-12);
        assert!((b - 17.588).abs() < 1e-3);
        assert!(staleness_bound(10, 5, 100, 0.5).unwrap() > b);
        assert!(staleness_bound(10, 5, 100, 1.0).is_err());
    }

    #[test]
    fn simulated_staleness_with_full_refresh_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(simulate_max_staleness(4, 4, 50, &mut rng).unwrap(), 1);
    }
}

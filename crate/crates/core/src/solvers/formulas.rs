//! Hyperparameter formulas from the convergence analysis.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::problem::ProblemMetadata;

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// `⌈ m (1 + ln m)^{3/4} √(1 + ln(1/δ)) √(1 + ln T) / T^{1/4} ⌉`, not capped.
pub fn recommended_k_uncapped(m: usize, iterations: usize, delta: f64) -> Result<usize> {
    check_delta(delta)?;
    if m == 0 || iterations == 0 {
        return Err(Error::InvalidArgument("m and T must be positive".into()));
    }
    let (mf, t) = (m as f64, iterations as f64);
    let k =
        mf * (1.0 + mf.ln()).powf(0.75) * (1.0 + (1.0 / delta).ln()).sqrt() * (1.0 + t.ln()).sqrt()
            / t.powf(0.25);
    Ok(k.ceil() as usize)
}

/// Minibatch size for the distribution update, capped at `m`.
pub fn recommended_k(m: usize, iterations: usize, delta: f64) -> Result<usize> {
    Ok(recommended_k_uncapped(m, iterations, delta)?.min(m))
}

/// `η = √(1 + ln m) D_w / ((G_f + γ G_g + γ L_g D_w) √T)`.
pub fn recommended_eta_light(
    metadata: &ProblemMetadata,
    domain: &Domain,
    m: usize,
    iterations: usize,
    gamma: f64,
) -> Result<f64> {
    let d_w = domain.diameter_bound();
    let denom = (metadata.grad_bound_f
        + gamma * metadata.grad_bound_g
        + gamma * metadata.lipschitz_g * d_w)
        * (iterations as f64).sqrt();
    if !(denom > 0.0) || m == 0 {
        return Err(Error::InvalidArgument(
            "step size denominator must be positive".into(),
        ));
    }
    Ok((1.0 + (m as f64).ln()).sqrt() * d_w / denom)
}

/// `η = D_w / ((G_f + γ G_g) √T)`, the standard SGD step for the penalized objective.
pub fn recommended_eta_full(
    metadata: &ProblemMetadata,
    domain: &Domain,
    iterations: usize,
    gamma: f64,
) -> Result<f64> {
    let denom =
        (metadata.grad_bound_f + gamma * metadata.grad_bound_g) * (iterations as f64).sqrt();
    if !(denom > 0.0) {
        return Err(Error::InvalidArgument(
            "step size denominator must be positive".into(),
        ));
    }
    Ok(domain.diameter_bound() / denom)
}

/// `η_p = λ / (2 γ² L_g²)` for the second MidTouch phase.
pub fn recommended_eta_p_mid(metadata: &ProblemMetadata, gamma: f64) -> Result<f64> {
    let denom = 2.0 * gamma * gamma * metadata.lipschitz_g * metadata.lipschitz_g;
    if !(denom > 0.0) || !(metadata.lambda > 0.0) {
        return Err(Error::InvalidArgument(
            "need lambda > 0, gamma > 0 and L_g > 0".into(),
        ));
    }
    Ok(metadata.lambda / denom)
}

/// MidTouch phase lengths `(⌈m τ²⌉, ⌈τ³⌉)`.
pub fn schedule_from_tau(tau: f64, m: usize) -> Result<(usize, usize)> {
    if !(tau > 0.0) || m == 0 {
        return Err(Error::InvalidArgument("tau and m must be positive".into()));
    }
    Ok((
        (m as f64 * tau * tau).ceil() as usize,
        (tau * tau * tau).ceil() as usize,
    ))
}

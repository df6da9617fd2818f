use crate::certificates::{CertificateSet, UniformConstants};
use crate::error::{Error, Result};
use crate::family::{SubsystemId, TransitionGraph};

/// `ln μ / λ_s`: average dwell times strictly above this stabilize when every
/// subsystem is stable.
pub fn adt_threshold(mu: f64, lambda_s: f64) -> Result<f64> {
    if !(lambda_s > 0.0) || !lambda_s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda_s must be positive, found {lambda_s}"
        )));
    }
    if !(mu >= 1.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mu must be >= 1, found {mu}"
        )));
    }
    Ok(mu.ln() / lambda_s)
}

/// Per-mode `ln μ_j / λ_j`, with `μ_j` the largest `μ_ij` over edges entering `j`
/// (1 when `j` has no incoming edge). Index `j - 1` holds mode `j`.
pub fn mdadt_thresholds(certs: &CertificateSet, graph: &TransitionGraph) -> Result<Vec<f64>> {
    (0..certs.len())
        .map(|k| {
            let j = SubsystemId::from_index(k);
            let lambda = certs.lambda(j)?;
            if !(lambda > 0.0) {
                return Err(Error::RequiresAllStable(j));
            }
            let mut mu_j: f64 = 1.0;
            for i in graph.predecessors(j) {
                mu_j = mu_j.max(certs.mu_or_err(i, j)?);
            }
            Ok(mu_j.ln() / lambda)
        })
        .collect()
}

/// `ln μ / (λ_s(1 - ρ) - λ_u ρ)`, defined for `ρ ∈ [0, λ_s / (λ_s + λ_u))`.
pub fn mixed_adt_threshold(u: &UniformConstants, rho: f64) -> Result<f64> {
    let limit = u.lambda_s / (u.lambda_s + u.lambda_u);
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "rho must lie in [0, 1), found {rho}"
        )));
    }
    let denom = u.lambda_s * (1.0 - rho) - u.lambda_u * rho;
    if rho >= limit || denom <= 0.0 {
        return Err(Error::DenominatorNonPositive { rho, limit });
    }
    Ok(u.mu.ln() / denom)
}

//! `ψ(t)`, the composite density `Ψ(t)`, tail-window limit estimates and the
//! asymptotic and unified conditions built on them.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;

use super::{num, CriterionReport, Witness};
use crate::certificates::{uniform_constants, CertificateSet};
use crate::error::{Error, Result};
use crate::family::{Partition, SubsystemId, TransitionGraph};
use crate::signals::{SignalStats, SwitchingSignal};

/// Tail-window estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorOptions {
    /// Fraction `w` of the horizon forming the tail window `[(1 - w)T, T]`.
    pub window: f64,
    pub samples: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            window: 0.5,
            samples: 256,
        }
    }
}

impl EstimatorOptions {
    fn validate(&self) -> Result<()> {
        if !(self.window > 0.0 && self.window <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "window must lie in (0, 1], found {}",
                self.window
            )));
        }
        if self.samples < 2 {
            return Err(Error::InvalidParameter(format!(
                "at least 2 samples required, found {}",
                self.samples
            )));
        }
        Ok(())
    }
}

/// `m` evenly spaced times covering `[(1 - w)T, T]`. A window starting at 0
/// is sampled at `T k / m`, `k = 1..m`, since the statistics need `t > 0`.
pub fn sample_times(horizon: f64, opts: &EstimatorOptions) -> Result<Vec<f64>> {
    opts.validate()?;
    let m = opts.samples;
    let start = (1.0 - opts.window) * horizon;
    if start <= 0.0 {
        return Ok((1..=m).map(|k| horizon * k as f64 / m as f64).collect());
    }
    let mut times: Vec<f64> = (0..m)
        .map(|k| start + (horizon - start) * k as f64 / (m - 1) as f64)
        .collect();
    times[m - 1] = horizon;
    Ok(times)
}

/// `ψ(t) = Σ ln μ_{σ(τ_i)σ(τ_{i+1})} - Σ λ_{σ(τ_i)} S_i`, the last holding time
/// truncated at `t`.
pub fn psi(signal: &SwitchingSignal, certs: &CertificateSet, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(psi_series(signal, certs, &[t])?[0])
}

/// `ψ` at non-decreasing times in `[0, T]`.
pub fn psi_series(
    signal: &SwitchingSignal,
    certs: &CertificateSet,
    times: &[f64],
) -> Result<Vec<f64>> {
    let taus = signal.taus();
    let modes = signal.modes();
    let lambdas = modes
        .iter()
        .map(|&m| certs.lambda(m))
        .collect::<Result<Vec<_>>>()?;
    // ψ(τ_k), accumulated once.
    let mut at_switch = Vec::with_capacity(taus.len());
    at_switch.push(0.0);
    for k in 1..taus.len() {
        let mu = certs.mu_or_err(modes[k - 1], modes[k])?;
        let prev = at_switch[k - 1];
        at_switch.push(prev + mu.ln() - lambdas[k - 1] * (taus[k] - taus[k - 1]));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in times {
        if !(t >= 0.0 && t <= signal.horizon()) || t < prev {
            return Err(Error::InvalidInterval { s: 0.0, t });
        }
        prev = t;
        let k = signal.segment_index_at(t);
        out.push(at_switch[k] - lambdas[k] * (t - taus[k]));
    }
    Ok(out)
}

fn abs_rate(certs: &CertificateSet, j: SubsystemId) -> Result<f64> {
    Ok(certs.lambda(j)?.abs())
}

/// `ν Σ ln μ_kℓ ρ_kℓ - Σ_{P_S} |λ_j| η_j + Σ_{P_U} |λ_k| η_k` from statistics.
/// Edges with `ρ_kℓ = 0` contribute nothing and need no `μ`.
fn composite_from(
    nu: f64,
    rho: Option<&BTreeMap<(SubsystemId, SubsystemId), f64>>,
    eta: &[f64],
    certs: &CertificateSet,
    partition: &Partition,
) -> Result<f64> {
    let mut switching = 0.0;
    if let Some(rho) = rho {
        for (&(k, l), &r) in rho {
            if r > 0.0 {
                switching += certs.mu_or_err(k, l)?.ln() * r;
            }
        }
    }
    let mut stable = 0.0;
    let mut unstable = 0.0;
    for (idx, &e) in eta.iter().enumerate() {
        let j = SubsystemId::from_index(idx);
        if e == 0.0 {
            continue;
        }
        if partition.is_unstable(j) {
            unstable += abs_rate(certs, j)? * e;
        } else {
            stable += abs_rate(certs, j)? * e;
        }
    }
    Ok(nu * switching - stable + unstable)
}

fn composite_of(stats: &SignalStats, certs: &CertificateSet, partition: &Partition) -> Result<f64> {
    composite_from(stats.nu, stats.rho.as_ref(), &stats.eta, certs, partition)
}

/// `Ψ(t)`; equals `ψ(t) / t` when the rate signs agree with the partition.
pub fn composite_density(
    signal: &SwitchingSignal,
    certs: &CertificateSet,
    partition: &Partition,
    graph: &TransitionGraph,
    t: f64,
) -> Result<f64> {
    let stats = signal.stats_at(t, graph)?;
    composite_of(&stats, certs, partition)
}

/// `Ψ` at non-decreasing times in `]0, T]`.
pub fn composite_series(
    signal: &SwitchingSignal,
    certs: &CertificateSet,
    partition: &Partition,
    graph: &TransitionGraph,
    times: &[f64],
) -> Result<Vec<f64>> {
    signal
        .stats_series(times, graph)?
        .iter()
        .map(|s| composite_of(s, certs, partition))
        .collect()
}

/// Smallest and largest sample of a statistic over the tail window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub liminf: f64,
    pub limsup: f64,
}

impl Bounds {
    fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        values.fold(None, |acc, v| {
            Some(match acc {
                None => Bounds {
                    liminf: v,
                    limsup: v,
                },
                Some(b) => Bounds {
                    liminf: b.liminf.min(v),
                    limsup: b.limsup.max(v),
                },
            })
        })
    }
}

/// Finite-horizon stand-ins for the limits of `ν`, `ρ_kℓ`, `η_j`, `Ψ` and the
/// tail ratio: the extreme samples over the tail window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimates {
    pub window: f64,
    pub samples: usize,
    pub times: Vec<f64>,
    pub nu: Bounds,
    /// Per graph edge, over the samples where `ρ` is defined; `None` when no
    /// sample has a switch yet.
    pub rho: Option<BTreeMap<(SubsystemId, SubsystemId), Bounds>>,
    /// Index `j - 1` holds mode `j`.
    pub eta: Vec<Bounds>,
    pub psi: Bounds,
    pub tail_ratio: Bounds,
    /// `Ψ` at each sample time.
    pub psi_samples: Vec<f64>,
}

pub fn estimate_limits(
    signal: &SwitchingSignal,
    graph: &TransitionGraph,
    partition: &Partition,
    certs: &CertificateSet,
    opts: &EstimatorOptions,
) -> Result<LimitEstimates> {
    let times = sample_times(signal.horizon(), opts)?;
    let stats = signal.stats_series(&times, graph)?;
    let psi_samples = stats
        .iter()
        .map(|s| composite_of(s, certs, partition))
        .collect::<Result<Vec<_>>>()?;
    let tails = times
        .iter()
        .map(|&t| signal.tail_ratio(t, partition).map(|r| r.ratio))
        .collect::<Result<Vec<_>>>()?;

    let n_modes = stats[0].eta.len();
    let eta = (0..n_modes)
        .map(|j| Bounds::of(stats.iter().map(|s| s.eta[j])).unwrap())
        .collect();
    let defined: Vec<&BTreeMap<_, f64>> = stats.iter().filter_map(|s| s.rho.as_ref()).collect();
    let rho = (!defined.is_empty()).then(|| {
        graph
            .edges()
            .map(|e| (e, Bounds::of(defined.iter().map(|r| r[&e])).unwrap()))
            .collect()
    });

    Ok(LimitEstimates {
        window: opts.window,
        samples: opts.samples,
        nu: Bounds::of(stats.iter().map(|s| s.nu)).unwrap(),
        rho,
        eta,
        psi: Bounds::of(psi_samples.iter().copied()).unwrap(),
        tail_ratio: Bounds::of(tails.into_iter()).unwrap(),
        psi_samples,
        times,
    })
}

fn argmax(values: &[f64]) -> usize {
    (0..values.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0)
}

/// Condition `limsup Ψ(t) < 0`, estimated over the tail window.
pub fn check_unified(
    signal: &SwitchingSignal,
    certs: &CertificateSet,
    partition: &Partition,
    graph: &TransitionGraph,
    opts: &EstimatorOptions,
) -> Result<CriterionReport> {
    let est = estimate_limits(signal, graph, partition, certs, opts)?;
    let k = argmax(&est.psi_samples);
    Ok(CriterionReport::new(
        "unified",
        -est.psi.limsup,
        true,
        Some(Witness::Instant { t: est.times[k] }),
        json!({
            "psi_limsup": num(est.psi.limsup),
            "psi_liminf": num(est.psi.liminf),
            "horizon": signal.horizon(),
        }),
    )
    .with_estimator(opts))
}

/// Left-hand side of the asymptotic condition with the limits taken separately.
fn asymptotic_lhs(
    est: &LimitEstimates,
    log_mu: impl Fn(SubsystemId, SubsystemId) -> Result<f64>,
    rate: impl Fn(SubsystemId) -> Result<f64>,
    partition: &Partition,
) -> Result<f64> {
    let mut switching = 0.0;
    if let Some(rho) = &est.rho {
        for (&(k, l), b) in rho {
            if b.limsup > 0.0 {
                switching += log_mu(k, l)? * b.limsup;
            }
        }
    }
    let mut stable = 0.0;
    let mut unstable = 0.0;
    for (idx, b) in est.eta.iter().enumerate() {
        let j = SubsystemId::from_index(idx);
        if partition.is_unstable(j) {
            if b.limsup > 0.0 {
                unstable += rate(j)? * b.limsup;
            }
        } else if b.liminf > 0.0 {
            stable += rate(j)? * b.liminf;
        }
    }
    Ok(est.nu.limsup * switching - stable + unstable)
}

/// `limsup ν Σ ln μ_kℓ limsup ρ_kℓ - Σ_{P_S} |λ_j| liminf η_j + Σ_{P_U} |λ_k| limsup η_k < 0`,
/// estimated over the tail window. The value with the uniform constants
/// `(λ_s, λ_u, μ)` is reported alongside.
pub fn check_asymptotic(
    signal: &SwitchingSignal,
    certs: &CertificateSet,
    partition: &Partition,
    graph: &TransitionGraph,
    opts: &EstimatorOptions,
) -> Result<CriterionReport> {
    let est = estimate_limits(signal, graph, partition, certs, opts)?;
    let lhs = asymptotic_lhs(
        &est,
        |k, l| Ok(certs.mu_or_err(k, l)?.ln()),
        |j| abs_rate(certs, j),
        partition,
    )?;
    let uniform = match uniform_constants(certs, partition) {
        Ok(u) => Some(asymptotic_lhs(
            &est,
            |_, _| Ok(u.mu.ln()),
            |j| {
                Ok(if partition.is_unstable(j) {
                    u.lambda_u
                } else {
                    u.lambda_s
                })
            },
            partition,
        )?),
        Err(Error::NoStableSubsystem) => None,
        Err(e) => return Err(e),
    };
    let rho = est.rho.as_ref().map(|r| {
        r.iter()
            .map(|(&(k, l), b)| (format!("{k}_{l}"), num(b.limsup)))
            .collect::<serde_json::Map<_, _>>()
    });
    Ok(CriterionReport::new(
        "asymptotic",
        -lhs,
        true,
        None,
        json!({
            "lhs": num(lhs),
            "lhs_uniform": uniform.map(num),
            "nu_limsup": num(est.nu.limsup),
            "rho_limsup": rho,
            "eta_liminf": est.eta.iter().map(|b| num(b.liminf)).collect::<Vec<_>>(),
            "eta_limsup": est.eta.iter().map(|b| num(b.limsup)).collect::<Vec<_>>(),
            "psi_limsup": num(est.psi.limsup),
        }),
    )
    .with_estimator(opts))
}

//! Integration of `ẋ = f_σ(t)(x)` along a switching signal, Lyapunov traces and
//! the checks built on them.
//!
//! The time grid steps by `step` inside each constant-mode segment and the last
//! step of a segment is shortened so that every switching instant is a sample.
//! A sample at `τ_i` carries the mode that starts there.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::certificates::CertificateSet;
use crate::criteria::psi_series;
use crate::error::{Error, Result};
use crate::family::{SubsystemId, SwitchedFamily};
use crate::linalg;
use crate::signals::SwitchingSignal;

/// States beyond this norm abort the integration.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub modes: Vec<SubsystemId>,
    /// `V_σ(t_k)(x_k)`, filled in by [`lyapunov_trace`].
    pub v: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.states.first().map(|x| x.len()).unwrap_or(0)
    }

    pub fn last_state(&self) -> Option<&DVector<f64>> {
        self.states.last()
    }

    fn push(&mut self, t: f64, x: DVector<f64>, mode: SubsystemId) {
        self.times.push(t);
        self.states.push(x);
        self.modes.push(mode);
    }
}

/// Step times inside `[s, e]`, excluding `s` and ending exactly on `e`.
fn grid(s: f64, e: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = (((e - s) / step) - 1e-9).ceil().max(1.0) as usize;
    (1..=n).map(move |k| if k == n { e } else { s + k as f64 * step })
}

fn check_inputs(
    family: &SwitchedFamily,
    signal: &SwitchingSignal,
    x0: &DVector<f64>,
    step: f64,
) -> Result<()> {
    if x0.len() != family.dimension() {
        return Err(Error::Dimension {
            what: "x0",
            expected: family.dimension(),
            got: x0.len(),
        });
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, found {step}"
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("x0 has a non-finite entry".into()));
    }
    signal.check_admissible(family.graph())
}

fn diverged(x: &DVector<f64>) -> bool {
    x.iter().any(|v| !v.is_finite()) || x.norm() > DIVERGENCE_NORM
}

/// Drives `advance(mode, x, h)` over the sample grid of the signal.
fn run(
    family: &SwitchedFamily,
    signal: &SwitchingSignal,
    x0: &DVector<f64>,
    step: f64,
    mut advance: impl FnMut(SubsystemId, &DVector<f64>, f64) -> Result<DVector<f64>>,
) -> Result<Trajectory> {
    check_inputs(family, signal, x0, step)?;
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        modes: Vec::new(),
        v: None,
    };
    let mut x = x0.clone();
    let mut segments = signal.segments().peekable();
    while let Some(seg) = segments.next() {
        traj.push(seg.start, x.clone(), seg.mode);
        if seg.is_empty() {
            continue;
        }
        let mut t = seg.start;
        for next in grid(seg.start, seg.end, step) {
            x = advance(seg.mode, &x, next - t)?;
            t = next;
            if diverged(&x) {
                traj.push(t, x, seg.mode);
                return Err(Error::Divergence {
                    t,
                    partial: Box::new(traj),
                });
            }
            let boundary = next == seg.end && segments.peek().is_some();
            if !boundary {
                traj.push(t, x.clone(), seg.mode);
            }
        }
    }
    Ok(traj)
}

/// Classical fourth-order Runge-Kutta on the grid described in the module docs.
pub fn integrate(
    family: &SwitchedFamily,
    signal: &SwitchingSignal,
    x0: &DVector<f64>,
    step: f64,
) -> Result<Trajectory> {
    run(family, signal, x0, step, |mode, x, h| {
        let f = &family.subsystem(mode)?.dynamics;
        let k1 = f.eval(x);
        let k2 = f.eval(&(x + &k1 * (h / 2.0)));
        let k3 = f.eval(&(x + &k2 * (h / 2.0)));
        let k4 = f.eval(&(x + &k3 * h));
        Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
    })
}

/// Same grid as [`integrate`], advancing linear subsystems by `exp(A h)`.
pub fn integrate_exact(
    family: &SwitchedFamily,
    signal: &SwitchingSignal,
    x0: &DVector<f64>,
    step: f64,
) -> Result<Trajectory> {
    for s in family.subsystems() {
        if s.dynamics.as_linear().is_none() {
            return Err(Error::NotLinear(s.id));
        }
    }
    let mut cache: Vec<(SubsystemId, u64, DMatrix<f64>)> = Vec::new();
    run(family, signal, x0, step, |mode, x, h| {
        let key = h.to_bits();
        if let Some((.., phi)) = cache.iter().find(|(m, k, _)| *m == mode && *k == key) {
            return Ok(phi * x);
        }
        let a = family
            .subsystem(mode)?
            .dynamics
            .as_linear()
            .ok_or(Error::NotLinear(mode))?;
        let phi = (a * h).exp();
        let y = &phi * x;
        if cache.len() > 64 {
            cache.clear();
        }
        cache.push((mode, key, phi));
        Ok(y)
    })
}

/// Fills `V_σ(t_k)(x_k)` for every sample.
pub fn lyapunov_trace(traj: &Trajectory, certs: &CertificateSet) -> Result<Trajectory> {
    let v = traj
        .states
        .iter()
        .zip(&traj.modes)
        .map(|(x, &m)| Ok(certs.cert(m)?.value(x)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        v: Some(v),
        ..traj.clone()
    })
}

fn trace_of(traj: &Trajectory, certs: &CertificateSet) -> Result<Vec<f64>> {
    match &traj.v {
        Some(v) => Ok(v.clone()),
        None => Ok(lyapunov_trace(traj, certs)?.v.unwrap()),
    }
}

/// Outcome of checking `V_σ(t)(x(t)) <= exp(ψ(t)) V_σ(0)(x_0)` on every sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// Largest `V - exp(ψ) V_0` over the samples.
    pub max_excess: f64,
    /// Largest `V / (exp(ψ) V_0) - 1`; 0 when `V_0 = 0`.
    pub max_relative_excess: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Sample time of the largest relative excess.
    pub witness_t: Option<f64>,
}

/// `ψ(t_k)` and the bound `exp(ψ(t_k)) V_0` at every sample.
pub fn bound_trace(
    traj: &Trajectory,
    certs: &CertificateSet,
    signal: &SwitchingSignal,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = trace_of(traj, certs)?;
    let psi = psi_series(signal, certs, &traj.times)?;
    let v0 = v.first().copied().unwrap_or(0.0);
    let bound = psi.iter().map(|p| p.exp() * v0).collect();
    Ok((psi, bound))
}

pub fn check_bound(
    traj: &Trajectory,
    certs: &CertificateSet,
    signal: &SwitchingSignal,
    tolerance: f64,
) -> Result<BoundReport> {
    let v = trace_of(traj, certs)?;
    let (_, bound) = bound_trace(traj, certs, signal)?;
    let mut report = BoundReport {
        max_excess: f64::NEG_INFINITY,
        max_relative_excess: f64::NEG_INFINITY,
        tolerance,
        pass: true,
        witness_t: None,
    };
    for ((&t, &vk), &b) in traj.times.iter().zip(&v).zip(&bound) {
        report.max_excess = report.max_excess.max(vk - b);
        let rel = if b > 0.0 {
            vk / b - 1.0
        } else if vk > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if rel > report.max_relative_excess {
            report.max_relative_excess = rel;
            report.witness_t = Some(t);
        }
        if vk > b * (1.0 + tolerance) {
            report.pass = false;
        }
    }
    Ok(report)
}

/// Empirical decay across a split time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayReport {
    pub sup_before: f64,
    pub sup_after: f64,
    /// `sup_after / sup_before`; below 1 indicates decay.
    pub ratio: f64,
}

pub fn decay_report(traj: &Trajectory, t_split: f64) -> Result<DecayReport> {
    let end = traj.times.last().copied().unwrap_or(0.0);
    if !(t_split > 0.0 && t_split < end) {
        return Err(Error::InvalidParameter(format!(
            "t_split must lie in (0, {end}), found {t_split}"
        )));
    }
    let mut before: f64 = 0.0;
    let mut after: f64 = 0.0;
    for (&t, x) in traj.times.iter().zip(&traj.states) {
        let n = x.norm();
        if t <= t_split {
            before = before.max(n);
        } else {
            after = after.max(n);
        }
    }
    Ok(DecayReport {
        sup_before: before,
        sup_after: after,
        ratio: after / before,
    })
}

/// Worst relative violation of `α‖x‖² <= V(x) <= ᾱ‖x‖²` with `α`, `ᾱ` the
/// extreme eigenvalues over all certificates; non-positive when it holds.
pub fn sandwich_violation(traj: &Trajectory, certs: &CertificateSet) -> Result<f64> {
    let lo = certs
        .certs()
        .iter()
        .map(|c| linalg::lambda_min(&c.p))
        .fold(f64::INFINITY, f64::min);
    let hi = certs
        .certs()
        .iter()
        .map(|c| linalg::lambda_max(&c.p))
        .fold(0.0, f64::max);
    let v = trace_of(traj, certs)?;
    let mut worst = f64::NEG_INFINITY;
    for (x, &vk) in traj.states.iter().zip(&v) {
        let r2 = x.norm_squared();
        if r2 == 0.0 {
            continue;
        }
        worst = worst
            .max((lo * r2 - vk) / (hi * r2))
            .max((vk - hi * r2) / (hi * r2));
    }
    Ok(worst)
}

/// Worst relative violation of `V_j(x(τ)) <= μ_ij V_i(x(τ))` over the
/// switching instants; non-positive when it holds.
pub fn switch_jump_violation(
    traj: &Trajectory,
    certs: &CertificateSet,
    signal: &SwitchingSignal,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    let mut k = 0;
    for (at, from, to) in signal.transitions() {
        while k < traj.times.len() && traj.times[k] < at {
            k += 1;
        }
        let Some(x) = traj.states.get(k) else { break };
        let vi = certs.cert(from)?.value(x);
        let vj = certs.cert(to)?.value(x);
        let mu = certs.mu_or_err(from, to)?;
        if vi > 0.0 {
            worst = worst.max(vj / (mu * vi) - 1.0);
        }
    }
    Ok(worst)
}

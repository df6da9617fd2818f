//! Interval-quantified conditions, each checked exactly.
//!
//! For ADT, `N(s, t) - (t - s)/τ_a` is constant in `s` between switching
//! instants and decreasing in `t` between them, so for a fixed set of counted
//! switches `τ_p..τ_q` the supremum is the left limit `s → τ_p⁻` with `t = τ_q`.
//! The same argument with `t - s` replaced by `T_j(s, t)` covers the per-mode
//! counts, whose activation time does not grow while `j` is inactive. For the
//! unstable budget the objective grows only on unstable runs, so the maximum
//! sits on a run start `s` and a run end `t` and is attained.
//!
//! Each supremum is a maximum over pairs `p <= q`; a running maximum of the
//! `p`-dependent part makes every check linear in the number of switches.

use serde_json::json;

use super::{num, CriterionReport, Witness};
use crate::error::{Error, Result};
use crate::family::{Partition, SubsystemId};
use crate::signals::SwitchingSignal;

/// Supremum of an interval objective with the pair attaining it.
/// `None` for `at` means the empty interval (value 0) is the worst case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSup {
    pub value: f64,
    pub at: Option<(f64, f64)>,
}

impl IntervalSup {
    fn empty() -> Self {
        Self {
            value: 0.0,
            at: None,
        }
    }

    fn witness(&self) -> Option<Witness> {
        self.at.map(|(s, t)| Witness::Interval { s, t })
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, found {x}"
        )))
    }
}

/// Maximum over `p <= q` of `(q - p + 1) - (c_q - c_p) / tau` for events at
/// times `t_k` with cumulative clocks `c_k`.
fn count_sup(events: impl Iterator<Item = (f64, f64)>, tau: f64) -> IntervalSup {
    let mut best = IntervalSup::empty();
    let mut prefix: Option<(f64, usize, f64, f64)> = None;
    for (q, (t, c)) in events.enumerate() {
        let lead = c / tau - q as f64;
        if prefix.is_none_or(|(g, ..)| lead > g) {
            prefix = Some((lead, q, t, c));
        }
        let (_, p, tp, cp) = prefix.unwrap();
        let value = (q - p + 1) as f64 - (c - cp) / tau;
        if value > best.value || best.at.is_none() && value >= best.value {
            best = IntervalSup {
                value,
                at: Some((tp, t)),
            };
        }
    }
    best
}

/// `sup N(s, t) - (t - s)/τ_a` over all `]s, t] ⊆ [0, T]`.
pub fn adt_supremum(signal: &SwitchingSignal, tau_a: f64) -> IntervalSup {
    count_sup(signal.taus()[1..].iter().map(|&t| (t, t)), tau_a)
}

/// Per-mode `sup N_j(s, t) - T_j(s, t)/τ_j`, where `N_j` counts switches into `j`.
/// Index `j - 1` holds mode `j`; `taus.len()` must cover every mode in the signal.
pub fn mdadt_supremum(signal: &SwitchingSignal, tau: &[f64]) -> Result<Vec<IntervalSup>> {
    let n = tau.len();
    if let Some(m) = signal.modes().iter().find(|m| m.index() >= n) {
        return Err(Error::UnknownSubsystem(*m));
    }
    let mut clock = vec![0.0; n];
    let mut entries: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    for seg in signal.segments() {
        let j = seg.mode.index();
        if seg.start > 0.0 {
            entries[j].push((seg.start, clock[j]));
        }
        clock[j] += seg.len();
    }
    Ok(entries
        .iter()
        .zip(tau)
        .map(|(e, &tau_j)| count_sup(e.iter().copied(), tau_j))
        .collect())
}

/// `sup T^U(s, t) - ρ (t - s)`.
pub fn budget_supremum(signal: &SwitchingSignal, partition: &Partition, rho: f64) -> IntervalSup {
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for seg in signal.segments() {
        match (partition.is_unstable(seg.mode), open) {
            (true, None) => open = Some(seg.start),
            (false, Some(a)) => {
                runs.push((a, seg.start));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(a) = open {
        runs.push((a, signal.horizon()));
    }

    let mut best = IntervalSup::empty();
    let mut before = 0.0;
    let mut prefix: Option<(f64, f64, f64)> = None;
    for &(a, b) in &runs {
        let lead = rho * a - before;
        if prefix.is_none_or(|(g, ..)| lead > g) {
            prefix = Some((lead, a, before));
        }
        let upto = before + (b - a);
        let (_, s, before_s) = prefix.unwrap();
        let value = (upto - before_s) - rho * (b - s);
        if value > best.value || best.at.is_none() && value >= best.value {
            best = IntervalSup {
                value,
                at: Some((s, b)),
            };
        }
        before = upto;
    }
    best
}

/// Every holding time except the final truncated one is at least `τ_d`.
pub fn check_dwell_time(signal: &SwitchingSignal, tau_d: f64) -> Result<CriterionReport> {
    positive("tau_d", tau_d)?;
    let taus = signal.taus();
    let worst = taus
        .windows(2)
        .map(|w| (w[1] - w[0], w[0], w[1]))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let (margin, witness) = match worst {
        Some((hold, s, t)) => (hold - tau_d, Some(Witness::Interval { s, t })),
        None => (f64::INFINITY, None),
    };
    Ok(CriterionReport::new(
        "dwell",
        margin,
        false,
        witness,
        json!({ "tau_d": tau_d }),
    ))
}

/// `N(s, t) <= N_0 + (t - s)/τ_a` on every interval.
pub fn check_adt(signal: &SwitchingSignal, n0: f64, tau_a: f64) -> Result<CriterionReport> {
    positive("N0", n0)?;
    positive("tau_a", tau_a)?;
    let sup = adt_supremum(signal, tau_a);
    let mut r = CriterionReport::new(
        "adt",
        n0 - sup.value,
        false,
        sup.witness(),
        json!({ "N0": n0, "tau_a": tau_a, "supremum": num(sup.value) }),
    );
    if sup.at.is_some() {
        r.notes
            .push("supremum approached as s tends to the witness start from below".into());
    }
    Ok(r)
}

/// `N_j(s, t) <= N_0^j + T_j(s, t)/τ_a^j` for every mode and interval, where
/// `N_j` counts switches into `j`.
pub fn check_mdadt(signal: &SwitchingSignal, n0: &[f64], tau_a: &[f64]) -> Result<CriterionReport> {
    if n0.len() != tau_a.len() {
        return Err(Error::Dimension {
            what: "mdadt parameters",
            expected: n0.len(),
            got: tau_a.len(),
        });
    }
    for (k, (&a, &b)) in n0.iter().zip(tau_a).enumerate() {
        positive(&format!("N0[{}]", k + 1), a)?;
        positive(&format!("tau_a[{}]", k + 1), b)?;
    }
    let sups = mdadt_supremum(signal, tau_a)?;
    let margins: Vec<f64> = sups.iter().zip(n0).map(|(s, &n)| n - s.value).collect();
    let worst = (0..margins.len())
        .min_by(|&a, &b| margins[a].total_cmp(&margins[b]))
        .ok_or_else(|| Error::InvalidParameter("no modes given".into()))?;
    let mut r = CriterionReport::new(
        "mdadt",
        margins[worst],
        false,
        sups[worst].witness(),
        json!({
            "N0": n0,
            "tau_a": tau_a,
            "mode_margins": margins,
            "worst_mode": SubsystemId::from_index(worst),
        }),
    );
    if sups[worst].at.is_some() {
        r.notes
            .push("supremum approached as s tends to the witness start from below".into());
    }
    Ok(r)
}

/// `T^U(s, t) <= T_0 + ρ (t - s)` on every interval.
pub fn check_unstable_budget(
    signal: &SwitchingSignal,
    partition: &Partition,
    t0: f64,
    rho: f64,
) -> Result<CriterionReport> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "rho must lie in [0, 1), found {rho}"
        )));
    }
    if !(t0 >= 0.0) || !t0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "T0 must be non-negative, found {t0}"
        )));
    }
    let sup = budget_supremum(signal, partition, rho);
    Ok(CriterionReport::new(
        "unstable_budget",
        t0 - sup.value,
        false,
        sup.witness(),
        json!({ "T0": t0, "rho": rho, "supremum": num(sup.value) }),
    ))
}

/// Remaining chatter reserve `N_0 + t/τ_a - N(0, t)` just after each switch.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatterReserve {
    /// `(τ_k, reserve just after τ_k)`
    pub trace: Vec<(f64, f64)>,
    pub infimum: f64,
    /// The reserve dropped below one switch, so the signal was momentarily in
    /// the dwell-time regime.
    pub dwell_regime_reached: bool,
}

pub fn chatter_reserve_trace(
    signal: &SwitchingSignal,
    n0: f64,
    tau_a: f64,
) -> Result<ChatterReserve> {
    let report = check_adt(signal, n0, tau_a)?;
    if !report.satisfied {
        return Err(Error::AdtNotSatisfied {
            margin: report.margin,
        });
    }
    let trace: Vec<(f64, f64)> = signal.taus()[1..]
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, n0 + t / tau_a - (k + 1) as f64))
        .collect();
    let infimum = trace.iter().map(|p| p.1).fold(n0, f64::min);
    Ok(ChatterReserve {
        trace,
        infimum,
        dwell_regime_reached: infimum < 1.0,
    })
}

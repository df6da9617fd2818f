//! Switching-signal synthesis for every stabilizing class, plus the fixed
//! three-mode example signal, square-root switching growth and the dyadic
//! burst signal.
//!
//! Class generators walk the transition graph uniformly at random and place
//! each switch no earlier than the class constraints allow, keeping a safety
//! margin below the budgets so the output passes the matching exact check.
//! Output is a pure function of the parameters and the seed.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certificates::{CertificateSet, QuadraticCertificate};
use crate::criteria::{
    check_adt, check_dwell_time, check_mdadt, check_unstable_budget, CriterionReport, Witness,
};
use crate::error::{Error, Result};
use crate::family::{sid, Partition, StabilityClass, SubsystemId, SwitchedFamily, TransitionGraph};
use crate::signals::{SwitchingSignal, MIN_HOLDING};

/// Largest supported burst exponent.
pub const MAX_BURST_EXPONENT: u32 = 24;

/// Slack kept below integer budgets so rounding never crosses them.
const BUDGET_SLACK: f64 = 1e-9;

fn default_safety() -> f64 {
    0.9
}

/// Class tag and parameters of a generator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum GeneratorClass {
    Dwell {
        tau_d: f64,
    },
    Adt {
        #[serde(rename = "N0")]
        n0: f64,
        tau_a: f64,
        #[serde(default = "default_safety")]
        safety: f64,
    },
    Mdadt {
        #[serde(rename = "N0")]
        n0: Vec<f64>,
        tau_a: Vec<f64>,
        #[serde(default = "default_safety")]
        safety: f64,
    },
    Mixed {
        #[serde(rename = "N0")]
        n0: f64,
        tau_a: f64,
        #[serde(rename = "T0")]
        t0: f64,
        rho: f64,
        #[serde(default = "default_safety")]
        safety: f64,
    },
    /// Random walk with holds uniform in `[mean_hold / 2, 3 mean_hold / 2]`.
    Asymptotic {
        mean_hold: f64,
    },
    PaperExample,
    Burst {
        epsilon: f64,
        n_max: u32,
    },
    SqrtGrowth {
        k0: f64,
        k0p: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub class: GeneratorClass,
    /// Required except for `burst`, whose horizon is `2^(n_max + 1)`.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn horizon_or_err(&self) -> Result<f64> {
        let t = self
            .horizon
            .ok_or_else(|| Error::InvalidParameter("horizon is required for this class".into()))?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, found {t}"
            )));
        }
        Ok(t)
    }
}

/// Runs the generator named by `spec`. `family` is required except for the
/// example and burst classes, which bring their own modes.
pub fn generate(spec: &GeneratorSpec, family: Option<&SwitchedFamily>) -> Result<SwitchingSignal> {
    let need = || family.ok_or_else(|| Error::InvalidParameter("this class needs a family".into()));
    match &spec.class {
        GeneratorClass::Burst { epsilon, n_max } => gen_burst(*epsilon, *n_max),
        GeneratorClass::PaperExample => Ok(gen_paper_example(spec.horizon_or_err()?)?.signal),
        GeneratorClass::Dwell { tau_d } => {
            gen_dwell(need()?, *tau_d, spec.horizon_or_err()?, spec.seed)
        }
        GeneratorClass::Adt { n0, tau_a, safety } => gen_adt(
            need()?,
            *n0,
            *tau_a,
            *safety,
            spec.horizon_or_err()?,
            spec.seed,
        ),
        GeneratorClass::Mdadt { n0, tau_a, safety } => gen_mdadt(
            need()?,
            n0,
            tau_a,
            *safety,
            spec.horizon_or_err()?,
            spec.seed,
        ),
        GeneratorClass::Mixed {
            n0,
            tau_a,
            t0,
            rho,
            safety,
        } => {
            let f = need()?;
            let p = MixedParams {
                n0: *n0,
                tau_a: *tau_a,
                t0: *t0,
                rho: *rho,
                safety: *safety,
            };
            gen_mixed(f, f.partition(), &p, spec.horizon_or_err()?, spec.seed)
        }
        GeneratorClass::Asymptotic { mean_hold } => {
            gen_asymptotic(need()?, *mean_hold, spec.horizon_or_err()?, spec.seed)
        }
        GeneratorClass::SqrtGrowth { k0, k0p } => {
            gen_sqrt_growth(need()?, *k0, *k0p, spec.horizon_or_err()?, spec.seed)
        }
    }
}

/// Runs the checks matching the class of `spec` on a generated signal.
pub fn verify_generated(
    spec: &GeneratorSpec,
    signal: &SwitchingSignal,
    partition: &Partition,
) -> Result<Vec<CriterionReport>> {
    Ok(match &spec.class {
        GeneratorClass::Dwell { tau_d } => vec![check_dwell_time(signal, *tau_d)?],
        GeneratorClass::Adt { n0, tau_a, .. } => vec![check_adt(signal, *n0, *tau_a)?],
        GeneratorClass::Mdadt { n0, tau_a, .. } => vec![check_mdadt(signal, n0, tau_a)?],
        GeneratorClass::Mixed {
            n0, tau_a, t0, rho, ..
        } => vec![
            check_adt(signal, *n0, *tau_a)?,
            check_unstable_budget(signal, partition, *t0, *rho)?,
        ],
        GeneratorClass::Burst { n_max, .. } => {
            let expected = 1u64 << (n_max + 1);
            let got = signal.switch_count() as u64;
            vec![CriterionReport::new(
                "burst_count",
                -(expected.abs_diff(got) as f64),
                false,
                None,
                json!({ "expected": expected, "switches": got }),
            )]
        }
        GeneratorClass::SqrtGrowth { k0, k0p } => vec![sqrt_growth_report(signal, *k0, *k0p)],
        GeneratorClass::Asymptotic { .. } | GeneratorClass::PaperExample => {
            vec![admissible_report(signal)]
        }
    })
}

fn admissible_report(signal: &SwitchingSignal) -> CriterionReport {
    let min_hold = signal
        .taus()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    CriterionReport::new(
        "min_holding",
        min_hold - MIN_HOLDING,
        false,
        None,
        json!({ "min_holding": crate::criteria::num(min_hold) }),
    )
}

/// `N(0, t)` stays within one switch of `max(0, k0 t - k0p √t)`; checked just
/// before and at every switch and at the horizon.
fn sqrt_growth_report(signal: &SwitchingSignal, k0: f64, k0p: f64) -> CriterionReport {
    let target = |t: f64| (k0 * t - k0p * t.sqrt()).max(0.0);
    let mut worst = 0.0f64;
    let mut at = 0.0;
    for (k, &t) in signal.taus().iter().enumerate().skip(1) {
        for (count, label) in [((k - 1) as f64, t), (k as f64, t)] {
            let dev = (count - target(label)).abs();
            if dev > worst {
                worst = dev;
                at = label;
            }
        }
    }
    let end = signal.horizon();
    let dev = (signal.switch_count() as f64 - target(end)).abs();
    if dev > worst {
        worst = dev;
        at = end;
    }
    // Left limits sit exactly one below the target; allow rounding in the target.
    let slack = 1e-9 * (1.0 + signal.switch_count() as f64);
    CriterionReport::new(
        "sqrt_growth",
        1.0 + slack - worst,
        false,
        Some(Witness::Instant { t: at }),
        json!({ "k0": k0, "k0p": k0p, "max_deviation": worst }),
    )
}

struct Builder {
    taus: Vec<f64>,
    modes: Vec<SubsystemId>,
}

impl Builder {
    fn new(mode: SubsystemId) -> Self {
        Self {
            taus: vec![0.0],
            modes: vec![mode],
        }
    }

    fn last(&self) -> (f64, SubsystemId) {
        (*self.taus.last().unwrap(), *self.modes.last().unwrap())
    }

    fn push(&mut self, t: f64, mode: SubsystemId) {
        self.taus.push(t);
        self.modes.push(mode);
    }

    fn finish(self, horizon: f64) -> Result<SwitchingSignal> {
        SwitchingSignal::new(self.taus, self.modes, horizon)
    }
}

struct Walk<'a> {
    graph: &'a TransitionGraph,
    n: usize,
    rng: ChaCha8Rng,
}

impl<'a> Walk<'a> {
    fn new(family: &'a SwitchedFamily, seed: u64) -> Self {
        Self {
            graph: family.graph(),
            n: family.len(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Initial mode among those accepted by `keep`, preferring vertices with
    /// an outgoing edge.
    fn initial(&mut self, keep: impl Fn(SubsystemId) -> bool) -> Result<SubsystemId> {
        let all: Vec<SubsystemId> = (0..self.n)
            .map(SubsystemId::from_index)
            .filter(|&m| keep(m))
            .collect();
        let moving: Vec<SubsystemId> = all
            .iter()
            .copied()
            .filter(|&m| self.graph.successors(m).next().is_some())
            .collect();
        let pool = if moving.is_empty() { &all } else { &moving };
        pool.choose(&mut self.rng)
            .copied()
            .ok_or_else(|| Error::Infeasible("no admissible initial mode".into()))
    }

    /// Uniform successor of `from` among those accepted by `keep`.
    /// `Ok(None)` when `from` has successors but `keep` rejects all of them.
    fn next(
        &mut self,
        from: SubsystemId,
        at: f64,
        keep: impl Fn(SubsystemId) -> bool,
    ) -> Result<Option<SubsystemId>> {
        let succ: Vec<SubsystemId> = self.graph.successors(from).collect();
        if succ.is_empty() {
            return Err(Error::CannotExtendWalk { mode: from, at });
        }
        let ok: Vec<SubsystemId> = succ.into_iter().filter(|&m| keep(m)).collect();
        Ok(ok.choose(&mut self.rng).copied())
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

fn check_safety(safety: f64) -> Result<()> {
    if safety > 0.0 && safety <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "safety must lie in (0, 1], found {safety}"
        )))
    }
}

fn single_mode(family: &SwitchedFamily) -> bool {
    family.len() == 1
}

fn min_hold(scale: f64) -> f64 {
    (1e-6 * scale).max(2.0 * MIN_HOLDING)
}

/// Holds uniform in `[τ_d, 2τ_d]`, nudged up so rounding never undercuts `τ_d`.
pub fn gen_dwell(
    family: &SwitchedFamily,
    tau_d: f64,
    horizon: f64,
    seed: u64,
) -> Result<SwitchingSignal> {
    positive("tau_d", tau_d)?;
    let mut walk = Walk::new(family, seed);
    let mut b = Builder::new(walk.initial(|_| true)?);
    if single_mode(family) {
        return b.finish(horizon);
    }
    loop {
        let (t, mode) = b.last();
        let x = t + tau_d * (1.0 + 1e-9) * (1.0 + walk.uniform());
        if x > horizon {
            break;
        }
        let next = walk.next(mode, x, |_| true)?.unwrap();
        b.push(x, next);
    }
    b.finish(horizon)
}

/// Average-dwell-time signal whose chatter supremum stays below `safety · N_0`.
///
/// With `G_q = max_{p<q} (τ_p/τ_a - p)` over earlier switches, switch `q`
/// (0-based) keeps every interval within budget `B` iff
/// `τ_q >= τ_a (q + 1 + G_q - B)`.
pub fn gen_adt(
    family: &SwitchedFamily,
    n0: f64,
    tau_a: f64,
    safety: f64,
    horizon: f64,
    seed: u64,
) -> Result<SwitchingSignal> {
    positive("N0", n0)?;
    positive("tau_a", tau_a)?;
    check_safety(safety)?;
    let budget = safety * n0 - BUDGET_SLACK;
    let mut walk = Walk::new(family, seed);
    let mut b = Builder::new(walk.initial(|_| true)?);
    if budget < 1.0 || single_mode(family) {
        return b.finish(horizon);
    }
    let h = min_hold(tau_a);
    let mut lead = f64::NEG_INFINITY;
    for q in 0.. {
        let (t, mode) = b.last();
        let lower = (tau_a * (q as f64 + 1.0 + lead - budget)).max(t + h);
        let x = lower + walk.uniform() * tau_a;
        if x > horizon {
            break;
        }
        let next = walk.next(mode, x, |_| true)?.unwrap();
        b.push(x, next);
        lead = lead.max(x / tau_a - q as f64);
    }
    b.finish(horizon)
}

/// Mode-dependent variant: `N_j` counts switches into `j`, so entry `q` into
/// `j` is fixed by the `j`-time accumulated before it. Each activation
/// therefore lasts long enough that the next entry into the same mode is
/// within budget.
pub fn gen_mdadt(
    family: &SwitchedFamily,
    n0: &[f64],
    tau_a: &[f64],
    safety: f64,
    horizon: f64,
    seed: u64,
) -> Result<SwitchingSignal> {
    let n = family.len();
    for (name, v) in [("N0", n0), ("tau_a", tau_a)] {
        if v.len() != n {
            return Err(Error::Dimension {
                what: if name == "N0" { "N0" } else { "tau_a" },
                expected: n,
                got: v.len(),
            });
        }
        for (k, &x) in v.iter().enumerate() {
            positive(&format!("{name}[{}]", k + 1), x)?;
        }
    }
    check_safety(safety)?;
    let budget: Vec<f64> = n0.iter().map(|&x| safety * x - BUDGET_SLACK).collect();
    let enterable = |m: SubsystemId| budget[m.index()] >= 1.0;

    let mut walk = Walk::new(family, seed);
    let mut b = Builder::new(walk.initial(|_| true)?);
    if single_mode(family) {
        return b.finish(horizon);
    }
    let mut entries = vec![0usize; n];
    let mut time_in = vec![0.0; n];
    let mut lead = vec![f64::NEG_INFINITY; n];
    // Minimum duration of the current activation.
    let mut need: f64 = 0.0;
    loop {
        let (t, mode) = b.last();
        let j = mode.index();
        let x = t + need.max(min_hold(tau_a[j])) + walk.uniform() * tau_a[j];
        if x > horizon {
            break;
        }
        let Some(next) = walk.next(mode, x, enterable)? else {
            break;
        };
        b.push(x, next);
        let x = b.last().0;
        time_in[j] += x - t;
        let k = next.index();
        lead[k] = lead[k].max(time_in[k] / tau_a[k] - entries[k] as f64);
        entries[k] += 1;
        need = tau_a[k] * (entries[k] as f64 + 1.0 + lead[k] - budget[k]) - time_in[k];
    }
    b.finish(horizon)
}

/// Parameters of the mixed class: ADT `(N_0, τ_a)` plus the unstable budget `(T_0, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedParams {
    pub n0: f64,
    pub tau_a: f64,
    pub t0: f64,
    pub rho: f64,
    pub safety: f64,
}

/// ADT placement as in [`gen_adt`] together with a Lindley recursion for the
/// budget: `D(t) = sup_s T^U(s, t) - ρ(t - s)` grows at rate `1 - ρ` on
/// unstable modes and decays at rate `ρ` (down to 0) on stable ones, and is
/// kept below `safety · T_0`. With `ρ = 0` unstable modes are never entered.
pub fn gen_mixed(
    family: &SwitchedFamily,
    partition: &Partition,
    p: &MixedParams,
    horizon: f64,
    seed: u64,
) -> Result<SwitchingSignal> {
    positive("N0", p.n0)?;
    positive("tau_a", p.tau_a)?;
    check_safety(p.safety)?;
    if !(0.0..1.0).contains(&p.rho) {
        return Err(Error::InvalidParameter(format!(
            "rho must lie in [0, 1), found {}",
            p.rho
        )));
    }
    if !(p.t0 >= 0.0) || !p.t0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "T0 must be non-negative, found {}",
            p.t0
        )));
    }
    let (tau, rho) = (p.tau_a, p.rho);
    let budget = p.safety * p.n0 - BUDGET_SLACK;
    let t0 = p.safety * p.t0 - BUDGET_SLACK * (1.0 + p.t0);
    let h = min_hold(tau);
    let unstable = |m: SubsystemId| partition.is_unstable(m);

    let mut walk = Walk::new(family, seed);
    let first = walk.initial(|m| !unstable(m))?;
    let mut b = Builder::new(first);
    if budget < 1.0 || single_mode(family) {
        return b.finish(horizon);
    }
    // Longest unstable stay that the ADT budget can ever require.
    let settled = h.max(tau * (2.0 - budget));
    let unstable_ok = rho > 0.0 && t0 > 0.0 && t0 / (1.0 - rho) > settled * (1.0 + 1e-9);

    // Capacity left for an unstable stay entered at `x` with debt `debt`,
    // and the shortest stay the ADT placement allows after switch `q` at `x`.
    let cap = |debt: f64| (t0 - debt) / (1.0 - rho);
    let required = |q: usize, lead: f64, x: f64| {
        let lead = lead.max(x / tau - q as f64);
        (tau * (q as f64 + 2.0 + lead - budget) - x).max(h)
    };

    let mut lead = f64::NEG_INFINITY;
    let mut debt = 0.0;
    let mut planned = 0.0;
    for q in 0.. {
        let (t, mode) = b.last();
        let (x, next, stay) = if unstable(mode) {
            let x = planned;
            if x > horizon {
                break;
            }
            let d = debt + (1.0 - rho) * (x - t);
            let feasible =
                |m: SubsystemId| !unstable(m) || (unstable_ok && cap(d) >= required(q, lead, x));
            let next = walk.next(mode, x, feasible)?.ok_or_else(|| {
                Error::Infeasible(format!(
                    "unstable subsystem {mode} has no feasible successor at t = {x}"
                ))
            })?;
            let stay = if unstable(next) {
                let r = required(q, lead, x);
                r + walk.uniform() * (cap(d) - r)
            } else {
                0.0
            };
            (x, next, stay)
        } else {
            let lower = (tau * (q as f64 + 1.0 + lead - budget)).max(t + h);
            let Some(next) = walk.next(mode, lower, |m| !unstable(m) || unstable_ok)? else {
                break;
            };
            let mut x = lower + walk.uniform() * tau;
            let mut stay = 0.0;
            if unstable(next) {
                let mut found = false;
                for _ in 0..1000 {
                    let d = (debt - rho * (x - t)).max(0.0);
                    let r = required(q, lead, x);
                    if cap(d) >= r {
                        stay = r + walk.uniform() * (cap(d) - r);
                        found = true;
                        break;
                    }
                    x += ((r - cap(d)) * (1.0 - rho) / rho).max(h);
                }
                if !found {
                    return Err(Error::Infeasible(format!(
                        "no admissible unstable stay after t = {t}"
                    )));
                }
            }
            (x, next, stay)
        };
        if x > horizon {
            break;
        }
        debt = if unstable(mode) {
            debt + (1.0 - rho) * (x - t)
        } else {
            (debt - rho * (x - t)).max(0.0)
        };
        b.push(x, next);
        lead = lead.max(x / tau - q as f64);
        planned = x + stay;
    }
    b.finish(horizon)
}

/// Random walk with holds uniform in `[mean_hold / 2, 3 mean_hold / 2]`.
pub fn gen_asymptotic(
    family: &SwitchedFamily,
    mean_hold: f64,
    horizon: f64,
    seed: u64,
) -> Result<SwitchingSignal> {
    positive("mean_hold", mean_hold)?;
    let mut walk = Walk::new(family, seed);
    let mut b = Builder::new(walk.initial(|_| true)?);
    if single_mode(family) {
        return b.finish(horizon);
    }
    loop {
        let (t, mode) = b.last();
        let x = t + mean_hold * (0.5 + walk.uniform());
        if x > horizon {
            break;
        }
        let next = walk.next(mode, x, |_| true)?.unwrap();
        b.push(x, next);
    }
    b.finish(horizon)
}

/// Switch `k` at the root of `k0 t - k0p √t = k`, so that
/// `N(0, t) = floor(max(0, k0 t - k0p √t))`. Modes follow a seeded walk.
pub fn gen_sqrt_growth(
    family: &SwitchedFamily,
    k0: f64,
    k0p: f64,
    horizon: f64,
    seed: u64,
) -> Result<SwitchingSignal> {
    positive("k0", k0)?;
    if !k0p.is_finite() {
        return Err(Error::InvalidParameter("k0p must be finite".into()));
    }
    let mut walk = Walk::new(family, seed);
    let mut b = Builder::new(walk.initial(|_| true)?);
    if single_mode(family) {
        return b.finish(horizon);
    }
    for k in 1u64.. {
        let r = (k0p + (k0p * k0p + 4.0 * k0 * k as f64).sqrt()) / (2.0 * k0);
        let x = r * r;
        if x > horizon {
            break;
        }
        let (t, mode) = b.last();
        if x - t < MIN_HOLDING {
            return Err(Error::Zeno {
                at: t,
                holding: x - t,
            });
        }
        let next = walk.next(mode, x, |_| true)?.unwrap();
        b.push(x, next);
    }
    b.finish(horizon)
}

/// Dyadic burst signal on modes 1 and 2: one switch at `ε`, then `2^n`
/// switches right after each `t = 2^n`, `n = 0..=n_max`; horizon `2^(n_max+1)`.
///
/// Within a burst the spacing is `ε / 2^n`, widened when that would fall
/// below the holding-time guard or within a few ulps of `2^(n+1)`.
pub fn gen_burst(epsilon: f64, n_max: u32) -> Result<SwitchingSignal> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), found {epsilon}"
        )));
    }
    if n_max > MAX_BURST_EXPONENT {
        return Err(Error::InvalidParameter(format!(
            "n_max must be at most {MAX_BURST_EXPONENT}, found {n_max}"
        )));
    }
    let total = 1usize << (n_max + 1);
    let mut taus = Vec::with_capacity(total + 1);
    taus.push(0.0);
    taus.push(epsilon);
    for n in 0..=n_max {
        let start = (1u64 << n) as f64;
        let ulp = (2.0 * start) * f64::EPSILON;
        let spacing = (epsilon / start).max(2.0 * MIN_HOLDING).max(8.0 * ulp);
        let count = 1usize << n;
        if spacing * count as f64 >= start {
            return Err(Error::Infeasible(format!(
                "burst {n} does not fit before {}",
                2.0 * start
            )));
        }
        taus.extend((1..=count).map(|k| start + k as f64 * spacing));
    }
    let modes = (0..taus.len()).map(|k| sid(1 + (k % 2) as u32)).collect();
    SwitchingSignal::new(taus, modes, (1u64 << (n_max + 1)) as f64)
}

/// Period of the example signal and the hold per visit of each mode.
pub const EXAMPLE_PERIOD: f64 = 41.58;
const EXAMPLE_CYCLE: [(u32, f64); 6] = [
    (1, 9.3555),
    (2, 5.1975),
    (3, 6.237),
    (1, 9.3555),
    (3, 6.237),
    (2, 5.1975),
];

/// The three-mode example: family, its published rates and comparison
/// constants, their uniform reduction, and a periodic signal.
#[derive(Debug, Clone)]
pub struct PaperExample {
    pub family: SwitchedFamily,
    pub certs: CertificateSet,
    /// Every stable rate replaced by `λ_s`, unstable by `-λ_u`, every `μ` by the maximum.
    pub uniform: CertificateSet,
    pub signal: SwitchingSignal,
}

pub fn example_family() -> SwitchedFamily {
    let m = |v: [f64; 4]| DMatrix::from_row_slice(2, 2, &v);
    SwitchedFamily::linear(
        2,
        vec![
            (StabilityClass::Stable, m([-0.3, 1.0, -0.9, -1.2])),
            (StabilityClass::Unstable, m([0.2, 0.1, 0.3, 0.0])),
            (StabilityClass::Unstable, m([0.1, 0.2, 0.3, 0.1])),
        ],
        [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)],
    )
    .expect("example family is valid")
}

/// Published rates and comparison constants for [`example_family`], realized
/// with `P_1 = [[0.8, 0.25], [0.25, 0.75]]` and `P_2 = P_3 = I`.
pub fn example_certificates() -> CertificateSet {
    let p1 = DMatrix::from_row_slice(2, 2, &[0.8, 0.25, 0.25, 0.75]);
    let eye = DMatrix::identity(2, 2);
    let certs = vec![
        QuadraticCertificate {
            id: sid(1),
            p: p1,
            lambda: 0.9389,
        },
        QuadraticCertificate {
            id: sid(2),
            p: eye.clone(),
            lambda: -0.7301,
        },
        QuadraticCertificate {
            id: sid(3),
            p: eye,
            lambda: -0.7206,
        },
    ];
    let mu = BTreeMap::from([
        ((sid(1), sid(2)), 2.0611),
        ((sid(1), sid(3)), 2.0611),
        ((sid(2), sid(1)), 1.0651),
        ((sid(3), sid(1)), 1.0651),
        ((sid(2), sid(3)), 1.0),
        ((sid(3), sid(2)), 1.0),
    ]);
    CertificateSet::new(certs, mu).expect("example certificates are valid")
}

/// Periodic walk `1 → 2 → 3 → 1 → 3 → 2 → 1` with period 41.58 s, occupying
/// modes 1, 2, 3 for fractions 0.45, 0.25, 0.30 and using each edge once per period.
pub fn gen_paper_example(horizon: f64) -> Result<PaperExample> {
    if !(horizon >= EXAMPLE_PERIOD) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "horizon must cover at least one period ({EXAMPLE_PERIOD} s), found {horizon}"
        )));
    }
    let mut offsets = [0.0; 6];
    for k in 1..6 {
        offsets[k] = offsets[k - 1] + EXAMPLE_CYCLE[k - 1].1;
    }
    let mut taus = Vec::new();
    let mut modes = Vec::new();
    'outer: for period in 0u64.. {
        let base = period as f64 * EXAMPLE_PERIOD;
        for (k, &(mode, _)) in EXAMPLE_CYCLE.iter().enumerate() {
            let t = base + offsets[k];
            if t > horizon {
                break 'outer;
            }
            taus.push(t);
            modes.push(sid(mode));
        }
    }
    let family = example_family();
    let certs = example_certificates();
    let uniform = certs.uniformized(family.partition())?;
    Ok(PaperExample {
        signal: SwitchingSignal::new(taus, modes, horizon)?,
        family,
        certs,
        uniform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{check_unified, EstimatorOptions};

    fn complete(n: usize) -> SwitchedFamily {
        let subs = (0..n)
            .map(|k| {
                (
                    StabilityClass::Stable,
                    DMatrix::identity(2, 2) * -(1.0 + k as f64),
                )
            })
            .collect();
        let edges: Vec<(u32, u32)> = (1..=n as u32)
            .flat_map(|i| (1..=n as u32).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        SwitchedFamily::linear(2, subs, edges).unwrap()
    }

    #[test]
    fn adt_round_trip() {
        let f = complete(3);
        for seed in 0..20 {
            let s = gen_adt(&f, 2.0, 5.0, 0.9, 500.0, seed).unwrap();
            let r = check_adt(&s, 2.0, 5.0).unwrap();
            assert!(r.margin >= 0.1 * 2.0 - 1e-9, "{r:?}");
            s.check_admissible(f.graph()).unwrap();
        }
        let a = gen_adt(&f, 2.0, 5.0, 1.0, 500.0, 7).unwrap();
        let b = gen_adt(&f, 2.0, 5.0, 1.0, 500.0, 7).unwrap();
        assert_eq!(a, b);
        assert!(gen_adt(&f, 1.0, 1e4, 1.0, 500.0, 1).unwrap().switch_count() <= 1);
    }

    #[test]
    fn mdadt_round_trip() {
        let f = complete(2);
        for seed in 0..20 {
            let s = gen_mdadt(&f, &[1.5, 2.0], &[2.0, 3.0], 0.9, 200.0, seed).unwrap();
            assert!(check_mdadt(&s, &[1.5, 2.0], &[2.0, 3.0]).unwrap().satisfied);
            assert!(s.switch_count() > 10);
        }
        let single = complete(1);
        assert_eq!(
            gen_mdadt(&single, &[1.0], &[1.0], 0.9, 50.0, 0)
                .unwrap()
                .switch_count(),
            0
        );
    }

    #[test]
    fn mixed_round_trip_on_example() {
        let ex = gen_paper_example(EXAMPLE_PERIOD).unwrap();
        let p = MixedParams {
            n0: 2.0,
            tau_a: 40.0,
            t0: 10.0,
            rho: 0.2,
            safety: 0.9,
        };
        for seed in 0..10 {
            let s = gen_mixed(&ex.family, ex.family.partition(), &p, 4000.0, seed).unwrap();
            assert!(check_adt(&s, p.n0, p.tau_a).unwrap().satisfied);
            assert!(
                check_unstable_budget(&s, ex.family.partition(), p.t0, p.rho)
                    .unwrap()
                    .satisfied
            );
            assert!(s
                .modes()
                .iter()
                .any(|m| ex.family.partition().is_unstable(*m)));
        }
        let zero = MixedParams { rho: 0.0, ..p };
        let s = gen_mixed(&ex.family, ex.family.partition(), &zero, 4000.0, 3).unwrap();
        assert!(s
            .modes()
            .iter()
            .all(|m| !ex.family.partition().is_unstable(*m)));
        let bad = MixedParams { rho: 1.2, ..p };
        assert!(gen_mixed(&ex.family, ex.family.partition(), &bad, 4000.0, 3).is_err());
    }

    #[test]
    fn sqrt_growth_count() {
        let f = complete(2);
        let s = gen_sqrt_growth(&f, 1.0, 2.0, 400.0, 1).unwrap();
        let n = s.switch_count();
        assert!((359..=361).contains(&n), "{n}");
        let spec = GeneratorSpec {
            class: GeneratorClass::SqrtGrowth { k0: 1.0, k0p: 2.0 },
            horizon: Some(400.0),
            seed: 1,
        };
        assert!(verify_generated(&spec, &s, f.partition()).unwrap()[0].satisfied);
    }

    #[test]
    fn burst_counts() {
        let s = gen_burst(1e-3, 6).unwrap();
        assert_eq!(s.switch_count(), 128);
        assert_eq!(s.horizon(), 128.0);
        assert!(gen_burst(1e-3, 25).is_err());
    }

    #[test]
    fn example_signal_statistics() {
        let ex = gen_paper_example(100.0 * EXAMPLE_PERIOD).unwrap();
        let st = ex
            .signal
            .stats_at(ex.signal.horizon(), ex.family.graph())
            .unwrap();
        assert!((st.eta[1] - 0.25).abs() < 1e-3);
        for (_, r) in st.rho.unwrap() {
            assert!((r - 1.0 / 6.0).abs() < 1e-2);
        }
        let r = check_unified(
            &ex.signal,
            &ex.uniform,
            ex.family.partition(),
            ex.family.graph(),
            &EstimatorOptions::default(),
        )
        .unwrap();
        assert!(!r.satisfied);
        assert!((r.margin + 0.0834).abs() < 2e-3, "{}", r.margin);
    }

    #[test]
    fn spec_json() {
        let s: GeneratorSpec =
            serde_json::from_str(r#"{"class":"adt","N0":2,"tau_a":5,"horizon":500,"seed":7}"#)
                .unwrap();
        assert_eq!(
            s.class,
            GeneratorClass::Adt {
                n0: 2.0,
                tau_a: 5.0,
                safety: 0.9
            }
        );
        let b: GeneratorSpec =
            serde_json::from_str(r#"{"class":"burst","epsilon":0.001,"n_max":4}"#).unwrap();
        assert_eq!(generate(&b, None).unwrap().switch_count(), 32);
    }
}

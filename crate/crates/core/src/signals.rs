//! Piecewise-constant switching signals and their statistics.
//!
//! All interval quantities use half-open intervals `]s, t]`: a switch at `τ`
//! belongs to `]s, t]` iff `s < τ <= t`. Mode `σ(τ_i)` is active on
//! `[τ_i, τ_{i+1})`; for durations the segment is measured as `]τ_i, τ_{i+1}]`,
//! which has the same length.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::family::{Partition, SubsystemId, TransitionGraph};

/// Smallest admissible holding time between consecutive switches (seconds).
pub const MIN_HOLDING: f64 = 1e-9;

/// `τ_0 = 0 < τ_1 < … < τ_M <= T` with the mode taken at each instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSignal {
    taus: Vec<f64>,
    modes: Vec<SubsystemId>,
    horizon: f64,
}

/// A maximal constant piece `[start, end)` of the signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub mode: SubsystemId,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Length of `]s, t] ∩ ]start, end]`.
    pub fn overlap(&self, s: f64, t: f64) -> f64 {
        (self.end.min(t) - self.start.max(s)).max(0.0)
    }
}

impl SwitchingSignal {
    pub fn new(taus: Vec<f64>, modes: Vec<SubsystemId>, horizon: f64) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidSignal(
                "at least one instant is required".into(),
            ));
        }
        if taus.len() != modes.len() {
            return Err(Error::InvalidSignal(format!(
                "{} instants but {} modes",
                taus.len(),
                modes.len()
            )));
        }
        if taus[0] != 0.0 {
            return Err(Error::InvalidSignal(format!(
                "first instant must be 0, found {}",
                taus[0]
            )));
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::InvalidSignal(format!(
                "horizon must be positive and finite, found {horizon}"
            )));
        }
        for w in taus.windows(2) {
            if !w[1].is_finite() {
                return Err(Error::InvalidSignal("non-finite switching instant".into()));
            }
            let hold = w[1] - w[0];
            if hold < MIN_HOLDING {
                return Err(Error::Zeno {
                    at: w[0],
                    holding: hold,
                });
            }
        }
        for (k, w) in modes.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(Error::InvalidSignal(format!(
                    "consecutive modes at instants {} and {} are both {}",
                    k,
                    k + 1,
                    w[0]
                )));
            }
        }
        let last = *taus.last().unwrap();
        if horizon < last {
            return Err(Error::InvalidSignal(format!(
                "horizon {horizon} precedes last switch {last}"
            )));
        }
        Ok(Self {
            taus,
            modes,
            horizon,
        })
    }

    /// Signal that never switches.
    pub fn constant(mode: SubsystemId, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![mode], horizon)
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn modes(&self) -> &[SubsystemId] {
        &self.modes
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `M`, the number of switches up to the horizon.
    pub fn switch_count(&self) -> usize {
        self.taus.len() - 1
    }

    pub fn initial_mode(&self) -> SubsystemId {
        self.modes[0]
    }

    pub fn max_mode(&self) -> SubsystemId {
        *self.modes.iter().max().unwrap()
    }

    /// End of segment `i` (the horizon for the last one).
    pub fn segment_end(&self, i: usize) -> f64 {
        self.taus.get(i + 1).copied().unwrap_or(self.horizon)
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.taus.len()).map(move |i| Segment {
            start: self.taus[i],
            end: self.segment_end(i),
            mode: self.modes[i],
        })
    }

    /// `(τ_i, σ(τ_{i-1}), σ(τ_i))` for every switch.
    pub fn transitions(&self) -> impl Iterator<Item = (f64, SubsystemId, SubsystemId)> + '_ {
        (1..self.taus.len()).map(move |i| (self.taus[i], self.modes[i - 1], self.modes[i]))
    }

    /// Index of the segment active at `t` (right-continuous).
    pub fn segment_index_at(&self, t: f64) -> usize {
        self.taus.partition_point(|&x| x <= t).saturating_sub(1)
    }

    pub fn mode_at(&self, t: f64) -> SubsystemId {
        self.modes[self.segment_index_at(t)]
    }

    /// `S_i = τ_{i+1} - τ_i`, the last entry being `T - τ_M`.
    pub fn holding_times(&self) -> Vec<f64> {
        self.segments().map(|s| s.len()).collect()
    }

    fn check_interval(&self, s: f64, t: f64) -> Result<()> {
        if !(s >= 0.0 && s <= t && t <= self.horizon) {
            return Err(Error::InvalidInterval { s, t });
        }
        Ok(())
    }

    /// `N(s, t)`: switching instants in `]s, t]`.
    pub fn count_switches(&self, s: f64, t: f64) -> Result<usize> {
        self.check_interval(s, t)?;
        Ok(self.switches_upto(t) - self.switches_upto(s))
    }

    /// `N(0, t)`.
    pub fn switches_upto(&self, t: f64) -> usize {
        self.taus.partition_point(|&x| x <= t).saturating_sub(1)
    }

    /// `T_j(s, t)`: time mode `j` is active within `]s, t]`.
    pub fn activation_time(&self, j: SubsystemId, s: f64, t: f64) -> Result<f64> {
        self.check_interval(s, t)?;
        Ok(self
            .overlapping(s, t)
            .filter(|seg| seg.mode == j)
            .map(|seg| seg.overlap(s, t))
            .sum())
    }

    /// Segments intersecting `]s, t]`.
    fn overlapping(&self, s: f64, t: f64) -> impl Iterator<Item = Segment> + '_ {
        let first = self.segment_index_at(s);
        let last = self.segment_index_at(t);
        (first..=last).map(move |i| Segment {
            start: self.taus[i],
            end: self.segment_end(i),
            mode: self.modes[i],
        })
    }

    /// `(T^S(s, t), T^U(s, t))`; time in modes outside `P_U` counts as stable.
    pub fn stable_unstable_durations(
        &self,
        partition: &Partition,
        s: f64,
        t: f64,
    ) -> Result<(f64, f64)> {
        self.check_interval(s, t)?;
        let unstable: f64 = self
            .overlapping(s, t)
            .filter(|seg| partition.is_unstable(seg.mode))
            .map(|seg| seg.overlap(s, t))
            .sum();
        Ok(((t - s) - unstable, unstable))
    }

    /// Checks every realized transition against the graph.
    pub fn check_admissible(&self, graph: &TransitionGraph) -> Result<()> {
        for &m in &self.modes {
            if !graph.is_valid_vertex(m) {
                return Err(Error::UnknownSubsystem(m));
            }
        }
        for (at, from, to) in self.transitions() {
            if !graph.contains(from, to) {
                return Err(Error::InadmissibleTransition { from, to, at });
            }
        }
        Ok(())
    }

    /// Statistics at a single time.
    pub fn stats_at(&self, t: f64, graph: &TransitionGraph) -> Result<SignalStats> {
        Ok(self.stats_series(&[t], graph)?.pop().unwrap())
    }

    /// Statistics at each of `times` (must be non-decreasing, in `]0, T]`),
    /// computed in one sweep over the signal.
    pub fn stats_series(&self, times: &[f64], graph: &TransitionGraph) -> Result<Vec<SignalStats>> {
        self.check_admissible(graph)?;
        let mut sweep = Sweep::new(self, graph.vertex_count());
        let mut out = Vec::with_capacity(times.len());
        let mut prev = 0.0;
        for &t in times {
            if !(t > 0.0 && t <= self.horizon) || t < prev {
                return Err(Error::InvalidInterval { s: 0.0, t });
            }
            prev = t;
            sweep.advance_to(t);
            out.push(sweep.stats(t, graph));
        }
        Ok(out)
    }

    /// `(t - τ_{N(0,t)}) / t` and whether the mode active at `t` is unstable.
    pub fn tail_ratio(&self, t: f64, partition: &Partition) -> Result<TailRatio> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(Error::InvalidInterval { s: 0.0, t });
        }
        let k = self.segment_index_at(t);
        let last = self.taus[k];
        Ok(TailRatio {
            t,
            last_switch: last,
            ratio: (t - last) / t,
            last_mode_unstable: partition.is_unstable(self.modes[k]),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRatio {
    pub t: f64,
    pub last_switch: f64,
    pub ratio: f64,
    pub last_mode_unstable: bool,
}

/// `N`, `N_kℓ`, `T_j` and the derived densities at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalStats {
    pub t: f64,
    /// `N(0, t)`
    pub switches: usize,
    /// `N_kℓ(0, t)` for every realized edge.
    pub transitions: BTreeMap<(SubsystemId, SubsystemId), usize>,
    /// `T_j(0, t)` indexed by `j - 1`.
    pub durations: Vec<f64>,
    /// `ν(t) = N(0, t) / t`
    pub nu: f64,
    /// `ρ_kℓ(t) = N_kℓ(0, t) / N(0, t)`; `None` when no switch has happened,
    /// otherwise one entry per edge of the graph.
    pub rho: Option<BTreeMap<(SubsystemId, SubsystemId), f64>>,
    /// `η_j(t) = T_j(0, t) / t` indexed by `j - 1`.
    pub eta: Vec<f64>,
}

impl SignalStats {
    pub fn eta_of(&self, j: SubsystemId) -> f64 {
        self.eta.get(j.index()).copied().unwrap_or(0.0)
    }

    pub fn rho_of(&self, k: SubsystemId, l: SubsystemId) -> Option<f64> {
        self.rho
            .as_ref()
            .map(|r| r.get(&(k, l)).copied().unwrap_or(0.0))
    }
}

/// Forward cursor accumulating per-mode durations and transition counts.
pub(crate) struct Sweep<'a> {
    signal: &'a SwitchingSignal,
    seg: usize,
    acc: Vec<f64>,
    transitions: BTreeMap<(SubsystemId, SubsystemId), usize>,
}

impl<'a> Sweep<'a> {
    pub(crate) fn new(signal: &'a SwitchingSignal, n_modes: usize) -> Self {
        let n = n_modes.max(signal.max_mode().get() as usize);
        Self {
            signal,
            seg: 0,
            acc: vec![0.0; n],
            transitions: BTreeMap::new(),
        }
    }

    /// Moves the cursor to the segment active at `t`; times must not decrease.
    pub(crate) fn advance_to(&mut self, t: f64) {
        let sig = self.signal;
        while self.seg + 1 < sig.taus.len() && sig.taus[self.seg + 1] <= t {
            let m = sig.modes[self.seg];
            self.acc[m.index()] += sig.taus[self.seg + 1] - sig.taus[self.seg];
            *self
                .transitions
                .entry((m, sig.modes[self.seg + 1]))
                .or_insert(0) += 1;
            self.seg += 1;
        }
    }

    pub(crate) fn switches(&self) -> usize {
        self.seg
    }

    pub(crate) fn durations(&self, t: f64) -> Vec<f64> {
        let mut d = self.acc.clone();
        let sig = self.signal;
        d[sig.modes[self.seg].index()] += t - sig.taus[self.seg];
        d
    }

    fn stats(&self, t: f64, graph: &TransitionGraph) -> SignalStats {
        let n = self.switches();
        let durations = self.durations(t);
        let eta = durations.iter().map(|d| d / t).collect();
        let rho = (n > 0).then(|| {
            graph
                .edges()
                .map(|e| {
                    (
                        e,
                        self.transitions.get(&e).copied().unwrap_or(0) as f64 / n as f64,
                    )
                })
                .collect()
        });
        SignalStats {
            t,
            switches: n,
            transitions: self.transitions.clone(),
            durations,
            nu: n as f64 / t,
            rho,
            eta,
        }
    }
}

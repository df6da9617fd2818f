use thiserror::Error;

use crate::criteria::CriterionReport;
use crate::family::{SubsystemId, Violation};
use crate::simulator::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subsystem id {0}: ids are 1-based")]
    InvalidId(i64),

    #[error("unknown subsystem {0}")]
    UnknownSubsystem(SubsystemId),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("not Hurwitz: spectral abscissa {abscissa:e} is not below -1e-10")]
    NotHurwitz { abscissa: f64 },

    #[error("{0} is not symmetric")]
    NotSymmetric(&'static str),

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("linear system for the Lyapunov equation is singular")]
    Singular,

    #[error("invalid family: {}", join(.0))]
    InvalidFamily(Vec<Violation>),

    #[error("invalid certificate set: {}", join(.0))]
    InvalidCertificates(Vec<Violation>),

    #[error("invalid switching signal: {0}")]
    InvalidSignal(String),

    #[error("holding time {holding:e} s at t = {at} is below the 1e-9 s Zeno guard")]
    Zeno { at: f64, holding: f64 },

    #[error("invalid interval ]{s}, {t}]")]
    InvalidInterval { s: f64, t: f64 },

    #[error("inadmissible transition ({from}, {to}) at t = {at}")]
    InadmissibleTransition {
        from: SubsystemId,
        to: SubsystemId,
        at: f64,
    },

    #[error("no comparison constant for realized transition ({from}, {to})")]
    MissingMu { from: SubsystemId, to: SubsystemId },

    #[error("no certificate for subsystem {0}")]
    MissingCertificate(SubsystemId),

    #[error("no stable subsystem")]
    NoStableSubsystem,

    #[error("mode-dependent dwell thresholds require all subsystems stable (subsystem {0} has rate <= 0)")]
    RequiresAllStable(SubsystemId),

    #[error("denominator non-positive: rho = {rho} must lie below {limit}")]
    DenominatorNonPositive { rho: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ADT not satisfied (margin {margin})")]
    AdtNotSatisfied { margin: f64 },

    #[error("cannot extend walk: subsystem {mode} has no admissible successor at t = {at}")]
    CannotExtendWalk { mode: SubsystemId, at: f64 },

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),

    #[error("signal does not belong to the claimed class: {}", .0.criterion)]
    ClassNotSatisfied(Box<CriterionReport>),

    #[error("subsystem {0} is not linear")]
    NotLinear(SubsystemId),

    #[error("divergence at t = {t}")]
    Divergence { t: f64, partial: Box<Trajectory> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

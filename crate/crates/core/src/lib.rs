//! Stability analysis for continuous-time switched systems `ẋ = f_σ(t)(x)`.
//!
//! A [`family::SwitchedFamily`] holds the subsystems, the stable/unstable
//! partition and the admissible-transition graph. [`certificates`] builds
//! quadratic Lyapunov-like functions with their rates and comparison
//! constants. [`signals`] computes switching statistics, [`criteria`] checks
//! each stabilizing class, [`generators`] synthesizes signals inside each class
//! and [`simulator`] integrates trajectories and checks the resulting bounds.

pub mod certificates;
pub mod criteria;
pub mod error;
pub mod family;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod reproduce;
pub mod signals;
pub mod simulator;

pub use certificates::{CertificateSet, QuadraticCertificate, UniformConstants};
pub use criteria::{CriterionReport, EstimatorOptions};
pub use error::{Error, Result};
pub use family::{Partition, StabilityClass, SubsystemId, SwitchedFamily, TransitionGraph};
pub use signals::SwitchingSignal;
pub use simulator::Trajectory;

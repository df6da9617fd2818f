//! Numerical witness that signals inside a stabilizing class satisfy the
//! unified condition. This exhibits the implication on one signal; it proves
//! nothing.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    adt_threshold, check_adt, check_asymptotic, check_dwell_time, check_mdadt, check_unified,
    check_unstable_budget, mdadt_thresholds, mixed_adt_threshold, CriterionReport,
    EstimatorOptions,
};
use crate::certificates::{uniform_constants, CertificateSet};
use crate::error::{Error, Result};
use crate::family::{Partition, TransitionGraph};
use crate::signals::SwitchingSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ClassParams {
    Dwell {
        tau_d: f64,
    },
    Adt {
        #[serde(rename = "N0")]
        n0: f64,
        tau_a: f64,
    },
    Mdadt {
        #[serde(rename = "N0")]
        n0: Vec<f64>,
        tau_a: Vec<f64>,
    },
    Mixed {
        #[serde(rename = "N0")]
        n0: f64,
        tau_a: f64,
        #[serde(rename = "T0")]
        t0: f64,
        rho: f64,
    },
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicationReport {
    /// Membership checks for the claimed class.
    pub class_checks: Vec<CriterionReport>,
    /// Threshold the class parameters were compared against, if any.
    pub threshold: Value,
    pub unified: CriterionReport,
    /// The unified estimate came out negative.
    pub implication_holds: bool,
}

fn require_all_stable(partition: &Partition) -> Result<()> {
    match partition.unstable.first() {
        Some(&j) => Err(Error::RequiresAllStable(j)),
        None => Ok(()),
    }
}

fn above(name: &str, value: f64, threshold: f64) -> Result<()> {
    if value > threshold {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {value} is not above the threshold {threshold}"
        )))
    }
}

pub fn implication_report(
    signal: &SwitchingSignal,
    class: &ClassParams,
    certs: &CertificateSet,
    partition: &Partition,
    graph: &TransitionGraph,
    opts: &EstimatorOptions,
) -> Result<ImplicationReport> {
    let (checks, threshold) = match class {
        ClassParams::Dwell { tau_d } => {
            require_all_stable(partition)?;
            let u = uniform_constants(certs, partition)?;
            let thr = adt_threshold(u.mu, u.lambda_s)?;
            above("tau_d", *tau_d, thr)?;
            (
                vec![check_dwell_time(signal, *tau_d)?],
                json!({ "tau_a": thr }),
            )
        }
        ClassParams::Adt { n0, tau_a } => {
            require_all_stable(partition)?;
            let u = uniform_constants(certs, partition)?;
            let thr = adt_threshold(u.mu, u.lambda_s)?;
            above("tau_a", *tau_a, thr)?;
            (
                vec![check_adt(signal, *n0, *tau_a)?],
                json!({ "tau_a": thr }),
            )
        }
        ClassParams::Mdadt { n0, tau_a } => {
            let thr = mdadt_thresholds(certs, graph)?;
            if thr.len() != tau_a.len() {
                return Err(Error::Dimension {
                    what: "mdadt parameters",
                    expected: thr.len(),
                    got: tau_a.len(),
                });
            }
            for (k, (&t, &h)) in tau_a.iter().zip(&thr).enumerate() {
                above(&format!("tau_a[{}]", k + 1), t, h)?;
            }
            (
                vec![check_mdadt(signal, n0, tau_a)?],
                json!({ "tau_a": thr }),
            )
        }
        ClassParams::Mixed { n0, tau_a, t0, rho } => {
            let u = uniform_constants(certs, partition)?;
            let thr = mixed_adt_threshold(&u, *rho)?;
            above("tau_a", *tau_a, thr)?;
            (
                vec![
                    check_adt(signal, *n0, *tau_a)?,
                    check_unstable_budget(signal, partition, *t0, *rho)?,
                ],
                json!({ "tau_a": thr }),
            )
        }
        ClassParams::Asymptotic => (
            vec![check_asymptotic(signal, certs, partition, graph, opts)?],
            Value::Null,
        ),
    };
    if let Some(failed) = checks.iter().find(|r| !r.satisfied) {
        return Err(Error::ClassNotSatisfied(Box::new(failed.clone())));
    }
    let unified = check_unified(signal, certs, partition, graph, opts)?;
    Ok(ImplicationReport {
        class_checks: checks,
        threshold,
        implication_holds: unified.satisfied,
        unified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::QuadraticCertificate;
    use crate::family::sid;
    use nalgebra::DMatrix;
    use std::collections::BTreeMap;

    fn stable_pair() -> CertificateSet {
        let certs = (1..=2)
            .map(|i| QuadraticCertificate {
                id: sid(i),
                p: DMatrix::identity(1, 1),
                lambda: 1.0,
            })
            .collect();
        let mu = BTreeMap::from([((sid(1), sid(2)), 2.0), ((sid(2), sid(1)), 2.0)]);
        CertificateSet::new(certs, mu).unwrap()
    }

    #[test]
    fn dwell_signal_above_threshold_passes_unified() {
        let taus: Vec<f64> = (0..50).map(|k| k as f64 * 2.0).collect();
        let modes = (0..50).map(|k| sid(1 + (k % 2) as u32)).collect();
        let s = SwitchingSignal::new(taus, modes, 100.0).unwrap();
        let r = implication_report(
            &s,
            &ClassParams::Dwell { tau_d: 2.0 },
            &stable_pair(),
            &Partition::all_stable(2),
            &TransitionGraph::complete(2),
            &EstimatorOptions::default(),
        )
        .unwrap();
        assert!(r.implication_holds);
    }

    #[test]
    fn class_failure_is_an_error() {
        let s = SwitchingSignal::new(vec![0.0, 1.0], vec![sid(1), sid(2)], 4.0).unwrap();
        let r = implication_report(
            &s,
            &ClassParams::Dwell { tau_d: 3.0 },
            &stable_pair(),
            &Partition::all_stable(2),
            &TransitionGraph::complete(2),
            &EstimatorOptions::default(),
        );
        assert!(matches!(r, Err(Error::ClassNotSatisfied(_))));
    }

    #[test]
    fn params_round_trip() {
        let p = ClassParams::Mixed {
            n0: 2.0,
            tau_a: 40.0,
            t0: 1.0,
            rho: 0.3,
        };
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"class\":\"mixed\""));
        assert_eq!(serde_json::from_str::<ClassParams>(&s).unwrap(), p);
    }
}

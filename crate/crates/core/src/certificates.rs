//! Quadratic Lyapunov-like certificates `V_i(x) = xᵀ P_i x`, their rates and
//! the comparison constants between neighbouring subsystems.
//!
//! Stable linear subsystems get `P` from the Lyapunov equation `AᵀP + PA + Q = 0`
//! and the rate `λ_min(Q) / λ_max(P)`. Unstable ones get `P = I` and the
//! matrix-measure rate `-λ_max(A + Aᵀ)`, which is always valid. Comparison
//! constants are the largest eigenvalue of the pencil `(P_j, P_i)`, clamped
//! below at 1.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{Partition, StabilityClass, SubsystemId, SwitchedFamily, Violation};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCertificate {
    pub id: SubsystemId,
    pub p: DMatrix<f64>,
    /// Positive for stable subsystems, non-positive for unstable ones.
    pub lambda: f64,
}

impl QuadraticCertificate {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        linalg::quad_form(&self.p, x)
    }
}

/// One certificate per subsystem plus `μ_ij` for every admissible edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSet {
    certs: Vec<QuadraticCertificate>,
    mu: BTreeMap<(SubsystemId, SubsystemId), f64>,
}

impl CertificateSet {
    /// Checks: ids are `1..N` in order, every `P` symmetric positive definite of
    /// a common dimension, every `λ` finite and every `μ >= 1`.
    pub fn new(
        certs: Vec<QuadraticCertificate>,
        mu: BTreeMap<(SubsystemId, SubsystemId), f64>,
    ) -> Result<Self> {
        let mut v = Vec::new();
        let d = certs.first().map(|c| c.p.nrows()).unwrap_or(0);
        for (k, c) in certs.iter().enumerate() {
            let field = format!("certs[{k}]");
            if c.id.index() != k {
                v.push(Violation::new(
                    format!("{field}.id"),
                    format!("expected id {}, found {}", k + 1, c.id),
                ));
            }
            if c.p.nrows() != d || c.p.ncols() != d {
                v.push(Violation::new(
                    format!("{field}.P"),
                    format!("expected {d}x{d}"),
                ));
            } else if let Err(e) = linalg::ensure_spd(&c.p, "P") {
                v.push(Violation::new(format!("{field}.P"), e.to_string()));
            }
            if !c.lambda.is_finite() {
                v.push(Violation::new(format!("{field}.lambda"), "non-finite rate"));
            }
        }
        for (&(i, j), &m) in &mu {
            let field = format!("mu[({i}, {j})]");
            if !(m >= 1.0) || !m.is_finite() {
                v.push(Violation::new(
                    &field,
                    format!("comparison constant {m} must be >= 1"),
                ));
            }
            if i == j {
                v.push(Violation::new(&field, "self-loop"));
            }
            if i.index() >= certs.len() || j.index() >= certs.len() {
                v.push(Violation::new(&field, "unknown subsystem"));
            }
        }
        if v.is_empty() {
            Ok(Self { certs, mu })
        } else {
            Err(Error::InvalidCertificates(v))
        }
    }

    pub fn len(&self) -> usize {
        self.certs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.certs.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.certs.first().map(|c| c.p.nrows()).unwrap_or(0)
    }

    pub fn certs(&self) -> &[QuadraticCertificate] {
        &self.certs
    }

    pub fn cert(&self, id: SubsystemId) -> Result<&QuadraticCertificate> {
        self.certs
            .get(id.index())
            .ok_or(Error::MissingCertificate(id))
    }

    pub fn lambda(&self, id: SubsystemId) -> Result<f64> {
        Ok(self.cert(id)?.lambda)
    }

    pub fn mu(&self, i: SubsystemId, j: SubsystemId) -> Option<f64> {
        self.mu.get(&(i, j)).copied()
    }

    pub fn mu_or_err(&self, i: SubsystemId, j: SubsystemId) -> Result<f64> {
        self.mu(i, j).ok_or(Error::MissingMu { from: i, to: j })
    }

    pub fn mu_map(&self) -> &BTreeMap<(SubsystemId, SubsystemId), f64> {
        &self.mu
    }

    /// Consistency with a family: one certificate per subsystem, matching
    /// dimension, a `μ` for every edge, and rate signs agreeing with the partition.
    pub fn check_against(&self, family: &SwitchedFamily) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.certs.len() != family.len() {
            v.push(Violation::new(
                "certs",
                format!(
                    "{} certificates for {} subsystems",
                    self.certs.len(),
                    family.len()
                ),
            ));
        }
        if !self.certs.is_empty() && self.dimension() != family.dimension() {
            v.push(Violation::new(
                "certs",
                format!(
                    "dimension {} differs from family dimension {}",
                    self.dimension(),
                    family.dimension()
                ),
            ));
        }
        for (i, j) in family.graph().edges() {
            if self.mu(i, j).is_none() {
                v.push(Violation::new(
                    "mu",
                    format!("missing entry for edge ({i}, {j})"),
                ));
            }
        }
        for c in &self.certs {
            let p = family.partition();
            if p.is_stable(c.id) && !(c.lambda > 0.0) {
                v.push(Violation::new(
                    "lambda",
                    format!("subsystem {} is stable but lambda = {}", c.id, c.lambda),
                ));
            }
            if p.is_unstable(c.id) && c.lambda > 0.0 {
                v.push(Violation::new(
                    "lambda",
                    format!("subsystem {} is unstable but lambda = {}", c.id, c.lambda),
                ));
            }
        }
        v
    }

    /// Replaces every rate and comparison constant by the uniform worst case:
    /// `λ_s` for stable subsystems, `-λ_u` for unstable ones and `μ` on every edge.
    /// The result is still a valid certificate set for the same family.
    pub fn uniformized(&self, partition: &Partition) -> Result<Self> {
        let u = uniform_constants(self, partition)?;
        let certs = self
            .certs
            .iter()
            .map(|c| QuadraticCertificate {
                id: c.id,
                p: c.p.clone(),
                lambda: if partition.is_unstable(c.id) {
                    -u.lambda_u
                } else {
                    u.lambda_s
                },
            })
            .collect();
        let mu = self.mu.keys().map(|&e| (e, u.mu)).collect();
        Self::new(certs, mu)
    }
}

/// `(λ_s, λ_u, μ)` reduction used by the uniform-constant tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformConstants {
    pub lambda_s: f64,
    pub lambda_u: f64,
    pub mu: f64,
}

pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = linalg::ensure_square(a, "A")?;
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension {
            what: "Q",
            expected: n,
            got: q.nrows(),
        });
    }
    linalg::ensure_spd(q, "Q")?;
    let abscissa = linalg::spectral_abscissa(a);
    if !(abscissa < -linalg::EIG_TOL) {
        return Err(Error::NotHurwitz { abscissa });
    }
    let p = linalg::lyapunov_kronecker(a, q)?;
    linalg::ensure_spd(&p, "P")?;
    Ok(p)
}

/// `λ_min(Q) / λ_max(P)`: along `ẋ = Ax`, `V̇ = -xᵀQx <= -λ V`.
pub fn rate_stable(a: &DMatrix<f64>, q: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    let n = linalg::ensure_square(a, "A")?;
    for (m, what) in [(q, "Q"), (p, "P")] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension {
                what,
                expected: n,
                got: m.nrows(),
            });
        }
        linalg::ensure_spd(m, what)?;
    }
    Ok(linalg::lambda_min(q) / linalg::lambda_max(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnstableRate {
    /// `-λ_max(A + Aᵀ)`, paired with `P = I`.
    pub lambda: f64,
    /// False when the rate is not strictly negative (e.g. skew-symmetric `A`).
    pub strictly_negative: bool,
}

pub fn rate_unstable(a: &DMatrix<f64>) -> Result<UnstableRate> {
    linalg::ensure_square(a, "A")?;
    let lambda = -linalg::lambda_max(&(a + a.transpose()));
    // -0.0 reads badly in reports
    let lambda = if lambda == 0.0 { 0.0 } else { lambda };
    Ok(UnstableRate {
        lambda,
        strictly_negative: lambda < 0.0,
    })
}

/// Smallest `μ >= 1` with `xᵀP_j x <= μ xᵀP_i x` for all `x`.
pub fn mu_pair(p_i: &DMatrix<f64>, p_j: &DMatrix<f64>) -> Result<f64> {
    linalg::ensure_spd(p_i, "P_i")?;
    linalg::ensure_spd(p_j, "P_j")?;
    if p_i.nrows() != p_j.nrows() {
        return Err(Error::Dimension {
            what: "P_j",
            expected: p_i.nrows(),
            got: p_j.nrows(),
        });
    }
    if p_i == p_j {
        return Ok(1.0);
    }
    Ok(linalg::pencil_max_eigenvalue(p_j, p_i)?.max(1.0))
}

/// Certificates for an all-linear family. `q` optionally gives one `Q` per
/// subsystem (identity otherwise); it is ignored for unstable subsystems.
pub fn build_certificates(
    family: &SwitchedFamily,
    q: Option<&[DMatrix<f64>]>,
) -> Result<CertificateSet> {
    let d = family.dimension();
    if let Some(q) = q {
        if q.len() != family.len() {
            return Err(Error::Dimension {
                what: "Q list",
                expected: family.len(),
                got: q.len(),
            });
        }
    }
    let mut certs = Vec::with_capacity(family.len());
    for s in family.subsystems() {
        let a = s.dynamics.as_linear().ok_or(Error::NotLinear(s.id))?;
        let cert = if family.partition().is_unstable(s.id) || s.class == StabilityClass::Unstable {
            QuadraticCertificate {
                id: s.id,
                p: DMatrix::identity(d, d),
                lambda: rate_unstable(a)?.lambda,
            }
        } else {
            let qi = q
                .map(|q| q[s.id.index()].clone())
                .unwrap_or_else(|| DMatrix::identity(d, d));
            let p = solve_lyapunov(a, &qi)?;
            let lambda = rate_stable(a, &qi, &p)?;
            QuadraticCertificate {
                id: s.id,
                p,
                lambda,
            }
        };
        certs.push(cert);
    }
    let mut mu = BTreeMap::new();
    for (i, j) in family.graph().edges() {
        mu.insert((i, j), mu_pair(&certs[i.index()].p, &certs[j.index()].p)?);
    }
    CertificateSet::new(certs, mu)
}

pub fn uniform_constants(set: &CertificateSet, partition: &Partition) -> Result<UniformConstants> {
    if partition.stable.is_empty() {
        return Err(Error::NoStableSubsystem);
    }
    let lambda_s = partition
        .stable
        .iter()
        .map(|&j| set.lambda(j).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let lambda_u = partition
        .unstable
        .iter()
        .map(|&k| set.lambda(k).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mu = set.mu.values().copied().fold(1.0, f64::max);
    Ok(UniformConstants {
        lambda_s,
        lambda_u,
        mu,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MuWitness {
    pub from: SubsystemId,
    pub to: SubsystemId,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayWitness {
    pub id: SubsystemId,
    pub t: f64,
    pub x: Vec<f64>,
}

/// Outcome of [`verify_certificate_sampled`]. Slacks are relative: the
/// comparison slack is `(μ V_i - V_j) / V_i`, the decay slack is
/// `(V(x) e^{-λt} - V(e^{At} x)) / (V(x) e^{-λt})`.
#[derive(Debug, Clone, Serialize)]
pub struct SampledCheck {
    pub samples: usize,
    pub worst_mu_slack: f64,
    pub mu_witness: Option<MuWitness>,
    pub worst_decay_slack: f64,
    pub decay_witness: Option<DecayWitness>,
}

impl SampledCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.worst_mu_slack >= -tol && self.worst_decay_slack >= -tol
    }
}

/// Samples random states and checks the comparison inequality on every edge
/// and, for linear subsystems, the decay bound against the exact flow
/// `e^{At} x` at random times in `[0, horizon]`.
pub fn verify_certificate_sampled(
    set: &CertificateSet,
    family: &SwitchedFamily,
    n_samples: usize,
    horizon: f64,
    seed: u64,
) -> Result<SampledCheck> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    let d = family.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SampledCheck {
        samples: n_samples,
        worst_mu_slack: f64::INFINITY,
        mu_witness: None,
        worst_decay_slack: f64::INFINITY,
        decay_witness: None,
    };
    for (i, j) in family.graph().edges() {
        let mu = set.mu_or_err(i, j)?;
        let (ci, cj) = (set.cert(i)?, set.cert(j)?);
        for _ in 0..n_samples {
            let x = random_state(&mut rng, d);
            let vi = ci.value(&x);
            if vi <= 0.0 {
                continue;
            }
            let slack = (mu * vi - cj.value(&x)) / vi;
            if slack < out.worst_mu_slack {
                out.worst_mu_slack = slack;
                out.mu_witness = Some(MuWitness {
                    from: i,
                    to: j,
                    x: x.iter().copied().collect(),
                });
            }
        }
    }
    for s in family.subsystems() {
        let Some(a) = s.dynamics.as_linear() else {
            continue;
        };
        let c = set.cert(s.id)?;
        for _ in 0..n_samples {
            let x = random_state(&mut rng, d);
            let t = horizon * rng.random::<f64>();
            let flow = (a * t).exp() * &x;
            let envelope = c.value(&x) * (-c.lambda * t).exp();
            if envelope <= 0.0 {
                continue;
            }
            let slack = (envelope - c.value(&flow)) / envelope;
            if slack < out.worst_decay_slack {
                out.worst_decay_slack = slack;
                out.decay_witness = Some(DecayWitness {
                    id: s.id,
                    t,
                    x: x.iter().copied().collect(),
                });
            }
        }
    }
    Ok(out)
}

/// Standard-normal random state in `R^d`.
pub fn random_state<R: Rng>(rng: &mut R, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::sid;

    fn m(r: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, r, v)
    }

    #[test]
    fn lyapunov_diagonal() {
        let p = solve_lyapunov(&m(2, &[-1.0, 0.0, 0.0, -2.0]), &DMatrix::identity(2, 2)).unwrap();
        assert!((p - m(2, &[0.5, 0.0, 0.0, 0.25])).amax() < 1e-14);
    }

    #[test]
    fn lyapunov_companion_matrix() {
        let a = m(2, &[0.0, 1.0, -2.0, -3.0]);
        let q = DMatrix::identity(2, 2);
        let p = solve_lyapunov(&a, &q).unwrap();
        // substituted by hand: AᵀP + PA = -I for this P
        let expected = m(2, &[1.25, 0.25, 0.25, 0.25]);
        assert!(linalg::lyapunov_residual(&a, &expected, &q) < 1e-14);
        assert!((&p - &expected).amax() < 1e-12);
        assert!(linalg::lyapunov_residual(&a, &p, &q) < 1e-10);
    }

    #[test]
    fn lyapunov_rejects_rotation_and_asymmetric_q() {
        let rot = m(2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(
            solve_lyapunov(&rot, &DMatrix::identity(2, 2)),
            Err(Error::NotHurwitz { .. })
        ));
        let a = -DMatrix::<f64>::identity(2, 2);
        assert!(solve_lyapunov(&a, &m(2, &[1.0, 0.3, 0.0, 1.0])).is_err());
    }

    #[test]
    fn stable_rates() {
        let a = m(2, &[-1.0, 0.0, 0.0, -2.0]);
        let q = DMatrix::identity(2, 2);
        let p = solve_lyapunov(&a, &q).unwrap();
        assert!((rate_stable(&a, &q, &p).unwrap() - 2.0).abs() < 1e-12);

        let a = m(2, &[0.0, 1.0, -2.0, -3.0]);
        let p = solve_lyapunov(&a, &q).unwrap();
        // λ_max(P) = (1.5 + √1.25) / 2
        let lmax = (1.5 + 1.25f64.sqrt()) / 2.0;
        let lam = rate_stable(&a, &q, &p).unwrap();
        assert!((lam - 1.0 / lmax).abs() < 1e-12);
        assert!((lam - 0.76393).abs() < 1e-5);

        let c = 3.7;
        let lam_scaled = rate_stable(&a, &(&q * c), &(&p * c)).unwrap();
        assert!((lam - lam_scaled).abs() < 1e-12);
    }

    #[test]
    fn unstable_rates() {
        let r = rate_unstable(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(r.lambda, -2.0);
        let r = rate_unstable(&m(2, &[0.2, 0.1, 0.3, 0.0])).unwrap();
        // eigenvalues of [[0.4, 0.4], [0.4, 0]] are 0.2 ± √0.2
        assert!((r.lambda + (0.2 + 0.2f64.sqrt())).abs() < 1e-12);
        assert!((r.lambda + 0.64721).abs() < 1e-5);
        let r = rate_unstable(&m(2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        assert_eq!(r.lambda, 0.0);
        assert!(!r.strictly_negative);
    }

    #[test]
    fn mu_pairs() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert!((mu_pair(&id, &m(2, &[4.0, 0.0, 0.0, 1.0])).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(mu_pair(&m(2, &[2.0, 0.0, 0.0, 2.0]), &id).unwrap(), 1.0);
        let pi = m(2, &[1.25, 0.25, 0.25, 0.25]);
        let lmin = (1.5 - 1.25f64.sqrt()) / 2.0;
        let mu = mu_pair(&pi, &id).unwrap();
        assert!((mu - 1.0 / lmin).abs() < 1e-10);
        assert!((mu - 5.2361).abs() < 1e-4);
        assert!(mu_pair(&m(2, &[1.0, 2.0, 2.0, 1.0]), &id).is_err());
    }

    #[test]
    fn mu_pair_sampling_cross_check() {
        // maximize xᵀP_j x / xᵀP_i x over random unit vectors
        let pi = m(2, &[1.25, 0.25, 0.25, 0.25]);
        let pj = DMatrix::<f64>::identity(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut best: f64 = 0.0;
        for _ in 0..100_000 {
            let x = random_state(&mut rng, 2);
            best = best.max(linalg::quad_form(&pj, &x) / linalg::quad_form(&pi, &x));
        }
        let mu = mu_pair(&pi, &pj).unwrap();
        assert!(best <= mu * (1.0 + 1e-12));
        assert!(best > mu * (1.0 - 1e-4));
    }

    #[test]
    fn build_single_and_identical() {
        let f = SwitchedFamily::linear(
            2,
            vec![(StabilityClass::Stable, m(2, &[-1.0, 0.0, 0.0, -2.0]))],
            [],
        )
        .unwrap();
        let set = build_certificates(&f, None).unwrap();
        assert_eq!(set.len(), 1);
        assert!((set.lambda(sid(1)).unwrap() - 2.0).abs() < 1e-12);
        assert!(set.mu_map().is_empty());

        let a = m(2, &[-1.0, 0.5, 0.0, -2.0]);
        let f = SwitchedFamily::linear(
            2,
            vec![
                (StabilityClass::Stable, a.clone()),
                (StabilityClass::Stable, a),
            ],
            [(1, 2), (2, 1)],
        )
        .unwrap();
        let set = build_certificates(&f, None).unwrap();
        assert_eq!(set.mu(sid(1), sid(2)), Some(1.0));
        assert_eq!(set.mu(sid(2), sid(1)), Some(1.0));
    }

    #[test]
    fn uniform_constants_defaults_and_errors() {
        let set = CertificateSet::new(
            vec![QuadraticCertificate {
                id: sid(1),
                p: DMatrix::identity(1, 1),
                lambda: 2.0,
            }],
            BTreeMap::new(),
        )
        .unwrap();
        let u = uniform_constants(&set, &Partition::all_stable(1)).unwrap();
        assert_eq!((u.lambda_s, u.lambda_u, u.mu), (2.0, 0.0, 1.0));
        assert!(matches!(
            uniform_constants(&set, &Partition::new([], [sid(1)])),
            Err(Error::NoStableSubsystem)
        ));

        let cert = |i, l| QuadraticCertificate {
            id: sid(i),
            p: DMatrix::identity(1, 1),
            lambda: l,
        };
        let set = CertificateSet::new(
            vec![cert(1, 1.0), cert(2, -0.1), cert(3, -0.9)],
            BTreeMap::new(),
        )
        .unwrap();
        let u = uniform_constants(&set, &Partition::new([sid(1)], [sid(2), sid(3)])).unwrap();
        assert_eq!(u.lambda_u, 0.9);
    }

    #[test]
    fn corrupted_mu_is_caught_by_sampling() {
        let a = m(2, &[-1.0, 0.0, 0.0, -2.0]);
        let f = SwitchedFamily::linear(
            2,
            vec![
                (StabilityClass::Stable, a.clone()),
                (StabilityClass::Stable, a),
            ],
            [(1, 2), (2, 1)],
        )
        .unwrap();
        let good = build_certificates(&f, None).unwrap();
        let chk = verify_certificate_sampled(&good, &f, 500, 5.0, 3).unwrap();
        assert!(chk.passes(1e-9), "{chk:?}");

        // bypass the constructor's μ >= 1 guard to model a corrupted file
        let mut bad = good.clone();
        bad.mu.insert((sid(1), sid(2)), 0.5);
        let chk = verify_certificate_sampled(&bad, &f, 50, 5.0, 3).unwrap();
        assert!(!chk.passes(1e-9));
        let w = chk.mu_witness.unwrap();
        assert_eq!((w.from, w.to), (sid(1), sid(2)));
    }

    #[test]
    fn constructor_rejects_mu_below_one() {
        let cert = |i| QuadraticCertificate {
            id: sid(i),
            p: DMatrix::identity(1, 1),
            lambda: 1.0,
        };
        let mut mu = BTreeMap::new();
        mu.insert((sid(1), sid(2)), 0.5);
        assert!(CertificateSet::new(vec![cert(1), cert(2)], mu).is_err());
    }
}

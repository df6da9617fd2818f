//! Subsystem families, the stable/unstable partition and the admissible-transition graph.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// 1-based subsystem index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u32")]
pub struct SubsystemId(u32);

impl SubsystemId {
    pub fn new(index: i64) -> Result<Self> {
        if index < 1 || index > u32::MAX as i64 {
            return Err(Error::InvalidId(index));
        }
        Ok(Self(index as u32))
    }

    /// Builds the id for a zero-based position.
    pub fn from_index(i: usize) -> Self {
        Self(i as u32 + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based position.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl TryFrom<i64> for SubsystemId {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SubsystemId> for u32 {
    fn from(id: SubsystemId) -> u32 {
        id.0
    }
}

impl fmt::Display for SubsystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shorthand for tests and examples; panics on 0.
pub fn sid(i: u32) -> SubsystemId {
    SubsystemId::new(i as i64).expect("subsystem ids start at 1")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityClass {
    Stable,
    Unstable,
}

/// User-supplied vector field `f: R^d -> R^d`.
#[derive(Clone)]
pub struct VectorField(Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>);

impl VectorField {
    pub fn new(f: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.0)(x)
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VectorField(..)")
    }
}

#[derive(Debug, Clone)]
pub enum Dynamics {
    /// `ẋ = A x`
    Linear(DMatrix<f64>),
    VectorField(VectorField),
}

impl Dynamics {
    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Dynamics::Linear(a) => a * x,
            Dynamics::VectorField(f) => f.eval(x),
        }
    }

    pub fn as_linear(&self) -> Option<&DMatrix<f64>> {
        match self {
            Dynamics::Linear(a) => Some(a),
            Dynamics::VectorField(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Subsystem {
    pub id: SubsystemId,
    pub dynamics: Dynamics,
    pub class: StabilityClass,
}

impl Subsystem {
    pub fn linear(id: u32, class: StabilityClass, a: DMatrix<f64>) -> Self {
        Self {
            id: sid(id),
            dynamics: Dynamics::Linear(a),
            class,
        }
    }
}

/// Directed graph of admissible transitions over `P = {1, …, N}`.
///
/// Construction does not reject self-loops or out-of-range endpoints so that
/// [`validate_family`] can report them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionGraph {
    vertex_count: usize,
    edges: BTreeSet<(SubsystemId, SubsystemId)>,
}

impl TransitionGraph {
    pub fn new(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (SubsystemId, SubsystemId)>,
    ) -> Self {
        Self {
            vertex_count,
            edges: edges.into_iter().collect(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| (SubsystemId::from_index(i), SubsystemId::from_index(j)));
        Self::new(n, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn contains(&self, i: SubsystemId, j: SubsystemId) -> bool {
        self.edges.contains(&(i, j))
    }

    pub fn edges(&self) -> impl Iterator<Item = (SubsystemId, SubsystemId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn successors(&self, i: SubsystemId) -> impl Iterator<Item = SubsystemId> + '_ {
        self.edges
            .range((i, SubsystemId(0))..=(i, SubsystemId(u32::MAX)))
            .map(|&(_, j)| j)
    }

    pub fn predecessors(&self, j: SubsystemId) -> impl Iterator<Item = SubsystemId> + '_ {
        self.edges.iter().filter(move |e| e.1 == j).map(|e| e.0)
    }

    pub fn is_valid_vertex(&self, i: SubsystemId) -> bool {
        i.index() < self.vertex_count
    }
}

/// `P = P_S ⊔ P_U`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub stable: BTreeSet<SubsystemId>,
    pub unstable: BTreeSet<SubsystemId>,
}

impl Partition {
    pub fn new(
        stable: impl IntoIterator<Item = SubsystemId>,
        unstable: impl IntoIterator<Item = SubsystemId>,
    ) -> Self {
        Self {
            stable: stable.into_iter().collect(),
            unstable: unstable.into_iter().collect(),
        }
    }

    pub fn from_classes(subsystems: &[Subsystem]) -> Self {
        let mut p = Self::default();
        for s in subsystems {
            match s.class {
                StabilityClass::Stable => p.stable.insert(s.id),
                StabilityClass::Unstable => p.unstable.insert(s.id),
            };
        }
        p
    }

    /// Every subsystem in `1..=n` stable.
    pub fn all_stable(n: usize) -> Self {
        Self::new((0..n).map(SubsystemId::from_index), [])
    }

    pub fn is_stable(&self, i: SubsystemId) -> bool {
        self.stable.contains(&i)
    }

    pub fn is_unstable(&self, i: SubsystemId) -> bool {
        self.unstable.contains(&i)
    }
}

/// One broken invariant, naming the field and the rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// A family of subsystems sharing state dimension `d`. Immutable once built.
#[derive(Debug, Clone)]
pub struct SwitchedFamily {
    subsystems: Vec<Subsystem>,
    dimension: usize,
    graph: TransitionGraph,
    partition: Partition,
}

impl SwitchedFamily {
    /// Validating constructor; fails with every violation found.
    pub fn new(
        subsystems: Vec<Subsystem>,
        dimension: usize,
        graph: TransitionGraph,
        partition: Partition,
    ) -> Result<Self> {
        let family = Self::from_parts_unchecked(subsystems, dimension, graph, partition);
        let violations = validate_family(&family);
        if violations.is_empty() {
            Ok(family)
        } else {
            Err(Error::InvalidFamily(violations))
        }
    }

    /// Linear family with the partition taken from the declared classes.
    pub fn linear(
        dimension: usize,
        subsystems: Vec<(StabilityClass, DMatrix<f64>)>,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        let subsystems: Vec<Subsystem> = subsystems
            .into_iter()
            .enumerate()
            .map(|(k, (class, a))| Subsystem::linear(k as u32 + 1, class, a))
            .collect();
        let n = subsystems.len();
        let edges = edges
            .into_iter()
            .map(|(i, j)| Ok((SubsystemId::new(i as i64)?, SubsystemId::new(j as i64)?)))
            .collect::<Result<Vec<_>>>()?;
        let partition = Partition::from_classes(&subsystems);
        Self::new(
            subsystems,
            dimension,
            TransitionGraph::new(n, edges),
            partition,
        )
    }

    pub fn from_parts_unchecked(
        subsystems: Vec<Subsystem>,
        dimension: usize,
        graph: TransitionGraph,
        partition: Partition,
    ) -> Self {
        Self {
            subsystems,
            dimension,
            graph,
            partition,
        }
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn graph(&self) -> &TransitionGraph {
        &self.graph
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn ids(&self) -> impl Iterator<Item = SubsystemId> + '_ {
        self.subsystems.iter().map(|s| s.id)
    }

    pub fn subsystem(&self, id: SubsystemId) -> Result<&Subsystem> {
        self.subsystems
            .get(id.index())
            .filter(|s| s.id == id)
            .ok_or(Error::UnknownSubsystem(id))
    }

    pub fn is_linear(&self) -> bool {
        self.subsystems
            .iter()
            .all(|s| matches!(s.dynamics, Dynamics::Linear(_)))
    }
}

pub fn validate_family(family: &SwitchedFamily) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = family.subsystems.len();
    let d = family.dimension;
    if n == 0 {
        out.push(Violation::new(
            "subsystems",
            "family must contain at least one subsystem",
        ));
    }
    if d == 0 {
        out.push(Violation::new("dimension", "dimension must be at least 1"));
    }

    for (k, s) in family.subsystems.iter().enumerate() {
        let field = format!("subsystems[{k}]");
        if s.id.index() != k {
            out.push(Violation::new(
                format!("{field}.id"),
                format!(
                    "ids must be 1..N in order; expected {}, found {}",
                    k + 1,
                    s.id
                ),
            ));
        }
        match &s.dynamics {
            Dynamics::Linear(a) => {
                if a.nrows() != d || a.ncols() != d {
                    out.push(Violation::new(
                        format!("{field}.matrix"),
                        format!("expected {d}x{d}, found {}x{}", a.nrows(), a.ncols()),
                    ));
                } else if a.iter().any(|x| !x.is_finite()) {
                    out.push(Violation::new(
                        format!("{field}.matrix"),
                        "non-finite entry",
                    ));
                } else if d > 0 {
                    let abscissa = linalg::spectral_abscissa(a);
                    let hurwitz = abscissa < -linalg::EIG_TOL;
                    match s.class {
                        StabilityClass::Stable if !hurwitz => out.push(Violation::new(
                            format!("{field}.class"),
                            format!(
                                "subsystem {} declared stable but spectral abscissa is {abscissa:.6e}",
                                s.id
                            ),
                        )),
                        StabilityClass::Unstable if hurwitz => out.push(Violation::new(
                            format!("{field}.class"),
                            format!(
                                "subsystem {} declared unstable but is Hurwitz (abscissa {abscissa:.6e})",
                                s.id
                            ),
                        )),
                        _ => {}
                    }
                }
            }
            Dynamics::VectorField(f) => {
                if d > 0 {
                    let y = f.eval(&DVector::zeros(d));
                    if y.len() != d {
                        out.push(Violation::new(
                            format!("{field}.dynamics"),
                            format!("vector field returns dimension {}, expected {d}", y.len()),
                        ));
                    } else if y.iter().any(|v| !v.is_finite()) || y.amax() > 1e-12 {
                        out.push(Violation::new(
                            format!("{field}.dynamics"),
                            "vector field must vanish at the origin",
                        ));
                    }
                }
            }
        }
    }

    if family.graph.vertex_count != n {
        out.push(Violation::new(
            "graph",
            format!(
                "graph has {} vertices, family has {n}",
                family.graph.vertex_count
            ),
        ));
    }
    for (i, j) in family.graph.edges() {
        if i == j {
            out.push(Violation::new("edges", format!("self-loop on vertex {i}")));
        }
        for v in [i, j] {
            if v.index() >= n {
                out.push(Violation::new(
                    "edges",
                    format!("edge ({i}, {j}) references unknown subsystem {v}"),
                ));
            }
        }
    }

    let p = &family.partition;
    for v in p.stable.intersection(&p.unstable) {
        out.push(Violation::new(
            "partition",
            format!("partition overlap on vertex {v}"),
        ));
    }
    for v in p.stable.iter().chain(p.unstable.iter()) {
        if v.index() >= n {
            out.push(Violation::new(
                "partition",
                format!("unknown subsystem {v}"),
            ));
        }
    }
    for s in &family.subsystems {
        let in_s = p.is_stable(s.id);
        let in_u = p.is_unstable(s.id);
        if !in_s && !in_u {
            out.push(Violation::new(
                "partition",
                format!("vertex {} is in neither P_S nor P_U", s.id),
            ));
        }
        let disagrees = match s.class {
            StabilityClass::Stable => in_u && !in_s,
            StabilityClass::Unstable => in_s && !in_u,
        };
        if disagrees {
            out.push(Violation::new(
                "partition",
                format!(
                    "declared class of subsystem {} disagrees with the partition",
                    s.id
                ),
            ));
        }
    }
    out
}

pub fn is_admissible(family: &SwitchedFamily, i: SubsystemId, j: SubsystemId) -> Result<bool> {
    for v in [i, j] {
        if v.index() >= family.len() {
            return Err(Error::UnknownSubsystem(v));
        }
    }
    Ok(family.graph.contains(i, j))
}

/// True iff the graph has exactly the `n(n-1)` ordered pairs `i != j` over `1..=n`.
pub fn is_complete(graph: &TransitionGraph, n: usize) -> bool {
    let proper = graph
        .edges()
        .filter(|&(i, j)| i != j && i.index() < n && j.index() < n)
        .count();
    proper == graph.edge_count() && proper == n * n.saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_family() -> SwitchedFamily {
        let a1 = DMatrix::from_row_slice(2, 2, &[-0.3, 1.0, -0.9, -1.2]);
        let a2 = DMatrix::from_row_slice(2, 2, &[0.2, 0.1, 0.3, 0.0]);
        let a3 = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.1]);
        SwitchedFamily::linear(
            2,
            vec![
                (StabilityClass::Stable, a1),
                (StabilityClass::Unstable, a2),
                (StabilityClass::Unstable, a3),
            ],
            [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)],
        )
        .unwrap()
    }

    #[test]
    fn reference_family_is_valid_and_complete() {
        let f = reference_family();
        assert!(validate_family(&f).is_empty());
        assert!(is_complete(f.graph(), 3));
        assert!(is_admissible(&f, sid(1), sid(2)).unwrap());
        assert!(!is_admissible(&f, sid(1), sid(1)).unwrap());
        assert!(matches!(
            is_admissible(&f, sid(1), sid(4)),
            Err(Error::UnknownSubsystem(_))
        ));
    }

    #[test]
    fn self_loop_is_reported() {
        let s = vec![Subsystem::linear(
            1,
            StabilityClass::Stable,
            -DMatrix::identity(1, 1),
        )];
        let f = SwitchedFamily::from_parts_unchecked(
            s,
            1,
            TransitionGraph::new(1, [(sid(1), sid(1))]),
            Partition::all_stable(1),
        );
        let v = validate_family(&f);
        assert!(v.iter().any(|x| x.rule == "self-loop on vertex 1"), "{v:?}");
    }

    #[test]
    fn partition_overlap_is_reported() {
        let s = vec![Subsystem::linear(
            1,
            StabilityClass::Stable,
            -DMatrix::identity(1, 1),
        )];
        let f = SwitchedFamily::from_parts_unchecked(
            s,
            1,
            TransitionGraph::new(1, []),
            Partition::new([sid(1)], [sid(1)]),
        );
        let v = validate_family(&f);
        assert!(
            v.iter().any(|x| x.rule.contains("partition overlap")),
            "{v:?}"
        );
    }

    #[test]
    fn directedness_and_completeness() {
        let g = TransitionGraph::new(2, [(sid(1), sid(2))]);
        assert!(g.contains(sid(1), sid(2)));
        assert!(!g.contains(sid(2), sid(1)));
        assert!(!is_complete(&g, 2));
        assert!(is_complete(&TransitionGraph::new(1, []), 1));
        assert!(is_complete(&TransitionGraph::complete(4), 4));
    }

    #[test]
    fn declared_class_cross_checked() {
        let r = SwitchedFamily::linear(
            1,
            vec![(StabilityClass::Stable, DMatrix::identity(1, 1))],
            [],
        );
        assert!(matches!(r, Err(Error::InvalidFamily(_))));
        let r = SwitchedFamily::linear(
            1,
            vec![(StabilityClass::Unstable, -DMatrix::identity(1, 1))],
            [],
        );
        assert!(matches!(r, Err(Error::InvalidFamily(_))));
    }

    #[test]
    fn vector_field_must_vanish_at_origin() {
        let s = Subsystem {
            id: sid(1),
            dynamics: Dynamics::VectorField(VectorField::new(|x| x.map(|v| v + 1.0))),
            class: StabilityClass::Stable,
        };
        let f = SwitchedFamily::from_parts_unchecked(
            vec![s],
            2,
            TransitionGraph::new(1, []),
            Partition::all_stable(1),
        );
        let v = validate_family(&f);
        assert!(v.iter().any(|x| x.rule.contains("vanish")));
    }

    #[test]
    fn successors_follow_edges() {
        let g = TransitionGraph::complete(3);
        let s: Vec<_> = g.successors(sid(2)).collect();
        assert_eq!(s, vec![sid(1), sid(3)]);
        let p: Vec<_> = g.predecessors(sid(2)).collect();
        assert_eq!(p, vec![sid(1), sid(3)]);
    }
}

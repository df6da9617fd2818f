//! JSON file formats for families, certificates, signals and generator specs,
//! and CSV export of statistics, `ψ`/`Ψ` traces and trajectories.
//!
//! JSON numbers use the shortest representation that round-trips, so reading
//! back a written file reproduces every value bit for bit. CSV numbers use 12
//! significant digits in scientific notation, `,` separators and LF endings.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::certificates::{CertificateSet, QuadraticCertificate};
use crate::error::{Error, Result};
use crate::family::{
    Partition, StabilityClass, Subsystem, SubsystemId, SwitchedFamily, TransitionGraph, Violation,
};
use crate::generators::GeneratorSpec;
use crate::signals::SwitchingSignal;
use crate::simulator::Trajectory;

/// Row-major matrix, either flat or as nested rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRepr {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixRepr {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixRepr::Flat(m.transpose().as_slice().to_vec())
    }

    fn to_matrix(&self, d: usize, field: &str) -> std::result::Result<DMatrix<f64>, Violation> {
        let flat: Vec<f64> = match self {
            MatrixRepr::Flat(v) => v.clone(),
            MatrixRepr::Rows(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Violation::new(
                        field,
                        format!("expected {d} rows of {d} entries"),
                    ));
                }
                rows.concat()
            }
        };
        if d.checked_mul(d) != Some(flat.len()) {
            return Err(Violation::new(
                field,
                format!(
                    "expected {d}x{d} = {} entries, found {}",
                    d as f64 * d as f64,
                    flat.len()
                ),
            ));
        }
        Ok(DMatrix::from_row_slice(d, d, &flat))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemFile {
    pub id: i64,
    pub class: StabilityClass,
    pub matrix: MatrixRepr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub dimension: usize,
    pub subsystems: Vec<SubsystemFile>,
    pub edges: Vec<[i64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertFile {
    pub id: i64,
    pub lambda: f64,
    #[serde(rename = "P")]
    pub p: MatrixRepr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuFile {
    pub from: i64,
    pub to: i64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificatesFile {
    pub certs: Vec<CertFile>,
    pub mu: Vec<MuFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalFile {
    pub taus: Vec<f64>,
    pub modes: Vec<i64>,
    pub horizon: f64,
}

fn id_field(v: i64, field: &str, out: &mut Vec<Violation>) -> Option<SubsystemId> {
    match SubsystemId::new(v) {
        Ok(id) => Some(id),
        Err(_) => {
            out.push(Violation::new(
                field,
                format!("id {v} is not a positive integer"),
            ));
            None
        }
    }
}

impl FamilyFile {
    pub fn from_family(f: &SwitchedFamily) -> Result<Self> {
        let subsystems = f
            .subsystems()
            .iter()
            .map(|s| {
                let a = s.dynamics.as_linear().ok_or(Error::NotLinear(s.id))?;
                Ok(SubsystemFile {
                    id: s.id.get() as i64,
                    class: s.class,
                    matrix: MatrixRepr::from_matrix(a),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            dimension: f.dimension(),
            subsystems,
            edges: f
                .graph()
                .edges()
                .map(|(i, j)| [i.get() as i64, j.get() as i64])
                .collect(),
        })
    }

    /// Partition comes from the declared classes.
    pub fn into_family(self) -> Result<SwitchedFamily> {
        let d = self.dimension;
        let mut v = Vec::new();
        let mut subs = Vec::new();
        for (k, s) in self.subsystems.iter().enumerate() {
            let field = format!("subsystems[{k}]");
            let Some(id) = id_field(s.id, &format!("{field}.id"), &mut v) else {
                continue;
            };
            match s.matrix.to_matrix(d, &format!("{field}.matrix")) {
                Ok(a) => subs.push(Subsystem {
                    id,
                    dynamics: crate::family::Dynamics::Linear(a),
                    class: s.class,
                }),
                Err(e) => v.push(e),
            }
        }
        let mut edges = Vec::new();
        for (k, e) in self.edges.iter().enumerate() {
            let field = format!("edges[{k}]");
            if let (Some(i), Some(j)) = (
                id_field(e[0], &field, &mut v),
                id_field(e[1], &field, &mut v),
            ) {
                edges.push((i, j));
            }
        }
        if !v.is_empty() {
            return Err(Error::InvalidFamily(v));
        }
        let n = self.subsystems.len();
        let partition = Partition::from_classes(&subs);
        SwitchedFamily::new(subs, d, TransitionGraph::new(n, edges), partition)
    }
}

impl CertificatesFile {
    pub fn from_set(set: &CertificateSet) -> Self {
        Self {
            certs: set
                .certs()
                .iter()
                .map(|c| CertFile {
                    id: c.id.get() as i64,
                    lambda: c.lambda,
                    p: MatrixRepr::from_matrix(&c.p),
                })
                .collect(),
            mu: set
                .mu_map()
                .iter()
                .map(|(&(i, j), &value)| MuFile {
                    from: i.get() as i64,
                    to: j.get() as i64,
                    value,
                })
                .collect(),
        }
    }

    pub fn into_set(self) -> Result<CertificateSet> {
        let d = self.certs.first().map(|c| match &c.p {
            MatrixRepr::Flat(v) => (v.len() as f64).sqrt().round() as usize,
            MatrixRepr::Rows(r) => r.len(),
        });
        let d = d.unwrap_or(0);
        let mut v = Vec::new();
        let mut certs = Vec::new();
        for (k, c) in self.certs.iter().enumerate() {
            let field = format!("certs[{k}]");
            let Some(id) = id_field(c.id, &format!("{field}.id"), &mut v) else {
                continue;
            };
            match c.p.to_matrix(d, &format!("{field}.P")) {
                Ok(p) => certs.push(QuadraticCertificate {
                    id,
                    p,
                    lambda: c.lambda,
                }),
                Err(e) => v.push(e),
            }
        }
        let mut mu = std::collections::BTreeMap::new();
        for (k, m) in self.mu.iter().enumerate() {
            let field = format!("mu[{k}]");
            if let (Some(i), Some(j)) = (
                id_field(m.from, &field, &mut v),
                id_field(m.to, &field, &mut v),
            ) {
                if mu.insert((i, j), m.value).is_some() {
                    v.push(Violation::new(
                        field,
                        format!("duplicate entry for edge ({i}, {j})"),
                    ));
                }
            }
        }
        if !v.is_empty() {
            return Err(Error::InvalidCertificates(v));
        }
        CertificateSet::new(certs, mu)
    }
}

impl SignalFile {
    pub fn from_signal(s: &SwitchingSignal) -> Self {
        Self {
            taus: s.taus().to_vec(),
            modes: s.modes().iter().map(|m| m.get() as i64).collect(),
            horizon: s.horizon(),
        }
    }

    pub fn into_signal(self) -> Result<SwitchingSignal> {
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                SubsystemId::new(m).map_err(|_| {
                    Error::InvalidSignal(format!("modes[{k}]: id {m} is not a positive integer"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SwitchingSignal::new(self.taus, modes, self.horizon)
    }
}

pub fn parse_family(text: &str) -> Result<SwitchedFamily> {
    serde_json::from_str::<FamilyFile>(text)?.into_family()
}

pub fn parse_certificates(text: &str) -> Result<CertificateSet> {
    serde_json::from_str::<CertificatesFile>(text)?.into_set()
}

pub fn parse_signal(text: &str) -> Result<SwitchingSignal> {
    serde_json::from_str::<SignalFile>(text)?.into_signal()
}

pub fn parse_generator_spec(text: &str) -> Result<GeneratorSpec> {
    Ok(serde_json::from_str(text)?)
}

pub fn family_to_json(f: &SwitchedFamily) -> Result<String> {
    Ok(serde_json::to_string_pretty(&FamilyFile::from_family(f)?)?)
}

pub fn certificates_to_json(c: &CertificateSet) -> Result<String> {
    Ok(serde_json::to_string_pretty(&CertificatesFile::from_set(
        c,
    ))?)
}

pub fn signal_to_json(s: &SwitchingSignal) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SignalFile::from_signal(s))?)
}

/// 12 significant digits, scientific notation.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// `t,N,nu,eta_1..eta_N,rho_<k>_<l>...` at each time; undefined `ρ` is written as `nan`.
pub fn write_stats_csv<W: Write>(
    w: W,
    signal: &SwitchingSignal,
    graph: &TransitionGraph,
    times: &[f64],
) -> Result<()> {
    let stats = signal.stats_series(times, graph)?;
    let mut out = csv_writer(w);
    let mut header = vec!["t".to_string(), "N".into(), "nu".into()];
    let n = stats
        .first()
        .map(|s| s.eta.len())
        .unwrap_or(graph.vertex_count());
    header.extend((1..=n).map(|j| format!("eta_{j}")));
    let edges: Vec<_> = graph.edges().collect();
    header.extend(edges.iter().map(|(k, l)| format!("rho_{k}_{l}")));
    out.write_record(&header)?;
    for s in &stats {
        let mut row = vec![fmt_num(s.t), s.switches.to_string(), fmt_num(s.nu)];
        row.extend(s.eta.iter().map(|&e| fmt_num(e)));
        row.extend(
            edges
                .iter()
                .map(|&(k, l)| fmt_num(s.rho_of(k, l).unwrap_or(f64::NAN))),
        );
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `t,psi,Psi`; `Psi` is `nan` at `t = 0`.
pub fn write_psi_csv<W: Write>(w: W, times: &[f64], psi: &[f64], big_psi: &[f64]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["t", "psi", "Psi"])?;
    for ((&t, &a), &b) in times.iter().zip(psi).zip(big_psi) {
        out.write_record([fmt_num(t), fmt_num(a), fmt_num(b)])?;
    }
    out.flush()?;
    Ok(())
}

/// `t,mode,x_1..x_d,V,psi,bound` at every sample.
pub fn write_trajectory_csv<W: Write>(
    w: W,
    traj: &Trajectory,
    psi: &[f64],
    bound: &[f64],
) -> Result<()> {
    let mut out = csv_writer(w);
    let d = traj.dimension();
    let mut header = vec!["t".to_string(), "mode".into()];
    header.extend((1..=d).map(|i| format!("x_{i}")));
    header.extend(["V".into(), "psi".into(), "bound".into()]);
    out.write_record(&header)?;
    let nan = f64::NAN;
    for k in 0..traj.len() {
        let mut row = vec![fmt_num(traj.times[k]), traj.modes[k].to_string()];
        row.extend(traj.states[k].iter().map(|&x| fmt_num(x)));
        let v = traj
            .v
            .as_ref()
            .and_then(|v| v.get(k))
            .copied()
            .unwrap_or(nan);
        row.push(fmt_num(v));
        row.push(fmt_num(psi.get(k).copied().unwrap_or(nan)));
        row.push(fmt_num(bound.get(k).copied().unwrap_or(nan)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Numeric CSV table as written by this module.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_csv_table<R: Read>(r: R) -> Result<CsvTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "line {line}, column {}: {field:?} is not a number",
                        headers.get(c).map(String::as_str).unwrap_or("?")
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { headers, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::sid;
    use crate::generators::{example_certificates, example_family};

    #[test]
    fn family_round_trip() {
        let f = example_family();
        let text = family_to_json(&f).unwrap();
        let back = parse_family(&text).unwrap();
        assert_eq!(family_to_json(&back).unwrap(), text);
        assert_eq!(back.partition(), f.partition());
    }

    #[test]
    fn nested_matrices_accepted() {
        let text = r#"{"dimension":2,"subsystems":[{"id":1,"class":"stable","matrix":[[-1,0],[0,-2]]}],"edges":[]}"#;
        let f = parse_family(text).unwrap();
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn family_errors_name_the_field() {
        let text = r#"{"dimension":2,"subsystems":[{"id":1,"class":"stable","matrix":[1,2,3]}],"edges":[[1,1]]}"#;
        let e = parse_family(text).unwrap_err().to_string();
        assert!(e.contains("subsystems[0].matrix"), "{e}");
        let text =
            r#"{"dimension":1,"subsystems":[{"id":0,"class":"stable","matrix":[-1]}],"edges":[]}"#;
        assert!(parse_family(text).is_err());
    }

    #[test]
    fn certificates_round_trip_bit_exact() {
        let c = example_certificates();
        let back = parse_certificates(&certificates_to_json(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let odd = CertificateSet::new(
            vec![QuadraticCertificate {
                id: sid(1),
                p: DMatrix::from_row_slice(1, 1, &[0.1 + 0.2]),
                lambda: 1.0 / 3.0,
            }],
            Default::default(),
        )
        .unwrap();
        let back = parse_certificates(&certificates_to_json(&odd).unwrap()).unwrap();
        assert_eq!(back.certs()[0].lambda.to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn signal_round_trip_and_missing_field() {
        let s =
            SwitchingSignal::new(vec![0.0, 0.1, 0.7], vec![sid(1), sid(2), sid(1)], 1.0).unwrap();
        assert_eq!(parse_signal(&signal_to_json(&s).unwrap()).unwrap(), s);
        let e = parse_signal(r#"{"taus":[0],"horizon":1}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("modes"), "{e}");
    }

    #[test]
    fn csv_round_trip() {
        let s =
            SwitchingSignal::new(vec![0.0, 1.0, 3.0], vec![sid(1), sid(2), sid(1)], 4.0).unwrap();
        let g = TransitionGraph::complete(2);
        let mut buf = Vec::new();
        write_stats_csv(&mut buf, &s, &g, &[0.5, 4.0]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,N,nu,eta_1,eta_2,rho_1_2,rho_2_1\n"));
        assert!(!text.contains('\r'));
        let table = read_csv_table(&buf[..]).unwrap();
        assert_eq!(table.column("nu").unwrap(), vec![0.0, 0.5]);
        assert!(table.column("rho_1_2").unwrap()[0].is_nan());
        assert!(read_csv_table("a,b\n1,x\n".as_bytes()).is_err());
    }
}

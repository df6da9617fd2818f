use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use switchstab::certificates::build_certificates;
use switchstab::criteria::{
    check_adt, check_asymptotic, check_dwell_time, check_mdadt, check_unified,
    check_unstable_budget, composite_series, psi_series, sample_times,
};
use switchstab::generators::{
    example_family, gen_paper_example, generate as run_generator, verify_generated, GeneratorClass,
    GeneratorSpec, EXAMPLE_PERIOD,
};
use switchstab::io::{
    certificates_to_json, family_to_json, parse_certificates, parse_family, parse_generator_spec,
    parse_signal, signal_to_json, write_psi_csv, write_trajectory_csv,
};
use switchstab::reproduce::{reproduce as run_reproduce, ReproduceOptions};
use switchstab::simulator::{bound_trace, check_bound, integrate, integrate_exact, lyapunov_trace};
use switchstab::{
    CertificateSet, CriterionReport, Error, EstimatorOptions, SwitchedFamily, SwitchingSignal,
    Trajectory,
};

use crate::{
    AnalyzeArgs, ClassArgs, ClassName, CriterionName, EstimatorArgs, Failure, GenerateArgs,
    ReproduceArgs, SimulateArgs, EXIT_DIVERGED, EXIT_OK, EXIT_VIOLATED,
};

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Parses a file, prefixing any diagnostic with its path.
fn load<T>(path: &Path, parse: fn(&str) -> switchstab::Result<T>) -> Result<T, Failure> {
    parse(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn estimator(a: &EstimatorArgs) -> EstimatorOptions {
    EstimatorOptions {
        window: a.window,
        samples: a.samples,
    }
}

/// Reads the certificate file, or builds certificates for a linear family.
fn certificates(
    family: &SwitchedFamily,
    path: Option<&Path>,
) -> Result<(CertificateSet, bool), Failure> {
    match path {
        Some(p) => {
            let set = load(p, parse_certificates)?;
            let violations = set.check_against(family);
            if !violations.is_empty() {
                return Err(Error::InvalidCertificates(violations).into());
            }
            Ok((set, false))
        }
        None => Ok((build_certificates(family, None)?, true)),
    }
}

fn required(name: &str, v: Option<f64>, what: &str) -> Result<f64, Failure> {
    v.ok_or_else(|| Failure::input(format!("--{name} is required for {what}")))
}

fn single(name: &str, v: &[f64], what: &str) -> Result<f64, Failure> {
    match v {
        [x] => Ok(*x),
        [] => Err(Failure::input(format!("--{name} is required for {what}"))),
        _ => Err(Failure::input(format!(
            "--{name} takes one value for {what}, got {}",
            v.len()
        ))),
    }
}

/// One value broadcast to every subsystem, or exactly one per subsystem.
fn per_mode(name: &str, v: &[f64], n: usize) -> Result<Vec<f64>, Failure> {
    match v.len() {
        0 => Err(Failure::input(format!("--{name} is required for mdadt"))),
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v.to_vec()),
        k => Err(Failure::input(format!(
            "--{name} needs 1 or {n} values, got {k}"
        ))),
    }
}

fn run_criterion(
    c: CriterionName,
    p: &ClassArgs,
    family: &SwitchedFamily,
    signal: &SwitchingSignal,
    certs: &CertificateSet,
    opts: &EstimatorOptions,
) -> Result<Vec<CriterionReport>, Failure> {
    let partition = family.partition();
    let graph = family.graph();
    Ok(match c {
        CriterionName::Dwell => vec![check_dwell_time(
            signal,
            required("tau-d", p.tau_d, "dwell")?,
        )?],
        CriterionName::Adt => vec![check_adt(
            signal,
            single("N0", &p.n0, "adt")?,
            single("tau-a", &p.tau_a, "adt")?,
        )?],
        CriterionName::Mdadt => {
            let n = family.len();
            vec![check_mdadt(
                signal,
                &per_mode("N0", &p.n0, n)?,
                &per_mode("tau-a", &p.tau_a, n)?,
            )?]
        }
        CriterionName::Mixed => vec![
            check_adt(
                signal,
                single("N0", &p.n0, "mixed")?,
                single("tau-a", &p.tau_a, "mixed")?,
            )?,
            check_unstable_budget(
                signal,
                partition,
                required("T0", p.t0, "mixed")?,
                required("rho", p.rho, "mixed")?,
            )?,
        ],
        CriterionName::Asymptotic => vec![check_asymptotic(signal, certs, partition, graph, opts)?],
        CriterionName::Unified => vec![check_unified(signal, certs, partition, graph, opts)?],
    })
}

pub fn analyze(a: &AnalyzeArgs, jobs: usize) -> Result<i32, Failure> {
    let family = load(&a.family, parse_family)?;
    let signal = load(&a.signal, parse_signal)?;
    signal.check_admissible(family.graph())?;
    let (certs, built) = certificates(&family, a.certs.as_deref())?;
    let opts = estimator(&a.estimator);
    sample_times(signal.horizon(), &opts)?;

    let mut criteria = a.criteria.clone();
    criteria.dedup();
    let run = |c: &CriterionName| run_criterion(*c, &a.class, &family, &signal, &certs, &opts);
    let results: Vec<Result<Vec<CriterionReport>, Failure>> = if jobs > 1 && criteria.len() > 1 {
        let chunk = criteria.len().div_ceil(jobs);
        std::thread::scope(|s| {
            let handles: Vec<_> = criteria
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(run).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("criterion worker panicked"))
                .collect()
        })
    } else {
        criteria.iter().map(run).collect()
    };
    let mut reports = Vec::new();
    for r in results {
        reports.extend(r?);
    }

    let trace_opts = EstimatorOptions {
        window: 1.0,
        samples: opts.samples,
    };
    let times = sample_times(signal.horizon(), &trace_opts)?;
    let psi = psi_series(&signal, &certs, &times)?;
    let big_psi = composite_series(&signal, &certs, family.partition(), family.graph(), &times)?;
    let mut csv = Vec::new();
    write_psi_csv(&mut csv, &times, &psi, &big_psi)?;

    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    write(&a.out, "report.json", json.as_bytes())?;
    write(&a.out, "psi.csv", &csv)?;
    if built {
        write(
            &a.out,
            "certs.json",
            certificates_to_json(&certs)?.as_bytes(),
        )?;
    }
    for r in &reports {
        println!(
            "{}: {} (margin {})",
            r.criterion,
            if r.satisfied { "satisfied" } else { "violated" },
            r.margin
        );
    }
    Ok(if reports.iter().all(|r| r.satisfied) {
        EXIT_OK
    } else {
        EXIT_VIOLATED
    })
}

fn trajectory_csv(
    traj: &Trajectory,
    certs: &CertificateSet,
    signal: &SwitchingSignal,
) -> Result<Vec<u8>, Failure> {
    let traj = lyapunov_trace(traj, certs)?;
    let (psi, bound) = bound_trace(&traj, certs, signal)?;
    let mut csv = Vec::new();
    write_trajectory_csv(&mut csv, &traj, &psi, &bound)?;
    Ok(csv)
}

pub fn simulate(a: &SimulateArgs) -> Result<i32, Failure> {
    let family = load(&a.family, parse_family)?;
    let signal = load(&a.signal, parse_signal)?;
    let (certs, _) = certificates(&family, a.certs.as_deref())?;
    let d = family.dimension();
    let x0 = if a.x0.is_empty() {
        DVector::from_fn(d, |i, _| if i == 0 { 1.0 } else { 0.0 })
    } else {
        DVector::from_vec(a.x0.clone())
    };
    let result = if a.exact {
        integrate_exact(&family, &signal, &x0, a.step)
    } else {
        integrate(&family, &signal, &x0, a.step)
    };
    let traj = match result {
        Ok(t) => t,
        Err(Error::Divergence { t, partial }) => {
            write(
                &a.out,
                "trajectory.csv",
                &trajectory_csv(&partial, &certs, &signal)?,
            )?;
            eprintln!("diverged at t = {t}: state norm above 1e12");
            return Ok(EXIT_DIVERGED);
        }
        Err(e) => return Err(e.into()),
    };
    write(
        &a.out,
        "trajectory.csv",
        &trajectory_csv(&traj, &certs, &signal)?,
    )?;
    let report = check_bound(&traj, &certs, &signal, a.tol)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write(&a.out, "bound.json", json.as_bytes())?;
    println!(
        "bound: {} (max relative excess {}, {} samples)",
        if report.pass { "pass" } else { "fail" },
        report.max_relative_excess,
        traj.len()
    );
    Ok(if report.pass { EXIT_OK } else { EXIT_VIOLATED })
}

fn class_from_flags(a: &GenerateArgs, family: &SwitchedFamily) -> Result<GeneratorClass, Failure> {
    let p = &a.params;
    let class = a.class.expect("clap requires --class without --spec");
    Ok(match class {
        ClassName::Dwell => GeneratorClass::Dwell {
            tau_d: required("tau-d", p.tau_d, "dwell")?,
        },
        ClassName::Adt => GeneratorClass::Adt {
            n0: single("N0", &p.n0, "adt")?,
            tau_a: single("tau-a", &p.tau_a, "adt")?,
            safety: a.safety,
        },
        ClassName::Mdadt => GeneratorClass::Mdadt {
            n0: per_mode("N0", &p.n0, family.len())?,
            tau_a: per_mode("tau-a", &p.tau_a, family.len())?,
            safety: a.safety,
        },
        ClassName::Mixed => GeneratorClass::Mixed {
            n0: single("N0", &p.n0, "mixed")?,
            tau_a: single("tau-a", &p.tau_a, "mixed")?,
            t0: required("T0", p.t0, "mixed")?,
            rho: required("rho", p.rho, "mixed")?,
            safety: a.safety,
        },
        ClassName::Asymptotic => GeneratorClass::Asymptotic {
            mean_hold: required("mean-hold", a.mean_hold, "asymptotic")?,
        },
        ClassName::PaperExample => GeneratorClass::PaperExample,
        ClassName::Burst => GeneratorClass::Burst {
            epsilon: a.epsilon,
            n_max: a.nmax,
        },
        ClassName::SqrtGrowth => GeneratorClass::SqrtGrowth {
            k0: required("k0", a.k0, "sqrt-growth")?,
            k0p: required("k0p", a.k0p, "sqrt-growth")?,
        },
    })
}

pub fn generate(a: &GenerateArgs) -> Result<i32, Failure> {
    let family = match &a.family {
        Some(p) => load(p, parse_family)?,
        None => example_family(),
    };
    let spec = match &a.spec {
        Some(p) => load(p, parse_generator_spec)?,
        None => GeneratorSpec {
            class: class_from_flags(a, &family)?,
            horizon: a.horizon,
            seed: a.seed,
        },
    };
    let signal = run_generator(&spec, Some(&family))?;
    let text = signal_to_json(&signal)?;
    let path = write(&a.out, "signal.json", text.as_bytes())?;
    let reread = load(&path, parse_signal)?;
    let round_trip = reread == signal;
    let checks = verify_generated(&spec, &reread, family.partition())?;
    println!(
        "signal: {} switches, horizon {}, round trip {}",
        signal.switch_count(),
        signal.horizon(),
        if round_trip { "exact" } else { "mismatch" }
    );
    for r in &checks {
        println!(
            "{}: {} (margin {})",
            r.criterion,
            if r.satisfied { "satisfied" } else { "violated" },
            r.margin
        );
    }
    Ok(if round_trip && checks.iter().all(|r| r.satisfied) {
        EXIT_OK
    } else {
        EXIT_VIOLATED
    })
}

pub fn reproduce(a: &ReproduceArgs) -> Result<i32, Failure> {
    let opts = ReproduceOptions {
        strict: a.strict,
        n_max: a.nmax,
        epsilon: a.epsilon,
        periods: a.periods,
        estimator: estimator(&a.estimator),
    };
    let rep = run_reproduce(&opts)?;
    print!("{rep}");
    if let Some(dir) = &a.out {
        let json = serde_json::to_string_pretty(&rep).expect("table serializes");
        write(dir, "reproduce.json", json.as_bytes())?;
        // The example as an analyzable bundle, with the uniform constants.
        let ex = gen_paper_example(f64::from(a.periods) * EXAMPLE_PERIOD)?;
        write(dir, "family.json", family_to_json(&ex.family)?.as_bytes())?;
        write(
            dir,
            "certs.json",
            certificates_to_json(&ex.uniform)?.as_bytes(),
        )?;
        write(dir, "signal.json", signal_to_json(&ex.signal)?.as_bytes())?;
    }
    Ok(if rep.passed() { EXIT_OK } else { EXIT_VIOLATED })
}

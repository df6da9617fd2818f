#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use switchstab::family::sid;
use switchstab::family::{StabilityClass, SwitchedFamily};
use switchstab::linalg::spectral_abscissa;
use switchstab::SwitchingSignal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let s = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(d, d, |_, _| s * rng.sample::<f64, _>(StandardNormal))
}

/// Spectral abscissa placed uniformly in `[-1.5, -0.2]`.
pub fn hurwitz(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let g = gaussian(rng, d);
    let shift = spectral_abscissa(&g) + rng.random_range(0.2..1.5);
    g - DMatrix::identity(d, d) * shift
}

/// Spectral abscissa placed uniformly in `[0.05, 0.3]`, entries scaled down.
pub fn unstable(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let g = gaussian(rng, d) * 0.4;
    let shift = spectral_abscissa(&g) - rng.random_range(0.05..0.3);
    g - DMatrix::identity(d, d) * shift
}

/// Directed cycle `1 → 2 → … → N → 1` plus each remaining edge with probability 1/2.
pub fn strongly_connected(rng: &mut impl Rng, n: usize) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for i in 1..=n as u32 {
        for j in 1..=n as u32 {
            if i == j {
                continue;
            }
            let on_cycle = j == i % n as u32 + 1;
            if on_cycle || rng.random_bool(0.5) {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn complete(n: usize) -> Vec<(u32, u32)> {
    let n = n as u32;
    (1..=n)
        .flat_map(|i| (1..=n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}

/// Linear family with `n_unstable` unstable subsystems placed last.
pub fn family(
    rng: &mut impl Rng,
    n: usize,
    d: usize,
    n_unstable: usize,
    edges: Vec<(u32, u32)>,
) -> SwitchedFamily {
    let subs = (0..n)
        .map(|k| {
            if k + n_unstable >= n {
                (StabilityClass::Unstable, unstable(rng, d))
            } else {
                (StabilityClass::Stable, hurwitz(rng, d))
            }
        })
        .collect();
    SwitchedFamily::linear(d, subs, edges).expect("random family is valid")
}

/// Random walk over `edges` with holds drawn from `[min_hold, max_hold]`.
pub fn random_signal(
    rng: &mut impl Rng,
    n: usize,
    edges: &[(u32, u32)],
    horizon: f64,
    min_hold: f64,
    max_hold: f64,
) -> SwitchingSignal {
    let mut taus = vec![0.0];
    let mut modes = vec![rng.random_range(1..=n as u32)];
    loop {
        let t = taus.last().unwrap() + rng.random_range(min_hold..=max_hold);
        if t > horizon {
            break;
        }
        let cur = *modes.last().unwrap();
        let next: Vec<u32> = edges.iter().filter(|e| e.0 == cur).map(|e| e.1).collect();
        if next.is_empty() {
            break;
        }
        taus.push(t);
        modes.push(next[rng.random_range(0..next.len())]);
    }
    SwitchingSignal::new(taus, modes.into_iter().map(sid).collect(), horizon).unwrap()
}

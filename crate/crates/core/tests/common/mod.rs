//! The Hénon horseshoe (c = −4, b = 0.1) coding fixture shared by the integration tests.

#![allow(dead_code)]

use std::sync::OnceLock;

use pesin::coding::*;
use pesin::cocycle::{ChartedWindow, PesinConstants};
use pesin::linalg::CVec;
use pesin::orbit::{from_cycle, itinerary_cycle};
use pesin::system::{load_system, System};
use pesin::transform::ParameterBudget;

pub const GAMMA: f64 = 0.1;
pub const DEPTH: usize = 6;
pub const EPS: f64 = 0.5;

pub fn horseshoe() -> System {
    load_system("complex_henon c=-4+0i b=0.1+0i").unwrap()
}

/// 1^16 and 1^11 0 1^4: sixteen steps at the fixed point q, with or without one
/// excursion through p.
pub fn blocks() -> Vec<Vec<u8>> {
    let mut excursion = vec![1u8; 16];
    excursion[11] = 0;
    vec![vec![1u8; 16], excursion]
}

pub struct Setup {
    pub cw: ChartedWindow,
    pub cycle: Vec<CVec>,
    pub budget: ParameterBudget,
    pub family: ReturnFamily,
}

pub fn budget_for(cw: &ChartedWindow) -> ParameterBudget {
    let sp = &cw.spectrum;
    let mut b = ParameterBudget::new(GAMMA, 0.009, 3e-3, sp.chi_top(), sp.chi_u(), sp.chi_s());
    b.eta = 5e-5;
    b
}

pub fn charted(s: &System, cycle: &[CVec]) -> ChartedWindow {
    let w = from_cycle(s, cycle, 300, cycle.len() + 300, 0).unwrap();
    ChartedWindow::build(s, &w, GAMMA, PesinConstants { eps1: 0.1, p: 2.0, c: 1.0 }).unwrap()
}

fn setup() -> Setup {
    let s = horseshoe();
    let cycle = itinerary_cycle(&s, &block_itinerary(&blocks(), 120, 1)).unwrap();
    let cw = charted(&s, &cycle);
    let budget = budget_for(&cw);
    let pts: Vec<CVec> = (0..cycle.len() as i64).map(|i| cw.point(i)).collect();
    let sep = bowen_separated(&s, &pts, 20, EPS).unwrap();
    let centers: Vec<i64> = sep.points.iter().map(|&j| j as i64).filter(|&i| cw.good(i, 1e-3)).collect();
    let params = HarvestParams { eta: 5e-5, n_min: 10, n_max: 20, depth: 0, weight: 0.5, max_members: 2 };
    let family = harvest_returns(&s, &cw.window, &centers, &params).unwrap();
    Setup { cw, cycle, budget, family }
}

pub fn shared() -> &'static Setup {
    static SETUP: OnceLock<Setup> = OnceLock::new();
    SETUP.get_or_init(setup)
}

pub fn tree() -> &'static CodingTree<'static> {
    static TREE: OnceLock<CodingTree<'static>> = OnceLock::new();
    TREE.get_or_init(|| {
        let s = shared();
        build_coding_tree(&s.cw, &s.family, &CodingParams::new(s.budget, DEPTH, EPS)).unwrap()
    })
}

// Plain-f64 counting oracles for separated sets and entropy slopes.

pub fn circle(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Greedy (m, ε)-separated selection on plain orbits with a plain metric.
pub fn oracle_greedy(orbits: &[Vec<Vec<f64>>], m: usize, eps: f64, dist: &dyn Fn(&[f64], &[f64]) -> f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..orbits.len() {
        let far = kept.iter().all(|&k| (0..m).map(|p| dist(&orbits[j][p], &orbits[k][p])).fold(0.0, f64::max) >= eps);
        if far {
            kept.push(j);
        }
    }
    kept
}

pub fn oracle_slope(counts: &[usize], ms: &[usize]) -> f64 {
    let n = ms.len() as f64;
    let x: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let num: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

pub fn oracle_entropy(orbits: &[Vec<Vec<f64>>], eps: &[f64], ms: &[usize], dist: &dyn Fn(&[f64], &[f64]) -> f64) -> f64 {
    eps.iter()
        .map(|&e| {
            let counts: Vec<usize> = ms.iter().map(|&m| oracle_greedy(orbits, m, e, dist).len()).collect();
            oracle_slope(&counts, ms)
        })
        .sum::<f64>()
        / eps.len() as f64
}

pub fn circle_orbits(thetas: &[f64], m: usize, step: impl Fn(f64) -> f64) -> Vec<Vec<Vec<f64>>> {
    thetas
        .iter()
        .map(|&t| {
            let mut x = t;
            (0..m)
                .map(|_| {
                    let v = vec![x];
                    x = step(x);
                    v
                })
                .collect()
        })
        .collect()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Real orbits of (x, y) ↦ (x² − 4 − 0.1y, x).
pub fn horseshoe_orbits(points: &[CVec], m: usize) -> Vec<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|p| {
            let (mut x, mut y) = (p[0].re, p[1].re);
            (0..m)
                .map(|_| {
                    let v = vec![x, y];
                    (x, y) = (x * x - 4.0 - 0.1 * y, x);
                    v
                })
                .collect()
        })
        .collect()
}

/// A 2000-point horseshoe cycle with a uniformly random itinerary.
pub fn horseshoe_samples(seed: u64) -> Vec<CVec> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sym: Vec<u8> = (0..2000).map(|_| rng.random_range(0..2u8)).collect();
    itinerary_cycle(&horseshoe(), &sym).unwrap()
}

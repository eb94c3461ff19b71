//! Separated sets, entropy estimates, recurrence harvesting and the horseshoe coding.

pub mod measure;
pub mod tree;

use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::orbit::{window_distance, OrbitWindow};
use crate::system::System;

pub use measure::{
    check_semiconjugacy, coded_entropy, coding_continuity, pushforward_stats, random_words, separation_invariant, ContinuityReport,
    FunctionStats, MeasureReport, SemiconjugacyReport, SeparationReport, TestFunction,
};
pub use tree::{build_coding_tree, graph_gap, CodingParams, CodingTree, Family, Leg};

/// A greedy maximal (m, ε)-separated subset of a candidate list.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedSet {
    /// Indices into the candidate list, in selection order.
    pub points: Vec<usize>,
    pub m: usize,
    pub eps: f64,
    /// Smallest Bowen distance between two selected points (∞ for fewer than two).
    pub min_separation: f64,
}

impl SeparatedSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// x, f(x), …, f^{m−1}(x) for every point.
pub fn bowen_orbits(system: &System, points: &[CVec], m: usize) -> Result<Vec<Vec<CVec>>> {
    points
        .iter()
        .map(|p| {
            let mut out = Vec::with_capacity(m);
            let mut x = p.clone();
            system.normalize(x.as_mut_slice());
            for step in 0..m {
                if step > 0 {
                    x = system.apply(&x)?;
                }
                out.push(x.clone());
            }
            Ok(out)
        })
        .collect()
}

/// max_{p<m} d(f^p x, f^p y) on precomputed orbits.
pub fn bowen_distance(system: &System, a: &[CVec], b: &[CVec], m: usize) -> f64 {
    let model = system.model();
    (0..m).map(|p| model.delta(&a[p], &b[p]).norm()).fold(0.0, f64::max)
}

/// Greedy selection over precomputed orbits of length ≥ m, in list order.
pub fn separated_from_orbits(system: &System, orbits: &[Vec<CVec>], m: usize, eps: f64) -> SeparatedSet {
    let mut points: Vec<usize> = Vec::new();
    let mut min_separation = f64::INFINITY;
    for (j, orb) in orbits.iter().enumerate() {
        let mut nearest = f64::INFINITY;
        for &k in &points {
            let d = bowen_distance(system, orb, &orbits[k], m);
            nearest = nearest.min(d);
            if d < eps {
                break;
            }
        }
        if nearest >= eps {
            min_separation = min_separation.min(nearest);
            points.push(j);
        }
    }
    SeparatedSet { points, m, eps, min_separation }
}

/// Greedy maximal (m, ε)-separated subset of `points`.
pub fn bowen_separated(system: &System, points: &[CVec], m: usize, eps: f64) -> Result<SeparatedSet> {
    let orbits = bowen_orbits(system, points, m)?;
    Ok(separated_from_orbits(system, &orbits, m, eps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropySlope {
    pub eps: f64,
    pub slope: f64,
    /// Root-mean-square residual of the linear fit of log card against m.
    pub residual: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate {
    pub h: f64,
    pub m: Vec<usize>,
    pub slopes: Vec<EntropySlope>,
    pub warnings: Vec<String>,
}

/// Least-squares slope and rms residual of y against x.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icept, rms)
}

/// Slope of log card(separated set) against m, averaged over the ε list.
pub fn entropy_estimate(system: &System, samples: &[CVec], eps_list: &[f64], m_list: &[usize]) -> Result<EntropyEstimate> {
    if samples.len() < 1000 {
        return Err(Error::TooFewSamples { got: samples.len(), need: 1000 });
    }
    if m_list.len() < 2 || eps_list.is_empty() {
        return Err(Error::Config("entropy needs at least two m values and one ε".into()));
    }
    let m_max = *m_list.iter().max().unwrap_or(&1);
    let orbits = bowen_orbits(system, samples, m_max)?;
    entropy_from_orbits(system, &orbits, eps_list, m_list)
}

/// [`entropy_estimate`] on orbits already computed to length max(m_list).
pub fn entropy_from_orbits(system: &System, orbits: &[Vec<CVec>], eps_list: &[f64], m_list: &[usize]) -> Result<EntropyEstimate> {
    let mut slopes = Vec::new();
    let mut warnings = Vec::new();
    let xs: Vec<f64> = m_list.iter().map(|&m| m as f64).collect();
    for &eps in eps_list {
        let counts: Vec<usize> = m_list.iter().map(|&m| separated_from_orbits(system, orbits, m, eps).len()).collect();
        if counts.windows(2).any(|w| w[1] < w[0]) {
            warnings.push(format!("non-monotone counts at eps={eps}: {counts:?}"));
        }
        if counts.contains(&orbits.len()) {
            warnings.push(format!("every sample separated at eps={eps}; counts saturate"));
        }
        let ys: Vec<f64> = counts.iter().map(|&c| (c.max(1) as f64).ln()).collect();
        let (slope, _, residual) = fit_line(&xs, &ys);
        slopes.push(EntropySlope { eps, slope, residual, counts });
    }
    let h = slopes.iter().map(|s| s.slope).sum::<f64>() / slopes.len() as f64;
    Ok(EntropyEstimate { h, m: m_list.to_vec(), slopes, warnings })
}

/// Center ŷ, return time and members x with x̂ and f̂^n(x̂) both η-close to ŷ.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnFamily {
    pub center: i64,
    pub n: usize,
    pub members: Vec<i64>,
    pub eta: f64,
    /// (d(x̂, ŷ), d(f̂^n x̂, ŷ)) per member.
    pub distances: Vec<(f64, f64)>,
}

impl ReturnFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Where the window distance looks back and how it discounts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvestParams {
    pub eta: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub depth: usize,
    pub weight: f64,
    /// Keep at most this many members (closest first).
    pub max_members: usize,
}

/// Chooses (n, ŷ) with the most members among the separated points; ties go to
/// the smaller n, then the earlier center. Members are listed in window order.
pub fn harvest_returns(system: &System, w: &OrbitWindow, separated: &[i64], p: &HarvestParams) -> Result<ReturnFamily> {
    let dist = |a: i64, b: i64| window_distance(system, w, a, w, b, p.depth, p.weight);
    let mut best: Option<ReturnFamily> = None;
    for n in p.n_min..=p.n_max {
        for &y in separated {
            let mut found: Vec<(i64, f64, f64)> = Vec::new();
            for &x in separated {
                if !w.contains(x + n as i64) {
                    continue;
                }
                let d0 = dist(x, y);
                if d0 >= p.eta {
                    continue;
                }
                let d1 = dist(x + n as i64, y);
                if d1 < p.eta {
                    found.push((x, d0, d1));
                }
            }
            if found.len() > p.max_members {
                found.sort_by(|a, b| a.1.max(a.2).total_cmp(&b.1.max(b.2)).then(a.0.cmp(&b.0)));
                found.truncate(p.max_members);
                found.sort_by_key(|f| f.0);
            }
            if best.as_ref().is_none_or(|b| found.len() > b.members.len()) && !found.is_empty() {
                best = Some(ReturnFamily {
                    center: y,
                    n,
                    members: found.iter().map(|f| f.0).collect(),
                    eta: p.eta,
                    distances: found.iter().map(|f| (f.1, f.2)).collect(),
                });
            }
        }
    }
    best.ok_or(Error::NoRecurrence)
}

/// A random concatenation of symbol blocks, for itinerary samples built from
/// prescribed excursions.
pub fn block_itinerary(blocks: &[Vec<u8>], count: usize, seed: u64) -> Vec<u8> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..count {
        out.extend_from_slice(&blocks[rng.random_range(0..blocks.len())]);
    }
    out
}

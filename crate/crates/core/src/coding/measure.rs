//! Checks on the coding map: σ-equivariance, continuity in the word metric,
//! and the pushed-forward Bernoulli measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coding::tree::CodingTree;
use crate::coding::{entropy_from_orbits, EntropyEstimate};
use crate::error::Result;
use crate::linalg::{op_norm, CMat, CVec};

/// Uniform i.i.d. words of the given length.
pub fn random_words(rng: &mut ChaCha8Rng, alphabet: usize, len: usize, count: usize) -> Vec<Vec<u8>> {
    (0..count).map(|_| (0..len).map(|_| rng.random_range(0..alphabet) as u8).collect()).collect()
}

/// f^n(z) and a roundoff estimate ‖Df^n(z)‖·4u·max(1, ‖z‖).
fn iterate_with_growth(tree: &CodingTree, z: &CVec) -> Result<(CVec, f64)> {
    let sys = &tree.cw.system;
    let mut x = z.clone();
    let mut d = CMat::identity(z.len(), z.len());
    for _ in 0..tree.n() {
        d = sys.jacobian(&x) * d;
        x = sys.apply(&x)?;
    }
    Ok((x, op_norm(&d) * 4.0 * f64::EPSILON * z.norm().max(1.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiconjugacyReport {
    pub samples: usize,
    pub max_residual: f64,
    pub truncation_bound: f64,
    /// Largest ‖Df^n‖·(rounding of S_0(w)) over the samples.
    pub roundoff: f64,
    pub pass: bool,
}

/// max ‖f^n(S_0(w)) − S_0(σw)‖ over words of length 2Lw+2 (w_{−Lw} … w_{Lw+1}).
pub fn check_semiconjugacy(tree: &CodingTree, words: &[Vec<u8>]) -> Result<SemiconjugacyReport> {
    let lw = tree.params.depth;
    let model = tree.cw.system.model();
    let mut max_residual: f64 = 0.0;
    let mut roundoff: f64 = 0.0;
    for w in words {
        let z = tree.coding_point(&w[..2 * lw + 1])?;
        let shifted = tree.coding_point(&w[1..2 * lw + 2])?;
        let (fz, err) = iterate_with_growth(tree, &z)?;
        max_residual = max_residual.max(model.delta(&fz, &shifted).norm());
        roundoff = roundoff.max(err);
    }
    let truncation_bound = tree.truncation_bound();
    let pass = max_residual <= 10.0 * (truncation_bound + roundoff);
    Ok(SemiconjugacyReport { samples: words.len(), max_residual, truncation_bound, roundoff, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityRow {
    pub p: usize,
    pub max_distance: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub rows: Vec<ContinuityRow>,
    pub max_ratio: f64,
}

/// For word pairs agreeing on |i| < p, ‖S_0(w) − S_0(w′)‖ against (C/r0)·8h·e^{−2γnp+2γp};
/// for p = 0 the bound is the diameter of the chart box at ŷ.
pub fn coding_continuity(tree: &CodingTree, p_max: usize, pairs: usize, chart_constant: f64, seed: u64) -> Result<ContinuityReport> {
    let lw = tree.params.depth;
    let len = 2 * lw + 1;
    let nsym = tree.symbols();
    let b = &tree.params.budget;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for p in 0..=p_max.min(lw + 1) {
        let bound = if p == 0 {
            2.0 * 2f64.sqrt() * tree.cw.frame(tree.family.center).norm() * b.gamma.exp() * tree.hr
        } else {
            chart_constant / b.r0 * 8.0 * b.h * (-2.0 * b.gamma * (tree.n() * p) as f64 + 2.0 * b.gamma * p as f64).exp()
        };
        let mut max_distance: f64 = 0.0;
        for _ in 0..pairs {
            let w = random_words(&mut rng, nsym, len, 1).remove(0);
            let mut v = random_words(&mut rng, nsym, len, 1).remove(0);
            for i in 0..len {
                if (i as i64 - lw as i64).unsigned_abs() < p as u64 {
                    v[i] = w[i];
                }
            }
            let d = tree.cw.system.model().delta(&tree.coding_point(&w)?, &tree.coding_point(&v)?).norm();
            max_distance = max_distance.max(d);
        }
        rows.push(ContinuityRow { p, max_distance, bound, ratio: max_distance / bound });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(ContinuityReport { rows, max_ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    ReX,
    ImX,
    ReY,
    ImY,
}

impl TestFunction {
    pub fn eval(self, z: &CVec) -> f64 {
        match self {
            TestFunction::ReX => z[0].re,
            TestFunction::ImX => z[0].im,
            TestFunction::ReY => z[z.len().min(2) - 1].re,
            TestFunction::ImY => z[z.len().min(2) - 1].im,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::ReX => "re_x",
            TestFunction::ImX => "im_x",
            TestFunction::ReY => "re_y",
            TestFunction::ImY => "im_y",
        }
    }

    pub fn parse(s: &str) -> Option<TestFunction> {
        [TestFunction::ReX, TestFunction::ImX, TestFunction::ReY, TestFunction::ImY].into_iter().find(|f| f.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionStats {
    pub function: TestFunction,
    /// ∫φ dν.
    pub integral: f64,
    /// |∫φ dν − ∫φ∘f dν|.
    pub invariance_defect: f64,
    /// Monte-Carlo standard error of the defect.
    pub standard_error: f64,
    /// Birkhoff average along the reference orbit.
    pub orbit_average: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub words: usize,
    pub stats: Vec<FunctionStats>,
}

/// Monte-Carlo integrals against ν = (1/n)Σ_{l<n} f^l_*(S_0)_*λ_0 over uniform words.
pub fn pushforward_stats(
    tree: &CodingTree,
    functions: &[TestFunction],
    words: usize,
    reference: &[CVec],
    seed: u64,
) -> Result<MeasureReport> {
    let lw = tree.params.depth;
    let n = tree.n();
    let sys = &tree.cw.system;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = random_words(&mut rng, tree.symbols(), 2 * lw + 1, words);
    let k = functions.len();
    let mut sum = vec![0.0; k];
    let mut dsum = vec![0.0; k];
    let mut dsq = vec![0.0; k];
    for w in &sample {
        let z = tree.coding_point(w)?;
        let mut x = z.clone();
        let mut local = vec![0.0; k];
        for _ in 0..n {
            for (a, f) in functions.iter().enumerate() {
                local[a] += f.eval(&x);
            }
            x = sys.apply(&x)?;
        }
        for (a, f) in functions.iter().enumerate() {
            sum[a] += local[a] / n as f64;
            let d = (f.eval(&x) - f.eval(&z)) / n as f64;
            dsum[a] += d;
            dsq[a] += d * d;
        }
    }
    let wn = words as f64;
    let stats = functions
        .iter()
        .enumerate()
        .map(|(a, &f)| {
            let mean = dsum[a] / wn;
            let var = if words > 1 { ((dsq[a] - wn * mean * mean) / (wn - 1.0)).max(0.0) } else { 0.0 };
            let orbit_average = reference.iter().map(|z| f.eval(z)).sum::<f64>() / reference.len().max(1) as f64;
            FunctionStats { function: f, integral: sum[a] / wn, invariance_defect: mean.abs(), standard_error: (var / wn).sqrt(), orbit_average }
        })
        .collect();
    Ok(MeasureReport { words, stats })
}

/// Separated-set entropy of f on the coded set, from the f-orbits of coded points.
/// The orbit of S_0(w) is read piecewise as f^r(S_0(σ^p w)), r < n, which keeps
/// the error growth over one return time.
pub fn coded_entropy(tree: &CodingTree, words: usize, blocks: &[usize], eps: &[f64], seed: u64) -> Result<EntropyEstimate> {
    let lw = tree.params.depth;
    let n = tree.n();
    let kmax = blocks.iter().copied().max().unwrap_or(1);
    let sys = &tree.cw.system;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = random_words(&mut rng, tree.symbols(), 2 * lw + kmax, words);
    let mut orbits = Vec::with_capacity(words);
    for w in &sample {
        let mut orbit = Vec::with_capacity(kmax * n);
        for p in 0..kmax {
            let mut x = tree.coding_point(&w[p..p + 2 * lw + 1])?;
            for _ in 0..n {
                orbit.push(x.clone());
                x = sys.apply(&x)?;
            }
        }
        orbits.push(orbit);
    }
    let m: Vec<usize> = blocks.iter().map(|k| k * n).collect();
    entropy_from_orbits(sys, &orbits, eps, &m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub words: usize,
    /// Ambient lower bound for the gap between first-symbol vertical families.
    pub alpha: f64,
    /// min over word pairs of max over shifts of ‖S_0(σ^p w) − S_0(σ^p w′)‖.
    pub min_separation: f64,
    pub pass: bool,
}

/// Points coded by distinct words, followed through f^n by the shift, are
/// α-separated at some return. One-sided: words w_0 … w_l with shifts 0 … l.
/// Two-sided: words w_{−l} … w_l with shifts −l … l. Symbols outside the word are 0.
pub fn separation_invariant(tree: &CodingTree, l: usize, two_sided: bool) -> Result<SeparationReport> {
    let lw = tree.params.depth;
    if l > lw {
        return Err(crate::error::Error::Config(format!("separation depth {l} exceeds the tree depth {lw}")));
    }
    let nsym = tree.symbols();
    let (lo, len) = if two_sided { (-(l as i64), 2 * l + 1) } else { (0, l + 1) };
    let count = nsym.pow(len as u32);
    let shifts: Vec<i64> = (lo..=l as i64).collect();
    let mut points: Vec<Vec<CVec>> = Vec::with_capacity(count);
    for code in 0..count {
        let mut word = vec![0u8; len];
        let mut c = code;
        for s in word.iter_mut() {
            *s = (c % nsym) as u8;
            c /= nsym;
        }
        let symbol = |i: i64| -> u8 {
            let k = i - lo;
            if k >= 0 && (k as usize) < len {
                word[k as usize]
            } else {
                0
            }
        };
        let mut row = Vec::with_capacity(shifts.len());
        for &p in &shifts {
            let window: Vec<u8> = (-(lw as i64)..=lw as i64).map(|i| symbol(i + p)).collect();
            row.push(tree.coding_point(&window)?);
        }
        points.push(row);
    }
    let gap = tree.vertical_gaps.get(1).copied().unwrap_or(0.0);
    let alpha = gap / tree.cw.frame(tree.family.center).inv_norm();
    let model = tree.cw.system.model();
    let mut min_separation = f64::INFINITY;
    for a in 0..count {
        for b in a + 1..count {
            let mut best: f64 = 0.0;
            for (pa, pb) in points[a].iter().zip(&points[b]) {
                best = best.max(model.delta(pa, pb).norm());
                if best >= alpha {
                    break;
                }
            }
            min_separation = min_separation.min(best);
        }
    }
    Ok(SeparationReport { words: count, alpha, min_separation, pass: count < 2 || min_separation >= alpha })
}

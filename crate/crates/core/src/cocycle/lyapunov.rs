//! Finite-time exponents, the Oseledets splitting and the Lyapunov basis C_γ.

use nalgebra::linalg::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::SplitFrame;
use crate::error::{Error, Result};
use crate::linalg::{c, inverse, min_singular, op_norm, orthonormalize, principal_angle, CMat, M2, V2, ZERO};
use crate::orbit::OrbitWindow;
use crate::system::System;

/// Largest entry tolerated in the Lyapunov-norm sums.
pub const OVERFLOW: f64 = 1e300;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSpectrum {
    /// χ_1 ≥ … ≥ χ_k, in nats per iterate.
    pub exponents: Vec<f64>,
    /// Number of positive exponents.
    pub m0: usize,
    /// χ_{m0} − χ_{m0+1}; infinite when one side is empty.
    pub gap: f64,
    pub steps: usize,
    pub singular_steps: usize,
}

impl LyapunovSpectrum {
    pub fn from_exponents(mut exponents: Vec<f64>, steps: usize) -> LyapunovSpectrum {
        exponents.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let m0 = exponents.iter().filter(|&&e| e > 0.0).count();
        let gap = if m0 == 0 || m0 == exponents.len() { f64::INFINITY } else { exponents[m0 - 1] - exponents[m0] };
        LyapunovSpectrum { exponents, m0, gap, steps, singular_steps: 0 }
    }

    pub fn k(&self) -> usize {
        self.exponents.len()
    }

    pub fn chi_top(&self) -> f64 {
        self.exponents[0]
    }

    /// χ_{m0}, the smallest positive exponent.
    pub fn chi_u(&self) -> f64 {
        self.exponents[self.m0.max(1) - 1]
    }

    /// χ_{m0+1}, the largest non-positive exponent.
    pub fn chi_s(&self) -> f64 {
        self.exponents[self.m0.min(self.k() - 1)]
    }

    pub fn chi_bottom(&self) -> f64 {
        self.exponents[self.k() - 1]
    }

    /// 1 ≤ m0 ≤ k−1 and gap > 0.
    pub fn require_hyperbolic(&self) -> Result<()> {
        if self.m0 == 0 || self.m0 == self.k() || self.gap <= 0.0 {
            return Err(Error::NoGap);
        }
        Ok(())
    }
}

/// Gram–Schmidt on the columns of a 2×2 matrix; returns (Q, |R11|, |R22|).
fn qr2(m: &M2) -> (M2, f64, f64) {
    let a = V2::new(m[(0, 0)], m[(1, 0)]);
    let b = V2::new(m[(0, 1)], m[(1, 1)]);
    let r11 = a.norm();
    let q1 = if r11 > 0.0 { a / c(r11, 0.0) } else { V2::new(c(1.0, 0.0), ZERO) };
    let proj = q1.dotc(&b);
    let mut v = b - q1 * proj;
    let proj2 = q1.dotc(&v);
    v -= q1 * proj2;
    let r22 = v.norm();
    let q2 = if r22 > 0.0 { v / c(r22, 0.0) } else { V2::new(-q1[1].conj(), q1[0].conj()) };
    (M2::new(q1[0], q2[0], q1[1], q2[1]), r11, r22)
}

/// QR accumulation of log|R_ii| along the window. The first tenth of the steps only
/// aligns the frame and is not accumulated.
pub fn finite_lyapunov(system: &System, w: &OrbitWindow) -> Result<LyapunovSpectrum> {
    let total = w.len().saturating_sub(1);
    if total < 100 {
        return Err(Error::WindowTooShort { got: total, need: 100 });
    }
    let warmup = w.first_index() + (total / 10) as i64;
    let steps = total - total / 10;
    let k = system.dim();
    let mut sums = vec![0.0; k];
    let mut singular = 0usize;
    let mut jac = vec![ZERO; k * k];
    if k == 2 {
        let mut q = M2::identity();
        for i in w.first_index()..w.last_index() {
            system.jac_into(w.at(i), &mut jac);
            let df = M2::new(jac[0], jac[1], jac[2], jac[3]);
            let (q_new, r1, r2) = qr2(&(df * q));
            let scale = df.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if !(r1.is_finite() && r2.is_finite()) || r1 <= 1e-14 * scale || r2 <= 1e-14 * scale {
                if i >= warmup {
                    singular += 1;
                }
                continue;
            }
            if i >= warmup {
                sums[0] += r1.ln();
                sums[1] += r2.ln();
            }
            q = q_new;
        }
    } else {
        let mut q = CMat::identity(k, k);
        for i in w.first_index()..w.last_index() {
            system.jac_into(w.at(i), &mut jac);
            let df = CMat::from_row_slice(k, k, &jac);
            let qr = (&df * &q).qr();
            let r = qr.r();
            let scale = df.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let diag: Vec<f64> = (0..k).map(|j| r[(j, j)].norm()).collect();
            if diag.iter().any(|&d| !d.is_finite() || d <= 1e-14 * scale) {
                if i >= warmup {
                    singular += 1;
                }
                continue;
            }
            if i >= warmup {
                for j in 0..k {
                    sums[j] += diag[j].ln();
                }
            }
            q = qr.q();
        }
    }
    if singular * 100 > steps {
        return Err(Error::TooManySingular { singular, steps });
    }
    let used = (steps - singular) as f64;
    let mut spec = LyapunovSpectrum::from_exponents(sums.into_iter().map(|s| s / used).collect(), steps);
    spec.singular_steps = singular;
    Ok(spec)
}

/// Per-index bases of E_u and E_s (orthonormal columns), indexed from the window start.
#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    pub k1: usize,
    first: i64,
    pub eu: Vec<CMat>,
    pub es: Vec<CMat>,
}

impl Splitting {
    pub fn eu(&self, i: i64) -> &CMat {
        &self.eu[(i - self.first) as usize]
    }

    pub fn es(&self, i: i64) -> &CMat {
        &self.es[(i - self.first) as usize]
    }

    pub fn first_index(&self) -> i64 {
        self.first
    }

    pub fn last_index(&self) -> i64 {
        self.first + self.eu.len() as i64 - 1
    }
}

fn random_frame(rng: &mut ChaCha8Rng, k: usize, cols: usize) -> CMat {
    let m = CMat::from_fn(k, cols, |_, _| c(rng.random_range(-1.0..1.0), 0.0));
    orthonormalize(&m)
}

/// Pushes a random k1-frame forward and pulls a random k2-frame backward.
pub fn oseledets_splitting(system: &System, w: &OrbitWindow, spectrum: &LyapunovSpectrum) -> Result<Splitting> {
    spectrum.require_hyperbolic()?;
    let need = 50;
    if w.back() < need || w.forward() < need {
        return Err(Error::WindowTooShort { got: w.back().min(w.forward()), need });
    }
    let k = system.dim();
    let k1 = spectrum.m0;
    let k2 = k - k1;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let n = w.len();
    let mut eu = Vec::with_capacity(n);
    let mut u = random_frame(&mut rng, k, k1);
    eu.push(u.clone());
    for i in w.first_index()..w.last_index() {
        u = orthonormalize(&(system.jacobian(&w.get(i)?) * &u));
        eu.push(u.clone());
    }
    let mut es = vec![CMat::zeros(k, k2); n];
    let mut s = random_frame(&mut rng, k, k2);
    es[n - 1] = s.clone();
    for i in (w.first_index()..w.last_index()).rev() {
        let df = system.jacobian(&w.get(i)?);
        let pulled = match df.clone().lu().solve(&s) {
            Some(p) if p.iter().all(|z| z.re.is_finite() && z.im.is_finite()) && min_singular(&df) > 1e-14 * op_norm(&df) => p,
            _ => df.svd(true, true).solve(&s, 1e-14).map_err(|e| Error::NoConvergence(e.to_string()))?,
        };
        s = orthonormalize(&pulled);
        es[(i - w.first_index()) as usize] = s.clone();
    }
    for (j, (u, s)) in eu.iter().zip(&es).enumerate() {
        let angle = principal_angle(u, s);
        if angle < 1e-4 {
            return Err(Error::SplittingDegenerate { index: w.first_index() + j as i64, angle });
        }
    }
    Ok(Splitting { k1, first: w.first_index(), eu, es })
}

/// max_i angle(Df(x_i)E_u(i), E_u(i+1)) and the same for E_s.
pub fn invariance_residual(system: &System, w: &OrbitWindow, sp: &Splitting) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in w.first_index()..w.last_index() {
        let df = system.jacobian(&w.get(i)?);
        let pu = orthonormalize(&(&df * sp.eu(i)));
        let ps = orthonormalize(&(&df * sp.es(i)));
        let du = op_norm(&(sp.eu(i + 1) - &pu * (pu.adjoint() * sp.eu(i + 1))));
        let ds = op_norm(&(sp.es(i + 1) - &ps * (ps.adjoint() * sp.es(i + 1))));
        worst = worst.max(du.min(1.0).asin()).max(ds.min(1.0).asin());
    }
    Ok(worst)
}

fn inv_sqrt_hermitian(g: &CMat) -> Result<CMat> {
    if g.nrows() == 1 {
        return Ok(CMat::from_element(1, 1, c(1.0 / g[(0, 0)].re.sqrt(), 0.0)));
    }
    let herm = (g + g.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Singular);
    }
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|l| c(1.0 / l.sqrt(), 0.0)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Lyapunov frames along the window plus the block-bound warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovBasis {
    pub frames: Vec<SplitFrame>,
    pub warnings: Vec<String>,
    /// Indices whose conjugated one-step map misses the block bounds by more than 5%.
    pub flagged: Vec<i64>,
}

/// Blocks of P_{i+1}^{-1} Df(x_i) P_i where P = [E_u E_s].
fn block_cocycle(system: &System, w: &OrbitWindow, sp: &Splitting) -> Result<Vec<(CMat, CMat)>> {
    let k1 = sp.k1;
    let mut out = Vec::with_capacity(w.len());
    let basis = |i: i64| {
        let u = sp.eu(i);
        let s = sp.es(i);
        let k = u.nrows();
        let mut p = CMat::zeros(k, k);
        p.columns_mut(0, k1).copy_from(u);
        p.columns_mut(k1, k - k1).copy_from(s);
        p
    };
    for i in w.first_index()..w.last_index() {
        let t = inverse(&basis(i + 1))? * system.jacobian(&w.get(i)?) * basis(i);
        let k = t.nrows();
        out.push((t.view((0, 0), (k1, k1)).into_owned(), t.view((k1, k1), (k - k1, k - k1)).into_owned()));
    }
    Ok(out)
}

/// Gram matrices of the truncated Lyapunov norm on one block, normalized by the
/// same truncated sums for a cocycle growing exactly at the block rates.
fn block_gram(ts: &[CMat], chi_top: f64, chi_bottom: f64, gamma: f64, first: i64) -> Result<Vec<CMat>> {
    let n = ts.len() + 1;
    let d = ts.first().map_or(1, |t| t.nrows());
    let wf = (-2.0 * (chi_top + gamma)).exp();
    let wh = (2.0 * (chi_bottom - gamma)).exp();
    let id = CMat::identity(d, d);
    let overflow = |m: &CMat, j: usize| -> Result<()> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite() || z.norm() > OVERFLOW) {
            return Err(Error::LyapunovOverflow { index: first + j as i64, suggested: (n / 2).max(1) });
        }
        Ok(())
    };
    let mut f = vec![id.clone(); n];
    let mut f0 = vec![1.0; n];
    for j in (0..n - 1).rev() {
        let t = &ts[j];
        f[j] = &id + t.adjoint() * &f[j + 1] * t * c(wf, 0.0);
        overflow(&f[j], j)?;
        f0[j] = 1.0 + (-2.0 * gamma).exp() * f0[j + 1];
    }
    let mut h = vec![CMat::zeros(d, d); n];
    let mut h0 = vec![0.0; n];
    if wh > 0.0 {
        for j in 0..n - 1 {
            let tinv = match inverse(&ts[j]) {
                Ok(m) => m,
                Err(_) => return Err(Error::LyapunovOverflow { index: first + j as i64, suggested: (n / 2).max(1) }),
            };
            h[j + 1] = tinv.adjoint() * (&id + &h[j]) * tinv * c(wh, 0.0);
            overflow(&h[j + 1], j + 1)?;
            h0[j + 1] = (-2.0 * gamma).exp() * (1.0 + h0[j]);
        }
    }
    Ok((0..n).map(|j| (&f[j] + &h[j]) * c(1.0 / (f0[j] + h0[j]), 0.0)).collect())
}

/// C_γ(i) = [E_u G_u^{−1/2}, E_s G_s^{−1/2}] with the block bounds re-checked.
pub fn lyapunov_basis(
    system: &System,
    w: &OrbitWindow,
    sp: &Splitting,
    spectrum: &LyapunovSpectrum,
    gamma: f64,
) -> Result<LyapunovBasis> {
    spectrum.require_hyperbolic()?;
    let blocks = block_cocycle(system, w, sp)?;
    let (tu, ts): (Vec<CMat>, Vec<CMat>) = blocks.into_iter().unzip();
    let first = w.first_index();
    let gu = block_gram(&tu, spectrum.chi_top(), spectrum.chi_u(), gamma, first)?;
    let chi_b = spectrum.chi_bottom();
    let gs = block_gram(&ts, spectrum.chi_s(), if chi_b.is_finite() { chi_b } else { f64::NEG_INFINITY }, gamma, first)?;
    let k = system.dim();
    let k1 = sp.k1;
    let mut frames = Vec::with_capacity(w.len());
    for j in 0..w.len() {
        let i = first + j as i64;
        let mut cg = CMat::zeros(k, k);
        cg.columns_mut(0, k1).copy_from(&(sp.eu(i) * inv_sqrt_hermitian(&gu[j])?));
        cg.columns_mut(k1, k - k1).copy_from(&(sp.es(i) * inv_sqrt_hermitian(&gs[j])?));
        frames.push(SplitFrame::new(cg, k1).map_err(|e| e.context(format!("frame at index {i}")))?);
    }
    let mut warnings = Vec::new();
    let mut flagged = Vec::new();
    let slack = 1.05;
    for i in first..w.last_index() {
        let j = (i - first) as usize;
        let a = &frames[j + 1].c_gamma_inv * system.jacobian(&w.get(i)?) * &frames[j].c_gamma;
        let au = a.view((0, 0), (k1, k1)).into_owned();
        let as_ = a.view((k1, k1), (k - k1, k - k1)).into_owned();
        let mut bad = Vec::new();
        if min_singular(&au) < (spectrum.chi_u() - gamma).exp() / slack {
            bad.push("unstable lower");
        }
        if op_norm(&au) > (spectrum.chi_top() + gamma).exp() * slack {
            bad.push("unstable upper");
        }
        if op_norm(&as_) > (spectrum.chi_s() + gamma).exp() * slack {
            bad.push("stable upper");
        }
        if chi_b.is_finite() && min_singular(&as_) < (chi_b - gamma).exp() / slack {
            bad.push("stable lower");
        }
        if !bad.is_empty() {
            flagged.push(i);
            if warnings.len() < 8 {
                warnings.push(format!("block bound miss at index {i}: {}", bad.join(", ")));
            }
        }
    }
    if flagged.len() > warnings.len() {
        warnings.push(format!("{} indices miss the block bounds by more than 5%", flagged.len()));
    }
    Ok(LyapunovBasis { frames, warnings, flagged })
}

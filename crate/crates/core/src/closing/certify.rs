//! Independent checks on a closed orbit: Newton polish, eigenvalues of Df^m, tangent growth.

use crate::error::{Error, Result};
use crate::linalg::{c, eigenvalues, CMat, CVec, C64, ONE, ZERO};
use crate::orbit::{shooting_newton, DIVERGENCE_NORM};
use crate::system::System;

#[derive(Debug, Clone, PartialEq)]
pub struct PolishReport {
    pub z: CVec,
    pub iterations: usize,
    /// ‖f^m(z) − z‖.
    pub residual: f64,
    pub converged: bool,
    pub note: String,
}

/// f^m(z) for m ≥ 0, wrapped into the model.
pub fn iterate(system: &System, z: &CVec, m: usize) -> Result<CVec> {
    let mut p = z.clone();
    for _ in 0..m {
        p = system.apply(&p)?;
    }
    Ok(p)
}

/// ‖f^m(z) − z‖ in model coordinates.
pub fn periodic_residual(system: &System, z: &CVec, m: usize) -> Result<f64> {
    Ok(system.model().delta(&iterate(system, z, m)?, z).norm())
}

/// Multiple-shooting Newton on f^m(z) = z from the orbit of z0. Failures are reported, not raised.
pub fn newton_polish(system: &System, z0: &CVec, m: usize) -> PolishReport {
    let failed = |note: String| PolishReport { z: z0.clone(), iterations: 0, residual: f64::INFINITY, converged: false, note };
    let mut guess = vec![z0.clone()];
    for _ in 1..m.max(1) {
        match system.apply(guess.last().unwrap()) {
            Ok(p) if p.norm() <= DIVERGENCE_NORM => guess.push(p),
            Ok(p) => return failed(format!("orbit of the start diverges (norm {:e})", p.norm())),
            Err(e) => return failed(e.to_string()),
        }
    }
    match system.apply(guess.last().unwrap()) {
        Ok(p) if p.norm() <= DIVERGENCE_NORM => {}
        Ok(p) => return failed(format!("orbit of the start diverges (norm {:e})", p.norm())),
        Err(e) => return failed(e.to_string()),
    }
    match shooting_newton(system, &guess) {
        Ok((cycle, iterations)) => {
            let z = cycle[0].clone();
            if z.norm() > DIVERGENCE_NORM {
                return failed("Newton diverged".into());
            }
            let residual = periodic_residual(system, &z, m).unwrap_or(f64::INFINITY);
            PolishReport { z, iterations, residual, converged: true, note: String::new() }
        }
        Err(e) => failed(e.to_string()),
    }
}

/// Df^m(z) as (normalized product, log of the scale, determinant).
fn balanced_product(system: &System, z: &CVec, m: usize) -> Result<(CMat, f64, C64)> {
    let k = system.dim();
    let mut p = CMat::identity(k, k);
    let mut log_scale = 0.0;
    let mut det = ONE;
    let mut x = z.clone();
    for _ in 0..m {
        let j = system.jacobian(&x);
        det *= j.determinant();
        p = j * p;
        let n = p.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Singular);
        }
        p /= c(n, 0.0);
        log_scale += n.ln();
        x = system.apply(&x)?;
    }
    Ok((p, log_scale, det))
}

/// Spectrum of Df^m(z) with the counts outside e^{±γ}.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    /// Sorted by decreasing modulus.
    pub eigenvalues: Vec<C64>,
    pub expanding: usize,
    pub contracting: usize,
    pub e_u: CVec,
    pub e_s: CVec,
}

fn null_vector2(a: C64, b: C64, cc: C64, d: C64) -> CVec {
    // Kernel of [[a, b], [cc, d]], from whichever row is larger.
    let v = if a.norm() + b.norm() >= cc.norm() + d.norm() { [b, -a] } else { [d, -cc] };
    let v = if v[0].norm() + v[1].norm() == 0.0 { [ONE, ZERO] } else { v };
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    CVec::from_vec(vec![v[0] / n, v[1] / n])
}

/// Eigenvalues of the chain-rule product Df^m(z); errors if one has modulus in (e^{−γ}, e^{γ}).
pub fn hyperbolicity_certificate(system: &System, z: &CVec, m: usize, gamma: f64) -> Result<EigenReport> {
    let (p, log_scale, det) = balanced_product(system, z, m)?;
    let k = system.dim();
    let (eigs, e_u, e_s) = if k == 2 {
        let mut mu = eigenvalues(&p);
        mu.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        let big = mu[0] * log_scale.exp();
        let small = if big.norm() > 0.0 { det / big } else { mu[1] * log_scale.exp() };
        let mu_small = small / log_scale.exp();
        let e_u = null_vector2(p[(0, 0)] - mu[0], p[(0, 1)], p[(1, 0)], p[(1, 1)] - mu[0]);
        let e_s = null_vector2(p[(0, 0)] - mu_small, p[(0, 1)], p[(1, 0)], p[(1, 1)] - mu_small);
        (vec![big, small], e_u, e_s)
    } else {
        let mut mu: Vec<C64> = eigenvalues(&p).into_iter().map(|a| a * log_scale.exp()).collect();
        mu.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        let unit = CVec::from_element(k, ONE) / c((k as f64).sqrt(), 0.0);
        (mu, unit.clone(), unit)
    };
    let up = gamma.exp();
    let down = (-gamma).exp();
    let expanding = eigs.iter().filter(|l| l.norm() >= up).count();
    let contracting = eigs.iter().filter(|l| l.norm() <= down).count();
    if expanding + contracting != eigs.len() {
        return Err(Error::NotCertified(format!(
            "eigenvalue moduli {:?} meet ({down}, {up})",
            eigs.iter().map(|l| l.norm()).collect::<Vec<_>>()
        )));
    }
    Ok(EigenReport { eigenvalues: eigs, expanding, contracting, e_u, e_s })
}

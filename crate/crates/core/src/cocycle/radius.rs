//! Pesin radius r and the charted window bundling frames, radii and local maps.

use std::sync::Arc;

use crate::chart::{Chart, SplitFrame};
use crate::cocycle::local::{ChartDynamics, LocalMap};
use crate::cocycle::lyapunov::{finite_lyapunov, lyapunov_basis, oseledets_splitting, LyapunovSpectrum};
use crate::error::{Error, Result};
use crate::linalg::{to_m2, CVec, V2};
use crate::orbit::OrbitWindow;
use crate::system::System;

/// The constants ε1, p, C in α = max(1, ‖C_γ‖/(ε1 d^p), 2C‖C_γ^{−1}(i+1)‖‖C_γ(i)‖² d^{−p}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PesinConstants {
    pub eps1: f64,
    pub p: f64,
    pub c: f64,
}

impl Default for PesinConstants {
    fn default() -> Self {
        PesinConstants { eps1: 0.1, p: 2.0, c: 10.0 }
    }
}

/// The untempered α(i).
pub fn raw_alpha(system: &System, w: &OrbitWindow, frames: &[SplitFrame], k: PesinConstants) -> Vec<f64> {
    let n = frames.len();
    (0..n)
        .map(|j| {
            let i = w.first_index() + j as i64;
            let d = system.dist_indeterminacy(w.at(i));
            let dp = d.powf(k.p);
            let cn = frames[j].norm();
            let next_inv = frames[(j + 1).min(n - 1)].inv_norm();
            1f64.max(cn / (k.eps1 * dp)).max(2.0 * k.c * next_inv * cn * cn / dp)
        })
        .collect()
}

/// α_γ(i) = sup_j α(i+j)·e^{−γ|j|}, by one forward and one backward pass.
pub fn tempered_envelope(alpha: &[f64], gamma: f64) -> Vec<f64> {
    let decay = (-gamma).exp();
    let mut env = alpha.to_vec();
    for j in 1..env.len() {
        env[j] = env[j].max(env[j - 1] * decay);
    }
    for j in (0..env.len().saturating_sub(1)).rev() {
        env[j] = env[j].max(env[j + 1] * decay);
    }
    env
}

/// r_i = 1/α_γ(i).
pub fn pesin_radius(system: &System, w: &OrbitWindow, frames: &[SplitFrame], gamma: f64, k: PesinConstants) -> Result<Vec<f64>> {
    let env = tempered_envelope(&raw_alpha(system, w, frames, k), gamma);
    let r: Vec<f64> = env.iter().map(|a| 1.0 / a).collect();
    for (j, &ri) in r.iter().enumerate() {
        if !(ri >= 1e-12) {
            return Err(Error::ChartCollapse(w.first_index() + j as i64));
        }
    }
    Ok(r)
}

/// Frames, radii and local maps along an orbit window.
#[derive(Debug, Clone)]
pub struct ChartedWindow {
    pub system: System,
    pub window: OrbitWindow,
    pub spectrum: LyapunovSpectrum,
    pub gamma: f64,
    pub constants: PesinConstants,
    pub frames: Vec<SplitFrame>,
    pub radius: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ChartedWindow {
    /// Spectrum, splitting, Lyapunov basis and radii for the whole window.
    pub fn build(system: &System, window: &OrbitWindow, gamma: f64, constants: PesinConstants) -> Result<ChartedWindow> {
        let spectrum = finite_lyapunov(system, window)?;
        ChartedWindow::with_spectrum(system, window, spectrum, gamma, constants)
    }

    pub fn with_spectrum(
        system: &System,
        window: &OrbitWindow,
        spectrum: LyapunovSpectrum,
        gamma: f64,
        constants: PesinConstants,
    ) -> Result<ChartedWindow> {
        let sp = oseledets_splitting(system, window, &spectrum)?;
        let basis = lyapunov_basis(system, window, &sp, &spectrum, gamma)?;
        let radius = pesin_radius(system, window, &basis.frames, gamma, constants)?;
        Ok(ChartedWindow {
            system: system.clone(),
            window: window.clone(),
            spectrum,
            gamma,
            constants,
            frames: basis.frames,
            radius,
            warnings: basis.warnings,
        })
    }

    fn slot(&self, i: i64) -> Result<usize> {
        if !self.window.contains(i) {
            return Err(Error::IndexOutOfWindow(i));
        }
        Ok((i - self.window.first_index()) as usize)
    }

    pub fn frame(&self, i: i64) -> &SplitFrame {
        &self.frames[(i - self.window.first_index()) as usize]
    }

    pub fn r(&self, i: i64) -> f64 {
        self.radius[(i - self.window.first_index()) as usize]
    }

    pub fn point(&self, i: i64) -> CVec {
        CVec::from_column_slice(self.window.at(i))
    }

    pub fn chart(&self, i: i64) -> Chart {
        Chart::new(self.system.model(), self.point(i), self.r(i))
    }

    /// The Λ_δ surrogate: r ≥ r0 and r0 ≤ ‖C_γ^{±1}‖ ≤ 1/r0.
    pub fn good(&self, i: i64, r0: f64) -> bool {
        if !self.window.contains(i) {
            return false;
        }
        let f = self.frame(i);
        self.r(i) >= r0 && f.norm() <= 1.0 / r0 && f.inv_norm() <= 1.0 / r0
    }

    /// Lyapunov coordinates of an ambient point in the chart at index i.
    pub fn to_chart(&self, i: i64, p: &CVec) -> CVec {
        &self.frame(i).c_gamma_inv * self.system.model().delta(p, &self.point(i))
    }

    /// Ambient point of chart coordinates w at index i.
    pub fn from_chart(&self, i: i64, w: &CVec) -> CVec {
        let mut p = self.point(i) + &self.frame(i).c_gamma * w;
        self.system.normalize(p.as_mut_slice());
        p
    }

    pub fn dynamics(&self, i: i64) -> Result<ChartDynamics> {
        if self.system.dim() != 2 || self.spectrum.m0 != 1 {
            return Err(Error::Unsupported("local maps need k1 = k2 = 1".into()));
        }
        let j = self.slot(i)?;
        self.slot(i + 1)?;
        let x = self.window.at(i);
        let fx = self.system.apply(&self.point(i))?;
        let d = self.system.model().delta(&fx, &self.point(i + 1));
        Ok(ChartDynamics {
            system: self.system.clone(),
            x: [x[0], x[1]],
            c: to_m2(&self.frames[j].c_gamma),
            cn_inv: to_m2(&self.frames[j + 1].c_gamma_inv),
            d: V2::new(d[0], d[1]),
        })
    }

    /// g_i on the ball of radius r_i, with δ_nl sampled on the sphere of radius 5·h·r_i.
    pub fn local_map(&self, i: i64, h: f64) -> Result<LocalMap> {
        let dynamics = self.dynamics(i)?;
        let r = self.r(i);
        let ball = self.frame(i).norm() * r;
        if self.system.dist_indeterminacy(self.window.at(i)) <= ball && self.system.dist_indeterminacy(self.window.at(i)) < 1.0 {
            return Err(Error::Indeterminacy(i));
        }
        LocalMap::new(Arc::new(dynamics), r, 5.0 * h * r).map_err(|e| e.context(format!("local map at index {i}")))
    }

    /// max_i r_i·‖D²g_i‖ over 16 points of the ball of radius r_i; at most 1 for valid charts.
    pub fn second_derivative_ratio(&self, i: i64) -> Result<f64> {
        use crate::cocycle::local::{sphere_points, LocalDynamics};
        let g = self.dynamics(i)?;
        let r = self.r(i);
        let mut worst: f64 = 0.0;
        for w in sphere_points(r).into_iter().step_by(4) {
            worst = worst.max(g.second_norm(&w)? * r);
        }
        Ok(worst)
    }
}

//! Local maps g = C_γ^{−1}(f̂x̂) ∘ f_x ∘ C_γ(x̂) in Lyapunov coordinates (k1 = k2 = 1).

use std::f64::consts::TAU;
use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{c, op_norm2, C64, M2, V2, ZERO};
use crate::system::System;

/// A holomorphic map of a neighbourhood of 0 in ℂ², with derivatives.
pub trait LocalDynamics: Send + Sync + Debug {
    fn eval(&self, w: &V2) -> Result<V2>;
    fn deriv(&self, w: &V2) -> Result<M2>;
    /// ‖D²g(w)‖ as a bilinear map, measured or bounded.
    fn second_norm(&self, w: &V2) -> Result<f64>;
}

/// The map read off a point of a charted window.
#[derive(Debug, Clone)]
pub struct ChartDynamics {
    pub system: System,
    pub x: [C64; 2],
    pub c: M2,
    pub cn_inv: M2,
    /// f(x_i) − x_{i+1} in model coordinates.
    pub d: V2,
}

impl LocalDynamics for ChartDynamics {
    fn eval(&self, w: &V2) -> Result<V2> {
        let cw = self.c * w;
        let mut out = [ZERO; 2];
        self.system.inc_into(&self.x, &[cw[0], cw[1]], &mut out)?;
        Ok(self.cn_inv * (V2::new(out[0], out[1]) + self.d))
    }

    fn deriv(&self, w: &V2) -> Result<M2> {
        let p = V2::new(self.x[0], self.x[1]) + self.c * w;
        let mut j = [ZERO; 4];
        self.system.jac_into(&[p[0], p[1]], &mut j);
        Ok(self.cn_inv * M2::new(j[0], j[1], j[2], j[3]) * self.c)
    }

    fn second_norm(&self, w: &V2) -> Result<f64> {
        let p = V2::new(self.x[0], self.x[1]) + self.c * w;
        let mut best: f64 = 0.0;
        let dirs = unit_directions();
        let mut out = [ZERO; 2];
        for u in &dirs {
            let cu = self.c * u;
            for v in &dirs {
                let cv = self.c * v;
                self.system.second_into(&[p[0], p[1]], &[cu[0], cu[1]], &[cv[0], cv[1]], &mut out);
                best = best.max((self.cn_inv * V2::new(out[0], out[1])).norm());
            }
        }
        Ok(best)
    }
}

/// g(X, Y) = lin·(X, Y) + (quadratic terms); used for synthetic test maps.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticDynamics {
    pub lin: M2,
    /// Row j holds the coefficients of X², XY, Y² in component j.
    pub quad: [[C64; 3]; 2],
}

impl LocalDynamics for QuadraticDynamics {
    fn eval(&self, w: &V2) -> Result<V2> {
        let (x, y) = (w[0], w[1]);
        let q = |r: &[C64; 3]| r[0] * x * x + r[1] * x * y + r[2] * y * y;
        Ok(self.lin * w + V2::new(q(&self.quad[0]), q(&self.quad[1])))
    }

    fn deriv(&self, w: &V2) -> Result<M2> {
        let (x, y) = (w[0], w[1]);
        let row = |r: &[C64; 3]| (r[0] * x * 2.0 + r[1] * y, r[1] * x + r[2] * y * 2.0);
        let (a, b) = row(&self.quad[0]);
        let (cc, d) = row(&self.quad[1]);
        Ok(self.lin + M2::new(a, b, cc, d))
    }

    fn second_norm(&self, _w: &V2) -> Result<f64> {
        let h = |r: &[C64; 3]| op_norm2(&M2::new(r[0] * 2.0, r[1], r[1], r[2] * 2.0));
        Ok((h(&self.quad[0]).powi(2) + h(&self.quad[1]).powi(2)).sqrt())
    }
}

fn unit_directions() -> Vec<V2> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![V2::new(c(1.0, 0.0), ZERO), V2::new(ZERO, c(1.0, 0.0))];
    for k in 0..8 {
        let th = TAU * k as f64 / 8.0;
        v.push(V2::new(c(s, 0.0), c(s * th.cos(), s * th.sin())));
    }
    v
}

/// 64 deterministic points on the sphere of radius ρ in ℂ².
pub fn sphere_points(rho: f64) -> Vec<V2> {
    let mut pts = Vec::with_capacity(64);
    for a in 0..4 {
        let th = (a as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / 4.0;
        for b in 0..4 {
            for d in 0..4 {
                let p1 = TAU * b as f64 / 4.0;
                let p2 = TAU * (d as f64 + 0.5 * (a % 2) as f64) / 4.0;
                pts.push(V2::new(c(p1.cos(), p1.sin()) * (rho * th.cos()), c(p2.cos(), p2.sin()) * (rho * th.sin())));
            }
        }
    }
    pts
}

/// g split as (AX + R, BY + U), with the measured nonlinearity δ_nl.
#[derive(Debug, Clone)]
pub struct LocalMap {
    pub dynamics: Arc<dyn LocalDynamics>,
    pub lin: M2,
    pub a: C64,
    pub b: C64,
    /// Ball radius R_0 on which g is used.
    pub radius: f64,
    /// Radius of the sphere δ_nl was sampled on.
    pub sample_radius: f64,
    /// sup max(‖DR‖, ‖DU‖) over the sample sphere.
    pub delta_nl: f64,
    /// Sampled ‖D²g‖ over the ball of radius `radius`.
    pub d2: f64,
}

impl LocalMap {
    pub fn new(dynamics: Arc<dyn LocalDynamics>, radius: f64, sample_radius: f64) -> Result<LocalMap> {
        let g0 = dynamics.eval(&V2::zeros())?;
        if g0.norm() > 1e-10 {
            return Err(Error::HypothesesViolated(format!("g(0) = {:e} ≠ 0", g0.norm())));
        }
        let lin = dynamics.deriv(&V2::zeros())?;
        let a = lin[(0, 0)];
        let b = lin[(1, 1)];
        if !(b.norm() < a.norm()) {
            return Err(Error::HypothesesViolated(format!("‖B‖ = {} is not below ‖A⁻¹‖⁻¹ = {}", b.norm(), a.norm())));
        }
        let mut delta_nl: f64 = 0.0;
        for w in sphere_points(sample_radius) {
            let dg = dynamics.deriv(&w)?;
            let dr = V2::new(dg[(0, 0)] - a, dg[(0, 1)]).norm();
            let du = V2::new(dg[(1, 0)], dg[(1, 1)] - b).norm();
            delta_nl = delta_nl.max(dr).max(du);
        }
        let mut d2: f64 = dynamics.second_norm(&V2::zeros())?;
        for w in sphere_points(radius).into_iter().step_by(4) {
            d2 = d2.max(dynamics.second_norm(&w)?);
        }
        Ok(LocalMap { dynamics, lin, a, b, radius, sample_radius, delta_nl, d2 })
    }

    pub fn eval(&self, w: &V2) -> Result<V2> {
        self.dynamics.eval(w)
    }

    pub fn deriv(&self, w: &V2) -> Result<M2> {
        self.dynamics.deriv(w)
    }

    /// (R, U) = g − (AX, BY).
    pub fn remainder(&self, w: &V2) -> Result<V2> {
        let g = self.eval(w)?;
        Ok(V2::new(g[0] - self.a * w[0], g[1] - self.b * w[1]))
    }

    /// ‖A⁻¹‖.
    pub fn a_inv_norm(&self) -> f64 {
        1.0 / self.a.norm()
    }

    pub fn b_norm(&self) -> f64 {
        self.b.norm()
    }

    /// ξ = 1 − ‖B‖·‖A⁻¹‖.
    pub fn xi(&self) -> f64 {
        1.0 - self.b_norm() * self.a_inv_norm()
    }

    /// Largest off-diagonal entry of Dg(0).
    pub fn off_diagonal(&self) -> f64 {
        self.lin[(0, 1)].norm().max(self.lin[(1, 0)].norm())
    }
}

//! Holomorphic Lipschitz graphs over a disk, for k1 = k2 = 1.
//!
//! A graph is stored as a polynomial in the normalized variable s = t/α,
//! fitted on the boundary circle plus the center.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::{c, cvec, C64, CVec, ZERO};

pub const DEGREE: usize = 16;
pub const BOUNDARY_SAMPLES: usize = 64;
pub const LIP_GRID: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Y = φ(X), over the unstable factor.
    Horizontal,
    /// X = φ(Y), over the stable factor.
    Vertical,
}

impl Orientation {
    pub fn flip(self) -> Orientation {
        match self {
            Orientation::Horizontal => Orientation::Vertical,
            Orientation::Vertical => Orientation::Horizontal,
        }
    }
}

/// Declared bounds a graph must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lip: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipGraph {
    pub orientation: Orientation,
    pub radius: f64,
    pub offset_bound: f64,
    pub lip_bound: f64,
    coeffs: Vec<C64>,
}

fn unit(k: usize, n: usize) -> C64 {
    let th = TAU * k as f64 / n as f64;
    c(th.cos(), th.sin())
}

/// The standard abscissae: the center followed by 64 points on the circle of radius α.
pub fn standard_abscissae(radius: f64) -> Vec<C64> {
    std::iter::once(ZERO).chain((0..BOUNDARY_SAMPLES).map(|k| unit(k, BOUNDARY_SAMPLES) * radius)).collect()
}

fn horner(coeffs: &[C64], s: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, &a| acc * s + a)
}

fn horner_deriv(coeffs: &[C64], s: C64) -> C64 {
    let mut acc = ZERO;
    for n in (1..coeffs.len()).rev() {
        acc = acc * s + coeffs[n] * n as f64;
    }
    acc
}

impl LipGraph {
    /// The graph φ ≡ value.
    pub fn constant(orientation: Orientation, radius: f64, value: C64) -> LipGraph {
        let mut coeffs = vec![ZERO; DEGREE + 1];
        coeffs[0] = value;
        LipGraph { orientation, radius, offset_bound: value.norm(), lip_bound: 0.0, coeffs }
    }

    /// Samples `f` on the standard abscissae and fits.
    pub fn from_fn(
        orientation: Orientation,
        radius: f64,
        bounds: Bounds,
        mut f: impl FnMut(C64) -> Result<C64>,
    ) -> Result<LipGraph> {
        let ts = standard_abscissae(radius);
        let mut values = Vec::with_capacity(ts.len());
        for &t in &ts {
            values.push(f(t)?);
        }
        fit_standard(&values, orientation, radius, bounds)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// φ(t) without the domain check.
    pub fn value_unchecked(&self, t: C64) -> C64 {
        horner(&self.coeffs, t / self.radius)
    }

    pub fn value(&self, t: C64) -> Result<C64> {
        self.check_domain(t)?;
        Ok(self.value_unchecked(t))
    }

    pub fn derivative(&self, t: C64) -> C64 {
        horner_deriv(&self.coeffs, t / self.radius) / self.radius
    }

    fn check_domain(&self, t: C64) -> Result<()> {
        let n = t.norm();
        if n > self.radius * (1.0 + 1e-12) || !n.is_finite() {
            return Err(Error::OutOfDomain { norm: n, radius: self.radius });
        }
        Ok(())
    }

    /// The point (t, φ(t)) or (φ(t), t) in (X, Y) coordinates.
    pub fn point(&self, t: C64) -> Result<CVec> {
        let v = self.value(t)?;
        Ok(match self.orientation {
            Orientation::Horizontal => cvec(&[t, v]),
            Orientation::Vertical => cvec(&[v, t]),
        })
    }

    pub fn measured_offset(&self) -> f64 {
        self.coeffs[0].norm()
    }

    /// max |φ′| over the Lipschitz grid (32 points on the boundary circle).
    pub fn measured_lip(&self) -> f64 {
        (0..LIP_GRID).map(|k| self.derivative(unit(k, LIP_GRID) * self.radius).norm()).fold(0.0, f64::max)
    }

    /// The same function on a smaller disk.
    pub fn restrict(&self, radius: f64) -> LipGraph {
        let ratio = radius / self.radius;
        let mut scale = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&a| {
                let out = a * scale;
                scale *= ratio;
                out
            })
            .collect();
        LipGraph { orientation: self.orientation, radius, offset_bound: self.offset_bound, lip_bound: self.lip_bound, coeffs }
    }

    /// The graph with real Taylor coefficients, φ(t) = conj φ(conj t): the projection
    /// onto graphs that commute with complex conjugation.
    pub fn real_part(&self) -> LipGraph {
        let coeffs = self.coeffs.iter().map(|a| c(a.re, 0.0)).collect();
        LipGraph { coeffs, ..self.clone() }
    }

    /// Same values with tightened or relaxed declared bounds, re-verified.
    pub fn with_bounds(&self, bounds: Bounds) -> Result<LipGraph> {
        let g = LipGraph { offset_bound: bounds.offset, lip_bound: bounds.lip, ..self.clone() };
        g.verify()?;
        Ok(g)
    }

    /// Checks the offset, Lipschitz and resolution invariants.
    pub fn verify(&self) -> Result<()> {
        let off = self.measured_offset();
        if off > self.offset_bound + 1e-12 {
            return Err(Error::OffsetExceeded { measured: off, declared: self.offset_bound });
        }
        let lip = self.measured_lip();
        if lip > self.lip_bound + 1e-9 {
            return Err(Error::LipExceeded { measured: lip, declared: self.lip_bound });
        }
        let max = self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let last = self.coeffs[DEGREE].norm();
        if last > 1e-10 * max + 1e-13 * self.radius {
            return Err(Error::Underresolved { last, max });
        }
        Ok(())
    }
}

/// Fast fit on the standard abscissae: the discrete Fourier coefficients are the
/// least-squares solution since the boundary samples are equispaced.
pub fn fit_standard(values: &[C64], orientation: Orientation, radius: f64, bounds: Bounds) -> Result<LipGraph> {
    if values.len() != BOUNDARY_SAMPLES + 1 {
        return Err(Error::TooFewSamples { got: values.len(), need: BOUNDARY_SAMPLES + 1 });
    }
    let n = BOUNDARY_SAMPLES as f64;
    let boundary = &values[1..];
    let mut coeffs = vec![ZERO; DEGREE + 1];
    coeffs[0] = (values[0] + boundary.iter().sum::<C64>()) / (n + 1.0);
    for (deg, slot) in coeffs.iter_mut().enumerate().skip(1) {
        let mut acc = ZERO;
        for (k, v) in boundary.iter().enumerate() {
            acc += v * unit((k * deg) % BOUNDARY_SAMPLES, BOUNDARY_SAMPLES).conj();
        }
        *slot = acc / n;
    }
    let abscissae = standard_abscissae(radius);
    finish_fit(&abscissae, values, orientation, radius, bounds, coeffs)
}

fn finish_fit(
    ts: &[C64],
    values: &[C64],
    orientation: Orientation,
    radius: f64,
    bounds: Bounds,
    coeffs: Vec<C64>,
) -> Result<LipGraph> {
    if coeffs.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::NoConvergence("non-finite graph samples".into()));
    }
    let g = LipGraph { orientation, radius, offset_bound: bounds.offset, lip_bound: bounds.lip, coeffs };
    let vmax = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tol = 1e-9 * vmax.max(1.0);
    let residual = ts.iter().zip(values).map(|(&t, &v)| (g.value_unchecked(t) - v).norm()).fold(0.0, f64::max);
    if residual > tol {
        return Err(Error::FitResidual { residual, tol });
    }
    g.verify()?;
    Ok(g)
}

/// Least-squares polynomial fit of degree 16 on arbitrary samples inside the disk.
pub fn fit_graph(samples: &[(C64, C64)], orientation: Orientation, radius: f64, bounds: Bounds) -> Result<LipGraph> {
    if samples.len() < DEGREE + 1 {
        return Err(Error::TooFewSamples { got: samples.len(), need: DEGREE + 1 });
    }
    for &(t, _) in samples {
        if t.norm() > radius * (1.0 + 1e-12) {
            return Err(Error::OutOfDomain { norm: t.norm(), radius });
        }
    }
    let rows = samples.len();
    let mut v = crate::linalg::CMat::zeros(rows, DEGREE + 1);
    let mut rhs = CVec::zeros(rows);
    for (i, &(t, y)) in samples.iter().enumerate() {
        let s = t / radius;
        let mut p = c(1.0, 0.0);
        for j in 0..=DEGREE {
            v[(i, j)] = p;
            p *= s;
        }
        rhs[i] = y;
    }
    let svd = v.svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).map_err(|e| Error::NoConvergence(e.to_string()))?;
    let coeffs: Vec<C64> = sol.iter().copied().collect();
    let ts: Vec<C64> = samples.iter().map(|s| s.0).collect();
    let values: Vec<C64> = samples.iter().map(|s| s.1).collect();
    finish_fit(&ts, &values, orientation, radius, bounds, coeffs)
}

/// (t, φ(t)) for horizontal graphs, (φ(t), t) for vertical ones.
pub fn eval_graph(g: &LipGraph, t: C64) -> Result<CVec> {
    g.point(t)
}

/// Sup-distance over the smaller domain, sampled on the boundary circle and center.
pub fn graph_distance(g1: &LipGraph, g2: &LipGraph) -> Result<f64> {
    if g1.orientation != g2.orientation {
        return Err(Error::OrientationMismatch);
    }
    let r = g1.radius.min(g2.radius);
    Ok(standard_abscissae(r)
        .into_iter()
        .map(|t| (g1.value_unchecked(t) - g2.value_unchecked(t)).norm())
        .fold(0.0, f64::max))
}

/// The unique point of graph(H) ∩ graph(V), in (X, Y) coordinates.
pub fn intersect_graphs(h: &LipGraph, v: &LipGraph) -> Result<CVec> {
    if h.orientation != Orientation::Horizontal || v.orientation != Orientation::Vertical {
        return Err(Error::OrientationMismatch);
    }
    if h.lip_bound * v.lip_bound >= 1.0 {
        return Err(Error::HypothesesViolated("lip(H)·lip(V) ≥ 1".into()));
    }
    let scale = h.radius.max(v.radius);
    let escape = |x: C64, y: C64| x.norm() > h.radius * (1.0 + 1e-12) || y.norm() > v.radius * (1.0 + 1e-12);
    let mut y = ZERO;
    let mut x = v.value_unchecked(y);
    let mut last_step = f64::INFINITY;
    for _ in 0..10_000 {
        if escape(x, y) {
            return Err(Error::IntersectionEscapes);
        }
        let y_new = h.value_unchecked(x);
        let step = (y_new - y).norm();
        y = y_new;
        x = v.value_unchecked(y);
        let tiny = 4.0 * f64::EPSILON * scale.max(y.norm());
        if step <= tiny || (step <= 1e-12 * scale && step >= last_step) {
            if escape(x, y) {
                return Err(Error::IntersectionEscapes);
            }
            return Ok(cvec(&[x, y]));
        }
        last_step = step;
    }
    Err(Error::NoConvergence("graph intersection".into()))
}

//! Translation charts and split frames.

use crate::error::{Error, Result};
use crate::linalg::{inverse, op_norm, CMat, CVec};

/// The single coordinate system a chart lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChart {
    /// ℂ^k itself.
    Plane,
    /// ℝ^k / ℤ^k embedded in ℂ^k; differences are reduced to the nearest representative.
    Torus,
}

impl ModelChart {
    /// `a − b` in model coordinates.
    pub fn delta(&self, a: &CVec, b: &CVec) -> CVec {
        let d = a - b;
        match self {
            ModelChart::Plane => d,
            ModelChart::Torus => d.map(|z| crate::linalg::c(z.re - z.re.round(), z.im)),
        }
    }
}

/// The chart w ↦ base + w.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub model: ModelChart,
    pub base: CVec,
    pub radius: f64,
}

impl Chart {
    pub fn new(model: ModelChart, base: CVec, radius: f64) -> Chart {
        Chart { model, base, radius }
    }

    pub fn to_model(&self, w: &CVec) -> CVec {
        &self.base + w
    }

    pub fn from_model(&self, p: &CVec) -> CVec {
        self.model.delta(p, &self.base)
    }
}

/// A pure translation w ↦ w + a between charts of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub a: CVec,
}

impl Translation {
    pub fn apply(&self, w: &CVec) -> CVec {
        w + &self.a
    }

    pub fn inverse(&self) -> Translation {
        Translation { a: -&self.a }
    }

    pub fn compose(&self, then: &Translation) -> Translation {
        Translation { a: &self.a + &then.a }
    }
}

/// The transition τ_x⁻¹∘τ_y, i.e. w ↦ w + (y.base − x.base).
pub fn chart_transition(x: &Chart, y: &Chart) -> Result<Translation> {
    if x.model != y.model || x.base.len() != y.base.len() {
        return Err(Error::ChartMismatch);
    }
    Ok(Translation { a: x.model.delta(&y.base, &x.base) })
}

/// Lyapunov frame C_γ: columns span E_u then E_s.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFrame {
    pub c_gamma: CMat,
    pub c_gamma_inv: CMat,
    pub k1: usize,
    pub k2: usize,
}

impl SplitFrame {
    pub fn new(c_gamma: CMat, k1: usize) -> Result<SplitFrame> {
        let k = c_gamma.nrows();
        if c_gamma.ncols() != k || k1 == 0 || k1 >= k {
            return Err(Error::Unsupported(format!("frame of shape {}x{} with k1={k1}", k, c_gamma.ncols())));
        }
        let c_gamma_inv = inverse(&c_gamma)?;
        Ok(SplitFrame { c_gamma, c_gamma_inv, k1, k2: k - k1 })
    }

    pub fn identity(k: usize, k1: usize) -> SplitFrame {
        SplitFrame { c_gamma: CMat::identity(k, k), c_gamma_inv: CMat::identity(k, k), k1, k2: k - k1 }
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.c_gamma)
    }

    pub fn inv_norm(&self) -> f64 {
        op_norm(&self.c_gamma_inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rvec;

    fn chart(p: &[f64]) -> Chart {
        Chart::new(ModelChart::Plane, rvec(p), 1.0)
    }

    #[test]
    fn transition_is_base_difference() {
        let t = chart_transition(&chart(&[0.0, 0.0]), &chart(&[0.0, 0.0])).unwrap();
        assert_eq!(t.a, rvec(&[0.0, 0.0]));
        let t = chart_transition(&chart(&[1.0, 2.0]), &chart(&[1.5, 2.0])).unwrap();
        assert_eq!(t.a, rvec(&[0.5, 0.0]));
    }

    #[test]
    fn round_trip_is_identity() {
        let x = chart(&[1.0, 2.0]);
        let y = chart(&[-0.25, 3.5]);
        let t = chart_transition(&x, &y).unwrap().compose(&chart_transition(&y, &x).unwrap());
        assert!(t.a.norm() == 0.0);
    }

    #[test]
    fn mismatched_models_are_rejected() {
        let x = chart(&[0.0, 0.0]);
        let y = Chart::new(ModelChart::Torus, rvec(&[0.0, 0.0]), 1.0);
        assert_eq!(chart_transition(&x, &y), Err(Error::ChartMismatch));
    }

    #[test]
    fn torus_differences_wrap() {
        let x = Chart::new(ModelChart::Torus, rvec(&[0.95, 0.1]), 0.1);
        let y = Chart::new(ModelChart::Torus, rvec(&[0.05, 0.1]), 0.1);
        let t = chart_transition(&x, &y).unwrap();
        assert!((t.a[0].re - 0.1).abs() < 1e-15);
    }

    #[test]
    fn chart_maps_zero_to_base() {
        let x = chart(&[0.3, -0.7]);
        assert_eq!(x.to_model(&rvec(&[0.0, 0.0])), x.base);
    }
}

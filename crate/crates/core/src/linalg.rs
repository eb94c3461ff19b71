//! Complex vectors and matrices on top of nalgebra.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;
pub type V2 = Vector2<C64>;
pub type M2 = Matrix2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cvec(entries: &[C64]) -> CVec {
    CVec::from_column_slice(entries)
}

/// Real vector embedded in ℂ^k.
pub fn rvec(entries: &[f64]) -> CVec {
    CVec::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0)))
}

pub fn rmat(rows: usize, cols: usize, row_major: &[f64]) -> CMat {
    CMat::from_row_iterator(rows, cols, row_major.iter().map(|&x| c(x, 0.0)))
}

pub fn is_finite(v: &CVec) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Operator 2-norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    if m.nrows() == 2 && m.ncols() == 2 {
        return op_norm2(&M2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]));
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Smallest singular value of a square matrix, i.e. ‖M⁻¹‖⁻¹.
pub fn min_singular(m: &CMat) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone().svd(false, false).singular_values.min()
}

pub fn op_norm2(m: &M2) -> f64 {
    singular_values2(m).0
}

/// Singular values (largest, smallest) of a 2×2 complex matrix.
pub fn singular_values2(m: &M2) -> (f64, f64) {
    let f2 = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    let disc = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
    let smax = ((f2 + disc) / 2.0).sqrt();
    let smin = if smax > 0.0 { det / smax } else { 0.0 };
    (smax, smin)
}

/// Inverse with the residual check ‖M·M⁻¹ − I‖ ≤ 1e−10.
pub fn inverse(m: &CMat) -> Result<CMat> {
    let inv = m.clone().try_inverse().ok_or(Error::Singular)?;
    let k = m.nrows();
    let res = op_norm(&(m * &inv - CMat::identity(k, k)));
    if !(res <= 1e-10) {
        return Err(Error::Singular);
    }
    Ok(inv)
}

/// Orthonormal basis of the column span (thin QR).
pub fn orthonormalize(m: &CMat) -> CMat {
    let q = m.clone().qr().q();
    q.columns(0, m.ncols()).into_owned()
}

/// Smallest principal angle between the column spans of two orthonormal bases.
pub fn principal_angle(a: &CMat, b: &CMat) -> f64 {
    let p = a.adjoint() * b;
    let cos = op_norm(&p).min(1.0);
    if cos < 0.9 {
        cos.acos()
    } else {
        // acos loses accuracy near 1; use the sine of the projection residual instead.
        let resid = b - a * (a.adjoint() * b);
        let s = op_norm(&resid).min(1.0);
        let smin = if b.ncols() == 1 { s } else { min_column_residual(a, b) };
        smin.asin()
    }
}

fn min_column_residual(a: &CMat, b: &CMat) -> f64 {
    let resid = b - a * (a.adjoint() * b);
    resid.clone().svd(false, false).singular_values.min()
}

/// Angle between span(u) and span(v) for single vectors.
pub fn line_angle(u: &CVec, v: &CVec) -> f64 {
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let u = u / C64::from(nu);
    let v = v / C64::from(nv);
    let proj = u.dotc(&v);
    let resid = &v - &u * proj;
    resid.norm().min(1.0).asin()
}

/// Eigenvalues of a complex square matrix, via the complex Schur form.
pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    let k = m.nrows();
    if k == 1 {
        return vec![m[(0, 0)]];
    }
    if k == 2 {
        let (a, b, cc, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let tr = a + d;
        let det = a * d - b * cc;
        let disc = (tr * tr / 4.0 - det).sqrt();
        let l1 = tr / 2.0 + disc;
        let l2 = tr / 2.0 - disc;
        // recompute the smaller root from the product to avoid cancellation
        return if l1.norm() >= l2.norm() {
            let small = if l1.norm() > 0.0 { det / l1 } else { l2 };
            vec![l1, small]
        } else {
            let small = if l2.norm() > 0.0 { det / l2 } else { l1 };
            vec![l2, small]
        };
    }
    let (_, t) = nalgebra::linalg::Schur::new(m.clone()).unpack();
    (0..k).map(|i| t[(i, i)]).collect()
}

pub fn to_v2(v: &CVec) -> V2 {
    V2::new(v[0], v[1])
}

pub fn from_v2(v: &V2) -> CVec {
    cvec(&[v[0], v[1]])
}

pub fn to_m2(m: &CMat) -> M2 {
    M2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

pub fn from_m2(m: &M2) -> CMat {
    CMat::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
}

pub fn inverse2(m: &M2) -> Result<M2> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if det.norm() == 0.0 || !det.re.is_finite() || !det.im.is_finite() {
        return Err(Error::Singular);
    }
    Ok(M2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det)
}

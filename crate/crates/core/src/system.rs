//! The example maps: forward map, inverse branches, derivatives and the indeterminacy set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::ModelChart;
use crate::error::{Error, Result};
use crate::linalg::{c, C64, CMat, CVec, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    /// (x, y) ↦ (x² + c − b·y, x)
    ComplexHenon { c: C64, b: C64 },
    /// (x, y) ↦ (1 − a·x² + y, b·x)
    ClassicalHenon { a: f64, b: f64 },
    /// [[2,1],[1,1]] on the torus.
    CatMap,
    /// θ ↦ 2θ mod 1
    Doubling,
    /// θ ↦ θ + α mod 1
    Rotation { alpha: f64 },
    /// A constant real matrix on ℂ^k.
    Linear { m: CMat },
    /// (x, y) ↦ (y, y/x), undefined on x = 0.
    MeromorphicYx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub kind: SystemKind,
}

/// Parses `a`, `a+bi`, `a-bi`, `bi`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad complex number {s:?}"));
    if let Some(body) = s.strip_suffix('i') {
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&j| (bytes[j] == b'+' || bytes[j] == b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
        match split {
            Some(j) => {
                let re: f64 = body[..j].parse().map_err(|_| bad())?;
                let im_txt = &body[j..];
                let im: f64 = match im_txt {
                    "+" => 1.0,
                    "-" => -1.0,
                    t => t.parse().map_err(|_| bad())?,
                };
                Ok(c(re, im))
            }
            None => {
                let im: f64 = match body {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    t => t.parse().map_err(|_| bad())?,
                };
                Ok(c(0.0, im))
            }
        }
    } else {
        Ok(c(s.parse().map_err(|_| bad())?, 0.0))
    }
}

fn fmt_complex(z: C64) -> String {
    if z.im >= 0.0 || z.im.is_nan() {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}{}i", z.re, z.im)
    }
}

fn wrap01(t: f64) -> f64 {
    let w = t - t.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

impl System {
    pub fn new(kind: SystemKind) -> System {
        System { kind }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SystemKind::Doubling | SystemKind::Rotation { .. } => 1,
            SystemKind::Linear { m } => m.nrows(),
            _ => 2,
        }
    }

    pub fn model(&self) -> ModelChart {
        match self.kind {
            SystemKind::CatMap | SystemKind::Doubling | SystemKind::Rotation { .. } => ModelChart::Torus,
            _ => ModelChart::Plane,
        }
    }

    pub fn invertible(&self) -> bool {
        !matches!(self.kind, SystemKind::Doubling)
    }

    /// Number of inverse branches.
    pub fn branches(&self) -> usize {
        if self.invertible() {
            1
        } else {
            2
        }
    }

    /// Whether f commutes with complex conjugation.
    pub fn is_real(&self) -> bool {
        match &self.kind {
            SystemKind::ComplexHenon { c, b } => c.im == 0.0 && b.im == 0.0,
            _ => true,
        }
    }

    /// Canonical text form, accepted by [`load_system`].
    pub fn spec_text(&self) -> String {
        match &self.kind {
            SystemKind::ComplexHenon { c, b } => format!("complex_henon c={} b={}", fmt_complex(*c), fmt_complex(*b)),
            SystemKind::ClassicalHenon { a, b } => format!("classical_henon a={a} b={b}"),
            SystemKind::CatMap => "cat_map".into(),
            SystemKind::Doubling => "doubling".into(),
            SystemKind::Rotation { alpha } => format!("rotation alpha={alpha}"),
            SystemKind::Linear { m } => {
                let entries: Vec<String> = (0..m.nrows())
                    .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| m[(i, j)].re.to_string())
                    .collect();
                format!("linear m={}", entries.join(","))
            }
            SystemKind::MeromorphicYx => "meromorphic_yx".into(),
        }
    }

    /// dist(x, I); identically 1 when I is empty.
    pub fn dist_indeterminacy(&self, x: &[C64]) -> f64 {
        match self.kind {
            SystemKind::MeromorphicYx => x[0].norm().min(1.0),
            _ => 1.0,
        }
    }

    /// Reduces torus points to [0,1); identity elsewhere.
    pub fn normalize(&self, x: &mut [C64]) {
        if self.model() == ModelChart::Torus {
            for z in x.iter_mut() {
                *z = c(wrap01(z.re), 0.0);
            }
        }
    }

    pub fn apply_into(&self, x: &[C64], out: &mut [C64]) -> Result<()> {
        match &self.kind {
            SystemKind::ComplexHenon { c, b } => {
                out[0] = x[0] * x[0] + c - b * x[1];
                out[1] = x[0];
            }
            SystemKind::ClassicalHenon { a, b } => {
                out[0] = 1.0 - a * x[0] * x[0] + x[1];
                out[1] = x[0] * *b;
            }
            SystemKind::CatMap => {
                out[0] = c(wrap01(2.0 * x[0].re + x[1].re), 0.0);
                out[1] = c(wrap01(x[0].re + x[1].re), 0.0);
            }
            SystemKind::Doubling => out[0] = c(wrap01(2.0 * x[0].re), 0.0),
            SystemKind::Rotation { alpha } => out[0] = c(wrap01(x[0].re + alpha), 0.0),
            SystemKind::Linear { m } => {
                for i in 0..m.nrows() {
                    out[i] = (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum();
                }
            }
            SystemKind::MeromorphicYx => {
                if x[0] == ZERO {
                    return Err(Error::Indeterminacy(0));
                }
                out[0] = x[1];
                out[1] = x[1] / x[0];
            }
        }
        Ok(())
    }

    /// f(x + w) − f(x) in model coordinates, without cancellation for small w.
    pub fn inc_into(&self, x: &[C64], w: &[C64], out: &mut [C64]) -> Result<()> {
        match &self.kind {
            SystemKind::ComplexHenon { b, .. } => {
                out[0] = w[0] * (x[0] * 2.0 + w[0]) - b * w[1];
                out[1] = w[0];
            }
            SystemKind::ClassicalHenon { a, b } => {
                out[0] = -w[0] * (x[0] * 2.0 + w[0]) * *a + w[1];
                out[1] = w[0] * *b;
            }
            SystemKind::CatMap => {
                out[0] = w[0] * 2.0 + w[1];
                out[1] = w[0] + w[1];
            }
            SystemKind::Doubling => out[0] = w[0] * 2.0,
            SystemKind::Rotation { .. } => out[0] = w[0],
            SystemKind::Linear { m } => {
                for i in 0..m.nrows() {
                    out[i] = (0..m.ncols()).map(|j| m[(i, j)] * w[j]).sum();
                }
            }
            SystemKind::MeromorphicYx => {
                let x0 = x[0] + w[0];
                if x0 == ZERO || x[0] == ZERO {
                    return Err(Error::Indeterminacy(0));
                }
                out[0] = w[1];
                // (y+v)/(x+u) − y/x = (x·v − y·u) / (x(x+u))
                out[1] = (x[0] * w[1] - x[1] * w[0]) / (x[0] * x0);
            }
        }
        Ok(())
    }

    /// Df(x), row-major into `out` (k·k entries).
    pub fn jac_into(&self, x: &[C64], out: &mut [C64]) {
        let one = c(1.0, 0.0);
        match &self.kind {
            SystemKind::ComplexHenon { b, .. } => out[..4].copy_from_slice(&[x[0] * 2.0, -b, one, ZERO]),
            SystemKind::ClassicalHenon { a, b } => out[..4].copy_from_slice(&[x[0] * (-2.0 * a), one, c(*b, 0.0), ZERO]),
            SystemKind::CatMap => out[..4].copy_from_slice(&[c(2.0, 0.0), one, one, one]),
            SystemKind::Doubling => out[0] = c(2.0, 0.0),
            SystemKind::Rotation { .. } => out[0] = one,
            SystemKind::Linear { m } => {
                let k = m.nrows();
                for i in 0..k {
                    for j in 0..k {
                        out[i * k + j] = m[(i, j)];
                    }
                }
            }
            SystemKind::MeromorphicYx => {
                out[..4].copy_from_slice(&[ZERO, one, -x[1] / (x[0] * x[0]), one / x[0]]);
            }
        }
    }

    /// D²f(x)[v, w].
    pub fn second_into(&self, x: &[C64], v: &[C64], w: &[C64], out: &mut [C64]) {
        for o in out.iter_mut().take(self.dim()) {
            *o = ZERO;
        }
        match &self.kind {
            SystemKind::ComplexHenon { .. } => out[0] = v[0] * w[0] * 2.0,
            SystemKind::ClassicalHenon { a, .. } => out[0] = v[0] * w[0] * (-2.0 * a),
            SystemKind::MeromorphicYx => {
                let x0 = x[0];
                out[1] = x[1] * 2.0 / (x0 * x0 * x0) * v[0] * w[0] - (v[0] * w[1] + v[1] * w[0]) / (x0 * x0);
            }
            _ => {}
        }
    }

    /// Inverse branch `branch` of f at x.
    pub fn inverse_into(&self, x: &[C64], branch: u8, out: &mut [C64]) -> Result<()> {
        match &self.kind {
            SystemKind::ComplexHenon { c, b } => {
                out[0] = x[1];
                out[1] = (x[1] * x[1] + c - x[0]) / b;
            }
            SystemKind::ClassicalHenon { a, b } => {
                let u = x[1] / *b;
                out[0] = u;
                out[1] = x[0] - 1.0 + u * u * *a;
            }
            SystemKind::CatMap => {
                out[0] = c(wrap01(x[0].re - x[1].re), 0.0);
                out[1] = c(wrap01(2.0 * x[1].re - x[0].re), 0.0);
            }
            SystemKind::Doubling => out[0] = c(wrap01((x[0].re + f64::from(branch & 1)) / 2.0), 0.0),
            SystemKind::Rotation { alpha } => out[0] = c(wrap01(x[0].re - alpha), 0.0),
            SystemKind::Linear { m } => {
                let inv = crate::linalg::inverse(m)?;
                for i in 0..m.nrows() {
                    out[i] = (0..m.ncols()).map(|j| inv[(i, j)] * x[j]).sum();
                }
            }
            SystemKind::MeromorphicYx => {
                if x[1] == ZERO {
                    return Err(Error::Indeterminacy(0));
                }
                out[0] = x[0] / x[1];
                out[1] = x[0];
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        let mut out = CVec::zeros(self.dim());
        self.apply_into(x.as_slice(), out.as_mut_slice())?;
        Ok(out)
    }

    pub fn inverse(&self, x: &CVec, branch: u8) -> Result<CVec> {
        let mut out = CVec::zeros(self.dim());
        self.inverse_into(x.as_slice(), branch, out.as_mut_slice())?;
        Ok(out)
    }

    pub fn increment(&self, x: &CVec, w: &CVec) -> Result<CVec> {
        let mut out = CVec::zeros(self.dim());
        self.inc_into(x.as_slice(), w.as_slice(), out.as_mut_slice())?;
        Ok(out)
    }

    pub fn jacobian(&self, x: &CVec) -> CMat {
        let k = self.dim();
        let mut buf = vec![ZERO; k * k];
        self.jac_into(x.as_slice(), &mut buf);
        CMat::from_row_slice(k, k, &buf)
    }

    pub fn second(&self, x: &CVec, v: &CVec, w: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim());
        self.second_into(x.as_slice(), v.as_slice(), w.as_slice(), out.as_mut_slice());
        out
    }

    /// Compares the derivative with central differences of the increment at random points.
    pub fn self_test(&self, seed: u64) -> Result<()> {
        let k = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let torus = self.model() == ModelChart::Torus;
        let h = 1e-5;
        for _ in 0..8 {
            let x: CVec = CVec::from_fn(k, |i, _| {
                if torus {
                    c(rng.random::<f64>(), 0.0)
                } else {
                    let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    if i == 0 && self.kind == SystemKind::MeromorphicYx {
                        z + z / z.norm().max(1e-3) * 0.5
                    } else {
                        z
                    }
                }
            });
            let jac = self.jacobian(&x);
            for j in 0..k {
                let mut e = CVec::zeros(k);
                e[j] = c(h, 0.0);
                let fd = (self.increment(&x, &e)? - self.increment(&x, &(-&e))?) / c(2.0 * h, 0.0);
                for i in 0..k {
                    let exact = jac[(i, j)];
                    if (fd[i] - exact).norm() > 1e-6 * exact.norm().max(1.0) {
                        return Err(Error::SelfTest(format!(
                            "{}: ∂f{i}/∂x{j} = {exact} but central difference gives {}",
                            self.spec_text(),
                            fd[i]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn param<'a>(params: &'a [(&'a str, &'a str)], key: &str) -> Option<&'a str> {
    params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

fn real(params: &[(&str, &str)], key: &str, default: Option<f64>) -> Result<f64> {
    match param(params, key) {
        Some(v) => v.trim().parse().map_err(|_| Error::Parse(format!("bad value for {key}: {v:?}"))),
        None => default.ok_or_else(|| Error::Parse(format!("missing parameter {key}"))),
    }
}

/// Parses a system description such as `complex_henon c=-1+0i b=0.3+0i`, then self-tests it.
pub fn load_system(text: &str) -> Result<System> {
    let mut words = text.split_whitespace();
    let name = words.next().ok_or_else(|| Error::UnknownSystem(String::new()))?;
    let mut params = Vec::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got {w:?}")))?;
        params.push((k, v));
    }
    let complex = |key: &str, default: C64| -> Result<C64> {
        param(&params, key).map(parse_complex).unwrap_or(Ok(default))
    };
    let kind = match name {
        "complex_henon" => {
            let b = complex("b", c(0.3, 0.0))?;
            if b == ZERO {
                return Err(Error::Config("complex_henon needs b ≠ 0".into()));
            }
            SystemKind::ComplexHenon { c: complex("c", c(-1.0, 0.0))?, b }
        }
        "classical_henon" => {
            let b = real(&params, "b", Some(0.3))?;
            if b == 0.0 {
                return Err(Error::Config("classical_henon needs b ≠ 0".into()));
            }
            SystemKind::ClassicalHenon { a: real(&params, "a", Some(1.4))?, b }
        }
        "cat_map" => SystemKind::CatMap,
        "doubling" => SystemKind::Doubling,
        "rotation" => SystemKind::Rotation { alpha: real(&params, "alpha", None)? },
        "linear" => {
            let entries: Vec<f64> = param(&params, "m")
                .ok_or_else(|| Error::Parse("linear needs m=a,b,…".into()))?
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad matrix entry {t:?}"))))
                .collect::<Result<_>>()?;
            let k = (entries.len() as f64).sqrt().round() as usize;
            if k * k != entries.len() || !(1..=4).contains(&k) {
                return Err(Error::Config(format!("linear needs a square matrix of size 1..4, got {} entries", entries.len())));
            }
            SystemKind::Linear { m: crate::linalg::rmat(k, k, &entries) }
        }
        "meromorphic_yx" => SystemKind::MeromorphicYx,
        other => return Err(Error::UnknownSystem(other.to_string())),
    };
    let system = System::new(kind);
    system.self_test(0)?;
    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rvec;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("-1+0i").unwrap(), c(-1.0, 0.0));
        assert_eq!(parse_complex("0.3").unwrap(), c(0.3, 0.0));
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("1e-3-2.5i").unwrap(), c(1e-3, -2.5));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert!(parse_complex("x+yi").is_err());
    }

    #[test]
    fn loading() {
        let h = load_system("complex_henon c=-1+0i b=0.3+0i").unwrap();
        assert!(h.invertible());
        assert_eq!(h.dist_indeterminacy(&[c(5.0, 0.0), ZERO]), 1.0);
        let m = load_system("meromorphic_yx").unwrap();
        assert_eq!(m.dist_indeterminacy(&[c(0.25, 0.0), c(3.0, 0.0)]), 0.25);
        assert_eq!(m.dist_indeterminacy(&[c(4.0, 0.0), c(3.0, 0.0)]), 1.0);
        let cat = load_system("cat_map").unwrap();
        assert_eq!((cat.dim(), cat.invertible(), cat.model()), (2, true, ModelChart::Torus));
        assert!(matches!(load_system("logistic r=4"), Err(Error::UnknownSystem(_))));
    }

    #[test]
    fn spec_text_round_trips() {
        for text in [
            "complex_henon c=-1+0i b=0.3+0i",
            "classical_henon a=1.4 b=0.3",
            "cat_map",
            "doubling",
            "rotation alpha=0.1",
            "linear m=2,0,0,0.5",
            "meromorphic_yx",
        ] {
            let s = load_system(text).unwrap();
            assert_eq!(s.spec_text(), text);
            assert_eq!(load_system(&s.spec_text()).unwrap(), s);
        }
    }

    #[test]
    fn inverses() {
        let h = load_system("complex_henon c=-1+0i b=0.3+0i").unwrap();
        let x = cvec_pt(0.3, -0.2);
        let back = h.inverse(&h.apply(&x).unwrap(), 0).unwrap();
        assert!((back - &x).norm() < 1e-15);
        let ch = load_system("classical_henon a=1.4 b=0.3").unwrap();
        let back = ch.inverse(&ch.apply(&x).unwrap(), 0).unwrap();
        assert!((back - &x).norm() < 1e-15);
        let m = load_system("meromorphic_yx").unwrap();
        let back = m.inverse(&m.apply(&x).unwrap(), 0).unwrap();
        assert!((back - &x).norm() < 1e-15);
        let d = load_system("doubling").unwrap();
        let y = rvec(&[0.3]);
        assert!((d.inverse(&y, 0).unwrap()[0].re - 0.15).abs() < 1e-16);
        assert!((d.inverse(&y, 1).unwrap()[0].re - 0.65).abs() < 1e-16);
        let cat = load_system("cat_map").unwrap();
        let p = rvec(&[0.2, 0.4]);
        let back = cat.inverse(&cat.apply(&p).unwrap(), 0).unwrap();
        assert!((back - &p).norm() < 1e-15);
    }

    #[test]
    fn indeterminacy_is_rejected() {
        let m = load_system("meromorphic_yx").unwrap();
        assert_eq!(m.apply(&cvec_pt(0.0, 1.0)), Err(Error::Indeterminacy(0)));
    }

    #[test]
    fn linear_jacobian_is_the_matrix() {
        let s = load_system("linear m=2,0,0,0.5").unwrap();
        let x = rvec(&[0.1, 0.2]);
        let j = s.jacobian(&x);
        assert_eq!(j, crate::linalg::rmat(2, 2, &[2.0, 0.0, 0.0, 0.5]));
    }

    fn cvec_pt(a: f64, b: f64) -> CVec {
        rvec(&[a, b])
    }
}

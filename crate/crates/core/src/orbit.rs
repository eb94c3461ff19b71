//! Finite orbit windows x_{−L} … x_M standing in for points of the natural extension.

use crate::error::{Error, Result};
use crate::linalg::{C64, CMat, CVec, ZERO};
use crate::system::{System, SystemKind};

/// Norm beyond which an orbit is treated as escaping to infinity.
pub const DIVERGENCE_NORM: f64 = 1e8;
/// Points closer than this to the indeterminacy set are rejected.
pub const INDETERMINACY_GUARD: f64 = 1e-6;

/// How the backward history x_{−L} … x_{−1} is produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HistoryPolicy {
    /// Iterate forward and keep the last L iterates before x_0 as history.
    Transient,
    /// Apply inverse branches, cycling through the given sequence.
    Branches(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitWindow {
    k: usize,
    data: Vec<C64>,
    origin: usize,
    /// Inverse branch taken at each backward step (empty for forward histories).
    pub branches: Vec<u8>,
    pub forward_consistent: bool,
}

impl OrbitWindow {
    /// Builds a window from points x_{−L}, …, x_M, where `origin` = L.
    pub fn from_points(points: &[CVec], origin: usize) -> OrbitWindow {
        let k = points.first().map_or(0, |p| p.len());
        let data = points.iter().flat_map(|p| p.iter().copied()).collect();
        OrbitWindow { k, data, origin, branches: Vec::new(), forward_consistent: false }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    /// Stored history length L.
    pub fn back(&self) -> usize {
        self.origin
    }

    /// Stored forward length M.
    pub fn forward(&self) -> usize {
        self.data.len() / self.k - 1 - self.origin
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn first_index(&self) -> i64 {
        -(self.origin as i64)
    }

    pub fn last_index(&self) -> i64 {
        self.forward() as i64
    }

    pub fn contains(&self, i: i64) -> bool {
        i >= self.first_index() && i <= self.last_index()
    }

    /// x_i as a slice; panics outside the window.
    pub fn at(&self, i: i64) -> &[C64] {
        let j = (i + self.origin as i64) as usize;
        &self.data[j * self.k..(j + 1) * self.k]
    }

    pub fn get(&self, i: i64) -> Result<CVec> {
        if !self.contains(i) {
            return Err(Error::IndexOutOfWindow(i));
        }
        Ok(CVec::from_column_slice(self.at(i)))
    }

    /// The window of f̂^n(x̂): same points, origin moved by n.
    pub fn shifted(&self, n: i64) -> Result<OrbitWindow> {
        let o = self.origin as i64 + n;
        if o < 0 || o >= self.len() as i64 {
            return Err(Error::IndexOutOfWindow(n));
        }
        Ok(OrbitWindow { origin: o as usize, ..self.clone() })
    }

    /// max_i ‖f(x_i) − x_{i+1}‖ relative to max(1, ‖x_{i+1}‖).
    pub fn consistency(&self, system: &System) -> Result<f64> {
        let model = system.model();
        let mut out = vec![ZERO; self.k];
        let mut worst: f64 = 0.0;
        for i in self.first_index()..self.last_index() {
            system.apply_into(self.at(i), &mut out).map_err(|e| e.context(format!("index {i}")))?;
            let next = CVec::from_column_slice(self.at(i + 1));
            let d = model.delta(&CVec::from_column_slice(&out), &next).norm() / next.norm().max(1.0);
            worst = worst.max(d);
        }
        Ok(worst)
    }

    /// Re-checks forward consistency (≤ 1e−10) and distance to I.
    pub fn verify(mut self, system: &System) -> Result<OrbitWindow> {
        for i in self.first_index()..=self.last_index() {
            if system.dist_indeterminacy(self.at(i)) < INDETERMINACY_GUARD {
                return Err(Error::Indeterminacy(i));
            }
        }
        let err = self.consistency(system)?;
        if err > 1e-10 {
            return Err(Error::NotCertified(format!("orbit window forward consistency {err:e} > 1e-10")));
        }
        self.forward_consistent = true;
        Ok(self)
    }
}

fn guard(system: &System, x: &[C64], index: i64) -> Result<()> {
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() > DIVERGENCE_NORM {
        return Err(Error::Divergence(index));
    }
    if system.dist_indeterminacy(x) < INDETERMINACY_GUARD {
        return Err(Error::Indeterminacy(index));
    }
    Ok(())
}

/// Iterates the seed, discards `transient` steps, and records a window with
/// `back` history points and `forward` future points.
pub fn generate_orbit(
    system: &System,
    seed: &CVec,
    forward: usize,
    back: usize,
    transient: usize,
    policy: &HistoryPolicy,
) -> Result<OrbitWindow> {
    let k = system.dim();
    if seed.len() != k {
        return Err(Error::Config(format!("seed has dimension {} but the system has {k}", seed.len())));
    }
    let mut x: Vec<C64> = seed.iter().copied().collect();
    system.normalize(&mut x);
    let mut next = vec![ZERO; k];
    let lead = match policy {
        HistoryPolicy::Transient => transient + back,
        HistoryPolicy::Branches(_) => transient,
    };
    let total = match policy {
        HistoryPolicy::Transient => back + forward + 1,
        HistoryPolicy::Branches(_) => forward + 1,
    };
    let start_index = -(lead as i64);
    guard(system, &x, start_index)?;
    let mut data = Vec::with_capacity((back + forward + 1) * k);
    for step in 0..lead + total {
        let index = start_index + step as i64;
        if step >= lead {
            data.extend_from_slice(&x);
        }
        if step + 1 == lead + total {
            break;
        }
        system.apply_into(&x, &mut next).map_err(|_| Error::Indeterminacy(index))?;
        std::mem::swap(&mut x, &mut next);
        guard(system, &x, index + 1)?;
    }
    let mut branches = Vec::new();
    if let HistoryPolicy::Branches(seq) = policy {
        if back > 0 && seq.is_empty() {
            return Err(Error::Config("empty branch sequence".into()));
        }
        let mut history = Vec::with_capacity(back * k);
        let mut cur: Vec<C64> = data[..k].to_vec();
        for j in 0..back {
            let b = seq[j % seq.len()];
            system.inverse_into(&cur, b, &mut next).map_err(|_| Error::Indeterminacy(-(j as i64) - 1))?;
            std::mem::swap(&mut cur, &mut next);
            guard(system, &cur, -(j as i64) - 1)?;
            history.push(cur.clone());
            branches.push(b);
        }
        let mut full: Vec<C64> = history.into_iter().rev().flatten().collect();
        full.extend_from_slice(&data);
        data = full;
    }
    let window = OrbitWindow { k, data, origin: back, branches, forward_consistent: false };
    window.verify(system)
}

/// Window along a periodic cycle, x_i = cycle[(start + i) mod Q].
pub fn from_cycle(system: &System, cycle: &[CVec], back: usize, forward: usize, start: usize) -> Result<OrbitWindow> {
    let q = cycle.len() as i64;
    if q == 0 {
        return Err(Error::WindowTooShort { got: 0, need: 1 });
    }
    let points: Vec<CVec> =
        (-(back as i64)..=forward as i64).map(|i| cycle[(start as i64 + i).rem_euclid(q) as usize].clone()).collect();
    OrbitWindow::from_points(&points, back).verify(system)
}

fn cycle_residual(system: &System, z: &[CVec]) -> Result<(Vec<CVec>, f64)> {
    let q = z.len();
    let model = system.model();
    let mut res = Vec::with_capacity(q);
    let mut worst: f64 = 0.0;
    for j in 0..q {
        let r = model.delta(&system.apply(&z[j])?, &z[(j + 1) % q]);
        worst = worst.max(r.norm() / z[(j + 1) % q].norm().max(1.0));
        res.push(r);
    }
    Ok((res, worst))
}

/// Multiple-shooting Newton for a periodic cycle z_0 … z_{Q−1} with f(z_j) = z_{j+1 mod Q}.
pub fn find_cycle(system: &System, guess: &[CVec]) -> Result<Vec<CVec>> {
    shooting_newton(system, guess).map(|r| r.0)
}

/// [`find_cycle`] that also reports the number of Newton steps taken.
pub fn shooting_newton(system: &System, guess: &[CVec]) -> Result<(Vec<CVec>, usize)> {
    let q = guess.len();
    let k = system.dim();
    if q == 0 {
        return Err(Error::WindowTooShort { got: 0, need: 1 });
    }
    let n = q * k;
    let mut z: Vec<CVec> = guess.to_vec();
    let (mut res, mut worst) = cycle_residual(system, &z)?;
    let mut steps = 0;
    for _ in 0..60 {
        if worst <= 1e-14 {
            break;
        }
        let mut jac = CMat::zeros(n, n);
        let mut rhs = CVec::zeros(n);
        for j in 0..q {
            let df = system.jacobian(&z[j]);
            let next = (j + 1) % q;
            for a in 0..k {
                for b in 0..k {
                    jac[(j * k + a, j * k + b)] += df[(a, b)];
                }
                jac[(j * k + a, next * k + a)] -= crate::linalg::ONE;
                rhs[j * k + a] = -res[j][a];
            }
        }
        let step = jac.lu().solve(&rhs).ok_or(Error::Singular)?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<CVec> = (0..q)
                .map(|j| {
                    let mut p: CVec = &z[j] + step.rows(j * k, k) * crate::linalg::c(lambda, 0.0);
                    system.normalize(p.as_mut_slice());
                    p
                })
                .collect();
            match cycle_residual(system, &trial) {
                Ok((r, w)) if w < worst || w <= 1e-14 => {
                    z = trial;
                    res = r;
                    worst = w;
                    steps += 1;
                    break;
                }
                _ => {
                    lambda *= 0.5;
                    if lambda < 1e-6 {
                        return if worst <= 1e-12 { Ok((z, steps)) } else { Err(Error::NoConvergence(format!("cycle Newton stalled at {worst:e}"))) };
                    }
                }
            }
        }
    }
    if worst > 1e-12 {
        return Err(Error::NoConvergence(format!("cycle Newton residual {worst:e}")));
    }
    Ok((z, steps))
}

/// A periodic orbit following each block cycle for the given number of turns, in order.
/// Each block is refined on its own first, then the concatenation.
pub fn block_cycle(system: &System, blocks: &[(Vec<CVec>, usize)]) -> Result<Vec<CVec>> {
    let mut guess = Vec::new();
    for (block, turns) in blocks {
        let cycle = find_cycle(system, block)?;
        for _ in 0..*turns {
            guess.extend(cycle.iter().cloned());
        }
    }
    find_cycle(system, &guess)
}

/// The periodic orbit of the complex Hénon horseshoe with the given itinerary
/// (symbol 0 takes the principal square root, 1 its negative).
pub fn itinerary_cycle(system: &System, symbols: &[u8]) -> Result<Vec<CVec>> {
    let (c, b) = match system.kind {
        SystemKind::ComplexHenon { c, b } => (c, b),
        _ => return Err(Error::Unsupported("itinerary cycles need complex_henon".into())),
    };
    let q = symbols.len();
    if q == 0 {
        return Err(Error::WindowTooShort { got: 0, need: 1 });
    }
    let sign = |s: u8| if s == 0 { 1.0 } else { -1.0 };
    let mut x: Vec<C64> = symbols.iter().map(|&s| (-c).sqrt() * sign(s)).collect();
    let scale = (-c).norm().sqrt().max(1.0);
    let mut converged = false;
    for _ in 0..2000 {
        let mut change: f64 = 0.0;
        for j in (0..q).rev() {
            let next = x[(j + 1) % q];
            let prev = x[(j + q - 1) % q];
            let new = (next - c + b * prev).sqrt() * sign(symbols[j]);
            change = change.max((new - x[j]).norm());
            x[j] = new;
        }
        if change <= 4.0 * f64::EPSILON * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("itinerary iteration".into()));
    }
    let cycle: Vec<CVec> = (0..q).map(|j| CVec::from_vec(vec![x[j], x[(j + q - 1) % q]])).collect();
    let (_, worst) = cycle_residual(system, &cycle)?;
    if worst > 1e-12 {
        return Err(Error::NoConvergence(format!("itinerary cycle residual {worst:e}")));
    }
    Ok(cycle)
}

/// dist(x̂, ŷ) = max_{0≤j≤H} w^j·d(x_{−j}, y_{−j}), with H clipped to the stored histories.
pub fn window_distance(system: &System, a: &OrbitWindow, ia: i64, b: &OrbitWindow, ib: i64, depth: usize, weight: f64) -> f64 {
    let model = system.model();
    let avail = (ia - a.first_index()).min(ib - b.first_index()).max(0) as usize;
    let mut best: f64 = 0.0;
    let mut w = 1.0;
    for j in 0..=depth.min(avail) {
        let d = model
            .delta(&CVec::from_column_slice(a.at(ia - j as i64)), &CVec::from_column_slice(b.at(ib - j as i64)))
            .norm();
        best = best.max(w * d);
        w *= weight;
        if w == 0.0 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, rvec};
    use crate::system::load_system;

    fn henon() -> System {
        load_system("complex_henon c=-1+0i b=0.3+0i").unwrap()
    }

    #[test]
    fn inverse_history_matches_forward_orbit() {
        let h = henon();
        // Backward iterates escape quickly unless the seed starts near the fixed point.
        let p = (1.3 + 5.69f64.sqrt()) / 2.0;
        let seed = rvec(&[p + 1e-9, p - 2e-9]);
        let w = generate_orbit(&h, &seed, 10, 8, 0, &HistoryPolicy::Branches(vec![0])).unwrap();
        assert_eq!((w.back(), w.forward()), (8, 10));
        assert!(w.consistency(&h).unwrap() <= 1e-10);
        let mut x = w.get(-8).unwrap();
        for i in -8..0 {
            assert!((&x - w.get(i).unwrap()).norm() <= 1e-10 * x.norm().max(1.0));
            x = h.apply(&x).unwrap();
        }
        assert!((x - seed).norm() < 1e-9);
    }

    #[test]
    fn transient_history() {
        let h = load_system("classical_henon a=1.4 b=0.3").unwrap();
        let w = generate_orbit(&h, &rvec(&[0.1, 0.1]), 50, 20, 100, &HistoryPolicy::Transient).unwrap();
        assert_eq!(w.len(), 71);
        assert!(w.forward_consistent);
        assert!(w.branches.is_empty());
    }

    #[test]
    fn doubling_branch_zero_halves() {
        let d = load_system("doubling").unwrap();
        let w = generate_orbit(&d, &rvec(&[0.8]), 3, 4, 0, &HistoryPolicy::Branches(vec![0])).unwrap();
        for j in 1..=4 {
            assert!((w.at(-j)[0].re - 0.8 / 2f64.powi(j as i32)).abs() < 1e-15);
        }
        assert_eq!(w.branches, vec![0, 0, 0, 0]);
    }

    #[test]
    fn meromorphic_orbit_through_indeterminacy() {
        let m = load_system("meromorphic_yx").unwrap();
        // (1, 0) ↦ (0, 0), which lies on x = 0.
        let r = generate_orbit(&m, &rvec(&[1.0, 0.0]), 5, 0, 0, &HistoryPolicy::Transient);
        assert_eq!(r, Err(Error::Indeterminacy(1)));
    }

    #[test]
    fn divergence_is_reported() {
        let h = henon();
        let r = generate_orbit(&h, &rvec(&[10.0, 0.0]), 20, 0, 0, &HistoryPolicy::Transient);
        assert!(matches!(r, Err(Error::Divergence(_))));
    }

    #[test]
    fn newton_cycle_finds_fixed_point() {
        let h = henon();
        let p = (1.3 + 5.69f64.sqrt()) / 2.0;
        let z = find_cycle(&h, &[rvec(&[1.8, 1.8])]).unwrap();
        assert!((z[0][0] - c(p, 0.0)).norm() < 1e-13);
        assert!((z[0][1] - c(p, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn itinerary_cycles_are_periodic() {
        let h = load_system("complex_henon c=-4+0i b=0.1+0i").unwrap();
        let cyc = itinerary_cycle(&h, &[0, 1, 1, 0, 1]).unwrap();
        let mut x = cyc[0].clone();
        for _ in 0..5 {
            x = h.apply(&x).unwrap();
        }
        assert!((x - &cyc[0]).norm() < 1e-11);
        assert!(cyc[0][0].re > 0.0 && cyc[1][0].re < 0.0);
        let w = from_cycle(&h, &cyc, 7, 9, 2).unwrap();
        assert_eq!(w.get(0).unwrap(), cyc[2]);
        assert_eq!(w.get(-7).unwrap(), cyc[0]);
    }

    #[test]
    fn window_distance_weights_history() {
        let h = henon();
        let a = OrbitWindow::from_points(&[rvec(&[0.0, 0.0]), rvec(&[1.0, 0.0])], 1);
        let b = OrbitWindow::from_points(&[rvec(&[0.5, 0.0]), rvec(&[1.0, 0.0])], 1);
        assert_eq!(window_distance(&h, &a, 0, &b, 0, 5, 0.5), 0.25);
        assert_eq!(window_distance(&h, &a, 0, &b, 0, 0, 0.5), 0.0);
        let torus = load_system("doubling").unwrap();
        let p = OrbitWindow::from_points(&[rvec(&[0.95])], 0);
        let q = OrbitWindow::from_points(&[rvec(&[0.05])], 0);
        assert!((window_distance(&torus, &p, 0, &q, 0, 0, 0.5) - 0.1).abs() < 1e-15);
    }
}

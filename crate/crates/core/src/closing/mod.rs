//! Closing a near-return x̂, f̂^m(x̂) into a hyperbolic periodic point.

pub mod certify;
pub mod ladder;

use crate::cocycle::ChartedWindow;
use crate::error::{Error, Result};
use crate::graph::{graph_distance, intersect_graphs, LipGraph};
use crate::linalg::{line_angle, CVec, C64, V2};
use crate::orbit::{window_distance, OrbitWindow};
use crate::system::System;
use crate::transform::{validate_budget, ParameterBudget};

pub use certify::{hyperbolicity_certificate, iterate, newton_polish, periodic_residual, EigenReport, PolishReport};
pub use ladder::{build_backward_family, build_forward_family, Ladder};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearReturn {
    pub i: i64,
    pub m: usize,
    pub distance: f64,
}

/// All (i, m) with 0 ≤ i, i+m in the window, both ends accepted by `good`, and
/// window distance below η; sorted by (m, i).
pub fn find_near_returns(
    system: &System,
    w: &OrbitWindow,
    eta: f64,
    max_m: usize,
    depth: usize,
    weight: f64,
    good: impl Fn(i64) -> bool,
) -> Vec<NearReturn> {
    let mut out = Vec::new();
    for m in 1..=max_m {
        for i in 0..=(w.last_index() - m as i64) {
            if !good(i) || !good(i + m as i64) {
                continue;
            }
            let distance = window_distance(system, w, i, w, i + m as i64, depth, weight);
            if distance < eta {
                out.push(NearReturn { i, m, distance });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosingConfig {
    pub budget: ParameterBudget,
    pub max_generations: usize,
    /// Stop once successive z_{l+1,l} differ by less than this (ambient).
    pub tol: f64,
    /// Lattice cells z_{l,j} computed for l, j ≤ this.
    pub lattice: usize,
    /// Mean-value constant of the charts.
    pub chart_constant: f64,
    /// Run even when the budget validator fails.
    pub override_budget: bool,
}

impl ClosingConfig {
    pub fn new(budget: ParameterBudget) -> ClosingConfig {
        ClosingConfig { budget, max_generations: 200, tol: 1e-12, lattice: 6, chart_constant: 1.0, override_budget: false }
    }
}

/// The two families, their successive distances and the intersection grid (chart coordinates at i).
#[derive(Debug, Clone)]
pub struct GraphLattice {
    pub m: usize,
    pub b: Vec<LipGraph>,
    pub a: Vec<LipGraph>,
    /// d(B_j, B_{j+1}).
    pub d_b: Vec<f64>,
    /// d(A_l, A_{l+1}).
    pub d_a: Vec<f64>,
    /// z[l][j] = B_j ∩ A_l.
    pub z: Vec<Vec<CVec>>,
}

impl GraphLattice {
    /// Worst excess of d_{j+1} over e^{−γ}d_j + slack, for a distance sequence.
    pub fn cauchy_excess(d: &[f64], gamma: f64, slack: f64) -> f64 {
        d.windows(2).map(|p| p[1] - ((-gamma).exp() * p[0] + slack)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Successive ratios d_{j+1}/d_j.
    pub fn ratios(d: &[f64]) -> Vec<f64> {
        d.windows(2).map(|p| p[1] / p[0]).collect()
    }
}

/// Intersections B_j ∩ A_l for l, j < n.
pub fn lattice_points(b: &[LipGraph], a: &[LipGraph], n: usize) -> Result<Vec<Vec<CVec>>> {
    (0..n.min(a.len()))
        .map(|l| (0..n.min(b.len())).map(|j| intersect_graphs(&b[j], &a[l])).collect::<Result<Vec<_>>>())
        .collect()
}

/// Lattice diagnostics: the functional relation and the contraction/expansion inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LatticeReport {
    /// max ‖f^m(z_{l,j}) − z_{l−1,j+1}‖ (ambient).
    pub relation: f64,
    /// Worst excess in ‖z_{l1,j} − z_{l2,j}‖ ≤ e^{−γ}‖z_{l1−1,j+1} − z_{l2−1,j+1}‖.
    pub contraction_excess: f64,
    /// Worst excess in e^{γ}‖z_{l−1,j1+1} − z_{l−1,j2+1}‖ ≤ ‖z_{l,j1} − z_{l,j2}‖.
    pub expansion_excess: f64,
    /// max over lattice points and 0 ≤ s ≤ m of the stage-box ratio
    /// max(|X_s|/hr_{i+s}, |Y_s|/(e^γ hr_{i+s})).
    pub stage_ratio: f64,
    pub quadruples: usize,
}

fn lattice_report(ladder: &Ladder, z: &[Vec<CVec>], slack: f64) -> Result<LatticeReport> {
    let cw = ladder.cw;
    let sys = &cw.system;
    let (i, m, g) = (ladder.i, ladder.m, ladder.gamma);
    let mut rep = LatticeReport { contraction_excess: f64::NEG_INFINITY, expansion_excess: f64::NEG_INFINITY, ..Default::default() };
    let n = z.len();
    for l in 0..n {
        for j in 0..z[l].len() {
            let mut p = cw.from_chart(i, &z[l][j]);
            for s in 0..=m {
                let w = cw.to_chart(i + s as i64, &p);
                let ratio = (w[0].norm() / ladder.hr[s]).max(w[1].norm() / (g.exp() * ladder.hr[s]));
                rep.stage_ratio = rep.stage_ratio.max(ratio);
                if s < m {
                    p = sys.apply(&p)?;
                }
            }
            if l >= 1 && j + 1 < z[l - 1].len() {
                let target = cw.from_chart(i, &z[l - 1][j + 1]);
                rep.relation = rep.relation.max(sys.model().delta(&p, &target).norm());
            }
        }
    }
    let d = |a: &CVec, b: &CVec| (a - b).norm();
    for j in 0..n.saturating_sub(1) {
        for l1 in 1..n {
            for l2 in 1..n {
                if l1 == l2 || j + 1 >= z[l1 - 1].len() {
                    continue;
                }
                let before = d(&z[l1][j], &z[l2][j]);
                let after = d(&z[l1 - 1][j + 1], &z[l2 - 1][j + 1]);
                rep.contraction_excess = rep.contraction_excess.max(before - ((-g).exp() * after + slack));
                rep.quadruples += 1;
            }
        }
    }
    for l in 1..n {
        for j1 in 0..n - 1 {
            for j2 in 0..n - 1 {
                if j1 == j2 {
                    continue;
                }
                let before = d(&z[l][j1], &z[l][j2]);
                let after = d(&z[l - 1][j1 + 1], &z[l - 1][j2 + 1]);
                rep.expansion_excess = rep.expansion_excess.max(g.exp() * after - (before + slack));
                rep.quadruples += 1;
            }
        }
    }
    Ok(rep)
}

/// Limits of both families and their checks.
#[derive(Debug, Clone)]
pub struct LimitGraphs {
    pub b: LipGraph,
    pub a: LipGraph,
    /// Invariance of A_∞ under f^m over 16 samples (chart coordinates).
    pub invariance: f64,
    /// Distance of z to graph(B_∞) and graph(A_∞).
    pub on_b: f64,
    pub on_a: f64,
}

/// The last generations, checked for invariance and for passing through z (chart coordinates at i).
pub fn limit_graphs(ladder: &Ladder, lattice: &GraphLattice, z: &CVec) -> Result<LimitGraphs> {
    let b = lattice.b.last().ok_or_else(|| Error::NoConvergence("empty forward family".into()))?.clone();
    let a = lattice.a.last().ok_or_else(|| Error::NoConvergence("empty backward family".into()))?.clone();
    let cw = ladder.cw;
    let mut invariance: f64 = 0.0;
    for k in 0..16 {
        let th = std::f64::consts::TAU * k as f64 / 16.0;
        let y = C64::new(th.cos(), th.sin()) * (0.5 * a.radius * (k + 1) as f64 / 16.0);
        let p = cw.from_chart(ladder.i, &a.point(y)?);
        let img = cw.to_chart(ladder.i, &iterate(&cw.system, &p, ladder.m)?);
        invariance = invariance.max((img[0] - a.value(img[1])?).norm());
    }
    let on_b = (z[1] - b.value(z[0])?).norm();
    let on_a = (z[0] - a.value(z[1])?).norm();
    Ok(LimitGraphs { b, a, invariance, on_b, on_a })
}

/// Everything certified about one closed orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosingCertificate {
    pub i: i64,
    pub m: usize,
    pub z: CVec,
    /// ‖f^m(z) − z‖.
    pub residual: f64,
    pub generations: usize,
    pub polish: PolishReport,
    /// ‖z − newton_polish(z)‖.
    pub polish_distance: f64,
    /// ε = C(X)·e^{2γ}·4h/r0.
    pub eps: f64,
    /// (dist(f^s x, f^s z), ε·max(e^{−γs}, e^{−γ(m−s)})) for s = 0 … m.
    pub shadow: Vec<(f64, f64)>,
    pub eigen: Option<EigenReport>,
    /// Per-step growth of the tangent of B_∞ and of A_∞ along the orbit of z.
    pub growth_unstable: Vec<f64>,
    pub growth_stable: Vec<f64>,
    /// Angle between the tangent of A_∞ at z and the stable eigenvector of Df^m(z).
    pub stable_angle: f64,
    pub budget: ParameterBudget,
    pub failures: Vec<String>,
}

impl ClosingCertificate {
    pub fn certified(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Result of [`close_orbit`]: the certificate plus the objects behind it.
#[derive(Debug, Clone)]
pub struct ClosingRun {
    pub certificate: ClosingCertificate,
    pub lattice: GraphLattice,
    pub report: LatticeReport,
    pub limits: Option<LimitGraphs>,
}

/// Builds both families, extracts z = lim z_{l+1,l} and certifies it.
pub fn close_orbit(cw: &ChartedWindow, i: i64, m: usize, cfg: &ClosingConfig) -> Result<ClosingRun> {
    let check = validate_budget(&cfg.budget);
    if !check.pass() && !cfg.override_budget {
        return Err(Error::Budget(check.failed().join(", ")));
    }
    let ladder = Ladder::new(cw, i, m, &cfg.budget)?;
    let gamma = cfg.budget.gamma;
    let scale = |w: &CVec| cw.from_chart(i, w);
    let mut b = vec![ladder.b0()];
    let mut a = vec![ladder.a0().map_err(|e| e.context("backward generation 0"))?];
    a.push(ladder.next_a(&a[0]).map_err(|e| e.context("backward generation 1"))?);
    let mut zs = vec![intersect_graphs(&b[0], &a[1])?];
    let mut converged = false;
    let mut last_step = f64::INFINITY;
    let min_gen = cfg.lattice.max(2);
    while b.len() < cfg.max_generations {
        let gen = b.len();
        b.push(ladder.next_b(&b[gen - 1]).map_err(|e| e.context(format!("forward generation {gen}")))?);
        a.push(ladder.next_a(&a[gen]).map_err(|e| e.context(format!("backward generation {}", gen + 1)))?);
        let z_new = intersect_graphs(&b[gen], &a[gen + 1])?;
        let step = cw.system.model().delta(&scale(&z_new), &scale(zs.last().unwrap())).norm();
        zs.push(z_new);
        if gen >= min_gen && (step < cfg.tol || (step <= 1e3 * cfg.tol && step >= last_step)) {
            converged = true;
            break;
        }
        last_step = step;
    }
    let d_b: Vec<f64> = b.windows(2).map(|p| graph_distance(&p[0], &p[1])).collect::<Result<_>>()?;
    let d_a: Vec<f64> = a.windows(2).map(|p| graph_distance(&p[0], &p[1])).collect::<Result<_>>()?;
    let z_grid = lattice_points(&b, &a, cfg.lattice + 1)?;
    let report = lattice_report(&ladder, &z_grid, 1e-9 * ladder.hr[0])?;
    let lattice = GraphLattice { m, b, a, d_b, d_a, z: z_grid };
    let z_chart = zs.last().unwrap().clone();
    let z = scale(&z_chart);
    let mut failures = Vec::new();
    if !converged {
        failures.push(format!("z_(l+1,l) did not settle within {} generations", cfg.max_generations));
    }
    let residual = periodic_residual(&cw.system, &z, m)?;
    if residual > 1e-9 {
        failures.push(format!("residual {residual:e}"));
    }
    let polish = newton_polish(&cw.system, &z, m);
    let polish_distance = if polish.converged { cw.system.model().delta(&polish.z, &z).norm() } else { f64::INFINITY };
    if polish_distance > 1e-8 {
        failures.push(format!("Newton polish disagrees by {polish_distance:e} ({})", polish.note));
    }
    let h = cfg.budget.h;
    let eps = cfg.chart_constant * (2.0 * gamma).exp() * 4.0 * h / cfg.budget.r0;
    let mut shadow = Vec::with_capacity(m + 1);
    let mut p = z.clone();
    for s in 0..=m {
        let d = cw.system.model().delta(&p, &cw.point(i + s as i64)).norm();
        let bound = eps * (-gamma * s as f64).exp().max((-gamma * (m - s) as f64).exp());
        if d > bound {
            failures.push(format!("shadowing fails at step {s}: {d:e} > {bound:e}"));
        }
        shadow.push((d, bound));
        if s < m {
            p = cw.system.apply(&p)?;
        }
    }
    let eigen = match hyperbolicity_certificate(&cw.system, &z, m, gamma) {
        Ok(e) => Some(e),
        Err(e) => {
            failures.push(e.to_string());
            None
        }
    };
    let limits = limit_graphs(&ladder, &lattice, &z_chart);
    let (mut growth_unstable, mut growth_stable, mut stable_angle) = (Vec::new(), Vec::new(), f64::NAN);
    match &limits {
        Ok(lim) => {
            if lim.invariance > 1e-8 {
                failures.push(format!("A_∞ invariance residual {:e}", lim.invariance));
            }
            if lim.on_a > 1e-9 || lim.on_b > 1e-9 {
                failures.push(format!("z off the limit graphs by ({:e}, {:e})", lim.on_b, lim.on_a));
            }
            let one = C64::new(1.0, 0.0);
            let tu = V2::new(one, lim.b.derivative(z_chart[0]));
            let ts = V2::new(lim.a.derivative(z_chart[1]), one);
            growth_unstable = tangent_growth(&ladder, &z, tu)?;
            growth_stable = tangent_growth(&ladder, &z, ts)?;
            if growth_unstable.iter().any(|&f| f < (2.0 * gamma).exp()) {
                failures.push("unstable tangent grows by less than e^{2γ}".into());
            }
            if growth_stable.iter().any(|&f| f > (-2.0 * gamma).exp()) {
                failures.push("stable tangent shrinks by less than e^{−2γ}".into());
            }
            if let Some(e) = &eigen {
                let c_i = &cw.frame(i).c_gamma;
                let amb = c_i * CVec::from_vec(vec![ts[0], ts[1]]);
                stable_angle = line_angle(&amb, &e.e_s);
            }
        }
        Err(e) => failures.push(format!("limit graphs: {e}")),
    }
    let certificate = ClosingCertificate {
        i,
        m,
        z,
        residual,
        generations: lattice.b.len() - 1,
        polish,
        polish_distance,
        eps,
        shadow,
        eigen,
        growth_unstable,
        growth_stable,
        stable_angle,
        budget: cfg.budget,
        failures,
    };
    Ok(ClosingRun { certificate, lattice, report, limits: limits.ok() })
}

/// ‖Dg_s(Z_s)U_s‖/‖U_s‖ along the orbit of z, starting from the tangent u in the chart at i.
fn tangent_growth(ladder: &Ladder, z: &CVec, u: V2) -> Result<Vec<f64>> {
    let cw = ladder.cw;
    let mut p = z.clone();
    let mut u = u;
    let mut out = Vec::with_capacity(ladder.m);
    for s in 0..ladder.m {
        let zs = cw.to_chart(ladder.i + s as i64, &p);
        let d = ladder.maps[s].deriv(&V2::new(zs[0], zs[1]))?;
        let next = d * u;
        out.push(next.norm() / u.norm());
        u = next;
        p = cw.system.apply(&p)?;
    }
    Ok(out)
}

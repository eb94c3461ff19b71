//! Forward and backward graph transforms, recentering between frames, and cut-off.

pub mod budget;

use crate::chart::{chart_transition, Chart, SplitFrame};
use crate::cocycle::LocalMap;
use crate::error::{Error, Result};
use crate::graph::{fit_standard, standard_abscissae, Bounds, LipGraph, Orientation};
use crate::linalg::{c, op_norm2, to_m2, to_v2, C64, M2, V2, ZERO};

pub use budget::{backward_hypotheses, validate_budget, BudgetCheck, BudgetReport, ParameterBudget};

/// The forward theorem's Lipschitz bound for the image graph.
pub fn forward_lip_bound(b_norm: f64, a_min: f64, delta: f64, gamma0: f64) -> f64 {
    (b_norm * gamma0 + delta * (1.0 + gamma0)) / (a_min - delta * (1.0 + gamma0))
}

/// The forward theorem's domain radius: (‖A⁻¹‖⁻¹ − δ(1+γ0))α − δβ.
pub fn forward_domain(a_min: f64, delta: f64, gamma0: f64, alpha: f64, beta: f64) -> f64 {
    (a_min - delta * (1.0 + gamma0)) * alpha - delta * beta
}

/// The forward theorem's offset bound (1+γ0)(‖B‖β + δβ + ‖D²g‖β²).
pub fn forward_offset_bound(b_norm: f64, delta: f64, d2: f64, gamma0: f64, beta: f64) -> f64 {
    (1.0 + gamma0) * (b_norm * beta + delta * beta + d2 * beta * beta)
}

fn check_orientation(g: &LipGraph, want: Orientation) -> Result<()> {
    if g.orientation != want {
        return Err(Error::OrientationMismatch);
    }
    Ok(())
}

/// Image of a horizontal graph under g, over the domain the forward theorem guarantees.
/// Returns the new graph and that radius.
pub fn push_forward(g: &LipGraph, lm: &LocalMap, gamma0: f64) -> Result<(LipGraph, f64)> {
    check_orientation(g, Orientation::Horizontal)?;
    if g.lip_bound > gamma0 * (1.0 + 1e-12) {
        return Err(Error::HypothesesViolated(format!("graph lip {:e} above γ0 = {gamma0:e}", g.lip_bound)));
    }
    let alpha = g.radius;
    let beta = g.offset_bound;
    let delta = lm.delta_nl;
    let a_min = lm.a.norm();
    let b = lm.b_norm();
    if delta * lm.a_inv_norm() * (1.0 + gamma0) >= 1.0 {
        return Err(Error::HypothesesViolated("δ‖A⁻¹‖(1+γ0) ≥ 1".into()));
    }
    let reach = alpha * (1.0 + gamma0) + beta;
    if reach > lm.sample_radius * (1.0 + 1e-12) {
        return Err(Error::HypothesesViolated(format!("graph reaches {reach:e}, nonlinearity sampled to {:e}", lm.sample_radius)));
    }
    let rho = forward_domain(a_min, delta, gamma0, alpha, beta);
    if !(rho > 0.0) {
        return Err(Error::HypothesesViolated("empty forward domain".into()));
    }
    let bounds = Bounds {
        lip: forward_lip_bound(b, a_min, delta, gamma0),
        offset: forward_offset_bound(b, delta, lm.d2, gamma0, beta),
    };
    let mut values = Vec::with_capacity(65);
    for t in standard_abscissae(rho) {
        let x = solve_abscissa(g, lm, t)?;
        let w = V2::new(x, g.value_unchecked(x));
        values.push(lm.eval(&w)?[1]);
    }
    Ok((fit_standard(&values, Orientation::Horizontal, rho, bounds)?, rho))
}

/// Damped Newton for g1(X, φ(X)) = t.
fn solve_abscissa(g: &LipGraph, lm: &LocalMap, t: C64) -> Result<C64> {
    let alpha = g.radius;
    let fold = || Error::GraphFold(t.norm());
    let resid = |x: C64| -> Result<C64> { Ok(lm.eval(&V2::new(x, g.value_unchecked(x)))?[0] - t) };
    let mut x = t / lm.a;
    if x.norm() > alpha {
        x = x * (alpha / x.norm());
    }
    let mut f = resid(x)?;
    for _ in 0..60 {
        let dg = lm.deriv(&V2::new(x, g.value_unchecked(x)))?;
        let slope = dg[(0, 0)] + dg[(0, 1)] * g.derivative(x);
        if slope.norm() == 0.0 {
            return Err(fold());
        }
        let step = f / slope;
        if step.norm() <= 1e-15 * alpha {
            return Ok(x);
        }
        let mut lambda = 1.0;
        loop {
            let cand = x - step * lambda;
            if cand.norm() <= alpha * (1.0 + 1e-12) {
                let fc = resid(cand)?;
                if fc.norm() < f.norm() {
                    x = cand;
                    f = fc;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1.0 / 64.0 {
                if f.norm() <= 1e-12 * alpha * lm.a.norm() {
                    return Ok(x);
                }
                return Err(fold());
            }
        }
    }
    Err(fold())
}

/// The graph ψ over B(0, αe^{2γ}) with g(graph ψ) ⊂ graph φ, for a vertical φ over B(0, α).
pub fn pull_back(g: &LipGraph, lm: &LocalMap, gamma: f64, gamma0: f64, beta: f64) -> Result<LipGraph> {
    check_orientation(g, Orientation::Vertical)?;
    if g.lip_bound > gamma0 * (1.0 + 1e-12) || g.offset_bound > beta * (1.0 + 1e-12) {
        return Err(Error::HypothesesViolated(format!(
            "graph bounds ({:e}, {:e}) above (γ0, β) = ({gamma0:e}, {beta:e})",
            g.lip_bound, g.offset_bound
        )));
    }
    let alpha = g.radius;
    let report = backward_hypotheses(lm, gamma, gamma0, alpha, beta);
    if !report.pass() {
        return Err(Error::HypothesesViolated(format!("backward hypotheses fail: {}", report.failed().join(", "))));
    }
    let rho = alpha * (2.0 * gamma).exp();
    let bounds = Bounds { lip: (-gamma).exp() * gamma0, offset: beta * (-2.0 * gamma).exp() };
    let mut values = Vec::with_capacity(65);
    let mut x = ZERO;
    for y in standard_abscissae(rho) {
        x = fixed_point(g, lm, y, x, bounds.offset)?;
        values.push(x);
    }
    let psi = fit_standard(&values, Orientation::Vertical, rho, bounds)?;
    let tol = 1e-9 * alpha.min(1.0);
    let worst = inclusion_residual(&psi, g, lm)?;
    if worst > tol {
        return Err(Error::InclusionResidual(worst));
    }
    Ok(psi)
}

/// Iterates Λ_Y(X) = A⁻¹[φ(g2(X,Y)) − (g1(X,Y) − AX)] from `x`.
fn fixed_point(g: &LipGraph, lm: &LocalMap, y: C64, mut x: C64, offset: f64) -> Result<C64> {
    let alpha = g.radius;
    let trap = y.norm() + offset;
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        let gv = lm.eval(&V2::new(x, y))?;
        if gv[1].norm() > alpha * (1.0 + 1e-12) {
            return Err(Error::HypothesesViolated(format!("g2 leaves the domain of φ at |Y| = {:e}", y.norm())));
        }
        let next = (g.value_unchecked(gv[1]) - (gv[0] - lm.a * x)) / lm.a;
        if next.norm() > trap * (1.0 + 1e-9) + 1e-300 {
            return Err(Error::HypothesesViolated(format!("Λ_Y leaves the trapping set at |Y| = {:e}", y.norm())));
        }
        let step = (next - x).norm();
        x = next;
        if step <= 4.0 * f64::EPSILON * alpha || (step <= 1e-12 * alpha && step >= last) {
            return Ok(x);
        }
        last = step;
    }
    Err(Error::NoConvergence(format!("backward fixed point at |Y| = {:e}", y.norm())))
}

/// max |g1(ψ(Y),Y) − φ(g2(ψ(Y),Y))| over 16 points of the domain of ψ.
pub fn inclusion_residual(psi: &LipGraph, phi: &LipGraph, lm: &LocalMap) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..16 {
        let th = std::f64::consts::TAU * 0.618_034 * k as f64;
        let y = c(th.cos(), th.sin()) * (psi.radius * (k + 1) as f64 / 16.0);
        let gv = lm.eval(&V2::new(psi.value_unchecked(y), y))?;
        worst = worst.max((gv[0] - phi.value(gv[1])?).norm());
    }
    Ok(worst)
}

/// Target of a recentering: output radius and declared bounds, and the largest translation accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecenterSpec {
    pub radius: f64,
    pub lip: f64,
    pub offset: f64,
    pub max_translation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecenterReport {
    /// ‖C_dst⁻¹ C_src − I‖.
    pub eps_eta: f64,
    /// ‖C_dst⁻¹ (src.base − dst.base)‖.
    pub translation: f64,
    pub predicted_lip: f64,
}

/// The affine change of coordinates w′ = Mw + t from the source frame to the destination frame.
pub fn transition(src: (&SplitFrame, &Chart), dst: (&SplitFrame, &Chart)) -> Result<(M2, V2)> {
    let m = to_m2(&(&dst.0.c_gamma_inv * &src.0.c_gamma));
    let a = chart_transition(dst.1, src.1)?.a;
    let t = to_v2(&(&dst.0.c_gamma_inv * a));
    Ok((m, t))
}

/// Re-expresses a graph in another frame and chart.
pub fn recenter(
    g: &LipGraph,
    src: (&SplitFrame, &Chart),
    dst: (&SplitFrame, &Chart),
    spec: &RecenterSpec,
) -> Result<(LipGraph, RecenterReport)> {
    let (m, t) = transition(src, dst)?;
    recenter_affine(g, &m, &t, spec)
}

/// Image of a graph under w ↦ Mw + t.
pub fn recenter_affine(g: &LipGraph, m: &M2, t: &V2, spec: &RecenterSpec) -> Result<(LipGraph, RecenterReport)> {
    // (along, across) indices: the graph's abscissa and value coordinates.
    let (p, q) = match g.orientation {
        Orientation::Horizontal => (0, 1),
        Orientation::Vertical => (1, 0),
    };
    let l = g.lip_bound;
    let off = m[(p, q)].norm().max(m[(q, p)].norm());
    let predicted_lip = (m[(q, q)].norm() * l + off * (1.0 + l)) / (m[(p, p)].norm() - off * (1.0 + l));
    let report = RecenterReport { eps_eta: op_norm2(&(m - M2::identity())), translation: t.norm(), predicted_lip };
    if !(predicted_lip >= 0.0) || predicted_lip > spec.lip {
        return Err(Error::FramesTooFar { lip: predicted_lip, target: spec.lip });
    }
    if report.translation > spec.max_translation {
        return Err(Error::TranslationTooLarge { norm: report.translation, limit: spec.max_translation });
    }
    let mut values = Vec::with_capacity(65);
    let mut s = ZERO;
    for target in standard_abscissae(spec.radius) {
        // Solve m_pp s + m_pq φ(s) + t_p = target.
        let mut last = f64::INFINITY;
        let mut done = false;
        for _ in 0..200 {
            let next = (target - t[p] - m[(p, q)] * g.value_unchecked(s)) / m[(p, p)];
            let step = (next - s).norm();
            s = next;
            if step <= 4.0 * f64::EPSILON * g.radius || (step <= 1e-12 * g.radius && step >= last) {
                done = true;
                break;
            }
            last = step;
        }
        if !done {
            return Err(Error::NoConvergence("recentering abscissa".into()));
        }
        if s.norm() > g.radius * (1.0 + 1e-12) {
            return Err(Error::DomainTooSmall { got: g.radius, need: s.norm() });
        }
        values.push(m[(q, p)] * s + m[(q, q)] * g.value_unchecked(s) + t[q]);
    }
    let out = fit_standard(&values, g.orientation, spec.radius, Bounds { lip: spec.lip, offset: spec.offset })?;
    Ok((out, report))
}

/// The same graph on a smaller disk.
pub fn cutoff(g: &LipGraph, radius: f64) -> Result<LipGraph> {
    if radius > g.radius * (1.0 + 1e-12) {
        return Err(Error::DomainTooSmall { got: g.radius, need: radius });
    }
    if radius >= g.radius {
        return Ok(g.clone());
    }
    Ok(g.restrict(radius))
}

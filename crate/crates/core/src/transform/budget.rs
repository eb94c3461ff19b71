//! The smallness conditions on (γ, γ0, h) and the hypotheses of the backward transform.

use crate::cocycle::LocalMap;

/// Budget parameters. `chi_s = −∞` is replaced by −5γ when validating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBudget {
    pub gamma: f64,
    pub gamma0: f64,
    pub h: f64,
    pub eta: f64,
    pub delta_measure: f64,
    /// Shadowing target ε.
    pub eps: f64,
    pub chi_top: f64,
    pub chi_u: f64,
    pub chi_s: f64,
    pub r0: f64,
}

impl ParameterBudget {
    /// A budget with η = 1e−3, δ_measure = 0.1, ε = 1, r0 = 1e−3.
    pub fn new(gamma: f64, gamma0: f64, h: f64, chi_top: f64, chi_u: f64, chi_s: f64) -> ParameterBudget {
        ParameterBudget { gamma, gamma0, h, eta: 1e-3, delta_measure: 0.1, eps: 1.0, chi_top, chi_u, chi_s, r0: 1e-3 }
    }

    pub fn chi_s_effective(&self) -> f64 {
        if self.chi_s == f64::NEG_INFINITY {
            -5.0 * self.gamma
        } else {
            self.chi_s
        }
    }

    /// The analytic nonlinearity bound δ = 5h.
    pub fn delta(&self) -> f64 {
        5.0 * self.h
    }
}

/// One inequality `lhs < rhs` (strict) or `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetCheck {
    pub id: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub pass: bool,
}

impl BudgetCheck {
    fn new(id: &'static str, lhs: f64, rhs: f64, strict: bool) -> BudgetCheck {
        let pass = if strict { lhs < rhs } else { lhs <= rhs };
        BudgetCheck { id, lhs, rhs, strict, pass }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub checks: Vec<BudgetCheck>,
}

impl BudgetReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.id).collect()
    }

    pub fn get(&self, id: &str) -> Option<&BudgetCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// Every inequality of the closing-lemma budget, with δ = 5h.
pub fn validate_budget(p: &ParameterBudget) -> BudgetReport {
    let g = p.gamma;
    let g0 = p.gamma0;
    let h = p.h;
    let d = p.delta();
    let cu = p.chi_u;
    let cs = p.chi_s_effective();
    let e = f64::exp;
    let checks = vec![
        BudgetCheck::new("gap", 4.0 * g, cu - cs, true),
        BudgetCheck::new("g0_fifth", g0, 0.2, true),
        BudgetCheck::new("g0_quarter", g0, e(g / 4.0) - 1.0, true),
        BudgetCheck::new("g0_half", g0, 1.0 - e(-g / 2.0), true),
        BudgetCheck::new("g0_chi1", g0 * e(p.chi_top + g) + e(-4.0 * g), e(-3.5 * g), true),
        BudgetCheck::new("chiu_4g", e(4.0 * g), e(cu - g), false),
        BudgetCheck::new("chis_4g", e(cs + g), e(-4.0 * g), false),
        BudgetCheck::new("h_expand", 5.0 * h * e(-cu + g) * 2.0, 1.0, true),
        BudgetCheck::new("h_lip", (g0 * e(cs + g) + 6.0 * h) / (e(cu - g) - 6.0 * h), e(-g) * g0, false),
        BudgetCheck::new("h_domain", e(2.0 * g), e(4.0 * g) - 11.0 * h, true),
        BudgetCheck::new("h_offset", e(g / 2.0) * (e(-4.0 * g) + 5.0 * h + h), e(-2.0 * g), false),
        BudgetCheck::new("bw_contract", (e(cs + g) + 2.0 * d) * e(2.0 * g) + d, 1.0, false),
        BudgetCheck::new("bw_delta_b", d * (1.0 + g0), (e(cu - g) - g0 * e(cs + g)) / 2.0, false),
        BudgetCheck::new("bw_delta_a", d * (1.0 + g0), e(cu - g) - e(2.0 * g), false),
        BudgetCheck::new("e2g", e(2.0 * g), 1.5, true),
    ];
    BudgetReport { checks }
}

/// Hypotheses of the backward transform for a concrete local map, with δ = δ_nl.
pub fn backward_hypotheses(g: &LocalMap, gamma: f64, gamma0: f64, alpha: f64, beta: f64) -> BudgetReport {
    let d = g.delta_nl;
    let ainv = g.a_inv_norm();
    let a_min = 1.0 / ainv;
    let b = g.b_norm();
    let xi = g.xi();
    let e = f64::exp;
    let checks = vec![
        BudgetCheck::new("bw_cone", gamma0 * (1.0 - xi) + 2.0 * d * (1.0 + gamma0) * ainv, 1.0, false),
        BudgetCheck::new("bw_lip", (gamma0 * b + d * (1.0 + gamma0)) / (a_min - d * (1.0 + gamma0)), e(-gamma) * gamma0, false),
        BudgetCheck::new("bw_contract", (b + 2.0 * d) * e(2.0 * gamma) + d, 1.0, false),
        BudgetCheck::new("bw_delta_b", d * (1.0 + gamma0), (a_min - gamma0 * b) / 2.0, false),
        BudgetCheck::new("bw_delta_a", d * (1.0 + gamma0), a_min - e(2.0 * gamma), false),
        BudgetCheck::new("bw_beta_alpha", beta, alpha, false),
        BudgetCheck::new("bw_alpha_ball", alpha, g.radius / 4.0, false),
        BudgetCheck::new("bw_sampled", alpha * e(2.0 * gamma) * (1.0 + gamma0) + beta, g.sample_radius * (1.0 + 1e-12), false),
        BudgetCheck::new("e2g", e(2.0 * gamma), 1.5, true),
    ];
    BudgetReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_s_substitution() {
        let b = ParameterBudget::new(0.1, 0.01, 1e-3, 0.6, 0.6, f64::NEG_INFINITY);
        assert_eq!(b.chi_s_effective(), -0.5);
        assert!(validate_budget(&b).pass());
    }

    #[test]
    fn report_lists_every_inequality() {
        let b = ParameterBudget::new(0.1, 0.01, 1e-3, 0.6, 0.6, -0.6);
        let r = validate_budget(&b);
        assert_eq!(r.checks.len(), 15);
        assert!((r.get("g0_quarter").unwrap().rhs - 0.0253151).abs() < 1e-6);
    }
}

use pesin::closing::*;
use pesin::cocycle::{ChartedWindow, PesinConstants};
use pesin::graph::standard_abscissae;
use pesin::linalg::{c, rvec, CVec};
use pesin::orbit::{block_cycle, find_cycle, from_cycle, generate_orbit, HistoryPolicy, OrbitWindow};
use pesin::system::{load_system, System};
use pesin::transform::ParameterBudget;

const GAMMA: f64 = 0.1;

fn henon() -> System {
    load_system("complex_henon c=-1+0i b=0.3+0i").unwrap()
}

fn fixed_point() -> CVec {
    let x = (1.3 + 5.69f64.sqrt()) / 2.0;
    rvec(&[x, x])
}

fn two_cycle(s: &System) -> Vec<CVec> {
    let (a, b) = (c(-0.65, 0.5172), c(-0.65, -0.5172));
    find_cycle(s, &[CVec::from_vec(vec![a, b]), CVec::from_vec(vec![b, a])]).unwrap()
}

/// 30 turns at the fixed point then one turn of the 2-cycle; index 0 sits mid-block.
fn henon_window() -> (System, ChartedWindow) {
    let s = henon();
    let cycle = block_cycle(&s, &[(vec![fixed_point()], 30), (two_cycle(&s), 1)]).unwrap();
    let w = from_cycle(&s, &cycle, 200, 200, 15).unwrap();
    let cw = ChartedWindow::build(&s, &w, GAMMA, PesinConstants::default()).unwrap();
    (s, cw)
}

fn henon_config(cw: &ChartedWindow) -> ClosingConfig {
    let sp = &cw.spectrum;
    ClosingConfig::new(ParameterBudget::new(GAMMA, 0.005, 1e-3, sp.chi_top(), sp.chi_u(), sp.chi_s()))
}

#[test]
fn henon_fixed_point_closes() {
    let (_, cw) = henon_window();
    let cfg = henon_config(&cw);
    for m in 1..=3 {
        let run = close_orbit(&cw, 0, m, &cfg).unwrap();
        let cert = &run.certificate;
        assert!(cert.certified(), "{:?}", cert.failures);
        assert!((&cert.z - fixed_point()).norm() < 1e-8);
        assert!(cert.residual <= 1e-9);
        assert!(cert.polish_distance <= 1e-8);
        let e = cert.eigen.as_ref().unwrap();
        assert_eq!((e.expanding, e.contracting), (1, 1));
        // Lemme 6 at j = 0.
        assert!(run.lattice.d_b[0] <= 3.0 * 1e-3 * cw.r(0));
        let hr = 1e-3 * cw.r(0).min(cw.r(m as i64));
        assert!(GraphLattice::cauchy_excess(&run.lattice.d_b, GAMMA, 1e-12 * hr) <= 0.0);
        assert!(GraphLattice::cauchy_excess(&run.lattice.d_a, GAMMA, 1e-12 * hr) <= 0.0);
        assert!(run.report.relation <= 1e-8);
        assert!(run.report.contraction_excess <= 0.0 && run.report.expansion_excess <= 0.0);
        let lim = run.limits.as_ref().unwrap();
        assert!(lim.invariance <= 1e-8 && lim.on_a <= 1e-9 && lim.on_b <= 1e-9);
        assert!(cert.stable_angle <= 1e-4);
        // Successive diagonal lattice points approach each other as 4hr·e^{−γ(l−1)}.
        let z = &run.lattice.z;
        for l in 1..z.len() - 1 {
            let step = (&z[l + 1][l] - &z[l][l - 1]).norm();
            assert!(step <= 4.0 * hr * (-GAMMA * (l as f64 - 1.0)).exp());
        }
    }
}

#[test]
fn block_cycle_near_returns_close() {
    let s = henon();
    let p = fixed_point();
    let base = block_cycle(&s, &[(vec![p.clone()], 4), (two_cycle(&s), 1)]).unwrap();
    let cycle = block_cycle(&s, &[(base.clone(), 6), (vec![p], 2)]).unwrap();
    let w = from_cycle(&s, &cycle, 200, 200, 18).unwrap();
    let cw = ChartedWindow::build(&s, &w, GAMMA, PesinConstants::default()).unwrap();
    let cfg = henon_config(&cw);
    let returns = find_near_returns(&s, &w, 1e-3, 6, 30, 0.5, |i| i < 40 && cw.good(i, 1e-3));
    let returns: Vec<_> = returns.into_iter().filter(|r| r.m == 6).collect();
    assert!(!returns.is_empty());
    let mut certified = 0;
    for r in &returns {
        if let Ok(run) = close_orbit(&cw, r.i, r.m, &cfg) {
            let cert = run.certificate;
            assert!(cert.certified(), "{:?}", cert.failures);
            certified += 1;
        }
    }
    assert!(certified >= 1);
}

#[test]
fn linear_exact_return_is_the_origin() {
    let s = load_system("linear m=2,0,0,0.5").unwrap();
    let w = OrbitWindow::from_points(&vec![rvec(&[0.0, 0.0]); 601], 300).verify(&s).unwrap();
    let cw = ChartedWindow::build(&s, &w, GAMMA, PesinConstants::default()).unwrap();
    let cfg = ClosingConfig::new(ParameterBudget::new(GAMMA, 0.01, 1e-3, 2f64.ln(), 2f64.ln(), -(2f64.ln())));
    for m in 1..=3 {
        let run = close_orbit(&cw, 0, m, &cfg).unwrap();
        assert!(run.certificate.certified(), "{:?}", run.certificate.failures);
        assert!(run.certificate.z.norm() < 1e-15);
        for g in run.lattice.b.iter().chain(run.lattice.a.iter()) {
            for t in standard_abscissae(g.radius) {
                assert!(g.value(t).unwrap().norm() < 1e-15);
            }
        }
        assert!(run.lattice.z.iter().flatten().all(|z| z.norm() < 1e-15));
        let lim = run.limits.unwrap();
        assert!(lim.b.measured_offset() + lim.b.measured_lip() < 1e-12);
        assert!(run.certificate.growth_stable.iter().all(|&f| (f - 0.5).abs() < 1e-12));
    }
}

#[test]
fn cat_map_closes_to_the_rational_point() {
    let s = load_system("cat_map").unwrap();
    let x = rvec(&[0.2 + 1e-4, 0.4 + 1e-4]);
    let w = generate_orbit(&s, &x, 200, 200, 0, &HistoryPolicy::Branches(vec![0])).unwrap();
    let cw = ChartedWindow::build(&s, &w, GAMMA, PesinConstants { eps1: 1.0, p: 2.0, c: 1.0 }).unwrap();
    let lam = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    // The map is linear, so δ_nl = 0 and the analytic h-conditions are moot.
    let mut cfg = ClosingConfig::new(ParameterBudget::new(GAMMA, 0.01, 0.05, lam, lam, -lam));
    cfg.override_budget = true;
    let run = close_orbit(&cw, 0, 2, &cfg).unwrap();
    let cert = &run.certificate;
    assert!(cert.certified(), "{:?}", cert.failures);
    // Oracle: (1, 2)/5 has period 2 under [[2,1],[1,1]] mod 5.
    let (a, b) = (1i64, 2i64);
    assert_eq!(((2 * (2 * a + b) + (a + b)) % 5, ((2 * a + b) + (a + b)) % 5), (a, b));
    assert!((cert.z[0].re - 0.2).abs() < 1e-12 && (cert.z[1].re - 0.4).abs() < 1e-12);
    assert!(cert.residual <= 1e-10);
    let e = cert.eigen.as_ref().unwrap();
    let moduli: Vec<f64> = e.eigenvalues.iter().map(|l| l.norm()).collect();
    assert!((moduli[0] - ((3.0 + 5f64.sqrt()) / 2.0).powi(2)).abs() < 1e-9);
}

#[test]
fn budget_failure_is_refused_without_override() {
    let (_, cw) = henon_window();
    let mut cfg = henon_config(&cw);
    cfg.budget.gamma0 = 0.25;
    assert!(matches!(close_orbit(&cw, 0, 1, &cfg), Err(pesin::Error::Budget(_))));
}

#[test]
fn zero_return_time_is_rejected() {
    let (_, cw) = henon_window();
    assert!(close_orbit(&cw, 0, 0, &henon_config(&cw)).is_err());
}

#[test]
fn hyperbolicity_examples() {
    let d = load_system("linear m=2,0,0,0.5").unwrap();
    let e = hyperbolicity_certificate(&d, &rvec(&[0.0, 0.0]), 1, GAMMA).unwrap();
    assert_eq!(e.eigenvalues.iter().map(|l| l.norm()).collect::<Vec<_>>(), vec![2.0, 0.5]);
    assert_eq!((e.expanding, e.contracting), (1, 1));
    let cat = load_system("cat_map").unwrap();
    let e = hyperbolicity_certificate(&cat, &rvec(&[0.0, 0.0]), 1, GAMMA).unwrap();
    let phi = (3.0 + 5f64.sqrt()) / 2.0;
    assert!((e.eigenvalues[0].norm() - phi).abs() < 1e-12 && (e.eigenvalues[1].norm() - 1.0 / phi).abs() < 1e-12);
    let rot = load_system("linear m=1.01,0,0,0.5").unwrap();
    assert!(matches!(hyperbolicity_certificate(&rot, &rvec(&[0.0, 0.0]), 1, GAMMA), Err(pesin::Error::NotCertified(_))));
}

#[test]
fn newton_polish_examples() {
    let s = henon();
    let p = fixed_point();
    let exact = newton_polish(&s, &find_cycle(&s, &[p.clone()]).unwrap()[0], 1);
    assert!(exact.converged && exact.iterations == 0);
    let near = newton_polish(&s, &(&p + rvec(&[1e-3, -1e-3])), 1);
    assert!(near.converged && near.iterations <= 6);
    assert!((&near.z - &p).norm() < 1e-12);
    let far = newton_polish(&s, &rvec(&[1e5, 1e5]), 3);
    assert!(!far.converged && !far.note.is_empty());
}

#[test]
fn near_returns_of_a_periodic_orbit() {
    let s = henon();
    let cyc = block_cycle(&s, &[(vec![fixed_point()], 2), (two_cycle(&s), 1)]).unwrap();
    let w = from_cycle(&s, &cyc, 10, 40, 0).unwrap();
    let found = find_near_returns(&s, &w, 1e-9, 8, 5, 1.0, |_| true);
    assert_eq!((found[0].i, found[0].m), (0, 4));
    assert!(found.iter().all(|r| r.m % 4 == 0));
}

#[test]
fn near_returns_match_a_pair_scan() {
    let s = load_system("classical_henon a=1.4 b=0.3").unwrap();
    let w = generate_orbit(&s, &rvec(&[0.1, 0.1]), 100_000, 0, 1000, &HistoryPolicy::Transient).unwrap();
    let eta = 1e-3;
    let found = find_near_returns(&s, &w, eta, 20, 0, 1.0, |_| true);
    assert!(!found.is_empty());
    let mut oracle = 0;
    for m in 1..=20usize {
        for i in 0..=(100_000 - m) {
            let (a, b) = (w.at(i as i64), w.at((i + m) as i64));
            let d = ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt();
            if d < eta {
                oracle += 1;
            }
        }
    }
    assert_eq!(found.len(), oracle);
    assert!(find_near_returns(&s, &w, 0.0, 20, 0, 1.0, |_| true).is_empty());
}

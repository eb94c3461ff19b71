//! Acceptance criteria 1–10, one PASS/FAIL line each.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use pesin::closing::{close_orbit, find_near_returns, ClosingConfig, GraphLattice};
use pesin::coding::*;
use pesin::cocycle::{finite_lyapunov, ChartedWindow, LocalMap, PesinConstants, QuadraticDynamics};
use pesin::graph::{Bounds, LipGraph, Orientation};
use pesin::harness::{run, write_records, Command, RunConfig};
use pesin::linalg::{c, rvec, CVec, C64, M2};
use pesin::orbit::{block_cycle, find_cycle, from_cycle, generate_orbit, itinerary_cycle, HistoryPolicy};
use pesin::system::load_system;
use pesin::transform::{inclusion_residual, pull_back, push_forward, validate_budget, ParameterBudget};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = (bool, String);

fn report(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> bool {
    let t = Instant::now();
    let (mut ok, mut detail) = f();
    let took = t.elapsed();
    if let Some(lim) = limit {
        if took > lim {
            ok = false;
            detail = format!("{detail}; runtime {took:.1?} over {lim:?}");
        }
    }
    let line = format!("criterion {id:>2} {} {name}: {detail} ({took:.1?})\n", if ok { "PASS" } else { "FAIL" });
    // Straight to the process stdout, so the lines show up without --nocapture.
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    ok
}

const G: f64 = 0.1;
const G0: f64 = 0.01;
const H: f64 = 1e-3;

fn disk(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    let rho = r * rng.random::<f64>().sqrt();
    let th = rng.random::<f64>() * std::f64::consts::TAU;
    c(rho * th.cos(), rho * th.sin())
}

fn phase(rng: &mut ChaCha8Rng) -> C64 {
    let th = rng.random::<f64>() * std::f64::consts::TAU;
    c(th.cos(), th.sin())
}

fn random_map(rng: &mut ChaCha8Rng) -> LocalMap {
    let a = phase(rng) * (0.6 + G * (2.0 * rng.random::<f64>() - 1.0)).exp();
    let b = phase(rng) * (-0.6 + G * (2.0 * rng.random::<f64>() - 1.0)).exp();
    let mut quad = [[c(0.0, 0.0); 3]; 2];
    for row in quad.iter_mut() {
        for q in row.iter_mut() {
            *q = disk(rng, 0.15);
        }
    }
    let zero = c(0.0, 0.0);
    LocalMap::new(Arc::new(QuadraticDynamics { lin: M2::new(a, zero, zero, b), quad }), 1.0, 5.0 * H).unwrap()
}

fn random_graph(rng: &mut ChaCha8Rng, o: Orientation, alpha: f64, beta: f64) -> LipGraph {
    let c0 = disk(rng, beta);
    let split = rng.random::<f64>();
    let c1 = phase(rng) * (G0 * split * 0.99);
    let c2 = phase(rng) * (G0 * (1.0 - split) * 0.49);
    LipGraph::from_fn(o, alpha, Bounds { lip: G0, offset: beta }, |t| Ok(c0 + c1 * t + c2 * t * t / alpha)).unwrap()
}

fn criterion_1() -> Verdict {
    if !validate_budget(&ParameterBudget::new(G, G0, H, 0.6, 0.6, -0.6)).pass() {
        return (false, "budget does not validate".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut bad = 0;
    let mut worst_incl: f64 = 0.0;
    for _ in 0..200 {
        let lm = random_map(&mut rng);
        let beta = H * (0.1 + 0.9 * rng.random::<f64>());
        let g = random_graph(&mut rng, Orientation::Horizontal, H, beta);
        let r_next = (G * (2.0 * rng.random::<f64>() - 1.0)).exp();
        match push_forward(&g, &lm, G0) {
            Ok((psi, rho)) => {
                if psi.measured_lip() > G0 * (-G).exp() || psi.measured_offset() > (-2.0 * G).exp() * beta || rho < H * r_next * G.exp() {
                    bad += 1;
                }
            }
            Err(_) => bad += 1,
        }
        let alpha = G.exp() * H;
        let beta = alpha * (0.1 + 0.9 * rng.random::<f64>());
        let g = random_graph(&mut rng, Orientation::Vertical, alpha, beta);
        match pull_back(&g, &lm, G, G0, beta) {
            Ok(psi) => {
                let incl = inclusion_residual(&psi, &g, &lm).unwrap_or(f64::INFINITY);
                worst_incl = worst_incl.max(incl);
                if psi.measured_lip() > (-G).exp() * G0 || psi.measured_offset() > beta * (-2.0 * G).exp() || incl > 1e-8 {
                    bad += 1;
                }
            }
            Err(_) => bad += 1,
        }
    }
    (bad == 0, format!("200 maps, {bad} contract violations, worst inclusion residual {worst_incl:.1e}"))
}

fn criterion_2() -> Verdict {
    let table: [(f64, &[&str]); 3] = [(0.01, &[]), (0.1, &["g0_quarter", "g0_half", "g0_chi1"]), (0.25, &["g0_fifth", "g0_quarter", "g0_half", "g0_chi1"])];
    let mut ok = true;
    for (g0, want) in table {
        let rep = validate_budget(&ParameterBudget::new(G, g0, H, 0.6, 0.6, -0.6));
        let got: BTreeSet<&str> = rep.failed().into_iter().collect();
        ok &= got == want.iter().copied().collect::<BTreeSet<_>>() && rep.pass() == want.is_empty();
    }
    (ok, "γ0 ∈ {0.01, 0.1, 0.25} tables".into())
}

fn criterion_3() -> Verdict {
    let cat = load_system("cat_map").unwrap();
    let w = generate_orbit(&cat, &rvec(&[0.1234, 0.5678]), 200, 200, 0, &HistoryPolicy::Branches(vec![0])).unwrap();
    let sp = finite_lyapunov(&cat, &w).unwrap();
    let l = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let cat_err = (sp.exponents[0] - l).abs().max((sp.exponents[1] + l).abs());
    let s = load_system("classical_henon a=1.4 b=0.3").unwrap();
    let n = 200_000;
    let w = generate_orbit(&s, &rvec(&[0.1, 0.1]), n, 0, 1000, &HistoryPolicy::Transient).unwrap();
    let chi1 = finite_lyapunov(&s, &w).unwrap().exponents[0];
    // Oracle: Gram–Schmidt QR of a 2-frame along the same orbit.
    let (mut e1, mut e2) = ([1.0f64, 0.0], [0.0f64, 1.0]);
    let mut sum = [0.0f64; 2];
    for i in 0..n as i64 {
        let x = w.get(i).unwrap()[0].re;
        let d = |v: [f64; 2]| [-2.8 * x * v[0] + v[1], 0.3 * v[0]];
        let (a, b) = (d(e1), d(e2));
        let na = (a[0] * a[0] + a[1] * a[1]).sqrt();
        let q = [a[0] / na, a[1] / na];
        let p = b[0] * q[0] + b[1] * q[1];
        let r = [b[0] - p * q[0], b[1] - p * q[1]];
        let nr = (r[0] * r[0] + r[1] * r[1]).sqrt();
        sum[0] += na.ln();
        sum[1] += nr.ln();
        e1 = q;
        e2 = [r[0] / nr, r[1] / nr];
    }
    let oracle = sum[0] / n as f64;
    let ok = cat_err <= 1e-10 && (chi1 - 0.419).abs() <= 0.02 && (chi1 - oracle).abs() <= 0.02;
    (ok, format!("cat error {cat_err:.1e}; Hénon χ1 {chi1:.4} vs QR oracle {oracle:.4}"))
}

struct ClosingRuns {
    runs: Vec<pesin::closing::ClosingRun>,
    rejected: usize,
    gamma: f64,
    hr: Vec<f64>,
}

fn closing_runs() -> ClosingRuns {
    let s = load_system("complex_henon c=-1+0i b=0.3+0i").unwrap();
    let x = (1.3 + 5.69f64.sqrt()) / 2.0;
    let p = rvec(&[x, x]);
    let (a, b) = (c(-0.65, 0.5172), c(-0.65, -0.5172));
    let two = find_cycle(&s, &[CVec::from_vec(vec![a, b]), CVec::from_vec(vec![b, a])]).unwrap();
    let base = block_cycle(&s, &[(vec![p.clone()], 5), (two, 1)]).unwrap();
    let cycle = block_cycle(&s, &[(base, 6), (vec![p], 2)]).unwrap();
    let w = from_cycle(&s, &cycle, 200, 200, 0).unwrap();
    let cw = ChartedWindow::build(&s, &w, G, PesinConstants::default()).unwrap();
    let sp = &cw.spectrum;
    let cfg = ClosingConfig::new(ParameterBudget::new(G, 0.005, H, sp.chi_top(), sp.chi_u(), sp.chi_s()));
    let returns = find_near_returns(&s, &w, 1e-3, 12, 30, 0.5, |i| i < cycle.len() as i64 && cw.good(i, 1e-3));
    let mut runs = Vec::new();
    let mut hr = Vec::new();
    let mut rejected = 0;
    for r in &returns {
        match close_orbit(&cw, r.i, r.m, &cfg) {
            Ok(run) => {
                hr.push(H * cw.r(r.i).min(cw.r(r.i + r.m as i64)));
                runs.push(run);
            }
            Err(_) => rejected += 1,
        }
    }
    ClosingRuns { runs, rejected, gamma: G, hr }
}

fn criterion_4(c: &ClosingRuns) -> Verdict {
    let mut good = 0;
    for run in &c.runs {
        let cert = &run.certificate;
        let eig_ok = cert.eigen.as_ref().is_some_and(|e| e.eigenvalues.iter().all(|l| (l.norm().ln()).abs() >= c.gamma));
        let shadow_ok = cert.shadow.iter().all(|(d, bound)| d <= bound);
        if cert.certified() && cert.residual <= 1e-9 && cert.polish_distance <= 1e-8 && shadow_ok && eig_ok {
            good += 1;
        }
    }
    let ok = good >= 10 && good == c.runs.len();
    (ok, format!("{good} of {} accepted near-returns certified ({} rejected by recentering preconditions)", c.runs.len(), c.rejected))
}

fn criterion_5(c: &ClosingRuns) -> Verdict {
    let mut worst: f64 = f64::NEG_INFINITY;
    for (run, hr) in c.runs.iter().zip(&c.hr) {
        let l = &run.lattice;
        worst = worst.max(GraphLattice::cauchy_excess(&l.d_b, c.gamma, 1e-12 * hr));
        worst = worst.max(GraphLattice::cauchy_excess(&l.d_a, c.gamma, 1e-12 * hr));
    }
    (worst <= 0.0 && !c.runs.is_empty(), format!("{} near-returns, largest excess over e^(−γ) {worst:.1e}", c.runs.len()))
}

fn criterion_6(c: &ClosingRuns) -> Verdict {
    let rel = c.runs.iter().map(|r| r.report.relation).fold(0.0, f64::max);
    let ex = c.runs.iter().map(|r| r.report.contraction_excess.max(r.report.expansion_excess)).fold(f64::NEG_INFINITY, f64::max);
    let cells: usize = c.runs.iter().map(|r| r.report.quadruples).sum();
    (rel <= 1e-8 && ex <= 0.0 && !c.runs.is_empty(), format!("relation {rel:.1e}, inequality excess {ex:.1e}, {cells} quadruples"))
}

fn criterion_7() -> Verdict {
    let ms: Vec<usize> = (1..=6).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let thetas: Vec<f64> = (0..2000).map(|_| rng.random_range(0.0..1.0)).collect();
    let pts: Vec<CVec> = thetas.iter().map(|&t| rvec(&[t])).collect();
    let dist = |a: &[f64], b: &[f64]| circle(a[0], b[0]);
    let dbl = entropy_estimate(&load_system("doubling").unwrap(), &pts, &[0.1, 0.2], &ms).unwrap().h;
    let dbl_o = oracle_entropy(&circle_orbits(&thetas, 6, |x| (2.0 * x).rem_euclid(1.0)), &[0.1, 0.2], &ms, &dist);
    let alpha = (5f64.sqrt() - 1.0) / 2.0;
    let rot = entropy_estimate(&load_system(&format!("rotation alpha={alpha}")).unwrap(), &pts, &[0.1, 0.2], &ms).unwrap().h;
    let rot_o = oracle_entropy(&circle_orbits(&thetas, 6, |x| (x + alpha).rem_euclid(1.0)), &[0.1, 0.2], &ms, &dist);
    let hs_pts = horseshoe_samples(11);
    let hs = entropy_estimate(&horseshoe(), &hs_pts, &[0.5, 1.0], &ms).unwrap().h;
    let hs_o = oracle_entropy(&horseshoe_orbits(&hs_pts, 6), &[0.5, 1.0], &ms, &euclid);
    let ln2 = 2f64.ln();
    let ok = (dbl - ln2).abs() <= 0.05
        && rot <= 0.02
        && (hs - ln2).abs() <= 0.1
        && (dbl - dbl_o).abs() < 1e-9
        && (rot - rot_o).abs() < 1e-9
        && (hs - hs_o).abs() < 1e-9;
    (ok, format!("doubling {dbl:.4} (oracle {dbl_o:.4}), rotation {rot:.4} (oracle {rot_o:.4}), horseshoe {hs:.4} (oracle {hs_o:.4})"))
}

fn criterion_8() -> Verdict {
    let t = tree();
    let n = t.n();
    let n_sym = t.symbols();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let words = random_words(&mut rng, n_sym, 2 * DEPTH + 2, 500);
    let semi = check_semiconjugacy(t, &words).unwrap();
    let ent = coded_entropy(t, 2000, &[1, 2, 3, 4], &[EPS], 7).unwrap();
    let target = (n_sym as f64).ln() / n as f64;
    let ok = n_sym == 2
        && (10..=20).contains(&n)
        && t.params.depth == DEPTH
        && t.vertical_disjoint()
        && t.vertical_gaps[1] > 0.0
        && t.decay_ok()
        && semi.max_residual <= 1e-6
        && ent.h >= target - 0.1;
    (
        ok,
        format!(
            "N={n_sym}, n={n}, depth {DEPTH}; tracking {:.1e} ≤ ε/4, member separation {:.2}; depth-1 gap {:.1e}; decay {}; semiconjugacy {:.1e}; coded entropy {:.4} vs log N/n {target:.4}",
            t.tracking,
            t.member_separation,
            t.vertical_gaps[1],
            t.decay_ok(),
            semi.max_residual,
            ent.h
        ),
    )
}

fn criterion_9() -> Verdict {
    let setup = shared();
    let t = tree();
    let fns = [TestFunction::ReX, TestFunction::ImX, TestFunction::ReY];
    let m = pushforward_stats(t, &fns, 10_000, &setup.cycle, 5).unwrap();
    let inv_ok = m.stats.iter().all(|st| st.invariance_defect <= 2.0 * st.standard_error);
    let defects: Vec<String> = m.stats.iter().map(|st| format!("{} {:.1e}/{:.1e}", st.function.name(), st.invariance_defect, st.standard_error)).collect();
    // N = 1: the fixed point q of the horseshoe.
    let s = horseshoe();
    let q = itinerary_cycle(&s, &[1]).unwrap();
    let cw = charted(&s, &q);
    let budget = budget_for(&cw);
    let fam = harvest_returns(&s, &cw.window, &[0], &HarvestParams { eta: 1e-9, n_min: 3, n_max: 3, depth: 0, weight: 0.5, max_members: 1 }).unwrap();
    let t1 = build_coding_tree(&cw, &fam, &CodingParams::new(budget, 4, EPS)).unwrap();
    let m1 = pushforward_stats(&t1, &fns, 100, &q, 1).unwrap();
    let gap = m1.stats.iter().map(|st| (st.integral - st.orbit_average).abs()).fold(0.0, f64::max);
    (inv_ok && gap <= 1e-9, format!("defect/SE {}; N=1 pushforward vs orbit average {gap:.1e}", defects.join(", ")))
}

fn criterion_10() -> Verdict {
    let close = RunConfig::parse(
        "system = complex_henon c=-1+0i b=0.3+0i\norbit.source = cycle\norbit.cycle = 1.842686,1.842686\nbudget.gamma0 = 0.005\nnear.max_m = 1\nnear.limit = 1\n",
    )
    .unwrap();
    let code = RunConfig::parse(
        "system = complex_henon c=-4+0i b=0.1+0i\norbit.source = itinerary\norbit.blocks = 1111111111111111,1111111111101111\nwindow.L = 300\nwindow.M = 300\nbudget.gamma0 = 0.009\nbudget.h = 3e-3\npesin.c = 1\ncoding.mc_words = 2000\n",
    )
    .unwrap();
    let mut ok = true;
    let mut lines = 0;
    for (cmd, cfg) in [(Command::Close, &close), (Command::Code, &code), (Command::Lyap, &close)] {
        let a = run(cmd, cfg, 1, false);
        let b = run(cmd, cfg, 1, false);
        let text = write_records(&a.records);
        ok &= text == write_records(&b.records) && a.exit == b.exit;
        ok &= pesin::harness::parse_records(&text).map(|r| write_records(&r) == text).unwrap_or(false);
        lines += a.records.len();
    }
    (ok, format!("close, code and lyap twice with seed 1: {lines} records, byte-identical and round-tripping"))
}

#[test]
fn acceptance() {
    let mut all = true;
    all &= report(1, "graph-transform contracts", Some(Duration::from_secs(60)), criterion_1);
    all &= report(2, "budget validator", None, criterion_2);
    all &= report(3, "Lyapunov exponents", Some(Duration::from_secs(60)), criterion_3);
    let t = Instant::now();
    let runs = closing_runs();
    let closing_time = t.elapsed();
    all &= report(4, "closing lemma", Some(Duration::from_secs(300).saturating_sub(closing_time)), || {
        let (ok, detail) = criterion_4(&runs);
        (ok, format!("{detail}; pipeline {closing_time:.1?}"))
    });
    all &= report(5, "Cauchy decay", None, || criterion_5(&runs));
    all &= report(6, "lattice relations", None, || criterion_6(&runs));
    all &= report(7, "entropy estimator", Some(Duration::from_secs(300)), criterion_7);
    all &= report(8, "horseshoe coding", Some(Duration::from_secs(600)), criterion_8);
    all &= report(9, "measure checks", None, criterion_9);
    all &= report(10, "determinism", None, criterion_10);
    assert!(all, "some acceptance criteria failed");
}

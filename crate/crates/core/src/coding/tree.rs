//! Vertical and horizontal graph families indexed by words, and the coding map S_0.
//!
//! Words are stored as integers in base N with the first symbol least significant,
//! so prepending a symbol s to a word u gives s + N·u. Vertical families follow
//! the future (A_{w_0 w_1 … w_{l−1}}: pull back along member w_0 the family of
//! w_1 … w_{l−1}); horizontal families follow the past (B_{w_{−1} … w_{−l}}: push
//! along member w_{−1} the family of w_{−2} … w_{−l}). Then f^n(A_u ∩ B_v) lies in
//! A_{σu} ∩ B_{u_0 v}, which is f^n∘S_0 = S_0∘σ for the left shift.

use crate::closing::Ladder;
use crate::cocycle::ChartedWindow;
use crate::coding::ReturnFamily;
use crate::error::{Error, Result};
use crate::graph::{intersect_graphs, Bounds, LipGraph, Orientation};
use crate::linalg::{c, CVec};
use crate::transform::{cutoff, pull_back, push_forward, recenter, validate_budget, ParameterBudget, RecenterSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingParams {
    pub budget: ParameterBudget,
    /// Word truncation depth Lw.
    pub depth: usize,
    /// Constant graphs per seed family.
    pub seeds: usize,
    /// The separation ε of the members; family balls must stay within ε/4 of the member orbits.
    pub eps: f64,
    /// Run even when the budget validator fails.
    pub override_budget: bool,
}

impl CodingParams {
    pub fn new(budget: ParameterBudget, depth: usize, eps: f64) -> CodingParams {
        CodingParams { budget, depth, seeds: 5, eps, override_budget: false }
    }
}

/// One member's orbit segment x_j … x_{j+n} with its local maps.
pub type Leg<'a> = Ladder<'a>;

/// The graphs of one word, in the chart they were built in and in the chart at ŷ.
#[derive(Debug, Clone)]
pub struct Family {
    /// Window index of the chart holding `graphs`.
    pub chart: i64,
    pub graphs: Vec<LipGraph>,
    pub home: Vec<LipGraph>,
    /// Largest distance between two graphs of the family.
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct CodingTree<'a> {
    pub cw: &'a ChartedWindow,
    pub family: ReturnFamily,
    pub params: CodingParams,
    pub legs: Vec<Leg<'a>>,
    /// h·r at ŷ and at both ends of every leg.
    pub hr: f64,
    /// vertical[l]: the N^l families A_u with |u| = l; vertical[0] is the seed family.
    pub vertical: Vec<Vec<Family>>,
    pub horizontal: Vec<Vec<Family>>,
    /// Largest ambient distance from a family point to the member orbit it follows.
    pub tracking: f64,
    /// Smallest Bowen distance between two members over n steps.
    pub member_separation: f64,
    /// Per depth, the smallest gap between graphs of distinct families (home charts).
    pub vertical_gaps: Vec<f64>,
    pub horizontal_gaps: Vec<f64>,
    /// Per depth, the largest distance from a graph to its parent family beyond the parent's diameter.
    pub nesting_excess: Vec<f64>,
    pub override_recorded: bool,
    /// Real system, orbit and frames: graphs are kept conjugation-symmetric.
    pub real: bool,
}

/// min over the common disk of |φ1 − φ2|, sampled at the standard abscissae.
pub fn graph_gap(g1: &LipGraph, g2: &LipGraph) -> Result<f64> {
    if g1.orientation != g2.orientation {
        return Err(Error::OrientationMismatch);
    }
    let r = g1.radius.min(g2.radius);
    Ok(crate::graph::standard_abscissae(r)
        .into_iter()
        .map(|t| (g1.value_unchecked(t) - g2.value_unchecked(t)).norm())
        .fold(f64::INFINITY, f64::min))
}

fn diameter(graphs: &[LipGraph]) -> Result<f64> {
    let mut d: f64 = 0.0;
    for a in 0..graphs.len() {
        for b in a + 1..graphs.len() {
            d = d.max(crate::graph::graph_distance(&graphs[a], &graphs[b])?);
        }
    }
    Ok(d)
}

/// Declared Lipschitz bound lowered to twice the measured one.
fn tighten(g: &LipGraph) -> Result<LipGraph> {
    let lip = (2.0 * g.measured_lip() + 1e-12).min(g.lip_bound);
    g.with_bounds(Bounds { lip, offset: g.offset_bound })
}

impl<'a> CodingTree<'a> {
    pub fn n(&self) -> usize {
        self.family.n
    }

    pub fn symbols(&self) -> usize {
        self.family.members.len()
    }

    fn start(&self, s: usize) -> i64 {
        self.family.members[s]
    }

    fn end(&self, s: usize) -> i64 {
        self.family.members[s] + self.family.n as i64
    }

    fn spec(&self, radius: f64) -> RecenterSpec {
        let g = self.params.budget.gamma;
        RecenterSpec { radius, lip: self.params.budget.gamma0, offset: g.exp() * self.hr, max_translation: 0.5 * (2.0 - g.exp()) * self.hr }
    }

    fn symmetric(&self, g: LipGraph) -> LipGraph {
        if self.real {
            g.real_part()
        } else {
            g
        }
    }

    fn move_graph(&self, g: &LipGraph, from: i64, to: i64, radius: f64) -> Result<LipGraph> {
        let cw = self.cw;
        let g = tighten(g)?;
        let out = recenter(&g, (cw.frame(from), &cw.chart(from)), (cw.frame(to), &cw.chart(to)), &self.spec(radius))?.0;
        Ok(self.symmetric(out))
    }

    /// Pull back along member s a vertical graph held in chart `from`.
    fn vertical_step(&self, s: usize, g: &LipGraph, from: i64) -> Result<LipGraph> {
        let gamma = self.params.budget.gamma;
        let gamma0 = self.params.budget.gamma0;
        let leg = &self.legs[s];
        let mut a = self.move_graph(g, from, self.end(s), gamma.exp() * self.hr)?;
        for k in (0..self.n()).rev() {
            let pulled = pull_back(&a, &leg.maps[k], gamma, gamma0, a.offset_bound).map_err(|e| e.context(format!("pull-back step {k}")))?;
            a = self.symmetric(cutoff(&pulled, pulled.radius.min(2.0 * leg.hr[k]))?);
        }
        Ok(a)
    }

    /// Push along member s a horizontal graph held in chart `from`.
    fn horizontal_step(&self, s: usize, g: &LipGraph, from: i64) -> Result<LipGraph> {
        let gamma0 = self.params.budget.gamma0;
        let leg = &self.legs[s];
        let mut b = self.move_graph(g, from, self.start(s), self.hr)?;
        for k in 0..self.n() {
            let (img, _) = push_forward(&b, &leg.maps[k], gamma0).map_err(|e| e.context(format!("push-forward step {k}")))?;
            b = self.symmetric(cutoff(&img, img.radius.min(2.0 * leg.hr[k + 1]))?);
        }
        Ok(b)
    }

    fn finish(&self, chart: i64, graphs: Vec<LipGraph>) -> Result<Family> {
        let radius = self.params.budget.gamma.exp() * self.hr;
        let home = if chart == self.family.center {
            graphs.iter().map(|g| cutoff(g, radius)).collect::<Result<Vec<_>>>()?
        } else {
            graphs.iter().map(|g| self.move_graph(g, chart, self.family.center, radius)).collect::<Result<Vec<_>>>()?
        };
        let diameter = diameter(&graphs)?;
        Ok(Family { chart, graphs, home, diameter })
    }

    fn seed(&self, orientation: Orientation) -> Result<Family> {
        let k = self.params.seeds.max(1);
        let top = (-self.params.budget.gamma / 2.0).exp() * self.hr;
        let graphs = (0..k)
            .map(|j| {
                let v = if k == 1 { 0.0 } else { top * (2.0 * j as f64 / (k - 1) as f64 - 1.0) };
                LipGraph::constant(orientation, 2.0 * self.hr, c(v, 0.0))
                    .with_bounds(Bounds { lip: self.params.budget.gamma0, offset: top })
            })
            .collect::<Result<Vec<_>>>()?;
        self.finish(self.family.center, graphs)
    }

    /// Builds every family of the next depth from the current deepest one.
    fn grow(&self, parents: &[Family], vertical: bool) -> Result<Vec<Family>> {
        let n_sym = self.symbols();
        let count = parents.len() * n_sym;
        let threads = std::thread::available_parallelism().map_or(1, |p| p.get()).min(count).max(1);
        let work = |idx: usize| -> Result<Family> {
            let s = idx % n_sym;
            let parent = &parents[idx / n_sym];
            let graphs = parent
                .graphs
                .iter()
                .map(|g| if vertical { self.vertical_step(s, g, parent.chart) } else { self.horizontal_step(s, g, parent.chart) })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.context(format!("{} family, word {idx} (base {n_sym})", if vertical { "vertical" } else { "horizontal" })))?;
            let chart = if vertical { self.start(s) } else { self.end(s) };
            self.finish(chart, graphs)
        };
        let mut out: Vec<Option<Result<Family>>> = (0..count).map(|_| None).collect();
        std::thread::scope(|scope| {
            let chunk = count.div_ceil(threads);
            for (t, slots) in out.chunks_mut(chunk).enumerate() {
                let work = &work;
                scope.spawn(move || {
                    for (k, slot) in slots.iter_mut().enumerate() {
                        *slot = Some(work(t * chunk + k));
                    }
                });
            }
        });
        out.into_iter().map(|r| r.expect("every slot is filled")).collect()
    }

    /// S_0 of a word window w_{−Lw} … w_{Lw} (w[Lw] is w_0), in ambient coordinates.
    pub fn coding_point(&self, word: &[u8]) -> Result<CVec> {
        let lw = self.params.depth;
        if word.len() != 2 * lw + 1 {
            return Err(Error::Config(format!("word window needs {} symbols, got {}", 2 * lw + 1, word.len())));
        }
        let v = self.vertical_family(&word[lw..])?;
        let past: Vec<u8> = word[..lw].iter().rev().copied().collect();
        let h = self.horizontal_family(&past)?;
        let mid = self.params.seeds.max(1) / 2;
        let w = intersect_graphs(&h.home[mid], &v.home[mid])?;
        Ok(self.cw.from_chart(self.family.center, &w))
    }

    fn index(&self, word: &[u8]) -> Result<usize> {
        let n = self.symbols();
        let mut idx = 0usize;
        for &s in word.iter().rev() {
            if s as usize >= n {
                return Err(Error::Config(format!("symbol {s} outside alphabet of size {n}")));
            }
            idx = idx * n + s as usize;
        }
        Ok(idx)
    }

    /// A_{u_0 … u_{l−1}}.
    pub fn vertical_family(&self, word: &[u8]) -> Result<&Family> {
        let level = self.vertical.get(word.len()).ok_or_else(|| Error::Config(format!("vertical depth {} not built", word.len())))?;
        Ok(&level[self.index(word)?])
    }

    /// B_{v_1 … v_l}, most recent symbol first.
    pub fn horizontal_family(&self, word: &[u8]) -> Result<&Family> {
        let level = self.horizontal.get(word.len()).ok_or_else(|| Error::Config(format!("horizontal depth {} not built", word.len())))?;
        Ok(&level[self.index(word)?])
    }

    /// 2h·e^{−2γnl+2γl}.
    pub fn diameter_bound(&self, l: usize) -> f64 {
        let g = self.params.budget.gamma;
        2.0 * self.params.budget.h * (-2.0 * g * (self.n() * l) as f64 + 2.0 * g * l as f64).exp()
    }

    /// 2h·e^{−2γnLw+2γLw}/(1−γ0²), carried to ambient coordinates by ‖C_γ(ŷ)‖.
    pub fn truncation_bound(&self) -> f64 {
        let g0 = self.params.budget.gamma0;
        self.cw.frame(self.family.center).norm() * self.diameter_bound(self.params.depth) / (1.0 - g0 * g0)
    }

    /// Largest family diameter at each depth, vertical and horizontal.
    pub fn diameters(&self) -> (Vec<f64>, Vec<f64>) {
        let top = |fams: &Vec<Vec<Family>>| fams.iter().map(|lv| lv.iter().map(|f| f.diameter).fold(0.0, f64::max)).collect();
        (top(&self.vertical), top(&self.horizontal))
    }

    /// Diameter decay holds at every built depth.
    pub fn decay_ok(&self) -> bool {
        let (v, h) = self.diameters();
        let ok = |d: &Vec<f64>| d.iter().enumerate().all(|(l, &x)| x <= self.diameter_bound(l));
        ok(&v) && ok(&h)
    }

    /// The Lemma 3.3 argument: family points stay within ε/4 of the followed member
    /// orbit and members are (n, ε)-separated, so distinct vertical families are disjoint.
    pub fn vertical_disjoint(&self) -> bool {
        self.tracking <= self.params.eps / 4.0 && (self.symbols() < 2 || self.member_separation >= self.params.eps)
    }
}

fn gaps(level: &[Family]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for a in 0..level.len() {
        for b in a + 1..level.len() {
            for g1 in &level[a].home {
                for g2 in &level[b].home {
                    best = best.min(graph_gap(g1, g2)?);
                }
            }
        }
    }
    Ok(best)
}

/// Builds both halves of the tree: vertical families to depth Lw+1, horizontal to Lw.
pub fn build_coding_tree<'a>(cw: &'a ChartedWindow, family: &ReturnFamily, params: &CodingParams) -> Result<CodingTree<'a>> {
    let report = validate_budget(&params.budget);
    if !report.pass() && !params.override_budget {
        return Err(Error::Budget(report.failed().join(",")));
    }
    if family.members.is_empty() || family.n == 0 {
        return Err(Error::NoRecurrence);
    }
    if family.members.len() > u8::MAX as usize {
        return Err(Error::Config("at most 255 members".into()));
    }
    let n = family.n;
    let y = family.center;
    let mut cap = cw.r(y);
    for &j in &family.members {
        let leg = Ladder::with_end_cap(cw, j, n, &params.budget, cap).map_err(|e| e.context(format!("member at {j}")))?;
        cap = cap.min(leg.hr[0] / params.budget.h);
    }
    let legs = family
        .members
        .iter()
        .map(|&j| Ladder::with_end_cap(cw, j, n, &params.budget, cap).map_err(|e| e.context(format!("member at {j}"))))
        .collect::<Result<Vec<_>>>()?;
    let hr = params.budget.h * cap;

    let g0 = params.budget.gamma0;
    let mut tracking: f64 = 0.0;
    for leg in &legs {
        for (k, &r) in leg.hr.iter().enumerate() {
            let ball = 2.0 * r * (1.0 + g0) + hr;
            tracking = tracking.max(cw.frame(leg.i + k as i64).norm() * ball);
        }
    }
    let mut member_separation = f64::INFINITY;
    let model = cw.system.model();
    for a in 0..family.members.len() {
        for b in a + 1..family.members.len() {
            let d = (0..n as i64)
                .map(|p| model.delta(&cw.point(family.members[a] + p), &cw.point(family.members[b] + p)).norm())
                .fold(0.0, f64::max);
            member_separation = member_separation.min(d);
        }
    }

    let mut tree = CodingTree {
        cw,
        family: family.clone(),
        params: *params,
        legs,
        hr,
        vertical: Vec::new(),
        horizontal: Vec::new(),
        tracking,
        member_separation,
        vertical_gaps: Vec::new(),
        horizontal_gaps: Vec::new(),
        nesting_excess: Vec::new(),
        override_recorded: !report.pass(),
        real: is_real(cw),
    };
    let seed_v = tree.seed(Orientation::Vertical)?;
    let seed_h = tree.seed(Orientation::Horizontal)?;
    tree.vertical.push(vec![seed_v]);
    tree.horizontal.push(vec![seed_h]);
    for l in 0..=params.depth {
        let next = tree.grow(&tree.vertical[l], true)?;
        tree.vertical.push(next);
        if l < params.depth {
            let next = tree.grow(&tree.horizontal[l], false)?;
            tree.horizontal.push(next);
        }
    }
    let nsym = tree.symbols();
    for l in 0..tree.vertical.len() {
        tree.vertical_gaps.push(if l == 0 { f64::INFINITY } else { gaps(&tree.vertical[l])? });
        let excess = if l == 0 {
            0.0
        } else {
            let mut worst: f64 = 0.0;
            for (idx, fam) in tree.vertical[l].iter().enumerate() {
                // Parent of u_0 … u_{l−1} is u_0 … u_{l−2}: drop the most significant digit.
                let parent = &tree.vertical[l - 1][idx % nsym.pow((l - 1) as u32)];
                for g in &fam.home {
                    let mut d = f64::INFINITY;
                    for p in &parent.home {
                        d = d.min(crate::graph::graph_distance(g, p)?);
                    }
                    worst = worst.max(d - parent_span(parent)?);
                }
            }
            worst
        };
        tree.nesting_excess.push(excess);
    }
    for l in 0..tree.horizontal.len() {
        tree.horizontal_gaps.push(if l == 0 { f64::INFINITY } else { gaps(&tree.horizontal[l])? });
    }
    Ok(tree)
}

fn is_real(cw: &ChartedWindow) -> bool {
    let zero_im = |m: &crate::linalg::CMat| m.iter().all(|z| z.im == 0.0);
    cw.system.is_real()
        && cw.frames.iter().all(|f| zero_im(&f.c_gamma) && zero_im(&f.c_gamma_inv))
        && (cw.window.first_index()..=cw.window.last_index()).all(|i| cw.window.at(i).iter().all(|z| z.im == 0.0))
}

fn parent_span(f: &Family) -> Result<f64> {
    diameter(&f.home)
}

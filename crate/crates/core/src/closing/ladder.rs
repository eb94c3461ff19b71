//! The two graph families of a near-return: pushed-forward horizontal graphs and
//! pulled-back vertical graphs, both read in the chart at the start index.

use std::sync::Arc;

use crate::cocycle::{ChartedWindow, LocalMap};
use crate::error::{Error, Result};
use crate::graph::{Bounds, LipGraph, Orientation};
use crate::linalg::ZERO;
use crate::transform::{cutoff, pull_back, push_forward, recenter, ParameterBudget, RecenterReport, RecenterSpec};

/// Local maps, radii and recentering targets along x_i … x_{i+m}.
#[derive(Debug, Clone)]
pub struct Ladder<'a> {
    pub cw: &'a ChartedWindow,
    pub i: i64,
    pub m: usize,
    pub gamma: f64,
    pub gamma0: f64,
    pub h: f64,
    pub maps: Vec<LocalMap>,
    /// h·r′_{i+s} for s = 0 … m, with r′ from [`ladder_radii`].
    pub hr: Vec<f64>,
}

impl<'a> Ladder<'a> {
    pub fn new(cw: &'a ChartedWindow, i: i64, m: usize, budget: &ParameterBudget) -> Result<Ladder<'a>> {
        Ladder::with_end_cap(cw, i, m, budget, f64::INFINITY)
    }

    /// A ladder whose common end radius is at most `cap`.
    pub fn with_end_cap(cw: &'a ChartedWindow, i: i64, m: usize, budget: &ParameterBudget, cap: f64) -> Result<Ladder<'a>> {
        if m == 0 {
            return Err(Error::HypothesesViolated("return time 0".into()));
        }
        for s in [i, i + m as i64 + 1] {
            if !cw.window.contains(s) {
                return Err(Error::IndexOutOfWindow(s));
            }
        }
        let h = budget.h;
        let r = capped_radii(&(0..=m as i64).map(|s| cw.r(i + s)).collect::<Vec<_>>(), budget.gamma, cap);
        let mut maps = Vec::with_capacity(m);
        for s in 0..m {
            cw.local_map(i + s as i64, h)?;
            let dynamics = Arc::new(cw.dynamics(i + s as i64)?);
            maps.push(LocalMap::new(dynamics, r[s], 5.0 * h * r[s]).map_err(|e| e.context(format!("local map at index {}", i + s as i64)))?);
        }
        let hr = r.iter().map(|x| h * x).collect();
        Ok(Ladder { cw, i, m, gamma: budget.gamma, gamma0: budget.gamma0, h, maps, hr })
    }

    fn end(&self) -> i64 {
        self.i + self.m as i64
    }

    fn max_translation(&self) -> f64 {
        (self.gamma.exp() - 1.0) * self.hr[0].min(self.hr[self.m])
    }

    /// B_0: the flat graph over hr_i.
    pub fn b0(&self) -> LipGraph {
        let g = LipGraph::constant(Orientation::Horizontal, self.hr[0], ZERO);
        g.with_bounds(Bounds { lip: self.gamma0, offset: self.hr[0] }).expect("flat graph")
    }

    /// A_0 in the chart at i+m: the flat graph over e^γ·hr_{i+m}.
    pub fn a0_end(&self) -> LipGraph {
        let g = LipGraph::constant(Orientation::Vertical, self.gamma.exp() * self.hr[self.m], ZERO);
        g.with_bounds(Bounds { lip: self.gamma0, offset: (-self.gamma).exp() * self.hr[self.m] }).expect("flat graph")
    }

    /// m push-forwards of a graph in the chart at i; the result stays in the chart at i+m.
    pub fn push_all(&self, b: &LipGraph) -> Result<LipGraph> {
        let mut g = b.clone();
        for s in 0..self.m {
            let (img, _) = push_forward(&g, &self.maps[s], self.gamma0).map_err(|e| e.context(format!("push-forward step {s}")))?;
            let radius = if s + 1 < self.m { self.hr[s + 1] } else { self.gamma.exp() * self.hr[self.m] };
            g = cutoff(&img, radius)?;
        }
        Ok(g)
    }

    /// Reads a horizontal graph at i+m in the chart at i.
    pub fn recenter_home(&self, g: &LipGraph) -> Result<(LipGraph, RecenterReport)> {
        let (fs, cs) = (self.cw.frame(self.end()), self.cw.chart(self.end()));
        let (fd, cd) = (self.cw.frame(self.i), self.cw.chart(self.i));
        let spec = RecenterSpec { radius: self.hr[0], lip: self.gamma0, offset: self.hr[0], max_translation: self.max_translation() };
        recenter(g, (fs, &cs), (fd, &cd), &spec)
    }

    /// B_{j+1} from B_j.
    pub fn next_b(&self, b: &LipGraph) -> Result<LipGraph> {
        let pushed = self.push_all(b)?;
        Ok(self.recenter_home(&pushed).map_err(|e| e.context("recentering to the start chart"))?.0)
    }

    /// m pull-backs of a vertical graph in the chart at i+m, ending in the chart at i over e^{2γ}hr_i.
    pub fn pull_all(&self, a: &LipGraph) -> Result<LipGraph> {
        let mut g = a.clone();
        for s in (0..self.m).rev() {
            let pulled = pull_back(&g, &self.maps[s], self.gamma, self.gamma0, g.offset_bound)
                .map_err(|e| e.context(format!("pull-back step {s}")))?;
            let radius = if s > 0 { self.gamma.exp() * self.hr[s] } else { (2.0 * self.gamma).exp() * self.hr[0] };
            g = cutoff(&pulled, radius)?;
        }
        Ok(g)
    }

    /// Reads a vertical graph at i in the chart at i+m.
    pub fn recenter_forward(&self, a: &LipGraph) -> Result<(LipGraph, RecenterReport)> {
        let (fs, cs) = (self.cw.frame(self.i), self.cw.chart(self.i));
        let (fd, cd) = (self.cw.frame(self.end()), self.cw.chart(self.end()));
        let spec = RecenterSpec {
            radius: self.gamma.exp() * self.hr[self.m],
            lip: self.gamma0,
            offset: (-self.gamma).exp() * self.hr[self.m],
            max_translation: self.max_translation(),
        };
        recenter(a, (fs, &cs), (fd, &cd), &spec)
    }

    /// A_0^0, the pull-back of the flat graph at i+m.
    pub fn a0(&self) -> Result<LipGraph> {
        self.pull_all(&self.a0_end())
    }

    /// A_{l+1}^0 from A_l^0.
    pub fn next_a(&self, a: &LipGraph) -> Result<LipGraph> {
        let moved = self.recenter_forward(a).map_err(|e| e.context("recentering to the return chart"))?.0;
        self.pull_all(&moved)
    }
}

/// Radii along a ladder: below the chart radii, tempered, and equal at both ends.
pub fn ladder_radii(r: &[f64], gamma: f64) -> Vec<f64> {
    capped_radii(r, gamma, f64::INFINITY)
}

/// [`ladder_radii`] with the end value at most `cap`.
pub fn capped_radii(r: &[f64], gamma: f64, cap: f64) -> Vec<f64> {
    let n = r.len();
    let lower: Vec<f64> = (0..n)
        .map(|s| (0..n).map(|t| r[t] * (gamma * s.abs_diff(t) as f64).exp()).fold(f64::INFINITY, f64::min))
        .collect();
    let end = lower[0].min(lower[n - 1]).min(cap);
    (0..n).map(|s| lower[s].min(end * (gamma * s.min(n - 1 - s) as f64).exp())).collect()
}

/// B_0 … B_J.
pub fn build_forward_family(ladder: &Ladder, j: usize) -> Result<Vec<LipGraph>> {
    let mut out = vec![ladder.b0()];
    for gen in 0..j {
        let next = ladder.next_b(&out[gen]).map_err(|e| e.context(format!("forward generation {}", gen + 1)))?;
        out.push(next);
    }
    Ok(out)
}

/// A_0^0 … A_L^0.
pub fn build_backward_family(ladder: &Ladder, l: usize) -> Result<Vec<LipGraph>> {
    let mut out = vec![ladder.a0().map_err(|e| e.context("backward generation 0"))?];
    for gen in 0..l {
        let next = ladder.next_a(&out[gen]).map_err(|e| e.context(format!("backward generation {}", gen + 1)))?;
        out.push(next);
    }
    Ok(out)
}

//! Subcommand pipelines producing records.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closing::{close_orbit, find_near_returns, ClosingConfig};
use crate::cocycle::{finite_lyapunov, ChartedWindow, LyapunovSpectrum};
use crate::coding::*;
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::record::{fmt_f64, fmt_vec, Record};
use crate::linalg::{c, CVec};
use crate::orbit::{find_cycle, from_cycle, generate_orbit, itinerary_cycle, HistoryPolicy, OrbitWindow};
use crate::system::{load_system, System};
use crate::transform::{validate_budget, BudgetReport, ParameterBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Lyap,
    Chart,
    Close,
    Code,
    Entropy,
    Budget,
}

impl Command {
    pub const ALL: [Command; 6] = [Command::Lyap, Command::Chart, Command::Close, Command::Code, Command::Entropy, Command::Budget];

    pub fn name(self) -> &'static str {
        match self {
            Command::Lyap => "lyap",
            Command::Chart => "chart",
            Command::Close => "close",
            Command::Code => "code",
            Command::Entropy => "entropy",
            Command::Budget => "budget",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// 2 for budget failures, 1 for configuration mistakes, 3 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Budget(_) => EXIT_BUDGET,
        Error::Config(_) | Error::Parse(_) | Error::UnknownSystem(_) | Error::Unsupported(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub exit: i32,
}

/// Everything a pipeline needs besides the configuration values.
pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub seed: u64,
    pub override_budget: bool,
    hash: String,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a RunConfig, seed: u64, override_budget: bool) -> Run<'a> {
        Run { cfg, seed, override_budget, hash: cfg.hash() }
    }

    pub fn record(&self, kind: &str) -> Record {
        Record::new(kind, &self.hash, self.seed)
    }

    pub fn error_record(&self, command: &str, e: &Error) -> Record {
        self.record("error").text("command", command).int("exit", exit_code(e)).text("message", e.to_string())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn system(&self) -> Result<System> {
        load_system(self.cfg.get("system"))
    }

    /// The orbit window and, for cycle sources, the cycle itself.
    fn window(&self, s: &System) -> Result<(OrbitWindow, Option<Vec<CVec>>)> {
        let cfg = self.cfg;
        let back = cfg.usize("window.L")?;
        let fwd = cfg.usize("window.M")?;
        let offset = cfg.usize("orbit.offset")?;
        let cycle = match cfg.get("orbit.source") {
            "generate" => {
                let start = match cfg.point("orbit.start")? {
                    Some(p) => p,
                    None => {
                        let mut rng = self.rng(1);
                        CVec::from_iterator(s.dim(), (0..s.dim()).map(|_| c(rng.random_range(-0.5..0.5), 0.0)))
                    }
                };
                let policy = match cfg.get("orbit.history") {
                    "transient" => HistoryPolicy::Transient,
                    "inverse" => HistoryPolicy::Branches(cfg.list_u8("orbit.branch")?),
                    other => return Err(Error::Config(format!("unknown orbit.history {other:?}"))),
                };
                let w = generate_orbit(s, &start, fwd, back, cfg.usize("orbit.transient")?, &policy)?;
                return Ok((w, None));
            }
            "cycle" => find_cycle(s, &cfg.points("orbit.cycle")?)?,
            "itinerary" => {
                let blocks = cfg.blocks("orbit.blocks")?;
                if blocks.is_empty() {
                    return Err(Error::Config("orbit.blocks is empty".into()));
                }
                itinerary_cycle(s, &block_itinerary(&blocks, cfg.usize("orbit.count")?, self.seed))?
            }
            other => return Err(Error::Config(format!("unknown orbit.source {other:?}"))),
        };
        let w = from_cycle(s, &cycle, back, fwd + cycle.len(), offset)?;
        Ok((w, Some(cycle)))
    }

    fn charted(&self, s: &System, w: &OrbitWindow) -> Result<ChartedWindow> {
        ChartedWindow::build(s, w, self.cfg.f64("budget.gamma")?, self.cfg.pesin()?)
    }

    /// The budget, with exponents from the config or else from `spectrum`.
    fn budget(&self, spectrum: Option<&LyapunovSpectrum>) -> Result<ParameterBudget> {
        let cfg = self.cfg;
        let pick = |key: &str, f: fn(&LyapunovSpectrum) -> f64| -> Result<f64> {
            match (cfg.opt_f64(key)?, spectrum) {
                (Some(x), _) => Ok(x),
                (None, Some(sp)) => Ok(f(sp)),
                (None, None) => Err(Error::Config(format!("{key} not set and no spectrum computed"))),
            }
        };
        let mut b = ParameterBudget::new(
            cfg.f64("budget.gamma")?,
            cfg.f64("budget.gamma0")?,
            cfg.f64("budget.h")?,
            pick("budget.chi_top", LyapunovSpectrum::chi_top)?,
            pick("budget.chi_u", LyapunovSpectrum::chi_u)?,
            pick("budget.chi_s", LyapunovSpectrum::chi_s)?,
        );
        b.eta = cfg.f64("budget.eta")?;
        b.eps = cfg.f64("budget.eps")?;
        b.r0 = cfg.f64("budget.r0")?;
        b.delta_measure = cfg.f64("budget.delta_measure")?;
        Ok(b)
    }

    fn budget_record(&self, b: &ParameterBudget, report: &BudgetReport) -> Record {
        let mut r = self
            .record("budget")
            .flag("pass", report.pass())
            .text("failed", report.failed().join(","))
            .flag("override", self.override_budget && !report.pass())
            .num("gamma", b.gamma)
            .num("gamma0", b.gamma0)
            .num("h", b.h)
            .num("chi_top", b.chi_top)
            .num("chi_u", b.chi_u)
            .num("chi_s", b.chi_s);
        for ch in &report.checks {
            r = r.text(&format!("check.{}", ch.id), format!("{}{}{}", fmt_f64(ch.lhs), if ch.strict { "<" } else { "<=" }, fmt_f64(ch.rhs)));
        }
        r
    }

    /// Budget record plus an error when the budget fails without override.
    fn gate(&self, b: &ParameterBudget, out: &mut Vec<Record>) -> Result<()> {
        let report = validate_budget(b);
        out.push(self.budget_record(b, &report));
        if !report.pass() && !self.override_budget {
            return Err(Error::Budget(report.failed().join(",")));
        }
        Ok(())
    }

    pub fn lyap(&self, out: &mut Vec<Record>) -> Result<()> {
        let s = self.system()?;
        let (w, _) = self.window(&s)?;
        let sp = finite_lyapunov(&s, &w)?;
        out.push(self.spectrum_record(&s, &sp));
        Ok(())
    }

    fn spectrum_record(&self, s: &System, sp: &LyapunovSpectrum) -> Record {
        self.record("spectrum")
            .text("system", s.spec_text())
            .list("exponents", &sp.exponents)
            .int("m0", sp.m0)
            .num("gap", sp.gap)
            .int("steps", sp.steps)
            .int("singular_steps", sp.singular_steps)
    }

    pub fn chart(&self, out: &mut Vec<Record>) -> Result<()> {
        let s = self.system()?;
        let (w, _) = self.window(&s)?;
        let cw = self.charted(&s, &w)?;
        out.push(self.spectrum_record(&s, &cw.spectrum).int("warnings", cw.warnings.len()));
        let r0 = self.cfg.f64("budget.r0")?;
        let first = self.cfg.i64("chart.first")?.max(w.first_index());
        let last = self.cfg.i64("chart.last")?.min(w.last_index());
        for i in first..=last {
            let f = cw.frame(i);
            out.push(
                self.record("chart")
                    .int("index", i)
                    .num("r", cw.r(i))
                    .num("c_norm", f.norm())
                    .num("c_inv_norm", f.inv_norm())
                    .flag("good", cw.good(i, r0)),
            );
        }
        Ok(())
    }

    pub fn budget_only(&self, out: &mut Vec<Record>) -> Result<()> {
        let cfg = self.cfg;
        let have_all = ["budget.chi_top", "budget.chi_u", "budget.chi_s"].iter().all(|k| !cfg.get(k).is_empty());
        let sp = if have_all {
            None
        } else {
            let s = self.system()?;
            let (w, _) = self.window(&s)?;
            Some(finite_lyapunov(&s, &w)?)
        };
        let b = self.budget(sp.as_ref())?;
        self.gate(&b, out)
    }

    pub fn close(&self, out: &mut Vec<Record>) -> Result<()> {
        let cfg = self.cfg;
        let s = self.system()?;
        let (w, _) = self.window(&s)?;
        let cw = self.charted(&s, &w)?;
        let b = self.budget(Some(&cw.spectrum))?;
        self.gate(&b, out)?;
        let ccfg = ClosingConfig {
            budget: b,
            max_generations: cfg.usize("closing.max_generations")?,
            tol: cfg.f64("closing.tol")?,
            lattice: cfg.usize("closing.lattice")?,
            chart_constant: cfg.f64("closing.chart_constant")?,
            override_budget: self.override_budget,
        };
        let (first, last) = (cfg.i64("near.first")?, cfg.i64("near.last")?);
        let returns = find_near_returns(&s, &w, b.eta, cfg.usize("near.max_m")?, cfg.usize("near.depth")?, cfg.f64("near.weight")?, |i| {
            (first..=last).contains(&i) && cw.good(i, b.r0)
        });
        if returns.is_empty() {
            return Err(Error::NoRecurrence);
        }
        let mut certified = 0;
        for nr in returns.iter().take(cfg.usize("near.limit")?) {
            match close_orbit(&cw, nr.i, nr.m, &ccfg) {
                Ok(run) => {
                    let cert = run.certificate;
                    certified += cert.certified() as usize;
                    let shadow = cert.shadow.iter().map(|(d, bound)| d / bound).fold(0.0, f64::max);
                    let mut r = self
                        .record("certificate")
                        .int("i", cert.i)
                        .int("m", cert.m)
                        .num("near_distance", nr.distance)
                        .flag("certified", cert.certified())
                        .text("z", fmt_vec(&cert.z))
                        .num("residual", cert.residual)
                        .num("polish_distance", cert.polish_distance)
                        .int("generations", cert.generations)
                        .num("eps", cert.eps)
                        .num("shadow_ratio", shadow)
                        .num("stable_angle", cert.stable_angle)
                        .num("lattice_relation", run.report.relation)
                        .flag("override", self.override_budget && !validate_budget(&b).pass());
                    if let Some(e) = &cert.eigen {
                        let moduli: Vec<f64> = e.eigenvalues.iter().map(|l| l.norm()).collect();
                        r = r.list("eigen_moduli", &moduli).int("expanding", e.expanding).int("contracting", e.contracting);
                    }
                    out.push(r.text("failures", cert.failures.join(";")));
                }
                Err(e) => out.push(self.error_record("close", &e).int("i", nr.i).int("m", nr.m)),
            }
        }
        if certified == 0 {
            return Err(Error::NotCertified("no near-return closed".into()));
        }
        Ok(())
    }

    pub fn entropy(&self, out: &mut Vec<Record>) -> Result<()> {
        let cfg = self.cfg;
        let s = self.system()?;
        let n = cfg.usize("entropy.samples")?;
        let samples: Vec<CVec> = match cfg.get("entropy.source") {
            "orbit" => {
                let (w, _) = self.window(&s)?;
                if (w.last_index() + 1) < n as i64 {
                    return Err(Error::Config(format!("window.M gives {} samples, entropy.samples wants {n}", w.last_index() + 1)));
                }
                (0..n as i64).map(|i| w.get(i)).collect::<Result<_>>()?
            }
            "uniform" => {
                let bx = cfg.list_f64("entropy.box")?;
                if bx.len() != 2 || bx[0] >= bx[1] {
                    return Err(Error::Config("entropy.box needs low,high".into()));
                }
                let mut rng = self.rng(2);
                (0..n).map(|_| CVec::from_iterator(s.dim(), (0..s.dim()).map(|_| c(rng.random_range(bx[0]..bx[1]), 0.0)))).collect()
            }
            other => return Err(Error::Config(format!("unknown entropy.source {other:?}"))),
        };
        let est = entropy_estimate(&s, &samples, &cfg.list_f64("entropy.eps")?, &cfg.list_usize("entropy.m")?)?;
        out.push(self.entropy_record("samples", &est));
        Ok(())
    }

    fn entropy_record(&self, source: &str, est: &EntropyEstimate) -> Record {
        let mut r = self.record("entropy").text("source", source).num("h", est.h).text("m", join(&est.m));
        for (j, sl) in est.slopes.iter().enumerate() {
            r = r
                .num(&format!("eps.{j}"), sl.eps)
                .num(&format!("slope.{j}"), sl.slope)
                .num(&format!("residual.{j}"), sl.residual)
                .text(&format!("counts.{j}"), join(&sl.counts));
        }
        r.text("warnings", est.warnings.join(";"))
    }

    pub fn code(&self, out: &mut Vec<Record>) -> Result<()> {
        let cfg = self.cfg;
        let s = self.system()?;
        let (w, cycle) = self.window(&s)?;
        let cw = self.charted(&s, &w)?;
        let mut b = self.budget(Some(&cw.spectrum))?;
        b.eta = cfg.f64("harvest.eta")?;
        self.gate(&b, out)?;
        let span = cycle.as_ref().map_or(cfg.usize("window.M")?, Vec::len) as i64;
        let reference: Vec<CVec> = (0..span).map(|i| cw.point(i)).collect();
        let eps = cfg.f64("separated.eps")?;
        let sep = bowen_separated(&s, &reference, cfg.usize("separated.m")?, eps)?;
        let centers: Vec<i64> = sep.points.iter().map(|&j| j as i64).filter(|&i| cw.good(i, b.r0)).collect();
        let hp = HarvestParams {
            eta: b.eta,
            n_min: cfg.usize("harvest.n_min")?,
            n_max: cfg.usize("harvest.n_max")?,
            depth: cfg.usize("harvest.depth")?,
            weight: cfg.f64("harvest.weight")?,
            max_members: cfg.usize("harvest.max_members")?,
        };
        let family = harvest_returns(&s, &w, &centers, &hp)?;
        let depth = cfg.usize("coding.depth")?;
        let mut params = CodingParams::new(b, depth, eps);
        params.seeds = cfg.usize("coding.seeds")?;
        params.override_budget = self.override_budget;
        let tree = build_coding_tree(&cw, &family, &params)?;
        let words = random_words(&mut self.rng(3), tree.symbols(), 2 * depth + 2, cfg.usize("coding.words")?);
        let semi = check_semiconjugacy(&tree, &words)?;
        let cont = coding_continuity(&tree, cfg.usize("coding.continuity_p")?, cfg.usize("coding.continuity_pairs")?, cfg.f64("closing.chart_constant")?, self.seed.wrapping_add(4))?;
        let sepinv = separation_invariant(&tree, depth.min(3), false)?;
        let (dv, dh) = tree.diameters();
        let n_sym = tree.symbols();
        out.push(
            self.record("coding")
                .int("separated", sep.len())
                .int("center", family.center)
                .int("n", family.n)
                .int("symbols", n_sym)
                .text("members", join(&family.members))
                .int("depth", depth)
                .num("hr", tree.hr)
                .num("tracking", tree.tracking)
                .num("member_separation", tree.member_separation)
                .flag("disjoint", tree.vertical_disjoint())
                .flag("decay", tree.decay_ok())
                .list("vertical_diameters", &dv)
                .list("horizontal_diameters", &dh)
                .list("vertical_gaps", &tree.vertical_gaps)
                .list("horizontal_gaps", &tree.horizontal_gaps)
                .num("nesting_excess", tree.nesting_excess.iter().copied().fold(0.0, f64::max))
                .num("semiconjugacy", semi.max_residual)
                .num("truncation_bound", semi.truncation_bound)
                .num("roundoff", semi.roundoff)
                .flag("semiconjugacy_pass", semi.pass)
                .num("continuity_ratio", cont.max_ratio)
                .num("separation_alpha", sepinv.alpha)
                .flag("separation_pass", sepinv.pass)
                .flag("override", tree.override_recorded),
        );
        let fns = cfg
            .get("coding.functions")
            .split(',')
            .map(|t| TestFunction::parse(t.trim()).ok_or_else(|| Error::Config(format!("unknown test function {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let m = pushforward_stats(&tree, &fns, cfg.usize("coding.mc_words")?, &reference, self.seed.wrapping_add(5))?;
        for st in &m.stats {
            out.push(
                self.record("measure")
                    .text("function", st.function.name())
                    .int("words", m.words)
                    .num("integral", st.integral)
                    .num("orbit_average", st.orbit_average)
                    .num("defect", st.invariance_defect)
                    .num("standard_error", st.standard_error)
                    .flag("pass", st.invariance_defect <= 2.0 * st.standard_error),
            );
        }
        let est = coded_entropy(
            &tree,
            cfg.usize("coding.entropy_words")?,
            &cfg.list_usize("coding.entropy_blocks")?,
            &cfg.list_f64("coding.entropy_eps")?,
            self.seed.wrapping_add(6),
        )?;
        let target = (n_sym as f64).ln() / family.n as f64;
        out.push(self.entropy_record("coded", &est).num("target", target));
        if !(semi.pass && tree.decay_ok() && tree.vertical_disjoint()) {
            return Err(Error::NotCertified("coding checks failed".into()));
        }
        Ok(())
    }
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Runs one subcommand; errors become a trailing error record.
pub fn run(command: Command, cfg: &RunConfig, seed: u64, override_budget: bool) -> Outcome {
    let ctx = Run::new(cfg, seed, override_budget);
    let mut records = Vec::new();
    let result = match command {
        Command::Lyap => ctx.lyap(&mut records),
        Command::Chart => ctx.chart(&mut records),
        Command::Close => ctx.close(&mut records),
        Command::Code => ctx.code(&mut records),
        Command::Entropy => ctx.entropy(&mut records),
        Command::Budget => ctx.budget_only(&mut records),
    };
    match result {
        Ok(()) => Outcome { records, exit: EXIT_OK },
        Err(e) => {
            records.push(ctx.error_record(command.name(), &e));
            Outcome { records, exit: exit_code(&e) }
        }
    }
}

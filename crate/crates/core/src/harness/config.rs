//! Line-oriented `key=value` run configuration.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::cocycle::PesinConstants;
use crate::error::{Error, Result};
use crate::linalg::{C64, CVec};
use crate::system::parse_complex;

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("system", "complex_henon c=-1+0i b=0.3+0i", "system description passed to load_system"),
    ("seed", "0", "RNG seed (the --seed flag overrides it)"),
    ("orbit.source", "generate", "generate | cycle | itinerary"),
    ("orbit.start", "", "generate: start point as comma-separated complex coordinates (empty: seeded random)"),
    ("orbit.transient", "1000", "generate: iterations discarded before recording"),
    ("orbit.history", "transient", "generate: transient | inverse"),
    ("orbit.branch", "0", "generate: inverse branch sequence, comma-separated"),
    ("orbit.cycle", "", "cycle: guess points separated by ';', coordinates by ','"),
    ("orbit.blocks", "", "itinerary: symbol blocks separated by ',' (e.g. 1111,1101)"),
    ("orbit.count", "120", "itinerary: number of random blocks"),
    ("orbit.offset", "0", "cycle/itinerary: cycle position of index 0"),
    ("window.L", "200", "backward history length"),
    ("window.M", "200", "forward length (cycle/itinerary windows add the cycle length)"),
    ("budget.gamma", "0.1", "γ"),
    ("budget.gamma0", "0.01", "γ0"),
    ("budget.h", "1e-3", "h"),
    ("budget.eta", "1e-3", "near-return threshold η"),
    ("budget.eps", "1", "shadowing target ε"),
    ("budget.r0", "1e-3", "good-index threshold r0"),
    ("budget.delta_measure", "0.1", "δ_measure"),
    ("budget.chi_top", "", "χ1 (empty: from the orbit spectrum)"),
    ("budget.chi_u", "", "smallest positive exponent (empty: from the spectrum)"),
    ("budget.chi_s", "", "largest negative exponent (empty: from the spectrum)"),
    ("pesin.eps1", "0.1", "chart constant ε1"),
    ("pesin.p", "2", "chart constant p"),
    ("pesin.c", "10", "chart constant C"),
    ("chart.first", "0", "first index reported by `chart`"),
    ("chart.last", "9", "last index reported by `chart`"),
    ("near.first", "0", "first candidate index for near-returns"),
    ("near.last", "100", "last candidate index for near-returns"),
    ("near.max_m", "6", "largest return time"),
    ("near.depth", "30", "window-distance depth"),
    ("near.weight", "0.5", "window-distance weight"),
    ("near.limit", "10", "close at most this many near-returns"),
    ("closing.max_generations", "200", "graph-transform generations"),
    ("closing.tol", "1e-12", "stop once successive z differ by less"),
    ("closing.lattice", "6", "lattice cells computed for l, j up to this"),
    ("closing.chart_constant", "1", "chart mean-value constant C(X)"),
    ("entropy.source", "orbit", "orbit (window points from index 0) | uniform (seeded box samples)"),
    ("entropy.box", "0,1", "uniform: low,high of every real coordinate"),
    ("entropy.samples", "2000", "number of samples"),
    ("entropy.eps", "0.1,0.2", "ε list"),
    ("entropy.m", "1,2,3,4,5,6", "m list"),
    ("separated.m", "20", "coding: Bowen length of the separated set"),
    ("separated.eps", "0.5", "coding: Bowen ε of the separated set (also the disjointness ε)"),
    ("harvest.eta", "5e-5", "coding: recurrence radius"),
    ("harvest.n_min", "10", "coding: smallest return time"),
    ("harvest.n_max", "20", "coding: largest return time"),
    ("harvest.depth", "0", "coding: window-distance depth"),
    ("harvest.weight", "0.5", "coding: window-distance weight"),
    ("harvest.max_members", "2", "coding: keep at most this many members"),
    ("coding.depth", "6", "word truncation depth Lw"),
    ("coding.seeds", "5", "constant graphs in the seed families"),
    ("coding.words", "500", "random words for the semiconjugacy check"),
    ("coding.mc_words", "10000", "Monte-Carlo width W"),
    ("coding.functions", "re_x,im_x,re_y", "test functions"),
    ("coding.continuity_p", "5", "largest agreement depth in the continuity check"),
    ("coding.continuity_pairs", "50", "word pairs per agreement depth"),
    ("coding.entropy_words", "2000", "coded points for the entropy check"),
    ("coding.entropy_blocks", "1,2,3,4", "Bowen lengths in units of n"),
    ("coding.entropy_eps", "0.5", "ε list for the coded entropy"),
    ("out", "", "output path (empty: stdout; --out overrides)"),
];

/// A complete configuration: every key of [`KEYS`], defaults filled in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect() }
    }
}

impl RunConfig {
    /// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if seen.insert(k.to_string(), ()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key {k}", lineno + 1)));
            }
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(Error::Parse(format!("unknown key {key}"))),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("{key} is not a config key"))
    }

    /// All keys, sorted, one `key=value` per line.
    pub fn canonical(&self) -> String {
        self.values.iter().filter(|(k, _)| k.as_str() != "seed" && k.as_str() != "out").map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// sha256 of [`RunConfig::canonical`]; the seed and output path are not part of it.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    fn typed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key).parse().map_err(|_| Error::Config(format!("bad value for {key}: {:?}", self.get(key))))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.typed(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.typed(key)
    }

    pub fn i64(&self, key: &str) -> Result<i64> {
        self.typed(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.typed(key)
    }

    /// None for an empty value.
    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.get(key).is_empty() {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let v = self.get(key);
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',').map(|t| t.trim().parse().map_err(|_| Error::Config(format!("bad list entry {t:?} for {key}")))).collect()
    }

    pub fn list_f64(&self, key: &str) -> Result<Vec<f64>> {
        self.list(key)
    }

    pub fn list_usize(&self, key: &str) -> Result<Vec<usize>> {
        self.list(key)
    }

    pub fn list_u8(&self, key: &str) -> Result<Vec<u8>> {
        self.list(key)
    }

    pub fn point(&self, key: &str) -> Result<Option<CVec>> {
        let v = self.get(key);
        if v.is_empty() {
            return Ok(None);
        }
        parse_point(v).map(Some)
    }

    /// `orbit.cycle` points.
    pub fn points(&self, key: &str) -> Result<Vec<CVec>> {
        self.get(key).split(';').filter(|s| !s.trim().is_empty()).map(parse_point).collect()
    }

    /// `orbit.blocks` as symbol strings.
    pub fn blocks(&self, key: &str) -> Result<Vec<Vec<u8>>> {
        self.get(key)
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|b| {
                b.trim()
                    .chars()
                    .map(|ch| ch.to_digit(10).map(|d| d as u8).ok_or_else(|| Error::Config(format!("bad symbol {ch:?} in {key}"))))
                    .collect()
            })
            .collect()
    }

    pub fn pesin(&self) -> Result<PesinConstants> {
        Ok(PesinConstants { eps1: self.f64("pesin.eps1")?, p: self.f64("pesin.p")?, c: self.f64("pesin.c")? })
    }
}

fn parse_point(s: &str) -> Result<CVec> {
    let coords: Vec<C64> = s.split(',').map(|t| parse_complex(t.trim())).collect::<Result<_>>()?;
    Ok(CVec::from_vec(coords))
}

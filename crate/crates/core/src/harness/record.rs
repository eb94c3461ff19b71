//! Newline-delimited records: `type=<kind> config=<sha256> seed=<n> key=value …`.
//!
//! Values holding whitespace, quotes, backslashes or nothing at all are written
//! in double quotes with `\"`, `\\`, `\n` escapes; every other value is bare.
//! The parser refuses any other spelling, so an accepted line re-serializes to
//! the same bytes.

use crate::error::{Error, Result};
use crate::linalg::{C64, CVec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub kind: String,
    pub config: String,
    pub seed: u64,
    pub fields: Vec<(String, String)>,
}

fn needs_quotes(v: &str) -> bool {
    v.is_empty() || v.starts_with('"') || v.chars().any(|c| c.is_whitespace() || c == '\\' || c == '"')
}

fn quote(v: &str) -> String {
    if !needs_quotes(v) {
        return v.to_string();
    }
    let mut out = String::with_capacity(v.len() + 2);
    out.push('"');
    for c in v.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

/// `{:e}`, which prints the shortest string that parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

pub fn fmt_c64(z: C64) -> String {
    format!("{:e}{:+e}i", z.re, z.im)
}

pub fn fmt_vec(v: &CVec) -> String {
    v.iter().map(|z| fmt_c64(*z)).collect::<Vec<_>>().join(",")
}

pub fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

impl Record {
    pub fn new(kind: &str, config: &str, seed: u64) -> Record {
        Record { kind: kind.into(), config: config.into(), seed, fields: Vec::new() }
    }

    /// Appends a field; keys are ASCII letters, digits, `_`, `.` and `-`.
    pub fn text(mut self, key: &str, value: impl Into<String>) -> Record {
        assert!(valid_key(key), "bad record key {key:?}");
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn num(self, key: &str, x: f64) -> Record {
        self.text(key, fmt_f64(x))
    }

    pub fn int(self, key: &str, x: impl std::fmt::Display) -> Record {
        self.text(key, x.to_string())
    }

    pub fn flag(self, key: &str, b: bool) -> Record {
        self.text(key, if b { "true" } else { "false" })
    }

    pub fn list(self, key: &str, v: &[f64]) -> Record {
        self.text(key, fmt_list(v))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("type={} config={} seed={}", quote(&self.kind), quote(&self.config), self.seed);
        for (k, v) in &self.fields {
            out.push(' ');
            out.push_str(k);
            out.push('=');
            out.push_str(&quote(v));
        }
        out
    }

    pub fn parse(line: &str) -> Result<Record> {
        let bad = |why: &str| Error::Parse(format!("record: {why}"));
        let mut pairs = Vec::new();
        let mut rest = line;
        loop {
            let (key, after) = rest.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            if !valid_key(key) {
                return Err(bad(&format!("bad key {key:?}")));
            }
            let (value, tail) = if let Some(body) = after.strip_prefix('"') {
                let mut v = String::new();
                let mut chars = body.char_indices();
                let end = loop {
                    match chars.next() {
                        Some((i, '"')) => break i + 1,
                        Some((_, '\\')) => match chars.next() {
                            Some((_, '"')) => v.push('"'),
                            Some((_, '\\')) => v.push('\\'),
                            Some((_, 'n')) => v.push('\n'),
                            _ => return Err(bad("bad escape")),
                        },
                        Some((_, c)) => v.push(c),
                        None => return Err(bad("unterminated quote")),
                    }
                };
                if !needs_quotes(&v) {
                    return Err(bad("needless quotes"));
                }
                (v, &body[end..])
            } else {
                let end = after.find(' ').unwrap_or(after.len());
                let v = &after[..end];
                if needs_quotes(v) {
                    return Err(bad(&format!("value {v:?} must be quoted")));
                }
                (v.to_string(), &after[end..])
            };
            pairs.push((key.to_string(), value));
            if tail.is_empty() {
                break;
            }
            rest = tail.strip_prefix(' ').ok_or_else(|| bad("expected a single space between fields"))?;
            if rest.is_empty() || rest.starts_with(' ') {
                return Err(bad("expected a single space between fields"));
            }
        }
        let mut it = pairs.into_iter();
        let mut head = |name: &str| match it.next() {
            Some((k, v)) if k == name => Ok(v),
            _ => Err(bad(&format!("field {name} missing or out of place"))),
        };
        let kind = head("type")?;
        let config = head("config")?;
        let seed_text = head("seed")?;
        let seed: u64 = seed_text.parse().map_err(|_| bad("bad seed"))?;
        if seed.to_string() != seed_text {
            return Err(bad("non-canonical seed"));
        }
        Ok(Record { kind, config, seed, fields: it.collect() })
    }
}

/// One serialized record per line, each terminated by a newline.
pub fn write_records(records: &[Record]) -> String {
    records.iter().map(|r| r.serialize() + "\n").collect()
}

pub fn parse_records(text: &str) -> Result<Vec<Record>> {
    text.lines().map(Record::parse).collect()
}

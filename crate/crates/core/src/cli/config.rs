//! Flat `key = value` run configuration shared by all subcommands.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::Error;
use crate::gn::{preset, PresetName, DEFAULT_SEED};
use crate::nonlinearity::{Family, NonlinearitySpec};
use crate::radial_ode::{IntegrationControls, ProblemParams};
use crate::shooting::SolveControls;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    UnknownKey(String),
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    Syntax {
        line: usize,
        text: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey(k) => write!(f, "unknown configuration key {k:?}"),
            ConfigError::BadValue { key, value, reason } => {
                write!(f, "invalid value {value:?} for {key}: {reason}")
            }
            ConfigError::Syntax { line, text } => {
                write!(f, "line {line}: expected `key = value`, found {text:?}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Every parameter of a run, with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub n: f64,
    pub m: f64,
    pub family: String,
    pub c1: f64,
    pub c0: f64,
    pub gamma: f64,
    pub s: f64,
    pub q: f64,
    pub lambda: f64,
    /// `qp`, `jzz` or empty.
    pub preset: String,
    pub p: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub r_max: f64,
    pub u_floor: f64,
    pub vprime_floor: f64,
    pub alpha_tol: f64,
    pub trust_gap: f64,
    pub out: String,
    pub profile: String,
    pub input: String,
    pub report: String,
    pub table: String,
    /// `lo:hi:n:log` or `lo:hi:n:lin`; empty selects `1.001b:1000b:64:log`.
    pub alpha_grid: String,
    /// Zero selects the available parallelism.
    pub workers: usize,
    pub samples: usize,
    pub seed: u64,
    /// Comma separated values of `a`; empty selects the defaults.
    pub a_values: String,
    /// Representative level for the default `a`; empty selects `(α+b)/2`.
    pub u_rep: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ode = IntegrationControls::default();
        let solve = SolveControls::default();
        Self {
            command: "solve".into(),
            n: 1.0,
            m: 2.0,
            family: "linear-minus-const".into(),
            c1: 1.0,
            c0: 1.0,
            gamma: 1.0,
            s: 4.0,
            q: 2.0,
            lambda: 1.0,
            preset: String::new(),
            p: 4.0,
            rel_tol: ode.rel_tol,
            abs_tol: ode.abs_tol,
            r_max: ode.r_max,
            u_floor: ode.u_floor,
            vprime_floor: ode.vprime_floor,
            alpha_tol: solve.alpha_rel_tol,
            trust_gap: solve.trust_gap,
            out: String::new(),
            profile: String::new(),
            input: String::new(),
            report: String::new(),
            table: String::new(),
            alpha_grid: String::new(),
            workers: 0,
            samples: 100,
            seed: DEFAULT_SEED,
            a_values: String::new(),
            u_rep: String::new(),
        }
    }
}

/// Configuration keys in emission order.
pub const KEYS: &[&str] = &[
    "command",
    "N",
    "m",
    "family",
    "c1",
    "c0",
    "gamma",
    "s",
    "q",
    "lambda",
    "preset",
    "p",
    "rel-tol",
    "abs-tol",
    "r-max",
    "u-floor",
    "vprime-floor",
    "alpha-tol",
    "trust-gap",
    "out",
    "profile",
    "in",
    "report",
    "table",
    "alpha-grid",
    "workers",
    "samples",
    "seed",
    "a-values",
    "u-rep",
];

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|e| ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
            reason: e.to_string(),
        })
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|e| ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
            reason: e.to_string(),
        })
}

fn parse_seed(key: &str, value: &str) -> Result<u64, ConfigError> {
    let v = value.trim();
    let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => v.parse::<u64>(),
    };
    parsed.map_err(|e| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "command" => self.command = v.into(),
            "N" => self.n = parse_f64(key, v)?,
            "m" => self.m = parse_f64(key, v)?,
            "family" => self.family = v.into(),
            "c1" => self.c1 = parse_f64(key, v)?,
            "c0" => self.c0 = parse_f64(key, v)?,
            "gamma" => self.gamma = parse_f64(key, v)?,
            "s" => self.s = parse_f64(key, v)?,
            "q" => self.q = parse_f64(key, v)?,
            "lambda" => self.lambda = parse_f64(key, v)?,
            "preset" => self.preset = v.into(),
            "p" => self.p = parse_f64(key, v)?,
            "rel-tol" => self.rel_tol = parse_f64(key, v)?,
            "abs-tol" => self.abs_tol = parse_f64(key, v)?,
            "r-max" => self.r_max = parse_f64(key, v)?,
            "u-floor" => self.u_floor = parse_f64(key, v)?,
            "vprime-floor" => self.vprime_floor = parse_f64(key, v)?,
            "alpha-tol" => self.alpha_tol = parse_f64(key, v)?,
            "trust-gap" => self.trust_gap = parse_f64(key, v)?,
            "out" => self.out = v.into(),
            "profile" => self.profile = v.into(),
            "in" => self.input = v.into(),
            "report" => self.report = v.into(),
            "table" => self.table = v.into(),
            "alpha-grid" => self.alpha_grid = v.into(),
            "workers" => self.workers = parse_usize(key, v)?,
            "samples" => self.samples = parse_usize(key, v)?,
            "seed" => self.seed = parse_seed(key, v)?,
            "a-values" => self.a_values = v.into(),
            "u-rep" => self.u_rep = v.into(),
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Textual value of one key; floats use the shortest round-trip form.
    pub fn get(&self, key: &str) -> Option<String> {
        let f = |x: f64| format!("{x:?}");
        Some(match key {
            "command" => self.command.clone(),
            "N" => f(self.n),
            "m" => f(self.m),
            "family" => self.family.clone(),
            "c1" => f(self.c1),
            "c0" => f(self.c0),
            "gamma" => f(self.gamma),
            "s" => f(self.s),
            "q" => f(self.q),
            "lambda" => f(self.lambda),
            "preset" => self.preset.clone(),
            "p" => f(self.p),
            "rel-tol" => f(self.rel_tol),
            "abs-tol" => f(self.abs_tol),
            "r-max" => f(self.r_max),
            "u-floor" => f(self.u_floor),
            "vprime-floor" => f(self.vprime_floor),
            "alpha-tol" => f(self.alpha_tol),
            "trust-gap" => f(self.trust_gap),
            "out" => self.out.clone(),
            "profile" => self.profile.clone(),
            "in" => self.input.clone(),
            "report" => self.report.clone(),
            "table" => self.table.clone(),
            "alpha-grid" => self.alpha_grid.clone(),
            "workers" => self.workers.to_string(),
            "samples" => self.samples.to_string(),
            "seed" => self.seed.to_string(),
            "a-values" => self.a_values.clone(),
            "u-rep" => self.u_rep.clone(),
            _ => return None,
        })
    }

    /// All keys with their values, in `KEYS` order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|k| (*k, self.get(k).expect("known key")))
            .collect()
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    /// Config-file text; parses back to an identical configuration.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.into(),
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_kv(text)?;
        Ok(c)
    }

    pub fn apply_map<'a, I: IntoIterator<Item = (&'a str, &'a str)>>(
        &mut self,
        it: I,
    ) -> Result<(), ConfigError> {
        for (k, v) in it {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ProblemParams, Error> {
        ProblemParams::new(self.n, self.m)
    }

    pub fn spec(&self) -> Result<NonlinearitySpec, Error> {
        if !self.preset.is_empty() {
            let name: PresetName = self.preset.parse()?;
            return preset(name, self.p, self.n).map(|(_, s)| s);
        }
        let family = match self.family.as_str() {
            "power-minus-const" => Family::PowerMinusConst {
                c1: self.c1,
                c0: self.c0,
                gamma: self.gamma,
            },
            "double-power" => Family::DoublePower {
                s: self.s,
                q: self.q,
                lambda: self.lambda,
            },
            "cubic-minus-linear" => Family::CubicMinusLinear,
            "linear-minus-const" => Family::LinearMinusConst,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown family {other:?} (expected power-minus-const, double-power, cubic-minus-linear or linear-minus-const)"
                )))
            }
        };
        NonlinearitySpec::new(family)
    }

    pub fn ode_controls(&self) -> IntegrationControls {
        IntegrationControls {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            r_max: self.r_max,
            u_floor: self.u_floor,
            vprime_floor: self.vprime_floor,
            ..IntegrationControls::default()
        }
    }

    pub fn solve_controls(&self) -> SolveControls {
        SolveControls {
            ode: self.ode_controls(),
            alpha_rel_tol: self.alpha_tol,
            trust_gap: self.trust_gap,
            ..SolveControls::default()
        }
    }

    /// `(lo, hi, n, log)` from `alpha-grid`, defaulting relative to `b`.
    pub fn grid_spec(&self, b: f64) -> Result<(f64, f64, usize, bool), ConfigError> {
        if self.alpha_grid.is_empty() {
            return Ok((1.001 * b, 1000.0 * b, 64, true));
        }
        let bad = |reason: &str| ConfigError::BadValue {
            key: "alpha-grid".into(),
            value: self.alpha_grid.clone(),
            reason: reason.into(),
        };
        let parts: Vec<&str> = self.alpha_grid.split(':').collect();
        if parts.len() != 4 {
            return Err(bad("expected lo:hi:n:log or lo:hi:n:lin"));
        }
        let lo = parse_f64("alpha-grid", parts[0])?;
        let hi = parse_f64("alpha-grid", parts[1])?;
        let n = parse_usize("alpha-grid", parts[2])?;
        let log = match parts[3] {
            "log" => true,
            "lin" => false,
            _ => return Err(bad("spacing must be log or lin")),
        };
        if !(hi > lo) || n == 0 || (log && !(lo > 0.0)) {
            return Err(bad("need 0 < lo < hi and n >= 1"));
        }
        Ok((lo, hi, n, log))
    }

    pub fn a_list(&self) -> Result<Option<Vec<f64>>, ConfigError> {
        if self.a_values.is_empty() {
            return Ok(None);
        }
        self.a_values
            .split(',')
            .map(|x| parse_f64("a-values", x))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn u_rep_value(&self) -> Result<Option<f64>, ConfigError> {
        if self.u_rep.is_empty() {
            Ok(None)
        } else {
            parse_f64("u-rep", &self.u_rep).map(Some)
        }
    }
}

//! Flat `key=value` run configuration.
//!
//! ```text
//! # Case A on a circle of length 20
//! d=1
//! case=A
//! u=0.8
//! r=0.033
//! L=20
//! seed=1
//! ```
//!
//! Lengths are in the frame that is simulated: `r` (Case A) is the radius
//! of the unscaled model, `n` rescales it, and `L` is the torus side after
//! rescaling.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::events::{rescaled_stream, Case, EventStreamConfig, Window};
use crate::forward::{
    FieldOptions, InitialCondition, Schedule, DEFAULT_GRID_CELLS, DEFAULT_MAX_BREAKPOINTS,
};
use crate::geometry::{Dim, Point, Torus};

pub const KEYS: &[&str] = &[
    "d",
    "case",
    "u",
    "r",
    "alpha",
    "L",
    "n",
    "seed",
    "replicas",
    "snapshots",
    "snapshot_times",
    "out",
    "grid",
    "max_breakpoints",
    "init",
    "patch_radius",
    "patch_frequency",
    "t",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitKind {
    HalfSpace,
    Patch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub dim: Dim,
    pub case: Case,
    pub u: f64,
    pub r: Option<f64>,
    pub alpha: Option<f64>,
    /// Torus side; `None` for the whole space.
    pub side: Option<f64>,
    pub n: u64,
    pub seed: u64,
    pub replicas: u64,
    pub snapshots: Schedule,
    pub out: PathBuf,
    pub grid: usize,
    pub max_breakpoints: usize,
    pub init: InitKind,
    pub patch_radius: f64,
    pub patch_frequency: f64,
    /// Time horizon for dual and limit recipes.
    pub t: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dim: Dim::One,
            case: Case::A,
            u: 0.8,
            r: Some(0.033),
            alpha: None,
            side: None,
            n: 1,
            seed: 1,
            replicas: 1,
            snapshots: Schedule::Events(vec![0]),
            out: PathBuf::from("out"),
            grid: DEFAULT_GRID_CELLS,
            max_breakpoints: DEFAULT_MAX_BREAKPOINTS,
            init: InitKind::HalfSpace,
            patch_radius: 1.0,
            patch_frequency: 1.0,
            t: 1.0,
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| parse_num::<T>(s))
        .collect()
}

/// Integers also accept `1e7`-style literals when they are exact.
fn parse_num<T: std::str::FromStr>(s: &str) -> Option<T> {
    if let Ok(v) = s.parse::<T>() {
        return Some(v);
    }
    let f: f64 = s.parse().ok()?;
    if f.fract() == 0.0 && f.abs() < 9.0e15 {
        format!("{}", f as i64).parse().ok()
    } else {
        None
    }
}

/// Parses and validates a configuration, reporting every problem at once.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    let mut errs = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    let mut case_set = false;
    let mut r_set = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errs.push(format!("line {}: expected key=value, got {line:?}", lineno + 1));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            errs.push(format!("unknown key {key:?}"));
            continue;
        }
        if seen.iter().any(|k| k == key) {
            errs.push(format!("{key}: given more than once"));
            continue;
        }
        seen.push(key.to_string());
        let bad = |what: &str| format!("{key}: {what}, got {value:?}");
        match key {
            "d" => match parse_num::<usize>(value).map(Dim::from_usize) {
                Some(Ok(d)) => cfg.dim = d,
                _ => errs.push(bad("must be 1 or 2")),
            },
            "case" => match Case::parse(value) {
                Some(c) => {
                    cfg.case = c;
                    case_set = true;
                }
                None => errs.push(bad("must be A or B")),
            },
            "u" => match value.parse::<f64>() {
                Ok(u) => cfg.u = u,
                Err(_) => errs.push(bad("not a number")),
            },
            "r" => match value.parse::<f64>() {
                Ok(r) => {
                    cfg.r = Some(r);
                    r_set = true;
                }
                Err(_) => errs.push(bad("not a number")),
            },
            "alpha" => match value.parse::<f64>() {
                Ok(a) => cfg.alpha = Some(a),
                Err(_) => errs.push(bad("not a number")),
            },
            "L" => match value {
                "inf" | "unbounded" => cfg.side = None,
                _ => match value.parse::<f64>() {
                    Ok(l) => cfg.side = Some(l),
                    Err(_) => errs.push(bad("not a number or 'unbounded'")),
                },
            },
            "n" => match parse_num::<u64>(value) {
                Some(n) => cfg.n = n,
                None => errs.push(bad("not a nonnegative integer")),
            },
            "seed" => match parse_num::<u64>(value) {
                Some(s) => cfg.seed = s,
                None => errs.push(bad("not a nonnegative integer")),
            },
            "replicas" => match parse_num::<u64>(value) {
                Some(s) => cfg.replicas = s,
                None => errs.push(bad("not a nonnegative integer")),
            },
            "snapshots" => match parse_list::<u64>(value) {
                Some(v) if !v.is_empty() => cfg.snapshots = Schedule::Events(v),
                _ => errs.push(bad("not a comma-separated list of event counts")),
            },
            "snapshot_times" => match parse_list::<f64>(value) {
                Some(v) if !v.is_empty() => cfg.snapshots = Schedule::Times(v),
                _ => errs.push(bad("not a comma-separated list of times")),
            },
            "out" => cfg.out = PathBuf::from(value),
            "grid" => match parse_num::<usize>(value) {
                Some(g) => cfg.grid = g,
                None => errs.push(bad("not a nonnegative integer")),
            },
            "max_breakpoints" => match parse_num::<usize>(value) {
                Some(g) => cfg.max_breakpoints = g,
                None => errs.push(bad("not a nonnegative integer")),
            },
            "init" => match value {
                "half-space" => cfg.init = InitKind::HalfSpace,
                "patch" => cfg.init = InitKind::Patch,
                _ => errs.push(bad("must be half-space or patch")),
            },
            "patch_radius" => match value.parse::<f64>() {
                Ok(x) => cfg.patch_radius = x,
                Err(_) => errs.push(bad("not a number")),
            },
            "patch_frequency" => match value.parse::<f64>() {
                Ok(x) => cfg.patch_frequency = x,
                Err(_) => errs.push(bad("not a number")),
            },
            "t" => match value.parse::<f64>() {
                Ok(x) => cfg.t = x,
                Err(_) => errs.push(bad("not a number")),
            },
            _ => unreachable!("key list and match arms agree"),
        }
    }
    if seen.iter().any(|k| k == "snapshots") && seen.iter().any(|k| k == "snapshot_times") {
        errs.push("snapshots and snapshot_times are mutually exclusive".into());
    }
    if case_set && cfg.case == Case::B && !r_set {
        cfg.r = None;
    }
    errs.extend(cfg.violations());
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errs))
    }
}

impl SimConfig {
    /// Range and consistency problems, one message per key.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.u > 0.0 && self.u <= 1.0) {
            v.push(format!("u: must lie in (0,1], got {}", self.u));
        }
        match self.case {
            Case::A => {
                match self.r {
                    Some(r) if r > 0.0 && r.is_finite() => {}
                    Some(r) => v.push(format!("r: must be positive, got {r}")),
                    None => v.push("r: required for case A".into()),
                }
                if self.alpha.is_some() {
                    v.push("alpha: only used in case B".into());
                }
            }
            Case::B => {
                match self.alpha {
                    Some(a) if a > 1.0 && a < 2.0 => {}
                    Some(a) => v.push(format!("alpha: must lie in (1,2), got {a}")),
                    None => v.push("alpha: required for case B".into()),
                }
                if self.r.is_some() {
                    v.push("r: only used in case A".into());
                }
            }
        }
        if let Some(l) = self.side {
            if !(l > 0.0 && l.is_finite()) {
                v.push(format!("L: must be positive, got {l}"));
            }
        }
        if self.n == 0 {
            v.push("n: must be at least 1".into());
        }
        if self.replicas == 0 {
            v.push("replicas: must be at least 1".into());
        }
        if self.grid == 0 {
            v.push("grid: must be at least 1".into());
        }
        if self.max_breakpoints < 2 {
            v.push("max_breakpoints: must be at least 2".into());
        }
        if !(self.patch_radius > 0.0) {
            v.push(format!("patch_radius: must be positive, got {}", self.patch_radius));
        }
        if !(0.0..=1.0).contains(&self.patch_frequency) {
            v.push(format!(
                "patch_frequency: must lie in [0,1], got {}",
                self.patch_frequency
            ));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            v.push(format!("t: must be finite and nonnegative, got {}", self.t));
        }
        if let Schedule::Times(ts) = &self.snapshots {
            if ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                v.push("snapshot_times: must be finite and nonnegative".into());
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Unscaled model on the whole space.
    pub fn unit_stream(&self) -> Result<EventStreamConfig> {
        self.validate()?;
        let window = Window::Unbounded(self.dim);
        match self.case {
            Case::A => EventStreamConfig::case_a(self.u, self.r.expect("validated"), window, self.seed),
            Case::B => EventStreamConfig::case_b(self.u, self.alpha.expect("validated"), window, self.seed),
        }
    }

    /// Rescaled model on the configured window.
    pub fn stream(&self) -> Result<EventStreamConfig> {
        let scaled = rescaled_stream(&self.unit_stream()?, self.n)?;
        match self.side {
            Some(l) => scaled.with_window(Window::Torus(Torus::new(l, self.dim)?)),
            None => Ok(scaled),
        }
    }

    pub fn torus(&self) -> Result<Torus> {
        let l = self
            .side
            .ok_or_else(|| Error::Config(vec!["L: forward runs need a torus side".into()]))?;
        Torus::new(l, self.dim)
    }

    pub fn initial_condition(&self) -> InitialCondition {
        match self.init {
            InitKind::HalfSpace => InitialCondition::HalfSpace,
            InitKind::Patch => InitialCondition::Patch {
                center: Point::origin(self.dim),
                radius: self.patch_radius,
                frequency: self.patch_frequency,
            },
        }
    }

    pub fn field_options(&self) -> FieldOptions {
        FieldOptions {
            grid_cells: self.grid,
            max_breakpoints: self.max_breakpoints,
        }
    }

    /// Applies `key=value` overrides on top of this configuration.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<SimConfig> {
        let mut text = emit_config(self);
        let mut replaced: Vec<&str> = Vec::new();
        for o in overrides {
            let Some((k, _)) = o.split_once('=') else {
                return Err(Error::Config(vec![format!("override {o:?} is not key=value")]));
            };
            replaced.push(k.trim());
        }
        text = text
            .lines()
            .filter(|l| {
                let k = l.split_once('=').map(|(k, _)| k.trim()).unwrap_or("");
                let clash_schedule = (k == "snapshots" && replaced.contains(&"snapshot_times"))
                    || (k == "snapshot_times" && replaced.contains(&"snapshots"));
                let clash_model = (k == "r" && replaced.contains(&"alpha"))
                    || (k == "alpha" && replaced.contains(&"r"));
                !replaced.contains(&k) && !clash_schedule && !clash_model
            })
            .map(|l| format!("{l}\n"))
            .collect();
        for o in overrides {
            let _ = writeln!(text, "{o}");
        }
        parse_config(&text)
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Writes every key, so `parse_config(&emit_config(c)) == c`.
pub fn emit_config(cfg: &SimConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "d={}", cfg.dim);
    let _ = writeln!(s, "case={}", match cfg.case {
        Case::A => "A",
        Case::B => "B",
    });
    let _ = writeln!(s, "u={}", cfg.u);
    if let Some(r) = cfg.r {
        let _ = writeln!(s, "r={r}");
    }
    if let Some(a) = cfg.alpha {
        let _ = writeln!(s, "alpha={a}");
    }
    match cfg.side {
        Some(l) => {
            let _ = writeln!(s, "L={l}");
        }
        None => {
            let _ = writeln!(s, "L=unbounded");
        }
    }
    let _ = writeln!(s, "n={}", cfg.n);
    let _ = writeln!(s, "seed={}", cfg.seed);
    let _ = writeln!(s, "replicas={}", cfg.replicas);
    match &cfg.snapshots {
        Schedule::Events(v) => {
            let _ = writeln!(s, "snapshots={}", join(v));
        }
        Schedule::Times(v) => {
            let _ = writeln!(s, "snapshot_times={}", join(v));
        }
    }
    let _ = writeln!(s, "out={}", cfg.out.display());
    let _ = writeln!(s, "grid={}", cfg.grid);
    let _ = writeln!(s, "max_breakpoints={}", cfg.max_breakpoints);
    let _ = writeln!(s, "init={}", match cfg.init {
        InitKind::HalfSpace => "half-space",
        InitKind::Patch => "patch",
    });
    let _ = writeln!(s, "patch_radius={}", cfg.patch_radius);
    let _ = writeln!(s, "patch_frequency={}", cfg.patch_frequency);
    let _ = writeln!(s, "t={}", cfg.t);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_text_parses() {
        let c = parse_config("d=1\ncase=A\nu=0.8\nr=0.033\nL=20\nseed=1").unwrap();
        assert_eq!(c.dim, Dim::One);
        assert_eq!(c.case, Case::A);
        assert_eq!(c.r, Some(0.033));
        assert_eq!(c.side, Some(20.0));
        assert_eq!(c.seed, 1);
    }

    #[test]
    fn fig2_text_parses() {
        let c = parse_config("case=B\nalpha=1.3\nu=0.8\nL=20\nd=1").unwrap();
        assert_eq!(c.case, Case::B);
        assert_eq!(c.alpha, Some(1.3));
        assert_eq!(c.r, None);
    }

    #[test]
    fn range_violation_names_key() {
        match parse_config("u=1.5") {
            Err(Error::Config(v)) => {
                assert_eq!(v.len(), 1);
                assert!(v[0].starts_with("u:"), "{v:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_violations_reported() {
        let err = parse_config("u=2\nfoo=1\ncase=B\nalpha=3\nL=-1 # bad\nn=x").unwrap_err();
        let Error::Config(v) = err else { panic!() };
        let joined = v.join("|");
        for key in ["foo", "u:", "alpha:", "L:", "n:"] {
            assert!(joined.contains(key), "{key} missing from {joined}");
        }
    }

    #[test]
    fn comments_and_scientific_integers() {
        let c = parse_config("# header\ncase=A # fixed\nr=1\nsnapshots=0,1e5,1e7\nn=1e4\n\n").unwrap();
        assert_eq!(c.snapshots, Schedule::Events(vec![0, 100_000, 10_000_000]));
        assert_eq!(c.n, 10_000);
    }

    #[test]
    fn overrides_replace_keys() {
        let base = parse_config("case=A\nr=0.033\nL=20").unwrap();
        let c = base
            .with_overrides(&["case=B".into(), "alpha=1.5".into(), "seed=9".into()])
            .unwrap();
        assert_eq!(c.case, Case::B);
        assert_eq!(c.r, None);
        assert_eq!(c.seed, 9);
        assert!(base.with_overrides(&["bogus=1".into()]).is_err());
    }

    #[test]
    fn stream_uses_rescaled_radius_and_window() {
        let c = parse_config("case=B\nalpha=1.3\nu=0.8\nL=20\nn=10000").unwrap();
        let s = c.stream().unwrap();
        assert!((s.min_radius() - 1e4f64.powf(-1.0 / 1.3)).abs() < 1e-15);
        assert_eq!(s.torus().unwrap().side(), 20.0);
    }
}

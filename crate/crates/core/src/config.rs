//! Flat `key = value` run configuration.
//!
//! ```text
//! # reference run
//! n = 5
//! m = critical      # or a number
//! lambda = 4
//! c1 = 1
//! c2 = 1
//! r_min = 1e-3
//! r_max = 1e3
//! nodes = 2048
//! t_end = 10
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::params::{critical_exponent, FlowParams};
use crate::solver::verify::ClauseTolerances;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<RadialGrid>> {
        RadialGrid::build(self.r_min, self.r_max, self.nodes).map(Arc::new)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: FlowParams,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub tolerances: ClauseTolerances,
    /// `A = (1 + amplitude_margin) A*` for the subsolution.
    pub amplitude_margin: f64,
    /// Number of equally spaced times for the subsolution checks.
    pub subsolution_times: usize,
    /// Keep every `stride`-th stored time in exported trajectories.
    pub stride: usize,
    pub window_lo: f64,
    pub window_hi: f64,
}

const KEYS: &[&str] = &[
    "n",
    "m",
    "lambda",
    "c1",
    "c2",
    "r_min",
    "r_max",
    "nodes",
    "dt0",
    "t_end",
    "theta",
    "newton_tol",
    "newton_max",
    "step_growth",
    "tol_radial",
    "tol_time",
    "tol_inner",
    "tol_slope",
    "tol_outer",
    "tol_sandwich",
    "skip",
    "amplitude_margin",
    "subsolution_times",
    "stride",
    "window_lo",
    "window_hi",
];

fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line_no}: expected `key = value`, found {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("line {line_no}: unknown key {key:?}")));
        }
        if value.is_empty() {
            return Err(Error::Config(format!("line {line_no}: key {key:?} has no value")));
        }
        if out.insert(key.to_string(), (line_no, value.to_string())).is_some() {
            return Err(Error::Config(format!("line {line_no}: key {key:?} given twice")));
        }
    }
    Ok(out)
}

struct Pairs(BTreeMap<String, (usize, String)>);

impl Pairs {
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {line}: cannot parse {key} = {v:?}"))),
        }
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("missing required key {key:?}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = Pairs(parse_pairs(text)?);
        let n: u32 = kv.required("n")?;
        let m = match kv.0.get("m") {
            None => return Err(Error::Config("missing required key \"m\"".into())),
            Some((_, v)) if v == "critical" => critical_exponent(n)?,
            Some(_) => kv.required("m")?,
        };
        let params = FlowParams::new(n, m, kv.required("lambda")?, kv.required("c1")?, kv.required("c2")?)?;

        let grid = GridSpec {
            r_min: kv.or("r_min", 1e-3)?,
            r_max: kv.or("r_max", 1e3)?,
            nodes: kv.or("nodes", 2048)?,
        };
        let d = SolverConfig::default();
        let solver = SolverConfig {
            dt0: kv.or("dt0", d.dt0)?,
            t_end: kv.or("t_end", d.t_end)?,
            theta: kv.or("theta", d.theta)?,
            newton_tol: kv.or("newton_tol", d.newton_tol)?,
            newton_max: kv.or("newton_max", d.newton_max)?,
            step_growth: kv.or("step_growth", d.step_growth)?,
        };
        solver.validate()?;
        let t = ClauseTolerances::default();
        let tolerances = ClauseTolerances {
            radial_monotone: kv.or("tol_radial", t.radial_monotone)?,
            time_monotone: kv.or("tol_time", t.time_monotone)?,
            inner_profile: kv.or("tol_inner", t.inner_profile)?,
            inner_slope: kv.or("tol_slope", t.inner_slope)?,
            outer_limit: kv.or("tol_outer", t.outer_limit)?,
            sandwich: kv.or("tol_sandwich", t.sandwich)?,
            skip: kv.or("skip", t.skip)?,
        };
        let cfg = Self {
            params,
            grid,
            solver,
            tolerances,
            amplitude_margin: kv.or("amplitude_margin", 0.1)?,
            subsolution_times: kv.or("subsolution_times", 64)?,
            stride: kv.or("stride", 1)?,
            window_lo: kv.or("window_lo", 0.5)?,
            window_hi: kv.or("window_hi", 2.0)?,
        };
        cfg.grid.build()?;
        if !(cfg.window_lo > cfg.grid.r_min && cfg.window_lo < cfg.window_hi && cfg.window_hi < cfg.grid.r_max) {
            return Err(Error::Config(format!(
                "blow-down window [{}, {}] must lie inside ({}, {})",
                cfg.window_lo, cfg.window_hi, cfg.grid.r_min, cfg.grid.r_max
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = "
        # reference
        n = 5
        m = 0.42857142857142855
        lambda = 4
        c1 = 1
        c2 = 1   # outer amplitude
    ";

    #[test]
    fn defaults_fill_the_rest() {
        let cfg = RunConfig::parse(REFERENCE).unwrap();
        assert_eq!(cfg.grid.nodes, 2048);
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.tolerances, ClauseTolerances::default());
        assert_eq!(cfg.subsolution_times, 64);
    }

    #[test]
    fn critical_token_resolves() {
        let cfg = RunConfig::parse("n = 6\nm = critical\nlambda = 6\nc1 = 1\nc2 = 1\n").unwrap();
        assert_eq!(cfg.params.m(), 0.5);
        assert!(cfg.params.is_critical());
    }

    #[test]
    fn overrides_are_honoured() {
        let text = format!("{REFERENCE}\ntol_inner = 0.5\nskip = 2\nt_end = 3\nnodes = 64\n");
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.tolerances.inner_profile, 0.5);
        assert_eq!(cfg.tolerances.skip, 2);
        assert_eq!(cfg.solver.t_end, 3.0);
        assert_eq!(cfg.grid.nodes, 64);
    }

    #[test]
    fn bad_input_is_a_config_or_parameter_error() {
        assert!(matches!(RunConfig::parse("n = 5\nm = 0.4\nlambda = 4\nc1 = 1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("n = 5\nbogus = 1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("n = 5\nn = 6\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("n 5\n"), Err(Error::Config(_))));
        let err = RunConfig::parse("n = 5\nm = critical\nlambda = 9\nc1 = 1\nc2 = 1\n").unwrap_err();
        assert!(matches!(err, Error::InvalidParams(ref s) if s.contains("lambda")), "{err}");
        let err = RunConfig::parse(&format!("{REFERENCE}\ntheta = 0.2\n")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}

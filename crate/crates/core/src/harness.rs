//! Batch pipelines behind the command-line tool. Each command reads a
//! config, writes CSV artifacts plus `manifest.json` into its output
//! directory and returns an exit status:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success, every check passed |
//! | 2 | bad config, parameters, grid or input file |
//! | 3 | solver failure |
//! | 4 | a verification check failed |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::comparison::{pick_admissible_config, sample_times, verify_sandwich, verify_subsolution, SubsolutionConfig};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{
    blowdown_diagnostics, completeness_indicator, fit_end_asymptotics, initial_scalar_curvature, volume_form_limits,
    yamabe_constant_sphere, yamabe_flow_residual, EndFit, EndId, GeometryProfile, TimeRescale,
};
use crate::grid::RadialField;
use crate::io;
use crate::solver::verify::verify_theorem_clauses;
use crate::solver::{solve, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Tolerances applied by `geometry` to the initial slice.
pub const CONE_SLOPE_TOL: f64 = 0.01;
pub const CONE_ORDER_TOL: f64 = 0.15;
pub const EUCLIDEAN_ORDER_TOL: f64 = 0.15;
pub const CURVATURE_TOL: f64 = 0.01;
pub const VOLUME_TOL: f64 = 0.02;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NewtonDivergence { .. } | Error::PositivityLoss { .. } => EXIT_SOLVER,
        Error::FitUnstable { .. } => EXIT_VERIFY,
        _ => EXIT_CONFIG,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    pub subsolution: Option<SubsolutionConfig>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub pass: bool,
    pub failures: Vec<String>,
    pub notes: BTreeMap<String, f64>,
}

impl RunManifest {
    fn new(command: &str, config: RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            subsolution: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            pass: true,
            failures: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    fn output(&mut self, key: &str, path: PathBuf) -> PathBuf {
        self.outputs.insert(key.to_string(), path.clone());
        path
    }

    fn fail(&mut self, what: impl Into<String>) {
        self.pass = false;
        self.failures.push(what.into());
    }

    fn write(&mut self, out: &Path) -> Result<()> {
        let path = out.join("manifest.json");
        self.outputs.insert("manifest".into(), path.clone());
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Result of a command: the manifest when one was produced, the exit code
/// and a one-line summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub manifest: Option<RunManifest>,
    pub code: i32,
    pub message: String,
}

impl Outcome {
    fn from_error(err: Error) -> Self {
        Self {
            manifest: None,
            code: exit_code(&err),
            message: err.to_string(),
        }
    }

    fn finished(manifest: RunManifest) -> Self {
        let (code, message) = if manifest.pass {
            (EXIT_OK, format!("{}: ok", manifest.command))
        } else {
            (
                EXIT_VERIFY,
                format!("{}: failed: {}", manifest.command, manifest.failures.join("; ")),
            )
        };
        Self {
            manifest: Some(manifest),
            code,
            message,
        }
    }
}

fn run(f: impl FnOnce() -> Result<RunManifest>) -> Outcome {
    match f() {
        Ok(m) => Outcome::finished(m),
        Err(e) => Outcome::from_error(e),
    }
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))
}

/// Solves the configured problem and writes `trajectory.csv`.
pub fn cmd_solve(config: &Path, out: &Path) -> Outcome {
    run(|| {
        let cfg = RunConfig::load(config)?;
        prepare_out(out)?;
        let tr = solve(cfg.params, cfg.grid.build()?, cfg.solver)?;
        let mut m = RunManifest::new("solve", cfg);
        m.inputs.insert("config".into(), config.to_path_buf());
        let path = m.output("trajectory", out.join("trajectory.csv"));
        io::write_trajectory(&path, &tr, cfg.stride)?;
        m.notes.insert("stored_times".into(), tr.len() as f64);
        m.notes.insert("t_end".into(), *tr.times.last().unwrap());
        m.write(out)?;
        Ok(m)
    })
}

/// Clause, sandwich and subsolution reports for a stored trajectory.
pub fn cmd_verify(traj: &Path, config: &Path, out: &Path) -> Outcome {
    run(|| {
        let cfg = RunConfig::load(config)?;
        let tr = io::read_trajectory(traj, cfg.params)?;
        prepare_out(out)?;
        let mut m = RunManifest::new("verify", cfg);
        m.inputs.insert("config".into(), config.to_path_buf());
        m.inputs.insert("trajectory".into(), traj.to_path_buf());
        verify_into(&mut m, &tr, out)?;
        m.write(out)?;
        Ok(m)
    })
}

fn verify_into(m: &mut RunManifest, tr: &Trajectory, out: &Path) -> Result<()> {
    let cfg = m.config;
    let clauses = verify_theorem_clauses(tr, &cfg.tolerances);
    io::write_clause_report(&m.output("clauses", out.join("clauses.csv")), &clauses)?;
    for c in clauses.failing() {
        let worst = clauses.worst(c).unwrap_or(f64::NAN);
        m.fail(format!("clause {c} (worst {worst:.3e})"));
    }

    if cfg.params.is_degenerate() {
        // u ≡ c2 needs no comparison functions
        return Ok(());
    }
    let sub = pick_admissible_config(&cfg.params, cfg.amplitude_margin)?;
    m.subsolution = Some(sub);
    let sandwich = verify_sandwich(tr, &sub, cfg.tolerances.sandwich)?;
    io::write_clause_report(&m.output("sandwich", out.join("sandwich.csv")), &sandwich)?;
    for c in sandwich.failing() {
        let worst = sandwich.worst(c).unwrap_or(f64::NAN);
        m.fail(format!("{c} (worst {worst:.3e})"));
    }

    let t_end = *tr.times.last().unwrap();
    let checks = verify_subsolution(&cfg.params, &sub, &tr.grid, &sample_times(t_end, cfg.subsolution_times))?;
    io::write_subsolution_report(&m.output("subsolution", out.join("subsolution.csv")), &checks)?;
    if let Some(v) = checks.violations().next() {
        m.fail(format!(
            "subsolution {} at r = {:e}, t = {}: {:.3e} > {:.3e}",
            v.kind.label(),
            v.r,
            v.t,
            v.quantity,
            v.bound
        ));
    }
    Ok(())
}

/// Geometry of a stored trajectory, or of the initial datum alone when
/// `traj` is `None`.
pub fn cmd_geometry(traj: Option<&Path>, config: &Path, out: &Path) -> Outcome {
    run(|| {
        let cfg = RunConfig::load(config)?;
        let p = cfg.params;
        p.require_geometry()?;
        let tr = match traj {
            Some(path) => io::read_trajectory(path, p)?,
            None => {
                let grid = cfg.grid.build()?;
                let u0 = RadialField::sample(grid.clone(), 0.0, |r| p.initial_profile(r))?;
                let bc = crate::solver::BcKind::Pinned {
                    inner: u0.values[0],
                    outer: *u0.values.last().unwrap(),
                };
                Trajectory {
                    params: p,
                    grid,
                    times: vec![0.0],
                    fields: vec![u0],
                    bc,
                }
            }
        };
        prepare_out(out)?;
        let mut m = RunManifest::new("geometry", cfg);
        m.inputs.insert("config".into(), config.to_path_buf());
        if let Some(path) = traj {
            m.inputs.insert("trajectory".into(), path.to_path_buf());
        }
        geometry_into(&mut m, &tr, out)?;
        m.write(out)?;
        Ok(m)
    })
}

fn geometry_into(m: &mut RunManifest, tr: &Trajectory, out: &Path) -> Result<()> {
    let cfg = m.config;
    let p = cfg.params;
    let kept = io::thinned_indices(tr.len(), cfg.stride);

    let profiles = kept
        .iter()
        .map(|&k| GeometryProfile::new(&tr.fields[k], &p))
        .collect::<Result<Vec<_>>>()?;
    io::write_geometry(&m.output("geometry", out.join("geometry.csv")), &profiles)?;

    let mut fits: Vec<EndFit> = Vec::new();
    let mut completeness = Vec::new();
    let mut incomplete = Vec::new();
    let mut unstable = Vec::new();
    for &k in &kept {
        let field = &tr.fields[k];
        match completeness_indicator(field, &p) {
            Ok(c) => {
                if !c.complete() {
                    incomplete.push(field.time);
                }
                completeness.push((field.time, c));
            }
            Err(e @ Error::FitUnstable { .. }) => unstable.push((field.time, e)),
            Err(e) => return Err(e),
        }
        for end in [EndId::Inner, EndId::Outer] {
            match fit_end_asymptotics(field, end, &p) {
                Ok(f) => fits.push(f),
                Err(Error::FitUnstable { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if let Some(&t) = incomplete.first() {
        m.fail(format!("incomplete end at {} stored times, first t = {t}", incomplete.len()));
    }
    if let Some((t, e)) = unstable.first() {
        m.fail(format!("{} stored times with unstable completeness fits, first t = {t}: {e}", unstable.len()));
    }
    io::write_completeness(&m.output("completeness", out.join("completeness.csv")), &completeness)?;
    io::write_end_fits(&m.output("end_fits", out.join("end_fits.csv")), &fits)?;

    // the limit metric u ≡ c2 must have an incomplete inner end
    let limit = RadialField::new(tr.grid.clone(), vec![p.c2(); tr.grid.len()], f64::INFINITY)?;
    let lc = completeness_indicator(&limit, &p)?;
    if lc.inner.complete {
        m.fail("limit metric reported complete at the origin");
    }

    // checks on the initial slice
    let first = &tr.fields[0];
    if first.time == 0.0 {
        for f in fits.iter().filter(|f| f.time == 0.0) {
            let (order_tol, label) = match f.end {
                EndId::Inner => (CONE_ORDER_TOL, "cone order"),
                EndId::Outer => (EUCLIDEAN_ORDER_TOL, "euclidean order"),
            };
            if (f.slope - f.ref_slope).abs() > CONE_SLOPE_TOL * f.ref_slope {
                m.fail(format!("{} slope {:.5} vs {:.5}", f.end.label(), f.slope, f.ref_slope));
            }
            match f.order {
                Some(o) if (o - f.ref_order).abs() <= order_tol * f.ref_order.abs() => {}
                o => m.fail(format!("{label} {o:?} vs {:.4}", f.ref_order)),
            }
            m.notes.insert(format!("{}_slope", f.end.label()), f.slope);
            m.notes.insert(format!("{}_order", f.end.label()), f.order.unwrap_or(f64::NAN));
        }
        let profile = &profiles[0];
        let worst = (1..first.grid.len() - 1)
            .filter(|&i| first.grid.nodes()[i] <= 0.1 * first.grid.r_max())
            .map(|i| {
                let exact = initial_scalar_curvature(&p, first.grid.nodes()[i]).unwrap_or(f64::NAN);
                ((profile.scal_at(i) - exact) / exact).abs()
            })
            .fold(0.0, f64::max);
        m.notes.insert("initial_curvature_deviation".into(), worst);
        if !(worst <= CURVATURE_TOL) {
            m.fail(format!("initial curvature deviates by {worst:.3e}"));
        }
        let vol = volume_form_limits(first, &p)?;
        m.notes.insert("volume_inner_limit".into(), vol.inner);
        m.notes.insert("volume_outer_limit".into(), vol.outer);
        if vol.inner_error() > VOLUME_TOL || vol.outer_error() > VOLUME_TOL {
            m.fail(format!("volume limits {:.5}, {:.5}", vol.inner, vol.outer));
        }
    }
    m.notes.insert("yamabe_constant".into(), yamabe_constant_sphere(p.n())?);

    if tr.len() >= 3 {
        let res = yamabe_flow_residual(tr)?;
        io::write_flow_residual(
            &m.output("flow_residual", out.join("flow_residual.csv")),
            &res,
            TimeRescale::new(p.n())?,
        )?;
    }
    if let crate::solver::BcKind::Pinned { .. } = tr.bc {
        let bd = blowdown_diagnostics(tr, cfg.window_lo, cfg.window_hi)?;
        io::write_blowdown(&m.output("blowdown", out.join("blowdown.csv")), &bd)?;
    }
    Ok(())
}

/// Runs `solve`, `verify` and (at the critical exponent) `geometry` for
/// every `*.conf` file in `configs`, each in `out/<stem>/`, on up to `jobs`
/// worker threads. Writes `sweep.csv` with one row per config.
pub fn cmd_sweep(configs: &Path, out: &Path, jobs: usize) -> Outcome {
    let listing = match fs::read_dir(configs) {
        Ok(d) => d,
        Err(e) => return Outcome::from_error(Error::Config(format!("{}: {e}", configs.display()))),
    };
    let mut files: Vec<PathBuf> = listing
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "conf"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Outcome::from_error(Error::Config(format!("no *.conf files in {}", configs.display())));
    }
    if let Err(e) = prepare_out(out) {
        return Outcome::from_error(e);
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, [i32; 3])>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, files.len()) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(file) = files.get(k) else { break };
                let stem = file.file_stem().unwrap_or_default();
                let dir = out.join(stem);
                let solved = cmd_solve(file, &dir);
                let mut codes = [solved.code, -1, -1];
                if solved.code == EXIT_OK {
                    let traj = dir.join("trajectory.csv");
                    codes[1] = cmd_verify(&traj, file, &dir.join("verify")).code;
                    let critical = RunConfig::load(file).is_ok_and(|c| c.params.require_geometry().is_ok());
                    if critical {
                        codes[2] = cmd_geometry(Some(&traj), file, &dir.join("geometry")).code;
                    }
                }
                results.lock().unwrap().push((k, codes));
            });
        }
    });

    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|r| r.0);
    let rows = results.iter().map(|(k, c)| {
        let name = files[*k].file_name().unwrap_or_default().to_string_lossy().into_owned();
        let fmt = |x: i32| if x < 0 { String::new() } else { x.to_string() };
        vec![name, fmt(c[0]), fmt(c[1]), fmt(c[2])]
    });
    if let Err(e) = io::write_rows(&out.join("sweep.csv"), &["config", "solve", "verify", "geometry"], rows) {
        return Outcome::from_error(e);
    }
    let code = results.iter().flat_map(|r| r.1).max().unwrap_or(0).max(0);
    let failed = results.iter().filter(|r| r.1.iter().any(|&c| c > 0)).count();
    Outcome {
        manifest: None,
        code,
        message: format!("sweep: {} configs, {failed} with failures", results.len()),
    }
}

//! Implicit θ-scheme for `u_t = Δ(u^m)` in radial form.
//!
//! Each step solves
//!
//! ```text
//! u_new - u - dt [θ L(u_new^m) + (1-θ) L(u^m)] = 0
//! ```
//!
//! by Newton's method. `L` is the three-point radial Laplacian, whose
//! off-diagonal weights are positive on the meshes used here, so the
//! backward-Euler Jacobian `I - dt L diag(m u^{m-1})` is an M-matrix and
//! the scheme is order preserving.

pub mod tridiag;
pub mod verify;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{LaplacianStencil, RadialField, RadialGrid};
use crate::params::{FlowParams, RegularizationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt0: f64,
    pub t_end: f64,
    /// Implicitness weight in `[1/2, 1]`; 1 is backward Euler.
    pub theta: f64,
    /// Relative Newton residual tolerance.
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Growth factor applied after a step that converged in at most
    /// four Newton iterations. 1 gives a fixed step.
    pub step_growth: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-3,
            t_end: 10.0,
            theta: 1.0,
            newton_tol: 1e-12,
            newton_max: 30,
            step_growth: 1.2,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt0 > 0.0) {
            return Err(Error::Config(format!("dt0 = {} must be positive", self.dt0)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end = {} must be positive", self.t_end)));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta = {} must lie in [1/2, 1]", self.theta)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config(format!("newton_tol = {} must be positive", self.newton_tol)));
        }
        if self.newton_max == 0 {
            return Err(Error::Config("newton_max must be at least 1".into()));
        }
        if !(self.step_growth >= 1.0) {
            return Err(Error::Config(format!("step_growth = {} must be >= 1", self.step_growth)));
        }
        Ok(())
    }

    /// Largest admissible step, `t_end / 64`.
    pub fn dt_cap(&self) -> f64 {
        self.t_end / 64.0
    }

    /// Smallest step tried before giving up, `dt0 · 2⁻²⁰`.
    pub fn dt_floor(&self) -> f64 {
        self.dt0 * 2f64.powi(-20)
    }
}

/// Boundary conditions of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BcKind {
    /// Dirichlet values at both ends of an annulus.
    Pinned { inner: f64, outer: f64 },
    /// Symmetry (zero radial derivative) at the origin of a ball mesh and a
    /// Dirichlet value at the outer radius.
    Ball { outer: f64 },
}

impl BcKind {
    fn free_range(&self, len: usize) -> (usize, usize) {
        match self {
            BcKind::Pinned { .. } => (1, len - 2),
            BcKind::Ball { .. } => (0, len - 2),
        }
    }

    fn impose(&self, values: &mut [f64]) {
        let last = values.len() - 1;
        match *self {
            BcKind::Pinned { inner, outer } => {
                values[0] = inner;
                values[last] = outer;
            }
            BcKind::Ball { outer } => values[last] = outer,
        }
    }
}

/// Result of one accepted step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub field: RadialField,
    pub iterations: usize,
    pub residual: f64,
}

/// Owns the stencil and scratch buffers for one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: FlowParams,
    grid: Arc<RadialGrid>,
    cfg: SolverConfig,
    bc: BcKind,
    stencil: LaplacianStencil,
}

impl Stepper {
    pub fn new(params: FlowParams, grid: Arc<RadialGrid>, cfg: SolverConfig, bc: BcKind) -> Result<Self> {
        cfg.validate()?;
        if matches!(bc, BcKind::Ball { .. }) != grid.has_origin() {
            return Err(Error::InvalidGrid(
                "ball boundary conditions need a mesh through the origin, and only those".into(),
            ));
        }
        let stencil = LaplacianStencil::new(&grid, params.dim());
        Ok(Self {
            params,
            grid,
            cfg,
            bc,
            stencil,
        })
    }

    pub fn bc(&self) -> BcKind {
        self.bc
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// `max_i |F_i| / scale_i` for the θ-scheme residual.
    fn residual(&self, u: &[f64], v: &[f64], w: &[f64], explicit: &[f64], explicit_mag: &[f64], dt: f64, out: &mut [f64]) -> f64 {
        let theta = self.cfg.theta;
        let (lo, hi) = self.bc.free_range(v.len());
        let mut worst: f64 = 0.0;
        for i in lo..=hi {
            let lw = self.stencil.apply_row(w, i);
            let f = v[i] - u[i] - dt * (theta * lw + explicit[i]);
            let scale = v[i].abs() + u[i].abs() + dt * (theta * self.stencil.row_magnitude(w, i) + explicit_mag[i]);
            out[i] = f;
            worst = worst.max(f.abs() / scale);
        }
        worst
    }

    /// Advances `u` by `dt`. Boundary values are taken from the stepper's
    /// boundary conditions.
    pub fn step(&self, u: &RadialField, dt: f64) -> Result<StepOutcome> {
        let len = self.grid.len();
        let m = self.params.m();
        let theta = self.cfg.theta;
        let time = u.time + dt;
        let (lo, hi) = self.bc.free_range(len);

        let mut v = u.values.clone();
        self.bc.impose(&mut v);

        let mut explicit = vec![0.0; len];
        let mut explicit_mag = vec![0.0; len];
        if theta < 1.0 {
            let w_old: Vec<f64> = u.values.iter().map(|x| x.powf(m)).collect();
            for i in lo..=hi {
                explicit[i] = (1.0 - theta) * self.stencil.apply_row(&w_old, i);
                explicit_mag[i] = (1.0 - theta) * self.stencil.row_magnitude(&w_old, i);
            }
        }

        let free = hi - lo + 1;
        let mut w: Vec<f64> = v.iter().map(|x| x.powf(m)).collect();
        let mut f = vec![0.0; len];
        let mut sub = vec![0.0; free];
        let mut diag = vec![0.0; free];
        let mut sup = vec![0.0; free];
        let mut rhs = vec![0.0; free];
        let mut work = Vec::with_capacity(free);
        let mut trial = v.clone();

        let mut res = self.residual(&u.values, &v, &w, &explicit, &explicit_mag, dt, &mut f);
        for it in 0..=self.cfg.newton_max {
            if res < self.cfg.newton_tol {
                let field = RadialField {
                    grid: self.grid.clone(),
                    values: v,
                    time,
                };
                return Ok(StepOutcome {
                    field,
                    iterations: it,
                    residual: res,
                });
            }
            if it == self.cfg.newton_max {
                break;
            }
            // Jacobian of v ↦ v - dt θ L(v^m) restricted to free nodes
            let c = dt * theta;
            for k in 0..free {
                let i = lo + k;
                let d = |j: usize| m * w[j] / v[j];
                diag[k] = 1.0 - c * self.stencil.diag[i] * d(i);
                sub[k] = if k > 0 { -c * self.stencil.lower[i] * d(i - 1) } else { 0.0 };
                sup[k] = if k + 1 < free { -c * self.stencil.upper[i] * d(i + 1) } else { 0.0 };
                rhs[k] = -f[i];
            }
            tridiag::solve_in_place(&sub, &diag, &sup, &mut rhs, &mut work);

            // halve the update until every free value stays positive
            let mut s = 1.0;
            let mut halvings = 0;
            loop {
                let ok = (0..free).all(|k| v[lo + k] + s * rhs[k] > 0.0);
                if ok {
                    break;
                }
                s *= 0.5;
                halvings += 1;
                if halvings > 60 {
                    let node = (0..free).find(|&k| v[lo + k] + s * rhs[k] <= 0.0).unwrap_or(0) + lo;
                    return Err(Error::PositivityLoss { time, node });
                }
            }
            for k in 0..free {
                trial[lo + k] = v[lo + k] + s * rhs[k];
            }
            std::mem::swap(&mut v, &mut trial);
            for i in lo..=hi {
                w[i] = v[i].powf(m);
            }
            res = self.residual(&u.values, &v, &w, &explicit, &explicit_mag, dt, &mut f);
            if !res.is_finite() {
                break;
            }
        }
        Err(Error::NewtonDivergence {
            time,
            dt,
            residual: res,
        })
    }
}

/// Time-stamped solution history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: FlowParams,
    pub grid: Arc<RadialGrid>,
    pub times: Vec<f64>,
    pub fields: Vec<RadialField>,
    pub bc: BcKind,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.fields.len()
    }
    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
    pub fn last(&self) -> &RadialField {
        self.fields.last().expect("trajectory is never empty")
    }
}

/// Integrates from an arbitrary positive field with adaptive steps.
///
/// Steps grow by `step_growth` after fast Newton convergence, are capped at
/// `t_end/64`, and are halved and retried on failure down to `dt0·2⁻²⁰`.
pub fn solve_from(params: FlowParams, initial: RadialField, bc: BcKind, cfg: SolverConfig) -> Result<Trajectory> {
    let grid = initial.grid.clone();
    let stepper = Stepper::new(params, grid.clone(), cfg, bc)?;
    let cap = cfg.dt_cap();
    let mut dt = cfg.dt0.min(cap);
    let mut current = initial;
    bc.impose(&mut current.values);
    let mut times = vec![current.time];
    let mut fields = vec![current.clone()];
    let t_end = cfg.t_end;

    while current.time < t_end * (1.0 - 1e-12) {
        let mut h = dt.min(t_end - current.time);
        if t_end - (current.time + h) < 1e-9 * h {
            h = t_end - current.time;
        }
        match stepper.step(&current, h) {
            Ok(out) => {
                let mut field = out.field;
                if (t_end - field.time).abs() < 1e-9 * h {
                    field.time = t_end;
                }
                times.push(field.time);
                fields.push(field.clone());
                current = field;
                if out.iterations <= 4 {
                    dt = (dt * cfg.step_growth).min(cap);
                }
            }
            Err(err @ (Error::NewtonDivergence { .. } | Error::PositivityLoss { .. })) => {
                dt *= 0.5;
                if dt < cfg.dt_floor() {
                    return Err(match err {
                        Error::NewtonDivergence { residual, .. } => Error::NewtonDivergence {
                            time: current.time,
                            dt,
                            residual,
                        },
                        other => other,
                    });
                }
            }
            Err(other) => return Err(other),
        }
    }
    Ok(Trajectory {
        params,
        grid,
        times,
        fields,
        bc,
    })
}

/// Singular problem on the annulus `[r_min, r_max]` with the ends pinned to
/// `u₀(r_min)` and `u₀(r_max)`.
pub fn solve(params: FlowParams, grid: Arc<RadialGrid>, cfg: SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if grid.has_origin() {
        return Err(Error::InvalidGrid("the singular problem needs an annulus mesh".into()));
    }
    let initial = RadialField::sample(grid.clone(), 0.0, |r| params.initial_profile(r))?;
    let bc = BcKind::Pinned {
        inner: initial.values[0],
        outer: *initial.values.last().unwrap(),
    };
    if params.is_degenerate() {
        return Ok(constant_trajectory(params, initial, bc, cfg));
    }
    solve_from(params, initial, bc, cfg)
}

/// `u₀ ≡ c2` is stationary; sample it at 65 equally spaced stamps.
fn constant_trajectory(params: FlowParams, initial: RadialField, bc: BcKind, cfg: SolverConfig) -> Trajectory {
    let stamps = 65;
    let times: Vec<f64> = (0..stamps).map(|k| cfg.t_end * k as f64 / (stamps - 1) as f64).collect();
    let fields = times
        .iter()
        .map(|&t| RadialField {
            time: t,
            ..initial.clone()
        })
        .collect();
    Trajectory {
        params,
        grid: initial.grid,
        times,
        fields,
        bc,
    }
}

/// Regularized problem on the ball `[0, r_max]` from `u_{0,ε}`.
pub fn solve_regularized(
    params: FlowParams,
    rc: RegularizationConfig,
    grid: Arc<RadialGrid>,
    cfg: SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !grid.has_origin() {
        return Err(Error::InvalidGrid("the regularized problem needs a mesh through the origin".into()));
    }
    let initial = RadialField::sample(grid.clone(), 0.0, |r| params.regularized_initial(rc, r))?;
    let bc = BcKind::Ball {
        outer: *initial.values.last().unwrap(),
    };
    solve_from(params, initial, bc, cfg)
}

/// Largest relative violation of `u^A ≤ u^B` over matching stamps.
pub fn max_order_violation(lower: &Trajectory, upper: &Trajectory) -> f64 {
    lower
        .fields
        .iter()
        .zip(&upper.fields)
        .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| ((x - y) / y).max(0.0)))
        .fold(0.0, f64::max)
}

//! Conformal geometry of `g = u^{4/(n+2)} |dx|²` at the critical exponent
//! `m = (n-2)/(n+2)`.
//!
//! In the radial arc length `ρ(r) = ∫₁^r u^{2/(n+2)}` the metric is the
//! warped product `dρ² + F(ρ) g_{S^{n-1}}` with `F = r² u^{4/(n+2)}`. The
//! outer end is asymptotically Euclidean (`F ≈ ρ²`), the inner end
//! asymptotically conical (`F ≈ B ρ²`).

pub mod fit;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{
    radial_gradient_values, radial_laplacian_values, radial_second_derivative_values, RadialField, RadialGrid,
};
use crate::params::FlowParams;
use crate::solver::{BcKind, Trajectory};

/// Local exponent spread above which an end fit is rejected.
pub const EXPONENT_SPREAD_LIMIT: f64 = 0.1;
/// Minimum number of nodes in an end window.
pub const MIN_FIT_NODES: usize = 8;
/// Boundary-adjacent nodes dropped from the end windows.
pub const END_SKIP: usize = 5;

/// Linear map between the PDE time `t` and the Yamabe-flow time
/// `s = (n-2)/((n-1)(n+2)) t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeRescale {
    pub slope: f64,
}

impl TimeRescale {
    pub fn new(n: u32) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParams(format!("n = {n} violates n >= 3")));
        }
        let n = f64::from(n);
        Ok(Self {
            slope: (n - 2.0) / ((n - 1.0) * (n + 2.0)),
        })
    }

    pub fn yamabe_time(&self, t_pde: f64) -> f64 {
        self.slope * t_pde
    }

    pub fn pde_time(&self, s: f64) -> f64 {
        s / self.slope
    }
}

/// `u^{2/(n+2)}`, the arc-length integrand.
fn length_density(u: f64, n: f64) -> f64 {
    u.powf(2.0 / (n + 2.0))
}

/// Signed arc length from `r = 1` by the trapezoidal rule.
pub fn arc_length_profile(field: &RadialField, n: u32) -> Vec<f64> {
    let nf = f64::from(n);
    let r = field.grid.nodes();
    let g: Vec<f64> = field.values.iter().map(|&u| length_density(u, nf)).collect();
    let base = field.grid.unit_index();
    let mut rho = vec![0.0; r.len()];
    for i in base + 1..r.len() {
        rho[i] = rho[i - 1] + 0.5 * (g[i] + g[i - 1]) * (r[i] - r[i - 1]);
    }
    for i in (0..base).rev() {
        rho[i] = rho[i + 1] - 0.5 * (g[i] + g[i + 1]) * (r[i + 1] - r[i]);
    }
    rho
}

/// `F = r² u^{4/(n+2)}`.
pub fn warping_function(field: &RadialField, n: u32) -> Vec<f64> {
    let nf = f64::from(n);
    field
        .grid
        .nodes()
        .iter()
        .zip(&field.values)
        .map(|(&r, &u)| r * r * u.powf(4.0 / (nf + 2.0)))
        .collect()
}

/// Pairs `(ρ + shift, F)` at every node.
pub fn warping_profile(field: &RadialField, n: u32, shift: f64) -> Vec<(f64, f64)> {
    arc_length_profile(field, n)
        .into_iter()
        .zip(warping_function(field, n))
        .map(|(rho, f)| (rho + shift, f))
        .collect()
}

/// `-(4(n-1)/(n-2)) v^{-(n+2)/(n-2)} Δv` with `v = u^{(n-2)/(n+2)}`, at the
/// interior nodes.
pub fn scalar_curvature(field: &RadialField, p: &FlowParams) -> Result<Vec<f64>> {
    p.require_geometry()?;
    Ok(curvature_values(field, p.dim()))
}

fn curvature_values(field: &RadialField, n: f64) -> Vec<f64> {
    let m = (n - 2.0) / (n + 2.0);
    let v: Vec<f64> = field.values.iter().map(|&u| u.powf(m)).collect();
    let lap = radial_laplacian_values(&field.grid, n, &v);
    let k = -4.0 * (n - 1.0) / (n - 2.0);
    // v^{-(n+2)/(n-2)} = 1/u
    lap.iter().zip(&field.values[1..]).map(|(l, u)| k * l / u).collect()
}

/// Closed-form scalar curvature of the initial metric:
/// `Δv = c1^m k(k+2-n) r^{-k-2}` with `k = mλ`, so the curvature is positive.
pub fn initial_scalar_curvature(p: &FlowParams, r: f64) -> Result<f64> {
    p.require_geometry()?;
    let (n, m, c1) = (p.dim(), p.m(), p.c1());
    let k = m * p.lambda();
    let lap_v = c1.powf(m) * k * (k + 2.0 - n) * r.powf(-k - 2.0);
    Ok(-4.0 * (n - 1.0) / (n - 2.0) * lap_v / p.initial_profile(r)?)
}

/// Arc length, warping function, curvature and volume density of one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryProfile {
    pub time: f64,
    pub radii: Vec<f64>,
    pub arc_length: Vec<f64>,
    pub warping: Vec<f64>,
    pub conformal_factor: Vec<f64>,
    /// Interior nodes only (length `N - 2`).
    pub scal: Vec<f64>,
    pub vol_density: Vec<f64>,
    pub inner_length: f64,
    pub outer_length: f64,
}

impl GeometryProfile {
    pub fn new(field: &RadialField, p: &FlowParams) -> Result<Self> {
        p.require_geometry()?;
        let n = p.dim();
        let arc_length = arc_length_profile(field, p.n());
        let warping = warping_function(field, p.n());
        let conformal_factor = field.values.iter().map(|&u| u.powf(4.0 / (n + 2.0))).collect();
        let vol_density = field.values.iter().map(|&u| u.powf(2.0 * n / (n + 2.0))).collect();
        Ok(Self {
            time: field.time,
            radii: field.grid.nodes().to_vec(),
            inner_length: arc_length[0],
            outer_length: *arc_length.last().unwrap(),
            arc_length,
            warping,
            conformal_factor,
            scal: curvature_values(field, n),
            vol_density,
        })
    }

    /// Curvature at node `i`, `NaN` on the boundary nodes.
    pub fn scal_at(&self, i: usize) -> f64 {
        if i == 0 || i + 1 >= self.radii.len() {
            f64::NAN
        } else {
            self.scal[i - 1]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EndId {
    /// `r → ∞`, asymptotically Euclidean.
    Outer,
    /// `r → 0`, asymptotically conical.
    Inner,
}

impl EndId {
    pub fn label(self) -> &'static str {
        match self {
            EndId::Outer => "E1",
            EndId::Inner => "E2",
        }
    }

    fn name(self) -> &'static str {
        match self {
            EndId::Outer => "outer",
            EndId::Inner => "inner",
        }
    }

    fn window(self, grid: &RadialGrid) -> Result<Vec<usize>> {
        let idx = match self {
            EndId::Outer => grid.outer_decade(END_SKIP),
            EndId::Inner => grid.inner_decade(END_SKIP),
        };
        if idx.len() < MIN_FIT_NODES {
            return Err(Error::InvalidGrid(format!(
                "the {} end window has {} nodes, need at least {MIN_FIT_NODES}",
                self.name(),
                idx.len()
            )));
        }
        Ok(idx)
    }
}

/// Power-law exponent of the length density on one end window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndCompleteness {
    /// Least-squares slope of `ln u^{2/(n+2)}` against `ln r`.
    pub exponent: f64,
    /// Range of the node-to-node exponents over the window.
    pub spread: f64,
    /// Divergent length toward the end.
    pub complete: bool,
    /// Exponent within `10⁻⁶` of the threshold `-1`.
    pub borderline: bool,
    /// Truncated signed length `ρ(r_min)` or `ρ(r_max)`.
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Completeness {
    pub inner: EndCompleteness,
    pub outer: EndCompleteness,
}

impl Completeness {
    pub fn complete(&self) -> bool {
        self.inner.complete && self.outer.complete
    }
}

fn end_exponent(field: &RadialField, n: f64, end: EndId) -> Result<(f64, f64)> {
    let idx = end.window(&field.grid)?;
    let r = field.grid.nodes();
    let pts: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| (r[i].ln(), length_density(field.values[i], n).ln()))
        .collect();
    let local: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let spread = local.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - local.iter().copied().fold(f64::INFINITY, f64::min);
    let len = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / len, a.1 + p.1 / len));
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    if spread > EXPONENT_SPREAD_LIMIT {
        return Err(Error::FitUnstable {
            end: end.name(),
            spread,
            limit: EXPONENT_SPREAD_LIMIT,
        });
    }
    Ok((exponent, spread))
}

/// Classifies both ends: the inner length diverges iff the density exponent
/// is `≤ -1`, the outer one iff it is `≥ -1`.
pub fn completeness_indicator(field: &RadialField, p: &FlowParams) -> Result<Completeness> {
    p.require_geometry()?;
    let n = p.dim();
    let rho = arc_length_profile(field, p.n());
    let classify = |end: EndId, length: f64| -> Result<EndCompleteness> {
        let (exponent, spread) = end_exponent(field, n, end)?;
        let borderline = (exponent + 1.0).abs() < 1e-6;
        let complete = borderline
            || match end {
                EndId::Inner => exponent < -1.0,
                EndId::Outer => exponent > -1.0,
            };
        Ok(EndCompleteness {
            exponent,
            spread,
            complete,
            borderline,
            length,
        })
    };
    Ok(Completeness {
        inner: classify(EndId::Inner, rho[0])?,
        outer: classify(EndId::Outer, *rho.last().unwrap())?,
    })
}

/// `√B = |2λ/(n+2) - 1|` and `τ = ((n-6)λ/(n+2) + 2) / (2λ/(n+2) - 1)`.
pub fn cone_constants(p: &FlowParams) -> (f64, f64) {
    let (n, lambda) = (p.dim(), p.lambda());
    let q = 2.0 * lambda / (n + 2.0) - 1.0;
    (q.abs(), ((n - 6.0) * lambda / (n + 2.0) + 2.0) / q)
}

/// `m λ - 2`, the order of the Euclidean end.
pub fn euclidean_order(p: &FlowParams) -> f64 {
    p.m() * p.lambda() - 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndFit {
    pub time: f64,
    pub end: EndId,
    /// `√B̂` for the inner end; 1 (pinned) for the outer end.
    pub slope: f64,
    /// Fitted decay order; `None` when the end is exactly a cone or flat.
    pub order: Option<f64>,
    pub ref_slope: f64,
    pub ref_order: f64,
    pub residual: f64,
    /// Shift `R` with `ρ̃ = ρ + R` (outer) or `ρ̃ = -ρ + R` (inner).
    pub shift: f64,
    pub nodes: usize,
}

impl EndFit {
    /// Fitted and reference orders have opposite signs.
    pub fn sign_disagrees(&self) -> bool {
        self.order.is_some_and(|o| o * self.ref_order < 0.0)
    }
}

/// Fits `√F = s ρ̃ + C ρ̃^{-(q+1)}` over the end's outermost decade and
/// reports `q` as the order: for the outer end `F - ρ̃² ~ ρ̃^{-q}`, for the
/// inner end `√F - √B ρ̃ ~ ρ̃^{-(q+1)}`.
pub fn fit_end_asymptotics(field: &RadialField, end: EndId, p: &FlowParams) -> Result<EndFit> {
    p.require_geometry()?;
    let n = p.dim();
    end_exponent(field, n, end)?;
    let idx = end.window(&field.grid)?;
    let rho = arc_length_profile(field, p.n());
    let warp = warping_function(field, p.n());
    let (sign, pinned, ref_slope, ref_order) = match end {
        EndId::Outer => (1.0, Some(1.0), 1.0, euclidean_order(p)),
        EndId::Inner => {
            let (sb, tau) = cone_constants(p);
            (-1.0, None, sb, tau)
        }
    };
    let x: Vec<f64> = idx.iter().map(|&i| sign * rho[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| warp[i].sqrt()).collect();
    let tail = fit::fit_power_tail(&x, &y, pinned).ok_or_else(|| Error::FitUnstable {
        end: end.name(),
        spread: f64::NAN,
        limit: EXPONENT_SPREAD_LIMIT,
    })?;
    Ok(EndFit {
        time: field.time,
        end,
        slope: tail.slope,
        order: tail.exponent.map(|q| q - 1.0),
        ref_slope,
        ref_order,
        residual: tail.residual,
        shift: tail.shift,
        nodes: idx.len(),
    })
}

/// Discrete `∂_t u - Δ(u^m)` at one stored time.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResidual {
    pub time: f64,
    /// Interior nodes (length `N - 2`).
    pub values: Vec<f64>,
    pub max_abs: f64,
    /// `max |R| / u`.
    pub max_rel: f64,
}

/// Residual of the flow equation with a three-point time difference at
/// every interior stored time. For a backward-Euler trajectory this is
/// first order in the step.
pub fn yamabe_flow_residual(tr: &Trajectory) -> Result<Vec<FlowResidual>> {
    let p = &tr.params;
    if !p.is_critical() {
        p.require_geometry()?;
    }
    if tr.len() < 3 {
        return Err(Error::InvalidParams(format!(
            "flow residual needs at least 3 stored times, got {}",
            tr.len()
        )));
    }
    let (n, m) = (p.dim(), p.m());
    let grid = &tr.grid;
    let mut out = Vec::with_capacity(tr.len() - 2);
    for k in 1..tr.len() - 1 {
        let (a, b, c) = (&tr.fields[k - 1], &tr.fields[k], &tr.fields[k + 1]);
        let h1 = b.time - a.time;
        let h2 = c.time - b.time;
        let (wa, wb, wc) = (
            -h2 / (h1 * (h1 + h2)),
            (h2 - h1) / (h1 * h2),
            h1 / (h2 * (h1 + h2)),
        );
        let w: Vec<f64> = b.values.iter().map(|&u| u.powf(m)).collect();
        let lap = radial_laplacian_values(grid, n, &w);
        let values: Vec<f64> = (1..grid.len() - 1)
            .map(|i| wa * a.values[i] + wb * b.values[i] + wc * c.values[i] - lap[i - 1])
            .collect();
        let max_abs = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let max_rel = values
            .iter()
            .zip(&b.values[1..])
            .fold(0.0f64, |acc, (v, u)| acc.max(v.abs() / u));
        out.push(FlowResidual {
            time: b.time,
            values,
            max_abs,
            max_rel,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeLimits {
    pub inner: f64,
    pub outer: f64,
    pub inner_target: f64,
    pub outer_target: f64,
}

impl VolumeLimits {
    pub fn inner_error(&self) -> f64 {
        (self.inner - self.inner_target).abs() / self.inner_target
    }
    pub fn outer_error(&self) -> f64 {
        (self.outer - self.outer_target).abs() / self.outer_target
    }
}

/// Least-squares `L` in `q ≈ L + K r^γ`.
fn extrapolate(r: &[f64], q: &[f64], gamma: f64) -> f64 {
    let len = r.len() as f64;
    let z: Vec<f64> = r.iter().map(|x| x.powf(gamma)).collect();
    let (mz, mq) = (z.iter().sum::<f64>() / len, q.iter().sum::<f64>() / len);
    let szq: f64 = z.iter().zip(q).map(|(a, b)| (a - mz) * (b - mq)).sum();
    let szz: f64 = z.iter().map(|a| (a - mz).powi(2)).sum();
    if szz == 0.0 {
        return mq;
    }
    mq - szq / szz * mz
}

/// Extrapolated limits of `r^{2nλ/(n+2)} u^{2n/(n+2)}` as `r → 0` and of
/// `u^{2n/(n+2)}` as `r → ∞`. The inner correction is taken as
/// `r^{λ(1-m)-2}`, the decay of the flow's departure from the datum; the
/// outer one as `r^{-mλ}`.
pub fn volume_form_limits(field: &RadialField, p: &FlowParams) -> Result<VolumeLimits> {
    p.require_geometry()?;
    let (n, m, lambda) = (p.dim(), p.m(), p.lambda());
    let e = 2.0 * n / (n + 2.0);
    let r = field.grid.nodes();
    let take = |idx: &[usize], f: &dyn Fn(usize) -> f64| -> (Vec<f64>, Vec<f64>) {
        (idx.iter().map(|&i| r[i]).collect(), idx.iter().map(|&i| f(i)).collect())
    };
    let inner_idx = EndId::Inner.window(&field.grid)?;
    let outer_idx = EndId::Outer.window(&field.grid)?;
    let (ri, qi) = take(&inner_idx, &|i| r[i].powf(e * lambda) * field.values[i].powf(e));
    let (ro, qo) = take(&outer_idx, &|i| field.values[i].powf(e));
    Ok(VolumeLimits {
        inner: extrapolate(&ri, &qi, lambda * (1.0 - m) - 2.0),
        outer: extrapolate(&ro, &qo, -m * lambda),
        inner_target: p.c1().powf(e),
        outer_target: p.c2().powf(e),
    })
}

/// `Vol(Sⁿ) = 2π^{(n+1)/2} / Γ((n+1)/2)`, with Γ at integers and half
/// integers from the recurrence `Γ(x+1) = x Γ(x)`.
pub fn sphere_volume(n: u32) -> f64 {
    let pi = std::f64::consts::PI;
    let twice = n + 1; // 2 · (n+1)/2
    let (mut x, mut gamma) = if twice.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, pi.sqrt()) };
    while x < f64::from(twice) / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * pi.powf(f64::from(twice) / 2.0) / gamma
}

/// `Y(Sⁿ) = n(n-1) Vol(Sⁿ)^{2/n}`, the Yamabe constant of the round
/// sphere and of every slice of the flow.
pub fn yamabe_constant_sphere(n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("n = {n} violates n >= 3")));
    }
    let nf = f64::from(n);
    Ok(nf * (nf - 1.0) * sphere_volume(n).powf(2.0 / nf))
}

/// Harmonic steady state `w^m = α + β r^{2-n}` of the truncated problem
/// with the given Dirichlet values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub alpha: f64,
    pub beta: f64,
    pub dim: f64,
    pub m: f64,
}

impl SteadyState {
    pub fn new(n: f64, m: f64, (r0, u0): (f64, f64), (r1, u1): (f64, f64)) -> Self {
        let (z0, z1) = (r0.powf(2.0 - n), r1.powf(2.0 - n));
        let (w0, w1) = (u0.powf(m), u1.powf(m));
        let beta = (w0 - w1) / (z0 - z1);
        let alpha = w1 - beta * z1;
        Self { alpha, beta, dim: n, m }
    }

    /// Steady state of the annulus `[r_min, r_max]` pinned to the datum.
    pub fn for_annulus(p: &FlowParams, r_min: f64, r_max: f64) -> Result<Self> {
        Ok(Self::new(
            p.dim(),
            p.m(),
            (r_min, p.initial_profile(r_min)?),
            (r_max, p.initial_profile(r_max)?),
        ))
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.alpha + self.beta * r.powf(2.0 - self.dim)).powf(1.0 / self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowdownRow {
    pub t: f64,
    /// `max |u - c2|` on the window.
    pub deviation: f64,
    /// `max |∂_r u|` on the window.
    pub gradient: f64,
    /// `max |∂_r² u|` on the window.
    pub curvature: f64,
    /// `max |u - w| / w` against the steady state.
    pub steady_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowdownReport {
    pub window: (f64, f64),
    pub steady: SteadyState,
    pub rows: Vec<BlowdownRow>,
}

impl BlowdownReport {
    /// Largest relative increase of a metric between consecutive times.
    pub fn max_increase(&self, metric: impl Fn(&BlowdownRow) -> f64) -> f64 {
        self.rows
            .windows(2)
            .map(|w| {
                let (a, b) = (metric(&w[0]), metric(&w[1]));
                ((b - a) / a.abs().max(f64::MIN_POSITIVE)).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// `max_window (w - c2)`, the steady state's distance from `c2`.
    pub fn steady_excess(&self, grid: &RadialGrid, c2: f64) -> f64 {
        grid.window(self.window.0, self.window.1)
            .iter()
            .map(|&i| self.steady.value(grid.nodes()[i]) - c2)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-time window metrics of the approach to `c2` on `[ra, rb]`.
pub fn blowdown_diagnostics(tr: &Trajectory, ra: f64, rb: f64) -> Result<BlowdownReport> {
    let grid = &tr.grid;
    let r = grid.nodes();
    if !(ra < rb && ra > r[0] && rb < r[r.len() - 1]) {
        return Err(Error::InvalidParams(format!(
            "window [{ra}, {rb}] must lie strictly inside ({}, {})",
            r[0],
            r[r.len() - 1]
        )));
    }
    let idx = grid.window(ra, rb);
    if idx.is_empty() {
        return Err(Error::InvalidGrid(format!("no nodes in [{ra}, {rb}]")));
    }
    let steady = match tr.bc {
        BcKind::Pinned { inner, outer } => {
            SteadyState::new(tr.params.dim(), tr.params.m(), (r[0], inner), (r[r.len() - 1], outer))
        }
        BcKind::Ball { .. } => {
            return Err(Error::InvalidGrid("the steady-state oracle needs an annulus".into()));
        }
    };
    let c2 = tr.params.c2();
    let rows = tr
        .fields
        .iter()
        .map(|f| {
            let du = radial_gradient_values(grid, &f.values);
            let d2u = radial_second_derivative_values(grid, &f.values);
            let max_over = |g: &dyn Fn(usize) -> f64| idx.iter().map(|&i| g(i)).fold(0.0f64, f64::max);
            BlowdownRow {
                t: f.time,
                deviation: max_over(&|i| (f.values[i] - c2).abs()),
                gradient: max_over(&|i| du[i - 1].abs()),
                curvature: max_over(&|i| d2u[i - 1].abs()),
                steady_gap: max_over(&|i| {
                    let w = steady.value(r[i]);
                    (f.values[i] - w).abs() / w
                }),
            }
        })
        .collect();
    Ok(BlowdownReport {
        window: (ra, rb),
        steady,
        rows,
    })
}

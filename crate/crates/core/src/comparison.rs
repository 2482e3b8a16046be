//! Closed-form comparison functions for the singular problem.
//!
//! The supersolution is the initial datum itself. The subsolution is glued
//! from three pieces:
//!
//! ```text
//! w_in  = c1 [r^{-mλ} - a(t) r^{-mν}]_+^{1/m}     0 < r ≤ ρ(t)
//! w_out = c1 b(t)^{1/m} r^{-μ}                    ρ(t) < r ≤ σ(t)
//! c2                                              r > σ(t)
//! ```
//!
//! with `a = A e^t`, `ρ = (δ/a)^{1/(m(λ-ν))}`, `b = (1-δ) ρ^{m(μ-λ)}` and
//! `σ = (c1/c2)^{1/μ} b^{1/(mμ)}`. For moderate `A` the interfaces sit far
//! below `10⁻¹⁰` and `b^{1/m}` underflows, so every quantity is carried as
//! a logarithm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::params::FlowParams;
use crate::solver::verify::{Clause, ClauseReport, ClauseRow};
use crate::solver::Trajectory;

/// Relative exclusion band around `ρ(t)` and `σ(t)` for smooth-region samples.
pub const INTERFACE_MARGIN: f64 = 1e-3;
/// Residual bound, relative to the sum of magnitudes of the residual terms.
pub const RESIDUAL_TOL: f64 = 1e-8;

const A_SEARCH_MAX: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsolutionConfig {
    pub nu: f64,
    pub mu: f64,
    pub delta: f64,
    #[serde(rename = "A")]
    pub amplitude: f64,
}

/// Open intervals for `ν`, `μ` and (given those) `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantWindows {
    pub nu: (f64, f64),
    pub mu: (f64, f64),
}

impl ConstantWindows {
    pub fn new(p: &FlowParams) -> Self {
        let (m, lambda, n) = (p.m(), p.lambda(), p.dim());
        let nu_lo = lambda - (2.0 / m) * (0.5 * lambda * (1.0 - m) - 1.0);
        Self {
            nu: (nu_lo, lambda),
            mu: ((n - 2.0) / m, (2.0 * n - 2.0) / m),
        }
    }

    pub fn delta(nu: f64, mu: f64, lambda: f64) -> (f64, f64) {
        ((mu - lambda) / (mu - nu), 1.0)
    }
}

impl SubsolutionConfig {
    /// Checks the constant windows and both largeness conditions on `A`.
    pub fn validate(&self, p: &FlowParams) -> Result<()> {
        let w = ConstantWindows::new(p);
        let inside = |x: f64, (lo, hi): (f64, f64)| x > lo && x < hi;
        if !inside(self.nu, w.nu) {
            return Err(Error::InfeasibleWindow(format!("nu = {} outside ({}, {})", self.nu, w.nu.0, w.nu.1)));
        }
        if !inside(self.mu, w.mu) {
            return Err(Error::InfeasibleWindow(format!("mu = {} outside ({}, {})", self.mu, w.mu.0, w.mu.1)));
        }
        let dw = ConstantWindows::delta(self.nu, self.mu, p.lambda());
        if !inside(self.delta, dw) {
            return Err(Error::InfeasibleWindow(format!(
                "delta = {} outside ({}, 1)",
                self.delta, dw.0
            )));
        }
        if !(self.amplitude > 1.0) || !self.amplitude_admissible(p, self.amplitude) {
            return Err(Error::InfeasibleWindow(format!("A = {} is not large enough", self.amplitude)));
        }
        Ok(())
    }

    fn inner_rate(&self, p: &FlowParams) -> f64 {
        p.m() * (p.lambda() - self.nu)
    }

    /// Left side of the condition guaranteeing `ρ < σ`, scaled by
    /// `δ^{-1/(m(λ-ν))}` so that it is positive exactly when the condition holds.
    pub fn separation_margin(&self, p: &FlowParams, amplitude: f64) -> f64 {
        let (m, lambda, mu, delta) = (p.m(), p.lambda(), self.mu, self.delta);
        let l = self.inner_rate(p);
        let ln_first = (p.c1().ln() - p.c2().ln()) / mu
            + (1.0 - delta).ln() / (m * mu)
            + delta.ln() * (mu - lambda) / (l * mu)
            + amplitude.ln() * lambda / (l * mu);
        let ln_second = delta.ln() / l;
        (ln_first - ln_second).exp_m1()
    }

    /// `c1^{1-m} A (1-δ)^{1/m-1} - n m² λ`.
    pub fn inner_residual_margin(&self, p: &FlowParams, amplitude: f64) -> f64 {
        let m = p.m();
        p.c1().powf(1.0 - m) * amplitude * (1.0 - self.delta).powf(1.0 / m - 1.0) - p.dim() * m * m * p.lambda()
    }

    fn amplitude_admissible(&self, p: &FlowParams, amplitude: f64) -> bool {
        let sep = p.c2() == 0.0 || self.separation_margin(p, amplitude) > 0.0;
        amplitude > 1.0 && sep && self.inner_residual_margin(p, amplitude) > 0.0
    }

    pub fn state(&self, p: &FlowParams, t: f64) -> SubsolutionState {
        SubsolutionState::new(p, self, t)
    }
}

/// Midpoint constants and `A = (1 + margin) A*`, where `A*` is the smallest
/// amplitude in `[1, 10¹²]` meeting both largeness conditions.
pub fn pick_admissible_config(p: &FlowParams, margin: f64) -> Result<SubsolutionConfig> {
    if p.is_degenerate() {
        return Err(Error::InfeasibleWindow("the subsolution needs c1 > 0".into()));
    }
    if !(margin > 0.0) {
        return Err(Error::Config(format!("amplitude margin = {margin} must be positive")));
    }
    let w = ConstantWindows::new(p);
    let mid = |(lo, hi): (f64, f64)| 0.5 * (lo + hi);
    let nu = mid(w.nu);
    let mu = mid(w.mu);
    let dw = ConstantWindows::delta(nu, mu, p.lambda());
    let delta = mid(dw);
    for (name, x, (lo, hi)) in [("nu", nu, w.nu), ("mu", mu, w.mu), ("delta", delta, dw)] {
        if !(x > lo && x < hi) {
            return Err(Error::InfeasibleWindow(format!("{name} window ({lo}, {hi}) is empty")));
        }
    }
    let mut cfg = SubsolutionConfig {
        nu,
        mu,
        delta,
        amplitude: 1.0,
    };
    let ok = |a: f64| cfg.amplitude_admissible(p, a);
    if !ok(A_SEARCH_MAX) {
        return Err(Error::InfeasibleWindow(format!(
            "no amplitude A <= {A_SEARCH_MAX:e} satisfies the largeness conditions"
        )));
    }
    let threshold = if ok(1.0 + f64::EPSILON) {
        1.0
    } else {
        let (mut lo, mut hi) = (1.0f64, A_SEARCH_MAX);
        // bisect in log space: A* can sit anywhere in twelve decades
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi / lo - 1.0 < 1e-14 {
                break;
            }
        }
        hi
    };
    cfg.amplitude = (1.0 + margin) * threshold;
    cfg.validate(p)?;
    Ok(cfg)
}

/// Time-dependent quantities of the subsolution, as natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolutionState {
    pub t: f64,
    pub ln_a: f64,
    pub ln_rho: f64,
    pub ln_b: f64,
    /// `None` when `c2 = 0`.
    pub ln_sigma: Option<f64>,
}

impl SubsolutionState {
    pub fn new(p: &FlowParams, cfg: &SubsolutionConfig, t: f64) -> Self {
        let m = p.m();
        let l = cfg.inner_rate(p);
        let ln_a = cfg.amplitude.ln() + t;
        let ln_rho = (cfg.delta.ln() - ln_a) / l;
        let ln_b = (1.0 - cfg.delta).ln() + m * (cfg.mu - p.lambda()) * ln_rho;
        let ln_sigma = (p.c2() > 0.0).then(|| (p.c1().ln() - p.c2().ln()) / cfg.mu + ln_b / (m * cfg.mu));
        Self {
            t,
            ln_a,
            ln_rho,
            ln_b,
            ln_sigma,
        }
    }

    pub fn a(&self) -> f64 {
        self.ln_a.exp()
    }
    pub fn rho(&self) -> f64 {
        self.ln_rho.exp()
    }
    pub fn b(&self) -> f64 {
        self.ln_b.exp()
    }
    pub fn sigma(&self) -> Option<f64> {
        self.ln_sigma.map(f64::exp)
    }
}

/// Which closed-form piece of the subsolution is active at a radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    Inner,
    Middle,
    Outer,
}

impl SubsolutionState {
    pub fn piece(&self, r: f64) -> Piece {
        let ln_r = r.ln();
        if ln_r <= self.ln_rho {
            Piece::Inner
        } else if self.ln_sigma.is_none_or(|s| ln_r <= s) {
            Piece::Middle
        } else {
            Piece::Outer
        }
    }

    /// `ln w_in(r)`; `-∞` where the bracket is not positive.
    pub fn ln_w_in(&self, p: &FlowParams, cfg: &SubsolutionConfig, r: f64) -> f64 {
        let m = p.m();
        let ln_r = r.ln();
        let q = (self.ln_a + cfg.inner_rate(p) * ln_r).exp();
        if q >= 1.0 {
            return f64::NEG_INFINITY;
        }
        p.c1().ln() - p.lambda() * ln_r + (-q).ln_1p() / m
    }

    pub fn ln_w_out(&self, p: &FlowParams, cfg: &SubsolutionConfig, r: f64) -> f64 {
        p.c1().ln() + self.ln_b / p.m() - cfg.mu * r.ln()
    }

    pub fn ln_value(&self, p: &FlowParams, cfg: &SubsolutionConfig, r: f64) -> f64 {
        match self.piece(r) {
            Piece::Inner => self.ln_w_in(p, cfg, r),
            Piece::Middle => self.ln_w_out(p, cfg, r),
            Piece::Outer => p.c2().ln(),
        }
    }
}

/// `ū(r, t) = u₀(r)`.
pub fn supersolution(p: &FlowParams, r: f64, _t: f64) -> Result<f64> {
    p.initial_profile(r)
}

/// `∂_t ū - Δū^m = c1^m mλ(n-2-mλ) r^{-mλ-2}`, which is nonnegative.
pub fn supersolution_defect(p: &FlowParams, r: f64) -> f64 {
    let (m, lambda, n) = (p.m(), p.lambda(), p.dim());
    p.c1().powf(m) * m * lambda * (n - 2.0 - m * lambda) * r.powf(-m * lambda - 2.0)
}

pub fn subsolution(p: &FlowParams, cfg: &SubsolutionConfig, r: f64, t: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("radius must be positive, got {r}")));
    }
    Ok(cfg.state(p, t).ln_value(p, cfg, r).exp())
}

/// Closed-form `∂_t ŭ - Δŭ^m` of the active piece, returned as
/// `(residual, scale)` after division by a positive normalization; `scale`
/// is the sum of magnitudes of the individual terms.
pub fn subsolution_residual(p: &FlowParams, cfg: &SubsolutionConfig, st: &SubsolutionState, r: f64) -> (f64, f64) {
    let (m, lambda, n, c1) = (p.m(), p.lambda(), p.dim(), p.c1());
    let (nu, mu) = (cfg.nu, cfg.mu);
    let ln_r = r.ln();
    match st.piece(r) {
        Piece::Inner => {
            // divided by c1^m r^{-mλ-2}; q = a r^{m(λ-ν)}
            let q = (st.ln_a + cfg.inner_rate(p) * ln_r).exp();
            let t1 = -(c1.powf(1.0 - m) / m)
                * q
                * (1.0 - q).powf(1.0 / m - 1.0)
                * ((2.0 - lambda * (1.0 - m)) * ln_r).exp();
            let t2 = -m * lambda * (m * lambda + 2.0 - n);
            let t3 = q * m * nu * (m * nu + 2.0 - n);
            (t1 + t2 + t3, t1.abs() + t2.abs() + t3.abs())
        }
        Piece::Middle => {
            // divided by c1^m b r^{-mμ-2}; b'/b = -(μ-λ)/(λ-ν)
            let rate = -(mu - lambda) / (lambda - nu);
            let t1 = (c1.powf(1.0 - m) / m)
                * rate
                * ((1.0 / m - 1.0) * st.ln_b + (2.0 - mu * (1.0 - m)) * ln_r).exp();
            let t2 = -m * mu * (m * mu + 2.0 - n);
            (t1 + t2, t1.abs() + t2.abs())
        }
        Piece::Outer => (0.0, 1.0),
    }
}

/// `∂_r w_in^m - ∂_r w_out^m` at `r = ρ(t)`, divided by `c1^m ρ^{-mλ-1}`.
/// Negative for an admissible configuration.
pub fn rho_jump(p: &FlowParams, cfg: &SubsolutionConfig, st: &SubsolutionState) -> f64 {
    let m = p.m();
    let lambda = p.lambda();
    let q = (st.ln_a + cfg.inner_rate(p) * st.ln_rho).exp();
    let s = (st.ln_b + m * (lambda - cfg.mu) * st.ln_rho).exp();
    let d_in = -m * lambda + m * cfg.nu * q;
    let d_out = -m * cfg.mu * s;
    d_in - d_out
}

/// `∂_r w_out^m` at `r = σ(t)`, divided by `c2^m / σ`. Negative.
pub fn sigma_slope(p: &FlowParams, cfg: &SubsolutionConfig, st: &SubsolutionState) -> Option<f64> {
    let m = p.m();
    st.ln_sigma.map(|ln_s| {
        let ln_ratio = m * p.c1().ln() + st.ln_b - m * cfg.mu * ln_s - m * p.c2().ln();
        -m * cfg.mu * ln_ratio.exp()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    ResidualIn,
    ResidualMid,
    ResidualOut,
    MatchRho,
    MatchSigma,
    InitOrder,
}

impl CheckKind {
    pub fn label(self) -> &'static str {
        match self {
            CheckKind::ResidualIn => "residual_in",
            CheckKind::ResidualMid => "residual_mid",
            CheckKind::ResidualOut => "residual_out",
            CheckKind::MatchRho => "match_rho",
            CheckKind::MatchSigma => "match_sigma",
            CheckKind::InitOrder => "init_order",
        }
    }
}

/// One check; passes when `quantity ≤ bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckRow {
    pub kind: CheckKind,
    pub r: f64,
    pub t: f64,
    pub quantity: f64,
    pub bound: f64,
}

impl CheckRow {
    pub fn pass(&self) -> bool {
        self.quantity <= self.bound
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubsolutionReport {
    pub rows: Vec<CheckRow>,
}

impl SubsolutionReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(CheckRow::pass)
    }

    pub fn count(&self, kind: CheckKind) -> usize {
        self.rows.iter().filter(|r| r.kind == kind).count()
    }

    pub fn worst(&self, kind: CheckKind) -> Option<&CheckRow> {
        self.rows
            .iter()
            .filter(|r| r.kind == kind)
            .max_by(|a, b| (a.quantity - a.bound).total_cmp(&(b.quantity - b.bound)))
    }

    pub fn violations(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.pass())
    }
}

/// `count` equally spaced times on `[0, t_end]`.
pub fn sample_times(t_end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|k| t_end * k as f64 / (count - 1) as f64).collect(),
    }
}

/// Sample radii at time `t`: the mesh nodes plus 32 log-spaced points in
/// each of `[ρ/10⁶, ρ)` and `(ρ, σ)`, minus the interface bands.
pub fn sample_radii(st: &SubsolutionState, grid: &RadialGrid) -> Vec<f64> {
    let ln_rho = st.ln_rho;
    let ln_top = st.ln_sigma.unwrap_or(ln_rho + 6.0 * std::f64::consts::LN_10);
    let spread = |lo: f64, hi: f64| (1..=32).map(move |k| (lo + (hi - lo) * k as f64 / 33.0).exp());
    let mut out: Vec<f64> = grid.nodes().iter().copied().filter(|&r| r > 0.0).collect();
    out.extend(spread(ln_rho - 6.0 * std::f64::consts::LN_10, ln_rho));
    out.extend(spread(ln_rho, ln_top));
    let keep = |r: f64| {
        let near = |ln_x: f64| {
            let x = ln_x.exp();
            (r - x).abs() < INTERFACE_MARGIN * x
        };
        !near(ln_rho) && !st.ln_sigma.is_some_and(near)
    };
    out.retain(|&r| keep(r));
    out.sort_by(f64::total_cmp);
    out
}

/// Residual signs on the smooth pieces, interface jump signs and the
/// initial ordering `ŭ(·,0) ≤ u₀`. Residual rows keep the worst sample per
/// piece and time.
pub fn verify_subsolution(
    p: &FlowParams,
    cfg: &SubsolutionConfig,
    grid: &RadialGrid,
    times: &[f64],
) -> Result<SubsolutionReport> {
    let mut rows = Vec::new();
    for &t in times {
        let st = cfg.state(p, t);
        let radii = sample_radii(&st, grid);
        let mut worst: [Option<CheckRow>; 3] = [None; 3];
        for &r in &radii {
            let (kind, slot) = match st.piece(r) {
                Piece::Inner => (CheckKind::ResidualIn, 0),
                Piece::Middle => (CheckKind::ResidualMid, 1),
                Piece::Outer => (CheckKind::ResidualOut, 2),
            };
            let (res, scale) = subsolution_residual(p, cfg, &st, r);
            let row = CheckRow {
                kind,
                r,
                t,
                quantity: res / scale,
                bound: RESIDUAL_TOL,
            };
            if worst[slot].is_none_or(|w| row.quantity > w.quantity) {
                worst[slot] = Some(row);
            }
        }
        rows.extend(worst.into_iter().flatten());

        rows.push(CheckRow {
            kind: CheckKind::MatchRho,
            r: st.rho(),
            t,
            quantity: rho_jump(p, cfg, &st),
            bound: 0.0,
        });
        if let (Some(slope), Some(sigma)) = (sigma_slope(p, cfg, &st), st.sigma()) {
            rows.push(CheckRow {
                kind: CheckKind::MatchSigma,
                r: sigma,
                t,
                quantity: slope,
                bound: 0.0,
            });
        }

        if t == 0.0 {
            let mut row = CheckRow {
                kind: CheckKind::InitOrder,
                r: radii[0],
                t,
                quantity: f64::NEG_INFINITY,
                bound: 0.0,
            };
            for &r in &radii {
                let lower = st.ln_value(p, cfg, r);
                let upper = p.ln_initial_profile(r)?;
                let gap = (lower - upper).exp() - 1.0;
                if gap > row.quantity {
                    row.quantity = gap;
                    row.r = r;
                }
            }
            rows.push(row);
        }
    }
    Ok(SubsolutionReport { rows })
}

/// Relative sandwich violations at every stored time:
/// `max (ŭ - u)/ū` and `max (u - ū)/ū`, each against `tol`.
pub fn verify_sandwich(tr: &Trajectory, cfg: &SubsolutionConfig, tol: f64) -> Result<ClauseReport> {
    let p = tr.params;
    let r = tr.grid.nodes();
    let upper: Vec<f64> = r.iter().map(|&x| p.initial_profile(x)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(2 * tr.len());
    for field in &tr.fields {
        let st = cfg.state(&p, field.time);
        let mut below: f64 = f64::NEG_INFINITY;
        let mut above: f64 = f64::NEG_INFINITY;
        for ((&x, &u), &ub) in r.iter().zip(&field.values).zip(&upper) {
            let lb = st.ln_value(&p, cfg, x).exp();
            below = below.max((lb - u) / ub);
            above = above.max((u - ub) / ub);
        }
        rows.push(ClauseRow {
            t: field.time,
            clause: Clause::SandwichLower,
            metric: below,
            tolerance: tol,
        });
        rows.push(ClauseRow {
            t: field.time,
            clause: Clause::SandwichUpper,
            metric: above,
            tolerance: tol,
        });
    }
    Ok(ClauseReport { rows })
}

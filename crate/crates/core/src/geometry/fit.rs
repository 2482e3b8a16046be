//! Variable-projection fit of an end profile
//!
//! ```text
//! y = s (x + R) + C (x + R)^{-p}
//! ```
//!
//! for large `x`. For fixed `p` the model is linear in `(s, sR, C)`; the
//! shift is then updated as `R = (sR)/s` until it settles. The exponent is
//! found by a coarse scan followed by golden-section refinement.

use nalgebra::{DMatrix, DVector};

/// Relative RMS residual below which a straight line already explains the
/// data and the decay exponent is not identifiable.
pub const ROUNDING_RESIDUAL: f64 = 1e-13;

const P_MIN: f64 = 0.25;
const P_MAX: f64 = 12.0;
const P_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub shift: f64,
    pub amplitude: f64,
    /// Decay exponent `p`; `None` when the straight line fits to rounding.
    pub exponent: Option<f64>,
    /// Relative RMS residual of the chosen model.
    pub residual: f64,
    /// Relative RMS residual of the straight-line fit.
    pub line_residual: f64,
}

fn rel_rms(y: &[f64], model: impl Fn(usize) -> f64) -> f64 {
    let s: f64 = y.iter().enumerate().map(|(i, &v)| ((v - model(i)) / v).powi(2)).sum();
    (s / y.len() as f64).sqrt()
}

fn lstsq(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    // column scaling keeps the triangular solve well conditioned
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    if norms.iter().any(|&n| !(n > 0.0) || !n.is_finite()) {
        return None;
    }
    let mut scaled = a;
    for (j, &n) in norms.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(n);
    }
    let qr = scaled.qr();
    let qtb = qr.q().transpose() * b;
    let mut x = qr.r().solve_upper_triangular(&qtb)?;
    for (j, &n) in norms.iter().enumerate() {
        x[j] /= n;
    }
    Some(x)
}

/// Fit for a fixed exponent. `slope = Some(s)` pins the slope.
fn fit_fixed(x: &[f64], y: &[f64], slope: Option<f64>, p: f64, r0: f64) -> Option<(f64, f64, f64, f64)> {
    let len = x.len();
    let mut shift = r0;
    let mut out = None;
    for _ in 0..100 {
        if x.iter().any(|&v| !(v + shift > 0.0)) {
            return None;
        }
        let phi: Vec<f64> = x.iter().map(|&v| (v + shift).powf(-p)).collect();
        let (s, c, amp) = match slope {
            Some(s) => {
                let a = DMatrix::from_fn(len, 2, |i, j| if j == 0 { 1.0 } else { phi[i] });
                let b = DVector::from_fn(len, |i, _| y[i] - s * x[i]);
                let sol = lstsq(a, b)?;
                (s, sol[0], sol[1])
            }
            None => {
                let a = DMatrix::from_fn(len, 3, |i, j| match j {
                    0 => x[i],
                    1 => 1.0,
                    _ => phi[i],
                });
                let b = DVector::from_column_slice(y);
                let sol = lstsq(a, b)?;
                (sol[0], sol[1], sol[2])
            }
        };
        let next = c / s;
        let done = (next - shift).abs() <= 1e-14 * (1.0 + next.abs());
        shift = next;
        out = Some((s, shift, amp, rel_rms(y, |i| s * (x[i] + shift) + amp * (x[i] + shift).powf(-p))));
        if done {
            break;
        }
    }
    out
}

/// Straight-line fit `y = s x + c` (or `y = s x + c` with `s` pinned).
fn fit_line(x: &[f64], y: &[f64], slope: Option<f64>) -> Option<(f64, f64, f64)> {
    let len = x.len();
    let (s, c) = match slope {
        Some(s) => {
            let c = x.iter().zip(y).map(|(a, b)| b - s * a).sum::<f64>() / len as f64;
            (s, c)
        }
        None => {
            let a = DMatrix::from_fn(len, 2, |i, j| if j == 0 { x[i] } else { 1.0 });
            let sol = lstsq(a, DVector::from_column_slice(y))?;
            (sol[0], sol[1])
        }
    };
    Some((s, c, rel_rms(y, |i| s * x[i] + c)))
}

/// Fits the model over samples with `x` large and positive.
pub fn fit_power_tail(x: &[f64], y: &[f64], slope: Option<f64>) -> Option<PowerFit> {
    if x.len() < 4 || x.len() != y.len() {
        return None;
    }
    let (s0, c0, line_residual) = fit_line(x, y, slope)?;
    let r0 = c0 / s0;
    if line_residual < ROUNDING_RESIDUAL {
        return Some(PowerFit {
            slope: s0,
            shift: r0,
            amplitude: 0.0,
            exponent: None,
            residual: line_residual,
            line_residual,
        });
    }

    let eval = |p: f64| fit_fixed(x, y, slope, p, r0).map_or(f64::INFINITY, |f| f.3);
    let steps = ((P_MAX - P_MIN) / P_STEP).round() as usize;
    let (best_k, _) = (0..=steps)
        .map(|k| (k, eval(P_MIN + P_STEP * k as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let centre = P_MIN + P_STEP * best_k as f64;

    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = ((centre - P_STEP).max(P_MIN), (centre + P_STEP).min(P_MAX));
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = eval(d);
        }
        if b - a < 1e-10 {
            break;
        }
    }
    let p = 0.5 * (a + b);
    let (s, shift, amplitude, residual) = fit_fixed(x, y, slope, p, r0)?;
    Some(PowerFit {
        slope: s,
        shift,
        amplitude,
        exponent: Some(p),
        residual,
        line_residual,
    })
}

//! Problem constants and initial data.
//!
//! The equation is `u_t = Δ(u^m)` on `ℝⁿ \ {0}` with the singular radial
//! datum `u₀(r) = (c1^m r^{-mλ} + c2^m)^{1/m}`. The admissible window is
//!
//! ```text
//! 0 < m < (n-2)/n,      2/(1-m) < λ < (n-2)/m
//! ```
//!
//! Geometry additionally needs the critical exponent `m = (n-2)/(n+2)`,
//! `(n+2)/2 < λ < n+2` and `c2 > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack applied to every open-window check.
pub const WINDOW_SLACK: f64 = 1e-12;

/// The critical exponent `(n-2)/(n+2)`.
pub fn critical_exponent(n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("dimension n = {n} must be at least 3")));
    }
    let n = f64::from(n);
    Ok((n - 2.0) / (n + 2.0))
}

/// `ln(e^a + e^b)` without overflow; either argument may be `-inf`.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + (-(a - b).abs()).exp().ln_1p()
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn strictly_inside(x: f64, lo: f64, hi: f64) -> bool {
    x > lo + WINDOW_SLACK && x < hi - WINDOW_SLACK
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    n: u32,
    m: f64,
    lambda: f64,
    c1: f64,
    c2: f64,
}

impl FlowParams {
    /// Validates the admissible window.
    ///
    /// `c1 = 0` is accepted as the degenerate constant datum `u₀ ≡ c2`;
    /// the solver short-circuits it and the comparison and geometry layers
    /// refuse it.
    pub fn new(n: u32, m: f64, lambda: f64, c1: f64, c2: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParams(format!("n = {n} violates n >= 3")));
        }
        let nf = f64::from(n);
        if !(m.is_finite() && lambda.is_finite() && c1.is_finite() && c2.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if !strictly_inside(m, 0.0, (nf - 2.0) / nf) {
            return Err(Error::InvalidParams(format!(
                "m = {m} violates 0 < m < (n-2)/n = {}",
                (nf - 2.0) / nf
            )));
        }
        let lam_lo = 2.0 / (1.0 - m);
        let lam_hi = (nf - 2.0) / m;
        if !strictly_inside(lambda, lam_lo, lam_hi) {
            return Err(Error::InvalidParams(format!(
                "lambda = {lambda} violates 2/(1-m) < lambda < (n-2)/m, i.e. {lam_lo} < lambda < {lam_hi}"
            )));
        }
        if c1 < 0.0 {
            return Err(Error::InvalidParams(format!("c1 = {c1} violates c1 >= 0")));
        }
        if c2 < 0.0 {
            return Err(Error::InvalidParams(format!("c2 = {c2} violates c2 >= 0")));
        }
        if c1 == 0.0 && c2 == 0.0 {
            return Err(Error::InvalidParams("c1 = c2 = 0 gives the zero datum".into()));
        }
        Ok(Self { n, m, lambda, c1, c2 })
    }

    /// Parameters with `m` set to the critical exponent of `n`.
    pub fn critical(n: u32, lambda: f64, c1: f64, c2: f64) -> Result<Self> {
        Self::new(n, critical_exponent(n)?, lambda, c1, c2)
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn dim(&self) -> f64 {
        f64::from(self.n)
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// `u₀ ≡ c2`.
    pub fn is_degenerate(&self) -> bool {
        self.c1 == 0.0
    }

    pub fn is_critical(&self) -> bool {
        // n >= 3 was checked on construction
        let mc = (self.dim() - 2.0) / (self.dim() + 2.0);
        (self.m - mc).abs() <= WINDOW_SLACK
    }

    /// Checks the extra hypotheses of the conformal-geometry layer.
    pub fn require_geometry(&self) -> Result<()> {
        if !self.is_critical() {
            let mc = (self.dim() - 2.0) / (self.dim() + 2.0);
            return Err(Error::GeometryRequirement(format!(
                "the critical exponent m = (n-2)/(n+2) = {mc}, got m = {}",
                self.m
            )));
        }
        let nf = self.dim();
        if !strictly_inside(self.lambda, (nf + 2.0) / 2.0, nf + 2.0) {
            return Err(Error::GeometryRequirement(format!(
                "(n+2)/2 < lambda < n+2, got lambda = {}",
                self.lambda
            )));
        }
        if self.c1 <= 0.0 {
            return Err(Error::GeometryRequirement("c1 > 0".into()));
        }
        if self.c2 <= 0.0 {
            return Err(Error::GeometryRequirement("c2 > 0".into()));
        }
        Ok(())
    }

    /// `ln u₀(r)`, computed without forming `r^{-mλ}`.
    pub fn ln_initial_profile(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::InvalidParams(format!("radius r = {r} must be positive")));
        }
        let m = self.m;
        let a = m * ln_or_neg_inf(self.c1) - m * self.lambda * r.ln();
        let b = m * ln_or_neg_inf(self.c2);
        Ok(log_add_exp(a, b) / m)
    }

    /// `u₀(r) = (c1^m r^{-mλ} + c2^m)^{1/m}`.
    pub fn initial_profile(&self, r: f64) -> Result<f64> {
        Ok(self.ln_initial_profile(r)?.exp())
    }

    /// `u₀(r)^m = c1^m r^{-mλ} + c2^m`.
    pub fn initial_profile_pow_m(&self, r: f64) -> Result<f64> {
        Ok((self.m * self.ln_initial_profile(r)?).exp())
    }

    /// `u_{0,ε}(r) = (c1^m (r²+ε)^{-mλ/2} + c2^m + ε)^{1/m}`; finite at `r = 0`.
    pub fn regularized_initial(&self, rc: RegularizationConfig, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::InvalidParams(format!("radius r = {r} must be nonnegative")));
        }
        let m = self.m;
        let eps = rc.epsilon();
        let a = m * ln_or_neg_inf(self.c1) - 0.5 * m * self.lambda * (r * r + eps).ln();
        let b = (self.c2.powf(m) + eps).ln();
        Ok((log_add_exp(a, b) / m).exp())
    }

    /// The ε-uniform upper envelope `(c1^m r^{-mλ} + c2^m + 1)^{1/m}`.
    pub fn regularized_envelope(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::InvalidParams(format!("radius r = {r} must be positive")));
        }
        let m = self.m;
        let a = m * ln_or_neg_inf(self.c1) - m * self.lambda * r.ln();
        let b = (self.c2.powf(m) + 1.0).ln();
        Ok((log_add_exp(a, b) / m).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationConfig {
    epsilon: f64,
}

impl RegularizationConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParams(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> FlowParams {
        FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn critical_exponent_values() {
        assert_relative_eq!(critical_exponent(3).unwrap(), 0.2);
        assert_relative_eq!(critical_exponent(6).unwrap(), 0.5);
        assert_relative_eq!(critical_exponent(5).unwrap(), 3.0 / 7.0);
        assert!(critical_exponent(2).is_err());
        for n in 3..40 {
            let mc = critical_exponent(n).unwrap();
            assert!(mc > 0.0 && mc < (f64::from(n) - 2.0) / f64::from(n));
        }
    }

    #[test]
    fn window_is_open() {
        let m = 3.0 / 7.0;
        assert!(FlowParams::new(5, m, 3.5, 1.0, 1.0).is_err());
        assert!(FlowParams::new(5, m, 7.0, 1.0, 1.0).is_err());
        assert!(FlowParams::new(5, 0.6, 4.0, 1.0, 1.0).is_err());
        assert!(FlowParams::new(2, 0.1, 4.0, 1.0, 1.0).is_err());
        assert!(FlowParams::new(5, m, 4.0, -1.0, 1.0).is_err());
        assert!(FlowParams::new(5, m, 4.0, 1.0, -1.0).is_err());
        assert!(FlowParams::new(5, m, 4.0, 1.0, 0.0).is_ok());
        let err = FlowParams::new(5, m, 8.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(err.contains("2/(1-m) < lambda < (n-2)/m"), "{err}");
    }

    #[test]
    fn critical_flag_and_geometry_gate() {
        let p = reference();
        assert!(p.is_critical());
        assert!(p.require_geometry().is_ok());
        let q = FlowParams::new(5, 0.4, 4.0, 1.0, 1.0).unwrap();
        assert!(!q.is_critical());
        assert!(matches!(q.require_geometry(), Err(Error::GeometryRequirement(_))));
        let z = FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 0.0).unwrap();
        let msg = z.require_geometry().unwrap_err().to_string();
        assert!(msg.contains("c2 > 0"));
    }

    #[test]
    fn initial_profile_examples() {
        let p = FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 0.0).unwrap();
        for r in [1e-3, 0.3, 1.0, 7.0, 1e4] {
            assert_relative_eq!(p.initial_profile(r).unwrap(), r.powf(-4.0), max_relative = 1e-13);
        }
        let q = reference();
        assert_relative_eq!(q.initial_profile(1.0).unwrap(), 2f64.powf(7.0 / 3.0), max_relative = 1e-14);
        // frozen from a 40-digit evaluation of (2^{-9/7} + 1)^{7/3}
        let s = FlowParams::new(5, 3.0 / 7.0, 4.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(s.initial_profile(2.0).unwrap(), 2.229_966_973_061_204_5, max_relative = 1e-14);
        assert!(q.initial_profile(0.0).is_err());
        assert!(q.initial_profile(-1.0).is_err());
    }

    #[test]
    fn no_overflow_near_the_origin() {
        let p = FlowParams::new(6, 0.5, 6.0, 1.0, 1.0).unwrap();
        let v = p.initial_profile(1e-60).unwrap();
        assert!(v.is_finite() || v == f64::INFINITY);
        let ln = p.ln_initial_profile(1e-60).unwrap();
        assert_relative_eq!(ln, 360.0 * 10f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn end_asymptotics_of_the_datum() {
        let p = reference();
        let (m, lam) = (p.m(), p.lambda());
        for k in 3..=6 {
            let r = 10f64.powi(-k);
            let dev = (r.powf(lam) * p.initial_profile(r).unwrap() - 1.0).abs();
            assert!(dev <= 10.0 * r.powf(m * lam), "k={k} dev={dev}");
            let r = 10f64.powi(k);
            let dev = (p.initial_profile(r).unwrap() - 1.0).abs();
            assert!(dev <= 10.0 * r.powf(-m * lam), "k={k} dev={dev}");
        }
    }

    #[test]
    fn regularized_examples() {
        let p = FlowParams::new(5, 3.0 / 7.0, 4.0, 1.0, 0.0).unwrap();
        let rc = RegularizationConfig::new(0.25).unwrap();
        // frozen from a 40-digit evaluation of (0.25^{-6/7} + 0.25)^{7/3}
        assert_relative_eq!(p.regularized_initial(rc, 0.0).unwrap(), 18.990_044_718_378_185, max_relative = 1e-13);
        assert!(RegularizationConfig::new(0.0).is_err());
        assert!(RegularizationConfig::new(1.0).is_err());

        let q = reference();
        let rc = RegularizationConfig::new(0.5).unwrap();
        let m = q.m();
        let at0 = (1.0 * 0.5f64.powf(-m * 2.0) + 1.0 + 0.5).powf(1.0 / m);
        assert_relative_eq!(q.regularized_initial(rc, 0.0).unwrap(), at0, max_relative = 1e-13);
    }

    #[test]
    fn regularized_converges_linearly_in_epsilon() {
        let p = reference();
        for r in [0.5, 1.0, 3.0] {
            let exact = p.initial_profile(r).unwrap();
            let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
                .iter()
                .map(|&e| {
                    let rc = RegularizationConfig::new(e).unwrap();
                    (p.regularized_initial(rc, r).unwrap() - exact).abs()
                })
                .collect();
            for w in errs.windows(2) {
                let ratio = w[0] / w[1];
                assert!((ratio - 2.0).abs() < 0.05, "r={r} ratio={ratio}");
            }
        }
    }

    #[test]
    fn envelope_dominates_regularized_datum() {
        let p = reference();
        for e in [0.9, 0.1, 1e-3] {
            let rc = RegularizationConfig::new(e).unwrap();
            for k in -30..30 {
                let r = 10f64.powf(f64::from(k) / 10.0);
                assert!(p.regularized_initial(rc, r).unwrap() <= p.regularized_envelope(r).unwrap());
                assert!(p.regularized_initial(rc, r).unwrap() >= e);
            }
        }
    }
}

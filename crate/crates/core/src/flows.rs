//! Exact flow of the reaction part `z' = z - z^3` and the increment map it
//! induces.
//!
//! `phi(t, z) = z / sqrt(e^{-2t} + (1 - e^{-2t}) z^2)` is the solution at
//! time `t` started from `z`. The radicand is a convex combination of `1`
//! and `z^2` weighted by `e^{-2t}`, so it never drops below `e^{-2t}`.
//!
//! `psi(t, z) = (phi(t, z) - z) / t` is evaluated without forming the
//! difference: with `a = 1 - e^{-2t}` and `r = e^{-2t} + a z^2`,
//!
//! ```text
//! psi(t, z) = -z (z^2 - 1) (a / t) / (sqrt(r) (1 + sqrt(r)))
//! ```
//!
//! which tends to `z - z^3` as `t -> 0` and stays accurate for tiny `t`.

use crate::error::{invalid, Result};
use crate::grid::GridFunction;

/// Time parameter of the flow with its exponentials precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    t: f64,
    e2t: f64,
    // 1 - e^{-2t}
    a: f64,
    // (1 - e^{-2t}) / t, with the limit 2 at t = 0
    a_over_t: f64,
}

impl FlowParams {
    pub fn new(t: f64) -> Result<Self> {
        if !(t >= 0.0) || t.is_infinite() {
            return Err(invalid(format!(
                "flow time must be finite and >= 0, got {t}"
            )));
        }
        let a = -(-2.0 * t).exp_m1();
        let a_over_t = if t == 0.0 { 2.0 } else { a / t };
        Ok(FlowParams {
            t,
            e2t: (-2.0 * t).exp(),
            a,
            a_over_t,
        })
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    /// `e^{-2t}`.
    #[inline]
    pub fn e2t(&self) -> f64 {
        self.e2t
    }

    #[inline]
    pub fn phi(&self, z: f64) -> f64 {
        z / (self.e2t + self.a * z * z).sqrt()
    }

    #[inline]
    pub fn psi(&self, z: f64) -> f64 {
        let s = (self.e2t + self.a * z * z).sqrt();
        -z * (z * z - 1.0) * self.a_over_t / (s * (1.0 + s))
    }

    pub fn phi_in_place(&self, values: &mut [f64]) {
        if self.t == 0.0 {
            return;
        }
        values.iter_mut().for_each(|v| *v = self.phi(*v));
    }

    pub fn phi_grid(&self, x: &GridFunction) -> GridFunction {
        let mut out = x.clone();
        self.phi_in_place(out.values_mut());
        out
    }

    pub fn psi_grid(&self, x: &GridFunction) -> GridFunction {
        let mut out = x.clone();
        out.values_mut().iter_mut().for_each(|v| *v = self.psi(*v));
        out
    }
}

/// The reaction term `z - z^3`.
#[inline]
pub fn reaction(z: f64) -> f64 {
    z - z * z * z
}

/// Double-well potential `z^4/4 - z^2/2`; `reaction = -potential'`.
#[inline]
pub fn potential(z: f64) -> f64 {
    let z2 = z * z;
    0.25 * z2 * z2 - 0.5 * z2
}

/// `phi(t, z)`; panics on a negative or non-finite `t`.
pub fn phi(t: f64, z: f64) -> f64 {
    FlowParams::new(t).expect("flow time").phi(z)
}

/// `psi(t, z)`, equal to `z - z^3` at `t = 0`; panics on a bad `t`.
pub fn psi(t: f64, z: f64) -> f64 {
    FlowParams::new(t).expect("flow time").psi(z)
}

/// Constant of the local Lipschitz bound on `psi` for steps up to `dt0`,
/// from the derivative estimate `|psi'(z)| <= 3 e^{3 dt0} (1 + z^2)`.
pub fn lip_psi_constant(dt0: f64) -> f64 {
    3.0 * (3.0 * dt0).exp()
}

/// Bound on `|psi(dt, z) - psi(0, z)| / dt` for `dt <= dt0`, from the
/// second-order Taylor remainder of `g(t) = (e^{-2t} + (1 - e^{-2t}) z^2)^{-1/2}`
/// with `|g''| <= 2 e^{dt0} (1 + e^{2 dt0} z^2)^2`.
pub fn error_psi_envelope(dt0: f64, z: f64) -> f64 {
    let w = 1.0 + (2.0 * dt0).exp() * z * z;
    z.abs() * dt0.exp() * w * w
}

/// Calibrates `C(dt0)` with `|psi(dt, z) - psi(0, z)| <= C dt (1 + |z|^5)`
/// as the maximum of the Taylor envelope over `zs`.
pub fn calibrate_error_psi_constant(dt0: f64, zs: impl IntoIterator<Item = f64>) -> f64 {
    zs.into_iter()
        .map(|z| error_psi_envelope(dt0, z) / (1.0 + z.abs().powi(5)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fixed_points() {
        for t in [0.0, 0.01, 0.5, 3.0, 40.0] {
            assert_eq!(phi(t, 0.0), 0.0);
            assert_relative_eq!(phi(t, 1.0), 1.0, max_relative = 1e-15);
            assert_relative_eq!(phi(t, -1.0), -1.0, max_relative = 1e-15);
            assert_eq!(psi(t, 0.0), 0.0);
        }
    }

    #[test]
    fn psi_at_zero_time_is_reaction() {
        assert_eq!(psi(0.0, 2.0), -6.0);
        assert_eq!(psi(0.0, -0.5), reaction(-0.5));
    }

    #[test]
    fn psi_matches_difference_quotient() {
        for &t in &[0.5, 0.1, 1e-3] {
            for &z in &[-7.0, -1.3, 0.2, 0.9, 4.0] {
                let direct = (phi(t, z) - z) / t;
                assert_relative_eq!(psi(t, z), direct, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn psi_small_step_close_to_reaction() {
        let v = psi(0.01, 2.0);
        assert!((v - (-6.0)).abs() < 0.35, "{v}");
    }

    #[test]
    fn reaction_is_minus_potential_derivative() {
        for &z in &[-2.0, -0.3, 0.0, 0.7, 1.5] {
            let h = 1e-6;
            let d = (potential(z + h) - potential(z - h)) / (2.0 * h);
            assert!((reaction(z) + d).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_negative_time() {
        assert!(FlowParams::new(-1e-3).is_err());
        assert!(FlowParams::new(f64::NAN).is_err());
        assert!(FlowParams::new(f64::INFINITY).is_err());
    }

    #[test]
    fn nan_propagates() {
        assert!(phi(0.1, f64::NAN).is_nan());
        assert!(psi(0.1, f64::NAN).is_nan());
    }

    #[test]
    fn error_psi_constant_grows_with_horizon() {
        let zs = || (-500..=500).map(|i| i as f64 * 0.1);
        let c_small = calibrate_error_psi_constant(0.1, zs());
        let c_big = calibrate_error_psi_constant(0.5, zs());
        assert!(c_small < c_big);
        // large-|z| limit of the envelope ratio is e^{5 dt0}
        assert!(c_big >= (2.5_f64).exp() * 0.99);
    }
}

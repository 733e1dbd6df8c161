//! One-step inverse maps of the stochastic characteristics
//!
//! ```text
//! dX = V dt,   dV = E(t, X) dt + sum_k sigma_k(X) o dbeta_k
//! ```
//!
//! Each map takes an arrival node `(x, v)` at `t_n` and returns the departure
//! point `(X, V)` at `t_{n-1}`. The three splitting maps have unit Jacobian
//! determinant; the Euler-Maruyama baseline freezes the coefficients at the
//! arrival point and does not.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::field::{CaseTwoField, TrigForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    /// symplectic Euler
    Sem,
    /// Lie-Trotter splitting
    Ltsm,
    /// Strang splitting
    Ssm,
    /// Euler-Maruyama with coefficients frozen at the arrival point
    #[serde(rename = "em")]
    EmBaseline,
}

impl IntegratorKind {
    pub const ALL: [IntegratorKind; 4] =
        [IntegratorKind::Sem, IntegratorKind::Ltsm, IntegratorKind::Ssm, IntegratorKind::EmBaseline];

    pub fn is_volume_preserving(self) -> bool {
        !matches!(self, IntegratorKind::EmBaseline)
    }

    pub fn name(self) -> &'static str {
        match self {
            IntegratorKind::Sem => "sem",
            IntegratorKind::Ltsm => "ltsm",
            IntegratorKind::Ssm => "ssm",
            IntegratorKind::EmBaseline => "em",
        }
    }
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntegratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sem" => Ok(IntegratorKind::Sem),
            "ltsm" => Ok(IntegratorKind::Ltsm),
            "ssm" => Ok(IntegratorKind::Ssm),
            "em" | "em_baseline" => Ok(IntegratorKind::EmBaseline),
            other => Err(format!("unknown integrator '{other}' (expected sem, ltsm, ssm or em)")),
        }
    }
}

/// Coefficients of a single step, frozen at `t_{n-1}` and the step's Brownian increments.
pub trait StepForcing {
    /// `E(t_{n-1}, x)`
    fn field(&self, x: f64) -> f64;

    /// `sigma(x) . dbeta_n`
    fn noise(&self, x: f64) -> f64;

    /// `tau * E(t_{n-1}, x) + sigma(x) . dbeta_n`
    #[inline]
    fn kick(&self, x: f64, tau: f64) -> f64 {
        tau * self.field(x) + self.noise(x)
    }
}

/// Closed-form field and noise, evaluated with one `sin_cos` per point.
#[derive(Debug, Clone, Copy)]
pub struct TrigForcing {
    pub field: TrigForm,
    pub noise: TrigForm,
}

impl StepForcing for TrigForcing {
    #[inline]
    fn field(&self, x: f64) -> f64 {
        self.field.eval(x)
    }

    #[inline]
    fn noise(&self, x: f64) -> f64 {
        self.noise.eval(x)
    }

    #[inline]
    fn kick(&self, x: f64, tau: f64) -> f64 {
        TrigForm::combine(tau, &self.field, 1.0, &self.noise).eval(x)
    }
}

/// Self-consistent nodal field with closed-form noise.
#[derive(Debug, Clone, Copy)]
pub struct NodalForcing<'a> {
    pub field: &'a CaseTwoField,
    pub noise: TrigForm,
}

impl StepForcing for NodalForcing<'_> {
    #[inline]
    fn field(&self, x: f64) -> f64 {
        self.field.eval(x)
    }

    #[inline]
    fn noise(&self, x: f64) -> f64 {
        self.noise.eval(x)
    }
}

/// Arbitrary closures, mostly for probing the maps with test fields.
pub struct FnForcing<F, G> {
    pub field: F,
    pub noise: G,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> StepForcing for FnForcing<F, G> {
    fn field(&self, x: f64) -> f64 {
        (self.field)(x)
    }

    fn noise(&self, x: f64) -> f64 {
        (self.noise)(x)
    }
}

#[inline]
pub(crate) fn wrap(x: f64, length: f64) -> f64 {
    let r = x - length * crate::interp::floor_i64(x / length) as f64;
    if !(0.0..length).contains(&r) {
        0.0
    } else {
        r
    }
}

/// Departure point without reducing the position modulo `L`.
#[inline]
pub fn inverse_step_unwrapped<S: StepForcing + ?Sized>(
    kind: IntegratorKind,
    x: f64,
    v: f64,
    tau: f64,
    forcing: &S,
) -> (f64, f64) {
    match kind {
        IntegratorKind::Sem => {
            let xd = x - tau * v;
            (xd, v - forcing.kick(xd, tau))
        }
        IntegratorKind::Ltsm => {
            let e = forcing.field(x);
            let xd = x - tau * v + tau * tau * e;
            (xd, v - tau * e - forcing.noise(xd))
        }
        IntegratorKind::Ssm => {
            let half = x - 0.5 * tau * v;
            let vd = v - forcing.kick(half, tau);
            (x - 0.5 * tau * (v + vd), vd)
        }
        IntegratorKind::EmBaseline => (x - tau * v, v - forcing.kick(x, tau)),
    }
}

/// Departure point `(X, V)` with `X` reduced into `[0, L)`.
#[inline]
pub fn inverse_step<S: StepForcing + ?Sized>(
    kind: IntegratorKind,
    x: f64,
    v: f64,
    tau: f64,
    length: f64,
    forcing: &S,
) -> (f64, f64) {
    let (xd, vd) = inverse_step_unwrapped(kind, x, v, tau, forcing);
    (wrap(xd, length), vd)
}

pub fn inverse_step_sem<S: StepForcing + ?Sized>(x: f64, v: f64, tau: f64, length: f64, forcing: &S) -> (f64, f64) {
    inverse_step(IntegratorKind::Sem, x, v, tau, length, forcing)
}

pub fn inverse_step_ltsm<S: StepForcing + ?Sized>(x: f64, v: f64, tau: f64, length: f64, forcing: &S) -> (f64, f64) {
    inverse_step(IntegratorKind::Ltsm, x, v, tau, length, forcing)
}

pub fn inverse_step_ssm<S: StepForcing + ?Sized>(x: f64, v: f64, tau: f64, length: f64, forcing: &S) -> (f64, f64) {
    inverse_step(IntegratorKind::Ssm, x, v, tau, length, forcing)
}

pub fn inverse_step_em<S: StepForcing + ?Sized>(x: f64, v: f64, tau: f64, length: f64, forcing: &S) -> (f64, f64) {
    inverse_step(IntegratorKind::EmBaseline, x, v, tau, length, forcing)
}

/// Spacing of the central differences in [`jacobian_det`].
pub const JACOBIAN_FD_STEP: f64 = 1e-6;

/// Determinant of the 2x2 Jacobian of the inverse map at `(x, v)`, by central
/// differences on the unwrapped map.
pub fn jacobian_det<S: StepForcing + ?Sized>(kind: IntegratorKind, x: f64, v: f64, tau: f64, forcing: &S) -> f64 {
    let h = JACOBIAN_FD_STEP;
    let map = |x, v| inverse_step_unwrapped(kind, x, v, tau, forcing);
    let (xp, vp) = map(x + h, v);
    let (xm, vm) = map(x - h, v);
    let (xq, vq) = map(x, v + h);
    let (xr, vr) = map(x, v - h);
    let dxdx = (xp - xm) / (2.0 * h);
    let dvdx = (vp - vm) / (2.0 * h);
    let dxdv = (xq - xr) / (2.0 * h);
    let dvdv = (vq - vr) / (2.0 * h);
    dxdx * dvdv - dxdv * dvdx
}

/// `tau * Emax + sum_k sigmax_k |dbeta_k|`: no inverse step moves the
/// velocity further than this.
pub fn displacement_bound(tau: f64, emax: f64, sigmax: &[f64], dbeta: &[f64]) -> f64 {
    tau * emax + sigmax.iter().zip(dbeta).map(|(s, d)| s * d.abs()).sum::<f64>()
}

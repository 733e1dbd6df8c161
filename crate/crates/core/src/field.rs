//! Electric field and noise-coefficient models.
//!
//! Case I fields are closed-form with analytic sup-bounds. Case II fields are
//! recomputed every step from the charge deviation `rho - 1` through the 1D
//! periodic kernel
//!
//! ```text
//! K(x, y) = y/L - 1   for x < y
//! K(x, y) = y/L       for y < x
//! ```
//!
//! and clamped into `[-2L, 2L]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::DensityField;

/// `constant + sin * sin(kx) + cos * cos(kx)` with `k = 2 pi / L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigForm {
    pub constant: f64,
    pub sin: f64,
    pub cos: f64,
    pub wavenumber: f64,
}

impl TrigForm {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, sin: 0.0, cos: 0.0, wavenumber: 0.0 }
    }

    pub fn new(constant: f64, sin: f64, cos: f64, length: f64) -> Self {
        Self { constant, sin, cos, wavenumber: 2.0 * PI / length }
    }

    pub fn is_constant(&self) -> bool {
        self.sin == 0.0 && self.cos == 0.0
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if self.is_constant() {
            return self.constant;
        }
        let (s, c) = (self.wavenumber * x).sin_cos();
        self.constant + self.sin * s + self.cos * c
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (s, c) = (self.wavenumber * x).sin_cos();
        self.wavenumber * (self.sin * c - self.cos * s)
    }

    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.sin.hypot(self.cos)
    }

    /// `a * self + b * other`; both must share the wavenumber unless one is constant.
    pub fn combine(a: f64, lhs: &Self, b: f64, rhs: &Self) -> Self {
        let wavenumber = if lhs.is_constant() { rhs.wavenumber } else { lhs.wavenumber };
        Self {
            constant: a * lhs.constant + b * rhs.constant,
            sin: a * lhs.sin + b * rhs.sin,
            cos: a * lhs.cos + b * rhs.cos,
            wavenumber,
        }
    }
}

/// Externally imposed field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CaseOneField {
    /// `E = e0`
    Constant { value: f64 },
    /// `E = amplitude * cos(2 pi x / L)`
    Cosine { amplitude: f64 },
    /// `E = -u'` with `u = amplitude * sin(2 pi x / L)`
    Potential { amplitude: f64 },
}

impl CaseOneField {
    pub fn trig(&self, length: f64) -> TrigForm {
        let k = 2.0 * PI / length;
        match *self {
            CaseOneField::Constant { value } => TrigForm::constant(value),
            CaseOneField::Cosine { amplitude } => TrigForm::new(0.0, 0.0, amplitude, length),
            CaseOneField::Potential { amplitude } => TrigForm::new(0.0, 0.0, -amplitude * k, length),
        }
    }

    /// Electric potential `u` with `E = -u'`, when the field has one
    /// that is used for the energy diagnostic.
    pub fn potential(&self, length: f64) -> Option<TrigForm> {
        let k = 2.0 * PI / length;
        match *self {
            CaseOneField::Constant { .. } => None,
            CaseOneField::Cosine { amplitude } => Some(TrigForm::new(0.0, -amplitude / k, 0.0, length)),
            CaseOneField::Potential { amplitude } => Some(TrigForm::new(0.0, amplitude, 0.0, length)),
        }
    }

    pub fn sup_bound(&self, length: f64) -> f64 {
        self.trig(length).sup_bound()
    }

    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            CaseOneField::Constant { value } => Some(value),
            _ => None,
        }
    }
}

/// One noise coefficient `sigma_k(x) = constant + sin * sin(2 pi x/L) + cos * cos(2 pi x/L)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub sin: f64,
    #[serde(default)]
    pub cos: f64,
}

/// The `K` noise coefficients on a torus of length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaModel {
    components: Vec<TrigForm>,
}

impl SigmaModel {
    pub fn new(specs: &[SigmaSpec], length: f64) -> Self {
        let components =
            specs.iter().map(|s| TrigForm::new(s.constant, s.sin, s.cos, length)).collect();
        Self { components }
    }

    pub fn from_forms(components: Vec<TrigForm>) -> Self {
        Self { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[TrigForm] {
        &self.components
    }

    pub fn sup_bounds(&self) -> Vec<f64> {
        self.components.iter().map(TrigForm::sup_bound).collect()
    }

    /// `sigma(x) . dbeta` collapsed into a single trig form.
    pub fn contract(&self, dbeta: &[f64]) -> TrigForm {
        self.components
            .iter()
            .zip(dbeta)
            .fold(TrigForm::constant(0.0), |acc, (s, &d)| TrigForm::combine(1.0, &acc, d, s))
    }

    /// `Tr(sigma sigma^T)` when every component is constant.
    pub fn constant_trace(&self) -> Option<f64> {
        self.components
            .iter()
            .try_fold(0.0, |acc, s| s.is_constant().then_some(acc + s.constant * s.constant))
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|s| s.sup_bound() == 0.0)
    }
}

/// Self-consistent field on the position nodes, already clamped into `[-2L, 2L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseTwoField {
    length: f64,
    dx: f64,
    values: Vec<f64>,
}

impl CaseTwoField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_bound(&self) -> f64 {
        2.0 * self.length
    }

    /// Piecewise-linear periodic interpolation of the nodal values.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let s = (x / self.dx).rem_euclid(n as f64);
        let j = (s.floor() as usize).min(n - 1);
        let w = s - j as f64;
        let j1 = if j + 1 == n { 0 } else { j + 1 };
        (1.0 - w) * self.values[j] + w * self.values[j1]
    }

    /// `(1/2) int E^2 dx` by the periodic trapezoid rule.
    pub fn energy(&self) -> f64 {
        0.5 * self.dx * self.values.iter().map(|e| e * e).sum::<f64>()
    }
}

/// Composite trapezoid of `f(x_j, .)` over `[-U, U]` for every position node.
pub fn density_rho(field: &DensityField) -> Vec<f64> {
    let g = field.grid();
    (0..g.nx()).map(|j| trapezoid(field.row(j), g.dv())).collect()
}

pub(crate) fn trapezoid(row: &[f64], h: f64) -> f64 {
    match row {
        [] => 0.0,
        [only] => 0.0 * only,
        [first, .., last] => h * (row.iter().sum::<f64>() - 0.5 * (first + last)),
    }
}

/// Kernel field before clamping; zero mean for any `rho`.
///
/// The kernel sum uses the `y/L` branch on the diagonal plus a half-node
/// correction, which is the trapezoid rule on either side of the kernel jump
/// projected onto zero mean. This keeps the quadrature second order.
pub fn solve_field_unclamped(rho: &[f64], length: f64) -> Vec<f64> {
    let n = rho.len();
    let dx = length / n as f64;
    let g: Vec<f64> = rho.iter().map(|r| r - 1.0).collect();
    let first_moment: f64 = g.iter().enumerate().map(|(m, gm)| m as f64 * dx / length * gm * dx).sum();
    let mean = g.iter().sum::<f64>() / n as f64;
    let mut out = vec![0.0; n];
    // tail = sum_{m > j} g_m dx
    let mut tail = 0.0;
    for j in (0..n).rev() {
        out[j] = first_moment - tail - 0.5 * dx * (g[j] - mean);
        tail += g[j] * dx;
    }
    out
}

/// Nodal field from nodal `rho` on a torus of length `L`, clamped into `[-2L, 2L]`.
pub fn solve_field(rho: &[f64], length: f64) -> CaseTwoField {
    let bound = 2.0 * length;
    let values = solve_field_unclamped(rho, length)
        .into_iter()
        .map(|e| e.clamp(-bound, bound))
        .collect();
    CaseTwoField { length, dx: length / rho.len() as f64, values }
}

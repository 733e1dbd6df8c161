//! Physical quantities of a density field and the closed-form mean laws they
//! are compared against.
//!
//! All integrals use the composite trapezoid rule on the current grid:
//! uniform weights over the periodic position axis and half weights at
//! `v = +-U`.

use serde::Serialize;

use crate::field::{density_rho, CaseOneField, CaseTwoField, SigmaModel, TrigForm};
use crate::grid::DensityField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `int f`
    pub mass: f64,
    /// `int |f|`
    pub l1: f64,
    pub l2: f64,
    pub momentum: f64,
    pub kinetic: f64,
    pub potential: Option<f64>,
    pub total: Option<f64>,
    /// velocity half-width `U_n`
    pub half_width: f64,
    pub grew: bool,
}

/// Field information the energy diagnostic needs.
#[derive(Debug, Clone, Copy)]
pub enum FieldModel<'a> {
    CaseOne { field: &'a CaseOneField, length: f64 },
    CaseTwo(&'a CaseTwoField),
}

/// `sum_{j,c} w_c g(v_c, f_jc) dx dv` with trapezoid weights in `v`.
fn integrate(field: &DensityField, g: impl Fn(f64, f64) -> f64) -> f64 {
    let grid = field.grid();
    let nv = grid.nv();
    let mut acc = 0.0;
    for j in 0..grid.nx() {
        let row = field.row(j);
        let mut s = 0.0;
        for (c, &f) in row.iter().enumerate() {
            let w = if c == 0 || c == nv - 1 { 0.5 } else { 1.0 };
            s += w * g(grid.v_col(c), f);
        }
        acc += s;
    }
    acc * grid.dx() * grid.dv()
}

/// `(int |f|^p)^(1/p)` for `p` in `{1, 2}`.
pub fn lp_norm(field: &DensityField, p: u32) -> f64 {
    match p {
        1 => integrate(field, |_, f| f.abs()),
        2 => integrate(field, |_, f| f * f).sqrt(),
        _ => integrate(field, |_, f| f.abs().powi(p as i32)).powf(1.0 / p as f64),
    }
}

pub fn mass(field: &DensityField) -> f64 {
    integrate(field, |_, f| f)
}

pub fn momentum(field: &DensityField) -> f64 {
    integrate(field, |v, f| v * f)
}

pub fn kinetic_energy(field: &DensityField) -> f64 {
    0.5 * integrate(field, |v, f| v * v * f)
}

/// `int u(x) rho(x) dx`
fn potential_of(field: &DensityField, u: &TrigForm) -> f64 {
    let grid = field.grid();
    let rho = density_rho(field);
    grid.dx() * rho.iter().enumerate().map(|(j, r)| u.eval(grid.x(j)) * r).sum::<f64>()
}

/// Potential energy, or `None` for a Case I field with no potential.
pub fn potential_energy(field: &DensityField, model: FieldModel<'_>) -> Option<f64> {
    match model {
        FieldModel::CaseOne { field: e, length } => e.potential(length).map(|u| potential_of(field, &u)),
        FieldModel::CaseTwo(e) => Some(e.energy()),
    }
}

/// Kinetic plus potential energy, or `None` when the field has no potential.
pub fn total_energy(field: &DensityField, model: FieldModel<'_>) -> Option<f64> {
    potential_energy(field, model).map(|p| p + kinetic_energy(field))
}

impl DiagnosticsRecord {
    pub fn compute(t: f64, field: &DensityField, model: FieldModel<'_>, grew: bool) -> Self {
        // one sweep for all velocity moments
        let grid = field.grid();
        let nv = grid.nv();
        let mut m = [0.0; 5];
        for j in 0..grid.nx() {
            for (c, &f) in field.row(j).iter().enumerate() {
                let w = if c == 0 || c == nv - 1 { 0.5 } else { 1.0 };
                let v = grid.v_col(c);
                let wf = w * f;
                m[0] += wf;
                m[1] += w * f.abs();
                m[2] += wf * f;
                m[3] += wf * v;
                m[4] += wf * v * v;
            }
        }
        let cell = grid.dx() * grid.dv();
        let kinetic = 0.5 * m[4] * cell;
        let potential = potential_energy(field, model);
        Self {
            t,
            mass: m[0] * cell,
            l1: m[1] * cell,
            l2: (m[2] * cell).sqrt(),
            momentum: m[3] * cell,
            kinetic,
            potential,
            total: potential.map(|p| p + kinetic),
            half_width: field.grid().half_width(),
            grew,
        }
    }
}

/// A quadratic `c0 + c1 t + c2 t^2` describing an expected mean curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Polynomial(pub [f64; 3]);

impl Polynomial {
    pub fn eval(&self, t: f64) -> f64 {
        self.0[0] + t * (self.0[1] + t * self.0[2])
    }
}

/// Expected mean curves; `None` where the configuration is outside the
/// hypotheses of the corresponding law.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ReferenceLaws {
    pub momentum: Option<Polynomial>,
    pub kinetic: Option<Polynomial>,
    pub total: Option<Polynomial>,
}

/// Which electric field a run uses, for the purpose of the mean laws.
#[derive(Debug, Clone, Copy)]
pub enum LawField<'a> {
    CaseOne(&'a CaseOneField),
    CaseTwo,
}

/// Closed-form mean evolution laws from the initial diagnostics.
///
/// With initial mass `M0` (1 for a normalised density):
/// * constant `E0`: `P = P0 + E0 M0 t`; with constant `sigma` also
///   `K = K0 + (E0 P0 + Tr(ss^T) M0 / 2) t + E0^2 M0 t^2 / 2`
/// * `E = -u'` with constant `sigma`: `H = H0 + Tr(ss^T) M0 t / 2`
/// * self-consistent field: `P = P0`, and `H` as above for constant `sigma`
pub fn reference_laws(initial: &DiagnosticsRecord, field: LawField<'_>, sigma: &SigmaModel) -> ReferenceLaws {
    let m0 = initial.mass;
    let trace = sigma.constant_trace();
    let p0 = initial.momentum;
    let total = |h0: Option<f64>| match (h0, trace) {
        (Some(h0), Some(tr)) => Some(Polynomial([h0, 0.5 * tr * m0, 0.0])),
        _ => None,
    };
    match field {
        LawField::CaseOne(e) => match e.constant_value() {
            Some(e0) => ReferenceLaws {
                momentum: Some(Polynomial([p0, e0 * m0, 0.0])),
                kinetic: trace
                    .map(|tr| Polynomial([initial.kinetic, e0 * p0 + 0.5 * tr * m0, 0.5 * e0 * e0 * m0])),
                total: None,
            },
            None => ReferenceLaws { momentum: None, kinetic: None, total: total(initial.total) },
        },
        LawField::CaseTwo => ReferenceLaws {
            momentum: Some(Polynomial([p0, 0.0, 0.0])),
            kinetic: None,
            total: total(initial.total),
        },
    }
}

/// Ordinary least-squares polynomial fit of degree 1 or 2; coefficients in
/// increasing order.
pub fn fit_polynomial(t: &[f64], y: &[f64], degree: usize) -> Vec<f64> {
    assert!(degree == 1 || degree == 2, "only linear and quadratic fits are supported");
    assert_eq!(t.len(), y.len());
    let n = degree + 1;
    // centre t for conditioning, then re-expand
    let tm = t.iter().sum::<f64>() / t.len() as f64;
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&ti, &yi) in t.iter().zip(y) {
        let s = ti - tm;
        let basis = [1.0, s, s * s];
        for a in 0..n {
            aty[a] += basis[a] * yi;
            for b in 0..n {
                ata[a][b] += basis[a] * basis[b];
            }
        }
    }
    let c = solve_small(ata, aty, n);
    // p(s) with s = t - tm
    match degree {
        1 => vec![c[0] - c[1] * tm, c[1]],
        _ => vec![c[0] - c[1] * tm + c[2] * tm * tm, c[1] - 2.0 * c[2] * tm, c[2]],
    }
}

fn solve_small(mut a: [[f64; 3]; 3], mut b: [f64; 3], n: usize) -> [f64; 3] {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{solve_field, SigmaSpec};
    use crate::grid::PhaseGrid;
    use std::f64::consts::PI;

    const C: f64 = 0.398_942_280_401_432_7; // 1/sqrt(2 pi)

    fn landau(x: f64, v: f64) -> f64 {
        C * (-v * v / 2.0).exp() * (1.0 + 0.05 * (2.0 * PI * x).cos())
    }

    fn two_stream(x: f64, v: f64) -> f64 {
        v * v * landau(x, v)
    }

    #[test]
    fn constant_field_norms() {
        let g = PhaseGrid::new(1.0, 0.1, 0.05, 6.0).unwrap();
        let f = DensityField::sample(g, |_, _| 0.5);
        assert!((lp_norm(&f, 1) - 6.0).abs() < 1e-12);
        assert!((lp_norm(&f, 2) - (12.0f64 * 0.25).sqrt()).abs() < 1e-12);
        let zero = DensityField::zeros(g);
        assert_eq!(kinetic_energy(&zero), 0.0);
    }

    #[test]
    fn landau_moments() {
        let g = PhaseGrid::new(1.0, 1.0 / 64.0, 1.0 / 256.0, 6.0).unwrap();
        let f = DensityField::sample(g, landau);
        assert!((lp_norm(&f, 1) - 1.0).abs() < 1e-4);
        assert!((kinetic_energy(&f) - 0.5).abs() < 1e-4);
        assert!(momentum(&f).abs() < 1e-12);
        let ts = DensityField::sample(g, two_stream);
        assert!((kinetic_energy(&ts) - 1.5).abs() < 1e-4);
        assert!(momentum(&ts).abs() < 1e-12);
    }

    #[test]
    fn shifted_gaussian_momentum() {
        let g = PhaseGrid::new(1.0, 0.125, 1.0 / 64.0, 8.0).unwrap();
        let f = DensityField::sample(g, |_, v| C * (-(v - 1.0) * (v - 1.0) / 2.0).exp());
        assert!((momentum(&f) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn growth_keeps_norms() {
        let g = PhaseGrid::new(1.0, 1.0 / 16.0, 1.0 / 16.0, 6.0).unwrap();
        let f = DensityField::sample(g, landau);
        let grown = f.grow_cells(20);
        // the old boundary columns move from half to full trapezoid weight
        let m = g.half_nodes() as isize;
        let edge: f64 = (0..g.nx()).map(|j| f.at(j, -m) + f.at(j, m)).sum();
        let edge_sq: f64 = (0..g.nx()).map(|j| f.at(j, -m).powi(2) + f.at(j, m).powi(2)).sum();
        let w = 0.5 * g.dx() * g.dv();
        assert!((lp_norm(&grown, 1) - lp_norm(&f, 1) - w * edge).abs() < 1e-14);
        assert!((lp_norm(&grown, 2).powi(2) - lp_norm(&f, 2).powi(2) - w * edge_sq).abs() < 1e-14);
    }

    #[test]
    fn potential_energies() {
        let g = PhaseGrid::new(1.0, 1.0 / 64.0, 1.0 / 64.0, 6.0).unwrap();
        let f = DensityField::sample(g, landau);
        let e = CaseOneField::Potential { amplitude: 1.0 };
        let pot = potential_energy(&f, FieldModel::CaseOne { field: &e, length: 1.0 }).unwrap();
        assert!(pot.abs() < 1e-10, "{pot}");
        let c = CaseOneField::Constant { value: 1.0 };
        assert!(total_energy(&f, FieldModel::CaseOne { field: &c, length: 1.0 }).is_none());

        let neutral = solve_field(&vec![1.0; 32], 1.0);
        assert_eq!(neutral.energy(), 0.0);

        let (alpha, l) = (0.2, 4.0 * PI);
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let rho: Vec<f64> = (0..n).map(|j| 1.0 + alpha * (2.0 * PI * j as f64 / n as f64).cos()).collect();
            let w = solve_field(&rho, l).energy();
            errs.push((w - alpha * alpha * l.powi(3) / (16.0 * PI * PI)).abs());
        }
        assert!(errs[1] < errs[0] / 3.5, "{errs:?}");
    }

    #[test]
    fn laws() {
        let rec = DiagnosticsRecord {
            t: 0.0,
            mass: 1.0,
            l1: 1.0,
            l2: 0.5,
            momentum: 0.0,
            kinetic: 1.5,
            potential: None,
            total: None,
            half_width: 6.0,
            grew: false,
        };
        let sigma = SigmaModel::new(&[SigmaSpec { constant: 1.0, ..Default::default() }], 1.0);
        let e = CaseOneField::Constant { value: 1.0 };
        let laws = reference_laws(&rec, LawField::CaseOne(&e), &sigma);
        let k = laws.kinetic.unwrap();
        for t in [0.0, 0.5, 2.0] {
            assert!((k.eval(t) - (1.5 + t / 2.0 + t * t / 2.0)).abs() < 1e-14);
            assert!((laws.momentum.unwrap().eval(t) - t).abs() < 1e-14);
        }
        assert!(laws.total.is_none());

        let rec2 = DiagnosticsRecord { potential: Some(0.1), total: Some(1.6), ..rec };
        let laws = reference_laws(&rec2, LawField::CaseTwo, &sigma);
        assert_eq!(laws.total.unwrap().0, [1.6, 0.5, 0.0]);
        assert_eq!(laws.momentum.unwrap().0, [0.0, 0.0, 0.0]);

        let zero = SigmaModel::new(&[SigmaSpec::default()], 1.0);
        let free = CaseOneField::Constant { value: 0.0 };
        let laws = reference_laws(&rec, LawField::CaseOne(&free), &zero);
        assert_eq!(laws.momentum.unwrap().0, [0.0, 0.0, 0.0]);
        assert_eq!(laws.kinetic.unwrap().0, [1.5, 0.0, 0.0]);

        let varying = SigmaModel::new(&[SigmaSpec { sin: 1.0, ..Default::default() }], 1.0);
        let laws = reference_laws(&rec2, LawField::CaseTwo, &varying);
        assert!(laws.total.is_none());
    }

    #[test]
    fn polynomial_fits_recover_coefficients() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1 + 3.0).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.5 + 0.5 * t + 0.25 * t * t).collect();
        let q = fit_polynomial(&t, &y, 2);
        assert!((q[0] - 1.5).abs() < 1e-9 && (q[1] - 0.5).abs() < 1e-10 && (q[2] - 0.25).abs() < 1e-11);
        let y: Vec<f64> = t.iter().map(|t| -2.0 + 3.0 * t).collect();
        let l = fit_polynomial(&t, &y, 1);
        assert!((l[0] + 2.0).abs() < 1e-10 && (l[1] - 3.0).abs() < 1e-12);
    }
}

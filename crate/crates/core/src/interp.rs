//! Reconstruction of the density between nodes.
//!
//! Both reconstructions wrap the position periodically and return zero for
//! `|v| > U`, so callers never special-case the domain boundary.

use crate::error::{Error, Result};
use crate::grid::{DensityField, PhaseGrid};

/// Evaluation of a reconstructed density at an arbitrary phase-space point.
pub trait Reconstruction: Sync {
    fn eval(&self, x: f64, v: f64) -> f64;
}

const SNAP: f64 = 1e-12;

/// `floor(s)` through a truncating conversion; `f64::floor` is a libm call
/// on baseline x86-64.
#[inline]
pub(crate) fn floor_i64(s: f64) -> i64 {
    let t = s as i64;
    if (t as f64) > s {
        t - 1
    } else {
        t
    }
}

/// Cell index and fractional offset for a coordinate `s` measured in cells.
/// Coordinates within `1e-12` of a node are snapped onto it.
#[inline]
fn locate(s: f64) -> (i64, f64) {
    let fl = floor_i64(s);
    let w = s - fl as f64;
    let tol = SNAP * s.abs().max(1.0);
    if w <= tol {
        (fl, 0.0)
    } else if 1.0 - w <= tol {
        (fl + 1, 0.0)
    } else {
        (fl, w)
    }
}

#[derive(Debug, Clone, Copy)]
struct CellLocator {
    nx: usize,
    nv: usize,
    inv_dx: f64,
    inv_dv: f64,
    half_width: f64,
}

impl CellLocator {
    fn new(grid: &PhaseGrid) -> Self {
        Self {
            nx: grid.nx(),
            nv: grid.nv(),
            inv_dx: 1.0 / grid.dx(),
            inv_dv: 1.0 / grid.dv(),
            half_width: grid.half_width(),
        }
    }

    /// `(j, j+1 mod nx, wx, c, wv)` for the cell containing `(x, v)`, or `None`
    /// outside the velocity domain.
    #[inline]
    fn cell(&self, x: f64, v: f64) -> Option<(usize, usize, f64, usize, f64)> {
        if !(v.abs() <= self.half_width) {
            return None;
        }
        let (i, wx) = locate(x * self.inv_dx);
        let nx = self.nx as i64;
        let j = if (0..nx).contains(&i) { i as usize } else { i.rem_euclid(nx) as usize };
        let (cf, mut wv) = locate((v + self.half_width) * self.inv_dv);
        let mut c = cf.max(0) as usize;
        if c >= self.nv - 1 {
            // on the upper boundary node
            c = self.nv - 2;
            wv = 1.0;
        }
        wv = wv.clamp(0.0, 1.0);
        let j1 = if j + 1 == self.nx { 0 } else { j + 1 };
        Some((j, j1, wx, c, wv))
    }
}

/// Tensor-product first-order Lagrange (bilinear) interpolation.
#[derive(Debug, Clone, Copy)]
pub struct LinearInterpolant<'a> {
    values: &'a [f64],
    loc: CellLocator,
}

impl<'a> LinearInterpolant<'a> {
    pub fn new(field: &'a DensityField) -> Self {
        Self { values: field.values(), loc: CellLocator::new(field.grid()) }
    }
}

impl Reconstruction for LinearInterpolant<'_> {
    #[inline]
    fn eval(&self, x: f64, v: f64) -> f64 {
        let Some((j, j1, wx, c, wv)) = self.loc.cell(x, v) else {
            return 0.0;
        };
        let nv = self.loc.nv;
        let r0 = &self.values[j * nv + c..j * nv + c + 2];
        let r1 = &self.values[j1 * nv + c..j1 * nv + c + 2];
        // a + w (b - a) keeps equal neighbours exact and never undershoots min(a, b)
        let lo = r0[0] + wv * (r0[1] - r0[0]);
        let hi = r1[0] + wv * (r1[1] - r1[0]);
        lo + wx * (hi - lo)
    }
}

/// Bilinear interpolation of `field` at `(x, v)`.
pub fn interp_linear(field: &DensityField, x: f64, v: f64) -> f64 {
    LinearInterpolant::new(field).eval(x, v)
}

/// Tensor-product cubic spline: periodic in position, natural in velocity.
///
/// Stored as nodal values plus the second derivatives `f_xx`, `f_vv` and the
/// mixed `f_xxvv`; inside a cell the spline is the tensor product of the
/// 1D "value + second derivative" cubic representation.
#[derive(Debug, Clone)]
pub struct SplineInterpolant {
    loc: CellLocator,
    dx: f64,
    dv: f64,
    f: Vec<f64>,
    fxx: Vec<f64>,
    fvv: Vec<f64>,
    fxxvv: Vec<f64>,
}

impl SplineInterpolant {
    pub fn new(field: &DensityField) -> Result<Self> {
        let g = field.grid();
        if g.nx() < 4 || g.nv() < 4 {
            return Err(Error::InvalidParameter(format!(
                "spline reconstruction needs at least 4 nodes per axis (nx={}, nv={})",
                g.nx(),
                g.nv()
            )));
        }
        let (nx, nv) = (g.nx(), g.nv());
        let f = field.values().to_vec();
        let fvv = natural_second_derivatives(&f, nx, nv, g.dv());
        let fxx = periodic_second_derivatives(&f, nx, nv, g.dx());
        let fxxvv = natural_second_derivatives(&fxx, nx, nv, g.dv());
        Ok(Self { loc: CellLocator::new(g), dx: g.dx(), dv: g.dv(), f, fxx, fvv, fxxvv })
    }
}

impl Reconstruction for SplineInterpolant {
    fn eval(&self, x: f64, v: f64) -> f64 {
        let Some((j, j1, wx, c, wv)) = self.loc.cell(x, v) else {
            return 0.0;
        };
        let nv = self.loc.nv;
        let cubic = |w: f64, h: f64| (w * w * w - w) * h * h / 6.0;
        let ax = [1.0 - wx, wx];
        let cx = [cubic(1.0 - wx, self.dx), cubic(wx, self.dx)];
        let av = [1.0 - wv, wv];
        let cv = [cubic(1.0 - wv, self.dv), cubic(wv, self.dv)];
        let mut acc = 0.0;
        for (a, row) in [j, j1].into_iter().enumerate() {
            for b in 0..2 {
                let i = row * nv + c + b;
                acc += ax[a] * av[b] * self.f[i]
                    + ax[a] * cv[b] * self.fvv[i]
                    + cx[a] * av[b] * self.fxx[i]
                    + cx[a] * cv[b] * self.fxxvv[i];
            }
        }
        acc
    }
}

/// Spline of `field` evaluated at `(x, v)`; builds the coefficients on every call.
pub fn interp_spline(field: &DensityField, x: f64, v: f64) -> Result<f64> {
    Ok(SplineInterpolant::new(field)?.eval(x, v))
}

/// Second derivatives of the natural cubic spline along every row of an
/// `nx x nv` table.
fn natural_second_derivatives(y: &[f64], nx: usize, nv: usize, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    let n = nv - 2; // interior unknowns
    let scale = 6.0 / (h * h);
    // Thomas factors for tridiag(1, 4, 1), shared by all rows
    let mut cp = vec![0.0; n];
    let mut denom = vec![0.0; n];
    for i in 0..n {
        let prev = if i == 0 { 0.0 } else { cp[i - 1] };
        denom[i] = 4.0 - prev;
        cp[i] = 1.0 / denom[i];
    }
    let mut d = vec![0.0; n];
    for j in 0..nx {
        let row = &y[j * nv..(j + 1) * nv];
        for i in 0..n {
            let rhs = scale * (row[i + 2] - 2.0 * row[i + 1] + row[i]);
            let prev = if i == 0 { 0.0 } else { d[i - 1] };
            d[i] = (rhs - prev) / denom[i];
        }
        let m = &mut out[j * nv..(j + 1) * nv];
        m[n] = d[n - 1];
        for i in (0..n - 1).rev() {
            m[i + 1] = d[i] - cp[i] * m[i + 2];
        }
    }
    out
}

/// Second derivatives of the periodic cubic spline along the position axis,
/// solved for all velocity columns at once (cyclic Thomas via Sherman-Morrison).
fn periodic_second_derivatives(y: &[f64], nx: usize, nv: usize, h: f64) -> Vec<f64> {
    let scale = 6.0 / (h * h);
    let row = |j: usize| &y[j * nv..(j + 1) * nv];
    let mut rhs = vec![0.0; y.len()];
    for j in 0..nx {
        let (jm, jp) = ((j + nx - 1) % nx, (j + 1) % nx);
        let (a, b, c) = (row(jm), row(j), row(jp));
        for i in 0..nv {
            rhs[j * nv + i] = scale * (c[i] - 2.0 * b[i] + a[i]);
        }
    }
    // perturbed diagonal: tridiag(1, 4, 1) with corners removed
    let gamma = -4.0;
    let mut diag = vec![4.0; nx];
    diag[0] -= gamma;
    diag[nx - 1] -= 1.0 / gamma;
    let mut cp = vec![0.0; nx];
    let mut denom = vec![0.0; nx];
    for i in 0..nx {
        let prev = if i == 0 { 0.0 } else { cp[i - 1] };
        denom[i] = diag[i] - prev;
        cp[i] = 1.0 / denom[i];
    }
    let solve_scalar = |r: &[f64]| {
        let mut d = vec![0.0; nx];
        for i in 0..nx {
            let prev = if i == 0 { 0.0 } else { d[i - 1] };
            d[i] = (r[i] - prev) / denom[i];
        }
        for i in (0..nx - 1).rev() {
            d[i] -= cp[i] * d[i + 1];
        }
        d
    };
    let mut u = vec![0.0; nx];
    u[0] = gamma;
    u[nx - 1] = 1.0;
    let z = solve_scalar(&u);
    let zfac = 1.0 + z[0] + z[nx - 1] / gamma;

    // vector Thomas on whole rows
    let mut x = rhs;
    for i in 1..nx {
        let (prev, cur) = x.split_at_mut(i * nv);
        let prev = &prev[(i - 1) * nv..];
        let inv = 1.0 / denom[i - 1];
        for (c, p) in cur[..nv].iter_mut().zip(prev) {
            *c -= p * inv;
        }
    }
    for i in 0..nx {
        let inv = 1.0 / denom[i];
        x[i * nv..(i + 1) * nv].iter_mut().for_each(|c| *c *= inv);
    }
    for i in (0..nx - 1).rev() {
        let (cur, next) = x.split_at_mut((i + 1) * nv);
        let cur = &mut cur[i * nv..];
        for (c, n) in cur.iter_mut().zip(&next[..nv]) {
            *c -= cp[i] * n;
        }
    }
    for col in 0..nv {
        let factor = (x[col] + x[(nx - 1) * nv + col] / gamma) / zfac;
        for i in 0..nx {
            x[i * nv + col] -= factor * z[i];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(l: f64, dx: f64, dv: f64, u: f64) -> PhaseGrid {
        PhaseGrid::new(l, dx, dv, u).unwrap()
    }

    #[test]
    fn nodes_are_reproduced_exactly() {
        let g = grid(1.0, 0.1, 0.1, 1.0);
        let f = DensityField::sample(g, |x, v| (3.0 * x).sin() + v * v + 2.0);
        let lin = LinearInterpolant::new(&f);
        for j in 0..g.nx() {
            for k in -10..=10 {
                assert_eq!(lin.eval(g.x(j), g.v(k)), f.at(j, k));
            }
        }
    }

    #[test]
    fn cell_center_is_corner_average() {
        let g = grid(1.0, 0.25, 0.5, 1.0);
        let mut f = DensityField::zeros(g);
        let nv = g.nv();
        let (a, b, c, d) = (1.0, 2.0, 5.0, 7.0);
        f.values_mut()[nv + 2] = a;
        f.values_mut()[nv + 3] = b;
        f.values_mut()[2 * nv + 2] = c;
        f.values_mut()[2 * nv + 3] = d;
        let val = interp_linear(&f, 0.375, 0.25);
        assert!((val - (a + b + c + d) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn affine_reproduction() {
        // periodic in x is incompatible with a global affine x term, so the
        // probe stays inside one period away from the seam
        let g = grid(1.0, 1.0 / 16.0, 1.0 / 8.0, 2.0);
        let f = DensityField::sample(g, |x, v| 2.0 * x + 3.0 * v);
        let lin = LinearInterpolant::new(&f);
        for i in 0..200 {
            let x = 0.9 * (i as f64 * 0.618_034).fract();
            let v = -2.0 + 4.0 * (i as f64 * 0.414_214).fract();
            assert!((lin.eval(x, v) - (2.0 * x + 3.0 * v)).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_wrap_averages_seam() {
        let g = grid(1.0, 0.125, 0.25, 1.0);
        let f = DensityField::sample(g, |x, _| 1.0 + x);
        let v = g.v(1);
        let val = interp_linear(&f, 1.0 - 0.0625, v);
        assert!((val - (f.at(7, 1) + f.at(0, 1)) / 2.0).abs() < 1e-15);
        // shifting by whole periods changes nothing
        assert_eq!(interp_linear(&f, 0.3125, v), interp_linear(&f, 3.3125, v));
        assert_eq!(interp_linear(&f, 0.3125, v), interp_linear(&f, -0.6875, v));
    }

    #[test]
    fn zero_outside_domain() {
        let g = grid(1.0, 0.25, 0.25, 1.0);
        let f = DensityField::sample(g, |_, _| 1.0);
        assert_eq!(interp_linear(&f, 0.3, 1.0 + 1e-9), 0.0);
        assert_eq!(interp_linear(&f, 0.3, -1.5), 0.0);
        assert_eq!(interp_linear(&f, 0.3, 1.0), 1.0);
        assert_eq!(interp_linear(&f, 0.3, -1.0), 1.0);
    }

    #[test]
    fn linear_error_is_second_order() {
        // |D^2 g| <= 4 pi^2 for sin(2 pi x) cos(pi v / 2) terms
        let gfun = |x: f64, v: f64| (2.0 * PI * x).sin() * (PI * v / 2.0).cos();
        let mut errs = Vec::new();
        for n in [16usize, 32, 64] {
            let h = 1.0 / n as f64;
            let g = grid(1.0, h, h, 1.0);
            let f = DensityField::sample(g, gfun);
            let lin = LinearInterpolant::new(&f);
            let mut err: f64 = 0.0;
            for i in 0..2000 {
                let x = (i as f64 * 0.754_877_7).fract();
                let v = -1.0 + 2.0 * (i as f64 * 0.569_840_3).fract();
                err = err.max((lin.eval(x, v) - gfun(x, v)).abs());
            }
            assert!(err <= 4.0 * PI * PI * h * h, "n={n} err={err}");
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8, "{errs:?}");
        }
    }

    #[test]
    fn spline_reproduces_nodes() {
        let g = grid(1.0, 1.0 / 16.0, 1.0 / 8.0, 2.0);
        let f = DensityField::sample(g, |x, v| (2.0 * PI * x).cos() * (-v * v).exp() + 0.1 * v);
        let s = SplineInterpolant::new(&f).unwrap();
        for j in 0..g.nx() {
            for k in -16..=16 {
                assert!((s.eval(g.x(j), g.v(k)) - f.at(j, k)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn spline_reproduces_cubic_in_v_away_from_ends() {
        let g = grid(1.0, 1.0 / 8.0, 1.0 / 16.0, 4.0);
        let p = |v: f64| 0.3 * v * v * v - v * v + 2.0 * v - 1.0;
        let f = DensityField::sample(g, |_, v| p(v));
        let s = SplineInterpolant::new(&f).unwrap();
        for i in 0..100 {
            let v = -1.5 + 3.0 * (i as f64 * 0.618_034).fract();
            let x = (i as f64 * 0.3819).fract();
            assert!((s.eval(x, v) - p(v)).abs() < 1e-8, "v={v}");
        }
    }

    #[test]
    fn spline_error_is_fourth_order() {
        let gfun = |x: f64, v: f64| (2.0 * PI * x).cos() * (-v * v / 2.0).exp();
        let mut errs = Vec::new();
        for n in [16usize, 32, 64] {
            let g = grid(1.0, 1.0 / n as f64, 6.0 / n as f64, 6.0);
            let f = DensityField::sample(g, gfun);
            let s = SplineInterpolant::new(&f).unwrap();
            let mut err: f64 = 0.0;
            for i in 0..2000 {
                let x = (i as f64 * 0.754_877_7).fract();
                let v = -3.0 + 6.0 * (i as f64 * 0.569_840_3).fract();
                err = err.max((s.eval(x, v) - gfun(x, v)).abs());
            }
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 3.5, "{errs:?}");
        }
    }

    #[test]
    fn spline_rejects_tiny_grids() {
        let g = grid(1.0, 0.5, 1.0, 1.0);
        let f = DensityField::zeros(g);
        assert!(SplineInterpolant::new(&f).is_err());
        assert!(interp_spline(&f, 0.1, 0.1).is_err());
    }
}

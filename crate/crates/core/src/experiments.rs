//! Experiment drivers: strong convergence under path coupling, the
//! adaptive/non-adaptive timing comparison, and Monte Carlo averages of the
//! diagnostics.

use std::time::Duration;

use rayon::prelude::*;

use crate::characteristics::IntegratorKind;
use crate::config::SimulationConfig;
use crate::diagnostics::{fit_polynomial, reference_laws, DiagnosticsRecord, LawField, ReferenceLaws};
use crate::error::{Error, Result};
use crate::grid::{DensityField, PhaseGrid};
use crate::noise::BrownianIncrements;
use crate::solver::{run, run_nonadaptive, sample_increments, RunResult};

/// Default cap on phase-space nodes of the finest convergence level.
pub const DEFAULT_NODE_BUDGET: usize = 50_000_000;

/// Run `f` on a pool of `threads` workers, or on the global pool for `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Configuration of refinement level `level`: `tau`, `dx`, `dv` halved `level` times.
pub fn refined(cfg: &SimulationConfig, level: u32) -> SimulationConfig {
    let s = (1u64 << level) as f64;
    SimulationConfig { steps: cfg.steps << level, dx: cfg.dx / s, dv: cfg.dv / s, ..cfg.clone() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub tau: f64,
    pub dx: f64,
    pub dv: f64,
    /// sup over coarse nodes of the RMS difference between this level and the next
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub integrator: IntegratorKind,
    pub samples: usize,
    pub rows: Vec<ConvergenceRow>,
    /// `log2(e_l / e_{l+1})` for consecutive rows
    pub orders: Vec<f64>,
    /// least-squares slope of `-log2 e` against level
    pub fitted_order: f64,
    /// noise checksum per level for sample 0, coarsest first
    pub path_checksums: Vec<String>,
    pub min_value: f64,
}

fn node_value(field: &DensityField, j: usize, k: isize) -> f64 {
    if k.unsigned_abs() > field.grid().half_nodes() {
        0.0
    } else {
        field.at(j, k)
    }
}

/// Strong error of the scheme under refinement of `tau`, `dx`, `dv` together.
///
/// Every sample draws one path at the finest step and feeds each coarser
/// level the block sums of that path. The error between levels `l` and
/// `l + 1` is the supremum, over nodes of the coarsest grid in
/// `[0, L) x [-w, w]`, of the root mean square over samples of the nodal
/// difference at the final time.
pub fn run_convergence_study(base: &SimulationConfig, levels: u32, samples: usize) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::InvalidParameter("a convergence study needs at least two levels".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("a convergence study needs at least one sample".into()));
    }
    base.validate()?;
    let top = levels - 1;
    let cfgs: Vec<SimulationConfig> = (0..levels).map(|l| refined(base, l)).collect();
    let finest = &cfgs[top as usize];
    let budget = base.node_budget.unwrap_or(DEFAULT_NODE_BUDGET);
    let nodes = PhaseGrid::new(finest.length, finest.dx, finest.dv, finest.u0)?.node_count();
    if nodes > budget {
        return Err(Error::Budget { nodes, budget });
    }
    let coarse = PhaseGrid::new(base.length, base.dx, base.dv, base.u0)?;
    let window = (base.error_window / base.dv + 1e-9).floor() as isize;
    let probes: Vec<(usize, isize)> =
        (0..coarse.nx()).flat_map(|j| (-window..=window).map(move |k| (j, k))).collect();

    let paths = |s: usize| -> Result<Vec<BrownianIncrements>> {
        // repeated halving, so each level is exactly the pairwise sums of the next
        let mut out = vec![sample_increments(finest, s as u64)?];
        for _ in 0..top {
            let next = out.last().expect("non-empty").coarsen(2)?;
            out.push(next);
        }
        out.reverse();
        Ok(out)
    };
    let checks = paths(0)?;
    for l in 0..top as usize {
        // the level-l path must be the pairwise sums of the level-(l+1) path
        if checks[l].checksum() != checks[l + 1].coarsen(2)?.checksum() {
            return Err(Error::InvalidParameter(format!("path coupling broken between levels {l} and {}", l + 1)));
        }
    }
    let path_checksums = checks.iter().map(BrownianIncrements::checksum).collect();

    let zero = || (vec![vec![0.0; probes.len()]; top as usize], f64::INFINITY);
    let (sq, min_value) = (0..samples)
        .into_par_iter()
        .map(|s| -> Result<(Vec<Vec<f64>>, f64)> {
            let incs = paths(s)?;
            let results: Vec<RunResult> =
                cfgs.iter().zip(&incs).map(|(c, inc)| run(c, inc)).collect::<Result<_>>()?;
            let mut acc = zero();
            for l in 0..top as usize {
                let (a, b) = (&results[l].final_field, &results[l + 1].final_field);
                let (ra, rb) = (1usize << l, 1usize << (l + 1));
                for (p, &(j, k)) in probes.iter().enumerate() {
                    let d = node_value(a, j * ra, k * ra as isize) - node_value(b, j * rb, k * rb as isize);
                    acc.0[l][p] = d * d;
                }
            }
            acc.1 = results.iter().map(|r| r.min_value).fold(f64::INFINITY, f64::min);
            Ok(acc)
        })
        .try_reduce(zero, |mut a, b| {
            for (x, y) in a.0.iter_mut().zip(&b.0) {
                x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
            }
            a.1 = a.1.min(b.1);
            Ok(a)
        })?;

    let errors: Vec<f64> = sq
        .iter()
        .map(|level| level.iter().map(|s| (s / samples as f64).sqrt()).fold(0.0, f64::max))
        .collect();
    let rows = errors
        .iter()
        .enumerate()
        .map(|(l, &error)| {
            let c = &cfgs[l];
            ConvergenceRow { level: l as u32, tau: c.tau(), dx: c.dx, dv: c.dv, error }
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let fitted_order = if errors.len() == 1 {
        f64::NAN
    } else {
        let lv: Vec<f64> = (0..errors.len()).map(|l| l as f64).collect();
        let le: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
        -fit_polynomial(&lv, &le, 1)[1]
    };
    Ok(ConvergenceReport {
        integrator: base.integrator,
        samples,
        rows,
        orders,
        fitted_order,
        path_checksums,
        min_value,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub final_time: f64,
    pub steps: usize,
    pub adaptive_s: f64,
    pub nonadaptive_s: f64,
    /// non-adaptive over adaptive wall clock
    pub ratio: f64,
}

fn median(mut xs: Vec<Duration>) -> f64 {
    xs.sort();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2].as_secs_f64()
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2]).as_secs_f64()
    }
}

/// Wall clock of the adaptive run and the fixed-growth baseline on the same
/// path (sample 0), single-threaded, median over `reps` repetitions.
pub fn run_timing_study(cfgs: &[SimulationConfig], reps: usize) -> Result<Vec<TimingRow>> {
    let reps = reps.max(1);
    with_threads(Some(1), || {
        cfgs.iter()
            .map(|cfg| {
                let inc = sample_increments(cfg, 0)?;
                let mut a = Vec::with_capacity(reps);
                let mut b = Vec::with_capacity(reps);
                for _ in 0..reps {
                    a.push(run(cfg, &inc)?.wall_clock);
                    b.push(run_nonadaptive(cfg, &inc)?.wall_clock);
                }
                let (adaptive_s, nonadaptive_s) = (median(a), median(b));
                Ok(TimingRow {
                    final_time: cfg.final_time,
                    steps: cfg.steps,
                    adaptive_s,
                    nonadaptive_s,
                    ratio: nonadaptive_s / adaptive_s,
                })
            })
            .collect()
    })?
}

/// Diagnostic columns of the time series, in CSV order after `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Mass,
    L1,
    L2,
    Momentum,
    Kinetic,
    Potential,
    Total,
    HalfWidth,
    Grew,
}

impl Quantity {
    pub const ALL: [Quantity; 9] = [
        Quantity::Mass,
        Quantity::L1,
        Quantity::L2,
        Quantity::Momentum,
        Quantity::Kinetic,
        Quantity::Potential,
        Quantity::Total,
        Quantity::HalfWidth,
        Quantity::Grew,
    ];

    pub fn of(self, r: &DiagnosticsRecord) -> Option<f64> {
        match self {
            Quantity::Mass => Some(r.mass),
            Quantity::L1 => Some(r.l1),
            Quantity::L2 => Some(r.l2),
            Quantity::Momentum => Some(r.momentum),
            Quantity::Kinetic => Some(r.kinetic),
            Quantity::Potential => r.potential,
            Quantity::Total => r.total,
            Quantity::HalfWidth => Some(r.half_width),
            Quantity::Grew => Some(if r.grew { 1.0 } else { 0.0 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self { mean, se: (var / n).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub samples: usize,
    pub times: Vec<f64>,
    stats: Vec<(Quantity, SeriesStats)>,
    pub laws: ReferenceLaws,
    /// per-sample least-squares slope of momentum
    pub momentum_slope: Estimate,
    /// per-sample quadratic coefficient of kinetic energy
    pub kinetic_quadratic: Estimate,
    /// per-sample linear coefficient of kinetic energy
    pub kinetic_linear: Estimate,
    /// per-sample slope of total energy, when the field has a potential
    pub total_slope: Option<Estimate>,
    /// `P(T) - P(0)`
    pub momentum_drift: Estimate,
    /// largest `|mass(T) - mass(0)|` over samples
    pub max_mass_drift: f64,
    pub min_value: f64,
}

impl MonteCarloReport {
    pub fn series(&self, q: Quantity) -> Option<&SeriesStats> {
        self.stats.iter().find(|(k, _)| *k == q).map(|(_, s)| s)
    }
}

/// Independent runs with seeds `cfg.seed + i`, `i < samples`, executed on
/// `threads` workers (global pool for `None`).
pub fn run_monte_carlo(cfg: &SimulationConfig, samples: usize, threads: Option<usize>) -> Result<MonteCarloReport> {
    if samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least 2 samples for a standard error (got {samples})"
        )));
    }
    cfg.validate()?;
    let runs: Vec<(Vec<DiagnosticsRecord>, f64)> = with_threads(threads, || {
        (0..samples)
            .into_par_iter()
            .map(|s| {
                let inc = sample_increments(cfg, s as u64)?;
                let r = run(cfg, &inc)?;
                Ok((r.diagnostics, r.min_value))
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let times: Vec<f64> = runs[0].0.iter().map(|r| r.t).collect();
    let mut stats = Vec::new();
    for q in Quantity::ALL {
        if runs[0].0.iter().any(|r| q.of(r).is_none()) {
            continue;
        }
        let (mut mean, mut se) = (Vec::with_capacity(times.len()), Vec::with_capacity(times.len()));
        for i in 0..times.len() {
            let xs: Vec<f64> = runs.iter().map(|(d, _)| q.of(&d[i]).unwrap_or(f64::NAN)).collect();
            let e = Estimate::from_samples(&xs);
            mean.push(e.mean);
            se.push(e.se);
        }
        stats.push((q, SeriesStats { mean, se }));
    }

    let fit = |q: Quantity, degree: usize, coef: usize| -> Option<Estimate> {
        let per: Option<Vec<f64>> = runs
            .iter()
            .map(|(d, _)| {
                let y: Option<Vec<f64>> = d.iter().map(|r| q.of(r)).collect();
                y.map(|y| fit_polynomial(&times, &y, degree)[coef])
            })
            .collect();
        per.map(|p| Estimate::from_samples(&p))
    };
    let drift: Vec<f64> = runs.iter().map(|(d, _)| d[d.len() - 1].momentum - d[0].momentum).collect();
    let max_mass_drift =
        runs.iter().map(|(d, _)| (d[d.len() - 1].mass - d[0].mass).abs()).fold(0.0, f64::max);
    let sigma = cfg.sigma_model();
    let law_field = match cfg.field.case_one() {
        Some(ref e) => reference_laws(&runs[0].0[0], LawField::CaseOne(e), &sigma),
        None => reference_laws(&runs[0].0[0], LawField::CaseTwo, &sigma),
    };
    Ok(MonteCarloReport {
        samples,
        times: times.clone(),
        stats,
        laws: law_field,
        momentum_slope: fit(Quantity::Momentum, 1, 1).expect("momentum always present"),
        kinetic_quadratic: fit(Quantity::Kinetic, 2, 2).expect("kinetic always present"),
        kinetic_linear: fit(Quantity::Kinetic, 2, 1).expect("kinetic always present"),
        total_slope: fit(Quantity::Total, 1, 1),
        momentum_drift: Estimate::from_samples(&drift),
        max_mass_drift,
        min_value: runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
    })
}

/// Human-readable comparison of the fitted mean laws with the closed forms.
pub fn monte_carlo_summary(report: &MonteCarloReport) -> String {
    let mut out = format!("samples {}\n", report.samples);
    let line = |name: &str, e: &Estimate, expect: Option<f64>| {
        let exp = expect.map(|x| format!(" expected {x}")).unwrap_or_default();
        format!("{name} {} +- {}{exp}\n", e.mean, e.se)
    };
    out += &line("momentum_slope", &report.momentum_slope, report.laws.momentum.map(|p| p.0[1]));
    out += &line("kinetic_linear", &report.kinetic_linear, report.laws.kinetic.map(|p| p.0[1]));
    out += &line("kinetic_quadratic", &report.kinetic_quadratic, report.laws.kinetic.map(|p| p.0[2]));
    if let Some(e) = &report.total_slope {
        out += &line("total_slope", e, report.laws.total.map(|p| p.0[1]));
    }
    out += &line("momentum_drift", &report.momentum_drift, None);
    out += &format!("max_mass_drift {}\nmin_value {}\n", report.max_mass_drift, report.min_value);
    out
}

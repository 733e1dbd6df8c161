//! The dynamic-domain semi-Lagrangian time loop and its fixed-growth
//! baseline.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::characteristics::{inverse_step, IntegratorKind, NodalForcing, StepForcing, TrigForcing};
use crate::config::{FieldSpec, ReconstructionKind, SimulationConfig};
use crate::diagnostics::{DiagnosticsRecord, FieldModel};
use crate::error::{Error, Result};
use crate::field::{density_rho, solve_field, CaseOneField, CaseTwoField, SigmaModel, TrigForm};
use crate::grid::{DensityField, PhaseGrid};
use crate::interp::{LinearInterpolant, Reconstruction, SplineInterpolant};
use crate::noise::BrownianIncrements;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `exp(-v^2/2) (1 + alpha cos(2 pi x / L)) / sqrt(2 pi)`
pub fn initial_density_landau(x: f64, v: f64, alpha: f64, length: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * v * v).exp() * (1.0 + alpha * (2.0 * PI * x / length).cos())
}

/// `v^2 exp(-v^2/2) (1 + alpha cos(2 pi x / L)) / sqrt(2 pi)`
pub fn initial_density_two_stream(x: f64, v: f64, alpha: f64, length: f64) -> f64 {
    v * v * initial_density_landau(x, v, alpha, length)
}

/// Hard cap on the nodes of a single density table.
pub const MAX_NODES: usize = 1 << 31;

/// Position samples used when probing a density for decay.
const U0_PROBE_X: usize = 64;
/// Largest admissible `U0`, in velocity cells.
const U0_CAP_CELLS: usize = 10_000;

/// Smallest multiple `U0` of `dv` such that `|f0(x, v)| < epsilon0` at all
/// probe points with `U0 <= |v| <= 2 U0`. Probes use spacing `dv/4` in `v`
/// and 64 positions in `[0, L)`.
pub fn choose_u0(density: impl Fn(f64, f64) -> f64, length: f64, epsilon0: f64, dv: f64) -> Result<f64> {
    if !(epsilon0 > 0.0 && dv > 0.0 && length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "choose_u0 needs epsilon0, dv, L > 0 (got {epsilon0}, {dv}, {length})"
        )));
    }
    let h = dv / 4.0;
    let xs: Vec<f64> = (0..U0_PROBE_X).map(|i| length * i as f64 / U0_PROBE_X as f64).collect();
    let exceeds = |i: usize| {
        let v = i as f64 * h;
        xs.iter().any(|&x| !(density(x, v).abs() < epsilon0 && density(x, -v).abs() < epsilon0))
    };
    // probe i sits at v = i h; U0 = m dv needs no bad probe in [4m, 8m]
    let mut last_bad: Option<usize> = None;
    let mut probed = 0;
    for m in 1..=U0_CAP_CELLS {
        while probed <= 8 * m {
            if exceeds(probed) {
                last_bad = Some(probed);
            }
            probed += 1;
        }
        if last_bad.is_none_or(|b| b < 4 * m) {
            return Ok(m as f64 * dv);
        }
    }
    Err(Error::NoDecay { epsilon0, cap: U0_CAP_CELLS as f64 * dv })
}

/// How the velocity half-width evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainMode {
    /// grow by `Xi_n` only when the boundary band carries mass above `epsilon0`
    Adaptive,
    /// truncate increments at `A_tau` and grow every step by the worst case
    NonAdaptive,
    /// never grow; departure points outside `[-U0, U0]` read zero
    Fixed,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// `N + 1` records, the first at `t = 0`
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub final_field: DensityField,
    /// `(step, Xi_n)` for every step at which the half-width grew
    pub growth_log: Vec<(usize, f64)>,
    /// time spent stepping, excluding observer callbacks
    pub wall_clock: Duration,
    pub seed: u64,
    /// smallest nodal value seen over all steps
    pub min_value: f64,
}

#[derive(Debug, Clone)]
enum FieldState {
    CaseOne { spec: CaseOneField, trig: TrigForm },
    CaseTwo(CaseTwoField),
}

impl FieldState {
    fn model(&self, length: f64) -> FieldModel<'_> {
        match self {
            FieldState::CaseOne { spec, .. } => FieldModel::CaseOne { field: spec, length },
            FieldState::CaseTwo(e) => FieldModel::CaseTwo(e),
        }
    }
}

/// `sum_k sigmax_k * sqrt(tau |ln tau|)`, the increment cap of the baseline.
pub fn truncation_level(tau: f64, sigmax: &[f64]) -> f64 {
    sigmax.iter().sum::<f64>() * (tau * tau.ln().abs()).sqrt()
}

/// Per-step growth of the baseline, in velocity cells.
pub fn nonadaptive_growth_cells(tau: f64, emax: f64, sigmax: &[f64], dv: f64) -> usize {
    let a = truncation_level(tau, sigmax);
    let c: f64 = sigmax.iter().sum();
    let reach = tau * emax + a.max(c * a);
    (reach / dv).ceil() as usize
}

/// Time stepper for one sample path.
pub struct Simulation {
    length: f64,
    tau: f64,
    integrator: IntegratorKind,
    reconstruction: ReconstructionKind,
    mode: DomainMode,
    epsilon0: f64,
    sigma: SigmaModel,
    sigmax: Vec<f64>,
    emax: f64,
    increments: BrownianIncrements,
    fixed_cells: usize,
    field: FieldState,
    density: DensityField,
    step: usize,
    growth_log: Vec<(usize, f64)>,
    min_value: f64,
    diagnostics: Vec<DiagnosticsRecord>,
}

impl Simulation {
    /// Sample the configured initial density on the `U0` grid.
    pub fn new(cfg: &SimulationConfig, increments: BrownianIncrements, mode: DomainMode) -> Result<Self> {
        let grid = PhaseGrid::new(cfg.length, cfg.dx, cfg.dv, cfg.u0)?;
        let (initial, length) = (cfg.initial, cfg.length);
        let density = DensityField::sample(grid, |x, v| initial.eval(x, v, length));
        Self::from_density(cfg, density, increments, mode)
    }

    /// Start from an arbitrary nodal density on the configured mesh.
    pub fn from_density(
        cfg: &SimulationConfig,
        density: DensityField,
        increments: BrownianIncrements,
        mode: DomainMode,
    ) -> Result<Self> {
        cfg.validate()?;
        let g = density.grid();
        let mesh = PhaseGrid::new(cfg.length, cfg.dx, cfg.dv, g.half_width())?;
        if !mesh.same_mesh(g) {
            return Err(Error::InvalidParameter("initial density is not on the configured mesh".into()));
        }
        let tau = cfg.tau();
        if increments.components() != cfg.noise_components() || increments.steps() != cfg.steps {
            return Err(Error::InvalidParameter(format!(
                "increments have {} components x {} steps, configuration needs {} x {}",
                increments.components(),
                increments.steps(),
                cfg.noise_components(),
                cfg.steps
            )));
        }
        if (increments.tau() - tau).abs() > 1e-12 * tau {
            return Err(Error::InvalidParameter(format!(
                "increments sampled at tau = {}, configuration has tau = {tau}",
                increments.tau()
            )));
        }
        let sigma = cfg.sigma_model();
        let sigmax = sigma.sup_bounds();
        let field = match cfg.field {
            FieldSpec::SelfConsistent => FieldState::CaseTwo(solve_field(&density_rho(&density), cfg.length)),
            spec => {
                let spec = spec.case_one().expect("closed-form field");
                FieldState::CaseOne { spec, trig: spec.trig(cfg.length) }
            }
        };
        let emax = match &field {
            FieldState::CaseOne { spec, .. } => spec.sup_bound(cfg.length),
            FieldState::CaseTwo(e) => e.sup_bound(),
        };
        let (increments, fixed_cells) = match mode {
            DomainMode::NonAdaptive => (
                increments.truncated(truncation_level(tau, &sigmax)),
                nonadaptive_growth_cells(tau, emax, &sigmax, cfg.dv),
            ),
            _ => (increments, 0),
        };
        let first = DiagnosticsRecord::compute(0.0, &density, field.model(cfg.length), false);
        let mut diagnostics = Vec::with_capacity(cfg.steps + 1);
        diagnostics.push(first);
        Ok(Self {
            length: cfg.length,
            tau,
            integrator: cfg.integrator,
            reconstruction: cfg.reconstruction,
            mode,
            epsilon0: cfg.epsilon0(),
            sigma,
            sigmax,
            emax,
            increments,
            fixed_cells,
            field,
            min_value: density.min_value(),
            density,
            step: 0,
            growth_log: Vec::new(),
            diagnostics,
        })
    }

    pub fn density(&self) -> &DensityField {
        &self.density
    }

    /// Number of completed steps.
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.tau
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.increments.steps()
    }

    pub fn diagnostics(&self) -> &[DiagnosticsRecord] {
        &self.diagnostics
    }

    pub fn growth_log(&self) -> &[(usize, f64)] {
        &self.growth_log
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    /// Increments actually driving the run (truncated for the baseline).
    pub fn increments(&self) -> &BrownianIncrements {
        &self.increments
    }

    /// Advance one step. Returns `false` once all `N` steps are done.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_finished() {
            return Ok(false);
        }
        let n = self.step + 1;
        let dbeta = self.increments.at_step(self.step);
        let dv = self.density.grid().dv();

        let cells = match self.mode {
            DomainMode::Adaptive => {
                let xi = crate::characteristics::displacement_bound(self.tau, self.emax, &self.sigmax, &dbeta);
                if !xi.is_finite() {
                    return Err(Error::NonFinite { step: n });
                }
                let cells = (xi / dv).ceil() as usize;
                if self.density.band_exceeds(cells, self.epsilon0) {
                    cells
                } else {
                    0
                }
            }
            DomainMode::NonAdaptive => self.fixed_cells,
            DomainMode::Fixed => 0,
        };
        let grid = self.density.grid();
        let nodes = (grid.nv() as u128 + 2 * cells as u128) * grid.nx() as u128;
        if nodes > MAX_NODES as u128 {
            return Err(Error::Budget { nodes: nodes.min(usize::MAX as u128) as usize, budget: MAX_NODES });
        }
        let old_u = grid.half_width();
        let mut next = DensityField::zeros(self.density.grid().widened(cells));
        let noise = self.sigma.contract(&dbeta);
        match &self.field {
            FieldState::CaseOne { trig, .. } => {
                let forcing = TrigForcing { field: *trig, noise };
                self.backtrace_trig(&forcing, old_u, &mut next)?;
            }
            FieldState::CaseTwo(e) => {
                let forcing = NodalForcing { field: e, noise };
                self.backtrace(&forcing, old_u, &mut next)?;
            }
        }
        if !next.all_finite() {
            return Err(Error::NonFinite { step: n });
        }
        if cells > 0 {
            self.growth_log.push((n, cells as f64 * dv));
        }
        if let FieldState::CaseTwo(e) = &mut self.field {
            *e = solve_field(&density_rho(&next), self.length);
        }
        self.min_value = self.min_value.min(next.min_value());
        self.density = next;
        self.step = n;
        let record =
            DiagnosticsRecord::compute(self.time(), &self.density, self.field.model(self.length), cells > 0);
        self.diagnostics.push(record);
        Ok(true)
    }

    fn backtrace<S: StepForcing + Sync>(&self, forcing: &S, old_u: f64, next: &mut DensityField) -> Result<()> {
        match self.reconstruction {
            ReconstructionKind::Linear => {
                let r = LinearInterpolant::new(&self.density);
                fill(self.integrator, self.tau, self.length, old_u, forcing, &r, next);
            }
            ReconstructionKind::Spline => {
                let r = SplineInterpolant::new(&self.density)?;
                fill(self.integrator, self.tau, self.length, old_u, forcing, &r, next);
            }
        }
        Ok(())
    }

    fn backtrace_trig(&self, forcing: &TrigForcing, old_u: f64, next: &mut DensityField) -> Result<()> {
        match self.reconstruction {
            ReconstructionKind::Linear => {
                let r = LinearInterpolant::new(&self.density);
                fill_trig(self.integrator, self.tau, old_u, forcing, &r, next);
            }
            ReconstructionKind::Spline => {
                let r = SplineInterpolant::new(&self.density)?;
                fill_trig(self.integrator, self.tau, old_u, forcing, &r, next);
            }
        }
        Ok(())
    }

    /// Step to the end, calling `observer(n, t, f_n)` at `n = 0` and after
    /// every step.
    pub fn run_to_end(mut self, seed: u64, mut observer: impl FnMut(usize, f64, &DensityField)) -> Result<RunResult> {
        observer(0, 0.0, &self.density);
        let mut elapsed = Duration::ZERO;
        loop {
            let t0 = Instant::now();
            let more = self.step()?;
            elapsed += t0.elapsed();
            if !more {
                break;
            }
            observer(self.step, self.time(), &self.density);
        }
        Ok(RunResult {
            diagnostics: self.diagnostics,
            final_field: self.density,
            growth_log: self.growth_log,
            wall_clock: elapsed,
            seed,
            min_value: self.min_value,
        })
    }
}

/// Back-trace every node of `next` and read the old reconstruction there.
fn fill<S: StepForcing + Sync, R: Reconstruction>(
    kind: IntegratorKind,
    tau: f64,
    length: f64,
    old_u: f64,
    forcing: &S,
    recon: &R,
    next: &mut DensityField,
) {
    let grid = *next.grid();
    let nv = grid.nv();
    next.values_mut().par_chunks_mut(nv).enumerate().for_each(|(j, row)| {
        let x = grid.x(j);
        for (c, out) in row.iter_mut().enumerate() {
            let (xd, vd) = inverse_step(kind, x, grid.v_col(c), tau, length, forcing);
            *out = if vd.abs() <= old_u { recon.eval(xd, vd) } else { 0.0 };
        }
    });
}

/// [`fill`] for closed-form coefficients. The sines at departure positions
/// `x_j - theta tau v_c` come from per-row and per-column tables through the
/// angle-addition formulas, so no node evaluates a transcendental.
fn fill_trig<R: Reconstruction>(
    kind: IntegratorKind,
    tau: f64,
    old_u: f64,
    forcing: &TrigForcing,
    recon: &R,
    next: &mut DensityField,
) {
    let grid = *next.grid();
    let nv = grid.nv();
    let kick = TrigForm::combine(tau, &forcing.field, 1.0, &forcing.noise);
    let k = if forcing.field.is_constant() { forcing.noise.wavenumber } else { forcing.field.wavenumber };
    let theta = match kind {
        IntegratorKind::Ssm => 0.5,
        IntegratorKind::EmBaseline => 0.0,
        IntegratorKind::Sem | IntegratorKind::Ltsm => 1.0,
    };
    let shift: Vec<(f64, f64)> = (0..nv).map(|c| (k * theta * tau * grid.v_col(c)).sin_cos()).collect();
    next.values_mut().par_chunks_mut(nv).enumerate().for_each(|(j, row)| {
        let x = grid.x(j);
        // LTSM reads the noise at x + tau^2 E(x) - tau v and the field at x
        let (base, form, row_kick) = match kind {
            IntegratorKind::Ltsm => {
                let e = forcing.field.eval(x);
                (x + tau * tau * e, forcing.noise, tau * e)
            }
            _ => (x, kick, 0.0),
        };
        let (sx, cx) = (k * base).sin_cos();
        for (c, out) in row.iter_mut().enumerate() {
            let v = grid.v_col(c);
            let (ss, cs) = shift[c];
            let sin = sx * cs - cx * ss;
            let cos = cx * cs + sx * ss;
            let vd = v - row_kick - (form.constant + form.sin * sin + form.cos * cos);
            let xd = match kind {
                IntegratorKind::Ssm => x - 0.5 * tau * (v + vd),
                IntegratorKind::Ltsm => base - tau * v,
                _ => x - tau * v,
            };
            *out = if vd.abs() <= old_u { recon.eval(xd, vd) } else { 0.0 };
        }
    });
}

/// Increments for sample `index`: seed `cfg.seed + index`.
pub fn sample_increments(cfg: &SimulationConfig, index: u64) -> Result<BrownianIncrements> {
    BrownianIncrements::sample(cfg.noise_components(), cfg.steps, cfg.tau(), cfg.seed.wrapping_add(index))
}

pub fn run(cfg: &SimulationConfig, inc: &BrownianIncrements) -> Result<RunResult> {
    run_with(cfg, inc, DomainMode::Adaptive, |_, _, _| {})
}

pub fn run_nonadaptive(cfg: &SimulationConfig, inc: &BrownianIncrements) -> Result<RunResult> {
    run_with(cfg, inc, DomainMode::NonAdaptive, |_, _, _| {})
}

pub fn run_with(
    cfg: &SimulationConfig,
    inc: &BrownianIncrements,
    mode: DomainMode,
    observer: impl FnMut(usize, f64, &DensityField),
) -> Result<RunResult> {
    Simulation::new(cfg, inc.clone(), mode)?.run_to_end(inc.seed(), observer)
}

/// Run from a custom nodal initial density.
pub fn run_from(
    cfg: &SimulationConfig,
    initial: DensityField,
    inc: &BrownianIncrements,
    mode: DomainMode,
) -> Result<RunResult> {
    Simulation::from_density(cfg, initial, inc.clone(), mode)?.run_to_end(inc.seed(), |_, _, _| {})
}

use svlasov::characteristics::displacement_bound;
use svlasov::config::{FieldSpec, InitialSpec, ReconstructionKind, SimulationConfig};
use svlasov::field::SigmaSpec;
use svlasov::grid::{DensityField, PhaseGrid};
use svlasov::noise::BrownianIncrements;
use svlasov::solver::{
    choose_u0, initial_density_landau, run, run_from, sample_increments, DomainMode, Simulation,
};
use svlasov::IntegratorKind;

fn config(field: FieldSpec, sigma: Vec<SigmaSpec>, integrator: IntegratorKind) -> SimulationConfig {
    SimulationConfig {
        length: 1.0,
        final_time: 0.5,
        steps: 10,
        dx: 1.0 / 32.0,
        dv: 1.0 / 16.0,
        u0: 5.0,
        epsilon0: None,
        integrator,
        reconstruction: ReconstructionKind::Linear,
        seed: 17,
        samples: 1,
        snapshot_every: None,
        error_window: 1.0,
        node_budget: None,
        field,
        sigma,
        initial: InitialSpec::TwoStream { alpha: 0.1 },
    }
}

fn sin_sigma(amplitude: f64) -> Vec<SigmaSpec> {
    vec![SigmaSpec { constant: 0.0, sin: amplitude, cos: 0.0 }]
}

#[test]
fn free_transport_of_velocity_profile_is_exact() {
    let cfg = config(FieldSpec::Constant { value: 0.0 }, vec![], IntegratorKind::Sem);
    let g = PhaseGrid::new(cfg.length, cfg.dx, cfg.dv, cfg.u0).unwrap();
    let f0 = DensityField::sample(g, |_, v| (1.0 + v * v) * (-v * v / 2.0).exp());
    let inc = BrownianIncrements::zeros(1, cfg.steps, cfg.tau());
    for kind in IntegratorKind::ALL {
        let cfg = SimulationConfig { integrator: kind, ..cfg.clone() };
        let r = run_from(&cfg, f0.clone(), &inc, DomainMode::Adaptive).unwrap();
        assert_eq!(r.final_field.values(), f0.values(), "{kind}");
        assert!(r.growth_log.is_empty());
    }
}

#[test]
fn noiseless_runs_are_bit_identical_and_seed_free() {
    let cfg = config(FieldSpec::Cosine { amplitude: 1.0 }, vec![], IntegratorKind::Ssm);
    let a = run(&cfg, &sample_increments(&cfg, 0).unwrap()).unwrap();
    let b = run(&cfg, &sample_increments(&cfg, 0).unwrap()).unwrap();
    let other = SimulationConfig { seed: 99, ..cfg.clone() };
    let c = run(&other, &sample_increments(&other, 5).unwrap()).unwrap();
    assert_eq!(a.diagnostics, b.diagnostics);
    assert_eq!(a.diagnostics, c.diagnostics);
    assert_eq!(a.final_field.values(), c.final_field.values());
}

#[test]
fn same_seed_reproduces_noisy_run() {
    let cfg = config(FieldSpec::SelfConsistent, sin_sigma(0.5), IntegratorKind::Ltsm);
    let a = run(&cfg, &sample_increments(&cfg, 2).unwrap()).unwrap();
    let b = run(&cfg, &sample_increments(&cfg, 2).unwrap()).unwrap();
    assert_eq!(a.diagnostics, b.diagnostics);
    let c = run(&cfg, &sample_increments(&cfg, 3).unwrap()).unwrap();
    assert_ne!(a.diagnostics, c.diagnostics);
}

#[test]
fn linear_reconstruction_keeps_positivity() {
    for kind in IntegratorKind::ALL {
        for field in [FieldSpec::Cosine { amplitude: 1.0 }, FieldSpec::SelfConsistent] {
            let cfg = config(field, sin_sigma(1.0), kind);
            let r = run(&cfg, &sample_increments(&cfg, 1).unwrap()).unwrap();
            assert!(r.min_value >= 0.0, "{kind} {field:?}: {}", r.min_value);
        }
    }
}

#[test]
fn half_width_is_monotone_and_bounded_by_displacements() {
    let cfg = SimulationConfig { steps: 20, ..config(FieldSpec::Cosine { amplitude: 1.0 }, sin_sigma(2.0), IntegratorKind::Ssm) };
    let inc = sample_increments(&cfg, 4).unwrap();
    let mut sim = Simulation::new(&cfg, inc.clone(), DomainMode::Adaptive).unwrap();
    let mut u_prev = sim.density().grid().half_width();
    let mut bound = cfg.u0;
    let sigmax = cfg.sigma_model().sup_bounds();
    let mut n = 0;
    while sim.step().unwrap() {
        let f = sim.density();
        let u = f.grid().half_width();
        assert!(u >= u_prev);
        bound += cfg.dv * (displacement_bound(cfg.tau(), 1.0, &sigmax, &inc.at_step(n)) / cfg.dv).ceil();
        assert!(u <= bound + 1e-9, "step {n}: U = {u} > {bound}");
        // support containment: every stored node lies in [-U, U] by layout
        let m = f.grid().half_nodes() as isize;
        assert!((f.grid().v(m) - u).abs() < 1e-9);
        u_prev = u;
        n += 1;
    }
    assert!(!sim.growth_log().is_empty(), "sigma = 2 should force growth");
}

#[test]
fn decayed_gaussian_does_not_grow_on_first_step() {
    let eps = 1e-8;
    let dv = 1.0 / 16.0;
    let landau = |x: f64, v: f64| initial_density_landau(x, v, 0.05, 1.0);
    let u_decay = choose_u0(landau, 1.0, eps, dv).unwrap();
    // one-cell displacement budget: tau Emax + sigmax |dbeta| <= dv
    let cfg = SimulationConfig {
        u0: u_decay + dv,
        epsilon0: Some(eps),
        steps: 1,
        final_time: 0.01,
        initial: InitialSpec::Landau { alpha: 0.05 },
        ..config(FieldSpec::Cosine { amplitude: 1.0 }, vec![], IntegratorKind::Sem)
    };
    let g = PhaseGrid::new(1.0, cfg.dx, dv, cfg.u0).unwrap();
    let m = g.half_nodes() as isize;
    // oracle: band nodes checked directly against f0
    for j in 0..g.nx() {
        for k in [m - 1, m, -m, 1 - m] {
            assert!(landau(g.x(j), g.v(k)).abs() <= eps);
        }
    }
    let r = run(&cfg, &BrownianIncrements::zeros(1, 1, 0.01)).unwrap();
    assert!(!r.diagnostics[1].grew);
    assert!(r.growth_log.is_empty());
}

#[test]
fn mass_is_stable_over_a_short_run() {
    let cfg = config(FieldSpec::Cosine { amplitude: 1.0 }, sin_sigma(0.5), IntegratorKind::Ssm);
    let r = run(&cfg, &sample_increments(&cfg, 0).unwrap()).unwrap();
    let m0 = r.diagnostics[0].mass;
    for d in &r.diagnostics {
        assert!((d.mass - m0).abs() < 1e-3, "t = {}: {}", d.t, d.mass);
    }
}

#[test]
fn baseline_uses_truncated_increments() {
    let cfg = config(FieldSpec::Cosine { amplitude: 1.0 }, sin_sigma(1.0), IntegratorKind::Sem);
    let inc = sample_increments(&cfg, 0).unwrap();
    let sim = Simulation::new(&cfg, inc, DomainMode::NonAdaptive).unwrap();
    let a = svlasov::solver::truncation_level(cfg.tau(), &[1.0]);
    assert!(sim.increments().values().iter().all(|d| d.abs() <= a));
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svlasov::characteristics::{
    displacement_bound, inverse_step, inverse_step_unwrapped, jacobian_det, IntegratorKind, TrigForcing,
};
use svlasov::field::TrigForm;
use svlasov::noise::BrownianIncrements;

const VOLUME_PRESERVING: [IntegratorKind; 3] = [IntegratorKind::Sem, IntegratorKind::Ltsm, IntegratorKind::Ssm];

fn forcing(e: (f64, f64, f64), s: (f64, f64, f64), dbeta: f64) -> TrigForcing {
    TrigForcing {
        field: TrigForm::new(e.0, e.1, e.2, 1.0),
        noise: TrigForm::new(s.0 * dbeta, s.1 * dbeta, s.2 * dbeta, 1.0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn volume_preserving_maps_have_unit_jacobian(
        x in 0.0..1.0f64,
        v in -6.0..6.0f64,
        tau in 1e-3..0.1f64,
        dbeta in -1.0..1.0f64,
        e in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        s in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
    ) {
        let f = forcing(e, s, dbeta);
        for kind in VOLUME_PRESERVING {
            let det = jacobian_det(kind, x, v, tau, &f);
            prop_assert!((det - 1.0).abs() <= 1e-7, "{} det = {}", kind, det);
        }
    }

    #[test]
    fn departure_position_lies_on_the_torus(
        x in 0.0..1.0f64, v in -20.0..20.0f64, tau in 1e-3..0.5f64, dbeta in -2.0..2.0f64,
    ) {
        let f = forcing((0.3, 1.0, 0.0), (0.0, 1.0, 0.5), dbeta);
        for kind in IntegratorKind::ALL {
            let (xd, vd) = inverse_step(kind, x, v, tau, 1.0, &f);
            let (xu, vu) = inverse_step_unwrapped(kind, x, v, tau, &f);
            prop_assert!((0.0..1.0).contains(&xd));
            prop_assert_eq!(vd, vu);
            let k = (xu - xd).round();
            prop_assert!((xu - xd - k).abs() < 1e-9);
        }
    }
}

#[test]
fn euler_maruyama_is_not_volume_preserving() {
    let f = forcing((0.0, 0.0, 1.0), (0.0, 1.0, 0.0), 0.5);
    let worst = (0..1000)
        .map(|i| {
            let x = i as f64 / 1000.0;
            (jacobian_det(IntegratorKind::EmBaseline, x, 0.3, 0.05, &f) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst >= 1e-4, "{worst}");
}

#[test]
fn velocity_displacement_never_exceeds_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10_000 {
        let e = TrigForm::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 1.0);
        let sig: Vec<TrigForm> = (0..2)
            .map(|_| TrigForm::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 1.0))
            .collect();
        let dbeta = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let tau = rng.gen_range(1e-3..0.2);
        let noise = TrigForm::combine(dbeta[0], &sig[0], dbeta[1], &sig[1]);
        let f = TrigForcing { field: e, noise };
        let sigmax: Vec<f64> = sig.iter().map(TrigForm::sup_bound).collect();
        let bound = displacement_bound(tau, e.sup_bound(), &sigmax, &dbeta);
        let (x, v) = (rng.gen_range(0.0..1.0), rng.gen_range(-8.0..8.0));
        for kind in IntegratorKind::ALL {
            let (_, vd) = inverse_step(kind, x, v, tau, 1.0, &f);
            assert!((vd - v).abs() <= bound * (1.0 + 1e-12), "{kind}");
        }
    }
}

/// Root-mean-square endpoint error of `n` composed inverse steps against
/// `64 n` steps on the same Brownian path, constant `E0` and `sigma0`.
fn strong_error(kind: IntegratorKind, n: usize, paths: usize) -> f64 {
    let (t, e0, s0) = (1.0, 0.7, 0.8);
    let fine_steps = 64 * n;
    let mut acc = 0.0;
    for p in 0..paths {
        let fine = BrownianIncrements::sample(1, fine_steps, t / fine_steps as f64, 500 + p as u64).unwrap();
        let coarse = fine.coarsen(64).unwrap();
        let trace = |inc: &BrownianIncrements| {
            let tau = inc.tau();
            let (mut x, mut v) = (0.25, 0.5);
            for step in (0..inc.steps()).rev() {
                let f = TrigForcing { field: TrigForm::constant(e0), noise: TrigForm::constant(s0 * inc.get(0, step)) };
                (x, v) = inverse_step_unwrapped(kind, x, v, tau, &f);
            }
            (x, v)
        };
        let (a, b) = (trace(&coarse), trace(&fine));
        acc += (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    }
    (acc / paths as f64).sqrt()
}

#[test]
fn strong_order_is_at_least_one_for_constant_coefficients() {
    for kind in IntegratorKind::ALL {
        let errs: Vec<f64> = [8, 16, 32, 64].iter().map(|&n| strong_error(kind, n, 200)).collect();
        let lv: Vec<f64> = (0..errs.len()).map(|l| l as f64).collect();
        let le: Vec<f64> = errs.iter().map(|e| e.log2()).collect();
        let order = -svlasov::diagnostics::fit_polynomial(&lv, &le, 1)[1];
        assert!(order >= 0.9, "{kind}: errors {errs:?}, order {order}");
    }
}

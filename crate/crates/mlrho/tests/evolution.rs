mod common;

use common::{small_two_charge, soliton};
use mlrho::evolution::{contraction_budget, horizon_duration, safe_duration};
use mlrho::random::{band_limited_pair, random_state};
use mlrho::source_operator::{discretize_all, CouplingMatrix};
use mlrho::spectral_field::free_propagate;
use mlrho::weights_norms::phase_distance;
use mlrho::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: &PhaseSpacePoint, b: &PhaseSpacePoint) -> f64 {
    phase_distance(a, b, &WeightSpec::constant(&a.grid)).unwrap()
}

fn cfg(dt: f64, duration: f64) -> EvolveConfig {
    EvolveConfig {
        dt,
        duration,
        ..EvolveConfig::default()
    }
}

fn run(phi: &PhaseSpacePoint, c: &EvolveConfig, model: &Model) -> PhaseSpacePoint {
    evolve(phi, c, model, |_, _| Ok(()))
        .map_err(|a| a.error)
        .unwrap()
        .final_state
}

/// Neutral particles at rest: the source operator vanishes identically.
fn neutral(seed: u64) -> (PhaseSpacePoint, Model) {
    let grid = Grid::new(16, 12.0).unwrap();
    let shapes = discretize_all(&[ChargeShape::new(1.5, 0.0)], &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = vec![band_limited_pair(&grid, 3, 5, 1.0, &mut rng)];
    let particles = vec![ParticleState::at_rest([0.5, 0.0, -0.5], 1.0).unwrap()];
    let phi = PhaseSpacePoint::new(grid.clone(), particles, fields).unwrap();
    let model = Model::new(shapes, CouplingMatrix::ml(1), WeightSpec::constant(&grid)).unwrap();
    (phi, model)
}

#[test]
fn vanishing_source_reduces_to_free_flow() {
    let (phi, model) = neutral(11);
    let t = 0.3;
    let free = free_propagate(&phi.grid, &phi.fields[0], t);
    for scheme in [Scheme::Picard, Scheme::Strang] {
        let c = EvolveConfig { scheme, ..cfg(0.05, t) };
        let out = run(&phi, &c, &model);
        assert_eq!(out.particles, phi.particles);
        let mut e = out.fields[0].e().clone();
        e.axpy(-1.0, free.e());
        let mut b = out.fields[0].b().clone();
        b.axpy(-1.0, free.b());
        assert!(e.max_abs() < 1e-12 && b.max_abs() < 1e-12, "{scheme:?}");
    }
}

#[test]
fn empty_system_is_free_flow() {
    let grid = Grid::new(8, 8.0).unwrap();
    let phi = PhaseSpacePoint::new(grid.clone(), vec![], vec![]).unwrap();
    let model = Model::new(vec![], CouplingMatrix::ml(0), WeightSpec::constant(&grid)).unwrap();
    let (out, report) = picard_step(&phi, 0.1, &EvolveConfig::default(), &model).unwrap();
    assert!(out.is_empty());
    assert!(report.differences.last().is_none_or(|&d| d <= 1e-10));
}

#[test]
fn converged_step_is_a_fixed_point() {
    // Repeating the step from the same state must give the same endpoint,
    // and the last iterate difference must be below tolerance.
    let (phi, model) = small_two_charge("ML");
    let c = EvolveConfig::default();
    let (a, ra) = picard_step(&phi, 0.02, &c, &model).unwrap();
    let (b, _) = picard_step(&phi, 0.02, &c, &model).unwrap();
    assert_eq!(dist(&a, &b), 0.0);
    assert!(*ra.differences.last().unwrap() <= c.picard_tol);
    assert!(ra.factors.iter().all(|&f| f < 1.0));
}

#[test]
fn time_reversal_returns_to_start() {
    for preset in ["ML", "ML_SI"] {
        let (phi, model) = small_two_charge(preset);
        let c = cfg(0.02, 0.1);
        let fwd = run(&phi, &c, &model);
        let back = run(&fwd.time_reversed(), &c, &model).time_reversed();
        let d = dist(&back, &phi);
        assert!(d < 100.0 * c.picard_tol, "{preset}: {d}");
    }
}

#[test]
fn negative_duration_runs_backward() {
    let (phi, model) = small_two_charge("ML");
    let fwd = run(&phi, &cfg(0.02, 0.1), &model);
    let back = run(&fwd, &cfg(0.02, -0.1), &model);
    assert!(dist(&back, &phi) < 100.0 * EvolveConfig::default().picard_tol);
}

#[test]
fn runs_compose() {
    let (phi, model) = small_two_charge("ML");
    let whole = run(&phi, &cfg(0.02, 0.1), &model);
    let half = run(&phi, &cfg(0.02, 0.06), &model);
    let rest = run(&half, &cfg(0.02, 0.04), &model);
    assert!(dist(&whole, &rest) < 1e-11, "{}", dist(&whole, &rest));
}

#[test]
fn output_cadence_and_final_time() {
    let (phi, model) = small_two_charge("ML");
    let c = EvolveConfig {
        output_every: 2,
        ..cfg(0.02, 0.1)
    };
    let mut seen = Vec::new();
    let traj = evolve(&phi, &c, &model, |t, _| {
        seen.push(t);
        Ok(())
    })
    .map_err(|a| a.error)
    .unwrap();
    assert_eq!(seen.len(), 4);
    assert_eq!(traj.final_time, 0.1);
    assert_eq!(traj.reports.len(), 5);
    assert!(traj.rejected() == 0);
}

#[test]
fn horizon_is_enforced() {
    let (phi, model) = small_two_charge("ML");
    let safe = safe_duration(&phi, &model, 0.02);
    assert_eq!(safe, horizon_duration(12.0, 1.5, 0.02));
    let err = evolve(&phi, &cfg(0.02, safe + 0.1), &model, |_, _| Ok(())).unwrap_err();
    assert_eq!(err.error.code(), "E_HORIZON");
    assert!(err.partial.times.is_empty());
}

#[test]
fn invalid_config_is_rejected() {
    let (phi, model) = small_two_charge("ML");
    for bad in [
        cfg(0.0, 0.1),
        cfg(f64::NAN, 0.1),
        EvolveConfig {
            quad_nodes: 1,
            ..cfg(0.02, 0.1)
        },
    ] {
        let err = evolve(&phi, &bad, &model, |_, _| Ok(())).unwrap_err();
        assert_eq!(err.error.code(), "E_CONFIG");
    }
}

#[test]
fn callback_errors_abort_with_partial_results() {
    let (phi, model) = small_two_charge("ML");
    let mut calls = 0;
    let err = evolve(&phi, &cfg(0.02, 0.1), &model, |_, _| {
        calls += 1;
        if calls == 3 {
            Err(Error::NonFinite)
        } else {
            Ok(())
        }
    })
    .unwrap_err();
    assert_eq!(err.error.code(), "E_NONFINITE");
    assert_eq!(err.partial.times.len(), 2);
}

#[test]
fn iteration_cap_gives_convergence_error() {
    let (phi, model) = small_two_charge("ML");
    let c = EvolveConfig {
        picard_max_iter: 1,
        ..cfg(0.02, 0.1)
    };
    let err = picard_step(&phi, 0.02, &c, &model).unwrap_err();
    assert_eq!(err.code(), "E_CONVERGENCE");
}

#[test]
fn budget_shrinks_with_step() {
    let (phi, model) = small_two_charge("ML");
    // With a constant weight γ = 0, so the budget is exactly linear in dt.
    let mut prev = f64::INFINITY;
    for dt in [0.1, 0.01, 0.001, 1e-4] {
        let b = contraction_budget(&phi, dt, &model, 1).unwrap();
        assert!(b.value < prev);
        prev = b.value;
    }
    let big = contraction_budget(&phi, 0.1, &model, 1).unwrap().value;
    assert!((prev / big - 1e-3).abs() < 1e-12);
}

#[test]
fn soliton_budget_is_below_one() {
    let (phi, model) = soliton(WeightSource::InverseQuadratic);
    let b = contraction_budget(&phi, 0.01, &model, 1).unwrap();
    assert!(b.value < 1.0, "{b:?}");
}

/// A budget of one or more is meant to predict guard rejections in nine
/// steps out of ten. Measured on 30 random two-charge states (32³, L = 16,
/// field amplitudes up to 3, steps from 0.003 to 2): budgets ranged from 11
/// to 8e4, every step was accepted, and the worst contraction factor was
/// 0.54. The budget is far too pessimistic to act as a predictor.
#[test]
#[ignore = "budget >= 1 does not predict rejections; see doc comment for measured data"]
fn large_budget_predicts_rejection() {
    let grid = Grid::new(32, 16.0).unwrap();
    let shapes = discretize_all(&[ChargeShape::new(1.8, 1.0), ChargeShape::new(1.8, 1.0)], &grid).unwrap();
    let model = Model::new(shapes, CouplingMatrix::ml(2), WeightSpec::constant(&grid)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c = EvolveConfig::default();
    let (mut large, mut rejected) = (0, 0);
    for _ in 0..30 {
        let amp = rng.random_range(0.0..3.0);
        let phi = random_state(&grid, &[1.0, 1.0], 2.0, 2.0, amp, &mut rng);
        let dt = 10f64.powf(rng.random_range(-2.5..0.3));
        if contraction_budget(&phi, dt, &model, 1).unwrap().value >= 1.0 {
            large += 1;
            if matches!(picard_step(&phi, dt, &c, &model), Err(Error::StepRejected { .. })) {
                rejected += 1;
            }
        }
    }
    assert!(large > 0);
    assert!(rejected as f64 >= 0.9 * large as f64, "{rejected} of {large} rejected");
}

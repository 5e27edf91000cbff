use mlrho::diagnostics::constraint_residuals;
use mlrho::initial_data::coulomb_soliton;
use mlrho::random::random_state;
use mlrho::source_operator::{apply_J, check_support, discretize_all, j_bound_check, CouplingMatrix};
use mlrho::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn discretized_shape_carries_its_charge() {
    let grid = Grid::new(16, 12.0).unwrap();
    let s = ChargeShape::new(1.5, -0.75).discretize(&grid).unwrap();
    let total: f64 = s.centered().iter().sum::<f64>() * grid.cell_volume();
    assert!((total + 0.75).abs() < 1e-12, "{total}");
    assert!((s.spectrum()[0].re / grid.len() as f64 * grid.volume() + 0.75).abs() < 1e-12);
}

#[test]
fn support_must_be_resolved_and_fit() {
    assert_eq!(check_support(0.1, 0.5, 10.0).unwrap_err().code(), "E_GEOMETRY");
    assert_eq!(check_support(3.0, 0.5, 10.0).unwrap_err().code(), "E_GEOMETRY");
    assert!(check_support(1.5, 0.5, 10.0).is_ok());
}

#[test]
fn soliton_satisfies_the_constraints() {
    let grid = Grid::new(32, 16.0).unwrap();
    let shapes = discretize_all(&[ChargeShape::new(1.8, 1.0)], &grid).unwrap();
    let p = ParticleState::at_rest([0.4, -0.3, 0.2], 1.0).unwrap();
    let f = coulomb_soliton(&p, &shapes[0]).unwrap();
    let phi = PhaseSpacePoint::new(grid, vec![p], vec![f]).unwrap();
    let r = constraint_residuals(&phi, &shapes).unwrap()[0];
    assert!(r.gauss < 1e-10 * r.source, "{r:?}");
    assert!(r.div_b == 0.0);
}

#[test]
fn soliton_at_rest_feels_no_force() {
    let grid = Grid::new(16, 12.0).unwrap();
    let shapes = discretize_all(&[ChargeShape::new(1.5, 1.0)], &grid).unwrap();
    let p = ParticleState::at_rest([0.0; 3], 1.0).unwrap();
    let f = coulomb_soliton(&p, &shapes[0]).unwrap();
    let phi = PhaseSpacePoint::new(grid, vec![p], vec![f]).unwrap();
    let j = apply_J(&phi, &shapes, &CouplingMatrix::ml(1)).unwrap();
    assert_eq!(j.dq[0], [0.0; 3]);
    assert!(vec3::norm(j.dp[0]) < 1e-12, "{:?}", j.dp[0]);
    assert!(j.de[0].max_abs() == 0.0 && j.db[0].max_abs() == 0.0);
}

#[test]
fn presets_and_custom_couplings() {
    let ml = CouplingMatrix::ml(3);
    let si = CouplingMatrix::ml_si(3);
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(ml.get(i, j), 1.0);
            assert_eq!(si.get(i, j), if i == j { 0.0 } else { 1.0 });
        }
    }
    assert!(CouplingMatrix::custom(vec![vec![1.0, 0.5], vec![0.5]]).is_err());
    assert_eq!(CouplingMatrix::from_preset("MLX", 2).unwrap_err().code(), "E_CONFIG");
}

#[test]
fn mismatched_structure_is_rejected() {
    let grid = Grid::new(16, 12.0).unwrap();
    let shapes = discretize_all(&[ChargeShape::new(1.5, 1.0)], &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let phi = random_state(&grid, &[1.0, 1.0], 1.0, 1.0, 1.0, &mut rng);
    assert_eq!(
        apply_J(&phi, &shapes, &CouplingMatrix::ml(2)).unwrap_err().code(),
        "E_STRUCTURE"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn j_bound_holds_on_random_states(seed in any::<u64>(), si in any::<bool>()) {
        let grid = Grid::new(16, 12.0).unwrap();
        let shapes = discretize_all(&[ChargeShape::new(1.5, 1.0), ChargeShape::new(1.5, -2.0)], &grid).unwrap();
        let w = make_weight(&WeightSource::InverseQuadratic, &grid).unwrap();
        let coupling = if si { CouplingMatrix::ml_si(2) } else { CouplingMatrix::ml(2) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_state(&grid, &[1.0, 0.5], 3.0, 5.0, 2.0, &mut rng);
        let r = j_bound_check(&phi, &shapes, &coupling, &w).unwrap();
        prop_assert!(r.pass, "lhs {} rhs {}", r.lhs, r.rhs);
    }

    #[test]
    fn speed_stays_below_one(p in prop::array::uniform3(-1e8f64..1e8), m in prop_oneof![0.01f64..10.0, -10.0f64..-0.01]) {
        let v = ParticleState::new([0.0; 3], p, m).unwrap().velocity();
        prop_assert!(vec3::norm(v) < 1.0);
    }
}

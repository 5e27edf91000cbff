mod common;

use common::soliton;
use mlrho::diagnostics::{
    energy, free_bound_check, kinetic_energy, lipschitz_probe, regularity_probe, EnergyVariant, GrowthBound, Recorder,
};
use mlrho::initial_data::{coulomb_soliton, plane_wave};
use mlrho::random::{band_limited_field, random_state};
use mlrho::source_operator::{discretize_all, CouplingMatrix};
use mlrho::weights_norms::phase_distance;
use mlrho::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[test]
fn plane_wave_energy_density() {
    // ⟨|E|² + |B|²⟩ = A², so the field energy is A² V / 8π; a particle at
    // rest adds its mass.
    let grid = Grid::new(16, 10.0).unwrap();
    let a = 0.8;
    let pw = plane_wave(&grid, [1, 1, 0], [0.0, 0.0, 1.0], a).unwrap();
    let p = ParticleState::at_rest([0.0; 3], 1.0).unwrap();
    let phi = PhaseSpacePoint::new(grid.clone(), vec![p], vec![pw.fields]).unwrap();
    let want = 1.0 + a * a * grid.volume() / (2.0 * FOUR_PI);
    for v in [EnergyVariant::PerCharge, EnergyVariant::TotalField] {
        assert!((energy(&phi, v) - want).abs() < 1e-12 * want);
    }
}

#[test]
fn rest_mass_energy() {
    let grid = Grid::new(8, 8.0).unwrap();
    let p = ParticleState::at_rest([1.0, 2.0, 0.0], 1.0).unwrap();
    let phi = PhaseSpacePoint::new(grid.clone(), vec![p], vec![FieldPair::zeros(&grid)]).unwrap();
    assert_eq!(energy(&phi, EnergyVariant::PerCharge), 1.0);
    let moving = ParticleState::new([0.0; 3], [3.0, 4.0, 0.0], -2.0).unwrap();
    assert!((moving.kinetic_energy() + 29f64.sqrt()).abs() < 1e-14);
}

#[test]
fn energy_variants_differ_only_by_cross_terms() {
    let grid = Grid::new(16, 12.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let phi = random_state(&grid, &[1.0, 2.0], 1.0, 1.0, 1.0, &mut rng);
    let cross = {
        let (f, g) = (&phi.fields[0], &phi.fields[1]);
        let dot = |a: &VectorField, b: &VectorField| -> f64 {
            (0..3)
                .map(|c| {
                    a.component(c)
                        .iter()
                        .zip(b.component(c))
                        .map(|(x, y)| x * y)
                        .sum::<f64>()
                })
                .sum()
        };
        2.0 * (dot(f.e(), g.e()) + dot(f.b(), g.b())) * grid.cell_volume() / (2.0 * FOUR_PI)
    };
    let per = energy(&phi, EnergyVariant::PerCharge);
    let tot = energy(&phi, EnergyVariant::TotalField);
    assert!((tot - per - cross).abs() < 1e-10 * per.abs().max(1.0));
    assert!(kinetic_energy(&phi) > 3.0);
}

#[test]
fn soliton_records_are_steady() {
    let (phi, model) = soliton(WeightSource::InverseQuadratic);
    let rec = Recorder::new(&phi, &model).unwrap();
    let r = rec.record(0.0, &phi).unwrap();
    assert_eq!(r.h_per, r.h_tot);
    assert!(r.gauss[0] < 1e-10);
    assert_eq!(r.div_b[0], 0.0);
    assert!(r.bound_margin >= 0.0);
}

#[test]
fn growth_bound_is_increasing() {
    let (phi, model) = soliton(WeightSource::InverseQuadratic);
    let g = GrowthBound::new(&phi, &model).unwrap();
    let mut prev = g.bound(0.0);
    assert!(prev > 0.0);
    for t in [0.5, 1.0, 2.0] {
        let b = g.bound(t);
        assert!(b > prev);
        prev = b;
    }
}

#[test]
fn free_bound_check_flags_growth() {
    let times = [0.0, 1.0, 2.0];
    let ok = free_bound_check(&times, &[1.0, 1.5, 2.0], 0.5, 1e-12);
    assert!(ok.pass);
    let bad = free_bound_check(&times, &[1.0, 3.0, 2.0], 0.5, 1e-12);
    assert!(!bad.pass);
    assert!(bad.worst_margin < 0.0);
}

#[test]
fn regularity_probe_edge_cases() {
    let grid = Grid::new(16, 10.0).unwrap();
    let w = make_weight(&WeightSource::InverseQuadratic, &grid).unwrap();
    assert_eq!(regularity_probe(&VectorField::zeros(&grid), &w, 2).unwrap(), 0.0);
    assert_eq!(
        regularity_probe(&VectorField::zeros(&grid), &w, 1).unwrap_err().code(),
        "E_DOMAIN"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = band_limited_field(&grid, 3, 4, 1.0, &mut rng);
    let base = regularity_probe(&f, &w, 2).unwrap();
    for s in [1e-6, 0.01, 3.0, 1e4, -7.0] {
        let mut g = f.clone();
        g.scale(s);
        let r = regularity_probe(&g, &w, 2).unwrap();
        assert!((r - base).abs() < 1e-10 * base, "scale {s}: {r} vs {base}");
    }
}

#[test]
fn lipschitz_probe_of_zero_perturbation() {
    let (phi, model) = soliton(WeightSource::Constant);
    let dir = phi.scaled_delta(1.0);
    let cfg = EvolveConfig {
        dt: 0.05,
        ..EvolveConfig::default()
    };
    let r = lipschitz_probe(&phi, &dir, &[0.0], 0.1, &cfg, &model).unwrap();
    assert_eq!(r.ratios, vec![0.0]);
    assert!(r.stable(1e-3));
    let zero = phi.scaled_delta(0.0);
    assert_eq!(
        lipschitz_probe(&phi, &zero, &[1e-3], 0.1, &cfg, &model)
            .unwrap_err()
            .code(),
        "E_DOMAIN"
    );
}

#[test]
fn shifted_solitons_keep_their_distance() {
    let grid = Grid::new(32, 32.0).unwrap();
    let shapes = discretize_all(&[ChargeShape::new(2.5, 1.0)], &grid).unwrap();
    let w = WeightSpec::constant(&grid);
    let model = Model::new(shapes.clone(), CouplingMatrix::ml(1), w.clone()).unwrap();
    let at = |q: Vec3| {
        let p = ParticleState::at_rest(q, 2.0).unwrap();
        let f = coulomb_soliton(&p, &shapes[0]).unwrap();
        PhaseSpacePoint::new(grid.clone(), vec![p], vec![f]).unwrap()
    };
    let (a, b) = (at([0.0; 3]), at([0.3, -0.2, 0.1]));
    let d0 = phase_distance(&a, &b, &w).unwrap();
    let cfg = EvolveConfig {
        dt: 0.05,
        duration: 0.2,
        ..EvolveConfig::default()
    };
    let run = |s: &PhaseSpacePoint| {
        evolve(s, &cfg, &model, |_, _| Ok(()))
            .map_err(|a| a.error)
            .unwrap()
            .final_state
    };
    let d1 = phase_distance(&run(&a), &run(&b), &w).unwrap();
    assert!((d1 - d0).abs() < 1e-8 * d0, "{d0} -> {d1}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn regularity_probe_is_finite(seed in any::<u64>()) {
        let grid = Grid::new(8, 6.0).unwrap();
        let w = make_weight(&WeightSource::InverseQuadratic, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = band_limited_field(&grid, 3, 4, 2.0, &mut rng);
        let r = regularity_probe(&f, &w, 2).unwrap();
        prop_assert!(r.is_finite() && r >= 0.0);
    }
}

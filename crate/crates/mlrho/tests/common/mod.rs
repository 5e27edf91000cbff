#![allow(dead_code)]

use mlrho::initial_data::coulomb_soliton;
use mlrho::source_operator::{discretize_all, CouplingMatrix};
use mlrho::weights_norms::{make_weight, WeightSource};
use mlrho::*;

/// Two charges passing each other, each carrying its Coulomb field.
pub fn two_charge(preset: &str, weight: WeightSource) -> (PhaseSpacePoint, Model) {
    let grid = Grid::new(32, 16.0).unwrap();
    let shapes = discretize_all(&[ChargeShape::new(1.8, 1.0), ChargeShape::new(1.8, 1.0)], &grid).unwrap();
    let particles = vec![
        ParticleState::new([-1.5, 0.3, 0.0], [0.5, 0.0, 0.0], 1.0).unwrap(),
        ParticleState::new([1.5, -0.3, 0.0], [-0.5, 0.0, 0.0], 1.0).unwrap(),
    ];
    let fields = particles
        .iter()
        .zip(&shapes)
        .map(|(p, s)| coulomb_soliton(p, s).unwrap())
        .collect();
    let phi = PhaseSpacePoint::new(grid.clone(), particles, fields).unwrap();
    let w = make_weight(&weight, &grid).unwrap();
    let model = Model::new(shapes, CouplingMatrix::from_preset(preset, 2).unwrap(), w).unwrap();
    (phi, model)
}

/// A single charge at rest with its Coulomb field.
pub fn soliton(weight: WeightSource) -> (PhaseSpacePoint, Model) {
    let grid = Grid::new(32, 32.0).unwrap();
    let shapes = discretize_all(&[ChargeShape::new(2.5, 1.0)], &grid).unwrap();
    let p = ParticleState::at_rest([0.0; 3], 2.0).unwrap();
    let f = coulomb_soliton(&p, &shapes[0]).unwrap();
    let phi = PhaseSpacePoint::new(grid.clone(), vec![p], vec![f]).unwrap();
    let w = make_weight(&weight, &grid).unwrap();
    let model = Model::new(shapes, CouplingMatrix::ml(1), w).unwrap();
    (phi, model)
}

/// A smaller, faster two-charge setup for unit-scale checks.
pub fn small_two_charge(preset: &str) -> (PhaseSpacePoint, Model) {
    let grid = Grid::new(16, 12.0).unwrap();
    let shapes = discretize_all(&[ChargeShape::new(1.5, 1.0), ChargeShape::new(1.5, -0.5)], &grid).unwrap();
    let particles = vec![
        ParticleState::new([-1.0, 0.2, 0.0], [0.4, 0.1, 0.0], 1.0).unwrap(),
        ParticleState::new([1.0, -0.2, 0.1], [-0.3, 0.0, 0.2], 2.0).unwrap(),
    ];
    let fields = particles
        .iter()
        .zip(&shapes)
        .map(|(p, s)| coulomb_soliton(p, s).unwrap())
        .collect();
    let phi = PhaseSpacePoint::new(grid.clone(), particles, fields).unwrap();
    let model = Model::new(
        shapes,
        CouplingMatrix::from_preset(preset, 2).unwrap(),
        WeightSpec::constant(&grid),
    )
    .unwrap();
    (phi, model)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

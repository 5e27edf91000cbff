//! Seeded random states for probes and property checks.

use rand::{Rng, RngExt};

use crate::grid::Grid;
use crate::source_operator::ParticleState;
use crate::spectral_field::{FieldPair, PhaseSpacePoint, VectorField};
use crate::vec3::{self, Vec3};
use crate::weights_norms::{phase_norm, WeightSpec};

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v: Vec3 = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = vec3::norm(v);
        if n > 1e-3 && n <= 1.0 {
            return vec3::scale(v, 1.0 / n);
        }
    }
}

/// Sum of `modes` random Fourier modes with integer wave vectors bounded by
/// `max_mode`, each with a random amplitude vector of size at most `amplitude`.
pub fn band_limited_field<R: Rng + ?Sized>(
    grid: &Grid,
    max_mode: i64,
    modes: usize,
    amplitude: f64,
    rng: &mut R,
) -> VectorField {
    let base = 2.0 * std::f64::consts::PI / grid.length();
    let terms: Vec<(Vec3, Vec3, f64)> = (0..modes)
        .map(|_| {
            let k = std::array::from_fn(|_| base * rng.random_range(-max_mode..=max_mode) as f64);
            let a = vec3::scale(unit_vector(rng), amplitude * rng.random_range(0.0..1.0));
            (k, a, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    VectorField::from_fn(grid, |x| {
        let mut out = [0.0; 3];
        for (k, a, phase) in &terms {
            let c = (vec3::dot(*k, x) + phase).cos();
            out = vec3::add(out, vec3::scale(*a, c));
        }
        out
    })
}

pub fn band_limited_pair<R: Rng + ?Sized>(
    grid: &Grid,
    max_mode: i64,
    modes: usize,
    amplitude: f64,
    rng: &mut R,
) -> FieldPair {
    let e = band_limited_field(grid, max_mode, modes, amplitude, rng);
    let b = band_limited_field(grid, max_mode, modes, amplitude, rng);
    FieldPair::new(e, b)
}

/// Random state with the same particle count and masses as `like`, with
/// positions in the cube `|q_a| ≤ q_max`, momenta up to `p_max` and
/// band-limited fields.
pub fn random_state<R: Rng + ?Sized>(
    grid: &Grid,
    masses: &[f64],
    q_max: f64,
    p_max: f64,
    field_amp: f64,
    rng: &mut R,
) -> PhaseSpacePoint {
    let particles = masses
        .iter()
        .map(|&m| ParticleState {
            q: std::array::from_fn(|_| rng.random_range(-q_max..=q_max)),
            p: vec3::scale(unit_vector(rng), p_max * rng.random_range(0.0..1.0)),
            mass: m,
        })
        .collect();
    let fields = masses
        .iter()
        .map(|_| band_limited_pair(grid, 3, 6, field_amp, rng))
        .collect();
    PhaseSpacePoint {
        grid: grid.clone(),
        particles,
        fields,
    }
}

/// Random perturbation direction of unit ℋ_w norm with the structure of `phi`.
pub fn unit_direction<R: Rng + ?Sized>(phi: &PhaseSpacePoint, w: &WeightSpec, rng: &mut R) -> PhaseSpacePoint {
    let masses: Vec<f64> = phi.particles.iter().map(|p| p.mass).collect();
    let d = random_state(&phi.grid, &masses, 1.0, 1.0, 1.0, rng);
    let n = phase_norm(&d, w).expect("same grid and structure");
    d.scaled_delta(1.0 / n)
}

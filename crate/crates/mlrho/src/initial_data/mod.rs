//! Constraint-satisfying initial fields and Liénard-Wiechert fields of
//! prescribed worldlines.

mod lienard_wiechert;
mod probe;

pub use lienard_wiechert::{lw_field, retarded_residual, retarded_time, TimeSign, Worldline, WorldlineKind};
pub use probe::{fit_exponent, norm_scaling_probe, ProbeConfig, ScalingProbeResult};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::source_operator::{GridShape, ParticleState, FOUR_PI};
use crate::spectral_field::{FieldPair, SpectralPair, SpectralVector, VectorField};
use crate::vec3::{self, Vec3};

/// Electrostatic field of a charge at rest against a uniform neutralizing
/// background: `Ê = -4πi k ρ̂/|k|²`, `Ê(0) = 0`, `B = 0`.
pub fn coulomb_soliton(particle: &ParticleState, shape: &GridShape) -> Result<FieldPair> {
    let grid = shape.grid();
    let rho = shape.shifted_spectrum(particle.q);
    let n = grid.n();
    let kv = grid.wavenumbers();
    let mut e = SpectralVector::zeros(grid.len());
    for (idx, r) in rho.iter().enumerate() {
        let k = [kv[idx / (n * n)], kv[(idx / n) % n], kv[idx % n]];
        let k2 = vec3::norm_sq(k);
        if k2 == 0.0 {
            continue;
        }
        let f = Complex64::new(0.0, -FOUR_PI) * r / k2;
        for (c, ka) in e.c.iter_mut().zip(k) {
            c[idx] = f * ka;
        }
    }
    Ok(FieldPair::from_spectral(
        grid,
        SpectralPair {
            e,
            b: SpectralVector::zeros(grid.len()),
        },
    ))
}

/// A transverse plane wave and whether the polarization had to be projected.
#[derive(Clone, Debug)]
pub struct PlaneWave {
    pub fields: FieldPair,
    pub wavevector: Vec3,
    pub polarization: Vec3,
    pub corrected: bool,
}

/// `E = A ê cos(k·x)`, `B = k̂ ∧ E` for the integer mode `m`; travels along `k`.
pub fn plane_wave(grid: &Grid, mode: [i64; 3], polarization: Vec3, amplitude: f64) -> Result<PlaneWave> {
    let half = grid.n() as i64 / 2;
    if mode == [0, 0, 0] {
        return Err(Error::Domain("plane wave needs a nonzero mode".into()));
    }
    if mode.iter().any(|m| m.abs() >= half) {
        return Err(Error::Domain(format!("mode {mode:?} is not resolved by the grid")));
    }
    let base = 2.0 * std::f64::consts::PI / grid.length();
    let k = mode.map(|m| base * m as f64);
    let kh = vec3::scale(k, 1.0 / vec3::norm(k));
    let along = vec3::dot(polarization, kh);
    let projected = vec3::sub(polarization, vec3::scale(kh, along));
    let pn = vec3::norm(projected);
    if pn == 0.0 {
        return Err(Error::Domain("polarization is parallel to the wave vector".into()));
    }
    let corrected = along.abs() > 1e-14 * vec3::norm(polarization) || (pn - 1.0).abs() > 1e-14;
    let e_hat = vec3::scale(projected, 1.0 / pn);
    let b_hat = vec3::cross(kh, e_hat);
    let e = VectorField::from_fn(grid, |x| vec3::scale(e_hat, amplitude * vec3::dot(k, x).cos()));
    let b = VectorField::from_fn(grid, |x| vec3::scale(b_hat, amplitude * vec3::dot(k, x).cos()));
    Ok(PlaneWave {
        fields: FieldPair::new(e, b),
        wavevector: k,
        polarization: e_hat,
        corrected,
    })
}

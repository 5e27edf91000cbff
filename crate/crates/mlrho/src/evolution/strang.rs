//! Second-order splitting: exact free half steps around a 4-stage update of
//! the source flow with the magnetic field frozen.

use num_complex::Complex64;
use rayon::prelude::*;

use super::picard::{force_from, smeared_fields};
use super::Model;
use crate::error::Result;
use crate::source_operator::{velocity, ParticleState, Phase, FOUR_PI};
use crate::spectral_field::{rotate_in_place, FieldPair, PhaseSpacePoint, RotationTable, SpectralPair, SpectralVector};
use crate::vec3::{self, Vec3};

struct Stage {
    q: Vec<Vec3>,
    p: Vec<Vec3>,
    e: Vec<SpectralVector>,
}

struct Rate {
    dq: Vec<Vec3>,
    dp: Vec<Vec3>,
    de: Vec<SpectralVector>,
}

fn rate(model: &Model, grid: &crate::grid::Grid, masses: &[f64], s: &Stage, b: &[SpectralVector]) -> Rate {
    let n = grid.n();
    let n2 = n * n;
    let phases: Vec<Phase> = s.q.iter().map(|&q| Phase::new(grid, q)).collect();
    let vels: Vec<Vec3> =
        s.p.iter()
            .zip(masses)
            .map(|(p, &m)| velocity(*p, m, m.signum()).expect("nonzero mass"))
            .collect();
    let fields: Vec<[&[Complex64]; 6]> =
        s.e.iter()
            .zip(b)
            .map(|(e, b)| [&e.c[0][..], &e.c[1], &e.c[2], &b.c[0], &b.c[1], &b.c[2]])
            .collect();
    let dp = smeared_fields(grid, model, &phases, &fields)
        .iter()
        .zip(&vels)
        .map(|(sm, &v)| force_from(sm, v))
        .collect();
    let de = (0..s.q.len())
        .map(|a| {
            let rho = model.shapes[a].spectrum();
            let ph = &phases[a];
            let c = vec3::scale(vels[a], -FOUR_PI);
            let src: Vec<Complex64> = (0..grid.len())
                .into_par_iter()
                .with_min_len(n2)
                .map(|idx| rho[idx] * ph.at(idx / n2, (idx / n) % n, idx % n))
                .collect();
            SpectralVector {
                c: std::array::from_fn(|m| src.iter().map(|z| z * c[m]).collect()),
            }
        })
        .collect();
    Rate { dq: vels, dp, de }
}

fn advance(base: &Stage, r: &Rate, t: f64) -> Stage {
    Stage {
        q: base
            .q
            .iter()
            .zip(&r.dq)
            .map(|(q, d)| vec3::add(*q, vec3::scale(*d, t)))
            .collect(),
        p: base
            .p
            .iter()
            .zip(&r.dp)
            .map(|(p, d)| vec3::add(*p, vec3::scale(*d, t)))
            .collect(),
        e: base
            .e
            .iter()
            .zip(&r.de)
            .map(|(e, d)| SpectralVector {
                c: std::array::from_fn(|m| e.c[m].iter().zip(&d.c[m]).map(|(x, y)| x + y * t).collect()),
            })
            .collect(),
    }
}

/// One splitting step of size `dt`.
pub fn strang_step(phi: &PhaseSpacePoint, dt: f64, model: &Model) -> Result<PhaseSpacePoint> {
    model.check(phi)?;
    super::check_horizon(phi, model, dt.abs(), dt.abs())?;
    let grid = &phi.grid;
    let half = RotationTable::new(grid, 0.5 * dt);
    let masses: Vec<f64> = phi.particles.iter().map(|p| p.mass).collect();
    let mut e = Vec::with_capacity(phi.len());
    let mut b = Vec::with_capacity(phi.len());
    for f in &phi.fields {
        let mut s = f.spectral(grid).clone();
        rotate_in_place(grid, &half, &mut s);
        e.push(s.e);
        b.push(s.b);
    }
    let y0 = Stage {
        q: phi.particles.iter().map(|p| p.q).collect(),
        p: phi.particles.iter().map(|p| p.p).collect(),
        e,
    };
    let k1 = rate(model, grid, &masses, &y0, &b);
    let k2 = rate(model, grid, &masses, &advance(&y0, &k1, 0.5 * dt), &b);
    let k3 = rate(model, grid, &masses, &advance(&y0, &k2, 0.5 * dt), &b);
    let k4 = rate(model, grid, &masses, &advance(&y0, &k3, dt), &b);
    let w = dt / 6.0;
    let mut y = advance(&y0, &k1, w);
    y = advance(&y, &k2, 2.0 * w);
    y = advance(&y, &k3, 2.0 * w);
    y = advance(&y, &k4, w);

    let fields =
        y.e.into_iter()
            .zip(b)
            .map(|(e, b)| {
                let mut s = SpectralPair { e, b };
                rotate_in_place(grid, &half, &mut s);
                FieldPair::from_spectral(grid, s)
            })
            .collect();
    let particles = (0..phi.len())
        .map(|a| ParticleState {
            q: y.q[a],
            p: y.p[a],
            mass: masses[a],
        })
        .collect();
    Ok(PhaseSpacePoint {
        grid: grid.clone(),
        particles,
        fields,
    })
}

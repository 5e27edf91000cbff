//! Grid vector fields, spectral differential operators and the exact free
//! Maxwell propagator.

use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::source_operator::ParticleState;
use crate::vec3::Vec3;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Real 3-component field sampled on a grid, component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    c: [Vec<f64>; 3],
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.len();
        VectorField {
            c: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_components(c: [Vec<f64>; 3]) -> Self {
        assert!(c[0].len() == c[1].len() && c[1].len() == c[2].len());
        VectorField { c }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Vec3) -> Vec3 + Sync) -> Self {
        let vals: Vec<Vec3> = (0..grid.len()).into_par_iter().map(|idx| f(grid.point(idx))).collect();
        VectorField {
            c: std::array::from_fn(|a| vals.iter().map(|v| v[a]).collect()),
        }
    }

    pub fn component(&self, a: usize) -> &[f64] {
        &self.c[a]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut [f64] {
        &mut self.c[a]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.c
    }

    pub fn into_components(self) -> [Vec<f64>; 3] {
        self.c
    }

    pub fn len(&self) -> usize {
        self.c[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.c[0].is_empty()
    }

    pub fn at(&self, idx: usize) -> Vec3 {
        [self.c[0][idx], self.c[1][idx], self.c[2][idx]]
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.c {
            c.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for (c, o) in self.c.iter_mut().zip(&other.c) {
            c.iter_mut().zip(o).for_each(|(x, y)| *x += a * y);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().flat_map(|c| c.iter()).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }

    pub fn to_spectral(&self, grid: &Grid) -> SpectralVector {
        let c: Vec<Vec<Complex64>> = self.c.par_iter().map(|c| grid.forward_real(c)).collect();
        let mut it = c.into_iter();
        SpectralVector {
            c: std::array::from_fn(|_| it.next().unwrap()),
        }
    }
}

/// Transform of a [`VectorField`] with unnormalized forward convention.
#[derive(Clone, Debug)]
pub struct SpectralVector {
    pub c: [Vec<Complex64>; 3],
}

impl SpectralVector {
    pub fn zeros(len: usize) -> Self {
        SpectralVector {
            c: std::array::from_fn(|_| vec![Complex64::default(); len]),
        }
    }

    pub fn to_real(&self, grid: &Grid) -> VectorField {
        let c: Vec<Vec<f64>> = self.c.par_iter().map(|c| grid.inverse_real(c)).collect();
        let mut it = c.into_iter();
        VectorField {
            c: std::array::from_fn(|_| it.next().unwrap()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralPair {
    pub e: SpectralVector,
    pub b: SpectralVector,
}

impl SpectralPair {
    pub fn zeros(len: usize) -> Self {
        SpectralPair {
            e: SpectralVector::zeros(len),
            b: SpectralVector::zeros(len),
        }
    }

    /// The six component spectra, E first.
    pub fn arrays_mut(&mut self) -> [&mut [Complex64]; 6] {
        let [ex, ey, ez] = &mut self.e.c;
        let [bx, by, bz] = &mut self.b.c;
        [ex, ey, ez, bx, by, bz]
    }

    pub fn arrays(&self) -> [&[Complex64]; 6] {
        let [ex, ey, ez] = &self.e.c;
        let [bx, by, bz] = &self.b.c;
        [ex, ey, ez, bx, by, bz]
    }
}

/// Electric and magnetic field of one charge. Real samples are authoritative;
/// the transform is cached on first use and dropped on every mutable access.
#[derive(Clone, Debug)]
pub struct FieldPair {
    e: VectorField,
    b: VectorField,
    cache: OnceLock<SpectralPair>,
}

impl PartialEq for FieldPair {
    fn eq(&self, other: &Self) -> bool {
        self.e == other.e && self.b == other.b
    }
}

impl FieldPair {
    pub fn new(e: VectorField, b: VectorField) -> Self {
        assert_eq!(e.len(), b.len());
        FieldPair {
            e,
            b,
            cache: OnceLock::new(),
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        FieldPair::new(VectorField::zeros(grid), VectorField::zeros(grid))
    }

    /// Build from spectra; the real samples are the real part of the inverse
    /// transform and the given spectra become the cache.
    pub fn from_spectral(grid: &Grid, spec: SpectralPair) -> Self {
        let (e, b) = rayon::join(|| spec.e.to_real(grid), || spec.b.to_real(grid));
        let cache = OnceLock::new();
        let _ = cache.set(spec);
        FieldPair { e, b, cache }
    }

    pub fn e(&self) -> &VectorField {
        &self.e
    }

    pub fn b(&self) -> &VectorField {
        &self.b
    }

    pub fn e_mut(&mut self) -> &mut VectorField {
        self.cache = OnceLock::new();
        &mut self.e
    }

    pub fn b_mut(&mut self) -> &mut VectorField {
        self.cache = OnceLock::new();
        &mut self.b
    }

    pub fn into_parts(self) -> (VectorField, VectorField) {
        (self.e, self.b)
    }

    pub fn has_cache(&self) -> bool {
        self.cache.get().is_some()
    }

    pub fn spectral(&self, grid: &Grid) -> &SpectralPair {
        self.cache.get_or_init(|| {
            let (e, b) = rayon::join(|| self.e.to_spectral(grid), || self.b.to_spectral(grid));
            SpectralPair { e, b }
        })
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite() && self.b.is_finite()
    }

    pub fn scaled(&self, s: f64) -> FieldPair {
        let mut out = FieldPair::new(self.e.clone(), self.b.clone());
        out.e.scale(s);
        out.b.scale(s);
        out
    }

    /// `self + a * other`.
    pub fn plus_scaled(&self, a: f64, other: &FieldPair) -> FieldPair {
        let mut out = FieldPair::new(self.e.clone(), self.b.clone());
        out.e.axpy(a, &other.e);
        out.b.axpy(a, &other.b);
        out
    }
}

/// Full state: particles and one field pair per charge on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpacePoint {
    pub grid: Grid,
    pub particles: Vec<ParticleState>,
    pub fields: Vec<FieldPair>,
}

impl PhaseSpacePoint {
    pub fn new(grid: Grid, particles: Vec<ParticleState>, fields: Vec<FieldPair>) -> Result<Self> {
        let phi = PhaseSpacePoint {
            grid,
            particles,
            fields,
        };
        phi.validate()?;
        Ok(phi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles.len() != self.fields.len() {
            return Err(Error::Structure(format!(
                "{} particles but {} field pairs",
                self.particles.len(),
                self.fields.len()
            )));
        }
        if let Some(f) = self.fields.iter().find(|f| f.len() != self.grid.len()) {
            return Err(Error::Structure(format!(
                "field has {} samples, grid has {}",
                f.len(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.particles.iter().all(|p| p.is_finite()) && self.fields.iter().all(|f| f.is_finite())
    }

    /// The involution `p -> -p`, `B -> -B` under which the dynamics is
    /// time-reversible.
    pub fn time_reversed(&self) -> PhaseSpacePoint {
        let particles = self
            .particles
            .iter()
            .map(|p| ParticleState {
                p: crate::vec3::scale(p.p, -1.0),
                ..*p
            })
            .collect();
        let fields = self
            .fields
            .iter()
            .map(|f| {
                let mut b = f.b.clone();
                b.scale(-1.0);
                FieldPair::new(f.e.clone(), b)
            })
            .collect();
        PhaseSpacePoint {
            grid: self.grid.clone(),
            particles,
            fields,
        }
    }
}

/// Split `K` equal-length arrays into per-x-plane chunk tuples for parallel kernels.
pub(crate) fn split_planes<const K: usize>(arrs: [&mut [Complex64]; K], n2: usize) -> Vec<[&mut [Complex64]; K]> {
    let planes = arrs[0].len() / n2;
    let mut iters = arrs.map(|a| a.chunks_mut(n2));
    (0..planes)
        .map(|_| std::array::from_fn(|m| iters[m].next().unwrap()))
        .collect()
}

#[inline]
fn ik_cross(k: Vec3, v: [Complex64; 3]) -> [Complex64; 3] {
    [
        I * (k[1] * v[2] - k[2] * v[1]),
        I * (k[2] * v[0] - k[0] * v[2]),
        I * (k[0] * v[1] - k[1] * v[0]),
    ]
}

/// Apply the free propagator to one mode. `c = cos(|k|t)`, `s = sin(|k|t)/|k|`.
#[inline]
pub(crate) fn rotate_mode(
    k: Vec3,
    kk: f64,
    c: f64,
    s: f64,
    e: [Complex64; 3],
    b: [Complex64; 3],
) -> ([Complex64; 3], [Complex64; 3]) {
    if kk == 0.0 {
        return (e, b);
    }
    let inv = 1.0 / kk;
    let kh = [k[0] * inv, k[1] * inv, k[2] * inv];
    let el = kh[0] * e[0] + kh[1] * e[1] + kh[2] * e[2];
    let bl = kh[0] * b[0] + kh[1] * b[1] + kh[2] * b[2];
    let cb = ik_cross(k, b);
    let ce = ik_cross(k, e);
    let mut e2 = [Complex64::default(); 3];
    let mut b2 = [Complex64::default(); 3];
    for a in 0..3 {
        let et = e[a] - kh[a] * el;
        let bt = b[a] - kh[a] * bl;
        e2[a] = c * et + s * cb[a] + kh[a] * el;
        b2[a] = c * bt - s * ce[a] + kh[a] * bl;
    }
    (e2, b2)
}

/// Per-mode `cos(|k|t)` and `sin(|k|t)/|k|` tables for a fixed `t`.
#[derive(Clone, Debug)]
pub(crate) struct RotationTable {
    pub cos: Vec<f64>,
    pub sinc: Vec<f64>,
}

impl RotationTable {
    pub fn new(grid: &Grid, t: f64) -> Self {
        let kv = grid.wavenumbers();
        let n = grid.n();
        let (cos, sinc): (Vec<f64>, Vec<f64>) = (0..grid.len())
            .into_par_iter()
            .with_min_len(n * n)
            .map(|idx| {
                let kk = (kv[idx / (n * n)].powi(2) + kv[(idx / n) % n].powi(2) + kv[idx % n].powi(2)).sqrt();
                if kk == 0.0 {
                    (1.0, t)
                } else {
                    let (s, c) = (kk * t).sin_cos();
                    (c, s / kk)
                }
            })
            .unzip();
        RotationTable { cos, sinc }
    }
}

/// Rotate a spectral pair in place by the table's time.
pub(crate) fn rotate_in_place(grid: &Grid, table: &RotationTable, pair: &mut SpectralPair) {
    let n = grid.n();
    let n2 = n * n;
    let kv = grid.wavenumbers();
    split_planes(pair.arrays_mut(), n2)
        .into_par_iter()
        .enumerate()
        .for_each(|(i, [ex, ey, ez, bx, by, bz])| {
            for j in 0..n {
                for k in 0..n {
                    let l = j * n + k;
                    let idx = i * n2 + l;
                    let kvec = [kv[i], kv[j], kv[k]];
                    let kk = (kvec[0] * kvec[0] + kvec[1] * kvec[1] + kvec[2] * kvec[2]).sqrt();
                    let (e, b) = rotate_mode(
                        kvec,
                        kk,
                        table.cos[idx],
                        table.sinc[idx],
                        [ex[l], ey[l], ez[l]],
                        [bx[l], by[l], bz[l]],
                    );
                    ex[l] = e[0];
                    ey[l] = e[1];
                    ez[l] = e[2];
                    bx[l] = b[0];
                    by[l] = b[1];
                    bz[l] = b[2];
                }
            }
        });
}

/// Exact free evolution of spectra by time `t`.
pub fn free_propagate_spectral(grid: &Grid, pair: &SpectralPair, t: f64) -> SpectralPair {
    let mut out = pair.clone();
    if t != 0.0 {
        rotate_in_place(grid, &RotationTable::new(grid, t), &mut out);
    }
    out
}

/// Exact free evolution `W_t` of one field pair.
pub fn free_propagate(grid: &Grid, fields: &FieldPair, t: f64) -> FieldPair {
    if t == 0.0 {
        return fields.clone();
    }
    FieldPair::from_spectral(grid, free_propagate_spectral(grid, fields.spectral(grid), t))
}

/// `W_t` on the whole phase space: particles untouched, every field pair propagated.
pub fn propagate_phase(phi: &PhaseSpacePoint, t: f64) -> PhaseSpacePoint {
    let table = (t != 0.0).then(|| RotationTable::new(&phi.grid, t));
    let fields = phi
        .fields
        .iter()
        .map(|f| match &table {
            None => f.clone(),
            Some(tab) => {
                let mut s = f.spectral(&phi.grid).clone();
                rotate_in_place(&phi.grid, tab, &mut s);
                FieldPair::from_spectral(&phi.grid, s)
            }
        })
        .collect();
    PhaseSpacePoint {
        grid: phi.grid.clone(),
        particles: phi.particles.clone(),
        fields,
    }
}

fn map_modes(grid: &Grid, f: impl Fn(Vec3, usize) -> Complex64 + Sync) -> Vec<Complex64> {
    let n = grid.n();
    let kv = grid.wavenumbers();
    (0..grid.len())
        .into_par_iter()
        .with_min_len(n * n)
        .map(|idx| f([kv[idx / (n * n)], kv[(idx / n) % n], kv[idx % n]], idx))
        .collect()
}

pub fn curl_spectral(grid: &Grid, f: &SpectralVector) -> SpectralVector {
    let comp = |a: usize| {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        map_modes(grid, |k, idx| I * (k[b] * f.c[c][idx] - k[c] * f.c[b][idx]))
    };
    SpectralVector {
        c: [comp(0), comp(1), comp(2)],
    }
}

pub fn divergence_spectral(grid: &Grid, f: &SpectralVector) -> Vec<Complex64> {
    map_modes(grid, |k, idx| {
        I * (k[0] * f.c[0][idx] + k[1] * f.c[1][idx] + k[2] * f.c[2][idx])
    })
}

/// Spectral derivative `D^alpha` of a scalar spectrum.
pub fn derivative_spectral(grid: &Grid, g: &[Complex64], alpha: [u32; 3]) -> Vec<Complex64> {
    map_modes(grid, |k, idx| {
        let mut m = Complex64::new(1.0, 0.0);
        for a in 0..3 {
            for _ in 0..alpha[a] {
                m *= I * k[a];
            }
        }
        m * g[idx]
    })
}

/// `∇∧F`.
pub fn spectral_curl(grid: &Grid, f: &VectorField) -> VectorField {
    curl_spectral(grid, &f.to_spectral(grid)).to_real(grid)
}

/// `∇·F`.
pub fn spectral_divergence(grid: &Grid, f: &VectorField) -> Vec<f64> {
    grid.inverse_real(&divergence_spectral(grid, &f.to_spectral(grid)))
}

pub fn spectral_gradient(grid: &Grid, g: &[f64]) -> VectorField {
    let gh = grid.forward_real(g);
    let c: [Vec<f64>; 3] = std::array::from_fn(|a| {
        let mut alpha = [0; 3];
        alpha[a] = 1;
        grid.inverse_real(&derivative_spectral(grid, &gh, alpha))
    });
    VectorField::from_components(c)
}

pub fn spectral_laplacian(grid: &Grid, g: &[f64]) -> Vec<f64> {
    let gh = grid.forward_real(g);
    grid.inverse_real(&map_modes(grid, |k, idx| {
        -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * gh[idx]
    }))
}

impl PhaseSpacePoint {
    /// `self + s·d`, where only positions, momenta and fields of `d` are used.
    pub fn plus_scaled(&self, s: f64, d: &PhaseSpacePoint) -> PhaseSpacePoint {
        let particles = self
            .particles
            .iter()
            .zip(&d.particles)
            .map(|(a, b)| ParticleState {
                q: crate::vec3::add(a.q, crate::vec3::scale(b.q, s)),
                p: crate::vec3::add(a.p, crate::vec3::scale(b.p, s)),
                mass: a.mass,
            })
            .collect();
        let fields = self
            .fields
            .iter()
            .zip(&d.fields)
            .map(|(a, b)| a.plus_scaled(s, b))
            .collect();
        PhaseSpacePoint {
            grid: self.grid.clone(),
            particles,
            fields,
        }
    }

    /// Scale positions, momenta and fields, keeping masses.
    pub fn scaled_delta(&self, s: f64) -> PhaseSpacePoint {
        PhaseSpacePoint {
            grid: self.grid.clone(),
            particles: self
                .particles
                .iter()
                .map(|p| ParticleState {
                    q: crate::vec3::scale(p.q, s),
                    p: crate::vec3::scale(p.p, s),
                    mass: p.mass,
                })
                .collect(),
            fields: self.fields.iter().map(|f| f.scaled(s)).collect(),
        }
    }
}

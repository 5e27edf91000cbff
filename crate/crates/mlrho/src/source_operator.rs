//! Velocity map, smeared Lorentz force, rigid current source and the
//! nonlinear operator `J`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::reduce;
use crate::spectral_field::{PhaseSpacePoint, SpectralPair, VectorField};
use crate::vec3::{self, Vec3};
use crate::weights_norms::{l2w_norm_sq, WeightSpec};

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParticleState {
    pub q: Vec3,
    pub p: Vec3,
    pub mass: f64,
}

impl ParticleState {
    pub fn new(q: Vec3, p: Vec3, mass: f64) -> Result<Self> {
        if mass == 0.0 || !mass.is_finite() {
            return Err(Error::Domain(format!("mass must be nonzero and finite, got {mass}")));
        }
        Ok(ParticleState { q, p, mass })
    }

    pub fn at_rest(q: Vec3, mass: f64) -> Result<Self> {
        ParticleState::new(q, [0.0; 3], mass)
    }

    pub fn sigma(&self) -> f64 {
        self.mass.signum()
    }

    pub fn velocity(&self) -> Vec3 {
        velocity(self.p, self.mass, self.sigma()).expect("particle mass is nonzero")
    }

    /// `σ √(m² + p²)`.
    pub fn kinetic_energy(&self) -> f64 {
        self.sigma() * self.mass.hypot(vec3::norm(self.p))
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|x| x.is_finite())
    }
}

/// `σ p / √(m² + |p|²)`, never reaching unit speed.
pub fn velocity(p: Vec3, m: f64, sigma: f64) -> Result<Vec3> {
    if m == 0.0 {
        return Err(Error::Domain("velocity undefined for zero mass".into()));
    }
    let pn = vec3::norm(p);
    if pn == 0.0 {
        return Ok([0.0; 3]);
    }
    let v = vec3::scale(p, sigma / m.hypot(pn));
    // For |p| ≫ m the quotient rounds to unit speed; pull it back inside,
    // with a margin for the rounding of the norm itself.
    let vn = vec3::norm(v);
    if vn >= 1.0 {
        return Ok(vec3::scale(v, (1.0 - 4.0 * f64::EPSILON) / vn));
    }
    Ok(v)
}

/// Radial bump `c·exp(-1/(1-(r/R)²))` carrying total charge `charge`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeShape {
    pub radius: f64,
    pub charge: f64,
}

pub fn bump(r: f64, radius: f64) -> f64 {
    let s = r / radius;
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

impl ChargeShape {
    pub fn new(radius: f64, charge: f64) -> Self {
        ChargeShape { radius, charge }
    }

    /// Sample the bump around the origin, normalize its grid sum to the
    /// charge and keep its transform with the Nyquist planes removed.
    pub fn discretize(&self, grid: &Grid) -> Result<GridShape> {
        check_support(self.radius, grid.dx(), grid.length())?;
        let raw: Vec<f64> = (0..grid.len())
            .map(|idx| bump(vec3::norm(grid.point(idx)), self.radius))
            .collect();
        let total = reduce::sum_by(raw.len(), |i| raw[i]) * grid.cell_volume();
        let c = self.charge / total;
        let mut spectrum = grid.forward_real(&raw);
        let n = grid.n();
        for (idx, z) in spectrum.iter_mut().enumerate() {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            if grid.is_nyquist(i) || grid.is_nyquist(j) || grid.is_nyquist(k) {
                *z = Complex64::default();
            } else {
                *z *= c;
            }
        }
        let centered = grid.inverse_real(&spectrum);
        Ok(GridShape {
            shape: *self,
            grid: grid.clone(),
            spectrum,
            centered,
        })
    }
}

/// Support must be resolved by the grid and fit twice into half the box.
pub fn check_support(radius: f64, dx: f64, length: f64) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Geometry(format!(
            "support radius must be positive, got {radius}"
        )));
    }
    if radius < dx {
        return Err(Error::Geometry(format!(
            "support radius {radius} is below the grid spacing {dx}"
        )));
    }
    if 2.0 * radius > 0.5 * length {
        return Err(Error::Geometry(format!(
            "support diameter {} exceeds half the box length {}",
            2.0 * radius,
            0.5 * length
        )));
    }
    Ok(())
}

/// Grid representation of a charge shape. Translation by `q` multiplies the
/// transform by `e^{-ik·q}`, so any position is represented without
/// resampling and the total charge is exact.
#[derive(Clone, Debug)]
pub struct GridShape {
    pub shape: ChargeShape,
    grid: Grid,
    spectrum: Vec<Complex64>,
    centered: Vec<f64>,
}

/// Separable phase factors `e^{-i k_a q_a}` per axis.
#[derive(Clone, Debug)]
pub(crate) struct Phase {
    pub f: [Vec<Complex64>; 3],
}

impl Phase {
    pub fn new(grid: &Grid, q: Vec3) -> Phase {
        let kv = grid.wavenumbers();
        Phase {
            f: std::array::from_fn(|a| kv.iter().map(|&k| Complex64::from_polar(1.0, -k * q[a])).collect()),
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.f[0][i] * self.f[1][j] * self.f[2][k]
    }
}

impl GridShape {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn charge(&self) -> f64 {
        self.shape.charge
    }

    pub fn radius(&self) -> f64 {
        self.shape.radius
    }

    /// Transform of the centered profile.
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// Samples of the centered profile.
    pub fn centered(&self) -> &[f64] {
        &self.centered
    }

    pub fn shifted_spectrum(&self, q: Vec3) -> Vec<Complex64> {
        let n = self.grid.n();
        let ph = Phase::new(&self.grid, q);
        self.spectrum
            .par_iter()
            .enumerate()
            .with_min_len(n * n)
            .map(|(idx, z)| z * ph.at(idx / (n * n), (idx / n) % n, idx % n))
            .collect()
    }

    /// Samples of `ρ(x - q)`.
    pub fn sample(&self, q: Vec3) -> Vec<f64> {
        self.grid.inverse_real(&self.shifted_spectrum(q))
    }

    /// `‖ρ‖_{L²_w}` of the centered profile.
    pub fn l2w_norm(&self, w: &WeightSpec) -> f64 {
        w.weighted_sum_sq(&[&self.centered]).sqrt()
    }

    /// `‖ρ/√w‖_{L²}` of the centered profile.
    pub fn inv_sqrt_w_norm(&self, w: &WeightSpec) -> f64 {
        let s = w.samples();
        let c = &self.centered;
        (reduce::sum_by(c.len(), |i| c[i] * c[i] / s[i]) * self.grid.cell_volume()).sqrt()
    }
}

pub fn discretize_all(shapes: &[ChargeShape], grid: &Grid) -> Result<Vec<GridShape>> {
    shapes.iter().map(|s| s.discretize(grid)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingPreset {
    Ml,
    MlSi,
    Custom,
}

/// Interaction matrix `e_ij`: charge `i` feels field `j` with weight `e_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    pub n: usize,
    pub preset: CouplingPreset,
    e: Vec<f64>,
}

impl CouplingMatrix {
    pub fn ml(n: usize) -> Self {
        CouplingMatrix {
            n,
            preset: CouplingPreset::Ml,
            e: vec![1.0; n * n],
        }
    }

    pub fn ml_si(n: usize) -> Self {
        let e = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { 1.0 }).collect();
        CouplingMatrix {
            n,
            preset: CouplingPreset::MlSi,
            e,
        }
    }

    pub fn custom(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Config("coupling matrix must be square".into()));
        }
        let e: Vec<f64> = rows.into_iter().flatten().collect();
        if e.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("coupling matrix has non-finite entries".into()));
        }
        Ok(CouplingMatrix {
            n,
            preset: CouplingPreset::Custom,
            e,
        })
    }

    pub fn from_preset(name: &str, n: usize) -> Result<Self> {
        match name {
            "ML" | "ml" => Ok(Self::ml(n)),
            "ML_SI" | "ml_si" | "ML-SI" => Ok(Self::ml_si(n)),
            other => Err(Error::Config(format!("unknown coupling preset `{other}`"))),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.e[i * self.n + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.e.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Value of `J(φ)`: velocities, forces and field sources per charge.
#[derive(Clone, Debug)]
pub struct TangentState {
    pub dq: Vec<Vec3>,
    pub dp: Vec<Vec3>,
    pub de: Vec<VectorField>,
    pub db: Vec<VectorField>,
}

impl TangentState {
    pub fn norm(&self, w: &WeightSpec) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dq.len() {
            s += vec3::norm_sq(self.dq[i]) + vec3::norm_sq(self.dp[i]);
            s += l2w_norm_sq(w, &self.de[i]) + l2w_norm_sq(w, &self.db[i]);
        }
        s.sqrt()
    }
}

pub(crate) fn check_sources(phi: &PhaseSpacePoint, shapes: &[GridShape]) -> Result<()> {
    phi.validate()?;
    if shapes.len() != phi.len() {
        return Err(Error::Structure(format!(
            "{} shapes for {} particles",
            shapes.len(),
            phi.len()
        )));
    }
    for s in shapes {
        if *s.grid() != phi.grid {
            return Err(Error::Structure("shape discretized on a different grid".into()));
        }
        check_support(s.radius(), phi.grid.dx(), phi.grid.length())?;
    }
    Ok(())
}

pub(crate) fn check_coupling(phi: &PhaseSpacePoint, coupling: &CouplingMatrix) -> Result<()> {
    if coupling.n != phi.len() {
        return Err(Error::Structure(format!(
            "coupling is {0}x{0} for {1} charges",
            coupling.n,
            phi.len()
        )));
    }
    Ok(())
}

/// Real inner products `(⟨ρ, E⟩, ⟨ρ, B⟩)` per component from spectra, where
/// `rho` is the transform of the real density and the grid sum is evaluated
/// through Parseval's identity.
pub(crate) fn spectral_inner(grid: &Grid, rho: &[Complex64], pair: &SpectralPair) -> (Vec3, Vec3) {
    let arrays = pair.arrays();
    let len = rho.len();
    let s = grid.cell_volume() / len as f64;
    let out: [f64; 6] = std::array::from_fn(|c| {
        let a = arrays[c];
        reduce::sum_by(len, |i| rho[i].re * a[i].re + rho[i].im * a[i].im) * s
    });
    ([out[0], out[1], out[2]], [out[3], out[4], out[5]])
}

/// Smeared Lorentz force on charge `i`.
pub fn lorentz_force(i: usize, phi: &PhaseSpacePoint, shapes: &[GridShape], coupling: &CouplingMatrix) -> Result<Vec3> {
    check_sources(phi, shapes)?;
    check_coupling(phi, coupling)?;
    let grid = &phi.grid;
    let rho = shapes[i].shifted_spectrum(phi.particles[i].q);
    let v = phi.particles[i].velocity();
    let mut f = [0.0; 3];
    for (j, field) in phi.fields.iter().enumerate() {
        let e_ij = coupling.get(i, j);
        if e_ij == 0.0 {
            continue;
        }
        let (ie, ib) = spectral_inner(grid, &rho, field.spectral(grid));
        f = vec3::add(f, vec3::scale(vec3::add(ie, vec3::cross(v, ib)), e_ij));
    }
    Ok(f)
}

/// `-4π v(p_i) ρ_i(x - q_i)` on the grid.
pub fn current_source(i: usize, phi: &PhaseSpacePoint, shapes: &[GridShape]) -> Result<VectorField> {
    check_sources(phi, shapes)?;
    let v = phi.particles[i].velocity();
    if v == [0.0; 3] {
        return Ok(VectorField::zeros(&phi.grid));
    }
    let rho = shapes[i].sample(phi.particles[i].q);
    Ok(VectorField::from_components(std::array::from_fn(|a| {
        rho.iter().map(|r| -FOUR_PI * v[a] * r).collect()
    })))
}

/// The full nonlinear operator `J(φ)`.
#[allow(non_snake_case)]
pub fn apply_J(phi: &PhaseSpacePoint, shapes: &[GridShape], coupling: &CouplingMatrix) -> Result<TangentState> {
    check_sources(phi, shapes)?;
    check_coupling(phi, coupling)?;
    let n = phi.len();
    let mut out = TangentState {
        dq: Vec::with_capacity(n),
        dp: Vec::with_capacity(n),
        de: Vec::with_capacity(n),
        db: Vec::with_capacity(n),
    };
    for i in 0..n {
        out.dq.push(phi.particles[i].velocity());
        out.dp.push(lorentz_force(i, phi, shapes, coupling)?);
        out.de.push(current_source(i, phi, shapes)?);
        out.db.push(VectorField::zeros(&phi.grid));
    }
    Ok(out)
}

/// Constants of the bound `‖J(φ)‖ ≤ C_J Σ(1+C_w|q_i|)^P ‖φ‖`.
#[derive(Clone, Debug, PartialEq)]
pub struct JConstants {
    pub c_j: f64,
    pub k_vel: f64,
    pub c_w: f64,
    pub p_w: u32,
}

impl JConstants {
    pub fn new(shapes: &[GridShape], masses: &[f64], coupling: &CouplingMatrix, w: &WeightSpec) -> Self {
        let n = shapes.len() as f64;
        let k_vel: f64 = masses.iter().map(|m| 2.0 / m.abs()).sum();
        let inv: f64 = shapes.iter().map(|s| s.inv_sqrt_w_norm(w)).sum();
        let l2w: f64 = shapes.iter().map(|s| s.l2w_norm(w)).sum();
        let e = coupling.max_abs();
        JConstants {
            c_j: n * k_vel + 2.0 * n * e * inv + FOUR_PI * k_vel * l2w,
            k_vel,
            c_w: w.c_w,
            p_w: w.p_w,
        }
    }

    /// `Σ_i (1 + C_w |q_i|)^{P_w}`.
    pub fn position_factor(&self, phi: &PhaseSpacePoint) -> f64 {
        phi.particles
            .iter()
            .map(|p| (1.0 + self.c_w * vec3::norm(p.q)).powi(self.p_w as i32))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub constants: JConstants,
    pub pass: bool,
    /// `rhs / lhs`, infinite when `lhs = 0`.
    pub slack: f64,
}

/// Evaluate both sides of the growth bound on `J`.
pub fn j_bound_check(
    phi: &PhaseSpacePoint,
    shapes: &[GridShape],
    coupling: &CouplingMatrix,
    w: &WeightSpec,
) -> Result<JBoundReport> {
    let masses: Vec<f64> = phi.particles.iter().map(|p| p.mass).collect();
    let constants = JConstants::new(shapes, &masses, coupling, w);
    let lhs = apply_J(phi, shapes, coupling)?.norm(w);
    let rhs = constants.c_j * constants.position_factor(phi) * crate::weights_norms::phase_norm(phi, w)?;
    Ok(JBoundReport {
        lhs,
        rhs,
        pass: lhs <= rhs,
        slack: if lhs == 0.0 { f64::INFINITY } else { rhs / lhs },
        constants,
    })
}

impl TangentState {
    pub fn distance(&self, other: &TangentState, w: &WeightSpec) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dq.len() {
            s += vec3::norm_sq(vec3::sub(self.dq[i], other.dq[i]));
            s += vec3::norm_sq(vec3::sub(self.dp[i], other.dp[i]));
            let mut de = self.de[i].clone();
            de.axpy(-1.0, &other.de[i]);
            let mut db = self.db[i].clone();
            db.axpy(-1.0, &other.db[i]);
            s += l2w_norm_sq(w, &de) + l2w_norm_sq(w, &db);
        }
        s.sqrt()
    }
}

/// Largest observed `‖J(φ+δ) - J(φ)‖ / ‖δ‖` over random directions of size `delta`.
pub fn j_lipschitz_estimate<R: rand::Rng + ?Sized>(
    phi: &PhaseSpacePoint,
    shapes: &[GridShape],
    coupling: &CouplingMatrix,
    w: &WeightSpec,
    delta: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let j0 = apply_J(phi, shapes, coupling)?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let dir = crate::random::unit_direction(phi, w, rng);
        let j1 = apply_J(&phi.plus_scaled(delta, &dir), shapes, coupling)?;
        worst = worst.max(j1.distance(&j0, w) / delta);
    }
    Ok(worst)
}

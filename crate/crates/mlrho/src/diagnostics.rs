//! Constraint residuals, energies, growth and Lipschitz bounds, and the
//! sup-norm regularity ratio.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{check_horizon, step, EvolveConfig, Model};
use crate::reduce;
use crate::source_operator::{GridShape, JConstants, FOUR_PI};
use crate::spectral_field::{derivative_spectral, PhaseSpacePoint, VectorField};
use crate::vec3;
use crate::weights_norms::{field_norm, l2_norm_sq, multi_indices, phase_distance, phase_norm, WeightSpec};

/// L² norms of `∇·E_i - 4πρ_net(·-q_i)` and `∇·B_i` for one charge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintResidual {
    pub gauss: f64,
    pub div_b: f64,
    /// `‖4πρ_net‖`, the natural scale of `gauss`.
    pub source: f64,
}

fn spectral_l2(grid: &crate::grid::Grid, f: impl Fn(usize) -> Complex64 + Sync) -> f64 {
    // Parseval without the mean mode.
    let s = reduce::sum_by(grid.len(), |i| if i == 0 { 0.0 } else { f(i).norm_sqr() });
    (s * grid.cell_volume() / grid.len() as f64).sqrt()
}

pub fn constraint_residuals(phi: &PhaseSpacePoint, shapes: &[GridShape]) -> Result<Vec<ConstraintResidual>> {
    crate::source_operator::check_sources(phi, shapes)?;
    let grid = &phi.grid;
    let n = grid.n();
    let kv = grid.wavenumbers();
    let kvec = |idx: usize| [kv[idx / (n * n)], kv[(idx / n) % n], kv[idx % n]];
    let div = |c: &[Vec<Complex64>; 3], idx: usize| {
        let k = kvec(idx);
        Complex64::i() * (k[0] * c[0][idx] + k[1] * c[1][idx] + k[2] * c[2][idx])
    };
    let mut out = Vec::with_capacity(phi.len());
    for (i, shape) in shapes.iter().enumerate() {
        let spec = phi.fields[i].spectral(grid);
        let rho = shape.shifted_spectrum(phi.particles[i].q);
        out.push(ConstraintResidual {
            gauss: spectral_l2(grid, |idx| div(&spec.e.c, idx) - FOUR_PI * rho[idx]),
            div_b: spectral_l2(grid, |idx| div(&spec.b.c, idx)),
            source: spectral_l2(grid, |idx| FOUR_PI * rho[idx]),
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyVariant {
    /// Kinetic terms plus the field energy of each charge's own field.
    PerCharge,
    /// Kinetic terms plus the energy of the summed field.
    TotalField,
}

pub fn kinetic_energy(phi: &PhaseSpacePoint) -> f64 {
    phi.particles.iter().map(|p| p.kinetic_energy()).sum()
}

pub fn energy(phi: &PhaseSpacePoint, variant: EnergyVariant) -> f64 {
    let grid = &phi.grid;
    let field = match variant {
        EnergyVariant::PerCharge => phi
            .fields
            .iter()
            .map(|f| l2_norm_sq(grid, f.e()) + l2_norm_sq(grid, f.b()))
            .sum::<f64>(),
        EnergyVariant::TotalField => {
            let mut e = VectorField::zeros(grid);
            let mut b = VectorField::zeros(grid);
            for f in &phi.fields {
                e.axpy(1.0, f.e());
                b.axpy(1.0, f.b());
            }
            l2_norm_sq(grid, &e) + l2_norm_sq(grid, &b)
        }
    };
    kinetic_energy(phi) + field / (2.0 * FOUR_PI)
}

/// Samples of a bound `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub pass: bool,
    /// Smallest `(rhs - lhs) / rhs` over `t ≠ 0`; negative when the bound
    /// fails, infinite when there are no such samples.
    pub worst_margin: f64,
}

impl BoundCheck {
    fn new(times: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>) -> Self {
        let pass = lhs.iter().zip(&rhs).all(|(l, r)| l <= r);
        // t = 0 is tight by construction and is left out of the margin.
        let worst_margin = times
            .iter()
            .zip(lhs.iter().zip(&rhs))
            .filter(|(t, _)| **t != 0.0)
            .map(|(_, (l, r))| {
                if r.is_infinite() {
                    1.0
                } else if *r == 0.0 {
                    if *l == 0.0 {
                        0.0
                    } else {
                        -1.0
                    }
                } else {
                    (r - l) / r
                }
            })
            .fold(f64::INFINITY, f64::min);
        BoundCheck {
            times,
            lhs,
            rhs,
            pass,
            worst_margin,
        }
    }
}

/// Constants of the a priori growth bound for a run started at `φ⁰`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthBound {
    pub gamma: f64,
    pub j: JConstants,
    pub particles: usize,
    pub norm0: f64,
}

impl GrowthBound {
    pub fn new(phi0: &PhaseSpacePoint, model: &Model) -> Result<Self> {
        Ok(GrowthBound {
            gamma: model.weight.gamma,
            j: model.j_constants(&phi0.particles),
            particles: phi0.len(),
            norm0: phase_norm(phi0, &model.weight)?,
        })
    }

    /// `C(T) = e^{γT} C_J N (1 + C_w(‖φ⁰‖ + T))^{P_w}`.
    pub fn rate(&self, t: f64) -> f64 {
        let t = t.abs();
        (self.gamma * t).exp()
            * self.j.c_j
            * self.particles as f64
            * (1.0 + self.j.c_w * (self.norm0 + t)).powi(self.j.p_w as i32)
    }

    /// `e^{γT} (1 + C T e^{CT}) ‖φ⁰‖`.
    pub fn bound(&self, t: f64) -> f64 {
        let t = t.abs();
        let c = self.rate(t);
        (self.gamma * t).exp() * (1.0 + c * t * (c * t).exp()) * self.norm0
    }
}

/// Check `‖φ_t‖ ≤ bound(|t|)` along a norm series.
pub fn growth_bound_check(times: &[f64], norms: &[f64], bound: &GrowthBound) -> BoundCheck {
    let rhs = times.iter().map(|&t| bound.bound(t)).collect();
    BoundCheck::new(times.to_vec(), norms.to_vec(), rhs)
}

/// Check `‖W_tφ‖ ≤ e^{γ|t|}‖φ‖` for a free-field series, allowing `rel_tol`
/// for roundoff.
pub fn free_bound_check(times: &[f64], norms: &[f64], gamma: f64, rel_tol: f64) -> BoundCheck {
    let n0 = norms.first().copied().unwrap_or(0.0);
    let rhs = times
        .iter()
        .map(|t| (gamma * t.abs()).exp() * n0 * (1.0 + rel_tol))
        .collect();
    BoundCheck::new(times.to_vec(), norms.to_vec(), rhs)
}

/// One row of the diagnostics series.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub h_per: f64,
    pub h_tot: f64,
    pub gauss: Vec<f64>,
    pub div_b: Vec<f64>,
    pub phase_norm: f64,
    /// Relative margin to the a priori growth bound at `|t|`.
    pub bound_margin: f64,
}

/// Evaluates [`DiagnosticsRecord`]s against a fixed initial state.
#[derive(Clone, Debug)]
pub struct Recorder<'a> {
    model: &'a Model,
    bound: GrowthBound,
}

impl<'a> Recorder<'a> {
    pub fn new(phi0: &PhaseSpacePoint, model: &'a Model) -> Result<Self> {
        Ok(Recorder {
            model,
            bound: GrowthBound::new(phi0, model)?,
        })
    }

    pub fn bound(&self) -> &GrowthBound {
        &self.bound
    }

    pub fn record(&self, t: f64, phi: &PhaseSpacePoint) -> Result<DiagnosticsRecord> {
        let res = constraint_residuals(phi, &self.model.shapes)?;
        let norm = phase_norm(phi, &self.model.weight)?;
        let rhs = self.bound.bound(t);
        let rec = DiagnosticsRecord {
            t,
            h_per: energy(phi, EnergyVariant::PerCharge),
            h_tot: energy(phi, EnergyVariant::TotalField),
            gauss: res.iter().map(|r| r.gauss).collect(),
            div_b: res.iter().map(|r| r.div_b).collect(),
            phase_norm: norm,
            bound_margin: if rhs.is_infinite() {
                1.0
            } else if rhs > 0.0 {
                (rhs - norm) / rhs
            } else {
                0.0
            },
        };
        if !(rec.h_per.is_finite() && rec.h_tot.is_finite() && norm.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(rec)
    }
}

/// Twin-run distances for a sweep of perturbation sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzReport {
    pub deltas: Vec<f64>,
    pub times: Vec<f64>,
    /// `distances[d][s]` is `‖φ_t - φ̃_t‖` for `deltas[d]` at `times[s]`.
    pub distances: Vec<Vec<f64>>,
    /// `sup_t ‖φ_t - φ̃_t‖ / ‖φ⁰ - φ̃⁰‖`, zero when the perturbation vanishes.
    pub ratios: Vec<f64>,
    /// `max/min - 1` over the nonzero ratios.
    pub spread: f64,
    pub finite: bool,
}

impl LipschitzReport {
    pub fn stable(&self, tol: f64) -> bool {
        self.finite && self.spread < tol
    }
}

/// Run `φ⁰` and `φ⁰ + δ·d̂` side by side with fixed steps of `cfg.dt` for
/// every `δ` in `deltas`, where `d̂` is `direction` scaled to unit norm.
pub fn lipschitz_probe(
    phi0: &PhaseSpacePoint,
    direction: &PhaseSpacePoint,
    deltas: &[f64],
    duration: f64,
    cfg: &EvolveConfig,
    model: &Model,
) -> Result<LipschitzReport> {
    cfg.validate()?;
    model.check(phi0)?;
    let w = &model.weight;
    let dn = phase_norm(direction, w)?;
    if dn == 0.0 {
        return Err(Error::Domain("perturbation direction is zero".into()));
    }
    check_horizon(phi0, model, duration.abs(), cfg.dt)?;
    let steps = (duration.abs() / cfg.dt).round().max(1.0) as usize;
    let h = duration / steps as f64;

    let mut base = phi0.clone();
    let mut twins: Vec<PhaseSpacePoint> = deltas.iter().map(|&d| phi0.plus_scaled(d / dn, direction)).collect();
    let initial: Vec<f64> = twins
        .iter()
        .map(|t| phase_distance(t, phi0, w))
        .collect::<Result<_>>()?;
    let mut times = vec![0.0];
    let mut distances: Vec<Vec<f64>> = initial.iter().map(|&d| vec![d]).collect();
    for s in 1..=steps {
        base = step(&base, h, cfg, model)?.0;
        for (d, twin) in twins.iter_mut().enumerate() {
            *twin = step(twin, h, cfg, model)?.0;
            distances[d].push(phase_distance(twin, &base, w)?);
        }
        times.push(h * s as f64);
    }
    let ratios: Vec<f64> = distances
        .iter()
        .zip(&initial)
        .map(|(series, &d0)| {
            if d0 == 0.0 {
                0.0
            } else {
                series.iter().fold(0.0, |m: f64, &d| m.max(d)) / d0
            }
        })
        .collect();
    let finite = ratios.iter().all(|r| r.is_finite());
    let nz: Vec<f64> = ratios.iter().copied().filter(|&r| r > 0.0).collect();
    let spread = if nz.is_empty() {
        0.0
    } else {
        let max = nz.iter().copied().fold(f64::MIN, f64::max);
        let min = nz.iter().copied().fold(f64::MAX, f64::min);
        max / min - 1.0
    };
    Ok(LipschitzReport {
        deltas: deltas.to_vec(),
        times,
        distances,
        ratios,
        spread,
        finite,
    })
}

/// `sup_x Σ_{|α|≤k-2} |D^α F(x)| / ‖F‖_{H^k_w}`; zero for the zero field.
pub fn regularity_probe(field: &VectorField, w: &WeightSpec, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("regularity probe needs k >= 2, got {k}")));
    }
    let denom = field_norm(field, w, k)?;
    if denom == 0.0 {
        return Ok(0.0);
    }
    let grid = w.grid();
    let specs: Vec<Vec<Complex64>> = field.components().iter().map(|c| grid.forward_real(c)).collect();
    let mut sum = vec![0.0; grid.len()];
    for alpha in multi_indices(k - 2) {
        let d: Vec<Vec<f64>> = specs
            .iter()
            .map(|s| {
                if alpha == [0, 0, 0] {
                    grid.inverse_real(s)
                } else {
                    grid.inverse_real(&derivative_spectral(grid, s, alpha))
                }
            })
            .collect();
        for (i, acc) in sum.iter_mut().enumerate() {
            *acc += vec3::norm([d[0][i], d[1][i], d[2][i]]);
        }
    }
    let sup = reduce::max_by(sum.len(), |i| sum[i]);
    Ok(sup / denom)
}

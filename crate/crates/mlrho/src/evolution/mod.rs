//! Time evolution of `φ̇ = Aφ + J(φ)` by Picard iteration of the Duhamel map,
//! with a splitting integrator for cross-checks.

mod picard;
mod strang;

pub use picard::{picard_step, DuhamelMap, NodeTrajectory};
pub use strang::strang_step;

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::source_operator::{
    check_coupling, check_sources, j_lipschitz_estimate, CouplingMatrix, GridShape, JConstants, ParticleState,
};
use crate::spectral_field::PhaseSpacePoint;
use crate::vec3;
use crate::weights_norms::{phase_norm, WeightSpec};

/// Everything besides the state that the dynamics depends on.
#[derive(Clone, Debug)]
pub struct Model {
    pub shapes: Vec<GridShape>,
    pub coupling: CouplingMatrix,
    pub weight: WeightSpec,
}

impl Model {
    pub fn new(shapes: Vec<GridShape>, coupling: CouplingMatrix, weight: WeightSpec) -> Result<Self> {
        if coupling.n != shapes.len() {
            return Err(Error::Structure(format!(
                "coupling is {0}x{0} for {1} shapes",
                coupling.n,
                shapes.len()
            )));
        }
        if shapes.iter().any(|s| s.grid() != weight.grid()) {
            return Err(Error::Structure("shapes and weight use different grids".into()));
        }
        Ok(Model {
            shapes,
            coupling,
            weight,
        })
    }

    pub fn check(&self, phi: &PhaseSpacePoint) -> Result<()> {
        check_sources(phi, &self.shapes)?;
        check_coupling(phi, &self.coupling)?;
        if phi.grid != *self.weight.grid() {
            return Err(Error::Structure("state and weight use different grids".into()));
        }
        if !phi.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn max_radius(&self) -> f64 {
        self.shapes.iter().map(|s| s.radius()).fold(0.0, f64::max)
    }

    pub fn j_constants(&self, particles: &[ParticleState]) -> JConstants {
        let masses: Vec<f64> = particles.iter().map(|p| p.mass).collect();
        JConstants::new(&self.shapes, &masses, &self.coupling, &self.weight)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Picard,
    Strang,
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "picard" => Ok(Scheme::Picard),
            "strang" => Ok(Scheme::Strang),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveConfig {
    pub scheme: Scheme,
    pub dt: f64,
    /// Signed run length; negative values run backward.
    pub duration: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub quad_nodes: usize,
    pub contraction_guard: bool,
    pub dt_min: f64,
    /// Callbacks fire every this many accepted steps, and at the end.
    pub output_every: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            scheme: Scheme::Picard,
            dt: 0.01,
            duration: 1.0,
            picard_tol: 1e-10,
            picard_max_iter: 60,
            quad_nodes: 4,
            contraction_guard: true,
            dt_min: 1e-6,
            output_every: 1,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.duration.is_finite() {
            return Err(Error::Config("duration must be finite".into()));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol <= 1e-2) {
            return Err(Error::Config(format!(
                "picard_tol must lie in (0, 1e-2], got {}",
                self.picard_tol
            )));
        }
        if self.quad_nodes < 2 {
            return Err(Error::Config("quad_nodes must be at least 2".into()));
        }
        if self.picard_max_iter == 0 || self.output_every == 0 {
            return Err(Error::Config(
                "picard_max_iter and output_every must be positive".into(),
            ));
        }
        if !(self.dt_min > 0.0) {
            return Err(Error::Config("dt_min must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    /// Ratios of successive iterate differences.
    pub factors: Vec<f64>,
    /// Sup-over-nodes ℋ_w differences of successive iterates.
    pub differences: Vec<f64>,
    pub dt: f64,
    /// Rejections that preceded this accepted step.
    pub rejected: usize,
}

/// Longest run for which periodic images stay out of causal contact.
pub fn safe_duration(phi: &PhaseSpacePoint, model: &Model, dt: f64) -> f64 {
    horizon_duration(phi.grid.length(), model.max_radius(), dt)
}

/// `(L/2 - 2R - dt) / 2`: runs shorter than this keep every charge out of
/// causal contact with the periodic images, given speeds below one.
pub fn horizon_duration(length: f64, max_radius: f64, dt: f64) -> f64 {
    0.5 * (0.5 * length - 2.0 * max_radius - dt)
}

/// Reject runs of length `t_run` with `t_run + dt ≥ L/2 - 2R - t_run`.
pub fn check_horizon_for(length: f64, max_radius: f64, t_run: f64, dt: f64) -> Result<()> {
    if t_run + dt >= 0.5 * length - 2.0 * max_radius - t_run {
        return Err(Error::Horizon {
            requested: t_run,
            safe: horizon_duration(length, max_radius, dt).max(0.0),
        });
    }
    Ok(())
}

pub(crate) fn check_horizon(phi: &PhaseSpacePoint, model: &Model, t_run: f64, dt: f64) -> Result<()> {
    check_horizon_for(phi.grid.length(), model.max_radius(), t_run, dt)
}

/// Output of [`evolve`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub particles: Vec<Vec<ParticleState>>,
    pub reports: Vec<StepReport>,
    pub final_state: PhaseSpacePoint,
    pub final_time: f64,
}

impl Trajectory {
    pub fn rejected(&self) -> usize {
        self.reports.iter().map(|r| r.rejected).sum()
    }

    pub fn worst_factor(&self) -> f64 {
        self.reports
            .iter()
            .flat_map(|r| r.factors.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Failed run with everything computed before the failure.
#[derive(Debug)]
pub struct Aborted {
    pub error: Error,
    pub partial: Box<Trajectory>,
}

impl From<Aborted> for Error {
    fn from(a: Aborted) -> Error {
        a.error
    }
}

/// Advance one step with the configured scheme.
pub fn step(
    phi: &PhaseSpacePoint,
    dt: f64,
    cfg: &EvolveConfig,
    model: &Model,
) -> Result<(PhaseSpacePoint, StepReport)> {
    match cfg.scheme {
        Scheme::Picard => picard_step(phi, dt, cfg, model),
        Scheme::Strang => Ok((
            strang_step(phi, dt, model)?,
            StepReport {
                dt,
                ..StepReport::default()
            },
        )),
    }
}

/// March from `φ⁰` over `cfg.duration`, calling `callback(t, φ_t)` at the
/// start and on accepted states at the output cadence.
pub fn evolve<F>(
    phi0: &PhaseSpacePoint,
    cfg: &EvolveConfig,
    model: &Model,
    mut callback: F,
) -> std::result::Result<Trajectory, Aborted>
where
    F: FnMut(f64, &PhaseSpacePoint) -> Result<()>,
{
    let mut traj = Trajectory {
        times: Vec::new(),
        particles: Vec::new(),
        reports: Vec::new(),
        final_state: phi0.clone(),
        final_time: 0.0,
    };
    let setup = cfg
        .validate()
        .and_then(|_| model.check(phi0))
        .and_then(|_| check_horizon(phi0, model, cfg.duration.abs(), cfg.dt))
        .and_then(|_| callback(0.0, phi0));
    if let Err(error) = setup {
        return Err(Aborted {
            error,
            partial: Box::new(traj),
        });
    }
    traj.times.push(0.0);
    traj.particles.push(phi0.particles.clone());

    let total = cfg.duration.abs();
    let dir = if cfg.duration < 0.0 { -1.0 } else { 1.0 };
    let mut t = 0.0;
    let mut h_try = cfg.dt;
    let mut rejected = 0;
    let mut accepted = 0usize;
    let mut state = phi0.clone();
    while total - t > 1e-12 * cfg.dt {
        let remaining = total - t;
        let h = if remaining <= h_try * (1.0 + 1e-9) {
            remaining
        } else {
            h_try
        };
        match step(&state, dir * h, cfg, model) {
            Ok((next, mut report)) => {
                report.rejected = rejected;
                rejected = 0;
                t = if h == remaining { total } else { t + h };
                accepted += 1;
                state = next;
                traj.reports.push(report);
                traj.final_time = dir * t;
                if accepted.is_multiple_of(cfg.output_every) || t == total {
                    if let Err(error) = callback(dir * t, &state) {
                        traj.final_state = state;
                        return Err(Aborted {
                            error,
                            partial: Box::new(traj),
                        });
                    }
                    traj.times.push(dir * t);
                    traj.particles.push(state.particles.clone());
                }
                h_try = cfg.dt;
            }
            Err(Error::StepRejected { .. }) => {
                rejected += 1;
                h_try = 0.5 * h;
                if h_try < cfg.dt_min {
                    traj.final_state = state;
                    return Err(Aborted {
                        error: Error::StepUnderflow {
                            dt_min: cfg.dt_min,
                            t: dir * t,
                        },
                        partial: Box::new(traj),
                    });
                }
            }
            Err(error) => {
                traj.final_state = state;
                return Err(Aborted {
                    error,
                    partial: Box::new(traj),
                });
            }
        }
    }
    traj.final_state = state;
    Ok(traj)
}

/// A priori step-size budget `T e^{γT} (2 C₁ + C₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetReport {
    pub value: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
}

/// `C₁` bounds `‖J‖` on the unit ball around the free flow, from the
/// constants of the `J` growth bound; `C₂` is the empirical Lipschitz
/// constant of `J` at the state's scale.
pub fn contraction_budget(phi: &PhaseSpacePoint, dt: f64, model: &Model, seed: u64) -> Result<BudgetReport> {
    model.check(phi)?;
    let t = dt.abs();
    let w = &model.weight;
    let gamma = w.gamma;
    let norm = phase_norm(phi, w)?;
    let radius = 1.0 + (gamma * t).exp() * norm;
    let consts = model.j_constants(&phi.particles);
    let pos: f64 = phi
        .particles
        .iter()
        .map(|p| (1.0 + consts.c_w * (vec3::norm(p.q) + 1.0)).powi(consts.p_w as i32))
        .sum();
    let c1 = consts.c_j * pos * radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c2 = j_lipschitz_estimate(
        phi,
        &model.shapes,
        &model.coupling,
        w,
        1e-6 * norm.max(1.0),
        6,
        &mut rng,
    )?;
    Ok(BudgetReport {
        value: t * (gamma * t).exp() * (2.0 * c1 + c2),
        c1,
        c2,
        gamma,
    })
}

//! Fixed-point iteration of the discretized Duhamel map on one step.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{EvolveConfig, Model, StepReport};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::source_operator::{Phase, FOUR_PI};
use crate::spectral_field::{rotate_mode, split_planes, FieldPair, PhaseSpacePoint, RotationTable, SpectralPair};
use crate::vec3::{self, Vec3};
use crate::weights_norms::phase_norm;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Iterate values at the quadrature nodes `s_j = j·h`, `h = dt/(M-1)`.
#[derive(Clone, Debug)]
pub struct NodeTrajectory {
    pub dt: f64,
    /// `[node][charge]`
    pub q: Vec<Vec<Vec3>>,
    /// `[node][charge]`
    pub p: Vec<Vec<Vec3>>,
    /// `[charge][node]`
    pub fields: Vec<Vec<SpectralPair>>,
    /// `[node][receiver]` smeared fields of the current iterate, see
    /// [`smeared_fields`].
    pub smeared: Vec<Vec<[f64; 6]>>,
}

impl NodeTrajectory {
    pub fn nodes(&self) -> usize {
        self.q.len()
    }
}

/// Inner products `Σ_b e_ab ⟨ρ_a(·-q_a), F_b⟩` for every receiver `a`, all six
/// components, evaluated from spectra.
pub(crate) fn smeared_fields(
    grid: &Grid,
    model: &Model,
    phases: &[Phase],
    fields: &[[&[Complex64]; 6]],
) -> Vec<[f64; 6]> {
    let n = grid.n();
    let n2 = n * n;
    let scale = grid.cell_volume() / grid.len() as f64;
    (0..phases.len())
        .map(|a| {
            let rho = model.shapes[a].spectrum();
            let ph = &phases[a];
            let couplings: Vec<(f64, &[&[Complex64]; 6])> = fields
                .iter()
                .enumerate()
                .map(|(b, f)| (model.coupling.get(a, b), f))
                .filter(|(e, _)| *e != 0.0)
                .collect();
            let parts: Vec<[f64; 6]> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut acc = [0.0; 6];
                    for j in 0..n {
                        for k in 0..n {
                            let idx = i * n2 + j * n + k;
                            let r = (rho[idx] * ph.at(i, j, k)).conj();
                            for (e, f) in &couplings {
                                for m in 0..6 {
                                    acc[m] += e * (r * f[m][idx]).re;
                                }
                            }
                        }
                    }
                    acc
                })
                .collect();
            let mut tot = [0.0; 6];
            for p in parts {
                for m in 0..6 {
                    tot[m] += p[m];
                }
            }
            tot.map(|x| x * scale)
        })
        .collect()
}

pub(crate) fn force_from(smeared: &[f64; 6], v: Vec3) -> Vec3 {
    let ie = [smeared[0], smeared[1], smeared[2]];
    let ib = [smeared[3], smeared[4], smeared[5]];
    vec3::add(ie, vec3::cross(v, ib))
}

/// Receiver data for smearing a freshly computed field: coupling `e_ab`,
/// shape spectrum and phase of charge `a`.
type Receiver<'a> = (f64, &'a [Complex64], &'a Phase);

/// One substep of the field recursion for a single charge:
/// `F_j = W_h (F_{j-1} + h/2 C_{j-1}) + h/2 C_j`, with the longitudinal part
/// of the source integral replaced by the exact charge difference. Writes
/// into `cur` and returns `Σ|Δ|²` over modes, or stores `Δ_E + iΔ_B` in
/// `delta`. Also returns the unscaled smeared values `e_ab ⟨ρ_a, F_j⟩` for
/// each receiver, so no separate pass over the new field is needed.
#[allow(clippy::too_many_arguments)]
fn field_substep(
    grid: &Grid,
    rot: &RotationTable,
    h: f64,
    rho: &[Complex64],
    src: [(&Phase, Vec3); 2],
    receivers: &[Receiver],
    prev: &SpectralPair,
    cur: &mut SpectralPair,
    delta: Option<&mut [Vec<Complex64>; 3]>,
) -> (f64, Vec<[f64; 6]>) {
    let n = grid.n();
    let n2 = n * n;
    let kv = grid.wavenumbers();
    let hh = 0.5 * h;
    let [(ph0, v0), (ph1, v1)] = src;
    let c0 = vec3::scale(v0, -FOUR_PI);
    let c1 = vec3::scale(v1, -FOUR_PI);
    let prev = prev.arrays();
    let cur_planes = split_planes(cur.arrays_mut(), n2);
    let delta_planes: Vec<Option<[&mut [Complex64]; 3]>> = match delta {
        Some([a, b, c]) => split_planes([&mut a[..], &mut b[..], &mut c[..]], n2)
            .into_iter()
            .map(Some)
            .collect(),
        None => (0..n).map(|_| None).collect(),
    };
    let parts: Vec<(f64, Vec<[f64; 6]>)> = cur_planes
        .into_par_iter()
        .zip(delta_planes)
        .enumerate()
        .map(|(i, (cur, mut delta))| {
            let mut acc = 0.0;
            let mut sm = vec![[0.0; 6]; receivers.len()];
            for j in 0..n {
                for k in 0..n {
                    let l = j * n + k;
                    let idx = i * n2 + l;
                    let kvec = [kv[i], kv[j], kv[k]];
                    let kk = (kvec[0] * kvec[0] + kvec[1] * kvec[1] + kvec[2] * kvec[2]).sqrt();
                    let s0 = rho[idx] * ph0.at(i, j, k);
                    let s1 = rho[idx] * ph1.at(i, j, k);
                    let xe = [
                        prev[0][idx] + hh * c0[0] * s0,
                        prev[1][idx] + hh * c0[1] * s0,
                        prev[2][idx] + hh * c0[2] * s0,
                    ];
                    let xb = [prev[3][idx], prev[4][idx], prev[5][idx]];
                    let (mut ne, nb) = rotate_mode(kvec, kk, rot.cos[idx], rot.sinc[idx], xe, xb);
                    for a in 0..3 {
                        ne[a] += hh * c1[a] * s1;
                    }
                    if kk > 0.0 {
                        let inv = 1.0 / kk;
                        let kh = [kvec[0] * inv, kvec[1] * inv, kvec[2] * inv];
                        let exact = -FOUR_PI * I * (s1 - s0) * inv;
                        let trap = hh * (vec3::dot(kh, c0) * s0 + vec3::dot(kh, c1) * s1);
                        let corr = exact - trap;
                        for a in 0..3 {
                            ne[a] += kh[a] * corr;
                        }
                    }
                    let new = [ne[0], ne[1], ne[2], nb[0], nb[1], nb[2]];
                    match &mut delta {
                        Some(dp) => {
                            for c in 0..3 {
                                let de = new[c] - cur[c][l];
                                let db = new[c + 3] - cur[c + 3][l];
                                dp[c][l] = de + I * db;
                            }
                        }
                        None => {
                            for m in 0..6 {
                                acc += (new[m] - cur[m][l]).norm_sqr();
                            }
                        }
                    }
                    for m in 0..6 {
                        cur[m][l] = new[m];
                    }
                    for (r, (e, rho_a, ph_a)) in sm.iter_mut().zip(receivers) {
                        let w = (rho_a[idx] * ph_a.at(i, j, k)).conj() * *e;
                        for m in 0..6 {
                            r[m] += (w * new[m]).re;
                        }
                    }
                }
            }
            (acc, sm)
        })
        .collect();
    let mut total = 0.0;
    let mut sm = vec![[0.0; 6]; receivers.len()];
    for (a, part) in parts {
        total += a;
        for (r, p) in sm.iter_mut().zip(part) {
            for m in 0..6 {
                r[m] += p[m];
            }
        }
    }
    (total, sm)
}

/// The discretized Duhamel map for one step starting at `φ⁰`.
pub struct DuhamelMap<'a> {
    model: &'a Model,
    grid: Grid,
    dt: f64,
    h: f64,
    nodes: usize,
    rot: RotationTable,
    q0: Vec<Vec3>,
    p0: Vec<Vec3>,
    masses: Vec<f64>,
    f0: Vec<SpectralPair>,
    norm0: f64,
}

impl<'a> DuhamelMap<'a> {
    pub fn new(model: &'a Model, phi0: &PhaseSpacePoint, dt: f64, nodes: usize) -> Result<Self> {
        model.check(phi0)?;
        if nodes < 2 {
            return Err(Error::Config("quad_nodes must be at least 2".into()));
        }
        let grid = phi0.grid.clone();
        let h = dt / (nodes - 1) as f64;
        let f0: Vec<SpectralPair> = phi0.fields.iter().map(|f| f.spectral(&grid).clone()).collect();
        Ok(DuhamelMap {
            model,
            rot: RotationTable::new(&grid, h),
            grid,
            dt,
            h,
            nodes,
            q0: phi0.particles.iter().map(|p| p.q).collect(),
            p0: phi0.particles.iter().map(|p| p.p).collect(),
            masses: phi0.particles.iter().map(|p| p.mass).collect(),
            f0,
            norm0: phase_norm(phi0, &model.weight)?,
        })
    }

    pub fn initial_norm(&self) -> f64 {
        self.norm0
    }

    /// Free flow `W_s φ⁰` at every node.
    pub fn initial_guess(&self) -> NodeTrajectory {
        let m = self.nodes;
        let fields = self
            .f0
            .iter()
            .map(|f| {
                let mut out = Vec::with_capacity(m);
                out.push(f.clone());
                for j in 1..m {
                    let mut next = out[j - 1].clone();
                    crate::spectral_field::rotate_in_place(&self.grid, &self.rot, &mut next);
                    out.push(next);
                }
                out
            })
            .collect();
        let phases: Vec<Phase> = self.q0.iter().map(|&q| Phase::new(&self.grid, q)).collect();
        let fields: Vec<Vec<SpectralPair>> = fields;
        let smeared = (0..m)
            .map(|l| {
                let at: Vec<[&[Complex64]; 6]> = fields.iter().map(|f| f[l].arrays()).collect();
                smeared_fields(&self.grid, self.model, &phases, &at)
            })
            .collect();
        NodeTrajectory {
            dt: self.dt,
            q: vec![self.q0.clone(); m],
            p: vec![self.p0.clone(); m],
            fields,
            smeared,
        }
    }

    fn velocities(&self, p: &[Vec3]) -> Vec<Vec3> {
        p.iter()
            .zip(&self.masses)
            .map(|(p, &m)| crate::source_operator::velocity(*p, m, m.signum()).expect("nonzero mass"))
            .collect()
    }

    /// Recompute node fields from the current particle iterate; returns the
    /// squared ℋ_w field difference per node and refreshes the smeared
    /// values of nodes `1..M`.
    fn sweep_fields(&self, traj: &mut NodeTrajectory, phases: &[Vec<Phase>], vels: &[Vec<Vec3>]) -> Vec<f64> {
        let m = self.nodes;
        let n_ch = self.q0.len();
        let w = &self.model.weight;
        let parseval = w.is_constant();
        let scale = self.grid.cell_volume() / self.grid.len() as f64;
        let mut per_node = vec![0.0; m];
        let mut scratch: Option<[Vec<Complex64>; 3]> =
            (!parseval).then(|| std::array::from_fn(|_| vec![Complex64::default(); self.grid.len()]));
        for row in traj.smeared.iter_mut().skip(1) {
            *row = vec![[0.0; 6]; n_ch];
        }
        for (b, nodes) in traj.fields.iter_mut().enumerate() {
            let rho = self.model.shapes[b].spectrum();
            for j in 1..m {
                let receivers: Vec<(usize, Receiver)> = (0..n_ch)
                    .map(|a| {
                        (
                            a,
                            (
                                self.model.coupling.get(a, b),
                                self.model.shapes[a].spectrum(),
                                &phases[j][a],
                            ),
                        )
                    })
                    .filter(|(_, r)| r.0 != 0.0)
                    .collect();
                let recv: Vec<Receiver> = receivers.iter().map(|(_, r)| *r).collect();
                let (head, tail) = nodes.split_at_mut(j);
                let (sum, sm) = field_substep(
                    &self.grid,
                    &self.rot,
                    self.h,
                    rho,
                    [(&phases[j - 1][b], vels[j - 1][b]), (&phases[j][b], vels[j][b])],
                    &recv,
                    &head[j - 1],
                    &mut tail[0],
                    scratch.as_mut(),
                );
                for ((a, _), v) in receivers.iter().zip(sm) {
                    for (acc, x) in traj.smeared[j][*a].iter_mut().zip(v) {
                        *acc += x * scale;
                    }
                }
                per_node[j] += match &mut scratch {
                    None => sum * scale,
                    Some(d) => crate::weights_norms::packed_weighted_sum_sq(w, d),
                };
            }
        }
        per_node
    }

    fn node_data(&self, traj: &NodeTrajectory) -> (Vec<Vec<Phase>>, Vec<Vec<Vec3>>) {
        let phases = traj
            .q
            .iter()
            .map(|qs| qs.iter().map(|&q| Phase::new(&self.grid, q)).collect())
            .collect();
        let vels = traj.p.iter().map(|ps| self.velocities(ps)).collect();
        (phases, vels)
    }

    /// Replace `traj` by its image under the map; returns the sup over nodes
    /// of the ℋ_w distance between the old and new iterate.
    ///
    /// Particles are updated first from the current fields, then the fields
    /// are rebuilt from the updated particles, so the fields of every iterate
    /// are consistent with its particles.
    pub fn apply(&self, traj: &mut NodeTrajectory) -> f64 {
        let m = self.nodes;
        let n_ch = self.q0.len();
        let vels: Vec<Vec<Vec3>> = traj.p.iter().map(|ps| self.velocities(ps)).collect();
        let forces: Vec<Vec<Vec3>> = (0..m)
            .map(|l| {
                traj.smeared[l]
                    .iter()
                    .zip(&vels[l])
                    .map(|(s, &v)| force_from(s, v))
                    .collect()
            })
            .collect();
        let mut dist = vec![0.0; m];
        let hh = 0.5 * self.h;
        for a in 0..n_ch {
            let (mut q, mut p) = (self.q0[a], self.p0[a]);
            for j in 1..m {
                q = vec3::add(q, vec3::scale(vec3::add(vels[j - 1][a], vels[j][a]), hh));
                p = vec3::add(p, vec3::scale(vec3::add(forces[j - 1][a], forces[j][a]), hh));
                dist[j] += vec3::norm_sq(vec3::sub(q, traj.q[j][a])) + vec3::norm_sq(vec3::sub(p, traj.p[j][a]));
                traj.q[j][a] = q;
                traj.p[j][a] = p;
            }
        }
        let (phases, vels) = self.node_data(traj);
        let fields = self.sweep_fields(traj, &phases, &vels);
        dist.iter().zip(&fields).map(|(a, b)| a + b).fold(0.0, f64::max).sqrt()
    }

    /// Iterate to convergence from the free-flow guess.
    pub fn solve(&self, cfg: &EvolveConfig) -> Result<(NodeTrajectory, StepReport)> {
        let mut traj = self.initial_guess();
        let mut report = StepReport {
            dt: self.dt,
            ..StepReport::default()
        };
        let target = cfg.picard_tol * self.norm0;
        let mut strikes = 0;
        loop {
            let d = self.apply(&mut traj);
            if !d.is_finite() {
                return Err(Error::NonFinite);
            }
            if let Some(&prev) = report.differences.last() {
                let factor = if prev > 0.0 { d / prev } else { 0.0 };
                report.factors.push(factor);
                strikes = if factor >= 1.0 { strikes + 1 } else { 0 };
            }
            report.differences.push(d);
            report.iterations += 1;
            if d <= target {
                break;
            }
            if cfg.contraction_guard && strikes >= 2 {
                return Err(Error::StepRejected {
                    dt: self.dt,
                    factor: *report.factors.last().unwrap(),
                });
            }
            if report.iterations >= cfg.picard_max_iter {
                return Err(Error::Convergence {
                    iterations: report.iterations,
                    last: d,
                });
            }
        }
        Ok((traj, report))
    }

    /// State at the last node.
    pub fn endpoint(&self, traj: &NodeTrajectory) -> PhaseSpacePoint {
        let last = self.nodes - 1;
        let particles = (0..self.q0.len())
            .map(|a| crate::source_operator::ParticleState {
                q: traj.q[last][a],
                p: traj.p[last][a],
                mass: self.masses[a],
            })
            .collect();
        let fields = traj
            .fields
            .iter()
            .map(|f| FieldPair::from_spectral(&self.grid, f[last].clone()))
            .collect();
        PhaseSpacePoint {
            grid: self.grid.clone(),
            particles,
            fields,
        }
    }
}

/// One Picard step of size `dt` (negative steps run backward in time).
pub fn picard_step(
    phi: &PhaseSpacePoint,
    dt: f64,
    cfg: &EvolveConfig,
    model: &Model,
) -> Result<(PhaseSpacePoint, StepReport)> {
    super::check_horizon(phi, model, dt.abs(), dt.abs())?;
    let map = DuhamelMap::new(model, phi, dt, cfg.quad_nodes)?;
    let (traj, report) = map.solve(cfg)?;
    Ok((map.endpoint(&traj), report))
}

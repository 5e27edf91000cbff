use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

/// Quadrature layout for ball integrals.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub center: Vec3,
    /// Inner radius; the ball `|x| < r_min` is left out.
    pub r_min: f64,
    pub panel_width: f64,
    pub radial_order: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            center: [0.0; 3],
            r_min: 1.0,
            panel_width: 8.0,
            radial_order: 12,
            n_theta: 24,
            n_phi: 48,
        }
    }
}

/// Squared ball integrals `∫|F|²` and `∫ w|F|²` over `r_min < |x| < R`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingProbeResult {
    pub radii: Vec<f64>,
    pub l2_sq: Vec<f64>,
    pub l2w_sq: Vec<f64>,
    pub l2_sq_e: Vec<f64>,
    pub l2_sq_b: Vec<f64>,
    /// Slope of `ln ∫|F|²` against `ln R`.
    pub l2_exponent: f64,
    pub l2w_exponent: f64,
    /// Number of nodes the field function masked.
    pub masked: usize,
}

/// Least-squares slope of `ln y` against `ln x` over entries with `y > 0`.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&a, &b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn rule(order: usize) -> Result<Vec<(f64, f64)>> {
    let n = NonZeroUsize::new(order).ok_or_else(|| Error::Domain("quadrature order must be positive".into()))?;
    let gl = GaussLegendre::new(n);
    Ok(gl.as_node_weight_pairs().to_vec())
}

/// Integrate `|E|²`, `|B|²` and `w(|E|² + |B|²)` over growing balls.
///
/// `field` returns `None` for points it masks; those contribute nothing.
pub fn norm_scaling_probe<F, W>(field: F, weight: W, radii: &[f64], cfg: &ProbeConfig) -> Result<ScalingProbeResult>
where
    F: Fn(Vec3) -> Result<Option<(Vec3, Vec3)>> + Sync,
    W: Fn(Vec3) -> f64 + Sync,
{
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("radii must be nonempty and increasing".into()));
    }
    if !(cfg.r_min >= 0.0 && radii[0] > cfg.r_min && cfg.panel_width > 0.0) {
        return Err(Error::Domain(
            "radii must exceed r_min and panels must have positive width".into(),
        ));
    }
    if cfg.n_phi == 0 {
        return Err(Error::Domain("n_phi must be positive".into()));
    }
    let radial = rule(cfg.radial_order)?;
    let polar = rule(cfg.n_theta)?;
    let dphi = 2.0 * std::f64::consts::PI / cfg.n_phi as f64;
    let mut dirs = Vec::with_capacity(polar.len() * cfg.n_phi);
    for &(ct, wt) in &polar {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for j in 0..cfg.n_phi {
            let (sp, cp) = (j as f64 * dphi).sin_cos();
            dirs.push(([st * cp, st * sp, ct], wt * dphi));
        }
    }

    // Shells between consecutive radii, each split into panels.
    let mut shells = Vec::new();
    let mut inner = cfg.r_min;
    for &outer in radii {
        let panels = ((outer - inner) / cfg.panel_width).ceil().max(1.0) as usize;
        let h = (outer - inner) / panels as f64;
        let mut nodes = Vec::new();
        for p in 0..panels {
            let a = inner + p as f64 * h;
            for &(x, wx) in &radial {
                nodes.push((a + 0.5 * h * (x + 1.0), 0.5 * h * wx));
            }
        }
        shells.push(nodes);
        inner = outer;
    }

    let mut l2_sq_e = Vec::with_capacity(radii.len());
    let mut l2_sq_b = Vec::with_capacity(radii.len());
    let mut l2w_sq = Vec::with_capacity(radii.len());
    let mut masked = 0usize;
    let (mut acc_e, mut acc_b, mut acc_w) = (0.0, 0.0, 0.0);
    for nodes in &shells {
        let parts: Vec<Result<(f64, f64, f64, usize)>> = nodes
            .par_iter()
            .map(|&(r, wr)| {
                let (mut se, mut sb, mut sw, mut m) = (0.0, 0.0, 0.0, 0usize);
                for &(d, wd) in &dirs {
                    let x = vec3::add(cfg.center, vec3::scale(d, r));
                    match field(x)? {
                        Some((e, b)) => {
                            let (ee, bb) = (vec3::norm_sq(e), vec3::norm_sq(b));
                            se += wd * ee;
                            sb += wd * bb;
                            sw += wd * weight(x) * (ee + bb);
                        }
                        None => m += 1,
                    }
                }
                let f = wr * r * r;
                Ok((f * se, f * sb, f * sw, m))
            })
            .collect();
        for part in parts {
            let (e, b, w, m) = part?;
            acc_e += e;
            acc_b += b;
            acc_w += w;
            masked += m;
        }
        l2_sq_e.push(acc_e);
        l2_sq_b.push(acc_b);
        l2w_sq.push(acc_w);
    }
    let l2_sq: Vec<f64> = l2_sq_e.iter().zip(&l2_sq_b).map(|(e, b)| e + b).collect();
    Ok(ScalingProbeResult {
        radii: radii.to_vec(),
        l2_exponent: fit_exponent(radii, &l2_sq),
        l2w_exponent: fit_exponent(radii, &l2w_sq),
        l2_sq,
        l2w_sq,
        l2_sq_e,
        l2_sq_b,
        masked,
    })
}

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WorldlineKind {
    Static {
        center: Vec3,
    },
    /// Position `origin + velocity·τ`.
    Uniform {
        origin: Vec3,
        velocity: Vec3,
    },
    /// Orbit in the plane `z = center_z`, counter-clockwise, starting on the x axis.
    Circular {
        center: Vec3,
        radius: f64,
        omega: f64,
    },
}

/// Worldline of a point charge parametrized by coordinate time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Worldline {
    pub kind: WorldlineKind,
    pub charge: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeSign {
    Retarded,
    Advanced,
}

impl Worldline {
    pub fn new(kind: WorldlineKind, charge: f64) -> Result<Self> {
        let wl = Worldline { kind, charge };
        let speed = wl.max_speed();
        if !(speed < 1.0) {
            return Err(Error::Domain(format!("worldline is not time-like (speed {speed})")));
        }
        Ok(wl)
    }

    pub fn max_speed(&self) -> f64 {
        match self.kind {
            WorldlineKind::Static { .. } => 0.0,
            WorldlineKind::Uniform { velocity, .. } => vec3::norm(velocity),
            WorldlineKind::Circular { radius, omega, .. } => (radius * omega).abs(),
        }
    }

    pub fn position(&self, tau: f64) -> Vec3 {
        match self.kind {
            WorldlineKind::Static { center } => center,
            WorldlineKind::Uniform { origin, velocity } => vec3::add(origin, vec3::scale(velocity, tau)),
            WorldlineKind::Circular { center, radius, omega } => {
                let (s, c) = (omega * tau).sin_cos();
                vec3::add(center, [radius * c, radius * s, 0.0])
            }
        }
    }

    pub fn velocity(&self, tau: f64) -> Vec3 {
        match self.kind {
            WorldlineKind::Static { .. } => [0.0; 3],
            WorldlineKind::Uniform { velocity, .. } => velocity,
            WorldlineKind::Circular { radius, omega, .. } => {
                let (s, c) = (omega * tau).sin_cos();
                [-radius * omega * s, radius * omega * c, 0.0]
            }
        }
    }

    pub fn acceleration(&self, tau: f64) -> Vec3 {
        match self.kind {
            WorldlineKind::Circular { radius, omega, .. } => {
                let (s, c) = (omega * tau).sin_cos();
                [-radius * omega * omega * c, -radius * omega * omega * s, 0.0]
            }
            _ => [0.0; 3],
        }
    }
}

/// Signed light-cone equation `τ - t ± |x - z(τ)|`, increasing in `τ`.
fn cone(wl: &Worldline, x: Vec3, t: f64, sign: TimeSign, tau: f64) -> (f64, f64) {
    let r = vec3::sub(x, wl.position(tau));
    let d = vec3::norm(r);
    let nv = if d > 0.0 {
        vec3::dot(r, wl.velocity(tau)) / d
    } else {
        0.0
    };
    match sign {
        TimeSign::Retarded => (tau - t + d, 1.0 - nv),
        TimeSign::Advanced => (tau - t - d, 1.0 + nv),
    }
}

/// `|z⁰(τ) - x⁰ ± |x - z(τ)||` at a computed root.
pub fn retarded_residual(wl: &Worldline, x: Vec3, t: f64, sign: TimeSign, tau: f64) -> f64 {
    cone(wl, x, t, sign, tau).0.abs()
}

/// Solve the light-cone equation for the retarded or advanced time by
/// bracket expansion, then Newton steps safeguarded by bisection.
pub fn retarded_time(wl: &Worldline, x: Vec3, t: f64, sign: TimeSign) -> Result<f64> {
    const HORIZON: f64 = 1e12;
    let g = |tau: f64| cone(wl, x, t, sign, tau);
    let d0 = vec3::norm(vec3::sub(x, wl.position(t)));
    if d0 == 0.0 {
        return Ok(t);
    }
    let dir = match sign {
        TimeSign::Retarded => -1.0,
        TimeSign::Advanced => 1.0,
    };
    // g(t) has the sign of -dir; walk away from t until it flips.
    let mut step = d0;
    let (mut lo, mut hi);
    loop {
        let far = t + dir * step;
        if g(far).0 * dir >= 0.0 {
            (lo, hi) = if dir < 0.0 { (far, t) } else { (t, far) };
            break;
        }
        step *= 2.0;
        if step > HORIZON {
            return Err(Error::Bracket(format!(
                "no light-cone crossing within {HORIZON} of t = {t}"
            )));
        }
    }
    let mut tau = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (f, df) = g(tau);
        if f == 0.0 {
            return Ok(tau);
        }
        if f < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        let newton = tau - f / df;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == tau || hi - lo <= 4.0 * f64::EPSILON * tau.abs().max(1.0) {
            break;
        }
        tau = next;
    }
    // Pick the best of the final candidates.
    let best = [tau, lo, hi]
        .into_iter()
        .min_by(|a, b| g(*a).0.abs().total_cmp(&g(*b).0.abs()))
        .unwrap();
    Ok(best)
}

/// Liénard-Wiechert `(E, B)` at `(t, x)`, or `None` inside the regularization
/// radius `eps_reg` around the source point.
pub fn lw_field(wl: &Worldline, x: Vec3, t: f64, sign: TimeSign, eps_reg: f64) -> Result<Option<(Vec3, Vec3)>> {
    let tau = retarded_time(wl, x, t, sign)?;
    let r = vec3::sub(x, wl.position(tau));
    let d = vec3::norm(r);
    if d <= eps_reg {
        return Ok(None);
    }
    let n = vec3::scale(r, 1.0 / d);
    // The advanced field is the retarded field of the time-reversed worldline
    // with the magnetic field flipped.
    let (beta, accel, bsign) = match sign {
        TimeSign::Retarded => (wl.velocity(tau), wl.acceleration(tau), 1.0),
        TimeSign::Advanced => (vec3::scale(wl.velocity(tau), -1.0), wl.acceleration(tau), -1.0),
    };
    let kappa = 1.0 - vec3::dot(n, beta);
    let k3 = kappa * kappa * kappa;
    let nb = vec3::sub(n, beta);
    let vel = vec3::scale(nb, (1.0 - vec3::norm_sq(beta)) / (k3 * d * d));
    let rad = vec3::scale(vec3::cross(n, vec3::cross(nb, accel)), 1.0 / (k3 * d));
    let e = vec3::scale(vec3::add(vel, rad), wl.charge);
    let b = vec3::scale(vec3::cross(n, e), bsign);
    Ok(Some((e, b)))
}

//! `probe-lw`, `check-weight` and `norms`.

use std::fmt::Write as _;
use std::path::Path;

use mlrho::initial_data::{lw_field, norm_scaling_probe, ProbeConfig, TimeSign, Worldline, WorldlineKind};
use mlrho::io::{read_snapshot, read_weight_table};
use mlrho::random::unit_vector;
use mlrho::weights_norms::{norm_report, WeightSource};
use mlrho::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct LwArgs {
    pub worldline: String,
    pub charge: f64,
    pub r0: f64,
    pub omega: f64,
    pub velocity: Vec3,
    pub radii: Vec<f64>,
    pub r_min: f64,
    pub t: f64,
    pub advanced: bool,
    pub weight: String,
}

/// Ball integrals of an LW field as comma-separated text.
pub fn probe_lw(a: &LwArgs) -> Result<String> {
    let kind = match a.worldline.as_str() {
        "static" => WorldlineKind::Static { center: [0.0; 3] },
        "uniform" => WorldlineKind::Uniform {
            origin: [0.0; 3],
            velocity: a.velocity,
        },
        "circular" => WorldlineKind::Circular {
            center: [0.0; 3],
            radius: a.r0,
            omega: a.omega,
        },
        other => return Err(Error::Config(format!("unknown worldline `{other}`"))),
    };
    let wl = Worldline::new(kind, a.charge)?;
    let sign = if a.advanced {
        TimeSign::Advanced
    } else {
        TimeSign::Retarded
    };
    let src = weight_source(&a.weight, None)?;
    let cfg = ProbeConfig {
        r_min: a.r_min,
        ..Default::default()
    };
    let eps = 0.5 * a.r_min;
    let res = norm_scaling_probe(|x| lw_field(&wl, x, a.t, sign, eps), |x| src.eval(x), &a.radii, &cfg)?;
    let mut out = String::from("R,L2,L2_E,L2_B,L2w\n");
    for i in 0..res.radii.len() {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            res.radii[i], res.l2_sq[i], res.l2_sq_e[i], res.l2_sq_b[i], res.l2w_sq[i]
        )
        .unwrap();
    }
    writeln!(out, "# l2_exponent = {:e}", res.l2_exponent).unwrap();
    writeln!(out, "# l2w_exponent = {:e}", res.l2w_exponent).unwrap();
    Ok(out)
}

fn weight_source(kind: &str, file: Option<&Path>) -> Result<WeightSource> {
    Ok(match kind.parse::<WeightKind>()? {
        WeightKind::Constant => WeightSource::Constant,
        WeightKind::InverseQuadratic => WeightSource::InverseQuadratic,
        WeightKind::Tabulated => {
            let file = file.ok_or_else(|| Error::Config("tabulated weight needs --file".into()))?;
            let w = read_weight_table(file)?;
            WeightSource::Tabulated {
                table: w.table,
                c_w: w.c_w,
                p_w: w.p_w,
            }
        }
    })
}

pub struct WeightArgs<'a> {
    pub kind: &'a str,
    pub file: Option<&'a Path>,
    pub n: usize,
    pub length: f64,
    pub pairs: usize,
    pub seed: u64,
}

/// Class constants, growth rate and a randomized class-inequality check.
pub fn check_weight(a: &WeightArgs) -> Result<String> {
    let grid = Grid::new(a.n, a.length)?;
    let w = make_weight(&weight_source(a.kind, a.file)?, &grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let half = 0.5 * a.length;
    let pairs: Vec<(Vec3, Vec3)> = (0..a.pairs)
        .map(|_| {
            let x = std::array::from_fn(|_| rng.random_range(-half..half));
            let y = vec3::scale(unit_vector(&mut rng), rng.random_range(0.0..half));
            (x, y)
        })
        .collect();
    let report = w.class_report(&pairs);
    let mut out = String::new();
    writeln!(out, "kind = {}", w.kind.name()).unwrap();
    writeln!(out, "C_w = {}", w.c_w).unwrap();
    writeln!(out, "P_w = {}", w.p_w).unwrap();
    writeln!(out, "gamma = {:.6}", w.gamma).unwrap();
    for (alpha, c) in &w.deriv_constants {
        writeln!(out, "deriv_constant[{},{},{}] = {c:.6e}", alpha[0], alpha[1], alpha[2]).unwrap();
    }
    writeln!(out, "class_pairs = {}", report.checks.len()).unwrap();
    writeln!(out, "class_violations = {}", report.violations).unwrap();
    writeln!(out, "class_pass = {}", report.pass()).unwrap();
    Ok(out)
}

/// Norm report of a stored snapshot.
pub fn norms(path: &Path, kind: &str, file: Option<&Path>, order: usize) -> Result<String> {
    let snap = read_snapshot(path)?;
    let w = make_weight(&weight_source(kind, file)?, &snap.grid)?;
    let r = norm_report(&snap.fields, &w, order)?;
    let mut out = String::new();
    writeln!(out, "t = {:e}", snap.t).unwrap();
    writeln!(out, "l2 = {:e}", r.l2).unwrap();
    writeln!(out, "l2w = {:e}", r.l2w).unwrap();
    for (k, v) in r.hkw.iter().enumerate() {
        writeln!(out, "h{k}w = {v:e}").unwrap();
    }
    writeln!(out, "phase_norm = {:e}", r.phase_norm).unwrap();
    Ok(out)
}

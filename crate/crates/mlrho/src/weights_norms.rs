//! Weight functions, weighted L² and Sobolev norms, and the phase-space norm.

use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::reduce;
use crate::spectral_field::{derivative_spectral, FieldPair, PhaseSpacePoint, VectorField};
use crate::vec3::{self, Vec3};

/// Highest derivative order accepted by [`field_norm`].
pub const MAX_NORM_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    Constant,
    InverseQuadratic,
    Tabulated,
}

impl FromStr for WeightKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(WeightKind::Constant),
            "inverse_quadratic" => Ok(WeightKind::InverseQuadratic),
            "tabulated" => Ok(WeightKind::Tabulated),
            other => Err(Error::Config(format!("unknown weight kind `{other}`"))),
        }
    }
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::Constant => "constant",
            WeightKind::InverseQuadratic => "inverse_quadratic",
            WeightKind::Tabulated => "tabulated",
        }
    }
}

/// Weight samples on a regular lattice, interpolated trilinearly and clamped
/// at the lattice boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    pub dims: [usize; 3],
    pub origin: Vec3,
    pub spacing: Vec3,
    pub values: Vec<f64>,
}

impl WeightTable {
    pub fn validate(&self) -> Result<()> {
        let len = self.dims.iter().product::<usize>();
        if self.dims.iter().any(|&d| d < 2) || self.values.len() != len {
            return Err(Error::Format(format!(
                "weight table has {} values for dims {:?}",
                self.values.len(),
                self.dims
            )));
        }
        if self.spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::Format("weight table spacing must be positive".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("weight table has nonpositive sample {v}")));
        }
        Ok(())
    }

    pub fn eval(&self, x: Vec3) -> f64 {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let s = ((x[a] - self.origin[a]) / self.spacing[a]).clamp(0.0, (self.dims[a] - 1) as f64);
            let i = (s.floor() as usize).min(self.dims[a] - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let at = |i: usize, j: usize, k: usize| {
            self.values[((base[0] + i) * self.dims[1] + base[1] + j) * self.dims[2] + base[2] + k]
        };
        let mut acc = 0.0;
        for (i, wi) in [(0, 1.0 - frac[0]), (1, frac[0])] {
            for (j, wj) in [(0, 1.0 - frac[1]), (1, frac[1])] {
                for (k, wk) in [(0, 1.0 - frac[2]), (1, frac[2])] {
                    acc += wi * wj * wk * at(i, j, k);
                }
            }
        }
        acc
    }
}

/// Which weight to build, with the user-claimed class constants for tables.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSource {
    Constant,
    InverseQuadratic,
    Tabulated { table: WeightTable, c_w: f64, p_w: u32 },
}

impl WeightSource {
    pub fn kind(&self) -> WeightKind {
        match self {
            WeightSource::Constant => WeightKind::Constant,
            WeightSource::InverseQuadratic => WeightKind::InverseQuadratic,
            WeightSource::Tabulated { .. } => WeightKind::Tabulated,
        }
    }

    pub fn eval(&self, x: Vec3) -> f64 {
        match self {
            WeightSource::Constant => 1.0,
            WeightSource::InverseQuadratic => 1.0 / (1.0 + vec3::norm_sq(x)),
            WeightSource::Tabulated { table, .. } => table.eval(x),
        }
    }
}

/// A weight with its class constants, sampled on a grid.
#[derive(Clone, Debug)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub c_w: f64,
    pub p_w: u32,
    /// Growth rate of the free propagator in the weighted norm.
    pub gamma: f64,
    /// `max |D^α √w| / √w` for `1 ≤ |α| ≤ 2`; the first three entries are the
    /// first derivatives along x, y, z.
    pub deriv_constants: Vec<([u32; 3], f64)>,
    source: WeightSource,
    grid: Grid,
    samples: Vec<f64>,
}

const FD_STEP: f64 = 1e-4;

pub(crate) fn multi_indices(max: usize) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for order in 0..=max as u32 {
        for a in (0..=order).rev() {
            for b in (0..=order - a).rev() {
                out.push([a, b, order - a - b]);
            }
        }
    }
    out
}

fn sqrt_w_derivative(src: &WeightSource, x: Vec3, alpha: [u32; 3]) -> f64 {
    let h = FD_STEP;
    let f = |p: Vec3| src.eval(p).sqrt();
    let shift = |p: Vec3, a: usize, d: f64| {
        let mut q = p;
        q[a] += d;
        q
    };
    let axes: Vec<usize> = (0..3).flat_map(|a| std::iter::repeat_n(a, alpha[a] as usize)).collect();
    match axes.as_slice() {
        [] => f(x),
        [a] => (f(shift(x, *a, h)) - f(shift(x, *a, -h))) / (2.0 * h),
        [a, b] if a == b => (f(shift(x, *a, h)) - 2.0 * f(x) + f(shift(x, *a, -h))) / (h * h),
        [a, b] => {
            let pp = f(shift(shift(x, *a, h), *b, h));
            let pm = f(shift(shift(x, *a, h), *b, -h));
            let mp = f(shift(shift(x, *a, -h), *b, h));
            let mm = f(shift(shift(x, *a, -h), *b, -h));
            (pp - pm - mp + mm) / (4.0 * h * h)
        }
        _ => unreachable!("only orders up to two are scanned"),
    }
}

fn ratio(src: &WeightSource, x: Vec3, alpha: [u32; 3]) -> f64 {
    sqrt_w_derivative(src, x, alpha).abs() / src.eval(x).sqrt()
}

/// Grid scan followed by a shrinking compass search from the best grid point.
fn scan_max(src: &WeightSource, grid: &Grid, alpha: [u32; 3]) -> f64 {
    let (mut best, mut best_idx) = (0.0, 0);
    for idx in 0..grid.len() {
        let r = ratio(src, grid.point(idx), alpha);
        if r > best {
            best = r;
            best_idx = idx;
        }
    }
    if best == 0.0 {
        return 0.0;
    }
    let half = 0.5 * grid.length();
    let mut x = grid.point(best_idx);
    let mut step = grid.dx();
    while step > 1e-7 {
        let mut moved = false;
        for a in 0..3 {
            for d in [step, -step] {
                let mut y = x;
                y[a] = (y[a] + d).clamp(-half, half);
                let r = ratio(src, y, alpha);
                if r > best {
                    best = r;
                    x = y;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best
}

/// Build a weight on `grid` and compute its constants.
pub fn make_weight(source: &WeightSource, grid: &Grid) -> Result<WeightSpec> {
    let (c_w, p_w) = match source {
        WeightSource::Constant => (0.0, 0),
        WeightSource::InverseQuadratic => (1.0, 2),
        WeightSource::Tabulated { table, c_w, p_w } => {
            table.validate()?;
            if !(*c_w >= 0.0) {
                return Err(Error::Config(format!("C_w must be nonnegative, got {c_w}")));
            }
            (*c_w, *p_w)
        }
    };
    let samples: Vec<f64> = (0..grid.len()).map(|i| source.eval(grid.point(i))).collect();
    if let Some(v) = samples.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("weight sample {v} is not positive")));
    }
    let deriv_constants: Vec<([u32; 3], f64)> = match source {
        WeightSource::Constant => multi_indices(2).into_iter().skip(1).map(|a| (a, 0.0)).collect(),
        _ => {
            let mut firsts: Vec<[u32; 3]> = vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]];
            firsts.extend(multi_indices(2).into_iter().filter(|a| a.iter().sum::<u32>() == 2));
            firsts.into_iter().map(|a| (a, scan_max(source, grid, a))).collect()
        }
    };
    let gamma = deriv_constants[..3].iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    Ok(WeightSpec {
        kind: source.kind(),
        c_w,
        p_w,
        gamma,
        deriv_constants,
        source: source.clone(),
        grid: grid.clone(),
        samples,
    })
}

impl WeightSpec {
    pub fn constant(grid: &Grid) -> WeightSpec {
        make_weight(&WeightSource::Constant, grid).expect("constant weight is always valid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn source(&self) -> &WeightSource {
        &self.source
    }

    pub fn is_constant(&self) -> bool {
        self.kind == WeightKind::Constant
    }

    /// Weight at an arbitrary point.
    pub fn eval(&self, x: Vec3) -> f64 {
        self.source.eval(x)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Class inequality check over sample pairs with this weight's constants.
    pub fn class_report(&self, pairs: &[(Vec3, Vec3)]) -> WeightClassReport {
        weight_class_report(|x| self.eval(x), self.c_w, self.p_w, pairs)
    }

    /// `Σ w |a|²` over grid points, summed over the given arrays, times the cell volume.
    pub fn weighted_sum_sq(&self, arrays: &[&[f64]]) -> f64 {
        let dv = self.grid.cell_volume();
        let len = self.grid.len();
        let mut total = 0.0;
        for a in arrays {
            assert_eq!(a.len(), len, "array does not match the weight grid");
            total += if self.is_constant() {
                reduce::sum_by(len, |i| a[i] * a[i])
            } else {
                reduce::sum_by(len, |i| self.samples[i] * a[i] * a[i])
            };
        }
        total * dv
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairCheck {
    pub x: Vec3,
    pub y: Vec3,
    pub ratio: f64,
    pub bound: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightClassReport {
    pub checks: Vec<PairCheck>,
    pub violations: usize,
}

impl WeightClassReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `w(x+y)/w(x) ≤ (1+C_w|y|)^{P_w}` and the reverse bound on each pair.
pub fn weight_class_report(w: impl Fn(Vec3) -> f64, c_w: f64, p_w: u32, pairs: &[(Vec3, Vec3)]) -> WeightClassReport {
    const SLACK: f64 = 1e-12;
    let checks: Vec<PairCheck> = pairs
        .iter()
        .map(|&(x, y)| {
            let ratio = w(vec3::add(x, y)) / w(x);
            let bound = (1.0 + c_w * vec3::norm(y)).powi(p_w as i32);
            PairCheck {
                x,
                y,
                ratio,
                bound,
                upper_ok: ratio <= bound * (1.0 + SLACK),
                lower_ok: ratio * bound >= 1.0 - SLACK,
            }
        })
        .collect();
    let violations = checks.iter().filter(|c| !(c.upper_ok && c.lower_ok)).count();
    WeightClassReport { checks, violations }
}

/// Squared L² norm of a field over the box.
pub fn l2_norm_sq(grid: &Grid, f: &VectorField) -> f64 {
    let len = f.len();
    f.components()
        .iter()
        .map(|c| reduce::sum_by(len, |i| c[i] * c[i]))
        .sum::<f64>()
        * grid.cell_volume()
}

pub fn l2w_norm_sq(w: &WeightSpec, f: &VectorField) -> f64 {
    let c = f.components();
    w.weighted_sum_sq(&[&c[0], &c[1], &c[2]])
}

/// `∫ w (|E|² + |B|²)` from spectra packed as `Ê_c + iB̂_c`, one inverse
/// transform per component. Both fields must be real, so the real and
/// imaginary parts of the transform separate them. Overwrites `packed`.
pub(crate) fn packed_weighted_sum_sq(w: &WeightSpec, packed: &mut [Vec<Complex64>; 3]) -> f64 {
    let grid = w.grid();
    let samples = w.samples();
    let mut total = 0.0;
    for c in packed.iter_mut() {
        grid.inverse(c);
        let c = &*c;
        total += reduce::sum_by(c.len(), |i| samples[i] * c[i].norm_sqr());
    }
    total * grid.cell_volume()
}

/// `(Σ_{|α|≤k} ∫ w |D^α F|²)^{1/2}` with spectral derivatives and midpoint quadrature.
pub fn field_norm(f: &VectorField, w: &WeightSpec, k: usize) -> Result<f64> {
    if k > MAX_NORM_ORDER {
        return Err(Error::NormOrder {
            order: k,
            max: MAX_NORM_ORDER,
        });
    }
    let grid = w.grid();
    if f.len() != grid.len() {
        return Err(Error::Structure("field does not match weight grid".into()));
    }
    let mut total = l2w_norm_sq(w, f);
    if k > 0 {
        for comp in f.components() {
            let spec = grid.forward_real(comp);
            for alpha in multi_indices(k).into_iter().skip(1) {
                let d = grid.inverse_real(&derivative_spectral(grid, &spec, alpha));
                total += w.weighted_sum_sq(&[&d]);
            }
        }
    }
    Ok(total.sqrt())
}

/// Norms of one field pair (E and B combined).
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    pub l2w: f64,
    /// Weighted Sobolev norms for orders `0..=k`.
    pub hkw: Vec<f64>,
    /// Phase-space norm of the field-only state.
    pub phase_norm: f64,
}

pub fn norm_report(pair: &FieldPair, w: &WeightSpec, max_order: usize) -> Result<NormReport> {
    let grid = w.grid();
    let l2 = (l2_norm_sq(grid, pair.e()) + l2_norm_sq(grid, pair.b())).sqrt();
    let l2w = (l2w_norm_sq(w, pair.e()) + l2w_norm_sq(w, pair.b())).sqrt();
    let hkw = (0..=max_order)
        .map(|k| {
            let e = field_norm(pair.e(), w, k)?;
            let b = field_norm(pair.b(), w, k)?;
            Ok((e * e + b * b).sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormReport {
        l2,
        l2w,
        hkw,
        phase_norm: l2w,
    })
}

/// Norm on the phase space: particle coordinates plus weighted field norms.
pub fn phase_norm(phi: &PhaseSpacePoint, w: &WeightSpec) -> Result<f64> {
    phi.validate()?;
    if phi.grid != *w.grid() {
        return Err(Error::Structure("state and weight live on different grids".into()));
    }
    let mut s = 0.0;
    for p in &phi.particles {
        s += vec3::norm_sq(p.q) + vec3::norm_sq(p.p);
    }
    for f in &phi.fields {
        s += l2w_norm_sq(w, f.e()) + l2w_norm_sq(w, f.b());
    }
    Ok(s.sqrt())
}

/// ℋ_w distance between two states with equal structure.
pub fn phase_distance(a: &PhaseSpacePoint, b: &PhaseSpacePoint, w: &WeightSpec) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Structure("states have different particle counts".into()));
    }
    phase_norm(&a.plus_scaled(-1.0, b), w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(0).len(), 1);
        assert_eq!(multi_indices(1).len(), 4);
        assert_eq!(multi_indices(2).len(), 10);
        assert_eq!(multi_indices(4).len(), 35);
    }

    #[test]
    fn unknown_kind_is_config_error() {
        let e = "gaussian".parse::<WeightKind>().unwrap_err();
        assert_eq!(e.code(), "E_CONFIG");
    }

    #[test]
    fn table_interpolates_linearly() {
        let t = WeightTable {
            dims: [2, 2, 2],
            origin: [0.0; 3],
            spacing: [1.0; 3],
            values: vec![1.0, 1.0, 1.0, 1.0, 3.0, 3.0, 3.0, 3.0],
        };
        assert!((t.eval([0.25, 0.5, 0.5]) - 1.5).abs() < 1e-15);
        assert!((t.eval([9.0, 0.0, 0.0]) - 3.0).abs() < 1e-15);
    }
}

//! Periodic uniform grid on the box `[-L/2, L/2)^3` and its 3-D transforms.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Grid with shared wavenumber tables and transform plans. Cloning is cheap.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    inner: Arc<Tables>,
}

struct Tables {
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        let base = 2.0 * std::f64::consts::PI / length;
        let k = (0..n)
            .map(|i| match signed_mode(i, n) {
                m if m == -(n as i64) / 2 => 0.0,
                m => base * m as f64,
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Grid {
            n,
            length,
            inner: Arc::new(Tables { k, fwd, inv }),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Number of grid points, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// Coordinate of the grid line with index `i`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.dx() - 0.5 * self.length
    }

    pub fn point(&self, idx: usize) -> Vec3 {
        let n = self.n;
        [
            self.coord(idx / (n * n)),
            self.coord((idx / n) % n),
            self.coord(idx % n),
        ]
    }

    /// Wavenumbers per axis with the Nyquist entry set to zero.
    ///
    /// Every differential operator uses these, which keeps real fields real.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.k
    }

    /// Signed integer mode for transform index `i`, in `[-n/2, n/2)`.
    pub fn mode(&self, i: usize) -> i64 {
        signed_mode(i, self.n)
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// In-place unnormalized forward transform of an `n^3` array.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.fwd);
    }

    /// In-place inverse transform including the `1/n^3` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inv);
        let s = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|z| *z *= s);
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut out);
        out
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut tmp = spec.to_vec();
        self.inverse(&mut tmp);
        tmp.into_iter().map(|z| z.re).collect()
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let n2 = n * n;
        assert_eq!(data.len(), n2 * n, "array length does not match grid");
        let scratch_len = plan.get_inplace_scratch_len();

        data.par_chunks_mut(n2).for_each(|plane| {
            let mut scratch = vec![Complex64::default(); scratch_len];
            plan.process_with_scratch(plane, &mut scratch);
            let mut t = vec![Complex64::default(); n2];
            transpose(plane, &mut t, n);
            plan.process_with_scratch(&mut t, &mut scratch);
            transpose(&t, plane, n);
        });

        let mut buf = vec![Complex64::default(); n2 * n];
        {
            let src = &*data;
            buf.par_chunks_mut(n2).enumerate().for_each(|(k, chunk)| {
                for j in 0..n {
                    for i in 0..n {
                        chunk[j * n + i] = src[(i * n + j) * n + k];
                    }
                }
            });
        }
        buf.par_chunks_mut(n2).for_each(|chunk| {
            let mut scratch = vec![Complex64::default(); scratch_len];
            plan.process_with_scratch(chunk, &mut scratch);
        });
        let src = &buf;
        data.par_chunks_mut(n2).enumerate().for_each(|(i, chunk)| {
            for j in 0..n {
                for k in 0..n {
                    chunk[j * n + k] = src[(k * n + j) * n + i];
                }
            }
        });
    }
}

fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for a in 0..n {
        for b in 0..n {
            dst[b * n + a] = src[a * n + b];
        }
    }
}

//! Reductions whose result does not depend on the number of worker threads.

use rayon::prelude::*;

/// Fixed block size; partial sums are formed per block and combined in order.
pub const BLOCK: usize = 4096;

pub fn sum_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks = len.div_ceil(BLOCK);
    let parts: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(len);
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            s
        })
        .collect();
    parts.into_iter().sum()
}

pub fn max_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..len)
        .into_par_iter()
        .with_min_len(BLOCK)
        .map(f)
        .reduce(|| 0.0, f64::max)
}

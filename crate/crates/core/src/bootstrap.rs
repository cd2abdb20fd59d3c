//! Seeded resampling shared by the frontier and trend bootstraps.
//!
//! Resample `i` draws from its own ChaCha stream keyed by `(seed, i)`, so
//! the output does not depend on how rayon schedules the work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Redraw budget for a single resample before the bootstrap gives up.
pub const MAX_ATTEMPTS_PER_RESAMPLE: usize = 64;

pub fn resample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `n` indices drawn uniformly with replacement, returned sorted.
pub fn draw_indices<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    idx.sort_unstable();
    idx
}

#[derive(Debug, Clone)]
pub struct Resampled<T> {
    pub values: Vec<T>,
    /// Degenerate draws that were discarded and redrawn.
    pub redraws: usize,
}

/// Runs `resamples` independent replicates. `replicate` returns `None` for
/// a degenerate draw, which is redrawn from the same stream.
///
/// Fails when any replicate exhausts its budget or when more than half of
/// all attempts were degenerate.
pub fn run<T, F>(resamples: usize, seed: u64, replicate: F) -> Result<Resampled<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Option<T> + Sync,
{
    let outcomes: Vec<(Option<T>, usize)> = (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = resample_rng(seed, i);
            for attempt in 0..MAX_ATTEMPTS_PER_RESAMPLE {
                if let Some(v) = replicate(&mut rng) {
                    return (Some(v), attempt);
                }
            }
            (None, MAX_ATTEMPTS_PER_RESAMPLE)
        })
        .collect();

    let redraws: usize = outcomes.iter().map(|(_, r)| *r).sum();
    let failed = outcomes.iter().filter(|(v, _)| v.is_none()).count();
    let attempts = resamples + redraws - failed;
    if failed > 0 || redraws * 2 > attempts {
        return Err(Error::Instability {
            degenerate: redraws,
            attempts,
        });
    }
    Ok(Resampled {
        values: outcomes.into_iter().filter_map(|(v, _)| v).collect(),
        redraws,
    })
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
/// Infinite entries are allowed; a quantile touching one is infinite.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    assert!(
        (0.0..=1.0).contains(&q),
        "quantile level {q} outside [0, 1]"
    );
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        return sorted[lo];
    }
    let (a, b) = (sorted[lo], sorted[lo + 1]);
    if a.is_infinite() || b.is_infinite() {
        return if a == b { a } else { b };
    }
    a + frac * (b - a)
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

pub fn median_usize(values: &[usize]) -> f64 {
    let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
    quantile(&v, 0.5)
}

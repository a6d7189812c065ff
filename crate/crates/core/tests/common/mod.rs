#![allow(dead_code)]

use rayon::prelude::*;

/// Flat-top kernel written out independently of the library.
pub fn kernel(z: f64) -> f64 {
    let a = z.abs();
    if a <= 0.25 {
        1.0
    } else if a <= 23.0 / 32.0 {
        let u = 32.0 / 15.0 * (a - 0.25);
        (u * u - 1.0).powi(2)
    } else {
        0.0
    }
}

pub fn kernel_prime(z: f64) -> f64 {
    let a = z.abs();
    if a <= 0.25 || a >= 23.0 / 32.0 {
        0.0
    } else {
        let u = 32.0 / 15.0 * (a - 0.25);
        4.0 * u * (u * u - 1.0) * 32.0 / 15.0 * z.signum()
    }
}

/// Beta(2,3) density shifted to `[-1/2, 1/2]`.
pub fn beta_density(z: f64) -> f64 {
    if z.abs() > 0.5 {
        0.0
    } else {
        12.0 * (0.5 + z) * (0.5 - z).powi(2)
    }
}

pub fn beta_cdf(z: f64) -> f64 {
    let x = (z + 0.5).clamp(0.0, 1.0);
    6.0 * x * x - 8.0 * x.powi(3) + 3.0 * x.powi(4)
}

/// Composite Simpson rule on `[a, b]` with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let m = m + m % 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Simpson on consecutive pieces between sorted breakpoints.
pub fn simpson_pieces(f: impl Fn(f64) -> f64 + Copy, breaks: &[f64], m: usize) -> f64 {
    breaks.windows(2).map(|w| simpson(f, w[0], w[1], m)).sum()
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

pub fn sample_variance(values: &[f64]) -> f64 {
    mean_se(values).1.powi(2) * values.len() as f64
}

/// Runs `f(r)` for `r in 0..reps` on a pool of `threads` workers (default
/// pool when `None`) and returns the results in replicate order.
pub fn replicates<T: Send>(
    threads: Option<usize>,
    reps: usize,
    f: impl Fn(u64) -> T + Sync + Send,
) -> Vec<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build()
        .unwrap()
        .install(|| (0..reps).into_par_iter().map(|r| f(r as u64)).collect())
}

//! Synthetic data and warping generators used by tests, benches, and demos.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::interp::TimeSeries;
use crate::warp_model::{eval_warping_raw, WarpBasis};

/// A Gaussian bump of width `sigma` centered at `center`, `t_upper + 1` samples.
pub fn gaussian_bump(t_upper: usize, center: f64, sigma: f64) -> TimeSeries {
    let values = (0..=t_upper)
        .map(|t| {
            let d = (t as f64 - center) / sigma;
            (-0.5 * d * d).exp()
        })
        .collect();
    TimeSeries::new(values).unwrap()
}

/// Slow envelope plus fast ripple, randomly time-shifted per series.
///
/// The family has many shallow local minima when aligned greedily on the
/// ripple, which is what kernel-width annealing is meant to escape.
pub fn two_frequency_family(
    n_series: usize,
    t_upper: usize,
    max_shift: usize,
    seed: u64,
) -> Vec<TimeSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_series)
        .map(|_| {
            let shift = rng.gen_range(0..=max_shift) as f64;
            let values = (0..=t_upper)
                .map(|t| {
                    let u = (t as f64 - shift) / t_upper as f64;
                    let slow = (2.0 * std::f64::consts::PI * u).sin();
                    let fast = 0.3 * (2.0 * std::f64::consts::PI * 8.0 * u).sin();
                    slow + fast
                })
                .collect();
            TimeSeries::new(values).unwrap()
        })
        .collect()
}

/// A class-set of randomly shifted noisy bumps sharing one underlying shape.
pub fn shifted_bump_set(
    n_series: usize,
    t_upper: usize,
    max_shift: usize,
    noise: f64,
    seed: u64,
) -> Vec<TimeSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_series)
        .map(|_| {
            let shift = rng.gen_range(0..=max_shift) as f64;
            let center = t_upper as f64 / 2.0 + shift - max_shift as f64 / 2.0;
            let sigma = t_upper as f64 / 10.0;
            let values = (0..=t_upper)
                .map(|t| {
                    let d = (t as f64 - center) / sigma;
                    (-0.5 * d * d).exp() + noise * rng.gen_range(-1.0..1.0)
                })
                .collect();
            TimeSeries::new(values).unwrap()
        })
        .collect()
}

/// Coefficient paths on a regular grid whose induced warp components are all
/// nondecreasing on that grid.
///
/// Built by blending the uniform ramp with per-series normalized cumulative
/// noise, projecting onto the basis complement, and halving the blend until
/// grid monotonicity holds (the blend-zero limit is the strictly increasing
/// uniform ramp, so this terminates).
pub fn random_monotone_coeffs(
    rng: &mut ChaCha8Rng,
    basis: &WarpBasis,
    z_max: usize,
) -> Vec<Vec<f64>> {
    let n = basis.n_series;
    let s_max = basis.s_max();
    let mut targets = vec![vec![0.0; z_max + 1]; n];
    for row in targets.iter_mut() {
        let mut acc = 0.0;
        for v in row.iter_mut().skip(1) {
            acc += rng.gen_range(0.0f64..1.0);
            *v = acc;
        }
        let total = row[z_max];
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    let mut blend = 1.0;
    loop {
        let mut coeffs = Vec::with_capacity(z_max + 1);
        for z in 0..=z_max {
            let s = (z as f64 / z_max as f64) * s_max;
            let env = s * (s_max - s);
            let c = if env == 0.0 {
                vec![0.0; n - 1]
            } else {
                basis
                    .complement()
                    .iter()
                    .map(|e| {
                        let dot: f64 = (0..n)
                            .map(|i| {
                                let ramp = s / s_max;
                                let t = (1.0 - blend) * ramp + blend * targets[i][z];
                                t * e[i]
                            })
                            .sum();
                        dot / env
                    })
                    .collect()
            };
            coeffs.push(c);
        }
        let mut ok = true;
        let mut prev: Option<Vec<f64>> = None;
        for (z, c) in coeffs.iter().enumerate() {
            let s = (z as f64 / z_max as f64) * s_max;
            let cur = eval_warping_raw(basis, c, s);
            if let Some(p) = &prev {
                if cur.iter().zip(p).any(|(a, b)| a < b) {
                    ok = false;
                    break;
                }
            }
            prev = Some(cur);
        }
        if ok {
            return coeffs;
        }
        blend *= 0.5;
    }
}

/// Wraps grid coefficients as a `phi` using nearest-grid-point lookup.
pub fn grid_phi(
    coeffs: Vec<Vec<f64>>,
    z_max: usize,
    s_max: f64,
) -> impl Fn(f64) -> Vec<f64> + Sync {
    move |s: f64| {
        let z = ((s / s_max) * z_max as f64).round() as usize;
        coeffs[z.min(z_max)].clone()
    }
}

//! Band-limited evaluation of input series at continuous time positions.
//!
//! Interpolation uses a normalized sinc kernel widened by an annealing
//! parameter `alpha`. At `alpha = 1` the kernel reproduces the samples
//! exactly at grid points; for larger `alpha` it acts as a low-pass filter,
//! which the training loop exploits to align coarse structure first.

use std::f64::consts::PI;

use crate::error::{NtwError, Result};

/// One input sequence of `T + 1` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Samples `x^(0) ..= x^(T)`.
    pub values: Vec<f64>,
    /// Optional integer class tag.
    pub label: Option<i64>,
    /// Optional name (e.g. source file or dataset row).
    pub name: Option<String>,
}

impl TimeSeries {
    /// Builds a series, rejecting fewer than two samples or non-finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(NtwError::InvalidArgument(format!(
                "a time series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(NtwError::InvalidArgument(format!(
                "non-finite sample at index {pos}"
            )));
        }
        Ok(TimeSeries {
            values,
            label: None,
            name: None,
        })
    }

    pub fn with_label(values: Vec<f64>, label: i64) -> Result<Self> {
        let mut ts = TimeSeries::new(values)?;
        ts.label = Some(label);
        Ok(ts)
    }

    /// Number of samples, `T + 1`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Upper sample index `T`.
    pub fn upper_index(&self) -> usize {
        self.values.len() - 1
    }
}

/// Annealing schedule state for the interpolation kernel width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealState {
    /// Current kernel width; always `>= floor`.
    pub alpha: f64,
    /// Per-update multiplier in (0, 1].
    pub decay: f64,
    /// Lower clamp for `alpha` (1 for exact interpolation).
    pub floor: f64,
}

impl AnnealState {
    pub fn new(alpha0: f64, decay: f64) -> Result<Self> {
        if !alpha0.is_finite() || alpha0 < 1.0 {
            return Err(NtwError::InvalidArgument(format!(
                "alpha0 must be finite and >= 1, got {alpha0}"
            )));
        }
        if !decay.is_finite() || decay <= 0.0 || decay > 1.0 {
            return Err(NtwError::InvalidArgument(format!(
                "decay must be in (0, 1], got {decay}"
            )));
        }
        Ok(AnnealState {
            alpha: alpha0,
            decay,
            floor: 1.0,
        })
    }

    /// One annealing update: `alpha <- max(alpha * decay, floor)`.
    pub fn step(&mut self) {
        self.alpha = (self.alpha * self.decay).max(self.floor);
    }
}

/// Kernel value without argument validation; callers check `alpha` once.
#[inline]
pub(crate) fn kernel(t: f64, alpha: f64) -> f64 {
    let x = t / alpha;
    if x == 0.0 {
        1.0 / alpha
    } else if x == x.trunc() {
        // sin(pi x) is exactly 0 at integer x; the library sin is not,
        // and grid exactness depends on these zeros
        0.0
    } else {
        let u = PI * x;
        u.sin() / u / alpha
    }
}

/// Kernel derivative d/dt; the limit at `t = 0` is 0.
#[inline]
pub(crate) fn kernel_deriv(t: f64, alpha: f64) -> f64 {
    let x = t / alpha;
    if x == 0.0 {
        0.0
    } else if x == x.trunc() {
        // closed form at integer x: cos(pi x) / x / alpha^2
        let sign = if (x as i64) % 2 == 0 { 1.0 } else { -1.0 };
        sign / x / (alpha * alpha)
    } else {
        let u = PI * x;
        (u * u.cos() - u.sin()) / (PI * x * x) / (alpha * alpha)
    }
}

fn check_kernel_args(t: f64, alpha: f64) -> Result<()> {
    if !t.is_finite() || !alpha.is_finite() {
        return Err(NtwError::InvalidArgument(format!(
            "kernel arguments must be finite, got t={t}, alpha={alpha}"
        )));
    }
    if alpha < 1.0 {
        return Err(NtwError::InvalidArgument(format!(
            "alpha must be >= 1, got {alpha}"
        )));
    }
    Ok(())
}

/// Interpolation kernel `sin(pi t / alpha) / (pi t / alpha) / alpha`.
///
/// The removable singularity at `t = 0` is handled by an exact branch, so
/// grid points are reproduced without an epsilon offset. At `alpha = 1`
/// this is the normalized sinc kernel.
pub fn sinc_kernel(t: f64, alpha: f64) -> Result<f64> {
    check_kernel_args(t, alpha)?;
    Ok(kernel(t, alpha))
}

/// Evaluates `series` at the normalized position `t_prime` (nominally in
/// `[0, 1]`; values outside are extrapolated by the same kernel sum).
pub fn interpolate(series: &TimeSeries, t_prime: f64, alpha: f64) -> Result<f64> {
    check_kernel_args(t_prime, alpha)?;
    Ok(interpolate_raw(&series.values, t_prime, alpha))
}

/// Derivative of [`interpolate`] with respect to `t_prime`.
pub fn interpolate_grad(series: &TimeSeries, t_prime: f64, alpha: f64) -> Result<f64> {
    check_kernel_args(t_prime, alpha)?;
    Ok(interpolate_grad_raw(&series.values, t_prime, alpha))
}

#[inline]
pub(crate) fn interpolate_raw(values: &[f64], t_prime: f64, alpha: f64) -> f64 {
    let t_upper = (values.len() - 1) as f64;
    let pos = t_prime * t_upper;
    values
        .iter()
        .enumerate()
        .map(|(t, &x)| x * kernel(t as f64 - pos, alpha))
        .sum()
}

#[inline]
pub(crate) fn interpolate_grad_raw(values: &[f64], t_prime: f64, alpha: f64) -> f64 {
    let t_upper = (values.len() - 1) as f64;
    let pos = t_prime * t_upper;
    let sum: f64 = values
        .iter()
        .enumerate()
        .map(|(t, &x)| x * kernel_deriv(t as f64 - pos, alpha))
        .sum();
    -t_upper * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec()).unwrap()
    }

    #[test]
    fn kernel_at_zero_is_inverse_alpha() {
        assert_eq!(sinc_kernel(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(sinc_kernel(0.0, 100.0).unwrap(), 0.01);
    }

    #[test]
    fn kernel_vanishes_at_nonzero_integers() {
        for k in [-5i32, -1, 1, 3, 7] {
            assert!(sinc_kernel(k as f64, 1.0).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_rejects_bad_args() {
        assert!(sinc_kernel(f64::NAN, 1.0).is_err());
        assert!(sinc_kernel(0.0, f64::INFINITY).is_err());
        assert!(sinc_kernel(0.0, 0.5).is_err());
    }

    #[test]
    fn interpolation_exact_at_grid_points() {
        let x = ts(&[1.0, 2.0, 3.0]);
        assert_eq!(interpolate(&x, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(interpolate(&x, 1.0, 1.0).unwrap(), 3.0);
        // every grid point, several lengths
        for n in [2usize, 5, 17] {
            let values: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.3).collect();
            let x = TimeSeries::new(values.clone()).unwrap();
            let t_upper = (n - 1) as f64;
            for t in 0..n {
                let got = interpolate(&x, t as f64 / t_upper, 1.0).unwrap();
                assert!(
                    (got - values[t]).abs() < 1e-12,
                    "n={n} t={t}: {got} vs {}",
                    values[t]
                );
            }
        }
    }

    #[test]
    fn large_alpha_suppresses_oscillation() {
        let x = ts(&[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let mean = 0.5;
        let got = interpolate(&x, 0.5, 8.0).unwrap();
        assert!(
            (got - mean).abs() <= 0.1 * mean.abs().max(1.0),
            "got {got}"
        );
    }

    #[test]
    fn gradient_of_constant_series_is_the_truncation_slope() {
        // the finite one-sided kernel sum of a constant series is exact at
        // grid points but not flat between them: its slope at t' = 0 is
        // c * T * sum_{k=1}^{T} (-1)^{k+1} / k (the alternating harmonic
        // partial sum), not zero; check the analytic gradient against both
        // that closed form and finite differences
        let c = 5.0;
        let x = ts(&[c, c, c, c]);
        let g = interpolate_grad(&x, 0.0, 1.0).unwrap();
        let partial: f64 = (1..=3).map(|k| if k % 2 == 1 { 1.0 / k as f64 } else { -1.0 / k as f64 }).sum();
        let want = c * 3.0 * partial;
        assert!((g - want).abs() < 1e-9, "{g} vs {want}");
        let fd = fd_grad(&x, 0.0, 1.0);
        assert!((g - fd).abs() / fd.abs() < 1e-6, "{g} vs fd {fd}");
    }

    fn fd_grad(x: &TimeSeries, t_prime: f64, alpha: f64) -> f64 {
        let h = 1e-6;
        let up = interpolate(x, t_prime + h, alpha).unwrap();
        let dn = interpolate(x, t_prime - h, alpha).unwrap();
        (up - dn) / (2.0 * h)
    }

    #[test]
    fn gradient_matches_finite_differences_on_fixed_cases() {
        let cases = [
            (ts(&[0.0, 1.0]), 0.5, 1.0),
            (ts(&[0.0, 1.0, 0.0]), 0.25, 2.0),
        ];
        for (x, tp, alpha) in cases {
            let g = interpolate_grad(&x, tp, alpha).unwrap();
            let fd = fd_grad(&x, tp, alpha);
            let rel = (g - fd).abs() / fd.abs().max(1e-12);
            assert!(rel <= 1e-6, "analytic {g} vs fd {fd}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences_randomized() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(2..=32);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x = TimeSeries::new(values).unwrap();
            let tp: f64 = rng.gen_range(0.05..0.95);
            let alpha: f64 = rng.gen_range(1.0..20.0);
            let g = interpolate_grad(&x, tp, alpha).unwrap();
            let fd = fd_grad(&x, tp, alpha);
            let rel = (g - fd).abs() / fd.abs().max(1e-6);
            assert!(rel <= 1e-5, "analytic {g} vs fd {fd} (n={n}, tp={tp}, alpha={alpha})");
        }
    }

    #[test]
    fn interpolation_is_linear_in_the_series() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(2..=16);
            let xv: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let yv: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let combo: Vec<f64> = xv.iter().zip(&yv).map(|(x, y)| a * x + b * y).collect();
            let tp: f64 = rng.gen_range(0.0..1.0);
            let alpha: f64 = rng.gen_range(1.0..10.0);
            let lhs = interpolate(&TimeSeries::new(combo).unwrap(), tp, alpha).unwrap();
            let rhs = a * interpolate(&TimeSeries::new(xv.clone()).unwrap(), tp, alpha).unwrap()
                + b * interpolate(&TimeSeries::new(yv.clone()).unwrap(), tp, alpha).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn low_pass_envelope_is_monotone_in_alpha() {
        let t_upper = 64usize;
        let values: Vec<f64> = (0..=t_upper)
            .map(|t| (2.0 * PI * (t_upper as f64 / 4.0) * t as f64 / t_upper as f64).sin())
            .collect();
        let x = TimeSeries::new(values).unwrap();
        let mut prev = f64::INFINITY;
        for alpha in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let max_abs = (0..=512)
                .map(|i| interpolate(&x, i as f64 / 512.0, alpha).unwrap().abs())
                .fold(0.0f64, f64::max);
            assert!(max_abs <= prev + 1e-6, "alpha={alpha}: {max_abs} > {prev}");
            prev = max_abs;
        }
    }

    #[test]
    fn anneal_decays_and_clamps() {
        let mut state = AnnealState::new(100.0, 0.99).unwrap();
        state.step();
        assert!((state.alpha - 99.0).abs() < 1e-12);

        let mut state = AnnealState::new(1.0, 0.99).unwrap();
        state.step();
        assert_eq!(state.alpha, 1.0);
    }

    #[test]
    fn anneal_reaches_floor_at_update_459() {
        let mut state = AnnealState::new(100.0, 0.99).unwrap();
        let mut first_at_floor = None;
        for k in 1..=600 {
            state.step();
            if state.alpha == 1.0 {
                first_at_floor = Some(k);
                break;
            }
        }
        assert_eq!(first_at_floor, Some(459));
    }

    #[test]
    fn series_validation() {
        assert!(TimeSeries::new(vec![1.0]).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::new(vec![1.0, 2.0]).is_ok());
    }
}

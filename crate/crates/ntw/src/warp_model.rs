//! The orthogonal-basis continuous warping model, its discretization to
//! sampled warpings, and the validity checks for the discrete alignment
//! constraints (monotonicity, continuity, boundary).
//!
//! A continuous warping maps `s in [0, sqrt(N)]` to an N-vector of
//! normalized positions. The first basis vector carries the uniform ramp;
//! the remaining N-1 directions are modulated by a coefficient function
//! `phi` under an `s (S - s)` envelope, which pins the boundary values
//! regardless of `phi`.

use crate::error::{NtwError, Result};

/// Orthonormal basis of `R^N` whose first vector is `(1/sqrt(N)) * 1`.
#[derive(Debug, Clone)]
pub struct WarpBasis {
    pub n_series: usize,
    /// `vectors[k]` is `e_{k+1}`; `vectors[0]` is the normalized ones vector.
    pub vectors: Vec<Vec<f64>>,
}

impl WarpBasis {
    /// Component `i` of the first (ones-direction) basis vector.
    #[inline]
    pub fn e1_component(&self) -> f64 {
        self.vectors[0][0]
    }

    /// The complement vectors `e_2 ..= e_N`.
    pub fn complement(&self) -> &[Vec<f64>] {
        &self.vectors[1..]
    }

    /// Warp domain endpoint `S = sqrt(N)`.
    #[inline]
    pub fn s_max(&self) -> f64 {
        (self.n_series as f64).sqrt()
    }
}

/// Deterministic orthonormal basis with `e_1 = (1/sqrt(N)) * 1`.
///
/// The remaining vectors come from modified Gram-Schmidt applied to the
/// standard basis vectors `u_1 .. u_{N-1}` in index order, each normalized
/// with its leading nonzero component positive.
pub fn build_basis(n_series: usize) -> Result<WarpBasis> {
    if n_series < 2 {
        return Err(NtwError::InvalidArgument(format!(
            "need at least 2 series to build a warp basis, got {n_series}"
        )));
    }
    let n = n_series;
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut vectors = vec![vec![inv_sqrt_n; n]];

    for j in 0..n - 1 {
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        // modified Gram-Schmidt against all accepted vectors
        for e in &vectors {
            let dot: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi -= dot * ei;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(NtwError::ContractViolation(format!(
                "degenerate basis candidate at index {j}"
            )));
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        // sign convention: leading nonzero component positive
        if let Some(&lead) = v.iter().find(|x| x.abs() > 1e-12) {
            if lead < 0.0 {
                for vi in v.iter_mut() {
                    *vi = -*vi;
                }
            }
        }
        vectors.push(v);
    }
    Ok(WarpBasis { n_series, vectors })
}

/// A continuous warping: basis plus a coefficient function `phi`.
pub struct ContinuousWarping<'a> {
    pub basis: &'a WarpBasis,
    /// Maps `s in [0, S]` to `N - 1` coefficients.
    pub phi: Box<dyn Fn(f64) -> Vec<f64> + Sync + 'a>,
}

impl<'a> ContinuousWarping<'a> {
    pub fn new(basis: &'a WarpBasis, phi: impl Fn(f64) -> Vec<f64> + Sync + 'a) -> Self {
        ContinuousWarping {
            basis,
            phi: Box::new(phi),
        }
    }

    /// Uniform warping (`phi` identically zero).
    pub fn uniform(basis: &'a WarpBasis) -> Self {
        let n_out = basis.n_series - 1;
        ContinuousWarping::new(basis, move |_| vec![0.0; n_out])
    }
}

/// Evaluates the continuous warp vector at `s`.
///
/// Returns `s e_1 + s (S - s) sum_k phi_k(s) e_{k+1}`; component `i` is the
/// normalized warp of series `i`, not clamped to `[0, 1]`. The boundary
/// values `0` and `1` are returned exactly at `s = 0` and `s = S`.
pub fn eval_warping(w: &ContinuousWarping<'_>, s: f64) -> Result<Vec<f64>> {
    let s_max = w.basis.s_max();
    if !s.is_finite() || s < 0.0 || s > s_max {
        return Err(NtwError::InvalidArgument(format!(
            "s = {s} outside warp domain [0, {s_max}]"
        )));
    }
    let coeffs = (w.phi)(s);
    if coeffs.len() != w.basis.n_series - 1 {
        return Err(NtwError::ContractViolation(format!(
            "phi returned {} coefficients, expected {}",
            coeffs.len(),
            w.basis.n_series - 1
        )));
    }
    Ok(eval_warping_raw(w.basis, &coeffs, s))
}

/// Evaluation path shared with the training loop, which holds coefficients
/// it computed itself.
pub(crate) fn eval_warping_raw(basis: &WarpBasis, coeffs: &[f64], s: f64) -> Vec<f64> {
    let n = basis.n_series;
    let s_max = basis.s_max();
    // s * (1/sqrt(N)) would round away from exactly 1 at s = sqrt(N)
    let ramp = if s == s_max { 1.0 } else { s * basis.e1_component() };
    let envelope = s * (s_max - s);
    let mut out = vec![ramp; n];
    if envelope != 0.0 {
        for (k, e) in basis.complement().iter().enumerate() {
            let c = envelope * coeffs[k];
            for (o, ei) in out.iter_mut().zip(e) {
                *o += c * ei;
            }
        }
    }
    out
}

/// Integer warpings on a regular grid: `tau[i][z] in [0 ..= T_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWarping {
    pub n_series: usize,
    /// Grid resolution `Z`; each row has `Z + 1` entries.
    pub z_max: usize,
    /// `tau[i][z]` is the source index of series `i` at warped index `z`.
    pub tau: Vec<Vec<usize>>,
    /// Upper sample index `T_i` of each series.
    pub lengths: Vec<usize>,
}

/// Discretizes a continuous warping on the regular grid `s_z = (z/Z) sqrt(N)`.
///
/// `tau[i][z] = clamp(floor(T_i * tau'_i(s_z)), 0, T_i)`, with the two
/// endpoints forced to `0` and `T_i` (they are exact analytically; the floor
/// can undershoot by one ulp).
pub fn sample_warping(
    w: &ContinuousWarping<'_>,
    z_max: usize,
    lengths: &[usize],
) -> Result<SampledWarping> {
    let n = w.basis.n_series;
    if lengths.len() != n {
        return Err(NtwError::ShapeMismatch(format!(
            "{} lengths for {} series",
            lengths.len(),
            n
        )));
    }
    if z_max < 1 {
        return Err(NtwError::InvalidArgument("Z must be >= 1".into()));
    }
    if let Some(&t) = lengths.iter().find(|&&t| t == 0) {
        return Err(NtwError::InvalidArgument(format!(
            "series length T = {t} must be positive"
        )));
    }
    let s_max = w.basis.s_max();
    let mut tau = vec![vec![0usize; z_max + 1]; n];
    for z in 0..=z_max {
        let s = (z as f64 / z_max as f64) * s_max;
        let warp = eval_warping(w, s)?;
        for i in 0..n {
            let t_upper = lengths[i];
            let idx = if z == 0 {
                0
            } else if z == z_max {
                t_upper
            } else {
                let raw = (t_upper as f64 * warp[i]).floor();
                raw.clamp(0.0, t_upper as f64) as usize
            };
            tau[i][z] = idx;
        }
    }
    Ok(SampledWarping {
        n_series: n,
        z_max,
        tau,
        lengths: lengths.to_vec(),
    })
}

/// Fractions of frames satisfying the three alignment constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityScores {
    /// Fraction of nondecreasing steps.
    pub v_mono: f64,
    /// Fraction of steps advancing by at most one source index.
    pub v_cont: f64,
    /// Fraction of satisfied endpoint conditions, normalized to `[0, 1]`.
    pub v_bound: f64,
}

impl ValidityScores {
    pub fn all_perfect(&self) -> bool {
        self.v_mono == 1.0 && self.v_cont == 1.0 && self.v_bound == 1.0
    }
}

/// Computes the three validity scores of a sampled warping.
pub fn check_feasibility(sw: &SampledWarping) -> ValidityScores {
    let n = sw.n_series;
    let z_max = sw.z_max;
    let mut mono = 0usize;
    let mut cont = 0usize;
    let mut bound = 0usize;
    for (row, &t_upper) in sw.tau.iter().zip(&sw.lengths) {
        for z in 0..z_max {
            if row[z + 1] >= row[z] {
                mono += 1;
            }
            // on usize, a decrease also counts as a step <= 1
            if row[z + 1] <= row[z] + 1 {
                cont += 1;
            }
        }
        if row[0] == 0 {
            bound += 1;
        }
        if row[z_max] == t_upper {
            bound += 1;
        }
    }
    let steps = (n * z_max) as f64;
    ValidityScores {
        v_mono: mono as f64 / steps,
        v_cont: cont as f64 / steps,
        v_bound: bound as f64 / (2 * n) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_rejects_small_n() {
        assert!(build_basis(1).is_err());
    }

    #[test]
    fn basis_n2_matches_closed_form() {
        let b = build_basis(2).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((b.vectors[0][0] - r).abs() < 1e-15);
        assert!((b.vectors[0][1] - r).abs() < 1e-15);
        assert!((b.vectors[1][0] - r).abs() < 1e-15);
        assert!((b.vectors[1][1] + r).abs() < 1e-15);
    }

    #[test]
    fn basis_n4_first_vector() {
        let b = build_basis(4).unwrap();
        for &c in &b.vectors[0] {
            assert!((c - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_orthonormal_and_zero_sum() {
        for n in [2usize, 3, 10, 37] {
            let b = build_basis(n).unwrap();
            for (a, va) in b.vectors.iter().enumerate() {
                for (c, vc) in b.vectors.iter().enumerate() {
                    let dot: f64 = va.iter().zip(vc).map(|(x, y)| x * y).sum();
                    let want = if a == c { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-10, "n={n} <e{a},e{c}>={dot}");
                }
            }
            for v in b.complement() {
                let sum: f64 = v.iter().sum();
                assert!(sum.abs() < 1e-10, "n={n}: complement sums to {sum}");
            }
        }
    }

    #[test]
    fn uniform_warping_is_a_ramp() {
        let b = build_basis(3).unwrap();
        let w = ContinuousWarping::uniform(&b);
        let s = 0.7;
        let out = eval_warping(&w, s).unwrap();
        for &v in &out {
            assert!((v - s / 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_values_are_bitwise_exact() {
        let b = build_basis(5).unwrap();
        let w = ContinuousWarping::new(&b, |_| vec![3.0, -2.0, 0.5, 9.0]);
        let at0 = eval_warping(&w, 0.0).unwrap();
        let at_s = eval_warping(&w, b.s_max()).unwrap();
        for i in 0..5 {
            assert_eq!(at0[i], 0.0);
            assert_eq!(at_s[i], 1.0);
        }
    }

    #[test]
    fn eval_rejects_out_of_domain() {
        let b = build_basis(2).unwrap();
        let w = ContinuousWarping::uniform(&b);
        assert!(eval_warping(&w, -0.1).is_err());
        assert!(eval_warping(&w, b.s_max() + 0.1).is_err());
    }

    #[test]
    fn constant_phi_n2_separation() {
        // tau'_1 - tau'_2 = 2 s (sqrt2 - s) c / sqrt2 for constant phi = c
        let b = build_basis(2).unwrap();
        let c = 0.3;
        let w = ContinuousWarping::new(&b, move |_| vec![c]);
        for s in [0.2, 0.5, 1.0, 1.3] {
            let out = eval_warping(&w, s).unwrap();
            let want = 2.0 * s * (2f64.sqrt() - s) * c / 2f64.sqrt();
            assert!((out[0] - out[1] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_sampling_floors_the_ramp() {
        let b = build_basis(2).unwrap();
        let w = ContinuousWarping::uniform(&b);
        let sw = sample_warping(&w, 20, &[10, 10]).unwrap();
        for z in 0..=20 {
            assert_eq!(sw.tau[0][z], z / 2, "z={z}");
        }
    }

    #[test]
    fn sampling_forces_endpoints() {
        let b = build_basis(3).unwrap();
        let w = ContinuousWarping::new(&b, |s| vec![(3.0 * s).sin(), -(s).cos()]);
        let sw = sample_warping(&w, 40, &[4, 5, 6]).unwrap();
        for i in 0..3 {
            assert_eq!(sw.tau[i][0], 0);
            assert_eq!(sw.tau[i][40], sw.lengths[i]);
        }
    }

    #[test]
    fn feasibility_scores_uniform() {
        let b = build_basis(2).unwrap();
        let w = ContinuousWarping::uniform(&b);
        let sw = sample_warping(&w, 20, &[10, 10]).unwrap();
        let v = check_feasibility(&sw);
        assert_eq!((v.v_mono, v.v_cont, v.v_bound), (1.0, 1.0, 1.0));
    }

    #[test]
    fn feasibility_scores_hand_counted() {
        let sw = SampledWarping {
            n_series: 1,
            z_max: 3,
            tau: vec![vec![0, 2, 1, 3]],
            lengths: vec![3],
        };
        // steps +2, -1, +2: one monotonicity violation, two jumps of 2
        let v = check_feasibility(&sw);
        assert!((v.v_mono - 2.0 / 3.0).abs() < 1e-15);
        assert!((v.v_cont - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(v.v_bound, 1.0);
    }

    #[test]
    fn increment_identity_on_regular_grid() {
        // sum_i delta tau'_i = N / Z for any phi, by orthogonality to e_1
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(n, z_max) in &[(4usize, 100usize), (2, 7), (9, 250)] {
            let b = build_basis(n).unwrap();
            let amp: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w = ContinuousWarping::new(&b, move |s| {
                amp.iter().map(|a| a * (5.0 * s).sin() + a * a * s).collect()
            });
            let s_max = b.s_max();
            let want = n as f64 / z_max as f64;
            let mut prev = eval_warping(&w, 0.0).unwrap();
            for z in 1..=z_max {
                let cur = eval_warping(&w, (z as f64 / z_max as f64) * s_max).unwrap();
                let sum: f64 = cur.iter().zip(&prev).map(|(a, b)| a - b).sum();
                assert!((sum - want).abs() < 1e-10, "n={n} z={z}: {sum} vs {want}");
                prev = cur;
            }
        }
    }

    #[test]
    fn feasibility_by_construction_randomized() {
        use crate::synth::{grid_phi, random_monotone_coeffs};
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..200 {
            let n = rng.gen_range(2..=10);
            let lengths: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=50)).collect();
            let z_max = n * lengths.iter().copied().max().unwrap();
            let basis = build_basis(n).unwrap();
            let coeffs = random_monotone_coeffs(&mut rng, &basis, z_max);
            let phi = grid_phi(coeffs, z_max, basis.s_max());
            let w = ContinuousWarping::new(&basis, phi);
            let sw = sample_warping(&w, z_max, &lengths).unwrap();
            let v = check_feasibility(&sw);
            assert!(
                v.all_perfect(),
                "trial {trial}: n={n} lengths={lengths:?} scores={v:?}"
            );
        }
    }

    #[test]
    fn basis_completion_invariance() {
        // a different orthonormal completion reaches the same warpings after
        // rotating the coefficients by R = B2'^T B2
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [2usize, 3, 6] {
            let b = build_basis(n).unwrap();
            // alternative completion: Gram-Schmidt over random vectors
            let mut alt = vec![b.vectors[0].clone()];
            while alt.len() < n {
                let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
                for e in &alt {
                    let dot: f64 = v.iter().zip(e).map(|(a, c)| a * c).sum();
                    for (vi, ei) in v.iter_mut().zip(e) {
                        *vi -= dot * ei;
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-6 {
                    continue;
                }
                for vi in v.iter_mut() {
                    *vi /= norm;
                }
                alt.push(v);
            }
            let b_alt = WarpBasis {
                n_series: n,
                vectors: alt,
            };
            // R[k][l] = <e'_{k+1}, e_{l+1}>
            let rot: Vec<Vec<f64>> = b_alt
                .complement()
                .iter()
                .map(|ep| {
                    b.complement()
                        .iter()
                        .map(|e| ep.iter().zip(e).map(|(a, c)| a * c).sum())
                        .collect()
                })
                .collect();
            for _ in 0..20 {
                let c: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
                let c_alt: Vec<f64> = rot
                    .iter()
                    .map(|row| row.iter().zip(&c).map(|(r, ci)| r * ci).sum())
                    .collect();
                let s = rng.gen_range(0.0..b.s_max());
                let w1 = eval_warping_raw(&b, &c, s);
                let w2 = eval_warping_raw(&b_alt, &c_alt, s);
                for (a, bb) in w1.iter().zip(&w2) {
                    assert!((a - bb).abs() < 1e-10, "n={n}: {a} vs {bb}");
                }
            }
        }
    }
}

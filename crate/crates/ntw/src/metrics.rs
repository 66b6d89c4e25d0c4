//! Alignment-quality metrics: pairwise DTW, the barycenter loss, and the
//! warped average / warped standard deviation of an aligned set.

use crate::error::{NtwError, Result};
use crate::interp::TimeSeries;
use crate::warp_model::SampledWarping;

/// Outcome of a pairwise DTW computation.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    /// Optimal cumulative squared frame cost.
    pub discrepancy: f64,
    /// Index pairs of the optimal path, `(0,0)` to `(T_a, T_b)`, if requested.
    pub path: Option<Vec<(usize, usize)>>,
}

/// Classical DTW with squared local cost and steps `(1,0)`, `(0,1)`, `(1,1)`.
pub fn dtw(a: &TimeSeries, b: &TimeSeries) -> Result<DtwResult> {
    dtw_impl(&a.values, &b.values, false)
}

/// DTW with the optimal path recovered by backtracking.
pub fn dtw_with_path(a: &TimeSeries, b: &TimeSeries) -> Result<DtwResult> {
    dtw_impl(&a.values, &b.values, true)
}

/// DTW on raw slices; unlike [`dtw`], single-sample inputs are allowed.
pub fn dtw_slices(a: &[f64], b: &[f64], want_path: bool) -> Result<DtwResult> {
    dtw_impl(a, b, want_path)
}

pub(crate) fn dtw_impl(a: &[f64], b: &[f64], want_path: bool) -> Result<DtwResult> {
    if a.is_empty() || b.is_empty() {
        return Err(NtwError::InvalidArgument("DTW inputs must be nonempty".into()));
    }
    let (na, nb) = (a.len(), b.len());
    // rolling rows unless the path is needed
    if !want_path {
        let mut prev = vec![f64::INFINITY; nb];
        let mut cur = vec![f64::INFINITY; nb];
        for (i, &av) in a.iter().enumerate() {
            for (j, &bv) in b.iter().enumerate() {
                let cost = (av - bv) * (av - bv);
                let best = if i == 0 && j == 0 {
                    0.0
                } else {
                    let up = if i > 0 { prev[j] } else { f64::INFINITY };
                    let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                    let diag = if i > 0 && j > 0 { prev[j - 1] } else { f64::INFINITY };
                    up.min(left).min(diag)
                };
                cur[j] = cost + best;
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        return Ok(DtwResult {
            discrepancy: prev[nb - 1],
            path: None,
        });
    }

    let mut table = vec![f64::INFINITY; na * nb];
    for i in 0..na {
        for j in 0..nb {
            let cost = (a[i] - b[j]) * (a[i] - b[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = if i > 0 { table[(i - 1) * nb + j] } else { f64::INFINITY };
                let left = if j > 0 { table[i * nb + j - 1] } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 {
                    table[(i - 1) * nb + j - 1]
                } else {
                    f64::INFINITY
                };
                up.min(left).min(diag)
            };
            table[i * nb + j] = cost + best;
        }
    }
    let mut path = vec![(na - 1, nb - 1)];
    let (mut i, mut j) = (na - 1, nb - 1);
    while i > 0 || j > 0 {
        let up = if i > 0 { table[(i - 1) * nb + j] } else { f64::INFINITY };
        let left = if j > 0 { table[i * nb + j - 1] } else { f64::INFINITY };
        let diag = if i > 0 && j > 0 {
            table[(i - 1) * nb + j - 1]
        } else {
            f64::INFINITY
        };
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
        path.push((i, j));
    }
    path.reverse();
    Ok(DtwResult {
        discrepancy: table[na * nb - 1],
        path: Some(path),
    })
}

/// Warped rows `A[i][z] = x_i[tau_i(z)]`, paired with their source warping.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSet {
    pub rows: Vec<Vec<f64>>,
    pub warping: SampledWarping,
}

impl AlignedSet {
    /// Indexes each series by its warping row; exact integer indexing, no
    /// re-interpolation.
    pub fn from_warping(series: &[TimeSeries], warping: &SampledWarping) -> Result<Self> {
        if series.len() != warping.n_series {
            return Err(NtwError::ShapeMismatch(format!(
                "{} series but warping has {} rows",
                series.len(),
                warping.n_series
            )));
        }
        let mut rows = Vec::with_capacity(series.len());
        for (i, (s, tau_row)) in series.iter().zip(&warping.tau).enumerate() {
            if warping.lengths[i] != s.upper_index() {
                return Err(NtwError::ShapeMismatch(format!(
                    "series {i} has T = {} but warping expects {}",
                    s.upper_index(),
                    warping.lengths[i]
                )));
            }
            rows.push(tau_row.iter().map(|&t| s.values[t]).collect());
        }
        Ok(AlignedSet {
            rows,
            warping: warping.clone(),
        })
    }

    pub fn n_series(&self) -> usize {
        self.rows.len()
    }

    /// Warped length `Z + 1`.
    pub fn len(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Mean DTW discrepancy between each input and the per-index mean of the
/// aligned rows, normalized by `N * Z` with `Z` the output resolution.
pub fn barycenter_loss(series: &[TimeSeries], aligned: &AlignedSet) -> Result<f64> {
    let n = aligned.n_series();
    if series.len() != n {
        return Err(NtwError::ShapeMismatch(format!(
            "{} series for an aligned set of {n} rows",
            series.len()
        )));
    }
    let mean = warped_average(aligned);
    let z = aligned.warping.z_max;
    let mut total = 0.0;
    for s in series {
        total += dtw_impl(&s.values, &mean.values, false)?.discrepancy;
    }
    Ok(total / (n * z) as f64)
}

/// Per-index mean of the aligned rows.
pub fn warped_average(aligned: &AlignedSet) -> TimeSeries {
    let n = aligned.n_series() as f64;
    let len = aligned.len();
    let values: Vec<f64> = (0..len)
        .map(|z| aligned.rows.iter().map(|r| r[z]).sum::<f64>() / n)
        .collect();
    TimeSeries {
        values,
        label: None,
        name: None,
    }
}

/// Per-index population standard deviation (1/N) of the aligned rows.
pub fn warped_std(aligned: &AlignedSet) -> TimeSeries {
    let n = aligned.n_series() as f64;
    let mean = warped_average(aligned);
    let values: Vec<f64> = mean
        .values
        .iter()
        .enumerate()
        .map(|(z, &m)| {
            let var = aligned
                .rows
                .iter()
                .map(|r| {
                    let d = r[z] - m;
                    d * d
                })
                .sum::<f64>()
                / n;
            var.sqrt()
        })
        .collect();
    TimeSeries {
        values,
        label: None,
        name: None,
    }
}

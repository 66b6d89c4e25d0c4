//! The end-to-end alignment solver: trapezoidal data objective, hinge
//! penalty on grid monotonicity violations, Adam updates, and the kernel
//! annealing schedule.

use rayon::prelude::*;

use crate::error::{NtwError, Result};
use crate::interp::{interpolate_grad_raw, interpolate_raw, AnnealState, TimeSeries};
use crate::metrics::{barycenter_loss, warped_average, warped_std, AlignedSet};
use crate::warp_model::{
    build_basis, check_feasibility, eval_warping_raw, sample_warping, ContinuousWarping,
    SampledWarping, ValidityScores, WarpBasis,
};
use crate::warp_net::{
    accumulate_point_grads, eval, forward_traced, init_net, NetDims, TapeEntry, WarpNet,
};

/// Solver configuration. Defaults are the reference hyperparameters:
/// 1000 updates, learning rate 1e-4, penalty weight 1000, annealing from
/// 100 with decay 0.99, and hidden widths 512/512.
#[derive(Debug, Clone)]
pub struct NtwConfig {
    pub updates: usize,
    pub learning_rate: f64,
    /// Penalty weight `lambda`.
    pub lambda: f64,
    pub alpha0: f64,
    pub alpha_decay: f64,
    /// Trapezoid sample count `Z'`; defaults to `max_i T_i`.
    pub z_train: Option<usize>,
    /// Output warping resolution `Z`; defaults to `N * max_i T_i`, the
    /// resolution at which grid monotonicity implies continuity.
    pub z_out: Option<usize>,
    pub seed: u64,
    pub hidden1: usize,
    pub hidden2: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Parallel grid evaluation; serial mode is bitwise reproducible.
    pub parallel: bool,
}

impl Default for NtwConfig {
    fn default() -> Self {
        NtwConfig {
            updates: 1000,
            learning_rate: 1e-4,
            lambda: 1000.0,
            alpha0: 100.0,
            alpha_decay: 0.99,
            z_train: None,
            z_out: None,
            seed: 0,
            hidden1: 512,
            hidden2: 512,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            parallel: false,
        }
    }
}

impl NtwConfig {
    pub fn validate(&self) -> Result<()> {
        if self.updates < 1 {
            return Err(NtwError::InvalidArgument("updates must be >= 1".into()));
        }
        if self.lambda < 0.0 {
            return Err(NtwError::InvalidArgument("lambda must be >= 0".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(NtwError::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        if self.alpha0 < 1.0 {
            return Err(NtwError::InvalidArgument("alpha0 must be >= 1".into()));
        }
        if !(self.alpha_decay > 0.0 && self.alpha_decay <= 1.0) {
            return Err(NtwError::InvalidArgument(
                "alpha-decay must be in (0, 1]".into(),
            ));
        }
        if self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(NtwError::InvalidArgument(
                "hidden widths must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn z_train_for(&self, series: &[TimeSeries]) -> usize {
        self.z_train
            .unwrap_or_else(|| series.iter().map(|s| s.upper_index()).max().unwrap_or(1))
            .max(1)
    }

    pub fn z_out_for(&self, series: &[TimeSeries]) -> usize {
        let max_t = series.iter().map(|s| s.upper_index()).max().unwrap_or(1);
        self.z_out.unwrap_or(series.len() * max_t).max(1)
    }
}

/// Adam accumulators in the flat parameter layout.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        AdamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    debug_assert_eq!(params.len(), grads.len());
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for ((p, &g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// One record per completed update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub data_loss: f64,
    pub penalty: f64,
    pub alpha: f64,
    pub total: f64,
}

pub type LossHistory = Vec<LossRecord>;

/// Summary metrics of a finished alignment.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Metrics {
    pub barycenter_loss: f64,
    pub v_mono: f64,
    pub v_cont: f64,
    pub v_bound: f64,
    pub penalty_residual: f64,
    pub data_loss_final: f64,
    pub updates: usize,
    pub alpha_final: f64,
}

/// Everything produced by [`align`].
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub warping: SampledWarping,
    pub aligned: AlignedSet,
    pub loss_history: LossHistory,
    pub validity: ValidityScores,
    pub metrics: Metrics,
    pub average: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Per-grid-point evaluation used by both the loss and the reverse pass.
struct PointEval {
    envelope: f64,
    tape: TapeEntry,
    /// Continuous warp positions, one per series.
    warp: Vec<f64>,
    /// Interpolated values at the warp positions.
    values: Vec<f64>,
    /// d(value)/d(warp position).
    slopes: Vec<f64>,
}

fn eval_point(
    series: &[TimeSeries],
    net: &WarpNet,
    basis: &WarpBasis,
    z: usize,
    z_train: usize,
    alpha: f64,
    with_slopes: bool,
) -> PointEval {
    let s_max = basis.s_max();
    let s = (z as f64 / z_train as f64) * s_max;
    let (coeffs, tape) = forward_traced(net, s);
    let warp = eval_warping_raw(basis, &coeffs, s);
    let values: Vec<f64> = series
        .iter()
        .zip(&warp)
        .map(|(x, &w)| interpolate_raw(&x.values, w, alpha))
        .collect();
    let slopes = if with_slopes {
        series
            .iter()
            .zip(&warp)
            .map(|(x, &w)| interpolate_grad_raw(&x.values, w, alpha))
            .collect()
    } else {
        Vec::new()
    };
    PointEval {
        envelope: s * (s_max - s),
        tape,
        warp,
        values,
        slopes,
    }
}

/// `sum_ij (y_i - y_j)^2` via the moment identity.
#[inline]
fn pairwise_sq(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let sum: f64 = values.iter().sum();
    let sumsq: f64 = values.iter().map(|v| v * v).sum();
    2.0 * n * sumsq - 2.0 * sum * sum
}

fn trapezoid_weight(z: usize, z_train: usize) -> f64 {
    if z == 0 || z == z_train {
        0.5
    } else {
        1.0
    }
}

/// Trapezoidal data objective at the current parameters.
pub fn data_loss(
    series: &[TimeSeries],
    net: &WarpNet,
    basis: &WarpBasis,
    z_train: usize,
    alpha: f64,
) -> Result<f64> {
    if series.len() < 2 {
        return Err(NtwError::InvalidArgument(
            "data loss needs at least 2 series".into(),
        ));
    }
    let ds = basis.s_max() / z_train as f64;
    let mut total = 0.0;
    for z in 0..=z_train {
        let pt = eval_point(series, net, basis, z, z_train, alpha, false);
        total += trapezoid_weight(z, z_train) * ds * pairwise_sq(&pt.values);
    }
    if !total.is_finite() {
        return Err(NtwError::Divergence {
            step: 0,
            detail: format!("non-finite data loss {total}"),
        });
    }
    Ok(total)
}

/// Hinge penalty on decreases of the continuous warp over the training grid.
pub fn penalty(net: &WarpNet, basis: &WarpBasis, z_train: usize) -> Result<f64> {
    let s_max = basis.s_max();
    let mut prev: Option<Vec<f64>> = None;
    let mut total = 0.0;
    for z in 0..=z_train {
        let s = (z as f64 / z_train as f64) * s_max;
        let coeffs = eval(net, s);
        let warp = eval_warping_raw(basis, &coeffs, s);
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&warp) {
                total += (a - b).max(0.0);
            }
        }
        prev = Some(warp);
    }
    Ok(total)
}

/// Data loss, penalty, and the full-objective parameter gradient in one pass.
pub fn objective_with_grad(
    series: &[TimeSeries],
    net: &WarpNet,
    basis: &WarpBasis,
    z_train: usize,
    alpha: f64,
    lambda: f64,
    parallel: bool,
) -> Result<(f64, f64, Vec<f64>)> {
    let n = series.len();
    let ds = basis.s_max() / z_train as f64;

    let points: Vec<PointEval> = if parallel {
        (0..=z_train)
            .into_par_iter()
            .map(|z| eval_point(series, net, basis, z, z_train, alpha, true))
            .collect()
    } else {
        (0..=z_train)
            .map(|z| eval_point(series, net, basis, z, z_train, alpha, true))
            .collect()
    };

    // data term and its gradient w.r.t. each warp position
    let mut data = 0.0;
    let mut warp_grads = vec![vec![0.0; n]; z_train + 1];
    for (z, pt) in points.iter().enumerate() {
        let w = trapezoid_weight(z, z_train) * ds;
        data += w * pairwise_sq(&pt.values);
        let sum: f64 = pt.values.iter().sum();
        for i in 0..n {
            // d/dy_i of sum_jk (y_j - y_k)^2, then through the interpolant
            let dy = 4.0 * (n as f64 * pt.values[i] - sum);
            warp_grads[z][i] = w * dy * pt.slopes[i];
        }
    }

    // penalty term: hinge on decreases between consecutive grid points
    let mut pen = 0.0;
    for z in 0..z_train {
        for i in 0..n {
            let drop = points[z].warp[i] - points[z + 1].warp[i];
            if drop > 0.0 {
                pen += drop;
                warp_grads[z][i] += lambda;
                warp_grads[z + 1][i] -= lambda;
            }
        }
    }

    if !data.is_finite() || !pen.is_finite() {
        return Err(NtwError::Divergence {
            step: 0,
            detail: format!("non-finite objective (data {data}, penalty {pen})"),
        });
    }

    // chain warp gradients to phi coefficients, then through the net
    let coeff_grad = |z: usize| -> Vec<f64> {
        let pt = &points[z];
        basis
            .complement()
            .iter()
            .map(|e| {
                pt.envelope
                    * e.iter()
                        .zip(&warp_grads[z])
                        .map(|(ei, gi)| ei * gi)
                        .sum::<f64>()
            })
            .collect()
    };

    let grads = if parallel {
        (0..=z_train)
            .into_par_iter()
            .fold(
                || vec![0.0; net.dims.n_params()],
                |mut acc, z| {
                    accumulate_point_grads(net, &points[z].tape, &coeff_grad(z), &mut acc);
                    acc
                },
            )
            .reduce(
                || vec![0.0; net.dims.n_params()],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            )
    } else {
        let mut acc = vec![0.0; net.dims.n_params()];
        for z in 0..=z_train {
            accumulate_point_grads(net, &points[z].tape, &coeff_grad(z), &mut acc);
        }
        acc
    };

    Ok((data, pen, grads))
}

/// Runs the full solver and assembles the alignment outputs.
pub fn align(series: &[TimeSeries], config: &NtwConfig) -> Result<AlignmentResult> {
    config.validate()?;
    let n = series.len();
    if n < 2 {
        return Err(NtwError::InvalidArgument(format!(
            "alignment needs at least 2 series, got {n}"
        )));
    }
    let basis = build_basis(n)?;
    let dims = NetDims::new(n - 1, config.hidden1, config.hidden2);
    let mut net = init_net(n, dims, config.seed)?;
    let mut adam = AdamState::new(net.dims.n_params());
    let mut anneal = AnnealState::new(config.alpha0, config.alpha_decay)?;
    let z_train = config.z_train_for(series);

    let mut history = Vec::with_capacity(config.updates);
    for step in 0..config.updates {
        let (data, pen, grads) = objective_with_grad(
            series,
            &net,
            &basis,
            z_train,
            anneal.alpha,
            config.lambda,
            config.parallel,
        )
        .map_err(|e| match e {
            NtwError::Divergence { detail, .. } => NtwError::Divergence { step, detail },
            other => other,
        })?;
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(NtwError::Divergence {
                step,
                detail: "non-finite parameter gradient".into(),
            });
        }
        history.push(LossRecord {
            step,
            data_loss: data,
            penalty: pen,
            alpha: anneal.alpha,
            total: data + config.lambda * pen,
        });
        adam_update(
            &mut net.params,
            &grads,
            &mut adam,
            config.learning_rate,
            config.adam_beta1,
            config.adam_beta2,
            config.adam_eps,
        );
        if net.params.iter().any(|p| !p.is_finite()) {
            return Err(NtwError::Divergence {
                step,
                detail: "non-finite parameter after update".into(),
            });
        }
        anneal.step();
    }

    finalize(series, &net, &basis, config, history, anneal.alpha, z_train)
}

fn finalize(
    series: &[TimeSeries],
    net: &WarpNet,
    basis: &WarpBasis,
    config: &NtwConfig,
    history: LossHistory,
    alpha_final: f64,
    z_train: usize,
) -> Result<AlignmentResult> {
    let z_out = config.z_out_for(series);
    let lengths: Vec<usize> = series.iter().map(|s| s.upper_index()).collect();
    let warping = {
        let w = ContinuousWarping::new(basis, |s| eval(net, s));
        sample_warping(&w, z_out, &lengths)?
    };
    let validity = check_feasibility(&warping);
    let aligned = AlignedSet::from_warping(series, &warping)?;
    let average = warped_average(&aligned);
    let sd = warped_std(&aligned);
    let bary = barycenter_loss(series, &aligned)?;
    let data_loss_final = data_loss(series, net, basis, z_train, alpha_final)?;
    let penalty_residual = penalty(net, basis, z_train)?;
    let metrics = Metrics {
        barycenter_loss: bary,
        v_mono: validity.v_mono,
        v_cont: validity.v_cont,
        v_bound: validity.v_bound,
        penalty_residual,
        data_loss_final,
        updates: history.len(),
        alpha_final,
    };
    Ok(AlignmentResult {
        warping,
        aligned,
        loss_history: history,
        validity,
        metrics,
        average: average.values,
        sd: sd.values,
    })
}

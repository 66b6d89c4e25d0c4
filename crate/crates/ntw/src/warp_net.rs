//! The coefficient network: a four-layer fully connected net with ReLU
//! activations and dense skip connections, mapping a scalar grid position to
//! `N - 1` warp coefficients.
//!
//! The third layer consumes the concatenation of the input and both hidden
//! activations, so its width is `1 + h1 + h2`. Parameters live in one flat
//! buffer; gradients and optimizer moments mirror that layout.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::ops::Range;

use crate::error::{NtwError, Result};

/// Layer widths. The skip layer width is implied: `h3 = 1 + h1 + h2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetDims {
    /// Output width `N - 1`.
    pub n_out: usize,
    pub h1: usize,
    pub h2: usize,
}

impl NetDims {
    pub fn new(n_out: usize, h1: usize, h2: usize) -> Self {
        NetDims { n_out, h1, h2 }
    }

    /// Width of the skip layer: `1 + h1 + h2`.
    #[inline]
    pub fn h3(&self) -> usize {
        1 + self.h1 + self.h2
    }

    pub fn n_params(&self) -> usize {
        let h3 = self.h3();
        self.h1 + self.h1 // w1, b1
            + self.h2 * self.h1 + self.h2 // w2, b2
            + h3 * h3 + h3 // w3, b3
            + self.n_out * h3 + self.n_out // w4, b4
    }

    fn ranges(&self) -> [Range<usize>; 8] {
        let h3 = self.h3();
        let sizes = [
            self.h1,
            self.h1,
            self.h2 * self.h1,
            self.h2,
            h3 * h3,
            h3,
            self.n_out * h3,
            self.n_out,
        ];
        let mut out: [Range<usize>; 8] = Default::default();
        let mut off = 0;
        for (slot, len) in out.iter_mut().zip(sizes) {
            *slot = off..off + len;
            off += len;
        }
        out
    }
}

/// Flat-parameter network. Index order: `w1, b1, w2, b2, w3, b3, w4, b4`,
/// each weight matrix row-major `(out, in)`.
#[derive(Debug, Clone)]
pub struct WarpNet {
    pub dims: NetDims,
    pub params: Vec<f64>,
}

macro_rules! slices {
    ($name:ident, $idx:expr) => {
        #[inline]
        pub fn $name(&self) -> &[f64] {
            &self.params[self.dims.ranges()[$idx].clone()]
        }
    };
}

impl WarpNet {
    slices!(w1, 0);
    slices!(b1, 1);
    slices!(w2, 2);
    slices!(b2, 3);
    slices!(w3, 4);
    slices!(b3, 5);
    slices!(w4, 6);
    slices!(b4, 7);

    /// Mutable view of the output layer, used by tests to set up nonzero nets.
    pub fn output_layer_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let ranges = self.dims.ranges();
        let (w4, rest) = self.params[ranges[6].start..].split_at_mut(ranges[6].len());
        (w4, &mut rest[..ranges[7].len()])
    }
}

/// Initializes the network for `n_series` outputs minus one.
///
/// Hidden layers draw from `uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))` with
/// the seeded generator; the output layer starts at exactly zero, so the
/// network output (and hence the warp perturbation) is identically zero at
/// step 0, which makes the initial warping uniform.
pub fn init_net(n_series: usize, dims: NetDims, seed: u64) -> Result<WarpNet> {
    if n_series < 2 {
        return Err(NtwError::InvalidArgument(format!(
            "need at least 2 series, got {n_series}"
        )));
    }
    if dims.n_out != n_series - 1 {
        return Err(NtwError::InvalidArgument(format!(
            "dims.n_out = {} but n_series - 1 = {}",
            dims.n_out,
            n_series - 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![0.0; dims.n_params()];
    let ranges = dims.ranges();
    let fan_ins = [1usize, 1, dims.h1, dims.h1, dims.h3(), dims.h3()];
    for (range, fan_in) in ranges.iter().take(6).zip(fan_ins) {
        let bound = 1.0 / (fan_in as f64).sqrt();
        for p in &mut params[range.clone()] {
            *p = rng.gen_range(-bound..bound);
        }
    }
    // ranges[6], ranges[7] (w4, b4) stay zero
    Ok(WarpNet { dims, params })
}

/// Activations cached by one forward evaluation.
#[derive(Debug, Clone)]
pub struct TapeEntry {
    pub s: f64,
    pub a1: Vec<f64>,
    pub h1: Vec<f64>,
    pub a2: Vec<f64>,
    pub h2: Vec<f64>,
    pub a3: Vec<f64>,
    pub h3: Vec<f64>,
}

/// Forward records for the current step, keyed by the exact bit pattern of `s`.
#[derive(Debug, Default)]
pub struct NetTape {
    entries: Vec<TapeEntry>,
    index: HashMap<u64, usize>,
}

impl NetTape {
    pub fn new() -> Self {
        NetTape::default()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.index.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn record(&mut self, entry: TapeEntry) {
        self.index.insert(entry.s.to_bits(), self.entries.len());
        self.entries.push(entry);
    }

    fn lookup(&self, s: f64) -> Option<&TapeEntry> {
        self.index.get(&s.to_bits()).map(|&i| &self.entries[i])
    }
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn matvec(w: &[f64], x: &[f64], b: &[f64], out: &mut Vec<f64>) {
    let n_in = x.len();
    out.clear();
    out.extend(b.iter().enumerate().map(|(r, &br)| {
        let row = &w[r * n_in..(r + 1) * n_in];
        br + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>()
    }));
}

/// Evaluates the network at `s`, recording activations on the tape.
pub fn forward(net: &WarpNet, s: f64, tape: &mut NetTape) -> Vec<f64> {
    let (out, entry) = forward_traced(net, s);
    tape.record(entry);
    out
}

/// Evaluation without a shared tape; returns the output and the trace.
pub fn forward_traced(net: &WarpNet, s: f64) -> (Vec<f64>, TapeEntry) {
    let dims = net.dims;
    let mut a1 = Vec::with_capacity(dims.h1);
    matvec(net.w1(), &[s], net.b1(), &mut a1);
    let h1: Vec<f64> = a1.iter().map(|&x| relu(x)).collect();

    let mut a2 = Vec::with_capacity(dims.h2);
    matvec(net.w2(), &h1, net.b2(), &mut a2);
    let h2: Vec<f64> = a2.iter().map(|&x| relu(x)).collect();

    let mut cat = Vec::with_capacity(dims.h3());
    cat.push(s);
    cat.extend_from_slice(&h1);
    cat.extend_from_slice(&h2);

    let mut a3 = Vec::with_capacity(dims.h3());
    matvec(net.w3(), &cat, net.b3(), &mut a3);
    let h3: Vec<f64> = a3.iter().map(|&x| relu(x)).collect();

    let mut out = Vec::with_capacity(dims.n_out);
    matvec(net.w4(), &h3, net.b4(), &mut out);

    (
        out,
        TapeEntry {
            s,
            a1,
            h1,
            a2,
            h2,
            a3,
            h3,
        },
    )
}

/// Plain evaluation, no trace kept.
pub fn eval(net: &WarpNet, s: f64) -> Vec<f64> {
    forward_traced(net, s).0
}

/// Accumulates parameter gradients for a set of output gradients.
///
/// Every `(s, grad)` pair must have a forward record on the tape; the ReLU
/// subgradient at 0 is taken as 0. Returns gradients in the flat parameter
/// layout.
pub fn backward(net: &WarpNet, tape: &NetTape, out_grads: &[(f64, Vec<f64>)]) -> Result<Vec<f64>> {
    let mut grads = vec![0.0; net.dims.n_params()];
    for (s, g) in out_grads {
        let entry = tape.lookup(*s).ok_or_else(|| {
            NtwError::ContractViolation(format!("no tape entry for s = {s}"))
        })?;
        accumulate_point_grads(net, entry, g, &mut grads);
    }
    Ok(grads)
}

/// Reverse pass for a single grid point, adding into `grads`.
pub fn accumulate_point_grads(net: &WarpNet, entry: &TapeEntry, out_grad: &[f64], grads: &mut [f64]) {
    let dims = net.dims;
    let h3 = dims.h3();
    let ranges = dims.ranges();

    // output layer
    let mut dh3 = vec![0.0; h3];
    {
        let (gw4, rest) = grads[ranges[6].start..].split_at_mut(ranges[6].len());
        let gb4 = &mut rest[..ranges[7].len()];
        let w4 = net.w4();
        for (k, &gk) in out_grad.iter().enumerate() {
            gb4[k] += gk;
            let row = &w4[k * h3..(k + 1) * h3];
            let grow = &mut gw4[k * h3..(k + 1) * h3];
            for j in 0..h3 {
                grow[j] += gk * entry.h3[j];
                dh3[j] += gk * row[j];
            }
        }
    }

    // skip layer
    let da3: Vec<f64> = dh3
        .iter()
        .zip(&entry.a3)
        .map(|(&d, &a)| if a > 0.0 { d } else { 0.0 })
        .collect();
    let mut dcat = vec![0.0; h3];
    {
        let (gw3, rest) = grads[ranges[4].start..].split_at_mut(ranges[4].len());
        let gb3 = &mut rest[..ranges[5].len()];
        let w3 = net.w3();
        for (r, &d) in da3.iter().enumerate() {
            gb3[r] += d;
            if d == 0.0 {
                continue;
            }
            let row = &w3[r * h3..(r + 1) * h3];
            let grow = &mut gw3[r * h3..(r + 1) * h3];
            grow[0] += d * entry.s;
            dcat[0] += d * row[0];
            for j in 0..dims.h1 {
                grow[1 + j] += d * entry.h1[j];
                dcat[1 + j] += d * row[1 + j];
            }
            for j in 0..dims.h2 {
                grow[1 + dims.h1 + j] += d * entry.h2[j];
                dcat[1 + dims.h1 + j] += d * row[1 + dims.h1 + j];
            }
        }
    }

    // layer 2: gradient arrives only through the skip concatenation
    let dh2 = &dcat[1 + dims.h1..];
    let da2: Vec<f64> = dh2
        .iter()
        .zip(&entry.a2)
        .map(|(&d, &a)| if a > 0.0 { d } else { 0.0 })
        .collect();
    let mut dh1: Vec<f64> = dcat[1..1 + dims.h1].to_vec();
    {
        let (gw2, rest) = grads[ranges[2].start..].split_at_mut(ranges[2].len());
        let gb2 = &mut rest[..ranges[3].len()];
        let w2 = net.w2();
        for (r, &d) in da2.iter().enumerate() {
            gb2[r] += d;
            if d == 0.0 {
                continue;
            }
            let row = &w2[r * dims.h1..(r + 1) * dims.h1];
            let grow = &mut gw2[r * dims.h1..(r + 1) * dims.h1];
            for j in 0..dims.h1 {
                grow[j] += d * entry.h1[j];
                dh1[j] += d * row[j];
            }
        }
    }

    // layer 1
    {
        let (gw1, rest) = grads[ranges[0].start..].split_at_mut(ranges[0].len());
        let gb1 = &mut rest[..ranges[1].len()];
        for (r, &d) in dh1.iter().enumerate() {
            let d = if entry.a1[r] > 0.0 { d } else { 0.0 };
            gb1[r] += d;
            gw1[r] += d * entry.s;
        }
    }
}

//! A small neural engine: one LSTM layer feeding a multi-layer perceptron,
//! exact reverse-mode gradients through time, and Adam.
//!
//! Everything is `f64` and stored in flat row-major buffers so the
//! gradient can be checked against finite differences parameter by
//! parameter.

mod adam;
mod lstm;
mod mlp;
mod network;

pub use adam::{AdamConfig, AdamState};
pub use lstm::{lstm_forward, LstmParams};
pub use mlp::{mlp_forward, Activation, Dense, MlpParams};
pub use network::{ForwardTrace, Gradient, Network, NetworkConfig};

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    let e = exp(-x.abs());
    let s = 1.0 / (1.0 + e);
    let t = e * s;
    if x >= 0.0 {
        s
    } else {
        t
    }
}

/// Branch-free `exp`, so that loops over [`Lanes`] vectorize. Within a
/// couple of ulps of libm; inputs are clamped to the normal range.
#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    const ROUND: f64 = 6755399441055744.0; // 1.5 * 2^52
    const LN2_HI: f64 = 6.93147180369123816490e-01;
    const LN2_LO: f64 = 1.90821492927058770002e-10;
    let x = x.clamp(-708.0, 709.0);
    let shifted = x * std::f64::consts::LOG2_E + ROUND;
    let k = shifted - ROUND;
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let mut p = 1.0 / 6227020800.0;
    for c in [
        1.0 / 479001600.0,
        1.0 / 39916800.0,
        1.0 / 3628800.0,
        1.0 / 362880.0,
        1.0 / 40320.0,
        1.0 / 5040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        0.5,
        1.0,
        1.0,
    ] {
        p = p * r + c;
    }
    let ki = shifted.to_bits().wrapping_sub(ROUND.to_bits());
    p * f64::from_bits(ki.wrapping_add(1023) << 52)
}

/// Number of sequences the LSTM kernels process side by side.
pub(crate) const LANES: usize = 4;
pub(crate) type Lanes = [f64; LANES];

/// `tanh` through a single [`exp`], accurate to a few ulps in absolute
/// terms.
#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    let e = exp(-2.0 * x.abs());
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

/// Dot product with four interleaved partial sums. The summation order is
/// fixed, so results are reproducible, but the independent chains keep the
/// loop from being latency bound.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub(crate) fn uniform_init(rng: &mut impl rand::Rng, len: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-bound..=bound)).collect()
}

use serde::{Deserialize, Serialize};

use super::{sigmoid, tanh, uniform_init, Lanes, LANES};
use crate::error::{Error, Result};

/// Gate blocks in the stacked weight matrices, in this order.
pub(crate) const INPUT_GATE: usize = 0;
pub(crate) const FORGET_GATE: usize = 1;
pub(crate) const CANDIDATE: usize = 2;
pub(crate) const OUTPUT_GATE: usize = 3;

/// Parameters of a single LSTM layer.
///
/// The four gates are stacked row-wise (input, forget, candidate, output),
/// so `w_x` is `4H x I`, `w_h` is `4H x H` (both row-major) and `bias` has
/// `4H` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_x: Vec<f64>,
    pub w_h: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LstmParams {
            input_size,
            hidden_size,
            w_x: vec![0.0; 4 * hidden_size * input_size],
            w_h: vec![0.0; 4 * hidden_size * hidden_size],
            bias: vec![0.0; 4 * hidden_size],
        }
    }

    /// Uniform weights scaled by each matrix's fan-in, zero biases, and
    /// forget-gate biases of +1.
    pub fn init(input_size: usize, hidden_size: usize, rng: &mut impl rand::Rng) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        p.w_x = uniform_init(rng, p.w_x.len(), input_size);
        p.w_h = uniform_init(rng, p.w_h.len(), hidden_size);
        let h = hidden_size;
        p.bias[FORGET_GATE * h..(FORGET_GATE + 1) * h].fill(1.0);
        p
    }

    pub(crate) fn check(&self) -> Result<()> {
        let (i, h) = (self.input_size, self.hidden_size);
        if h == 0 || i == 0 {
            return Err(Error::Shape("LSTM sizes must be positive".into()));
        }
        if self.w_x.len() != 4 * h * i || self.w_h.len() != 4 * h * h || self.bias.len() != 4 * h {
            return Err(Error::Shape(format!("LSTM buffers inconsistent with input {i}, hidden {h}")));
        }
        Ok(())
    }

    /// One cell update for [`LANES`] independent sequences at once.
    ///
    /// Inputs are `I` lane vectors, states `H` lane vectors. Writes the
    /// `4H` post-activation gates, the new cell state, its tanh, and the
    /// new hidden state. Each lane's arithmetic is identical to running it
    /// alone.
    pub(crate) fn cell(
        &self,
        x: &[Lanes],
        h_prev: &[Lanes],
        c_prev: &[Lanes],
        gates: &mut [Lanes],
        c: &mut [Lanes],
        tanh_c: &mut [Lanes],
        h: &mut [Lanes],
    ) {
        let (ni, nh) = (self.input_size, self.hidden_size);
        // Four rows at a time keeps four independent accumulation chains.
        for (block, out) in gates.chunks_exact_mut(4).enumerate() {
            let r0 = 4 * block;
            let mut acc = [[0.0; LANES]; 4];
            let mut rec = [[0.0; LANES]; 4];
            for q in 0..4 {
                acc[q] = [self.bias[r0 + q]; LANES];
                for (&w, xv) in self.w_x[(r0 + q) * ni..(r0 + q + 1) * ni].iter().zip(x) {
                    for l in 0..LANES {
                        acc[q][l] += w * xv[l];
                    }
                }
            }
            let rows = [
                &self.w_h[r0 * nh..(r0 + 1) * nh],
                &self.w_h[(r0 + 1) * nh..(r0 + 2) * nh],
                &self.w_h[(r0 + 2) * nh..(r0 + 3) * nh],
                &self.w_h[(r0 + 3) * nh..(r0 + 4) * nh],
            ];
            for (j, hv) in h_prev[..nh].iter().enumerate() {
                for q in 0..4 {
                    let w = rows[q][j];
                    for l in 0..LANES {
                        rec[q][l] += w * hv[l];
                    }
                }
            }
            for q in 0..4 {
                let mut z = [0.0; LANES];
                for l in 0..LANES {
                    z[l] = acc[q][l] + rec[q][l];
                }
                out[q] = if (r0 + q) / nh == CANDIDATE {
                    z.map(tanh)
                } else {
                    z.map(sigmoid)
                };
            }
        }
        for k in 0..nh {
            let ig = gates[INPUT_GATE * nh + k];
            let fg = gates[FORGET_GATE * nh + k];
            let g = gates[CANDIDATE * nh + k];
            let og = gates[OUTPUT_GATE * nh + k];
            for l in 0..LANES {
                c[k][l] = fg[l] * c_prev[k][l] + ig[l] * g[l];
            }
            tanh_c[k] = c[k].map(tanh);
            for l in 0..LANES {
                h[k][l] = og[l] * tanh_c[k][l];
            }
        }
    }
}

/// Run the layer over `sequence` from zero initial states and return the
/// hidden state after every step.
pub fn lstm_forward(params: &LstmParams, sequence: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    params.check()?;
    let (ni, nh) = (params.input_size, params.hidden_size);
    let mut h = vec![[0.0; LANES]; nh];
    let mut c = vec![[0.0; LANES]; nh];
    let mut gates = vec![[0.0; LANES]; 4 * nh];
    let mut tanh_c = vec![[0.0; LANES]; nh];
    let mut x = vec![[0.0; LANES]; ni];
    let mut out = Vec::with_capacity(sequence.len());
    for (t, step) in sequence.iter().enumerate() {
        if step.len() != ni {
            return Err(Error::Shape(format!("step {t} has {} inputs, expected {ni}", step.len())));
        }
        for (lane, &v) in x.iter_mut().zip(step) {
            lane[0] = v;
        }
        let (h_prev, c_prev) = (h.clone(), c.clone());
        params.cell(&x, &h_prev, &c_prev, &mut gates, &mut c, &mut tanh_c, &mut h);
        out.push(h.iter().map(|lane| lane[0]).collect());
    }
    Ok(out)
}

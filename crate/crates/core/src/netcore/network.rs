use serde::{Deserialize, Serialize};

use super::lstm::{CANDIDATE, FORGET_GATE, INPUT_GATE, OUTPUT_GATE};
use super::{Activation, Dense, Lanes, LstmParams, MlpParams, LANES};
use crate::error::{Error, Result};

/// Sizes of an LSTM + MLP predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Width of each sequence element fed to the LSTM.
    pub input_size: usize,
    pub hidden_size: usize,
    /// Width of the side input concatenated with the final hidden state.
    pub extra_size: usize,
    /// Hidden MLP layer widths; the output layer is added automatically.
    pub mlp_hidden: Vec<usize>,
    pub mlp_activation: Activation,
    pub output: Activation,
}

/// LSTM over a sequence; its final hidden state, concatenated with a side
/// input, feeds an MLP with a scalar output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub lstm: LstmParams,
    pub mlp: MlpParams,
}

/// Parameter-shaped gradient of the scalar output.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub lstm: LstmParams,
    pub mlp: MlpParams,
}

/// Intermediates retained by [`Network::forward`] and
/// [`Network::forward_batch`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    input_size: usize,
    hidden_size: usize,
    steps: usize,
    chunks: Vec<ChunkTrace>,
    heads: Vec<HeadTrace>,
}

/// Recurrent state for up to [`LANES`] sequences run side by side.
#[derive(Clone, Debug)]
struct ChunkTrace {
    /// `steps x I`.
    inputs: Vec<Lanes>,
    /// `steps x 4H` post-activation gates.
    gates: Vec<Lanes>,
    /// `(steps + 1) x H`, row 0 is the zero initial state.
    cells: Vec<Lanes>,
    hiddens: Vec<Lanes>,
    /// `steps x H`, `tanh` of each new cell state.
    tanh_cells: Vec<Lanes>,
}

#[derive(Clone, Debug)]
struct HeadTrace {
    /// Input to each MLP layer; the first is `[h_T, extra]`.
    layer_inputs: Vec<Vec<f64>>,
    layer_pre: Vec<Vec<f64>>,
    output: f64,
}

impl ForwardTrace {
    /// Output of the first (for [`Network::forward`], the only) item.
    pub fn output(&self) -> f64 {
        self.heads[0].output
    }

    pub fn outputs(&self) -> Vec<f64> {
        self.heads.iter().map(|h| h.output).collect()
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }
}

fn param_slices<'a>(lstm: &'a LstmParams, mlp: &'a MlpParams) -> Vec<&'a [f64]> {
    let mut out: Vec<&[f64]> = vec![&lstm.w_x, &lstm.w_h, &lstm.bias];
    for l in &mlp.layers {
        out.push(&l.weight);
        out.push(&l.bias);
    }
    out
}

fn param_slices_mut<'a>(lstm: &'a mut LstmParams, mlp: &'a mut MlpParams) -> Vec<&'a mut [f64]> {
    let mut out: Vec<&mut [f64]> = vec![&mut lstm.w_x, &mut lstm.w_h, &mut lstm.bias];
    for l in &mut mlp.layers {
        out.push(&mut l.weight);
        out.push(&mut l.bias);
    }
    out
}

impl Network {
    pub fn init(config: &NetworkConfig, rng: &mut impl rand::Rng) -> Result<Self> {
        if config.input_size == 0 || config.hidden_size == 0 || config.mlp_hidden.contains(&0) {
            return Err(Error::InvalidArgument("network sizes must be positive".into()));
        }
        let lstm = LstmParams::init(config.input_size, config.hidden_size, rng);
        let mut layers = Vec::new();
        let mut width = config.hidden_size + config.extra_size;
        for &h in &config.mlp_hidden {
            layers.push(Dense::init(width, h, config.mlp_activation, rng));
            width = h;
        }
        layers.push(Dense::init(width, 1, config.output, rng));
        Ok(Network {
            lstm,
            mlp: MlpParams { layers },
        })
    }

    pub fn extra_size(&self) -> usize {
        self.mlp.input_size() - self.lstm.hidden_size
    }

    /// Parameter buffers in a fixed order: LSTM `w_x`, `w_h`, `bias`, then
    /// each MLP layer's weight and bias.
    pub fn slices(&self) -> Vec<&[f64]> {
        param_slices(&self.lstm, &self.mlp)
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        param_slices_mut(&mut self.lstm, &mut self.mlp)
    }

    pub fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn check(&self) -> Result<()> {
        self.lstm.check()?;
        self.mlp.check()?;
        if self.mlp.input_size() < self.lstm.hidden_size {
            return Err(Error::Shape("MLP narrower than the LSTM hidden state".into()));
        }
        if self.slices().iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(Error::Shape("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Forward pass. `sequence` is `steps x input_size`, flattened.
    pub fn forward(&self, sequence: &[f64], extra: &[f64]) -> Result<(f64, ForwardTrace)> {
        let (_, trace) = self.forward_batch(&[(sequence, extra)])?;
        Ok((trace.output(), trace))
    }

    /// Forward pass over several `(sequence, extra)` items of equal length.
    /// Each output is bit-identical to running its item through
    /// [`Self::forward`] alone.
    pub fn forward_batch(&self, items: &[(&[f64], &[f64])]) -> Result<(Vec<f64>, ForwardTrace)> {
        let (ni, nh) = (self.lstm.input_size, self.lstm.hidden_size);
        let Some(&(first, _)) = items.first() else {
            return Err(Error::Shape("empty batch".into()));
        };
        for (sequence, extra) in items {
            if sequence.len() % ni != 0 || sequence.is_empty() {
                return Err(Error::Shape(format!(
                    "sequence of {} values is not a whole number of {ni}-wide steps",
                    sequence.len()
                )));
            }
            if sequence.len() != first.len() {
                return Err(Error::Shape("batched sequences differ in length".into()));
            }
            if nh + extra.len() != self.mlp.input_size() {
                return Err(Error::Shape(format!(
                    "side input has {} values, expected {}",
                    extra.len(),
                    self.extra_size()
                )));
            }
        }
        let steps = first.len() / ni;
        let mut chunks = Vec::with_capacity(items.len().div_ceil(LANES));
        let mut heads = Vec::with_capacity(items.len());
        for group in items.chunks(LANES) {
            let mut inputs = vec![[0.0; LANES]; steps * ni];
            for (l, (sequence, _)) in group.iter().enumerate() {
                for (lane, &v) in inputs.iter_mut().zip(sequence.iter()) {
                    lane[l] = v;
                }
            }
            let mut gates = vec![[0.0; LANES]; steps * 4 * nh];
            let mut cells = vec![[0.0; LANES]; (steps + 1) * nh];
            let mut hiddens = vec![[0.0; LANES]; (steps + 1) * nh];
            let mut tanh_cells = vec![[0.0; LANES]; steps * nh];
            for t in 0..steps {
                let (c_done, c_rest) = cells.split_at_mut((t + 1) * nh);
                let (h_done, h_rest) = hiddens.split_at_mut((t + 1) * nh);
                self.lstm.cell(
                    &inputs[t * ni..(t + 1) * ni],
                    &h_done[t * nh..],
                    &c_done[t * nh..],
                    &mut gates[t * 4 * nh..(t + 1) * 4 * nh],
                    &mut c_rest[..nh],
                    &mut tanh_cells[t * nh..(t + 1) * nh],
                    &mut h_rest[..nh],
                );
            }
            for (l, (_, extra)) in group.iter().enumerate() {
                let mut x = Vec::with_capacity(nh + extra.len());
                x.extend(hiddens[steps * nh..].iter().map(|lane| lane[l]));
                x.extend_from_slice(extra);
                heads.push(self.head_forward(x));
            }
            chunks.push(ChunkTrace {
                inputs,
                gates,
                cells,
                hiddens,
                tanh_cells,
            });
        }
        let trace = ForwardTrace {
            input_size: ni,
            hidden_size: nh,
            steps,
            chunks,
            heads,
        };
        Ok((trace.outputs(), trace))
    }

    fn head_forward(&self, mut x: Vec<f64>) -> HeadTrace {
        let mut layer_inputs = Vec::with_capacity(self.mlp.layers.len());
        let mut layer_pre = Vec::with_capacity(self.mlp.layers.len());
        for layer in &self.mlp.layers {
            let mut pre = vec![0.0; layer.output_size];
            let mut out = vec![0.0; layer.output_size];
            layer.forward(&x, &mut pre, &mut out);
            layer_inputs.push(std::mem::replace(&mut x, out));
            layer_pre.push(pre);
        }
        HeadTrace {
            layer_inputs,
            layer_pre,
            output: x[0],
        }
    }

    pub fn predict(&self, sequence: &[f64], extra: &[f64]) -> Result<f64> {
        self.forward(sequence, extra).map(|(y, _)| y)
    }

    /// Gradient of `upstream * output` with respect to every parameter.
    pub fn backward(&self, trace: &ForwardTrace, upstream: f64) -> Result<Gradient> {
        let mut grad = Gradient::zeros_like(self);
        self.backward_into(trace, upstream, &mut grad)?;
        Ok(grad)
    }

    /// Like [`Self::backward`] but accumulates into `grad`.
    pub fn backward_into(&self, trace: &ForwardTrace, upstream: f64, grad: &mut Gradient) -> Result<()> {
        if trace.len() != 1 {
            return Err(Error::Usage("batched trace needs one upstream value per item".into()));
        }
        self.backward_batch_into(trace, &[upstream], grad)
    }

    /// Accumulates the gradient of `sum_i upstream[i] * output[i]` into
    /// `grad`.
    pub fn backward_batch_into(&self, trace: &ForwardTrace, upstream: &[f64], grad: &mut Gradient) -> Result<()> {
        let (ni, nh) = (self.lstm.input_size, self.lstm.hidden_size);
        if trace.input_size != ni
            || trace.hidden_size != nh
            || trace.heads.iter().any(|h| {
                h.layer_inputs.len() != self.mlp.layers.len()
                    || h.layer_inputs.iter().zip(&self.mlp.layers).any(|(x, l)| x.len() != l.input_size)
            })
        {
            return Err(Error::Usage("forward trace was not produced by this network".into()));
        }
        if upstream.len() != trace.len() {
            return Err(Error::Usage(format!(
                "{} upstream values for a trace of {} items",
                upstream.len(),
                trace.len()
            )));
        }
        grad.check_aligned(self)?;

        for (c, chunk) in trace.chunks.iter().enumerate() {
            let lanes = c * LANES..((c + 1) * LANES).min(trace.len());
            if upstream[lanes.clone()].iter().all(|&u| u == 0.0) {
                continue;
            }
            let mut dh = vec![[0.0; LANES]; nh];
            for (l, i) in lanes.enumerate() {
                if upstream[i] == 0.0 {
                    continue;
                }
                let delta = self.head_backward(&trace.heads[i], upstream[i], grad);
                for (lane, d) in dh.iter_mut().zip(&delta[..nh]) {
                    lane[l] = *d;
                }
            }
            self.lstm_backward(chunk, trace.steps, dh, grad);
        }
        Ok(())
    }

    /// Backpropagates through the MLP and returns the gradient with
    /// respect to its input.
    fn head_backward(&self, head: &HeadTrace, upstream: f64, grad: &mut Gradient) -> Vec<f64> {
        let mut delta = vec![upstream];
        for (k, layer) in self.mlp.layers.iter().enumerate().rev() {
            let input = &head.layer_inputs[k];
            let pre = &head.layer_pre[k];
            let out_of = |r: usize| head.layer_inputs.get(k + 1).map_or(head.output, |next| next[r]);
            let g = &mut grad.mlp.layers[k];
            let mut d_input = vec![0.0; layer.input_size];
            for r in 0..layer.output_size {
                let dz = delta[r] * layer.activation.derivative(pre[r], out_of(r));
                if dz == 0.0 {
                    continue;
                }
                g.bias[r] += dz;
                let w_row = &layer.weight[r * layer.input_size..(r + 1) * layer.input_size];
                let g_row = &mut g.weight[r * layer.input_size..(r + 1) * layer.input_size];
                for ((gw, &x), (&w, dx)) in g_row.iter_mut().zip(input).zip(w_row.iter().zip(d_input.iter_mut())) {
                    *gw += dz * x;
                    *dx += dz * w;
                }
            }
            delta = d_input;
        }
        delta
    }

    /// Backpropagation through time. Only `h_T` reaches the head; the side
    /// input has no parameters upstream.
    fn lstm_backward(&self, chunk: &ChunkTrace, steps: usize, mut dh: Vec<Lanes>, grad: &mut Gradient) {
        let (ni, nh) = (self.lstm.input_size, self.lstm.hidden_size);
        let g4 = 4 * nh;
        let mut dc = vec![[0.0; LANES]; nh];
        let mut dz_all = vec![[0.0; LANES]; steps * g4];
        let mut dh_prev = vec![[0.0; LANES]; nh];
        for t in (0..steps).rev() {
            let gates = &chunk.gates[t * g4..(t + 1) * g4];
            let tanh_c = &chunk.tanh_cells[t * nh..(t + 1) * nh];
            let c_prev = &chunk.cells[t * nh..(t + 1) * nh];
            let dz = &mut dz_all[t * g4..(t + 1) * g4];
            for k in 0..nh {
                let ig = gates[INPUT_GATE * nh + k];
                let fg = gates[FORGET_GATE * nh + k];
                let g = gates[CANDIDATE * nh + k];
                let og = gates[OUTPUT_GATE * nh + k];
                for l in 0..LANES {
                    let tc = tanh_c[k][l];
                    let dck = dc[k][l] + dh[k][l] * og[l] * (1.0 - tc * tc);
                    dz[INPUT_GATE * nh + k][l] = dck * g[l] * ig[l] * (1.0 - ig[l]);
                    dz[FORGET_GATE * nh + k][l] = dck * c_prev[k][l] * fg[l] * (1.0 - fg[l]);
                    dz[CANDIDATE * nh + k][l] = dck * ig[l] * (1.0 - g[l] * g[l]);
                    dz[OUTPUT_GATE * nh + k][l] = dh[k][l] * tc * og[l] * (1.0 - og[l]);
                    dc[k][l] = dck * fg[l];
                }
            }
            if t == 0 {
                break;
            }
            // dh_prev[j] = sum_r w_h[r][j] dz[r], four columns at a time.
            let whole = nh - nh % 4;
            for j0 in (0..whole).step_by(4) {
                let mut acc = [[0.0; LANES]; 4];
                for (r, d) in dz.iter().enumerate() {
                    let w = &self.lstm.w_h[r * nh + j0..r * nh + j0 + 4];
                    for q in 0..4 {
                        for l in 0..LANES {
                            acc[q][l] += w[q] * d[l];
                        }
                    }
                }
                dh_prev[j0..j0 + 4].copy_from_slice(&acc);
            }
            for j in whole..nh {
                let mut acc = [0.0; LANES];
                for (r, d) in dz.iter().enumerate() {
                    let w = self.lstm.w_h[r * nh + j];
                    for l in 0..LANES {
                        acc[l] += w * d[l];
                    }
                }
                dh_prev[j] = acc;
            }
            std::mem::swap(&mut dh, &mut dh_prev);
        }

        // Weight gradients, summed over steps and then lanes.
        let reduce = |acc: &Lanes| (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for r in 0..g4 {
            let mut acc_b = [0.0; LANES];
            for t in 0..steps {
                let d = dz_all[t * g4 + r];
                for l in 0..LANES {
                    acc_b[l] += d[l];
                }
            }
            grad.lstm.bias[r] += reduce(&acc_b);
            for j in 0..ni {
                let mut acc = [0.0; LANES];
                for t in 0..steps {
                    let (d, x) = (dz_all[t * g4 + r], chunk.inputs[t * ni + j]);
                    for l in 0..LANES {
                        acc[l] += d[l] * x[l];
                    }
                }
                grad.lstm.w_x[r * ni + j] += reduce(&acc);
            }
        }
        // Recurrent weights in 2 x 4 tiles; h_0 is zero, so step 0 adds
        // nothing.
        let whole = nh - nh % 4;
        for r0 in (0..g4).step_by(2) {
            for j0 in (0..whole).step_by(4) {
                let mut acc = [[[0.0; LANES]; 4]; 2];
                for t in 1..steps {
                    let h = &chunk.hiddens[t * nh + j0..t * nh + j0 + 4];
                    for p in 0..2 {
                        let d = dz_all[t * g4 + r0 + p];
                        for q in 0..4 {
                            for l in 0..LANES {
                                acc[p][q][l] += d[l] * h[q][l];
                            }
                        }
                    }
                }
                for p in 0..2 {
                    for q in 0..4 {
                        grad.lstm.w_h[(r0 + p) * nh + j0 + q] += reduce(&acc[p][q]);
                    }
                }
            }
            for p in 0..2 {
                for j in whole..nh {
                    let mut acc = [0.0; LANES];
                    for t in 1..steps {
                        let (d, h) = (dz_all[t * g4 + r0 + p], chunk.hiddens[t * nh + j]);
                        for l in 0..LANES {
                            acc[l] += d[l] * h[l];
                        }
                    }
                    grad.lstm.w_h[(r0 + p) * nh + j] += reduce(&acc);
                }
            }
        }
    }
}

impl Gradient {
    pub fn zeros_like(net: &Network) -> Self {
        let mut g = Gradient {
            lstm: net.lstm.clone(),
            mlp: net.mlp.clone(),
        };
        g.fill(0.0);
        g
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        param_slices(&self.lstm, &self.mlp)
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        param_slices_mut(&mut self.lstm, &mut self.mlp)
    }

    pub fn fill(&mut self, value: f64) {
        for s in self.slices_mut() {
            s.fill(value);
        }
    }

    /// `self += other`.
    pub fn add_assign(&mut self, other: &Gradient) -> Result<()> {
        let theirs = other.slices();
        let mut ours = self.slices_mut();
        if ours.len() != theirs.len() || ours.iter().zip(&theirs).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::Shape("gradients are not aligned".into()));
        }
        for (a, b) in ours.iter_mut().zip(theirs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn check_aligned(&self, net: &Network) -> Result<()> {
        let a = self.slices();
        let b = net.slices();
        if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| x.len() != y.len()) {
            return Err(Error::Shape("gradient is not aligned with the network".into()));
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use super::{dot, sigmoid, softplus, uniform_init};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Softplus,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Softplus => softplus(x),
        }
    }

    /// Derivative, given the pre-activation `x` and output `y`.
    pub(crate) fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Softplus => sigmoid(x),
        }
    }
}

/// Fully connected layer; `weight` is `output_size x input_size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub input_size: usize,
    pub output_size: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(input_size: usize, output_size: usize, activation: Activation) -> Self {
        Dense {
            input_size,
            output_size,
            weight: vec![0.0; input_size * output_size],
            bias: vec![0.0; output_size],
            activation,
        }
    }

    pub fn init(input_size: usize, output_size: usize, activation: Activation, rng: &mut impl rand::Rng) -> Self {
        let mut d = Self::zeros(input_size, output_size, activation);
        d.weight = uniform_init(rng, d.weight.len(), input_size);
        d
    }

    /// Writes pre-activations into `pre` and activations into `out`.
    pub(crate) fn forward(&self, input: &[f64], pre: &mut [f64], out: &mut [f64]) {
        for r in 0..self.output_size {
            let row = &self.weight[r * self.input_size..(r + 1) * self.input_size];
            let z = self.bias[r] + dot(row, input);
            pre[r] = z;
            out[r] = self.activation.apply(z);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
}

impl MlpParams {
    pub fn input_size(&self) -> usize {
        self.layers.first().map_or(0, |l| l.input_size)
    }

    pub(crate) fn check(&self) -> Result<()> {
        let Some(last) = self.layers.last() else {
            return Err(Error::Shape("MLP has no layers".into()));
        };
        if last.output_size != 1 {
            return Err(Error::Shape(format!("MLP output width {} != 1", last.output_size)));
        }
        for (k, l) in self.layers.iter().enumerate() {
            if l.weight.len() != l.input_size * l.output_size || l.bias.len() != l.output_size {
                return Err(Error::Shape(format!("layer {k} buffers inconsistent")));
            }
        }
        for (k, w) in self.layers.windows(2).enumerate() {
            if w[0].output_size != w[1].input_size {
                return Err(Error::Shape(format!(
                    "layer {k} emits {} values but layer {} takes {}",
                    w[0].output_size,
                    k + 1,
                    w[1].input_size
                )));
            }
        }
        Ok(())
    }
}

/// Evaluate the perceptron on one input vector.
pub fn mlp_forward(params: &MlpParams, input: &[f64]) -> Result<f64> {
    params.check()?;
    if input.len() != params.input_size() {
        return Err(Error::Shape(format!(
            "MLP input has {} values, expected {}",
            input.len(),
            params.input_size()
        )));
    }
    let mut x = input.to_vec();
    for layer in &params.layers {
        let mut pre = vec![0.0; layer.output_size];
        let mut out = vec![0.0; layer.output_size];
        layer.forward(&x, &mut pre, &mut out);
        x = out;
    }
    Ok(x[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_net_outputs_ln2() {
        let mlp = MlpParams {
            layers: vec![Dense::zeros(4, 3, Activation::Tanh), Dense::zeros(3, 1, Activation::Softplus)],
        };
        let y = mlp_forward(&mlp, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((y - 0.6931471805599453).abs() < 1e-15);
    }

    #[test]
    fn identity_layer_is_a_weighted_sum() {
        let mut layer = Dense::zeros(3, 1, Activation::Identity);
        layer.weight = vec![0.5, -1.0, 2.0];
        layer.bias = vec![0.25];
        let mlp = MlpParams { layers: vec![layer] };
        assert_eq!(mlp_forward(&mlp, &[2.0, 3.0, 1.0]).unwrap(), 0.25 + 1.0 - 3.0 + 2.0);
    }

    #[test]
    fn two_layer_net_matches_hand_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l1 = Dense::init(3, 2, Activation::Tanh, &mut rng);
        let mut l2 = Dense::init(2, 1, Activation::Softplus, &mut rng);
        l2.bias[0] = 0.3;
        let x = [0.7, -0.2, 1.1];
        let h0 = (l1.weight[0] * x[0] + l1.weight[1] * x[1] + l1.weight[2] * x[2] + l1.bias[0]).tanh();
        let h1 = (l1.weight[3] * x[0] + l1.weight[4] * x[1] + l1.weight[5] * x[2] + l1.bias[1]).tanh();
        let z = l2.weight[0] * h0 + l2.weight[1] * h1 + 0.3;
        let want = (1.0 + z.exp()).ln();
        let got = mlp_forward(&MlpParams { layers: vec![l1, l2] }, &x).unwrap();
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn shape_errors() {
        let mlp = MlpParams {
            layers: vec![Dense::zeros(2, 3, Activation::Tanh), Dense::zeros(4, 1, Activation::Softplus)],
        };
        assert!(matches!(mlp_forward(&mlp, &[1.0, 2.0]), Err(Error::Shape(_))));
        let mlp = MlpParams {
            layers: vec![Dense::zeros(2, 1, Activation::Softplus)],
        };
        assert!(matches!(mlp_forward(&mlp, &[1.0]), Err(Error::Shape(_))));
    }
}

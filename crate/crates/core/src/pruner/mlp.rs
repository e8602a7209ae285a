use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::numerics::{format_matrix, parse_matrix, DenseMatrix};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Parse(format!("unknown activation {other:?}"))),
        }
    }
}

impl Activation {
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Identity => z,
        }
    }

    // relu'(0) = 0
    fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu if z > T::zero() => T::one(),
            Activation::Relu => T::zero(),
            Activation::Identity => T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    /// `out × in`.
    pub weights: DenseMatrix<T>,
    pub activation: Activation,
}

/// Bias-free feedforward network `σ_L(W_L ⋯ σ_1(W_1 X))`. Inputs are
/// `d_in × n` with one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyMlp<T> {
    pub layers: Vec<DenseLayer<T>>,
}

/// Pre-activations and layer inputs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    /// `inputs[ℓ]` feeds layer `ℓ`; the last entry is the network output.
    pub inputs: Vec<DenseMatrix<T>>,
    pub pre_activations: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> ForwardPass<T> {
    pub fn output(&self) -> &DenseMatrix<T> {
        self.inputs.last().expect("at least the input")
    }
}

impl<T: Scalar> TinyMlp<T> {
    pub fn new(layers: Vec<DenseLayer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            check_dim("consecutive layer sizes", pair[0].weights.rows(), pair[1].weights.cols())?;
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").weights.rows()
    }

    pub fn forward(&self, x: &DenseMatrix<T>) -> Result<ForwardPass<T>> {
        check_dim("network input", self.input_dim(), x.rows())?;
        let mut inputs = vec![x.clone()];
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = layer.weights.matmul(inputs.last().expect("nonempty"))?;
            let a = DenseMatrix::from_fn(z.rows(), z.cols(), |i, j| layer.activation.apply(z[(i, j)]));
            pre_activations.push(z);
            inputs.push(a);
        }
        Ok(ForwardPass { inputs, pre_activations })
    }

    /// Mean squared error per sample: `(1/n)‖f(X) − Y‖²_F`.
    pub fn loss(&self, x: &DenseMatrix<T>, y: &DenseMatrix<T>) -> Result<T> {
        let out = self.forward(x)?;
        let diff = out.output().sub(y)?;
        Ok(diff.frobenius_norm().powi(2) / T::from_count(x.cols().max(1)))
    }

    /// Gradients of [`loss`](Self::loss) with respect to every weight matrix.
    pub fn backprop(&self, x: &DenseMatrix<T>, y: &DenseMatrix<T>) -> Result<Vec<DenseMatrix<T>>> {
        let pass = self.forward(x)?;
        check_dim("targets rows", self.output_dim(), y.rows())?;
        check_dim("targets cols", x.cols(), y.cols())?;
        let n = T::from_count(x.cols().max(1));
        let mut upstream = pass.output().sub(y)?.scale(T::c(2.0) / n);
        let mut grads = vec![DenseMatrix::zeros(0, 0); self.layers.len()];
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &pass.pre_activations[l];
            let dz = DenseMatrix::from_fn(z.rows(), z.cols(), |i, j| {
                upstream[(i, j)] * layer.activation.derivative(z[(i, j)])
            });
            grads[l] = dz.matmul(&pass.inputs[l].transpose())?;
            if l > 0 {
                upstream = layer.weights.transpose().matmul(&dz)?;
            }
        }
        Ok(grads)
    }

    /// Fraction of zero weights across all layers.
    pub fn sparsity(&self) -> f64 {
        let (zeros, total) = self.layers.iter().fold((0usize, 0usize), |(z, t), l| {
            let w = l.weights.as_slice();
            (z + w.iter().filter(|x| x.is_zero()).count(), t + w.len())
        });
        zeros as f64 / total.max(1) as f64
    }

    /// Model file: `layers=<L>`, then per layer `activation=<name>` followed
    /// by a matrix block.
    pub fn to_text(&self) -> String {
        let mut out = format!("layers={}\n", self.layers.len());
        for l in &self.layers {
            out.push_str(&format!("activation={}\n", l.activation));
            out.push_str(&format_matrix(&l.weights));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let mut pos = 0;
        let take = |pos: &mut usize| -> Result<&str> {
            let l = lines.get(*pos).ok_or_else(|| Error::Parse("truncated model file".into()))?;
            *pos += 1;
            Ok(l.trim())
        };
        let count: usize = take(&mut pos)?
            .strip_prefix("layers=")
            .ok_or_else(|| Error::Parse("model file must start with `layers=`".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("layer count: {e}")))?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let activation: Activation = take(&mut pos)?
                .strip_prefix("activation=")
                .ok_or_else(|| Error::Parse("expected `activation=`".into()))?
                .parse()?;
            let header = take(&mut pos)?;
            let rows: usize = header
                .split_whitespace()
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad matrix header {header:?}")))?;
            let mut block = format!("{header}\n");
            for _ in 0..rows {
                block.push_str(take(&mut pos)?);
                block.push('\n');
            }
            layers.push(DenseLayer { weights: parse_matrix(&block)?, activation });
        }
        if pos != lines.len() {
            return Err(Error::Parse("trailing content after last layer".into()));
        }
        Self::new(layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::testutil::random_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net(rng: &mut ChaCha8Rng) -> TinyMlp<f64> {
        TinyMlp::new(vec![
            DenseLayer { weights: random_matrix(rng, 5, 4), activation: Activation::Relu },
            DenseLayer { weights: random_matrix(rng, 3, 5), activation: Activation::Identity },
        ])
        .unwrap()
    }

    #[test]
    fn single_linear_layer_gradient_is_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let w = random_matrix(&mut rng, 2, 3);
        let x = random_matrix(&mut rng, 3, 7);
        let y = random_matrix(&mut rng, 2, 7);
        let mlp = TinyMlp::new(vec![DenseLayer { weights: w.clone(), activation: Activation::Identity }]).unwrap();
        let g = mlp.backprop(&x, &y).unwrap();
        let expected = w.matmul(&x).unwrap().sub(&y).unwrap().matmul(&x.transpose()).unwrap().scale(2.0 / 7.0);
        assert!(g[0].sub(&expected).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn zero_loss_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let mlp = net(&mut rng);
        let x = random_matrix(&mut rng, 4, 6);
        let y = mlp.forward(&x).unwrap().output().clone();
        assert_eq!(mlp.loss(&x, &y).unwrap(), 0.0);
        for g in mlp.backprop(&x, &y).unwrap() {
            assert_eq!(g.max_abs(), 0.0);
        }
    }

    #[test]
    fn shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mlp = net(&mut rng);
        assert!(mlp.forward(&random_matrix(&mut rng, 5, 2)).is_err());
        assert!(mlp.backprop(&random_matrix(&mut rng, 4, 2), &random_matrix(&mut rng, 2, 2)).is_err());
        assert!(TinyMlp::new(vec![
            DenseLayer { weights: random_matrix(&mut rng, 5, 4), activation: Activation::Relu },
            DenseLayer { weights: random_matrix(&mut rng, 3, 4), activation: Activation::Relu },
        ])
        .is_err());
    }

    #[test]
    fn model_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let mlp = net(&mut rng);
        let text = mlp.to_text();
        assert!(text.starts_with("layers=2\nactivation=relu\n5 4\n"));
        assert_eq!(TinyMlp::from_text(&text).unwrap(), mlp);
        assert!(TinyMlp::<f64>::from_text("layers=1\nactivation=tanh\n1 1\n1\n").is_err());
        assert!(TinyMlp::<f64>::from_text("layers=2\nactivation=relu\n1 1\n1\n").is_err());
    }
}

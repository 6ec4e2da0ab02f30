use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Fully connected layer computing `x W + b` for row-vector inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Shape `(inputs, outputs)`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Rectified-linear MLP with a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Parameter gradients, one `(dW, db)` pair per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Mlp {
    /// He-style uniform initialization: `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let bound = (6.0 / pair[0] as f64).sqrt();
                let w = Array2::from_shape_simple_fn((pair[0], pair[1]), || rng.random_range(-bound..bound));
                Dense { w, b: Array1::zeros(pair[1]) }
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let layers =
            sizes.windows(2).map(|p| Dense { w: Array2::zeros((p[0], p[1])), b: Array1::zeros(p[1]) }).collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Usage("an MLP needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.w.ncols() != l.b.len() {
                return Err(Error::Usage(format!("layer {i}: bias length {} vs {} outputs", l.b.len(), l.w.ncols())));
            }
            if let Some(next) = layers.get(i + 1) {
                if next.w.nrows() != l.w.ncols() {
                    return Err(Error::Usage(format!("layer {} expects {} inputs, got {}", i + 1, next.w.nrows(), l.w.ncols())));
                }
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    /// Widths from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.w.ncols()));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").w.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Usage(format!("observation has {} features, network expects {}", x.len(), self.input_dim())));
        }
        let mut a = x.to_vec();
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = l.b.to_vec();
            for (&xi, row) in a.iter().zip(l.w.rows()) {
                if xi == 0.0 {
                    continue;
                }
                match row.as_slice() {
                    Some(r) => z.iter_mut().zip(r).for_each(|(zj, &w)| *zj += xi * w),
                    None => z.iter_mut().zip(row.iter()).for_each(|(zj, &w)| *zj += xi * w),
                }
            }
            if i + 1 < self.layers.len() {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a = z;
        }
        Ok(a)
    }

    /// One output row per input row.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut a = self.layer_out(0, x);
        for i in 1..self.layers.len() {
            a = self.layer_out(i, a.view());
        }
        a
    }

    fn layer_out(&self, i: usize, x: ArrayView2<f64>) -> Array2<f64> {
        let l = &self.layers[i];
        let mut z = x.dot(&l.w);
        z += &l.b;
        if i + 1 < self.layers.len() {
            z.mapv_inplace(|v| v.max(0.0));
        }
        z
    }

    /// Forward pass keeping every layer input for [`Self::backward`].
    pub fn forward_cached(&self, x: ArrayView2<f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(x.to_owned());
        for i in 0..self.layers.len() - 1 {
            let next = self.layer_out(i, inputs[i].view());
            inputs.push(next);
        }
        let out = self.layer_out(self.layers.len() - 1, inputs.last().expect("input").view());
        (inputs, out)
    }

    /// Parameter gradients given the loss gradient with respect to the outputs.
    pub fn backward(&self, inputs: &[Array2<f64>], d_out: Array2<f64>) -> Grads {
        let n = self.layers.len();
        let mut grads = Vec::with_capacity(n);
        let mut delta = d_out;
        for i in (0..n).rev() {
            let a = &inputs[i];
            let gw = a.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].w.t());
                Zip::from(&mut back).and(a).for_each(|g, &x| {
                    if x <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = back;
            }
            grads.push((gw, gb));
        }
        grads.reverse();
        Grads { layers: grads }
    }

    /// All parameters in layer order, weights (row-major) before biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::Usage(format!("expected {} parameters, got {}", self.num_params(), params.len())));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|p| *p = *it.next().expect("length checked"));
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.sizes() == other.sizes()
    }
}

impl Grads {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Mean Huber loss between `q[i, actions[i]]` and `targets[i]`, with its
/// gradient with respect to `q`.
pub fn huber_loss(q: &Array2<f64>, actions: &[usize], targets: &[f64], delta: f64) -> (f64, Array2<f64>) {
    let n = q.nrows();
    let mut grad = Array2::zeros(q.raw_dim());
    let mut loss = 0.0;
    for i in 0..n {
        let err = q[[i, actions[i]]] - targets[i];
        if err.abs() <= delta {
            loss += 0.5 * err * err;
            grad[[i, actions[i]]] = err / n as f64;
        } else {
            loss += delta * (err.abs() - 0.5 * delta);
            grad[[i, actions[i]]] = delta * err.signum() / n as f64;
        }
    }
    (loss / n as f64, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::array;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[3, 4, 2]);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn hand_computed_forward() {
        // h = relu(x W1 + b1) = relu((1, 2) [[1, -1], [0.5, 1]] + (0, 0.5)) = relu((2, 1.5)) ; out = h W2 + b2
        let net = Mlp::from_layers(vec![
            Dense { w: array![[1.0, -1.0], [0.5, 1.0]], b: array![0.0, 0.5] },
            Dense { w: array![[1.0, 0.0], [-2.0, 1.0]], b: array![0.1, -0.1] },
        ])
        .unwrap();
        let out = net.forward(&[1.0, 2.0]).unwrap();
        assert!((out[0] - (2.0 - 3.0 + 0.1)).abs() < 1e-15);
        assert!((out[1] - (1.5 - 0.1)).abs() < 1e-15);
        // Negative pre-activation is clipped.
        let out = net.forward(&[-1.0, 0.0]).unwrap();
        assert_eq!(out, vec![0.1 - 2.0 * 1.5, 1.5 - 0.1]);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let net = Mlp::zeros(&[3, 2]);
        assert!(matches!(net.forward(&[1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn batch_consistency() {
        let mut rng = rng_from_seed(3);
        let net = Mlp::new(&[7, 32, 32, 3], &mut rng);
        let x = Array2::from_shape_simple_fn((128, 7), || rng.random_range(-2.0..2.0));
        let batch = net.forward_batch(x.view());
        for i in 0..128 {
            let row = net.forward(x.row(i).as_slice().unwrap()).unwrap();
            for j in 0..3 {
                assert!((row[j] - batch[[i, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn argmax_ties_lowest() {
        assert_eq!(argmax(&[0.9, 0.1, 0.2]), 0);
        assert_eq!(argmax(&[0.1, 0.9, 0.2]), 1);
        assert_eq!(argmax(&[0.5, 0.5, 0.5]), 0);
    }

    #[test]
    fn huber_matches_definition() {
        let q = array![[0.0, 0.5], [3.0, 0.0]];
        let (loss, grad) = huber_loss(&q, &[1, 0], &[0.0, 0.0], 1.0);
        assert!((loss - (0.5 * 0.25 + 2.5) / 2.0).abs() < 1e-15);
        assert_eq!(grad, array![[0.0, 0.25], [0.5, 0.0]]);
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = rng_from_seed(4);
        let net = Mlp::new(&[4, 8, 3], &mut rng);
        let mut other = Mlp::zeros(&[4, 8, 3]);
        other.set_flat_params(&net.flat_params()).unwrap();
        assert_eq!(net, other);
    }
}

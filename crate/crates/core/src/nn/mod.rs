//! Q-network, optimizer and Double-DQN training.

pub mod checkpoint;
mod dqn;
mod mlp;
mod optim;
mod replay;

pub use dqn::{
    config_hash, double_dqn_target, dqn_va_action, dqn_va_as_oa_action, epsilon, input_scale, train, update_target,
    validate_model, CurvePoint, DqnConfig, DqnModel, DqnVa, DqnVaAsOa, TrainInput, TrainOutcome,
};
pub use mlp::{argmax, huber_loss, Dense, Grads, Mlp};
pub use optim::{AdamW, AdamWConfig};
pub use replay::{ReplayBuffer, Transition};

/// Finite-difference check of the backward pass.
pub mod gradcheck {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::Array2;
    use rand::Rng as _;

    /// Largest relative error `|a - n| / max(|a|, |n|, 1e-6)` between backprop
    /// and central differences (step 1e-5) of the Huber loss on a random batch.
    pub fn max_relative_error(sizes: &[usize], seed: u64) -> f64 {
        let mut rng = rng_from_seed(seed);
        let mut net = Mlp::new(sizes, &mut rng);
        // Non-zero biases so every layer's bias gradient is exercised.
        for l in net.layers_mut() {
            l.b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
        let batch = 5;
        let x = Array2::from_shape_simple_fn((batch, sizes[0]), || rng.random_range(-1.0..1.0));
        let actions: Vec<usize> = (0..batch).map(|_| rng.random_range(0..*sizes.last().unwrap())).collect();
        let targets: Vec<f64> = (0..batch).map(|_| rng.random_range(-2.0..2.0)).collect();
        let loss = |n: &Mlp| huber_loss(&n.forward_batch(x.view()), &actions, &targets, 1.0).0;

        let (inputs, q) = net.forward_cached(x.view());
        let analytic = net.backward(&inputs, huber_loss(&q, &actions, &targets, 1.0).1).flat();
        let params = net.flat_params();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..params.len() {
            let mut p = params.clone();
            p[i] += h;
            net.set_flat_params(&p).unwrap();
            let up = loss(&net);
            p[i] -= 2.0 * h;
            net.set_flat_params(&p).unwrap();
            let down = loss(&net);
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
        }
        worst
    }

    #[cfg(test)]
    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            let err = max_relative_error(&[4, 8, 8, 3], seed);
            assert!(err < 1e-4, "seed {seed}: relative error {err}");
        }
    }
}

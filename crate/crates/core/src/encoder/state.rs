use ndarray::{Array2, ArrayView2, Zip};
use rand::Rng;

use crate::error::{AgeError, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// One trainable matrix with its Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamParam {
    pub value: Array2<f64>,
    pub m: Array2<f64>,
    pub v: Array2<f64>,
    pub step: u64,
}

impl AdamParam {
    pub fn new(value: Array2<f64>) -> Self {
        let shape = value.raw_dim();
        AdamParam {
            value,
            m: Array2::zeros(shape),
            v: Array2::zeros(shape),
            step: 0,
        }
    }

    /// Uniform initialization in `[-a, a]` with `a = sqrt(6 / (rows + cols))`.
    pub fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (rows + cols) as f64).sqrt();
        AdamParam::new(Array2::from_shape_fn((rows, cols), |_| rng.random_range(-a..=a)))
    }

    /// Bias-corrected Adam update.
    pub fn step(&mut self, grad: ArrayView2<'_, f64>, lr: f64) -> Result<()> {
        if grad.dim() != self.value.dim() {
            return Err(AgeError::Domain(format!(
                "gradient shape {:?} does not match parameter shape {:?}",
                grad.dim(),
                self.value.dim()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        Zip::from(&mut self.value)
            .and(&mut self.m)
            .and(&mut self.v)
            .and(&grad)
            .for_each(|w, m, v, &g| {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            });
        Ok(())
    }
}

/// Linear encoder weights `W` (d×h) with optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState {
    param: AdamParam,
}

impl EncoderState {
    pub fn new(input_dim: usize, width: usize, rng: &mut impl Rng) -> Self {
        EncoderState {
            param: AdamParam::glorot(input_dim, width, rng),
        }
    }

    pub fn from_weights(w: Array2<f64>) -> Self {
        EncoderState {
            param: AdamParam::new(w),
        }
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.param.value
    }

    pub fn adam_m(&self) -> &Array2<f64> {
        &self.param.m
    }

    pub fn adam_v(&self) -> &Array2<f64> {
        &self.param.v
    }

    pub fn step(&self) -> u64 {
        self.param.step
    }
}

/// One Adam step on the encoder weights.
pub fn adam_step(mut state: EncoderState, grad_w: ArrayView2<'_, f64>, lr: f64) -> Result<EncoderState> {
    state.param.step(grad_w, lr)?;
    Ok(state)
}

use crate::model::ModelParams;

/// Adam with bias-corrected first and second moments.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One update of `params` against `grad` (same shapes).
    pub fn step(&mut self, params: &mut ModelParams, grad: &ModelParams) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut k = 0;
        for (layer, g) in params.layers_mut().into_iter().zip(grad.layers()) {
            let pairs = layer
                .weights
                .iter_mut()
                .zip(&g.weights)
                .chain(layer.bias.iter_mut().zip(&g.bias));
            for (p, &gi) in pairs {
                let m = &mut self.m[k];
                let v = &mut self.v[k];
                *m = self.beta1 * *m + (1.0 - self.beta1) * gi;
                *v = self.beta2 * *v + (1.0 - self.beta2) * gi * gi;
                let update = (*m / c1) / ((*v / c2).sqrt() + self.epsilon);
                if self.learning_rate != 0.0 {
                    *p -= self.learning_rate * update;
                }
                k += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, Architecture, DecoderMode};
    use crate::rng;

    fn micro() -> Architecture {
        Architecture {
            input: 15,
            hidden1: 8,
            hidden2: 6,
            latent: 4,
        }
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut p = init_params(&mut rng::stream(1, 0), DecoderMode::Corrected, micro());
        let before = p.clone();
        let g = init_params(&mut rng::stream(2, 0), DecoderMode::Corrected, micro());
        let mut opt = Adam::new(p.n_params(), 0.0);
        for _ in 0..5 {
            opt.step(&mut p, &g);
        }
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = ModelParams::zeros(micro(), DecoderMode::Corrected);
        let mut g = ModelParams::zeros(micro(), DecoderMode::Corrected);
        g.encoder.layer1.weights[0] = 3.0;
        g.encoder.layer1.weights[1] = -0.02;
        let mut opt = Adam::new(p.n_params(), 1e-3);
        opt.step(&mut p, &g);
        assert!((p.encoder.layer1.weights[0] + 1e-3).abs() < 1e-10);
        assert!((p.encoder.layer1.weights[1] - 1e-3).abs() < 1e-9);
        assert_eq!(p.encoder.layer1.weights[2], 0.0);
    }
}

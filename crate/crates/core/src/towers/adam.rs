use serde::{Deserialize, Serialize};

use super::{Gradients, Scalar, TwoTower};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments kept in `f64`.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new<F: Scalar>(cfg: AdamConfig, model: &TwoTower<F>) -> Self {
        let n = model.param_count();
        Self {
            cfg,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step<F: Scalar>(&mut self, model: &mut TwoTower<F>, grads: &Gradients) {
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for (((p, g), m), v) in model.params_mut().zip(grads.iter()).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            if lr == 0.0 {
                continue;
            }
            let update = lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            *p = F::from_f64(p.as_f64() - update);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::towers::{Activation, Dense, Tower};

    fn scalar_model(w: f64) -> TwoTower<f64> {
        let t = |w| Tower::new(vec![Dense::new(1, 1, vec![w], vec![0.0], Activation::Identity).unwrap()]).unwrap();
        TwoTower::new(t(w), t(1.0)).unwrap()
    }

    fn grads_for(model: &TwoTower<f64>, g: f64) -> Gradients {
        let mut grads = Gradients::zeros_like(model);
        grads.request.layers[0].weight[0] = g;
        grads
    }

    #[test]
    fn first_step_moves_by_lr() {
        // bias correction makes the first update exactly lr * sign(g) up to eps
        let mut m = scalar_model(0.5);
        let mut opt = Adam::new(AdamConfig::default(), &m);
        let g = grads_for(&m, 0.3);
        opt.step(&mut m, &g);
        let w = m.request_tower().layers()[0].weight()[0];
        assert!((w - (0.5 - 1e-3)).abs() < 1e-9, "{w}");
    }

    #[test]
    fn zero_lr_is_a_no_op() {
        let mut m = scalar_model(0.5);
        let before = m.clone();
        let mut opt = Adam::new(
            AdamConfig {
                lr: 0.0,
                ..Default::default()
            },
            &m,
        );
        let g = grads_for(&m, 2.0);
        opt.step(&mut m, &g);
        assert_eq!(m, before);
    }

    #[test]
    fn descends_a_quadratic() {
        let mut m = scalar_model(3.0);
        let mut opt = Adam::new(
            AdamConfig {
                lr: 0.05,
                ..Default::default()
            },
            &m,
        );
        for _ in 0..2000 {
            let w = m.request_tower().layers()[0].weight()[0];
            let g = grads_for(&m, 2.0 * (w - 1.0));
            opt.step(&mut m, &g);
        }
        let w = m.request_tower().layers()[0].weight()[0];
        assert!((w - 1.0).abs() < 1e-2, "{w}");
    }
}

//! Adam optimizer over a [`ParamSet`].
//!
//! Moment buffers are flat vectors aligned with the set's insertion
//! order, the same layout `flatten_values` uses. Frozen parameters keep
//! zero moments and are never written.

use crate::autodiff::ParamSet;

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(scalar_count: usize, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            m: vec![0.0; scalar_count],
            v: vec![0.0; scalar_count],
            t: 0,
        }
    }

    pub fn config(&self) -> AdamConfig {
        self.cfg
    }

    /// Number of updates applied so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update from the gradients currently
    /// accumulated in `params`. Gradients are left as they are; callers
    /// zero them when starting the next accumulation.
    pub fn step(&mut self, params: &mut ParamSet) {
        assert_eq!(
            self.m.len(),
            params.scalar_count(),
            "optimizer was built for a different parameter set"
        );
        self.t += 1;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let grads = params.flatten_grads();
        let mut values = params.flatten_values();
        let mut off = 0;
        for (_, p) in params.iter() {
            let n = p.value().len();
            if p.trainable() {
                for i in off..off + n {
                    let mut g = grads[i];
                    if self.cfg.weight_decay != 0.0 {
                        g += self.cfg.weight_decay * values[i];
                    }
                    self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
                    self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    values[i] -= self.cfg.lr * m_hat / (v_hat.sqrt() + self.cfg.eps);
                }
            }
            off += n;
        }
        params.load_flat(&values);
    }
}

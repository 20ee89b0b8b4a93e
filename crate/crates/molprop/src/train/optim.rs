//! Adam and the warmup/decay learning-rate schedule.

/// Per-step learning rate: linear warmup from `init` to `max`, then
/// exponential decay reaching `final_lr` on the last step.
#[derive(Debug, Clone, Copy)]
pub struct LrSchedule {
    pub init: f64,
    pub max: f64,
    pub final_lr: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
}

impl LrSchedule {
    pub fn new(
        init: f64,
        max: f64,
        final_lr: f64,
        warmup_epochs: f64,
        epochs: usize,
        steps_per_epoch: usize,
    ) -> Self {
        let total_steps = (epochs * steps_per_epoch).max(1);
        let warmup_steps = ((warmup_epochs * steps_per_epoch as f64) as usize)
            .clamp(1, total_steps);
        LrSchedule {
            init,
            max,
            final_lr,
            warmup_steps,
            total_steps,
        }
    }

    pub fn lr(&self, step: usize) -> f64 {
        if step < self.warmup_steps {
            let frac = step as f64 / self.warmup_steps as f64;
            self.init + (self.max - self.init) * frac
        } else if step >= self.total_steps {
            self.final_lr
        } else {
            let frac = (step - self.warmup_steps) as f64
                / (self.total_steps - self.warmup_steps).max(1) as f64;
            self.max * (self.final_lr / self.max).powf(frac)
        }
    }
}

/// Adam with bias correction; one slot pair per parameter tensor.
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(sizes: &[usize]) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub fn step(&mut self, lr: f64, params: &mut [&mut Vec<f64>], grads: &[&[f64]]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            debug_assert_eq!(p.len(), g.len());
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_endpoints() {
        let s = LrSchedule::new(1e-4, 1e-3, 1e-4, 2.0, 30, 19);
        assert!((s.lr(0) - 1e-4).abs() < 1e-12);
        // End of warmup hits max.
        assert!((s.lr(s.warmup_steps) - 1e-3).abs() < 1e-9);
        // Final step decays to final_lr.
        let last = s.lr(s.total_steps - 1);
        assert!(last <= 1.05e-4 && last > 9e-5, "last lr {last}");
        assert_eq!(s.lr(s.total_steps + 100), 1e-4);
        // Monotone decay after warmup.
        for step in s.warmup_steps..s.total_steps - 1 {
            assert!(s.lr(step) >= s.lr(step + 1));
        }
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        // f(x) = sum((x - 3)^2)
        let mut x = vec![0.0; 4];
        let mut adam = Adam::new(&[4]);
        for _ in 0..2000 {
            let g: Vec<f64> = x.iter().map(|v| 2.0 * (v - 3.0)).collect();
            adam.step(0.05, &mut [&mut x], &[&g]);
        }
        for v in &x {
            assert!((v - 3.0).abs() < 1e-3, "{v}");
        }
    }
}

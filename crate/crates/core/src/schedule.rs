//! Training hyperparameters and the warmup + cosine learning-rate schedule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pretraining hyperparameters. Defaults are the domain-adaptation run's
/// settings (AdamW, lr 1e-4, 8% warmup, cosine decay, 16 x 4 batch, 2 epochs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_peak: f64,
    pub warmup_frac: f64,
    pub total_steps: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub batch_size: u64,
    pub grad_accum: u64,
    pub epochs: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_peak: 1e-4,
            warmup_frac: 0.08,
            total_steps: 1,
            beta1: 0.9,
            beta2: 0.98,
            epsilon: 1e-6,
            weight_decay: 0.01,
            batch_size: 16,
            grad_accum: 4,
            epochs: 2,
        }
    }
}

impl TrainConfig {
    pub fn with_total_steps(total_steps: u64) -> Self {
        TrainConfig {
            total_steps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(0.0..1.0).contains(&self.warmup_frac) {
            return fail("warmup_frac must lie in [0, 1)");
        }
        if !(self.lr_peak > 0.0) {
            return fail("lr_peak must be positive");
        }
        if self.total_steps == 0 {
            return fail("total_steps must be at least 1");
        }
        if !(0.0 < self.beta1 && self.beta1 < self.beta2 && self.beta2 < 1.0) {
            return fail("betas must satisfy 0 < beta1 < beta2 < 1");
        }
        if !(self.epsilon > 0.0) {
            return fail("epsilon must be positive");
        }
        Ok(())
    }

    /// `round(warmup_frac * total_steps)`, halves rounding up.
    pub fn warmup_steps(&self) -> u64 {
        (self.warmup_frac * self.total_steps as f64).round() as u64
    }

    /// Optimizer steps needed for `epochs` passes over `examples` examples.
    pub fn steps_for(&self, examples: u64) -> u64 {
        let per_epoch = examples.div_ceil(effective_batch(self).max(1));
        per_epoch * self.epochs
    }
}

pub fn effective_batch(config: &TrainConfig) -> u64 {
    config.batch_size * config.grad_accum
}

/// Learning rate after `step` optimizer steps: linear warmup from 0 to the
/// peak, then half-cosine decay to exactly 0 at `total_steps`.
pub fn lr_at(step: u64, config: &TrainConfig) -> Result<f64> {
    let total = config.total_steps;
    if step > total {
        return Err(Error::StepOutOfRange {
            step,
            total_steps: total,
        });
    }
    if step == total {
        return Ok(0.0);
    }
    let warmup = config.warmup_steps();
    if step < warmup {
        return Ok(config.lr_peak * step as f64 / warmup as f64);
    }
    let progress = (step - warmup) as f64 / (total - warmup) as f64;
    Ok(config.lr_peak * 0.5 * (1.0 + (PI * progress).cos()))
}

/// `resolution` evenly spaced `(step, lr)` samples over `[0, total_steps]`.
pub fn emit_schedule(config: &TrainConfig, resolution: usize) -> Result<Vec<(u64, f64)>> {
    config.validate()?;
    if resolution < 2 {
        return Err(Error::InvalidConfig("resolution must be at least 2".into()));
    }
    let total = config.total_steps;
    (0..resolution)
        .map(|i| {
            let step = ((i as u128 * total as u128 + (resolution as u128 - 1) / 2)
                / (resolution as u128 - 1)) as u64;
            lr_at(step, config).map(|lr| (step, lr))
        })
        .collect()
}

pub fn write_schedule_csv<W: std::io::Write>(rows: &[(u64, f64)], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["step", "lr"])?;
    for (step, lr) in rows {
        writer.write_record([step.to_string(), format!("{lr:e}")])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_hyperparameters() {
        let c = TrainConfig::default();
        assert_eq!(c.lr_peak, 1e-4);
        assert_eq!(c.warmup_frac, 0.08);
        assert_eq!((c.beta1, c.beta2, c.epsilon), (0.9, 0.98, 1e-6));
        assert_eq!(c.weight_decay, 0.01);
        assert_eq!(c.epochs, 2);
        assert_eq!(effective_batch(&c), 64);
    }

    #[test]
    fn effective_batch_products() {
        let mk = |b, a| TrainConfig { batch_size: b, grad_accum: a, ..Default::default() };
        assert_eq!(effective_batch(&mk(1, 1)), 1);
        assert_eq!(effective_batch(&mk(8, 3)), 24);
    }

    #[test]
    fn schedule_landmarks() {
        let c = TrainConfig::with_total_steps(1000);
        assert_eq!(c.warmup_steps(), 80);
        assert_eq!(lr_at(0, &c).unwrap(), 0.0);
        assert_eq!(lr_at(80, &c).unwrap(), 1e-4);
        assert_eq!(lr_at(1000, &c).unwrap(), 0.0);
        let mid = lr_at(80 + 460, &c).unwrap();
        assert!((mid - 5e-5).abs() <= 1e-12 * 5e-5);
        assert!(matches!(lr_at(1001, &c), Err(Error::StepOutOfRange { .. })));
    }

    #[test]
    fn warmup_rounds_half_up() {
        // 0.5 * 25 = 12.5 -> 13
        let c = TrainConfig { warmup_frac: 0.5, total_steps: 25, ..Default::default() };
        assert_eq!(c.warmup_steps(), 13);
    }

    #[test]
    fn no_warmup_starts_at_peak() {
        let c = TrainConfig { warmup_frac: 0.0, total_steps: 10, ..Default::default() };
        assert_eq!(lr_at(0, &c).unwrap(), 1e-4);
    }

    #[test]
    fn resolution_two_is_the_endpoints() {
        let c = TrainConfig::with_total_steps(1000);
        assert_eq!(emit_schedule(&c, 2).unwrap(), vec![(0, 0.0), (1000, 0.0)]);
        assert!(emit_schedule(&c, 1).is_err());
    }

    #[test]
    fn peak_sampled_at_warmup_end() {
        let c = TrainConfig::with_total_steps(1000);
        let rows = emit_schedule(&c, 1001).unwrap();
        let (step, lr) = rows
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_eq!(step, 80);
        assert_eq!(lr, 1e-4);
    }

    #[test]
    fn steps_for_examples() {
        let c = TrainConfig::default();
        assert_eq!(c.steps_for(128), 4);
        assert_eq!(c.steps_for(129), 6);
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        write_schedule_csv(&[(0, 0.0), (5, 1e-4)], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,lr\n0,0e0\n5,1e-4\n");
    }

    #[test]
    fn invalid_configs() {
        let bad = TrainConfig { beta1: 0.99, ..TrainConfig::with_total_steps(10) };
        assert!(bad.validate().is_err());
        let bad = TrainConfig { warmup_frac: 1.0, ..TrainConfig::with_total_steps(10) };
        assert!(bad.validate().is_err());
        assert!(TrainConfig::with_total_steps(0).validate().is_err());
    }
}

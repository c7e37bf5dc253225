//! Uniformly sampled time series.

use crate::error::{Error, Result};

/// Uniformly sampled real signal with its sample rate and start time.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrace {
    pub values: Vec<f64>,
    pub sample_rate: f64,
    pub t0: f64,
}

impl SampledTrace {
    pub fn new(values: Vec<f64>, sample_rate: f64, t0: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidParams(format!(
                "sample_rate must be > 0, got {sample_rate}"
            )));
        }
        Ok(Self {
            values,
            sample_rate,
            t0,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    /// Integer samples per cycle at frequency `f`, if the ratio is integral.
    pub fn samples_per_cycle(&self, f: f64) -> Option<usize> {
        let ratio = self.sample_rate / f;
        let rounded = ratio.round();
        if rounded >= 1.0 && (ratio - rounded).abs() < 1e-6 * ratio.abs() {
            Some(rounded as usize)
        } else {
            None
        }
    }

    /// Trailing portion covering the last `n` whole samples.
    pub fn tail_samples(&self, n: usize) -> Result<SampledTrace> {
        if n > self.len() {
            return Err(Error::InsufficientSamples(format!(
                "need {n} samples, have {}",
                self.len()
            )));
        }
        let start = self.len() - n;
        Ok(SampledTrace {
            values: self.values[start..].to_vec(),
            sample_rate: self.sample_rate,
            t0: self.time(start),
        })
    }

    /// Portion starting at the first sample with time >= `t_from`.
    pub fn from_time(&self, t_from: f64) -> Result<SampledTrace> {
        let k = ((t_from - self.t0) * self.sample_rate).ceil().max(0.0) as usize;
        if k >= self.len() {
            return Err(Error::InsufficientSamples(format!(
                "trace ends at t = {} s, requested start {t_from} s",
                self.time(self.len().saturating_sub(1))
            )));
        }
        Ok(SampledTrace {
            values: self.values[k..].to_vec(),
            sample_rate: self.sample_rate,
            t0: self.time(k),
        })
    }

    /// Resample to a slower sensor rate with a zero-order hold: each output
    /// sample latches the nearest fine-grid sample at or before its instant.
    pub fn resample_zoh(&self, target_rate: f64) -> Result<SampledTrace> {
        if !(target_rate.is_finite() && target_rate > 0.0) {
            return Err(Error::InvalidParams(format!(
                "target_rate must be > 0, got {target_rate}"
            )));
        }
        let t_last = self.time(self.len().saturating_sub(1));
        let mut values = Vec::new();
        let mut k = 0usize;
        loop {
            let t = self.t0 + k as f64 / target_rate;
            if t > t_last + 1e-12 / target_rate {
                break;
            }
            let idx = ((t - self.t0) * self.sample_rate + 1e-9).floor() as usize;
            values.push(self.values[idx.min(self.len() - 1)]);
            k += 1;
        }
        SampledTrace::new(values, target_rate, self.t0)
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform integration grid on `[0, horizon]` with a coarser record stride.
///
/// Integrators step over every node; outputs are stored only on record nodes
/// (every `record_stride`-th node plus the final node).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    horizon: f64,
    steps: usize,
    record_stride: usize,
}

impl SimGrid {
    /// Grid with step at most `dt`. When `horizon/dt` is within rounding of an
    /// integer the step is kept exactly.
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::param("horizon", "must be finite and > 0"));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::param("dt", "must be finite and > 0"));
        }
        let ratio = horizon / dt;
        let nearest = ratio.round();
        let steps = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest
        } else {
            ratio.ceil()
        };
        let steps = (steps as usize).max(1);
        Ok(Self {
            horizon,
            steps,
            record_stride: 1,
        })
    }

    /// Record roughly every `interval` time units.
    pub fn with_record_interval(mut self, interval: f64) -> Result<Self> {
        if !interval.is_finite() || interval <= 0.0 {
            return Err(Error::param("record_interval", "must be finite and > 0"));
        }
        self.record_stride = ((interval / self.dt()).round() as usize).clamp(1, self.steps);
        Ok(self)
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.clamp(1, self.steps);
        self
    }

    /// Same horizon and record times, half the step.
    pub fn refined(&self) -> Self {
        Self {
            horizon: self.horizon,
            steps: self.steps * 2,
            record_stride: self.record_stride * 2,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn record_stride(&self) -> usize {
        self.record_stride
    }

    pub fn time(&self, node: usize) -> f64 {
        if node == self.steps {
            self.horizon
        } else {
            node as f64 * self.dt()
        }
    }

    pub fn is_record(&self, node: usize) -> bool {
        node.is_multiple_of(self.record_stride) || node == self.steps
    }

    pub fn record_nodes(&self) -> Vec<usize> {
        (0..=self.steps).filter(|&n| self.is_record(n)).collect()
    }

    pub fn record_times(&self) -> Vec<f64> {
        self.record_nodes().into_iter().map(|n| self.time(n)).collect()
    }

    pub fn same_nodes(&self, other: &SimGrid) -> bool {
        self.steps == other.steps && self.horizon == other.horizon
    }
}

/// Default step for a pulse with period `tau` and duration `delta`:
/// `min(Δ/20, τ/100, 0.01)`.
pub fn auto_dt(tau: f64, delta: f64) -> f64 {
    (delta / 20.0).min(tau / 100.0).min(0.01)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_division_kept() {
        let g = SimGrid::new(40.0, 0.0002).unwrap();
        assert_eq!(g.steps(), 200_000);
        let g = SimGrid::new(1.0, 0.3).unwrap();
        assert_eq!(g.steps(), 4);
        assert!(g.dt() <= 0.3);
        assert_eq!(g.time(4), 1.0);
    }

    #[test]
    fn record_nodes_include_ends() {
        let g = SimGrid::new(1.0, 0.1).unwrap().with_record_stride(3);
        assert_eq!(g.record_nodes(), vec![0, 3, 6, 9, 10]);
        let r = g.refined();
        assert_eq!(r.steps(), 20);
        assert_eq!(r.record_times(), g.record_times());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SimGrid::new(0.0, 0.1).is_err());
        assert!(SimGrid::new(1.0, -0.1).is_err());
        assert!(SimGrid::new(1.0, 0.1).unwrap().with_record_interval(0.0).is_err());
    }

    #[test]
    fn auto_dt_rule() {
        assert_eq!(auto_dt(0.02, 0.012), 0.0002);
        assert_eq!(auto_dt(10.0, 10.0), 0.01);
        assert!((auto_dt(1.0, 0.05) - 0.0025).abs() < 1e-15);
    }
}

//! Two-stage EWMA throughput predictor.
//!
//! The level follows the observed throughput with weight `beta` and the
//! drift follows its first difference with weight `alpha`; the prediction is
//! their sum, floored at a configurable minimum.

pub const DEFAULT_ALPHA: f64 = 0.4;
pub const DEFAULT_BETA: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct EwmaPredictor {
    alpha: f64,
    beta: f64,
    floor: f64,
    level: Option<f64>,
    drift: f64,
    last: Option<f64>,
}

/// One update from the previous estimate `(level, drift)` and the two most
/// recent observations `c2` (older) and `c1`. Returns the new
/// `(drift, smoothed level, prediction)`.
pub fn ewma_step(alpha: f64, beta: f64, level: f64, drift: f64, c2: f64, c1: f64) -> (f64, f64, f64) {
    let drift = (1.0 - alpha) * drift + alpha * (c1 - c2);
    let smoothed = (1.0 - beta) * level + beta * c1;
    (drift, smoothed, smoothed + drift)
}

impl EwmaPredictor {
    pub fn new(alpha: f64, beta: f64, floor: f64) -> Self {
        Self {
            alpha,
            beta,
            floor,
            level: None,
            drift: 0.0,
            last: None,
        }
    }

    pub fn observe(&mut self, throughput: f64) {
        match (self.level, self.last) {
            (Some(level), Some(last)) => {
                let (drift, _, next) = ewma_step(self.alpha, self.beta, level, self.drift, last, throughput);
                self.drift = drift;
                self.level = Some(next.max(self.floor));
            }
            _ => {
                self.level = Some(throughput.max(self.floor));
                self.drift = 0.0;
            }
        }
        self.last = Some(throughput);
    }

    /// Prediction for the next segment; `None` before any observation.
    pub fn predict(&self) -> Option<f64> {
        self.level
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn samples_seen(&self) -> bool {
        self.last.is_some()
    }
}

impl Default for EwmaPredictor {
    fn default() -> Self {
        Self::new(DEFAULT_ALPHA, DEFAULT_BETA, 0.0)
    }
}

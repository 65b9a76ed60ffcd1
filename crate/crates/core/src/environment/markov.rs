//! Finite-state Markov bandwidth model.
//!
//! Interior rows keep the current state with probability `1 - p_c`, move one
//! state up or down with `p_c/3` each and two states with `p_c/6` each.
//! Transitions that would leave the state set are folded into the diagonal.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EnvironmentError, process_rng};

/// Bandwidth levels in kbps used by the reference scenarios.
pub const REFERENCE_STATES_KBPS: [f64; 9] = [
    600.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 6000.0, 8000.0, 10000.0,
];

/// Stream id of the channel generator within a seeded run.
pub const CHANNEL_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct MarkovChannel {
    states: Vec<f64>,
    p_c: f64,
    matrix: Vec<Vec<f64>>,
    current: usize,
    rng: ChaCha8Rng,
}

/// Transition matrix for `n` states and activity `p_c`.
pub fn transition_matrix(n: usize, p_c: f64) -> Vec<Vec<f64>> {
    let moves: [(isize, f64); 4] = [(-2, p_c / 6.0), (-1, p_c / 3.0), (1, p_c / 3.0), (2, p_c / 6.0)];
    (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            let mut stay = 1.0;
            for (off, p) in moves {
                let j = i as isize + off;
                if (0..n as isize).contains(&j) {
                    row[j as usize] = p;
                    stay -= p;
                }
            }
            row[i] = stay;
            row
        })
        .collect()
}

impl MarkovChannel {
    /// The initial state is drawn uniformly from the state set.
    pub fn new(states: Vec<f64>, p_c: f64, seed: u64) -> Result<Self, EnvironmentError> {
        if states.is_empty() || states.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(EnvironmentError::Invalid("states must be positive and non-empty".into()));
        }
        if !(0.0..=1.0).contains(&p_c) {
            return Err(EnvironmentError::Invalid(format!("p_c {p_c} outside [0, 1]")));
        }
        let mut rng = process_rng(seed, CHANNEL_STREAM);
        let current = rng.random_range(0..states.len());
        Ok(Self {
            matrix: transition_matrix(states.len(), p_c),
            states,
            p_c,
            current,
            rng,
        })
    }

    pub fn reference(p_c: f64, seed: u64) -> Result<Self, EnvironmentError> {
        Self::new(REFERENCE_STATES_KBPS.to_vec(), p_c, seed)
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn p_c(&self) -> f64 {
        self.p_c
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn state(&self) -> usize {
        self.current
    }

    pub fn bandwidth(&self) -> f64 {
        self.states[self.current]
    }

    /// Moves to the next state and returns its bandwidth.
    pub fn step(&mut self) -> f64 {
        let u: f64 = self.rng.random();
        let row = &self.matrix[self.current];
        let mut acc = 0.0;
        let mut next = row.len() - 1;
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = j;
                break;
            }
        }
        self.current = next;
        self.bandwidth()
    }

    /// Stationary distribution by power iteration.
    pub fn stationary(&self) -> Vec<f64> {
        let n = self.states.len();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..100_000 {
            let mut next = vec![0.0; n];
            for (i, row) in self.matrix.iter().enumerate() {
                for (j, p) in row.iter().enumerate() {
                    next[j] += pi[i] * p;
                }
            }
            let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if diff < 1e-15 {
                break;
            }
        }
        pi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_row_at_0_6() {
        let m = transition_matrix(9, 0.6);
        let row = &m[4];
        let expect = [0.0, 0.0, 0.1, 0.2, 0.4, 0.2, 0.1, 0.0, 0.0];
        for (a, b) in row.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_rows_fold_into_stay() {
        let m = transition_matrix(9, 0.9);
        assert!((m[0][0] - (1.0 - 0.3 - 0.15)).abs() < 1e-15);
        assert!((m[1][1] - (1.0 - 0.9 + 0.15)).abs() < 1e-15);
        for row in &m {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn frozen_chain() {
        let mut c = MarkovChannel::reference(0.0, 7).unwrap();
        let b = c.bandwidth();
        assert!((0..1000).all(|_| c.step() == b));
    }

    #[test]
    fn seeded_runs_repeat() {
        let mut a = MarkovChannel::reference(0.5, 42).unwrap();
        let mut b = MarkovChannel::reference(0.5, 42).unwrap();
        for _ in 0..500 {
            assert_eq!(a.step(), b.step());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(MarkovChannel::reference(1.5, 0).is_err());
        assert!(MarkovChannel::new(vec![], 0.5, 0).is_err());
        assert!(MarkovChannel::new(vec![1000.0, -1.0], 0.5, 0).is_err());
    }
}

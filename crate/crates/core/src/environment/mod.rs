//! Channels, throughput prediction and user navigation.
//!
//! Every stochastic process draws from its own ChaCha8 stream derived from
//! the run seed, so channel and navigation samples are reproducible
//! independently of each other and across platforms.

pub mod ewma;
pub mod markov;
pub mod navigation;
pub mod trace;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::catalog::{NavigationWindow, ViewpointGrid};

pub use ewma::EwmaPredictor;
pub use markov::MarkovChannel;
pub use navigation::{NavigationKind, NavigationModel};
pub use trace::{convert_neubot, BandwidthTrace};

/// Maximum switching speed in views per second used when none is given.
pub const DEFAULT_RHO: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvironmentError {
    #[error("{0}")]
    Invalid(String),
    #[error("trace: {0}")]
    Trace(String),
}

pub(crate) fn process_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Viewpoints reachable within `lookahead_s` from grid index `u`:
/// `[u - ρT, u + ρT]` rounded outward to the grid and clipped to it.
pub fn window_for(u: u32, rho: f64, lookahead_s: f64, grid: &ViewpointGrid) -> NavigationWindow {
    let reach = (rho * lookahead_s).max(0.0);
    let c = grid.viewpoint(u);
    NavigationWindow::snapped(grid, c - reach, c + reach)
        .expect("finite window around an on-grid viewpoint")
}

/// Where a session's bandwidth comes from.
#[derive(Debug, Clone)]
pub enum Channel {
    /// State changes once per downloaded segment.
    Markov(MarkovChannel),
    Trace(BandwidthTrace),
}

impl Channel {
    /// Bandwidth seen by a probe at wall-clock time `t`.
    pub fn bandwidth_at(&self, t: f64) -> f64 {
        match self {
            Channel::Markov(m) => m.bandwidth(),
            Channel::Trace(tr) => tr.bandwidth_at(t),
        }
    }

    /// Download time of `kbits` starting at `t`.
    pub fn download_time(&self, t: f64, kbits: f64) -> f64 {
        match self {
            Channel::Markov(m) => kbits / m.bandwidth(),
            Channel::Trace(tr) => tr.download_time(t, kbits),
        }
    }

    /// Called once after every segment.
    pub fn end_segment(&mut self) {
        if let Channel::Markov(m) = self {
            m.step();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_examples() {
        let g = ViewpointGrid::new(10, 0.1).unwrap();
        let at = |u: f64| g.index_of(u).unwrap();
        let w = window_for(at(6.0), 0.25, 2.0, &g);
        assert_eq!((w.u_left(&g), w.u_right(&g)), (5.5, 6.5));
        let w = window_for(at(6.0), 0.0, 2.0, &g);
        assert_eq!((w.left, w.right), (at(6.0), at(6.0)));
        let w = window_for(at(1.2), 0.25, 2.0, &g);
        assert_eq!((w.u_left(&g), w.u_right(&g)), (1.0, 1.7));
    }

    #[test]
    fn streams_are_independent() {
        use rand::Rng;
        let mut a = process_rng(5, 1);
        let mut b = process_rng(5, 2);
        let x: u64 = a.random();
        let y: u64 = b.random();
        assert_ne!(x, y);
        assert_eq!(x, process_rng(5, 1).random::<u64>());
    }
}

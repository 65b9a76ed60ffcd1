//! Random-walk user navigation on the viewpoint grid.
//!
//! Each step the user stays with probability `p_n` and otherwise moves one
//! grid step left or right with equal probability. A move that would leave
//! the grid is reflected.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{process_rng, EnvironmentError};
use crate::catalog::ViewpointGrid;

/// Stream id of the navigation generator within a seeded run.
pub const NAVIGATION_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavigationKind {
    Static,
    Uniform,
    /// Stay probability `p_n`.
    NonUniform(f64),
}

impl NavigationKind {
    pub fn stay_probability(&self) -> f64 {
        match self {
            NavigationKind::Static => 1.0,
            NavigationKind::Uniform => 1.0 / 3.0,
            NavigationKind::NonUniform(p) => *p,
        }
    }
}

impl fmt::Display for NavigationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NavigationKind::Static => f.write_str("static"),
            NavigationKind::Uniform => f.write_str("uniform"),
            NavigationKind::NonUniform(p) => write!(f, "nonuniform:{p}"),
        }
    }
}

/// Accepts `static`, `uniform` and `nonuniform:<p_n>`.
impl FromStr for NavigationKind {
    type Err = EnvironmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "static" => Ok(NavigationKind::Static),
            "uniform" => Ok(NavigationKind::Uniform),
            _ => {
                let p = s
                    .strip_prefix("nonuniform:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| {
                        EnvironmentError::Invalid(format!(
                            "navigation `{s}` (expected static|uniform|nonuniform:<p>)"
                        ))
                    })?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(EnvironmentError::Invalid(format!("p_n {p} outside [0, 1]")));
                }
                Ok(NavigationKind::NonUniform(p))
            }
        }
    }
}

/// Grid steps taken per segment: `⌊ρτ/Δ⌋`.
pub fn steps_per_segment(rho: f64, tau: f64, grid: &ViewpointGrid) -> u32 {
    ((rho * tau * grid.steps_per_view() as f64) + 1e-9).floor().max(0.0) as u32
}

#[derive(Debug, Clone)]
pub struct NavigationModel {
    kind: NavigationKind,
    max_index: u32,
    position: u32,
    steps_per_segment: u32,
    rng: ChaCha8Rng,
}

impl NavigationModel {
    pub fn new(
        kind: NavigationKind,
        grid: &ViewpointGrid,
        start_index: u32,
        steps_per_segment: u32,
        seed: u64,
    ) -> Result<Self, EnvironmentError> {
        if start_index > grid.max_index() {
            return Err(EnvironmentError::Invalid(format!(
                "start viewpoint {} outside the grid",
                grid.viewpoint(start_index)
            )));
        }
        Ok(Self {
            kind,
            max_index: grid.max_index(),
            position: start_index,
            steps_per_segment,
            rng: process_rng(seed, NAVIGATION_STREAM),
        })
    }

    pub fn kind(&self) -> NavigationKind {
        self.kind
    }

    pub fn position(&self) -> u32 {
        self.position
    }

    /// One grid step; returns the move taken (-1, 0 or +1) before
    /// reflection.
    pub fn step(&mut self) -> i32 {
        let p_stay = self.kind.stay_probability();
        if p_stay >= 1.0 {
            return 0;
        }
        let u: f64 = self.rng.random();
        let mv = if u < p_stay {
            0
        } else if u < p_stay + (1.0 - p_stay) / 2.0 {
            -1
        } else {
            1
        };
        let target = self.position as i64 + mv as i64;
        self.position = if self.max_index == 0 {
            0
        } else if target < 0 {
            1
        } else if target > self.max_index as i64 {
            self.max_index - 1
        } else {
            target as u32
        };
        mv
    }

    /// Walks through one segment and returns the final position.
    pub fn advance_segment(&mut self) -> u32 {
        for _ in 0..self.steps_per_segment {
            self.step();
        }
        self.position
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ViewpointGrid {
        ViewpointGrid::new(10, 0.1).unwrap()
    }

    #[test]
    fn static_user_stays() {
        let g = grid();
        let mut m = NavigationModel::new(NavigationKind::NonUniform(1.0), &g, 50, 5, 1).unwrap();
        for _ in 0..100 {
            assert_eq!(m.advance_segment(), 50);
        }
        let mut m = NavigationModel::new(NavigationKind::Static, &g, 50, 5, 1).unwrap();
        assert_eq!(m.advance_segment(), 50);
    }

    #[test]
    fn reflection_keeps_on_grid() {
        let g = grid();
        let mut m = NavigationModel::new(NavigationKind::NonUniform(0.0), &g, 0, 5, 9).unwrap();
        for _ in 0..10_000 {
            m.step();
            assert!(m.position() <= g.max_index());
        }
    }

    #[test]
    fn default_walk_speed() {
        assert_eq!(steps_per_segment(0.25, 2.0, &grid()), 5);
        assert_eq!(steps_per_segment(0.0, 2.0, &grid()), 0);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("uniform".parse::<NavigationKind>().unwrap(), NavigationKind::Uniform);
        assert_eq!(
            "nonuniform:0.6".parse::<NavigationKind>().unwrap(),
            NavigationKind::NonUniform(0.6)
        );
        assert!("nonuniform:2".parse::<NavigationKind>().is_err());
        assert!("walk".parse::<NavigationKind>().is_err());
        for k in [NavigationKind::Static, NavigationKind::Uniform, NavigationKind::NonUniform(0.25)] {
            assert_eq!(k.to_string().parse::<NavigationKind>().unwrap(), k);
        }
    }
}

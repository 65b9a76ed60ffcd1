//! Representation selection and session simulation for interactive
//! multiview video streaming.
//!
//! A client navigating between camera viewpoints downloads a subset of the
//! (camera, rate) representations stored at the server and synthesizes the
//! viewpoints in between. This crate scores such subsets, picks them under a
//! bandwidth budget (optimal, greedy and three reference logics), and replays
//! whole streaming sessions against simulated channels and users.

pub mod baselines;
pub mod catalog;
pub mod distortion;
pub mod dp;
pub mod environment;
pub mod experiment;
pub mod greedy;
pub mod oracle;
pub mod select;
pub mod session;

pub use catalog::{Catalog, CatalogError, NavigationWindow, Representation, VideoProfile, ViewpointGrid};
pub use distortion::DownloadPlan;
pub use select::{decide, solve, Algorithm, Decision, SolveError};

//! Segment-by-segment streaming session.
//!
//! For every segment the client predicts the bandwidth, centres the
//! navigation window on the last displayed viewpoint, asks the configured
//! algorithm for a plan under the predicted budget, downloads it over the
//! simulated channel and updates the playout buffer. The next request is
//! scheduled `T̂ = Σr·τ/Ĉ + κ(B - B0)` after this one (never earlier than
//! the download finishing, never so late that the buffer runs dry).

use std::fmt::Write as _;

use thiserror::Error;

use crate::catalog::{Catalog, VideoProfile};
use crate::environment::ewma::{DEFAULT_ALPHA, DEFAULT_BETA};
use crate::environment::{window_for, Channel, EwmaPredictor, NavigationModel, DEFAULT_RHO};
use crate::select::{decide, Algorithm, SolveError, SENTINEL_DISTORTION};

pub const SEGMENT_CSV_HEADER: &str =
    "n,algo,views,rates_kbps,total_rate,pred_kbps,real_kbps,dl_time_s,buffer_s,distortion,sentinel";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionMode {
    /// Two-stage EWMA over realized throughputs.
    Ewma,
    /// The channel's bandwidth at request time.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub algo: Algorithm,
    /// τ, seconds.
    pub segment_duration: f64,
    /// ℓ: the window covers `ℓτ` seconds of navigation.
    pub lookahead_segments: u32,
    /// B0, seconds.
    pub buffer_reference: f64,
    pub kappa: f64,
    pub num_segments: usize,
    /// Maximum switching speed, views per second.
    pub rho: f64,
    pub prediction: PredictionMode,
    pub ewma_alpha: f64,
    pub ewma_beta: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            algo: Algorithm::Optimal,
            segment_duration: 2.0,
            lookahead_segments: 1,
            buffer_reference: 20.0,
            kappa: 0.1,
            num_segments: 50,
            rho: DEFAULT_RHO,
            prediction: PredictionMode::Ewma,
            ewma_alpha: DEFAULT_ALPHA,
            ewma_beta: DEFAULT_BETA,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: &str| Err(SessionError::Config(m.to_string()));
        if !(self.segment_duration.is_finite() && self.segment_duration > 0.0) {
            return bad("segment duration must be positive");
        }
        if self.lookahead_segments == 0 {
            return bad("lookahead must be at least one segment");
        }
        if !(self.buffer_reference.is_finite() && self.buffer_reference > 0.0) {
            return bad("buffer reference must be positive");
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return bad("kappa must be non-negative");
        }
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return bad("rho must be non-negative");
        }
        if self.num_segments == 0 {
            return bad("need at least one segment");
        }
        for (name, g) in [("alpha", self.ewma_alpha), ("beta", self.ewma_beta)] {
            if !(0.0..=1.0).contains(&g) {
                return bad(&format!("EWMA {name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn lookahead_s(&self) -> f64 {
        self.segment_duration * self.lookahead_segments as f64
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("segment {segment}: {source}")]
    Segment { segment: usize, source: SolveError },
}

/// The stochastic processes a session runs against.
#[derive(Debug, Clone)]
pub struct Environment {
    pub channel: Channel,
    pub navigation: NavigationModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    /// 1-based.
    pub n: usize,
    /// Grid index the window was centred on.
    pub center: u32,
    pub views: Vec<u32>,
    pub rates: Vec<u32>,
    pub total_rate: u32,
    pub predicted_kbps: f64,
    pub realized_kbps: f64,
    pub download_s: f64,
    /// Buffer at request time.
    pub buffer_before_s: f64,
    /// Buffer right after the segment arrived.
    pub buffer_s: f64,
    /// Wait between download completion and the next request.
    pub idle_s: f64,
    /// Playback interruption caused by this download.
    pub stall_s: f64,
    pub distortion: f64,
    pub sentinel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub algo: Algorithm,
    pub segments: Vec<SegmentRecord>,
}

pub fn run_session(
    config: &SessionConfig,
    catalog: &Catalog,
    profile: &VideoProfile,
    mut env: Environment,
) -> Result<SessionRecord, SessionError> {
    config.validate()?;
    let tau = config.segment_duration;
    let floor = catalog.min_rate().map_or(0.0, f64::from);
    let mut predictor = EwmaPredictor::new(config.ewma_alpha, config.ewma_beta, floor);
    let grid = &catalog.grid;
    let mut t = 0.0;
    let mut buffer = 0.0f64;
    let mut segments = Vec::with_capacity(config.num_segments);

    for n in 1..=config.num_segments {
        let predicted = match config.prediction {
            PredictionMode::Exact => env.channel.bandwidth_at(t),
            PredictionMode::Ewma => predictor.predict().unwrap_or_else(|| env.channel.bandwidth_at(t)),
        };
        let center = env.navigation.position();
        let window = window_for(center, config.rho, config.lookahead_s(), grid);
        let decision = decide(config.algo, catalog, profile, &window, predicted, Some(center))
            .map_err(|source| SessionError::Segment { segment: n, source })?;

        let before = buffer;
        let rec = match &decision.plan {
            Some(plan) => {
                let kbits = plan.total_rate as f64 * tau;
                let download = env.channel.download_time(t, kbits);
                let realized = kbits / download;
                predictor.observe(realized);
                let stall = (download - before).max(0.0);
                let after = (before - download).max(0.0) + tau;
                let target = (kbits / predicted + config.kappa * (before - config.buffer_reference)).max(0.0);
                let idle = (target - download).max(0.0).min(after);
                buffer = after - idle;
                t += download + idle;
                SegmentRecord {
                    n,
                    center,
                    views: plan.views().collect(),
                    rates: plan.rates().collect(),
                    total_rate: plan.total_rate,
                    predicted_kbps: predicted,
                    realized_kbps: realized,
                    download_s: download,
                    buffer_before_s: before,
                    buffer_s: after,
                    idle_s: idle,
                    stall_s: stall,
                    distortion: decision.distortion,
                    sentinel: false,
                }
            }
            None => {
                // nothing fits: probe the channel, hold off one segment
                let realized = env.channel.bandwidth_at(t);
                predictor.observe(realized);
                let stall = (tau - before).max(0.0);
                buffer = (before - tau).max(0.0);
                t += tau;
                SegmentRecord {
                    n,
                    center,
                    views: Vec::new(),
                    rates: Vec::new(),
                    total_rate: 0,
                    predicted_kbps: predicted,
                    realized_kbps: realized,
                    download_s: 0.0,
                    buffer_before_s: before,
                    buffer_s: buffer,
                    idle_s: tau,
                    stall_s: stall,
                    distortion: SENTINEL_DISTORTION,
                    sentinel: true,
                }
            }
        };
        segments.push(rec);
        env.navigation.advance_segment();
        env.channel.end_segment();
    }
    Ok(SessionRecord {
        algo: config.algo,
        segments,
    })
}

impl SessionRecord {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SEGMENT_CSV_HEADER);
        out.push('\n');
        self.write_rows(&mut out);
        out
    }

    /// Rows without the header.
    pub fn write_rows(&self, out: &mut String) {
        let join = |xs: &[u32]| xs.iter().map(u32::to_string).collect::<Vec<_>>().join(";");
        for s in &self.segments {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                s.n,
                self.algo,
                join(&s.views),
                join(&s.rates),
                s.total_rate,
                s.predicted_kbps,
                s.realized_kbps,
                s.download_s,
                s.buffer_s,
                s.distortion,
                u8::from(s.sentinel)
            );
        }
    }

    pub fn distortions(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.distortion).collect()
    }

    /// Buffer level averaged over wall-clock time. Within a download the
    /// level falls linearly (stopping at zero), jumps by τ on arrival and
    /// falls linearly again while idle.
    pub fn time_average_buffer(&self) -> f64 {
        let (mut area, mut time) = (0.0, 0.0);
        for s in &self.segments {
            if s.sentinel {
                let drain = s.buffer_before_s.min(s.idle_s);
                area += drain * (s.buffer_before_s - drain / 2.0);
                time += s.idle_s;
                continue;
            }
            let b = s.buffer_before_s;
            let d = s.download_s;
            let drain = b.min(d);
            area += drain * (b - drain / 2.0);
            let top = s.buffer_s;
            area += s.idle_s * (top - s.idle_s / 2.0);
            time += d + s.idle_s;
        }
        if time > 0.0 {
            area / time
        } else {
            0.0
        }
    }
}

/// `D_t + β(D_t - D_{t-1})` with `D_0 = D_1`.
pub fn variation_series(d: &[f64], beta: f64) -> Vec<f64> {
    d.iter()
        .enumerate()
        .map(|(i, &x)| {
            let prev = if i == 0 { x } else { d[i - 1] };
            x + beta * (x - prev)
        })
        .collect()
}

/// Linear-interpolation percentile of an unsorted sample, `q` in `[0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionSummary {
    pub runs: usize,
    pub mean_distortion: f64,
    pub p10_distortion: f64,
    pub p50_distortion: f64,
    pub p90_distortion: f64,
    pub mean_variation: f64,
    /// Stalls after the first segment.
    pub rebuffer_count: usize,
    pub rebuffer_s: f64,
    pub startup_s: f64,
    pub mean_buffer_s: f64,
    pub sentinel_count: usize,
    /// Mean distortion of segment `n` across runs.
    pub per_segment_mean: Vec<f64>,
}

/// Pools metrics over runs. Returns `None` for an empty input.
pub fn aggregate(records: &[SessionRecord], beta: f64) -> Option<SessionSummary> {
    let all: Vec<f64> = records.iter().flat_map(|r| r.distortions()).collect();
    if all.is_empty() {
        return None;
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let variation: Vec<f64> = records
        .iter()
        .flat_map(|r| variation_series(&r.distortions(), beta))
        .collect();
    let longest = records.iter().map(|r| r.segments.len()).max().unwrap_or(0);
    let per_segment_mean = (0..longest)
        .map(|i| {
            let col: Vec<f64> = records
                .iter()
                .filter_map(|r| r.segments.get(i).map(|s| s.distortion))
                .collect();
            mean(&col)
        })
        .collect();
    let rebuffers: Vec<f64> = records
        .iter()
        .flat_map(|r| r.segments.iter().skip(1).map(|s| s.stall_s))
        .filter(|&s| s > 0.0)
        .collect();
    let buffers: Vec<f64> = records.iter().map(|r| r.time_average_buffer()).collect();
    Some(SessionSummary {
        runs: records.len(),
        mean_distortion: mean(&all),
        p10_distortion: percentile(&all, 0.1),
        p50_distortion: percentile(&all, 0.5),
        p90_distortion: percentile(&all, 0.9),
        mean_variation: mean(&variation),
        rebuffer_count: rebuffers.len(),
        rebuffer_s: rebuffers.iter().fold(0.0, |a, b| a + b),
        startup_s: records
            .iter()
            .filter_map(|r| r.segments.first().map(|s| s.stall_s))
            .sum::<f64>()
            / records.len() as f64,
        mean_buffer_s: mean(&buffers),
        sentinel_count: records
            .iter()
            .flat_map(|r| &r.segments)
            .filter(|s| s.sentinel)
            .count(),
        per_segment_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{load_catalog, presets};
    use crate::environment::{BandwidthTrace, MarkovChannel, NavigationKind};

    fn env(channel: Channel, nav: NavigationKind, start: u32, steps: u32) -> Environment {
        let grid = load_catalog(presets::L1, "dancer").unwrap().0.grid;
        Environment {
            channel,
            navigation: NavigationModel::new(nav, &grid, start, steps, 3).unwrap(),
        }
    }

    #[test]
    fn target_time_example() {
        // Σr = 4000, τ = 2, Ĉ = 8000, κ = 0.1, B = 25, B0 = 20
        let target: f64 = 4000.0 * 2.0 / 8000.0 + 0.1 * (25.0 - 20.0);
        assert!((target - 1.5).abs() < 1e-12);
    }

    #[test]
    fn constant_channel_static_user() {
        let (cat, p) = load_catalog(presets::L1, "dancer").unwrap();
        let trace = BandwidthTrace::new(vec![(0.0, 6000.0)]).unwrap();
        let cfg = SessionConfig {
            num_segments: 20,
            ..SessionConfig::default()
        };
        let rec = run_session(&cfg, &cat, &p, env(Channel::Trace(trace), NavigationKind::Static, 50, 5)).unwrap();
        let first = &rec.segments[0];
        for s in &rec.segments {
            assert_eq!(s.views, first.views);
            assert_eq!(s.rates, first.rates);
            assert_eq!(s.distortion, first.distortion);
            assert!(s.buffer_s >= 0.0);
            assert!((s.predicted_kbps - 6000.0).abs() < 1e-9);
        }
        let csv = rec.to_csv();
        assert!(csv.starts_with(SEGMENT_CSV_HEADER));
        assert_eq!(csv.lines().count(), 21);
    }

    #[test]
    fn reference_buffer_gives_plain_estimate() {
        // with B = B0 the κ term vanishes and the target is the estimate
        let (b, b0, kappa) = (20.0, 20.0, 0.3);
        let target: f64 = 5000.0 * 2.0 / 5000.0 + kappa * (b - b0);
        assert_eq!(target, 2.0);
    }

    #[test]
    fn sentinel_segments_probe_channel() {
        let (cat, p) = load_catalog(presets::L1, "dancer").unwrap();
        let trace = BandwidthTrace::new(vec![(0.0, 50.0), (10.0, 8000.0)]).unwrap();
        let cfg = SessionConfig {
            num_segments: 12,
            prediction: PredictionMode::Exact,
            ..SessionConfig::default()
        };
        let rec = run_session(&cfg, &cat, &p, env(Channel::Trace(trace), NavigationKind::Static, 50, 5)).unwrap();
        assert!(rec.segments[0].sentinel);
        assert_eq!(rec.segments[0].distortion, 1.0);
        assert!(rec.segments.iter().any(|s| !s.sentinel));
        assert!(rec.to_csv().lines().nth(1).unwrap().ends_with(",1"));
    }

    #[test]
    fn markov_session_is_deterministic() {
        let (cat, p) = load_catalog(presets::L1, "hall").unwrap();
        let run = || {
            let ch = Channel::Markov(MarkovChannel::reference(0.5, 11).unwrap());
            run_session(&SessionConfig::default(), &cat, &p, env(ch, NavigationKind::Uniform, 50, 5)).unwrap()
        };
        assert_eq!(run().to_csv(), run().to_csv());
    }

    #[test]
    fn variation_examples() {
        assert_eq!(variation_series(&[0.3, 0.3, 0.3], 1.0), vec![0.3, 0.3, 0.3]);
        let v = variation_series(&[0.1, 0.2], 1.0);
        assert!((v[0] - 0.1).abs() < 1e-15 && (v[1] - 0.3).abs() < 1e-15);
        assert!(((v[0] + v[1]) / 2.0 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn aggregate_single_segment() {
        let rec = SessionRecord {
            algo: Algorithm::Greedy,
            segments: vec![SegmentRecord {
                n: 1,
                center: 0,
                views: vec![1],
                rates: vec![100],
                total_rate: 100,
                predicted_kbps: 100.0,
                realized_kbps: 100.0,
                download_s: 2.0,
                buffer_before_s: 0.0,
                buffer_s: 2.0,
                idle_s: 0.0,
                stall_s: 2.0,
                distortion: 0.42,
                sentinel: false,
            }],
        };
        let s = aggregate(&[rec], 1.0).unwrap();
        assert_eq!(s.mean_distortion, 0.42);
        assert_eq!(s.rebuffer_count, 0);
        assert_eq!(s.startup_s, 2.0);
        assert!(aggregate(&[], 1.0).is_none());
    }

    #[test]
    fn percentiles() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert_eq!(percentile(&v, 0.5), 2.5);
    }

    #[test]
    fn rejects_bad_config() {
        let bad = [
            SessionConfig { segment_duration: 0.0, ..SessionConfig::default() },
            SessionConfig { lookahead_segments: 0, ..SessionConfig::default() },
            SessionConfig { kappa: -1.0, ..SessionConfig::default() },
            SessionConfig { ewma_alpha: 1.5, ..SessionConfig::default() },
            SessionConfig { num_segments: 0, ..SessionConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }
}

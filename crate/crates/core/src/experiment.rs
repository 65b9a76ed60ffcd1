//! Parameter sweeps described by a TOML experiment spec.
//!
//! Two kinds are supported. A `budget` sweep solves every
//! (set, video, window, budget, algorithm) combination once. A `session`
//! sweep replays `nav_runs × channel_runs` sessions for every
//! (set, video, algorithm, navigation, channel) cell and reports pooled
//! metrics. Channel and navigation seeds depend only on the run indices, so
//! all algorithms of a sweep face the same realizations.
//!
//! Cells run on a rayon pool; results are merged in cell order so the output
//! bytes do not depend on the worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::catalog::{presets, Catalog, CatalogFile, NavigationWindow, VideoProfile};
use crate::environment::navigation::steps_per_segment;
use crate::environment::{
    BandwidthTrace, Channel, EnvironmentError, MarkovChannel, NavigationKind, NavigationModel,
    DEFAULT_RHO,
};
use crate::select::{decide, Algorithm};
use crate::session::{aggregate, run_session, Environment, PredictionMode, SessionConfig, SEGMENT_CSV_HEADER};

pub const BUDGET_CSV_HEADER: &str =
    "set,video,window,budget_kbps,algo,views,rates_kbps,total_rate,distortion,sentinel";
pub const SUMMARY_CSV_HEADER: &str = "set,video,algo,navigation,start_view,channel,runs,mean_distortion,p10_distortion,p50_distortion,p90_distortion,mean_variation,rebuffer_count,rebuffer_s,mean_buffer_s,sentinel_count";
pub const TIMELINE_CSV_HEADER: &str = "set,video,algo,navigation,start_view,channel,n,mean_distortion";

/// Built-in trace usable as `trace:sample`.
pub const SAMPLE_TRACE: &str = include_str!("../data/sample_trace.csv");

/// Checked-in sweep specs.
pub mod sweep_presets {
    pub const ALL: [(&str, &str); 3] = [
        ("low-interactivity", include_str!("../presets/sweeps/low-interactivity.toml")),
        ("high-interactivity", include_str!("../presets/sweeps/high-interactivity.toml")),
        ("realistic", include_str!("../presets/sweeps/realistic.toml")),
    ];

    pub fn text(id: &str) -> Option<&'static str> {
        ALL.iter().find(|(k, _)| k.eq_ignore_ascii_case(id)).map(|(_, v)| *v)
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn config<T>(msg: impl Into<String>) -> Result<T, ExperimentError> {
    Err(ExperimentError::Config(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Budget,
    Session,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavigationSpec {
    /// `static`, `uniform` or `nonuniform:<p_n>`.
    pub kind: String,
    pub start_view: f64,
}

fn default_segments() -> usize {
    50
}
fn default_tau() -> f64 {
    2.0
}
fn default_lookahead() -> u32 {
    1
}
fn default_b0() -> f64 {
    20.0
}
fn default_kappa() -> f64 {
    0.1
}
fn default_rho() -> f64 {
    DEFAULT_RHO
}
fn default_runs() -> usize {
    1
}
fn default_gain() -> f64 {
    0.4
}
fn default_prediction() -> String {
    "exact".into()
}
fn default_seed() -> u64 {
    1
}
fn default_beta_variation() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    #[serde(default = "default_segments")]
    pub num_segments: usize,
    #[serde(default = "default_tau")]
    pub segment_duration_s: f64,
    #[serde(default = "default_lookahead")]
    pub lookahead_segments: u32,
    #[serde(default = "default_b0")]
    pub buffer_reference_s: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// `exact` or `ewma`.
    #[serde(default = "default_prediction")]
    pub prediction: String,
    #[serde(default = "default_gain")]
    pub ewma_alpha: f64,
    #[serde(default = "default_gain")]
    pub ewma_beta: f64,
    /// Weight of the quality-change term in the variation metric.
    #[serde(default = "default_beta_variation")]
    pub variation_beta: f64,
    pub navigation: Vec<NavigationSpec>,
    /// `markov:<p_c>`, `trace:sample` or `trace:<path>`.
    pub channels: Vec<String>,
    #[serde(default = "default_runs")]
    pub nav_runs: usize,
    #[serde(default = "default_runs")]
    pub channel_runs: usize,
    /// Also write one per-segment CSV per cell under `runs/`.
    #[serde(default)]
    pub write_runs: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub kind: SweepKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Preset ids (`L1`, `optimized-low-hall`, ...) or catalog file paths.
    pub sets: Vec<String>,
    pub videos: Vec<String>,
    pub algos: Vec<String>,
    #[serde(default)]
    pub windows: Vec<String>,
    #[serde(default)]
    pub budgets_kbps: Vec<f64>,
    #[serde(default)]
    pub session: Option<SessionSpec>,
}

impl FromStr for ExperimentSpec {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let spec: ExperimentSpec =
            toml::from_str(s).map_err(|e| ExperimentError::Config(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }
}

/// A channel axis entry.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Markov(f64),
    Trace(String),
}

impl FromStr for ChannelSpec {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(p) = s.strip_prefix("markov:") {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| ExperimentError::Config(format!("bad p_c in `{s}`")))?;
            if !(0.0..=1.0).contains(&p) {
                return config(format!("p_c in `{s}` outside [0, 1]"));
            }
            Ok(ChannelSpec::Markov(p))
        } else if let Some(path) = s.strip_prefix("trace:") {
            if path.trim().is_empty() {
                return config("empty trace path");
            }
            Ok(ChannelSpec::Trace(path.trim().to_string()))
        } else {
            config(format!("channel `{s}` (expected markov:<p_c> or trace:<path>)"))
        }
    }
}

impl ExperimentSpec {
    pub fn algorithms(&self) -> Result<Vec<Algorithm>, ExperimentError> {
        self.algos
            .iter()
            .map(|a| a.parse::<Algorithm>().map_err(ExperimentError::Config))
            .collect()
    }

    fn check(&self) -> Result<(), ExperimentError> {
        if self.sets.is_empty() || self.videos.is_empty() || self.algos.is_empty() {
            return config("sets, videos and algos must be non-empty");
        }
        self.algorithms()?;
        for w in &self.windows {
            crate::catalog::parse_window_bounds(w)
                .map_err(|e| ExperimentError::Config(format!("window `{w}`: {e}")))?;
        }
        match self.kind {
            SweepKind::Budget => {
                if self.windows.is_empty() || self.budgets_kbps.is_empty() {
                    return config("a budget sweep needs windows and budgets_kbps");
                }
                if let Some(b) = self.budgets_kbps.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
                    return config(format!("budget {b} must be finite and non-negative"));
                }
            }
            SweepKind::Session => {
                let Some(s) = &self.session else {
                    return config("a session sweep needs a [session] table");
                };
                if s.nav_runs == 0 || s.channel_runs == 0 {
                    return config("run counts must be at least 1");
                }
                if s.navigation.is_empty() || s.channels.is_empty() {
                    return config("session navigation and channels must be non-empty");
                }
                for n in &s.navigation {
                    n.kind
                        .parse::<NavigationKind>()
                        .map_err(|e| ExperimentError::Config(e.to_string()))?;
                    if !n.start_view.is_finite() {
                        return config("start_view must be finite");
                    }
                }
                for c in &s.channels {
                    c.parse::<ChannelSpec>()?;
                }
                prediction_mode(&s.prediction)?;
                self.session_config(Algorithm::Optimal)?
                    .validate()
                    .map_err(|e| ExperimentError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    fn session_config(&self, algo: Algorithm) -> Result<SessionConfig, ExperimentError> {
        let s = self
            .session
            .as_ref()
            .ok_or_else(|| ExperimentError::Config("missing [session]".into()))?;
        Ok(SessionConfig {
            algo,
            segment_duration: s.segment_duration_s,
            lookahead_segments: s.lookahead_segments,
            buffer_reference: s.buffer_reference_s,
            kappa: s.kappa,
            num_segments: s.num_segments,
            rho: s.rho,
            prediction: prediction_mode(&s.prediction)?,
            ewma_alpha: s.ewma_alpha,
            ewma_beta: s.ewma_beta,
        })
    }
}

fn prediction_mode(s: &str) -> Result<PredictionMode, ExperimentError> {
    match s {
        "exact" => Ok(PredictionMode::Exact),
        "ewma" => Ok(PredictionMode::Ewma),
        other => config(format!("prediction `{other}` (expected exact|ewma)")),
    }
}

/// Loads a set by preset id, or as a file path relative to `base`.
pub fn resolve_set(id: &str, base: &Path) -> Result<CatalogFile, ExperimentError> {
    if let Some(text) = presets::text(id) {
        return text.parse().map_err(|e| ExperimentError::Config(format!("set `{id}`: {e}")));
    }
    let path = base.join(id);
    let text = fs::read_to_string(&path).map_err(|_| {
        ExperimentError::Config(format!(
            "set `{id}` is neither a preset ({}) nor a readable file",
            presets::ids().collect::<Vec<_>>().join(", ")
        ))
    })?;
    text.parse()
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

pub fn resolve_trace(path: &str, base: &Path) -> Result<BandwidthTrace, ExperimentError> {
    let text = if path == "sample" {
        SAMPLE_TRACE.to_string()
    } else {
        let p = base.join(path);
        fs::read_to_string(&p).map_err(|source| ExperimentError::Io { path: p, source })?
    };
    BandwidthTrace::parse(&text).map_err(|e: EnvironmentError| ExperimentError::Config(format!("trace `{path}`: {e}")))
}

/// splitmix64 finalizer, used to derive per-run seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, tag: u64, axis: usize, run: usize) -> u64 {
    mix(mix(mix(base ^ tag) ^ axis as u64) ^ run as u64)
}

const NAV_TAG: u64 = 0x6e61_7669;
const CHANNEL_TAG: u64 = 0x6368_616e;

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub cell: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub files: Vec<PathBuf>,
    pub cells: usize,
    pub failures: Vec<CellFailure>,
}

/// Writes `contents` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, contents).map_err(|source| ExperimentError::Io {
        path: tmp.clone(),
        source,
    })?;
    fs::rename(&tmp, path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Loaded {
    id: String,
    catalog: Catalog,
    profiles: Vec<(String, VideoProfile)>,
}

fn load_sets(spec: &ExperimentSpec, base: &Path) -> Result<Vec<Loaded>, ExperimentError> {
    spec.sets
        .iter()
        .map(|id| {
            let file = resolve_set(id, base)?;
            let profiles = spec
                .videos
                .iter()
                .map(|v| {
                    file.profile(v)
                        .cloned()
                        .map(|p| (v.clone(), p))
                        .map_err(|e| ExperimentError::Config(format!("set `{id}`: {e}")))
                })
                .collect::<Result<_, _>>()?;
            Ok(Loaded {
                id: id.clone(),
                catalog: file.catalog,
                profiles,
            })
        })
        .collect()
}

/// Runs a sweep and writes its CSVs under `out`. Cell failures are reported,
/// not raised; config and I/O problems are raised.
pub fn run_sweep(
    spec: &ExperimentSpec,
    base: &Path,
    out: &Path,
    workers: usize,
) -> Result<SweepReport, ExperimentError> {
    let sets = load_sets(spec, base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Config(format!("worker pool: {e}")))?;
    match spec.kind {
        SweepKind::Budget => pool.install(|| budget_sweep(spec, &sets, out)),
        SweepKind::Session => pool.install(|| session_sweep(spec, &sets, base, out)),
    }
}

fn budget_sweep(spec: &ExperimentSpec, sets: &[Loaded], out: &Path) -> Result<SweepReport, ExperimentError> {
    let algos = spec.algorithms()?;
    let mut cells = Vec::new();
    for set in sets {
        for (video, profile) in &set.profiles {
            for w in &spec.windows {
                cells.push((set, video, profile, w));
            }
        }
    }
    // one cell per (set, video, window): budgets × algos solved inside
    let results: Vec<Result<String, CellFailure>> = cells
        .par_iter()
        .map(|&(set, video, profile, w)| {
            let label = format!("{}/{}/{}", set.id, video, w);
            let fail = |e: String| CellFailure {
                cell: label.clone(),
                error: e,
            };
            let window = NavigationWindow::parse(&set.catalog.grid, w).map_err(|e| fail(e.to_string()))?;
            let mut rows = String::new();
            for &budget in &spec.budgets_kbps {
                for &algo in &algos {
                    let d = decide(algo, &set.catalog, profile, &window, budget, None)
                        .map_err(|e| fail(format!("{algo} at {budget} kbps: {e}")))?;
                    let (views, rates, total) = match &d.plan {
                        Some(p) => (join(p.views()), join(p.rates()), p.total_rate),
                        None => (String::new(), String::new(), 0),
                    };
                    let _ = writeln!(
                        rows,
                        "{},{},{},{},{},{},{},{},{:.6},{}",
                        set.id,
                        video,
                        w,
                        budget,
                        algo,
                        views,
                        rates,
                        total,
                        d.distortion,
                        u8::from(d.is_sentinel())
                    );
                }
            }
            Ok(rows)
        })
        .collect();
    let mut report = SweepReport {
        cells: results.len(),
        ..Default::default()
    };
    let mut csv = format!("{BUDGET_CSV_HEADER}\n");
    for r in results {
        match r {
            Ok(rows) => csv.push_str(&rows),
            Err(f) => report.failures.push(f),
        }
    }
    let path = out.join("budget_sweep.csv");
    write_atomic(&path, &csv)?;
    report.files.push(path);
    Ok(report)
}

fn join(xs: impl Iterator<Item = u32>) -> String {
    xs.map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

struct SessionCell<'a> {
    set: &'a Loaded,
    video: &'a str,
    profile: &'a VideoProfile,
    algo: Algorithm,
    nav_index: usize,
    nav: &'a NavigationSpec,
    channel_index: usize,
    channel: &'a str,
}

impl SessionCell<'_> {
    fn prefix(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.set.id, self.video, self.algo, self.nav.kind, self.nav.start_view, self.channel
        )
    }

    fn file_stem(&self) -> String {
        let clean = |s: &str| {
            s.chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
                .collect::<String>()
        };
        format!(
            "{}-{}-{}-nav{}-ch{}",
            clean(&self.set.id),
            clean(self.video),
            self.algo,
            self.nav_index,
            self.channel_index
        )
    }
}

fn session_sweep(
    spec: &ExperimentSpec,
    sets: &[Loaded],
    base: &Path,
    out: &Path,
) -> Result<SweepReport, ExperimentError> {
    let s = spec.session.as_ref().expect("checked at parse time");
    let algos = spec.algorithms()?;
    let channels: Vec<ChannelSpec> = s.channels.iter().map(|c| c.parse()).collect::<Result<_, _>>()?;
    let traces: Vec<Option<BandwidthTrace>> = channels
        .iter()
        .map(|c| match c {
            ChannelSpec::Trace(p) => resolve_trace(p, base).map(Some),
            ChannelSpec::Markov(_) => Ok(None),
        })
        .collect::<Result<_, _>>()?;

    let mut cells = Vec::new();
    for set in sets {
        for (video, profile) in &set.profiles {
            for &algo in &algos {
                for (nav_index, nav) in s.navigation.iter().enumerate() {
                    for (channel_index, channel) in s.channels.iter().enumerate() {
                        cells.push(SessionCell {
                            set,
                            video,
                            profile,
                            algo,
                            nav_index,
                            nav,
                            channel_index,
                            channel,
                        });
                    }
                }
            }
        }
    }

    type CellOut = (String, String, Option<(PathBuf, String)>);
    let results: Vec<Result<CellOut, CellFailure>> = cells
        .par_iter()
        .map(|cell| {
            let fail = |e: String| CellFailure {
                cell: cell.prefix(),
                error: e,
            };
            let cfg = spec.session_config(cell.algo).map_err(|e| fail(e.to_string()))?;
            let grid = cell.set.catalog.grid;
            let kind: NavigationKind = cell.nav.kind.parse().map_err(|e: EnvironmentError| fail(e.to_string()))?;
            let start = grid.index_of(cell.nav.start_view).map_err(|e| fail(e.to_string()))?;
            let steps = steps_per_segment(cfg.rho, cfg.segment_duration, &grid);
            let channel_runs = match channels[cell.channel_index] {
                // a trace replays identically, one run is enough
                ChannelSpec::Trace(_) => 1,
                ChannelSpec::Markov(_) => s.channel_runs,
            };
            let mut records = Vec::with_capacity(s.nav_runs * channel_runs);
            let mut runs_csv = String::new();
            for i in 0..s.nav_runs {
                for j in 0..channel_runs {
                    let nav_seed = derive_seed(spec.seed, NAV_TAG, cell.nav_index, i);
                    let ch_seed = derive_seed(spec.seed, CHANNEL_TAG, cell.channel_index, j);
                    let channel = match (&channels[cell.channel_index], &traces[cell.channel_index]) {
                        (ChannelSpec::Markov(p), _) => Channel::Markov(
                            MarkovChannel::reference(*p, ch_seed).map_err(|e| fail(e.to_string()))?,
                        ),
                        (ChannelSpec::Trace(_), Some(t)) => Channel::Trace(t.clone()),
                        (ChannelSpec::Trace(_), None) => unreachable!("traces resolved up front"),
                    };
                    let navigation = NavigationModel::new(kind, &grid, start, steps, nav_seed)
                        .map_err(|e| fail(e.to_string()))?;
                    let rec = run_session(&cfg, &cell.set.catalog, cell.profile, Environment { channel, navigation })
                        .map_err(|e| fail(format!("nav run {i}, channel run {j}: {e}")))?;
                    if s.write_runs {
                        let mut rows = String::new();
                        rec.write_rows(&mut rows);
                        for line in rows.lines() {
                            let _ = writeln!(runs_csv, "{i},{j},{line}");
                        }
                    }
                    records.push(rec);
                }
            }
            let sum = aggregate(&records, s.variation_beta).ok_or_else(|| fail("no records".into()))?;
            let p = cell.prefix();
            let summary = format!(
                "{p},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6},{:.6},{}\n",
                sum.runs,
                sum.mean_distortion,
                sum.p10_distortion,
                sum.p50_distortion,
                sum.p90_distortion,
                sum.mean_variation,
                sum.rebuffer_count,
                sum.rebuffer_s,
                sum.mean_buffer_s,
                sum.sentinel_count
            );
            let mut timeline = String::new();
            for (n, d) in sum.per_segment_mean.iter().enumerate() {
                let _ = writeln!(timeline, "{p},{},{:.6}", n + 1, d);
            }
            let runs = s.write_runs.then(|| {
                (
                    out.join("runs").join(format!("{}.csv", cell.file_stem())),
                    format!("nav_run,channel_run,{SEGMENT_CSV_HEADER}\n{runs_csv}"),
                )
            });
            Ok((summary, timeline, runs))
        })
        .collect();

    let mut report = SweepReport {
        cells: results.len(),
        ..Default::default()
    };
    let mut summary = format!("{SUMMARY_CSV_HEADER}\n");
    let mut timeline = format!("{TIMELINE_CSV_HEADER}\n");
    for r in results {
        match r {
            Ok((s_row, t_rows, runs)) => {
                summary.push_str(&s_row);
                timeline.push_str(&t_rows);
                if let Some((path, body)) = runs {
                    write_atomic(&path, &body)?;
                    report.files.push(path);
                }
            }
            Err(f) => report.failures.push(f),
        }
    }
    for (name, body) in [("session_summary.csv", summary), ("session_timeline.csv", timeline)] {
        let path = out.join(name);
        write_atomic(&path, &body)?;
        report.files.push(path);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for (id, text) in sweep_presets::ALL {
            let spec: ExperimentSpec = text.parse().unwrap_or_else(|e| panic!("{id}: {e}"));
            for set in &spec.sets {
                resolve_set(set, Path::new(".")).unwrap();
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let ok = "kind = \"budget\"\nsets = [\"L1\"]\nvideos = [\"hall\"]\nalgos = [\"optimal\"]\nwindows = [\"1.5:9.5\"]\nbudgets_kbps = [1000]\n";
        ok.parse::<ExperimentSpec>().unwrap();
        for (from, to) in [
            ("kind = \"budget\"", "kind = \"budgets\""),
            ("[\"optimal\"]", "[\"fastest\"]"),
            ("[\"1.5:9.5\"]", "[\"9.5\"]"),
            ("[1000]", "[-5]"),
            ("[1000]", "[]"),
            ("sets = [\"L1\"]", "sets = [\"L1\"]\nbogus = 1"),
            ("kind = \"budget\"", "kind = \"session\""),
        ] {
            assert!(ok.replace(from, to).parse::<ExperimentSpec>().is_err(), "{to}");
        }
    }

    #[test]
    fn channel_specs() {
        assert_eq!("markov:0.5".parse::<ChannelSpec>().unwrap(), ChannelSpec::Markov(0.5));
        assert_eq!(
            "trace:sample".parse::<ChannelSpec>().unwrap(),
            ChannelSpec::Trace("sample".into())
        );
        assert!("markov:2".parse::<ChannelSpec>().is_err());
        assert!("wifi".parse::<ChannelSpec>().is_err());
    }

    #[test]
    fn seeds_differ_per_axis_and_run() {
        let a = derive_seed(1, NAV_TAG, 0, 0);
        assert_ne!(a, derive_seed(1, NAV_TAG, 0, 1));
        assert_ne!(a, derive_seed(1, NAV_TAG, 1, 0));
        assert_ne!(a, derive_seed(1, CHANNEL_TAG, 0, 0));
        assert_eq!(a, derive_seed(1, NAV_TAG, 0, 0));
    }

    #[test]
    fn unknown_set_is_a_config_error() {
        assert!(matches!(
            resolve_set("L9", Path::new("/nonexistent")),
            Err(ExperimentError::Config(_))
        ));
    }
}

//! Viewpoint grid, representation sets and per-video model parameters.
//!
//! A catalog is loaded from a TOML document. The document describes the
//! camera grid, the texture bitrates stored for every camera and one or more
//! video profiles (rate-distortion fit plus synthesis parameters):
//!
//! ```toml
//! name = "L2"
//! depth_rate_overhead_kbps = 0
//!
//! [grid]
//! num_cameras = 10
//! delta = 0.1
//!
//! [uniform]
//! views = [1, 3, 5, 7, 10]
//! rates_kbps = [100, 300, 1000, 3000, 6000, 10000, 15000]
//!
//! [profiles.hall]
//! xi = 1.32
//! inpaint_distortion = 0.35
//! independent = { a = 0.98, b = 129.89, e = 544.39 }
//! joint = { a = 0.99, b = 147.30, e = 633.67 }
//! ```
//!
//! Instead of `[uniform]`, per-camera lists may be given with repeated
//! `[[views]]` tables (`camera = 3`, `rates_kbps = [...]`). The two forms are
//! mutually exclusive. All rates are in kbps; the fitted `b` and `e`
//! parameters are interpreted in kbps as well.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const GRID_TOLERANCE: f64 = 1e-9;
const MAX_CAMERAS: u32 = 1024;
const MAX_STEPS_PER_VIEW: u32 = 1000;
const MAX_RATES_PER_VIEW: usize = 256;
const MAX_RATE_KBPS: u32 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {constraint}")]
    Invalid { field: String, constraint: String },
    #[error("unknown video profile `{0}`")]
    UnknownVideo(String),
    #[error("viewpoint {0} is not on the grid")]
    OffGrid(f64),
}

fn invalid(field: impl Into<String>, constraint: impl Into<String>) -> CatalogError {
    CatalogError::Invalid {
        field: field.into(),
        constraint: constraint.into(),
    }
}

/// The set of displayable viewpoints `{1, 1+Δ, ..., |V|}`.
///
/// Viewpoints are addressed by integer grid index `round((u - 1) / Δ)` so
/// that equality tests never depend on floating-point arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ViewpointGrid {
    num_cameras: u32,
    steps_per_view: u32,
}

impl ViewpointGrid {
    pub fn new(num_cameras: u32, delta: f64) -> Result<Self, CatalogError> {
        if num_cameras == 0 || num_cameras > MAX_CAMERAS {
            return Err(invalid(
                "grid.num_cameras",
                format!("must lie in 1..={MAX_CAMERAS}"),
            ));
        }
        if !(delta.is_finite() && delta > 0.0 && delta <= 1.0) {
            return Err(invalid("grid.delta", "must satisfy 0 < delta <= 1"));
        }
        let steps = (1.0 / delta).round();
        if steps > MAX_STEPS_PER_VIEW as f64 || (steps * delta - 1.0).abs() > GRID_TOLERANCE {
            return Err(invalid(
                "grid.delta",
                format!("1/delta must be an integer no larger than {MAX_STEPS_PER_VIEW}"),
            ));
        }
        Ok(Self::with_steps(num_cameras, steps as u32))
    }

    /// Grid with `steps_per_view` viewpoints per unit of view distance.
    pub fn with_steps(num_cameras: u32, steps_per_view: u32) -> Self {
        assert!(num_cameras >= 1 && steps_per_view >= 1);
        Self {
            num_cameras,
            steps_per_view,
        }
    }

    pub fn num_cameras(&self) -> u32 {
        self.num_cameras
    }

    pub fn steps_per_view(&self) -> u32 {
        self.steps_per_view
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.steps_per_view as f64
    }

    /// Largest grid index (the viewpoint `|V|`).
    pub fn max_index(&self) -> u32 {
        (self.num_cameras - 1) * self.steps_per_view
    }

    pub fn camera_ids(&self) -> impl Iterator<Item = u32> {
        1..=self.num_cameras
    }

    pub fn camera_index(&self, camera: u32) -> u32 {
        debug_assert!((1..=self.num_cameras).contains(&camera));
        (camera - 1) * self.steps_per_view
    }

    /// Camera id sitting at a grid index, if any.
    pub fn camera_at(&self, index: u32) -> Option<u32> {
        (index.is_multiple_of(self.steps_per_view) && index <= self.max_index())
            .then(|| index / self.steps_per_view + 1)
    }

    pub fn viewpoint(&self, index: u32) -> f64 {
        1.0 + index as f64 / self.steps_per_view as f64
    }

    /// Exact grid index of a viewpoint inside `[1, |V|]`.
    pub fn index_of(&self, u: f64) -> Result<u32, CatalogError> {
        let scaled = (u - 1.0) * self.steps_per_view as f64;
        let idx = scaled.round();
        if !u.is_finite()
            || (scaled - idx).abs() > 1e-6
            || idx < 0.0
            || idx > self.max_index() as f64
        {
            return Err(CatalogError::OffGrid(u));
        }
        Ok(idx as u32)
    }

    /// Distance between two grid indices in view units.
    pub fn distance(&self, a: u32, b: u32) -> f64 {
        a.abs_diff(b) as f64 / self.steps_per_view as f64
    }
}

/// Viewpoint interval `[U_L, U_R]` the user may display next, held as grid
/// indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NavigationWindow {
    pub left: u32,
    pub right: u32,
}

impl NavigationWindow {
    /// Window from two on-grid viewpoints.
    pub fn new(grid: &ViewpointGrid, u_left: f64, u_right: f64) -> Result<Self, CatalogError> {
        let left = grid.index_of(u_left)?;
        let right = grid.index_of(u_right)?;
        if left > right {
            return Err(invalid("window", "U_L must not exceed U_R"));
        }
        Ok(Self { left, right })
    }

    /// Window with endpoints rounded outward to the grid and clipped to
    /// `[1, |V|]`.
    pub fn snapped(grid: &ViewpointGrid, u_left: f64, u_right: f64) -> Result<Self, CatalogError> {
        if !(u_left.is_finite() && u_right.is_finite()) || u_left > u_right {
            return Err(invalid("window", "endpoints must be finite with U_L <= U_R"));
        }
        let steps = grid.steps_per_view() as f64;
        let max = grid.max_index() as f64;
        let lo = ((u_left - 1.0) * steps + 1e-6).floor().clamp(0.0, max);
        let hi = ((u_right - 1.0) * steps - 1e-6).ceil().clamp(0.0, max);
        Ok(Self {
            left: lo as u32,
            right: hi.max(lo) as u32,
        })
    }

    /// Parses a `left:right` pair such as `1.5:9.5` against a grid.
    pub fn parse(grid: &ViewpointGrid, text: &str) -> Result<Self, CatalogError> {
        let (l, r) = parse_window_bounds(text)?;
        Self::new(grid, l, r)
    }

    pub fn u_left(&self, grid: &ViewpointGrid) -> f64 {
        grid.viewpoint(self.left)
    }

    pub fn u_right(&self, grid: &ViewpointGrid) -> f64 {
        grid.viewpoint(self.right)
    }

    /// `N_u`, the number of grid viewpoints in the window.
    pub fn len(&self) -> u32 {
        self.right - self.left + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: u32) -> bool {
        (self.left..=self.right).contains(&index)
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<u32> {
        self.left..=self.right
    }

    pub fn label(&self, grid: &ViewpointGrid) -> String {
        format!("{}:{}", fmt_view(self.u_left(grid)), fmt_view(self.u_right(grid)))
    }
}

/// Splits `a:b` into two numbers without checking them against a grid.
pub fn parse_window_bounds(text: &str) -> Result<(f64, f64), CatalogError> {
    let (l, r) = text
        .split_once(':')
        .ok_or_else(|| CatalogError::Parse(format!("window `{text}` is not of the form a:b")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CatalogError::Parse(format!("bad window endpoint `{s}`")))
    };
    Ok((parse(l)?, parse(r)?))
}

/// Prints a viewpoint with at most three decimals and no trailing zeros.
pub fn fmt_view(u: f64) -> String {
    let s = format!("{u:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Ordered list of the `N_u` viewpoints covered by a window.
pub fn viewpoints_in(window: &NavigationWindow, grid: &ViewpointGrid) -> Vec<f64> {
    window.indices().map(|i| grid.viewpoint(i)).collect()
}

/// One camera view encoded at one texture bitrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Representation {
    pub view: u32,
    pub rate: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodingMode {
    #[default]
    Independent,
    JointPaired,
}

impl fmt::Display for CodingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodingMode::Independent => f.write_str("independent"),
            CodingMode::JointPaired => f.write_str("joint-paired"),
        }
    }
}

/// Rates stored for one camera, ascending and unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewRates {
    pub camera: u32,
    pub rates: Vec<u32>,
}

/// The representation set `L` stored at the server.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub name: String,
    pub description: Option<String>,
    /// Marks hand-entered approximations of sets that were only published
    /// graphically.
    pub approximate: bool,
    pub grid: ViewpointGrid,
    /// Sorted by camera id.
    pub views: Vec<ViewRates>,
    pub depth_rate_overhead: u32,
    pub coding_mode: CodingMode,
}

impl Catalog {
    pub fn representation_count(&self) -> usize {
        self.views.iter().map(|v| v.rates.len()).sum()
    }

    pub fn representations(&self) -> impl Iterator<Item = Representation> + '_ {
        self.views.iter().flat_map(|v| {
            v.rates.iter().map(move |&rate| Representation {
                view: v.camera,
                rate,
            })
        })
    }

    pub fn cameras(&self) -> impl Iterator<Item = u32> + '_ {
        self.views.iter().map(|v| v.camera)
    }

    pub fn rates_for(&self, camera: u32) -> Option<&[u32]> {
        self.views
            .iter()
            .find(|v| v.camera == camera)
            .map(|v| v.rates.as_slice())
    }

    /// Download cost of one view: texture rate plus the depth overhead.
    pub fn cost(&self, rate: u32) -> u32 {
        rate + self.depth_rate_overhead
    }

    /// Largest stored camera at or left of a grid index.
    pub fn left_anchor(&self, index: u32) -> Option<&ViewRates> {
        self.views
            .iter()
            .rev()
            .find(|v| self.grid.camera_index(v.camera) <= index)
    }

    /// Smallest stored camera at or right of a grid index.
    pub fn right_anchor(&self, index: u32) -> Option<&ViewRates> {
        self.views
            .iter()
            .find(|v| self.grid.camera_index(v.camera) >= index)
    }

    /// All distinct rates across views, ascending.
    pub fn distinct_rates(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self.views.iter().flat_map(|v| v.rates.clone()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn min_rate(&self) -> Option<u32> {
        self.views.iter().filter_map(|v| v.rates.first().copied()).min()
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        if self.views.is_empty() {
            return Err(invalid("views", "at least one camera view is required"));
        }
        let mut prev = 0;
        for (i, v) in self.views.iter().enumerate() {
            let field = format!("views[{i}]");
            if v.camera == 0 || v.camera > self.grid.num_cameras() {
                return Err(invalid(
                    format!("{field}.camera"),
                    format!(
                        "view out of grid: {} not in 1..={}",
                        v.camera,
                        self.grid.num_cameras()
                    ),
                ));
            }
            if v.camera == prev {
                return Err(invalid(
                    format!("{field}.camera"),
                    format!("duplicate view {}", v.camera),
                ));
            }
            if v.camera < prev {
                return Err(invalid(
                    format!("{field}.camera"),
                    "views must be listed in ascending order",
                ));
            }
            prev = v.camera;
            if v.rates.is_empty() || v.rates.len() > MAX_RATES_PER_VIEW {
                return Err(invalid(
                    format!("{field}.rates_kbps"),
                    format!("between 1 and {MAX_RATES_PER_VIEW} rates required"),
                ));
            }
            for w in v.rates.windows(2) {
                if w[0] == w[1] {
                    return Err(invalid(
                        format!("{field}.rates_kbps"),
                        format!("duplicate rate {}", w[0]),
                    ));
                }
                if w[0] > w[1] {
                    return Err(invalid(
                        format!("{field}.rates_kbps"),
                        "rates must be ascending",
                    ));
                }
            }
            if let Some(&r) = v.rates.iter().find(|&&r| r == 0 || r > MAX_RATE_KBPS) {
                return Err(invalid(
                    format!("{field}.rates_kbps"),
                    format!("rate {r} must lie in 1..={MAX_RATE_KBPS}"),
                ));
            }
        }
        if self.depth_rate_overhead > MAX_RATE_KBPS {
            return Err(invalid("depth_rate_overhead_kbps", "too large"));
        }
        Ok(())
    }
}

/// Rate-distortion fit `D(r) = 1 - (a - b / (r + e))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdParams {
    pub a: f64,
    pub b: f64,
    pub e: f64,
}

/// Content-dependent model parameters of one video sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoProfile {
    pub name: String,
    pub independent: RdParams,
    /// Joint (paired 3D-HEVC style) coding fit, used by the view-adaptation
    /// baseline.
    pub joint: Option<RdParams>,
    /// Synthesis quality decay per view unit.
    pub xi: f64,
    pub inpaint_distortion: f64,
}

impl VideoProfile {
    pub fn rd(&self, mode: CodingMode) -> Option<&RdParams> {
        match mode {
            CodingMode::Independent => Some(&self.independent),
            CodingMode::JointPaired => self.joint.as_ref(),
        }
    }

    fn validate(&self, catalog: &Catalog) -> Result<(), CatalogError> {
        let base = format!("profiles.{}", self.name);
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(invalid(format!("{base}.xi"), "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.inpaint_distortion) {
            return Err(invalid(
                format!("{base}.inpaint_distortion"),
                "must lie in [0, 1]",
            ));
        }
        let rates = catalog.distinct_rates();
        let modes = [
            ("independent", Some(&self.independent)),
            ("joint", self.joint.as_ref()),
        ];
        for (label, rd) in modes {
            let Some(rd) = rd else { continue };
            let field = format!("{base}.{label}");
            if !(rd.a.is_finite() && rd.a > 0.0 && rd.a <= 1.0) {
                return Err(invalid(format!("{field}.a"), "must satisfy 0 < a <= 1"));
            }
            if !(rd.b.is_finite() && rd.b > 0.0) {
                return Err(invalid(format!("{field}.b"), "must be > 0"));
            }
            if !(rd.e.is_finite() && rd.e > 0.0) {
                return Err(invalid(format!("{field}.e"), "must be > 0"));
            }
            for &r in &rates {
                let d = 1.0 - (rd.a - rd.b / (r as f64 + rd.e));
                if !(0.0..=1.0).contains(&d) {
                    return Err(invalid(
                        field.clone(),
                        format!("coding distortion {d:.4} at {r} kbps lies outside [0, 1]"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A parsed config document: one representation set and the profiles of
/// the videos stored with it.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogFile {
    pub catalog: Catalog,
    pub profiles: BTreeMap<String, VideoProfile>,
}

impl CatalogFile {
    pub fn profile(&self, video: &str) -> Result<&VideoProfile, CatalogError> {
        let key = video.to_ascii_lowercase();
        self.profiles
            .get(&key)
            .ok_or_else(|| CatalogError::UnknownVideo(video.to_string()))
    }

    /// Serializes back to the config format (explicit `[[views]]` form).
    pub fn to_toml(&self) -> String {
        let c = &self.catalog;
        let raw = RawConfig {
            name: c.name.clone(),
            description: c.description.clone(),
            approximate: c.approximate,
            coding_mode: c.coding_mode,
            depth_rate_overhead_kbps: c.depth_rate_overhead,
            grid: RawGrid {
                num_cameras: c.grid.num_cameras(),
                delta: c.grid.delta(),
            },
            uniform: None,
            views: c
                .views
                .iter()
                .map(|v| RawView {
                    camera: v.camera,
                    rates_kbps: v.rates.clone(),
                })
                .collect(),
            profiles: self
                .profiles
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        RawProfile {
                            xi: p.xi,
                            inpaint_distortion: p.inpaint_distortion,
                            independent: p.independent,
                            joint: p.joint,
                        },
                    )
                })
                .collect(),
        };
        toml::to_string(&raw).expect("catalog serializes")
    }
}

impl FromStr for CatalogFile {
    type Err = CatalogError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| CatalogError::Parse(e.message().to_string()))?;
        raw.into_file()
    }
}

/// Parses a config document and selects the profile of `video`.
pub fn load_catalog(config_text: &str, video: &str) -> Result<(Catalog, VideoProfile), CatalogError> {
    let file: CatalogFile = config_text.parse()?;
    let profile = file.profile(video)?.clone();
    Ok((file.catalog, profile))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default)]
    approximate: bool,
    #[serde(default)]
    coding_mode: CodingMode,
    #[serde(default)]
    depth_rate_overhead_kbps: u32,
    grid: RawGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uniform: Option<RawUniform>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    views: Vec<RawView>,
    #[serde(default)]
    profiles: BTreeMap<String, RawProfile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    num_cameras: u32,
    delta: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUniform {
    views: Vec<u32>,
    rates_kbps: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawView {
    camera: u32,
    rates_kbps: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    xi: f64,
    inpaint_distortion: f64,
    independent: RdParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    joint: Option<RdParams>,
}

impl RawConfig {
    fn into_file(self) -> Result<CatalogFile, CatalogError> {
        let grid = ViewpointGrid::new(self.grid.num_cameras, self.grid.delta)?;
        let views = match (self.uniform, self.views.is_empty()) {
            (Some(_), false) => {
                return Err(invalid(
                    "views",
                    "`uniform` and `views` are mutually exclusive",
                ))
            }
            (Some(u), true) => {
                if u.views.len() > MAX_CAMERAS as usize {
                    return Err(invalid("uniform.views", "too many views"));
                }
                u.views
                    .into_iter()
                    .map(|camera| ViewRates {
                        camera,
                        rates: u.rates_kbps.clone(),
                    })
                    .collect()
            }
            (None, _) => self
                .views
                .into_iter()
                .map(|v| ViewRates {
                    camera: v.camera,
                    rates: v.rates_kbps,
                })
                .collect(),
        };
        let catalog = Catalog {
            name: self.name,
            description: self.description,
            approximate: self.approximate,
            grid,
            views,
            depth_rate_overhead: self.depth_rate_overhead_kbps,
            coding_mode: self.coding_mode,
        };
        catalog.validate()?;
        let mut profiles = BTreeMap::new();
        for (name, p) in self.profiles {
            let key = name.to_ascii_lowercase();
            let profile = VideoProfile {
                name: key.clone(),
                independent: p.independent,
                joint: p.joint,
                xi: p.xi,
                inpaint_distortion: p.inpaint_distortion,
            };
            profile.validate(&catalog)?;
            if profiles.insert(key.clone(), profile).is_some() {
                return Err(invalid(format!("profiles.{key}"), "duplicate profile"));
            }
        }
        Ok(CatalogFile { catalog, profiles })
    }
}

/// Checked-in representation sets, addressable by id.
pub mod presets {
    use super::{CatalogError, CatalogFile};

    pub const L1: &str = include_str!("../presets/l1.toml");
    pub const L2: &str = include_str!("../presets/l2.toml");
    pub const L3: &str = include_str!("../presets/l3.toml");

    const ALL: [(&str, &str); 9] = [
        ("L1", L1),
        ("L2", L2),
        ("L3", L3),
        ("optimized-low-dancer", include_str!("../presets/optimized-low-dancer.toml")),
        ("optimized-low-shark", include_str!("../presets/optimized-low-shark.toml")),
        ("optimized-low-hall", include_str!("../presets/optimized-low-hall.toml")),
        ("optimized-high-dancer", include_str!("../presets/optimized-high-dancer.toml")),
        ("optimized-high-shark", include_str!("../presets/optimized-high-shark.toml")),
        ("optimized-high-hall", include_str!("../presets/optimized-high-hall.toml")),
    ];

    pub fn ids() -> impl Iterator<Item = &'static str> {
        ALL.iter().map(|(id, _)| *id)
    }

    pub fn text(id: &str) -> Option<&'static str> {
        ALL.iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(id))
            .map(|(_, text)| *text)
    }

    pub fn load(id: &str) -> Result<CatalogFile, CatalogError> {
        text(id)
            .ok_or_else(|| CatalogError::Parse(format!("unknown preset `{id}`")))?
            .parse()
    }
}

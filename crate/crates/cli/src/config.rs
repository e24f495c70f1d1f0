//! Experiment configuration: a single TOML document with nested tables.

use std::fmt;
use std::path::PathBuf;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use zakdd::ambiguity::BoxSpec;
use zakdd::channel::{sample_veh_a, ChannelAction, ChannelInstance, PathSpec};
use zakdd::filters::FilterFamily;
use zakdd::radar::{ClutterSpec, SceneSpec};
use zakdd::rxchain::Equalizer;
use zakdd::schemes::DetectOrder;
use zakdd::{GridParams, C64};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Ambiguity,
    Filters,
    Ber,
    Fde,
    Diffcomm,
    Mub,
    Radar,
    Polarimetry,
    Papr,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Self::Ambiguity,
        Self::Filters,
        Self::Ber,
        Self::Fde,
        Self::Diffcomm,
        Self::Mub,
        Self::Radar,
        Self::Polarimetry,
        Self::Papr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ambiguity => "ambiguity",
            Self::Filters => "filters",
            Self::Ber => "ber",
            Self::Fde => "fde",
            Self::Diffcomm => "diffcomm",
            Self::Mub => "mub",
            Self::Radar => "radar",
            Self::Polarimetry => "polarimetry",
            Self::Papr => "papr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub m: usize,
    pub n: usize,
    /// Doppler period in Hz.
    pub nu_p: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridParams, CliError> {
        Ok(GridParams::new(self.m, self.n, self.nu_p)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    VehA,
    Paths,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub model: ChannelModel,
    /// Maximum Doppler in Hz (Veh-A).
    #[serde(default)]
    pub nu_max: f64,
    /// Channel seed; derived from the master seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Explicit paths (model `paths`).
    #[serde(default)]
    pub paths: Vec<PathSpec>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { model: ChannelModel::VehA, nu_max: 815.0, seed: None, paths: vec![] }
    }
}

impl ChannelConfig {
    /// Largest Doppler the model can produce.
    pub fn nu_max(&self) -> f64 {
        match self.model {
            ChannelModel::VehA => self.nu_max,
            ChannelModel::Paths => self.paths.iter().map(|p| p.doppler.abs()).fold(0.0, f64::max),
            ChannelModel::Identity => 0.0,
        }
    }

    pub fn tau_max(&self) -> f64 {
        match self.model {
            ChannelModel::VehA => zakdd::channel::VEH_A_DELAYS[5],
            ChannelModel::Paths => self.paths.iter().map(|p| p.delay).fold(0.0, f64::max),
            ChannelModel::Identity => 0.0,
        }
    }

    /// One realization; `index` distinguishes draws under the same seed.
    pub fn instance(&self, master_seed: u64, index: u64) -> Result<ChannelInstance, CliError> {
        let s = zakdd::seed::derive_seed(self.seed.unwrap_or(master_seed), index);
        Ok(match self.model {
            ChannelModel::VehA => sample_veh_a(self.nu_max, s)?,
            ChannelModel::Paths => ChannelInstance::new(self.paths.clone())?,
            ChannelModel::Identity => ChannelInstance::identity(),
        })
    }
}

/// Transmit waveform selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveformConfig {
    Pulsone { k0: usize, l0: usize },
    Chirp { alpha: i64, beta: i64 },
    /// GDAFT image of `pulsone(k0, l0)` under the default CAZAC parameters.
    Cazac { k0: usize, l0: usize },
    /// Zadoff-Chu code of length N on rectangular chips of M samples.
    ZadoffChu { root: i64 },
    /// Subgroup eigenvector chosen from the scene support.
    Auto,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self::Pulsone { k0: 0, l0: 0 }
    }
}

fn default_q() -> usize {
    16
}
fn default_cgm_iters() -> usize {
    250
}
fn default_cgm_tol() -> f64 {
    1e-6
}
fn default_equalizers() -> Vec<Equalizer> {
    vec![Equalizer::DdMmse, Equalizer::FdCgm]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerConfig {
    #[serde(default = "default_equalizers")]
    pub equalizers: Vec<Equalizer>,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default = "default_cgm_iters")]
    pub cgm_max_iters: usize,
    #[serde(default = "default_cgm_tol")]
    pub cgm_tolerance: f64,
}

impl Default for BerConfig {
    fn default() -> Self {
        Self { equalizers: default_equalizers(), q: 16, cgm_max_iters: 250, cgm_tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbiguityConfig {
    #[serde(default)]
    pub waveform: WaveformConfig,
}

fn default_frames() -> usize {
    90
}
fn default_pilot_period() -> usize {
    zakdd::schemes::DEFAULT_PILOT_PERIOD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffcommConfig {
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_pilot_period")]
    pub pilot_period: usize,
    /// Time between frames in seconds; one frame duration when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject_frame: Option<usize>,
    #[serde(default)]
    pub inject_rate: f64,
}

impl Default for DiffcommConfig {
    fn default() -> Self {
        Self {
            frames: default_frames(),
            pilot_period: default_pilot_period(),
            frame_interval: None,
            window: None,
            inject_frame: None,
            inject_rate: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MubChannel {
    Awgn,
    /// On-grid taps of the configured channel with QR precoding.
    Dd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MubSection {
    pub alpha: f64,
    pub delta: f64,
    #[serde(default = "default_turbo")]
    pub turbo_iters: usize,
    #[serde(default = "default_order")]
    pub detect_order: DetectOrder,
    #[serde(default = "default_mub_channel")]
    pub channel: MubChannel,
}

fn default_turbo() -> usize {
    2
}
fn default_order() -> DetectOrder {
    DetectOrder::FullFirst
}
fn default_mub_channel() -> MubChannel {
    MubChannel::Awgn
}

impl Default for MubSection {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            delta: 0.25,
            turbo_iters: default_turbo(),
            detect_order: default_order(),
            channel: default_mub_channel(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocSection {
    pub target_k: i64,
    pub target_l: i64,
    pub gain: f64,
    pub thresholds: Vec<f64>,
}

fn default_action() -> ChannelAction {
    ChannelAction::ZeroPad
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    #[serde(default = "default_action")]
    pub action: ChannelAction,
    #[serde(default)]
    pub waveform: WaveformConfig,
    #[serde(default)]
    pub scene: SceneSpec,
    /// Imaged window; `0 ≤ k < M, 0 ≤ l < N` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roc: Option<RocSection>,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self { action: default_action(), waveform: WaveformConfig::default(), scene: SceneSpec::default(), image: None, roc: None }
    }
}

/// Point scatterer in bins with its 2×2 response, rows receive (H, V), columns transmit (H, V).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolTargetConfig {
    pub k: i64,
    pub l: i64,
    pub hh: [f64; 2],
    pub hv: [f64; 2],
    pub vh: [f64; 2],
    pub vv: [f64; 2],
}

impl PolTargetConfig {
    pub fn scattering(&self) -> Matrix2<C64> {
        let c = |v: [f64; 2]| C64::new(v[0], v[1]);
        Matrix2::new(c(self.hh), c(self.hv), c(self.vh), c(self.vv))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarimetryConfig {
    #[serde(default = "default_action")]
    pub action: ChannelAction,
    /// Cross-coupling magnitude of `C_TX` and `C_RX`.
    #[serde(default)]
    pub coupling: f64,
    pub window: BoxSpec,
    pub targets: Vec<PolTargetConfig>,
}

impl Default for PolarimetryConfig {
    fn default() -> Self {
        Self {
            action: default_action(),
            coupling: 0.0,
            window: BoxSpec { k_min: 0, k_max: 4, l_min: -3, l_max: 3 },
            targets: vec![PolTargetConfig { k: 2, l: 1, hh: [1.0, 0.0], hv: [0.0, 0.0], vh: [0.0, 0.0], vv: [1.0, 0.0] }],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaprFamily {
    Pulsone,
    Cazac,
    ZakOtfsQam,
    ZadoffChu,
}

fn default_papr_families() -> Vec<PaprFamily> {
    vec![PaprFamily::Pulsone, PaprFamily::Cazac, PaprFamily::ZakOtfsQam]
}

fn default_papr_thresholds() -> Vec<f64> {
    (0..=16).map(f64::from).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaprConfig {
    #[serde(default = "default_papr_families")]
    pub families: Vec<PaprFamily>,
    #[serde(default = "default_papr_thresholds")]
    pub thresholds_db: Vec<f64>,
}

impl Default for PaprConfig {
    fn default() -> Self {
        Self { families: default_papr_families(), thresholds_db: default_papr_thresholds() }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_trials() -> usize {
    1
}
fn default_filter() -> FilterFamily {
    FilterFamily::rrc(0.6)
}

/// Full description of one run. Scalars precede tables so the document serializes back to TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    pub grid: GridConfig,
    #[serde(default = "default_filter")]
    pub filter: FilterFamily,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub ber: BerConfig,
    #[serde(default)]
    pub ambiguity: AmbiguityConfig,
    #[serde(default)]
    pub diffcomm: DiffcommConfig,
    #[serde(default)]
    pub mub: MubSection,
    #[serde(default)]
    pub radar: RadarConfig,
    #[serde(default)]
    pub polarimetry: PolarimetryConfig,
    #[serde(default)]
    pub papr: PaprConfig,
}

/// Byte offset to 1-based `(line, column)`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            CliError::Parse { line, column, message: e.message().trim().replace('\n', " ") }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is representable in TOML")
    }

    /// Tables read by the selected experiment.
    pub fn used_sections(&self) -> &'static [&'static str] {
        match self.experiment {
            Experiment::Ambiguity => &["grid", "channel", "ambiguity"],
            Experiment::Filters => &["grid", "filter"],
            Experiment::Ber | Experiment::Fde => &["grid", "filter", "channel", "ber"],
            Experiment::Diffcomm => &["grid", "channel", "diffcomm"],
            Experiment::Mub => &["grid", "channel", "mub"],
            Experiment::Radar => &["grid", "radar"],
            Experiment::Polarimetry => &["grid", "polarimetry"],
            Experiment::Papr => &["grid", "papr"],
        }
    }

    /// TOML without the tables the experiment ignores; parses back to the same run.
    pub fn to_compact_toml(&self) -> String {
        let mut t = toml::Table::try_from(self).expect("configuration is representable in TOML");
        let used = self.used_sections();
        t.retain(|k, v| !v.is_table() || used.iter().any(|u| *u == k));
        toml::to_string(&t).expect("table serializes")
    }

    /// Checks every referenced section before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let grid = self.grid.build()?;
        let bad = |m: String| Err(CliError::Invalid(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return bad("snr_db entries must be numbers".into());
        }
        match &self.filter {
            FilterFamily::Rrc { beta_tau, beta_nu } if !(0.0..=1.0).contains(beta_tau) || !(0.0..=1.0).contains(beta_nu) => {
                return bad(format!("RRC roll-off must lie in [0, 1], got ({beta_tau}, {beta_nu})"));
            }
            _ => {}
        }
        let ch = &self.channel;
        if !(ch.nu_max >= 0.0) {
            return bad(format!("channel.nu_max must be non-negative, got {}", ch.nu_max));
        }
        if ch.model == ChannelModel::Paths {
            if ch.paths.is_empty() {
                return bad("channel model 'paths' needs at least one path".into());
            }
            ChannelInstance::new(ch.paths.clone())?;
        }
        let needs_snr = matches!(self.experiment, Experiment::Ber | Experiment::Fde | Experiment::Diffcomm | Experiment::Mub);
        if needs_snr && self.snr_db.is_empty() {
            return bad(format!("experiment '{}' needs a non-empty snr_db list", self.experiment));
        }
        match self.experiment {
            Experiment::Ber => {
                if ch.model != ChannelModel::VehA {
                    return bad("the ber experiment draws Veh-A channels; set channel.model = \"veh_a\"".into());
                }
                if self.ber.equalizers.is_empty() {
                    return bad("ber.equalizers must not be empty".into());
                }
                if self.ber.q < 4 {
                    return bad(format!("ber.q must be at least 4, got {}", self.ber.q));
                }
                if self.ber.cgm_max_iters == 0 || !(self.ber.cgm_tolerance > 0.0) {
                    return bad("CGM needs at least one iteration and a positive tolerance".into());
                }
            }
            Experiment::Fde => {
                if self.ber.q < 4 {
                    return bad(format!("ber.q must be at least 4, got {}", self.ber.q));
                }
            }
            Experiment::Diffcomm => {
                let d = &self.diffcomm;
                if d.frames == 0 || d.pilot_period == 0 {
                    return bad("diffcomm.frames and diffcomm.pilot_period must be at least 1".into());
                }
                if !(0.0..=1.0).contains(&d.inject_rate) {
                    return bad("diffcomm.inject_rate must lie in [0, 1]".into());
                }
                if d.frame_interval.is_some_and(|t| !(t >= 0.0)) {
                    return bad("diffcomm.frame_interval must be non-negative".into());
                }
            }
            Experiment::Mub => {
                zakdd::schemes::MubConfig::new(&grid, self.mub.alpha, self.mub.delta)?.validate(&grid)?;
            }
            Experiment::Radar => {
                self.radar.scene.validate()?;
                if let Some(c) = &self.radar.scene.clutter {
                    check_clutter(c)?;
                }
                if let Some(r) = &self.radar.roc {
                    if r.thresholds.is_empty() || r.target_k < 0 {
                        return bad("radar.roc needs thresholds and a non-negative target delay".into());
                    }
                }
            }
            Experiment::Polarimetry => {
                let w = &self.polarimetry.window;
                if w.k_min > w.k_max || w.l_min > w.l_max {
                    return bad("polarimetry.window is empty".into());
                }
            }
            Experiment::Papr => {
                if self.papr.families.is_empty() || self.papr.thresholds_db.is_empty() {
                    return bad("papr.families and papr.thresholds_db must not be empty".into());
                }
            }
            Experiment::Ambiguity | Experiment::Filters => {}
        }
        Ok(())
    }

    /// Crystallization feasibility warnings for the grid/channel pair.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = vec![];
        let Ok(grid) = self.grid.build() else { return out };
        let nu = self.channel.nu_max();
        if 2.0 * nu >= grid.nu_p() {
            out.push(format!(
                "crystallization condition violated: 2*nu_max = {} Hz >= nu_p = {} Hz",
                2.0 * nu,
                grid.nu_p()
            ));
        }
        let tau = self.channel.tau_max();
        if tau >= grid.tau_p() {
            out.push(format!(
                "crystallization condition violated: tau_max = {tau} s >= tau_p = {} s",
                grid.tau_p()
            ));
        }
        out
    }
}

fn check_clutter(c: &ClutterSpec) -> Result<(), CliError> {
    if c.n_scatterers == 0 {
        return Err(CliError::Invalid("radar clutter needs at least one scatterer".into()));
    }
    Ok(())
}

/// Canned configuration for `zakdd demo <experiment>`.
pub fn demo(experiment: Experiment) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        experiment,
        seed: 1,
        output: PathBuf::from(format!("out/{}", experiment.name())),
        trials: 1,
        snr_db: vec![],
        grid: GridConfig { m: 31, n: 37, nu_p: 30e3 },
        filter: default_filter(),
        channel: ChannelConfig::default(),
        ber: BerConfig::default(),
        ambiguity: AmbiguityConfig::default(),
        diffcomm: DiffcommConfig::default(),
        mub: MubSection::default(),
        radar: RadarConfig::default(),
        polarimetry: PolarimetryConfig::default(),
        papr: PaprConfig::default(),
    };
    match experiment {
        Experiment::Ambiguity => {
            cfg.grid = GridConfig { m: 13, n: 16, nu_p: 30e3 };
        }
        Experiment::Filters => {
            cfg.grid = GridConfig { m: 12, n: 14, nu_p: 30e3 };
        }
        Experiment::Ber => {
            cfg.trials = 88;
            cfg.snr_db = vec![10.0, 14.0, 18.0];
        }
        Experiment::Fde => {
            cfg.trials = 4;
            cfg.snr_db = vec![14.0];
        }
        Experiment::Diffcomm => {
            let g = GridParams::new(31, 37, 30e3).expect("demo grid");
            let path = |re: f64, im: f64, k: f64, l: f64| PathSpec {
                gain: C64::new(re, im),
                delay: k / g.bandwidth(),
                doppler: l / g.duration(),
            };
            cfg.snr_db = vec![12.0, 20.0];
            cfg.diffcomm.frames = 62;
            cfg.diffcomm.window = Some(BoxSpec { k_min: -1, k_max: 3, l_min: -2, l_max: 2 });
            cfg.channel = ChannelConfig {
                model: ChannelModel::Paths,
                nu_max: 0.0,
                seed: None,
                paths: vec![path(0.8, 0.0, 0.0, 0.0), path(0.0, 0.5, 1.0, 1.0), path(-0.3, 0.1, 2.0, -1.0)],
            };
        }
        Experiment::Mub => {
            cfg.grid = GridConfig { m: 11, n: 13, nu_p: 30e3 };
            cfg.trials = 20;
            cfg.snr_db = vec![10.0, 20.0, 30.0];
        }
        Experiment::Radar => {
            let g = GridParams::new(13, 16, 30e3).expect("demo grid");
            cfg.grid = GridConfig { m: 13, n: 16, nu_p: 30e3 };
            let path = |k: f64, l: f64, re: f64, im: f64| PathSpec {
                gain: C64::new(re, im),
                delay: k / g.bandwidth(),
                doppler: l / g.duration(),
            };
            cfg.radar.scene = SceneSpec {
                targets: vec![
                    path(0.0, 0.0, 1.0, 0.0),
                    path(3.0, 5.0, 0.0, 0.8),
                    path(7.0, 2.0, -0.6, 0.3),
                    path(10.0, 14.0, 0.5, -0.5),
                ],
                clutter: None,
            };
            cfg.radar.roc = Some(RocSection {
                target_k: 5,
                target_l: 2,
                gain: 0.3,
                thresholds: (1..=40).map(|i| f64::from(i) / 100.0).collect(),
            });
            cfg.trials = 200;
            cfg.snr_db = vec![20.0];
        }
        Experiment::Polarimetry => {
            cfg.grid = GridConfig { m: 13, n: 17, nu_p: 30e3 };
            cfg.polarimetry.targets = vec![
                PolTargetConfig { k: 2, l: 3, hh: [0.6, -0.4], hv: [0.0, 0.0], vh: [0.0, 0.0], vv: [0.6, -0.4] },
                PolTargetConfig { k: 4, l: -2, hh: [0.2, 0.1], hv: [0.3, 0.0], vh: [0.3, 0.0], vv: [-0.2, 0.1] },
            ];
            cfg.polarimetry.window = BoxSpec { k_min: 0, k_max: 6, l_min: -5, l_max: 5 };
        }
        Experiment::Papr => {
            cfg.trials = 500;
        }
    }
    cfg
}

/// Clutter used by the ROC experiment: metropolitan γ over the box next to the radar.
pub fn roc_clutter() -> ClutterSpec {
    ClutterSpec::new(zakdd::radar::METRO_GAMMA_DB, BoxSpec { k_min: 0, k_max: 4, l_min: -4, l_max: 4 })
}

//! Run configuration. See `docs/config.md` for the grammar.

use std::path::{Path, PathBuf};

use georabi::dynamics::{EvolveMode, DEFAULT_DT_DIVISOR, DEFAULT_RATIO_MAX, DEFAULT_SAMPLE_STRIDE, DEFAULT_WINDOW_FACTOR};
use georabi::models::{Band, ModelSettings};
use georabi::protocols::PlanTree;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lambda: Vec<f64>,
    pub model: ModelTable,
    #[serde(default)]
    pub drive: DriveTable,
    #[serde(default)]
    pub sim: SimTable,
    #[serde(default)]
    pub protocol: ProtocolTable,
    #[serde(default)]
    pub lz: LzTable,
    #[serde(default)]
    pub path: PathTable,
    #[serde(default)]
    pub output: OutputTable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTable {
    pub name: String,
    #[serde(default)]
    pub settings: ModelSettings,
}

/// `omega = "resonant"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Omega {
    Value(f64),
    Named(OmegaName),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaName {
    Resonant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveTable {
    pub j: usize,
    /// Second tone; required by `tomo` and `extract`.
    pub k: Option<usize>,
    /// Absolute amplitude `A`. Exclusive with `amplitude_ratio`.
    pub amplitude: Option<f64>,
    /// `A / omega`; the default when neither is given is 0.02.
    pub amplitude_ratio: Option<f64>,
    pub omega: Omega,
    pub phase: f64,
    /// Pulse length; commands that plan their own duration ignore it.
    pub duration: Option<f64>,
    pub ratio_max: f64,
}

impl Default for DriveTable {
    fn default() -> Self {
        Self {
            j: 0,
            k: None,
            amplitude: None,
            amplitude_ratio: None,
            omega: Omega::Named(OmegaName::Resonant),
            phase: 0.0,
            duration: None,
            ratio_max: DEFAULT_RATIO_MAX,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimTable {
    pub mode: EvolveMode,
    /// Steps per drive period.
    pub dt_divisor: f64,
    pub sample_stride: usize,
    /// Spectroscopy record length in slowest Rabi periods.
    pub record_len: f64,
}

impl Default for SimTable {
    fn default() -> Self {
        Self { mode: EvolveMode::Rwa, dt_divisor: DEFAULT_DT_DIVISOR, sample_stride: DEFAULT_SAMPLE_STRIDE, record_len: 30.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Branch,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Equal superposition of the single-drive pair states of `band`.
    Pairs,
    /// Gauge-invariant band projection of a fixed pseudo-random vector.
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencySource {
    Spectroscopy,
    Geometry,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolTable {
    pub band: Band,
    pub measure_mode: MeasureKind,
    pub seed: u64,
    pub shots: u64,
    /// Longest preparation pulse; `100 pi / Omega_min` when absent.
    pub t_max: Option<f64>,
    /// Fixes the planner grid integer.
    pub n: Option<u64>,
    /// Two-pair partition by pair label (descending coupling eigenvalue).
    pub even: Option<Vec<usize>>,
    pub odd: Option<Vec<usize>>,
    /// Partition tree for more than two pairs.
    pub tree: Option<PlanTree>,
    pub initial: InitialState,
    pub frequencies: FrequencySource,
    /// Phase of the two-tone pulse used by `tomo`.
    pub two_tone_phase: f64,
}

impl Default for ProtocolTable {
    fn default() -> Self {
        Self {
            band: Band::Minus,
            measure_mode: MeasureKind::Branch,
            seed: 0,
            shots: georabi::protocols::DEFAULT_SHOTS,
            t_max: None,
            n: None,
            even: None,
            odd: None,
            tree: None,
            initial: InitialState::Pairs,
            frequencies: FrequencySource::Spectroscopy,
            two_tone_phase: std::f64::consts::FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LzTable {
    /// Sweep rates in units of `|V_nu|^2 = A^2 q_nu`. Exclusive with `alphas`.
    pub alpha_ratios: Option<Vec<f64>>,
    pub alphas: Option<Vec<f64>>,
    pub window_factor: f64,
    pub t_edge: Option<f64>,
    pub nu: usize,
    /// Compare with the spectroscopy estimate of the same pair.
    pub cross_check: bool,
}

impl Default for LzTable {
    fn default() -> Self {
        Self {
            alpha_ratios: None,
            alphas: None,
            window_factor: DEFAULT_WINDOW_FACTOR,
            t_edge: None,
            nu: 0,
            cross_check: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathTable {
    /// Points `s * lambda`. Exclusive with `points`.
    pub scales: Option<Vec<f64>>,
    pub points: Option<Vec<Vec<f64>>>,
    pub shots: u64,
}

impl Default for PathTable {
    fn default() -> Self {
        Self { scales: None, points: None, shots: georabi::dynamics::ValidityOptions::default().shots }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputTable {
    /// Not echoed into result files, so identical runs in different places hash identically.
    #[serde(skip_serializing)]
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputTable {
    fn default() -> Self {
        Self { directory: PathBuf::from("results"), formats: vec![Format::Json, Format::Csv] }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        if cfg.lz.alpha_ratios.is_none() && cfg.lz.alphas.is_none() {
            cfg.lz.alpha_ratios = Some(vec![30.0, 50.0, 100.0]);
        }
        if cfg.path.scales.is_none() && cfg.path.points.is_none() {
            cfg.path.scales = Some(vec![1.0, 0.5, 0.2, 0.1]);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range and consistency checks that do not need the model.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = |key: &str, v: f64| if v.is_finite() { Ok(()) } else { bad(format!("`{key}` must be finite")) };
        let positive = |key: &str, v: f64| if v.is_finite() && v > 0.0 { Ok(()) } else { bad(format!("`{key}` must be positive")) };
        if self.lambda.is_empty() {
            return bad("`lambda` must not be empty");
        }
        for &l in &self.lambda {
            finite("lambda", l)?;
        }
        let d = &self.drive;
        if d.amplitude.is_some() && d.amplitude_ratio.is_some() {
            return bad("give either `drive.amplitude` or `drive.amplitude_ratio`, not both");
        }
        if let Some(a) = d.amplitude.or(d.amplitude_ratio) {
            if !(a.is_finite() && a >= 0.0) {
                return bad("drive amplitude must be finite and >= 0");
            }
        }
        if let Omega::Value(w) = d.omega {
            positive("drive.omega", w)?;
        }
        finite("drive.phase", d.phase)?;
        if let Some(t) = d.duration {
            positive("drive.duration", t)?;
        }
        positive("drive.ratio_max", d.ratio_max)?;
        if d.k == Some(d.j) {
            return bad("`drive.k` must differ from `drive.j`");
        }
        positive("sim.dt_divisor", self.sim.dt_divisor)?;
        if self.sim.dt_divisor < 16.0 {
            return bad("`sim.dt_divisor` must be at least 16");
        }
        if self.sim.sample_stride == 0 {
            return bad("`sim.sample_stride` must be at least 1");
        }
        positive("sim.record_len", self.sim.record_len)?;
        let p = &self.protocol;
        if p.shots == 0 {
            return bad("`protocol.shots` must be at least 1");
        }
        if let Some(t) = p.t_max {
            positive("protocol.t_max", t)?;
        }
        if p.n == Some(0) {
            return bad("`protocol.n` must be at least 1");
        }
        if p.even.is_some() != p.odd.is_some() {
            return bad("`protocol.even` and `protocol.odd` must be given together");
        }
        if p.tree.is_some() && p.even.is_some() {
            return bad("give either `protocol.tree` or `protocol.even`/`protocol.odd`");
        }
        finite("protocol.two_tone_phase", p.two_tone_phase)?;
        let lz = &self.lz;
        match (&lz.alpha_ratios, &lz.alphas) {
            (Some(_), Some(_)) => return bad("give either `lz.alpha_ratios` or `lz.alphas`, not both"),
            (None, None) => return bad("`lz` needs `alpha_ratios` or `alphas`"),
            (Some(v), None) | (None, Some(v)) => {
                if v.is_empty() {
                    return bad("sweep rate list must not be empty");
                }
                for &a in v {
                    positive("lz sweep rate", a)?;
                }
            }
        }
        positive("lz.window_factor", lz.window_factor)?;
        if let Some(t) = lz.t_edge {
            positive("lz.t_edge", t)?;
        }
        match (&self.path.scales, &self.path.points) {
            (Some(_), Some(_)) => return bad("give either `path.scales` or `path.points`, not both"),
            (None, None) => return bad("`path` needs `scales` or `points`"),
            (Some(s), None) => {
                for &x in s {
                    finite("path.scales", x)?;
                }
            }
            (None, Some(pts)) => {
                for pt in pts {
                    if pt.len() != self.lambda.len() {
                        return bad("every `path.points` entry must have the length of `lambda`");
                    }
                    for &x in pt {
                        finite("path.points", x)?;
                    }
                }
            }
        }
        if self.path.shots == 0 {
            return bad("`path.shots` must be at least 1");
        }
        if self.output.formats.is_empty() {
            return bad("`output.formats` must not be empty");
        }
        Ok(())
    }

    pub fn amplitude_for(&self, omega: f64) -> f64 {
        match (self.drive.amplitude, self.drive.amplitude_ratio) {
            (Some(a), _) => a,
            (None, Some(r)) => r * omega,
            (None, None) => 0.02 * omega,
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "lambda = [0.1, 0.2]\n[model]\nname = \"spin_half\"\n";

    #[test]
    fn defaults_fill_sweep_lists() {
        let cfg = RunConfig::parse(BASE).unwrap();
        assert_eq!(cfg.lz.alpha_ratios, Some(vec![30.0, 50.0, 100.0]));
        assert_eq!(cfg.path.scales, Some(vec![1.0, 0.5, 0.2, 0.1]));
        assert_eq!(cfg.amplitude_for(2.0), 0.04);
        let cfg = RunConfig::parse(&format!("{BASE}[lz]\nalphas = [0.01]\n[path]\npoints = [[0.0, 0.1]]\n")).unwrap();
        assert!(cfg.lz.alpha_ratios.is_none() && cfg.path.scales.is_none());
    }

    #[test]
    fn echo_round_trips() {
        let text = format!("{BASE}[protocol.tree.node]\neven = [0]\nodd = [1, 2]\nafter_even = \"auto\"\nafter_odd = \"auto\"\n");
        let cfg = RunConfig::parse(&text).unwrap();
        assert!(matches!(cfg.protocol.tree, Some(PlanTree::Node { .. })));
        let echo = toml::to_string(&cfg).unwrap();
        let back = RunConfig::parse(&echo).unwrap();
        assert_eq!(toml::to_string(&back).unwrap(), echo);
    }

    #[test]
    fn conflicts_are_rejected() {
        for extra in [
            "[drive]\namplitude = 0.1\namplitude_ratio = 0.1\n",
            "[drive]\nk = 0\n",
            "[drive]\nomega = \"fast\"\n",
            "[lz]\nalphas = [0.1]\nalpha_ratios = [30.0]\n",
            "[protocol]\neven = [0]\n",
            "[protocol]\nshots = 0\n",
            "[sim]\nmode = \"exact\"\n",
            "[output]\nformats = []\n",
        ] {
            assert!(RunConfig::parse(&format!("{BASE}{extra}")).is_err(), "{extra}");
        }
    }
}

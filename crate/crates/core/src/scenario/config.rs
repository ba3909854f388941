//! Scenario description files.
//!
//! A scenario is a TOML document; every table rejects unknown keys.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::detection::{ChargeDetectorSpec, ClickPairSpec, DEFAULT_GAIN, DEFAULT_NOISE_PHOTONS, DEFAULT_QUANTUM_EFFICIENCY};
use crate::error::{Error, Result};
use crate::lightmodel::{detuning_quad_ratio, LightKind, LightModel, DEFAULT_DETUNING_WIDTH_NM, MAX_EXACT_ORDER};
use crate::nonlinear::StageSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    pub pulses: u64,
    pub seed: u64,
    pub source: SourceConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<StageSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detectors: Vec<DetectorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub postselect: Option<PostSelectConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub analyses: Vec<AnalysisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Coherent,
    Thermal,
    Bsv,
    /// Explicit `quad_ratio`, or one derived from `wavelength_nm`.
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub kind: SourceKind,
    pub mean_photons: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_ratio: Option<f64>,
    #[serde(default = "one")]
    pub temporal_modes: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(default = "default_detuning_width")]
    pub detuning_width_nm: f64,
}

fn one() -> u32 {
    1
}

fn default_detuning_width() -> f64 {
    DEFAULT_DETUNING_WIDTH_NM
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorConfig {
    Charge {
        name: String,
        port: String,
        #[serde(default = "default_gain")]
        gain: f64,
        #[serde(default = "default_qe")]
        quantum_efficiency: f64,
        #[serde(default = "default_noise")]
        noise_photons: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        saturation: Option<f64>,
        #[serde(default)]
        deterministic: bool,
    },
    Hbt {
        name: String,
        port: String,
        /// Per-arm efficiency on the harmonic photon number.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        efficiency: Option<f64>,
        /// Alternative to `efficiency`: the efficiency is set to
        /// `2·p / ⟨E⟩` so that the mean per-arm click probability is about `p`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_click_probability: Option<f64>,
        #[serde(default = "half")]
        split: f64,
        #[serde(default)]
        dark_count_probability: f64,
    },
}

fn default_gain() -> f64 {
    DEFAULT_GAIN
}
fn default_qe() -> f64 {
    DEFAULT_QUANTUM_EFFICIENCY
}
fn default_noise() -> f64 {
    DEFAULT_NOISE_PHOTONS
}
fn half() -> f64 {
    0.5
}

impl DetectorConfig {
    pub fn name(&self) -> &str {
        match self {
            DetectorConfig::Charge { name, .. } | DetectorConfig::Hbt { name, .. } => name,
        }
    }

    pub fn port(&self) -> &str {
        match self {
            DetectorConfig::Charge { port, .. } | DetectorConfig::Hbt { port, .. } => port,
        }
    }

    pub fn is_charge(&self) -> bool {
        matches!(self, DetectorConfig::Charge { .. })
    }

    pub fn charge_spec(&self) -> Option<ChargeDetectorSpec> {
        match *self {
            DetectorConfig::Charge { gain, quantum_efficiency, noise_photons, saturation, deterministic, .. } => {
                Some(ChargeDetectorSpec { gain, quantum_efficiency, noise_photons, saturation, deterministic })
            }
            DetectorConfig::Hbt { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Narrowest median-centred window keeping `min_pulses`.
    Narrowest,
    /// Median-centred window widened until the reference g⁽²⁾ reaches `target_g2`.
    TargetG2,
    /// Half-width `relative_width` times the median.
    Relative,
    /// Explicit `window = [lo, hi]` in area units.
    Absolute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostSelectConfig {
    /// Charge detector whose areas define the window.
    pub monitor: String,
    pub mode: WindowMode,
    #[serde(default = "default_min_pulses")]
    pub min_pulses: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_g2: Option<f64>,
    /// Charge detector whose conditional g⁽²⁾ is tuned in `target_g2` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

fn default_min_pulses() -> usize {
    1000
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    #[default]
    All,
    Selected,
}

impl Subset {
    pub fn as_str(&self) -> &'static str {
        match self {
            Subset::All => "all",
            Subset::Selected => "selected",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisConfig {
    /// g⁽ⁿ⁾ from charge-detector areas.
    Gn {
        detector: String,
        orders: Vec<u32>,
        #[serde(default)]
        subset: Subset,
    },
    /// Normally ordered g⁽ⁿ⁾ from charge-detector photon counts.
    FactorialGn {
        detector: String,
        orders: Vec<u32>,
        #[serde(default)]
        subset: Subset,
    },
    /// Coincidence g⁽²⁾ of a click-detector pair.
    HbtG2 {
        detector: String,
        #[serde(default)]
        subset: Subset,
    },
    /// ξ⁽ⁿ⁾ = ⟨E_n⟩/⟨F⟩ⁿ from the pump and harmonic photon numbers.
    Efficiency {
        orders: Vec<u32>,
        #[serde(default)]
        subset: Subset,
    },
    /// Exact g⁽²⁾ of the n-th harmonic predicted from the source model.
    Prediction { orders: Vec<u32> },
    /// Power-law fit of harmonic flux against pump flux across the sweep.
    PowerLaw {
        orders: Vec<u32>,
        #[serde(default)]
        subset: Subset,
        #[serde(default = "yes")]
        fix_exponent: bool,
    },
    /// Fitted-coefficient and correlation-function ratios between all and
    /// post-selected pulses across the sweep.
    SelectionRatio { detector: String, orders: Vec<u32> },
    /// Linear regression of ξ⁽ⁿ⁾/η against measured g⁽ⁿ⁾ across the sweep.
    EfficiencyLinearity {
        detector: String,
        orders: Vec<u32>,
        #[serde(default)]
        subset: Subset,
    },
}

fn yes() -> bool {
    true
}

impl AnalysisConfig {
    pub fn is_cross_grid(&self) -> bool {
        matches!(
            self,
            AnalysisConfig::PowerLaw { .. } | AnalysisConfig::SelectionRatio { .. } | AnalysisConfig::EfficiencyLinearity { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    MeanPhotons,
    QuadRatio,
    WavelengthNm,
    Kappa,
    TemporalModes,
    RelativeWidth,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::MeanPhotons => "mean_photons",
            SweepParameter::QuadRatio => "quad_ratio",
            SweepParameter::WavelengthNm => "wavelength_nm",
            SweepParameter::Kappa => "kappa",
            SweepParameter::TemporalModes => "temporal_modes",
            SweepParameter::RelativeWidth => "relative_width",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_max_blocks")]
    pub max_blocks: usize,
}

fn default_resamples() -> usize {
    200
}
fn default_max_blocks() -> usize {
    4096
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { resamples: default_resamples(), max_blocks: default_max_blocks() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "yes")]
    pub pulse_records: bool,
    #[serde(default = "default_chunk_rows")]
    pub chunk_rows: u64,
}

fn default_chunk_rows() -> u64 {
    1_000_000
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { pulse_records: true, chunk_rows: default_chunk_rows() }
    }
}

/// Port names a detector can be attached to.
pub const PUMP_PORT: &str = "pump";
pub const MONITOR_PORT: &str = "monitor";

pub fn harmonic_port(order: u32) -> String {
    format!("harmonic{order}")
}

/// Parameters of the chain at one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSetup {
    pub index: usize,
    pub grid_value: Option<f64>,
    pub model: LightModel,
    pub stages: Vec<StageSpec>,
    pub postselect: Option<PostSelectConfig>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            scenario: scenario_id_hint(text),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| self.config_error(e.to_string()))
    }

    pub(crate) fn config_error(&self, message: impl Into<String>) -> Error {
        Error::Config { scenario: self.scenario_id.clone(), message: message.into() }
    }

    pub fn harmonic_stages(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.stages.iter().filter_map(|s| match *s {
            StageSpec::Harmonic { order, eta } => Some((order, eta)),
            _ => None,
        })
    }

    pub fn has_sampler(&self) -> bool {
        self.stages.iter().any(|s| matches!(s, StageSpec::Sampler { .. }))
    }

    pub fn detector(&self, name: &str) -> Option<(usize, &DetectorConfig)> {
        self.detectors.iter().enumerate().find(|(_, d)| d.name() == name)
    }

    pub fn grid_len(&self) -> usize {
        self.sweep.as_ref().map_or(1, |s| s.values.len())
    }

    /// Checks the scenario for structural and parameter errors.
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(self.config_error(m));
        if !valid_label(&self.scenario_id) {
            return err(format!("scenario_id `{}` must be non-empty [A-Za-z0-9_.-]", self.scenario_id));
        }
        if self.pulses < 2 {
            return err("pulses must be >= 2".into());
        }
        if self.bootstrap.max_blocks == 0 {
            return err("bootstrap.max_blocks must be >= 1".into());
        }
        if self.output.chunk_rows == 0 {
            return err("output.chunk_rows must be >= 1".into());
        }

        // stage chain: pump-line elements first, harmonic generators last
        let mut seen_harmonic = false;
        let mut orders = BTreeSet::new();
        let (mut samplers, mut absorbers) = (0, 0);
        for (i, stage) in self.stages.iter().enumerate() {
            stage.validate().map_err(|e| self.config_error(format!("stage {i}: {e}")))?;
            match stage {
                StageSpec::Harmonic { order, .. } => {
                    seen_harmonic = true;
                    if !orders.insert(*order) {
                        return err(format!("stage {i}: duplicate harmonic order {order}"));
                    }
                }
                other => {
                    if seen_harmonic {
                        return err(format!(
                            "stage {i}: {} cannot follow a harmonic generator; harmonic output only feeds detectors",
                            stage_name(other)
                        ));
                    }
                    match other {
                        StageSpec::Sampler { .. } => samplers += 1,
                        StageSpec::Absorber { .. } => absorbers += 1,
                        _ => {}
                    }
                }
            }
        }
        if samplers > 1 {
            return err("at most one sampler stage is supported".into());
        }

        let mut ports: BTreeSet<String> = BTreeSet::from([PUMP_PORT.to_string()]);
        if samplers == 1 {
            ports.insert(MONITOR_PORT.to_string());
        }
        for o in &orders {
            ports.insert(harmonic_port(*o));
        }

        let mut names = BTreeSet::new();
        for det in &self.detectors {
            let name = det.name();
            if !valid_label(name) {
                return err(format!("detector name `{name}` must be non-empty [A-Za-z0-9_.-]"));
            }
            if !names.insert(name) {
                return err(format!("duplicate detector name `{name}`"));
            }
            if !ports.contains(det.port()) {
                return err(format!(
                    "detector `{name}`: unknown port `{}` (available: {})",
                    det.port(),
                    ports.iter().cloned().collect::<Vec<_>>().join(", ")
                ));
            }
            match det {
                DetectorConfig::Charge { .. } => {
                    det.charge_spec()
                        .unwrap()
                        .validate()
                        .map_err(|e| self.config_error(format!("detector `{name}`: {e}")))?;
                }
                DetectorConfig::Hbt { port, efficiency, mean_click_probability, split, dark_count_probability, .. } => {
                    if !port.starts_with("harmonic") {
                        return err(format!("detector `{name}`: click-detector pairs only attach to harmonic ports"));
                    }
                    let eff = match (efficiency, mean_click_probability) {
                        (Some(e), None) => *e,
                        (None, Some(p)) => {
                            if !(*p > 0.0 && *p < 1.0) {
                                return err(format!("detector `{name}`: mean_click_probability must lie in (0, 1)"));
                            }
                            1.0
                        }
                        _ => {
                            return err(format!(
                                "detector `{name}`: set exactly one of efficiency and mean_click_probability"
                            ))
                        }
                    };
                    ClickPairSpec { efficiency: eff, split: *split, dark_count_probability: *dark_count_probability }
                        .validate()
                        .map_err(|e| self.config_error(format!("detector `{name}`: {e}")))?;
                }
            }
        }

        let charge = |name: &str, what: &str| -> Result<()> {
            match self.detector(name) {
                Some((_, d)) if d.is_charge() => Ok(()),
                Some(_) => Err(self.config_error(format!("{what}: detector `{name}` is not a charge detector"))),
                None => Err(self.config_error(format!("{what}: unknown detector `{name}`"))),
            }
        };

        if let Some(ps) = &self.postselect {
            charge(&ps.monitor, "postselect.monitor")?;
            if ps.min_pulses == 0 {
                return err("postselect.min_pulses must be >= 1".into());
            }
            match ps.mode {
                WindowMode::Narrowest => {}
                WindowMode::TargetG2 => {
                    match ps.target_g2 {
                        Some(t) if t >= 1.0 && t.is_finite() => {}
                        _ => return err("postselect: target_g2 mode needs target_g2 >= 1".into()),
                    }
                    let reference = ps
                        .reference
                        .as_deref()
                        .ok_or_else(|| self.config_error("postselect: target_g2 mode needs a reference detector"))?;
                    charge(reference, "postselect.reference")?;
                }
                WindowMode::Relative => match ps.relative_width {
                    Some(w) if w >= 0.0 && w.is_finite() => {}
                    _ if self.sweep.as_ref().is_some_and(|s| s.parameter == SweepParameter::RelativeWidth) => {}
                    _ => return err("postselect: relative mode needs relative_width >= 0".into()),
                },
                WindowMode::Absolute => match ps.window {
                    Some([lo, hi]) if lo <= hi => {}
                    _ => return err("postselect: absolute mode needs window = [lo, hi] with lo <= hi".into()),
                },
            }
        }

        let grid = self.grid_len();
        for (i, a) in self.analyses.iter().enumerate() {
            let what = format!("analysis {i}");
            let subset_ok = |s: &Subset| -> Result<()> {
                if *s == Subset::Selected && self.postselect.is_none() {
                    return Err(self.config_error(format!("{what}: subset `selected` needs a postselect table")));
                }
                Ok(())
            };
            let harmonic_orders = |os: &[u32]| -> Result<()> {
                if os.is_empty() {
                    return Err(self.config_error(format!("{what}: orders must not be empty")));
                }
                for o in os {
                    if !orders.contains(o) {
                        return Err(self.config_error(format!("{what}: no harmonic stage of order {o}")));
                    }
                }
                Ok(())
            };
            let moment_orders = |os: &[u32]| -> Result<()> {
                if os.is_empty() || os.iter().any(|&o| o == 0 || o > MAX_EXACT_ORDER) {
                    return Err(self.config_error(format!("{what}: orders must lie in 1..={MAX_EXACT_ORDER}")));
                }
                Ok(())
            };
            let cross_grid = |min: usize| -> Result<()> {
                if grid < min {
                    return Err(self.config_error(format!("{what}: needs a sweep with at least {min} points")));
                }
                Ok(())
            };
            match a {
                AnalysisConfig::Gn { detector, orders: os, subset } | AnalysisConfig::FactorialGn { detector, orders: os, subset } => {
                    charge(detector, &what)?;
                    moment_orders(os)?;
                    subset_ok(subset)?;
                }
                AnalysisConfig::HbtG2 { detector, subset } => {
                    match self.detector(detector) {
                        Some((_, DetectorConfig::Hbt { .. })) => {}
                        _ => return err(format!("{what}: `{detector}` is not a click-detector pair")),
                    }
                    subset_ok(subset)?;
                }
                AnalysisConfig::Efficiency { orders: os, subset } => {
                    harmonic_orders(os)?;
                    subset_ok(subset)?;
                }
                AnalysisConfig::Prediction { orders: os } => {
                    if os.is_empty() || os.iter().any(|&o| o == 0 || 2 * o > MAX_EXACT_ORDER) {
                        return err(format!("{what}: prediction orders must lie in 1..={}", MAX_EXACT_ORDER / 2));
                    }
                }
                AnalysisConfig::PowerLaw { orders: os, subset, .. } => {
                    harmonic_orders(os)?;
                    subset_ok(subset)?;
                    cross_grid(3)?;
                }
                AnalysisConfig::SelectionRatio { detector, orders: os } => {
                    charge(detector, &what)?;
                    harmonic_orders(os)?;
                    subset_ok(&Subset::Selected)?;
                    cross_grid(3)?;
                }
                AnalysisConfig::EfficiencyLinearity { detector, orders: os, subset } => {
                    charge(detector, &what)?;
                    harmonic_orders(os)?;
                    subset_ok(subset)?;
                    cross_grid(3)?;
                }
            }
        }

        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return err("sweep.values must not be empty".into());
            }
            if sweep.values.iter().any(|v| !v.is_finite()) {
                return err("sweep.values must be finite".into());
            }
            match sweep.parameter {
                SweepParameter::QuadRatio | SweepParameter::WavelengthNm => {
                    if self.source.kind != SourceKind::Gaussian {
                        return err(format!("sweeping {} needs source.kind = \"gaussian\"", sweep.parameter.as_str()));
                    }
                }
                SweepParameter::Kappa => {
                    if absorbers != 1 {
                        return err("sweeping kappa needs exactly one absorber stage".into());
                    }
                }
                SweepParameter::TemporalModes => {
                    if sweep.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0 || *v > f64::from(u32::MAX)) {
                        return err("temporal_modes sweep values must be positive integers".into());
                    }
                }
                SweepParameter::RelativeWidth => {
                    if !matches!(&self.postselect, Some(p) if p.mode == WindowMode::Relative) {
                        return err("sweeping relative_width needs postselect mode = \"relative\"".into());
                    }
                }
                SweepParameter::MeanPhotons => {}
            }
        }

        // every grid point must resolve to a valid chain
        for i in 0..grid {
            self.point(i)?;
        }
        Ok(())
    }

    fn source_model(&self, quad_override: Option<f64>, wavelength_override: Option<f64>) -> Result<LightModel> {
        let s = &self.source;
        let err = |m: String| self.config_error(format!("source: {m}"));
        let kind_mismatch = s.kind != SourceKind::Gaussian && (s.quad_ratio.is_some() || s.wavelength_nm.is_some());
        if kind_mismatch {
            return Err(err("quad_ratio and wavelength_nm only apply to kind = \"gaussian\"".into()));
        }
        let r = match s.kind {
            SourceKind::Coherent => 0.0,
            SourceKind::Thermal => 1.0,
            SourceKind::Bsv => 0.0,
            SourceKind::Gaussian => {
                if let Some(r) = quad_override {
                    r
                } else if let Some(l) = wavelength_override.or(s.wavelength_nm) {
                    if s.quad_ratio.is_some() && wavelength_override.is_none() {
                        return Err(err("set either quad_ratio or wavelength_nm, not both".into()));
                    }
                    detuning_quad_ratio(l, s.detuning_width_nm).map_err(|e| err(e.to_string()))?
                } else {
                    s.quad_ratio.ok_or_else(|| err("gaussian source needs quad_ratio or wavelength_nm".into()))?
                }
            }
        };
        let kind = if s.kind == SourceKind::Coherent { LightKind::Coherent } else { LightKind::GaussianQuadrature };
        LightModel::new(kind, s.mean_photons, r, s.temporal_modes).map_err(|e| err(e.to_string()))
    }

    /// Chain parameters at sweep point `index`.
    pub fn point(&self, index: usize) -> Result<PointSetup> {
        let value = self.sweep.as_ref().map(|s| s.values[index]);
        let mut stages = self.stages.clone();
        let mut postselect = self.postselect.clone();
        let model = match (self.sweep.as_ref().map(|s| s.parameter), value) {
            (Some(SweepParameter::MeanPhotons), Some(v)) => self
                .source_model(None, None)?
                .with_mean_photons(v)
                .map_err(|e| self.config_error(format!("sweep point {index}: {e}")))?,
            (Some(SweepParameter::QuadRatio), Some(v)) => self.source_model(Some(v), None)?,
            (Some(SweepParameter::WavelengthNm), Some(v)) => self.source_model(None, Some(v))?,
            (Some(SweepParameter::TemporalModes), Some(v)) => self
                .source_model(None, None)?
                .with_temporal_modes(v as u32)
                .map_err(|e| self.config_error(format!("sweep point {index}: {e}")))?,
            (Some(SweepParameter::Kappa), Some(v)) => {
                for s in stages.iter_mut() {
                    if let StageSpec::Absorber { kappa } = s {
                        *kappa = v;
                    }
                }
                self.source_model(None, None)?
            }
            (Some(SweepParameter::RelativeWidth), Some(v)) => {
                if let Some(p) = postselect.as_mut() {
                    p.relative_width = Some(v);
                }
                self.source_model(None, None)?
            }
            _ => self.source_model(None, None)?,
        };
        for (i, s) in stages.iter().enumerate() {
            s.validate()
                .map_err(|e| self.config_error(format!("sweep point {index}, stage {i}: {e}")))?;
        }
        if let Some(p) = &postselect {
            if p.mode == WindowMode::Relative && !p.relative_width.is_some_and(|w| w >= 0.0) {
                return Err(self.config_error(format!("sweep point {index}: relative_width must be >= 0")));
            }
        }
        Ok(PointSetup { index, grid_value: value, model, stages, postselect })
    }

    /// Harmonic efficiencies η_n by order.
    pub fn harmonic_etas(&self) -> BTreeMap<u32, f64> {
        self.harmonic_stages().collect()
    }
}

fn stage_name(s: &StageSpec) -> &'static str {
    match s {
        StageSpec::Absorber { .. } => "absorber",
        StageSpec::Harmonic { .. } => "harmonic",
        StageSpec::Attenuator { .. } => "attenuator",
        StageSpec::Sampler { .. } => "sampler",
    }
}

pub(crate) fn valid_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn scenario_id_hint(text: &str) -> String {
    text.lines()
        .find_map(|l| {
            let l = l.trim();
            let rest = l.strip_prefix("scenario_id")?.trim_start().strip_prefix('=')?;
            Some(rest.trim().trim_matches('"').to_string())
        })
        .unwrap_or_else(|| "<unknown>".to_string())
}

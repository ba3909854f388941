//! Built-in scenarios reproducing the figures and the efficiency table.
//!
//! Defaults shared by the presets:
//!
//! * harmonic efficiencies `eta_n` chosen so that single-mode BSV at 10⁸
//!   pump photons converts 3.2·10⁻⁹, 1.4·10⁻¹¹ and 4.9·10⁻¹² of the pump into
//!   the second, third and fourth harmonic;
//! * monitor sampler tap 0.6 %;
//! * charge detectors with the library defaults (gain 5, quantum efficiency
//!   0.85, 1600 noise photons);
//! * pulse records off; enable them with `--records` on the command line.

use crate::error::{Error, Result};
use crate::nonlinear::StageSpec;

use super::config::{
    AnalysisConfig, BootstrapConfig, DetectorConfig, OutputConfig, PostSelectConfig, ScenarioConfig, SourceConfig,
    SourceKind, Subset, SweepConfig, SweepParameter, WindowMode,
};

pub const PRESETS: [&str; 6] = ["fig1c", "fig2", "fig3", "fig4", "fig5-mech", "table1"];

pub const ETA: [(u32, f64); 3] = [(2, 1.1e-17), (3, 9.2e-29), (4, 4.7e-38)];

/// Monitor tap of the beam sampler.
pub const MONITOR_TAP: f64 = 0.006;

/// Mean per-arm click probability of the click-detector pairs by harmonic
/// order, low enough that saturation bias stays well below one standard error.
pub const HBT_CLICK_PROBABILITY: [(u32, f64); 3] = [(2, 1.5e-3), (3, 4e-4), (4, 1e-4)];

/// Pump photon numbers of the power sweep.
pub const POWER_SWEEP: [f64; 8] = [1.0e7, 1.41e7, 2.0e7, 2.82e7, 4.0e7, 5.62e7, 7.94e7, 1.12e8];

/// κ·⟨N⟩ values of the absorber sweep; the last one brings g⁽²⁾ to about 1.55.
pub const ABSORBER_SWEEP: [f64; 9] = [0.0, 0.02, 0.05, 0.1, 0.2, 0.35, 0.55, 0.8, 1.17];

const ORDERS: [u32; 3] = [2, 3, 4];
const ABSORBER_MEAN: f64 = 1e7;

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1c" => "harmonic flux versus pump flux for BSV and post-selected pulses, free-exponent power-law fits",
        "fig2" => "g(n) and statistical efficiencies versus wavelength, 1550 to 1650 nm",
        "fig3" => "absorber sweep: statistical efficiency versus measured g(n)",
        "fig4" => "harmonic g(2) of thermal and BSV pumps measured with click-detector pairs",
        "fig5-mech" => "absorber sweep: g(2), g(3), g(4) of the transmitted pump",
        "table1" => "fitted coefficients for BSV and pseudo-coherent pulses versus measured g(n)",
        _ => return None,
    })
}

/// Expands a preset name into a complete scenario.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let config = match name {
        "fig1c" => power_scan("fig1c", 11, false),
        "table1" => power_scan("table1", 16, true),
        "fig2" => fig2(),
        "fig3" => absorber_scan("fig3", 13, true),
        "fig5-mech" => absorber_scan("fig5-mech", 15, false),
        "fig4" => fig4(),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    debug_assert!(config.validate().is_ok(), "preset {name} must validate");
    Ok(config)
}

fn harmonic_stages() -> Vec<StageSpec> {
    ETA.iter().map(|&(order, eta)| StageSpec::Harmonic { order, eta }).collect()
}

fn charge(name: &str, port: &str) -> DetectorConfig {
    DetectorConfig::Charge {
        name: name.into(),
        port: port.into(),
        gain: crate::detection::DEFAULT_GAIN,
        quantum_efficiency: crate::detection::DEFAULT_QUANTUM_EFFICIENCY,
        noise_photons: crate::detection::DEFAULT_NOISE_PHOTONS,
        saturation: None,
        deterministic: false,
    }
}

fn source(kind: SourceKind, mean_photons: f64) -> SourceConfig {
    SourceConfig {
        kind,
        mean_photons,
        quad_ratio: None,
        temporal_modes: 1,
        wavelength_nm: None,
        detuning_width_nm: crate::lightmodel::DEFAULT_DETUNING_WIDTH_NM,
    }
}

fn base(id: &str, seed: u64, pulses: u64, source: SourceConfig) -> ScenarioConfig {
    ScenarioConfig {
        scenario_id: id.into(),
        pulses,
        seed,
        source,
        stages: Vec::new(),
        detectors: Vec::new(),
        postselect: None,
        analyses: Vec::new(),
        sweep: None,
        bootstrap: BootstrapConfig::default(),
        output: OutputConfig { pulse_records: false, ..OutputConfig::default() },
    }
}

/// BSV power sweep with a monitored, post-selected branch.
fn power_scan(id: &str, seed: u64, table: bool) -> ScenarioConfig {
    let mut c = base(id, seed, 1_000_000, source(SourceKind::Bsv, POWER_SWEEP[0]));
    c.stages.push(StageSpec::Sampler { tap: MONITOR_TAP });
    c.stages.extend(harmonic_stages());
    c.detectors = vec![charge("monitor", "monitor"), charge("pump", "pump")];
    c.postselect = Some(PostSelectConfig {
        monitor: "monitor".into(),
        mode: WindowMode::TargetG2,
        min_pulses: 1000,
        target_g2: Some(1.01),
        reference: Some("pump".into()),
        relative_width: None,
        window: None,
    });
    for subset in [Subset::All, Subset::Selected] {
        c.analyses.push(AnalysisConfig::Gn { detector: "pump".into(), orders: ORDERS.to_vec(), subset });
        c.analyses.push(AnalysisConfig::PowerLaw { orders: ORDERS.to_vec(), subset, fix_exponent: table });
    }
    if table {
        c.analyses.push(AnalysisConfig::SelectionRatio { detector: "pump".into(), orders: ORDERS.to_vec() });
    } else {
        for subset in [Subset::All, Subset::Selected] {
            c.analyses.push(AnalysisConfig::Efficiency { orders: ORDERS.to_vec(), subset });
        }
    }
    c.sweep = Some(SweepConfig { parameter: SweepParameter::MeanPhotons, values: POWER_SWEEP.to_vec() });
    c
}

fn fig2() -> ScenarioConfig {
    let mut src = source(SourceKind::Gaussian, 1e7);
    src.wavelength_nm = Some(1600.0);
    let mut c = base("fig2", 12, 1_000_000, src);
    c.stages = harmonic_stages();
    c.detectors = vec![charge("pump", "pump")];
    c.analyses = vec![
        AnalysisConfig::Gn { detector: "pump".into(), orders: ORDERS.to_vec(), subset: Subset::All },
        AnalysisConfig::Efficiency { orders: ORDERS.to_vec(), subset: Subset::All },
    ];
    let values = (0..=10).map(|k| 1550.0 + 10.0 * f64::from(k)).collect();
    c.sweep = Some(SweepConfig { parameter: SweepParameter::WavelengthNm, values });
    c
}

fn absorber_scan(id: &str, seed: u64, efficiencies: bool) -> ScenarioConfig {
    let pulses = if efficiencies { 1_000_000 } else { 200_000 };
    let mut c = base(id, seed, pulses, source(SourceKind::Bsv, ABSORBER_MEAN));
    c.stages.push(StageSpec::Absorber { kappa: 0.0 });
    c.detectors = vec![charge("pump", "pump")];
    c.analyses.push(AnalysisConfig::Gn { detector: "pump".into(), orders: ORDERS.to_vec(), subset: Subset::All });
    if efficiencies {
        c.stages.extend(harmonic_stages());
        c.analyses.push(AnalysisConfig::Efficiency { orders: ORDERS.to_vec(), subset: Subset::All });
        c.analyses.push(AnalysisConfig::EfficiencyLinearity {
            detector: "pump".into(),
            orders: ORDERS.to_vec(),
            subset: Subset::All,
        });
    }
    let values = ABSORBER_SWEEP.iter().map(|x| x / ABSORBER_MEAN).collect();
    c.sweep = Some(SweepConfig { parameter: SweepParameter::Kappa, values });
    c
}

/// Thermal (`quad_ratio = 1`) and BSV (`quad_ratio = 0`) pumps; g⁽²⁾ of the
/// pump from a charge detector and of every harmonic from a click pair.
fn fig4() -> ScenarioConfig {
    let mut src = source(SourceKind::Gaussian, 1e7);
    src.quad_ratio = Some(1.0);
    let mut c = base("fig4", 14, 10_000_000, src);
    c.stages = harmonic_stages();
    c.detectors.push(charge("pump", "pump"));
    for (order, p) in HBT_CLICK_PROBABILITY {
        c.detectors.push(DetectorConfig::Hbt {
            name: format!("hbt{order}"),
            port: format!("harmonic{order}"),
            efficiency: None,
            mean_click_probability: Some(p),
            split: 0.5,
            dark_count_probability: 0.0,
        });
    }
    c.analyses.push(AnalysisConfig::Gn { detector: "pump".into(), orders: vec![2], subset: Subset::All });
    for (order, _) in HBT_CLICK_PROBABILITY {
        c.analyses.push(AnalysisConfig::HbtG2 { detector: format!("hbt{order}"), subset: Subset::All });
    }
    c.analyses.push(AnalysisConfig::Prediction { orders: vec![1, 2, 3, 4] });
    c.sweep = Some(SweepConfig { parameter: SweepParameter::QuadRatio, values: vec![1.0, 0.0] });
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            assert!(describe(name).is_some());
            let back = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
            assert_eq!(back, c, "{name}");
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("fig9"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn fig2_spans_the_scan_range() {
        let s = preset("fig2").unwrap().sweep.unwrap();
        assert_eq!(s.values.first(), Some(&1550.0));
        assert_eq!(s.values.last(), Some(&1650.0));
    }

    #[test]
    fn table1_targets_pseudo_coherent_light() {
        let ps = preset("table1").unwrap().postselect.unwrap();
        assert!(ps.target_g2.unwrap() <= 1.05);
    }
}

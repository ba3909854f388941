//! Executes a scenario: source → stages → detectors → analyses, grid point by
//! grid point.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    estimate_factorial_gn, estimate_gn, fit_power_law, hbt_g2, linear_fit, log_coefficient, normalized_moment,
    predict_harmonic_g2_exact, statistical_efficiency, BlockSums, Bootstrap, EstimateWithError,
};
use crate::detection::{
    charge_detect, hbt_detect, narrowest_window, relative_window, window_for_target_g2, ChargeReading, ClickPairSpec,
    Clicks, Window,
};
use crate::error::{Error, Result};
use crate::lightmodel::rational_to_f64;
use crate::nonlinear::{absorb, attenuate, harmonic_yield_unchecked, StageSpec};
use crate::rng::{bootstrap_stream, detector_stream, StreamRng, SOURCE_STREAM};

use super::config::{
    harmonic_port, AnalysisConfig, DetectorConfig, PointSetup, ScenarioConfig, Subset, WindowMode, MONITOR_PORT,
    PUMP_PORT,
};

/// One line of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario_id: String,
    /// Sweep point, or −1 for rows computed across the whole sweep.
    pub grid_index: i64,
    pub grid_parameter: String,
    pub grid_value: Option<f64>,
    pub seed: u64,
    pub estimator_id: String,
    /// Detector, port or `source` the estimate refers to.
    pub target: String,
    pub subset: String,
    pub order: u32,
    pub value: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
}

impl SummaryRow {
    pub fn estimate(&self) -> EstimateWithError {
        EstimateWithError {
            estimator_id: self.estimator_id.clone(),
            value: self.value,
            std_error: self.std_error,
            ci_low: self.ci_low,
            ci_high: self.ci_high,
            samples: self.samples,
        }
    }
}

/// Summary of a finished run.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutcome {
    pub scenario_id: String,
    pub seed: u64,
    pub rows: Vec<SummaryRow>,
}

impl ScenarioOutcome {
    /// Rows matching an estimator id, target and order, in grid order.
    pub fn select<'a>(&'a self, estimator_id: &'a str, target: &'a str, order: u32) -> impl Iterator<Item = &'a SummaryRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.estimator_id == estimator_id && r.target == target && r.order == order)
    }

    pub fn find(&self, estimator_id: &str, target: &str, subset: &str, order: u32, grid_index: i64) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| {
            r.estimator_id == estimator_id
                && r.target == target
                && r.subset == subset
                && r.order == order
                && r.grid_index == grid_index
        })
    }
}

/// Output of one detector over all pulses of a grid point.
#[derive(Clone, Debug)]
pub enum DetectorData {
    Charge(Vec<ChargeReading>),
    /// Packed [`Clicks`] per pulse and the per-arm efficiency used.
    Clicks { efficiency: f64, bits: Vec<u8> },
}

#[derive(Clone, Debug)]
pub struct SelectionInfo {
    pub window: Window,
    pub mask: Vec<bool>,
    pub count: usize,
    /// Accepted fraction of the unsaturated pulses.
    pub fraction: f64,
}

/// All pulse-level data of one grid point.
#[derive(Clone, Debug)]
pub struct PointData {
    pub setup: PointSetup,
    /// Pump photon number at the harmonic generators.
    pub pump: Vec<f64>,
    pub monitor: Option<Vec<f64>>,
    pub harmonics: BTreeMap<u32, Vec<f64>>,
    pub detectors: Vec<DetectorData>,
    /// False where any charge detector saturated.
    pub ok: Vec<bool>,
    pub selection: Option<SelectionInfo>,
}

impl PointData {
    pub fn len(&self) -> usize {
        self.pump.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pump.is_empty()
    }

    fn port(&self, port: &str) -> &[f64] {
        match port {
            PUMP_PORT => &self.pump,
            MONITOR_PORT => self.monitor.as_deref().expect("validated monitor port"),
            _ => {
                let order: u32 = port.trim_start_matches("harmonic").parse().expect("validated harmonic port");
                &self.harmonics[&order]
            }
        }
    }

    fn weight(&self, subset: Subset, i: usize) -> bool {
        match subset {
            Subset::All => self.ok[i],
            Subset::Selected => self.selection.as_ref().is_some_and(|s| s.mask[i]),
        }
    }

    fn indices(&self, subset: Subset) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weight(subset, i)).collect()
    }

    fn charge(&self, d: usize) -> &[ChargeReading] {
        match &self.detectors[d] {
            DetectorData::Charge(r) => r,
            DetectorData::Clicks { .. } => unreachable!("validated charge detector"),
        }
    }
}

/// Runs a validated scenario in memory.
pub fn run(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    run_with(config, &mut |_| Ok(()))
}

/// Runs a scenario, handing every grid point's pulse data to `on_point`
/// before it is dropped.
pub fn run_with(config: &ScenarioConfig, on_point: &mut dyn FnMut(&PointData) -> Result<()>) -> Result<ScenarioOutcome> {
    config.validate()?;
    run_validated(config, on_point).map_err(|e| match e {
        e @ (Error::Config { .. } | Error::Scenario { .. }) => e,
        e => Error::Scenario { scenario: config.scenario_id.clone(), source: Box::new(e) },
    })
}

fn run_validated(config: &ScenarioConfig, on_point: &mut dyn FnMut(&PointData) -> Result<()>) -> Result<ScenarioOutcome> {
    let mut rows = Vec::new();
    let mut cross = CrossGrid::new(config);
    for k in 0..config.grid_len() {
        let setup = config.point(k)?;
        let data = simulate_point(config, setup)?;
        on_point(&data)?;
        point_rows(config, &data, &mut rows)?;
        cross.accumulate(config, &data);
    }
    cross.finish(config, &mut rows)?;
    Ok(ScenarioOutcome { scenario_id: config.scenario_id.clone(), seed: config.seed, rows })
}

fn bootstrap_for(config: &ScenarioConfig, analysis: usize, order: u32) -> Bootstrap {
    Bootstrap {
        resamples: config.bootstrap.resamples,
        seed: config.seed,
        stream: bootstrap_stream(analysis * 16 + order as usize),
        max_blocks: config.bootstrap.max_blocks,
    }
}

/// Samples the source and propagates every pulse through the chain.
pub fn simulate_point(config: &ScenarioConfig, setup: PointSetup) -> Result<PointData> {
    let pulses = usize::try_from(config.pulses).map_err(|_| config.config_error("pulses exceed the address space"))?;
    let modes = setup.model.temporal_modes() as usize;
    let source = StreamRng::new(config.seed, SOURCE_STREAM);
    let orders: Vec<(u32, f64)> = setup
        .stages
        .iter()
        .filter_map(|s| match *s {
            StageSpec::Harmonic { order, eta } => Some((order, eta)),
            _ => None,
        })
        .collect();
    let model = setup.model;
    let stages = &setup.stages;

    let raw: Vec<[f64; 5]> = (0..pulses)
        .into_par_iter()
        .with_min_len(1024)
        .map_init(
            || vec![0.0; modes],
            |buf, i| {
                let mut rng = source.at(i as u64);
                model.sample_modes(&mut rng, buf);
                let mut monitor = 0.0;
                for stage in stages {
                    match *stage {
                        StageSpec::Absorber { kappa } => buf.iter_mut().for_each(|w| *w = absorb(*w, kappa)),
                        StageSpec::Attenuator { transmission } => {
                            buf.iter_mut().for_each(|w| *w = attenuate(*w, transmission))
                        }
                        StageSpec::Sampler { tap } => {
                            monitor = tap * buf.iter().sum::<f64>();
                            buf.iter_mut().for_each(|w| *w *= 1.0 - tap);
                        }
                        StageSpec::Harmonic { .. } => {}
                    }
                }
                let mut out = [0.0; 5];
                out[0] = buf.iter().sum();
                out[1] = monitor;
                for (slot, (order, eta)) in out[2..].iter_mut().zip(&orders) {
                    *slot = harmonic_yield_unchecked(buf, *order, *eta);
                }
                out
            },
        )
        .collect();

    let pump: Vec<f64> = raw.iter().map(|r| r[0]).collect();
    let monitor = config.has_sampler().then(|| raw.iter().map(|r| r[1]).collect());
    let harmonics: BTreeMap<u32, Vec<f64>> = orders
        .iter()
        .enumerate()
        .map(|(k, (order, _))| (*order, raw.iter().map(|r| r[2 + k]).collect()))
        .collect();
    drop(raw);

    let mut data = PointData {
        setup,
        pump,
        monitor,
        harmonics,
        detectors: Vec::with_capacity(config.detectors.len()),
        ok: Vec::new(),
        selection: None,
    };

    for (d, det) in config.detectors.iter().enumerate() {
        let streams = StreamRng::new(config.seed, detector_stream(d));
        let input = data.port(det.port());
        let out = match det {
            DetectorConfig::Charge { .. } => {
                let spec = det.charge_spec().expect("charge detector");
                DetectorData::Charge(
                    (0..pulses)
                        .into_par_iter()
                        .with_min_len(1024)
                        .map(|i| charge_detect(input[i], &spec, &mut streams.at(i as u64)))
                        .collect(),
                )
            }
            DetectorConfig::Hbt { efficiency, mean_click_probability, split, dark_count_probability, name, .. } => {
                let efficiency = match (efficiency, mean_click_probability) {
                    (Some(e), _) => *e,
                    (None, Some(p)) => {
                        let mean = input.iter().sum::<f64>() / input.len() as f64;
                        if !(mean > 0.0) {
                            return Err(Error::stats(format!("detector `{name}`: mean harmonic flux is zero")));
                        }
                        2.0 * p / mean
                    }
                    (None, None) => unreachable!("validated click detector"),
                };
                let spec = ClickPairSpec { efficiency, split: *split, dark_count_probability: *dark_count_probability };
                let bits = (0..pulses)
                    .into_par_iter()
                    .with_min_len(1024)
                    .map(|i| hbt_detect(input[i], &spec, &mut streams.at(i as u64)).pack())
                    .collect();
                DetectorData::Clicks { efficiency, bits }
            }
        };
        data.detectors.push(out);
    }

    data.ok = (0..pulses)
        .map(|i| {
            data.detectors.iter().all(|d| match d {
                DetectorData::Charge(r) => !r[i].saturated,
                DetectorData::Clicks { .. } => true,
            })
        })
        .collect();

    if let Some(ps) = data.setup.postselect.clone() {
        let (mon, _) = config.detector(&ps.monitor).expect("validated monitor");
        let ok_idx = data.indices(Subset::All);
        let monitor_areas: Vec<f64> = ok_idx.iter().map(|&i| data.charge(mon)[i].area).collect();
        let window = match ps.mode {
            WindowMode::Narrowest => narrowest_window(&monitor_areas, ps.min_pulses)?,
            WindowMode::TargetG2 => {
                let (rd, _) = config.detector(ps.reference.as_deref().expect("validated")).expect("validated");
                let reference: Vec<f64> = ok_idx.iter().map(|&i| data.charge(rd)[i].area).collect();
                window_for_target_g2(&monitor_areas, &reference, ps.target_g2.expect("validated"), ps.min_pulses)?
            }
            WindowMode::Relative => relative_window(&monitor_areas, ps.relative_width.expect("validated"))?,
            WindowMode::Absolute => {
                let [lo, hi] = ps.window.expect("validated");
                Window::new(lo, hi)?
            }
        };
        let mask: Vec<bool> = (0..pulses)
            .map(|i| data.ok[i] && window.contains(data.charge(mon)[i].area))
            .collect();
        let count = mask.iter().filter(|&&m| m).count();
        if count == 0 {
            return Err(Error::EmptySelection(format!(
                "grid point {}: no pulse inside [{}, {}]",
                data.setup.index, window.lo, window.hi
            )));
        }
        let fraction = count as f64 / ok_idx.len() as f64;
        data.selection = Some(SelectionInfo { window, mask, count, fraction });
    }
    Ok(data)
}

struct RowContext<'a> {
    config: &'a ScenarioConfig,
    grid_index: i64,
    grid_value: Option<f64>,
}

impl RowContext<'_> {
    fn row(&self, e: &EstimateWithError, target: &str, subset: &str, order: u32) -> SummaryRow {
        SummaryRow {
            scenario_id: self.config.scenario_id.clone(),
            grid_index: self.grid_index,
            grid_parameter: self.config.sweep.as_ref().map(|s| s.parameter.as_str().to_string()).unwrap_or_default(),
            grid_value: self.grid_value,
            seed: self.config.seed,
            estimator_id: e.estimator_id.clone(),
            target: target.to_string(),
            subset: subset.to_string(),
            order,
            value: e.value,
            std_error: e.std_error,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            samples: e.samples,
        }
    }
}

fn renamed(mut e: EstimateWithError, id: String) -> EstimateWithError {
    e.estimator_id = id;
    e
}

fn point_rows(config: &ScenarioConfig, data: &PointData, rows: &mut Vec<SummaryRow>) -> Result<()> {
    let ctx = RowContext { config, grid_index: data.setup.index as i64, grid_value: data.setup.grid_value };
    let etas = config.harmonic_etas();

    if config.detectors.iter().any(|d| matches!(d, DetectorConfig::Charge { saturation: Some(_), .. })) {
        let bad = data.ok.iter().filter(|&&ok| !ok).count();
        let e = EstimateWithError::exact("saturated_fraction", bad as f64 / data.len() as f64, data.len() as u64);
        rows.push(ctx.row(&e, PUMP_PORT, "all", 0));
    }
    if let (Some(sel), Some(ps)) = (&data.selection, &data.setup.postselect) {
        let ok = data.ok.iter().filter(|&&ok| ok).count() as u64;
        rows.push(ctx.row(&EstimateWithError::exact("selection_fraction", sel.fraction, ok), &ps.monitor, "selected", 0));
        rows.push(ctx.row(&EstimateWithError::exact("window_lo", sel.window.lo, sel.count as u64), &ps.monitor, "selected", 0));
        rows.push(ctx.row(&EstimateWithError::exact("window_hi", sel.window.hi, sel.count as u64), &ps.monitor, "selected", 0));
    }

    for (ai, analysis) in config.analyses.iter().enumerate() {
        match analysis {
            AnalysisConfig::Gn { detector, orders, subset } => {
                let (d, _) = config.detector(detector).expect("validated");
                let areas: Vec<f64> = data.indices(*subset).iter().map(|&i| data.charge(d)[i].area).collect();
                for &n in orders {
                    let e = estimate_gn(&areas, n, &bootstrap_for(config, ai, n))?;
                    rows.push(ctx.row(&e, detector, subset.as_str(), n));
                }
            }
            AnalysisConfig::FactorialGn { detector, orders, subset } => {
                let (d, _) = config.detector(detector).expect("validated");
                let counts: Vec<u64> = data.indices(*subset).iter().map(|&i| data.charge(d)[i].photons).collect();
                for &n in orders {
                    let e = estimate_factorial_gn(&counts, n, &bootstrap_for(config, ai, n))?;
                    rows.push(ctx.row(&e, detector, subset.as_str(), n));
                }
            }
            AnalysisConfig::HbtG2 { detector, subset } => {
                let (d, det) = config.detector(detector).expect("validated");
                let order: u32 = det.port().trim_start_matches("harmonic").parse().expect("validated");
                let DetectorData::Clicks { bits, .. } = &data.detectors[d] else {
                    unreachable!("validated click detector")
                };
                let idx = data.indices(*subset);
                let clicks: Vec<Clicks> = idx.iter().map(|&i| Clicks::unpack(bits[i])).collect();
                let a1: Vec<u8> = clicks.iter().map(|c| c.arm1).collect();
                let a2: Vec<u8> = clicks.iter().map(|c| c.arm2).collect();
                let cc: Vec<u8> = clicks.iter().map(|c| c.coincidence).collect();
                let singles = a1.iter().chain(&a2).map(|&v| u64::from(v)).sum::<u64>();
                let p = singles as f64 / (2 * idx.len().max(1)) as f64;
                rows.push(ctx.row(&EstimateWithError::exact("click_probability", p, idx.len() as u64), detector, subset.as_str(), order));
                let coinc = cc.iter().map(|&v| u64::from(v)).sum::<u64>();
                rows.push(ctx.row(&EstimateWithError::exact("coincidences", coinc as f64, idx.len() as u64), detector, subset.as_str(), order));
                let e = hbt_g2(&a1, &a2, &cc, &bootstrap_for(config, ai, order))?;
                rows.push(ctx.row(&e, detector, subset.as_str(), order));
            }
            AnalysisConfig::Efficiency { orders, subset } => {
                let idx = data.indices(*subset);
                let pump: Vec<f64> = idx.iter().map(|&i| data.pump[i]).collect();
                for &n in orders {
                    let h: Vec<f64> = idx.iter().map(|&i| data.harmonics[&n][i]).collect();
                    let e = statistical_efficiency(&h, &pump, n, &bootstrap_for(config, ai, n))?;
                    let target = harmonic_port(n);
                    rows.push(ctx.row(&e, &target, subset.as_str(), n));
                    let scaled = renamed(e.scaled(1.0 / etas[&n]), format!("xi{n}_over_eta"));
                    rows.push(ctx.row(&scaled, &target, subset.as_str(), n));
                }
            }
            AnalysisConfig::Prediction { orders } => {
                for &n in orders {
                    let v = rational_to_f64(&predict_harmonic_g2_exact(&data.setup.model, n)?);
                    rows.push(ctx.row(&EstimateWithError::exact("predicted_g2", v, 0), "source", "model", n));
                }
            }
            AnalysisConfig::PowerLaw { .. } | AnalysisConfig::SelectionRatio { .. } | AnalysisConfig::EfficiencyLinearity { .. } => {}
        }
    }
    Ok(())
}

/// Block sums collected at every grid point for analyses spanning the sweep.
struct CrossGrid {
    /// Keyed by (analysis index, order); one table per grid point.
    tables: BTreeMap<(usize, u32), Vec<BlockSums>>,
}

impl CrossGrid {
    fn new(config: &ScenarioConfig) -> Self {
        let mut tables = BTreeMap::new();
        for (ai, a) in config.analyses.iter().enumerate() {
            let orders = match a {
                AnalysisConfig::PowerLaw { orders, .. }
                | AnalysisConfig::SelectionRatio { orders, .. }
                | AnalysisConfig::EfficiencyLinearity { orders, .. } => orders,
                _ => continue,
            };
            for &n in orders {
                tables.insert((ai, n), Vec::new());
            }
        }
        CrossGrid { tables }
    }

    fn accumulate(&mut self, config: &ScenarioConfig, data: &PointData) {
        for (&(ai, n), per_point) in self.tables.iter_mut() {
            let boot = bootstrap_for(config, ai, n);
            let h = &data.harmonics[&n];
            let table = match &config.analyses[ai] {
                AnalysisConfig::PowerLaw { subset, .. } => boot.block_sums(data.len(), 3, |i, row| {
                    if data.weight(*subset, i) {
                        row[0] = 1.0;
                        row[1] = data.pump[i];
                        row[2] = h[i];
                    }
                }),
                AnalysisConfig::SelectionRatio { detector, .. } => {
                    let (d, _) = config.detector(detector).expect("validated");
                    let areas = data.charge(d);
                    boot.block_sums(data.len(), 10, |i, row| {
                        let a = areas[i].area;
                        let an = a.powi(n as i32);
                        if data.weight(Subset::All, i) {
                            row[0] = 1.0;
                            row[1] = data.pump[i];
                            row[2] = h[i];
                            row[6] = a;
                            row[7] = an;
                        }
                        if data.weight(Subset::Selected, i) {
                            row[3] = 1.0;
                            row[4] = data.pump[i];
                            row[5] = h[i];
                            row[8] = a;
                            row[9] = an;
                        }
                    })
                }
                AnalysisConfig::EfficiencyLinearity { detector, subset, .. } => {
                    let (d, _) = config.detector(detector).expect("validated");
                    let areas = data.charge(d);
                    boot.block_sums(data.len(), 5, |i, row| {
                        if data.weight(*subset, i) {
                            let a = areas[i].area;
                            row[0] = 1.0;
                            row[1] = data.pump[i];
                            row[2] = h[i];
                            row[3] = a;
                            row[4] = a.powi(n as i32);
                        }
                    })
                }
                _ => unreachable!("only cross-grid analyses are tabulated"),
            };
            per_point.push(table);
        }
    }

    fn finish(self, config: &ScenarioConfig, rows: &mut Vec<SummaryRow>) -> Result<()> {
        let ctx = RowContext { config, grid_index: -1, grid_value: None };
        let etas = config.harmonic_etas();
        for ((ai, n), tables) in self.tables {
            let boot = bootstrap_for(config, ai, n);
            let refs: Vec<&BlockSums> = tables.iter().collect();
            let eta = etas[&n];
            let target = harmonic_port(n);
            match &config.analyses[ai] {
                AnalysisConfig::PowerLaw { subset, fix_exponent, .. } => {
                    let points: Vec<(f64, f64)> = tables.iter().map(|t| flux_point(&t.totals(), 0)).collect();
                    let fit = fit_power_law(&points, n, *fix_exponent)?;
                    let a = boot.evaluate_joint(&format!("A{n}"), &refs, |t| coefficient(t, 0, n))?;
                    rows.push(ctx.row(&a, &target, subset.as_str(), n));
                    if let Some(p) = fit.exponent {
                        rows.push(ctx.row(&renamed(p, format!("p{n}")), &target, subset.as_str(), n));
                    }
                    let dropped = EstimateWithError::exact("dropped_points", fit.dropped_points as f64, points.len() as u64);
                    rows.push(ctx.row(&dropped, &target, subset.as_str(), n));
                }
                AnalysisConfig::SelectionRatio { detector, .. } => {
                    let a_ratio = boot.evaluate_joint(&format!("A{n}_ratio"), &refs, |t| {
                        Some(coefficient(t, 0, n)? / coefficient(t, 3, n)?)
                    })?;
                    rows.push(ctx.row(&a_ratio, detector, "all/selected", n));
                    let g_ratio = boot.evaluate_joint(&format!("g{n}_ratio"), &refs, |t| {
                        let mut acc = 0.0;
                        for row in t {
                            let all = normalized_moment(&[row[0], row[6], row[7]], n)?;
                            let sel = normalized_moment(&[row[3], row[8], row[9]], n)?;
                            acc += all / sel;
                        }
                        Some(acc / t.len() as f64)
                    })?;
                    rows.push(ctx.row(&g_ratio, detector, "all/selected", n));
                    let ideal = boot.evaluate_joint(&format!("A{n}_over_eta"), &refs, |t| Some(coefficient(t, 0, n)? / eta))?;
                    rows.push(ctx.row(&ideal, detector, "all", n));
                }
                AnalysisConfig::EfficiencyLinearity { detector, subset, .. } => {
                    let line = |t: &[Vec<f64>]| {
                        let mut xs = Vec::with_capacity(t.len());
                        let mut ys = Vec::with_capacity(t.len());
                        for row in t {
                            xs.push(normalized_moment(&[row[0], row[3], row[4]], n)?);
                            ys.push(normalized_moment(&[row[0], row[1], row[2]], n)? / eta);
                        }
                        linear_fit(&xs, &ys).ok()
                    };
                    for (id, pick) in [
                        ("linearity_r2", 0usize),
                        ("linearity_slope", 1),
                        ("linearity_intercept", 2),
                    ] {
                        let e = boot.evaluate_joint(&format!("{id}{n}"), &refs, |t| {
                            line(t).map(|f| [f.r_squared, f.slope, f.intercept][pick])
                        })?;
                        rows.push(ctx.row(&renamed(e, id.to_string()), detector, subset.as_str(), n));
                    }
                }
                _ => unreachable!("only cross-grid analyses are tabulated"),
            }
        }
        Ok(())
    }
}

/// Mean (pump, harmonic) flux from weighted totals starting at column `at`.
fn flux_point(t: &[f64], at: usize) -> (f64, f64) {
    let w = t[at];
    if w > 0.0 {
        (t[at + 1] / w, t[at + 2] / w)
    } else {
        (0.0, 0.0)
    }
}

fn coefficient(tables: &[Vec<f64>], at: usize, n: u32) -> Option<f64> {
    let points: Vec<(f64, f64)> = tables.iter().map(|t| flux_point(t, at)).collect();
    log_coefficient(&points, n).map(f64::exp)
}

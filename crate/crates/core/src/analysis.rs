//! Estimators of correlation functions and efficiencies, bootstrap errors and
//! power-law fits.
//!
//! All pulse-level estimators here are smooth functions of sums over pulses.
//! The bootstrap therefore works on per-block feature sums: the pulses are cut
//! into at most [`Bootstrap::max_blocks`] contiguous blocks, and every
//! replicate draws blocks with replacement. With one pulse per block this is
//! the ordinary pulse bootstrap; for large ensembles the blocks are iid batches
//! of iid pulses, which keeps the cost independent of the pulse count.

use std::collections::BTreeMap;
use std::ops::Range;

use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightmodel::{check_exact_order, LightModel, MAX_EXACT_ORDER};
use crate::rng::{bootstrap_stream, StreamRng};

/// A statistic with its bootstrap standard error and percentile interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub estimator_id: String,
    pub value: f64,
    pub std_error: f64,
    /// 2.5 % and 97.5 % bootstrap percentiles.
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
}

impl EstimateWithError {
    pub fn exact(estimator_id: impl Into<String>, value: f64, samples: u64) -> Self {
        EstimateWithError {
            estimator_id: estimator_id.into(),
            value,
            std_error: 0.0,
            ci_low: value,
            ci_high: value,
            samples,
        }
    }

    /// Multiplies value, error and interval by a positive constant.
    pub fn scaled(&self, factor: f64) -> Self {
        EstimateWithError {
            estimator_id: self.estimator_id.clone(),
            value: self.value * factor,
            std_error: self.std_error * factor.abs(),
            ci_low: self.ci_low * factor,
            ci_high: self.ci_high * factor,
            samples: self.samples,
        }
    }

    /// Deviation from `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.value - target;
        if d == 0.0 {
            0.0
        } else {
            d.abs() / self.std_error
        }
    }

    pub fn within(&self, target: f64, n_sigma: f64) -> bool {
        (self.value - target).abs() <= n_sigma * self.std_error
    }
}

/// Resampling configuration. Replicate `b` draws from the counter-based
/// stream `(seed, stream, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
    pub stream: u64,
    pub max_blocks: usize,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Bootstrap { resamples: 200, seed: 0, stream: bootstrap_stream(0), max_blocks: 4096 }
    }
}

/// Per-block sums of a fixed set of per-pulse features.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSums {
    width: usize,
    pulses: usize,
    sums: Vec<f64>,
}

impl BlockSums {
    pub fn blocks(&self) -> usize {
        self.sums.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pulses(&self) -> usize {
        self.pulses
    }

    pub fn block(&self, b: usize) -> &[f64] {
        &self.sums[b * self.width..(b + 1) * self.width]
    }

    /// Column totals, accumulated block by block in a fixed order.
    pub fn totals(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.width];
        for b in 0..self.blocks() {
            for (acc, v) in t.iter_mut().zip(self.block(b)) {
                *acc += v;
            }
        }
        t
    }
}

/// Contiguous, nearly equal blocks covering `0..pulses`.
pub fn block_ranges(pulses: usize, max_blocks: usize) -> Vec<Range<usize>> {
    let g = pulses.min(max_blocks.max(1));
    (0..g).map(|b| b * pulses / g..(b + 1) * pulses / g).collect()
}

impl Bootstrap {
    pub fn with_seed(mut self, seed: u64, stream: u64) -> Self {
        self.seed = seed;
        self.stream = stream;
        self
    }

    /// Accumulates `width` features per pulse into block sums. `features`
    /// receives a pulse index and a zeroed output row.
    pub fn block_sums<F>(&self, pulses: usize, width: usize, features: F) -> BlockSums
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let ranges = block_ranges(pulses, self.max_blocks);
        let rows: Vec<Vec<f64>> = ranges
            .par_iter()
            .map(|range| {
                let mut acc = vec![0.0; width];
                let mut row = vec![0.0; width];
                for i in range.clone() {
                    row.fill(0.0);
                    features(i, &mut row);
                    for (a, v) in acc.iter_mut().zip(&row) {
                        *a += v;
                    }
                }
                acc
            })
            .collect();
        BlockSums { width, pulses, sums: rows.concat() }
    }

    /// Block multiplicities of replicate `b`.
    fn multiplicities(&self, streams: &StreamRng, blocks: usize, b: usize) -> Vec<u32> {
        let mut rng = streams.at(b as u64);
        let mut counts = vec![0u32; blocks];
        for _ in 0..blocks {
            counts[rng.random_range(0..blocks)] += 1;
        }
        counts
    }

    /// Evaluates `stat` on several block-sum tables that share one pulse
    /// partition (common random numbers across a sweep); every replicate
    /// resamples the same blocks in all tables.
    pub fn evaluate_joint<F>(&self, estimator_id: &str, tables: &[&BlockSums], stat: F) -> Result<EstimateWithError>
    where
        F: Fn(&[Vec<f64>]) -> Option<f64> + Sync,
    {
        let blocks = tables.first().map(|t| t.blocks()).unwrap_or(0);
        let pulses = tables.first().map(|t| t.pulses()).unwrap_or(0);
        if tables.iter().any(|t| t.blocks() != blocks) {
            return Err(Error::stats("joint bootstrap needs a common block partition"));
        }
        let totals: Vec<Vec<f64>> = tables.iter().map(|t| t.totals()).collect();
        let value = stat(&totals)
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::stats(format!("{estimator_id}: statistic undefined on the data")))?;
        if pulses < 2 || self.resamples < 2 {
            return Ok(EstimateWithError::exact(estimator_id, value, pulses as u64));
        }
        let streams = StreamRng::new(self.seed, self.stream);
        let replicates: Vec<Option<f64>> = (0..self.resamples)
            .into_par_iter()
            .map(|b| {
                let counts = self.multiplicities(&streams, blocks, b);
                let resampled: Vec<Vec<f64>> = tables
                    .iter()
                    .map(|t| {
                        let mut acc = vec![0.0; t.width()];
                        for (blk, &c) in counts.iter().enumerate() {
                            if c > 0 {
                                let c = f64::from(c);
                                for (a, v) in acc.iter_mut().zip(t.block(blk)) {
                                    *a += c * v;
                                }
                            }
                        }
                        acc
                    })
                    .collect();
                stat(&resampled).filter(|v| v.is_finite())
            })
            .collect();
        let mut values: Vec<f64> = replicates.into_iter().flatten().collect();
        if values.len() < 2 {
            return Err(Error::stats(format!("{estimator_id}: bootstrap replicates are degenerate")));
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
        values.sort_by(f64::total_cmp);
        Ok(EstimateWithError {
            estimator_id: estimator_id.to_string(),
            value,
            std_error: var.sqrt(),
            ci_low: percentile(&values, 0.025),
            ci_high: percentile(&values, 0.975),
            samples: pulses as u64,
        })
    }

    pub fn evaluate<F>(&self, estimator_id: &str, sums: &BlockSums, stat: F) -> Result<EstimateWithError>
    where
        F: Fn(&[f64]) -> Option<f64> + Sync,
    {
        self.evaluate_joint(estimator_id, &[sums], |t| stat(&t[0]))
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[inline]
fn ratio_or_none(num: f64, den: f64) -> Option<f64> {
    if den == 0.0 {
        None
    } else {
        Some(num / den)
    }
}

/// `mean(xⁿ)/mean(x)ⁿ` from totals laid out as `[count, Σx, Σxⁿ]`.
pub(crate) fn normalized_moment(t: &[f64], n: u32) -> Option<f64> {
    let count = t[0];
    if count <= 0.0 {
        return None;
    }
    let mean = t[1] / count;
    ratio_or_none(t[2] / count, mean.powi(n as i32))
}

/// g⁽ⁿ⁾ = M^(n−1) ΣSᵢⁿ / (ΣSᵢ)ⁿ from detector pulse areas.
pub fn estimate_gn(areas: &[f64], n: u32, boot: &Bootstrap) -> Result<EstimateWithError> {
    if n == 0 {
        return Err(Error::domain("correlation order must be >= 1"));
    }
    if areas.len() < 2 {
        return Err(Error::stats("g(n) needs at least two pulses"));
    }
    if areas.iter().any(|s| !s.is_finite()) {
        return Err(Error::stats("pulse areas must be finite"));
    }
    if areas.iter().all(|&s| s == 0.0) {
        return Err(Error::stats("all pulse areas are zero"));
    }
    if 2 * areas.iter().filter(|&&s| s < 0.0).count() > areas.len() {
        return Err(Error::stats("majority of pulse areas are negative"));
    }
    if areas.iter().sum::<f64>() == 0.0 {
        return Err(Error::stats("sum of pulse areas is zero"));
    }
    let sums = boot.block_sums(areas.len(), 3, |i, row| {
        let s = areas[i];
        row[0] = 1.0;
        row[1] = s;
        row[2] = s.powi(n as i32);
    });
    boot.evaluate(&format!("g{n}"), &sums, |t| normalized_moment(t, n))
}

/// N(N−1)…(N−n+1) as a float.
#[inline]
pub fn falling_factorial(count: u64, n: u32) -> f64 {
    (0..u64::from(n)).map(|k| count.saturating_sub(k) as f64).product()
}

/// Normally ordered g⁽ⁿ⁾ = ⟨N(N−1)…(N−n+1)⟩ / ⟨N⟩ⁿ from photon counts.
pub fn estimate_factorial_gn(counts: &[u64], n: u32, boot: &Bootstrap) -> Result<EstimateWithError> {
    if n == 0 {
        return Err(Error::domain("correlation order must be >= 1"));
    }
    if counts.is_empty() || counts.iter().all(|&c| c == 0) {
        return Err(Error::stats("mean photon count is zero"));
    }
    let sums = boot.block_sums(counts.len(), 3, |i, row| {
        row[0] = 1.0;
        row[1] = counts[i] as f64;
        row[2] = falling_factorial(counts[i], n);
    });
    boot.evaluate(&format!("factorial_g{n}"), &sums, |t| normalized_moment(t, n))
}

/// `M ΣN^c / (ΣN¹ ΣN²)` from totals laid out as `[count, ΣN¹, ΣN², ΣN^c]`.
pub(crate) fn hbt_ratio(t: &[f64]) -> Option<f64> {
    ratio_or_none(t[0] * t[3], t[1] * t[2])
}

/// Hanbury Brown–Twiss estimate of g⁽²⁾ from per-pulse click indicators.
pub fn hbt_g2(arm1: &[u8], arm2: &[u8], coincidences: &[u8], boot: &Bootstrap) -> Result<EstimateWithError> {
    if arm1.len() != arm2.len() || arm1.len() != coincidences.len() {
        return Err(Error::stats("click sequences differ in length"));
    }
    if [arm1, arm2, coincidences].iter().any(|s| s.iter().any(|&v| v > 1)) {
        return Err(Error::stats("click indicators must be 0 or 1"));
    }
    if !arm1.contains(&1) || !arm2.contains(&1) {
        return Err(Error::stats("no singles in at least one detector arm"));
    }
    let sums = boot.block_sums(arm1.len(), 4, |i, row| {
        row[0] = 1.0;
        row[1] = f64::from(arm1[i]);
        row[2] = f64::from(arm2[i]);
        row[3] = f64::from(coincidences[i]);
    });
    boot.evaluate("hbt_g2", &sums, hbt_ratio)
}

/// ξ⁽ⁿ⁾ = ⟨R⟩ / ⟨F⟩ⁿ from per-pulse harmonic and pump photon numbers.
pub fn statistical_efficiency(harmonic: &[f64], pump: &[f64], n: u32, boot: &Bootstrap) -> Result<EstimateWithError> {
    if harmonic.len() != pump.len() {
        return Err(Error::stats("harmonic and pump sequences differ in length"));
    }
    if pump.is_empty() || pump.iter().sum::<f64>() == 0.0 {
        return Err(Error::stats("mean pump flux is zero"));
    }
    let sums = boot.block_sums(pump.len(), 3, |i, row| {
        row[0] = 1.0;
        row[1] = pump[i];
        row[2] = harmonic[i];
    });
    boot.evaluate(&format!("xi{n}"), &sums, |t| normalized_moment(t, n))
}

/// Least-squares power law `R = A·Fⁿ` in log-log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub order: u32,
    /// A⁽ⁿ⁾ at the fixed exponent n.
    pub coefficient: EstimateWithError,
    /// Free-exponent slope, when requested.
    pub exponent: Option<EstimateWithError>,
    /// Root of the summed squared log residuals of the fixed-exponent fit.
    pub residual_norm: f64,
    pub used_points: usize,
    /// Points with zero flux, dropped before taking logarithms.
    pub dropped_points: usize,
}

/// Fixed-exponent log-intercept; `None` when fewer than one usable point.
pub(crate) fn log_coefficient(points: &[(f64, f64)], n: u32) -> Option<f64> {
    let logs: Vec<f64> = points
        .iter()
        .filter(|(f, r)| *f > 0.0 && *r > 0.0)
        .map(|(f, r)| r.ln() - f64::from(n) * f.ln())
        .collect();
    if logs.is_empty() {
        None
    } else {
        Some(logs.iter().sum::<f64>() / logs.len() as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    pub intercept_std_error: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope·x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::stats("linear fit needs at least three (x, y) pairs"));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::stats("linear fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let s2 = sse / (k - 2.0);
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit {
        slope,
        intercept,
        slope_std_error: (s2 / sxx).sqrt(),
        intercept_std_error: (s2 * (1.0 / k + mx * mx / sxx)).sqrt(),
        r_squared,
    })
}

/// Fits `R = A·Fⁿ` to `(F, R)` points. Errors come from the scatter of the
/// log residuals; use [`fit_power_law_resampled`] for pulse-level errors.
pub fn fit_power_law(points: &[(f64, f64)], n: u32, fix_exponent: bool) -> Result<PowerLawFit> {
    if points.iter().any(|(f, r)| !(f.is_finite() && *f > 0.0 && r.is_finite() && *r >= 0.0)) {
        return Err(Error::domain("power-law points need F > 0 and R >= 0"));
    }
    let usable: Vec<(f64, f64)> = points.iter().copied().filter(|(_, r)| *r > 0.0).collect();
    let dropped = points.len() - usable.len();
    if usable.len() < 3 {
        return Err(Error::stats(format!(
            "power-law fit needs at least 3 points with nonzero flux, got {}",
            usable.len()
        )));
    }
    let k = usable.len() as f64;
    let log_a = log_coefficient(&usable, n).expect("usable points are positive");
    let resid: Vec<f64> = usable
        .iter()
        .map(|(f, r)| r.ln() - f64::from(n) * f.ln() - log_a)
        .collect();
    let sse: f64 = resid.iter().map(|e| e * e).sum();
    let a = log_a.exp();
    let se_log_a = (sse / (k - 1.0) / k).sqrt();
    let samples = usable.len() as u64;
    let coefficient = EstimateWithError {
        estimator_id: format!("power_law_A{n}"),
        value: a,
        std_error: a * se_log_a,
        ci_low: (log_a - 1.96 * se_log_a).exp(),
        ci_high: (log_a + 1.96 * se_log_a).exp(),
        samples,
    };
    let exponent = if fix_exponent {
        None
    } else {
        let xs: Vec<f64> = usable.iter().map(|(f, _)| f.ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|(_, r)| r.ln()).collect();
        let fit = linear_fit(&xs, &ys)?;
        Some(EstimateWithError {
            estimator_id: format!("power_law_p{n}"),
            value: fit.slope,
            std_error: fit.slope_std_error,
            ci_low: fit.slope - 1.96 * fit.slope_std_error,
            ci_high: fit.slope + 1.96 * fit.slope_std_error,
            samples,
        })
    };
    Ok(PowerLawFit {
        order: n,
        coefficient,
        exponent,
        residual_norm: sse.sqrt(),
        used_points: usable.len(),
        dropped_points: dropped,
    })
}

/// Per-operating-point pulse data for a resampled power-law fit.
pub struct FluxSeries<'a> {
    pub pump: &'a [f64],
    pub harmonic: &'a [f64],
}

/// Power-law fit of mean harmonic flux against mean pump flux over several
/// operating points, with the coefficient error from a joint pulse bootstrap.
/// All series must have the same pulse count (common random numbers).
pub fn fit_power_law_resampled(series: &[FluxSeries<'_>], n: u32, fix_exponent: bool, boot: &Bootstrap) -> Result<PowerLawFit> {
    let pulses = series.first().map(|s| s.pump.len()).unwrap_or(0);
    if series.iter().any(|s| s.pump.len() != pulses || s.harmonic.len() != pulses) {
        return Err(Error::stats("resampled power-law fit needs equal-length series"));
    }
    let points: Vec<(f64, f64)> = series
        .iter()
        .map(|s| (mean(s.pump), mean(s.harmonic)))
        .collect();
    let mut fit = fit_power_law(&points, n, fix_exponent)?;
    let tables: Vec<BlockSums> = series
        .iter()
        .map(|s| {
            boot.block_sums(pulses, 3, |i, row| {
                row[0] = 1.0;
                row[1] = s.pump[i];
                row[2] = s.harmonic[i];
            })
        })
        .collect();
    let refs: Vec<&BlockSums> = tables.iter().collect();
    let coefficient = boot.evaluate_joint(&format!("power_law_A{n}"), &refs, |totals| {
        let pts: Vec<(f64, f64)> = totals.iter().map(|t| (t[1] / t[0], t[2] / t[0])).collect();
        log_coefficient(&pts, n).map(f64::exp)
    })?;
    fit.coefficient = coefficient;
    Ok(fit)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Second-order correlation of the n-th harmonic, g⁽²ⁿ⁾/(g⁽ⁿ⁾)², from the
/// pump correlation functions.
pub fn predict_harmonic_g2(pump_gs: &BTreeMap<u32, f64>, n: u32) -> Result<f64> {
    let gn = pump_gs
        .get(&n)
        .ok_or_else(|| Error::domain(format!("missing pump g({n})")))?;
    let g2n = pump_gs
        .get(&(2 * n))
        .ok_or_else(|| Error::domain(format!("missing pump g({})", 2 * n)))?;
    if *gn == 0.0 {
        return Err(Error::domain(format!("pump g({n}) is zero")));
    }
    Ok(g2n / (gn * gn))
}

/// Exact [`predict_harmonic_g2`] for an analytic light model.
pub fn predict_harmonic_g2_exact(model: &LightModel, n: u32) -> Result<BigRational> {
    if 2 * n > MAX_EXACT_ORDER {
        return Err(Error::domain(format!("order 2n = {} exceeds {MAX_EXACT_ORDER}", 2 * n)));
    }
    check_exact_order(n)?;
    let gn = model.analytic_gn(n)?;
    Ok(model.analytic_gn(2 * n)? / (&gn * &gn))
}

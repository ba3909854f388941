//! Light-source statistics.
//!
//! A pulse carries `temporal_modes` independent intensity cells. Each cell of a
//! [`LightKind::GaussianQuadrature`] source has intensity `w = x² + y²` with
//! independent zero-mean Gaussian quadratures whose variance ratio is the
//! `quad_ratio` r. r = 0 is degenerate bright squeezed vacuum, r = 1 is thermal
//! light, and values in between describe partially non-degenerate light.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Highest correlation order evaluated in exact arithmetic.
pub const MAX_EXACT_ORDER: u32 = 10;

/// Default width of the wavelength-to-`quad_ratio` map, in nm.
pub const DEFAULT_DETUNING_WIDTH_NM: f64 = 25.0;

/// Degenerate wavelength of the down-converted light, in nm.
pub const DEGENERATE_WAVELENGTH_NM: f64 = 1600.0;

const DEFAULT_BATCH: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightKind {
    Coherent,
    GaussianQuadrature,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightModel {
    kind: LightKind,
    mean_photons: f64,
    quad_ratio: f64,
    temporal_modes: u32,
}

impl LightModel {
    pub fn new(kind: LightKind, mean_photons: f64, quad_ratio: f64, temporal_modes: u32) -> Result<Self> {
        if !(mean_photons.is_finite() && mean_photons >= 0.0) {
            return Err(Error::domain(format!("mean_photons must be finite and >= 0, got {mean_photons}")));
        }
        if !(0.0..=1.0).contains(&quad_ratio) {
            return Err(Error::domain(format!("quad_ratio must lie in [0, 1], got {quad_ratio}")));
        }
        if temporal_modes == 0 {
            return Err(Error::domain("temporal_modes must be >= 1"));
        }
        Ok(LightModel { kind, mean_photons, quad_ratio, temporal_modes })
    }

    pub fn coherent(mean_photons: f64) -> Result<Self> {
        Self::new(LightKind::Coherent, mean_photons, 0.0, 1)
    }

    pub fn thermal(mean_photons: f64) -> Result<Self> {
        Self::new(LightKind::GaussianQuadrature, mean_photons, 1.0, 1)
    }

    /// Single-mode degenerate bright squeezed vacuum.
    pub fn bsv(mean_photons: f64) -> Result<Self> {
        Self::new(LightKind::GaussianQuadrature, mean_photons, 0.0, 1)
    }

    pub fn gaussian(mean_photons: f64, quad_ratio: f64) -> Result<Self> {
        Self::new(LightKind::GaussianQuadrature, mean_photons, quad_ratio, 1)
    }

    pub fn with_temporal_modes(self, temporal_modes: u32) -> Result<Self> {
        Self::new(self.kind, self.mean_photons, self.quad_ratio, temporal_modes)
    }

    pub fn with_mean_photons(self, mean_photons: f64) -> Result<Self> {
        Self::new(self.kind, mean_photons, self.quad_ratio, self.temporal_modes)
    }

    pub fn kind(&self) -> LightKind {
        self.kind
    }

    pub fn mean_photons(&self) -> f64 {
        self.mean_photons
    }

    /// Quadrature variance ratio; always 0 for coherent light.
    pub fn quad_ratio(&self) -> f64 {
        match self.kind {
            LightKind::Coherent => 0.0,
            LightKind::GaussianQuadrature => self.quad_ratio,
        }
    }

    pub fn temporal_modes(&self) -> u32 {
        self.temporal_modes
    }

    /// Normalized n-th order correlation function g⁽ⁿ⁾ of the total pulse
    /// intensity, in exact rational arithmetic.
    ///
    /// The quadrature ratio is converted from its binary floating-point value
    /// exactly, so r = 0 and r = 1 give the integer endpoints (2n−1)!! and n!.
    pub fn analytic_gn(&self, n: u32) -> Result<BigRational> {
        check_exact_order(n)?;
        if self.kind == LightKind::Coherent {
            return Ok(BigRational::one());
        }
        let r = BigRational::from_float(self.quad_ratio)
            .ok_or_else(|| Error::domain("quad_ratio is not finite"))?;
        let single: Vec<BigRational> = (0..=n).map(|k| single_mode_moment(&r, k)).collect();
        Ok(multimode_gn(&single, self.temporal_modes, n))
    }

    pub fn analytic_gn_f64(&self, n: u32) -> Result<f64> {
        Ok(rational_to_f64(&self.analytic_gn(n)?))
    }

    /// Draws the intensities of all temporal modes of one pulse into `out`.
    ///
    /// Two standard normals are consumed per mode for every Gaussian kind so
    /// that pulses stay aligned across `quad_ratio` values.
    pub fn sample_modes<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mode_mean = self.mean_photons / f64::from(self.temporal_modes);
        match self.kind {
            LightKind::Coherent => out.fill(mode_mean),
            LightKind::GaussianQuadrature => {
                let major = mode_mean / (1.0 + self.quad_ratio);
                let minor = major * self.quad_ratio;
                for w in out.iter_mut() {
                    let x: f64 = StandardNormal.sample(rng);
                    let y: f64 = StandardNormal.sample(rng);
                    *w = major * x * x + minor * y * y;
                }
            }
        }
    }
}

impl fmt::Display for LightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LightKind::Coherent => write!(f, "coherent(<N>={})", self.mean_photons)?,
            LightKind::GaussianQuadrature => {
                write!(f, "gaussian(<N>={}, r={})", self.mean_photons, self.quad_ratio)?
            }
        }
        if self.temporal_modes > 1 {
            write!(f, " x {} modes", self.temporal_modes)?;
        }
        Ok(())
    }
}

/// Quadrature ratio for a wavelength detuned from degeneracy:
/// `min(1, |λ − 1600 nm| / width)`.
pub fn detuning_quad_ratio(wavelength_nm: f64, width_nm: f64) -> Result<f64> {
    if !(wavelength_nm.is_finite() && width_nm.is_finite() && width_nm > 0.0) {
        return Err(Error::domain("wavelength and detuning width must be finite, width > 0"));
    }
    Ok(((wavelength_nm - DEGENERATE_WAVELENGTH_NM).abs() / width_nm).min(1.0))
}

pub(crate) fn check_exact_order(n: u32) -> Result<()> {
    if n == 0 || n > MAX_EXACT_ORDER {
        return Err(Error::domain(format!(
            "correlation order must lie in 1..={MAX_EXACT_ORDER}, got {n}"
        )));
    }
    Ok(())
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn double_factorial_odd(k: u32) -> BigInt {
    // (2k-1)!!, with (-1)!! = 1
    (1..=k).fold(BigInt::one(), |acc, j| acc * BigInt::from(2 * j - 1))
}

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, j| acc * BigInt::from(n - j) / BigInt::from(j + 1))
}

/// E[wᵏ]/E[w]ᵏ for one mode with quadrature variances in ratio 1 : r.
fn single_mode_moment(r: &BigRational, k: u32) -> BigRational {
    let mut sum = BigRational::zero();
    let mut r_pow = BigRational::one();
    // term j carries x^(2(k-j)) y^(2j)
    for j in 0..=k {
        let coeff = binomial(k, j) * double_factorial_odd(k - j) * double_factorial_odd(j);
        sum += BigRational::from_integer(coeff) * &r_pow;
        r_pow *= r;
    }
    let norm = num_traits::pow(BigRational::one() + r, k as usize);
    sum / norm
}

/// g⁽ⁿ⁾ of the sum of `modes` iid cells whose normalized moments are `single`.
fn multimode_gn(single: &[BigRational], modes: u32, n: u32) -> BigRational {
    let n = n as usize;
    let mut acc: Vec<BigRational> = single[..=n].to_vec();
    for _ in 1..modes {
        acc = (0..=n)
            .map(|m| {
                (0..=m).fold(BigRational::zero(), |s, k| {
                    s + BigRational::from_integer(binomial(m as u32, k as u32)) * &acc[k] * &single[m - k]
                })
            })
            .collect();
    }
    let scale = num_traits::pow(BigRational::from_integer(BigInt::from(modes)), n);
    &acc[n] / scale
}

/// View of one pulse of an ensemble.
#[derive(Clone, Copy, Debug)]
pub struct PulseRecord<'a> {
    pub index: u64,
    pub mode_intensities: &'a [f64],
}

impl PulseRecord<'_> {
    pub fn total(&self) -> f64 {
        self.mode_intensities.iter().sum()
    }
}

/// Mode intensities of a batch of pulses, stored row-major
/// (`pulse * modes + mode`), together with their random-stream address.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseEnsemble {
    modes: usize,
    intensities: Vec<f64>,
    pub seed: u64,
    pub stream_id: u64,
}

impl PulseEnsemble {
    pub fn from_intensities(modes: usize, intensities: Vec<f64>, seed: u64, stream_id: u64) -> Result<Self> {
        if modes == 0 || !intensities.len().is_multiple_of(modes) {
            return Err(Error::domain("intensity buffer length is not a multiple of the mode count"));
        }
        if intensities.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain("intensities must be finite and non-negative"));
        }
        Ok(PulseEnsemble { modes, intensities, seed, stream_id })
    }

    pub fn len(&self) -> usize {
        self.intensities.len() / self.modes
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn temporal_modes(&self) -> usize {
        self.modes
    }

    pub fn record(&self, index: usize) -> PulseRecord<'_> {
        PulseRecord {
            index: index as u64,
            mode_intensities: &self.intensities[index * self.modes..(index + 1) * self.modes],
        }
    }

    pub fn records(&self) -> impl Iterator<Item = PulseRecord<'_>> + '_ {
        self.intensities
            .chunks_exact(self.modes)
            .enumerate()
            .map(|(i, m)| PulseRecord { index: i as u64, mode_intensities: m })
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn intensities_mut(&mut self) -> &mut [f64] {
        &mut self.intensities
    }

    /// Total intensity of every pulse.
    pub fn totals(&self) -> Vec<f64> {
        self.intensities.chunks_exact(self.modes).map(|m| m.iter().sum()).collect()
    }
}

/// Samples `pulse_count` pulses of `model`.
pub fn sample_ensemble(model: &LightModel, pulse_count: usize, seed: u64, stream_id: u64) -> Result<PulseEnsemble> {
    sample_ensemble_batched(model, pulse_count, seed, stream_id, DEFAULT_BATCH)
}

/// [`sample_ensemble`] with an explicit parallel batch size; the result does
/// not depend on `batch`.
pub fn sample_ensemble_batched(
    model: &LightModel,
    pulse_count: usize,
    seed: u64,
    stream_id: u64,
    batch: usize,
) -> Result<PulseEnsemble> {
    if pulse_count == 0 {
        return Err(Error::domain("pulse_count must be >= 1"));
    }
    let modes = model.temporal_modes() as usize;
    let batch = batch.max(1);
    let streams = StreamRng::new(seed, stream_id);
    let mut intensities = vec![0.0; pulse_count * modes];
    intensities
        .par_chunks_mut(batch * modes)
        .enumerate()
        .for_each(|(b, chunk)| {
            for (k, pulse) in chunk.chunks_exact_mut(modes).enumerate() {
                let mut rng = streams.at((b * batch + k) as u64);
                model.sample_modes(&mut rng, pulse);
            }
        });
    Ok(PulseEnsemble { modes, intensities, seed, stream_id })
}

/// One Poisson draw; zero mean gives zero and very large means fall back to
/// the normal approximation.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean >= Poisson::<f64>::MAX_LAMBDA {
        let z: f64 = StandardNormal.sample(rng);
        return (mean + mean.sqrt() * z).round().max(0.0) as u64;
    }
    // mean is positive, finite and below MAX_LAMBDA here
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Photon counts `N ~ Poisson(η·W)` for the total intensity W of every pulse.
///
/// Factorial moments of the counts equal ordinary moments of η·W, so
/// normalized factorial moments of the result estimate the intensity g⁽ⁿ⁾.
pub fn poissonize(ensemble: &PulseEnsemble, efficiency: f64, seed: u64, stream_id: u64) -> Result<Vec<u64>> {
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::domain(format!("efficiency must lie in [0, 1], got {efficiency}")));
    }
    let streams = StreamRng::new(seed, stream_id);
    let totals = ensemble.totals();
    let mut counts = vec![0u64; totals.len()];
    counts
        .par_chunks_mut(DEFAULT_BATCH)
        .zip(totals.par_chunks(DEFAULT_BATCH))
        .enumerate()
        .for_each(|(b, (out, w))| {
            for (k, (n, w)) in out.iter_mut().zip(w).enumerate() {
                let mut rng = streams.at((b * DEFAULT_BATCH + k) as u64);
                *n = poisson_count(efficiency * w, &mut rng);
            }
        });
    Ok(counts)
}

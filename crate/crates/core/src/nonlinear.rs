//! Elements of the optical chain acting on pulse intensities.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightmodel::PulseEnsemble;

pub const MIN_HARMONIC_ORDER: u32 = 2;
pub const MAX_HARMONIC_ORDER: u32 = 4;

/// One element of the optical chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StageSpec {
    /// Intensity-dependent loss `w → w / (1 + κw)`, per photon⁻¹.
    Absorber { kappa: f64 },
    /// n-th harmonic generator with yield `eta · Σ wₖⁿ`.
    Harmonic { order: u32, eta: f64 },
    /// Linear loss with power transmission `transmission`.
    Attenuator { transmission: f64 },
    /// Beam sampler sending the fraction `tap` to the monitor port.
    Sampler { tap: f64 },
}

impl StageSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StageSpec::Absorber { kappa } => {
                if !(kappa.is_finite() && kappa >= 0.0) {
                    return Err(Error::domain(format!("absorber kappa must be finite and >= 0, got {kappa}")));
                }
            }
            StageSpec::Harmonic { order, eta } => {
                check_harmonic_order(order)?;
                if !(eta.is_finite() && eta > 0.0) {
                    return Err(Error::domain(format!("harmonic eta must be finite and > 0, got {eta}")));
                }
            }
            StageSpec::Attenuator { transmission: t } | StageSpec::Sampler { tap: t } => check_fraction(t)?,
        }
        Ok(())
    }
}

fn check_harmonic_order(n: u32) -> Result<()> {
    if !(MIN_HARMONIC_ORDER..=MAX_HARMONIC_ORDER).contains(&n) {
        return Err(Error::domain(format!(
            "harmonic order must lie in {MIN_HARMONIC_ORDER}..={MAX_HARMONIC_ORDER}, got {n}"
        )));
    }
    Ok(())
}

fn check_fraction(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("fraction must lie in [0, 1], got {t}")));
    }
    Ok(())
}

/// Saturable loss: strong bursts lose proportionally more photons.
/// Bounded by `1/kappa` and the identity for `kappa = 0`.
#[inline]
pub fn absorb(w: f64, kappa: f64) -> f64 {
    w / (1.0 + kappa * w)
}

#[inline]
pub fn attenuate(w: f64, transmission: f64) -> f64 {
    w * transmission
}

/// Harmonic photons produced by one pulse. Temporal modes radiate
/// independently because the response is instantaneous.
pub fn harmonic_yield(mode_intensities: &[f64], order: u32, eta: f64) -> Result<f64> {
    check_harmonic_order(order)?;
    Ok(harmonic_yield_unchecked(mode_intensities, order, eta))
}

#[inline]
pub(crate) fn harmonic_yield_unchecked(mode_intensities: &[f64], order: u32, eta: f64) -> f64 {
    eta * mode_intensities.iter().map(|w| w.powi(order as i32)).sum::<f64>()
}

/// Splits `photons` binomially: `tapped ~ Binomial(photons, tap)`.
pub fn split_counts<R: Rng + ?Sized>(photons: u64, tap: f64, rng: &mut R) -> Result<(u64, u64)> {
    check_fraction(tap)?;
    let tapped = if tap == 0.0 || photons == 0 {
        0
    } else if tap == 1.0 {
        photons
    } else {
        Binomial::new(photons, tap)
            .map_err(|e| Error::domain(e.to_string()))?
            .sample(rng)
    };
    Ok((tapped, photons - tapped))
}

/// Applies the absorber to every temporal mode of the ensemble.
pub fn apply_absorber(ensemble: &mut PulseEnsemble, kappa: f64) -> Result<()> {
    StageSpec::Absorber { kappa }.validate()?;
    ensemble.intensities_mut().par_iter_mut().for_each(|w| *w = absorb(*w, kappa));
    Ok(())
}

pub fn apply_attenuator(ensemble: &mut PulseEnsemble, transmission: f64) -> Result<()> {
    check_fraction(transmission)?;
    ensemble.intensities_mut().par_iter_mut().for_each(|w| *w = attenuate(*w, transmission));
    Ok(())
}

/// Harmonic yield of every pulse of the ensemble.
pub fn harmonic_yields(ensemble: &PulseEnsemble, order: u32, eta: f64) -> Result<Vec<f64>> {
    StageSpec::Harmonic { order, eta }.validate()?;
    let modes = ensemble.temporal_modes();
    Ok(ensemble
        .intensities()
        .par_chunks_exact(modes)
        .map(|m| harmonic_yield_unchecked(m, order, eta))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::pulse_rng;
    use proptest::prelude::*;

    #[test]
    fn absorber_examples() {
        assert_eq!(absorb(1234.5, 0.0), 1234.5);
        assert_eq!(absorb(1000.0, 0.001), 500.0);
    }

    #[test]
    fn harmonic_examples() {
        assert!((harmonic_yield(&[10.0], 2, 0.01).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(harmonic_yield(&[1.0, 2.0, 3.0], 3, 1.0).unwrap(), 36.0);
        assert!(harmonic_yield(&[1.0], 1, 1.0).is_err());
        assert!(harmonic_yield(&[1.0], 5, 1.0).is_err());
    }

    #[test]
    fn split_endpoints() {
        let mut rng = pulse_rng(1, 1, 0);
        assert_eq!(split_counts(17, 0.0, &mut rng).unwrap(), (0, 17));
        assert_eq!(split_counts(17, 1.0, &mut rng).unwrap(), (17, 0));
        let (a, b) = split_counts(1000, 0.3, &mut rng).unwrap();
        assert_eq!(a + b, 1000);
        assert!(split_counts(5, 1.2, &mut rng).is_err());
    }

    #[test]
    fn stage_validation() {
        assert!(StageSpec::Absorber { kappa: -1.0 }.validate().is_err());
        assert!(StageSpec::Harmonic { order: 2, eta: 0.0 }.validate().is_err());
        assert!(StageSpec::Sampler { tap: 1.01 }.validate().is_err());
        assert!(StageSpec::Attenuator { transmission: 0.5 }.validate().is_ok());
    }

    proptest! {
        #[test]
        fn harmonic_scale_covariance(
            modes in prop::collection::vec(0.0f64..1e3, 1..6),
            c in 0.01f64..100.0,
            n in 2u32..=4,
        ) {
            let scaled: Vec<f64> = modes.iter().map(|w| c * w).collect();
            let lhs = harmonic_yield(&scaled, n, 0.7).unwrap();
            let rhs = c.powi(n as i32) * harmonic_yield(&modes, n, 0.7).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-300));
        }

        #[test]
        fn absorber_bounded_and_monotone(w in 0.0f64..1e9, dw in 0.0f64..1e6, kappa in 1e-9f64..1.0) {
            let a = absorb(w, kappa);
            prop_assert!(a <= 1.0 / kappa);
            prop_assert!(a <= w);
            prop_assert!(absorb(w + dw, kappa) >= a);
        }

        #[test]
        fn absorber_vanishing_kappa(w in 0.0f64..1e6) {
            prop_assert!((absorb(w, 1e-15) - w).abs() <= 1e-8 * w.max(1.0));
        }
    }
}

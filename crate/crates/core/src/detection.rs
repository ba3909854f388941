//! Detector models and post-selection.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightmodel::poisson_count;

/// Gain of the charge-integrating detector, pV·s per photon.
pub const DEFAULT_GAIN: f64 = 5.0;
pub const DEFAULT_QUANTUM_EFFICIENCY: f64 = 0.85;
/// Electronic noise in photon equivalents per pulse.
pub const DEFAULT_NOISE_PHOTONS: f64 = 1600.0;

/// Charge-integrating analog detector returning a pulse area `S = K·N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeDetectorSpec {
    pub gain: f64,
    pub quantum_efficiency: f64,
    pub noise_photons: f64,
    /// Detected-photon level above which a pulse is flagged as overflowing.
    pub saturation: Option<f64>,
    /// Skip photon shot noise: the area is `K·η·W` plus electronic noise.
    pub deterministic: bool,
}

impl Default for ChargeDetectorSpec {
    fn default() -> Self {
        ChargeDetectorSpec {
            gain: DEFAULT_GAIN,
            quantum_efficiency: DEFAULT_QUANTUM_EFFICIENCY,
            noise_photons: DEFAULT_NOISE_PHOTONS,
            saturation: None,
            deterministic: false,
        }
    }
}

impl ChargeDetectorSpec {
    /// Noise-free, lossless, no shot noise: `S = K·W` exactly.
    pub fn ideal(gain: f64) -> Self {
        ChargeDetectorSpec { gain, quantum_efficiency: 1.0, noise_photons: 0.0, saturation: None, deterministic: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::domain(format!("detector gain must be finite and > 0, got {}", self.gain)));
        }
        if !(0.0..=1.0).contains(&self.quantum_efficiency) {
            return Err(Error::domain("quantum efficiency must lie in [0, 1]"));
        }
        if !(self.noise_photons.is_finite() && self.noise_photons >= 0.0) {
            return Err(Error::domain("noise_photons must be finite and >= 0"));
        }
        if let Some(s) = self.saturation {
            if !(s > 0.0) {
                return Err(Error::domain("saturation level must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeReading {
    /// Detected photoelectrons (η·W in deterministic mode, rounded).
    pub photons: u64,
    /// Pulse area, pV·s.
    pub area: f64,
    pub saturated: bool,
}

pub fn charge_detect<R: Rng + ?Sized>(intensity: f64, spec: &ChargeDetectorSpec, rng: &mut R) -> ChargeReading {
    let mean = spec.quantum_efficiency * intensity;
    let (photons, signal) = if spec.deterministic {
        (mean.round() as u64, mean)
    } else {
        let n = poisson_count(mean, rng);
        (n, n as f64)
    };
    let mut area = spec.gain * signal;
    if spec.noise_photons > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        area += spec.gain * spec.noise_photons * z;
    }
    let saturated = spec.saturation.is_some_and(|s| signal > s);
    ChargeReading { photons, area, saturated }
}

/// Pair of gated click detectors behind a beam splitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickPairSpec {
    /// Detection efficiency of each arm, applied to the harmonic photon number.
    pub efficiency: f64,
    /// Fraction of the light sent to arm 1.
    pub split: f64,
    pub dark_count_probability: f64,
}

impl ClickPairSpec {
    pub fn new(efficiency: f64) -> Self {
        ClickPairSpec { efficiency, split: 0.5, dark_count_probability: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency.is_finite() && self.efficiency >= 0.0) {
            return Err(Error::domain("click efficiency must be finite and >= 0"));
        }
        for (name, p) in [("split", self.split), ("dark_count_probability", self.dark_count_probability)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    /// Click probabilities of both arms for `photons` harmonic photons.
    pub fn click_probabilities(&self, photons: f64) -> (f64, f64) {
        let mu = self.efficiency * photons;
        let p = |m: f64| 1.0 - (1.0 - self.dark_count_probability) * (-m).exp();
        (p(mu * self.split), p(mu * (1.0 - self.split)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Clicks {
    pub arm1: u8,
    pub arm2: u8,
    pub coincidence: u8,
}

impl Clicks {
    pub fn pack(self) -> u8 {
        self.arm1 | (self.arm2 << 1) | (self.coincidence << 2)
    }

    pub fn unpack(bits: u8) -> Self {
        Clicks { arm1: bits & 1, arm2: (bits >> 1) & 1, coincidence: (bits >> 2) & 1 }
    }
}

/// Arms click independently given the harmonic photon number.
pub fn hbt_detect<R: Rng + ?Sized>(photons: f64, spec: &ClickPairSpec, rng: &mut R) -> Clicks {
    let (p1, p2) = spec.click_probabilities(photons);
    let arm1 = u8::from(rng.random::<f64>() < p1);
    let arm2 = u8::from(rng.random::<f64>() < p2);
    Clicks { arm1, arm2, coincidence: arm1 & arm2 }
}

/// Closed acceptance interval `[lo, hi]` on a monitor value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::domain(format!("invalid window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    pub fn everything() -> Self {
        Window { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub window: Window,
    /// Indices of accepted pulses, ascending.
    pub indices: Vec<usize>,
    pub fraction: f64,
}

impl Selection {
    pub fn mask(&self, len: usize) -> Vec<bool> {
        let mut m = vec![false; len];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }
}

/// Keeps the pulses whose tapped value lies inside `window`.
pub fn post_select(tapped: &[f64], window: Window) -> Result<Selection> {
    let indices: Vec<usize> = (0..tapped.len()).filter(|&i| window.contains(tapped[i])).collect();
    if indices.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no pulse of {} inside [{}, {}]",
            tapped.len(),
            window.lo,
            window.hi
        )));
    }
    let fraction = indices.len() as f64 / tapped.len() as f64;
    Ok(Selection { window, indices, fraction })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Pulses ordered by distance from the median of `tapped`.
fn by_distance_from_median(tapped: &[f64]) -> (f64, Vec<(f64, usize)>) {
    let center = median(tapped);
    let mut order: Vec<(f64, usize)> = tapped.iter().enumerate().map(|(i, v)| ((v - center).abs(), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    (center, order)
}

/// Narrowest window centred on the median of `tapped` that keeps at least
/// `min_pulses` pulses.
pub fn narrowest_window(tapped: &[f64], min_pulses: usize) -> Result<Window> {
    if tapped.is_empty() || min_pulses == 0 {
        return Err(Error::EmptySelection("no pulses to post-select".into()));
    }
    if tapped.len() < min_pulses {
        return Err(Error::EmptySelection(format!(
            "{} pulses cannot satisfy a minimum of {min_pulses}",
            tapped.len()
        )));
    }
    let (center, order) = by_distance_from_median(tapped);
    let half = order[min_pulses - 1].0;
    Window::new(center - half, center + half)
}

/// Window centred on the median of `tapped`, widened until the conditional
/// g⁽²⁾ of `reference` over the accepted pulses first reaches `target_g2`
/// (never narrower than `min_pulses` pulses). Falls back to the widest window
/// when the target is never reached.
pub fn window_for_target_g2(tapped: &[f64], reference: &[f64], target_g2: f64, min_pulses: usize) -> Result<Window> {
    if tapped.len() != reference.len() {
        return Err(Error::stats("monitor and reference sequences differ in length"));
    }
    let floor = narrowest_window(tapped, min_pulses)?;
    let (center, order) = by_distance_from_median(tapped);
    let (mut s1, mut s2) = (0.0, 0.0);
    for (k, &(dist, i)) in order.iter().enumerate() {
        s1 += reference[i];
        s2 += reference[i] * reference[i];
        let count = (k + 1) as f64;
        let ties_follow = order.get(k + 1).is_some_and(|next| next.0 == dist);
        if k + 1 < min_pulses || ties_follow {
            continue;
        }
        if s1 != 0.0 && count * s2 / (s1 * s1) >= target_g2 {
            return Window::new(center - dist, center + dist);
        }
    }
    let widest = order.last().map(|o| o.0).unwrap_or(0.0);
    Window::new((center - widest).min(floor.lo), (center + widest).max(floor.hi))
}

/// Window of relative half-width `half_width` around the median.
pub fn relative_window(tapped: &[f64], half_width: f64) -> Result<Window> {
    if tapped.is_empty() {
        return Err(Error::EmptySelection("no pulses to post-select".into()));
    }
    if !(half_width.is_finite() && half_width >= 0.0) {
        return Err(Error::domain("relative window width must be finite and >= 0"));
    }
    let c = median(tapped);
    Window::new(c - half_width * c.abs(), c + half_width * c.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::pulse_rng;

    #[test]
    fn charge_zero_input() {
        let spec = ChargeDetectorSpec { noise_photons: 0.0, ..Default::default() };
        let r = charge_detect(0.0, &spec, &mut pulse_rng(1, 1, 1));
        assert_eq!(r.area, 0.0);
        assert_eq!(r.photons, 0);
    }

    #[test]
    fn charge_deterministic_mode() {
        let r = charge_detect(1e6, &ChargeDetectorSpec::ideal(5.0), &mut pulse_rng(1, 1, 1));
        assert_eq!(r.area, 5.0e6);
    }

    #[test]
    fn charge_saturation_flag() {
        let spec = ChargeDetectorSpec { saturation: Some(100.0), ..ChargeDetectorSpec::ideal(1.0) };
        let mut rng = pulse_rng(1, 1, 1);
        assert!(charge_detect(101.0, &spec, &mut rng).saturated);
        assert!(!charge_detect(99.0, &spec, &mut rng).saturated);
    }

    #[test]
    fn hbt_limits() {
        let spec = ClickPairSpec::new(1.0);
        let mut rng = pulse_rng(2, 2, 2);
        for _ in 0..100 {
            assert_eq!(hbt_detect(0.0, &spec, &mut rng), Clicks::default());
            let c = hbt_detect(2e6, &spec, &mut rng);
            assert_eq!((c.arm1, c.arm2, c.coincidence), (1, 1, 1));
        }
    }

    #[test]
    fn clicks_roundtrip() {
        for bits in [0u8, 1, 2, 7] {
            assert_eq!(Clicks::unpack(bits).pack(), bits);
        }
    }

    #[test]
    fn post_select_identity_and_empty() {
        let v = [1.0, 5.0, 3.0];
        let s = post_select(&v, Window::everything()).unwrap();
        assert_eq!(s.indices, vec![0, 1, 2]);
        assert_eq!(s.fraction, 1.0);
        assert!(matches!(post_select(&v, Window::new(10.0, 20.0).unwrap()), Err(Error::EmptySelection(_))));
        assert!(Window::new(2.0, 1.0).is_err());
    }

    #[test]
    fn narrowest_window_keeps_minimum() {
        let v: Vec<f64> = (0..101).map(f64::from).collect();
        let w = narrowest_window(&v, 11).unwrap();
        assert_eq!((w.lo, w.hi), (45.0, 55.0));
        assert_eq!(post_select(&v, w).unwrap().indices.len(), 11);
        assert!(narrowest_window(&v, 500).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ChargeDetectorSpec { gain: 0.0, ..Default::default() }.validate().is_err());
        assert!(ClickPairSpec { split: 1.5, ..ClickPairSpec::new(1.0) }.validate().is_err());
        assert!(ChargeDetectorSpec::default().validate().is_ok());
    }
}

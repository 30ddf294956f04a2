//! Sine-sum test signals and a seasonal multichannel stand-in for sensor
//! data.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::series::MultiSeries;

/// `y[n] = sum_j c_j sin(w_j n dx) + N(0, noise_std^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SineSumSpec {
    pub coefficients: Vec<f64>,
    /// Angular frequencies in radians per unit of `x`.
    pub angular_frequencies: Vec<f64>,
    pub n_points: usize,
    pub dx: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SineSumSpec {
    /// `sin x + sin 2x + sin 3x` on 512 points with 64 samples per `2 pi`.
    fn default() -> Self {
        SineSumSpec {
            coefficients: vec![1.0, 1.0, 1.0],
            angular_frequencies: vec![1.0, 2.0, 3.0],
            n_points: 512,
            dx: 2.0 * PI / 64.0,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

impl SineSumSpec {
    pub fn with_coefficients(coefficients: Vec<f64>) -> Self {
        SineSumSpec {
            coefficients,
            ..SineSumSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.len() != self.angular_frequencies.len() {
            return Err(Error::InvalidConfig(
                "coefficient and frequency lists differ in length".into(),
            ));
        }
        if self.n_points < 8 {
            return Err(Error::InvalidConfig("need at least 8 points".into()));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::InvalidConfig("dx must be positive".into()));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::InvalidConfig("noise_std must be >= 0".into()));
        }
        Ok(())
    }

    /// Sample positions `n * dx`.
    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.n_points).map(|n| n as f64 * self.dx).collect()
    }

    /// DFT bin (cycles per `n_points` samples) of angular frequency `w`.
    pub fn bin_of(&self, w: f64) -> f64 {
        w * self.n_points as f64 * self.dx / (2.0 * PI)
    }
}

/// Noiseless samples plus optional Gaussian noise, as a one-channel series.
pub fn gen_sine_sum(spec: &SineSumSpec) -> Result<MultiSeries> {
    spec.validate()?;
    let mut values: Vec<f64> = spec
        .abscissae()
        .iter()
        .map(|&x| {
            spec.coefficients
                .iter()
                .zip(&spec.angular_frequencies)
                .map(|(c, w)| c * libm::sin(w * x))
                .sum()
        })
        .collect();
    if spec.noise_std > 0.0 {
        let mut rng = rng::seeded(spec.seed);
        for v in &mut values {
            let z: f64 = rng.sample(StandardNormal);
            *v += spec.noise_std * z;
        }
    }
    MultiSeries::from_channels(vec![values])
}

/// Hourly-style multichannel series: daily and weekly cycles with random
/// phases, a slow drift and AR(1) noise. Used when no dataset file is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeasonalSpec {
    pub channels: usize,
    pub len: usize,
    /// Samples per day; the weekly cycle is seven days.
    pub period: usize,
    pub noise_std: f64,
    /// AR(1) coefficient of the noise.
    pub ar: f64,
    pub seed: u64,
}

impl Default for SeasonalSpec {
    fn default() -> Self {
        SeasonalSpec {
            channels: 7,
            len: 4000,
            period: 24,
            noise_std: 0.3,
            ar: 0.6,
            seed: 0,
        }
    }
}

pub fn gen_seasonal(spec: &SeasonalSpec) -> Result<MultiSeries> {
    if spec.channels == 0 || spec.len < 2 || spec.period < 2 {
        return Err(Error::InvalidConfig(
            "seasonal series needs channels >= 1, len >= 2 and period >= 2".into(),
        ));
    }
    if !(spec.noise_std >= 0.0) || !(spec.ar.abs() < 1.0) {
        return Err(Error::InvalidConfig("need noise_std >= 0 and |ar| < 1".into()));
    }
    let mut rng = rng::seeded(spec.seed);
    let day = spec.period as f64;
    let week = 7.0 * day;
    let channels = (0..spec.channels)
        .map(|_| {
            let daily: f64 = rng.random_range(0.5..1.5);
            let weekly: f64 = rng.random_range(0.2..0.8);
            let harmonic: f64 = rng.random_range(0.0..0.4);
            let (p1, p2, p3): (f64, f64, f64) = (
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..2.0 * PI),
            );
            let drift: f64 = rng.random_range(-1.0..1.0);
            let mut noise = 0.0;
            (0..spec.len)
                .map(|t| {
                    let x = t as f64;
                    let z: f64 = rng.sample(StandardNormal);
                    noise = spec.ar * noise + spec.noise_std * z;
                    daily * libm::sin(2.0 * PI * x / day + p1)
                        + harmonic * libm::sin(4.0 * PI * x / day + p3)
                        + weekly * libm::sin(2.0 * PI * x / week + p2)
                        + drift * x / spec.len as f64
                        + noise
                })
                .collect()
        })
        .collect();
    MultiSeries::from_channels(channels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::rfft;

    #[test]
    fn quarter_period_samples() {
        let spec = SineSumSpec {
            coefficients: vec![1.0],
            angular_frequencies: vec![1.0],
            n_points: 8,
            dx: PI / 2.0,
            ..SineSumSpec::default()
        };
        let y = gen_sine_sum(&spec).unwrap();
        let expected = [0.0, 1.0, 0.0, -1.0];
        for (a, b) in y.channel(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn default_signal_peaks_on_integer_bins() {
        let spec = SineSumSpec::default();
        assert_eq!(
            [1.0, 2.0, 3.0].map(|w| spec.bin_of(w)),
            [8.0, 16.0, 24.0]
        );
        let y = gen_sine_sum(&spec).unwrap();
        let amps = rfft(y.channel(0)).unwrap().amplitudes();
        for (k, a) in amps.iter().enumerate() {
            if [8, 16, 24].contains(&k) {
                assert!((a - 256.0).abs() < 1e-9, "bin {k}: {a}");
            } else {
                assert!(*a < 1e-9, "bin {k}: {a}");
            }
        }
    }

    #[test]
    fn weighted_peaks_have_ratio_1_2_3() {
        let y = gen_sine_sum(&SineSumSpec::with_coefficients(vec![1.0, 2.0, 3.0])).unwrap();
        let amps = rfft(y.channel(0)).unwrap().amplitudes();
        assert!((amps[16] / amps[8] - 2.0).abs() < 1e-9);
        assert!((amps[24] / amps[8] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_ignores_seed() {
        let a = gen_sine_sum(&SineSumSpec { seed: 1, ..SineSumSpec::default() }).unwrap();
        let b = gen_sine_sum(&SineSumSpec { seed: 2, ..SineSumSpec::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_points_rejected() {
        let spec = SineSumSpec { n_points: 4, ..SineSumSpec::default() };
        assert!(gen_sine_sum(&spec).is_err());
    }

    #[test]
    fn seasonal_is_seeded() {
        let spec = SeasonalSpec {
            len: 300,
            ..SeasonalSpec::default()
        };
        let a = gen_seasonal(&spec).unwrap();
        assert_eq!(a.channels(), 7);
        assert_eq!(a.len(), 300);
        assert_eq!(a, gen_seasonal(&spec).unwrap());
        assert_ne!(a, gen_seasonal(&SeasonalSpec { seed: 1, ..spec }).unwrap());
        assert!(gen_seasonal(&SeasonalSpec { ar: 1.0, ..spec }).is_err());
    }
}

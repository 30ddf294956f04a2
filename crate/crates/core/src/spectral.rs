//! Real-input discrete Fourier transforms, frequency bands and band-wise RMSE.
//!
//! Spectra are one-sided: a real sequence of length `N` is represented by its
//! `B = N/2 + 1` lowest bins, the rest following from conjugate symmetry.
//! Multichannel data is always transformed channel by channel along time.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-sided spectrum of a real sequence of length `len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
    len: usize,
}

impl Spectrum {
    pub fn new(bins: Vec<Complex64>, len: usize) -> Result<Self> {
        if len == 0 || bins.len() != bin_count(len) {
            return Err(Error::InvalidSpectrum {
                bins: bins.len(),
                len,
            });
        }
        Ok(Spectrum { bins, len })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn bins_mut(&mut self) -> &mut [Complex64] {
        &mut self.bins
    }

    pub fn into_bins(self) -> Vec<Complex64> {
        self.bins
    }

    /// Length of the time-domain sequence this spectrum came from.
    pub fn origin_length(&self) -> usize {
        self.len
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|z| z.norm()).collect()
    }

    /// Full two-sided spectrum reconstructed by conjugate symmetry.
    pub fn full(&self) -> Vec<Complex64> {
        let n = self.len;
        (0..n)
            .map(|k| {
                if k < self.bins.len() {
                    self.bins[k]
                } else {
                    self.bins[n - k].conj()
                }
            })
            .collect()
    }
}

/// Number of one-sided bins for a real sequence of length `n`.
#[inline]
pub fn bin_count(n: usize) -> usize {
    n / 2 + 1
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidInput("empty sequence".into()));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!("non-finite sample at {i}")));
    }
    Ok(())
}

/// `e^{-2 pi i m / n}` with `m` reduced modulo `n` first.
fn unit_root(m: usize, n: usize) -> Complex64 {
    let theta = -2.0 * PI * ((m % n) as f64) / n as f64;
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

/// Direct O(N^2) evaluation of the one-sided DFT sum.
pub fn rdft_naive(x: &[f64]) -> Result<Spectrum> {
    check_finite(x)?;
    let n = x.len();
    let bins = (0..bin_count(n))
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| unit_root(k * t, n) * v)
                .sum()
        })
        .collect();
    Spectrum::new(bins, n)
}

/// Iterative in-place radix-2 transform for power-of-two lengths.
#[derive(Debug, Clone)]
struct Radix2 {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..n / 2).map(|k| unit_root(k, n)).collect();
        Radix2 { n, twiddles, bitrev }
    }

    fn forward(&self, data: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let step = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let w = self.twiddles[k * step];
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

#[derive(Debug, Clone)]
enum Kernel {
    Radix2(Radix2),
    Bluestein {
        inner: Radix2,
        chirp: Vec<Complex64>,
        filter: Vec<Complex64>,
    },
}

/// Precomputed complex DFT of one length. Powers of two use radix-2,
/// everything else goes through Bluestein's chirp-z convolution.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    kernel: Kernel,
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "FFT length must be positive");
        if n.is_power_of_two() {
            return FftPlan {
                n,
                kernel: Kernel::Radix2(Radix2::new(n)),
            };
        }
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // chirp[j] = exp(-i pi j^2 / n); j^2 reduced mod 2n keeps the angle small.
        let chirp: Vec<Complex64> = (0..n)
            .map(|j| {
                let q = (j * j) % (2 * n);
                let theta = -PI * q as f64 / n as f64;
                Complex64::new(libm::cos(theta), libm::sin(theta))
            })
            .collect();
        let mut filter = vec![Complex64::new(0.0, 0.0); m];
        filter[0] = chirp[0].conj();
        for j in 1..n {
            filter[j] = chirp[j].conj();
            filter[m - j] = chirp[j].conj();
        }
        inner.forward(&mut filter);
        FftPlan {
            n,
            kernel: Kernel::Bluestein {
                inner,
                chirp,
                filter,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward transform `X[k] = sum_t x[t] e^{-2 pi i k t / n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n);
        match &self.kernel {
            Kernel::Radix2(r) => r.forward(data),
            Kernel::Bluestein {
                inner,
                chirp,
                filter,
            } => {
                let m = inner.n;
                let mut work = vec![Complex64::new(0.0, 0.0); m];
                for j in 0..self.n {
                    work[j] = data[j] * chirp[j];
                }
                inner.forward(&mut work);
                for (w, f) in work.iter_mut().zip(filter) {
                    *w = (*w * f).conj();
                }
                // Inverse via conjugation; 1/m folded into the output scaling.
                inner.forward(&mut work);
                let scale = 1.0 / m as f64;
                for k in 0..self.n {
                    data[k] = work[k].conj() * scale * chirp[k];
                }
            }
        }
    }

    /// In-place unnormalised inverse transform (positive exponent).
    pub fn backward(&self, data: &mut [Complex64]) {
        for z in data.iter_mut() {
            *z = z.conj();
        }
        self.forward(data);
        for z in data.iter_mut() {
            *z = z.conj();
        }
    }
}

/// Real-input transform of a fixed length: forward, inverse and the adjoint
/// used to back-propagate through a spectrum.
#[derive(Debug, Clone)]
pub struct RealFft {
    plan: FftPlan,
}

impl RealFft {
    pub fn new(n: usize) -> Self {
        RealFft {
            plan: FftPlan::new(n),
        }
    }

    pub fn len(&self) -> usize {
        self.plan.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bins(&self) -> usize {
        bin_count(self.len())
    }

    /// Forward transform without input validation.
    pub fn forward_unchecked(&self, x: &[f64]) -> Spectrum {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plan.forward(&mut buf);
        buf.truncate(self.bins());
        buf[0].im = 0.0;
        if self.len().is_multiple_of(2) {
            let last = buf.len() - 1;
            buf[last].im = 0.0;
        }
        Spectrum {
            bins: buf,
            len: self.len(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Spectrum> {
        check_finite(x)?;
        if x.len() != self.len() {
            return Err(Error::shape((self.len(), 1), (x.len(), 1)));
        }
        Ok(self.forward_unchecked(x))
    }

    pub fn inverse(&self, s: &Spectrum) -> Result<Vec<f64>> {
        if s.origin_length() != self.len() || s.bins().len() != self.bins() {
            return Err(Error::InvalidSpectrum {
                bins: s.bins().len(),
                len: s.origin_length(),
            });
        }
        let mut full = s.full();
        self.plan.backward(&mut full);
        let scale = 1.0 / self.len() as f64;
        Ok(full.iter().map(|z| z.re * scale).collect())
    }

    /// Adjoint of the one-sided forward map.
    ///
    /// Given `g[k] = dL/dRe F[k] + i dL/dIm F[k]` for the one-sided bins,
    /// returns `dL/dx[t] = Re sum_k g[k] e^{+2 pi i k t / N}`.
    pub fn adjoint(&self, g: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(g.len(), self.bins());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len()];
        for (b, z) in buf.iter_mut().zip(g) {
            *b = z.conj();
        }
        self.plan.forward(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }
}

/// Fast one-sided transform of `x`.
pub fn rfft(x: &[f64]) -> Result<Spectrum> {
    check_finite(x)?;
    Ok(RealFft::new(x.len()).forward_unchecked(x))
}

/// Inverse of [`rfft`].
pub fn irfft(s: &Spectrum) -> Result<Vec<f64>> {
    RealFft::new(s.origin_length()).inverse(s)
}

/// Low / mid / high frequency index ranges over the one-sided bins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandPartition {
    pub lf: Range<usize>,
    pub mf: Range<usize>,
    pub hf: Range<usize>,
    pub bin_count: usize,
}

impl BandPartition {
    pub const DEFAULT_LF: f64 = 0.1;
    pub const DEFAULT_MF: f64 = 0.5;

    /// Default 10% / 10-50% / 50-100% partition.
    pub fn standard(bins: usize) -> Result<Self> {
        band_partition(bins, Self::DEFAULT_LF, Self::DEFAULT_MF)
    }
}

/// Splits `[0, bins)` at `ceil(lf_frac * B)` and `ceil(mf_frac * B)`.
pub fn band_partition(bins: usize, lf_frac: f64, mf_frac: f64) -> Result<BandPartition> {
    if bins < 3 {
        return Err(Error::TooFewBins(bins));
    }
    if !(0.0..=1.0).contains(&lf_frac) || !(lf_frac..=1.0).contains(&mf_frac) {
        return Err(Error::InvalidConfig("band fractions must satisfy 0 <= lf <= mf <= 1".into()));
    }
    let cut = |f: f64| (libm::ceil(f * bins as f64 - 1e-9) as usize).min(bins);
    let a = cut(lf_frac);
    let b = cut(mf_frac).max(a);
    Ok(BandPartition {
        lf: 0..a,
        mf: a..b,
        hf: b..bins,
        bin_count: bins,
    })
}

/// RMSE of complex spectral error inside each band and over all bins.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BandReport {
    pub lf_rmse: f64,
    pub mf_rmse: f64,
    pub hf_rmse: f64,
    pub gf_rmse: f64,
}

/// Streaming accumulator for [`band_rmse`].
#[derive(Debug, Clone)]
pub struct BandAccumulator {
    partition: BandPartition,
    sums: [f64; 4],
    counts: [usize; 4],
}

impl BandAccumulator {
    pub fn new(partition: BandPartition) -> Self {
        BandAccumulator {
            partition,
            sums: [0.0; 4],
            counts: [0; 4],
        }
    }

    pub fn add(&mut self, target: &Spectrum, pred: &Spectrum) -> Result<()> {
        let b = self.partition.bin_count;
        if target.bins().len() != b || pred.bins().len() != b {
            return Err(Error::shape((b, 1), (pred.bins().len(), target.bins().len())));
        }
        for (k, (t, p)) in target.bins().iter().zip(pred.bins()).enumerate() {
            let e = (t - p).norm_sqr();
            let band = if self.partition.lf.contains(&k) {
                0
            } else if self.partition.mf.contains(&k) {
                1
            } else {
                2
            };
            self.sums[band] += e;
            self.counts[band] += 1;
            self.sums[3] += e;
            self.counts[3] += 1;
        }
        Ok(())
    }

    pub fn finish(&self) -> BandReport {
        let rmse = |i: usize| {
            if self.counts[i] == 0 {
                0.0
            } else {
                libm::sqrt(self.sums[i] / self.counts[i] as f64)
            }
        };
        BandReport {
            lf_rmse: rmse(0),
            mf_rmse: rmse(1),
            hf_rmse: rmse(2),
            gf_rmse: rmse(3),
        }
    }
}

/// Per-element RMSE of `|F_target[k] - F_pred[k]|` inside each band, pooled
/// over every spectrum pair.
pub fn band_rmse(
    targets: &[Spectrum],
    preds: &[Spectrum],
    partition: &BandPartition,
) -> Result<BandReport> {
    if targets.len() != preds.len() {
        return Err(Error::shape((targets.len(), 1), (preds.len(), 1)));
    }
    let mut acc = BandAccumulator::new(partition.clone());
    for (t, p) in targets.iter().zip(preds) {
        acc.add(t, p)?;
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_bins(s: &Spectrum, expected: &[Complex64]) {
        assert_eq!(s.bins().len(), expected.len());
        for (a, b) in s.bins().iter().zip(expected) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn naive_examples() {
        assert_bins(&rdft_naive(&[1.0, 0.0, 0.0, 0.0]).unwrap(), &[c(1.0, 0.0); 3]);
        assert_bins(
            &rdft_naive(&[2.0, 2.0, 2.0, 2.0]).unwrap(),
            &[c(8.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        );
        assert_bins(
            &rdft_naive(&[0.0, 1.0, 0.0, -1.0]).unwrap(),
            &[c(0.0, 0.0), c(0.0, -2.0), c(0.0, 0.0)],
        );
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(rdft_naive(&[1.0, f64::NAN]), Err(Error::InvalidInput(_))));
        assert!(matches!(rfft(&[f64::INFINITY]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn single_sample() {
        assert_bins(&rfft(&[7.0]).unwrap(), &[c(7.0, 0.0)]);
        assert_eq!(irfft(&rfft(&[7.0]).unwrap()).unwrap(), vec![7.0]);
    }

    #[test]
    fn inverse_examples() {
        let dc = Spectrum::new(vec![c(8.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 4).unwrap();
        let x = irfft(&dc).unwrap();
        for v in x {
            assert!((v - 2.0).abs() < 1e-12);
        }
        let s = Spectrum::new(vec![c(0.0, 0.0), c(0.0, -2.0), c(0.0, 0.0)], 4).unwrap();
        let x = irfft(&s).unwrap();
        for (a, b) in x.iter().zip([0.0, 1.0, 0.0, -1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inconsistent_spectrum_rejected() {
        assert!(matches!(
            Spectrum::new(vec![c(1.0, 0.0); 4], 4),
            Err(Error::InvalidSpectrum { bins: 4, len: 4 })
        ));
    }

    #[test]
    fn partition_examples() {
        let p = band_partition(49, 0.1, 0.5).unwrap();
        assert_eq!((p.lf, p.mf, p.hf), (0..5, 5..25, 25..49));
        let p = band_partition(10, 0.1, 0.5).unwrap();
        assert_eq!((p.lf, p.mf, p.hf), (0..1, 1..5, 5..10));
        assert_eq!(band_partition(2, 0.1, 0.5), Err(Error::TooFewBins(2)));
    }

    #[test]
    fn band_rmse_hand_example() {
        let target = Spectrum::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 4).unwrap();
        let pred = Spectrum::new(vec![c(0.0, 0.0); 3], 4).unwrap();
        let p = band_partition(3, 0.1, 0.5).unwrap();
        assert_eq!((p.lf.clone(), p.mf.clone(), p.hf.clone()), (0..1, 1..2, 2..3));
        let r = band_rmse(&[target], &[pred], &p).unwrap();
        assert_eq!(r.lf_rmse, 1.0);
        assert_eq!(r.mf_rmse, 0.0);
        assert_eq!(r.hf_rmse, 0.0);
        assert!((r.gf_rmse - libm::sqrt(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn band_rmse_shape_mismatch() {
        let a = rfft(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = rfft(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let p = band_partition(3, 0.1, 0.5).unwrap();
        assert!(matches!(band_rmse(core::slice::from_ref(&a), &[b], &p), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(band_rmse(&[a.clone(), a.clone()], &[a], &p), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn parseval_hand_example() {
        let s = rfft(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let energy: f64 = s.full().iter().map(|z| z.norm_sqr()).sum();
        assert!((energy - 120.0).abs() < 1e-9);
    }

    #[test]
    fn adjoint_matches_transpose_of_forward() {
        // <F x, g>_R == <x, F^T g> for the real-linear forward map.
        for n in [5usize, 8, 12] {
            let fft = RealFft::new(n);
            let x: Vec<f64> = (0..n).map(|i| libm::sin(i as f64 * 1.3) + 0.2).collect();
            let g: Vec<Complex64> = (0..fft.bins())
                .map(|k| c(libm::cos(k as f64), libm::sin(0.7 * k as f64)))
                .collect();
            let fx = fft.forward_unchecked(&x);
            let lhs: f64 = fx.bins().iter().zip(&g).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
            let ag = fft.adjoint(&g);
            let rhs: f64 = x.iter().zip(&ag).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-10, "n={n}: {lhs} vs {rhs}");
        }
    }
}

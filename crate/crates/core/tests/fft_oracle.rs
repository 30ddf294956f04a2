//! The fast real transform against the quadratic reference DFT.

use frele_core::rng;
use frele_core::spectral::{bin_count, irfft, rdft_naive, rfft, RealFft, Spectrum};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_signal<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn one_sided_energy(s: &Spectrum) -> f64 {
    let n = s.origin_length();
    let mut e = 0.0;
    for (k, z) in s.bins().iter().enumerate() {
        let w = if k == 0 || (n.is_multiple_of(2) && k == n / 2) { 1.0 } else { 2.0 };
        e += w * z.norm_sqr();
    }
    e / n as f64
}

#[test]
fn random_lengths_match_reference() {
    let mut rng = rng::seeded(11);
    for _ in 0..300 {
        let n = rng.random_range(1..=512);
        let x = random_signal(&mut rng, n);
        let fast = rfft(&x).unwrap();
        let slow = rdft_naive(&x).unwrap();
        assert_eq!(fast.bins().len(), bin_count(n));
        let err = fast
            .bins()
            .iter()
            .zip(slow.bins())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "n = {n}: max bin error {err:e}");

        let back = irfft(&fast).unwrap();
        let round = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(round < 1e-9, "n = {n}: round trip error {round:e}");

        let time: f64 = x.iter().map(|v| v * v).sum();
        let freq = one_sided_energy(&fast);
        assert!((time - freq).abs() <= 1e-9 * time.max(1e-300), "n = {n}");
    }
}

#[test]
fn long_prime_and_power_of_two_lengths() {
    let mut rng = rng::seeded(5);
    for n in [1021, 1024, 2047, 4096] {
        let x = random_signal(&mut rng, n);
        let fast = rfft(&x).unwrap();
        let slow = rdft_naive(&x).unwrap();
        let err = fast
            .bins()
            .iter()
            .zip(slow.bins())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "n = {n}: {err:e}");
    }
}

#[test]
fn adjoint_is_the_transpose() {
    // <rfft(x), g> over the real inner product of C^B equals <x, adjoint(g)>.
    let mut rng = rng::seeded(3);
    for n in [2, 7, 16, 96, 97, 336] {
        let fft = RealFft::new(n);
        let x = random_signal(&mut rng, n);
        let g: Vec<Complex64> = (0..fft.bins())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let fx = fft.forward(&x).unwrap();
        let lhs: f64 = fx.bins().iter().zip(&g).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        let rhs: f64 = x.iter().zip(fft.adjoint(&g)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()), "n = {n}");
    }
}

#[test]
fn linearity() {
    let mut rng = rng::seeded(8);
    let n = 100;
    let x = random_signal(&mut rng, n);
    let y = random_signal(&mut rng, n);
    let (a, b) = (1.7, -0.3);
    let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
    let (fx, fy, fm) = (rfft(&x).unwrap(), rfft(&y).unwrap(), rfft(&mix).unwrap());
    for k in 0..fm.bins().len() {
        let expect = fx.bins()[k] * a + fy.bins()[k] * b;
        assert!((fm.bins()[k] - expect).norm() < 1e-10);
    }
}

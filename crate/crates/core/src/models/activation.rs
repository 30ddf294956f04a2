use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    /// Mexican-hat wavelet with width `a`:
    /// `pi^(1/4) / (15 a) * (1 - (x/a)^2) * exp(-x^2 / (2 a^2))`.
    Ricker { a: f64 },
}

impl Activation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::Ricker { a } if !(a > 0.0 && a.is_finite()) => {
                Err(Error::InvalidConfig("ricker width a must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Value and derivative at `x`. `relu'(0)` is taken as 0.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match *self {
            Activation::Relu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Activation::Tanh => {
                let t = libm::tanh(x);
                (t, 1.0 - t * t)
            }
            Activation::Ricker { a } => {
                let c = libm::pow(PI, 0.25) / (15.0 * a);
                let a2 = a * a;
                let u = x * x / a2;
                let e = libm::exp(-0.5 * u);
                let value = c * (1.0 - u) * e;
                let deriv = c * e * (x * u / a2 - 3.0 * x / a2);
                (value, deriv)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ricker_peak_and_roots() {
        let r = Activation::Ricker { a: 1.0 };
        let expected = libm::pow(PI, 0.25) / 15.0;
        assert!((r.value(0.0) - expected).abs() < 1e-15);
        assert!((r.value(0.0) - 0.08876).abs() < 1e-5);
        for a in [0.5, 1.0, 3.0] {
            let r = Activation::Ricker { a };
            assert!(r.value(a).abs() < 1e-16);
            assert!(r.value(-a).abs() < 1e-16);
        }
    }

    #[test]
    fn relu_kink_derivative_is_zero() {
        assert_eq!(Activation::Relu.eval(0.0), (0.0, 0.0));
        assert_eq!(Activation::Relu.eval(2.0), (2.0, 1.0));
    }

    #[test]
    fn ricker_is_even() {
        let r = Activation::Ricker { a: 1.7 };
        for x in [0.1, 0.9, 2.5, 7.0] {
            assert_eq!(r.value(x), r.value(-x));
        }
    }

    #[test]
    fn ricker_width_validated() {
        assert!(Activation::Ricker { a: 0.0 }.validate().is_err());
        assert!(Activation::Ricker { a: 1.0 }.validate().is_ok());
    }
}

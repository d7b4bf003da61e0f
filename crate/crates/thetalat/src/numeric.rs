//! Floating-point utilities: compensated accumulation, ball volumes, special functions.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

/// Accumulator width for long sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// Neumaier-compensated binary64.
    Double,
    /// Double-double (about 106 bits of significand).
    #[default]
    Extended,
}

impl Precision {
    /// Reads `THETALAT_PRECISION` (`double` or `extended`); unset means extended.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var("THETALAT_PRECISION") {
            Err(_) => Ok(Self::Extended),
            Ok(v) => v.parse(),
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" => Ok(Self::Double),
            "extended" => Ok(Self::Extended),
            other => Err(format!("unknown precision {other:?} (expected double or extended)")),
        }
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Double-double value hi + lo.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        let e = e + self.lo;
        let (hi, lo) = two_sum(s, e);
        Self { hi, lo }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Running sum with the configured compensation.
#[derive(Debug, Clone, Copy)]
pub struct Accumulator {
    precision: Precision,
    dd: DoubleDouble,
    comp: f64,
}

impl Accumulator {
    pub fn new(precision: Precision) -> Self {
        Self { precision, dd: DoubleDouble::default(), comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        match self.precision {
            Precision::Extended => self.dd = self.dd.add_f64(x),
            Precision::Double => {
                let t = self.dd.hi + x;
                if self.dd.hi.abs() >= x.abs() {
                    self.comp += (self.dd.hi - t) + x;
                } else {
                    self.comp += (x - t) + self.dd.hi;
                }
                self.dd.hi = t;
            }
        }
    }

    pub fn value(&self) -> f64 {
        match self.precision {
            Precision::Extended => self.dd.value(),
            Precision::Double => self.dd.hi + self.comp,
        }
    }
}

/// Compensated sum in the given order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Accumulator::new(Precision::Extended);
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// log Σ exp(xᵢ) with a max shift and compensated inner sum; −∞ for an empty input.
pub fn log_sum_exp(xs: &[f64], precision: Precision) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let mut acc = Accumulator::new(precision);
    for &x in xs {
        acc.add((x - m).exp());
    }
    m + acc.value().ln()
}

pub fn ln_gamma_fn(x: f64) -> f64 {
    ln_gamma(x)
}

/// log of the volume of the unit ball in ℝⁿ (n may be any positive real).
pub fn log_unit_ball_volume(n: f64) -> f64 {
    0.5 * n * PI.ln() - ln_gamma(0.5 * n + 1.0)
}

pub fn unit_ball_volume(n: f64) -> f64 {
    log_unit_ball_volume(n).exp()
}

/// log((e^x − 1)/x) style helper: log(x / (1 − e^{−x})) for x > 0, stable near 0.
pub fn log_x_over_one_minus_exp_neg(x: f64) -> f64 {
    if x < 1e-8 {
        x / 2.0
    } else {
        x.ln() - (-(-x).exp_m1()).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_double_recovers_cancellation() {
        let mut acc = Accumulator::new(Precision::Extended);
        for x in [1e16, 1.0, -1e16, 1.0] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 2.0);
        let mut acc = Accumulator::new(Precision::Double);
        for x in [1e16, 1.0, -1e16, 1.0] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1.0) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2.0) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3.0) - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn lse() {
        let v = log_sum_exp(&[0.0, 0.0f64.ln_1p()], Precision::Extended);
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[], Precision::Double), f64::NEG_INFINITY);
        let big = log_sum_exp(&[1000.0, 1000.0], Precision::Double);
        assert!((big - 1000.0 - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn precision_parsing() {
        assert_eq!("double".parse::<Precision>().unwrap(), Precision::Double);
        assert_eq!("Extended".parse::<Precision>().unwrap(), Precision::Extended);
        assert!("quad".parse::<Precision>().is_err());
    }

    #[test]
    fn prefactor_helper() {
        let x = 0.7f64;
        assert!((log_x_over_one_minus_exp_neg(x) - (x / (1.0 - (-x).exp())).ln()).abs() < 1e-14);
        assert!((log_x_over_one_minus_exp_neg(1e-10) - 5e-11).abs() < 1e-15);
    }
}

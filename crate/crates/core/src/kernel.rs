//! Kernel families and their analytic constants.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Gaussian evaluations beyond this many standard units return zero.
pub const GAUSSIAN_CUTOFF: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    /// Second moment `∫ t² K(t) dt`.
    pub fn k2(self) -> f64 {
        match self {
            Kernel::Gaussian => 1.0,
            Kernel::Epanechnikov => 0.2,
        }
    }

    /// Roughness `R(K) = ∫ K(t)² dt`.
    pub fn roughness(self) -> f64 {
        match self {
            Kernel::Gaussian => 1.0 / (2.0 * PI.sqrt()),
            Kernel::Epanechnikov => 0.6,
        }
    }

    /// Half-width of the (effective) support in standard units.
    pub fn support(self) -> f64 {
        match self {
            Kernel::Gaussian => GAUSSIAN_CUTOFF,
            Kernel::Epanechnikov => 1.0,
        }
    }

    #[inline]
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Kernel::Gaussian => {
                if t.abs() > GAUSSIAN_CUTOFF {
                    0.0
                } else {
                    INV_SQRT_2PI * (-0.5 * t * t).exp()
                }
            }
            Kernel::Epanechnikov => {
                if t.abs() <= 1.0 {
                    0.75 * (1.0 - t * t)
                } else {
                    0.0
                }
            }
        }
    }

    /// `K_h(u) = K(u/h) / h` without validating `h`.
    #[inline]
    pub(crate) fn scaled_unchecked(self, h: f64, u: f64) -> f64 {
        self.eval(u / h) / h
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Epanechnikov => "epanechnikov",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Kernel::Gaussian),
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            other => Err(Error::InvalidParameter(format!("unknown kernel '{other}'"))),
        }
    }
}

pub fn kernel_eval(k: Kernel, t: f64) -> f64 {
    k.eval(t)
}

pub fn scaled_kernel(k: Kernel, h: f64, u: f64) -> Result<f64> {
    check_bandwidth(h)?;
    Ok(k.scaled_unchecked(h, u))
}

/// `∫ K_h(t) K_h(u - t) dt`, which for the Gaussian is `K_{√2 h}(u)`.
pub fn self_convolution_eval(k: Kernel, h: f64, u: f64) -> Result<f64> {
    check_bandwidth(h)?;
    match k {
        Kernel::Gaussian => Ok(k.scaled_unchecked(SQRT_2 * h, u)),
        Kernel::Epanechnikov => Err(Error::UnsupportedKernel),
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveBandwidth(h))
    }
}

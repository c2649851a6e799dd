//! Scalar information-theoretic primitives.
//!
//! All rates are in bits per channel use (log base 2). Inputs are validated,
//! never clamped: a NaN or out-of-domain argument is an error, not a zero.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// A nonnegative finite rate in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateValue(f64);

impl RateValue {
    /// Validates that `bits` is finite and nonnegative.
    pub fn new(bits: f64) -> Result<Self> {
        if !bits.is_finite() || bits < 0.0 {
            return Err(Error::Domain(format!("rate must be finite and >= 0, got {bits}")));
        }
        Ok(RateValue(bits))
    }

    /// The rate in bits per channel use.
    #[inline]
    pub fn bits(self) -> f64 {
        self.0
    }

    pub(crate) fn new_unchecked(bits: f64) -> Self {
        debug_assert!(bits.is_finite() && bits >= 0.0);
        RateValue(bits)
    }
}

impl From<RateValue> for f64 {
    fn from(r: RateValue) -> f64 {
        r.0
    }
}

/// Point-to-point Gaussian rate `log2(1 + effective_snr)`.
pub fn gaussian_rate(effective_snr: f64) -> Result<RateValue> {
    if !effective_snr.is_finite() || effective_snr < 0.0 {
        return Err(Error::Domain(format!(
            "effective SNR must be finite and >= 0, got {effective_snr}"
        )));
    }
    Ok(RateValue::new_unchecked(effective_snr.ln_1p() / std::f64::consts::LN_2))
}

/// Quantization noise variance forced by the Wyner-Ziv index-rate equality.
///
/// Returns the unique `sigma2` with `log2(1 + (1 + snr_in) / sigma2) = index_rate`,
/// i.e. `(1 + snr_in) / (2^index_rate - 1)`. The quantizing relay observes a
/// signal of power `1 + snr_in` after the decoder removes the known cross
/// signal; `index_rate` is the rate at which the bin index can be forwarded.
pub fn wyner_ziv_noise(snr_in: f64, index_rate: f64) -> Result<f64> {
    if !snr_in.is_finite() || snr_in < 0.0 {
        return Err(Error::Domain(format!("snr_in must be finite and >= 0, got {snr_in}")));
    }
    if !index_rate.is_finite() || index_rate <= 0.0 {
        return Err(Error::InfeasibleQuantization { index_rate });
    }
    Ok((1.0 + snr_in) / (index_rate * std::f64::consts::LN_2).exp_m1())
}

/// Wyner-Ziv index rate of a quantizer with distortion `noise`.
///
/// `log2(1 + (1 + snr_in) / noise)`; exact inverse of [`wyner_ziv_noise`].
pub fn wyner_ziv_rate(snr_in: f64, noise: f64) -> Result<RateValue> {
    if !snr_in.is_finite() || snr_in < 0.0 {
        return Err(Error::Domain(format!("snr_in must be finite and >= 0, got {snr_in}")));
    }
    if !noise.is_finite() || noise <= 0.0 {
        return Err(Error::Domain(format!("noise must be finite and > 0, got {noise}")));
    }
    Ok(RateValue::new_unchecked(((1.0 + snr_in) / noise).ln_1p() / std::f64::consts::LN_2))
}

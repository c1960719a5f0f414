use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by all classification routines.
///
/// `tau` is the equality tolerance: two quantities closer than `tau` are
/// treated as equal. `classification_band` is the half-width of the
/// indeterminate zone around causal boundaries: a margin whose absolute
/// value falls inside the band is classified as a boundary case (null
/// relation, boundary membership, ...). The invariant
/// `0 < tau < classification_band < 1` is enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub tau: f64,
    pub classification_band: f64,
}

impl Tolerance {
    pub const DEFAULT_TAU: f64 = 1e-9;
    pub const DEFAULT_BAND: f64 = 1e-6;

    pub fn new(tau: f64, classification_band: f64) -> crate::Result<Self> {
        if !(tau > 0.0 && tau < classification_band && classification_band < 1.0) {
            return Err(crate::Error::InvalidParameter(format!(
                "tolerances must satisfy 0 < tau < band < 1, got tau = {tau}, band = {classification_band}"
            )));
        }
        Ok(Self {
            tau,
            classification_band,
        })
    }

    /// Tolerance with a caller-chosen `tau` and the default band, used by
    /// the command-line interface; the band is widened if necessary to keep
    /// the ordering invariant.
    pub fn with_tau(tau: f64) -> crate::Result<Self> {
        let band = Self::DEFAULT_BAND.max(tau * 10.0);
        Self::new(tau, band)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            tau: Self::DEFAULT_TAU,
            classification_band: Self::DEFAULT_BAND,
        }
    }
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A complex number stored as `value * exp(log_scale)`.
///
/// Entire functions of exponential type overflow quickly off the real
/// axis; carrying the exponent separately keeps the mantissa in range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaled {
    pub value: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn new(value: Complex64, log_scale: f64) -> Self {
        Self { value, log_scale }
    }

    pub fn unscaled(value: Complex64) -> Self {
        Self { value, log_scale: 0.0 }
    }

    /// The represented number. Overflows to infinity when the exponent is large.
    pub fn to_complex(self) -> Complex64 {
        self.value * self.log_scale.exp()
    }

    /// `ln|value| + log_scale`, finite as long as the mantissa is nonzero.
    pub fn ln_abs(self) -> f64 {
        self.value.norm().ln() + self.log_scale
    }

    /// Complex logarithm of the represented number (principal branch of the mantissa).
    pub fn ln(self) -> Complex64 {
        self.value.ln() + self.log_scale
    }

    pub fn is_finite(self) -> bool {
        self.value.re.is_finite() && self.value.im.is_finite() && self.log_scale.is_finite()
    }
}

//! Numerical laboratory for chain metrics, scale functions and heat kernel
//! estimates on weighted Sierpinski gaskets.

pub mod chain;
pub mod error;
pub mod experiment;
pub mod gasket;
pub mod growth;
pub mod heat;
pub mod json;
pub mod numeric;
pub mod scale;
pub mod study;
pub mod verify;

pub use error::{Error, Result};

/// Fixed 17-significant-digit rendering used in every CSV and JSON artifact.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

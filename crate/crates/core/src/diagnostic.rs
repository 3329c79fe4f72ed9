use std::fmt;

use serde::{Deserialize, Serialize};

/// Non-fatal findings reported alongside a computed table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Diagnostic {
    /// `|U_n|` fell below threshold where `|Y_n|` did not, so `G_n` is undefined there.
    SpectralCancellation { omega: f64, u_mag: f64, y_mag: f64 },
    /// An analysis frequency does not coincide with a DFT bin.
    Leakage { requested: f64, nearest_bin: usize, nearest_freq: f64 },
    /// No frequency survived the threshold.
    EmptyDomain,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::SpectralCancellation { omega, u_mag, y_mag } => write!(
                f,
                "QLTF undefined: input spectral cancellation at omega = {omega} (|U| = {u_mag:e}, |Y| = {y_mag:e})"
            ),
            Diagnostic::Leakage { requested, nearest_bin, nearest_freq } => write!(
                f,
                "spectral leakage: {requested} rad/s is off-bin, nearest bin {nearest_bin} at {nearest_freq} rad/s (error {:e})",
                (requested - nearest_freq).abs()
            ),
            Diagnostic::EmptyDomain => write!(f, "no valid frequencies: input spectral function vanishes everywhere"),
        }
    }
}

//! Output frequency ranges of the nth-order subsystem.
//!
//! For a band-limited input with `a ≤ |ω| ≤ b` the nth-order output occupies
//!
//! ```text
//! Ω_n = ⋃_{k=0..n} [k·a − (n−k)·b,  k·b − (n−k)·a]
//! ```
//!
//! For a K-tone input the non-negative output frequencies are the distinct
//! non-negative entries of `Γ_n`, built by a Kronecker recursion
//!
//! ```text
//! Γ_1 = W,   Γ_n = Γ_{n−1} ⊗ 1_{2K} + 1_{(2K)^{n−2}} ⊗ (1_K ⊗ V),
//! V = [−ω_K, …, −ω_1, ω_1, …, ω_K]ᵀ
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{normalize_interval_union, FrequencySet, FrequencyTolerance, IntervalUnion};

/// Upper bound on tuples the brute-force oracle will enumerate.
pub const BRUTE_FORCE_GUARD: f64 = 1e7;

/// Input band `a ≤ |ω| ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub a: f64,
    pub b: f64,
}

impl Band {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && 0.0 <= a && a <= b) {
            return Err(Error::InvalidInput(format!("band requires 0 <= a <= b, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b })
    }
}

/// Which index range to use for the non-negative band range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonnegVariant {
    /// Full range `k = 0..n`, intersected with `[0, ∞)`.
    #[default]
    Corrected,
    /// `k = 0..n−1` with both endpoints clipped at zero, exactly as printed
    /// in the original published statement. Misses the top interval.
    PaperLiteral,
}

fn check_order(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidOrder { min, got: n });
    }
    Ok(())
}

/// `(a_k, b_k)` for `k = 0..=n`.
pub fn band_interval_endpoints(band: &Band, n: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    (0..=n)
        .map(|k| {
            let k = k as f64;
            (k * band.a - (nf - k) * band.b, k * band.b - (nf - k) * band.a)
        })
        .collect()
}

pub fn band_output_range(band: &Band, n: usize) -> Result<IntervalUnion> {
    check_order(n, 1)?;
    normalize_interval_union(&band_interval_endpoints(band, n))
}

pub fn band_output_range_nonneg(band: &Band, n: usize) -> Result<IntervalUnion> {
    band_output_range_nonneg_with(band, n, NonnegVariant::Corrected)
}

pub fn band_output_range_nonneg_with(band: &Band, n: usize, variant: NonnegVariant) -> Result<IntervalUnion> {
    check_order(n, 1)?;
    match variant {
        NonnegVariant::Corrected => Ok(band_output_range(band, n)?.clip_below(0.0)),
        NonnegVariant::PaperLiteral => {
            let clipped: Vec<(f64, f64)> = band_interval_endpoints(band, n)
                .into_iter()
                .take(n)
                .map(|(lo, hi)| (lo.max(0.0), hi.max(0.0)))
                .collect();
            normalize_interval_union(&clipped)
        }
    }
}

/// The flat vector of signed n-fold tone sums with a positive first addend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaVector {
    pub entries: Vec<f64>,
}

impl GammaVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Column-vector Kronecker product: `a ⊗ b = [a_1 b; a_2 b; …; a_p b]`.
pub fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

fn ones(m: usize) -> Vec<f64> {
    vec![1.0; m]
}

fn check_tones(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::InvalidInput("at least one tone frequency is required".into()));
    }
    if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidInput(format!("tone frequencies must be positive and finite, got {w:?}")));
    }
    if w.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidInput(format!("tone frequencies must be strictly increasing, got {w:?}")));
    }
    Ok(())
}

pub fn multitone_gamma(w: &[f64], n: usize) -> Result<GammaVector> {
    check_order(n, 2)?;
    check_tones(w)?;
    let k = w.len();
    let v: Vec<f64> = w.iter().rev().map(|x| -x).chain(w.iter().copied()).collect();
    let g = kron(&ones(k), &v);
    let mut gamma = w.to_vec();
    for m in 2..=n {
        let lifted = kron(&gamma, &ones(2 * k));
        let shifts = kron(&ones((2 * k).pow(m as u32 - 2)), &g);
        debug_assert_eq!(lifted.len(), shifts.len());
        gamma = lifted.iter().zip(&shifts).map(|(x, y)| x + y).collect();
    }
    Ok(GammaVector { entries: gamma })
}

fn tone_tolerance(w: &[f64], n: usize, tol: FrequencyTolerance) -> f64 {
    tol.absolute(n as f64 * w.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

/// Non-negative output frequencies of the nth-order subsystem.
pub fn multitone_output_freqs(w: &[f64], n: usize) -> Result<FrequencySet> {
    multitone_output_freqs_with(w, n, FrequencyTolerance::default())
}

pub fn multitone_output_freqs_with(w: &[f64], n: usize, tol: FrequencyTolerance) -> Result<FrequencySet> {
    check_order(n, 1)?;
    check_tones(w)?;
    let eps = tone_tolerance(w, n, tol);
    if n == 1 {
        return Ok(FrequencySet::from_values(w.to_vec(), eps));
    }
    let gamma = multitone_gamma(w, n)?;
    Ok(FrequencySet::from_values(gamma.entries, eps).nonnegative())
}

/// `−Ω_n^+ ∪ Ω_n^+`.
pub fn multitone_output_freqs_full(w: &[f64], n: usize) -> Result<FrequencySet> {
    multitone_output_freqs_full_with(w, n, FrequencyTolerance::default())
}

pub fn multitone_output_freqs_full_with(w: &[f64], n: usize, tol: FrequencyTolerance) -> Result<FrequencySet> {
    Ok(multitone_output_freqs_with(w, n, tol)?.mirrored())
}

/// Direct enumeration of all `(2K)ⁿ` signed tuples; the oracle for
/// [`multitone_output_freqs`].
pub fn brute_force_multitone_freqs(w: &[f64], n: usize) -> Result<FrequencySet> {
    brute_force_multitone_freqs_with(w, n, FrequencyTolerance::default())
}

pub fn brute_force_multitone_freqs_with(w: &[f64], n: usize, tol: FrequencyTolerance) -> Result<FrequencySet> {
    check_order(n, 1)?;
    check_tones(w)?;
    let signed: Vec<f64> = w.iter().flat_map(|&x| [x, -x]).collect();
    let count = (signed.len() as f64).powi(n as i32);
    if count > BRUTE_FORCE_GUARD {
        return Err(Error::GuardExceeded { count, limit: BRUTE_FORCE_GUARD });
    }
    let mut sums = vec![0.0];
    for _ in 0..n {
        sums = sums.iter().flat_map(|&s| signed.iter().map(move |&x| s + x)).collect();
    }
    sums.retain(|s| *s >= -tone_tolerance(w, n, tol));
    Ok(FrequencySet::from_values(sums, tone_tolerance(w, n, tol)).nonnegative())
}

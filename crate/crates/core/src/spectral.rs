//! Value types shared by every frequency-domain computation: tones, multitone
//! signals, line spectra, tolerance-aware frequency sets and interval unions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All complex quantities (input/output spectra, GFRFs, QLTFs).
pub type ComplexValue = Complex64;

/// Relative factor applied to the frequency scale in play.
pub const DEFAULT_FREQ_TOL: f64 = 1e-9;

/// Absolute frequency-matching tolerance, derived as `rel * max(1, scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTolerance {
    pub rel: f64,
}

impl Default for FrequencyTolerance {
    fn default() -> Self {
        Self { rel: DEFAULT_FREQ_TOL }
    }
}

impl FrequencyTolerance {
    pub fn new(rel: f64) -> Result<Self> {
        if !(rel.is_finite() && rel > 0.0) {
            return Err(Error::InvalidInput(format!("frequency tolerance must be positive and finite, got {rel}")));
        }
        Ok(Self { rel })
    }

    pub fn absolute(&self, scale: f64) -> f64 {
        self.rel * scale.abs().max(1.0)
    }

    /// Absolute tolerance for a collection of frequencies.
    pub fn for_freqs<'a>(&self, freqs: impl IntoIterator<Item = &'a f64>) -> f64 {
        let scale = freqs.into_iter().fold(0.0_f64, |m, w| m.max(w.abs()));
        self.absolute(scale)
    }
}

/// One real cosine component `magnitude * cos(frequency * t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub magnitude: f64,
    /// Radians.
    pub phase: f64,
    /// rad/s, strictly positive.
    pub frequency: f64,
}

impl Tone {
    pub fn new(magnitude: f64, phase: f64, frequency: f64) -> Result<Self> {
        if !(magnitude.is_finite() && magnitude >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "tone magnitude must be finite and non-negative, got {magnitude}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidInput(format!("tone phase must be finite, got {phase}")));
        }
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::InvalidInput(format!("tone frequency must be finite and positive, got {frequency}")));
        }
        Ok(Self { magnitude, phase, frequency })
    }

    /// The complex amplitude `A = |A| e^{j∠A}`.
    pub fn amplitude(&self) -> ComplexValue {
        ComplexValue::from_polar(self.magnitude, self.phase)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.magnitude * (self.frequency * t + self.phase).cos()
    }
}

/// A sum of `K >= 1` real tones with strictly increasing frequencies.
///
/// The conjugate extension `A_{-k} = conj(A_k)` at `-ω_k` is implied by the
/// accessors and never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultitoneSignal {
    tones: Vec<Tone>,
}

impl MultitoneSignal {
    pub fn new(tones: Vec<Tone>) -> Result<Self> {
        Self::with_tolerance(tones, FrequencyTolerance::default())
    }

    pub fn with_tolerance(tones: Vec<Tone>, tol: FrequencyTolerance) -> Result<Self> {
        if tones.is_empty() {
            return Err(Error::InvalidInput("a multitone signal needs at least one tone".into()));
        }
        let eps = tol.for_freqs(tones.iter().map(|t| &t.frequency));
        for pair in tones.windows(2) {
            if pair[1].frequency - pair[0].frequency <= eps {
                return Err(Error::InvalidInput(format!(
                    "tone frequencies must be strictly increasing and distinct, got {} then {}",
                    pair[0].frequency, pair[1].frequency
                )));
            }
        }
        for t in &tones {
            Tone::new(t.magnitude, t.phase, t.frequency)?;
        }
        Ok(Self { tones })
    }

    /// Builds a signal from tones given in any order.
    pub fn from_unsorted(mut tones: Vec<Tone>) -> Result<Self> {
        tones.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
        Self::new(tones)
    }

    pub fn tones(&self) -> &[Tone] {
        &self.tones
    }

    pub fn len(&self) -> usize {
        self.tones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tones.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.tones.iter().map(|t| t.frequency).collect()
    }

    pub fn max_frequency(&self) -> f64 {
        self.tones.last().map_or(0.0, |t| t.frequency)
    }

    /// Every tone with its magnitude multiplied by `c`. A negative `c` is
    /// folded into the phase so magnitudes stay non-negative.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let tones = self
            .tones
            .iter()
            .map(|t| {
                let phase = if c < 0.0 { t.phase + PI } else { t.phase };
                Tone::new(t.magnitude * c.abs(), phase, t.frequency)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tones })
    }

    /// Signed tone list `(ω_k, A_k)` for `k = -K..-1, 1..K`, in that order.
    pub fn signed_components(&self) -> Vec<(f64, ComplexValue)> {
        let neg = self.tones.iter().rev().map(|t| (-t.frequency, t.amplitude().conj()));
        let pos = self.tones.iter().map(|t| (t.frequency, t.amplitude()));
        neg.chain(pos).collect()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.tones.iter().map(|tone| tone.value_at(t)).sum()
    }
}

/// Frequencies carrying finite line coefficients, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpectrum {
    lines: Vec<(f64, ComplexValue)>,
    tolerance: f64,
}

impl LineSpectrum {
    pub fn lines(&self) -> &[(f64, ComplexValue)] {
        &self.lines
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn coefficient(&self, omega: f64) -> Option<ComplexValue> {
        find_key(&self.lines, omega, self.tolerance).map(|i| self.lines[i].1)
    }
}

/// The Dirac-line spectrum of a multitone signal: `π A_k` at `ω_k` and its
/// conjugate at `-ω_k`.
pub fn line_spectrum(signal: &MultitoneSignal) -> LineSpectrum {
    let tolerance = FrequencyTolerance::default().absolute(signal.max_frequency());
    let lines = signal.signed_components().into_iter().map(|(w, a)| (w, a * PI)).collect();
    LineSpectrum { lines, tolerance }
}

/// Index of the key within `tol` of `omega` in a slice sorted by key.
pub(crate) fn find_key<T>(sorted: &[(f64, T)], omega: f64, tol: f64) -> Option<usize> {
    let idx = sorted.partition_point(|(k, _)| *k < omega - tol);
    (idx < sorted.len() && (sorted[idx].0 - omega).abs() <= tol).then_some(idx)
}

/// Accumulates complex contributions keyed by frequency, merging keys that
/// fall within `tol`. The first key seen becomes canonical.
#[derive(Debug, Clone)]
pub(crate) struct FrequencyAccumulator {
    entries: Vec<(f64, ComplexValue)>,
    tol: f64,
}

impl FrequencyAccumulator {
    pub(crate) fn new(tol: f64) -> Self {
        Self { entries: Vec::new(), tol }
    }

    pub(crate) fn add(&mut self, omega: f64, value: ComplexValue) {
        match find_key(&self.entries, omega, self.tol) {
            Some(i) => self.entries[i].1 += value,
            None => {
                let at = self.entries.partition_point(|(k, _)| *k < omega);
                self.entries.insert(at, (omega, value));
            }
        }
    }

    pub(crate) fn into_entries(self) -> Vec<(f64, ComplexValue)> {
        self.entries
    }
}

/// A sorted set of frequencies with no two entries within `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySet {
    values: Vec<f64>,
    tolerance: f64,
}

impl FrequencySet {
    /// Sorts and deduplicates; within a cluster of near-equal values the
    /// smallest is kept.
    pub fn from_values(mut values: Vec<f64>, tolerance: f64) -> Self {
        values.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::with_capacity(values.len());
        for v in values {
            match out.last() {
                Some(&last) if v - last <= tolerance => {}
                _ => out.push(v),
            }
        }
        Self { values: out, tolerance }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, omega: f64) -> bool {
        let idx = self.values.partition_point(|v| *v < omega - self.tolerance);
        idx < self.values.len() && (self.values[idx] - omega).abs() <= self.tolerance
    }

    /// Set equality under the larger of the two tolerances.
    pub fn approx_eq(&self, other: &FrequencySet) -> bool {
        let tol = self.tolerance.max(other.tolerance);
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn nonnegative(&self) -> FrequencySet {
        let values = self.values.iter().copied().filter(|v| *v >= -self.tolerance).map(|v| v.max(0.0)).collect();
        FrequencySet::from_values(values, self.tolerance)
    }

    /// `-S ∪ S`.
    pub fn mirrored(&self) -> FrequencySet {
        let values = self.values.iter().flat_map(|&v| [v, -v]).collect();
        FrequencySet::from_values(values, self.tolerance)
    }
}

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Sorted, pairwise disjoint, non-adjacent closed intervals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.hi < x);
        idx < self.intervals.len() && self.intervals[idx].contains(x)
    }

    /// The union reflected about zero.
    pub fn negated(&self) -> IntervalUnion {
        let mut intervals: Vec<Interval> =
            self.intervals.iter().map(|iv| Interval { lo: -iv.hi, hi: -iv.lo }).collect();
        intervals.reverse();
        IntervalUnion { intervals }
    }

    /// Intersection with `[lo, ∞)`.
    pub fn clip_below(&self, lo: f64) -> IntervalUnion {
        let intervals = self
            .intervals
            .iter()
            .filter(|iv| iv.hi >= lo)
            .map(|iv| Interval { lo: iv.lo.max(lo), hi: iv.hi })
            .collect();
        IntervalUnion { intervals }
    }

    pub fn as_pairs(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|iv| (iv.lo, iv.hi)).collect()
    }
}

/// Sorts and merges overlapping or touching intervals into canonical form.
pub fn normalize_interval_union(raw: &[(f64, f64)]) -> Result<IntervalUnion> {
    let mut intervals = raw.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect::<Result<Vec<_>>>()?;
    intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match merged.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => merged.push(iv),
        }
    }
    Ok(IntervalUnion { intervals: merged })
}

/// Phase of `z` in degrees on `(-180, 180]`.
pub fn phase_deg(z: ComplexValue) -> f64 {
    if z.re < 0.0 && z.im.abs() <= 1e-12 * z.norm() {
        return 180.0;
    }
    wrap_deg(z.arg().to_degrees())
}

/// Wraps an angle in degrees onto `(-180, 180]`.
pub fn wrap_deg(deg: f64) -> f64 {
    let mut w = deg % 360.0;
    if w > 180.0 {
        w -= 360.0;
    } else if w <= -180.0 {
        w += 360.0;
    }
    if (w + 180.0).abs() < 1e-9 {
        180.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: ComplexValue, b: ComplexValue, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn two_tone_line_spectrum() {
        let sig =
            MultitoneSignal::new(vec![Tone::new(0.25, 0.0, 2.5).unwrap(), Tone::new(0.75, 0.0, 7.5).unwrap()]).unwrap();
        let ls = line_spectrum(&sig);
        assert_eq!(ls.lines().len(), 4);
        for (w, c) in [(2.5, 0.25 * PI), (-2.5, 0.25 * PI), (7.5, 0.75 * PI), (-7.5, 0.75 * PI)] {
            assert!(close(ls.coefficient(w).unwrap(), ComplexValue::new(c, 0.0), 1e-15));
        }
        assert!(ls.coefficient(5.0).is_none());
    }

    #[test]
    fn single_cosine() {
        let sig = MultitoneSignal::new(vec![Tone::new(1.0, 0.0, 1.0).unwrap()]).unwrap();
        let ls = line_spectrum(&sig);
        assert_eq!(ls.coefficient(1.0).unwrap(), ComplexValue::new(PI, 0.0));
        assert_eq!(ls.coefficient(-1.0).unwrap(), ComplexValue::new(PI, 0.0));
    }

    #[test]
    fn phased_tone_matches_sampled_fourier_integral() {
        let sig = MultitoneSignal::new(vec![Tone::new(2.0, PI / 2.0, 3.0).unwrap()]).unwrap();
        let ls = line_spectrum(&sig);
        let expected = ComplexValue::from_polar(2.0 * PI, PI / 2.0);
        assert!(close(ls.coefficient(3.0).unwrap(), expected, 1e-15));
        assert!(close(ls.coefficient(-3.0).unwrap(), expected.conj(), 1e-15));

        // Over a record of whole periods, (1/T)∫u(t)e^{-jωt}dt = A/2, and the
        // line coefficient is that times 2π.
        let periods = 200.0;
        let span = periods * 2.0 * PI / 3.0;
        let n = 200_000;
        let dt = span / n as f64;
        let mut acc = ComplexValue::new(0.0, 0.0);
        for i in 0..n {
            let t = i as f64 * dt;
            acc += sig.value_at(t) * ComplexValue::from_polar(1.0, -3.0 * t) * dt;
        }
        let numeric = acc / span * 2.0 * PI;
        assert!(close(numeric, expected, 1e-6), "{numeric} vs {expected}");
    }

    #[test]
    fn rejects_bad_tones() {
        assert!(Tone::new(-1.0, 0.0, 1.0).is_err());
        assert!(Tone::new(1.0, 0.0, 0.0).is_err());
        assert!(MultitoneSignal::new(vec![]).is_err());
        let t = Tone::new(1.0, 0.0, 2.0).unwrap();
        assert!(MultitoneSignal::new(vec![t, t]).is_err());
        let u = Tone::new(1.0, 0.0, 1.0).unwrap();
        assert!(MultitoneSignal::new(vec![t, u]).is_err());
        assert!(MultitoneSignal::from_unsorted(vec![t, u]).is_ok());
    }

    #[test]
    fn interval_union_fixtures() {
        let u = normalize_interval_union(&[(-80.0, 10.0), (-10.0, 80.0)]).unwrap();
        assert_eq!(u.as_pairs(), vec![(-80.0, 80.0)]);
        assert!(normalize_interval_union(&[]).unwrap().is_empty());
        let u = normalize_interval_union(&[(1.0, 2.0), (0.0, 1.0)]).unwrap();
        assert_eq!(u.as_pairs(), vec![(0.0, 2.0)]);
        assert_eq!(normalize_interval_union(&[(2.0, 1.0)]), Err(Error::InvalidInterval { lo: 2.0, hi: 1.0 }));
    }

    #[test]
    fn frequency_set_dedups_float_noise() {
        let s = FrequencySet::from_values(vec![2.5 + 7.5 - 7.5, 2.5, 0.1 + 0.2, 0.3], 1e-9);
        assert_eq!(s.len(), 2);
        assert!(s.contains(0.3));
        assert!(s.contains(2.5));
        assert!(!s.contains(1.0));
    }

    #[test]
    fn phase_boundary_reports_plus_180() {
        assert_eq!(phase_deg(ComplexValue::new(-1.0, -0.0)), 180.0);
        assert_eq!(phase_deg(ComplexValue::new(-1.0, -1e-15)), 180.0);
        assert_eq!(wrap_deg(-180.0), 180.0);
        assert_eq!(wrap_deg(540.0), 180.0);
        assert!((wrap_deg(-190.0) - 170.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn line_spectrum_is_conjugate_symmetric(
            tones in prop::collection::vec((0.0f64..5.0, -PI..PI), 1..6)
        ) {
            let tones = tones.iter().enumerate()
                .map(|(i, &(m, p))| Tone::new(m, p, 1.0 + i as f64 * 1.3).unwrap())
                .collect();
            let sig = MultitoneSignal::new(tones).unwrap();
            let ls = line_spectrum(&sig);
            for &(w, c) in ls.lines() {
                prop_assert_eq!(ls.coefficient(-w).unwrap(), c.conj());
            }
        }

        #[test]
        fn normalize_is_idempotent_and_preserves_points(
            raw in prop::collection::vec((-50.0f64..50.0, 0.0f64..20.0), 0..12),
            probes in prop::collection::vec(-80.0f64..80.0, 1000)
        ) {
            let raw: Vec<(f64, f64)> = raw.iter().map(|&(lo, w)| (lo, lo + w)).collect();
            let once = normalize_interval_union(&raw).unwrap();
            let twice = normalize_interval_union(&once.as_pairs()).unwrap();
            prop_assert_eq!(&once, &twice);
            for w in once.intervals().windows(2) {
                prop_assert!(w[0].hi < w[1].lo);
            }
            for x in probes {
                let in_raw = raw.iter().any(|&(lo, hi)| lo <= x && x <= hi);
                prop_assert_eq!(in_raw, once.contains(x));
            }
        }
    }
}

//! Quasi-linear transfer functions under multitone excitation.
//!
//! For a K-tone input the nth-order input spectral function and the nth-order
//! input/output frequency function are finite sums over ordered signed tone
//! tuples `(k_1, …, k_n) ∈ {±1, …, ±K}ⁿ`:
//!
//! ```text
//! U_n(jω) = π/2^{n-1} Σ_{ω_{k_1}+…+ω_{k_n} = ω} A_{k_1}⋯A_{k_n}
//! Y_n(jω) = π/2^{n-1} Σ_{ω_{k_1}+…+ω_{k_n} = ω} A_{k_1}⋯A_{k_n} H_n(jω_{k_1}, …, jω_{k_n})
//! ```
//!
//! and `G_n(jω) = Y_n(jω) / U_n(jω)` wherever `U_n` does not vanish.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diagnostic::Diagnostic;
use crate::error::{Error, Result};
use crate::gfrf::KernelTransferFunction;
use crate::spectral::{
    find_key, phase_deg, wrap_deg, ComplexValue, FrequencyAccumulator, FrequencyTolerance, MultitoneSignal,
};

/// Upper bound on enumerated tuples per call.
pub const TUPLE_GUARD: f64 = 1e7;

/// Default relative threshold below which `|U_n|` counts as vanished.
pub const DEFAULT_CANCELLATION_TAU: f64 = 1e-10;

/// `B(ω)`: the complex amplitude at a signed tone frequency, zero elsewhere.
#[derive(Debug, Clone)]
pub struct BMap {
    components: Vec<(f64, ComplexValue)>,
    tol: f64,
}

impl BMap {
    pub fn new(signal: &MultitoneSignal, tol: FrequencyTolerance) -> Self {
        let mut components = signal.signed_components();
        components.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tol = tol.absolute(signal.max_frequency());
        Self { components, tol }
    }

    pub fn get(&self, omega: f64) -> ComplexValue {
        find_key(&self.components, omega, self.tol).map_or(ComplexValue::new(0.0, 0.0), |i| self.components[i].1)
    }
}

/// Per-frequency coefficients of `U_n` or `Y_n`, sorted by frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoeffs {
    pub order: usize,
    pub entries: Vec<(f64, ComplexValue)>,
    pub tolerance: f64,
}

impl SpectralCoeffs {
    pub fn get(&self, omega: f64) -> Option<ComplexValue> {
        find_key(&self.entries, omega, self.tolerance).map(|i| self.entries[i].1)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.0).collect()
    }

    fn max_norm(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.1.norm()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QltfOptions {
    /// `ω ∈ Ω_n` only if `|U_n(jω)| > tau · max|U_n|`.
    pub tau: f64,
    pub freq_tol: FrequencyTolerance,
}

impl Default for QltfOptions {
    fn default() -> Self {
        Self { tau: DEFAULT_CANCELLATION_TAU, freq_tol: FrequencyTolerance::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QltfRow {
    pub omega: f64,
    pub u: ComplexValue,
    pub y: ComplexValue,
    pub g: ComplexValue,
}

/// `G_n` over its effective domain, plus anything excluded from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QltfTable {
    pub order: usize,
    pub rows: Vec<QltfRow>,
    pub diagnostics: Vec<Diagnostic>,
    pub tolerance: f64,
}

impl QltfTable {
    pub fn row(&self, omega: f64) -> Option<&QltfRow> {
        let idx = self.rows.partition_point(|r| r.omega < omega - self.tolerance);
        self.rows.get(idx).filter(|r| (r.omega - omega).abs() <= self.tolerance)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.omega).collect()
    }
}

/// Total output spectrum `Σ_n Y_n(jω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpectrum {
    pub rows: Vec<(f64, ComplexValue)>,
    pub tolerance: f64,
}

impl OutputSpectrum {
    pub fn get(&self, omega: f64) -> Option<ComplexValue> {
        find_key(&self.rows, omega, self.tolerance).map(|i| self.rows[i].1)
    }
}

/// Enumerates every ordered signed tuple in lexicographic order and
/// accumulates `π/2^{n-1} · Π A · weight(tuple)` by output frequency.
fn accumulate<F>(signal: &MultitoneSignal, n: usize, tol: FrequencyTolerance, mut weight: F) -> Result<SpectralCoeffs>
where
    F: FnMut(&[f64]) -> Result<ComplexValue>,
{
    if n < 1 {
        return Err(Error::InvalidOrder { min: 1, got: n });
    }
    let comps = signal.signed_components();
    let base = comps.len();
    let count = (base as f64).powi(n as i32);
    if count > TUPLE_GUARD {
        return Err(Error::GuardExceeded { count, limit: TUPLE_GUARD });
    }
    let abs_tol = tol.absolute(n as f64 * signal.max_frequency());
    let prefactor = PI / 2f64.powi(n as i32 - 1);
    let mut acc = FrequencyAccumulator::new(abs_tol);
    let mut idx = vec![0usize; n];
    let mut freqs = vec![0.0; n];
    loop {
        let mut amp = ComplexValue::new(prefactor, 0.0);
        for (slot, &k) in freqs.iter_mut().zip(&idx) {
            *slot = comps[k].0;
            amp *= comps[k].1;
        }
        let omega: f64 = freqs.iter().sum();
        acc.add(omega, amp * weight(&freqs)?);

        // Odometer increment, last index fastest.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(SpectralCoeffs { order: n, entries: acc.into_entries(), tolerance: abs_tol });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < base {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// `U_n(jω)` at every frequency reachable by an n-tuple of signed tones.
pub fn input_spectral_coeffs(signal: &MultitoneSignal, n: usize) -> Result<SpectralCoeffs> {
    input_spectral_coeffs_with(signal, n, FrequencyTolerance::default())
}

pub fn input_spectral_coeffs_with(
    signal: &MultitoneSignal,
    n: usize,
    tol: FrequencyTolerance,
) -> Result<SpectralCoeffs> {
    accumulate(signal, n, tol, |_| Ok(ComplexValue::new(1.0, 0.0)))
}

/// `Y_n(jω)`: the same enumeration weighted by `H_n` at each tuple.
pub fn output_spectral_coeffs(signal: &MultitoneSignal, h: &KernelTransferFunction) -> Result<SpectralCoeffs> {
    output_spectral_coeffs_with(signal, h, FrequencyTolerance::default())
}

pub fn output_spectral_coeffs_with(
    signal: &MultitoneSignal,
    h: &KernelTransferFunction,
    tol: FrequencyTolerance,
) -> Result<SpectralCoeffs> {
    accumulate(signal, h.order(), tol, |freqs| h.eval(freqs))
}

pub fn qltf(signal: &MultitoneSignal, h: &KernelTransferFunction) -> Result<QltfTable> {
    qltf_with(signal, h, &QltfOptions::default())
}

pub fn qltf_with(signal: &MultitoneSignal, h: &KernelTransferFunction, opts: &QltfOptions) -> Result<QltfTable> {
    let u = input_spectral_coeffs_with(signal, h.order(), opts.freq_tol)?;
    let y = output_spectral_coeffs_with(signal, h, opts.freq_tol)?;
    // Same enumeration order, so both share keys entry for entry.
    debug_assert_eq!(u.entries.len(), y.entries.len());

    let u_floor = opts.tau * u.max_norm();
    let y_floor = opts.tau * y.max_norm();
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for (&(omega, un), &(_, yn)) in u.entries.iter().zip(&y.entries) {
        if un.norm() > u_floor && un.norm() > 0.0 {
            rows.push(QltfRow { omega, u: un, y: yn, g: yn / un });
        } else if yn.norm() > y_floor && yn.norm() > 0.0 {
            diagnostics.push(Diagnostic::SpectralCancellation { omega, u_mag: un.norm(), y_mag: yn.norm() });
        }
    }
    if rows.is_empty() {
        diagnostics.push(Diagnostic::EmptyDomain);
    }
    Ok(QltfTable { order: h.order(), rows, diagnostics, tolerance: u.tolerance })
}

/// `Y(jω) = Σ_n Y_n(jω)` for GFRFs of orders `1..=N`, each supplied once.
pub fn output_spectrum(signal: &MultitoneSignal, hs: &[KernelTransferFunction]) -> Result<OutputSpectrum> {
    let mut orders: Vec<usize> = hs.iter().map(|h| h.order()).collect();
    orders.sort_unstable();
    if orders.is_empty() || orders.iter().enumerate().any(|(i, &o)| o != i + 1) {
        return Err(Error::InvalidInput(format!(
            "output spectrum needs each order 1..=N exactly once, got orders {orders:?}"
        )));
    }
    let n_max = orders.len();
    let tol = FrequencyTolerance::default().absolute(n_max as f64 * signal.max_frequency());
    let mut acc = FrequencyAccumulator::new(tol);
    let mut by_order: Vec<&KernelTransferFunction> = hs.iter().collect();
    by_order.sort_by_key(|h| h.order());
    for h in by_order {
        for (omega, y) in output_spectral_coeffs(signal, h)?.entries {
            acc.add(omega, y);
        }
    }
    Ok(OutputSpectrum { rows: acc.into_entries(), tolerance: tol })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerprintRow {
    pub omega: f64,
    /// `|G_probe| / |G_baseline|`.
    pub mag_ratio: f64,
    /// `∠G_probe − ∠G_baseline`, degrees on `(-180, 180]`.
    pub phase_delta_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintReport {
    pub rows: Vec<FingerprintRow>,
    /// `max |mag_ratio − 1|`.
    pub max_mag_deviation: f64,
    pub max_phase_deviation_deg: f64,
}

impl FingerprintReport {
    /// True when some magnitude ratio departs from 1 by more than `rel`.
    pub fn exceeds(&self, rel: f64) -> bool {
        self.max_mag_deviation > rel
    }
}

/// Per-frequency magnitude ratio and phase shift of `probe` against `baseline`.
pub fn compare_fingerprints(baseline: &QltfTable, probe: &QltfTable) -> Result<FingerprintReport> {
    if baseline.order != probe.order {
        return Err(Error::OrderMismatch(baseline.order, probe.order));
    }
    let rows: Vec<FingerprintRow> = baseline
        .rows
        .iter()
        .filter_map(|b| {
            probe.row(b.omega).map(|p| FingerprintRow {
                omega: b.omega,
                mag_ratio: p.g.norm() / b.g.norm(),
                phase_delta_deg: wrap_deg(phase_deg(p.g) - phase_deg(b.g)),
            })
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::DisjointFrequencies);
    }
    let max_mag_deviation = rows.iter().fold(0.0, |m, r| f64::max(m, (r.mag_ratio - 1.0).abs()));
    let max_phase_deviation_deg = rows.iter().fold(0.0, |m, r| f64::max(m, r.phase_delta_deg.abs()));
    Ok(FingerprintReport { rows, max_mag_deviation, max_phase_deviation_deg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfrf::DuffingParams;
    use crate::spectral::{line_spectrum, Tone};

    fn two_tone() -> MultitoneSignal {
        MultitoneSignal::new(vec![Tone::new(0.25, 0.0, 2.5).unwrap(), Tone::new(0.75, 0.0, 7.5).unwrap()]).unwrap()
    }

    fn reference_params() -> DuffingParams {
        DuffingParams::new(10.0, 0.1, 1e3, 5e5).unwrap()
    }

    /// Independent route: the nested form with the last factor looked up as
    /// `B(ω − ω_{k_1} − … − ω_{k_{n-1}})`.
    fn u_via_bmap(signal: &MultitoneSignal, n: usize, omega: f64) -> ComplexValue {
        let b = BMap::new(signal, FrequencyTolerance::default());
        let comps = signal.signed_components();
        let mut total = ComplexValue::new(0.0, 0.0);
        let tuples = comps.len().pow(n as u32 - 1);
        for t in 0..tuples {
            let mut rem = t;
            let mut prod = ComplexValue::new(1.0, 0.0);
            let mut partial = 0.0;
            for _ in 0..n - 1 {
                let (w, a) = comps[rem % comps.len()];
                rem /= comps.len();
                prod *= a;
                partial += w;
            }
            total += prod * b.get(omega - partial);
        }
        total * PI / 2f64.powi(n as i32 - 1)
    }

    #[test]
    fn bmap_lookup() {
        let b = BMap::new(&two_tone(), FrequencyTolerance::default());
        assert_eq!(b.get(2.5), ComplexValue::new(0.25, 0.0));
        assert_eq!(b.get(-7.5), ComplexValue::new(0.75, 0.0));
        assert_eq!(b.get(5.0), ComplexValue::new(0.0, 0.0));
    }

    #[test]
    fn first_order_equals_line_spectrum() {
        let sig =
            MultitoneSignal::new(vec![Tone::new(1.5, 0.4, 1.0).unwrap(), Tone::new(0.5, -2.0, 3.0).unwrap()]).unwrap();
        let u1 = input_spectral_coeffs(&sig, 1).unwrap();
        let ls = line_spectrum(&sig);
        assert_eq!(u1.entries.len(), 4);
        for &(w, c) in ls.lines() {
            assert!((u1.get(w).unwrap() - c).norm() < 1e-15);
        }
    }

    #[test]
    fn second_order_two_tone_values() {
        let u2 = input_spectral_coeffs(&two_tone(), 2).unwrap();
        assert_eq!(u2.frequencies(), vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0]);
        assert!((u2.get(15.0).unwrap() - ComplexValue::new(0.5 * PI * 0.5625, 0.0)).norm() < 1e-15);
        assert!((u2.get(15.0).unwrap().re - 0.8836).abs() < 1e-4);
        assert!((u2.get(0.0).unwrap() - ComplexValue::new(0.625 * PI, 0.0)).norm() < 1e-14);
        for &(w, c) in &u2.entries {
            assert!((c - u_via_bmap(&two_tone(), 2, w)).norm() < 1e-14);
        }
        assert!(matches!(input_spectral_coeffs(&two_tone(), 0), Err(Error::InvalidOrder { .. })));
    }

    #[test]
    fn output_coeffs_two_tone() {
        let h2 = reference_params().h2();
        let y2 = output_spectral_coeffs(&two_tone(), &h2).unwrap();
        let b75 = 0.75;
        let expected = 0.5 * PI * b75 * b75 * h2.eval(&[7.5, 7.5]).unwrap();
        assert!((y2.get(15.0).unwrap() - expected).norm() < 1e-15);
        let y0 = y2.get(0.0).unwrap();
        let u0 = input_spectral_coeffs(&two_tone(), 2).unwrap().get(0.0).unwrap();
        assert!(y0.re < 0.0);
        assert!(y0.im.abs() < 1e-12 * y0.norm());
        assert!((y0.norm() / u0.norm() - 0.4321).abs() < 5e-5);

        let one = KernelTransferFunction::constant(2, ComplexValue::new(1.0, 0.0)).unwrap();
        let y = output_spectral_coeffs(&two_tone(), &one).unwrap();
        assert_eq!(y, input_spectral_coeffs(&two_tone(), 2).unwrap());
    }

    #[test]
    fn two_tone_order2_rows() {
        let table = qltf(&two_tone(), &reference_params().h2()).unwrap();
        let expected = [
            (-15.0, 0.3637, 24.35),
            (-10.0, 1.1515, -68.02),
            (-5.0, 0.2820, -157.27),
            (0.0, 0.4321, 180.0),
            (5.0, 0.2820, 157.27),
            (10.0, 1.1515, 68.02),
            (15.0, 0.3637, -24.35),
        ];
        assert_eq!(table.rows.len(), 7);
        assert!(table.diagnostics.is_empty());
        for (row, (w, mag, ph)) in table.rows.iter().zip(expected) {
            assert_eq!(row.omega, w);
            assert!((row.g.norm() - mag).abs() < 5e-4);
            assert!((phase_deg(row.g) - ph).abs() < 0.05, "{} {}", w, phase_deg(row.g));
            assert_eq!(row.g, row.y / row.u);
        }
    }

    #[test]
    fn third_order_regression() {
        // Frozen from a separate brute-force enumeration over all 4³ tuples.
        let expected = [
            (-22.5, 3.861790230462615, 3.2666842932647344),
            (-17.5, 10.429918447076762, -12.568588018578206),
            (-12.5, -4.266534708278748, -9.719430707678),
            (-7.5, 2.0926946703414546, 8.509999032517861),
            (-2.5, 3.816688116049654, 14.624769939769704),
            (2.5, 3.816688116049654, -14.62476993976971),
            (7.5, 2.0926946703414546, -8.509999032517861),
            (12.5, -4.266534708278748, 9.719430707678),
            (17.5, 10.429918447076762, 12.568588018578206),
            (22.5, 3.861790230462615, -3.2666842932647344),
        ];
        let table = qltf(&two_tone(), &reference_params().h3()).unwrap();
        assert_eq!(table.rows.len(), expected.len());
        for (row, (w, re, im)) in table.rows.iter().zip(expected) {
            assert!((row.omega - w).abs() < 1e-12);
            let e = ComplexValue::new(re, im);
            assert!((row.g - e).norm() < 1e-11 * e.norm(), "{w}: {} vs {e}", row.g);
        }
    }

    #[test]
    fn constant_kernel_gives_constant_qltf() {
        let c = ComplexValue::new(0.3, -1.2);
        for n in 1..=4 {
            let h = KernelTransferFunction::constant(n, c).unwrap();
            let table = qltf(&two_tone(), &h).unwrap();
            for row in &table.rows {
                assert!((row.g - c).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cancellation_is_reported() {
        // Tones 1, 2, 3 rad/s with A = (1, 1, -1): the pairs reaching 1 rad/s
        // contribute 2·A₂·conj(A₁) + 2·A₃·conj(A₂) = 0.
        let a1 = ComplexValue::new(1.0, 0.0);
        let a2 = ComplexValue::new(1.0, 0.0);
        let sig = MultitoneSignal::new(vec![
            Tone::new(a1.norm(), a1.arg(), 1.0).unwrap(),
            Tone::new(a2.norm(), a2.arg(), 2.0).unwrap(),
            Tone::new(1.0, PI, 3.0).unwrap(),
        ])
        .unwrap();
        let u2 = input_spectral_coeffs(&sig, 2).unwrap();
        assert!(u2.get(1.0).unwrap().norm() < 1e-15);
        let h = KernelTransferFunction::new(2, |w| Ok(ComplexValue::new(1.0 + w[0] * w[0], 0.0))).unwrap();
        let table = qltf(&sig, &h).unwrap();
        assert!(table.row(1.0).is_none());
        assert!(table.row(-1.0).is_none());
        assert!(table
            .diagnostics
            .iter()
            .any(|d| matches!(d, Diagnostic::SpectralCancellation { omega, .. } if (omega - 1.0).abs() < 1e-9)));
    }

    #[test]
    fn output_spectrum_support_and_sums() {
        let dp = reference_params();
        let sig = two_tone();
        let lin = output_spectrum(&sig, &[dp.h1()]).unwrap();
        assert_eq!(lin.rows.len(), 4);
        let expect = 0.75 * PI * dp.h1().eval(&[7.5]).unwrap();
        assert!((lin.get(7.5).unwrap() - expect).norm() < 1e-15);

        let two = output_spectrum(&sig, &[dp.h2(), dp.h1()]).unwrap();
        let freqs: Vec<f64> = two.rows.iter().map(|r| r.0).collect();
        assert_eq!(freqs, vec![-15.0, -10.0, -7.5, -5.0, -2.5, 0.0, 2.5, 5.0, 7.5, 10.0, 15.0]);

        let three = output_spectrum(&sig, &[dp.h1(), dp.h2(), dp.h3()]).unwrap();
        assert_eq!(three.rows.len(), 17);
        let y1 = output_spectral_coeffs(&sig, &dp.h1()).unwrap().get(2.5).unwrap();
        let y3 = output_spectral_coeffs(&sig, &dp.h3()).unwrap().get(2.5).unwrap();
        assert!((three.get(2.5).unwrap() - (y1 + y3)).norm() < 1e-12 * (y1 + y3).norm());
        for &(w, v) in &three.rows {
            assert!((three.get(-w).unwrap() - v.conj()).norm() < 1e-12 * v.norm().max(1e-300));
        }

        assert!(output_spectrum(&sig, &[dp.h1(), dp.h3()]).is_err());
        assert!(output_spectrum(&sig, &[dp.h1(), dp.h1()]).is_err());
        assert!(output_spectrum(&sig, &[]).is_err());
    }

    #[test]
    fn fingerprints() {
        let sig = two_tone();
        let base = qltf(&sig, &reference_params().h2()).unwrap();
        let same = compare_fingerprints(&base, &base).unwrap();
        assert!(same.rows.iter().all(|r| r.mag_ratio == 1.0 && r.phase_delta_deg == 0.0));
        assert!(!same.exceeds(1e-9));

        let weak = DuffingParams { eps2: 1e2, ..reference_params() };
        let probe = qltf(&sig, &weak.h2()).unwrap();
        let rep = compare_fingerprints(&base, &probe).unwrap();
        for r in &rep.rows {
            assert!((r.mag_ratio - 0.1).abs() < 1e-12);
            assert!(r.phase_delta_deg.abs() < 1e-9);
        }
        assert!(rep.exceeds(0.05));

        let base3 = qltf(&sig, &reference_params().h3()).unwrap();
        let half = DuffingParams { eps3: 2.5e5, ..reference_params() };
        let probe3 = qltf(&sig, &half.h3()).unwrap();
        let rep3 = compare_fingerprints(&base3, &probe3).unwrap();
        let ratios: Vec<f64> = rep3.rows.iter().map(|r| r.mag_ratio).collect();
        let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) - ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1e-3);
        assert!(rep3.max_phase_deviation_deg > 1.0);

        assert_eq!(compare_fingerprints(&base, &base3), Err(Error::OrderMismatch(2, 3)));
        let other = MultitoneSignal::new(vec![Tone::new(1.0, 0.0, 1.1).unwrap()]).unwrap();
        let far = qltf(&other, &reference_params().h2()).unwrap();
        let mut far_shifted = far.clone();
        far_shifted.rows.retain(|r| r.omega != 0.0);
        assert_eq!(compare_fingerprints(&base, &far_shifted), Err(Error::DisjointFrequencies));
    }

    #[test]
    fn guard_limits_enumeration() {
        let tones = (1..=8).map(|k| Tone::new(1.0, 0.0, k as f64).unwrap()).collect();
        let sig = MultitoneSignal::new(tones).unwrap();
        assert!(matches!(input_spectral_coeffs(&sig, 6), Err(Error::GuardExceeded { .. })));
    }
}

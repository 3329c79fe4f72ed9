//! Discrete-time quasi-linear transfer functions built from N-point DFTs.
//!
//! All bin indices are taken modulo `N`, so the time-domain counterpart of
//! every spectral identity here is the N-periodic extension of the input.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::diagnostic::Diagnostic;
use crate::error::{Error, Result};
use crate::gfrf::KernelTransferFunction;
use crate::spectral::ComplexValue;

/// Upper bound on `N^{n-1}` inner-sum terms per output bin.
pub const BIN_SUM_GUARD: f64 = 1e7;

/// Default relative threshold on `|U_n[m]|` for a bin to be valid.
pub const DEFAULT_DQLTF_TAU: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub samples: Vec<f64>,
    /// Seconds.
    pub sample_interval: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, sample_interval: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("a sampled signal needs at least one sample".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("samples must be finite".into()));
        }
        if !(sample_interval.is_finite() && sample_interval > 0.0) {
            return Err(Error::InvalidInput(format!("sample interval must be positive, got {sample_interval}")));
        }
        Ok(Self { samples, sample_interval })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Real frequency of bin `m` in rad/s; bins above `N/2` map to negative
    /// frequencies.
    pub fn bin_frequency(&self, m: usize) -> f64 {
        bin_frequency(m, self.len(), self.sample_interval)
    }
}

pub fn bin_frequency(m: usize, n: usize, sample_interval: f64) -> f64 {
    let signed = if 2 * m > n { m as f64 - n as f64 } else { m as f64 };
    2.0 * PI * signed / (n as f64 * sample_interval)
}

/// An order-n kernel `h_n[i_1, …, i_n]`, indices `0..memory`, stored
/// row-major (last index fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteKernel {
    order: usize,
    memory: usize,
    values: Vec<f64>,
}

impl DiscreteKernel {
    pub fn new(order: usize, memory: usize, values: Vec<f64>) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidOrder { min: 1, got: order });
        }
        if memory < 1 {
            return Err(Error::InvalidInput("kernel memory must be at least 1".into()));
        }
        let expected = memory
            .checked_pow(order as u32)
            .ok_or_else(|| Error::InvalidInput(format!("kernel of order {order} and memory {memory} is too large")))?;
        if values.len() != expected {
            return Err(Error::InvalidInput(format!(
                "order-{order} kernel with memory {memory} needs {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("kernel values must be finite".into()));
        }
        Ok(Self { order, memory, values })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Multi-index of the flat position `flat`.
    fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = flat % self.memory;
            flat /= self.memory;
        }
    }

    /// `H_n[m_1, …, m_n] = Σ_i h_n[i] e^{-j2π(m_1 i_1 + … + m_n i_n)/N}`.
    pub fn bin_response(&self, bins: &[usize], n: usize) -> ComplexValue {
        let mut idx = vec![0usize; self.order];
        let mut acc = ComplexValue::new(0.0, 0.0);
        for (flat, &h) in self.values.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            self.unflatten(flat, &mut idx);
            let phase: usize = bins.iter().zip(&idx).map(|(m, i)| (m * i) % n).sum::<usize>() % n;
            acc += h * ComplexValue::from_polar(1.0, -2.0 * PI * phase as f64 / n as f64);
        }
        acc
    }

    /// The kernel's continuous-frequency response for sample interval `T`:
    /// `H_n(jω) = Σ_i h_n[i] e^{-jT(ω_1 i_1 + … + ω_n i_n)}`.
    pub fn transfer_function(&self, sample_interval: f64) -> KernelTransferFunction {
        let kernel = self.clone();
        KernelTransferFunction::new(self.order, move |w| {
            let mut idx = vec![0usize; kernel.order];
            let mut acc = ComplexValue::new(0.0, 0.0);
            for (flat, &h) in kernel.values.iter().enumerate() {
                kernel.unflatten(flat, &mut idx);
                let arg: f64 = w.iter().zip(&idx).map(|(om, &i)| om * i as f64).sum();
                acc += h * ComplexValue::from_polar(1.0, -sample_interval * arg);
            }
            Ok(acc)
        })
        .expect("order validated at construction")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpectrum {
    pub bins: Vec<ComplexValue>,
}

impl DiscreteSpectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    fn max_norm(&self) -> f64 {
        self.bins.iter().fold(0.0, |m, b| m.max(b.norm()))
    }
}

/// `X[m] = Σ_k x[k] e^{-j2πmk/N}`.
pub fn dft(x: &SampledSignal) -> DiscreteSpectrum {
    let mut buf: Vec<ComplexValue> = x.samples.iter().map(|&v| ComplexValue::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    DiscreteSpectrum { bins: buf }
}

/// `x[k] = (1/N) Σ_m X[m] e^{j2πmk/N}`.
pub fn idft(spectrum: &DiscreteSpectrum) -> Vec<ComplexValue> {
    let n = spectrum.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf = spectrum.bins.clone();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// `y_n[k] = Σ_i h_n[i_1..i_n] u[k−i_1]⋯u[k−i_n]`, with `u` extended
/// N-periodically.
pub fn volterra_response(kernel: &DiscreteKernel, u: &SampledSignal) -> Result<Vec<f64>> {
    let n = u.len();
    if kernel.memory > n {
        return Err(Error::KernelTooLong { memory: kernel.memory, len: n });
    }
    let mut idx = vec![0usize; kernel.order];
    let mut y = vec![0.0; n];
    for (k, yk) in y.iter_mut().enumerate() {
        for (flat, &h) in kernel.values.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            kernel.unflatten(flat, &mut idx);
            let prod: f64 = idx.iter().map(|&i| u.samples[(k + n - i) % n]).product();
            *yk += h * prod;
        }
    }
    Ok(y)
}

/// `U_n[m]`: the DFT of the pointwise power `u[k]ⁿ`.
pub fn input_spectral_dft(u: &SampledSignal, n: usize) -> Result<DiscreteSpectrum> {
    if n < 1 {
        return Err(Error::InvalidOrder { min: 1, got: n });
    }
    let powered = SampledSignal { samples: u.samples.iter().map(|x| x.powi(n as i32)).collect(), ..u.clone() };
    Ok(dft(&powered))
}

/// Where the bin-domain `H_n[m_1, …, m_n]` comes from.
#[derive(Debug, Clone, Copy)]
pub enum BinTransfer<'a> {
    /// Multidimensional DFT of a finite-support kernel.
    Kernel(&'a DiscreteKernel),
    /// A continuous GFRF sampled at the bin frequencies.
    Evaluator(&'a KernelTransferFunction),
}

impl BinTransfer<'_> {
    pub fn order(&self) -> usize {
        match self {
            BinTransfer::Kernel(k) => k.order(),
            BinTransfer::Evaluator(h) => h.order(),
        }
    }

    fn at(&self, bins: &[usize], u: &SampledSignal, freqs: &mut [f64]) -> Result<ComplexValue> {
        match self {
            BinTransfer::Kernel(k) => Ok(k.bin_response(bins, u.len())),
            BinTransfer::Evaluator(h) => {
                for (f, &m) in freqs.iter_mut().zip(bins) {
                    *f = u.bin_frequency(m);
                }
                h.eval(freqs)
            }
        }
    }
}

/// `Y_n[m] = N^{-(n-1)} Σ_{m_1..m_{n-1}} H_n[m_1, …, m_n] U[m_1]⋯U[m_n]`,
/// `m_n = (m − m_1 − … − m_{n-1}) mod N`.
pub fn output_spectral_dft(transfer: BinTransfer<'_>, u: &SampledSignal) -> Result<DiscreteSpectrum> {
    let order = transfer.order();
    let n = u.len();
    if let BinTransfer::Kernel(k) = transfer {
        if k.memory() > n {
            return Err(Error::KernelTooLong { memory: k.memory(), len: n });
        }
    }
    let inner = (n as f64).powi(order as i32 - 1);
    if inner > BIN_SUM_GUARD {
        return Err(Error::GuardExceeded { count: inner, limit: BIN_SUM_GUARD });
    }
    let spectrum = dft(u).bins;
    let inner_count = inner as usize;
    let scale = 1.0 / inner;
    let mut bins = vec![0usize; order];
    let mut freqs = vec![0.0; order];
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let mut acc = ComplexValue::new(0.0, 0.0);
        for t in 0..inner_count {
            let mut rem = t;
            let mut used = 0usize;
            let mut prod = ComplexValue::new(1.0, 0.0);
            for slot in bins.iter_mut().take(order - 1) {
                *slot = rem % n;
                rem /= n;
                used += *slot;
                prod *= spectrum[*slot];
            }
            let last = (m + n * order - used % n) % n;
            bins[order - 1] = last;
            prod *= spectrum[last];
            if prod == ComplexValue::new(0.0, 0.0) {
                continue;
            }
            acc += prod * transfer.at(&bins, u, &mut freqs)?;
        }
        out.push(acc * scale);
    }
    Ok(DiscreteSpectrum { bins: out })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DqltfRow {
    pub m: usize,
    pub omega: f64,
    pub u: ComplexValue,
    pub y: ComplexValue,
    pub g: ComplexValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqltfTable {
    pub order: usize,
    pub rows: Vec<DqltfRow>,
    pub tau: f64,
    pub diagnostics: Vec<Diagnostic>,
}

impl DqltfTable {
    pub fn row(&self, m: usize) -> Option<&DqltfRow> {
        self.rows.iter().find(|r| r.m == m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqltfOptions {
    pub tau: f64,
    /// Frequencies (rad/s) expected to sit on bins; off-bin ones are reported.
    pub analysis_freqs: Vec<f64>,
}

impl Default for DqltfOptions {
    fn default() -> Self {
        Self { tau: DEFAULT_DQLTF_TAU, analysis_freqs: Vec::new() }
    }
}

/// Nearest bin to `omega` and whether it coincides with it.
pub fn nearest_bin(omega: f64, n: usize, sample_interval: f64) -> (usize, f64) {
    let spacing = 2.0 * PI / (n as f64 * sample_interval);
    let m = (omega / spacing).round().rem_euclid(n as f64) as usize % n;
    (m, bin_frequency(m, n, sample_interval))
}

pub fn dqltf(transfer: BinTransfer<'_>, u: &SampledSignal, opts: &DqltfOptions) -> Result<DqltfTable> {
    let order = transfer.order();
    let un = input_spectral_dft(u, order)?;
    let yn = output_spectral_dft(transfer, u)?;
    let mut diagnostics = Vec::new();
    for &w in &opts.analysis_freqs {
        let (m, f) = nearest_bin(w, u.len(), u.sample_interval);
        if (f - w).abs() > 1e-9 * w.abs().max(1.0) {
            diagnostics.push(Diagnostic::Leakage { requested: w, nearest_bin: m, nearest_freq: f });
        }
    }
    let u_floor = opts.tau * un.max_norm();
    let y_floor = opts.tau * yn.max_norm();
    let mut rows = Vec::new();
    for (m, (&uv, &yv)) in un.bins.iter().zip(&yn.bins).enumerate() {
        let omega = u.bin_frequency(m);
        if uv.norm() > u_floor && uv.norm() > 0.0 {
            rows.push(DqltfRow { m, omega, u: uv, y: yv, g: yv / uv });
        } else if yv.norm() > y_floor && yv.norm() > 0.0 {
            diagnostics.push(Diagnostic::SpectralCancellation { omega, u_mag: uv.norm(), y_mag: yv.norm() });
        }
    }
    if rows.is_empty() {
        diagnostics.push(Diagnostic::EmptyDomain);
    }
    Ok(DqltfTable { order, rows, tau: opts.tau, diagnostics })
}

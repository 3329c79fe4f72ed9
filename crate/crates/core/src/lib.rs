//! Quasi-linear transfer functions (QLTFs) of nonlinear systems described by
//! Volterra-series kernels or generalized frequency response functions.
//!
//! The nth-order QLTF `G_n(jω) = Y_n(jω) / U_n(jω)` collapses the
//! n-dimensional GFRF onto the one-dimensional output-frequency axis, where
//! `U_n` is the spectrum of `uⁿ(t)` and `Y_n` the nth-order output spectrum.
//!
//! Modules:
//! - [`spectral`]: tones, multitone signals, line spectra, frequency sets, interval unions
//! - [`gfrf`]: GFRF evaluators, symmetrization, the Duffing-type oscillator closed forms
//! - [`multitone`]: `U_n`, `Y_n`, `G_n` and the total output spectrum for multitone inputs
//! - [`freq_range`]: output frequency ranges for band-limited and multitone inputs
//! - [`discrete`]: the DFT-based discrete pipeline
//! - [`simulator`]: RK4 time-domain simulation of the oscillator

pub mod diagnostic;
pub mod discrete;
pub mod error;
pub mod freq_range;
pub mod gfrf;
pub mod multitone;
pub mod simulator;
pub mod spectral;

pub use diagnostic::Diagnostic;
pub use error::{Error, Result};
pub use gfrf::{DuffingParams, KernelTransferFunction, PhysicalParams};
pub use multitone::{qltf, QltfTable};
pub use spectral::{ComplexValue, FrequencySet, FrequencyTolerance, IntervalUnion, MultitoneSignal, Tone};

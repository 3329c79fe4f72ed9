//! Model and tone settings, from flags or a JSON run file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use qltf::gfrf::DuffingParams;
use qltf::{FrequencyTolerance, KernelTransferFunction, MultitoneSignal, Tone};
use serde::Deserialize;

use crate::formats::{parse_tones, KernelDoc};

pub const FREQ_TOL_ENV: &str = "QLTF_FREQ_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Duffing,
    KernelFile,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// System model. Defaults to `kernel-file` when --kernel is given, else `duffing`.
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Undamped natural frequency (rad/s).
    #[arg(long)]
    pub wn: Option<f64>,
    /// Damping ratio.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Quadratic stiffness coefficient.
    #[arg(long, allow_negative_numbers = true)]
    pub eps2: Option<f64>,
    /// Cubic stiffness coefficient.
    #[arg(long, allow_negative_numbers = true)]
    pub eps3: Option<f64>,
    /// Kernel document (JSON: order, memory, values, sample_interval).
    #[arg(long)]
    pub kernel: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SignalArgs {
    /// Comma-separated tones, `mag@freq[:phase_deg]`, frequencies in rad/s.
    #[arg(long, allow_hyphen_values = true)]
    pub tones: Option<String>,
    /// JSON run file supplying any of: model, wn, zeta, eps2, eps3, kernel, tones, order.
    /// Command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneEntry {
    pub mag: f64,
    pub freq: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ToneList {
    Compact(String),
    Entries(Vec<ToneEntry>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub model: Option<ModelKind>,
    pub wn: Option<f64>,
    pub zeta: Option<f64>,
    pub eps2: Option<f64>,
    pub eps3: Option<f64>,
    pub kernel: Option<PathBuf>,
    pub tones: Option<ToneList>,
    pub order: Option<usize>,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading run file {}", path.display()))?;
        let mut file: RunFile =
            serde_json::from_str(&text).with_context(|| format!("parsing run file {}", path.display()))?;
        // Kernel paths are relative to the run file.
        if let (Some(k), Some(dir)) = (&file.kernel, path.parent()) {
            if k.is_relative() {
                file.kernel = Some(dir.join(k));
            }
        }
        Ok(file)
    }
}

/// Flags merged over the optional run file.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub model: ModelArgs,
    pub tones: Vec<Tone>,
    pub order: Option<usize>,
}

impl RunConfig {
    pub fn resolve(model: &ModelArgs, signal: &SignalArgs, order: Option<usize>) -> Result<Self> {
        let file = match &signal.config {
            Some(p) => RunFile::load(p)?,
            None => RunFile::default(),
        };
        let model = ModelArgs {
            model: model.model.or(file.model),
            wn: model.wn.or(file.wn),
            zeta: model.zeta.or(file.zeta),
            eps2: model.eps2.or(file.eps2),
            eps3: model.eps3.or(file.eps3),
            kernel: model.kernel.clone().or(file.kernel),
        };
        let tones = match (&signal.tones, file.tones) {
            (Some(s), _) => parse_tones(s)?,
            (None, Some(ToneList::Compact(s))) => parse_tones(&s)?,
            (None, Some(ToneList::Entries(es))) => {
                es.into_iter().map(|e| Tone::new(e.mag, e.phase_deg.to_radians(), e.freq)).collect::<Result<_, _>>()?
            }
            (None, None) => Vec::new(),
        };
        Ok(Self { model, tones, order: order.or(file.order) })
    }

    pub fn order(&self) -> Result<usize> {
        self.order.ok_or_else(|| anyhow!("--order is required"))
    }

    pub fn model_kind(&self) -> ModelKind {
        self.model.model.unwrap_or(if self.model.kernel.is_some() { ModelKind::KernelFile } else { ModelKind::Duffing })
    }

    pub fn duffing(&self) -> Result<DuffingParams> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| anyhow!("--model duffing requires --{name}"));
        let m = &self.model;
        Ok(DuffingParams::new(need(m.wn, "wn")?, need(m.zeta, "zeta")?, need(m.eps2, "eps2")?, need(m.eps3, "eps3")?)?)
    }

    pub fn kernel_path(&self) -> Result<&Path> {
        self.model.kernel.as_deref().ok_or_else(|| anyhow!("--model kernel-file requires --kernel <file>"))
    }

    /// Continuous-frequency transfer function of the selected model at `order`.
    pub fn transfer_function(&self, order: usize) -> Result<KernelTransferFunction> {
        match self.model_kind() {
            ModelKind::Duffing => Ok(self.duffing()?.gfrf(order)?),
            ModelKind::KernelFile => {
                let (kernel, t) = KernelDoc::load(self.kernel_path()?)?;
                if kernel.order() != order {
                    bail!("kernel file has order {}, but --order is {order}", kernel.order());
                }
                Ok(kernel.transfer_function(t))
            }
        }
    }

    pub fn signal(&self, tol: FrequencyTolerance) -> Result<Option<MultitoneSignal>> {
        if self.tones.is_empty() {
            return Ok(None);
        }
        let mut tones = self.tones.clone();
        tones.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
        Ok(Some(MultitoneSignal::with_tolerance(tones, tol)?))
    }
}

/// The global frequency tolerance, overridable through the environment.
pub fn freq_tolerance() -> Result<FrequencyTolerance> {
    match std::env::var(FREQ_TOL_ENV) {
        Ok(s) => {
            let rel: f64 = s.trim().parse().with_context(|| format!("{FREQ_TOL_ENV}=`{s}` is not a number"))?;
            Ok(FrequencyTolerance::new(rel).with_context(|| format!("{FREQ_TOL_ENV}={s}"))?)
        }
        Err(std::env::VarError::NotPresent) => Ok(FrequencyTolerance::default()),
        Err(e) => Err(anyhow!("{FREQ_TOL_ENV}: {e}")),
    }
}

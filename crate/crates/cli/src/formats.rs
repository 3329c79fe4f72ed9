//! File formats read and written by the CLI.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use qltf::discrete::{DiscreteKernel, DqltfTable, SampledSignal};
use qltf::multitone::{QltfRow, QltfTable};
use qltf::spectral::phase_deg;
use qltf::{ComplexValue, Tone};
use serde::{Deserialize, Serialize};

pub const QLTF_HEADER: &str = "omega,mag_U,phase_U_deg,mag_Y,phase_Y_deg,mag_G,phase_G_deg";
pub const DQLTF_HEADER: &str = "m,omega_rad_s,mag_U,mag_Y,mag_G,phase_G_deg";

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    let v: f64 = s.parse().expect("formatted float parses");
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

pub fn fmt_num(x: f64, digits: usize) -> String {
    format!("{}", round_sig(x, digits))
}

/// Parses `mag@freq[:phase_deg]` items separated by commas.
pub fn parse_tones(spec: &str) -> Result<Vec<Tone>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (mag, rest) =
                item.split_once('@').ok_or_else(|| anyhow!("tone `{item}` is not of the form mag@freq:phase_deg"))?;
            let (freq, phase) = rest.split_once(':').unwrap_or((rest, "0"));
            let mag: f64 = mag.trim().parse().with_context(|| format!("bad magnitude in tone `{item}`"))?;
            let freq: f64 = freq.trim().parse().with_context(|| format!("bad frequency in tone `{item}`"))?;
            let phase: f64 = phase.trim().parse().with_context(|| format!("bad phase in tone `{item}`"))?;
            Ok(Tone::new(mag, phase.to_radians(), freq)?)
        })
        .collect()
}

pub fn parse_f64_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("`{s}` is not a number")))
        .collect()
}

/// Kernel document: `{"order": n, "memory": L, "values": [...], "sample_interval": T}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    pub order: usize,
    pub memory: usize,
    /// Row-major, last index fastest.
    pub values: Vec<f64>,
    #[serde(default = "unit_interval")]
    pub sample_interval: f64,
}

fn unit_interval() -> f64 {
    1.0
}

impl KernelDoc {
    pub fn load(path: &Path) -> Result<(DiscreteKernel, f64)> {
        let text = fs::read_to_string(path).with_context(|| format!("reading kernel file {}", path.display()))?;
        let doc: KernelDoc =
            serde_json::from_str(&text).with_context(|| format!("parsing kernel file {}", path.display()))?;
        if !(doc.sample_interval.is_finite() && doc.sample_interval > 0.0) {
            bail!("kernel sample_interval must be positive, got {}", doc.sample_interval);
        }
        Ok((DiscreteKernel::new(doc.order, doc.memory, doc.values)?, doc.sample_interval))
    }
}

/// Reads a single-column sample file whose header is `T=<seconds>`.
pub fn read_samples<R: Read>(reader: R) -> Result<SampledSignal> {
    let mut lines = BufReader::new(reader).lines();
    let header = loop {
        match lines.next() {
            Some(line) => {
                let line = line?;
                let trimmed = line.trim();
                if !trimmed.is_empty() && !trimmed.starts_with('#') {
                    break trimmed.to_string();
                }
            }
            None => bail!("sample file is empty"),
        }
    };
    let interval = header
        .strip_prefix("T=")
        .ok_or_else(|| anyhow!("sample file header must be `T=<sample interval>`, got `{header}`"))?
        .trim()
        .parse::<f64>()
        .context("bad sample interval in header")?;
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        samples.push(trimmed.parse::<f64>().with_context(|| format!("bad sample on data line {}", i + 1))?);
    }
    Ok(SampledSignal::new(samples, interval)?)
}

#[cfg(test)]
pub fn write_samples<W: Write>(mut out: W, signal: &SampledSignal) -> Result<()> {
    writeln!(out, "T={}", signal.sample_interval)?;
    for s in &signal.samples {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

/// One QLTF row as printed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct QltfRecord {
    pub omega: f64,
    pub mag_U: f64,
    pub phase_U_deg: f64,
    pub mag_Y: f64,
    pub phase_Y_deg: f64,
    pub mag_G: f64,
    pub phase_G_deg: f64,
}

impl QltfRecord {
    pub fn from_row(row: &QltfRow, digits: usize) -> Self {
        let r = |x| round_sig(x, digits);
        Self {
            omega: r(row.omega),
            mag_U: r(row.u.norm()),
            phase_U_deg: r(phase_deg(row.u)),
            mag_Y: r(row.y.norm()),
            phase_Y_deg: r(phase_deg(row.y)),
            mag_G: r(row.g.norm()),
            phase_G_deg: r(phase_deg(row.g)),
        }
    }

    pub fn to_row(self) -> QltfRow {
        let c = |m: f64, p: f64| ComplexValue::from_polar(m, p.to_radians());
        QltfRow {
            omega: self.omega,
            u: c(self.mag_U, self.phase_U_deg),
            y: c(self.mag_Y, self.phase_Y_deg),
            g: c(self.mag_G, self.phase_G_deg),
        }
    }

    fn csv_line(&self) -> String {
        [self.omega, self.mag_U, self.phase_U_deg, self.mag_Y, self.phase_Y_deg, self.mag_G, self.phase_G_deg]
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QltfDoc {
    pub order: usize,
    pub rows: Vec<QltfRecord>,
}

impl QltfDoc {
    pub fn from_table(table: &QltfTable, digits: usize) -> Self {
        Self { order: table.order, rows: table.rows.iter().map(|r| QltfRecord::from_row(r, digits)).collect() }
    }

    pub fn to_table(&self, tolerance: f64) -> QltfTable {
        let mut rows: Vec<QltfRow> = self.rows.iter().map(|r| r.to_row()).collect();
        rows.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        QltfTable { order: self.order, rows, diagnostics: Vec::new(), tolerance }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# order={}", self.order)?;
        writeln!(out, "{QLTF_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{}", r.csv_line())?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut text = String::new();
        BufReader::new(reader).read_to_string(&mut text)?;
        let order = text
            .lines()
            .filter_map(|l| l.trim().strip_prefix('#'))
            .find_map(|meta| meta.split_whitespace().find_map(|kv| kv.strip_prefix("order=")))
            .ok_or_else(|| anyhow!("QLTF file lacks a `# order=<n>` line"))?
            .parse::<usize>()
            .context("bad order in QLTF file")?;
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != QLTF_HEADER {
            bail!("unexpected QLTF header `{}`", header.join(","));
        }
        let rows = rdr.deserialize().collect::<Result<Vec<QltfRecord>, _>>().context("parsing QLTF rows")?;
        Ok(Self { order, rows })
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            Ok(serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))?)
        } else {
            Self::read_csv(file).with_context(|| format!("reading {}", path.display()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct DqltfRecord {
    pub m: usize,
    pub omega_rad_s: f64,
    pub mag_U: f64,
    pub mag_Y: f64,
    pub mag_G: f64,
    pub phase_G_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqltfDoc {
    pub order: usize,
    pub tau: f64,
    pub rows: Vec<DqltfRecord>,
}

impl DqltfDoc {
    /// Rows sorted by signed frequency.
    pub fn from_table(table: &DqltfTable, digits: usize) -> Self {
        let r = |x| round_sig(x, digits);
        let mut rows: Vec<DqltfRecord> = table
            .rows
            .iter()
            .map(|row| DqltfRecord {
                m: row.m,
                omega_rad_s: r(row.omega),
                mag_U: r(row.u.norm()),
                mag_Y: r(row.y.norm()),
                mag_G: r(row.g.norm()),
                phase_G_deg: r(phase_deg(row.g)),
            })
            .collect();
        rows.sort_by(|a, b| a.omega_rad_s.total_cmp(&b.omega_rad_s));
        Self { order: table.order, tau: table.tau, rows }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# order={} tau={}", self.order, self.tau)?;
        writeln!(out, "{DQLTF_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{},{}", r.m, r.omega_rad_s, r.mag_U, r.mag_Y, r.mag_G, r.phase_G_deg)?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    #[cfg(test)]
    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<DqltfRecord>> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        Ok(rdr.deserialize().collect::<Result<Vec<_>, _>>()?)
    }
}

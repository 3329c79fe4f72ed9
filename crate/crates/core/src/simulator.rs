//! Fixed-step classical Runge–Kutta integration of the forced oscillator
//!
//! ```text
//! y' = v
//! v' = u(t) − 2ζω_n v − ω_n² y − ε₂ω_n² y² − ε₃ω_n² y³
//! ```

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfrf::DuffingParams;
use crate::spectral::MultitoneSignal;

/// `|y|` above this aborts the run.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
    pub y0: f64,
    pub v0: f64,
}

impl SimConfig {
    pub fn new(t_start: f64, t_end: f64, step: f64, y0: f64, v0: f64) -> Result<Self> {
        let cfg = Self { t_start, t_end, step, y0, v0 };
        cfg.steps()?;
        Ok(cfg)
    }

    /// Number of steps, `round((t_end − t_start) / step)`.
    pub fn steps(&self) -> Result<usize> {
        let finite = [self.t_start, self.t_end, self.step, self.y0, self.v0].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("simulation settings must be finite".into()));
        }
        if self.t_end <= self.t_start {
            return Err(Error::InvalidInput(format!("t_end ({}) must exceed t_start ({})", self.t_end, self.t_start)));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidInput(format!("step must be positive, got {}", self.step)));
        }
        let steps = ((self.t_end - self.t_start) / self.step).round();
        if steps < 1.0 {
            return Err(Error::InvalidInput("step is longer than the simulated interval".into()));
        }
        Ok(steps as usize)
    }
}

/// Forcing of a simulation run: a multitone signal or nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Forcing {
    None,
    Multitone(MultitoneSignal),
}

impl Forcing {
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            Forcing::None => 0.0,
            Forcing::Multitone(sig) => sig.value_at(t),
        }
    }
}

impl From<MultitoneSignal> for Forcing {
    fn from(sig: MultitoneSignal) -> Self {
        Forcing::Multitone(sig)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub params: DuffingParams,
    pub config: SimConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn end_state(&self) -> (f64, f64) {
        (*self.y.last().unwrap_or(&0.0), *self.v.last().unwrap_or(&0.0))
    }

    /// CSV with a `#` metadata line, then `t,y,v`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let p = &self.params;
        let c = &self.config;
        writeln!(
            out,
            "# wn={} zeta={} eps2={} eps3={} t0={} t1={} h={} y0={} v0={}",
            p.wn, p.zeta, p.eps2, p.eps3, c.t_start, c.t_end, c.step, c.y0, c.v0
        )?;
        writeln!(out, "t,y,v")?;
        for i in 0..self.len() {
            writeln!(out, "{},{},{}", self.t[i], self.y[i], self.v[i])?;
        }
        Ok(())
    }
}

fn rhs(dp: &DuffingParams, forcing: &Forcing, t: f64, y: f64, v: f64) -> (f64, f64) {
    let w2 = dp.wn * dp.wn;
    let restoring = w2 * y * (1.0 + y * (dp.eps2 + dp.eps3 * y));
    (v, forcing.value_at(t) - 2.0 * dp.zeta * dp.wn * v - restoring)
}

pub fn simulate_duffing(dp: &DuffingParams, forcing: &Forcing, cfg: &SimConfig) -> Result<Trajectory> {
    let steps = cfg.steps()?;
    let h = cfg.step;
    let mut t = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut vs = Vec::with_capacity(steps + 1);
    let (mut y, mut v) = (cfg.y0, cfg.v0);
    t.push(cfg.t_start);
    ys.push(y);
    vs.push(v);
    for i in 0..steps {
        let ti = cfg.t_start + i as f64 * h;
        let k1 = rhs(dp, forcing, ti, y, v);
        let k2 = rhs(dp, forcing, ti + h / 2.0, y + h / 2.0 * k1.0, v + h / 2.0 * k1.1);
        let k3 = rhs(dp, forcing, ti + h / 2.0, y + h / 2.0 * k2.0, v + h / 2.0 * k2.1);
        let k4 = rhs(dp, forcing, ti + h, y + h * k3.0, v + h * k3.1);
        let y_next = y + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let v_next = v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(y_next.abs() <= BLOW_UP_THRESHOLD && v_next.is_finite()) {
            return Err(Error::BlowUp { last_stable_time: ti, threshold: BLOW_UP_THRESHOLD });
        }
        y = y_next;
        v = v_next;
        t.push(cfg.t_start + (i + 1) as f64 * h);
        ys.push(y);
        vs.push(v);
    }
    Ok(Trajectory { t, y: ys, v: vs, params: *dp, config: *cfg })
}

/// `(y, v)` pairs, dropping the leading `skip_fraction` of samples.
pub fn export_phase_portrait(tr: &Trajectory, skip_fraction: f64) -> Result<Vec<(f64, f64)>> {
    if tr.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    if !(0.0..1.0).contains(&skip_fraction) {
        return Err(Error::InvalidInput(format!("skip fraction must be in [0, 1), got {skip_fraction}")));
    }
    let skip = (skip_fraction * tr.len() as f64).floor() as usize;
    Ok(tr.y.iter().zip(&tr.v).skip(skip).map(|(&y, &v)| (y, v)).collect())
}

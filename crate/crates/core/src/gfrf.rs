//! Generalized frequency response functions (GFRFs).
//!
//! A GFRF of order `n` is carried as an opaque evaluator so closed forms and
//! tabulated kernels share one interface. The Duffing-type benchmark
//! oscillator
//!
//! ```text
//! y'' + 2ζω_n y' + ω_n² y + ε₂ω_n² y² + ε₃ω_n² y³ = u(t)
//! ```
//!
//! has closed-form first, second and third order GFRFs built here.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ComplexValue;

type Evaluator = dyn Fn(&[f64]) -> Result<ComplexValue> + Send + Sync;

/// An order-`n` map `(ω_1, …, ω_n) ↦ H_n(jω_1, …, jω_n)`.
#[derive(Clone)]
pub struct KernelTransferFunction {
    order: usize,
    evaluator: Arc<Evaluator>,
}

impl fmt::Debug for KernelTransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelTransferFunction").field("order", &self.order).finish_non_exhaustive()
    }
}

impl KernelTransferFunction {
    pub fn new<F>(order: usize, evaluator: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<ComplexValue> + Send + Sync + 'static,
    {
        if order < 1 {
            return Err(Error::InvalidOrder { min: 1, got: order });
        }
        Ok(Self { order, evaluator: Arc::new(evaluator) })
    }

    /// `H_n ≡ value`.
    pub fn constant(order: usize, value: ComplexValue) -> Result<Self> {
        Self::new(order, move |_| Ok(value))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Evaluates at `freqs` (rad/s). Non-finite results are reported as poles.
    pub fn eval(&self, freqs: &[f64]) -> Result<ComplexValue> {
        if freqs.len() != self.order {
            return Err(Error::InvalidInput(format!(
                "order-{} transfer function evaluated with {} arguments",
                self.order,
                freqs.len()
            )));
        }
        let v = (self.evaluator)(freqs)?;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Pole { at: freqs.to_vec() })
        }
    }
}

/// Averages `h` over all `n!` permutations of its arguments.
pub fn symmetrize(h: &KernelTransferFunction) -> KernelTransferFunction {
    if h.order == 1 {
        return h.clone();
    }
    let inner = h.clone();
    let perms = permutations(h.order);
    let count = perms.len() as f64;
    let evaluator = move |freqs: &[f64]| -> Result<ComplexValue> {
        let mut buf = vec![0.0; freqs.len()];
        let mut acc = ComplexValue::new(0.0, 0.0);
        for p in &perms {
            for (slot, &i) in buf.iter_mut().zip(p) {
                *slot = freqs[i];
            }
            acc += inner.eval(&buf)?;
        }
        Ok(acc / count)
    };
    KernelTransferFunction { order: h.order, evaluator: Arc::new(evaluator) }
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

/// Mass-damper-spring parameters with quadratic and cubic stiffness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub mass: f64,
    pub damping: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

/// Standard-form oscillator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    /// Natural frequency ω_n, rad/s.
    pub wn: f64,
    /// Damping ratio ζ.
    pub zeta: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl DuffingParams {
    pub fn new(wn: f64, zeta: f64, eps2: f64, eps3: f64) -> Result<Self> {
        if !(wn.is_finite() && wn > 0.0) {
            return Err(Error::InvalidInput(format!("natural frequency must be positive, got {wn}")));
        }
        if !(zeta.is_finite() && zeta >= 0.0) {
            return Err(Error::InvalidInput(format!("damping ratio must be non-negative, got {zeta}")));
        }
        if !(eps2.is_finite() && eps3.is_finite()) {
            return Err(Error::InvalidInput("nonlinear coefficients must be finite".into()));
        }
        Ok(Self { wn, zeta, eps2, eps3 })
    }

    pub fn h1(&self) -> KernelTransferFunction {
        let dp = *self;
        KernelTransferFunction { order: 1, evaluator: Arc::new(move |w: &[f64]| duffing_h1(&dp, w[0])) }
    }

    pub fn h2(&self) -> KernelTransferFunction {
        let dp = *self;
        KernelTransferFunction { order: 2, evaluator: Arc::new(move |w: &[f64]| duffing_h2(&dp, w[0], w[1])) }
    }

    pub fn h3(&self) -> KernelTransferFunction {
        let dp = *self;
        KernelTransferFunction { order: 3, evaluator: Arc::new(move |w: &[f64]| duffing_h3(&dp, w[0], w[1], w[2])) }
    }

    /// The closed-form GFRF of the given order (1, 2 or 3).
    pub fn gfrf(&self, order: usize) -> Result<KernelTransferFunction> {
        match order {
            1 => Ok(self.h1()),
            2 => Ok(self.h2()),
            3 => Ok(self.h3()),
            n => Err(Error::InvalidInput(format!("closed-form Duffing GFRFs exist for orders 1 to 3, got {n}"))),
        }
    }
}

pub fn normalize(p: &PhysicalParams) -> Result<DuffingParams> {
    if !(p.mass.is_finite() && p.mass > 0.0) {
        return Err(Error::InvalidInput(format!("mass must be positive, got {}", p.mass)));
    }
    if !(p.k1.is_finite() && p.k1 > 0.0) {
        return Err(Error::InvalidInput(format!("linear stiffness must be positive, got {}", p.k1)));
    }
    if !(p.damping.is_finite() && p.damping >= 0.0) {
        return Err(Error::InvalidInput(format!("damping must be non-negative, got {}", p.damping)));
    }
    DuffingParams::new((p.k1 / p.mass).sqrt(), p.damping / (2.0 * (p.mass * p.k1).sqrt()), p.k2 / p.k1, p.k3 / p.k1)
}

/// `1 / ((jω)² + 2ζω_n(jω) + ω_n²)`.
pub fn duffing_h1(dp: &DuffingParams, w: f64) -> Result<ComplexValue> {
    let denom = ComplexValue::new(dp.wn * dp.wn - w * w, 2.0 * dp.zeta * dp.wn * w);
    if denom.norm() <= 1e-14 * (dp.wn * dp.wn).max(w * w) {
        return Err(Error::Pole { at: vec![w] });
    }
    Ok(denom.inv())
}

/// `-ε₂ ω_n² H₁(jω₁) H₁(jω₂) H₁(j(ω₁+ω₂))`.
pub fn duffing_h2(dp: &DuffingParams, w1: f64, w2: f64) -> Result<ComplexValue> {
    let h = duffing_h1(dp, w1)? * duffing_h1(dp, w2)? * duffing_h1(dp, w1 + w2).map_err(|_| pole(&[w1, w2]))?;
    Ok(-dp.eps2 * dp.wn * dp.wn * h)
}

/// Third-order GFRF, written fully symmetrized in its arguments.
pub fn duffing_h3(dp: &DuffingParams, w1: f64, w2: f64, w3: f64) -> Result<ComplexValue> {
    let at = [w1, w2, w3];
    let wrap = |r: Result<ComplexValue>| r.map_err(|_| pole(&at));
    let (a, b, c) = (wrap(duffing_h1(dp, w1))?, wrap(duffing_h1(dp, w2))?, wrap(duffing_h1(dp, w3))?);
    let quadratic =
        a * wrap(duffing_h2(dp, w2, w3))? + b * wrap(duffing_h2(dp, w3, w1))? + c * wrap(duffing_h2(dp, w1, w2))?;
    let bracket = 4.0 * dp.eps2 * quadratic + 6.0 * dp.eps3 * a * b * c;
    let out = wrap(duffing_h1(dp, w1 + w2 + w3))?;
    Ok(-dp.wn * dp.wn / 6.0 * bracket * out)
}

fn pole(at: &[f64]) -> Error {
    Error::Pole { at: at.to_vec() }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid interval [{lo}, {hi}]: lower bound exceeds upper bound")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("order must be at least {min}, got {got}")]
    InvalidOrder { min: usize, got: usize },

    /// A transfer function was evaluated on (or numerically at) a pole.
    #[error("pole of the transfer function at frequencies {at:?} rad/s")]
    Pole { at: Vec<f64> },

    #[error("combinatorial guard exceeded: {count} evaluations requested, limit is {limit}")]
    GuardExceeded { count: f64, limit: f64 },

    #[error("kernel memory {memory} exceeds signal length {len}")]
    KernelTooLong { memory: usize, len: usize },

    #[error("order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),

    #[error("tables share no frequencies")]
    DisjointFrequencies,

    /// The integrated state left the stable region.
    #[error("integration blew up after t = {last_stable_time} s (|y| exceeded {threshold:e})")]
    BlowUp { last_stable_time: f64, threshold: f64 },
}

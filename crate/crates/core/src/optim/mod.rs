//! Bound-constrained derivative-free minimization: DIRECT and a real-coded
//! genetic algorithm sharing termination logic and run reports.

mod direct;
mod soga;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

pub use direct::{direct_minimize, direct_minimize_with, DirectOptions, HyperRect};
pub use soga::{soga_minimize, soga_minimize_with, Genome, SogaOptions};

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Box `lower_i <= x_i <= upper_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, OptimError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(OptimError::InvalidBounds(format!(
                "{} lower and {} upper values",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(OptimError::InvalidBounds(format!("dimension {i}: [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Maps unit-cube coordinates into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(i, t)| self.lower[i] + t * self.range(i)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, v)| (self.lower[i]..=self.upper[i]).contains(v))
    }

    pub fn clip(&self, i: usize, v: f64) -> f64 {
        v.clamp(self.lower[i], self.upper[i])
    }
}

/// One objective call.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    MaxIters,
    MaxEvals,
    Stalled,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::MaxIters => "max_iters",
            TerminationReason::MaxEvals => "max_evals",
            TerminationReason::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminationCriteria {
    pub max_iters: usize,
    pub max_evals: usize,
    /// Iterations over which the relative improvement is measured.
    pub stall_window: usize,
    /// Relative improvement below which a run counts as stalled; 0 disables.
    pub stall_tol: f64,
}

impl Default for TerminationCriteria {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            max_evals: usize::MAX,
            stall_window: 20,
            stall_tol: 0.0,
        }
    }
}

/// State of a run as seen by [`check_termination`].
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a> {
    pub iteration: usize,
    pub evaluations: usize,
    /// Best value after each completed iteration, oldest first.
    pub best_history: &'a [f64],
}

/// First satisfied criterion in the order max_iters, max_evals, stall.
pub fn check_termination(p: &Progress, c: &TerminationCriteria) -> Option<TerminationReason> {
    if p.iteration >= c.max_iters {
        return Some(TerminationReason::MaxIters);
    }
    if p.evaluations >= c.max_evals {
        return Some(TerminationReason::MaxEvals);
    }
    if c.stall_tol > 0.0 && c.stall_window > 0 && p.best_history.len() > c.stall_window {
        let new = p.best_history[p.best_history.len() - 1];
        let old = p.best_history[p.best_history.len() - 1 - c.stall_window];
        let stalled = if old.is_finite() {
            (old - new) / old.abs().max(1e-300) < c.stall_tol
        } else {
            !(new < old)
        };
        if stalled {
            return Some(TerminationReason::Stalled);
        }
    }
    None
}

/// Outcome of a minimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub algorithm: String,
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub termination: TerminationReason,
    /// Every objective call in evaluation order.
    pub log: Vec<Evaluation>,
    /// Best value after initialization and after every iteration.
    pub best_history: Vec<f64>,
}

impl RunReport {
    /// Evaluations sorted by value, best first, ties by evaluation order.
    pub fn ranked(&self) -> Vec<(usize, &Evaluation)> {
        let mut v: Vec<(usize, &Evaluation)> = self.log.iter().enumerate().collect();
        v.sort_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)));
        v
    }

    /// CSV with header `eval_index,x_1,..,x_n,f`.
    pub fn log_csv(&self) -> String {
        let n = self.log.first().map_or(0, |e| e.x.len());
        let mut s = String::from("eval_index");
        for i in 1..=n {
            let _ = write!(s, ",x_{i}");
        }
        s.push_str(",f\n");
        for (k, e) in self.log.iter().enumerate() {
            let _ = write!(s, "{k}");
            for v in &e.x {
                let _ = write!(s, ",{v}");
            }
            let _ = writeln!(s, ",{}", e.f);
        }
        s
    }

    pub fn summary(&self, log_path: Option<&Path>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "algorithm: {}", self.algorithm);
        let _ = writeln!(s, "best_f: {}", self.best_f);
        let xs: Vec<String> = self.best_x.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "best_x: {}", xs.join(" "));
        let _ = writeln!(s, "evaluations: {}", self.evaluations);
        let _ = writeln!(s, "iterations: {}", self.iterations);
        let _ = writeln!(s, "termination: {}", self.termination.as_str());
        if let Some(p) = log_path {
            let _ = writeln!(s, "log: {}", p.display());
        }
        s
    }

    pub fn write_log(&self, path: impl AsRef<Path>) -> Result<(), OptimError> {
        fs::write(path, self.log_csv())?;
        Ok(())
    }
}

/// Evaluates points in parallel, keeping input order. Non-finite values are
/// logged and replaced by `+inf`.
pub(crate) fn evaluate_all<F>(f: &F, points: Vec<Vec<f64>>) -> Vec<Evaluation>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    points
        .into_par_iter()
        .map(|x| {
            let mut v = f(&x);
            if !v.is_finite() {
                log::warn!("objective returned {v} at {x:?}; using +inf");
                v = f64::INFINITY;
            }
            Evaluation { x, f: v }
        })
        .collect()
}

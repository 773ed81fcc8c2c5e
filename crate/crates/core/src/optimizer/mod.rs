//! GRADE evolution with CERAF niching, and the RBF-network surrogate loop
//! built on top of it.

pub mod grade;
pub mod rbfn;
pub mod surrogate;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grade::{crossover, grade_run, mutate, tournament_select, CerafMemory, GradeConfig, GradeOutcome, Zone};
pub use rbfn::{rbfn_eval, rbfn_fit, rbfn_radius, Surrogate, RBFN_LAMBDA};
pub use surrogate::{
    surrogate_optimize, write_trace_csv, Source, SurrogateConfig, SurrogateOutcome, TraceRecord, EVAL_CAP,
};

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SearchBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Domain("box bounds must be non-empty and of equal length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Domain(format!("degenerate box {lo:?} .. {hi:?}")));
        }
        Ok(SearchBox { lo, hi })
    }

    pub fn unit(dim: usize) -> Self {
        SearchBox {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn range(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// Largest distance within the box.
    pub fn diagonal(&self) -> f64 {
        (0..self.dim()).map(|i| self.range(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lo[i], self.hi[i]);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, v)| *v >= self.lo[i] && *v <= self.hi[i])
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.dim()).map(|i| self.lo[i] + rng.gen::<f64>() * self.range(i)).collect()
    }

    /// Latin-hypercube design of `n` points.
    pub fn latin_hypercube(&self, n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut cols: Vec<Vec<usize>> = (0..d).map(|_| (0..n).collect()).collect();
        for c in &mut cols {
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                c.swap(i, j);
            }
        }
        (0..n)
            .map(|i| {
                (0..d)
                    .map(|k| {
                        let t = (cols[k][i] as f64 + rng.gen::<f64>()) / n as f64;
                        self.lo[k] + t * self.range(k)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Outcome of one objective call as seen by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub f: f64,
    pub penalized: bool,
}

impl Trial {
    pub fn value(f: f64) -> Self {
        Trial { f, penalized: false }
    }
}

/// A point with its objective value. NaN values are stored as `+inf` so that
/// comparisons stay total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x: Vec<f64>,
    pub f: f64,
    pub penalized: bool,
}

impl Individual {
    pub fn new(x: Vec<f64>, trial: Trial) -> Self {
        let f = if trial.f.is_nan() { f64::INFINITY } else { trial.f };
        Individual {
            x,
            f,
            penalized: trial.penalized,
        }
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

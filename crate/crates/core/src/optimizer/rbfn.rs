//! Gaussian radial-basis network fitted by regularized least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{distance, SearchBox};
use crate::error::{Error, Result};

pub const RBFN_LAMBDA: f64 = 1e-7;

/// Relative distance (to the box diagonal) below which two centers coincide.
const DUPLICATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub centers: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub radius: f64,
    pub lambda: f64,
}

/// `d_max / (D N)^(1/D)`.
pub fn rbfn_radius(bx: &SearchBox, n: usize) -> f64 {
    let d = bx.dim() as f64;
    bx.diagonal() / (d * n as f64).powf(1.0 / d)
}

fn basis(x: &[f64], c: &[f64], r: f64) -> f64 {
    let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
    (-d2 / r).exp()
}

/// Solves `(B^T B + lambda I) w = B^T y` with `B_ij = b_j(c_i)`.
pub fn rbfn_fit(bx: &SearchBox, centers: &[Vec<f64>], values: &[f64], lambda: f64) -> Result<Surrogate> {
    let n = centers.len();
    if n == 0 || n != values.len() {
        return Err(Error::Fit(format!("{n} centers for {} values", values.len())));
    }
    let tol = DUPLICATE_TOL * bx.diagonal();
    for i in 0..n {
        for j in 0..i {
            if distance(&centers[i], &centers[j]) <= tol {
                return Err(Error::Fit(format!("centers {j} and {i} coincide")));
            }
        }
    }
    let radius = rbfn_radius(bx, n);
    let b = DMatrix::from_fn(n, n, |i, j| basis(&centers[i], &centers[j], radius));
    let y = DVector::from_column_slice(values);
    let mut a = b.transpose() * &b;
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    let rhs = b.transpose() * y;
    let w = match a.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Fit("singular regularized system".into()))?,
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite weights".into()));
    }
    Ok(Surrogate {
        centers: centers.to_vec(),
        values: values.to_vec(),
        weights: w.iter().copied().collect(),
        radius,
        lambda,
    })
}

pub fn rbfn_eval(s: &Surrogate, x: &[f64]) -> f64 {
    s.centers
        .iter()
        .zip(&s.weights)
        .map(|(c, w)| w * basis(x, c, s.radius))
        .sum()
}

impl Surrogate {
    pub fn eval(&self, x: &[f64]) -> f64 {
        rbfn_eval(self, x)
    }
}

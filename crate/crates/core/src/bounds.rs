//! Poisson approximation bounds assembled from coupling expectations or from
//! first and second moments.

use serde::Serialize;

use crate::coupling::Monotonicity;
use crate::error::{Error, Result};

/// `min{1, λ} · E|W̃ − 1 − W|`, a total variation bound for one indicator sum.
pub fn bound_univariate_tv(lambda: f64, diag_term: f64) -> f64 {
    lambda.min(1.0) * diag_term
}

/// `Σ_i min{1,λ_i} D_i + 2 Σ_{i≥1} λ_i Σ_{j<i} C_{ij}` with `D_i` the
/// diagonal and `C_{ij}` the cross expectations of a size-biased coupling.
pub fn bound_t1(lambda: &[f64], diag: &[f64], cross: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (i, &l) in lambda.iter().enumerate() {
        total += l.min(1.0) * diag[i];
        if i > 0 {
            total += 2.0 * l * cross[i][..i].iter().sum::<f64>();
        }
    }
    total
}

/// A moment bound evaluated in two forms.
///
/// `value` weights the covariance part by `2 λ_i^{-1}`. Substituting the
/// coupling identities `λ_i E(W̃^i_j − W_j) = Cov(W_i, W_j)` into
/// [`bound_t1`] gives weight `2` instead; that is `value_coupling`. The two
/// agree whenever every covariance vanishes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentBound {
    pub monotonicity: Monotonicity,
    /// Diagonal contributions, already multiplied by `min{1, λ_i^{-1}}`.
    pub diag: Vec<f64>,
    /// Covariance part with weights `2 λ_i^{-1}`.
    pub cross: f64,
    /// Covariance part with weight `2`.
    pub cross_coupling: f64,
    pub value: f64,
    pub value_coupling: f64,
    /// Set when `value` is negative, which means the monotonicity
    /// hypothesis does not hold for the inputs.
    pub negative: bool,
}

fn check_shapes(lambda: &[f64], var: &[f64], cov: &[Vec<f64>]) -> Result<()> {
    let d = lambda.len();
    if d == 0 || var.len() != d || cov.len() != d {
        return Err(Error::param("moment vectors of inconsistent length"));
    }
    if let Some(l) = lambda.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::param(format!("intensity must be positive, got {l}")));
    }
    for (i, row) in cov.iter().enumerate() {
        if row.len() < i {
            return Err(Error::param(format!("covariance row {i} is too short")));
        }
    }
    Ok(())
}

fn assemble(
    monotonicity: Monotonicity,
    lambda: &[f64],
    diag: Vec<f64>,
    cov: &[Vec<f64>],
    sign: f64,
) -> MomentBound {
    let mut cross = 0.0;
    let mut cross_coupling = 0.0;
    for (i, &l) in lambda.iter().enumerate().skip(1) {
        let s: f64 = cov[i][..i].iter().sum();
        cross += sign * 2.0 * s / l;
        cross_coupling += sign * 2.0 * s;
    }
    let d: f64 = diag.iter().sum();
    let value = d + cross;
    MomentBound {
        monotonicity,
        diag,
        cross,
        cross_coupling,
        value,
        value_coupling: d + cross_coupling,
        negative: value < 0.0,
    }
}

/// Bound for an increasing coupling:
/// `Σ min{1,λ_i^{-1}} (Var_i − λ_i + 2 S_i) + 2 Σ_{i≥1} λ_i^{-1} Σ_{j<i} Cov_{ij}`
/// where `S_i = Σ_j p_{i,j}²`.
pub fn bound_i1(
    lambda: &[f64],
    var: &[f64],
    cov: &[Vec<f64>],
    square_sums: &[f64],
) -> Result<MomentBound> {
    check_shapes(lambda, var, cov)?;
    if square_sums.len() != lambda.len() {
        return Err(Error::param("one square sum per block is required"));
    }
    let diag = lambda
        .iter()
        .zip(var)
        .zip(square_sums)
        .map(|((&l, &v), &s)| (1.0 / l).min(1.0) * (v - l + 2.0 * s))
        .collect();
    Ok(assemble(Monotonicity::Increasing, lambda, diag, cov, 1.0))
}

/// `Σ_j p_{i,j}²` for every block of a probability table.
pub fn square_sums(p: &[Vec<f64>]) -> Vec<f64> {
    p.iter()
        .map(|row| row.iter().map(|x| x * x).sum())
        .collect()
}

/// Bound for a decreasing coupling:
/// `Σ min{1,λ_i^{-1}} (λ_i − Var_i) − 2 Σ_{i≥1} λ_i^{-1} Σ_{j<i} Cov_{ij}`.
pub fn bound_dd(lambda: &[f64], var: &[f64], cov: &[Vec<f64>]) -> Result<MomentBound> {
    check_shapes(lambda, var, cov)?;
    let diag = lambda
        .iter()
        .zip(var)
        .map(|(&l, &v)| (1.0 / l).min(1.0) * (l - v))
        .collect();
    Ok(assemble(Monotonicity::Decreasing, lambda, diag, cov, -1.0))
}

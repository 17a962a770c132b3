//! Exact first and second moments of joint subgraph counts in `G(n, p)` and
//! the graph-side Poisson approximation bounds built from them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bounds::{bound_i1, MomentBound};
use crate::error::{Error, Result};
use crate::pattern::{
    density_and_balance, gamma_eta, gamma_subgraph, overlap_table, OverlapTable, PatternGraph,
    SharedEdgeStats,
};
use crate::stats::binomial;

/// `G(n, p)` together with the patterns whose copies are counted.
#[derive(Clone, Debug, Serialize)]
pub struct GraphEnsembleSpec {
    pub n: u64,
    pub p: f64,
    pub patterns: Vec<PatternGraph>,
}

impl GraphEnsembleSpec {
    pub fn new(n: u64, p: f64, patterns: Vec<PatternGraph>) -> Result<Self> {
        check_p(p)?;
        if patterns.is_empty() {
            return Err(Error::param("at least one pattern is required"));
        }
        for (i, h) in patterns.iter().enumerate() {
            if h.v() as u64 > n {
                return Err(Error::param(format!(
                    "pattern {h} has more than n = {n} vertices"
                )));
            }
            if let Some(g) = patterns[..i].iter().find(|g| g.is_isomorphic(h)) {
                return Err(Error::param(format!("patterns {g} and {h} are isomorphic")));
            }
        }
        Ok(GraphEnsembleSpec { n, p, patterns })
    }

    /// The scaling `p = c n^{-1/alpha}`.
    pub fn on_path(n: u64, c: f64, alpha: f64, patterns: Vec<PatternGraph>) -> Result<Self> {
        Self::new(n, path_p(n, c, alpha)?, patterns)
    }

    pub fn dim(&self) -> usize {
        self.patterns.len()
    }
}

/// `c n^{-1/alpha}`.
pub fn path_p(n: u64, c: f64, alpha: f64) -> Result<f64> {
    if !(c > 0.0 && alpha > 0.0) {
        return Err(Error::param("c and alpha must be positive"));
    }
    let p = c * (n as f64).powf(-1.0 / alpha);
    check_p(p)?;
    Ok(p)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!(
            "edge probability must lie in (0,1), got {p}"
        )));
    }
    Ok(())
}

/// Patterns with the overlap tables of every pair, computed once.
#[derive(Clone, Debug)]
pub struct PatternSet {
    patterns: Vec<PatternGraph>,
    /// `tables[i][j]` for `j ≤ i`, the table of `(H_i, H_j)`.
    tables: Vec<Vec<OverlapTable>>,
}

impl PatternSet {
    pub fn new(patterns: &[PatternGraph]) -> Result<Self> {
        let mut tables = Vec::with_capacity(patterns.len());
        for i in 0..patterns.len() {
            let row = (0..=i)
                .map(|j| overlap_table(&patterns[i], &patterns[j]))
                .collect::<Result<Vec<_>>>()?;
            tables.push(row);
        }
        Ok(PatternSet {
            patterns: patterns.to_vec(),
            tables,
        })
    }

    pub fn patterns(&self) -> &[PatternGraph] {
        &self.patterns
    }

    /// Table for `(H_i, H_j)` with `j ≤ i`.
    pub fn table(&self, i: usize, j: usize) -> &OverlapTable {
        &self.tables[i][j]
    }

    /// Shared-edge statistics of distinct copies of `H_i` and `H_j`, `j ≤ i`.
    pub fn stats(&self, i: usize, j: usize) -> SharedEdgeStats {
        self.tables[i][j].shared_edge_stats(false)
    }
}

/// `E W = C(n, v) (v!/a) p^e`.
pub fn expected_count(h: &PatternGraph, n: u64, p: f64) -> f64 {
    h.copies_in_complete(n) * p.powi(h.e() as i32)
}

/// `Cov(W_i, W_j) = Σ_{k ≥ 1, s ≤ n} C(n, s) N_{k,s} p^{e_i + e_j − k} (1 − p^k)`;
/// with `H_i = H_j` this is the variance.
pub fn exact_cov(
    hi: &PatternGraph,
    hj: &PatternGraph,
    n: u64,
    p: f64,
    table: &OverlapTable,
) -> Result<f64> {
    if table.v != (hi.v(), hj.v())
        || table.e != (hi.e(), hj.e())
        || table.same_pattern != (hi == hj)
    {
        return Err(Error::param(format!(
            "overlap table of ({}, {}) does not match ({hi}, {hj})",
            table.first, table.second
        )));
    }
    let e = (hi.e() + hj.e()) as i32;
    let ln_p = p.ln();
    let mut total = 0.0;
    for (&(k, s), &count) in &table.entries {
        if k == 0 || s as u64 > n || count == 0 {
            continue;
        }
        let k = k as i32;
        total += binomial(n, s as u64) * count as f64 * p.powi(e - k) * -(k as f64 * ln_p).exp_m1();
    }
    Ok(total)
}

/// Means, variances and the strict lower triangle of covariances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSet {
    pub lambda: Vec<f64>,
    pub variance: Vec<f64>,
    /// `cov[i][j]` for `j < i`.
    pub cov: Vec<Vec<f64>>,
}

pub fn moments(spec: &GraphEnsembleSpec, set: &PatternSet) -> Result<MomentSet> {
    if set.patterns() != spec.patterns.as_slice() {
        return Err(Error::param("pattern set does not match the ensemble"));
    }
    let d = spec.dim();
    let mut lambda = Vec::with_capacity(d);
    let mut variance = Vec::with_capacity(d);
    let mut cov = Vec::with_capacity(d);
    for i in 0..d {
        let hi = &spec.patterns[i];
        lambda.push(expected_count(hi, spec.n, spec.p));
        variance.push(exact_cov(hi, hi, spec.n, spec.p, set.table(i, i))?);
        let row = (0..i)
            .map(|j| exact_cov(hi, &spec.patterns[j], spec.n, spec.p, set.table(i, j)))
            .collect::<Result<Vec<_>>>()?;
        cov.push(row);
    }
    Ok(MomentSet {
        lambda,
        variance,
        cov,
    })
}

/// The moment bound for subgraph counts: the increasing-coupling bound with
/// `Σ_j p_{i,j}² = λ_i p^{e_i}`.
pub fn bound_t4(spec: &GraphEnsembleSpec, m: &MomentSet) -> Result<MomentBound> {
    let sq: Vec<f64> = spec
        .patterns
        .iter()
        .zip(&m.lambda)
        .map(|(h, &l)| l * spec.p.powi(h.e() as i32))
        .collect();
    bound_i1(&m.lambda, &m.variance, &m.cov, &sq)
}

/// `λ (p^e + Σ_{H' ⊊ H, e' > 0} |Γ^{H',α}| p^{e − e'})`, an upper bound for
/// `Var W − λ + 2λp^e`. The counts come from anchoring `α` on `[v]` and
/// placing the remaining `s − v` vertices of a partner among the `n − v`
/// outside vertices.
pub fn variance_upper_c4a(h: &PatternGraph, n: u64, p: f64) -> Result<f64> {
    check_p(p)?;
    let table = overlap_table(h, h)?;
    let e = h.e();
    let v = h.v() as u64;
    let mut sum = 0.0;
    for (&(k, s), &count) in &table.anchored {
        if k == 0 || k >= e || (s as u64) > n {
            continue;
        }
        sum += count as f64 * binomial(n - v, s as u64 - v) * p.powi((e - k) as i32);
    }
    let pe = p.powi(e as i32);
    Ok(expected_count(h, n, p) * (pe + sum))
}

/// The bracket of the explicit graph bound, without its unspecified constant:
/// `Σ_i min{1,λ_i} (p^{e_i} + n^{v_i − γ_i} p^{e_i}) + Σ_{i} Σ_{j<i} λ_j Σ_{k∈𝒦_{i,j}} p^{-k} n^{-ℓ_k}`
/// with `γ_i` the subgraph exponent at `alpha = d_{H_i}`.
#[derive(Clone, Debug, Serialize)]
pub struct Bracket {
    pub diag: Vec<f64>,
    pub cross: f64,
    pub total: f64,
    pub gamma: Vec<f64>,
    /// Set when `n < v_i + v_j` for some pair, below the range where the
    /// pair counting behind the bracket applies.
    pub out_of_model: bool,
}

pub fn corollary_t5_bracket(
    spec: &GraphEnsembleSpec,
    set: &PatternSet,
    lambda: &[f64],
) -> Result<Bracket> {
    let n = spec.n as f64;
    let p = spec.p;
    let mut diag = Vec::new();
    let mut gamma = Vec::new();
    for (h, &l) in spec.patterns.iter().zip(lambda) {
        let g = gamma_subgraph(h, h.density())?;
        let pe = p.powi(h.e() as i32);
        // With no proper subgraph (γ = ∞) the second term vanishes.
        let inner = if g.is_finite() {
            n.powf(h.v() as f64 - g) * pe
        } else {
            0.0
        };
        diag.push(l.min(1.0) * (pe + inner));
        gamma.push(g);
    }
    let mut cross = 0.0;
    let mut out_of_model = false;
    for i in 1..spec.dim() {
        for j in 0..i {
            if spec.n < (spec.patterns[i].v() + spec.patterns[j].v()) as u64 {
                out_of_model = true;
            }
            let stats = set.stats(i, j);
            let inner: f64 = stats
                .k_set
                .iter()
                .map(|&k| p.powi(-(k as i32)) * n.powi(-(stats.ell[&k] as i32)))
                .sum();
            cross += lambda[j] * inner;
        }
    }
    Ok(Bracket {
        total: diag.iter().sum::<f64>() + cross,
        diag,
        cross,
        gamma,
        out_of_model,
    })
}

/// Exponents of `n` in `p^{-k} n^{-ℓ_k}` after substituting `p = n^{-1/alpha}`.
#[derive(Clone, Debug, Serialize)]
pub struct LrExponents {
    /// `k ↦ k/alpha − ℓ_k`.
    pub per_k: BTreeMap<usize, f64>,
    /// Largest exponent; `−∞` when no overlap is possible.
    pub dominant: f64,
}

pub fn lr_exponents(stats: &SharedEdgeStats, alpha: f64) -> Result<LrExponents> {
    if !(alpha > 0.0) {
        return Err(Error::param(format!("alpha must be positive, got {alpha}")));
    }
    let per_k: BTreeMap<usize, f64> = stats
        .k_set
        .iter()
        .map(|&k| (k, k as f64 / alpha - stats.ell[&k] as f64))
        .collect();
    let dominant = per_k.values().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(LrExponents { per_k, dominant })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `d_H < alpha`: the count grows and concentrates.
    Subcritical,
    /// `d_H = alpha`: the mean converges to `c^{alpha v}/a`.
    Critical,
    /// `d_H > alpha`: copies disappear.
    Supercritical,
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternRegime {
    pub pattern: String,
    pub density: f64,
    pub strictly_balanced: bool,
    pub regime: Regime,
    pub lambda: f64,
    /// `c^{alpha v}/a` for critical patterns.
    pub lambda_limit: Option<f64>,
    pub gamma_subgraph: f64,
    /// Concentration exponent for subcritical patterns (overlaps including
    /// a copy with itself).
    pub gamma_overlap_full: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct T5bReport {
    pub n: u64,
    pub c: f64,
    pub alpha: f64,
    pub p: f64,
    pub patterns: Vec<PatternRegime>,
    /// Predicted rate exponent of the critical block: the least
    /// `gamma_subgraph(H_i, alpha)` over critical patterns.
    pub gamma: Option<f64>,
    pub warnings: Vec<String>,
}

/// Classifies each pattern at `p = c n^{-1/alpha}`.
pub fn t5b_report(patterns: &[PatternGraph], c: f64, alpha: f64, n: u64) -> Result<T5bReport> {
    let p = path_p(n, c, alpha)?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for h in patterns {
        let balance = density_and_balance(h)?;
        if !balance.strictly_balanced {
            warnings.push(format!(
                "{h} is not strictly balanced; the regime exponents below are not rate guarantees"
            ));
        }
        let ge = gamma_eta(h, alpha)?;
        let d = h.density();
        let regime = if (d - alpha).abs() <= 1e-12 * alpha.max(1.0) {
            Regime::Critical
        } else if d < alpha {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        };
        let lambda_limit = (regime == Regime::Critical)
            .then(|| c.powf(alpha * h.v() as f64) / h.automorphism_count() as f64);
        rows.push(PatternRegime {
            pattern: h.name().to_string(),
            density: d,
            strictly_balanced: balance.strictly_balanced,
            regime,
            lambda: expected_count(h, n, p),
            lambda_limit,
            gamma_subgraph: ge.gamma_subgraph,
            gamma_overlap_full: ge.gamma_overlap_full,
            eta: ge.eta,
        });
    }
    let gamma = rows
        .iter()
        .filter(|r| r.regime == Regime::Critical)
        .map(|r| r.gamma_subgraph)
        .reduce(f64::min);
    Ok(T5bReport {
        n,
        c,
        alpha,
        p,
        patterns: rows,
        gamma,
        warnings,
    })
}

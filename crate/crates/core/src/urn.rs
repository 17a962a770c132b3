//! The multivariate hypergeometric urn: exact law and moments, the Poisson
//! bound for its decreasing coupling, and the coupling itself.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::bound_dd;
use crate::coupling::{
    construct_coupling, mc_bound_terms, trial_rng, BoundReport, CoupledOutcome, CouplingRun,
    ExhaustiveModel, IndicatorSumModel, Monotonicity, SimRng, EXHAUSTIVE_STATE_CAP, INDEX_LAW_CAP,
};
use crate::error::{Error, Result};
use crate::lattice::{
    distance_to_poisson, LatticeDistribution, PoissonDistance, DEFAULT_TRANSPORT_CAP,
};
use crate::moments::MomentSet;
use crate::stats::{binomial, ln_binomial};

/// `N` balls, `n_i` of color `i`, `m` drawn without replacement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "UrnWire", into = "UrnWire")]
pub struct UrnSpec {
    total: u64,
    colors: Vec<u64>,
    m: u64,
}

#[derive(Serialize, Deserialize)]
struct UrnWire {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    total: Option<u64>,
    n: Vec<u64>,
    m: u64,
}

impl TryFrom<UrnWire> for UrnSpec {
    type Error = Error;
    fn try_from(w: UrnWire) -> Result<Self> {
        let spec = UrnSpec::new(w.n, w.m)?;
        if let Some(total) = w.total {
            if total != spec.total {
                return Err(Error::param(format!(
                    "N = {total} but the colors add up to {}",
                    spec.total
                )));
            }
        }
        Ok(spec)
    }
}

impl From<UrnSpec> for UrnWire {
    fn from(u: UrnSpec) -> Self {
        UrnWire {
            total: Some(u.total),
            n: u.colors,
            m: u.m,
        }
    }
}

impl UrnSpec {
    pub fn new(colors: Vec<u64>, m: u64) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::param("an urn needs at least one color"));
        }
        if let Some(pos) = colors.iter().position(|&c| c == 0) {
            return Err(Error::param(format!("color {} has no balls", pos + 1)));
        }
        let total = colors
            .iter()
            .try_fold(0u64, |a, &c| a.checked_add(c))
            .ok_or_else(|| Error::param("ball count overflows"))?;
        if m == 0 || m > total {
            return Err(Error::param(format!(
                "draw size must lie in 1..={total}, got {m}"
            )));
        }
        Ok(UrnSpec { total, colors, m })
    }

    /// Like [`UrnSpec::new`], also checking a stated total.
    pub fn with_total(total: u64, colors: Vec<u64>, m: u64) -> Result<Self> {
        UrnSpec::try_from(UrnWire {
            total: Some(total),
            n: colors,
            m,
        })
    }

    /// `N`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// `(n_1, …, n_d)`.
    pub fn colors(&self) -> &[u64] {
        &self.colors
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.colors.len()
    }

    /// `λ_i = m n_i / N`.
    pub fn lambda(&self) -> Vec<f64> {
        self.colors
            .iter()
            .map(|&c| self.m as f64 * c as f64 / self.total as f64)
            .collect()
    }

    /// Color of ball `b`, with colors laid out in consecutive ranges.
    fn color_of(&self, ball: u64) -> usize {
        let mut acc = 0;
        for (i, &c) in self.colors.iter().enumerate() {
            acc += c;
            if ball < acc {
                return i;
            }
        }
        unreachable!("ball {ball} beyond the urn")
    }

    fn offset(&self, i: usize) -> u64 {
        self.colors[..i].iter().sum()
    }

    fn color_counts(&self, balls: &[u64]) -> Vec<u64> {
        let mut out = vec![0; self.dim()];
        for &b in balls {
            out[self.color_of(b)] += 1;
        }
        out
    }
}

/// Every `k` with `Σ k_i = m` and `0 ≤ k_i ≤ n_i`.
fn compositions(colors: &[u64], m: u64) -> Vec<Vec<u64>> {
    fn rec(
        colors: &[u64],
        left: u64,
        suffix_cap: &[u64],
        cur: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        let i = cur.len();
        if i == colors.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let lo = left.saturating_sub(suffix_cap[i + 1]);
        for k in lo..=colors[i].min(left) {
            cur.push(k);
            rec(colors, left - k, suffix_cap, cur, out);
            cur.pop();
        }
    }
    let mut suffix_cap = vec![0u64; colors.len() + 1];
    for i in (0..colors.len()).rev() {
        suffix_cap[i] = suffix_cap[i + 1] + colors[i];
    }
    let mut out = Vec::new();
    rec(
        colors,
        m,
        &suffix_cap,
        &mut Vec::with_capacity(colors.len()),
        &mut out,
    );
    out
}

/// `P(W = k) = Π C(n_i, k_i) / C(N, m)`, in log space once `N > 60`.
pub fn exact_pmf(urn: &UrnSpec) -> Result<LatticeDistribution> {
    let support: u128 = urn
        .colors
        .iter()
        .map(|&c| c.min(urn.m) as u128 + 1)
        .try_fold(1u128, |a, b| a.checked_mul(b))
        .unwrap_or(u128::MAX);
    if support > INDEX_LAW_CAP {
        return Err(Error::resource(
            "hypergeometric support bound",
            support,
            INDEX_LAW_CAP,
        ));
    }
    let points = compositions(&urn.colors, urn.m);
    let mass: Box<dyn Fn(&[u64]) -> f64> = if urn.total <= 60 {
        let denom = binomial(urn.total, urn.m);
        Box::new(move |k| {
            k.iter()
                .zip(&urn.colors)
                .map(|(&k, &n)| binomial(n, k))
                .product::<f64>()
                / denom
        })
    } else {
        let denom = ln_binomial(urn.total, urn.m);
        Box::new(move |k| {
            (k.iter()
                .zip(&urn.colors)
                .map(|(&k, &n)| ln_binomial(n, k))
                .sum::<f64>()
                - denom)
                .exp()
        })
    };
    let atoms: Vec<(Vec<u64>, f64)> = points
        .into_iter()
        .map(|k| {
            let p = mass(&k);
            (k, p)
        })
        .collect();
    LatticeDistribution::new(urn.dim(), atoms)
}

/// `λ_i = m n_i/N`, `Var W_i = m n_i (N−n_i)(N−m)/(N²(N−1))` and
/// `Cov(W_i, W_j) = −m n_i n_j (N−m)/(N²(N−1))`; both vanish when `N = 1`.
pub fn moments(urn: &UrnSpec) -> MomentSet {
    let (big_n, m) = (urn.total as f64, urn.m as f64);
    let scale = if urn.total > 1 {
        m * (big_n - m) / (big_n * big_n * (big_n - 1.0))
    } else {
        0.0
    };
    let n: Vec<f64> = urn.colors.iter().map(|&c| c as f64).collect();
    MomentSet {
        lambda: urn.lambda(),
        variance: n.iter().map(|&ni| scale * ni * (big_n - ni)).collect(),
        cov: (0..n.len())
            .map(|i| (0..i).map(|j| -scale * n[i] * n[j]).collect())
            .collect(),
    }
}

/// The urn bound with a per-term breakdown.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UrnBound {
    /// `min{1, m n_i/N} (1 − (N−n_i)(N−m)/(N(N−1)))`.
    pub diag_terms: Vec<f64>,
    /// `2(N−m)/(N(N−1)) Σ_{i≥2} Σ_{j<i} n_j`.
    pub cross: f64,
    /// The same group written as `2(N−m)/(m(N−1)) Σ_{i≥2} Σ_{j<i} λ_j`.
    pub cross_intensity_form: f64,
    /// Cross group obtained by putting the exact coupling expectations into
    /// the general coupling bound, `−2 Σ Cov(W_i, W_j)`.
    pub cross_coupling: f64,
    pub value: f64,
    pub value_coupling: f64,
    /// `m = N`: the draw is deterministic and the bound says nothing.
    pub vacuous: bool,
}

pub fn theorem_bound_urn(urn: &UrnSpec) -> Result<UrnBound> {
    let (big_n, m) = (urn.total as f64, urn.m as f64);
    let lambda = urn.lambda();
    let shrink = |ni: f64| {
        if urn.total > 1 {
            (big_n - ni) * (big_n - m) / (big_n * (big_n - 1.0))
        } else {
            0.0
        }
    };
    let diag_terms: Vec<f64> = urn
        .colors
        .iter()
        .zip(&lambda)
        .map(|(&ni, &l)| l.min(1.0) * (1.0 - shrink(ni as f64)))
        .collect();
    let (mut prefix_n, mut prefix_lambda) = (0.0, 0.0);
    let (mut sum_n, mut sum_lambda) = (0.0, 0.0);
    for i in 1..urn.dim() {
        prefix_n += urn.colors[i - 1] as f64;
        prefix_lambda += lambda[i - 1];
        sum_n += prefix_n;
        sum_lambda += prefix_lambda;
    }
    let (cross, cross_intensity_form) = if urn.total > 1 {
        (
            2.0 * (big_n - m) / (big_n * (big_n - 1.0)) * sum_n,
            2.0 * (big_n - m) / (m * (big_n - 1.0)) * sum_lambda,
        )
    } else {
        (0.0, 0.0)
    };
    if (cross - cross_intensity_form).abs() > 1e-12 * cross.abs().max(1.0) {
        return Err(Error::Invariant(format!(
            "cross group {cross} differs from its intensity form {cross_intensity_form}"
        )));
    }
    let mom = moments(urn);
    let cross_coupling = -2.0 * mom.cov.iter().flatten().sum::<f64>();
    let diag: f64 = diag_terms.iter().sum();
    Ok(UrnBound {
        value: diag + cross,
        value_coupling: diag + cross_coupling,
        diag_terms,
        cross,
        cross_intensity_form,
        cross_coupling,
        vacuous: urn.m == urn.total,
    })
}

/// The decreasing moment bound fed with the urn moments; agrees with
/// [`theorem_bound_urn`] in both forms.
pub fn moment_bound_urn(urn: &UrnSpec) -> Result<crate::bounds::MomentBound> {
    let m = moments(urn);
    bound_dd(&m.lambda, &m.variance, &m.cov)
}

/// One draw of the color counts by sequential draws without replacement.
pub fn sample_urn(urn: &UrnSpec, seed: u64) -> Vec<u64> {
    sample_urn_with(urn, &mut trial_rng(seed, 0))
}

pub(crate) fn sample_urn_with(urn: &UrnSpec, rng: &mut SimRng) -> Vec<u64> {
    let mut left = urn.colors.clone();
    let mut remaining = urn.total;
    let mut out = vec![0; urn.dim()];
    for _ in 0..urn.m {
        let mut u = rng.random_range(0..remaining);
        let mut color = 0;
        while u >= left[color] {
            u -= left[color];
            color += 1;
        }
        left[color] -= 1;
        out[color] += 1;
        remaining -= 1;
    }
    out
}

/// `trials` independent draws; trial `t` uses [`trial_rng`]`(seed, t)`.
pub fn sample_urn_many(urn: &UrnSpec, trials: u64, seed: u64) -> Vec<Vec<u64>> {
    (0..trials)
        .into_par_iter()
        .map(|t| sample_urn_with(urn, &mut trial_rng(seed, t)))
        .collect()
}

/// Indicators `X^i_j` = ball `j` of color `i` is drawn. The coupling picks a
/// uniform ball of color `i`; if it is not in the sample it replaces a ball
/// chosen uniformly among the `m` sampled ones, so no other color ever gains.
#[derive(Clone, Debug)]
pub struct UrnModel {
    urn: UrnSpec,
    lambda: Vec<f64>,
}

impl UrnModel {
    pub fn new(urn: UrnSpec) -> Self {
        let lambda = urn.lambda();
        UrnModel { urn, lambda }
    }

    pub fn urn(&self) -> &UrnSpec {
        &self.urn
    }

    fn check_exhaustive(&self) -> Result<()> {
        let states = self.state_count();
        if states > EXHAUSTIVE_STATE_CAP {
            return Err(Error::resource(
                "exhaustive urn draws",
                states,
                EXHAUSTIVE_STATE_CAP,
            ));
        }
        Ok(())
    }

    fn all_draws(&self) -> Vec<Vec<u64>> {
        fn rec(start: u64, n: u64, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for b in start..=n - left {
                cur.push(b);
                rec(b + 1, n, left - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, self.urn.total, self.urn.m, &mut Vec::new(), &mut out);
        out
    }
}

impl IndicatorSumModel for UrnModel {
    /// The drawn balls.
    type State = Vec<u64>;
    /// A ball label.
    type Index = u64;

    fn dim(&self) -> usize {
        self.urn.dim()
    }

    fn block_size(&self, i: usize) -> u128 {
        self.urn.colors[i] as u128
    }

    fn lambda(&self, i: usize) -> f64 {
        self.lambda[i]
    }

    fn probability(&self, _i: usize, _j: u128) -> f64 {
        self.urn.m as f64 / self.urn.total as f64
    }

    fn sample_state(&self, rng: &mut SimRng) -> Vec<u64> {
        sample_indices(rng, self.urn.total as usize, self.urn.m as usize)
            .into_iter()
            .map(|b| b as u64)
            .collect()
    }

    fn counts(&self, state: &Vec<u64>) -> Vec<u64> {
        self.urn.color_counts(state)
    }

    fn draw_index(&self, i: usize, rng: &mut SimRng) -> u64 {
        self.urn.offset(i) + rng.random_range(0..self.urn.colors[i])
    }

    fn indicator(&self, state: &Vec<u64>, _i: usize, idx: &u64) -> bool {
        state.contains(idx)
    }

    fn coupled_row(
        &self,
        state: &Vec<u64>,
        i: usize,
        idx: &u64,
        rng: &mut SimRng,
    ) -> Result<Vec<u64>> {
        let mut balls = state.clone();
        if !balls.contains(idx) {
            let r = rng.random_range(0..balls.len());
            balls[r] = *idx;
        }
        let mut row = self.urn.color_counts(&balls);
        row.truncate(i + 1);
        Ok(row)
    }
}

impl ExhaustiveModel for UrnModel {
    fn state_count(&self) -> u128 {
        let c = binomial(self.urn.total, self.urn.m);
        if c >= u128::MAX as f64 {
            u128::MAX
        } else {
            c as u128
        }
    }

    fn joint_law(&self) -> Result<Vec<(Vec<u64>, f64)>> {
        self.check_exhaustive()?;
        let draws = self.all_draws();
        let q = 1.0 / draws.len() as f64;
        Ok(draws.into_iter().map(|s| (s, q)).collect())
    }

    fn index_law(&self, i: usize) -> Result<Vec<(u64, f64)>> {
        let q = 1.0 / self.urn.colors[i] as f64;
        let start = self.urn.offset(i);
        Ok((start..start + self.urn.colors[i])
            .map(|b| (b, q))
            .collect())
    }

    fn coupled_outcomes(&self, i: usize, idx: &u64) -> Result<Vec<CoupledOutcome>> {
        self.check_exhaustive()?;
        let draws = self.all_draws();
        let q = 1.0 / draws.len() as f64;
        let mut out = Vec::new();
        for s in draws {
            let w = self.urn.color_counts(&s);
            if s.contains(idx) {
                let row = w[..=i].to_vec();
                out.push(CoupledOutcome {
                    w,
                    row,
                    forced_present: true,
                    prob: q,
                });
                continue;
            }
            let share = q / s.len() as f64;
            for r in 0..s.len() {
                let mut balls = s.clone();
                balls[r] = *idx;
                let mut row = self.urn.color_counts(&balls);
                row.truncate(i + 1);
                out.push(CoupledOutcome {
                    w: w.clone(),
                    row,
                    forced_present: false,
                    prob: share,
                });
            }
        }
        Ok(out)
    }
}

/// One coupled draw for every color.
pub fn urn_coupling(urn: &UrnSpec, seed: u64) -> Result<CouplingRun<u64>> {
    construct_coupling(&UrnModel::new(urn.clone()), seed)
}

/// Monte Carlo coupling expectations; every run is checked for
/// decreasingness.
pub fn mc_urn_terms(urn: &UrnSpec, trials: u64, seed: u64) -> Result<BoundReport> {
    mc_bound_terms(
        &UrnModel::new(urn.clone()),
        trials,
        seed,
        Some(Monotonicity::Decreasing),
    )
}

/// Exact distance between the urn law and the truncated product Poisson law
/// with the same means.
pub fn exact_dw_urn(urn: &UrnSpec, eps_trunc: f64) -> Result<PoissonDistance> {
    distance_to_poisson(
        &exact_pmf(urn)?,
        &urn.lambda(),
        eps_trunc,
        DEFAULT_TRANSPORT_CAP,
    )
}

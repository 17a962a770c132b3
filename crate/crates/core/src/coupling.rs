//! Multivariate size-biased couplings for vectors of indicator sums.
//!
//! A model exposes blocks of indicators `X^i_1, …, X^i_{n_i}` with
//! `W_i = Σ_j X^i_j`. Row `i` of the coupled triangular array is obtained by
//! drawing an index `I_i` with `P(I_i = j) = p_{i,j}/λ_i` and then realizing
//! every indicator of blocks `0..=i` under the conditional law given
//! `X^i_{I_i} = 1`; the last entry counts block `i` without `I_i`, plus one.
//! How that conditional realization is produced is up to the model.

use std::collections::BTreeMap;
use std::fmt::Debug;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::bound_t1;
use crate::error::{Error, Result};
use crate::stats::Running;

/// The generator used for every simulation in the crate.
pub type SimRng = ChaCha8Rng;

/// Independent generator for trial `trial` of an experiment seeded by `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Default cap on the number of joint states an exhaustive computation may
/// enumerate (2^24).
pub const EXHAUSTIVE_STATE_CAP: u128 = 1 << 24;

/// Cap on block sizes for materialized index laws.
pub const INDEX_LAW_CAP: u128 = 10_000_000;

/// A random vector of indicator sums with a size-biased coupling.
pub trait IndicatorSumModel: Sync {
    /// One joint realization of every indicator.
    type State: Clone + Send + Sync;
    /// Identifies one indicator within a block.
    type Index: Clone + Debug + Send + Sync;

    fn dim(&self) -> usize;

    fn block_size(&self, i: usize) -> u128;

    /// `λ_i = E W_i`.
    fn lambda(&self, i: usize) -> f64;

    /// `p_{i,j}` for the `j`-th indicator of block `i` (0-based).
    fn probability(&self, i: usize, j: u128) -> f64;

    fn sample_state(&self, rng: &mut SimRng) -> Self::State;

    /// `(W_1, …, W_d)` for a realization.
    fn counts(&self, state: &Self::State) -> Vec<u64>;

    /// Draws `I_i` with `P(I_i = j) = p_{i,j}/λ_i`.
    fn draw_index(&self, i: usize, rng: &mut SimRng) -> Self::Index;

    /// `X^i_idx` in the given realization.
    fn indicator(&self, state: &Self::State, i: usize, idx: &Self::Index) -> bool;

    /// Row `i` of the coupled array given that `state` is the base realization
    /// and `I_i = idx`. When `state` has the model's law, the indicators used
    /// for the row must have the law of the base indicators conditioned on
    /// `X^i_idx = 1`.
    fn coupled_row(
        &self,
        state: &Self::State,
        i: usize,
        idx: &Self::Index,
        rng: &mut SimRng,
    ) -> Result<Vec<u64>>;

    fn lambdas(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.lambda(i)).collect()
    }
}

/// One point of the exact law of a coupled row.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledOutcome {
    /// Base counts `W`.
    pub w: Vec<u64>,
    /// Coupled row `W̃^i`.
    pub row: Vec<u64>,
    /// Whether `X^i_{I_i} = 1` in the base realization.
    pub forced_present: bool,
    pub prob: f64,
}

/// A model whose joint law and coupling can be enumerated exactly.
pub trait ExhaustiveModel: IndicatorSumModel {
    /// Number of base states that [`Self::joint_law`] enumerates.
    fn state_count(&self) -> u128;

    fn joint_law(&self) -> Result<Vec<(Self::State, f64)>>;

    /// Every index of block `i` with its probability `p_{i,j}/λ_i`.
    fn index_law(&self, i: usize) -> Result<Vec<(Self::Index, f64)>>;

    /// Exact joint law of `(W, W̃^i, X^i_idx)` given `I_i = idx`.
    fn coupled_outcomes(&self, i: usize, idx: &Self::Index) -> Result<Vec<CoupledOutcome>>;
}

/// One draw of `W` together with the whole coupled triangular array.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingRun<I> {
    pub w: Vec<u64>,
    /// Row `i` holds `i + 1` entries (0-based).
    pub w_tilde: Vec<Vec<u64>>,
    pub indices: Vec<I>,
    /// `X^i_{I_i}` in the base realization.
    pub forced_present: Vec<bool>,
}

/// Structural direction of a coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

/// `P(I_i = j) = p_{i,j}/λ_i` for every `j`.
pub fn index_distribution<M: IndicatorSumModel>(model: &M, i: usize) -> Result<Vec<f64>> {
    check_block(model, i)?;
    let n = model.block_size(i);
    if n > INDEX_LAW_CAP {
        return Err(Error::resource("index law entries", n, INDEX_LAW_CAP));
    }
    let lambda = model.lambda(i);
    Ok((0..n).map(|j| model.probability(i, j) / lambda).collect())
}

fn check_block<M: IndicatorSumModel>(model: &M, i: usize) -> Result<()> {
    if i >= model.dim() {
        return Err(Error::param(format!(
            "block {i} out of range for a model of dimension {}",
            model.dim()
        )));
    }
    Ok(())
}

/// Draws one coupling run from the generator.
pub fn coupling_run<M: IndicatorSumModel>(
    model: &M,
    rng: &mut SimRng,
) -> Result<CouplingRun<M::Index>> {
    let state = model.sample_state(rng);
    let w = model.counts(&state);
    let d = model.dim();
    let mut w_tilde = Vec::with_capacity(d);
    let mut indices = Vec::with_capacity(d);
    let mut forced_present = Vec::with_capacity(d);
    for i in 0..d {
        let idx = model.draw_index(i, rng);
        let row = model.coupled_row(&state, i, &idx, rng)?;
        if row.len() != i + 1 {
            return Err(Error::Invariant(format!(
                "coupled row {i} has {} entries",
                row.len()
            )));
        }
        if row[i] == 0 {
            return Err(Error::Invariant(format!(
                "coupled row {i} does not count the forced indicator"
            )));
        }
        forced_present.push(model.indicator(&state, i, &idx));
        indices.push(idx);
        w_tilde.push(row);
    }
    Ok(CouplingRun {
        w,
        w_tilde,
        indices,
        forced_present,
    })
}

/// One coupling run, deterministic in `seed`.
pub fn construct_coupling<M: IndicatorSumModel>(
    model: &M,
    seed: u64,
) -> Result<CouplingRun<M::Index>> {
    coupling_run(model, &mut trial_rng(seed, 0))
}

/// Checks the monotonicity hypothesis on one run, returning a diagnostic on
/// failure.
pub fn check_monotone<I: Debug>(run: &CouplingRun<I>, direction: Monotonicity) -> Result<()> {
    for (i, row) in run.w_tilde.iter().enumerate() {
        let x = run.forced_present[i] as i64;
        let own = row[i] as i64 - 1;
        let base = run.w[i] as i64 - x;
        let ok_own = match direction {
            Monotonicity::Increasing => own >= base,
            Monotonicity::Decreasing => own <= base,
        };
        let ok_cross = row[..i].iter().zip(&run.w).all(|(&t, &w)| match direction {
            Monotonicity::Increasing => t >= w,
            Monotonicity::Decreasing => t <= w,
        });
        if !(ok_own && ok_cross) {
            return Err(Error::Invariant(format!(
                "{direction:?} coupling violated in row {i}: W = {:?}, row = {row:?}, index {:?}",
                run.w, run.indices[i]
            )));
        }
    }
    Ok(())
}

/// Maximum absolute violation of `P(W̃^i = k) = (k_i/λ_i) P(W^i = k)` over
/// all blocks and all reachable `k`, by exact enumeration.
pub fn verify_size_biased_exact<M: ExhaustiveModel>(model: &M) -> Result<f64> {
    let states = model.state_count();
    if states > EXHAUSTIVE_STATE_CAP {
        return Err(Error::resource(
            "exhaustive joint states",
            states,
            EXHAUSTIVE_STATE_CAP,
        ));
    }
    let joint = model.joint_law()?;
    let mut worst: f64 = 0.0;
    for i in 0..model.dim() {
        let lambda = model.lambda(i);
        let mut diff: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        for (state, prob) in &joint {
            let w = model.counts(state);
            let k = w[..=i].to_vec();
            let weight = k[i] as f64 / lambda * prob;
            if weight != 0.0 {
                *diff.entry(k).or_insert(0.0) -= weight;
            }
        }
        for (idx, q) in model.index_law(i)? {
            for out in model.coupled_outcomes(i, &idx)? {
                *diff.entry(out.row).or_insert(0.0) += q * out.prob;
            }
        }
        for v in diff.values() {
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

/// Whether a report comes from exact enumeration or simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

/// Standard errors matching the layout of the terms they describe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermErrors {
    pub diag: Vec<f64>,
    pub cross: Vec<Vec<f64>>,
}

/// The expectations entering the Wasserstein bound, with their combination.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub mode: Mode,
    pub lambda: Vec<f64>,
    /// `E|W̃^i_i − 1 − W_i|`.
    pub diag_terms: Vec<f64>,
    /// `cross_terms[i][j] = E|W̃^i_j − W_j|` for `j < i`.
    pub cross_terms: Vec<Vec<f64>>,
    /// [`bound_t1`] of the stored terms.
    pub total: f64,
    pub stderr: Option<TermErrors>,
    /// `E(W̃^i_i − W_i − 1 + 2 X^i_{I_i})`; for an increasing coupling
    /// `λ_i` times this is `Var W_i − λ_i + 2 Σ_j p_{i,j}²`.
    pub diag_signed: Vec<f64>,
    /// `E(W̃^i_j − W_j)`; `λ_i` times this is `Cov(W_i, W_j)` for any valid
    /// coupling.
    pub cross_signed: Vec<Vec<f64>>,
    pub signed_stderr: Option<TermErrors>,
    pub trials: Option<u64>,
}

impl BoundReport {
    fn assemble(
        mode: Mode,
        lambda: Vec<f64>,
        diag_terms: Vec<f64>,
        cross_terms: Vec<Vec<f64>>,
        diag_signed: Vec<f64>,
        cross_signed: Vec<Vec<f64>>,
    ) -> Self {
        let total = bound_t1(&lambda, &diag_terms, &cross_terms);
        BoundReport {
            mode,
            lambda,
            diag_terms,
            cross_terms,
            total,
            stderr: None,
            diag_signed,
            cross_signed,
            signed_stderr: None,
            trials: None,
        }
    }
}

/// Exact coupling expectations by enumeration.
pub fn exact_bound_terms<M: ExhaustiveModel>(model: &M) -> Result<BoundReport> {
    let states = model.state_count();
    if states > EXHAUSTIVE_STATE_CAP {
        return Err(Error::resource(
            "exhaustive joint states",
            states,
            EXHAUSTIVE_STATE_CAP,
        ));
    }
    let d = model.dim();
    let mut diag = vec![0.0; d];
    let mut diag_signed = vec![0.0; d];
    let mut cross: Vec<Vec<f64>> = (0..d).map(|i| vec![0.0; i]).collect();
    let mut cross_signed = cross.clone();
    for i in 0..d {
        for (idx, q) in model.index_law(i)? {
            for out in model.coupled_outcomes(i, &idx)? {
                let m = q * out.prob;
                let own = out.row[i] as f64 - 1.0 - out.w[i] as f64;
                diag[i] += m * own.abs();
                diag_signed[i] += m * (own + 2.0 * out.forced_present as u8 as f64);
                for j in 0..i {
                    let delta = out.row[j] as f64 - out.w[j] as f64;
                    cross[i][j] += m * delta.abs();
                    cross_signed[i][j] += m * delta;
                }
            }
        }
    }
    Ok(BoundReport::assemble(
        Mode::Exact,
        model.lambdas(),
        diag,
        cross,
        diag_signed,
        cross_signed,
    ))
}

/// Per-trial values, in a fixed layout, for aggregation.
struct TrialTerms {
    abs: Vec<f64>,
    signed: Vec<f64>,
}

fn trial_terms<I>(run: &CouplingRun<I>) -> TrialTerms {
    let mut abs = Vec::new();
    let mut signed = Vec::new();
    for (i, row) in run.w_tilde.iter().enumerate() {
        let own = row[i] as f64 - 1.0 - run.w[i] as f64;
        abs.push(own.abs());
        signed.push(own + 2.0 * run.forced_present[i] as u8 as f64);
        for j in 0..i {
            let delta = row[j] as f64 - run.w[j] as f64;
            abs.push(delta.abs());
            signed.push(delta);
        }
    }
    TrialTerms { abs, signed }
}

fn unflatten(flat: &[f64], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut diag = Vec::with_capacity(d);
    let mut cross = Vec::with_capacity(d);
    let mut pos = 0;
    for i in 0..d {
        diag.push(flat[pos]);
        cross.push(flat[pos + 1..pos + 1 + i].to_vec());
        pos += i + 1;
    }
    (diag, cross)
}

/// Monte Carlo estimates of the coupling expectations. Trial `t` uses
/// [`trial_rng`]`(seed, t)`, so results do not depend on scheduling. When
/// `check` is set, every run is tested for that monotonicity and the first
/// violation aborts with an invariant error.
pub fn mc_bound_terms<M: IndicatorSumModel>(
    model: &M,
    trials: u64,
    seed: u64,
    check: Option<Monotonicity>,
) -> Result<BoundReport> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let per_trial: Vec<TrialTerms> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let run = coupling_run(model, &mut trial_rng(seed, t))?;
            if let Some(direction) = check {
                check_monotone(&run, direction)?;
            }
            Ok(trial_terms(&run))
        })
        .collect::<Result<_>>()?;

    let d = model.dim();
    let width = d * (d + 1) / 2;
    let mut abs = vec![Running::default(); width];
    let mut signed = vec![Running::default(); width];
    for t in &per_trial {
        for k in 0..width {
            abs[k].push(t.abs[k]);
            signed[k].push(t.signed[k]);
        }
    }
    let means = |r: &[Running]| r.iter().map(Running::mean).collect::<Vec<_>>();
    let ses = |r: &[Running]| r.iter().map(Running::stderr).collect::<Vec<_>>();
    let (diag, cross) = unflatten(&means(&abs), d);
    let (diag_signed, cross_signed) = unflatten(&means(&signed), d);
    let (diag_se, cross_se) = unflatten(&ses(&abs), d);
    let (diag_signed_se, cross_signed_se) = unflatten(&ses(&signed), d);
    let mut report = BoundReport::assemble(
        Mode::MonteCarlo,
        model.lambdas(),
        diag,
        cross,
        diag_signed,
        cross_signed,
    );
    report.stderr = Some(TermErrors {
        diag: diag_se,
        cross: cross_se,
    });
    report.signed_stderr = Some(TermErrors {
        diag: diag_signed_se,
        cross: cross_signed_se,
    });
    report.trials = Some(trials);
    Ok(report)
}

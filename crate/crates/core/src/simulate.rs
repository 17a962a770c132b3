//! Monte Carlo engine for `G(n, p)`: sampling, subgraph counting, the
//! edge-adding size-biased coupling, empirical distances to product Poisson
//! laws and rate sweeps.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{
    mc_bound_terms, trial_rng, BoundReport, CoupledOutcome, CouplingRun, ExhaustiveModel,
    IndicatorSumModel, Monotonicity, SimRng, EXHAUSTIVE_STATE_CAP,
};
use crate::error::{Error, Result};
use crate::lattice::{
    optimal_transport, tv_distance, LatticeDistribution, TruncatedPoissonProduct,
    DEFAULT_TRANSPORT_CAP,
};
use crate::moments::{bound_t4, corollary_t5_bracket, moments, GraphEnsembleSpec, PatternSet};
use crate::pattern::{copy_masks, pair_bit, EdgeMask, PatternGraph};
use crate::stats::{loglog_fit, LineFit, Running};

/// A simple graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
    words: usize,
    bits: Vec<u64>,
}

impl SampledGraph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        SampledGraph {
            n,
            adj: vec![Vec::new(); n],
            words,
            bits: vec![0; n * words],
        }
    }

    /// Builds a graph from 0-based edges, ignoring repeats.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = SampledGraph::empty(n);
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::param(format!(
                    "invalid edge {a}-{b} on {n} vertices"
                )));
            }
            g.add_edge(a, b);
        }
        Ok(g)
    }

    /// The complete graph `K_n`.
    pub fn complete(n: usize) -> Self {
        let mut g = SampledGraph::empty(n);
        for b in 1..n {
            for a in 0..b {
                g.add_edge(a, b);
            }
        }
        g
    }

    /// Graph on `n ≤ 16` vertices from an edge mask.
    pub fn from_mask(n: usize, mask: EdgeMask) -> Self {
        let mut g = SampledGraph::empty(n);
        for b in 1..n {
            for a in 0..b {
                if mask & pair_bit(a, b) != 0 {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    /// Adds an edge; returns whether it was new.
    pub fn add_edge(&mut self, a: usize, b: usize) -> bool {
        if self.has_edge(a, b) {
            return false;
        }
        self.bits[a * self.words + b / 64] |= 1 << (b % 64);
        self.bits[b * self.words + a / 64] |= 1 << (a % 64);
        self.adj[a].push(b);
        self.adj[b].push(a);
        true
    }

    pub fn degree(&self, a: usize) -> usize {
        self.adj[a].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sorted 0-based edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(a, nb)| nb.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Debug dump in the pattern edge-list syntax, 1-indexed.
    pub fn to_edge_list(&self) -> String {
        let edges: Vec<String> = self
            .edges()
            .iter()
            .map(|(a, b)| format!("{}-{}", a + 1, b + 1))
            .collect();
        format!("v={}; edges={}", self.n, edges.join(","))
    }
}

/// Each of the `C(n, 2)` edges independently with probability `p`, by
/// geometric skipping over the pair list.
pub fn sample_gnp(n: usize, p: f64, seed: u64) -> Result<SampledGraph> {
    check_gnp(n, p)?;
    Ok(sample_gnp_with(n, p, &mut trial_rng(seed, 0)))
}

fn check_gnp(n: usize, p: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("a graph needs at least one vertex"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!(
            "edge probability must lie in (0,1), got {p}"
        )));
    }
    Ok(())
}

pub(crate) fn sample_gnp_with(n: usize, p: f64, rng: &mut SimRng) -> SampledGraph {
    let mut g = SampledGraph::empty(n);
    let log_q = (-p).ln_1p();
    // Pairs (w, v) with w < v in the order (0,1), (0,2), (1,2), (0,3), ...
    let mut v = 1usize;
    let mut w: i64 = -1;
    while v < n {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        w += 1 + if skip > 1e15 {
            1e15 as i64
        } else {
            skip as i64
        };
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            g.add_edge(w as usize, v);
        }
    }
    g
}

/// Search plan for embedding one pattern: vertices in placement order, each
/// with its already-placed neighbors.
#[derive(Clone, Debug)]
struct EmbedPlan {
    order: Vec<usize>,
    back: Vec<Vec<usize>>,
    degree: Vec<usize>,
    automorphisms: u64,
}

impl EmbedPlan {
    fn new(h: &PatternGraph) -> Self {
        let v = h.v();
        let mut nb = vec![Vec::new(); v];
        for &(a, b) in h.edges() {
            nb[a].push(b);
            nb[b].push(a);
        }
        let degree: Vec<usize> = nb.iter().map(Vec::len).collect();
        let mut placed = vec![false; v];
        let mut order = Vec::with_capacity(v);
        let mut back = Vec::with_capacity(v);
        for _ in 0..v {
            // Most placed neighbors first, then highest degree.
            let next = (0..v)
                .filter(|&x| !placed[x])
                .max_by_key(|&x| {
                    let links = nb[x].iter().filter(|&&y| placed[y]).count();
                    (links, degree[x], std::cmp::Reverse(x))
                })
                .expect("unplaced vertex");
            let pos_of = |y: usize| order.iter().position(|&o| o == y).expect("placed");
            let links: Vec<usize> = nb[next]
                .iter()
                .filter(|&&y| placed[y])
                .map(|&y| pos_of(y))
                .collect();
            placed[next] = true;
            order.push(next);
            back.push(links);
        }
        let degree = order.iter().map(|&x| degree[x]).collect();
        EmbedPlan {
            order,
            back,
            degree,
            automorphisms: h.automorphism_count(),
        }
    }

    fn injections(&self, g: &SampledGraph) -> u64 {
        let mut image = vec![usize::MAX; self.order.len()];
        self.extend(g, &mut image, 0)
    }

    fn extend(&self, g: &SampledGraph, image: &mut [usize], depth: usize) -> u64 {
        if depth == image.len() {
            return 1;
        }
        let links = &self.back[depth];
        let mut total = 0;
        let try_vertex = |x: usize, image: &mut [usize]| -> u64 {
            if g.degree(x) < self.degree[depth] || image[..depth].contains(&x) {
                return 0;
            }
            if links.iter().skip(1).any(|&l| !g.has_edge(image[l], x)) {
                return 0;
            }
            image[depth] = x;
            self.extend(g, image, depth + 1)
        };
        match links.first() {
            Some(&anchor) => {
                for &x in &g.adj[image[anchor]] {
                    total += try_vertex(x, image);
                }
            }
            None => {
                for x in 0..g.n {
                    total += try_vertex(x, image);
                }
            }
        }
        total
    }
}

/// Counts copies of several patterns in one graph.
#[derive(Clone, Debug)]
pub struct CopyCounter {
    plans: Vec<EmbedPlan>,
}

impl CopyCounter {
    pub fn new(patterns: &[PatternGraph]) -> Self {
        CopyCounter {
            plans: patterns.iter().map(EmbedPlan::new).collect(),
        }
    }

    /// Copies of the first `k` patterns.
    pub fn count_prefix(&self, g: &SampledGraph, k: usize) -> Result<Vec<u64>> {
        self.plans[..k]
            .iter()
            .map(|plan| {
                let inj = plan.injections(g);
                if inj % plan.automorphisms != 0 {
                    return Err(Error::Invariant(format!(
                        "{inj} injections are not a multiple of {} automorphisms",
                        plan.automorphisms
                    )));
                }
                Ok(inj / plan.automorphisms)
            })
            .collect()
    }

    pub fn count(&self, g: &SampledGraph) -> Result<Vec<u64>> {
        self.count_prefix(g, self.plans.len())
    }
}

/// `W_i` = injective edge-preserving maps of `H_i` into `G`, divided by `a_{H_i}`.
pub fn count_copies_joint(g: &SampledGraph, patterns: &[PatternGraph]) -> Result<Vec<u64>> {
    if let Some(h) = patterns.iter().find(|h| h.v() > g.n()) {
        return Err(Error::param(format!(
            "pattern {h} has more vertices than the graph"
        )));
    }
    CopyCounter::new(patterns).count(g)
}

/// Subgraph counts in `G(n, p)` with the edge-adding coupling: `I_i` is a
/// uniform copy `α` of `H_i` in `K_n`, and row `i` counts copies of
/// `H_1, …, H_i` in `G ∪ α`. Because `α` is itself a copy in `G ∪ α`, the
/// count of `H_i` there is the count of copies other than `α`, plus one.
#[derive(Clone, Debug)]
pub struct GraphModel {
    spec: GraphEnsembleSpec,
    counter: CopyCounter,
    lambda: Vec<f64>,
    copies: Vec<f64>,
}

impl GraphModel {
    pub fn new(spec: GraphEnsembleSpec) -> Self {
        let counter = CopyCounter::new(&spec.patterns);
        let copies: Vec<f64> = spec
            .patterns
            .iter()
            .map(|h| h.copies_in_complete(spec.n))
            .collect();
        let lambda = spec
            .patterns
            .iter()
            .zip(&copies)
            .map(|(h, &c)| c * spec.p.powi(h.e() as i32))
            .collect();
        GraphModel {
            spec,
            counter,
            lambda,
            copies,
        }
    }

    pub fn spec(&self) -> &GraphEnsembleSpec {
        &self.spec
    }

    fn n(&self) -> usize {
        self.spec.n as usize
    }

    fn edge_pairs(&self) -> usize {
        self.n() * (self.n() - 1) / 2
    }

    /// Copy masks over `[n]` for each pattern; exhaustive mode only.
    fn masks(&self) -> Result<Vec<Vec<EdgeMask>>> {
        self.spec
            .patterns
            .iter()
            .map(|h| copy_masks(h, self.n()))
            .collect()
    }

    fn check_exhaustive(&self) -> Result<()> {
        let states = self.state_count();
        if states > EXHAUSTIVE_STATE_CAP {
            return Err(Error::resource(
                "exhaustive joint states",
                states,
                EXHAUSTIVE_STATE_CAP,
            ));
        }
        Ok(())
    }

    fn mask_prob(&self, mask: EdgeMask) -> f64 {
        let k = mask.count_ones() as i32;
        self.spec.p.powi(k) * (1.0 - self.spec.p).powi(self.edge_pairs() as i32 - k)
    }
}

fn mask_counts(masks: &[Vec<EdgeMask>], g: EdgeMask, k: usize) -> Vec<u64> {
    masks[..k]
        .iter()
        .map(|list| list.iter().filter(|&&c| c & !g == 0).count() as u64)
        .collect()
}

fn edges_to_mask(edges: &[(usize, usize)]) -> EdgeMask {
    edges.iter().fold(0, |m, &(a, b)| m | pair_bit(a, b))
}

impl IndicatorSumModel for GraphModel {
    type State = SampledGraph;
    /// The edges of the chosen copy.
    type Index = Vec<(usize, usize)>;

    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn block_size(&self, i: usize) -> u128 {
        self.copies[i] as u128
    }

    fn lambda(&self, i: usize) -> f64 {
        self.lambda[i]
    }

    fn probability(&self, i: usize, _j: u128) -> f64 {
        self.spec.p.powi(self.spec.patterns[i].e() as i32)
    }

    fn sample_state(&self, rng: &mut SimRng) -> SampledGraph {
        sample_gnp_with(self.n(), self.spec.p, rng)
    }

    fn counts(&self, state: &SampledGraph) -> Vec<u64> {
        self.counter
            .count(state)
            .expect("automorphism divisibility")
    }

    /// A uniform injective placement of the pattern's vertices; every copy is
    /// hit by exactly `a_H` placements, so the copy is uniform.
    fn draw_index(&self, i: usize, rng: &mut SimRng) -> Vec<(usize, usize)> {
        let h = &self.spec.patterns[i];
        let image = sample_indices(rng, self.n(), h.v()).into_vec();
        let mut edges: Vec<(usize, usize)> = h
            .edges()
            .iter()
            .map(|&(a, b)| (image[a].min(image[b]), image[a].max(image[b])))
            .collect();
        edges.sort_unstable();
        edges
    }

    fn indicator(&self, state: &SampledGraph, _i: usize, idx: &Vec<(usize, usize)>) -> bool {
        idx.iter().all(|&(a, b)| state.has_edge(a, b))
    }

    fn coupled_row(
        &self,
        state: &SampledGraph,
        i: usize,
        idx: &Vec<(usize, usize)>,
        _rng: &mut SimRng,
    ) -> Result<Vec<u64>> {
        let mut g = state.clone();
        for &(a, b) in idx {
            g.add_edge(a, b);
        }
        self.counter.count_prefix(&g, i + 1)
    }
}

impl ExhaustiveModel for GraphModel {
    fn state_count(&self) -> u128 {
        1u128 << self.edge_pairs().min(127)
    }

    fn joint_law(&self) -> Result<Vec<(SampledGraph, f64)>> {
        self.check_exhaustive()?;
        Ok(all_masks(self.edge_pairs(), self.n())
            .map(|m| (SampledGraph::from_mask(self.n(), m), self.mask_prob(m)))
            .collect())
    }

    fn index_law(&self, i: usize) -> Result<Vec<(Vec<(usize, usize)>, f64)>> {
        let copies = copy_masks(&self.spec.patterns[i], self.n())?;
        let q = 1.0 / copies.len() as f64;
        Ok(copies
            .into_iter()
            .map(|m| (SampledGraph::from_mask(self.n(), m).edges(), q))
            .collect())
    }

    fn coupled_outcomes(&self, i: usize, idx: &Vec<(usize, usize)>) -> Result<Vec<CoupledOutcome>> {
        self.check_exhaustive()?;
        let masks = self.masks()?;
        let alpha = edges_to_mask(idx);
        let d = self.dim();
        Ok(all_masks(self.edge_pairs(), self.n())
            .map(|g| CoupledOutcome {
                w: mask_counts(&masks, g, d),
                row: mask_counts(&masks, g | alpha, i + 1),
                forced_present: alpha & !g == 0,
                prob: self.mask_prob(g),
            })
            .collect())
    }
}

/// Every edge subset of `K_n`, as masks in the pattern pair layout.
fn all_masks(pairs: usize, n: usize) -> impl Iterator<Item = EdgeMask> {
    let bits: Vec<EdgeMask> = (1..n)
        .flat_map(|b| (0..b).map(move |a| pair_bit(a, b)))
        .collect();
    debug_assert_eq!(bits.len(), pairs);
    (0u64..1u64 << pairs).map(move |sub| {
        let mut m = 0;
        let mut rest = sub;
        while rest != 0 {
            m |= bits[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        m
    })
}

/// Exact joint law of the counts by enumerating all `2^{C(n,2)}` graphs.
pub fn exhaustive_count_law(spec: &GraphEnsembleSpec) -> Result<LatticeDistribution> {
    let model = GraphModel::new(spec.clone());
    model.check_exhaustive()?;
    let masks = model.masks()?;
    let d = spec.dim();
    let pairs = model.edge_pairs();
    let bits: Vec<EdgeMask> = (1..model.n())
        .flat_map(|b| (0..b).map(move |a| pair_bit(a, b)))
        .collect();
    let chunk = 1u64 << pairs.saturating_sub(6);
    let law = (0u64..(1u64 << pairs).div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut local: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
            for sub in c * chunk..((c + 1) * chunk).min(1u64 << pairs) {
                let mut m = 0;
                let mut rest = sub;
                while rest != 0 {
                    m |= bits[rest.trailing_zeros() as usize];
                    rest &= rest - 1;
                }
                *local.entry(mask_counts(&masks, m, d)).or_insert(0.0) += model.mask_prob(m);
            }
            local
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0.0) += v;
            }
            a
        });
    // Renormalize the rounding drift of 2^{C(n,2)} products.
    let total: f64 = law.values().sum();
    LatticeDistribution::new(d, law.into_iter().map(|(k, v)| (k, v / total)))
}

/// One coupling run for the graph model.
pub fn graph_coupling(
    spec: &GraphEnsembleSpec,
    seed: u64,
) -> Result<CouplingRun<Vec<(usize, usize)>>> {
    crate::coupling::construct_coupling(&GraphModel::new(spec.clone()), seed)
}

/// Monte Carlo coupling expectations for subgraph counts; every run is
/// checked for increasingness.
pub fn mc_coupling_terms(spec: &GraphEnsembleSpec, trials: u64, seed: u64) -> Result<BoundReport> {
    mc_bound_terms(
        &GraphModel::new(spec.clone()),
        trials,
        seed,
        Some(Monotonicity::Increasing),
    )
}

/// Count vectors of `trials` independent graphs; trial `t` uses
/// [`trial_rng`]`(seed, t)`.
pub fn sample_counts(spec: &GraphEnsembleSpec, trials: u64, seed: u64) -> Result<Vec<Vec<u64>>> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let counter = CopyCounter::new(&spec.patterns);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            counter.count(&sample_gnp_with(
                spec.n as usize,
                spec.p,
                &mut trial_rng(seed, t),
            ))
        })
        .collect()
}

/// Default number of bootstrap resamples.
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Distances between an empirical law of counts and a truncated product
/// Poisson law.
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalDistance {
    pub lambda: Vec<f64>,
    pub trials: u64,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    pub wasserstein: f64,
    pub total_variation: f64,
    /// Truncation error allowance for `wasserstein`.
    pub budget: f64,
    pub tail_mass: f64,
    pub wasserstein_se: f64,
    pub total_variation_se: f64,
    /// Bootstrap replicates of `wasserstein`.
    #[serde(skip)]
    pub replicates: Vec<f64>,
}

/// Plug-in distances from sampled count vectors, with bootstrap standard
/// errors. Resample `b` draws from [`trial_rng`]`(seed, u64::MAX − b)`.
pub fn empirical_distance(
    samples: &[Vec<u64>],
    lambda: &[f64],
    eps_trunc: f64,
    bootstrap: usize,
    seed: u64,
) -> Result<EmpiricalDistance> {
    let d = lambda.len();
    if samples.is_empty() || samples.iter().any(|s| s.len() != d) {
        return Err(Error::param(
            "samples must be nonempty vectors matching the intensities",
        ));
    }
    let target = TruncatedPoissonProduct::new(lambda, eps_trunc)?;
    let collapsed = target.collapsed()?;
    let distances = |law: &LatticeDistribution| -> Result<(f64, f64)> {
        let plan = optimal_transport(law, &collapsed, DEFAULT_TRANSPORT_CAP)?;
        Ok((plan.cost, tv_distance(law, &collapsed)?))
    };

    let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    for s in samples {
        *counts.entry(s.clone()).or_insert(0) += 1;
    }
    let law = LatticeDistribution::from_counts(d, &counts)?;
    let (wasserstein, total_variation) = distances(&law)?;

    let atoms: Vec<Vec<u64>> = counts.keys().cloned().collect();
    let weights: Vec<u64> = counts.values().copied().collect();
    let trials = samples.len() as u64;
    let reps: Vec<(f64, f64)> = (0..bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut rng = trial_rng(seed, u64::MAX - b as u64);
            let resampled = resample_counts(&weights, trials, &mut rng);
            let counts: BTreeMap<Vec<u64>, u64> = atoms
                .iter()
                .zip(resampled)
                .filter(|x| x.1 > 0)
                .map(|(a, c)| (a.clone(), c))
                .collect();
            distances(&LatticeDistribution::from_counts(d, &counts)?)
        })
        .collect::<Result<_>>()?;
    let w_stats: Running = reps.iter().map(|r| r.0).collect();
    let tv_stats: Running = reps.iter().map(|r| r.1).collect();

    let mut mean = Vec::with_capacity(d);
    let mut mean_se = Vec::with_capacity(d);
    for i in 0..d {
        let r: Running = samples.iter().map(|s| s[i] as f64).collect();
        mean.push(r.mean());
        mean_se.push(r.stderr());
    }
    Ok(EmpiricalDistance {
        lambda: lambda.to_vec(),
        trials,
        mean,
        mean_se,
        wasserstein,
        total_variation,
        budget: target.dw_error_budget,
        tail_mass: target.tail_mass,
        wasserstein_se: w_stats.variance().sqrt(),
        total_variation_se: tv_stats.variance().sqrt(),
        replicates: reps.iter().map(|r| r.0).collect(),
    })
}

/// Multinomial resample of `total` draws from atoms with the given counts.
fn resample_counts(weights: &[u64], total: u64, rng: &mut SimRng) -> Vec<u64> {
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0;
    for &w in weights {
        acc += w;
        cumulative.push(acc);
    }
    let mut out = vec![0u64; weights.len()];
    for _ in 0..total {
        let u = rng.random_range(0..acc);
        let idx = cumulative.partition_point(|&c| c <= u);
        out[idx] += 1;
    }
    out
}

/// Empirical distances of sampled subgraph counts to the product Poisson law
/// with the exact means.
pub fn mc_empirical_distance(
    spec: &GraphEnsembleSpec,
    trials: u64,
    seed: u64,
    eps_trunc: f64,
    bootstrap: usize,
) -> Result<EmpiricalDistance> {
    let model = GraphModel::new(spec.clone());
    let samples = sample_counts(spec, trials, seed)?;
    empirical_distance(&samples, &model.lambdas(), eps_trunc, bootstrap, seed)
}

/// One row of a rate sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    pub lambda: Vec<f64>,
    pub wasserstein: f64,
    pub budget: f64,
    pub wasserstein_se: f64,
    pub total_variation: f64,
    pub bracket: f64,
    pub bound_t4: f64,
    #[serde(skip)]
    pub replicates: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSweepResult {
    pub rows: Vec<SweepRow>,
    /// Log-log fit of the empirical distance against `n`.
    pub distance_fit: Option<LineFit>,
    /// Standard deviation of the slope across bootstrap replicates.
    pub distance_slope_bootstrap_se: Option<f64>,
    pub bracket_fit: Option<LineFit>,
    pub warnings: Vec<String>,
}

/// Seed used for the sweep point at `n`.
pub fn sweep_seed(seed: u64, n: u64) -> u64 {
    seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Empirical distance, bracket and moment bound along `p = c n^{-1/alpha}`.
pub fn rate_sweep(
    patterns: &[PatternGraph],
    c: f64,
    alpha: f64,
    n_list: &[u64],
    trials: u64,
    seed: u64,
    eps_trunc: f64,
) -> Result<RateSweepResult> {
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let set = PatternSet::new(patterns)?;
    let mut warnings = Vec::new();
    for h in patterns {
        if (h.density() - alpha).abs() > 1e-12 * alpha.max(1.0) {
            warnings.push(format!(
                "{h} has density {} and is not critical at alpha = {alpha}",
                h.density()
            ));
        }
    }
    if ns.len() < 3 {
        warnings.push("fewer than three values of n; no slope is fitted".into());
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let spec = GraphEnsembleSpec::on_path(n, c, alpha, patterns.to_vec())?;
        let m = moments(&spec, &set)?;
        let bracket = corollary_t5_bracket(&spec, &set, &m.lambda)?;
        let bound = bound_t4(&spec, &m)?;
        let s = sweep_seed(seed, n);
        let dist = mc_empirical_distance(&spec, trials, s, eps_trunc, DEFAULT_BOOTSTRAP)?;
        rows.push(SweepRow {
            n,
            p: spec.p,
            trials,
            seed: s,
            lambda: m.lambda,
            wasserstein: dist.wasserstein,
            budget: dist.budget,
            wasserstein_se: dist.wasserstein_se,
            total_variation: dist.total_variation,
            bracket: bracket.total,
            bound_t4: bound.value,
            replicates: dist.replicates,
        });
    }
    let (mut distance_fit, mut distance_slope_bootstrap_se, mut bracket_fit) = (None, None, None);
    if rows.len() >= 3 {
        let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.wasserstein).collect();
        let b: Vec<f64> = rows.iter().map(|r| r.bracket).collect();
        distance_fit = loglog_fit(&x, &y).ok();
        bracket_fit = loglog_fit(&x, &b).ok();
        let reps = rows.iter().map(|r| r.replicates.len()).min().unwrap_or(0);
        let slopes: Running = (0..reps)
            .filter_map(|k| {
                let yk: Vec<f64> = rows.iter().map(|r| r.replicates[k]).collect();
                loglog_fit(&x, &yk).ok().map(|f| f.slope)
            })
            .collect();
        if slopes.count() >= 2 {
            distance_slope_bootstrap_se = Some(slopes.variance().sqrt());
        }
    }
    Ok(RateSweepResult {
        rows,
        distance_fit,
        distance_slope_bootstrap_se,
        bracket_fit,
        warnings,
    })
}

/// `P(|W/λ − 1| > eps)` for a single pattern, estimated by simulation, with
/// the Chebyshev bound `Var/(eps² λ²)`.
#[derive(Clone, Debug, Serialize)]
pub struct TailEstimate {
    pub n: u64,
    pub lambda: f64,
    pub variance: f64,
    pub frequency: f64,
    pub frequency_se: f64,
    pub chebyshev: f64,
}

pub fn subcritical_tail(
    spec: &GraphEnsembleSpec,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<TailEstimate> {
    if spec.dim() != 1 {
        return Err(Error::param("the tail estimate takes a single pattern"));
    }
    let set = PatternSet::new(&spec.patterns)?;
    let m = moments(spec, &set)?;
    let (lambda, variance) = (m.lambda[0], m.variance[0]);
    let hits: Running = sample_counts(spec, trials, seed)?
        .iter()
        .map(|w| ((w[0] as f64 / lambda - 1.0).abs() > eps) as u8 as f64)
        .collect();
    Ok(TailEstimate {
        n: spec.n,
        lambda,
        variance,
        frequency: hits.mean(),
        frequency_se: hits.stderr(),
        chebyshev: variance / (eps * eps * lambda * lambda),
    })
}

/// Observed frequency of `W > 0` for a single pattern.
#[derive(Clone, Debug, Serialize)]
pub struct PositiveEstimate {
    pub n: u64,
    pub lambda: f64,
    pub frequency: f64,
    pub frequency_se: f64,
}

pub fn supercritical_positive(
    spec: &GraphEnsembleSpec,
    trials: u64,
    seed: u64,
) -> Result<PositiveEstimate> {
    if spec.dim() != 1 {
        return Err(Error::param(
            "the positivity estimate takes a single pattern",
        ));
    }
    let lambda = GraphModel::new(spec.clone()).lambda(0);
    let hits: Running = sample_counts(spec, trials, seed)?
        .iter()
        .map(|w| (w[0] > 0) as u8 as f64)
        .collect();
    Ok(PositiveEstimate {
        n: spec.n,
        lambda,
        frequency: hits.mean(),
        frequency_se: hits.stderr(),
    })
}

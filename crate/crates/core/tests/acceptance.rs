//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::time::Instant;

use mvpoisson_core::coupling::{verify_size_biased_exact, IndicatorSumModel, Mode};
use mvpoisson_core::lattice::{
    distance_to_poisson, optimal_transport, tv_distance, wasserstein_distance,
    DEFAULT_TRANSPORT_CAP,
};
use mvpoisson_core::models::{IndependentBernoulli, TabulatedModel};
use mvpoisson_core::moments::{bound_t4, moments, GraphEnsembleSpec, PatternSet};
use mvpoisson_core::pattern::PatternGraph;
use mvpoisson_core::simulate::{
    exhaustive_count_law, mc_coupling_terms, rate_sweep, subcritical_tail, supercritical_positive,
    GraphModel,
};
use mvpoisson_core::urn::{
    exact_dw_urn, exact_pmf, moments as urn_moments, theorem_bound_urn, UrnModel, UrnSpec,
};
use mvpoisson_core::LatticeDistribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// Brute-force graph oracle, independent of the library's pattern code: copies
// are edge sets of injective placements, graphs are bitmasks over pairs.

fn pair_index(n: usize) -> Vec<Vec<usize>> {
    let mut idx = vec![vec![usize::MAX; n]; n];
    let mut k = 0;
    for a in 0..n {
        for b in a + 1..n {
            idx[a][b] = k;
            idx[b][a] = k;
            k += 1;
        }
    }
    idx
}

fn brute_copies(v: usize, edges: &[(usize, usize)], n: usize) -> Vec<u64> {
    let idx = pair_index(n);
    let mut seen = BTreeSet::new();
    let mut image = Vec::with_capacity(v);
    fn rec(
        v: usize,
        n: usize,
        edges: &[(usize, usize)],
        idx: &[Vec<usize>],
        image: &mut Vec<usize>,
        seen: &mut BTreeSet<u64>,
    ) {
        if image.len() == v {
            let mask = edges
                .iter()
                .fold(0u64, |m, &(a, b)| m | 1 << idx[image[a]][image[b]]);
            seen.insert(mask);
            return;
        }
        for x in 0..n {
            if !image.contains(&x) {
                image.push(x);
                rec(v, n, edges, idx, image, seen);
                image.pop();
            }
        }
    }
    rec(v, n, edges, &idx, &mut image, &mut seen);
    seen.into_iter().collect()
}

/// Per edge count `k`: number of graphs, Σ W_i and Σ W_i W_j.
struct GraphSums {
    pairs: usize,
    graphs: Vec<u128>,
    first: Vec<Vec<u128>>,
    second: Vec<Vec<Vec<u128>>>,
}

fn graph_sums(n: usize, patterns: &[(usize, Vec<(usize, usize)>)]) -> GraphSums {
    let pairs = n * (n - 1) / 2;
    let copies: Vec<Vec<u64>> = patterns
        .iter()
        .map(|(v, e)| brute_copies(*v, e, n))
        .collect();
    let d = patterns.len();
    let mut s = GraphSums {
        pairs,
        graphs: vec![0; pairs + 1],
        first: vec![vec![0; d]; pairs + 1],
        second: vec![vec![vec![0; d]; d]; pairs + 1],
    };
    let mut w = vec![0u128; d];
    for g in 0u64..1 << pairs {
        let k = g.count_ones() as usize;
        for (i, list) in copies.iter().enumerate() {
            w[i] = list.iter().filter(|&&c| c & !g == 0).count() as u128;
        }
        s.graphs[k] += 1;
        for i in 0..d {
            s.first[k][i] += w[i];
            for j in 0..d {
                s.second[k][i][j] += w[i] * w[j];
            }
        }
    }
    s
}

/// (means, covariance matrix) at edge probability p.
fn graph_moments(s: &GraphSums, p: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = s.first[0].len();
    let weight = |k: usize| p.powi(k as i32) * (1.0 - p).powi((s.pairs - k) as i32);
    let mut mean = vec![0.0; d];
    let mut raw = vec![vec![0.0; d]; d];
    for k in 0..=s.pairs {
        let q = weight(k);
        for i in 0..d {
            mean[i] += q * s.first[k][i] as f64;
            for j in 0..d {
                raw[i][j] += q * s.second[k][i][j] as f64;
            }
        }
    }
    let cov = (0..d)
        .map(|i| (0..d).map(|j| raw[i][j] - mean[i] * mean[j]).collect())
        .collect();
    (mean, cov)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// The instances of criterion 2 as (patterns, n).
fn moment_instances() -> Vec<(Vec<PatternGraph>, usize)> {
    let tri = PatternGraph::triangle();
    let c4 = PatternGraph::cycle(4).unwrap();
    let p2 = PatternGraph::path(2).unwrap();
    vec![
        (vec![tri.clone()], 5),
        (vec![tri.clone()], 6),
        (vec![p2], 5),
        (vec![tri.clone(), c4.clone()], 6),
        (vec![tri, c4], 7),
    ]
}

const MOMENT_PS: [f64; 2] = [0.2, 0.5];

// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let mut check = |name: &str, v: f64| {
        worst = worst.max(v);
        notes.push(format!("{name} {v:.1e}"));
    };
    for (n, p) in [(1, 0.4), (5, 0.3), (8, 0.05)] {
        check(
            &format!("Bin({n},{p})"),
            verify_size_biased_exact(&IndependentBernoulli::binomial(n, p).unwrap()).unwrap(),
        );
    }
    let mixed = IndependentBernoulli::new(vec![vec![0.1, 0.6, 0.3], vec![0.2, 0.9]]).unwrap();
    check("Bernoulli d=2", verify_size_biased_exact(&mixed).unwrap());
    let toy = TabulatedModel::new(
        vec![1, 1],
        vec![(0b00, 0.4), (0b01, 0.1), (0b10, 0.2), (0b11, 0.3)],
    )
    .unwrap();
    check("tabulated d=2", verify_size_biased_exact(&toy).unwrap());
    for p in [0.3, 0.7] {
        let spec = GraphEnsembleSpec::new(4, p, vec![PatternGraph::edge()]).unwrap();
        check(
            &format!("G(4,{p}) edge"),
            verify_size_biased_exact(&GraphModel::new(spec)).unwrap(),
        );
    }
    let urn = UrnModel::new(UrnSpec::new(vec![2, 2], 2).unwrap());
    check("urn (2,2) m=2", verify_size_biased_exact(&urn).unwrap());
    outcome(
        worst < 1e-12,
        format!("max violation {worst:.2e}; {}", notes.join(", ")),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (patterns, n) in moment_instances() {
        let raw: Vec<(usize, Vec<(usize, usize)>)> = patterns
            .iter()
            .map(|h| (h.v(), h.edges().to_vec()))
            .collect();
        let sums = graph_sums(n, &raw);
        let set = PatternSet::new(&patterns).unwrap();
        for p in MOMENT_PS {
            let (mean, cov) = graph_moments(&sums, p);
            let spec = GraphEnsembleSpec::new(n as u64, p, patterns.clone()).unwrap();
            let m = moments(&spec, &set).unwrap();
            for i in 0..patterns.len() {
                worst = worst.max(rel_err(m.lambda[i], mean[i]));
                worst = worst.max(rel_err(m.variance[i], cov[i][i]));
                for j in 0..i {
                    worst = worst.max(rel_err(m.cov[i][j], cov[i][j]));
                }
            }
            cases += 1;
        }
    }
    outcome(
        worst <= 1e-10,
        format!("{cases} cases, max relative error {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let patterns = vec![PatternGraph::triangle(), PatternGraph::cycle(4).unwrap()];
    let spec = GraphEnsembleSpec::new(30, 1.0 / 30.0, patterns.clone()).unwrap();
    let set = PatternSet::new(&patterns).unwrap();
    let m = moments(&spec, &set).unwrap();
    let report = mc_coupling_terms(&spec, 10_000, 20_260_301).unwrap();
    assert_eq!(report.mode, Mode::MonteCarlo);
    let se = report.signed_stderr.as_ref().unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for (i, h) in patterns.iter().enumerate() {
        let l = m.lambda[i];
        let target = m.variance[i] - l + 2.0 * l * spec.p.powi(h.e() as i32);
        let est = l * report.diag_signed[i];
        let band = 3.0 * l * se.diag[i];
        pass &= (est - target).abs() <= band;
        notes.push(format!(
            "diag {}: {est:.5} vs {target:.5} (3SE {band:.5})",
            h.name()
        ));
        for j in 0..i {
            let est = l * report.cross_signed[i][j];
            let band = 3.0 * l * se.cross[i][j];
            pass &= (est - m.cov[i][j]).abs() <= band;
            notes.push(format!(
                "cov: {est:.5} vs {:.5} (3SE {band:.5})",
                m.cov[i][j]
            ));
        }
    }
    outcome(pass, notes.join("; "))
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut worst_slack = f64::INFINITY;
    let mut cases = 0;
    for (patterns, n) in moment_instances() {
        let set = PatternSet::new(&patterns).unwrap();
        for p in MOMENT_PS {
            let spec = GraphEnsembleSpec::new(n as u64, p, patterns.clone()).unwrap();
            let m = moments(&spec, &set).unwrap();
            let bound = bound_t4(&spec, &m).unwrap().value;
            let law = exhaustive_count_law(&spec).unwrap();
            let dist = distance_to_poisson(&law, &m.lambda, 1e-12, DEFAULT_TRANSPORT_CAP).unwrap();
            // Upper bound on the untruncated total variation distance.
            let tv = dist.total_variation + dist.tail_mass;
            let w = dist.wasserstein - dist.budget;
            pass &= tv <= bound && w <= bound;
            worst_slack = worst_slack.min(bound - tv.max(w));
            cases += 1;
        }
    }
    outcome(
        pass,
        format!("{cases} cases, smallest slack bound - distance = {worst_slack:.4}"),
    )
}

fn criterion_5() -> Outcome {
    let patterns = vec![PatternGraph::triangle(), PatternGraph::cycle(4).unwrap()];
    let sweep = rate_sweep(&patterns, 1.0, 1.0, &[20, 40, 80, 160], 10_000, 5, 1e-10).unwrap();
    let bracket = sweep.bracket_fit.as_ref().unwrap().slope;
    let fit = sweep.distance_fit.as_ref().unwrap();
    let se = sweep.distance_slope_bootstrap_se.unwrap_or(f64::NAN);
    let a = (bracket + 1.0).abs() <= 0.05;
    let b = fit.slope <= -0.7;
    let c = sweep
        .rows
        .iter()
        .all(|r| r.wasserstein <= r.bound_t4 + r.budget);
    let rows: Vec<String> = sweep
        .rows
        .iter()
        .map(|r| {
            format!(
                "n={} dW={:.4} bracket={:.4} t4={:.4}",
                r.n, r.wasserstein, r.bracket, r.bound_t4
            )
        })
        .collect();
    outcome(
        a && b && c,
        format!(
            "(a) bracket slope {bracket:.3} {}; (b) dW slope {:.3} (bootstrap SE {se:.3}) {}; (c) dW <= t4 + budget {}; {}",
            verdict(a),
            fit.slope,
            verdict(b),
            verdict(c),
            rows.join(", ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    // (a)
    let mut freqs = Vec::new();
    let mut cheb = true;
    for n in [50u64, 100, 200, 400] {
        let spec = GraphEnsembleSpec::new(n, 1.0 / n as f64, vec![PatternGraph::edge()]).unwrap();
        let t = subcritical_tail(&spec, 0.1, 10_000, 60 + n).unwrap();
        cheb &= t.frequency <= t.chebyshev;
        freqs.push(t.frequency);
    }
    let decreasing = freqs.windows(2).all(|w| w[1] < w[0]);
    let a = decreasing && cheb;
    notes.push(format!("(a) tail frequencies {freqs:?} {}", verdict(a)));
    // (b)
    let mut b = true;
    let mut seen = Vec::new();
    for n in [20u64, 40, 80] {
        let p = (n as f64).powi(-2);
        let spec = GraphEnsembleSpec::new(n, p, vec![PatternGraph::triangle()]).unwrap();
        let est = supercritical_positive(&spec, 10_000, 600 + n).unwrap();
        let closed = (n * (n - 1) * (n - 2)) as f64 / 6.0 * p.powi(3);
        b &= rel_err(est.lambda, closed) <= 1e-12 && est.frequency <= est.lambda;
        seen.push(format!(
            "n={n} freq={} lambda={:.3e}",
            est.frequency, est.lambda
        ));
    }
    notes.push(format!("(b) {} {}", seen.join(", "), verdict(b)));
    // (c)
    let mut c = true;
    for n in [20u64, 40, 80, 160, 1000] {
        let spec = GraphEnsembleSpec::on_path(n, 1.0, 1.0, vec![PatternGraph::triangle()]).unwrap();
        let lambda = GraphModel::new(spec).lambdas()[0];
        c &= (lambda - 1.0 / 6.0).abs() <= 2.0 / n as f64;
    }
    notes.push(format!("(c) {}", verdict(c)));
    outcome(a && b && c, notes.join("; "))
}

fn urn_grid() -> Vec<UrnSpec> {
    let colors: [&[u64]; 12] = [
        &[4, 6],
        &[3, 7],
        &[2, 3, 5],
        &[1, 4, 5],
        &[5, 15],
        &[10, 10],
        &[4, 6, 10],
        &[2, 8, 10],
        &[3, 27],
        &[10, 20],
        &[5, 10, 15],
        &[3, 7, 20],
    ];
    let mut out = Vec::new();
    for c in colors {
        let total: u64 = c.iter().sum();
        for m in [1, 2, 4, total / 2] {
            out.push(UrnSpec::new(c.to_vec(), m).unwrap());
        }
    }
    out
}

fn criterion_7() -> Outcome {
    let mut moment_err: f64 = 0.0;
    let mut form_err: f64 = 0.0;
    let mut failures = Vec::new();
    let grid = urn_grid();
    for urn in &grid {
        let law = exact_pmf(urn).unwrap();
        let mom = urn_moments(urn);
        let d = urn.dim();
        let mean = law.mean();
        for i in 0..d {
            moment_err = moment_err.max((mean[i] - mom.lambda[i]).abs());
            for j in 0..=i {
                let cov: f64 = law
                    .atoms()
                    .map(|(k, q)| q * (k[i] as f64 - mean[i]) * (k[j] as f64 - mean[j]))
                    .sum();
                let formula = if i == j {
                    mom.variance[i]
                } else {
                    mom.cov[i][j]
                };
                moment_err = moment_err.max((cov - formula).abs());
            }
        }
        let bound = theorem_bound_urn(urn).unwrap();
        form_err = form_err.max((bound.cross - bound.cross_intensity_form).abs());
        let dist = exact_dw_urn(urn, 1e-10).unwrap();
        if dist.wasserstein > bound.value + dist.budget {
            failures.push(format!(
                "N={} n={:?} m={}: dW {:.4} > bound {:.4}",
                urn.total(),
                urn.colors(),
                urn.m(),
                dist.wasserstein,
                bound.value
            ));
        }
    }
    let pass = moment_err <= 1e-12 && form_err <= 1e-12 && failures.is_empty();
    outcome(
        pass,
        format!(
            "{} urns; moment error {moment_err:.1e}; form error {form_err:.1e}; {} bound violations{}{}",
            grid.len(),
            failures.len(),
            if failures.is_empty() { "" } else { ": " },
            failures.join(", ")
        ),
    )
}

fn random_law(rng: &mut ChaCha8Rng) -> LatticeDistribution {
    let size = rng.random_range(1..=10);
    let mut points = BTreeSet::new();
    while points.len() < size {
        points.insert(rng.random_range(0..25u64));
    }
    let raw: Vec<f64> = (0..size).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    LatticeDistribution::new(
        1,
        points
            .into_iter()
            .zip(raw)
            .map(|(k, w)| (vec![k], w / total)),
    )
    .unwrap()
}

fn cdf_oracle(p: &LatticeDistribution, q: &LatticeDistribution) -> f64 {
    let top = p.atoms().chain(q.atoms()).map(|(k, _)| k[0]).max().unwrap();
    let (mut fp, mut fq, mut acc) = (0.0, 0.0, 0.0);
    for k in 0..top {
        fp += p.mass(&[k]);
        fq += q.mass(&[k]);
        acc += (fp - fq).abs();
    }
    acc
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut err, mut marg): (f64, f64) = (0.0, 0.0);
    let mut tv_ok = true;
    for _ in 0..200 {
        let p = random_law(&mut rng);
        let q = random_law(&mut rng);
        let w = wasserstein_distance(&p, &q).unwrap();
        err = err.max((w - cdf_oracle(&p, &q)).abs());
        tv_ok &= tv_distance(&p, &q).unwrap() <= w + 1e-15;
        let plan = optimal_transport(&p, &q, DEFAULT_TRANSPORT_CAP).unwrap();
        for (k, _) in p.atoms().chain(q.atoms()) {
            let out: f64 = plan.moves.iter().filter(|m| &m.0 == k).map(|m| m.2).sum();
            let inn: f64 = plan.moves.iter().filter(|m| &m.1 == k).map(|m| m.2).sum();
            marg = marg.max((out - p.mass(k)).abs().max((inn - q.mass(k)).abs()));
        }
    }
    outcome(
        err <= 1e-10 && tv_ok && marg <= 1e-10,
        format!(
            "max |W - oracle| {err:.1e}; tv <= W {}; max marginal error {marg:.1e}",
            verdict(tv_ok)
        ),
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "not met"
    }
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (k, run) in criteria {
        if filter.is_some_and(|f| f != k) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {k}: {tag} [{:.1}s] {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
        failed += !o.pass as u32;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

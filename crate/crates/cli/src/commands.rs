use mvpoisson_core::coupling::{
    exact_bound_terms, mc_bound_terms, verify_size_biased_exact, BoundReport, ExhaustiveModel,
    Monotonicity,
};
use mvpoisson_core::moments::{
    bound_t4, corollary_t5_bracket, moments, GraphEnsembleSpec, PatternSet,
};
use mvpoisson_core::pattern::{density_and_balance, gamma_eta, shared_edge_stats, PatternGraph};
use mvpoisson_core::simulate::{
    mc_empirical_distance, rate_sweep, sweep_seed, GraphModel, DEFAULT_BOOTSTRAP,
};
use mvpoisson_core::urn::{exact_dw_urn, moments as urn_moments, theorem_bound_urn, UrnModel};
use mvpoisson_core::Error;
use serde_json::json;

use crate::config::{EdgeProb, ExperimentConfig};
use crate::output::{num, Report, Table};
use crate::CliError;

fn graph_spec(
    n: u64,
    prob: EdgeProb,
    patterns: &[PatternGraph],
) -> Result<GraphEnsembleSpec, Error> {
    match prob {
        EdgeProb::Fixed(p) => GraphEnsembleSpec::new(n, p, patterns.to_vec()),
        EdgeProb::Path { c, alpha } => GraphEnsembleSpec::on_path(n, c, alpha, patterns.to_vec()),
    }
}

fn per_pattern(prefix: &str, patterns: &[PatternGraph]) -> Vec<String> {
    patterns
        .iter()
        .map(|h| format!("{prefix}[{}]", h.name()))
        .collect()
}

fn cov_columns(patterns: &[PatternGraph]) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..patterns.len() {
        for j in 0..i {
            out.push(format!(
                "cov[{},{}]",
                patterns[i].name(),
                patterns[j].name()
            ));
        }
    }
    out
}

fn nums(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| num(x)).collect()
}

pub fn pattern_info(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let patterns = cfg.patterns()?;
    let mut table = Table::new([
        "pattern",
        "v",
        "e",
        "automorphisms",
        "density",
        "strictly_balanced",
        "witness",
        "witness_density",
        "alpha",
        "gamma_subgraph",
        "gamma_overlap",
        "eta",
    ]);
    let mut pattern_json = Vec::new();
    for h in &patterns {
        let bal = density_and_balance(h)?;
        let alpha = cfg.alpha.unwrap_or(h.density());
        let ge = gamma_eta(h, alpha)?;
        table.push(vec![
            h.name().to_string(),
            h.v().to_string(),
            h.e().to_string(),
            h.automorphism_count().to_string(),
            num(bal.density),
            bal.strictly_balanced.to_string(),
            bal.witness
                .as_ref()
                .map(PatternGraph::to_edge_list)
                .unwrap_or_default(),
            bal.witness_density.map(num).unwrap_or_default(),
            num(alpha),
            num(ge.gamma_subgraph),
            num(ge.gamma_overlap),
            num(ge.eta),
        ]);
        pattern_json.push(json!({"pattern": h, "balance": bal, "exponents": ge}));
    }
    let mut pairs = Table::new([
        "first",
        "second",
        "max_shared_edges",
        "shared_edge_counts",
        "ell",
    ]);
    let mut pair_json = Vec::new();
    for (i, hi) in patterns.iter().enumerate() {
        for hj in &patterns[..=i] {
            let s = shared_edge_stats(hi, hj, false)?;
            let ks: Vec<String> = s.k_set.iter().map(|k| k.to_string()).collect();
            let ell: Vec<String> = s
                .k_set
                .iter()
                .map(|k| format!("{k}:{}", s.ell[k]))
                .collect();
            pairs.push(vec![
                hi.name().to_string(),
                hj.name().to_string(),
                s.m.to_string(),
                ks.join(";"),
                ell.join(";"),
            ]);
            pair_json.push(json!({"first": hi.name(), "second": hj.name(), "stats": s}));
        }
    }
    Ok(Report {
        tables: vec![table, pairs],
        json: json!({"command": "pattern-info", "patterns": pattern_json, "pairs": pair_json}),
    })
}

pub fn bound_graph(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let patterns = cfg.patterns()?;
    let prob = cfg.edge_prob()?;
    let set = PatternSet::new(&patterns)?;
    let mut header: Vec<String> = ["n", "p", "mode", "se", "budget"]
        .map(String::from)
        .to_vec();
    header.extend(per_pattern("lambda", &patterns));
    header.extend(per_pattern("var", &patterns));
    header.extend(cov_columns(&patterns));
    header.extend(
        [
            "bound_t4",
            "bound_t4_coupling",
            "bracket",
            "bracket_out_of_model",
        ]
        .map(String::from),
    );
    let mut table = Table::new(header);
    let mut rows_json = Vec::new();
    for n in cfg.ns()? {
        let spec = graph_spec(n, prob, &patterns)?;
        let m = moments(&spec, &set)?;
        let b = bound_t4(&spec, &m)?;
        let br = corollary_t5_bracket(&spec, &set, &m.lambda)?;
        let mut row = vec![
            n.to_string(),
            num(spec.p),
            "exact".into(),
            "0".into(),
            "0".into(),
        ];
        row.extend(nums(&m.lambda));
        row.extend(nums(&m.variance));
        row.extend(m.cov.iter().flatten().map(|&c| num(c)));
        row.extend([
            num(b.value),
            num(b.value_coupling),
            num(br.total),
            br.out_of_model.to_string(),
        ]);
        table.push(row);
        rows_json.push(json!({"n": n, "p": spec.p, "mode": "exact", "moments": m, "bound_t4": b, "bracket": br}));
    }
    Ok(Report {
        tables: vec![table],
        json: json!({"command": "bound-graph", "patterns": patterns, "rows": rows_json}),
    })
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let patterns = cfg.patterns()?;
    let prob = cfg.edge_prob()?;
    let set = PatternSet::new(&patterns)?;
    let trials = cfg.trials();
    let mut header: Vec<String> = ["n", "p", "trials", "seed", "mode"]
        .map(String::from)
        .to_vec();
    header.extend(per_pattern("lambda", &patterns));
    header.extend(per_pattern("mean", &patterns));
    header.extend(per_pattern("mean_3se", &patterns));
    header.extend(
        [
            "wasserstein",
            "wasserstein_3se",
            "total_variation",
            "total_variation_3se",
            "budget",
            "bound_t4",
        ]
        .map(String::from),
    );
    let mut table = Table::new(header);
    let mut rows_json = Vec::new();
    for n in cfg.ns()? {
        let spec = graph_spec(n, prob, &patterns)?;
        let seed = sweep_seed(cfg.seed, n);
        let d = mc_empirical_distance(&spec, trials, seed, cfg.eps_trunc, DEFAULT_BOOTSTRAP)?;
        let b = bound_t4(&spec, &moments(&spec, &set)?)?;
        let mut row = vec![
            n.to_string(),
            num(spec.p),
            trials.to_string(),
            seed.to_string(),
            "mc".into(),
        ];
        row.extend(nums(&d.lambda));
        row.extend(nums(&d.mean));
        row.extend(d.mean_se.iter().map(|&s| num(3.0 * s)));
        row.extend([
            num(d.wasserstein),
            num(3.0 * d.wasserstein_se),
            num(d.total_variation),
            num(3.0 * d.total_variation_se),
            num(d.budget),
            num(b.value),
        ]);
        table.push(row);
        rows_json.push(
            json!({"n": n, "p": spec.p, "seed": seed, "mode": "mc", "distance": d, "bound_t4": b}),
        );
    }
    Ok(Report {
        tables: vec![table],
        json: json!({"command": "simulate", "patterns": patterns, "trials": trials, "rows": rows_json}),
    })
}

pub fn rate_sweep_cmd(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let patterns = cfg.patterns()?;
    let (c, alpha) = match cfg.edge_prob()? {
        EdgeProb::Path { c, alpha } => (c, alpha),
        EdgeProb::Fixed(_) => {
            return Err(CliError::usage("rate-sweep needs --c and --alpha, not --p"))
        }
    };
    let ns = cfg.ns()?;
    let sweep = rate_sweep(
        &patterns,
        c,
        alpha,
        &ns,
        cfg.trials(),
        cfg.seed,
        cfg.eps_trunc,
    )?;
    let mut header: Vec<String> = ["n", "p", "trials", "seed", "mode"]
        .map(String::from)
        .to_vec();
    header.extend(per_pattern("lambda", &patterns));
    header.extend(
        [
            "wasserstein",
            "wasserstein_3se",
            "total_variation",
            "budget",
            "bracket",
            "bound_t4",
        ]
        .map(String::from),
    );
    let mut table = Table::new(header);
    for r in &sweep.rows {
        let mut row = vec![
            r.n.to_string(),
            num(r.p),
            r.trials.to_string(),
            r.seed.to_string(),
            "mc".into(),
        ];
        row.extend(nums(&r.lambda));
        row.extend([
            num(r.wasserstein),
            num(3.0 * r.wasserstein_se),
            num(r.total_variation),
            num(r.budget),
            num(r.bracket),
            num(r.bound_t4),
        ]);
        table.push(row);
    }
    if let Some(f) = &sweep.distance_fit {
        let se = sweep
            .distance_slope_bootstrap_se
            .map(num)
            .unwrap_or_else(|| "n/a".into());
        table.notes.push(format!(
            "slope wasserstein {} (fit se {}, bootstrap se {se})",
            num(f.slope),
            num(f.slope_se)
        ));
    }
    if let Some(f) = &sweep.bracket_fit {
        table.notes.push(format!("slope bracket {}", num(f.slope)));
    }
    table
        .notes
        .extend(sweep.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(Report {
        tables: vec![table],
        json: json!({"command": "rate-sweep", "patterns": patterns, "c": c, "alpha": alpha, "sweep": sweep}),
    })
}

pub fn bound_urn(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let urn = cfg.urn()?;
    let mom = urn_moments(&urn);
    let b = theorem_bound_urn(&urn)?;
    let mut colors = Table::new(["color", "balls", "lambda", "variance", "diag_term"]);
    for i in 0..urn.dim() {
        colors.push(vec![
            (i + 1).to_string(),
            urn.colors()[i].to_string(),
            num(mom.lambda[i]),
            num(mom.variance[i]),
            num(b.diag_terms[i]),
        ]);
    }
    let mut summary = Table::new(["quantity", "value", "mode", "budget"]);
    let exact = |q: &str, v: String| vec![q.to_string(), v, "exact".into(), "0".into()];
    summary.push(exact("cross", num(b.cross)));
    summary.push(exact("cross_intensity_form", num(b.cross_intensity_form)));
    summary.push(exact("cross_coupling", num(b.cross_coupling)));
    summary.push(exact("bound", num(b.value)));
    summary.push(exact("bound_coupling", num(b.value_coupling)));
    summary.push(exact("vacuous", b.vacuous.to_string()));
    let distance = match exact_dw_urn(&urn, cfg.eps_trunc) {
        Ok(d) => {
            let budget = num(d.budget);
            summary.push(vec![
                "wasserstein".into(),
                num(d.wasserstein),
                "exact".into(),
                budget.clone(),
            ]);
            summary.push(vec![
                "total_variation".into(),
                num(d.total_variation),
                "exact".into(),
                budget,
            ]);
            Some(d)
        }
        Err(Error::Resource {
            what,
            requested,
            cap,
        }) => {
            summary.notes.push(format!(
                "exact distance skipped: {what} {requested} exceeds cap {cap}"
            ));
            None
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Report {
        tables: vec![colors, summary],
        json: json!({"command": "bound-urn", "urn": urn, "moments": mom, "bound": b, "distance": distance}),
    })
}

fn terms_table(exact: &BoundReport, mc: Option<&BoundReport>) -> Table {
    let mut t = Table::new(["term", "i", "j", "exact", "mc", "mc_3se"]);
    let mc_cells = |f: &dyn Fn(&BoundReport) -> (f64, f64)| match mc {
        Some(r) => {
            let (v, se) = f(r);
            [num(v), num(3.0 * se)]
        }
        None => [String::new(), String::new()],
    };
    for i in 0..exact.lambda.len() {
        let [v, se] = mc_cells(&|r| {
            (
                r.diag_terms[i],
                r.stderr.as_ref().map_or(0.0, |s| s.diag[i]),
            )
        });
        t.push(vec![
            "diag".into(),
            (i + 1).to_string(),
            String::new(),
            num(exact.diag_terms[i]),
            v,
            se,
        ]);
        for j in 0..i {
            let [v, se] = mc_cells(&|r| {
                (
                    r.cross_terms[i][j],
                    r.stderr.as_ref().map_or(0.0, |s| s.cross[i][j]),
                )
            });
            t.push(vec![
                "cross".into(),
                (i + 1).to_string(),
                (j + 1).to_string(),
                num(exact.cross_terms[i][j]),
                v,
                se,
            ]);
        }
    }
    let total_mc = mc.map(|r| num(r.total)).unwrap_or_default();
    t.push(vec![
        "bound_t1".into(),
        String::new(),
        String::new(),
        num(exact.total),
        total_mc,
        String::new(),
    ]);
    t
}

fn verify<M: ExhaustiveModel>(
    model: &M,
    cfg: &ExperimentConfig,
    direction: Monotonicity,
    label: serde_json::Value,
) -> Result<Report, CliError> {
    let violation = verify_size_biased_exact(model)?;
    let exact = exact_bound_terms(model)?;
    let mc = match cfg.trials {
        Some(t) => Some(mc_bound_terms(model, t, cfg.seed, Some(direction))?),
        None => None,
    };
    let mut table = terms_table(&exact, mc.as_ref());
    table
        .notes
        .push(format!("max (h2) violation: {violation:.1e}"));
    table
        .notes
        .push(format!("states enumerated: {}", model.state_count()));
    Ok(Report {
        tables: vec![table],
        json: json!({
            "command": "verify-coupling",
            "model": label,
            "max_violation": violation,
            "exact": exact,
            "mc": mc,
        }),
    })
}

pub fn verify_coupling(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    if cfg.colors.is_some() {
        let urn = cfg.urn()?;
        let label = json!({"urn": urn});
        return verify(&UrnModel::new(urn), cfg, Monotonicity::Decreasing, label);
    }
    let patterns = cfg.patterns()?;
    let n = match cfg.ns()?.as_slice() {
        [n] => *n,
        _ => return Err(CliError::usage("verify-coupling takes a single --n")),
    };
    let spec = graph_spec(n, cfg.edge_prob()?, &patterns)?;
    let label = json!({"graph": spec});
    verify(&GraphModel::new(spec), cfg, Monotonicity::Increasing, label)
}

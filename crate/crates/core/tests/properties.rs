use std::collections::BTreeSet;

use mvpoisson_core::lattice::{
    optimal_transport, poisson_product_truncated, tv_distance, wasserstein_1d_oracle,
    wasserstein_distance, DEFAULT_TRANSPORT_CAP,
};
use mvpoisson_core::pattern::{
    density_and_balance, enumerate_copies, gamma_subgraph, overlap_table, PatternGraph,
};
use mvpoisson_core::stats::binomial;
use mvpoisson_core::urn::{exact_pmf, moments, UrnSpec};
use mvpoisson_core::LatticeDistribution;
use proptest::prelude::*;

fn law(dim: usize, max_atoms: usize, coord: u64) -> impl Strategy<Value = LatticeDistribution> {
    prop::collection::btree_map(
        prop::collection::vec(0..coord, dim),
        1u32..1000,
        1..=max_atoms,
    )
    .prop_map(move |atoms| {
        let total: u32 = atoms.values().sum();
        LatticeDistribution::new(
            dim,
            atoms.into_iter().map(|(k, w)| (k, w as f64 / total as f64)),
        )
        .unwrap()
    })
}

fn pair(max_atoms: usize) -> impl Strategy<Value = (LatticeDistribution, LatticeDistribution)> {
    (1usize..=3).prop_flat_map(move |d| (law(d, max_atoms, 6), law(d, max_atoms, 6)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tv_is_below_wasserstein((p, q) in pair(8)) {
        prop_assert!(tv_distance(&p, &q).unwrap() <= wasserstein_distance(&p, &q).unwrap() + 1e-12);
    }

    #[test]
    fn distances_are_symmetric((p, q) in pair(8)) {
        let w1 = wasserstein_distance(&p, &q).unwrap();
        let w2 = wasserstein_distance(&q, &p).unwrap();
        prop_assert!((w1 - w2).abs() < 1e-12);
        prop_assert!((tv_distance(&p, &q).unwrap() - tv_distance(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert_eq!(wasserstein_distance(&p, &p).unwrap(), 0.0);
        prop_assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        if p != q {
            prop_assert!(w1 > 0.0);
        }
    }

    #[test]
    fn triangle_inequality(
        (p, q, r) in (1usize..=2).prop_flat_map(|d| (law(d, 6, 5), law(d, 6, 5), law(d, 6, 5)))
    ) {
        let pq = wasserstein_distance(&p, &q).unwrap();
        let qr = wasserstein_distance(&q, &r).unwrap();
        let pr = wasserstein_distance(&p, &r).unwrap();
        prop_assert!(pr <= pq + qr + 1e-12);
    }

    #[test]
    fn one_dimensional_oracle(p in law(1, 12, 30), q in law(1, 12, 30)) {
        let w = wasserstein_distance(&p, &q).unwrap();
        prop_assert!((w - wasserstein_1d_oracle(&p, &q).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn plans_are_feasible((p, q) in pair(10)) {
        let plan = optimal_transport(&p, &q, DEFAULT_TRANSPORT_CAP).unwrap();
        let points: BTreeSet<_> = p.atoms().chain(q.atoms()).map(|(k, _)| k.clone()).collect();
        for k in points {
            let out: f64 = plan.moves.iter().filter(|m| m.0 == k).map(|m| m.2).sum();
            let inn: f64 = plan.moves.iter().filter(|m| m.1 == k).map(|m| m.2).sum();
            prop_assert!((out - p.mass(&k)).abs() < 1e-10);
            prop_assert!((inn - q.mass(&k)).abs() < 1e-10);
        }
        let cost: f64 = plan
            .moves
            .iter()
            .map(|(a, b, f)| f * a.iter().zip(b).map(|(x, y)| x.abs_diff(*y) as f64).sum::<f64>())
            .sum();
        prop_assert!((cost - plan.cost).abs() < 1e-10);
    }

    #[test]
    fn truncation_is_monotone_in_eps(
        lambda in prop::collection::vec(0.05f64..8.0, 1..=3),
        e1 in 1e-9f64..0.5,
        e2 in 1e-9f64..0.5,
    ) {
        let (small, large) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let a = poisson_product_truncated(&lambda, small).unwrap();
        let b = poisson_product_truncated(&lambda, large).unwrap();
        prop_assert!(a.caps.iter().zip(&b.caps).all(|(x, y)| x >= y));
        prop_assert!(a.body_mass() >= b.body_mass() - 1e-15);
        prop_assert!(a.tail_mass <= small && b.tail_mass <= large);
    }

    #[test]
    fn urn_laws_are_consistent(colors in prop::collection::vec(1u64..12, 1..=3), frac in 0.0f64..1.0) {
        let total: u64 = colors.iter().sum();
        let m = 1 + ((total - 1) as f64 * frac) as u64;
        let urn = UrnSpec::new(colors.clone(), m).unwrap();
        let pmf = exact_pmf(&urn).unwrap();
        prop_assert!(pmf.atoms().all(|(k, _)| k.iter().sum::<u64>() == m));
        let mom = moments(&urn);
        let mean = pmf.mean();
        for i in 0..colors.len() {
            prop_assert!((mean[i] - mom.lambda[i]).abs() < 1e-12);
            for j in 0..=i {
                let c: f64 = pmf
                    .atoms()
                    .map(|(k, q)| q * (k[i] as f64 - mean[i]) * (k[j] as f64 - mean[j]))
                    .sum();
                let f = if i == j { mom.variance[i] } else { mom.cov[i][j] };
                prop_assert!((c - f).abs() < 1e-12);
                if i != j {
                    prop_assert!(f <= 0.0 && c <= 1e-15);
                }
            }
        }
    }
}

fn zoo() -> Vec<PatternGraph> {
    vec![
        PatternGraph::edge(),
        PatternGraph::triangle(),
        PatternGraph::path(2).unwrap(),
        PatternGraph::path(3).unwrap(),
        PatternGraph::cycle(4).unwrap(),
        PatternGraph::cycle(5).unwrap(),
        PatternGraph::star(3).unwrap(),
        PatternGraph::complete(4).unwrap(),
        PatternGraph::new("paw", 4, &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap(),
        PatternGraph::new("diamond", 4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap(),
        PatternGraph::new("2K2", 4, &[(0, 1), (2, 3)]).unwrap(),
    ]
}

#[test]
fn copy_counts_match_the_closed_form() {
    for h in zoo() {
        for n in [h.v(), h.v() + 1, 7] {
            let copies = enumerate_copies(&h, n).unwrap();
            let closed = binomial(n as u64, h.v() as u64)
                * (1..=h.v() as u64).product::<u64>() as f64
                / h.automorphism_count() as f64;
            assert_eq!(copies.len() as f64, closed, "{h} in K_{n}");
            assert_eq!(closed, h.copies_in_complete(n as u64));
        }
    }
}

#[test]
fn overlap_tables_count_all_pairs() {
    let z = zoo();
    for a in &z {
        for b in &z {
            let t = overlap_table(a, b).unwrap();
            for n in [8u64, 11] {
                let expect = a.copies_in_complete(n) * b.copies_in_complete(n);
                assert!(
                    (t.total_pairs(n) - expect).abs() <= 1e-9 * expect,
                    "{a} x {b} at n={n}"
                );
            }
        }
    }
}

#[test]
fn gamma_sign_follows_strict_balance() {
    for h in zoo().into_iter().filter(|h| h.e() > 1) {
        let bal = density_and_balance(&h).unwrap();
        let g = gamma_subgraph(&h, h.density()).unwrap();
        if bal.strictly_balanced {
            assert!(g > 0.0, "{h}: {g}");
        } else {
            assert!(g <= 0.0, "{h}: {g}");
        }
    }
}

#[test]
fn shared_edge_sets_agree_with_tables() {
    let z = zoo();
    for (i, a) in z.iter().enumerate() {
        for b in &z[..=i] {
            let t = overlap_table(a, b).unwrap();
            let mut feasible: BTreeSet<usize> = BTreeSet::new();
            for (&(k, _), &c) in &t.entries {
                if k >= 1 && c > 0 {
                    feasible.insert(k);
                }
            }
            let same = a == b;
            if same {
                // The identical pair is the only one sharing every edge.
                let proper: BTreeSet<usize> =
                    feasible.iter().copied().filter(|&k| k < a.e()).collect();
                let s = t.shared_edge_stats(false);
                assert_eq!(
                    s.k_set.iter().copied().collect::<BTreeSet<_>>(),
                    proper,
                    "{a}"
                );
                let s = t.shared_edge_stats(true);
                assert_eq!(
                    s.k_set.iter().copied().collect::<BTreeSet<_>>(),
                    feasible,
                    "{a}"
                );
                assert!(feasible.contains(&a.e()));
            } else {
                let s = t.shared_edge_stats(false);
                assert_eq!(
                    s.k_set.iter().copied().collect::<BTreeSet<_>>(),
                    feasible,
                    "{a} x {b}"
                );
            }
        }
    }
}

#[test]
fn cycle_overlaps_need_more_vertices_for_more_edges() {
    for a in 3..=6 {
        for b in 3..=a {
            let s = mvpoisson_core::pattern::shared_edge_stats(
                &PatternGraph::cycle(a).unwrap(),
                &PatternGraph::cycle(b).unwrap(),
                false,
            )
            .unwrap();
            let ells: Vec<usize> = s.k_set.iter().map(|k| s.ell[k]).collect();
            assert!(
                ells.windows(2).all(|w| w[0] <= w[1]),
                "C{a} x C{b}: {ells:?}"
            );
        }
    }
}

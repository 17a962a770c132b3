//! Small pattern graphs and the combinatorics of their copies in `K_n`.
//!
//! A copy of `H` is an edge subset of `K_n` isomorphic to `H` (not an induced
//! subgraph). Edge sets on at most 16 vertices are packed into `u128` masks
//! with pair `{a, b}`, `a < b`, at bit `b(b−1)/2 + a`; the index does not
//! depend on the total number of vertices, so masks on `[v]` stay valid on any
//! larger vertex set.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::binomial;

pub type EdgeMask = u128;

/// Largest pattern for which automorphisms and labeled copies are enumerated
/// over all vertex permutations.
pub const MAX_PATTERN_VERTICES: usize = 10;
/// Largest edge count for the subgraph scan (`2^e` subsets).
pub const MAX_SUBGRAPH_EDGES: usize = 24;
/// Cap on `v_i + v_j` for overlap tables.
pub const MAX_OVERLAP_VERTICES: usize = 12;
/// Cap on `n` for explicit copy lists.
pub const MAX_COPY_HOST: usize = 12;
/// Cap on the length of an explicit copy list.
pub const MAX_COPY_LIST: u128 = 20_000_000;

pub fn pair_bit(a: usize, b: usize) -> EdgeMask {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    1u128 << (b * (b - 1) / 2 + a)
}

/// Inverse of [`pair_bit`]'s index.
pub fn pair_of_index(idx: usize) -> (usize, usize) {
    let mut b = 1;
    while (b + 1) * b / 2 <= idx {
        b += 1;
    }
    (idx - b * (b - 1) / 2, b)
}

/// Vertices touched by the edges of a mask, as a bit set.
pub fn vertex_mask(edges: EdgeMask) -> u32 {
    let mut out = 0u32;
    let mut rest = edges;
    while rest != 0 {
        let idx = rest.trailing_zeros() as usize;
        let (a, b) = pair_of_index(idx);
        out |= 1 << a | 1 << b;
        rest &= rest - 1;
    }
    out
}

/// Edge subsets of `H` with incident vertices, summarized by the least number
/// of vertices needed for each edge count.
#[derive(Clone, Debug)]
struct SubgraphProfile {
    /// `min_vertices[k]` for `k` in `1..e` (index 0 unused).
    min_vertices: Vec<usize>,
    /// A subset attaining `min_vertices[k]`.
    witness: Vec<EdgeMask>,
}

/// A simple graph without isolated vertices and with at least one edge.
#[derive(Clone)]
pub struct PatternGraph {
    name: String,
    v: usize,
    edges: Vec<(usize, usize)>,
    mask: EdgeMask,
    automorphisms: u64,
    /// Every distinct copy of the pattern on the vertex set `[v]`.
    labeled_copies: Vec<EdgeMask>,
    profile: OnceLock<Result<SubgraphProfile>>,
}

impl PartialEq for PatternGraph {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v && self.edges == other.edges
    }
}

impl fmt::Debug for PatternGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PatternGraph")
            .field("name", &self.name)
            .field("v", &self.v)
            .field("edges", &self.edges)
            .finish()
    }
}

impl fmt::Display for PatternGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Serialize for PatternGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PatternGraph", 5)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("v", &self.v)?;
        st.serialize_field("e", &self.edges.len())?;
        st.serialize_field("a", &self.automorphisms)?;
        let one_based: Vec<(usize, usize)> =
            self.edges.iter().map(|&(a, b)| (a + 1, b + 1)).collect();
        st.serialize_field("edges", &one_based)?;
        st.end()
    }
}

impl PatternGraph {
    /// Builds a pattern from 0-based edges.
    pub fn new(name: impl Into<String>, v: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if v == 0 || edges.is_empty() {
            return Err(Error::param("a pattern needs at least one edge"));
        }
        if v > MAX_PATTERN_VERTICES {
            return Err(Error::resource(
                "pattern vertices",
                v as u128,
                MAX_PATTERN_VERTICES as u128,
            ));
        }
        let mut norm = Vec::with_capacity(edges.len());
        let mut mask: EdgeMask = 0;
        for &(a, b) in edges {
            if a >= v || b >= v {
                return Err(Error::param(format!(
                    "edge {}-{} leaves the vertex range",
                    a + 1,
                    b + 1
                )));
            }
            if a == b {
                return Err(Error::param(format!("loop at vertex {}", a + 1)));
            }
            let bit = pair_bit(a, b);
            if mask & bit != 0 {
                return Err(Error::param(format!("repeated edge {}-{}", a + 1, b + 1)));
            }
            mask |= bit;
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if vertex_mask(mask).count_ones() as usize != v {
            return Err(Error::param("patterns may not have isolated vertices"));
        }
        let (automorphisms, labeled_copies) = permutation_scan(v, &norm, mask);
        Ok(PatternGraph {
            name: name.into(),
            v,
            edges: norm,
            mask,
            automorphisms,
            labeled_copies,
            profile: OnceLock::new(),
        })
    }

    pub fn edge() -> Self {
        Self::path(1).expect("valid builtin")
    }

    pub fn triangle() -> Self {
        Self::cycle(3).expect("valid builtin")
    }

    /// Path with `k` edges on `k + 1` vertices.
    pub fn path(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("path_k needs k ≥ 1"));
        }
        let edges: Vec<_> = (0..k).map(|i| (i, i + 1)).collect();
        let name = if k == 1 {
            "edge".to_string()
        } else {
            format!("path_{k}")
        };
        Self::new(name, k + 1, &edges)
    }

    pub fn cycle(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::param("cycle_k needs k ≥ 3"));
        }
        let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k)).collect();
        Self::new(format!("cycle_{k}"), k, &edges)
    }

    pub fn complete(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::param("complete_k needs k ≥ 2"));
        }
        let mut edges = Vec::new();
        for b in 1..k {
            for a in 0..b {
                edges.push((a, b));
            }
        }
        Self::new(format!("complete_{k}"), k, &edges)
    }

    /// Star with `k` leaves.
    pub fn star(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("star_k needs k ≥ 1"));
        }
        let edges: Vec<_> = (1..=k).map(|i| (0, i)).collect();
        Self::new(format!("star_{k}"), k + 1, &edges)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn e(&self) -> usize {
        self.edges.len()
    }

    /// 0-based edges, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn mask(&self) -> EdgeMask {
        self.mask
    }

    pub fn density(&self) -> f64 {
        self.e() as f64 / self.v as f64
    }

    /// `a_H`, counted over all `v!` vertex permutations.
    pub fn automorphism_count(&self) -> u64 {
        self.automorphisms
    }

    /// The `v!/a_H` distinct copies of the pattern on vertex set `[v]`.
    pub fn labeled_copies(&self) -> &[EdgeMask] {
        &self.labeled_copies
    }

    /// The pattern in edge-list syntax, 1-indexed; [`parse_pattern`] reads it
    /// back.
    pub fn to_edge_list(&self) -> String {
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|(a, b)| format!("{}-{}", a + 1, b + 1))
            .collect();
        format!("v={}; edges={}", self.v, edges.join(","))
    }

    /// Smallest labeled-copy mask; equal for isomorphic patterns.
    pub fn canonical_mask(&self) -> EdgeMask {
        self.labeled_copies[0]
    }

    pub fn is_isomorphic(&self, other: &Self) -> bool {
        self.v == other.v
            && self.e() == other.e()
            && self.canonical_mask() == other.canonical_mask()
    }

    /// `|Γ_H| = C(n, v) v!/a` in `K_n`.
    pub fn copies_in_complete(&self, n: u64) -> f64 {
        binomial(n, self.v as u64) * self.labeled_copies.len() as f64
    }

    fn profile(&self) -> Result<&SubgraphProfile> {
        self.profile
            .get_or_init(|| subgraph_profile(self))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Renumbers the vertices of an edge subset of this pattern into a
    /// standalone pattern.
    fn subgraph_from_mask(&self, mask: EdgeMask) -> Result<PatternGraph> {
        let verts = vertex_mask(mask);
        let mut relabel = [usize::MAX; 16];
        let mut next = 0;
        for (x, slot) in relabel.iter_mut().enumerate() {
            if verts >> x & 1 == 1 {
                *slot = next;
                next += 1;
            }
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|&&(a, b)| mask & pair_bit(a, b) != 0)
            .map(|&(a, b)| (relabel[a], relabel[b]))
            .collect();
        PatternGraph::new("subgraph", next, &edges)
    }
}

/// Enumerates all `v!` permutations (Heap's algorithm), returning the number
/// fixing the edge set and the sorted distinct image masks.
fn permutation_scan(v: usize, edges: &[(usize, usize)], mask: EdgeMask) -> (u64, Vec<EdgeMask>) {
    let mut perm: Vec<usize> = (0..v).collect();
    let mut images = HashSet::new();
    let mut fixed = 0u64;
    let mut visit = |perm: &[usize]| {
        let image = edges
            .iter()
            .fold(0, |acc, &(a, b)| acc | pair_bit(perm[a], perm[b]));
        if image == mask {
            fixed += 1;
        }
        images.insert(image);
    };
    visit(&perm);
    let mut c = vec![0usize; v];
    let mut i = 0;
    while i < v {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let mut copies: Vec<EdgeMask> = images.into_iter().collect();
    copies.sort_unstable();
    (fixed, copies)
}

fn subgraph_profile(h: &PatternGraph) -> Result<SubgraphProfile> {
    let e = h.e();
    if e > MAX_SUBGRAPH_EDGES {
        return Err(Error::resource(
            "pattern edges for subgraph scan",
            e as u128,
            MAX_SUBGRAPH_EDGES as u128,
        ));
    }
    let bits: Vec<EdgeMask> = h.edges.iter().map(|&(a, b)| pair_bit(a, b)).collect();
    let mut min_vertices = vec![usize::MAX; e];
    let mut witness = vec![0; e];
    // Proper subsets only: the full edge set is H itself.
    for subset in 1u32..(1u32 << e) - 1 {
        let k = subset.count_ones() as usize;
        let mut m: EdgeMask = 0;
        for (t, &b) in bits.iter().enumerate() {
            if subset >> t & 1 == 1 {
                m |= b;
            }
        }
        let nv = vertex_mask(m).count_ones() as usize;
        if nv < min_vertices[k] {
            min_vertices[k] = nv;
            witness[k] = m;
        }
    }
    Ok(SubgraphProfile {
        min_vertices,
        witness,
    })
}

/// Density and strict balancedness of a pattern.
#[derive(Clone, Debug, Serialize)]
pub struct Balance {
    pub density: f64,
    pub strictly_balanced: bool,
    /// A densest proper subgraph with at least one edge; `None` for a single
    /// edge, which has none.
    pub witness: Option<PatternGraph>,
    pub witness_density: Option<f64>,
}

/// Scans every proper edge subset (at most 2^24).
pub fn density_and_balance(h: &PatternGraph) -> Result<Balance> {
    let profile = h.profile()?;
    let (e, v) = (h.e(), h.v());
    let mut best: Option<(usize, usize)> = None;
    for k in 1..e {
        let nv = profile.min_vertices[k];
        // Denser (or equally dense with more edges) than the current best.
        let better = match best {
            None => true,
            Some((bk, bv)) => k * bv > bk * nv || (k * bv == bk * nv && k > bk),
        };
        if better {
            best = Some((k, nv));
        }
    }
    let strictly_balanced = best.is_none_or(|(k, nv)| k * v < e * nv);
    let witness = match best {
        Some((k, _)) => Some(h.subgraph_from_mask(profile.witness[k])?),
        None => None,
    };
    Ok(Balance {
        density: h.density(),
        strictly_balanced,
        witness_density: witness.as_ref().map(PatternGraph::density),
        witness,
    })
}

/// `min {v' − e'/alpha : H' ⊊ H, e' > 0}`; `+∞` when `H` is a single edge.
pub fn gamma_subgraph(h: &PatternGraph, alpha: f64) -> Result<f64> {
    let profile = h.profile()?;
    Ok((1..h.e())
        .map(|k| profile.min_vertices[k] as f64 - k as f64 / alpha)
        .fold(f64::INFINITY, f64::min))
}

/// Exponents attached to one pattern at the scaling `p = c n^{-1/alpha}`.
#[derive(Clone, Debug, Serialize)]
pub struct GammaEta {
    pub alpha: f64,
    /// Minimum of `v' − e'/alpha` over proper subgraphs with edges.
    pub gamma_subgraph: f64,
    /// Minimum of `ℓ_k − k/alpha` over shared-edge counts `k < e` of two
    /// distinct copies.
    pub gamma_overlap: f64,
    /// As `gamma_overlap`, also admitting `k = e` (a copy paired with
    /// itself, `ℓ = v`).
    pub gamma_overlap_full: f64,
    /// `v (d/alpha − 1)`.
    pub eta: f64,
}

pub fn gamma_eta(h: &PatternGraph, alpha: f64) -> Result<GammaEta> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param(format!("alpha must be positive, got {alpha}")));
    }
    let table = overlap_table(h, h)?;
    let proper = table.shared_edge_stats(false);
    let full = table.shared_edge_stats(true);
    Ok(GammaEta {
        alpha,
        gamma_subgraph: gamma_subgraph(h, alpha)?,
        gamma_overlap: proper.gamma(alpha),
        gamma_overlap_full: full.gamma(alpha),
        eta: h.v() as f64 * (h.density() / alpha - 1.0),
    })
}

/// Ordered pairs of copies classified by shared edges `k` and the size `s`
/// of the union of their vertex sets.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapTable {
    pub first: String,
    pub second: String,
    pub v: (usize, usize),
    pub e: (usize, usize),
    /// Whether both sides are the same pattern, so that the identical pair
    /// is present.
    pub same_pattern: bool,
    /// `N_{k,s}`: pairs on the labeled vertex set `[s]` whose vertex sets
    /// together cover `[s]`.
    pub entries: BTreeMap<(usize, usize), u128>,
    /// For one fixed copy `α` of the first pattern on `[v_i]`: the number of
    /// copies `β` of the second with `V(α) ∪ V(β) = [s]` and `k` shared
    /// edges.
    pub anchored: BTreeMap<(usize, usize), u128>,
    /// Least number of vertices incident to the shared edges, per `k ≥ 1`,
    /// over distinct pairs.
    pub min_ell: BTreeMap<usize, usize>,
}

impl OverlapTable {
    /// `Σ_{k,s} N_{k,s} C(n,s)`, which must equal `|Γ_i| |Γ_j|`.
    pub fn total_pairs(&self, n: u64) -> f64 {
        self.entries
            .iter()
            .map(|(&(_, s), &c)| c as f64 * binomial(n, s as u64))
            .sum()
    }

    pub fn shared_edge_stats(&self, include_identical: bool) -> SharedEdgeStats {
        let mut ell = self.min_ell.clone();
        if include_identical && self.same_pattern {
            ell.insert(self.e.0, self.v.0);
        }
        let m = ell.keys().next_back().copied().unwrap_or(0);
        let table: BTreeMap<usize, usize> = (1..=m)
            .map(|k| (k, ell.get(&k).copied().unwrap_or(0)))
            .collect();
        let k_set = table.iter().filter(|e| *e.1 > 0).map(|e| *e.0).collect();
        SharedEdgeStats {
            m,
            ell: table,
            k_set,
            include_identical: include_identical && self.same_pattern,
        }
    }
}

/// `M_{i,j}`, `ℓ_{k,i,j}` and `𝒦_{i,j}` for a pattern pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharedEdgeStats {
    pub m: usize,
    /// `ℓ_k` for `k` in `1..=m`; zero where `k` shared edges are impossible.
    pub ell: BTreeMap<usize, usize>,
    pub k_set: Vec<usize>,
    pub include_identical: bool,
}

impl SharedEdgeStats {
    /// `min_{k ∈ 𝒦} (ℓ_k − k/alpha)`; `+∞` for an empty set.
    pub fn gamma(&self, alpha: f64) -> f64 {
        self.k_set
            .iter()
            .map(|&k| self.ell[&k] as f64 - k as f64 / alpha)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the overlap table of a pattern pair.
///
/// By symmetry every copy `α` of `H_i` sees the same pattern of partners, so
/// one copy is anchored on `[v_i]` and the partners `β` are enumerated on
/// `T ∪ {v_i, …, s−1}` for every subset `T ⊆ [v_i]` of size `v_i + v_j − s`.
pub fn overlap_table(hi: &PatternGraph, hj: &PatternGraph) -> Result<OverlapTable> {
    let (vi, vj) = (hi.v(), hj.v());
    if vi + vj > MAX_OVERLAP_VERTICES {
        return Err(Error::resource(
            "overlap table vertices",
            (vi + vj) as u128,
            MAX_OVERLAP_VERTICES as u128,
        ));
    }
    let same = hi == hj;
    let alpha = hi.labeled_copies()[0];
    let alpha_copies = hi.labeled_copies().len() as u128;
    let mut anchored: BTreeMap<(usize, usize), u128> = BTreeMap::new();
    let mut min_ell: BTreeMap<usize, usize> = BTreeMap::new();
    for s in vi.max(vj)..=vi + vj {
        let t = vi + vj - s;
        for shared in subsets(vi, t) {
            // Vertex map from [v_j] onto T ∪ {v_i..s-1}.
            let mut target: Vec<usize> = (0..vi).filter(|x| shared >> x & 1 == 1).collect();
            target.extend(vi..s);
            for &beta0 in hj.labeled_copies() {
                let beta = remap(beta0, &target);
                let common = alpha & beta;
                let k = common.count_ones() as usize;
                *anchored.entry((k, s)).or_insert(0) += 1;
                if k > 0 && !(same && beta == alpha) {
                    let ell = vertex_mask(common).count_ones() as usize;
                    let slot = min_ell.entry(k).or_insert(ell);
                    *slot = (*slot).min(ell);
                }
            }
        }
    }
    let entries = anchored
        .iter()
        .map(|(&(k, s), &c)| {
            (
                (k, s),
                c * binomial(s as u64, vi as u64) as u128 * alpha_copies,
            )
        })
        .collect();
    Ok(OverlapTable {
        first: hi.name().to_string(),
        second: hj.name().to_string(),
        v: (vi, vj),
        e: (hi.e(), hj.e()),
        same_pattern: same,
        entries,
        anchored,
        min_ell,
    })
}

/// `M`, `ℓ` and `𝒦` of a pattern pair; the identical pair is left out unless
/// `include_identical` is set.
pub fn shared_edge_stats(
    hi: &PatternGraph,
    hj: &PatternGraph,
    include_identical: bool,
) -> Result<SharedEdgeStats> {
    Ok(overlap_table(hi, hj)?.shared_edge_stats(include_identical))
}

/// Bit masks of all `t`-subsets of `[v]`.
fn subsets(v: usize, t: usize) -> impl Iterator<Item = u32> {
    (0u32..1 << v).filter(move |m| m.count_ones() as usize == t)
}

/// Relabels a mask on `[target.len()]` by `x ↦ target[x]`.
pub fn remap(mask: EdgeMask, target: &[usize]) -> EdgeMask {
    let mut out = 0;
    let mut rest = mask;
    while rest != 0 {
        let (a, b) = pair_of_index(rest.trailing_zeros() as usize);
        out |= pair_bit(target[a], target[b]);
        rest &= rest - 1;
    }
    out
}

/// Every copy of `h` in `K_n` as an edge mask over `[n]`.
pub fn copy_masks(h: &PatternGraph, n: usize) -> Result<Vec<EdgeMask>> {
    if n > MAX_COPY_HOST {
        return Err(Error::resource(
            "host vertices for copy lists",
            n as u128,
            MAX_COPY_HOST as u128,
        ));
    }
    let count = h.copies_in_complete(n as u64) as u128;
    if count > MAX_COPY_LIST {
        return Err(Error::resource("copies", count, MAX_COPY_LIST));
    }
    let mut out = Vec::with_capacity(count as usize);
    if h.v() > n {
        return Ok(out);
    }
    for verts in subsets(n, h.v()) {
        let target: Vec<usize> = (0..n).filter(|x| verts >> x & 1 == 1).collect();
        out.extend(h.labeled_copies().iter().map(|&c| remap(c, &target)));
    }
    Ok(out)
}

/// Every copy of `h` in `K_n` as a sorted list of 0-based edges.
pub fn enumerate_copies(h: &PatternGraph, n: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    Ok(copy_masks(h, n)?
        .into_iter()
        .map(|m| {
            let mut edges = Vec::new();
            let mut rest = m;
            while rest != 0 {
                edges.push(pair_of_index(rest.trailing_zeros() as usize));
                rest &= rest - 1;
            }
            edges
        })
        .collect())
}

/// Parses a builtin name (`edge`, `triangle`, `path_k`, `cycle_k`,
/// `complete_k`, `star_k`) or the edge-list form `v=5; edges=1-2,2-3`.
pub fn parse_pattern(text: &str) -> Result<PatternGraph> {
    let trimmed = text.trim();
    if trimmed.starts_with("v=") || trimmed.starts_with("v =") {
        return parse_edge_list(text);
    }
    let lead = text.len() - text.trim_start().len();
    let bad = |msg: String| parse_error(text, lead, msg);
    match trimmed {
        "edge" => return Ok(PatternGraph::edge()),
        "triangle" => return Ok(PatternGraph::triangle()),
        _ => {}
    }
    let (kind, arg) = trimmed
        .split_once('_')
        .ok_or_else(|| bad(format!("unknown pattern `{trimmed}`")))?;
    let k: usize = arg.parse().map_err(|_| {
        parse_error(
            text,
            lead + kind.len() + 1,
            format!("expected an integer, found `{arg}`"),
        )
    })?;
    let built = match kind {
        "path" => PatternGraph::path(k),
        "cycle" => PatternGraph::cycle(k),
        "complete" => PatternGraph::complete(k),
        "star" => PatternGraph::star(k),
        _ => return Err(bad(format!("unknown pattern family `{kind}`"))),
    };
    built.map_err(|e| bad(e.to_string()))
}

/// Splits a pattern list. An edge-list pattern is taken whole; otherwise
/// entries are separated by commas.
pub fn parse_pattern_list(text: &str) -> Result<Vec<PatternGraph>> {
    if text.contains('=') {
        return Ok(vec![parse_pattern(text)?]);
    }
    let mut out = Vec::new();
    let mut offset = 0;
    for part in text.split(',') {
        let p = parse_pattern(part).map_err(|e| match e {
            Error::Parse {
                line,
                column,
                message,
            } => Error::Parse {
                line,
                column: column + offset,
                message,
            },
            other => other,
        })?;
        out.push(p);
        offset += part.len() + 1;
    }
    Ok(out)
}

fn parse_error(text: &str, byte: usize, message: String) -> Error {
    let before = &text[..byte.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Error::Parse {
        line,
        column,
        message,
    }
}

fn parse_edge_list(text: &str) -> Result<PatternGraph> {
    let mut v: Option<usize> = None;
    let mut edges = Vec::new();
    let mut saw_edges = false;
    let mut pos = 0;
    for field in text.split(';') {
        let start = pos + field.len() - field.trim_start().len();
        pos += field.len() + 1;
        let f = field.trim();
        if f.is_empty() {
            continue;
        }
        let (key, value) = f.split_once('=').ok_or_else(|| {
            parse_error(text, start, format!("expected `key=value`, found `{f}`"))
        })?;
        let value_start = start + key.len() + 1 + (value.len() - value.trim_start().len());
        match key.trim() {
            "v" => {
                let n = value.trim().parse().map_err(|_| {
                    parse_error(
                        text,
                        value_start,
                        format!("invalid vertex count `{}`", value.trim()),
                    )
                })?;
                v = Some(n);
            }
            "edges" => {
                saw_edges = true;
                let mut epos = value_start;
                for item in value.trim().split(',') {
                    let istart = epos + item.len() - item.trim_start().len();
                    epos += item.len() + 1;
                    let (a, b) = item.trim().split_once('-').ok_or_else(|| {
                        parse_error(
                            text,
                            istart,
                            format!("expected `a-b`, found `{}`", item.trim()),
                        )
                    })?;
                    let parse_end = |s: &str, at: usize| -> Result<usize> {
                        match s.trim().parse::<usize>() {
                            Ok(x) if x >= 1 => Ok(x - 1),
                            _ => Err(parse_error(
                                text,
                                at + s.len() - s.trim_start().len(),
                                format!("invalid vertex `{}` (vertices are 1-indexed)", s.trim()),
                            )),
                        }
                    };
                    let b_start = istart + a.len() + 1;
                    edges.push((parse_end(a, istart)?, parse_end(b, b_start)?));
                }
            }
            other => {
                return Err(parse_error(text, start, format!("unknown key `{other}`")));
            }
        }
    }
    let v = v.ok_or_else(|| parse_error(text, 0, "missing `v=`".into()))?;
    if !saw_edges {
        return Err(parse_error(text, text.len(), "missing `edges=`".into()));
    }
    PatternGraph::new(text.trim().to_string(), v, &edges).map_err(|e| match e {
        Error::Parameter(msg) => parse_error(text, 0, msg),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn automorphisms() {
        assert_eq!(PatternGraph::triangle().automorphism_count(), 6);
        assert_eq!(PatternGraph::path(2).unwrap().automorphism_count(), 2);
        assert_eq!(PatternGraph::cycle(4).unwrap().automorphism_count(), 8);
        assert_eq!(PatternGraph::complete(4).unwrap().automorphism_count(), 24);
        assert_eq!(PatternGraph::star(3).unwrap().automorphism_count(), 6);
        assert_eq!(PatternGraph::edge().automorphism_count(), 2);
    }

    #[test]
    fn pair_index_roundtrip() {
        for b in 1..16 {
            for a in 0..b {
                let bit = pair_bit(a, b);
                assert_eq!(pair_of_index(bit.trailing_zeros() as usize), (a, b));
            }
        }
    }

    #[test]
    fn balance_examples() {
        let t = density_and_balance(&PatternGraph::triangle()).unwrap();
        assert_eq!(t.density, 1.0);
        assert!(t.strictly_balanced);
        // The densest proper subgraph of a triangle is the two-edge path.
        assert!(t
            .witness
            .unwrap()
            .is_isomorphic(&PatternGraph::path(2).unwrap()));

        let two =
            PatternGraph::new("2C3", 6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let b = density_and_balance(&two).unwrap();
        assert_eq!(b.density, 1.0);
        assert!(!b.strictly_balanced);
        assert!(b.witness.unwrap().is_isomorphic(&PatternGraph::triangle()));

        let k4 = density_and_balance(&PatternGraph::complete(4).unwrap()).unwrap();
        assert_eq!(k4.density, 1.5);
        assert!(k4.strictly_balanced);
        assert_eq!(k4.witness_density, Some(1.25));

        let e = density_and_balance(&PatternGraph::edge()).unwrap();
        assert!(e.strictly_balanced && e.witness.is_none());
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_subgraph(&PatternGraph::triangle(), 1.0).unwrap(), 1.0);
        for k in 3..=8 {
            assert_eq!(
                gamma_subgraph(&PatternGraph::cycle(k).unwrap(), 1.0).unwrap(),
                1.0
            );
        }
        let g = gamma_eta(&PatternGraph::triangle(), 0.5).unwrap();
        assert_eq!(g.eta, 3.0);
        let g = gamma_eta(&PatternGraph::triangle(), 1.0).unwrap();
        assert_eq!(g.gamma_overlap, 1.0);
        assert_eq!(g.gamma_overlap_full, 0.0);
        assert!(gamma_eta(&PatternGraph::triangle(), 0.0).is_err());
    }

    #[test]
    fn copy_counts() {
        assert_eq!(copy_masks(&PatternGraph::triangle(), 5).unwrap().len(), 10);
        assert_eq!(copy_masks(&PatternGraph::edge(), 4).unwrap().len(), 6);
        assert_eq!(
            copy_masks(&PatternGraph::cycle(4).unwrap(), 4)
                .unwrap()
                .len(),
            3
        );
        assert!(copy_masks(&PatternGraph::edge(), 13).is_err());
        assert!(copy_masks(&PatternGraph::cycle(5).unwrap(), 4)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn overlap_examples() {
        let e = PatternGraph::edge();
        let t = overlap_table(&e, &e).unwrap();
        assert_eq!(t.entries[&(1, 2)], 1);
        assert_eq!(t.total_pairs(5), 100.0);

        let tri = PatternGraph::triangle();
        let t = overlap_table(&tri, &tri).unwrap();
        assert_eq!(t.entries[&(3, 3)], 1);
        assert_eq!(t.min_ell.keys().max(), Some(&1));
        assert_eq!(t.min_ell[&1], 2);

        let c4 = PatternGraph::cycle(4).unwrap();
        let t = overlap_table(&tri, &c4).unwrap();
        assert!(t.entries.iter().all(|(&(k, _), &c)| k < 3 || c == 0));
    }

    #[test]
    fn cycle_stats() {
        for ki in 3..=5 {
            for kj in ki + 1..=6 {
                let s = shared_edge_stats(
                    &PatternGraph::cycle(ki).unwrap(),
                    &PatternGraph::cycle(kj).unwrap(),
                    false,
                )
                .unwrap();
                assert_eq!(s.m, ki - 1);
                for k in 1..ki {
                    assert_eq!(s.ell[&k], k + 1);
                }
            }
        }
    }

    #[test]
    fn parsing() {
        let p = parse_pattern("v=3; edges=1-2,2-3,1-3").unwrap();
        assert!(p.is_isomorphic(&PatternGraph::triangle()));
        assert_eq!(parse_pattern("cycle_4").unwrap().v(), 4);
        let list = parse_pattern_list("cycle_3,cycle_4").unwrap();
        assert_eq!(list.len(), 2);
        match parse_pattern("v=3; edges=1-2,2-x").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (1, 18)),
            e => panic!("{e:?}"),
        }
        match parse_pattern_list("cycle_3,blob_4").unwrap_err() {
            Error::Parse { column, .. } => assert_eq!(column, 9),
            e => panic!("{e:?}"),
        }
        assert!(parse_pattern("v=4; edges=1-2,3-4,1-1").is_err());
        assert!(parse_pattern("v=4; edges=1-2").is_err());
        assert!(parse_pattern("cycle_2").is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let k4 = PatternGraph::complete(4).unwrap();
        let back = parse_pattern(&k4.to_edge_list()).unwrap();
        assert_eq!(back, k4);
        assert_eq!(
            PatternGraph::path(2).unwrap().to_edge_list(),
            "v=3; edges=1-2,2-3"
        );
    }
}

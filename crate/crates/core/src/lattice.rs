//! Finitely supported distributions on the integer lattice ℕ₀^d.
//!
//! Total variation is computed by a merge over the two supports. The
//! Wasserstein distance uses the 1-norm as ground cost and is solved exactly
//! as a transportation problem (see [`crate::transport`]). Product Poisson laws
//! are handled through [`TruncatedPoissonProduct`], which carries a certified
//! bound on the error introduced by cutting the support to a finite box.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport;

/// A point of ℕ₀^d.
pub type Point = Vec<u64>;

/// Tolerance on the total mass of a probability distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Default cap on `|supp P| · |supp Q|` for the exact transport solver.
pub const DEFAULT_TRANSPORT_CAP: u64 = 4_000_000;

/// Masses are converted to integers of this many units before solving.
const TRANSPORT_UNITS: i64 = 1 << 60;

/// A probability distribution with finite support on ℕ₀^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeWire", into = "LatticeWire")]
pub struct LatticeDistribution {
    dim: usize,
    atoms: BTreeMap<Point, f64>,
}

/// JSON layout: `{"d": 2, "atoms": [[[0, 1], 0.25], ...]}`.
#[derive(Serialize, Deserialize)]
struct LatticeWire {
    d: usize,
    atoms: Vec<(Point, f64)>,
}

impl TryFrom<LatticeWire> for LatticeDistribution {
    type Error = Error;

    fn try_from(w: LatticeWire) -> Result<Self> {
        LatticeDistribution::new(w.d, w.atoms)
    }
}

impl From<LatticeDistribution> for LatticeWire {
    fn from(p: LatticeDistribution) -> Self {
        LatticeWire {
            d: p.dim,
            atoms: p.atoms.into_iter().collect(),
        }
    }
}

impl LatticeDistribution {
    /// Builds a distribution, checking dimensions, distinctness, signs and
    /// that the masses sum to one within [`MASS_TOLERANCE`]. Zero-mass atoms
    /// are dropped.
    pub fn new(dim: usize, atoms: impl IntoIterator<Item = (Point, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("lattice dimension must be positive"));
        }
        let mut map = BTreeMap::new();
        let mut total = 0.0;
        for (point, mass) in atoms {
            if point.len() != dim {
                return Err(Error::param(format!(
                    "point {point:?} has dimension {}, expected {dim}",
                    point.len()
                )));
            }
            if !(mass >= 0.0 && mass.is_finite()) {
                return Err(Error::param(format!("invalid mass {mass} at {point:?}")));
            }
            total += mass;
            if mass == 0.0 {
                if map.contains_key(&point) {
                    return Err(Error::param(format!("duplicate atom {point:?}")));
                }
                continue;
            }
            if map.insert(point.clone(), mass).is_some() {
                return Err(Error::param(format!("duplicate atom {point:?}")));
            }
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::param(format!("masses sum to {total}, not 1")));
        }
        Ok(LatticeDistribution { dim, atoms: map })
    }

    /// The Dirac mass at `point`.
    pub fn point_mass(point: Point) -> Self {
        let dim = point.len().max(1);
        let mut atoms = BTreeMap::new();
        atoms.insert(point, 1.0);
        LatticeDistribution { dim, atoms }
    }

    /// Normalizes nonnegative integer counts into frequencies.
    pub fn from_counts(dim: usize, counts: &BTreeMap<Point, u64>) -> Result<Self> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::param("no samples"));
        }
        let n = total as f64;
        Self::new(dim, counts.iter().map(|(k, &c)| (k.clone(), c as f64 / n)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms with positive mass.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.atoms.iter().map(|(k, &m)| (k, m))
    }

    pub fn mass(&self, point: &[u64]) -> f64 {
        self.atoms.get(point).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for (k, m) in self.atoms() {
            for (acc, &x) in mean.iter_mut().zip(k) {
                *acc += m * x as f64;
            }
        }
        mean
    }

    /// Law of the coordinates listed in `coords`, in that order.
    pub fn project(&self, coords: &[usize]) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|&c| c >= self.dim) {
            return Err(Error::param(format!(
                "invalid projection {coords:?} of a {}-dimensional law",
                self.dim
            )));
        }
        let mut atoms: BTreeMap<Point, f64> = BTreeMap::new();
        for (k, m) in self.atoms() {
            let p: Point = coords.iter().map(|&c| k[c]).collect();
            *atoms.entry(p).or_insert(0.0) += m;
        }
        Ok(LatticeDistribution {
            dim: coords.len(),
            atoms,
        })
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::param(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

/// Half the L1 distance between the two mass functions.
pub fn tv_distance(p: &LatticeDistribution, q: &LatticeDistribution) -> Result<f64> {
    p.check_dims(q)?;
    let mut sum = 0.0;
    for (k, &m) in &p.atoms {
        sum += (m - q.mass(k)).abs();
    }
    for (k, &m) in &q.atoms {
        if !p.atoms.contains_key(k) {
            sum += m;
        }
    }
    Ok((0.5 * sum).min(1.0))
}

/// An optimal coupling together with its cost.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub cost: f64,
    /// `(from, to, mass)` triples; mass that stays in place appears with
    /// `from == to`.
    pub moves: Vec<(Point, Point, f64)>,
}

/// Exact Wasserstein distance with the 1-norm ground cost.
pub fn wasserstein_distance(p: &LatticeDistribution, q: &LatticeDistribution) -> Result<f64> {
    Ok(optimal_transport(p, q, DEFAULT_TRANSPORT_CAP)?.cost)
}

/// Solves the transport problem between `p` and `q` exactly, failing with a
/// resource error when `|supp p| · |supp q|` exceeds `cap`.
pub fn optimal_transport(
    p: &LatticeDistribution,
    q: &LatticeDistribution,
    cap: u64,
) -> Result<TransportPlan> {
    p.check_dims(q)?;
    let pairs = p.len() as u128 * q.len() as u128;
    if pairs > cap as u128 {
        return Err(Error::resource("transport atom pairs", pairs, cap));
    }

    let pa: Vec<(&Point, f64)> = p.atoms().collect();
    let qa: Vec<(&Point, f64)> = q.atoms().collect();
    let pu = quantize(&pa.iter().map(|a| a.1).collect::<Vec<_>>());
    let qu = quantize(&qa.iter().map(|a| a.1).collect::<Vec<_>>());

    // Under a metric cost, mass common to both laws at the same point can stay
    // put in some optimal plan, so only the excess on each side is transported.
    let mut stay = Vec::new();
    let mut supply = Vec::new();
    let mut demand = Vec::new();
    let q_index: BTreeMap<&Point, usize> = qa.iter().enumerate().map(|(j, a)| (a.0, j)).collect();
    let mut q_left = qu.clone();
    for (i, (k, _)) in pa.iter().enumerate() {
        let mut left = pu[i];
        if let Some(&j) = q_index.get(k) {
            let common = left.min(q_left[j]);
            if common > 0 {
                stay.push(((*k).clone(), common));
            }
            left -= common;
            q_left[j] -= common;
        }
        if left > 0 {
            supply.push((i, left));
        }
    }
    for (j, &left) in q_left.iter().enumerate() {
        if left > 0 {
            demand.push((j, left));
        }
    }

    let scale = TRANSPORT_UNITS as f64;
    let mut moves: Vec<(Point, Point, f64)> = stay
        .into_iter()
        .map(|(k, u)| (k.clone(), k, u as f64 / scale))
        .collect();
    let mut cost = 0.0;
    if !supply.is_empty() {
        let s: Vec<i64> = supply.iter().map(|x| x.1).collect();
        let d: Vec<i64> = demand.iter().map(|x| x.1).collect();
        let dist = |a: usize, b: usize| -> i64 {
            let x = pa[supply[a].0].0;
            let y = qa[demand[b].0].0;
            x.iter().zip(y).map(|(&u, &v)| u.abs_diff(v) as i64).sum()
        };
        let plan = transport::solve(&s, &d, dist)?;
        cost = plan.cost as f64 / scale;
        for (a, b, f) in plan.flows {
            moves.push((
                pa[supply[a].0].0.clone(),
                qa[demand[b].0].0.clone(),
                f as f64 / scale,
            ));
        }
    }
    Ok(TransportPlan { cost, moves })
}

/// Integer masses summing exactly to [`TRANSPORT_UNITS`], by largest
/// remainder.
fn quantize(masses: &[f64]) -> Vec<i64> {
    let total: f64 = masses.iter().sum();
    let scale = TRANSPORT_UNITS as f64;
    let mut units = Vec::with_capacity(masses.len());
    let mut frac = Vec::with_capacity(masses.len());
    for &m in masses {
        let raw = m / total * scale;
        let fl = raw.floor();
        units.push(fl as i64);
        frac.push(raw - fl);
    }
    let assigned: i128 = units.iter().map(|&u| u as i128).sum();
    let diff = TRANSPORT_UNITS as i128 - assigned;
    // Rounding of the scaled masses can leave `diff` of either sign and
    // larger than the atom count. Small positive gaps go to the largest
    // remainders; anything else is absorbed by the heaviest atom.
    if diff > 0 && diff <= masses.len() as i128 {
        let mut order: Vec<usize> = (0..masses.len()).collect();
        order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));
        for &i in order.iter().take(diff as usize) {
            units[i] += 1;
        }
    } else if diff != 0 {
        let heaviest = (0..units.len())
            .max_by_key(|&i| (units[i], std::cmp::Reverse(i)))
            .unwrap();
        units[heaviest] += diff as i64;
    }
    units
}

/// W1 in one dimension as `Σ_t |F_P(t) − F_Q(t)|`.
pub fn wasserstein_1d_oracle(p: &LatticeDistribution, q: &LatticeDistribution) -> Result<f64> {
    if p.dim != 1 || q.dim != 1 {
        return Err(Error::param("the cdf oracle needs one-dimensional laws"));
    }
    let mut deltas: BTreeMap<u64, f64> = BTreeMap::new();
    for (k, m) in p.atoms() {
        *deltas.entry(k[0]).or_insert(0.0) += m;
    }
    for (k, m) in q.atoms() {
        *deltas.entry(k[0]).or_insert(0.0) -= m;
    }
    let mut sum = 0.0;
    let mut cdf_gap = 0.0;
    let mut iter = deltas.into_iter().peekable();
    while let Some((x, d)) = iter.next() {
        cdf_gap += d;
        if let Some(&(next, _)) = iter.peek() {
            sum += cdf_gap.abs() * (next - x) as f64;
        }
    }
    Ok(sum)
}

/// Frequencies of the given sample points.
pub fn empirical_distribution(samples: &[Point]) -> Result<LatticeDistribution> {
    let first = samples
        .first()
        .ok_or_else(|| Error::param("empirical distribution of an empty sample"))?;
    let dim = first.len();
    let mut counts: BTreeMap<Point, u64> = BTreeMap::new();
    for s in samples {
        if s.len() != dim {
            return Err(Error::param("samples of inconsistent dimension"));
        }
        *counts.entry(s.clone()).or_insert(0) += 1;
    }
    LatticeDistribution::from_counts(dim, &counts)
}

/// Poisson(λ) mass function `e^{-λ} λ^k / k!`.
pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    if k == 0 {
        return (-lambda).exp();
    }
    let mut log = -lambda;
    for j in 1..=k {
        log += (lambda / j as f64).ln();
    }
    log.exp()
}

/// Mass function of Poisson(λ) on `0..=K` and upper tails `P(X > k)`, with
/// `K` far enough that the neglected mass is below `floor`.
struct PoissonTable {
    pmf: Vec<f64>,
    tail: Vec<f64>,
}

impl PoissonTable {
    fn new(lambda: f64, floor: f64) -> Self {
        let mut pmf = vec![(-lambda).exp()];
        let mut log = -lambda;
        let ln_lambda = lambda.ln();
        let mut k = 0u64;
        loop {
            k += 1;
            log += ln_lambda - (k as f64).ln();
            let v = log.exp();
            pmf.push(v);
            if k as f64 > lambda && v < floor {
                break;
            }
        }
        // Reverse accumulation keeps small tails accurate.
        let mut tail = vec![0.0; pmf.len()];
        let mut acc = 0.0;
        for i in (0..pmf.len()).rev() {
            tail[i] = acc;
            acc += pmf[i];
        }
        PoissonTable { pmf, tail }
    }

    /// `P(X > k)`.
    fn tail(&self, k: usize) -> f64 {
        self.tail.get(k).copied().unwrap_or(0.0)
    }

    /// `E[(X − t)^+] = Σ_{k ≥ t} P(X > k)`, stopping once terms drop below 1e-16.
    fn excess_mean(&self, t: usize) -> f64 {
        let mut sum = 0.0;
        for k in t.. {
            let term = self.tail(k);
            sum += term;
            if term < 1e-16 {
                break;
            }
        }
        sum
    }
}

/// The product law of independent Poisson(λ_i) coordinates cut to the box
/// `Π [0, T_i]`.
#[derive(Clone, Debug, Serialize)]
pub struct TruncatedPoissonProduct {
    pub lambda: Vec<f64>,
    /// Per-coordinate caps `T_i`.
    pub caps: Vec<u64>,
    /// Marginal mass functions on `0..=T_i`.
    pub marginals: Vec<Vec<f64>>,
    /// `P(P_i ≥ T_i)`: what the clamped marginal puts on `T_i`.
    pub clamped_top: Vec<f64>,
    /// Total product mass outside the box.
    pub tail_mass: f64,
    /// Certified bound on the Wasserstein error from truncation:
    /// `Σ_i E[(P_i − T_i)^+] + (Σ_i T_i) · tail_mass`.
    pub dw_error_budget: f64,
}

impl TruncatedPoissonProduct {
    /// Truncates 𝐏_𝛌 so that at most `eps` of its mass lies outside the box.
    /// The tail allowance is split evenly: `T_i` is the least integer with
    /// `P(P_i > T_i) ≤ eps / d`.
    pub fn new(lambda: &[f64], eps: f64) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::param("empty intensity vector"));
        }
        if let Some(l) = lambda.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::param(format!(
                "Poisson intensity must be positive, got {l}"
            )));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::param(format!("eps must lie in (0,1), got {eps}")));
        }
        let d = lambda.len();
        let share = eps / d as f64;
        let floor = (share * 1e-6).min(1e-20);
        let mut caps = Vec::with_capacity(d);
        let mut marginals = Vec::with_capacity(d);
        let mut clamped_top = Vec::with_capacity(d);
        let mut log_inside = 0.0;
        let mut excess = 0.0;
        for &l in lambda {
            let table = PoissonTable::new(l, floor);
            let t = (0..)
                .find(|&t| table.tail(t) <= share)
                .expect("tail vanishes");
            caps.push(t as u64);
            marginals.push(table.pmf[..=t].to_vec());
            clamped_top.push(table.pmf[t] + table.tail(t));
            log_inside += (-table.tail(t)).ln_1p();
            excess += table.excess_mean(t);
        }
        let tail_mass = -log_inside.exp_m1();
        let cap_sum: u64 = caps.iter().sum();
        let dw_error_budget = excess + cap_sum as f64 * tail_mass;
        Ok(TruncatedPoissonProduct {
            lambda: lambda.to_vec(),
            caps,
            marginals,
            clamped_top,
            tail_mass,
            dw_error_budget,
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn box_size(&self) -> u128 {
        self.caps.iter().map(|&t| t as u128 + 1).product()
    }

    fn for_each_box_point(&self, mut f: impl FnMut(&[u64])) {
        let d = self.dim();
        let mut point = vec![0u64; d];
        loop {
            f(&point);
            let mut c = 0;
            loop {
                if c == d {
                    return;
                }
                if point[c] < self.caps[c] {
                    point[c] += 1;
                    break;
                }
                point[c] = 0;
                c += 1;
            }
        }
    }

    /// Product mass restricted to the box, not renormalized.
    pub fn body(&self) -> Result<Vec<(Point, f64)>> {
        let size = self.box_size();
        if size > DEFAULT_TRANSPORT_CAP as u128 {
            return Err(Error::resource(
                "Poisson box atoms",
                size,
                DEFAULT_TRANSPORT_CAP,
            ));
        }
        let mut out = Vec::with_capacity(size as usize);
        self.for_each_box_point(|p| {
            let m: f64 = p
                .iter()
                .enumerate()
                .map(|(i, &k)| self.marginals[i][k as usize])
                .product();
            out.push((p.to_vec(), m));
        });
        Ok(out)
    }

    /// Total mass of [`Self::body`].
    pub fn body_mass(&self) -> f64 {
        self.marginals
            .iter()
            .map(|m| m.iter().sum::<f64>())
            .product()
    }

    /// The law of `min(P_i, T_i)` coordinatewise: the body with every tail
    /// atom moved to its nearest point of the box. Its Wasserstein distance to
    /// the untruncated product is at most `Σ_i E[(P_i − T_i)^+]`.
    pub fn collapsed(&self) -> Result<LatticeDistribution> {
        let size = self.box_size();
        if size > DEFAULT_TRANSPORT_CAP as u128 {
            return Err(Error::resource(
                "Poisson box atoms",
                size,
                DEFAULT_TRANSPORT_CAP,
            ));
        }
        let mut atoms = Vec::with_capacity(size as usize);
        self.for_each_box_point(|p| {
            let m: f64 = p
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    if k == self.caps[i] {
                        self.clamped_top[i]
                    } else {
                        self.marginals[i][k as usize]
                    }
                })
                .product();
            atoms.push((p.to_vec(), m));
        });
        LatticeDistribution::new(self.dim(), atoms)
    }
}

/// Shorthand for [`TruncatedPoissonProduct::new`].
pub fn poisson_product_truncated(lambda: &[f64], eps: f64) -> Result<TruncatedPoissonProduct> {
    TruncatedPoissonProduct::new(lambda, eps)
}

/// A distance to 𝐏_𝛌 together with the truncation budget that bounds how far
/// it may be from the distance to the untruncated law.
#[derive(Clone, Debug, Serialize)]
pub struct PoissonDistance {
    pub wasserstein: f64,
    pub total_variation: f64,
    pub budget: f64,
    pub tail_mass: f64,
}

/// Exact distances between `law` and the truncated (collapsed) product
/// Poisson law with intensities `lambda`.
pub fn distance_to_poisson(
    law: &LatticeDistribution,
    lambda: &[f64],
    eps: f64,
    cap: u64,
) -> Result<PoissonDistance> {
    if law.dim() != lambda.len() {
        return Err(Error::param("law and intensity vector differ in dimension"));
    }
    let target = TruncatedPoissonProduct::new(lambda, eps)?;
    let collapsed = target.collapsed()?;
    let plan = optimal_transport(law, &collapsed, cap)?;
    // For total variation the tail is compared against an empty remainder of
    // `law` outside the box; collapsing changes it by at most tail_mass.
    let tv = tv_distance(law, &collapsed)?;
    Ok(PoissonDistance {
        wasserstein: plan.cost,
        total_variation: tv,
        budget: target.dw_error_budget,
        tail_mass: target.tail_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn d1(atoms: &[(u64, f64)]) -> LatticeDistribution {
        LatticeDistribution::new(1, atoms.iter().map(|&(k, m)| (vec![k], m))).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(LatticeDistribution::new(1, vec![(vec![0], 0.5)]).is_err());
        assert!(LatticeDistribution::new(1, vec![(vec![0], 0.5), (vec![0], 0.5)]).is_err());
        assert!(LatticeDistribution::new(2, vec![(vec![0], 1.0)]).is_err());
        assert!(LatticeDistribution::new(1, vec![(vec![0], -0.5), (vec![1], 1.5)]).is_err());
        assert!(LatticeDistribution::new(0, vec![]).is_err());
    }

    #[test]
    fn tv_examples() {
        let a = d1(&[(0, 1.0)]);
        let b = d1(&[(1, 1.0)]);
        let bern = d1(&[(0, 0.5), (1, 0.5)]);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        assert_abs_diff_eq!(tv_distance(&bern, &a).unwrap(), 0.5);
        let c = LatticeDistribution::point_mass(vec![0, 0]);
        assert!(tv_distance(&a, &c).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        let a = LatticeDistribution::point_mass(vec![0, 0]);
        let b = LatticeDistribution::point_mass(vec![1, 1]);
        assert_abs_diff_eq!(wasserstein_distance(&a, &b).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(wasserstein_distance(&a, &a).unwrap(), 0.0);
        let bern = d1(&[(0, 0.5), (1, 0.5)]);
        let zero = d1(&[(0, 1.0)]);
        assert_abs_diff_eq!(
            wasserstein_distance(&bern, &zero).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(wasserstein_1d_oracle(&bern, &zero).unwrap(), 0.5);
    }

    #[test]
    fn oracle_examples() {
        let a = d1(&[(0, 1.0)]);
        let b = d1(&[(3, 1.0)]);
        assert_eq!(wasserstein_1d_oracle(&a, &a).unwrap(), 0.0);
        assert_eq!(wasserstein_1d_oracle(&a, &b).unwrap(), 3.0);
        let two = LatticeDistribution::point_mass(vec![0, 0]);
        assert!(wasserstein_1d_oracle(&two, &two).is_err());
    }

    #[test]
    fn truncated_poisson_against_oracle() {
        // Poisson(1) cut at 20 against δ_0: both routes must agree.
        let atoms: Vec<(u64, f64)> = (0..=20).map(|k| (k, poisson_pmf(1.0, k))).collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let pois = d1(&atoms
            .iter()
            .map(|&(k, m)| (k, if k == 20 { m + 1.0 - total } else { m }))
            .collect::<Vec<_>>());
        let zero = d1(&[(0, 1.0)]);
        let exact = wasserstein_distance(&pois, &zero).unwrap();
        let oracle = wasserstein_1d_oracle(&pois, &zero).unwrap();
        assert_abs_diff_eq!(exact, oracle, epsilon = 1e-10);
        assert_abs_diff_eq!(exact, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn plan_marginals() {
        let p = LatticeDistribution::new(
            2,
            vec![(vec![0, 0], 0.3), (vec![2, 1], 0.5), (vec![1, 4], 0.2)],
        )
        .unwrap();
        let q = LatticeDistribution::new(2, vec![(vec![0, 0], 0.6), (vec![3, 3], 0.4)]).unwrap();
        let plan = optimal_transport(&p, &q, DEFAULT_TRANSPORT_CAP).unwrap();
        let mut rows: BTreeMap<Point, f64> = BTreeMap::new();
        let mut cols: BTreeMap<Point, f64> = BTreeMap::new();
        let mut cost = 0.0;
        for (a, b, m) in &plan.moves {
            *rows.entry(a.clone()).or_default() += m;
            *cols.entry(b.clone()).or_default() += m;
            cost += m * a
                .iter()
                .zip(b)
                .map(|(x, y)| x.abs_diff(*y) as f64)
                .sum::<f64>();
        }
        for (k, m) in p.atoms() {
            assert_abs_diff_eq!(rows[k], m, epsilon = 1e-12);
        }
        for (k, m) in q.atoms() {
            assert_abs_diff_eq!(cols[k], m, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(cost, plan.cost, epsilon = 1e-12);
        // 0.3 stays; 0.3 of (2,1) goes to (0,0) at cost 3; 0.2 of (2,1) to (3,3)
        // at cost 3; 0.2 of (1,4) to (3,3) at cost 3.
        assert_abs_diff_eq!(plan.cost, 2.1, epsilon = 1e-12);
    }

    #[test]
    fn transport_cap() {
        let a = d1(&[(0, 0.5), (1, 0.5)]);
        assert!(matches!(
            optimal_transport(&a, &a, 3),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn truncation_examples() {
        let t = TruncatedPoissonProduct::new(&[1.0], 0.7).unwrap();
        assert_eq!(t.caps, vec![0]);
        assert_abs_diff_eq!(t.tail_mass, 1.0 - (-1.0f64).exp(), epsilon = 1e-14);
        let t = TruncatedPoissonProduct::new(&[1.0], 1e-12).unwrap();
        assert!(t.body_mass() >= 1.0 - 1e-12);
        assert_abs_diff_eq!(t.body_mass() + t.tail_mass, 1.0, epsilon = 1e-12);
        assert!(TruncatedPoissonProduct::new(&[0.0], 0.1).is_err());
        assert!(TruncatedPoissonProduct::new(&[1.0], 1.0).is_err());
        assert!(TruncatedPoissonProduct::new(&[1.0], 0.0).is_err());
    }

    #[test]
    fn truncation_caps_match_cdf_scan() {
        // Independent oracle: scan the cdf built from the closed-form pmf.
        let eps: f64 = 1e-9;
        let lambda = [0.5, 2.0];
        let t = TruncatedPoissonProduct::new(&lambda, eps).unwrap();
        for (i, &l) in lambda.iter().enumerate() {
            let mut cdf = 0.0;
            let mut cap = 0u64;
            loop {
                cdf += poisson_pmf(l, cap);
                if 1.0 - cdf <= eps / 2.0 {
                    break;
                }
                cap += 1;
            }
            assert_eq!(t.caps[i], cap, "coordinate {i}");
        }
        assert!(t.tail_mass <= eps);
        let body: f64 = t.body().unwrap().iter().map(|a| a.1).sum();
        assert_abs_diff_eq!(body + t.tail_mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn truncation_budget_dominates_formula() {
        let t = TruncatedPoissonProduct::new(&[3.0, 0.2, 7.5], 1e-6).unwrap();
        let mut excess = 0.0;
        for (i, &l) in t.lambda.iter().enumerate() {
            for k in t.caps[i] + 1..200 {
                excess += (k - t.caps[i]) as f64 * poisson_pmf(l, k);
            }
        }
        let cap_sum: u64 = t.caps.iter().sum();
        assert!(t.dw_error_budget >= excess + cap_sum as f64 * t.tail_mass - 1e-15);
        let c = t.collapsed().unwrap();
        let mean = c.mean();
        for i in 0..3 {
            assert!(mean[i] <= t.lambda[i] + 1e-12);
        }
    }

    #[test]
    fn empirical_examples() {
        let e = empirical_distribution(&[vec![0, 0], vec![0, 0], vec![1, 2]]).unwrap();
        assert_abs_diff_eq!(e.mass(&[0, 0]), 2.0 / 3.0);
        assert_abs_diff_eq!(e.mass(&[1, 2]), 1.0 / 3.0);
        let e = empirical_distribution(&[vec![5]]).unwrap();
        assert_eq!(e, LatticeDistribution::point_mass(vec![5]));
        assert!(empirical_distribution(&[]).is_err());
        assert!(empirical_distribution(&[vec![1], vec![1, 2]]).is_err());
    }

    #[test]
    fn json_layout() {
        let p = LatticeDistribution::new(2, vec![(vec![0, 1], 0.25), (vec![2, 0], 0.75)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"d":2,"atoms":[[[0,1],0.25],[[2,0],0.75]]}"#);
        let back: LatticeDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(
            serde_json::from_str::<LatticeDistribution>(r#"{"d":1,"atoms":[[[0],0.3]]}"#).is_err()
        );
    }
}

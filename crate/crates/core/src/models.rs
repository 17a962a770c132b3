//! Generic indicator models: independent Bernoulli blocks and arbitrary
//! tabulated joint laws over at most 24 indicators.

use rand::Rng;

use crate::coupling::{CoupledOutcome, ExhaustiveModel, IndicatorSumModel, SimRng};
use crate::error::{Error, Result};

/// Indicators laid out block by block in the bits of a `u64`.
#[derive(Clone, Debug)]
struct Layout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl Layout {
    fn new(sizes: Vec<usize>, max_bits: usize) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::param("blocks must be nonempty"));
        }
        let total: usize = sizes.iter().sum();
        if total > max_bits {
            return Err(Error::resource(
                "indicators",
                total as u128,
                max_bits as u128,
            ));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        Ok(Layout { sizes, offsets })
    }

    fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn bit(&self, i: usize, j: usize) -> u64 {
        1u64 << (self.offsets[i] + j)
    }

    fn block_count(&self, mask: u64, i: usize) -> u64 {
        let block = (u64::MAX >> (64 - self.sizes[i])) << self.offsets[i];
        (mask & block).count_ones() as u64
    }

    fn counts(&self, mask: u64) -> Vec<u64> {
        (0..self.sizes.len())
            .map(|i| self.block_count(mask, i))
            .collect()
    }

    /// Row `i` of the coupled array read off a mask in which `X^i_j = 1`.
    fn row(&self, mask: u64, i: usize) -> Vec<u64> {
        (0..=i).map(|b| self.block_count(mask, b)).collect()
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!(
            "success probability must lie in (0,1), got {p}"
        )));
    }
    Ok(())
}

/// Independent indicators with arbitrary success probabilities.
///
/// The coupling keeps the base realization and switches `X^i_{I_i}` on,
/// which is the conditional law by independence.
#[derive(Clone, Debug)]
pub struct IndependentBernoulli {
    probs: Vec<Vec<f64>>,
    layout: Layout,
}

impl IndependentBernoulli {
    /// At most 64 indicators in total.
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        let layout = Layout::new(probs.iter().map(Vec::len).collect(), 64)?;
        for &p in probs.iter().flatten() {
            check_probability(p)?;
        }
        Ok(IndependentBernoulli { probs, layout })
    }

    /// `d = 1`, `n` indicators with common probability `p`.
    pub fn binomial(n: usize, p: f64) -> Result<Self> {
        Self::new(vec![vec![p; n]])
    }

    pub fn probabilities(&self) -> &[Vec<f64>] {
        &self.probs
    }
}

impl IndicatorSumModel for IndependentBernoulli {
    type State = u64;
    type Index = usize;

    fn dim(&self) -> usize {
        self.probs.len()
    }

    fn block_size(&self, i: usize) -> u128 {
        self.probs[i].len() as u128
    }

    fn lambda(&self, i: usize) -> f64 {
        self.probs[i].iter().sum()
    }

    fn probability(&self, i: usize, j: u128) -> f64 {
        self.probs[i][j as usize]
    }

    fn sample_state(&self, rng: &mut SimRng) -> u64 {
        let mut mask = 0;
        for (i, block) in self.probs.iter().enumerate() {
            for (j, &p) in block.iter().enumerate() {
                if rng.random_bool(p) {
                    mask |= self.layout.bit(i, j);
                }
            }
        }
        mask
    }

    fn counts(&self, state: &u64) -> Vec<u64> {
        self.layout.counts(*state)
    }

    fn draw_index(&self, i: usize, rng: &mut SimRng) -> usize {
        draw_weighted(&self.probs[i], rng)
    }

    fn indicator(&self, state: &u64, i: usize, idx: &usize) -> bool {
        state & self.layout.bit(i, *idx) != 0
    }

    fn coupled_row(
        &self,
        state: &u64,
        i: usize,
        idx: &usize,
        _rng: &mut SimRng,
    ) -> Result<Vec<u64>> {
        Ok(self.layout.row(state | self.layout.bit(i, *idx), i))
    }
}

impl ExhaustiveModel for IndependentBernoulli {
    fn state_count(&self) -> u128 {
        1u128 << self.layout.total()
    }

    fn joint_law(&self) -> Result<Vec<(u64, f64)>> {
        let flat: Vec<f64> = self.probs.iter().flatten().copied().collect();
        Ok((0..1u64 << flat.len())
            .map(|mask| {
                let prob = flat
                    .iter()
                    .enumerate()
                    .map(|(b, &p)| if mask >> b & 1 == 1 { p } else { 1.0 - p })
                    .product();
                (mask, prob)
            })
            .collect())
    }

    fn index_law(&self, i: usize) -> Result<Vec<(usize, f64)>> {
        let lambda = self.lambda(i);
        Ok(self.probs[i]
            .iter()
            .enumerate()
            .map(|(j, &p)| (j, p / lambda))
            .collect())
    }

    fn coupled_outcomes(&self, i: usize, idx: &usize) -> Result<Vec<CoupledOutcome>> {
        let bit = self.layout.bit(i, *idx);
        Ok(self
            .joint_law()?
            .into_iter()
            .map(|(mask, prob)| CoupledOutcome {
                w: self.layout.counts(mask),
                row: self.layout.row(mask | bit, i),
                forced_present: mask & bit != 0,
                prob,
            })
            .collect())
    }
}

fn draw_weighted(weights: &[f64], rng: &mut SimRng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (j, &w) in weights.iter().enumerate() {
        if u < w {
            return j;
        }
        u -= w;
    }
    weights.len() - 1
}

/// An arbitrary joint law on at most 24 indicators, given as a table of
/// `(mask, probability)` pairs. Bit `offset_i + j` of a mask is `X^i_j`.
///
/// The coupling keeps the base realization when `X^i_{I_i}` is already on
/// and otherwise draws a fresh realization from the law conditioned on it.
#[derive(Clone, Debug)]
pub struct TabulatedModel {
    layout: Layout,
    law: Vec<(u64, f64)>,
    marginals: Vec<Vec<f64>>,
}

impl TabulatedModel {
    pub fn new(block_sizes: Vec<usize>, law: Vec<(u64, f64)>) -> Result<Self> {
        let layout = Layout::new(block_sizes, 24)?;
        let limit = 1u64 << layout.total();
        let mut seen = std::collections::BTreeSet::new();
        let mut total = 0.0;
        for &(mask, p) in &law {
            if mask >= limit {
                return Err(Error::param(format!(
                    "mask {mask:#b} uses undeclared indicators"
                )));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::param(format!("invalid probability {p}")));
            }
            if !seen.insert(mask) {
                return Err(Error::param(format!("duplicate state {mask:#b}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("state probabilities sum to {total}")));
        }
        let marginals: Vec<Vec<f64>> = (0..layout.sizes.len())
            .map(|i| {
                (0..layout.sizes[i])
                    .map(|j| {
                        let bit = layout.bit(i, j);
                        law.iter().filter(|s| s.0 & bit != 0).map(|s| s.1).sum()
                    })
                    .collect()
            })
            .collect();
        for &p in marginals.iter().flatten() {
            check_probability(p)?;
        }
        Ok(TabulatedModel {
            layout,
            law,
            marginals,
        })
    }

    pub fn marginals(&self) -> &[Vec<f64>] {
        &self.marginals
    }

    fn conditioned(&self, bit: u64) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.law.iter().copied().filter(move |s| s.0 & bit != 0)
    }
}

impl IndicatorSumModel for TabulatedModel {
    type State = u64;
    type Index = usize;

    fn dim(&self) -> usize {
        self.layout.sizes.len()
    }

    fn block_size(&self, i: usize) -> u128 {
        self.layout.sizes[i] as u128
    }

    fn lambda(&self, i: usize) -> f64 {
        self.marginals[i].iter().sum()
    }

    fn probability(&self, i: usize, j: u128) -> f64 {
        self.marginals[i][j as usize]
    }

    fn sample_state(&self, rng: &mut SimRng) -> u64 {
        let weights: Vec<f64> = self.law.iter().map(|s| s.1).collect();
        self.law[draw_weighted(&weights, rng)].0
    }

    fn counts(&self, state: &u64) -> Vec<u64> {
        self.layout.counts(*state)
    }

    fn draw_index(&self, i: usize, rng: &mut SimRng) -> usize {
        draw_weighted(&self.marginals[i], rng)
    }

    fn indicator(&self, state: &u64, i: usize, idx: &usize) -> bool {
        state & self.layout.bit(i, *idx) != 0
    }

    fn coupled_row(
        &self,
        state: &u64,
        i: usize,
        idx: &usize,
        rng: &mut SimRng,
    ) -> Result<Vec<u64>> {
        let bit = self.layout.bit(i, *idx);
        if state & bit != 0 {
            return Ok(self.layout.row(*state, i));
        }
        let options: Vec<(u64, f64)> = self.conditioned(bit).collect();
        if options.iter().all(|s| s.1 == 0.0) {
            return Err(Error::Model(format!(
                "indicator {idx} of block {i} has probability 0"
            )));
        }
        let weights: Vec<f64> = options.iter().map(|s| s.1).collect();
        Ok(self.layout.row(options[draw_weighted(&weights, rng)].0, i))
    }
}

impl ExhaustiveModel for TabulatedModel {
    fn state_count(&self) -> u128 {
        self.law.len() as u128
    }

    fn joint_law(&self) -> Result<Vec<(u64, f64)>> {
        Ok(self.law.clone())
    }

    fn index_law(&self, i: usize) -> Result<Vec<(usize, f64)>> {
        let lambda = self.lambda(i);
        Ok(self.marginals[i]
            .iter()
            .enumerate()
            .map(|(j, &p)| (j, p / lambda))
            .collect())
    }

    fn coupled_outcomes(&self, i: usize, idx: &usize) -> Result<Vec<CoupledOutcome>> {
        let bit = self.layout.bit(i, *idx);
        let p_on = self.marginals[i][*idx];
        let mut out = Vec::new();
        for &(mask, prob) in &self.law {
            let w = self.layout.counts(mask);
            if mask & bit != 0 {
                out.push(CoupledOutcome {
                    w,
                    row: self.layout.row(mask, i),
                    forced_present: true,
                    prob,
                });
            } else {
                for (target, q) in self.conditioned(bit) {
                    out.push(CoupledOutcome {
                        w: w.clone(),
                        row: self.layout.row(target, i),
                        forced_present: false,
                        prob: prob * q / p_on,
                    });
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{construct_coupling, index_distribution, verify_size_biased_exact};
    use approx::assert_abs_diff_eq;

    #[test]
    fn index_laws() {
        let m = IndependentBernoulli::new(vec![vec![0.1, 0.3]]).unwrap();
        let law = index_distribution(&m, 0).unwrap();
        assert_abs_diff_eq!(law[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(law[1], 0.75, epsilon = 1e-15);
        let m = IndependentBernoulli::binomial(4, 0.2).unwrap();
        assert!(index_distribution(&m, 0)
            .unwrap()
            .iter()
            .all(|&q| (q - 0.25).abs() < 1e-15));
        let m = IndependentBernoulli::binomial(1, 0.2).unwrap();
        assert_eq!(index_distribution(&m, 0).unwrap(), vec![1.0]);
        assert!(index_distribution(&m, 1).is_err());
    }

    #[test]
    fn single_indicator_coupling_is_one() {
        let m = IndependentBernoulli::binomial(1, 0.3).unwrap();
        for seed in 0..50 {
            assert_eq!(construct_coupling(&m, seed).unwrap().w_tilde, vec![vec![1]]);
        }
        assert!(verify_size_biased_exact(&m).unwrap() < 1e-15);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(TabulatedModel::new(vec![1], vec![(0, 0.5), (1, 0.4)]).is_err());
        assert!(TabulatedModel::new(vec![1], vec![(0, 0.5), (2, 0.5)]).is_err());
        assert!(TabulatedModel::new(vec![1], vec![(1, 1.0)]).is_err());
        assert!(IndependentBernoulli::new(vec![vec![1.0]]).is_err());
        assert!(IndependentBernoulli::new(vec![vec![]]).is_err());
    }
}

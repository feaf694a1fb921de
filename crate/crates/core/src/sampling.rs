//! Alias-method discrete sampling.
//!
//! Training draws millions of pairs and negatives, so both distributions are
//! compiled once into alias tables: O(n) to build with Vose's two-worklist
//! construction, O(1) per draw (one uniform slot pick plus one Bernoulli).
//! The induced probability of every item can be recovered in closed form
//! from the table, which is what the correctness tests check — no sampling
//! required.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("alias table needs at least one positive weight")]
    NoMass,
    #[error("weights must be finite and nonnegative, got {0}")]
    BadWeight(f64),
    #[error("cannot draw negatives: item {0} is the only one with positive mass")]
    ExcludedOnlyItem(u32),
    #[error("negative draw exceeded {0} rejections")]
    RejectionLimit(u32),
}

/// O(1) sampler over a fixed discrete distribution.
#[derive(Debug, Clone)]
pub struct AliasTable {
    /// Per-slot probability of keeping the slot's own item.
    prob: Vec<f64>,
    /// Per-slot fallback item.
    alias: Vec<u32>,
    weight_total: f64,
}

impl AliasTable {
    /// Build a table from nonnegative weights (Vose's method). Zero-weight
    /// items are representable and are never sampled.
    pub fn new(weights: &[f64]) -> Result<Self, SamplingError> {
        for &w in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(SamplingError::BadWeight(w));
            }
        }
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || total <= 0.0 {
            return Err(SamplingError::NoMass);
        }

        let n = weights.len();
        let mut prob = vec![0.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        // Scaled weights: mean 1 across slots.
        let mut scaled: Vec<f64> = weights.iter().map(|&w| w * n as f64 / total).collect();

        let mut small: Vec<u32> = Vec::with_capacity(n);
        let mut large: Vec<u32> = Vec::with_capacity(n);
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i as u32);
            } else {
                large.push(i as u32);
            }
        }

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s as usize] = scaled[s as usize];
            alias[s as usize] = l;
            scaled[l as usize] = (scaled[l as usize] + scaled[s as usize]) - 1.0;
            if scaled[l as usize] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers on either list have scaled weight 1 up to rounding.
        for &i in large.iter().chain(small.iter()) {
            prob[i as usize] = 1.0;
            alias[i as usize] = i;
        }

        Ok(Self {
            prob,
            alias,
            weight_total: total,
        })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn weight_total(&self) -> f64 {
        self.weight_total
    }

    /// Draw one item: a uniform slot pick plus one Bernoulli trial.
    #[inline]
    pub fn draw(&self, rng: &mut impl Rng) -> u32 {
        let slot = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[slot] {
            slot as u32
        } else {
            self.alias[slot]
        }
    }

    /// Exact probability of drawing `item`, reconstructed from the table:
    /// own-slot acceptance plus alias mass routed in from other slots, all
    /// over the uniform slot pick.
    pub fn induced_probability(&self, item: u32) -> f64 {
        let mut mass = self.prob[item as usize];
        for (slot, &a) in self.alias.iter().enumerate() {
            if a == item && slot != item as usize {
                mass += 1.0 - self.prob[slot];
            }
        }
        mass / self.prob.len() as f64
    }
}

/// Power applied to occurrence mass for the negative-sampling distribution,
/// the standard smoothing of the skip-gram family.
pub const NEGATIVE_POWER: f64 = 0.75;

/// Rejections allowed per negative before giving up; with two or more
/// comparably weighted items the expected count is near one.
const MAX_REJECTIONS: u32 = 1000;

/// Sampler for negative items: unigram mass to the 3/4 power, with the
/// positive item excluded by rejection so every batch has exactly `k`
/// negatives.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    table: AliasTable,
    positive_mass_items: usize,
    sole_positive: Option<u32>,
}

impl NegativeSampler {
    /// Build from raw occurrence masses; each mass is raised to
    /// [`NEGATIVE_POWER`] before the table is compiled.
    pub fn from_masses(masses: &[f64]) -> Result<Self, SamplingError> {
        let weights: Vec<f64> = masses
            .iter()
            .map(|&m| {
                if m > 0.0 {
                    m.powf(NEGATIVE_POWER)
                } else {
                    0.0
                }
            })
            .collect();
        let positive_mass_items = weights.iter().filter(|&&w| w > 0.0).count();
        let sole_positive = if positive_mass_items == 1 {
            weights.iter().position(|&w| w > 0.0).map(|i| i as u32)
        } else {
            None
        };
        Ok(Self {
            table: AliasTable::new(&weights)?,
            positive_mass_items,
            sole_positive,
        })
    }

    pub fn items(&self) -> usize {
        self.table.len()
    }

    pub fn positive_mass_items(&self) -> usize {
        self.positive_mass_items
    }

    /// Draw `k` items, none equal to `exclude`; duplicates are allowed.
    pub fn draw_negatives(
        &self,
        exclude: u32,
        k: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<u32>, SamplingError> {
        let mut out = Vec::with_capacity(k);
        self.draw_negatives_into(exclude, k, rng, &mut out)?;
        Ok(out)
    }

    /// Allocation-free variant for the training loop.
    pub fn draw_negatives_into(
        &self,
        exclude: u32,
        k: usize,
        rng: &mut impl Rng,
        out: &mut Vec<u32>,
    ) -> Result<(), SamplingError> {
        if self.sole_positive == Some(exclude) {
            return Err(SamplingError::ExcludedOnlyItem(exclude));
        }
        out.clear();
        for _ in 0..k {
            let mut rejections = 0;
            loop {
                let item = self.table.draw(rng);
                if item != exclude {
                    out.push(item);
                    break;
                }
                rejections += 1;
                if rejections >= MAX_REJECTIONS {
                    return Err(SamplingError::RejectionLimit(MAX_REJECTIONS));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_two_items() {
        let t = AliasTable::new(&[1.0, 1.0]).unwrap();
        assert_eq!(t.induced_probability(0), 0.5);
        assert_eq!(t.induced_probability(1), 0.5);
    }

    #[test]
    fn three_to_one_split() {
        let t = AliasTable::new(&[3.0, 1.0]).unwrap();
        assert!((t.induced_probability(0) - 0.75).abs() < 1e-15);
        assert!((t.induced_probability(1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_item_never_sampled() {
        let t = AliasTable::new(&[0.0, 5.0]).unwrap();
        assert_eq!(t.induced_probability(0), 0.0);
        assert_eq!(t.induced_probability(1), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            assert_eq!(t.draw(&mut rng), 1);
        }
    }

    #[test]
    fn degenerate_weights_rejected() {
        assert!(matches!(AliasTable::new(&[]), Err(SamplingError::NoMass)));
        assert!(matches!(
            AliasTable::new(&[0.0, 0.0]),
            Err(SamplingError::NoMass)
        ));
        assert!(matches!(
            AliasTable::new(&[1.0, -2.0]),
            Err(SamplingError::BadWeight(_))
        ));
    }

    #[test]
    fn single_item_always_drawn() {
        let t = AliasTable::new(&[2.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(t.draw(&mut rng), 0);
        }
    }

    #[test]
    fn draws_replay_deterministically() {
        let t = AliasTable::new(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let seq = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| t.draw(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(seq(9), seq(9));
        assert_ne!(seq(9), seq(10));
    }

    #[test]
    fn negatives_forced_to_other_item() {
        let s = NegativeSampler::from_masses(&[1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let negs = s.draw_negatives(0, 5, &mut rng).unwrap();
        assert_eq!(negs, vec![1, 1, 1, 1, 1]);
    }

    #[test]
    fn excluding_unique_item_errors() {
        let s = NegativeSampler::from_masses(&[0.0, 4.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            s.draw_negatives(1, 3, &mut rng),
            Err(SamplingError::ExcludedOnlyItem(1))
        );
        // Excluding the zero-mass item is fine.
        assert_eq!(s.draw_negatives(0, 2, &mut rng), Ok(vec![1, 1]));
    }

    #[test]
    fn rejection_terminates_with_two_positive_items() {
        let s = NegativeSampler::from_masses(&[5.0, 1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for exclude in 0..2 {
            for _ in 0..200 {
                let negs = s.draw_negatives(exclude, 5, &mut rng).unwrap();
                assert_eq!(negs.len(), 5);
                assert!(negs.iter().all(|&x| x != exclude && x != 2));
            }
        }
    }

    proptest! {
        #[test]
        fn induced_probabilities_match_weights(
            weights in prop::collection::vec(0.0f64..100.0, 1..180),
        ) {
            let total: f64 = weights.iter().sum();
            prop_assume!(total > 1e-9);
            let t = AliasTable::new(&weights).unwrap();
            for (i, &w) in weights.iter().enumerate() {
                let induced = t.induced_probability(i as u32);
                prop_assert!(
                    (induced - w / total).abs() < 1e-12,
                    "item {} induced {} expected {}", i, induced, w / total
                );
            }
        }
    }
}

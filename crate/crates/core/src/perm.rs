//! Case/control label permutations and empirical P-values.
//!
//! Permutation `b` of a sampling plan is a pure function of `(seed, b)`:
//! a ChaCha8 generator is seeded with `seed` (via `SeedableRng::seed_from_u64`)
//! and switched to stream `b`, then drives a forward Fisher-Yates shuffle of
//! the sample indices `0..n`. Only the first `k` swap steps are executed,
//! where `k` is the size of the smaller class; the first `k` shuffled indices
//! form that class. Bounded draws use Lemire's multiply-and-reject method on
//! raw 64-bit outputs, so the mapping does not depend on `rand` internals.
//!
//! An exhaustive plan instead enumerates every distinct relabeling except the
//! observed one, which makes add-one P-values equal to exact permutation
//! P-values.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::data::{PhenotypeVector, Status};
use crate::error::{Error, Result};

/// Relative tolerance under which two statistics count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Largest number of relabelings an exhaustive plan will enumerate.
pub const MAX_EXHAUSTIVE: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Source {
    Sampled,
    /// Lexicographic rank of the observed case set, skipped in enumeration.
    Exhaustive { observed_rank: u128 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationPlan {
    pub seed: u64,
    pub n_permutations: usize,
    pub n_case: usize,
    pub n_control: usize,
    source: Source,
}

/// Which class the selected indices of a permutation belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selected {
    Cases,
    Controls,
}

impl PermutationPlan {
    pub fn new(seed: u64, n_permutations: usize, n_case: usize, n_control: usize) -> Result<Self> {
        if n_permutations == 0 {
            return Err(Error::InvalidConfig("number of permutations must be at least 1".into()));
        }
        if n_case == 0 {
            return Err(Error::NoCases);
        }
        if n_control == 0 {
            return Err(Error::NoControls);
        }
        Ok(PermutationPlan {
            seed,
            n_permutations,
            n_case,
            n_control,
            source: Source::Sampled,
        })
    }

    pub fn for_phenotype(seed: u64, n_permutations: usize, phenotype: &PhenotypeVector) -> Result<Self> {
        let (cases, controls) = phenotype.require_both_classes()?;
        Self::new(seed, n_permutations, cases, controls)
    }

    /// Every distinct relabeling of `phenotype` other than the observed one.
    pub fn exhaustive(phenotype: &PhenotypeVector) -> Result<Self> {
        let (cases, controls) = phenotype.require_both_classes()?;
        let n = cases + controls;
        let total = binomial(n, cases.min(controls));
        if total > MAX_EXHAUSTIVE {
            return Err(Error::InvalidConfig(format!(
                "{total} relabelings exceed the exhaustive limit {MAX_EXHAUSTIVE}"
            )));
        }
        if total < 2 {
            return Err(Error::InvalidConfig("only one distinct relabeling exists".into()));
        }
        let selected = selected_class(cases, controls);
        let observed: Vec<usize> = (0..n)
            .filter(|&i| {
                let is_case = phenotype.labels()[i].is_case();
                is_case == (selected == Selected::Cases)
            })
            .collect();
        Ok(PermutationPlan {
            seed: 0,
            n_permutations: (total - 1) as usize,
            n_case: cases,
            n_control: controls,
            source: Source::Exhaustive {
                observed_rank: rank_combination(&observed, n),
            },
        })
    }

    pub fn is_exhaustive(&self) -> bool {
        matches!(self.source, Source::Exhaustive { .. })
    }

    pub fn n_samples(&self) -> usize {
        self.n_case + self.n_control
    }

    /// The class whose indices `selected_indices` returns.
    pub fn selected_class(&self) -> Selected {
        selected_class(self.n_case, self.n_control)
    }

    fn n_selected(&self) -> usize {
        self.n_case.min(self.n_control)
    }

    /// Writes the sample indices of the selected class under permutation `b`
    /// into `out` (cleared first). `scratch` is reused between calls.
    pub fn selected_indices(&self, b: usize, scratch: &mut Vec<usize>, out: &mut Vec<usize>) {
        let n = self.n_samples();
        let k = self.n_selected();
        out.clear();
        match &self.source {
            Source::Sampled => {
                scratch.clear();
                scratch.extend(0..n);
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(b as u64);
                for i in 0..k {
                    let j = i + bounded(&mut rng, (n - i) as u64) as usize;
                    scratch.swap(i, j);
                }
                out.extend_from_slice(&scratch[..k]);
            }
            Source::Exhaustive { observed_rank } => {
                let r = b as u128;
                let rank = if r >= *observed_rank { r + 1 } else { r };
                unrank_combination(rank, n, k, out);
            }
        }
    }

    /// Label assignment of permutation `b`.
    pub fn assignment(&self, b: usize) -> PhenotypeVector {
        let mut scratch = Vec::new();
        let mut sel = Vec::new();
        self.selected_indices(b, &mut scratch, &mut sel);
        let (hit, miss) = match self.selected_class() {
            Selected::Cases => (Status::Case, Status::Control),
            Selected::Controls => (Status::Control, Status::Case),
        };
        let mut labels = vec![miss; self.n_samples()];
        for i in sel {
            labels[i] = hit;
        }
        PhenotypeVector::new(labels)
    }

    /// All `n_permutations` assignments in order.
    pub fn stream(&self) -> impl Iterator<Item = PhenotypeVector> + '_ {
        (0..self.n_permutations).map(move |b| self.assignment(b))
    }
}

fn selected_class(n_case: usize, n_control: usize) -> Selected {
    if n_case <= n_control {
        Selected::Cases
    } else {
        Selected::Controls
    }
}

/// Uniform integer in `[0, range)`.
fn bounded(rng: &mut ChaCha8Rng, range: u64) -> u64 {
    debug_assert!(range > 0);
    let threshold = range.wrapping_neg() % range;
    loop {
        let m = rng.next_u64() as u128 * range as u128;
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Lexicographic rank of a sorted k-subset of `0..n`.
fn rank_combination(subset: &[usize], n: usize) -> u128 {
    let k = subset.len();
    let mut rank = 0u128;
    let mut prev = 0usize;
    for (pos, &c) in subset.iter().enumerate() {
        for skipped in prev..c {
            rank += binomial(n - skipped - 1, k - pos - 1);
        }
        prev = c + 1;
    }
    rank
}

fn unrank_combination(mut rank: u128, n: usize, k: usize, out: &mut Vec<usize>) {
    let mut next = 0usize;
    for pos in 0..k {
        loop {
            let block = binomial(n - next - 1, k - pos - 1);
            if rank < block {
                break;
            }
            rank -= block;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    Upper,
    TwoSidedAbs,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalP {
    pub p: f64,
    pub n_as_extreme: usize,
    pub n_permutations: usize,
}

/// `null >= observed`, treating values within [`TIE_TOLERANCE`] as tied.
#[inline]
pub fn at_least(null: f64, observed: f64) -> bool {
    null >= observed - TIE_TOLERANCE * observed.abs().max(null.abs())
}

/// Add-one permutation estimate `(1 + #as extreme) / (1 + B)`.
pub fn empirical_p(observed: f64, null: &[f64], tail: Tail) -> EmpiricalP {
    let n_as_extreme = match tail {
        Tail::Upper => null.iter().filter(|&&x| at_least(x, observed)).count(),
        Tail::TwoSidedAbs => {
            let obs = observed.abs();
            null.iter().filter(|&&x| at_least(x.abs(), obs)).count()
        }
    };
    EmpiricalP {
        p: (1 + n_as_extreme) as f64 / (1 + null.len()) as f64,
        n_as_extreme,
        n_permutations: null.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn preserves_case_count() {
        let plan = PermutationPlan::new(7, 200, 13, 29).unwrap();
        for p in plan.stream() {
            assert_eq!(p.n_cases(), 13);
            assert_eq!(p.len(), 42);
        }
        let plan = PermutationPlan::new(7, 50, 30, 4).unwrap();
        assert!(plan.stream().all(|p| p.n_cases() == 30));
    }

    #[test]
    fn deterministic_and_order_free() {
        let plan = PermutationPlan::new(42, 64, 5, 9).unwrap();
        let a: Vec<_> = plan.stream().collect();
        let b: Vec<_> = plan.stream().collect();
        assert_eq!(a, b);
        // Out-of-order generation gives the same assignments.
        for idx in (0..64).rev() {
            assert_eq!(plan.assignment(idx), a[idx]);
        }
        let other = PermutationPlan::new(43, 64, 5, 9).unwrap();
        assert_ne!(other.stream().collect::<Vec<_>>(), a);
    }

    #[test]
    fn one_case_of_three_is_uniform() {
        let b = 30_000;
        let plan = PermutationPlan::new(1, b, 1, 2).unwrap();
        let mut freq: HashMap<usize, usize> = HashMap::new();
        for p in plan.stream() {
            let case = p.labels().iter().position(|s| s.is_case()).unwrap();
            *freq.entry(case).or_default() += 1;
        }
        assert_eq!(freq.len(), 3);
        let sd = (b as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for &count in freq.values() {
            assert!((count as f64 - b as f64 / 3.0).abs() <= 3.0 * sd, "{freq:?}");
        }
    }

    #[test]
    fn exhaustive_skips_observed_and_covers_rest() {
        let observed = PhenotypeVector::from_case_flags(&[false, true, false, true, false]);
        let plan = PermutationPlan::exhaustive(&observed).unwrap();
        assert_eq!(plan.n_permutations, 9);
        let all: Vec<_> = plan.stream().collect();
        let mut uniq = all.clone();
        uniq.dedup();
        assert_eq!(uniq.len(), 9);
        assert!(!all.contains(&observed));
        assert!(all.iter().all(|p| p.n_cases() == 2));
    }

    #[test]
    fn combination_rank_roundtrip() {
        let (n, k) = (8, 3);
        for r in 0..binomial(n, k) {
            let mut c = Vec::new();
            unrank_combination(r, n, k, &mut c);
            assert_eq!(rank_combination(&c, n), r);
        }
    }

    #[test]
    fn add_one_floor() {
        let null: Vec<f64> = (0..999).map(|i| i as f64 / 1000.0).collect();
        let p = empirical_p(5.0, &null, Tail::Upper);
        assert_eq!(p.p, 1.0 / 1000.0);
        assert_eq!(p.n_as_extreme, 0);
    }

    #[test]
    fn zero_observation_two_sided() {
        let null = [-1.0, 1.0, -0.5, 0.5];
        assert_eq!(empirical_p(0.0, &null, Tail::TwoSidedAbs).p, 1.0);
    }

    #[test]
    fn exhaustive_matches_enumeration_tiny() {
        // 4 samples, 2 cases: statistic = sum of case values.
        let values = [0.3, 1.7, 2.2, 0.9];
        let observed = PhenotypeVector::from_case_flags(&[true, false, true, false]);
        let stat = |p: &PhenotypeVector| -> f64 {
            p.labels().iter().zip(values).filter(|(s, _)| s.is_case()).map(|(_, v)| v).sum()
        };
        let plan = PermutationPlan::exhaustive(&observed).unwrap();
        let null: Vec<f64> = plan.stream().map(|p| stat(&p)).collect();
        let engine = empirical_p(stat(&observed), &null, Tail::Upper).p;

        // All C(4,2) = 6 case pairs.
        let obs = values[0] + values[2];
        let mut ge = 0;
        for a in 0..4 {
            for b in (a + 1)..4 {
                if values[a] + values[b] >= obs - 1e-12 {
                    ge += 1;
                }
            }
        }
        assert_eq!(engine, ge as f64 / 6.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn p_in_unit_interval_and_monotone(null in prop::collection::vec(-5.0f64..5.0, 1..50), a in -6.0f64..6.0, d in 0.0f64..3.0) {
                let lo = empirical_p(a, &null, Tail::Upper);
                let hi = empirical_p(a + d, &null, Tail::Upper);
                prop_assert!(lo.p > 0.0 && lo.p <= 1.0);
                prop_assert!(hi.p <= lo.p);
            }
        }
    }
}

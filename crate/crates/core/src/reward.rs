//! Hypothesis-change reward.
//!
//! Two consecutive hypotheses are compared through their prediction vectors
//! over the pool: the cosine of the angle between the vectors is mapped to
//! `r = 2·arccos(d)/π`, capped at 1. Identical predictions earn 0,
//! orthogonal ones earn 1.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data_pool::Dataset;
use crate::error::{Error, Result};
use crate::model::{predict_scores, Hypothesis, PredictionVector};

/// Vectors with a norm below this are treated as degenerate.
pub const MIN_NORM: f64 = 1e-12;

/// How far outside `[-1, 1]` an alignment may stray before it is an error.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alignment {
    Cosine(f64),
    /// One of the vectors had (near) zero norm.
    Degenerate,
}

pub fn cosine_alignment(a: &PredictionVector, b: &PredictionVector) -> Result<Alignment> {
    if a.layout != b.layout {
        return Err(Error::IncompatibleVectors(format!(
            "layouts {:?} and {:?} differ",
            a.layout, b.layout
        )));
    }
    if a.values.len() != b.values.len() || a.over_ids != b.over_ids {
        return Err(Error::IncompatibleVectors(format!(
            "lengths {} and {} over {} and {} ids",
            a.values.len(),
            b.values.len(),
            a.over_ids.len(),
            b.over_ids.len()
        )));
    }
    Ok(cosine_of(&a.values, &b.values))
}

pub(crate) fn cosine_of(a: &[f64], b: &[f64]) -> Alignment {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na.sqrt() < MIN_NORM || nb.sqrt() < MIN_NORM {
        return Alignment::Degenerate;
    }
    // exactly 1 for identical vectors
    let mut denom = (na * nb).sqrt();
    if !denom.is_finite() || denom == 0.0 {
        denom = na.sqrt() * nb.sqrt();
    }
    Alignment::Cosine((dot / denom).clamp(-1.0, 1.0))
}

/// Maps an alignment to a reward in `[0, 1]`. A degenerate alignment earns 0.
pub fn hypothesis_change_reward(d: Alignment) -> Result<f64> {
    match d {
        Alignment::Degenerate => Ok(0.0),
        Alignment::Cosine(d) => {
            if !(-1.0 - CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&d) {
                return Err(Error::Domain(d));
            }
            let d = d.clamp(-1.0, 1.0);
            Ok((2.0 * d.acos() / PI).min(1.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSample {
    pub iteration: usize,
    pub d_value: f64,
    pub r_value: f64,
    pub degenerate: bool,
}

impl RewardSample {
    pub fn from_alignment(iteration: usize, d: Alignment) -> Result<Self> {
        let r_value = hypothesis_change_reward(d)?;
        Ok(match d {
            Alignment::Cosine(d_value) => RewardSample {
                iteration,
                d_value,
                r_value,
                degenerate: false,
            },
            Alignment::Degenerate => RewardSample {
                iteration,
                d_value: 1.0,
                r_value,
                degenerate: true,
            },
        })
    }
}

/// Which examples the prediction vectors range over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RewardPopulation {
    /// Every pool example, labeled or not.
    #[default]
    Pool,
    /// Only the examples still unlabeled after the query.
    Unlabeled,
}

/// Reward for replacing `h_prev` with `h_next`, measured over `ids`.
pub fn reward_for_step(
    h_prev: &Hypothesis,
    h_next: &Hypothesis,
    dataset: &Dataset,
    ids: &[usize],
    iteration: usize,
) -> Result<RewardSample> {
    if ids.is_empty() {
        return Err(Error::Validation("reward population is empty".into()));
    }
    let before = predict_scores(h_prev, dataset, ids)?;
    let after = predict_scores(h_next, dataset, ids)?;
    RewardSample::from_alignment(iteration, cosine_alignment(&before, &after)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Layout;
    use proptest::prelude::*;

    fn pv(values: Vec<f64>) -> PredictionVector {
        let over_ids = (0..values.len()).collect();
        PredictionVector {
            values,
            layout: Layout::BinaryScore,
            over_ids,
        }
    }

    fn cos(a: Vec<f64>, b: Vec<f64>) -> f64 {
        match cosine_alignment(&pv(a), &pv(b)).unwrap() {
            Alignment::Cosine(d) => d,
            Alignment::Degenerate => panic!("degenerate"),
        }
    }

    #[test]
    fn alignment_examples() {
        assert!((cos(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]) - 1.0).abs() < 1e-9);
        assert_eq!(cos(vec![1.0, 0.0], vec![0.0, 1.0]), 0.0);
        assert!((cos(vec![1.0, 0.0], vec![1.0, 1.0]) - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn reward_examples() {
        let r = |d| hypothesis_change_reward(Alignment::Cosine(d)).unwrap();
        assert_eq!(r(1.0), 0.0);
        assert!((r(0.0) - 1.0).abs() < 1e-9);
        assert!((r(0.5f64.sqrt()) - 0.5).abs() < 1e-9);
        assert_eq!(r(-1.0), 1.0);
        assert_eq!(r(1.0 + 5e-10), 0.0);
        assert!(matches!(
            hypothesis_change_reward(Alignment::Cosine(1.1)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            hypothesis_change_reward(Alignment::Cosine(f64::NAN)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let d = cosine_alignment(&pv(vec![0.0, 0.0]), &pv(vec![1.0, 2.0])).unwrap();
        assert_eq!(d, Alignment::Degenerate);
        let s = RewardSample::from_alignment(3, d).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.r_value, 0.0);
    }

    #[test]
    fn incompatible_vectors() {
        let mut b = pv(vec![1.0, 2.0]);
        b.layout = Layout::FlattenedProbabilities;
        assert!(matches!(
            cosine_alignment(&pv(vec![1.0, 2.0]), &b),
            Err(Error::IncompatibleVectors(_))
        ));
        assert!(matches!(
            cosine_alignment(&pv(vec![1.0, 2.0]), &pv(vec![1.0])),
            Err(Error::IncompatibleVectors(_))
        ));
    }

    #[test]
    fn monotone_in_alignment() {
        let mut prev = f64::INFINITY;
        for i in 0..=2000 {
            let d = -1.0 + i as f64 / 1000.0;
            let r = hypothesis_change_reward(Alignment::Cosine(d)).unwrap();
            assert!(r <= prev);
            if d > 0.0 {
                assert!(r < prev);
            }
            prev = r;
        }
    }

    proptest! {
        #[test]
        fn alignment_properties(
            a in prop::collection::vec(-100.0f64..100.0, 1..20),
            seed_b in prop::collection::vec(-100.0f64..100.0, 20),
            alpha in 1e-3f64..1e3,
            beta in 1e-3f64..1e3,
        ) {
            let b: Vec<f64> = seed_b[..a.len()].to_vec();
            let base = cosine_alignment(&pv(a.clone()), &pv(b.clone())).unwrap();
            let swapped = cosine_alignment(&pv(b.clone()), &pv(a.clone())).unwrap();
            prop_assert_eq!(base, swapped);
            let scaled = cosine_alignment(
                &pv(a.iter().map(|v| v * alpha).collect()),
                &pv(b.iter().map(|v| v * beta).collect()),
            ).unwrap();
            if let (Alignment::Cosine(x), Alignment::Cosine(y)) = (base, scaled) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            let r = hypothesis_change_reward(base).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn near_opposite_vectors_stay_in_range(
            a in prop::collection::vec(-1e6f64..1e6, 1..50),
            noise in prop::collection::vec(-1e-9f64..1e-9, 50),
        ) {
            let b: Vec<f64> = a.iter().zip(&noise).map(|(x, e)| -x + e).collect();
            let r = hypothesis_change_reward(cosine_alignment(&pv(a), &pv(b)).unwrap()).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}

//! Stratified transductive splits: a fixed number of labeled training
//! nodes per class, the remainder divided into validation and test.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub seed: u64,
}

/// Draw a stratified split: exactly `per_class` training nodes from each
/// class, then `val_frac` of the remaining nodes for validation and the
/// rest for test (validation size rounded down). Deterministic per seed;
/// the index lists come back sorted.
pub fn make_split(labels: &[usize], per_class: usize, val_frac: f64, seed: u64) -> Result<Split> {
    if labels.is_empty() {
        return Err(HarnessError::InvalidParams("no labels".into()));
    }
    if per_class == 0 {
        return Err(HarnessError::InvalidParams("per_class must be ≥ 1".into()));
    }
    if !(0.0..=1.0).contains(&val_frac) {
        return Err(HarnessError::InvalidParams(format!(
            "val_frac must be in [0, 1], got {val_frac}"
        )));
    }
    let num_classes = labels.iter().copied().max().unwrap() + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < per_class {
            return Err(HarnessError::ClassTooSmall {
                class,
                size: members.len(),
                needed: per_class,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(per_class * num_classes);
    let mut rest = Vec::new();
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..per_class]);
        rest.extend_from_slice(&members[per_class..]);
    }
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    let n_val = (rest.len() as f64 * val_frac).floor() as usize;
    let mut val = rest[..n_val].to_vec();
    let mut test = rest[n_val..].to_vec();

    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train_idx: train,
        val_idx: val,
        test_idx: test,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn labels_3x50() -> Vec<usize> {
        (0..150).map(|i| i / 50).collect()
    }

    #[test]
    fn sizes_match_the_protocol() {
        // 3 classes × 50 nodes, 10 per class for training:
        // 120 remain, floor(120·0.35) = 42 validation, 78 test.
        let split = make_split(&labels_3x50(), 10, 0.35, 0).unwrap();
        assert_eq!(split.train_idx.len(), 30);
        assert_eq!(split.val_idx.len(), 42);
        assert_eq!(split.test_idx.len(), 78);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let labels = labels_3x50();
        let a = make_split(&labels, 10, 0.35, 5).unwrap();
        let b = make_split(&labels, 10, 0.35, 5).unwrap();
        assert_eq!(a, b);
        let c = make_split(&labels, 10, 0.35, 6).unwrap();
        assert_ne!(a.train_idx, c.train_idx);
    }

    #[test]
    fn disjoint_and_exactly_stratified() {
        let labels = labels_3x50();
        let split = make_split(&labels, 10, 0.35, 3).unwrap();
        let train: HashSet<_> = split.train_idx.iter().collect();
        let val: HashSet<_> = split.val_idx.iter().collect();
        let test: HashSet<_> = split.test_idx.iter().collect();
        assert!(train.is_disjoint(&val));
        assert!(train.is_disjoint(&test));
        assert!(val.is_disjoint(&test));
        assert_eq!(train.len() + val.len() + test.len(), 150);
        for class in 0..3 {
            let count = split
                .train_idx
                .iter()
                .filter(|&&i| labels[i] == class)
                .count();
            assert_eq!(count, 10, "class {class}");
        }
    }

    #[test]
    fn small_class_is_rejected() {
        let mut labels = labels_3x50();
        labels.truncate(105); // class 2 has only 5 members
        let err = make_split(&labels, 10, 0.35, 0).unwrap_err();
        assert!(matches!(
            err,
            HarnessError::ClassTooSmall {
                class: 2,
                size: 5,
                needed: 10
            }
        ));
    }
}
